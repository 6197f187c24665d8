use std::path::Path;

use super::filter::{design_butterworth_bandpass, filtfilt};
use crate::data::EpochedDataset;
use crate::error::{Error, Result};
use crate::util::write_atomic;

/// Mean squared amplitude per channel after an order-4 zero-phase band-pass.
pub fn bandpower<R: AsRef<[f64]>>(epoch: &[R], fs: f64, band: (f64, f64)) -> Result<Vec<f64>> {
    let filter = design_butterworth_bandpass(band.0, band.1, fs, 4)?;
    epoch
        .iter()
        .map(|row| {
            let y = filtfilt(&filter, row.as_ref())?;
            Ok(y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64)
        })
        .collect()
}

/// Class-average band power, indexed `[class][channel]`. Classes without
/// epochs get `NaN`.
pub fn class_bandpower(ds: &EpochedDataset, band: (f64, f64)) -> Result<Vec<Vec<f64>>> {
    let mut sums = vec![vec![0.0; ds.n_channels()]; ds.n_classes()];
    let mut counts = vec![0usize; ds.n_classes()];
    for i in 0..ds.len() {
        let p = bandpower(&ds.epoch_rows(i), ds.fs(), band)?;
        let k = ds.labels()[i];
        counts[k] += 1;
        for (s, v) in sums[k].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (row, &n) in sums.iter_mut().zip(&counts) {
        for v in row.iter_mut() {
            *v /= n as f64;
        }
    }
    Ok(sums)
}

/// `channel,power` rows, one per channel.
pub fn write_bandpower_csv(path: &Path, channel_names: &[String], power: &[f64]) -> Result<()> {
    if channel_names.len() != power.len() {
        return Err(Error::Shape(format!(
            "{} channel names for {} power values",
            channel_names.len(),
            power.len()
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["channel", "power"])?;
    for (name, p) in channel_names.iter().zip(power) {
        w.write_record([name.as_str(), &p.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}
