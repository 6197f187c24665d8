use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::filter::{design_butterworth_bandpass, design_notch, filtfilt};
use crate::data::EpochedDataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub sample: usize,
    pub code: u32,
}

/// Event code → class index.
pub type EventMap = BTreeMap<u32, usize>;

/// Channels × time samples with event markers.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousRecording {
    pub samples: Vec<Vec<f64>>,
    pub fs: f64,
    pub channel_names: Vec<String>,
    pub events: Vec<Event>,
}

impl ContinuousRecording {
    pub fn new(
        samples: Vec<Vec<f64>>,
        fs: f64,
        channel_names: Vec<String>,
        events: Vec<Event>,
    ) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::invalid("fs", format!("must be positive, got {fs}")));
        }
        if samples.is_empty() || samples.len() != channel_names.len() {
            return Err(Error::Shape(format!(
                "{} channel rows for {} channel names",
                samples.len(),
                channel_names.len()
            )));
        }
        let n = samples[0].len();
        if let Some((c, row)) = samples.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::Shape(format!(
                "channel {} has {} samples, expected {n}",
                channel_names[c],
                row.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = channel_names.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::Data(format!("duplicate channel name {dup}")));
        }
        if let Some(e) = events.iter().find(|e| e.sample >= n) {
            return Err(Error::Data(format!(
                "event code {} at sample {} beyond recording of {n} samples",
                e.code, e.sample
            )));
        }
        Ok(ContinuousRecording {
            samples,
            fs,
            channel_names,
            events,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.samples.len()
    }

    pub fn n_samples(&self) -> usize {
        self.samples[0].len()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.fs
    }

    /// Applies `f` to every channel in parallel.
    pub fn map_channels<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    {
        let samples = self
            .samples
            .par_iter()
            .map(|row| f(row))
            .collect::<Result<Vec<_>>>()?;
        Ok(ContinuousRecording {
            samples,
            ..self.clone_meta()
        })
    }

    fn clone_meta(&self) -> Self {
        ContinuousRecording {
            samples: Vec::new(),
            fs: self.fs,
            channel_names: self.channel_names.clone(),
            events: self.events.clone(),
        }
    }

    /// Keeps every `factor`-th sample; event positions are divided by `factor`.
    pub fn decimate(&self, factor: usize) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|row| decimate(row, self.fs, factor))
            .collect::<Result<Vec<_>>>()?;
        Ok(ContinuousRecording {
            samples,
            fs: self.fs / factor as f64,
            channel_names: self.channel_names.clone(),
            events: self
                .events
                .iter()
                .map(|e| Event {
                    sample: e.sample / factor,
                    code: e.code,
                })
                .collect(),
        })
    }
}

/// Every `factor`-th sample starting at index 0. No anti-alias stage: the
/// caller must have band-limited the signal below `fs_in / (2·factor)`.
pub fn decimate(signal: &[f64], fs_in: f64, factor: usize) -> Result<Vec<f64>> {
    if factor < 1 {
        return Err(Error::invalid("factor", "must be at least 1"));
    }
    if !(fs_in > 0.0) {
        return Err(Error::invalid("fs_in", format!("must be positive, got {fs_in}")));
    }
    Ok(signal.iter().step_by(factor).copied().collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochExtraction {
    pub dataset: EpochedDataset,
    /// Matching events whose window did not fit inside the recording.
    pub rejected: usize,
}

/// One epoch per event whose code appears in `codes`, covering
/// `[sample + offset, sample + offset + length)`, with each channel's mean
/// removed. Trial ids are the event's position in `rec.events`.
pub fn extract_epochs(
    rec: &ContinuousRecording,
    window: (f64, f64),
    codes: &EventMap,
    class_names: &[String],
    subject_id: u32,
) -> Result<EpochExtraction> {
    let (offset_s, length_s) = window;
    let len = (length_s * rec.fs).round();
    if !(len >= 1.0) {
        return Err(Error::invalid("window", format!("length {length_s} s is shorter than one sample")));
    }
    let len = len as usize;
    let offset = (offset_s * rec.fs).round() as i64;
    if let Some((code, &class)) = codes.iter().find(|(_, &c)| c >= class_names.len()) {
        return Err(Error::invalid(
            "codes",
            format!("event code {code} maps to class {class}, only {} classes", class_names.len()),
        ));
    }
    let mut ds = EpochedDataset::empty(rec.fs, rec.channel_names.clone(), class_names.to_vec(), len)?;
    let n = rec.n_samples() as i64;
    let mut rejected = 0;
    let mut buf = Vec::with_capacity(rec.n_channels() * len);
    for (ordinal, ev) in rec.events.iter().enumerate() {
        let Some(&class) = codes.get(&ev.code) else {
            continue;
        };
        let start = ev.sample as i64 + offset;
        if start < 0 || start + len as i64 > n {
            rejected += 1;
            continue;
        }
        let start = start as usize;
        buf.clear();
        for row in &rec.samples {
            let seg = &row[start..start + len];
            let mean = seg.iter().sum::<f64>() / len as f64;
            buf.extend(seg.iter().map(|v| (v - mean) as f32));
        }
        ds.push(&buf, class, ordinal as u64, subject_id)?;
    }
    if rejected > 0 {
        log::warn!("{rejected} event window(s) exceed the recording and were rejected");
    }
    Ok(EpochExtraction {
        dataset: ds,
        rejected,
    })
}

/// Stage names in the order [`preprocess`] applies them.
pub const PREPROCESS_ORDER: [&str; 4] = ["bandpass", "notch", "decimate", "epoch"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub band: (f64, f64),
    pub band_order: usize,
    pub notch_hz: f64,
    pub notch_q: f64,
    pub decimation: usize,
    /// (offset, length) in seconds relative to each event.
    pub window: (f64, f64),
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            band: (1.0, 60.0),
            band_order: 4,
            notch_hz: 60.0,
            notch_q: 30.0,
            decimation: 4,
            window: (0.0, 3.0),
        }
    }
}

/// Band-pass → notch → decimate → epoch.
pub fn preprocess(
    rec: &ContinuousRecording,
    cfg: &PreprocessConfig,
    codes: &EventMap,
    class_names: &[String],
    subject_id: u32,
) -> Result<EpochExtraction> {
    let bp = design_butterworth_bandpass(cfg.band.0, cfg.band.1, rec.fs, cfg.band_order)?;
    let notch = design_notch(cfg.notch_hz, cfg.notch_q, rec.fs)?;
    let filtered = rec.map_channels(|row| filtfilt(&notch, &filtfilt(&bp, row)?))?;
    let low = filtered.decimate(cfg.decimation)?;
    extract_epochs(&low, cfg.window, codes, class_names, subject_id)
}
