use super::EpochedDataset;
use crate::dsp::ContinuousRecording;
use crate::error::{Error, Result};

/// Channel subsetting in the requested order.
pub trait SelectChannels: Sized {
    fn select_channels<S: AsRef<str>>(&self, names: &[S]) -> Result<Self>;
}

fn resolve<S: AsRef<str>>(available: &[String], names: &[S]) -> Result<Vec<usize>> {
    let mut missing = Vec::new();
    let idx: Vec<usize> = names
        .iter()
        .filter_map(|n| {
            let pos = available.iter().position(|a| a == n.as_ref());
            if pos.is_none() {
                missing.push(n.as_ref().to_string());
            }
            pos
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingChannels(missing));
    }
    if idx.is_empty() {
        return Err(Error::invalid("names", "no channels requested"));
    }
    Ok(idx)
}

impl SelectChannels for EpochedDataset {
    fn select_channels<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let idx = resolve(self.channel_names(), names)?;
        let mut out = EpochedDataset::empty(
            self.fs(),
            idx.iter().map(|&i| self.channel_names()[i].clone()).collect(),
            self.class_names().to_vec(),
            self.epoch_len(),
        )?;
        let t = self.epoch_len();
        let mut buf = Vec::with_capacity(idx.len() * t);
        for e in 0..self.len() {
            buf.clear();
            let epoch = self.epoch(e);
            for &c in &idx {
                buf.extend_from_slice(&epoch[c * t..(c + 1) * t]);
            }
            out.push(&buf, self.labels()[e], self.trial_ids()[e], self.subject_ids()[e])?;
        }
        Ok(out)
    }
}

impl SelectChannels for ContinuousRecording {
    fn select_channels<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let idx = resolve(&self.channel_names, names)?;
        ContinuousRecording::new(
            idx.iter().map(|&i| self.samples[i].clone()).collect(),
            self.fs,
            idx.iter().map(|&i| self.channel_names[i].clone()).collect(),
            self.events.clone(),
        )
    }
}
