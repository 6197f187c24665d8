//! Epoched datasets, the on-disk container, CSV import and channel selection.

mod container;
mod csv_import;
mod select;

pub use container::{read_dataset, write_dataset, DatasetManifest, EpochEntry, DATA_FILE, MANIFEST_FILE};
pub use csv_import::{import_csv, CsvImport, INDEX_FILE};
pub use select::SelectChannels;

use crate::error::{Error, Result};
use crate::nn::{Scalar, Tensor};

/// The 24-channel sensorimotor evaluation montage.
pub const MONTAGE_24: [&str; 24] = [
    "F3", "F1", "Fz", "F2", "F4", "FC3", "FC1", "FC2", "FC4", "C3", "C1", "Cz", "C2", "C4", "CP3",
    "CP1", "CPz", "CP2", "CP4", "P3", "P1", "Pz", "P2", "P4",
];

/// Class names in label order.
pub const CLASS_NAMES: [&str; 4] = ["rest", "elbow_extension", "grasp", "twist"];

/// Ordered channel names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelMontage {
    pub names: Vec<String>,
}

impl ChannelMontage {
    pub fn standard_24() -> Self {
        ChannelMontage {
            names: MONTAGE_24.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn contains_all(&self, names: &[String]) -> bool {
        self.names.iter().all(|m| names.contains(m))
    }
}

/// Labeled fixed-length multichannel epochs, stored epoch-major, then
/// channel-major, then time.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochedDataset {
    fs: f64,
    channel_names: Vec<String>,
    class_names: Vec<String>,
    epoch_len: usize,
    data: Vec<f32>,
    labels: Vec<usize>,
    trial_ids: Vec<u64>,
    subject_ids: Vec<u32>,
}

impl EpochedDataset {
    /// Empty dataset with a fixed layout.
    pub fn empty(
        fs: f64,
        channel_names: Vec<String>,
        class_names: Vec<String>,
        epoch_len: usize,
    ) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::invalid("fs", format!("must be positive, got {fs}")));
        }
        if channel_names.is_empty() || epoch_len == 0 {
            return Err(Error::Shape(format!(
                "dataset needs ≥ 1 channel and positive epoch length (got {} channels, length {epoch_len})",
                channel_names.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = channel_names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::Data(format!("duplicate channel name {dup}")));
        }
        if class_names.is_empty() {
            return Err(Error::Data("dataset needs at least one class name".into()));
        }
        Ok(EpochedDataset {
            fs,
            channel_names,
            class_names,
            epoch_len,
            data: Vec::new(),
            labels: Vec::new(),
            trial_ids: Vec::new(),
            subject_ids: Vec::new(),
        })
    }

    pub fn push(&mut self, epoch: &[f32], label: usize, trial_id: u64, subject_id: u32) -> Result<()> {
        if epoch.len() != self.epoch_size() {
            return Err(Error::Shape(format!(
                "epoch has {} samples, expected {} channels × {}",
                epoch.len(),
                self.n_channels(),
                self.epoch_len
            )));
        }
        if label >= self.class_names.len() {
            return Err(Error::invalid(
                "label",
                format!("{label} out of range for {} classes", self.class_names.len()),
            ));
        }
        self.data.extend_from_slice(epoch);
        self.labels.push(label);
        self.trial_ids.push(trial_id);
        self.subject_ids.push(subject_id);
        Ok(())
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn epoch_len(&self) -> usize {
        self.epoch_len
    }

    pub fn epoch_size(&self) -> usize {
        self.n_channels() * self.epoch_len
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn trial_ids(&self) -> &[u64] {
        &self.trial_ids
    }

    pub fn subject_ids(&self) -> &[u32] {
        &self.subject_ids
    }

    pub fn epoch(&self, i: usize) -> &[f32] {
        let n = self.epoch_size();
        &self.data[i * n..(i + 1) * n]
    }

    /// Epoch `i` as a `channels × time` matrix of f64 rows.
    pub fn epoch_rows(&self, i: usize) -> Vec<Vec<f64>> {
        self.epoch(i)
            .chunks_exact(self.epoch_len)
            .map(|r| r.iter().map(|&v| v as f64).collect())
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// New dataset holding the given epochs in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut out = Self::empty(
            self.fs,
            self.channel_names.clone(),
            self.class_names.clone(),
            self.epoch_len,
        )?;
        out.data.reserve(indices.len() * self.epoch_size());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid("indices", format!("epoch {i} out of range")));
            }
            out.push(self.epoch(i), self.labels[i], self.trial_ids[i], self.subject_ids[i])?;
        }
        Ok(out)
    }

    /// Network input batch `[B, 1, C, T]`.
    pub fn batch_tensor<T: Scalar>(&self, indices: &[usize]) -> Result<Tensor<T>> {
        let mut data = Vec::with_capacity(indices.len() * self.epoch_size());
        for &i in indices {
            data.extend(self.epoch(i).iter().map(|&v| T::of(v as f64)));
        }
        Tensor::new(vec![indices.len(), 1, self.n_channels(), self.epoch_len], data)
    }

    /// Replaces the class-name list (labels are kept).
    pub fn with_class_names(mut self, class_names: Vec<String>) -> Result<Self> {
        if self.labels.iter().any(|&l| l >= class_names.len()) {
            return Err(Error::Data("label outside the new class-name list".into()));
        }
        self.class_names = class_names;
        Ok(self)
    }

    pub(crate) fn from_parts(
        layout: EpochedDataset,
        data: Vec<f32>,
        labels: Vec<usize>,
        trial_ids: Vec<u64>,
        subject_ids: Vec<u32>,
    ) -> Result<Self> {
        let n = labels.len();
        if data.len() != n * layout.epoch_size() || trial_ids.len() != n || subject_ids.len() != n {
            return Err(Error::Shape(format!(
                "dataset parts disagree: {} values for {n} epochs of {}",
                data.len(),
                layout.epoch_size()
            )));
        }
        if labels.iter().any(|&l| l >= layout.n_classes()) {
            return Err(Error::Data("label outside class-name list".into()));
        }
        Ok(EpochedDataset {
            data,
            labels,
            trial_ids,
            subject_ids,
            ..layout
        })
    }
}
