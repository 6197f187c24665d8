use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::arch::{ArchitectureConfig, NetKind};
use crate::data::EpochedDataset;
use crate::error::{Error, Result};
use crate::nn::container::{decode, encode};
use crate::nn::{AdamConfig, AdamState, Network, Scalar, Tensor};
use crate::util::{argmax, derive_seed, write_atomic};

const CHECKPOINT_MAGIC: &[u8; 8] = b"MIEEGNET";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: AdamConfig,
    pub rng_seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 200,
            optimizer: AdamConfig::default(),
            rng_seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs", "must be at least 1"));
        }
        self.optimizer.validate()
    }
}

/// Mean training loss and accuracy over one pass through the data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedNetwork<T = f32> {
    pub kind: NetKind,
    pub architecture: ArchitectureConfig,
    pub network: Network<T>,
    pub history: Vec<EpochRecord>,
    pub optimizer_steps: u64,
}

/// Layer specs, input geometry and per-epoch history travel in the
/// checkpoint header; weights go in the tensor blocks.
#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    kind: NetKind,
    architecture: ArchitectureConfig,
    specs: Vec<crate::nn::LayerSpec>,
    history: Vec<EpochRecord>,
    optimizer_steps: u64,
}

fn check_compatible(kind: NetKind, arch: &ArchitectureConfig, ds: &EpochedDataset) -> Result<()> {
    if ds.n_channels() != arch.n_channels || ds.epoch_len() != arch.epoch_len {
        return Err(Error::Incompatible(format!(
            "{kind} expects {}×{} epochs, dataset has {}×{}",
            arch.n_channels,
            arch.epoch_len,
            ds.n_channels(),
            ds.epoch_len()
        )));
    }
    if ds.n_classes() != arch.n_classes {
        return Err(Error::Incompatible(format!(
            "{kind} has {} outputs, dataset has {} classes",
            arch.n_classes,
            ds.n_classes()
        )));
    }
    if (ds.fs() - arch.fs).abs() > 1e-9 * arch.fs {
        return Err(Error::Incompatible(format!(
            "{kind} built for {} Hz, dataset sampled at {} Hz",
            arch.fs,
            ds.fs()
        )));
    }
    Ok(())
}

/// Mini-batch Adam in single precision. See [`train_with`] for other
/// precisions.
pub fn train(
    kind: NetKind,
    arch: &ArchitectureConfig,
    train_set: &EpochedDataset,
    cfg: &TrainConfig,
) -> Result<TrainedNetwork<f32>> {
    train_with(kind, arch, train_set, cfg)
}

pub fn train_with<T: Scalar>(
    kind: NetKind,
    arch: &ArchitectureConfig,
    train_set: &EpochedDataset,
    cfg: &TrainConfig,
) -> Result<TrainedNetwork<T>> {
    cfg.validate()?;
    let specs = kind.build(arch)?;
    check_compatible(kind, arch, train_set)?;
    if let Some(k) = train_set.class_counts().iter().position(|&c| c == 0) {
        return Err(Error::Data(format!(
            "training set has no examples of class {}",
            train_set.class_names()[k]
        )));
    }

    let mut network = Network::<T>::new(&arch.input_shape(), specs, derive_seed(cfg.rng_seed, 0))?;
    let mut adam = AdamState::for_tensors(cfg.optimizer, network.params())?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.rng_seed, 1));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let k = arch.n_classes;

    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x: Tensor<T> = train_set.batch_tensor(idx)?;
            let labels: Vec<usize> = idx.iter().map(|&i| train_set.labels()[i]).collect();
            let out = network.loss_and_backward(&x, &labels)?;
            let loss = out.loss.as_f64();
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss is {loss} at epoch {}, batch {}",
                    epoch + 1,
                    b + 1
                )));
            }
            loss_sum += loss * idx.len() as f64;
            correct += out
                .probs
                .data()
                .chunks(k)
                .zip(&labels)
                .filter(|(p, &y)| argmax(p) == y)
                .count();
            adam.update(network.params_mut()).map_err(|e| match e {
                Error::NonFinite(what) => Error::NonFinite(format!(
                    "{what} at epoch {}, batch {}",
                    epoch + 1,
                    b + 1
                )),
                other => other,
            })?;
        }
        let record = EpochRecord {
            epoch: epoch + 1,
            loss: loss_sum / train_set.len() as f64,
            accuracy: correct as f64 / train_set.len() as f64,
        };
        log::debug!(
            "{kind} epoch {}: loss {:.4}, train accuracy {:.3}",
            record.epoch,
            record.loss,
            record.accuracy
        );
        history.push(record);
    }
    for p in network.params_mut() {
        p.clear_grad();
    }
    Ok(TrainedNetwork {
        kind,
        architecture: arch.clone(),
        network,
        history,
        optimizer_steps: adam.step_count,
    })
}

/// Predicted labels and softmax probabilities (`[n][K]`).
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub labels: Vec<usize>,
    pub probs: Vec<Vec<f64>>,
}

/// Epochs per forward pass during inference.
const PREDICT_BATCH: usize = 64;

impl<T: Scalar> TrainedNetwork<T> {
    /// Argmax of the softmax, ties toward the lowest class index.
    pub fn predict(&self, epochs: &EpochedDataset) -> Result<Predictions> {
        check_compatible(self.kind, &self.architecture, epochs)?;
        let all: Vec<usize> = (0..epochs.len()).collect();
        let mut probs = Vec::with_capacity(epochs.len());
        for idx in all.chunks(PREDICT_BATCH) {
            let x: Tensor<T> = epochs.batch_tensor(idx)?;
            let p = self.network.predict_proba(&x)?;
            probs.extend(
                p.data()
                    .chunks(self.architecture.n_classes)
                    .map(|row| row.iter().map(|v| v.as_f64()).collect::<Vec<_>>()),
            );
        }
        Ok(Predictions {
            labels: probs.iter().map(|p| argmax(p)).collect(),
            probs,
        })
    }

    pub fn save_checkpoint(&self) -> Result<Vec<u8>> {
        let header = CheckpointHeader {
            kind: self.kind,
            architecture: self.architecture.clone(),
            specs: self.network.specs().to_vec(),
            history: self.history.clone(),
            optimizer_steps: self.optimizer_steps,
        };
        let header = serde_json::to_string(&header)?;
        let blocks: Vec<&Tensor<T>> = self.network.params().iter().collect();
        Ok(encode(CHECKPOINT_MAGIC, &header, &blocks))
    }

    pub fn load_checkpoint(bytes: &[u8]) -> Result<Self> {
        let decoded = decode::<T>(bytes, CHECKPOINT_MAGIC, "checkpoint")?;
        let header: CheckpointHeader = serde_json::from_str(&decoded.header)?;
        let rebuilt = header.kind.build(&header.architecture)?;
        if rebuilt != header.specs {
            return Err(Error::Incompatible(format!(
                "checkpoint layer list does not match a {} built from its own architecture",
                header.kind
            )));
        }
        let network = Network::from_parameters(
            &header.architecture.input_shape(),
            header.specs,
            decoded.blocks,
        )?;
        Ok(TrainedNetwork {
            kind: header.kind,
            architecture: header.architecture,
            network,
            history: header.history,
            optimizer_steps: header.optimizer_steps,
        })
    }

    /// Loads a checkpoint and insists it was built for `kind` / `arch`.
    pub fn load_expecting(bytes: &[u8], kind: NetKind, arch: &ArchitectureConfig) -> Result<Self> {
        let net = Self::load_checkpoint(bytes)?;
        if net.kind != kind || &net.architecture != arch {
            return Err(Error::Incompatible(format!(
                "checkpoint holds a {} for {}×{} input at {} Hz, expected a {kind} for {}×{} at {} Hz",
                net.kind,
                net.architecture.n_channels,
                net.architecture.epoch_len,
                net.architecture.fs,
                arch.n_channels,
                arch.epoch_len,
                arch.fs
            )));
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.save_checkpoint()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::load_checkpoint(&bytes)
    }

    /// `epoch,loss,accuracy` rows.
    pub fn history_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.history {
            w.serialize(r)?;
        }
        w.into_inner()
            .map_err(|e| Error::Data(format!("history CSV: {}", e.error())))
    }
}
