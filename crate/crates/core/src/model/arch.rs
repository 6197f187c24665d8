use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{shape_plan, LayerSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    BfrCnn,
    ShallowConvNet,
}

impl NetKind {
    pub fn short_name(self) -> &'static str {
        match self {
            NetKind::BfrCnn => "bfr",
            NetKind::ShallowConvNet => "shallow",
        }
    }

    pub fn build(self, cfg: &ArchitectureConfig) -> Result<Vec<LayerSpec>> {
        match self {
            NetKind::BfrCnn => build_bfr_cnn(cfg),
            NetKind::ShallowConvNet => build_shallow_convnet(cfg),
        }
    }
}

impl fmt::Display for NetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetKind::BfrCnn => "BFR-CNN",
            NetKind::ShallowConvNet => "ShallowConvNet",
        })
    }
}

impl FromStr for NetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bfr" | "bfr-cnn" | "bfr_cnn" => Ok(NetKind::BfrCnn),
            "shallow" | "shallowconvnet" | "shallow_conv_net" => Ok(NetKind::ShallowConvNet),
            other => Err(Error::invalid("model", format!("unknown network {other:?}"))),
        }
    }
}

/// Pooling window along time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pool {
    pub kernel: usize,
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureConfig {
    pub n_channels: usize,
    pub epoch_len: usize,
    pub fs: f64,
    pub n_classes: usize,
    pub f1_temporal_filters: usize,
    pub temporal_kernel: usize,
    pub f2_refine_filters: usize,
    pub refine_kernel: usize,
    pub pool1: Pool,
    pub pool2: Pool,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        ArchitectureConfig::new(24, 750, 250.0, 4)
    }
}

/// Quarter of the sampling rate, rounded, then bumped to the next odd value.
pub fn temporal_kernel_for(fs: f64) -> usize {
    let k = (fs / 4.0).round().max(1.0) as usize;
    if k % 2 == 0 {
        k + 1
    } else {
        k
    }
}

impl ArchitectureConfig {
    /// Default filter counts and pooling for the given input geometry.
    pub fn new(n_channels: usize, epoch_len: usize, fs: f64, n_classes: usize) -> Self {
        ArchitectureConfig {
            n_channels,
            epoch_len,
            fs,
            n_classes,
            f1_temporal_filters: 16,
            temporal_kernel: temporal_kernel_for(fs),
            f2_refine_filters: 16,
            refine_kernel: 11,
            pool1: Pool { kernel: 25, stride: 5 },
            pool2: Pool { kernel: 8, stride: 8 },
        }
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [1, self.n_channels, self.epoch_len]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::invalid("fs", format!("must be positive, got {}", self.fs)));
        }
        let counts = [
            ("n_channels", self.n_channels),
            ("epoch_len", self.epoch_len),
            ("f1_temporal_filters", self.f1_temporal_filters),
            ("f2_refine_filters", self.f2_refine_filters),
            ("refine_kernel", self.refine_kernel),
            ("pool1", self.pool1.kernel.min(self.pool1.stride)),
            ("pool2", self.pool2.kernel.min(self.pool2.stride)),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::invalid(name, "must be at least 1"));
            }
        }
        if self.n_classes < 2 {
            return Err(Error::invalid("n_classes", "need at least 2 classes"));
        }
        let expected = temporal_kernel_for(self.fs);
        if self.temporal_kernel != expected {
            return Err(Error::invalid(
                "temporal_kernel",
                format!("must be {expected} at {} Hz (quarter of fs, odd), got {}", self.fs, self.temporal_kernel),
            ));
        }
        Ok(())
    }
}

fn finish(cfg: &ArchitectureConfig, mut layers: Vec<LayerSpec>) -> Result<Vec<LayerSpec>> {
    // the dense layer's fan-in is whatever the feature stack leaves
    let mut shape = cfg.input_shape().to_vec();
    for l in &layers {
        shape = l.output_shape(&shape).map_err(|e| {
            Error::Shape(format!("architecture does not fit {}-sample epochs: {e}", cfg.epoch_len))
        })?;
    }
    layers.push(LayerSpec::Flatten);
    layers.push(LayerSpec::Dense {
        in_features: shape.iter().product(),
        out_features: cfg.n_classes,
    });
    layers.push(LayerSpec::SoftmaxXent);
    shape_plan(&cfg.input_shape(), &layers)?;
    Ok(layers)
}

/// Temporal conv → spatial conv (channel axis to 1) → ELU → avg-pool →
/// refine conv → ELU → avg-pool → dense → softmax.
pub fn build_bfr_cnn(cfg: &ArchitectureConfig) -> Result<Vec<LayerSpec>> {
    cfg.validate()?;
    let f1 = cfg.f1_temporal_filters;
    let f2 = cfg.f2_refine_filters;
    finish(
        cfg,
        vec![
            LayerSpec::Conv2d {
                in_channels: 1,
                out_channels: f1,
                kernel: [1, cfg.temporal_kernel],
                stride: [1, 1],
            },
            LayerSpec::Conv2d {
                in_channels: f1,
                out_channels: f1,
                kernel: [cfg.n_channels, 1],
                stride: [1, 1],
            },
            LayerSpec::Elu { alpha: 1.0 },
            LayerSpec::AvgPool2d {
                kernel: [1, cfg.pool1.kernel],
                stride: [1, cfg.pool1.stride],
            },
            LayerSpec::Conv2d {
                in_channels: f1,
                out_channels: f2,
                kernel: [1, cfg.refine_kernel],
                stride: [1, 1],
            },
            LayerSpec::Elu { alpha: 1.0 },
            LayerSpec::AvgPool2d {
                kernel: [1, cfg.pool2.kernel],
                stride: [1, cfg.pool2.stride],
            },
        ],
    )
}

pub const SHALLOW_FILTERS: usize = 40;
pub const SHALLOW_KERNEL: usize = 25;
pub const SHALLOW_POOL: Pool = Pool { kernel: 75, stride: 15 };
pub const LOG_FLOOR: f64 = 1e-6;

/// Temporal conv → spatial conv → square → avg-pool → log → dense → softmax.
/// Only `n_channels`, `epoch_len` and `n_classes` are read from `cfg`.
pub fn build_shallow_convnet(cfg: &ArchitectureConfig) -> Result<Vec<LayerSpec>> {
    cfg.validate()?;
    finish(
        cfg,
        vec![
            LayerSpec::Conv2d {
                in_channels: 1,
                out_channels: SHALLOW_FILTERS,
                kernel: [1, SHALLOW_KERNEL],
                stride: [1, 1],
            },
            LayerSpec::Conv2d {
                in_channels: SHALLOW_FILTERS,
                out_channels: SHALLOW_FILTERS,
                kernel: [cfg.n_channels, 1],
                stride: [1, 1],
            },
            LayerSpec::Square,
            LayerSpec::AvgPool2d {
                kernel: [1, SHALLOW_POOL.kernel],
                stride: [1, SHALLOW_POOL.stride],
            },
            LayerSpec::LogAct { floor: LOG_FLOOR },
        ],
    )
}
