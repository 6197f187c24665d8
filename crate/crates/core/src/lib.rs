//! Motor-imagery EEG decoding.
//!
//! The crate bundles everything needed to go from raw multichannel EEG to a
//! four-class motor-imagery decision and to compare decoders on equal footing:
//!
//! ```text
//! synth ─┐
//!        ├─ dsp: band-pass 1-60 Hz → notch 60 Hz → decimate ×4 → epoch 3 s
//! csv  ──┘        │
//!                 ├─ model:  BFR-CNN (two conv blocks) / ShallowConvNet  (nn engine)
//!                 ├─ fbcsp:  filter-bank CSP + shrinkage LDA
//!                 └─ eval:   stratified k-fold, confusion matrices, comparison tables
//! ```
//!
//! * [`nn`] is a small reverse-mode engine with exactly the layers the two
//!   networks need (valid conv, average pooling, ELU, square, log, dense,
//!   softmax cross-entropy) and Adam.
//! * [`synth`] renders synthetic sessions whose mu/beta sources desynchronize
//!   during imagery, so every part of the pipeline can be checked without
//!   private recordings.
//! * [`data`] holds the on-disk dataset container and CSV import.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod data;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod fbcsp;
pub mod model;
pub mod nn;
pub mod synth;
pub(crate) mod util;

pub use data::{ChannelMontage, EpochedDataset};
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, Method};
pub use fbcsp::FbcspModel;
pub use model::{ArchitectureConfig, NetKind, TrainConfig, TrainedNetwork};
pub use synth::GeneratorParams;
