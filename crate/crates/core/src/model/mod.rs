//! The two convolutional decoders, their training recipe and checkpoints.

mod arch;
mod train;

pub use arch::{
    build_bfr_cnn, build_shallow_convnet, temporal_kernel_for, ArchitectureConfig, NetKind, Pool,
    LOG_FLOOR, SHALLOW_FILTERS, SHALLOW_KERNEL, SHALLOW_POOL,
};
pub use train::{train, train_with, EpochRecord, Predictions, TrainConfig, TrainedNetwork};
