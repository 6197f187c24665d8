//! Signal conditioning: IIR design, zero-phase filtering, decimation,
//! epoching and band power.

mod bandpower;
mod filter;
mod recording;

pub use bandpower::{bandpower, class_bandpower, write_bandpower_csv};
pub use filter::{design_butterworth_bandpass, design_notch, filtfilt, Biquad, BiquadCascade};
pub use recording::{
    decimate, extract_epochs, preprocess, ContinuousRecording, EpochExtraction, Event, EventMap,
    PreprocessConfig, PREPROCESS_ORDER,
};
