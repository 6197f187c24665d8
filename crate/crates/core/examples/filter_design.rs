//! Butterworth band-pass and notch design, zero-phase filtering and
//! decimation of a noisy tone.

use std::f64::consts::PI;

use mi_eeg::dsp::{decimate, design_butterworth_bandpass, design_notch, filtfilt};

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn main() -> mi_eeg::Result<()> {
    let fs = 1000.0;
    let bp = design_butterworth_bandpass(8.0, 12.0, fs, 4)?;
    println!("8-12 Hz, order 4: {} sections, max pole radius {:.4}", bp.sections.len(), bp.max_pole_radius().unwrap());
    for f in [2.0, 8.0, 10.0, 12.0, 20.0, 60.0] {
        println!("  |H({f:>4} Hz)| = {:.5}", bp.magnitude(f));
    }

    let notch = design_notch(60.0, 30.0, fs)?;
    let t: Vec<f64> = (0..5000).map(|i| i as f64 / fs).collect();
    let mixed: Vec<f64> = t.iter().map(|t| (2.0 * PI * 10.0 * t).sin() + (2.0 * PI * 60.0 * t).sin()).collect();
    let clean = filtfilt(&notch, &mixed)?;
    let residual: Vec<f64> = clean.iter().zip(&t).map(|(c, t)| c - (2.0 * PI * 10.0 * t).sin()).collect();
    println!("notch: 60 Hz residual rms {:.2e} (input tone rms {:.3})", rms(&residual[500..4500]), 0.5f64.sqrt());

    let low = decimate(&clean, fs, 4)?;
    println!("decimated to 250 Hz: {} → {} samples", clean.len(), low.len());
    Ok(())
}
