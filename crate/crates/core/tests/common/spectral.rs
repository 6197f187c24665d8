//! Spectral and ERD measurements built from plain DFT sums.

use std::f64::consts::PI;

use mi_eeg::dsp::bandpower;
use mi_eeg::synth::generate_trial;
use mi_eeg::GeneratorParams;

/// Welch estimate with Hann segments of `seg` samples, 50% overlap, for bins
/// up to `fmax`. Each bin is a direct DFT sum. Returns `(freq, power)`.
pub fn welch(x: &[f64], fs: f64, seg: usize, fmax: f64) -> Vec<(f64, f64)> {
    let hann: Vec<f64> = (0..seg).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg as f64).cos()).collect();
    let u: f64 = hann.iter().map(|w| w * w).sum();
    let kmax = (fmax * seg as f64 / fs).floor() as usize;
    let mut acc = vec![0.0; kmax + 1];
    let mut count = 0;
    let mut start = 0;
    while start + seg <= x.len() {
        let s = &x[start..start + seg];
        let mean = s.iter().sum::<f64>() / seg as f64;
        for (k, a) in acc.iter_mut().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, (v, w)) in s.iter().zip(&hann).enumerate() {
                let ph = 2.0 * PI * (k * i) as f64 / seg as f64;
                re += (v - mean) * w * ph.cos();
                im -= (v - mean) * w * ph.sin();
            }
            *a += (re * re + im * im) / (u * fs);
        }
        count += 1;
        start += seg / 2;
    }
    acc.iter()
        .enumerate()
        .map(|(k, a)| (k as f64 * fs / seg as f64, a / count as f64))
        .collect()
}

/// Least-squares slope of log10 power against log10 frequency over `[lo, hi]`.
pub fn loglog_slope(psd: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = psd
        .iter()
        .filter(|(f, _)| *f >= lo && *f <= hi)
        .map(|(f, p)| (f.log10(), p.log10()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Power of `x` in `[lo, hi]` Hz from a full-length DFT (both spectrum halves).
pub fn dft_band_power(x: &[f64], fs: f64, lo: f64, hi: f64) -> f64 {
    let n = x.len();
    let k0 = (lo * n as f64 / fs).ceil() as usize;
    let k1 = (hi * n as f64 / fs).floor() as usize;
    let mut total = 0.0;
    for k in k0.max(1)..=k1 {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, v) in x.iter().enumerate() {
            let ph = 2.0 * PI * ((k * i) % n) as f64 / n as f64;
            re += v * ph.cos();
            im -= v * ph.sin();
        }
        total += 2.0 * (re * re + im * im) / (n as f64 * n as f64);
    }
    total
}

/// Class-averaged imagery/rest mu-band power ratio at one channel, after
/// subtracting the same trials rendered without rhythms.
pub fn erd_ratio(params: &GeneratorParams, class: usize, channel: usize, trials: u64, seed: u64) -> f64 {
    band_ratio(params, class, channel, trials, seed, true)
}

/// As [`erd_ratio`]; `subtract_floor = false` keeps the noise in both windows.
pub fn band_ratio(
    params: &GeneratorParams,
    class: usize,
    channel: usize,
    trials: u64,
    seed: u64,
    subtract_floor: bool,
) -> f64 {
    let quiet = GeneratorParams {
        rhythm_amplitude: 0.0,
        ..params.clone()
    };
    let fs = params.fs;
    let rest = (0, (params.timing.rest_s * fs) as usize);
    let onset = (params.timing.imagery_onset_s() * fs) as usize;
    let imagery = (onset, onset + (params.timing.imagery_s * fs) as usize);
    let powers = |p: &GeneratorParams, s: u64| {
        let trial = generate_trial(class, p, s).unwrap();
        let x = &trial.samples[channel];
        [rest, imagery].map(|(a, b)| bandpower(&[&x[a..b]], fs, (8.0, 12.0)).unwrap()[0])
    };
    let (mut num, mut den) = (0.0, 0.0);
    for t in 0..trials {
        let [r, i] = powers(params, seed + t);
        let [r0, i0] = if subtract_floor { powers(&quiet, seed + t) } else { [0.0; 2] };
        num += i - i0;
        den += r - r0;
    }
    num / den
}
