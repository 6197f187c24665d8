//! Synthetic motor-imagery sessions.
//!
//! Two rhythm sources (mu plus a weaker beta harmonic, slow log-normal
//! amplitude modulation, per-trial frequency jitter) are projected onto the
//! scalp through fixed spatial patterns, then per-channel pink background and
//! white sensor noise are added. During imagery each source's amplitude is
//! multiplied by `1 - erd_depth[class][source]`, with the depth varied from
//! trial to trial by `erd_jitter`.
//!
//! Trials follow the cue timeline: rest `[0, 3)`, cue `[3, 6)`, imagery
//! `[6, 10)` seconds. Sessions render all trials on one continuous timeline
//! so the noise and the oscillators never jump at trial boundaries.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::data::{EpochedDataset, CLASS_NAMES, MONTAGE_24};
use crate::dsp::{preprocess, ContinuousRecording, Event, EventMap, PreprocessConfig};
use crate::error::{Error, Result};
use crate::util::derive_seed;

/// Event code marking the start of the relaxation period of every trial.
pub const REST_ONSET_CODE: u32 = 1;

/// Event code of imagery onset for class `k`.
pub fn imagery_code(class: usize) -> u32 {
    10 + class as u32
}

pub const MIN_PINK_LEN: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialTiming {
    pub rest_s: f64,
    pub cue_s: f64,
    pub imagery_s: f64,
}

impl TrialTiming {
    pub fn trial_s(&self) -> f64 {
        self.rest_s + self.cue_s + self.imagery_s
    }

    pub fn imagery_onset_s(&self) -> f64 {
        self.rest_s + self.cue_s
    }
}

impl Default for TrialTiming {
    fn default() -> Self {
        TrialTiming {
            rest_s: 3.0,
            cue_s: 3.0,
            imagery_s: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub fs: f64,
    pub channel_names: Vec<String>,
    /// Class 0 is rest.
    pub class_names: Vec<String>,
    pub mu_freq: f64,
    pub beta_freq: f64,
    /// Beta amplitude relative to mu.
    pub beta_ratio: f64,
    /// Standard deviation of the per-trial rhythm frequency offset, Hz.
    pub freq_jitter_hz: f64,
    /// Standard deviation of the log amplitude modulation.
    pub am_depth: f64,
    /// `[class][source]`, fraction of amplitude removed during imagery.
    pub erd_depth: Vec<[f64; 2]>,
    /// Standard deviation of a per-trial offset added to each source's depth
    /// in classes with any ERD. The result is clipped to `[0, MAX_DEPTH]`
    /// unless the nominal depth is already larger.
    pub erd_jitter: f64,
    /// Two unit-norm spatial patterns, one weight per channel.
    pub source_patterns: [Vec<f64>; 2],
    /// Mu amplitude of each source before modulation, µV-like units.
    pub rhythm_amplitude: f64,
    /// RMS of the 1/f background inside 1-40 Hz.
    pub pink_noise_scale: f64,
    pub sensor_noise_scale: f64,
    pub timing: TrialTiming,
    /// Quiet time before the first and after the last trial, seconds.
    pub margin_s: f64,
    /// Master seed used when a caller does not supply one.
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        let channel_names: Vec<String> = MONTAGE_24.iter().map(|s| s.to_string()).collect();
        let source_patterns = [
            gaussian_pattern(&channel_names, (-2.0, -0.3), PATTERN_WIDTH).expect("montage positions"),
            gaussian_pattern(&channel_names, (-1.0, 0.4), PATTERN_WIDTH).expect("montage positions"),
        ];
        GeneratorParams {
            fs: 1000.0,
            channel_names,
            class_names: CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
            mu_freq: 10.0,
            beta_freq: 20.0,
            beta_ratio: 0.5,
            freq_jitter_hz: 1.2,
            am_depth: 0.05,
            erd_depth: vec![[0.0, 0.0], [0.6, 0.0], [0.0, 0.6], [0.35, 0.35]],
            erd_jitter: 0.1,
            source_patterns,
            rhythm_amplitude: 40.0,
            pink_noise_scale: 0.3,
            sensor_noise_scale: 0.3,
            timing: TrialTiming::default(),
            margin_s: 2.0,
            seed: 1,
        }
    }
}

const PATTERN_WIDTH: f64 = 0.6;

/// Grid position (lateral, anterior) of a 10-10 name such as `FC3` or `CPz`,
/// one unit per electrode step.
pub fn montage_position(name: &str) -> Option<(f64, f64)> {
    let split = name.find(|c: char| c.is_ascii_digit() || c == 'z')?;
    let (row, col) = name.split_at(split);
    let y = match row {
        "F" => 2.0,
        "FC" => 1.0,
        "C" => 0.0,
        "CP" => -1.0,
        "P" => -2.0,
        _ => return None,
    };
    let x = match col {
        "z" => 0.0,
        d => {
            let n: u32 = d.parse().ok()?;
            let step = n.div_ceil(2) as f64;
            if n % 2 == 1 {
                -step
            } else {
                step
            }
        }
    };
    Some((x, y))
}

/// Unit-norm Gaussian bump over montage positions.
pub fn gaussian_pattern(channels: &[String], center: (f64, f64), width: f64) -> Result<Vec<f64>> {
    let mut p = Vec::with_capacity(channels.len());
    for name in channels {
        let (x, y) = montage_position(name)
            .ok_or_else(|| Error::invalid("channel_names", format!("no scalp position for {name}")))?;
        let d2 = (x - center.0).powi(2) + (y - center.1).powi(2);
        p.push((-d2 / (2.0 * width * width)).exp());
    }
    let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(p.into_iter().map(|v| v / norm).collect())
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let c = self.channel_names.len();
        if c == 0 {
            return Err(Error::invalid("channel_names", "empty"));
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::invalid("fs", format!("must be positive, got {}", self.fs)));
        }
        if self.class_names.len() < 2 || self.erd_depth.len() != self.class_names.len() {
            return Err(Error::invalid(
                "erd_depth",
                format!("{} rows for {} classes", self.erd_depth.len(), self.class_names.len()),
            ));
        }
        if self.erd_depth[0] != [0.0, 0.0] {
            return Err(Error::invalid("erd_depth", "the rest class must not desynchronize"));
        }
        if let Some(d) = self.erd_depth.iter().flatten().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::invalid("erd_depth", format!("{d} outside [0, 1]")));
        }
        for (i, p) in self.source_patterns.iter().enumerate() {
            if p.len() != c {
                return Err(Error::invalid(
                    "source_patterns",
                    format!("pattern {} has {} weights for {c} channels", i + 1, p.len()),
                ));
            }
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(
                    "source_patterns",
                    format!("pattern {} has norm {norm}, expected 1", i + 1),
                ));
            }
        }
        let scales = [
            ("rhythm_amplitude", self.rhythm_amplitude),
            ("pink_noise_scale", self.pink_noise_scale),
            ("sensor_noise_scale", self.sensor_noise_scale),
            ("beta_ratio", self.beta_ratio),
            ("freq_jitter_hz", self.freq_jitter_hz),
            ("am_depth", self.am_depth),
            ("erd_jitter", self.erd_jitter),
            ("margin_s", self.margin_s),
        ];
        if let Some((name, v)) = scales.iter().find(|(_, v)| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(name, format!("must be non-negative, got {v}")));
        }
        let t = &self.timing;
        if !(t.rest_s > 0.0 && t.cue_s >= 0.0 && t.imagery_s > 0.0) {
            return Err(Error::invalid("timing", "rest and imagery periods must be positive"));
        }
        if self.beta_freq.max(self.mu_freq) >= self.fs / 2.0 || self.mu_freq <= 0.0 {
            return Err(Error::invalid("mu_freq", "rhythms must lie below Nyquist"));
        }
        Ok(())
    }

    /// Copy with every ERD depth set to zero: all classes share rest statistics.
    pub fn without_erd(&self) -> Self {
        let mut p = self.clone();
        p.erd_depth.iter_mut().for_each(|d| *d = [0.0, 0.0]);
        p
    }

    fn samples(&self, seconds: f64) -> usize {
        (seconds * self.fs).round() as usize
    }
}

/// Unit-variance 1/f noise from spectrally shaped white noise. Bin `k` is
/// scaled by `1/sqrt(k)` and the DC bin is removed, so the mean is zero.
pub fn pink_noise(n: usize, seed: u64) -> Result<Vec<f64>> {
    let out = shaped_noise(n, seed, |k| 1.0 / (k as f64).sqrt())?;
    let mean = out.iter().sum::<f64>() / n as f64;
    let sd = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    Ok(out.into_iter().map(|v| (v - mean) / sd).collect())
}

/// Lower and upper edge of the band in which [`background_noise`] has unit variance.
pub const BACKGROUND_BAND: (f64, f64) = (1.0, 40.0);

/// 1/f background at `fs`: amplitude `1/sqrt(max(f, 1 Hz))`, scaled so the
/// expected variance inside [`BACKGROUND_BAND`] is 1 whatever the length.
pub fn background_noise(n: usize, fs: f64, seed: u64) -> Result<Vec<f64>> {
    let weight = |k: usize| 1.0 / (k as f64 * fs / n as f64).max(1.0).sqrt();
    // a real signal built from unit white noise has variance n·Σ W_k² (both halves)
    let (lo, hi) = BACKGROUND_BAND;
    let band: f64 = (1..n)
        .map(|k| (k, k.min(n - k) as f64 * fs / n as f64))
        .filter(|&(_, f)| f >= lo && f <= hi)
        .map(|(k, _)| weight(k.min(n - k)).powi(2))
        .sum();
    if band == 0.0 {
        return Err(Error::invalid("n", format!("{n} samples at {fs} Hz resolve no bin in {lo}-{hi} Hz")));
    }
    let g = 1.0 / (n as f64 * band).sqrt();
    Ok(shaped_noise(n, seed, weight)?.into_iter().map(|v| v * g).collect())
}

/// White Gaussian noise filtered in the frequency domain by a real weight
/// per bin index (`1..=n/2`, mirrored); the DC bin is dropped.
fn shaped_noise(n: usize, seed: u64, weight: impl Fn(usize) -> f64) -> Result<Vec<f64>> {
    if n < MIN_PINK_LEN {
        return Err(Error::invalid(
            "n",
            format!("spectral shaping needs at least {MIN_PINK_LEN} samples, got {n}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(rng.sample(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[0] = Complex::new(0.0, 0.0);
    for (k, b) in buf.iter_mut().enumerate().skip(1) {
        *b *= weight(k.min(n - k));
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf.iter().map(|c| c.re).collect())
}

const STREAM_PINK: u64 = 0x100;
const STREAM_SENSOR: u64 = 0x200;
const STREAM_SOURCE: u64 = 0x300;
const STREAM_ORDER: u64 = 0x400;
const STREAM_REST_PICK: u64 = 0x401;
const STREAM_ERD: u64 = 0x500;
/// Upper clip for a jittered ERD depth.
pub const MAX_DEPTH: f64 = 0.95;
const AM_COMPONENTS: usize = 8;

/// Unit-pattern source waveforms and per-channel noise of one session,
/// kept apart so the mixing step can be examined on its own.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionComponents {
    pub sources: [Vec<f64>; 2],
    /// Pink plus sensor noise, `[channel][sample]`.
    pub noise: Vec<Vec<f64>>,
}

/// `x_c(t) = Σ_i patterns[i][c]·sources[i](t) + noise_c(t)`.
pub fn mix(patterns: &[Vec<f64>; 2], comps: &SessionComponents) -> Vec<Vec<f64>> {
    comps
        .noise
        .iter()
        .enumerate()
        .map(|(c, noise)| {
            noise
                .iter()
                .enumerate()
                .map(|(t, n)| patterns[0][c] * comps.sources[0][t] + patterns[1][c] * comps.sources[1][t] + n)
                .collect()
        })
        .collect()
}

/// One rhythm source over the whole session.
fn render_source(
    params: &GeneratorParams,
    source: usize,
    classes: &[usize],
    lead: usize,
    n: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_SOURCE + source as u64));
    let fs = params.fs;
    let am: Vec<(f64, f64, f64)> = (0..AM_COMPONENTS)
        .map(|_| {
            let f = rng.random_range(0.05..0.5);
            let phase = rng.random_range(0.0..2.0 * PI);
            (f, phase, (2.0 / AM_COMPONENTS as f64).sqrt())
        })
        .collect();
    let trial_len = params.samples(params.timing.trial_s());
    let imagery = params.samples(params.timing.imagery_onset_s());
    let offsets: Vec<f64> = classes
        .iter()
        .map(|_| params.freq_jitter_hz * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut erd_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_ERD + source as u64));
    let depths: Vec<f64> = classes
        .iter()
        .map(|&k| {
            let z: f64 = erd_rng.sample(StandardNormal);
            let d = params.erd_depth[k];
            if d == [0.0, 0.0] {
                0.0
            } else {
                (d[source] + params.erd_jitter * z).clamp(0.0, MAX_DEPTH.max(d[source]))
            }
        })
        .collect();
    let mut mu_phase = rng.random_range(0.0..2.0 * PI);
    let mut beta_phase = rng.random_range(0.0..2.0 * PI);
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let rel = t as isize - lead as isize;
        let trial = (rel >= 0).then(|| rel as usize / trial_len).filter(|&i| i < classes.len());
        let (offset, gain) = match trial {
            Some(i) => {
                let within = rel as usize - i * trial_len;
                let g = if within >= imagery {
                    1.0 - depths[i]
                } else {
                    1.0
                };
                (offsets[i], g)
            }
            None => (0.0, 1.0),
        };
        let time = t as f64 / fs;
        let g: f64 = am.iter().map(|(f, p, a)| a * (2.0 * PI * f * time + p).sin()).sum();
        let amp = params.rhythm_amplitude * gain * (params.am_depth * g).exp();
        out.push(amp * (mu_phase.sin() + params.beta_ratio * beta_phase.sin()));
        mu_phase += 2.0 * PI * (params.mu_freq + offset) / fs;
        beta_phase += 2.0 * PI * (params.beta_freq + 2.0 * offset) / fs;
    }
    out
}

/// Sources and noise for trials of the given classes, back to back with a
/// margin on both sides.
pub fn render_components(params: &GeneratorParams, classes: &[usize], seed: u64) -> Result<SessionComponents> {
    params.validate()?;
    if let Some(&k) = classes.iter().find(|&&k| k >= params.class_names.len()) {
        return Err(Error::invalid("class", format!("{k} is not one of {} classes", params.class_names.len())));
    }
    let lead = params.samples(params.margin_s);
    let n = 2 * lead + classes.len() * params.samples(params.timing.trial_s());
    let sources = [0, 1].map(|i| render_source(params, i, classes, lead, n, seed));
    let noise = (0..params.channel_names.len())
        .into_par_iter()
        .map(|c| {
            let pink = background_noise(n.max(MIN_PINK_LEN), params.fs, derive_seed(seed, STREAM_PINK + c as u64))?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_SENSOR + c as u64));
            Ok(pink[..n]
                .iter()
                .map(|p| {
                    let w: f64 = rng.sample(StandardNormal);
                    params.pink_noise_scale * p + params.sensor_noise_scale * w
                })
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(SessionComponents { sources, noise })
}

/// Continuous recording of the given trial sequence. Each trial carries a
/// rest-onset event and an imagery-onset event coded by class.
pub fn render_session(params: &GeneratorParams, classes: &[usize], seed: u64) -> Result<ContinuousRecording> {
    let comps = render_components(params, classes, seed)?;
    let samples = mix(&params.source_patterns, &comps);
    let lead = params.samples(params.margin_s);
    let trial_len = params.samples(params.timing.trial_s());
    let imagery = params.samples(params.timing.imagery_onset_s());
    let events = classes
        .iter()
        .enumerate()
        .flat_map(|(i, &k)| {
            let start = lead + i * trial_len;
            [
                Event { sample: start, code: REST_ONSET_CODE },
                Event { sample: start + imagery, code: imagery_code(k) },
            ]
        })
        .collect();
    ContinuousRecording::new(samples, params.fs, params.channel_names.clone(), events)
}

/// A single trial: the trial period cut out of a one-trial session, with
/// events relative to the trial start.
pub fn generate_trial(class: usize, params: &GeneratorParams, trial_seed: u64) -> Result<ContinuousRecording> {
    let session = render_session(params, &[class], trial_seed)?;
    let lead = params.samples(params.margin_s);
    let len = params.samples(params.timing.trial_s());
    let samples = session.samples.iter().map(|r| r[lead..lead + len].to_vec()).collect();
    let events = session
        .events
        .iter()
        .map(|e| Event { sample: e.sample - lead, code: e.code })
        .collect();
    ContinuousRecording::new(samples, params.fs, params.channel_names.clone(), events)
}

/// Shuffled order of `n_per_class` trials of every imagery class (all
/// classes except rest).
pub fn trial_order(n_classes: usize, n_per_class: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (1..n_classes).flat_map(|k| std::iter::repeat_n(k, n_per_class)).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_ORDER)));
    order
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthDataset {
    pub raw: ContinuousRecording,
    pub dataset: EpochedDataset,
    /// Class of each rendered trial, in session order.
    pub trials: Vec<usize>,
}

/// Renders one session with `n_per_class` trials per imagery class and runs
/// the conditioning chain. Imagery epochs start at imagery onset; rest
/// epochs come from the relaxation periods, subsampled to `n_per_class`.
pub fn generate_dataset(
    n_per_class: usize,
    params: &GeneratorParams,
    seed: u64,
    subject_id: u32,
) -> Result<SynthDataset> {
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class", "must be at least 1"));
    }
    params.validate()?;
    let trials = trial_order(params.class_names.len(), n_per_class, seed);
    let raw = render_session(params, &trials, seed)?;
    let mut codes = EventMap::new();
    codes.insert(REST_ONSET_CODE, 0);
    for k in 1..params.class_names.len() {
        codes.insert(imagery_code(k), k);
    }
    let cfg = PreprocessConfig {
        window: (0.0, params.timing.rest_s.min(params.timing.imagery_s)),
        ..PreprocessConfig::default()
    };
    let all = preprocess(&raw, &cfg, &codes, &params.class_names, subject_id)?.dataset;
    let rest: Vec<usize> = (0..all.len()).filter(|&i| all.labels()[i] == 0).collect();
    let mut picked = rest.clone();
    picked.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_REST_PICK)));
    picked.truncate(n_per_class);
    let keep: Vec<usize> = (0..all.len())
        .filter(|&i| all.labels()[i] != 0 || picked.contains(&i))
        .collect();
    let dataset = all.subset(&keep)?;
    Ok(SynthDataset { raw, dataset, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn montage_grid() {
        assert_eq!(montage_position("C3"), Some((-2.0, 0.0)));
        assert_eq!(montage_position("FC1"), Some((-1.0, 1.0)));
        assert_eq!(montage_position("CPz"), Some((0.0, -1.0)));
        assert_eq!(montage_position("P4"), Some((2.0, -2.0)));
        assert_eq!(montage_position("F2"), Some((1.0, 2.0)));
        assert_eq!(montage_position("T7"), None);
        assert_eq!(montage_position("Oz"), None);
    }

    #[test]
    fn default_params_are_valid() {
        let p = GeneratorParams::default();
        p.validate().unwrap();
        let peak = |pat: &[f64]| p.channel_names[crate::util::argmax(pat)].clone();
        assert_eq!(peak(&p.source_patterns[0]), "C3");
        assert_eq!(peak(&p.source_patterns[1]), "C1");
        for pat in &p.source_patterns {
            assert!((pat.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<GeneratorParams>(&json).unwrap(), p);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let base = GeneratorParams::default();
        let mut p = base.clone();
        p.erd_depth[0] = [0.1, 0.0];
        assert!(p.validate().is_err());
        let mut p = base.clone();
        p.source_patterns[0][0] *= 2.0;
        assert!(p.validate().is_err());
        let mut p = base.clone();
        p.pink_noise_scale = -1.0;
        assert!(p.validate().is_err());
        let mut p = base.clone();
        p.erd_depth[1] = [1.2, 0.0];
        assert!(p.validate().is_err());
        assert!(generate_trial(4, &base, 1).is_err());
    }

    #[test]
    fn pink_noise_basic_contract() {
        assert!(pink_noise(255, 1).is_err());
        let a = pink_noise(4096, 9).unwrap();
        assert_eq!(a, pink_noise(4096, 9).unwrap());
        assert_ne!(a, pink_noise(4096, 10).unwrap());
        let var = a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64;
        assert!((var - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trial_layout_and_events() {
        let p = GeneratorParams::default();
        let t = generate_trial(2, &p, 5).unwrap();
        assert_eq!(t.n_channels(), 24);
        assert_eq!(t.n_samples(), 10_000);
        assert_eq!(
            t.events,
            vec![
                Event { sample: 0, code: REST_ONSET_CODE },
                Event { sample: 6000, code: 12 }
            ]
        );
        assert_eq!(t, generate_trial(2, &p, 5).unwrap());
        assert_ne!(t.samples, generate_trial(2, &p, 6).unwrap().samples);
    }

    #[test]
    fn erd_jitter_leaves_rest_alone_and_varies_imagery() {
        let mut p = GeneratorParams::default();
        p.erd_jitter = 0.0;
        let mut q = p.clone();
        q.erd_jitter = 0.3;
        let rest = [0, 0, 0];
        assert_eq!(render_components(&p, &rest, 4).unwrap().sources, render_components(&q, &rest, 4).unwrap().sources);
        let twist = [3, 3, 3];
        assert_ne!(render_components(&p, &twist, 4).unwrap().sources, render_components(&q, &twist, 4).unwrap().sources);
    }

    #[test]
    fn mixing_is_linear_in_the_pattern() {
        let p = GeneratorParams::default();
        let comps = render_components(&p, &[1], 3).unwrap();
        let zero_noise = SessionComponents {
            sources: comps.sources.clone(),
            noise: vec![vec![0.0; comps.sources[0].len()]; 24],
        };
        let mut pats = p.source_patterns.clone();
        pats[1] = vec![0.0; 24];
        let once = mix(&pats, &zero_noise);
        pats[0].iter_mut().for_each(|v| *v *= 2.0);
        let twice = mix(&pats, &zero_noise);
        for (a, b) in once.iter().flatten().zip(twice.iter().flatten()) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn small_dataset_counts_and_shape() {
        let p = GeneratorParams::default();
        let s = generate_dataset(2, &p, 4, 7).unwrap();
        assert_eq!(s.trials.len(), 6);
        assert_eq!(s.dataset.len(), 8);
        assert_eq!(s.dataset.class_counts(), vec![2, 2, 2, 2]);
        assert_eq!((s.dataset.n_channels(), s.dataset.epoch_len()), (24, 750));
        assert_eq!(s.dataset.fs(), 250.0);
        assert!(s.dataset.subject_ids().iter().all(|&id| id == 7));
        let other = generate_dataset(2, &p, 5, 7).unwrap();
        assert_eq!(other.dataset.class_counts(), s.dataset.class_counts());
        assert_ne!(other.dataset.data(), s.dataset.data());
        assert_eq!(generate_dataset(2, &p, 4, 7).unwrap(), s);
        assert!(generate_dataset(0, &p, 4, 7).is_err());
    }
}
