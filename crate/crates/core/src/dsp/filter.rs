use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized second-order section `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b0 + z_inv * self.b1 + z2 * self.b2) / (1.0 + z_inv * self.a1 + z2 * self.a2)
    }

    /// Roots of `z² + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        [(-self.a1 + disc) / 2.0, (-self.a1 - disc) / 2.0]
    }

    /// Steady-state transposed-direct-form-II state for a unit step input,
    /// together with the section's DC gain.
    fn step_state(&self) -> ([f64; 2], f64) {
        let gain = (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2);
        let z2 = self.b2 - self.a2 * gain;
        let z1 = self.b1 - self.a1 * gain + z2;
        ([z1, z2], gain)
    }
}

/// Cascade of second-order sections at a fixed sampling rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiquadCascade {
    pub sections: Vec<Biquad>,
    pub fs: f64,
    pub description: String,
}

impl BiquadCascade {
    fn new(sections: Vec<Biquad>, fs: f64, description: String) -> Result<Self> {
        let c = BiquadCascade {
            sections,
            fs,
            description,
        };
        if let Some(r) = c.max_pole_radius().filter(|&r| !(r < 1.0)) {
            return Err(Error::invalid(
                "design",
                format!("{}: unstable section, pole radius {r}", c.description),
            ));
        }
        Ok(c)
    }

    pub fn max_pole_radius(&self) -> Option<f64> {
        self.sections
            .iter()
            .flat_map(|s| s.poles())
            .map(|p| p.norm())
            .reduce(f64::max)
    }

    /// Complex frequency response at `freq` Hz.
    pub fn response(&self, freq: f64) -> Complex64 {
        let w = 2.0 * PI * freq / self.fs;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
    }

    pub fn magnitude(&self, freq: f64) -> f64 {
        self.response(freq).norm()
    }

    /// Edge padding used by [`filtfilt`].
    pub fn padlen(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    /// Single causal pass (zero initial state).
    pub fn lfilter(&self, signal: &[f64]) -> Vec<f64> {
        let mut out = signal.to_vec();
        for s in &self.sections {
            run_section(s, &mut out, [0.0, 0.0]);
        }
        out
    }

    /// Causal pass starting from the steady state of a constant input `x0`.
    fn lfilter_steady(&self, data: &mut [f64], x0: f64) {
        let mut level = x0;
        for s in &self.sections {
            let (state, gain) = s.step_state();
            run_section(s, data, [state[0] * level, state[1] * level]);
            level *= gain;
        }
    }
}

fn run_section(s: &Biquad, data: &mut [f64], mut z: [f64; 2]) {
    for v in data.iter_mut() {
        let x = *v;
        let y = s.b0 * x + z[0];
        z[0] = s.b1 * x - s.a1 * y + z[1];
        z[1] = s.b2 * x - s.a2 * y;
        *v = y;
    }
}

fn check_band(low: f64, high: f64, fs: f64) -> Result<()> {
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::invalid("fs", format!("must be positive, got {fs}")));
    }
    let nyq = fs / 2.0;
    if !(low > 0.0 && low < high && high < nyq) {
        return Err(Error::invalid(
            "band",
            format!("need 0 < low < high < {nyq} Hz, got ({low}, {high})"),
        ));
    }
    Ok(())
}

/// Butterworth band-pass of prototype order `order` (even, 2..=8): analog
/// low-pass prototype, low-pass→band-pass transform, bilinear transform with
/// pre-warped edges. Yields `order` sections; the gain is 1 at the band centre
/// and `1/√2` at both edges.
pub fn design_butterworth_bandpass(low: f64, high: f64, fs: f64, order: usize) -> Result<BiquadCascade> {
    check_band(low, high, fs)?;
    if !matches!(order, 2 | 4 | 6 | 8) {
        return Err(Error::invalid(
            "order",
            format!("must be one of 2, 4, 6, 8, got {order}"),
        ));
    }
    let k = 2.0 * fs;
    let w1 = k * (PI * low / fs).tan();
    let w2 = k * (PI * high / fs).tan();
    let bw = w2 - w1;
    let w0_sq = w1 * w2;

    let mut poles = Vec::with_capacity(order);
    for i in 0..order {
        let theta = PI * (2 * i + order + 1) as f64 / (2 * order) as f64;
        let p = Complex64::from_polar(1.0, theta);
        // s² − p·bw·s + w0² = 0
        let pb = p * bw;
        let disc = (pb * pb - 4.0 * w0_sq).sqrt();
        for s in [(pb + disc) / 2.0, (pb - disc) / 2.0] {
            let z = (k + s) / (k - s);
            if z.im > 0.0 {
                poles.push(z);
            }
        }
    }
    if poles.len() != order {
        return Err(Error::invalid(
            "band",
            format!("degenerate pole layout for ({low}, {high}) at {fs} Hz"),
        ));
    }
    poles.sort_by(|a, b| a.arg().total_cmp(&b.arg()));

    // every section: zeros at z = ±1
    let mut sections: Vec<Biquad> = poles
        .iter()
        .map(|p| Biquad {
            b0: 1.0,
            b1: 0.0,
            b2: -1.0,
            a1: -2.0 * p.re,
            a2: p.norm_sqr(),
        })
        .collect();
    let centre = fs / PI * (w0_sq.sqrt() / k).atan();
    let raw = BiquadCascade {
        sections: sections.clone(),
        fs,
        description: String::new(),
    };
    let per_section = raw.magnitude(centre).recip().powf(1.0 / order as f64);
    for s in &mut sections {
        s.b0 *= per_section;
        s.b2 *= per_section;
    }
    BiquadCascade::new(
        sections,
        fs,
        format!("butterworth bandpass {low}-{high} Hz order {order}"),
    )
}

/// Single-section notch at `f0` with quality factor `q`; unit gain at DC and
/// Nyquist.
pub fn design_notch(f0: f64, q: f64, fs: f64) -> Result<BiquadCascade> {
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::invalid("fs", format!("must be positive, got {fs}")));
    }
    if !(f0 > 0.0 && f0 < fs / 2.0) {
        return Err(Error::invalid(
            "f0",
            format!("must lie in (0, {}) Hz, got {f0}", fs / 2.0),
        ));
    }
    if !(q > 0.0) {
        return Err(Error::invalid("q", format!("must be positive, got {q}")));
    }
    let w0 = 2.0 * PI * f0 / fs;
    let beta = (w0 / q / 2.0).tan();
    let gain = 1.0 / (1.0 + beta);
    let c = w0.cos();
    let section = Biquad {
        b0: gain,
        b1: -2.0 * gain * c,
        b2: gain,
        a1: -2.0 * gain * c,
        a2: 2.0 * gain - 1.0,
    };
    BiquadCascade::new(vec![section], fs, format!("notch {f0} Hz Q {q}"))
}

/// Zero-phase filtering: odd-reflection padding of `padlen` samples at both
/// ends, forward pass, reverse, second pass, reverse. Each pass starts from
/// the steady state matching its first sample.
pub fn filtfilt(cascade: &BiquadCascade, signal: &[f64]) -> Result<Vec<f64>> {
    let pad = cascade.padlen();
    let n = signal.len();
    if n <= pad {
        return Err(Error::invalid(
            "signal",
            format!("length {n} too short for edge padding of {pad} samples"),
        ));
    }
    let mut ext = Vec::with_capacity(n + 2 * pad);
    let (first, last) = (signal[0], signal[n - 1]);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
    ext.extend_from_slice(signal);
    ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

    let x0 = ext[0];
    cascade.lfilter_steady(&mut ext, x0);
    ext.reverse();
    let y0 = ext[0];
    cascade.lfilter_steady(&mut ext, y0);
    ext.reverse();
    Ok(ext[pad..pad + n].to_vec())
}
