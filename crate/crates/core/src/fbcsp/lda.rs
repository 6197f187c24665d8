use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary linear discriminant: score `wᵀx + b`, positive means class 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub w: Vec<f64>,
    pub b: f64,
    /// Shrinkage intensity actually used, in [0, 1].
    pub gamma: f64,
}

impl LdaModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b
    }
}

/// How much to shrink the pooled covariance toward `(trace/F)·I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shrinkage {
    /// Analytic Ledoit–Wolf estimate.
    LedoitWolf,
    Fixed(f64),
}

/// Ledoit–Wolf intensity for rows of `z`, which must already be centered.
pub fn ledoit_wolf_gamma(z: &DMatrix<f64>) -> f64 {
    let (n, f) = z.shape();
    let nf = n as f64;
    let s = z.transpose() * z / nf;
    let mu = s.trace() / f as f64;
    // ‖S − μI‖² / F
    let mut delta = s.iter().map(|v| v * v).sum::<f64>() - 2.0 * mu * s.trace() + f as f64 * mu * mu;
    delta /= f as f64;
    // average ‖z zᵀ − S‖² / F over rows, scaled by 1/n
    let z2 = z.map(|v| v * v);
    let beta_sum: f64 = (z2.transpose() * &z2).iter().sum();
    let s_sq: f64 = s.iter().map(|v| v * v).sum();
    let beta = (beta_sum / nf - s_sq) / (f as f64 * nf);
    let beta = beta.min(delta);
    if delta == 0.0 || beta <= 0.0 {
        0.0
    } else {
        (beta / delta).clamp(0.0, 1.0)
    }
}

/// Shrinkage LDA on rows of `x` with binary labels (`false` = class 0).
pub fn shrinkage_lda_fit(x: &DMatrix<f64>, y: &[bool], shrinkage: Shrinkage) -> Result<LdaModel> {
    let (n, f) = x.shape();
    if f == 0 {
        return Err(Error::invalid("x", "no features"));
    }
    if y.len() != n {
        return Err(Error::Shape(format!("{n} feature rows for {} labels", y.len())));
    }
    if n < 4 {
        return Err(Error::invalid("x", format!("need at least 4 examples, got {n}")));
    }
    let n1 = y.iter().filter(|&&v| v).count();
    let n0 = n - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::Data("shrinkage LDA needs both classes present".into()));
    }
    let mut mu = [DVector::zeros(f), DVector::zeros(f)];
    for (i, &yi) in y.iter().enumerate() {
        mu[yi as usize] += x.row(i).transpose();
    }
    mu[0] /= n0 as f64;
    mu[1] /= n1 as f64;
    let mut z = x.clone();
    for (i, &yi) in y.iter().enumerate() {
        let m = &mu[yi as usize];
        for j in 0..f {
            z[(i, j)] -= m[j];
        }
    }
    let gamma = match shrinkage {
        Shrinkage::LedoitWolf => ledoit_wolf_gamma(&z),
        Shrinkage::Fixed(g) if (0.0..=1.0).contains(&g) => g,
        Shrinkage::Fixed(g) => {
            return Err(Error::invalid("gamma", format!("must lie in [0, 1], got {g}")))
        }
    };
    let s = z.transpose() * &z / n as f64;
    let target = s.trace() / f as f64;
    let shrunk = &s * (1.0 - gamma) + DMatrix::identity(f, f) * (gamma * target);
    let diff = &mu[1] - &mu[0];
    let w = shrunk
        .clone()
        .cholesky()
        .map(|c| c.solve(&diff))
        .or_else(|| shrunk.lu().solve(&diff))
        .ok_or_else(|| Error::Data("pooled covariance is singular".into()))?;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("LDA weight vector".into()));
    }
    let b = -w.dot(&(&mu[1] + &mu[0])) / 2.0;
    Ok(LdaModel {
        w: w.iter().cloned().collect(),
        b,
        gamma,
    })
}
