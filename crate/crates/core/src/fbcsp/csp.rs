use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalue below which a covariance is treated as singular.
pub const SPD_EPS: f64 = 1e-10;
/// Ridge added to a covariance that fails the [`SPD_EPS`] test.
pub const RIDGE: f64 = 1e-9;

/// Spatial filters of one band, strongest-target first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CspModel {
    pub band: (f64, f64),
    /// `2·m_pairs` filters, each of length C.
    pub filters: Vec<Vec<f64>>,
    /// Generalized eigenvalue of each filter, descending.
    pub eigenvalues: Vec<f64>,
    /// Number of input covariances that needed the ridge.
    pub ridged: usize,
}

fn centered_scatter<R: AsRef<[f64]>>(epoch: &[R]) -> Result<DMatrix<f64>> {
    let c = epoch.len();
    if c == 0 {
        return Err(Error::Shape("covariance of an epoch with no channels".into()));
    }
    let t = epoch[0].as_ref().len();
    if t == 0 || epoch.iter().any(|r| r.as_ref().len() != t) {
        return Err(Error::Shape("epoch rows must share a positive length".into()));
    }
    let centered: Vec<Vec<f64>> = epoch
        .iter()
        .map(|r| {
            let r = r.as_ref();
            let m = r.iter().sum::<f64>() / t as f64;
            r.iter().map(|v| v - m).collect()
        })
        .collect();
    let mut s = DMatrix::zeros(c, c);
    for i in 0..c {
        for j in 0..=i {
            let v: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(s)
}

/// `X·Xᵀ / trace(X·Xᵀ)` of the channel-centered epoch (rows = channels).
pub fn trace_normalized_covariance<R: AsRef<[f64]>>(epoch: &[R]) -> Result<DMatrix<f64>> {
    let s = centered_scatter(epoch)?;
    let tr = s.trace();
    if !(tr > 0.0) {
        return Err(Error::Data("zero-energy epoch has no normalized covariance".into()));
    }
    Ok(s / tr)
}

/// Channel-centered scatter `X·Xᵀ`; `wᵀ S w` is then the (unnormalized)
/// variance of the filtered signal `wᵀX`.
pub fn scatter_matrix<R: AsRef<[f64]>>(epoch: &[R]) -> Result<DMatrix<f64>> {
    centered_scatter(epoch)
}

fn ensure_spd(m: &DMatrix<f64>, ridged: &mut usize) -> DMatrix<f64> {
    let min = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min > SPD_EPS {
        m.clone()
    } else {
        *ridged += 1;
        log::warn!("covariance eigenvalue {min:e} below {SPD_EPS:e}; adding ridge {RIDGE:e}·I");
        m + DMatrix::identity(m.nrows(), m.ncols()) * RIDGE
    }
}

/// Generalized eigenproblem `Ct·w = λ·(Ct + Cr)·w` by whitening the composite
/// and diagonalizing the whitened target; keeps `m_pairs` filters from each
/// end of the spectrum. Every filter satisfies `wᵀ(Ct+Cr)w = 1`.
pub fn csp_fit(
    cov_target: &DMatrix<f64>,
    cov_rest: &DMatrix<f64>,
    m_pairs: usize,
    band: (f64, f64),
) -> Result<CspModel> {
    let (full, ridged) = csp_fit_full(cov_target, cov_rest)?;
    let c = full.len();
    if m_pairs == 0 || 2 * m_pairs > c {
        return Err(Error::invalid(
            "m_pairs",
            format!("need 1 ≤ 2·m_pairs ≤ {c} channels, got m_pairs = {m_pairs}"),
        ));
    }
    let keep: Vec<usize> = (0..m_pairs).chain(c - m_pairs..c).collect();
    Ok(CspModel {
        band,
        filters: keep.iter().map(|&i| full[i].1.clone()).collect(),
        eigenvalues: keep.iter().map(|&i| full[i].0).collect(),
        ridged,
    })
}

/// Every (λ, w) pair, λ descending, plus the number of ridged inputs.
pub fn csp_fit_full(
    cov_target: &DMatrix<f64>,
    cov_rest: &DMatrix<f64>,
) -> Result<(Vec<(f64, Vec<f64>)>, usize)> {
    let c = cov_target.nrows();
    if cov_target.shape() != (c, c) || cov_rest.shape() != (c, c) || c == 0 {
        return Err(Error::Shape(format!(
            "csp needs two equal square covariances, got {:?} and {:?}",
            cov_target.shape(),
            cov_rest.shape()
        )));
    }
    let mut ridged = 0;
    let ct = ensure_spd(cov_target, &mut ridged);
    let cr = ensure_spd(cov_rest, &mut ridged);
    let composite = &ct + &cr;
    let eig = SymmetricEigen::new(composite.clone());
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&v| !(v > SPD_EPS)) {
        return Err(Error::Data(format!(
            "composite covariance not positive definite (eigenvalue {bad:e})"
        )));
    }
    // P = D^{-1/2} Uᵀ, so P·(Ct+Cr)·Pᵀ = I
    let d_inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let p = d_inv_sqrt * eig.eigenvectors.transpose();
    let mut s = &p * &ct * p.transpose();
    s = (&s + s.transpose()) * 0.5;
    let inner = SymmetricEigen::new(s);
    let w_all = p.transpose() * inner.eigenvectors;
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..c)
        .map(|i| (inner.eigenvalues[i], w_all.column(i).iter().cloned().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok((pairs, ridged))
}

impl CspModel {
    /// `ln(var_i / Σ var)` of each filter, given the epoch's scatter matrix.
    pub fn features_from_scatter(&self, scatter: &DMatrix<f64>) -> Result<Vec<f64>> {
        let c = scatter.nrows();
        let vars: Vec<f64> = self
            .filters
            .iter()
            .map(|w| {
                let mut q = 0.0;
                for i in 0..c {
                    let mut row = 0.0;
                    for j in 0..c {
                        row += scatter[(i, j)] * w[j];
                    }
                    q += w[i] * row;
                }
                q.max(0.0)
            })
            .collect();
        let total: f64 = vars.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Data(format!(
                "all CSP filters of band {}-{} Hz have zero variance",
                self.band.0, self.band.1
            )));
        }
        Ok(vars.iter().map(|v| (v / total).max(f64::MIN_POSITIVE).ln()).collect())
    }
}

/// Log normalized variance of the epoch (rows = channels, already
/// band-filtered) through each filter.
pub fn csp_features<R: AsRef<[f64]>>(model: &CspModel, epoch: &[R]) -> Result<Vec<f64>> {
    if model.filters.first().map(Vec::len) != Some(epoch.len()) {
        return Err(Error::Shape(format!(
            "CSP filters expect {} channels, epoch has {}",
            model.filters.first().map_or(0, Vec::len),
            epoch.len()
        )));
    }
    model.features_from_scatter(&scatter_matrix(epoch)?)
}
