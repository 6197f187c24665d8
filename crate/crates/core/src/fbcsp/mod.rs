//! Filter-bank common spatial patterns with shrinkage LDA, one-vs-rest.

mod csp;
mod lda;

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use csp::{
    csp_features, csp_fit, csp_fit_full, scatter_matrix, trace_normalized_covariance, CspModel,
    RIDGE, SPD_EPS,
};
pub use lda::{ledoit_wolf_gamma, shrinkage_lda_fit, LdaModel, Shrinkage};

use crate::data::EpochedDataset;
use crate::dsp::{design_butterworth_bandpass, filtfilt};
use crate::error::{Error, Result};
use crate::nn::container::{decode, encode};
use crate::nn::Tensor;
use crate::util::{argmax, write_atomic};

const MODEL_MAGIC: &[u8; 8] = b"MIEEGCSP";

/// Nine 4 Hz bands from 4 to 40 Hz.
pub fn default_bands() -> Vec<(f64, f64)> {
    (1..=9).map(|i| (4.0 * i as f64, 4.0 * i as f64 + 4.0)).collect()
}

pub const DEFAULT_M_PAIRS: usize = 2;

/// One class against the others: CSP filters per band and the LDA on the
/// concatenated log-variance features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvrModel {
    pub csp: Vec<CspModel>,
    pub lda: LdaModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbcspModel {
    pub bands: Vec<(f64, f64)>,
    pub m_pairs: usize,
    pub fs: f64,
    pub n_channels: usize,
    pub epoch_len: usize,
    pub class_names: Vec<String>,
    /// Indexed by class.
    pub classes: Vec<OvrModel>,
}

/// Channel-centered scatter matrix of every epoch in every band,
/// `[band][epoch]`.
fn band_scatters(ds: &EpochedDataset, bands: &[(f64, f64)]) -> Result<Vec<Vec<DMatrix<f64>>>> {
    let filters = bands
        .iter()
        .map(|&(lo, hi)| design_butterworth_bandpass(lo, hi, ds.fs(), 4))
        .collect::<Result<Vec<_>>>()?;
    let per_epoch: Vec<Vec<DMatrix<f64>>> = (0..ds.len())
        .into_par_iter()
        .map(|i| {
            let rows = ds.epoch_rows(i);
            filters
                .iter()
                .map(|f| {
                    let filtered = rows.iter().map(|r| filtfilt(f, r)).collect::<Result<Vec<_>>>()?;
                    scatter_matrix(&filtered)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..bands.len())
        .map(|b| per_epoch.iter().map(|e| e[b].clone()).collect())
        .collect())
}

fn mean_normalized(scatters: &[DMatrix<f64>], members: impl Iterator<Item = usize>) -> Result<DMatrix<f64>> {
    let c = scatters[0].nrows();
    let mut acc = DMatrix::zeros(c, c);
    let mut n = 0;
    for i in members {
        let s = &scatters[i];
        let tr = s.trace();
        if !(tr > 0.0) {
            return Err(Error::Data(format!("epoch {i} has zero energy in a filter band")));
        }
        acc += s / tr;
        n += 1;
    }
    Ok(acc / n as f64)
}

/// Fits one one-vs-rest model per class. Requires ≥ 2 epochs per class.
pub fn fbcsp_fit(train: &EpochedDataset, bands: &[(f64, f64)], m_pairs: usize) -> Result<FbcspModel> {
    if bands.is_empty() {
        return Err(Error::invalid("bands", "filter bank is empty"));
    }
    let counts = train.class_counts();
    if let Some(k) = counts.iter().position(|&c| c < 2) {
        return Err(Error::Data(format!(
            "class {} has {} training epochs, FBCSP needs at least 2",
            train.class_names()[k],
            counts[k]
        )));
    }
    let scatters = band_scatters(train, bands)?;
    let labels = train.labels();
    let classes = (0..train.n_classes())
        .map(|k| {
            let csp = bands
                .iter()
                .zip(&scatters)
                .map(|(&band, s)| {
                    let ct = mean_normalized(s, (0..labels.len()).filter(|&i| labels[i] == k))?;
                    let cr = mean_normalized(s, (0..labels.len()).filter(|&i| labels[i] != k))?;
                    csp_fit(&ct, &cr, m_pairs, band)
                })
                .collect::<Result<Vec<_>>>()?;
            let feats = features(&csp, &scatters, train.len())?;
            let y: Vec<bool> = labels.iter().map(|&l| l == k).collect();
            let lda = shrinkage_lda_fit(&feats, &y, Shrinkage::LedoitWolf)?;
            Ok(OvrModel { csp, lda })
        })
        .collect::<Result<Vec<_>>>()?;
    let ridged: usize = classes.iter().flat_map(|c| &c.csp).map(|m| m.ridged).sum();
    if ridged > 0 {
        log::warn!("FBCSP: {ridged} covariance(s) needed the {RIDGE:e} ridge");
    }
    Ok(FbcspModel {
        bands: bands.to_vec(),
        m_pairs,
        fs: train.fs(),
        n_channels: train.n_channels(),
        epoch_len: train.epoch_len(),
        class_names: train.class_names().to_vec(),
        classes,
    })
}

/// `[epoch][band features…]` for one class model.
fn features(csp: &[CspModel], scatters: &[Vec<DMatrix<f64>>], n: usize) -> Result<DMatrix<f64>> {
    let width: usize = csp.iter().map(|m| m.filters.len()).sum();
    let mut x = DMatrix::zeros(n, width);
    for i in 0..n {
        let mut col = 0;
        for (m, s) in csp.iter().zip(scatters) {
            for v in m.features_from_scatter(&s[i])? {
                x[(i, col)] = v;
                col += 1;
            }
        }
    }
    Ok(x)
}

/// Class decisions and one-vs-rest scores (`[n][K]`).
#[derive(Clone, Debug, PartialEq)]
pub struct FbcspPredictions {
    pub labels: Vec<usize>,
    pub scores: Vec<Vec<f64>>,
}

impl FbcspModel {
    pub fn feature_len(&self) -> usize {
        self.bands.len() * 2 * self.m_pairs
    }

    /// Ridge fallbacks taken while fitting.
    pub fn ridged(&self) -> usize {
        self.classes.iter().flat_map(|c| &c.csp).map(|m| m.ridged).sum()
    }

    /// Argmax of the one-vs-rest LDA scores, ties toward the lowest index.
    pub fn predict(&self, ds: &EpochedDataset) -> Result<FbcspPredictions> {
        if ds.n_channels() != self.n_channels || ds.epoch_len() != self.epoch_len {
            return Err(Error::Incompatible(format!(
                "FBCSP model expects {}×{} epochs, got {}×{}",
                self.n_channels,
                self.epoch_len,
                ds.n_channels(),
                ds.epoch_len()
            )));
        }
        if (ds.fs() - self.fs).abs() > 1e-9 * self.fs {
            return Err(Error::Incompatible(format!(
                "FBCSP model fitted at {} Hz, data at {} Hz",
                self.fs,
                ds.fs()
            )));
        }
        let scatters = band_scatters(ds, &self.bands)?;
        let per_class = self
            .classes
            .iter()
            .map(|c| {
                let x = features(&c.csp, &scatters, ds.len())?;
                Ok((0..ds.len())
                    .map(|i| c.lda.score(x.row(i).transpose().as_slice()))
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let scores: Vec<Vec<f64>> = (0..ds.len())
            .map(|i| per_class.iter().map(|s| s[i]).collect())
            .collect();
        Ok(FbcspPredictions {
            labels: scores.iter().map(|s| decide(s)).collect(),
            scores,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header::from(self);
        let mut blocks = Vec::new();
        for c in &self.classes {
            for m in &c.csp {
                let flat: Vec<f64> = m.filters.iter().flatten().copied().collect();
                blocks.push(Tensor::new(vec![m.filters.len(), self.n_channels], flat)?);
                blocks.push(Tensor::new(vec![m.eigenvalues.len()], m.eigenvalues.clone())?);
            }
            blocks.push(Tensor::new(vec![c.lda.w.len()], c.lda.w.clone())?);
            blocks.push(Tensor::new(vec![2], vec![c.lda.b, c.lda.gamma])?);
        }
        let refs: Vec<&Tensor<f64>> = blocks.iter().collect();
        Ok(encode(MODEL_MAGIC, &serde_json::to_string(&header)?, &refs))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let decoded = decode::<f64>(bytes, MODEL_MAGIC, "FBCSP model")?;
        let h: Header = serde_json::from_str(&decoded.header)?;
        let per_class = 2 * h.bands.len() + 2;
        if decoded.blocks.len() != per_class * h.class_names.len() {
            return Err(Error::Incompatible(format!(
                "FBCSP model file holds {} blocks, header implies {}",
                decoded.blocks.len(),
                per_class * h.class_names.len()
            )));
        }
        let mut blocks = decoded.blocks.into_iter();
        let mut classes = Vec::new();
        for ridged in &h.ridged {
            let mut csp = Vec::new();
            for (&band, &r) in h.bands.iter().zip(ridged) {
                let f = blocks.next().expect("counted");
                let e = blocks.next().expect("counted");
                if f.shape() != [2 * h.m_pairs, h.n_channels] || e.len() != 2 * h.m_pairs {
                    return Err(Error::Incompatible("CSP filter block has the wrong shape".into()));
                }
                csp.push(CspModel {
                    band,
                    filters: f.data().chunks(h.n_channels).map(<[f64]>::to_vec).collect(),
                    eigenvalues: e.into_data(),
                    ridged: r,
                });
            }
            let w = blocks.next().expect("counted").into_data();
            let bg = blocks.next().expect("counted").into_data();
            if w.len() != h.bands.len() * 2 * h.m_pairs || bg.len() != 2 {
                return Err(Error::Incompatible("LDA block has the wrong shape".into()));
            }
            classes.push(OvrModel {
                csp,
                lda: LdaModel { w, b: bg[0], gamma: bg[1] },
            });
        }
        Ok(FbcspModel {
            bands: h.bands,
            m_pairs: h.m_pairs,
            fs: h.fs,
            n_channels: h.n_channels,
            epoch_len: h.epoch_len,
            class_names: h.class_names,
            classes,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Index of the largest score; the first one wins a tie.
pub fn decide(scores: &[f64]) -> usize {
    argmax(scores)
}

#[derive(Serialize, Deserialize)]
struct Header {
    bands: Vec<(f64, f64)>,
    m_pairs: usize,
    fs: f64,
    n_channels: usize,
    epoch_len: usize,
    class_names: Vec<String>,
    /// `[class][band]` ridge counts.
    ridged: Vec<Vec<usize>>,
}

impl From<&FbcspModel> for Header {
    fn from(m: &FbcspModel) -> Self {
        Header {
            bands: m.bands.clone(),
            m_pairs: m.m_pairs,
            fs: m.fs,
            n_channels: m.n_channels,
            epoch_len: m.epoch_len,
            class_names: m.class_names.clone(),
            ridged: m
                .classes
                .iter()
                .map(|c| c.csp.iter().map(|b| b.ridged).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bank() {
        let b = default_bands();
        assert_eq!(b.len(), 9);
        assert_eq!(b[0], (4.0, 8.0));
        assert_eq!(b[8], (36.0, 40.0));
    }

    #[test]
    fn decision_rule() {
        assert_eq!(decide(&[0.5, -1.0, -1.0, -1.0]), 0);
        assert_eq!(decide(&[0.2, 0.2, 0.2, 0.2]), 0);
        assert_eq!(decide(&[-3.0, 0.1, 0.1, -1.0]), 1);
    }

    /// Channel pairs whose relative 10 Hz power depends on the class.
    fn toy(n_per_class: usize, seed: u64) -> EpochedDataset {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (c, t, fs) = (6, 250, 125.0);
        let mut ds = EpochedDataset::empty(
            fs,
            (0..c).map(|i| format!("ch{i}")).collect(),
            (0..3).map(|i| format!("k{i}")).collect(),
            t,
        )
        .unwrap();
        for i in 0..3 * n_per_class {
            let k = i % 3;
            let phase: f64 = rng.random_range(0.0..6.28);
            let mut e = Vec::with_capacity(c * t);
            for ch in 0..c {
                let amp = if ch == 2 * k { 3.0 } else { 1.0 };
                for s in 0..t {
                    let tt = s as f64 / fs;
                    let v = amp * (2.0 * std::f64::consts::PI * 10.0 * tt + phase + ch as f64).sin()
                        + rng.random_range(-0.5..0.5);
                    e.push(v as f32);
                }
            }
            ds.push(&e, k, i as u64, 0).unwrap();
        }
        ds
    }

    #[test]
    fn fits_toy_and_round_trips() {
        let ds = toy(12, 1);
        let bands = vec![(8.0, 12.0), (16.0, 20.0)];
        let m = fbcsp_fit(&ds, &bands, 2).unwrap();
        assert_eq!(m.feature_len(), 8);
        assert!(m.classes.iter().all(|c| c.lda.w.len() == 8));
        assert!(m.classes.iter().all(|c| (0.0..=1.0).contains(&c.lda.gamma)));
        let p = m.predict(&ds).unwrap();
        let acc = p.labels.iter().zip(ds.labels()).filter(|(a, b)| a == b).count() as f64 / ds.len() as f64;
        assert!(acc > 0.9, "{acc}");

        let again = fbcsp_fit(&ds, &bands, 2).unwrap();
        assert_eq!(again, m);

        let bytes = m.to_bytes().unwrap();
        let back = FbcspModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict(&ds).unwrap(), p);
        let mut bad = bytes.clone();
        let mid = bad.len() / 2;
        bad[mid] ^= 0x40;
        assert!(matches!(FbcspModel::from_bytes(&bad), Err(Error::Integrity { .. })));
    }

    #[test]
    fn prediction_ignores_positive_scaling() {
        let ds = toy(6, 2);
        let m = fbcsp_fit(&ds, &[(8.0, 12.0)], 1).unwrap();
        let mut scaled = EpochedDataset::empty(
            ds.fs(),
            ds.channel_names().to_vec(),
            ds.class_names().to_vec(),
            ds.epoch_len(),
        )
        .unwrap();
        for i in 0..ds.len() {
            let e: Vec<f32> = ds.epoch(i).iter().map(|v| v * 7.5).collect();
            scaled.push(&e, ds.labels()[i], ds.trial_ids()[i], 0).unwrap();
        }
        assert_eq!(m.predict(&ds).unwrap().labels, m.predict(&scaled).unwrap().labels);
    }

    #[test]
    fn too_few_epochs_per_class() {
        let ds = toy(2, 3);
        let one: Vec<usize> = (0..ds.len()).filter(|&i| !(ds.labels()[i] == 0 && i > 0)).collect();
        let sub = ds.subset(&one).unwrap();
        assert!(fbcsp_fit(&sub, &[(8.0, 12.0)], 1).is_err());
    }
}
