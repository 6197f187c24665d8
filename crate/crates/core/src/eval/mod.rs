//! Cross-validation, confusion matrices and model comparison.

mod compare;
mod confusion;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use compare::{compare, sample_std, CompareConfig, Comparison, ComparisonTable, SubjectSpec};
pub use confusion::ConfusionMatrix;

use crate::data::EpochedDataset;
use crate::error::{Error, Result};
use crate::fbcsp::{default_bands, fbcsp_fit, FbcspModel, DEFAULT_M_PAIRS};
use crate::model::{train, ArchitectureConfig, NetKind, TrainConfig, TrainedNetwork};
use crate::util::{derive_seed, write_atomic};

/// `k` disjoint, sorted test-index sets covering `0..labels.len()`. Each
/// class is shuffled on its own and dealt round robin, continuing where the
/// previous class stopped so fold sizes stay within one of each other.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid("k", format!("need at least 2 folds, got {k}")));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < k {
            return Err(Error::Data(format!(
                "class {c} has {} examples, fewer than {k} folds",
                members.len()
            )));
        }
        members.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, c as u64)));
        for m in members {
            folds[next].push(m);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Anything that assigns a class index to each epoch.
pub trait Classifier {
    fn predict_labels(&self, ds: &EpochedDataset) -> Result<Vec<usize>>;
}

impl Classifier for TrainedNetwork<f32> {
    fn predict_labels(&self, ds: &EpochedDataset) -> Result<Vec<usize>> {
        Ok(self.predict(ds)?.labels)
    }
}

impl Classifier for TrainedNetwork<f64> {
    fn predict_labels(&self, ds: &EpochedDataset) -> Result<Vec<usize>> {
        Ok(self.predict(ds)?.labels)
    }
}

impl Classifier for FbcspModel {
    fn predict_labels(&self, ds: &EpochedDataset) -> Result<Vec<usize>> {
        Ok(self.predict(ds)?.labels)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate(model: &dyn Classifier, test: &EpochedDataset) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty test set".into()));
    }
    let pred = model.predict_labels(test)?;
    let confusion = ConfusionMatrix::from_predictions(test.labels(), &pred, test.class_names())?;
    Ok(Evaluation {
        accuracy: confusion.accuracy(),
        confusion,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Bfr,
    Shallow,
    Fbcsp,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Bfr, Method::Shallow, Method::Fbcsp];

    pub fn short_name(self) -> &'static str {
        match self {
            Method::Bfr => "bfr",
            Method::Shallow => "shallow",
            Method::Fbcsp => "fbcsp",
        }
    }

    pub fn net_kind(self) -> Option<NetKind> {
        match self {
            Method::Bfr => Some(NetKind::BfrCnn),
            Method::Shallow => Some(NetKind::ShallowConvNet),
            Method::Fbcsp => None,
        }
    }

    /// Fits on `train_set`. Networks use `cfg` with its seed replaced by `seed`.
    pub fn fit(self, train_set: &EpochedDataset, cfg: &TrainConfig, seed: u64) -> Result<FittedModel> {
        match self.net_kind() {
            Some(kind) => {
                let arch = ArchitectureConfig::new(
                    train_set.n_channels(),
                    train_set.epoch_len(),
                    train_set.fs(),
                    train_set.n_classes(),
                );
                let cfg = TrainConfig { rng_seed: seed, ..cfg.clone() };
                Ok(FittedModel::Net(Box::new(train(kind, &arch, train_set, &cfg)?)))
            }
            None => Ok(FittedModel::Fbcsp(fbcsp_fit(train_set, &default_bands(), DEFAULT_M_PAIRS)?)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Bfr => "BFR-CNN",
            Method::Shallow => "ShallowConvNet",
            Method::Fbcsp => "FBCSP+RLDA",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bfr" | "bfr-cnn" => Ok(Method::Bfr),
            "shallow" | "shallowconvnet" => Ok(Method::Shallow),
            "fbcsp" | "fbcsp+rlda" => Ok(Method::Fbcsp),
            other => Err(Error::invalid(
                "model",
                format!("unknown model `{other}` (expected bfr, shallow or fbcsp)"),
            )),
        }
    }
}

/// A trained network or an FBCSP model, as stored in a model file.
#[derive(Clone, Debug, PartialEq)]
pub enum FittedModel {
    Net(Box<TrainedNetwork<f32>>),
    Fbcsp(FbcspModel),
}

impl FittedModel {
    pub fn method(&self) -> Method {
        match self {
            FittedModel::Net(n) => match n.kind {
                NetKind::BfrCnn => Method::Bfr,
                NetKind::ShallowConvNet => Method::Shallow,
            },
            FittedModel::Fbcsp(_) => Method::Fbcsp,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        match self {
            FittedModel::Net(n) => n.save_checkpoint(),
            FittedModel::Fbcsp(m) => m.to_bytes(),
        }
    }

    /// Dispatches on the file's magic bytes.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(b"MIEEGCSP") {
            Ok(FittedModel::Fbcsp(FbcspModel::from_bytes(bytes)?))
        } else {
            Ok(FittedModel::Net(Box::new(TrainedNetwork::load_checkpoint(bytes)?)))
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

impl Classifier for FittedModel {
    fn predict_labels(&self, ds: &EpochedDataset) -> Result<Vec<usize>> {
        match self {
            FittedModel::Net(n) => n.predict_labels(ds),
            FittedModel::Fbcsp(m) => m.predict_labels(ds),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub method: Method,
    pub fold_accuracies: Vec<f64>,
    /// Sum of the per-fold test confusion matrices.
    pub confusion: ConfusionMatrix,
}

impl CvResult {
    pub fn mean_accuracy(&self) -> f64 {
        self.fold_accuracies.iter().sum::<f64>() / self.fold_accuracies.len() as f64
    }
}

/// Stratified k-fold CV. Fold `f` trains with seed `derive_seed(seed, f)`.
pub fn cross_validate(
    method: Method,
    ds: &EpochedDataset,
    k: usize,
    seed: u64,
    cfg: &TrainConfig,
) -> Result<CvResult> {
    let folds = stratified_kfold(ds.labels(), k, seed)?;
    let mut confusion = ConfusionMatrix::new(ds.class_names().to_vec());
    let mut fold_accuracies = Vec::with_capacity(k);
    for (f, test_idx) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = (0..ds.len()).filter(|i| test_idx.binary_search(i).is_err()).collect();
        let model = method.fit(&ds.subset(&train_idx)?, cfg, derive_seed(seed, f as u64))?;
        let ev = evaluate(&model, &ds.subset(test_idx)?)?;
        log::info!("{method} fold {}/{k}: accuracy {:.3}", f + 1, ev.accuracy);
        fold_accuracies.push(ev.accuracy);
        confusion.add(&ev.confusion)?;
    }
    Ok(CvResult {
        method,
        fold_accuracies,
        confusion,
    })
}

/// The `metrics.json` document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub model: String,
    pub dataset: String,
    pub folds: usize,
    pub accuracy_mean: f64,
    pub accuracy_per_fold: Vec<f64>,
    pub confusion: Vec<Vec<u64>>,
}

impl Metrics {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        write_atomic(path, &bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn balanced_folds() {
        let labels: Vec<usize> = (0..200).map(|i| i % 4).collect();
        let folds = stratified_kfold(&labels, 5, 3).unwrap();
        assert_eq!(folds.len(), 5);
        for f in &folds {
            assert_eq!(f.len(), 40);
            for c in 0..4 {
                assert_eq!(f.iter().filter(|&&i| labels[i] == c).count(), 10);
            }
        }
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..200).collect::<Vec<_>>());
        assert_eq!(folds, stratified_kfold(&labels, 5, 3).unwrap());
        assert_ne!(folds, stratified_kfold(&labels, 5, 4).unwrap());
    }

    #[test]
    fn fold_errors() {
        assert!(stratified_kfold(&[0, 0, 1, 1], 3, 1).is_err());
        assert!(stratified_kfold(&[0, 1], 1, 1).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_and_stay_balanced(
            counts in prop::collection::vec(5usize..30, 1..5),
            k in 2usize..6,
            seed in any::<u64>(),
        ) {
            let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
            let folds = stratified_kfold(&labels, k, seed).unwrap();
            let mut all = folds.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            for c in 0..counts.len() {
                let per: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == c).count()).collect();
                prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
            }
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }

    struct Fixed(Vec<usize>);

    impl Classifier for Fixed {
        fn predict_labels(&self, ds: &EpochedDataset) -> Result<Vec<usize>> {
            Ok(self.0.iter().cycle().take(ds.len()).copied().collect())
        }
    }

    fn balanced(n_per_class: usize) -> EpochedDataset {
        let mut ds = EpochedDataset::empty(
            100.0,
            vec!["a".into()],
            (0..4).map(|i| format!("k{i}")).collect(),
            2,
        )
        .unwrap();
        for i in 0..4 * n_per_class {
            ds.push(&[i as f32, 0.0], i % 4, i as u64, 0).unwrap();
        }
        ds
    }

    #[test]
    fn oracle_and_constant_predictors() {
        let ds = balanced(5);
        let oracle = evaluate(&Fixed(ds.labels().to_vec()), &ds).unwrap();
        assert_eq!(oracle.accuracy, 1.0);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(oracle.confusion.counts[i][j], if i == j { 5 } else { 0 });
            }
        }
        let constant = evaluate(&Fixed(vec![2]), &ds).unwrap();
        assert_eq!(constant.accuracy, 0.25);
        assert_eq!(constant.confusion.row_sums(), vec![5; 4]);
        let empty = ds.subset(&[]).unwrap();
        assert!(evaluate(&Fixed(vec![0]), &empty).is_err());
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.short_name().parse::<Method>().unwrap(), m);
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("lstm".parse::<Method>().is_err());
    }
}
