use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{cross_validate, ConfusionMatrix, CvResult, Method, Metrics};
use crate::error::{Error, Result};
use crate::model::TrainConfig;
use crate::synth::{generate_dataset, GeneratorParams};
use crate::util::{derive_seed, write_atomic};

/// One synthetic subject: a generator seed and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectSpec {
    pub label: String,
    pub seed: u64,
    pub params: GeneratorParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareConfig {
    pub subjects: Vec<SubjectSpec>,
    pub methods: Vec<Method>,
    pub cv: usize,
    pub seed: u64,
    pub n_per_class: usize,
    pub train: TrainConfig,
}

impl CompareConfig {
    /// Subjects `S1..Sn` with generator seeds `seed, seed + 1, …`.
    pub fn synthetic(n_subjects: usize, seed: u64, params: &GeneratorParams) -> Self {
        CompareConfig {
            subjects: (0..n_subjects)
                .map(|i| SubjectSpec {
                    label: format!("S{}", i + 1),
                    seed: seed.wrapping_add(i as u64),
                    params: params.clone(),
                })
                .collect(),
            methods: Method::ALL.to_vec(),
            cv: 5,
            seed,
            n_per_class: 50,
            train: TrainConfig::default(),
        }
    }
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Mean CV accuracy per (subject, method). Aggregate rows are computed from
/// the cells whenever they are asked for.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub row_labels: Vec<String>,
    pub methods: Vec<Method>,
    /// `[row][method]`
    pub cells: Vec<Vec<f64>>,
}

impl ComparisonTable {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.cells.iter().map(|r| r[j]).collect()
    }

    pub fn mean(&self, j: usize) -> f64 {
        let col = self.column(j);
        col.iter().sum::<f64>() / col.len() as f64
    }

    pub fn std(&self, j: usize) -> f64 {
        sample_std(&self.column(j))
    }

    pub fn mean_of(&self, method: Method) -> Option<f64> {
        self.methods.iter().position(|&m| m == method).map(|j| self.mean(j))
    }

    /// Full-precision CSV with trailing `Avg.` and `Std.` rows.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["subject".to_string()];
        header.extend(self.methods.iter().map(Method::to_string));
        w.write_record(&header)?;
        for (label, row) in self.row_labels.iter().zip(&self.cells) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        for (name, f) in [("Avg.", Self::mean as fn(&Self, usize) -> f64), ("Std.", Self::std)] {
            let mut rec = vec![name.to_string()];
            rec.extend((0..self.methods.len()).map(|j| f(self, j).to_string()));
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Data(e.to_string()))
    }

    /// Aligned plain text, two decimals.
    pub fn to_text(&self) -> String {
        let names: Vec<String> = self.methods.iter().map(Method::to_string).collect();
        let first = self
            .row_labels
            .iter()
            .map(String::len)
            .chain(["Subject".len(), "Avg.".len()])
            .max()
            .unwrap_or(0);
        let widths: Vec<usize> = names.iter().map(|n| n.len().max(4)).collect();
        let mut out = String::new();
        let line = |out: &mut String, label: &str, vals: &[String]| {
            let _ = write!(out, "{label:<first$}");
            for (v, w) in vals.iter().zip(&widths) {
                let _ = write!(out, "  {v:>w$}");
            }
            out.push('\n');
        };
        line(&mut out, "Subject", &names);
        let rule = first + widths.iter().map(|w| w + 2).sum::<usize>();
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        for (label, row) in self.row_labels.iter().zip(&self.cells) {
            let vals: Vec<String> = row.iter().map(|v| format!("{v:.2}")).collect();
            line(&mut out, label, &vals);
        }
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        let agg = |f: fn(&Self, usize) -> f64| -> Vec<String> {
            (0..self.methods.len()).map(|j| format!("{:.2}", f(self, j))).collect()
        };
        line(&mut out, "Avg.", &agg(Self::mean));
        line(&mut out, "Std.", &agg(Self::std));
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub table: ComparisonTable,
    /// `[subject][method]`
    pub cells: Vec<Vec<CvResult>>,
}

impl Comparison {
    /// Confusion matrix of `method` summed over subjects.
    pub fn aggregate_confusion(&self, method: Method) -> Option<ConfusionMatrix> {
        let j = self.table.methods.iter().position(|&m| m == method)?;
        let mut total = ConfusionMatrix::new(self.cells[0][j].confusion.class_names.clone());
        for row in &self.cells {
            total.add(&row[j].confusion).ok()?;
        }
        Some(total)
    }

    /// Writes `table.csv`, `table.txt`, `confusion_<model>.csv` per model and
    /// per-cell `cells/<subject>_<model>.{csv,json}`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("table.csv"), &self.table.to_csv()?)?;
        write_atomic(&dir.join("table.txt"), self.table.to_text().as_bytes())?;
        for &m in &self.table.methods {
            let agg = self.aggregate_confusion(m).expect("method is in the table");
            agg.write_csv(&dir.join(format!("confusion_{}.csv", m.short_name())))?;
        }
        let cells = dir.join("cells");
        for (label, row) in self.table.row_labels.iter().zip(&self.cells) {
            for cell in row {
                let stem = format!("{label}_{}", cell.method.short_name());
                cell.confusion.write_csv(&cells.join(format!("{stem}.csv")))?;
                Metrics {
                    model: cell.method.to_string(),
                    dataset: label.clone(),
                    folds: cell.fold_accuracies.len(),
                    accuracy_mean: cell.mean_accuracy(),
                    accuracy_per_fold: cell.fold_accuracies.clone(),
                    confusion: cell.confusion.counts.clone(),
                }
                .write(&cells.join(format!("{stem}.json")))?;
            }
        }
        Ok(())
    }
}

/// k-fold CV of every method on every subject. Subject `s` uses fold seed
/// `derive_seed(cfg.seed, s)`.
pub fn compare(cfg: &CompareConfig) -> Result<Comparison> {
    if cfg.subjects.is_empty() {
        return Err(Error::invalid("subjects", "need at least one dataset"));
    }
    if cfg.methods.is_empty() {
        return Err(Error::invalid("models", "need at least one model"));
    }
    let mut cells = Vec::with_capacity(cfg.subjects.len());
    for (s, spec) in cfg.subjects.iter().enumerate() {
        let ds = generate_dataset(cfg.n_per_class, &spec.params, spec.seed, s as u32 + 1)?.dataset;
        let fold_seed = derive_seed(cfg.seed, s as u64);
        let row = cfg
            .methods
            .iter()
            .map(|&m| {
                let r = cross_validate(m, &ds, cfg.cv, fold_seed, &cfg.train)?;
                log::info!("{} {m}: {:.3}", spec.label, r.mean_accuracy());
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push(row);
    }
    let table = ComparisonTable {
        row_labels: cfg.subjects.iter().map(|s| s.label.clone()).collect(),
        methods: cfg.methods.clone(),
        cells: cells
            .iter()
            .map(|row| row.iter().map(CvResult::mean_accuracy).collect())
            .collect(),
    };
    Ok(Comparison { table, cells })
}
