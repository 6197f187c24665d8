use std::path::Path;

use crate::error::{Error, Result};
use crate::util::write_atomic;

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub class_names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let k = class_names.len();
        ConfusionMatrix {
            counts: vec![vec![0; k]; k],
            class_names,
        }
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], class_names: &[String]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Shape(format!(
                "{} true labels for {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut m = ConfusionMatrix::new(class_names.to_vec());
        let k = class_names.len();
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= k || p >= k {
                return Err(Error::Data(format!("label pair ({t}, {p}) outside {k} classes")));
            }
            m.counts[t][p] += 1;
        }
        Ok(m)
    }

    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.class_names != self.class_names {
            return Err(Error::Incompatible("confusion matrices over different classes".into()));
        }
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in row.iter_mut().zip(o) {
                *a += b;
            }
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Trace over total; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.correct() as f64 / total as f64
        }
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Misclassifications of true class `from` summed over predicted classes in `to`.
    pub fn errors_into(&self, from: &[usize], to: &[usize]) -> u64 {
        from.iter()
            .flat_map(|&i| to.iter().filter(move |&&j| j != i).map(move |&j| (i, j)))
            .map(|(i, j)| self.counts[i][j])
            .sum()
    }

    /// Header `true\predicted,<classes…>`, then one row per true class.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.class_names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.class_names.iter().zip(&self.counts) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Data(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        ["rest", "a", "b"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn counts_and_accuracy() {
        let m = ConfusionMatrix::from_predictions(&[0, 0, 1, 2, 2, 2], &[0, 1, 1, 2, 0, 1], &names()).unwrap();
        assert_eq!(m.counts, vec![vec![1, 1, 0], vec![0, 1, 0], vec![1, 1, 1]]);
        assert_eq!(m.row_sums(), vec![2, 1, 3]);
        assert_eq!(m.accuracy(), 0.5);
        assert_eq!(m.errors_into(&[1, 2], &[0]), 1);
        assert_eq!(m.errors_into(&[1, 2], &[1, 2]), 1);
        assert!(ConfusionMatrix::from_predictions(&[0], &[3], &names()).is_err());
        assert!(ConfusionMatrix::from_predictions(&[0, 1], &[0], &names()).is_err());
    }

    #[test]
    fn add_and_csv() {
        let mut m = ConfusionMatrix::from_predictions(&[0, 1], &[0, 2], &names()).unwrap();
        m.add(&m.clone()).unwrap();
        assert_eq!(m.total(), 4);
        let csv = String::from_utf8(m.to_csv().unwrap()).unwrap();
        assert_eq!(csv, "true\\predicted,rest,a,b\nrest,2,0,0\na,0,0,2\nb,0,0,0\n");
        let other = ConfusionMatrix::new(vec!["x".into()]);
        assert!(m.add(&other).is_err());
    }
}
