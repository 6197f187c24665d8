use std::path::Path;

use super::{ChannelMontage, EpochedDataset};
use crate::error::{Error, Result};

/// Sidecar mapping epoch file name → class label (`file,label`).
pub const INDEX_FILE: &str = "index.csv";

#[derive(Clone, Debug)]
pub struct CsvImport {
    pub dataset: EpochedDataset,
    pub warnings: Vec<String>,
}

struct EpochTable {
    channels: Vec<String>,
    /// channels × time
    rows: Vec<Vec<f32>>,
}

fn read_epoch_csv(path: &Path) -> Result<EpochTable> {
    let file = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Data(format!("{file}: {other:?}")),
        })?;
    let channels: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if channels.is_empty() || channels.iter().any(String::is_empty) {
        return Err(Error::Parse {
            file,
            row: 1,
            column: 1,
            reason: "header must name every channel".into(),
        });
    }
    let mut rows = vec![Vec::new(); channels.len()];
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 2;
        if record.len() != channels.len() {
            return Err(Error::Parse {
                file,
                row,
                column: record.len().min(channels.len()) + 1,
                reason: format!("ragged row: {} cells for {} channels", record.len(), channels.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f32 = cell.parse().map_err(|_| Error::Parse {
                file: file.clone(),
                row,
                column: c + 1,
                reason: format!("not a number: {cell:?}"),
            })?;
            rows[c].push(v);
        }
    }
    if rows[0].is_empty() {
        return Err(Error::Data(format!("{file}: no samples")));
    }
    Ok(EpochTable { channels, rows })
}

/// Imports one CSV per epoch listed in `index.csv`.
///
/// Channels are put in the 24-channel montage order when every montage
/// channel is present (extra channels follow in file order); otherwise file
/// order is kept and a warning is returned.
pub fn import_csv(dir: &Path, fs: f64, class_names: &[String]) -> Result<CsvImport> {
    let index_path = dir.join(INDEX_FILE);
    if !index_path.exists() {
        let empty = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .next()
            .is_none();
        return Err(Error::Data(if empty {
            format!("{}: directory is empty", dir.display())
        } else {
            format!("{}: missing {INDEX_FILE}", dir.display())
        }));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&index_path)?;
    let mut entries = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (Some(file), Some(label)) = (rec.get(0), rec.get(1)) else {
            return Err(Error::Parse {
                file: index_path.display().to_string(),
                row: r + 2,
                column: rec.len() + 1,
                reason: "expected `file,label`".into(),
            });
        };
        let class = class_names.iter().position(|c| c == label).ok_or_else(|| Error::Parse {
            file: index_path.display().to_string(),
            row: r + 2,
            column: 2,
            reason: format!("unknown label {label:?} (known: {})", class_names.join(", ")),
        })?;
        entries.push((file.to_string(), class));
    }
    if entries.is_empty() {
        return Err(Error::Data(format!("{}: no epochs listed", index_path.display())));
    }

    let mut warnings = Vec::new();
    let mut dataset: Option<EpochedDataset> = None;
    let mut order: Vec<usize> = Vec::new();
    let montage = ChannelMontage::standard_24();
    for (trial, (file, class)) in entries.iter().enumerate() {
        let table = read_epoch_csv(&dir.join(file))?;
        let ds = match &mut dataset {
            None => {
                order = if montage.contains_all(&table.channels) {
                    let mut o: Vec<usize> = montage
                        .names
                        .iter()
                        .map(|m| table.channels.iter().position(|c| c == m).expect("present"))
                        .collect();
                    let rest: Vec<usize> = (0..table.channels.len()).filter(|i| !o.contains(i)).collect();
                    o.extend(rest);
                    o
                } else {
                    warnings.push(format!(
                        "{file}: {} channels do not cover the 24-channel montage; keeping file order",
                        table.channels.len()
                    ));
                    (0..table.channels.len()).collect()
                };
                let names = order.iter().map(|&i| table.channels[i].clone()).collect();
                dataset.insert(EpochedDataset::empty(fs, names, class_names.to_vec(), table.rows[0].len())?)
            }
            Some(ds) => {
                let names: Vec<&String> = order.iter().map(|&i| &table.channels[i]).collect();
                if table.channels.len() != order.len()
                    || names.iter().zip(ds.channel_names()).any(|(a, b)| *a != b)
                {
                    return Err(Error::Data(format!(
                        "{file}: channel header differs from the first epoch"
                    )));
                }
                ds
            }
        };
        if table.rows[0].len() != ds.epoch_len() {
            return Err(Error::Data(format!(
                "{file}: {} samples, expected {}",
                table.rows[0].len(),
                ds.epoch_len()
            )));
        }
        let epoch: Vec<f32> = order.iter().flat_map(|&i| table.rows[i].iter().copied()).collect();
        ds.push(&epoch, *class, trial as u64, 0)?;
    }
    Ok(CsvImport {
        dataset: dataset.expect("at least one entry"),
        warnings,
    })
}
