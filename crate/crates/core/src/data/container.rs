//! Dataset directory: `manifest.json` plus one little-endian f32 block.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EpochedDataset;
use crate::error::{Error, Result};
use crate::util::{sha256_hex, write_atomic};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "data.bin";
pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochEntry {
    /// Byte offset of the epoch inside the data block.
    pub file_offset: u64,
    pub class_index: usize,
    pub trial_id: u64,
    pub subject_id: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub fs: f64,
    pub channel_names: Vec<String>,
    pub class_names: Vec<String>,
    pub epoch_len: usize,
    pub data_file: String,
    /// SHA-256 (hex) of the data block.
    pub data_digest: String,
    pub epochs: Vec<EpochEntry>,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

/// Writes `manifest.json` and `data.bin` into `dir` (created if missing).
pub fn write_dataset(ds: &EpochedDataset, dir: &Path, provenance: serde_json::Value) -> Result<DatasetManifest> {
    let mut block = Vec::with_capacity(ds.data().len() * 4);
    for v in ds.data() {
        block.extend_from_slice(&v.to_le_bytes());
    }
    let epoch_bytes = (ds.epoch_size() * 4) as u64;
    let epochs = (0..ds.len())
        .map(|i| EpochEntry {
            file_offset: i as u64 * epoch_bytes,
            class_index: ds.labels()[i],
            trial_id: ds.trial_ids()[i],
            subject_id: ds.subject_ids()[i],
        })
        .collect();
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        fs: ds.fs(),
        channel_names: ds.channel_names().to_vec(),
        class_names: ds.class_names().to_vec(),
        epoch_len: ds.epoch_len(),
        data_file: DATA_FILE.to_string(),
        data_digest: sha256_hex(&block),
        epochs,
        provenance,
    };
    write_atomic(&dir.join(DATA_FILE), &block)?;
    let json = serde_json::to_vec_pretty(&manifest)?;
    write_atomic(&dir.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: DatasetManifest = serde_json::from_slice(&text)?;
    if manifest.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::Version {
            found: manifest.format_version,
            expected: DATASET_FORMAT_VERSION,
        });
    }
    Ok(manifest)
}

/// Reads a dataset directory, checking block size and digest.
pub fn read_dataset(dir: &Path) -> Result<(EpochedDataset, DatasetManifest)> {
    let manifest = read_manifest(dir)?;
    let block_path = dir.join(&manifest.data_file);
    let block = std::fs::read(&block_path).map_err(|e| Error::io(&block_path, e))?;
    let layout = EpochedDataset::empty(
        manifest.fs,
        manifest.channel_names.clone(),
        manifest.class_names.clone(),
        manifest.epoch_len,
    )?;
    let epoch_bytes = layout.epoch_size() * 4;
    let expected = manifest.epochs.len() * epoch_bytes;
    if block.len() != expected {
        return Err(Error::Integrity {
            what: manifest.data_file.clone(),
            reason: format!(
                "manifest lists {} epochs ({expected} bytes) but the block holds {} bytes ({} whole epochs)",
                manifest.epochs.len(),
                block.len(),
                block.len() / epoch_bytes.max(1)
            ),
        });
    }
    let digest = sha256_hex(&block);
    if digest != manifest.data_digest {
        return Err(Error::Integrity {
            what: manifest.data_file.clone(),
            reason: format!(
                "digest mismatch: manifest {} vs block {digest}",
                manifest.data_digest
            ),
        });
    }
    let mut data = Vec::with_capacity(block.len() / 4);
    for (i, e) in manifest.epochs.iter().enumerate() {
        let start = usize::try_from(e.file_offset)
            .ok()
            .filter(|s| s.checked_add(epoch_bytes).is_some_and(|end| end <= block.len()))
            .ok_or_else(|| Error::Integrity {
                what: manifest.data_file.clone(),
                reason: format!("epoch {i} offset {} outside block", e.file_offset),
            })?;
        data.extend(
            block[start..start + epoch_bytes]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))),
        );
    }
    let ds = EpochedDataset::from_parts(
        layout,
        data,
        manifest.epochs.iter().map(|e| e.class_index).collect(),
        manifest.epochs.iter().map(|e| e.trial_id).collect(),
        manifest.epochs.iter().map(|e| e.subject_id).collect(),
    )?;
    Ok((ds, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> EpochedDataset {
        let mut ds = EpochedDataset::empty(
            250.0,
            vec!["C3".into(), "Cz".into()],
            vec!["rest".into(), "grasp".into()],
            4,
        )
        .unwrap();
        for i in 0..10 {
            let e: Vec<f32> = (0..8).map(|j| (i * 8 + j) as f32 * 0.37 - 3.0).collect();
            ds.push(&e, i % 2, i as u64, 1).unwrap();
        }
        ds
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = toy();
        write_dataset(&ds, dir.path(), serde_json::json!({"source": "test"})).unwrap();
        let (back, manifest) = read_dataset(dir.path()).unwrap();
        assert_eq!(back, ds);
        assert_eq!(manifest.provenance["source"], "test");
    }

    #[test]
    fn short_block_is_a_size_error() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&toy(), dir.path(), serde_json::Value::Null).unwrap();
        let p = dir.path().join(DATA_FILE);
        let block = std::fs::read(&p).unwrap();
        std::fs::write(&p, &block[..9 * 8 * 4]).unwrap();
        let err = read_dataset(dir.path()).unwrap_err().to_string();
        assert!(err.contains("10 epochs") && err.contains("9 whole epochs"), "{err}");
    }

    #[test]
    fn flipped_byte_is_a_digest_error_naming_the_block() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&toy(), dir.path(), serde_json::Value::Null).unwrap();
        let p = dir.path().join(DATA_FILE);
        let mut block = std::fs::read(&p).unwrap();
        block[17] ^= 0x20;
        std::fs::write(&p, &block).unwrap();
        let err = read_dataset(dir.path()).unwrap_err().to_string();
        assert!(err.contains("data.bin") && err.contains("digest"), "{err}");
    }

    #[test]
    fn version_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&toy(), dir.path(), serde_json::Value::Null).unwrap();
        let p = dir.path().join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&p).unwrap();
        std::fs::write(&p, text.replace("\"format_version\": 1", "\"format_version\": 7")).unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Version { found: 7, .. })));
    }
}
