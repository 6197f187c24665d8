//! Binary container shared by network checkpoints and FBCSP model files.
//!
//! ```text
//! magic      8 bytes
//! version    u32 LE
//! precision  u32 LE   (32 or 64)
//! header     u64 LE length + UTF-8 JSON
//! blocks     u64 LE count, then per block:
//!              u32 LE ndim, ndim × u64 LE dims, numel little-endian floats
//! digest     SHA-256 of every preceding byte
//! ```

use super::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::util::sha256;

pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

pub fn encode<T: Scalar>(magic: &[u8; 8], header: &str, blocks: &[&Tensor<T>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&T::BITS.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&(blocks.len() as u64).to_le_bytes());
    for t in blocks {
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in t.data() {
            v.write_le(&mut out);
        }
    }
    let digest = sha256(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::Integrity {
                what: self.what.to_string(),
                reason: format!("truncated at byte {}", self.pos),
            });
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Integrity {
            what: self.what.to_string(),
            reason: "length overflows usize".into(),
        })
    }
}

/// Decoded container: JSON header text and float blocks.
pub struct Decoded<T> {
    pub header: String,
    pub blocks: Vec<Tensor<T>>,
}

/// Verifies digest, magic, version and precision, then decodes.
pub fn decode<T: Scalar>(bytes: &[u8], magic: &[u8; 8], what: &str) -> Result<Decoded<T>> {
    let integrity = |reason: String| Error::Integrity {
        what: what.to_string(),
        reason,
    };
    if bytes.len() < 8 + 4 + 4 + 8 + 8 + DIGEST_LEN {
        return Err(integrity(format!("truncated: only {} bytes", bytes.len())));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if sha256(body) != digest {
        return Err(integrity("digest mismatch (corrupt or truncated file)".into()));
    }
    let mut r = Reader {
        bytes: body,
        pos: 0,
        what,
    };
    if r.take(8)? != magic {
        return Err(Error::Incompatible(format!(
            "{what}: unexpected file type (magic {:?})",
            String::from_utf8_lossy(&body[..8])
        )));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let bits = r.u32()?;
    if bits != T::BITS {
        return Err(Error::Incompatible(format!(
            "{what}: stored in {bits}-bit precision, requested {}-bit",
            T::BITS
        )));
    }
    let header_len = r.len()?;
    let header = std::str::from_utf8(r.take(header_len)?)
        .map_err(|e| integrity(format!("header is not UTF-8: {e}")))?
        .to_string();
    let count = r.len()?;
    let mut blocks = Vec::new();
    for _ in 0..count {
        let ndim = r.u32()? as usize;
        let shape = (0..ndim).map(|_| r.len()).collect::<Result<Vec<_>>>()?;
        let numel = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .ok_or_else(|| integrity("block size overflow".into()))?;
        let width = (T::BITS / 8) as usize;
        let raw = r.take(numel.checked_mul(width).ok_or_else(|| integrity("block size overflow".into()))?)?;
        let data = raw.chunks_exact(width).map(T::read_le).collect();
        blocks.push(Tensor::new(shape, data).map_err(|e| integrity(e.to_string()))?);
    }
    if r.pos != body.len() {
        return Err(integrity(format!(
            "{} trailing bytes after last block",
            body.len() - r.pos
        )));
    }
    Ok(Decoded { header, blocks })
}
