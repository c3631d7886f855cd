//! Binary index file.
//!
//! All integers and reals are little-endian.
//!
//! ```text
//! magic        4 bytes  "NBIX"
//! version      u32      currently 1
//! header_len   u32      length of the JSON header that follows
//! header       bytes    {"tool_version", "config_hash", "seed"}
//! n            u64      number of pairs
//! m            u32      metric columns (21)
//! d            u32      embedding dimension, 0 when absent
//! stats.min    m x f64
//! stats.max    m x f64
//! ids          n x u64
//! raw          n x m f64, row-major
//! normalized   n x m f64, row-major
//! embeddings   n x d f64, row-major
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{CorpusIndex, MetricRow, NormalizationStats, RetrievalError};
use crate::metrics::METRIC_COUNT;

pub const INDEX_MAGIC: &[u8; 4] = b"NBIX";
pub const INDEX_FORMAT_VERSION: u32 = 1;

/// Provenance recorded at the top of every index file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexHeader {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RetrievalError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len()).ok_or_else(|| {
            RetrievalError::BadIndexFile(format!("truncated at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, RetrievalError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, RetrievalError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, RetrievalError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn row(&mut self) -> Result<MetricRow, RetrievalError> {
        let mut r = [0.0; METRIC_COUNT];
        for v in r.iter_mut() {
            *v = self.f64()?;
        }
        Ok(r)
    }
}

impl CorpusIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serializes");
        let d = self.embedding_dim();
        let mut out = Vec::new();
        out.extend_from_slice(INDEX_MAGIC);
        out.extend_from_slice(&INDEX_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&(METRIC_COUNT as u32).to_le_bytes());
        out.extend_from_slice(&(d as u32).to_le_bytes());
        put_f64s(&mut out, &self.stats.min);
        put_f64s(&mut out, &self.stats.max);
        for id in &self.ids {
            out.extend_from_slice(&id.to_le_bytes());
        }
        for r in &self.raw {
            put_f64s(&mut out, r);
        }
        for r in &self.normalized {
            put_f64s(&mut out, r);
        }
        if let Some(e) = &self.embeddings {
            for r in e {
                put_f64s(&mut out, r);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RetrievalError> {
        let mut c = Cursor { bytes, pos: 0 };
        if c.take(4)? != INDEX_MAGIC {
            return Err(RetrievalError::BadIndexFile("wrong magic".into()));
        }
        let version = c.u32()?;
        if version != INDEX_FORMAT_VERSION {
            return Err(RetrievalError::BadIndexFile(format!("unsupported version {version}")));
        }
        let header_len = c.u32()? as usize;
        let header: IndexHeader = serde_json::from_slice(c.take(header_len)?)
            .map_err(|e| RetrievalError::BadIndexFile(format!("header: {e}")))?;
        let n = c.u64()? as usize;
        let m = c.u32()? as usize;
        let d = c.u32()? as usize;
        if m != METRIC_COUNT {
            return Err(RetrievalError::BadIndexFile(format!("{m} metric columns, expected {METRIC_COUNT}")));
        }
        let expected = n
            .checked_mul(8 + 16 * METRIC_COUNT + 8 * d)
            .and_then(|b| b.checked_add(16 * METRIC_COUNT))
            .ok_or_else(|| RetrievalError::BadIndexFile("size overflow".into()))?;
        if bytes.len() - c.pos != expected {
            return Err(RetrievalError::BadIndexFile(format!(
                "payload is {} bytes, expected {expected}",
                bytes.len() - c.pos
            )));
        }
        let stats = NormalizationStats { min: c.row()?, max: c.row()? };
        let ids = (0..n).map(|_| c.u64()).collect::<Result<Vec<_>, _>>()?;
        let raw = (0..n).map(|_| c.row()).collect::<Result<Vec<_>, _>>()?;
        let normalized = (0..n).map(|_| c.row()).collect::<Result<Vec<_>, _>>()?;
        let embeddings = if d > 0 {
            let mut e = Vec::with_capacity(n);
            for _ in 0..n {
                e.push((0..d).map(|_| c.f64()).collect::<Result<Vec<_>, _>>()?);
            }
            Some(e)
        } else {
            None
        };
        Ok(Self { ids, raw, normalized, embeddings, stats, header })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), RetrievalError> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, RetrievalError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
