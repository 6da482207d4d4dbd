//! Persistent id -> vector map.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "SPSIM1\0"                      7 bytes
//! dim                             u32
//! entry count                     u64
//! provenance                      u32 length + UTF-8
//! id table                        per entry: u32 length + UTF-8
//! vectors                         count * dim f32, in id-table order
//! ```

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{l2_norm, EmbedError, EmbeddingVector, Result, IMPORT_NORM_TOLERANCE};
use crate::checksum::sha256_hex;

pub const STORE_MAGIC: &[u8; 7] = b"SPSIM1\0";

#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    provenance: String,
    ids: Vec<String>,
    data: Vec<f32>,
    lookup: HashMap<String, usize>,
}

/// Vector payloads compare bitwise.
impl PartialEq for EmbeddingStore {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.provenance == other.provenance
            && self.ids == other.ids
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl EmbeddingStore {
    pub fn new(dim: usize, provenance: impl Into<String>) -> Result<Self> {
        if dim == 0 || dim > u32::MAX as usize {
            return Err(EmbedError::InvalidDim { min: 1, got: dim });
        }
        Ok(Self {
            dim,
            provenance: provenance.into(),
            ids: Vec::new(),
            data: Vec::new(),
            lookup: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: &[f32]) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(EmbedError::DimMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        if self.lookup.contains_key(&id) {
            return Err(EmbedError::DuplicateId(id));
        }
        self.lookup.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.position(id).map(|i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let id_bytes: usize = self.ids.iter().map(|id| 4 + id.len()).sum();
        let mut out = Vec::with_capacity(
            7 + 4 + 8 + 4 + self.provenance.len() + id_bytes + self.data.len() * 4,
        );
        out.extend_from_slice(STORE_MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        write_str(&mut out, &self.provenance);
        for id in &self.ids {
            write_str(&mut out, id);
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if bytes.len() < STORE_MAGIC.len() || &bytes[..STORE_MAGIC.len()] != STORE_MAGIC {
            return Err(EmbedError::BadMagic);
        }
        cur.pos = STORE_MAGIC.len();
        let dim = cur.u32()? as usize;
        if dim == 0 {
            return Err(EmbedError::InvalidDim { min: 1, got: 0 });
        }
        let count = cur.u64()?;
        let provenance = cur.string()?;
        let mut store = EmbeddingStore::new(dim, provenance)?;
        let mut ids = Vec::with_capacity(count.min(1 << 24) as usize);
        for _ in 0..count {
            ids.push(cur.string()?);
        }
        let payload = count
            .checked_mul(dim as u64)
            .and_then(|n| n.checked_mul(4))
            .ok_or(EmbedError::Truncated {
                expected: u64::MAX,
                actual: bytes.len() as u64,
            })?;
        let floats = cur.take(payload)?;
        if cur.pos < bytes.len() {
            return Err(EmbedError::TrailingBytes((bytes.len() - cur.pos) as u64));
        }
        let data: Vec<f32> = floats
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        for (i, id) in ids.into_iter().enumerate() {
            if store.lookup.insert(id.clone(), i).is_some() {
                return Err(EmbedError::DuplicateId(id));
            }
            store.ids.push(id);
        }
        store.data = data;
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path)?;
        file.write_all(&self.to_bytes())?;
        file.sync_all()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// SHA-256 of the serialized store; indexes record it at build time.
    pub fn checksum(&self) -> String {
        sha256_hex(&self.to_bytes())
    }
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: u64) -> Result<&'a [u8]> {
        let end = (self.pos as u64).saturating_add(n);
        if end > self.bytes.len() as u64 {
            return Err(EmbedError::Truncated {
                expected: end,
                actual: self.bytes.len() as u64,
            });
        }
        let slice = &self.bytes[self.pos..end as usize];
        self.pos = end as usize;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as u64;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| EmbedError::InvalidUtf8)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ImportReport {
    pub rows: usize,
    pub renormalized: usize,
}

/// Builds an `"imported"` store from parallel id and row lists.
pub fn import_rows(
    ids: Vec<String>,
    rows: Vec<Vec<f32>>,
) -> Result<(EmbeddingStore, ImportReport)> {
    if ids.len() != rows.len() {
        return Err(EmbedError::CountMismatch {
            ids: ids.len(),
            rows: rows.len(),
        });
    }
    let dim = rows.first().map_or(1, Vec::len);
    let mut store = EmbeddingStore::new(dim, "imported")?;
    let mut report = ImportReport {
        rows: rows.len(),
        renormalized: 0,
    };
    for (row, (id, values)) in ids.into_iter().zip(rows).enumerate() {
        let bad = |reason: &str| EmbedError::BadRow {
            row,
            reason: reason.to_string(),
        };
        if values.len() != dim {
            return Err(bad(&format!(
                "expected {dim} values, found {}",
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(bad("NaN entry"));
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(bad("infinite entry"));
        }
        let norm = l2_norm(&values);
        let vector = if (norm - 1.0).abs() > IMPORT_NORM_TOLERANCE {
            report.renormalized += 1;
            EmbeddingVector::new(values)?
                .normalized()
                .map_err(|e| bad(&e.to_string()))?
                .into_inner()
        } else {
            values
        };
        store.insert(id, &vector)?;
    }
    Ok((store, report))
}

/// Imports externally produced vectors: `ids_path` holds one id per line;
/// `vectors_path` is CSV (`.csv`, one row per id, no header) or a headerless
/// little-endian f32 block whose width is inferred from the id count.
pub fn import_precomputed(
    vectors_path: &Path,
    ids_path: &Path,
) -> Result<(EmbeddingStore, ImportReport)> {
    let ids: Vec<String> = BufReader::new(File::open(ids_path)?)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect();

    let is_csv = vectors_path.extension().and_then(|e| e.to_str()) == Some("csv");
    let rows = if is_csv {
        read_csv_rows(vectors_path)?
    } else {
        let bytes = fs::read(vectors_path)?;
        if bytes.len() % 4 != 0 {
            return Err(EmbedError::Truncated {
                expected: (bytes.len() as u64 / 4 + 1) * 4,
                actual: bytes.len() as u64,
            });
        }
        let floats: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if ids.is_empty() {
            if !floats.is_empty() {
                return Err(EmbedError::CountMismatch { ids: 0, rows: 1 });
            }
            Vec::new()
        } else {
            if floats.is_empty() || floats.len() % ids.len() != 0 {
                return Err(EmbedError::BadRow {
                    row: 0,
                    reason: format!(
                        "{} floats do not split evenly across {} ids",
                        floats.len(),
                        ids.len()
                    ),
                });
            }
            let dim = floats.len() / ids.len();
            floats.chunks_exact(dim).map(<[f32]>::to_vec).collect()
        }
    };
    import_rows(ids, rows)
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f32>>> {
    let mut rows = Vec::new();
    for (row, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f32>().map_err(|_| EmbedError::BadRow {
                    row,
                    reason: format!("`{}` is not a number", cell.trim()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(values);
    }
    Ok(rows)
}
