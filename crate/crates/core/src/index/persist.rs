//! Index files. The vectors live in the store file; an index file holds the
//! configuration, the checksum of the store it was built over, per-node
//! filter metadata and the graph.
//!
//! ```text
//! "SPIDX1\0"                       7 bytes
//! mode u8, m u32, ef_construction u32, ef_search u32, seed u64
//! store SHA-256                    32 bytes
//! node count                       u64
//! per node: year i32, kind u8
//! graph flag u8; if 1: entry u32, max_level u32, then per node:
//!     level count u32, per level: link count u32 + links u32
//! ```

use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::hnsw::HnswGraph;
use super::{DocMeta, IndexConfig, IndexError, IndexMode, Result, VectorIndex};
use crate::corpus::DocKind;
use crate::embed::EmbeddingStore;

pub const INDEX_MAGIC: &[u8; 7] = b"SPIDX1\0";

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(IndexError::Truncated {
                expected: (self.pos + n) as u64,
                actual: self.bytes.len() as u64,
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl VectorIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(INDEX_MAGIC);
        out.push(match self.config.mode {
            IndexMode::Exact => 0,
            IndexMode::Hnsw => 1,
        });
        out.extend_from_slice(&(self.config.hnsw_m as u32).to_le_bytes());
        out.extend_from_slice(&(self.config.hnsw_ef_construction as u32).to_le_bytes());
        out.extend_from_slice(&(self.config.hnsw_ef_search as u32).to_le_bytes());
        out.extend_from_slice(&self.config.seed.to_le_bytes());
        out.extend_from_slice(&hex::decode(&self.store_checksum).expect("checksum is hex"));
        out.extend_from_slice(&(self.meta.len() as u64).to_le_bytes());
        for m in &self.meta {
            out.extend_from_slice(&m.year.to_le_bytes());
            out.push(match m.kind {
                DocKind::Patent => 0,
                DocKind::Paper => 1,
            });
        }
        match &self.graph {
            None => out.push(0),
            Some(g) => {
                out.push(1);
                out.extend_from_slice(&g.entry.to_le_bytes());
                out.extend_from_slice(&(g.max_level as u32).to_le_bytes());
                for levels in &g.links {
                    out.extend_from_slice(&(levels.len() as u32).to_le_bytes());
                    for list in levels {
                        out.extend_from_slice(&(list.len() as u32).to_le_bytes());
                        for &n in list {
                            out.extend_from_slice(&n.to_le_bytes());
                        }
                    }
                }
            }
        }
        out
    }

    /// Restores an index over `store`, which must be the store it was built from.
    pub fn from_bytes(bytes: &[u8], store: impl Into<Arc<EmbeddingStore>>) -> Result<Self> {
        let store = store.into();
        if bytes.len() < INDEX_MAGIC.len() || &bytes[..INDEX_MAGIC.len()] != INDEX_MAGIC {
            return Err(IndexError::BadMagic);
        }
        let mut r = Reader {
            bytes,
            pos: INDEX_MAGIC.len(),
        };
        let mode = match r.u8()? {
            0 => IndexMode::Exact,
            1 => IndexMode::Hnsw,
            other => return Err(IndexError::Corrupt(format!("unknown mode tag {other}"))),
        };
        let config = IndexConfig {
            mode,
            hnsw_m: r.u32()? as usize,
            hnsw_ef_construction: r.u32()? as usize,
            hnsw_ef_search: r.u32()? as usize,
            seed: r.u64()?,
        };
        let expected = hex::encode(r.take(32)?);
        let actual = store.checksum();
        if expected != actual {
            return Err(IndexError::ChecksumMismatch { expected, actual });
        }
        let n = r.u64()? as usize;
        if n != store.len() {
            return Err(IndexError::Corrupt(format!(
                "index has {n} nodes, store has {}",
                store.len()
            )));
        }
        let mut meta = Vec::with_capacity(n);
        for _ in 0..n {
            let year = r.i32()?;
            let kind = match r.u8()? {
                0 => DocKind::Patent,
                1 => DocKind::Paper,
                other => return Err(IndexError::Corrupt(format!("unknown kind tag {other}"))),
            };
            meta.push(DocMeta { year, kind });
        }
        let graph = match r.u8()? {
            0 => None,
            1 => {
                let entry = r.u32()?;
                let max_level = r.u32()? as usize;
                let mut links = Vec::with_capacity(n);
                for _ in 0..n {
                    let levels = r.u32()? as usize;
                    if levels == 0 || levels > max_level + 1 {
                        return Err(IndexError::Corrupt(format!("node has {levels} levels")));
                    }
                    let mut per_level = Vec::with_capacity(levels);
                    for _ in 0..levels {
                        let count = r.u32()? as usize;
                        let list = (0..count).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
                        if list.iter().any(|&x| x as usize >= n) {
                            return Err(IndexError::Corrupt("link to unknown node".into()));
                        }
                        per_level.push(list);
                    }
                    links.push(per_level);
                }
                if n > 0 && entry as usize >= n {
                    return Err(IndexError::Corrupt("entry point out of range".into()));
                }
                Some(HnswGraph {
                    m: config.hnsw_m,
                    entry,
                    max_level,
                    links,
                })
            }
            other => return Err(IndexError::Corrupt(format!("unknown graph flag {other}"))),
        };
        if r.pos != bytes.len() {
            return Err(IndexError::Corrupt(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        if (mode == IndexMode::Hnsw) != graph.is_some() {
            return Err(IndexError::Corrupt(
                "graph presence does not match mode".into(),
            ));
        }
        Self::assemble(store, meta, config, graph)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path, store: impl Into<Arc<EmbeddingStore>>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?, store)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::index::SearchFilter;

    fn small() -> (EmbeddingStore, HashMap<String, DocMeta>) {
        let mut store = EmbeddingStore::new(3, "t").unwrap();
        let mut meta = HashMap::new();
        for i in 0..300u32 {
            let a = i as f32 * 0.37;
            store
                .insert(
                    format!("n{i}"),
                    &[a.cos(), a.sin(), 0.1 * (i % 5) as f32 + 0.05],
                )
                .unwrap();
            let kind = if i % 3 == 0 {
                DocKind::Patent
            } else {
                DocKind::Paper
            };
            meta.insert(
                format!("n{i}"),
                DocMeta {
                    year: 1980 + (i % 40) as i32,
                    kind,
                },
            );
        }
        (store, meta)
    }

    #[test]
    fn round_trip_preserves_results() {
        let (store, meta) = small();
        for config in [
            IndexConfig::exact(),
            IndexConfig {
                seed: 3,
                ..IndexConfig::default()
            },
        ] {
            let idx = VectorIndex::build(store.clone(), &meta, config).unwrap();
            let bytes = idx.to_bytes();
            let back = VectorIndex::from_bytes(&bytes, store.clone()).unwrap();
            assert_eq!(back.to_bytes(), bytes);
            assert_eq!(back.graph, idx.graph);
            let f = SearchFilter::new(Some(1990), Some(2010), Some(DocKind::Paper)).unwrap();
            for i in 0..20 {
                let q = store.row(i * 11);
                assert_eq!(
                    idx.search(q, 7, &f, None).unwrap(),
                    back.search(q, 7, &f, None).unwrap()
                );
            }
        }
    }

    #[test]
    fn rejects_other_store() {
        let (store, meta) = small();
        let idx = VectorIndex::build(store.clone(), &meta, IndexConfig::exact()).unwrap();
        let mut other = store.clone();
        other.insert("extra", &[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            VectorIndex::from_bytes(&idx.to_bytes(), other),
            Err(IndexError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_bytes() {
        let (store, meta) = small();
        let idx = VectorIndex::build(store.clone(), &meta, IndexConfig::default()).unwrap();
        let bytes = idx.to_bytes();
        assert!(matches!(
            VectorIndex::from_bytes(b"nope", store.clone()),
            Err(IndexError::BadMagic)
        ));
        assert!(matches!(
            VectorIndex::from_bytes(&bytes[..bytes.len() - 3], store.clone()),
            Err(IndexError::Truncated { .. })
        ));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(
            VectorIndex::from_bytes(&longer, store),
            Err(IndexError::Corrupt(_))
        ));
    }
}
