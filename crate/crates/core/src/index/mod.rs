//! Cosine k-nearest-neighbor search over an [`EmbeddingStore`], by exact scan
//! or HNSW, with publication-year and document-kind filters.
//!
//! Scores are similarities (higher is closer). Result lists are sorted by
//! score descending with ties broken by ascending document id.

mod hnsw;
mod persist;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DocKind, Document};
use crate::embed::EmbeddingStore;
use hnsw::{level_for, HnswGraph, Scored, Space};

pub use persist::INDEX_MAGIC;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cosine is undefined for a zero vector{}", .0.as_deref().map(|id| format!(" (`{id}`)")).unwrap_or_default())]
    ZeroVector(Option<String>),
    #[error("dimension mismatch: index has {expected}, query has {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("no metadata for document `{0}`")]
    MissingMeta(String),
    #[error("k must be positive")]
    ZeroK,
    #[error("invalid filter: year_min {0} > year_max {1}")]
    InvalidFilter(i32, i32),
    #[error("invalid index configuration: {0}")]
    InvalidConfig(String),
    #[error("{queries} queries but {filters} filters")]
    BatchShape { queries: usize, filters: usize },
    #[error("bad magic bytes: not an index file")]
    BadMagic,
    #[error("truncated index: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("index was built for store {expected}, but the given store hashes to {actual}")]
    ChecksumMismatch { expected: String, actual: String },
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T, E = IndexError> = std::result::Result<T, E>;

/// `<v, w> / (|v| |w|)`, accumulated in f64 and clamped to [-1, 1].
pub fn cosine(v: &[f32], w: &[f32]) -> Result<f64> {
    if v.len() != w.len() {
        return Err(IndexError::DimMismatch {
            expected: v.len(),
            actual: w.len(),
        });
    }
    let (nv, nw) = (sq_norm(v), sq_norm(w));
    if nv == 0.0 || nw == 0.0 {
        return Err(IndexError::ZeroVector(None));
    }
    Ok(cosine_with_norms(v, nv, w, nw))
}

fn dot(v: &[f32], w: &[f32]) -> f64 {
    v.iter().zip(w).map(|(&a, &b)| a as f64 * b as f64).sum()
}

fn sq_norm(v: &[f32]) -> f64 {
    dot(v, v)
}

/// Takes squared norms: `sqrt(s * s) == s` exactly, so self-similarity is exactly 1.
#[inline]
fn cosine_with_norms(v: &[f32], sv: f64, w: &[f32], sw: f64) -> f64 {
    (dot(v, w) / (sv * sw).sqrt()).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub doc_id: String,
    pub score: f64,
}

/// Per-document metadata used by filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub year: i32,
    pub kind: DocKind,
}

pub fn meta_from_documents(docs: &[Document]) -> HashMap<String, DocMeta> {
    docs.iter()
        .map(|d| {
            (
                d.id.clone(),
                DocMeta {
                    year: d.pub_year(),
                    kind: d.kind,
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchFilter {
    pub year_min: Option<i32>,
    pub year_max: Option<i32>,
    pub kind: Option<DocKind>,
}

impl SearchFilter {
    pub fn new(
        year_min: Option<i32>,
        year_max: Option<i32>,
        kind: Option<DocKind>,
    ) -> Result<Self> {
        let f = Self {
            year_min,
            year_max,
            kind,
        };
        f.validate()?;
        Ok(f)
    }

    /// Papers published within `years` of `center`, inclusive.
    pub fn paper_window(center: i32, years: i32) -> Self {
        Self {
            year_min: Some(center - years),
            year_max: Some(center + years),
            kind: Some(DocKind::Paper),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.year_min, self.year_max) {
            (Some(lo), Some(hi)) if lo > hi => Err(IndexError::InvalidFilter(lo, hi)),
            _ => Ok(()),
        }
    }

    pub fn matches(&self, meta: &DocMeta) -> bool {
        self.year_min.is_none_or(|y| meta.year >= y)
            && self.year_max.is_none_or(|y| meta.year <= y)
            && self.kind.is_none_or(|k| meta.kind == k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexMode {
    Exact,
    #[default]
    Hnsw,
}

impl fmt::Display for IndexMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexMode::Exact => "exact",
            IndexMode::Hnsw => "hnsw",
        })
    }
}

impl FromStr for IndexMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(IndexMode::Exact),
            "hnsw" => Ok(IndexMode::Hnsw),
            other => Err(format!(
                "unknown index mode `{other}` (expected exact or hnsw)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub mode: IndexMode,
    pub hnsw_m: usize,
    pub hnsw_ef_construction: usize,
    pub hnsw_ef_search: usize,
    pub seed: u64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            mode: IndexMode::Hnsw,
            hnsw_m: 16,
            hnsw_ef_construction: 200,
            hnsw_ef_search: 128,
            seed: 0,
        }
    }
}

impl IndexConfig {
    pub fn exact() -> Self {
        Self {
            mode: IndexMode::Exact,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hnsw_m < 2 {
            return Err(IndexError::InvalidConfig(format!(
                "hnsw_m must be >= 2, got {}",
                self.hnsw_m
            )));
        }
        if self.hnsw_ef_construction == 0 || self.hnsw_ef_search == 0 {
            return Err(IndexError::InvalidConfig(
                "ef parameters must be positive".into(),
            ));
        }
        if self.hnsw_m > u32::MAX as usize / 2 {
            return Err(IndexError::InvalidConfig("hnsw_m too large".into()));
        }
        Ok(())
    }

    /// Beam width used for a k-query: at least `ef_search`, `k`, and 4k/3.
    pub fn effective_ef(&self, k: usize) -> usize {
        self.hnsw_ef_search.max(k).max((4 * k).div_ceil(3))
    }
}

/// Immutable search structure over a store. Safe for concurrent readers.
#[derive(Debug, Clone)]
pub struct VectorIndex {
    config: IndexConfig,
    store: Arc<EmbeddingStore>,
    norms: Vec<f64>,
    meta: Vec<DocMeta>,
    graph: Option<HnswGraph>,
    store_checksum: String,
}

struct StoreSpace<'a> {
    store: &'a EmbeddingStore,
    norms: &'a [f64],
}

impl Space for StoreSpace<'_> {
    fn len(&self) -> usize {
        self.store.len()
    }

    fn node_sim(&self, a: u32, b: u32) -> f64 {
        let (a, b) = (a as usize, b as usize);
        cosine_with_norms(
            self.store.row(a),
            self.norms[a],
            self.store.row(b),
            self.norms[b],
        )
    }
}

impl VectorIndex {
    /// Builds an index; every store id needs an entry in `meta`.
    pub fn build(
        store: impl Into<Arc<EmbeddingStore>>,
        meta: &HashMap<String, DocMeta>,
        config: IndexConfig,
    ) -> Result<Self> {
        let store = store.into();
        let meta_rows = store
            .ids()
            .iter()
            .map(|id| {
                meta.get(id)
                    .copied()
                    .ok_or_else(|| IndexError::MissingMeta(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(store, meta_rows, config, None)
    }

    fn assemble(
        store: Arc<EmbeddingStore>,
        meta: Vec<DocMeta>,
        config: IndexConfig,
        graph: Option<HnswGraph>,
    ) -> Result<Self> {
        config.validate()?;
        if store.len() > u32::MAX as usize {
            return Err(IndexError::InvalidConfig("more than 2^32 vectors".into()));
        }
        let norms: Vec<f64> = (0..store.len()).map(|i| sq_norm(store.row(i))).collect();
        if let Some(i) = norms.iter().position(|&n| n == 0.0) {
            return Err(IndexError::ZeroVector(Some(store.ids()[i].clone())));
        }
        let graph = match (config.mode, graph) {
            (IndexMode::Exact, _) => None,
            (IndexMode::Hnsw, Some(g)) => Some(g),
            (IndexMode::Hnsw, None) => {
                // insertion in id order makes the graph independent of store row order
                let mut id_order: Vec<u32> = (0..store.len() as u32).collect();
                id_order.sort_unstable_by(|&a, &b| {
                    store.ids()[a as usize].cmp(&store.ids()[b as usize])
                });
                let space = StoreSpace {
                    store: &store,
                    norms: &norms,
                };
                let levels: Vec<usize> = store
                    .ids()
                    .iter()
                    .map(|id| level_for(id, config.seed, config.hnsw_m))
                    .collect();
                Some(HnswGraph::build(
                    &space,
                    &id_order,
                    &levels,
                    config.hnsw_m,
                    config.hnsw_ef_construction,
                ))
            }
        };
        let store_checksum = store.checksum();
        Ok(Self {
            config,
            store,
            norms,
            meta,
            graph,
            store_checksum,
        })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn store(&self) -> &EmbeddingStore {
        &self.store
    }

    pub fn dim(&self) -> usize {
        self.store.dim()
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn meta(&self, id: &str) -> Option<DocMeta> {
        self.store.position(id).map(|i| self.meta[i])
    }

    /// SHA-256 of the store this index was built over.
    pub fn store_checksum(&self) -> &str {
        &self.store_checksum
    }

    /// Top-`k` neighbors of `query` that pass `filter` and are not in `exclude`.
    pub fn search(
        &self,
        query: &[f32],
        k: usize,
        filter: &SearchFilter,
        exclude: Option<&HashSet<String>>,
    ) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        filter.validate()?;
        if query.len() != self.dim() {
            return Err(IndexError::DimMismatch {
                expected: self.dim(),
                actual: query.len(),
            });
        }
        let qn = sq_norm(query);
        if qn == 0.0 {
            return Err(IndexError::ZeroVector(None));
        }
        if self.is_empty() {
            return Ok(Vec::new());
        }
        let excluded: HashSet<u32> = exclude
            .into_iter()
            .flatten()
            .filter_map(|id| self.store.position(id).map(|p| p as u32))
            .collect();
        let accept =
            |node: u32| filter.matches(&self.meta[node as usize]) && !excluded.contains(&node);
        let sim = |node: u32| {
            let i = node as usize;
            cosine_with_norms(query, qn, self.store.row(i), self.norms[i])
        };

        let mut hits: Vec<Scored> = match &self.graph {
            None => (0..self.len() as u32)
                .filter(|&n| accept(n))
                .map(|n| Scored {
                    score: sim(n),
                    node: n,
                })
                .collect(),
            Some(graph) => graph.search(self.len(), &sim, self.config.effective_ef(k), accept),
        };
        let ids = self.store.ids();
        let by_rank = |a: &Scored, b: &Scored| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| ids[a.node as usize].cmp(&ids[b.node as usize]))
        };
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, by_rank);
            hits.truncate(k);
        }
        hits.sort_unstable_by(by_rank);
        Ok(hits
            .into_iter()
            .map(|s| Neighbor {
                doc_id: ids[s.node as usize].clone(),
                score: s.score,
            })
            .collect())
    }

    /// Searches many queries on the current rayon pool; output order follows input order.
    pub fn batch_search(
        &self,
        queries: &[&[f32]],
        k: usize,
        filters: &[SearchFilter],
    ) -> Result<Vec<Vec<Neighbor>>> {
        if queries.len() != filters.len() {
            return Err(IndexError::BatchShape {
                queries: queries.len(),
                filters: filters.len(),
            });
        }
        queries
            .par_iter()
            .zip(filters.par_iter())
            .map(|(q, f)| self.search(q, k, f, None))
            .collect()
    }

    /// [`batch_search`](Self::batch_search) on a dedicated pool of `threads` workers.
    pub fn batch_search_with_threads(
        &self,
        queries: &[&[f32]],
        k: usize,
        filters: &[SearchFilter],
        threads: usize,
    ) -> Result<Vec<Vec<Neighbor>>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| IndexError::ThreadPool(e.to_string()))?;
        pool.install(|| self.batch_search(queries, k, filters))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_store(n: usize, dim: usize, seed: u64) -> (EmbeddingStore, HashMap<String, DocMeta>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = EmbeddingStore::new(dim, "test").unwrap();
        let mut meta = HashMap::new();
        for i in 0..n {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let v: Vec<f32> = v.iter().map(|x| (x / nv) as f32).collect();
            let id = format!("d{i:05}");
            store.insert(id.clone(), &v).unwrap();
            let kind = if i % 4 == 0 {
                DocKind::Patent
            } else {
                DocKind::Paper
            };
            meta.insert(
                id,
                DocMeta {
                    year: 1990 + (i % 30) as i32,
                    kind,
                },
            );
        }
        (store, meta)
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[0.6, 0.8], &[0.6, 0.8]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let h = std::f32::consts::FRAC_1_SQRT_2;
        let expected = std::f64::consts::FRAC_1_SQRT_2;
        assert!((cosine(&[1.0, 0.0], &[h, h]).unwrap() - expected).abs() <= 1e-7);
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 0.0]),
            Err(IndexError::ZeroVector(_))
        ));
        assert!(matches!(
            cosine(&[1.0], &[1.0, 0.0]),
            Err(IndexError::DimMismatch { .. })
        ));
    }

    #[test]
    fn empty_index() {
        let store = EmbeddingStore::new(4, "x").unwrap();
        for config in [IndexConfig::exact(), IndexConfig::default()] {
            let idx = VectorIndex::build(store.clone(), &HashMap::new(), config).unwrap();
            assert!(idx.is_empty());
            let hits = idx
                .search(&[1.0, 0.0, 0.0, 0.0], 5, &SearchFilter::default(), None)
                .unwrap();
            assert!(hits.is_empty());
        }
    }

    #[test]
    fn exact_index_size() {
        let (store, meta) = random_store(1000, 16, 1);
        let idx = VectorIndex::build(store, &meta, IndexConfig::exact()).unwrap();
        assert_eq!(idx.len(), 1000);
    }

    #[test]
    fn missing_meta_is_named() {
        let (store, mut meta) = random_store(10, 4, 2);
        meta.remove("d00007");
        assert!(matches!(
            VectorIndex::build(store, &meta, IndexConfig::exact()),
            Err(IndexError::MissingMeta(id)) if id == "d00007"
        ));
    }

    #[test]
    fn self_retrieval() {
        let (store, meta) = random_store(500, 32, 3);
        let q = store.get("d00123").unwrap().to_vec();
        for config in [IndexConfig::exact(), IndexConfig::default()] {
            let idx = VectorIndex::build(store.clone(), &meta, config).unwrap();
            let hits = idx.search(&q, 1, &SearchFilter::default(), None).unwrap();
            assert_eq!(hits[0].doc_id, "d00123");
            assert_eq!(hits[0].score, 1.0);
        }
    }

    #[test]
    fn k_beyond_population_returns_all_matches() {
        let (store, meta) = random_store(200, 8, 4);
        let idx = VectorIndex::build(store.clone(), &meta, IndexConfig::exact()).unwrap();
        let filter = SearchFilter::new(None, None, Some(DocKind::Patent)).unwrap();
        let hits = idx.search(store.row(0), 1000, &filter, None).unwrap();
        assert_eq!(hits.len(), 50);
        assert!(hits.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn query_errors() {
        let (store, meta) = random_store(20, 8, 5);
        let idx = VectorIndex::build(store, &meta, IndexConfig::exact()).unwrap();
        let q = vec![1.0; 8];
        assert!(matches!(
            idx.search(&q, 0, &SearchFilter::default(), None),
            Err(IndexError::ZeroK)
        ));
        assert!(matches!(
            idx.search(&q[..4], 1, &SearchFilter::default(), None),
            Err(IndexError::DimMismatch { .. })
        ));
        let bad = SearchFilter {
            year_min: Some(2000),
            year_max: Some(1990),
            kind: None,
        };
        assert!(matches!(
            idx.search(&q, 1, &bad, None),
            Err(IndexError::InvalidFilter(2000, 1990))
        ));
        let none = SearchFilter {
            year_min: Some(3000),
            ..Default::default()
        };
        assert!(idx.search(&q, 5, &none, None).unwrap().is_empty());
    }

    #[test]
    fn exclusions_are_respected() {
        let (store, meta) = random_store(100, 8, 6);
        let q = store.get("d00010").unwrap().to_vec();
        let exclude: HashSet<String> = ["d00010".to_string()].into();
        for config in [IndexConfig::exact(), IndexConfig::default()] {
            let idx = VectorIndex::build(store.clone(), &meta, config).unwrap();
            let hits = idx
                .search(&q, 10, &SearchFilter::default(), Some(&exclude))
                .unwrap();
            assert!(hits.iter().all(|h| h.doc_id != "d00010"));
            assert_eq!(hits.len(), 10);
        }
    }

    #[test]
    fn ties_break_by_id() {
        let mut store = EmbeddingStore::new(2, "t").unwrap();
        let mut meta = HashMap::new();
        for id in ["c", "a", "b"] {
            store.insert(id, &[1.0, 0.0]).unwrap();
            meta.insert(
                id.to_string(),
                DocMeta {
                    year: 2000,
                    kind: DocKind::Paper,
                },
            );
        }
        for config in [IndexConfig::exact(), IndexConfig::default()] {
            let idx = VectorIndex::build(store.clone(), &meta, config).unwrap();
            let hits = idx
                .search(&[1.0, 0.0], 2, &SearchFilter::default(), None)
                .unwrap();
            assert_eq!(
                hits.iter().map(|h| h.doc_id.as_str()).collect::<Vec<_>>(),
                vec!["a", "b"]
            );
        }
    }

    #[test]
    fn hnsw_is_deterministic() {
        let (store, meta) = random_store(2000, 16, 7);
        let config = IndexConfig {
            seed: 42,
            ..IndexConfig::default()
        };
        let a = VectorIndex::build(store.clone(), &meta, config).unwrap();
        let b = VectorIndex::build(store.clone(), &meta, config).unwrap();
        assert_eq!(a.graph, b.graph);
        for i in (0..2000).step_by(97) {
            let q = store.row(i);
            let f = SearchFilter::default();
            assert_eq!(
                a.search(q, 10, &f, None).unwrap(),
                b.search(q, 10, &f, None).unwrap()
            );
        }
    }

    #[test]
    fn full_beam_recovers_exact() {
        let (store, meta) = random_store(1000, 24, 8);
        let exact = VectorIndex::build(store.clone(), &meta, IndexConfig::exact()).unwrap();
        let config = IndexConfig {
            hnsw_ef_search: 1000,
            ..IndexConfig::default()
        };
        let approx = VectorIndex::build(store.clone(), &meta, config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (mut found, mut total) = (0usize, 0usize);
        for _ in 0..100 {
            let q: Vec<f32> = (0..24).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            let truth: HashSet<String> = exact
                .search(&q, 10, &SearchFilter::default(), None)
                .unwrap()
                .into_iter()
                .map(|n| n.doc_id)
                .collect();
            let got = approx
                .search(&q, 10, &SearchFilter::default(), None)
                .unwrap();
            found += got.iter().filter(|n| truth.contains(&n.doc_id)).count();
            total += 10;
        }
        let recall = found as f64 / total as f64;
        assert!(recall >= 0.999, "recall {recall}");
    }

    #[test]
    fn batch_matches_single_and_thread_count() {
        let (store, meta) = random_store(3000, 16, 10);
        let idx = VectorIndex::build(store.clone(), &meta, IndexConfig::default()).unwrap();
        let queries: Vec<&[f32]> = (0..100).map(|i| store.row(i * 7)).collect();
        let filters: Vec<SearchFilter> = (0..100)
            .map(|i| SearchFilter::paper_window(2000 + (i % 7), 3))
            .collect();
        let one = idx
            .batch_search_with_threads(&queries, 10, &filters, 1)
            .unwrap();
        let eight = idx
            .batch_search_with_threads(&queries, 10, &filters, 8)
            .unwrap();
        assert_eq!(one, eight);
        let single = idx.search(queries[0], 10, &filters[0], None).unwrap();
        assert_eq!(
            idx.batch_search(&queries[..1], 10, &filters[..1]).unwrap(),
            vec![single]
        );
        assert!(idx.batch_search(&[], 10, &[]).unwrap().is_empty());
    }

    #[test]
    fn zero_vectors_rejected_at_build() {
        let mut store = EmbeddingStore::new(2, "t").unwrap();
        store.insert("z", &[0.0, 0.0]).unwrap();
        let meta = HashMap::from([(
            "z".to_string(),
            DocMeta {
                year: 2000,
                kind: DocKind::Paper,
            },
        )]);
        assert!(matches!(
            VectorIndex::build(store, &meta, IndexConfig::exact()),
            Err(IndexError::ZeroVector(Some(id))) if id == "z"
        ));
    }
}
