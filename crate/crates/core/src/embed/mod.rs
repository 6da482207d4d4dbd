//! Document embeddings: the embedder contract, a deterministic feature-hashing
//! embedder, CLS/mean pooling, and persistent stores.
//!
//! Real encoder output is produced out of process and brought in through
//! [`import_precomputed`]; [`ToyEmbedder`] stands in for it in tests and demos.

mod store;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::corpus::{build_model_input, CorpusError, Document, DEFAULT_SEPARATOR};

pub use store::{import_precomputed, import_rows, EmbeddingStore, ImportReport, STORE_MAGIC};

/// Output width of the encoder family the store format was sized for.
pub const DEFAULT_DIM: usize = 768;

/// Rows further than this from unit norm are re-normalized on import.
pub const IMPORT_NORM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("empty token stream")]
    EmptyTokenStream,
    #[error("embedding is the zero vector; cosine is undefined")]
    ZeroVector,
    #[error("embedding contains NaN or infinite values")]
    NonFinite,
    #[error("dimension must be positive (at least {min}), got {got}")]
    InvalidDim { min: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("no sentences to pool")]
    NoSentences,
    #[error("bad magic bytes: not an embedding store")]
    BadMagic,
    #[error("truncated store: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("{0} unexpected trailing bytes after the vector block")]
    TrailingBytes(u64),
    #[error("invalid UTF-8 in store string table")]
    InvalidUtf8,
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("{ids} ids but {rows} vector rows")]
    CountMismatch { ids: usize, rows: usize },
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("document `{0}`: {1}")]
    Document(String, Box<EmbedError>),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EmbedError> = std::result::Result<T, E>;

/// A dense, finite, fixed-width vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(EmbedError::InvalidDim { min: 1, got: 0 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(Self { values })
    }

    /// Scales `values` (accumulated in f64) to unit length.
    pub fn unit_from_f64(values: &[f64]) -> Result<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(EmbedError::NonFinite);
        }
        if norm == 0.0 {
            return Err(EmbedError::ZeroVector);
        }
        Self::new(values.iter().map(|v| (v / norm) as f32).collect())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn normalized(&self) -> Result<Self> {
        let wide: Vec<f64> = self.values.iter().map(|&v| v as f64).collect();
        Self::unit_from_f64(&wide)
    }
}

impl AsRef<[f32]> for EmbeddingVector {
    fn as_ref(&self) -> &[f32] {
        &self.values
    }
}

pub(crate) fn l2_norm(values: &[f32]) -> f64 {
    values
        .iter()
        .map(|&v| (v as f64) * (v as f64))
        .sum::<f64>()
        .sqrt()
}

/// Anything that maps text to a vector.
pub trait Embedder: Sync {
    fn embed(&self, text: &str) -> Result<EmbeddingVector>;
}

impl<F> Embedder for F
where
    F: Fn(&str) -> Result<EmbeddingVector> + Sync,
{
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        self(text)
    }
}

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Signed feature hashing: every token adds ±1 to one seeded-hash coordinate,
/// and the counts are L2-normalized.
pub fn toy_embed(text: &str, seed: u64, dim: usize) -> Result<EmbeddingVector> {
    if dim < 2 {
        return Err(EmbedError::InvalidDim { min: 2, got: dim });
    }
    let mut acc = vec![0.0f64; dim];
    let mut tokens = 0usize;
    for token in tokenize(text) {
        let h = xxh3_64_with_seed(token.as_bytes(), seed);
        let coord = (h % dim as u64) as usize;
        acc[coord] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        tokens += 1;
    }
    if tokens == 0 {
        return Err(EmbedError::EmptyTokenStream);
    }
    EmbeddingVector::unit_from_f64(&acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyEmbedder {
    pub seed: u64,
    pub dim: usize,
}

impl ToyEmbedder {
    pub fn new(seed: u64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(EmbedError::InvalidDim { min: 2, got: dim });
        }
        Ok(Self { seed, dim })
    }

    /// Provenance label recorded in stores built with this embedder.
    pub fn provenance(&self) -> String {
        format!("toy-v1(seed={},dim={})", self.seed, self.dim)
    }
}

impl Embedder for ToyEmbedder {
    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        toy_embed(text, self.seed, self.dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    /// The whole concatenated input is embedded once.
    #[default]
    Cls,
    /// Each sentence is embedded separately and the unit vectors averaged.
    Mean,
}

impl Pooling {
    pub fn as_str(self) -> &'static str {
        match self {
            Pooling::Cls => "cls",
            Pooling::Mean => "mean",
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pooling {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cls" => Ok(Pooling::Cls),
            "mean" => Ok(Pooling::Mean),
            other => Err(format!("unknown pooling `{other}` (expected cls or mean)")),
        }
    }
}

/// Splits after '.', '!' or '?' when followed by whitespace. Segments without
/// any alphanumeric character are dropped.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') && chars.peek().is_some_and(|(_, n)| n.is_whitespace()) {
            let end = i + c.len_utf8();
            out.push(&text[start..end]);
            start = end;
        }
    }
    out.push(&text[start..]);
    out.into_iter()
        .map(str::trim)
        .filter(|s| s.chars().any(char::is_alphanumeric))
        .collect()
}

/// Arithmetic mean of the vectors, re-normalized to unit length.
pub fn mean_pool(vectors: &[EmbeddingVector]) -> Result<EmbeddingVector> {
    let first = vectors.first().ok_or(EmbedError::NoSentences)?;
    let dim = first.dim();
    let mut acc = vec![0.0f64; dim];
    for v in vectors {
        if v.dim() != dim {
            return Err(EmbedError::DimMismatch {
                expected: dim,
                actual: v.dim(),
            });
        }
        for (a, &x) in acc.iter_mut().zip(v.as_slice()) {
            *a += x as f64;
        }
    }
    let n = vectors.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    EmbeddingVector::unit_from_f64(&acc)
}

pub fn embed_text(
    text: &str,
    pooling: Pooling,
    embedder: &dyn Embedder,
) -> Result<EmbeddingVector> {
    match pooling {
        Pooling::Cls => embedder.embed(text)?.normalized(),
        Pooling::Mean => {
            let sentences = split_sentences(text);
            if sentences.is_empty() {
                return Err(EmbedError::NoSentences);
            }
            let vectors = sentences
                .into_iter()
                .map(|s| embedder.embed(s))
                .collect::<Result<Vec<_>>>()?;
            mean_pool(&vectors)
        }
    }
}

/// Embeds `title [SEP] cleaned abstract` under the given pooling.
pub fn embed_document(
    doc: &Document,
    pooling: Pooling,
    embedder: &dyn Embedder,
) -> Result<EmbeddingVector> {
    let input = build_model_input(doc, DEFAULT_SEPARATOR)?;
    embed_text(&input, pooling, embedder)
}

/// Embeds every document (in parallel) into a new store, in input order.
pub fn embed_corpus(
    docs: &[Document],
    pooling: Pooling,
    embedder: &dyn Embedder,
    dim: usize,
    provenance: impl Into<String>,
) -> Result<EmbeddingStore> {
    use rayon::prelude::*;
    let vectors = docs
        .par_iter()
        .map(|d| {
            embed_document(d, pooling, embedder)
                .map_err(|e| EmbedError::Document(d.id.clone(), Box::new(e)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut store = EmbeddingStore::new(dim, provenance)?;
    for (doc, v) in docs.iter().zip(vectors) {
        store.insert(doc.id.clone(), v.as_slice())?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::paper;
    use crate::index::cosine;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_text(rng: &mut ChaCha8Rng, vocab: usize, len: usize) -> String {
        (0..len)
            .map(|_| format!("tok{}", rng.gen_range(0..vocab)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn deterministic_bitwise() {
        let a = toy_embed("solid state battery electrolyte", 7, 64).unwrap();
        let b = toy_embed("solid state battery electrolyte", 7, 64).unwrap();
        let bits =
            |v: &EmbeddingVector| v.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let len = rng.gen_range(1..60);
            let text = random_text(&mut rng, 500, len);
            let v = toy_embed(&text, 3, DEFAULT_DIM).unwrap();
            assert!((v.norm() - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn empty_token_stream() {
        assert!(matches!(
            toy_embed("  ,;. ", 1, 16),
            Err(EmbedError::EmptyTokenStream)
        ));
        assert!(matches!(
            toy_embed("a", 1, 1),
            Err(EmbedError::InvalidDim { .. })
        ));
    }

    #[test]
    fn seeds_decorrelate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let text = random_text(&mut rng, 5000, 30);
            let a = toy_embed(&text, 1, DEFAULT_DIM).unwrap();
            let b = toy_embed(&text, 2, DEFAULT_DIM).unwrap();
            assert!(cosine(a.as_slice(), b.as_slice()).unwrap() < 0.99);
        }
    }

    #[test]
    fn token_order_is_irrelevant() {
        let a = toy_embed("alpha beta gamma beta", 9, 128).unwrap();
        let b = toy_embed("beta gamma beta ALPHA", 9, 128).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overlap_raises_cosine() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut overlap, mut disjoint) = (0.0, 0.0);
        let n = 1000;
        for _ in 0..n {
            let base: Vec<String> = (0..20)
                .map(|_| format!("w{}", rng.gen_range(0..100_000)))
                .collect();
            let fresh = |rng: &mut ChaCha8Rng| format!("v{}", rng.gen_range(0..100_000));
            let half: Vec<String> = base[..10]
                .iter()
                .cloned()
                .chain((0..10).map(|_| fresh(&mut rng)))
                .collect();
            let other: Vec<String> = (0..20).map(|_| fresh(&mut rng)).collect();
            let e = |t: &[String]| toy_embed(&t.join(" "), 5, DEFAULT_DIM).unwrap();
            overlap += cosine(e(&base).as_slice(), e(&half).as_slice()).unwrap();
            disjoint += cosine(e(&base).as_slice(), e(&other).as_slice()).unwrap();
        }
        assert!(overlap / n as f64 > disjoint / n as f64);
    }

    #[test]
    fn sentence_split_rule() {
        assert_eq!(
            split_sentences("One. Two! Three? Four"),
            vec!["One.", "Two!", "Three?", "Four"]
        );
        assert_eq!(
            split_sentences("v1.2 is out. Yes"),
            vec!["v1.2 is out.", "Yes"]
        );
        assert_eq!(split_sentences("Hi. ... Bye"), vec!["Hi.", "Bye"]);
        assert!(split_sentences("  ").is_empty());
    }

    #[test]
    fn single_sentence_cls_equals_mean() {
        let toy = ToyEmbedder::new(11, 256).unwrap();
        let doc = paper("w", "Laser cavity", "A tunable laser cavity design");
        let cls = embed_document(&doc, Pooling::Cls, &toy).unwrap();
        let mean = embed_document(&doc, Pooling::Mean, &toy).unwrap();
        assert_eq!(cls, mean);
    }

    #[test]
    fn repeated_sentence_mean_equals_single() {
        let toy = ToyEmbedder::new(11, 256).unwrap();
        let one = embed_text("graphene sheets conduct well.", Pooling::Mean, &toy).unwrap();
        let two = embed_text(
            "graphene sheets conduct well. graphene sheets conduct well.",
            Pooling::Mean,
            &toy,
        )
        .unwrap();
        for (a, b) in one.as_slice().iter().zip(two.as_slice()) {
            assert!((a - b).abs() <= 1e-7);
        }
    }

    #[test]
    fn orthogonal_sentences_mean_closed_form() {
        // u = e0, w = e1 -> (u + w) / |u + w| = (1/sqrt2, 1/sqrt2, 0, 0)
        let embedder = |s: &str| -> Result<EmbeddingVector> {
            let v = if s.starts_with("first") {
                vec![1.0, 0.0, 0.0, 0.0]
            } else {
                vec![0.0, 1.0, 0.0, 0.0]
            };
            EmbeddingVector::new(v)
        };
        let pooled = embed_text("first part. second part.", Pooling::Mean, &embedder).unwrap();
        let h = std::f32::consts::FRAC_1_SQRT_2;
        assert_eq!(pooled.as_slice(), &[h, h, 0.0, 0.0]);
    }

    #[test]
    fn cancelling_mean_is_an_error() {
        let embedder = |s: &str| -> Result<EmbeddingVector> {
            EmbeddingVector::new(if s.starts_with('a') {
                vec![1.0, 0.0]
            } else {
                vec![-1.0, 0.0]
            })
        };
        assert!(matches!(
            embed_text("a x. b y.", Pooling::Mean, &embedder),
            Err(EmbedError::ZeroVector)
        ));
        assert!(matches!(
            embed_text("...", Pooling::Mean, &embedder),
            Err(EmbedError::NoSentences)
        ));
    }

    #[test]
    fn pooling_norms() {
        let toy = ToyEmbedder::new(4, DEFAULT_DIM).unwrap();
        let doc = paper(
            "w",
            "Catalysts",
            "We make catalysts. They are fast! Are they cheap? Yes.",
        );
        for pooling in [Pooling::Cls, Pooling::Mean] {
            let v = embed_document(&doc, pooling, &toy).unwrap();
            assert!((v.norm() - 1.0).abs() <= 1e-6);
        }
    }
}
