//! Cross-corpus semantic similarity between patents and scientific papers.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpus`]: document, citation and patent-paper-pair records; abstract
//!   cleaning, language identification, family representatives.
//! - [`embed`]: the embedding contract, a deterministic feature-hashing
//!   embedder, CLS/mean pooling, and the binary embedding store.
//! - [`index`]: cosine kNN search, exact scan or HNSW, with year/kind filters.
//! - [`evalbench`]: the 5-out-of-30 triplet benchmark and its ranking metrics
//!   (first relevant rank, average precision, reciprocal rank at 10).
//! - [`studies`]: PPP/PPC similarity separation, PPP retrieval, and the PPC
//!   matching study with its regression frame.
//! - [`stats`]: OLS with dummy coding, classical standard errors, BIC, and
//!   table rendering.
//! - [`synth`]: seeded synthetic corpora for tests, benches and demos.

pub mod corpus;
pub mod embed;
pub mod evalbench;
pub mod index;
pub mod stats;
pub mod studies;
pub mod synth;

mod checksum;

pub use checksum::{sha256_file, sha256_hex};
pub use corpus::{CitationLink, CitationLocation, CpcSection, DocKind, Document, PppRecord};
pub use embed::{EmbeddingStore, EmbeddingVector, Pooling, ToyEmbedder};
pub use index::{IndexConfig, IndexMode, Neighbor, SearchFilter, VectorIndex};
pub use stats::{DesignSpec, RegressionFit, StarScheme};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
