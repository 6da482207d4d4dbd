//! Run configuration: a TOML file with sections, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use crossim_core::embed::DEFAULT_DIM;
use crossim_core::{IndexConfig, IndexMode, Pooling, StarScheme};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub embedder: EmbedderConfig,
    pub index: IndexSection,
    pub bench: BenchSection,
    pub study: StudySection,
    pub stats: StatsSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub documents: Option<PathBuf>,
    pub citations: Option<PathBuf>,
    pub ppps: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub tasks: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    #[default]
    Toy,
    Imported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub dim: usize,
    pub seed: u64,
    pub pooling: Pooling,
    /// Imported vectors: CSV or raw little-endian f32.
    pub vectors: Option<PathBuf>,
    /// Imported vectors: one id per line.
    pub ids: Option<PathBuf>,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            kind: EmbedderKind::Toy,
            dim: DEFAULT_DIM,
            seed: 0,
            pooling: Pooling::Cls,
            vectors: None,
            ids: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexSection {
    pub mode: IndexMode,
    pub m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub seed: u64,
}

impl Default for IndexSection {
    fn default() -> Self {
        let d = IndexConfig::default();
        Self {
            mode: d.mode,
            m: d.hnsw_m,
            ef_construction: d.hnsw_ef_construction,
            ef_search: d.hnsw_ef_search,
            seed: d.seed,
        }
    }
}

impl IndexSection {
    pub fn to_index_config(&self) -> IndexConfig {
        IndexConfig {
            mode: self.mode,
            hnsw_m: self.m,
            hnsw_ef_construction: self.ef_construction,
            hnsw_ef_search: self.ef_search,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub model: String,
    pub base_model: Option<String>,
    /// Monte-Carlo shuffles for the random-ranking baseline.
    pub shuffles: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            model: "toy".into(),
            base_model: None,
            shuffles: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub predict_k: usize,
    pub window_years: i32,
    pub match_k: usize,
    pub rank_threshold: usize,
    /// Keep only citations made by each family's English representative.
    pub representatives_only: bool,
    pub filing_year_fe: bool,
    pub confidence_fe: bool,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            predict_k: 1000,
            window_years: 9,
            match_k: 3000,
            rank_threshold: 1000,
            representatives_only: true,
            filing_year_fe: true,
            confidence_fe: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub stars: StarScheme,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag value if given, else the configured value, else a usage error naming both.
pub fn require_path(
    flag: &Option<PathBuf>,
    configured: &Option<PathBuf>,
    name: &str,
) -> anyhow::Result<PathBuf> {
    flag.clone().or_else(|| configured.clone()).ok_or_else(|| {
        crate::usage_error(format!(
            "missing --{name} (or paths.{} in the config)",
            name.replace('-', "_")
        ))
    })
}
