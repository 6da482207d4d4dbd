//! Subcommand definitions and dispatch.

mod bench;
mod corpus;
mod embed;
mod regress;
mod report;
mod studies;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use crossim_core::corpus::{ingest_documents, read_citations, read_ppps, DocumentFormat};
use crossim_core::{
    CitationLink, Document, EmbeddingStore, IndexMode, Pooling, PppRecord, StarScheme, VectorIndex,
};
use serde::Serialize;

use crate::config::{EmbedderKind, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "crossim",
    version,
    about = "Patent/paper similarity pipeline",
    arg_required_else_help = true
)]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomised step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Repeat for more logging.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate documents (JSONL or TSV) and write them as JSONL.
    Ingest(IngestArgs),
    /// Apply the abstract cleaning rules.
    Clean(CleanArgs),
    /// Embed documents into a binary store.
    Embed(EmbedArgs),
    /// Build a search index over a store.
    Index(IndexArgs),
    /// Query an index.
    Search(SearchArgs),
    /// Build 5-of-30 triplet tasks from citations.
    BenchBuild(BenchBuildArgs),
    /// Rank benchmark tasks with one store and score them.
    BenchRun(BenchRunArgs),
    /// Regress per-query metrics on model dummies.
    BenchCompare(BenchCompareArgs),
    /// Cosine similarity of patent-paper pairs versus citations.
    StudyPppSep(PppSepArgs),
    /// Rank of each paired paper among the patent's nearest papers.
    StudyPppPredict(PppPredictArgs),
    /// Whether cited papers are among the citing patent's nearest papers.
    StudyPpcMatch(PpcMatchArgs),
    /// Linear probability model over citation match records.
    Regress(RegressArgs),
    /// Serve search and document lookup over HTTP.
    Serve(ServeArgs),
    /// Summarise the manifests and results under a directory.
    Report(ReportArgs),
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Clean(_) => "clean",
            Command::Embed(_) => "embed",
            Command::Index(_) => "index",
            Command::Search(_) => "search",
            Command::BenchBuild(_) => "bench-build",
            Command::BenchRun(_) => "bench-run",
            Command::BenchCompare(_) => "bench-compare",
            Command::StudyPppSep(_) => "study-ppp-sep",
            Command::StudyPppPredict(_) => "study-ppp-predict",
            Command::StudyPpcMatch(_) => "study-ppc-match",
            Command::Regress(_) => "regress",
            Command::Serve(_) => "serve",
            Command::Report(_) => "report",
            Command::Synth(_) => "synth",
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to the input's extension.
    #[arg(long)]
    pub format: Option<DocumentFormat>,
    /// JSONL of `{"id", "abstract"}` filling empty abstracts.
    #[arg(long)]
    pub abstracts: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Rule file replacing the built-in rules.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub documents: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub embedder: Option<EmbedderKind>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Hash seed of the toy embedder.
    #[arg(long)]
    pub embed_seed: Option<u64>,
    #[arg(long)]
    pub pooling: Option<Pooling>,
    /// Imported vectors (CSV or raw f32).
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Imported ids, one per line.
    #[arg(long)]
    pub ids: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub documents: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<IndexMode>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub ef_construction: Option<usize>,
    #[arg(long)]
    pub ef_search: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long, conflicts_with = "vector", required_unless_present = "vector")]
    pub query_id: Option<String>,
    /// Comma-separated components.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub vector: Option<Vec<f32>>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub year_min: Option<i32>,
    #[arg(long)]
    pub year_max: Option<i32>,
    #[arg(long)]
    pub kind: Option<crossim_core::DocKind>,
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    /// Also write the JSON result here, with a manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchBuildArgs {
    #[arg(long)]
    pub citations: Option<PathBuf>,
    #[arg(long)]
    pub documents: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchRunArgs {
    #[arg(long)]
    pub tasks: Option<PathBuf>,
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// Model label written into every row.
    #[arg(long)]
    pub model: Option<String>,
    /// Pooling label written into every row.
    #[arg(long)]
    pub pooling: Option<Pooling>,
    #[arg(long)]
    pub shuffles: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchCompareArgs {
    /// Per-query metric CSVs written by bench-run; repeatable.
    #[arg(long = "metrics", required = true)]
    pub metrics: Vec<PathBuf>,
    #[arg(long)]
    pub base: Option<String>,
    #[arg(long)]
    pub stars: Option<StarScheme>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PppSepArgs {
    #[arg(long)]
    pub ppps: Option<PathBuf>,
    #[arg(long)]
    pub citations: Option<PathBuf>,
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PppPredictArgs {
    #[arg(long)]
    pub ppps: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub window_years: Option<i32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PpcMatchArgs {
    #[arg(long)]
    pub citations: Option<PathBuf>,
    #[arg(long)]
    pub documents: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub rank_threshold: Option<usize>,
    /// Keep citations from every family member, not only the representative.
    #[arg(long)]
    pub all_members: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// Match records written by study-ppc-match.
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub filing_year_fe: Option<bool>,
    #[arg(long)]
    pub confidence_fe: Option<bool>,
    #[arg(long)]
    pub stars: Option<StarScheme>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub store: Option<PathBuf>,
    #[arg(long)]
    pub documents: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory searched recursively for manifests and summaries.
    #[arg(long)]
    pub dir: PathBuf,
    /// Defaults to `report.md` inside `--dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    pub documents: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Config file (if any) with the global flags applied.
fn base_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            if !path.is_file() {
                return Err(crate::input_error(format!(
                    "config file {} does not exist",
                    path.display()
                )));
            }
            RunConfig::load(path)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

pub fn dispatch(cli: &Cli, argv: &[String]) -> anyhow::Result<()> {
    let mut cfg = base_config(cli)?;
    let name = cli.command.name();
    match &cli.command {
        Command::Ingest(a) => corpus::ingest(a, &cfg, name, argv),
        Command::Clean(a) => corpus::clean(a, &cfg, name, argv),
        Command::Synth(a) => corpus::synth(a, &cfg, name, argv),
        Command::Embed(a) => embed::embed(a, &mut cfg, name, argv),
        Command::Index(a) => embed::index(a, &mut cfg, name, argv),
        Command::Search(a) => embed::search(a, &mut cfg, name, argv),
        Command::BenchBuild(a) => bench::build(a, &mut cfg, name, argv),
        Command::BenchRun(a) => bench::run(a, &mut cfg, name, argv),
        Command::BenchCompare(a) => bench::compare(a, &mut cfg, name, argv),
        Command::StudyPppSep(a) => studies::separation(a, &mut cfg, name, argv),
        Command::StudyPppPredict(a) => studies::predict(a, &mut cfg, name, argv),
        Command::StudyPpcMatch(a) => studies::ppc_match(a, &mut cfg, name, argv),
        Command::Regress(a) => regress::regress(a, &mut cfg, name, argv),
        Command::Report(a) => report::report(a, &cfg, name, argv),
        Command::Serve(a) => crate::server::run_from_args(a, &mut cfg),
    }
}

pub(crate) fn load_documents(path: &Path) -> anyhow::Result<Vec<Document>> {
    ingest_documents(path, DocumentFormat::from_path(path))
        .with_context(|| format!("reading {}", path.display()))
}

pub(crate) fn load_citations(path: &Path) -> anyhow::Result<Vec<CitationLink>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_citations(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

pub(crate) fn load_ppps(path: &Path) -> anyhow::Result<Vec<PppRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_ppps(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

pub(crate) fn load_store(path: &Path) -> anyhow::Result<EmbeddingStore> {
    EmbeddingStore::load(path).with_context(|| format!("loading store {}", path.display()))
}

pub(crate) fn load_index(index: &Path, store: &Path) -> anyhow::Result<VectorIndex> {
    let store = load_store(store)?;
    VectorIndex::load(index, store).with_context(|| format!("loading index {}", index.display()))
}

pub(crate) fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub(crate) fn out_dir(
    flag: &Option<PathBuf>,
    cfg: &RunConfig,
    default_name: &str,
) -> anyhow::Result<PathBuf> {
    let dir = flag
        .clone()
        .or_else(|| cfg.paths.out_dir.as_ref().map(|d| d.join(default_name)))
        .ok_or_else(|| crate::usage_error("missing --out (or paths.out_dir in the config)"))?;
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

pub(crate) fn write_csv<T: Serialize>(
    path: &Path,
    rows: impl IntoIterator<Item = T>,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
