use std::collections::HashSet;

use anyhow::Context;
use crossim_core::embed::{embed_corpus, import_precomputed};
use crossim_core::index::{meta_from_documents, SearchFilter};
use crossim_core::{sha256_file, ToyEmbedder, VectorIndex};

use super::{load_documents, load_index, load_store, write_json, EmbedArgs, IndexArgs, SearchArgs};
use crate::config::{require_path, EmbedderKind, RunConfig};
use crate::manifest::Run;
use crate::server::SearchResponse;

pub fn embed(
    args: &EmbedArgs,
    cfg: &mut RunConfig,
    name: &str,
    argv: &[String],
) -> anyhow::Result<()> {
    let e = &mut cfg.embedder;
    e.kind = args.embedder.unwrap_or(e.kind);
    e.dim = args.dim.unwrap_or(e.dim);
    e.seed = args.embed_seed.unwrap_or(e.seed);
    e.pooling = args.pooling.unwrap_or(e.pooling);
    e.vectors = args.vectors.clone().or(e.vectors.take());
    e.ids = args.ids.clone().or(e.ids.take());
    let out = require_path(&args.out, &cfg.paths.store, "out")?;
    let mut run = Run::start(name, argv, cfg);

    let store =
        match cfg.embedder.kind {
            EmbedderKind::Toy => {
                let docs_path = run.input(&require_path(
                    &args.documents,
                    &cfg.paths.documents,
                    "documents",
                )?)?;
                let docs = load_documents(&docs_path)?;
                let embedder = ToyEmbedder::new(cfg.embedder.seed, cfg.embedder.dim)?;
                let provenance = format!("{}+{}", embedder.provenance(), cfg.embedder.pooling);
                embed_corpus(
                    &docs,
                    cfg.embedder.pooling,
                    &embedder,
                    cfg.embedder.dim,
                    provenance,
                )?
            }
            EmbedderKind::Imported => {
                let vectors =
                    run.input(cfg.embedder.vectors.as_ref().ok_or_else(|| {
                        crate::usage_error("imported embeddings need --vectors")
                    })?)?;
                let ids = run.input(
                    cfg.embedder
                        .ids
                        .as_ref()
                        .ok_or_else(|| crate::usage_error("imported embeddings need --ids"))?,
                )?;
                let (store, report) = import_precomputed(&vectors, &ids)
                    .with_context(|| format!("importing {}", vectors.display()))?;
                if report.renormalized > 0 {
                    log::warn!(
                        "{} of {} imported vectors were renormalized",
                        report.renormalized,
                        report.rows
                    );
                }
                store
            }
        };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    store
        .save(&out)
        .with_context(|| format!("writing {}", out.display()))?;
    log::info!("stored {} vectors of dim {}", store.len(), store.dim());
    run.output(&out)?;
    run.finish(&out)?;
    Ok(())
}

pub fn index(
    args: &IndexArgs,
    cfg: &mut RunConfig,
    name: &str,
    argv: &[String],
) -> anyhow::Result<()> {
    let s = &mut cfg.index;
    s.mode = args.mode.unwrap_or(s.mode);
    s.m = args.m.unwrap_or(s.m);
    s.ef_construction = args.ef_construction.unwrap_or(s.ef_construction);
    s.ef_search = args.ef_search.unwrap_or(s.ef_search);
    s.seed = cfg.seed;
    let out = require_path(&args.out, &cfg.paths.index, "out")?;
    let mut run = Run::start(name, argv, cfg);
    let store_path = run.input(&require_path(&args.store, &cfg.paths.store, "store")?)?;
    let docs_path = run.input(&require_path(
        &args.documents,
        &cfg.paths.documents,
        "documents",
    )?)?;
    let store = load_store(&store_path)?;
    let meta = meta_from_documents(&load_documents(&docs_path)?);
    let index = VectorIndex::build(store, &meta, cfg.index.to_index_config())?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    index
        .save(&out)
        .with_context(|| format!("writing {}", out.display()))?;
    log::info!("indexed {} vectors ({})", index.len(), cfg.index.mode);
    run.output(&out)?;
    run.finish(&out)?;
    Ok(())
}

pub fn search(
    args: &SearchArgs,
    cfg: &mut RunConfig,
    name: &str,
    argv: &[String],
) -> anyhow::Result<()> {
    let mut run = Run::start(name, argv, cfg);
    let index_path = run.input(&require_path(&args.index, &cfg.paths.index, "index")?)?;
    let store_path = run.input(&require_path(&args.store, &cfg.paths.store, "store")?)?;
    let index = load_index(&index_path, &store_path)?;
    let filter = SearchFilter::new(args.year_min, args.year_max, args.kind)
        .map_err(|e| crate::usage_error(e.to_string()))?;
    let query: Vec<f32> = match (&args.query_id, &args.vector) {
        (Some(id), _) => index
            .store()
            .get(id)
            .ok_or_else(|| crate::input_error(format!("document `{id}` is not in the store")))?
            .to_vec(),
        (None, Some(v)) => v.clone(),
        (None, None) => return Err(crate::usage_error("give --query-id or --vector")),
    };
    let exclude: HashSet<String> = args.exclude.iter().cloned().collect();
    let results = index.search(&query, args.k, &filter, Some(&exclude))?;
    let response = SearchResponse {
        results,
        index_checksum: sha256_file(&index_path)?,
    };
    println!("{}", serde_json::to_string_pretty(&response)?);
    if let Some(out) = &args.out {
        write_json(out, &response)?;
        run.output(out)?;
        run.finish(out)?;
    }
    Ok(())
}
