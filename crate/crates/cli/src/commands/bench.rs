use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;

use anyhow::Context;
use crossim_core::evalbench::{
    aggregate, build_tasks, comparison_table, evaluate, random_baseline_map, read_metric_rows,
    read_tasks, write_metric_rows, write_tasks, Metric, MetricRow, QueryMetrics,
};
use serde::Serialize;

use super::{create, load_citations, load_documents, load_store, out_dir, write_csv, write_json};
use super::{BenchBuildArgs, BenchCompareArgs, BenchRunArgs};
use crate::config::{require_path, RunConfig};
use crate::manifest::Run;

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";

pub fn build(
    args: &BenchBuildArgs,
    cfg: &mut RunConfig,
    name: &str,
    argv: &[String],
) -> anyhow::Result<()> {
    let out = require_path(&args.out, &cfg.paths.tasks, "out")?;
    let mut run = Run::start(name, argv, cfg);
    let citations = load_citations(&run.input(&require_path(
        &args.citations,
        &cfg.paths.citations,
        "citations",
    )?)?)?;
    let docs = load_documents(&run.input(&require_path(
        &args.documents,
        &cfg.paths.documents,
        "documents",
    )?)?)?;
    let built = build_tasks(&citations, &docs, cfg.seed)?;
    write_tasks(create(&out)?, &built.tasks)?;
    let skipped = out.with_extension("skipped.csv");
    write_csv(&skipped, &built.skipped)?;
    log::info!(
        "{} tasks, {} families skipped",
        built.tasks.len(),
        built.skipped.len()
    );
    run.output(&out)?;
    run.output(&skipped)?;
    run.finish(&out)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    model: &'a str,
    pooling: String,
    query_count: usize,
    avg_rfr: f64,
    map: f64,
    mrr10: f64,
    random_baseline_map: f64,
    shuffles: usize,
    seed: u64,
}

pub fn run(
    args: &BenchRunArgs,
    cfg: &mut RunConfig,
    name: &str,
    argv: &[String],
) -> anyhow::Result<()> {
    cfg.bench.model = args.model.clone().unwrap_or(cfg.bench.model.clone());
    cfg.bench.shuffles = args.shuffles.unwrap_or(cfg.bench.shuffles);
    cfg.embedder.pooling = args.pooling.unwrap_or(cfg.embedder.pooling);
    let dir = out_dir(&args.out, cfg, "bench")?;
    let mut run = Run::start(name, argv, cfg);
    let tasks_path = run.input(&require_path(&args.tasks, &cfg.paths.tasks, "tasks")?)?;
    let tasks = read_tasks(BufReader::new(File::open(&tasks_path)?))
        .with_context(|| format!("reading {}", tasks_path.display()))?;
    let store = load_store(&run.input(&require_path(&args.store, &cfg.paths.store, "store")?)?)?;

    let per_query = evaluate(&tasks, &store)?;
    let report = aggregate(&per_query)?;
    let baseline = random_baseline_map(&tasks, cfg.bench.shuffles, cfg.seed)?;
    let rows: Vec<MetricRow> = per_query
        .iter()
        .map(|m| MetricRow::new(&cfg.bench.model, cfg.embedder.pooling, m))
        .collect();

    let metrics_path = dir.join(METRICS_FILE);
    write_metric_rows(create(&metrics_path)?, &rows)?;
    let summary_path = dir.join(SUMMARY_FILE);
    write_json(
        &summary_path,
        &RunSummary {
            model: &cfg.bench.model,
            pooling: cfg.embedder.pooling.to_string(),
            query_count: report.query_count,
            avg_rfr: report.avg_rfr,
            map: report.map,
            mrr10: report.mrr10,
            random_baseline_map: baseline,
            shuffles: cfg.bench.shuffles,
            seed: cfg.seed,
        },
    )?;
    log::info!(
        "MAP {:.4} over {} queries (random {:.4})",
        report.map,
        report.query_count,
        baseline
    );
    run.output(&metrics_path)?;
    run.output(&summary_path)?;
    run.finish(&dir)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ModelRow<'a> {
    model: &'a str,
    queries: usize,
    avg_rfr: f64,
    map: f64,
    mrr10: f64,
}

#[derive(Debug, Serialize)]
struct CoefficientRow<'a> {
    metric: &'a str,
    term: &'a str,
    estimate: f64,
    std_error: f64,
    t_stat: f64,
    p_value: f64,
}

pub fn compare(
    args: &BenchCompareArgs,
    cfg: &mut RunConfig,
    name: &str,
    argv: &[String],
) -> anyhow::Result<()> {
    cfg.stats.stars = args.stars.unwrap_or(cfg.stats.stars);
    let dir = out_dir(&args.out, cfg, "compare")?;
    let mut run = Run::start(name, argv, cfg);
    let mut rows = Vec::new();
    for path in &args.metrics {
        let path = run.input(path)?;
        rows.extend(
            read_metric_rows(File::open(&path)?)
                .with_context(|| format!("reading {}", path.display()))?,
        );
    }
    // a model evaluated under both poolings gets one label per pooling
    let mut poolings: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for r in &rows {
        poolings
            .entry(&r.model)
            .or_default()
            .insert(r.pooling.to_string());
    }
    let label = |r: &MetricRow| {
        if poolings[r.model.as_str()].len() > 1 {
            format!("{}-{}", r.model, r.pooling)
        } else {
            r.model.clone()
        }
    };
    let mut per_model: BTreeMap<String, Vec<QueryMetrics>> = BTreeMap::new();
    for r in &rows {
        per_model.entry(label(r)).or_default().push(r.metrics());
    }
    if per_model.len() < 2 {
        return Err(crate::input_error(format!(
            "need metrics from at least two models, found {:?}",
            per_model.keys().collect::<Vec<_>>()
        )));
    }
    let base = args
        .base
        .clone()
        .or(cfg.bench.base_model.clone())
        .ok_or_else(|| crate::usage_error("missing --base (or bench.base_model in the config)"))?;
    cfg.bench.base_model = Some(base.clone());

    let (fits, summary) = comparison_table(&per_model, &base, cfg.stats.stars)?;
    let models: Vec<ModelRow> = per_model
        .iter()
        .map(|(m, q)| {
            let r = aggregate(q)?;
            Ok(ModelRow {
                model: m,
                queries: r.query_count,
                avg_rfr: r.avg_rfr,
                map: r.map,
                mrr10: r.mrr10,
            })
        })
        .collect::<anyhow::Result<_>>()?;
    let coefficients = fits.iter().flat_map(|(metric, fit)| {
        fit.coefficients.iter().map(move |c| CoefficientRow {
            metric: Metric::label(*metric),
            term: &c.name,
            estimate: c.estimate,
            std_error: c.std_error,
            t_stat: c.t_stat,
            p_value: c.p_value,
        })
    });

    let models_path = dir.join("models.csv");
    write_csv(&models_path, &models)?;
    let text_path = dir.join("comparison.txt");
    std::fs::write(&text_path, &summary.text)?;
    let csv_path = dir.join("comparison.csv");
    std::fs::write(&csv_path, &summary.csv)?;
    let coef_path = dir.join("coefficients.csv");
    write_csv(&coef_path, coefficients)?;
    print!("{}", summary.text);
    for p in [&models_path, &text_path, &csv_path, &coef_path] {
        run.output(p)?;
    }
    run.finish(&dir)?;
    Ok(())
}
