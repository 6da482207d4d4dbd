use std::collections::BTreeMap;

use crossim_core::stats::welch_t_test;
use crossim_core::studies::{
    ppc_match_study, ppp_ppc_similarity, predict_ppp, restrict_to_representatives,
    write_match_records, write_pair_records, write_ppp_outcomes, Histogram, PairType,
    PpcMatchConfig, PppPredictConfig,
};
use serde::Serialize;

use super::{
    create, load_citations, load_documents, load_index, load_ppps, load_store, out_dir, write_csv,
    write_json,
};
use super::{PpcMatchArgs, PppPredictArgs, PppSepArgs};
use crate::config::{require_path, RunConfig};
use crate::manifest::Run;

#[derive(Serialize)]
struct HistogramRow<'a> {
    series: &'a str,
    bin_lo: f64,
    bin_hi: f64,
    count: u64,
}

fn histogram_rows<'a>(
    series: &'a str,
    h: &'a Histogram,
) -> impl Iterator<Item = HistogramRow<'a>> + 'a {
    h.rows().map(move |(bin_lo, bin_hi, count)| HistogramRow {
        series,
        bin_lo,
        bin_hi,
        count,
    })
}

#[derive(Serialize)]
struct Moments {
    n: usize,
    mean: Option<f64>,
    median: Option<f64>,
    std_dev: Option<f64>,
    missing_embeddings: usize,
}

fn moments(values: &[f64], missing: usize) -> Moments {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mean = (n > 0).then(|| v.iter().sum::<f64>() / n as f64);
    let median = (n > 0).then(|| {
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    });
    let std_dev = mean
        .filter(|_| n > 1)
        .map(|m| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
    Moments {
        n,
        mean,
        median,
        std_dev,
        missing_embeddings: missing,
    }
}

pub fn separation(
    args: &PppSepArgs,
    cfg: &mut RunConfig,
    name: &str,
    argv: &[String],
) -> anyhow::Result<()> {
    let dir = out_dir(&args.out, cfg, "ppp-sep")?;
    let mut run = Run::start(name, argv, cfg);
    let ppps = load_ppps(&run.input(&require_path(&args.ppps, &cfg.paths.ppps, "ppps")?)?)?;
    let ppcs = load_citations(&run.input(&require_path(
        &args.citations,
        &cfg.paths.citations,
        "citations",
    )?)?)?;
    let store = load_store(&run.input(&require_path(&args.store, &cfg.paths.store, "store")?)?)?;
    let result = ppp_ppc_similarity(&ppps, &ppcs, &store)?;

    let (ppp, ppc) = (
        result.similarities(PairType::Ppp),
        result.similarities(PairType::Ppc),
    );
    let welch = welch_t_test(&ppp, &ppc).ok();
    let missing = |t| result.missing_embeddings.get(&t).copied().unwrap_or(0);
    let summary = serde_json::json!({
        "ppp": moments(&ppp, missing(PairType::Ppp)),
        "ppc": moments(&ppc, missing(PairType::Ppc)),
        "excluded_ppc": result.excluded_ppc,
        "welch_ppp_greater": welch,
    });

    let pairs_path = dir.join("pairs.csv");
    write_pair_records(create(&pairs_path)?, &result.records)?;
    let hist_path = dir.join("histogram.csv");
    let names: BTreeMap<PairType, String> = result
        .histograms
        .keys()
        .map(|t| (*t, t.to_string()))
        .collect();
    write_csv(
        &hist_path,
        result
            .histograms
            .iter()
            .flat_map(|(t, h)| histogram_rows(&names[t], h)),
    )?;
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, &summary)?;
    for p in [&pairs_path, &hist_path, &summary_path] {
        run.output(p)?;
    }
    run.finish(&dir)?;
    Ok(())
}

pub fn predict(
    args: &PppPredictArgs,
    cfg: &mut RunConfig,
    name: &str,
    argv: &[String],
) -> anyhow::Result<()> {
    cfg.study.predict_k = args.k.unwrap_or(cfg.study.predict_k);
    cfg.study.window_years = args.window_years.unwrap_or(cfg.study.window_years);
    let dir = out_dir(&args.out, cfg, "ppp-predict")?;
    let mut run = Run::start(name, argv, cfg);
    let ppps = load_ppps(&run.input(&require_path(&args.ppps, &cfg.paths.ppps, "ppps")?)?)?;
    let index_path = run.input(&require_path(&args.index, &cfg.paths.index, "index")?)?;
    let store_path = run.input(&require_path(&args.store, &cfg.paths.store, "store")?)?;
    let index = load_index(&index_path, &store_path)?;
    let config = PppPredictConfig {
        k: cfg.study.predict_k,
        window_years: cfg.study.window_years,
    };
    let result = predict_ppp(&ppps, &index, config)?;

    let outcomes_path = dir.join("outcomes.csv");
    write_ppp_outcomes(create(&outcomes_path)?, &result.outcomes)?;
    let summary_path = dir.join("summary.csv");
    write_csv(&summary_path, &result.summary)?;
    let ecdf_path = dir.join("ecdf.csv");
    write_csv(&ecdf_path, &result.ecdf)?;
    let unscored_path = dir.join("unscored.csv");
    write_csv(&unscored_path, &result.unscored)?;
    if let Some(total) = result.summary.last() {
        log::info!(
            "{} of {} pairs within the top {}",
            total.matched,
            total.count,
            config.k
        );
    }
    for p in [&outcomes_path, &summary_path, &ecdf_path, &unscored_path] {
        run.output(p)?;
    }
    run.finish(&dir)?;
    Ok(())
}

#[derive(Serialize)]
struct MatchSummary {
    links: usize,
    patents: usize,
    matched: usize,
    match_rate: f64,
    mean_patent_share: Option<f64>,
    unscored_links: usize,
    k: usize,
    rank_threshold: usize,
    representatives_only: bool,
}

pub fn ppc_match(
    args: &PpcMatchArgs,
    cfg: &mut RunConfig,
    name: &str,
    argv: &[String],
) -> anyhow::Result<()> {
    cfg.study.match_k = args.k.unwrap_or(cfg.study.match_k);
    cfg.study.rank_threshold = args.rank_threshold.unwrap_or(cfg.study.rank_threshold);
    if args.all_members {
        cfg.study.representatives_only = false;
    }
    let dir = out_dir(&args.out, cfg, "ppc-match")?;
    let mut run = Run::start(name, argv, cfg);
    let mut ppcs = load_citations(&run.input(&require_path(
        &args.citations,
        &cfg.paths.citations,
        "citations",
    )?)?)?;
    let docs = load_documents(&run.input(&require_path(
        &args.documents,
        &cfg.paths.documents,
        "documents",
    )?)?)?;
    let index_path = run.input(&require_path(&args.index, &cfg.paths.index, "index")?)?;
    let store_path = run.input(&require_path(&args.store, &cfg.paths.store, "store")?)?;
    let index = load_index(&index_path, &store_path)?;
    if cfg.study.representatives_only {
        let before = ppcs.len();
        ppcs = restrict_to_representatives(&ppcs, &docs);
        log::info!(
            "kept {} of {before} citations made by family representatives",
            ppcs.len()
        );
    }
    let config = PpcMatchConfig {
        k: cfg.study.match_k,
        rank_threshold: cfg.study.rank_threshold,
    };
    let result = ppc_match_study(&ppcs, &docs, &index, config)?;

    let matched = result.records.iter().filter(|r| r.matched).count();
    let n_patents = result.per_patent.len();
    let summary = MatchSummary {
        links: result.records.len(),
        patents: n_patents,
        matched,
        match_rate: result.match_rate(),
        mean_patent_share: (n_patents > 0)
            .then(|| result.per_patent.iter().map(|p| p.share).sum::<f64>() / n_patents as f64),
        unscored_links: result.unscored.len(),
        k: config.k,
        rank_threshold: config.rank_threshold,
        representatives_only: cfg.study.representatives_only,
    };

    let records_path = dir.join("records.csv");
    write_match_records(create(&records_path)?, &result.records)?;
    let shares_path = dir.join("per_patent.csv");
    write_csv(&shares_path, &result.per_patent)?;
    let hist_path = dir.join("share_histogram.csv");
    write_csv(&hist_path, histogram_rows("share", &result.share_histogram))?;
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, &summary)?;
    log::info!("{matched} of {} citations matched", summary.links);
    for p in [&records_path, &shares_path, &hist_path, &summary_path] {
        run.output(p)?;
    }
    run.finish(&dir)?;
    Ok(())
}
