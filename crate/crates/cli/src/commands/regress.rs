use std::fs::File;
use std::io::BufReader;

use anyhow::Context;
use crossim_core::stats::{encode_design, ols_fit, summarize};
use crossim_core::studies::{build_regression_frame, read_match_records, FrameOptions};

use super::{out_dir, write_json, RegressArgs};
use crate::config::RunConfig;
use crate::manifest::Run;

pub fn regress(
    args: &RegressArgs,
    cfg: &mut RunConfig,
    name: &str,
    argv: &[String],
) -> anyhow::Result<()> {
    cfg.study.filing_year_fe = args.filing_year_fe.unwrap_or(cfg.study.filing_year_fe);
    cfg.study.confidence_fe = args.confidence_fe.unwrap_or(cfg.study.confidence_fe);
    cfg.stats.stars = args.stars.unwrap_or(cfg.stats.stars);
    let dir = out_dir(&args.out, cfg, "regress")?;
    let mut run = Run::start(name, argv, cfg);
    let path = run.input(&args.records)?;
    let records = read_match_records(BufReader::new(File::open(&path)?))
        .with_context(|| format!("reading {}", path.display()))?;
    let frame = build_regression_frame(
        &records,
        FrameOptions {
            filing_year_fe: cfg.study.filing_year_fe,
            confidence_fe: cfg.study.confidence_fe,
        },
    )?;
    let design = encode_design(&frame.table, &frame.spec)?;
    let fit = ols_fit(&design.matrix, &design.response)?;
    let summary = summarize(&fit, cfg.stats.stars);

    let text_path = dir.join("regression.txt");
    std::fs::write(&text_path, &summary.text)?;
    let csv_path = dir.join("regression.csv");
    std::fs::write(&csv_path, &summary.csv)?;
    let design_path = dir.join("design.json");
    write_json(
        &design_path,
        &serde_json::json!({
            "spec": frame.spec,
            "columns": design.matrix.names(),
            "dropped_constant_columns": frame.dropped,
            "rows": design.matrix.rows(),
            "r_squared": fit.r_squared,
            "r_squared_adj": fit.r_squared_adj,
        }),
    )?;
    print!("{}", summary.text);
    for p in [&text_path, &csv_path, &design_path] {
        run.output(p)?;
    }
    run.finish(&dir)?;
    Ok(())
}
