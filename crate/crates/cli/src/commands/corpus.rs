use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};

use anyhow::Context;
use crossim_core::corpus::{ingest_documents, write_documents, CleaningRules, DocumentFormat};
use crossim_core::synth::{generate, SynthConfig, CITATIONS_FILE, DOCUMENTS_FILE, PPPS_FILE};
use serde::Deserialize;

use super::{create, CleanArgs, IngestArgs, SynthArgs};
use crate::config::RunConfig;
use crate::manifest::Run;

#[derive(Deserialize)]
struct SupplementRow {
    id: String,
    #[serde(rename = "abstract")]
    abstract_text: String,
}

pub fn ingest(
    args: &IngestArgs,
    cfg: &RunConfig,
    name: &str,
    argv: &[String],
) -> anyhow::Result<()> {
    let mut run = Run::start(name, argv, cfg);
    let input = run.input(&args.input)?;
    let format = args
        .format
        .unwrap_or_else(|| DocumentFormat::from_path(&input));
    let mut docs =
        ingest_documents(&input, format).with_context(|| format!("reading {}", input.display()))?;

    if let Some(path) = &args.abstracts {
        let path = run.input(path)?;
        let mut supplement = HashMap::new();
        for (i, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: SupplementRow = serde_json::from_str(&line).with_context(|| {
                format!(
                    "{} line {}: expected {{\"id\", \"abstract\"}}",
                    path.display(),
                    i + 1
                )
            })?;
            supplement.insert(row.id, row.abstract_text);
        }
        let mut filled = 0;
        for d in docs
            .iter_mut()
            .filter(|d| d.abstract_text.trim().is_empty())
        {
            if let Some(text) = supplement.get(&d.id).filter(|t| !t.trim().is_empty()) {
                d.abstract_text = text.clone();
                filled += 1;
            }
        }
        log::info!("filled {filled} empty abstracts from {}", path.display());
    }

    write_documents(create(&args.out)?, &docs, DocumentFormat::Jsonl)?;
    log::info!("ingested {} documents", docs.len());
    run.output(&args.out)?;
    run.finish(&args.out)?;
    Ok(())
}

pub fn clean(args: &CleanArgs, cfg: &RunConfig, name: &str, argv: &[String]) -> anyhow::Result<()> {
    let mut run = Run::start(name, argv, cfg);
    let input = run.input(&args.input)?;
    let custom = match &args.rules {
        Some(path) => {
            let path = run.input(path)?;
            Some(
                CleaningRules::parse(&std::fs::read_to_string(&path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
            )
        }
        None => None,
    };
    let rules = custom.as_ref().unwrap_or_else(|| CleaningRules::builtin());
    let mut docs = ingest_documents(&input, DocumentFormat::from_path(&input))?;
    let mut changed = 0;
    for d in &mut docs {
        let cleaned = rules.apply(&d.abstract_text);
        if cleaned != d.abstract_text {
            d.abstract_text = cleaned;
            changed += 1;
        }
    }
    log::info!(
        "cleaned {changed} of {} abstracts with rules v{}",
        docs.len(),
        rules.version
    );
    write_documents(create(&args.out)?, &docs, DocumentFormat::Jsonl)?;
    run.output(&args.out)?;
    run.finish(&args.out)?;
    Ok(())
}

pub fn synth(args: &SynthArgs, cfg: &RunConfig, name: &str, argv: &[String]) -> anyhow::Result<()> {
    let mut run = Run::start(name, argv, cfg);
    let corpus = generate(&SynthConfig::scaled(args.documents, cfg.seed))?;
    corpus.write_to(&args.out)?;
    for file in [DOCUMENTS_FILE, CITATIONS_FILE, PPPS_FILE] {
        run.output(&args.out.join(file))?;
    }
    log::info!(
        "{} documents, {} citations, {} pairs",
        corpus.documents.len(),
        corpus.citations.len(),
        corpus.ppps.len()
    );
    run.finish(&args.out)?;
    Ok(())
}
