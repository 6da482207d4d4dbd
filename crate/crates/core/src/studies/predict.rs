//! Retrieving a patent's paired paper among its nearest papers.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{describe, Result, StudyError};
use crate::corpus::PppRecord;
use crate::index::{SearchFilter, VectorIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PppPredictConfig {
    pub k: usize,
    /// Papers published within this many years of the patent, either side.
    pub window_years: i32,
}

impl Default for PppPredictConfig {
    fn default() -> Self {
        Self {
            k: 1000,
            window_years: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PppSearchOutcome {
    pub patent_id: String,
    pub paper_id: String,
    /// 1-based rank among the top k; absent when not retrieved.
    pub rank: Option<usize>,
    pub confidence_level: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    /// Confidence level, or "Total".
    pub level: String,
    /// Scored pairs.
    pub count: usize,
    pub matched: usize,
    pub share_pct: f64,
    /// Over matched ranks.
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub std_dev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfPoint {
    pub level: String,
    pub rank: usize,
    /// Share of matched pairs with rank at most `rank`.
    pub cum_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PppPrediction {
    /// Sorted by patent, paper.
    pub outcomes: Vec<PppSearchOutcome>,
    /// Pairs whose patent has no embedding; not in `outcomes`.
    pub unscored: Vec<PppRecord>,
    pub summary: Vec<RankSummary>,
    pub ecdf: Vec<EcdfPoint>,
}

pub const TOTAL_LEVEL: &str = "Total";

/// One filtered k-nearest search per distinct patent.
pub fn predict_ppp(
    ppps: &[PppRecord],
    index: &VectorIndex,
    config: PppPredictConfig,
) -> Result<PppPrediction> {
    if config.k == 0 || config.window_years < 0 {
        return Err(StudyError::Config(format!(
            "k must be positive and the window non-negative (k={}, window={})",
            config.k, config.window_years
        )));
    }
    let mut by_patent: BTreeMap<&str, Vec<&PppRecord>> = BTreeMap::new();
    for p in ppps {
        by_patent.entry(&p.patent_id).or_default().push(p);
    }
    let groups: Vec<(&str, Vec<&PppRecord>)> = by_patent.into_iter().collect();
    let per_patent = groups
        .par_iter()
        .map(|(patent, pairs)| {
            let (Some(vector), Some(meta)) = (index.store().get(patent), index.meta(patent)) else {
                return Ok(None);
            };
            let filter = SearchFilter::paper_window(meta.year, config.window_years);
            let hits = index.search(vector, config.k, &filter, None)?;
            let ranks: HashMap<&str, usize> = hits
                .iter()
                .enumerate()
                .map(|(i, n)| (n.doc_id.as_str(), i + 1))
                .collect();
            Ok(Some(
                pairs
                    .iter()
                    .map(|p| PppSearchOutcome {
                        patent_id: p.patent_id.clone(),
                        paper_id: p.paper_id.clone(),
                        rank: ranks.get(p.paper_id.as_str()).copied(),
                        confidence_level: p.confidence_level,
                    })
                    .collect::<Vec<_>>(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut outcomes = Vec::new();
    let mut unscored = Vec::new();
    for ((_, pairs), result) in groups.iter().zip(per_patent) {
        match result {
            Some(o) => outcomes.extend(o),
            None => unscored.extend(pairs.iter().map(|p| (*p).clone())),
        }
    }
    outcomes.sort_by(|a, b| (&a.patent_id, &a.paper_id).cmp(&(&b.patent_id, &b.paper_id)));
    unscored.sort_by(|a, b| (&a.patent_id, &a.paper_id).cmp(&(&b.patent_id, &b.paper_id)));
    if !unscored.is_empty() {
        log::warn!(
            "{} patent-paper pairs unscored: patent has no embedding",
            unscored.len()
        );
    }

    let mut levels: BTreeMap<String, Vec<&PppSearchOutcome>> = BTreeMap::new();
    for o in &outcomes {
        levels
            .entry(o.confidence_level.to_string())
            .or_default()
            .push(o);
    }
    let mut groups: Vec<(String, Vec<&PppSearchOutcome>)> = levels.into_iter().collect();
    groups.push((TOTAL_LEVEL.to_string(), outcomes.iter().collect()));

    let mut summary = Vec::new();
    let mut ecdf = Vec::new();
    for (level, group) in &groups {
        let mut ranks: Vec<usize> = group.iter().filter_map(|o| o.rank).collect();
        ranks.sort_unstable();
        let as_f64: Vec<f64> = ranks.iter().map(|&r| r as f64).collect();
        let stats = describe(&as_f64);
        summary.push(RankSummary {
            level: level.clone(),
            count: group.len(),
            matched: ranks.len(),
            share_pct: if group.is_empty() {
                0.0
            } else {
                100.0 * ranks.len() as f64 / group.len() as f64
            },
            median: stats.map(|s| s.0),
            mean: stats.map(|s| s.1),
            std_dev: stats.map(|s| s.2).filter(|s| s.is_finite()),
        });
        for (i, &r) in ranks.iter().enumerate() {
            if ranks.get(i + 1) != Some(&r) {
                ecdf.push(EcdfPoint {
                    level: level.clone(),
                    rank: r,
                    cum_share: (i + 1) as f64 / ranks.len() as f64,
                });
            }
        }
    }
    Ok(PppPrediction {
        outcomes,
        unscored,
        summary,
        ecdf,
    })
}

pub fn write_ppp_outcomes<W: Write>(writer: W, outcomes: &[PppSearchOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for o in outcomes {
        w.serialize(o)?;
    }
    w.flush()?;
    Ok(())
}
