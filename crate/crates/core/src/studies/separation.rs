//! Cosine similarity of patent-paper pairs versus patent-paper citations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Histogram, Result, StudyError};
use crate::corpus::{CitationLink, PppRecord};
use crate::embed::EmbeddingStore;
use crate::index::cosine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairType {
    Ppp,
    Ppc,
}

impl fmt::Display for PairType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairType::Ppp => "ppp",
            PairType::Ppc => "ppc",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSimRecord {
    pub patent_id: String,
    pub paper_id: String,
    pub pair_type: PairType,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationResult {
    /// Sorted by pair type, patent, paper.
    pub records: Vec<PairSimRecord>,
    pub histograms: BTreeMap<PairType, Histogram>,
    /// Pairs skipped because an embedding is missing.
    pub missing_embeddings: BTreeMap<PairType, usize>,
    /// Citation pairs dropped because they are also patent-paper pairs.
    pub excluded_ppc: usize,
}

impl SeparationResult {
    pub fn similarities(&self, pair_type: PairType) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.pair_type == pair_type)
            .map(|r| r.similarity)
            .collect()
    }
}

/// Scores every distinct PPP and every distinct PPC that is not also a PPP.
pub fn ppp_ppc_similarity(
    ppps: &[PppRecord],
    ppcs: &[CitationLink],
    store: &EmbeddingStore,
) -> Result<SeparationResult> {
    let ppp_keys: BTreeSet<(&str, &str)> = ppps
        .iter()
        .map(|p| (p.patent_id.as_str(), p.paper_id.as_str()))
        .collect();
    let ppc_all: BTreeSet<(&str, &str)> = ppcs
        .iter()
        .map(|c| (c.patent_id.as_str(), c.paper_id.as_str()))
        .collect();
    let ppc_keys: BTreeSet<(&str, &str)> = ppc_all.difference(&ppp_keys).copied().collect();

    let mut result = SeparationResult {
        records: Vec::new(),
        histograms: BTreeMap::new(),
        missing_embeddings: BTreeMap::new(),
        excluded_ppc: ppc_all.len() - ppc_keys.len(),
    };
    for (pair_type, keys) in [(PairType::Ppp, &ppp_keys), (PairType::Ppc, &ppc_keys)] {
        let mut hist = Histogram::similarity();
        let mut missing = 0;
        for &(patent, paper) in keys {
            let (Some(a), Some(b)) = (store.get(patent), store.get(paper)) else {
                missing += 1;
                continue;
            };
            let similarity = cosine(a, b)?;
            hist.add(similarity);
            result.records.push(PairSimRecord {
                patent_id: patent.to_string(),
                paper_id: paper.to_string(),
                pair_type,
                similarity,
            });
        }
        if missing > 0 {
            log::warn!("{missing} {pair_type} pairs lack an embedding");
        }
        result.histograms.insert(pair_type, hist);
        result.missing_embeddings.insert(pair_type, missing);
    }
    if result.records.is_empty() {
        return Err(StudyError::NoPairs);
    }
    Ok(result)
}

pub fn write_pair_records<W: Write>(writer: W, records: &[PairSimRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
