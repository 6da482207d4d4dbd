//! Whether cited papers are among the citing patent's nearest papers, and
//! the regression frame explaining it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Histogram, Result, StudyError};
use crate::corpus::{
    cpc_from_letters, cpc_to_letters, is_english, select_family_representative, CitationLink,
    CitationLocation, CpcSection, DocKind, Document,
};
use crate::index::{SearchFilter, VectorIndex};
use crate::stats::{Column, DesignSpec, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpcMatchConfig {
    pub k: usize,
    /// A citation matches when its 1-based rank is at most this.
    pub rank_threshold: usize,
}

impl Default for PpcMatchConfig {
    fn default() -> Self {
        Self {
            k: 3000,
            rank_threshold: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpcMatchRecord {
    pub patent_id: String,
    pub paper_id: String,
    pub rank: Option<usize>,
    pub matched: bool,
    pub authority: String,
    pub filing_year: i32,
    pub location: CitationLocation,
    pub self_citation: bool,
    pub confidence: u8,
    pub cpc_sections: BTreeSet<CpcSection>,
    /// Distinct papers cited by the patent.
    pub n_paper_citations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatentShare {
    pub patent_id: String,
    pub links: usize,
    pub matched: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcMatchResult {
    /// Sorted by patent, paper.
    pub records: Vec<PpcMatchRecord>,
    /// Sorted by patent.
    pub per_patent: Vec<PatentShare>,
    pub share_histogram: Histogram,
    /// Links whose patent has no embedding.
    pub unscored: Vec<CitationLink>,
}

impl PpcMatchResult {
    pub fn match_rate(&self) -> f64 {
        self.records.iter().filter(|r| r.matched).count() as f64 / self.records.len().max(1) as f64
    }
}

/// Keeps the links of each family's representative: the preferred member
/// (by authority and application id) among members with an English
/// abstract. Families without such a member are dropped.
pub fn restrict_to_representatives(
    links: &[CitationLink],
    documents: &[Document],
) -> Vec<CitationLink> {
    let mut families: BTreeMap<&str, Vec<&Document>> = BTreeMap::new();
    for d in documents.iter().filter(|d| d.kind == DocKind::Patent) {
        if !d.abstract_text.trim().is_empty() && is_english(d) {
            families.entry(d.family_key()).or_default().push(d);
        }
    }
    let reps: BTreeSet<&str> = families
        .values()
        .map(|members| match select_family_representative(members) {
            Ok(d) => d.id.as_str(),
            Err(_) => members
                .iter()
                .map(|d| d.id.as_str())
                .min()
                .expect("non-empty family"),
        })
        .collect();
    links
        .iter()
        .filter(|l| reps.contains(l.patent_id.as_str()))
        .cloned()
        .collect()
}

/// One filtered search per citing patent over papers published in or before
/// its filing year.
pub fn ppc_match_study(
    ppcs: &[CitationLink],
    documents: &[Document],
    index: &VectorIndex,
    config: PpcMatchConfig,
) -> Result<PpcMatchResult> {
    if config.rank_threshold == 0 || config.k < config.rank_threshold {
        return Err(StudyError::Config(format!(
            "k ({}) must be at least the rank threshold ({}), which must be positive",
            config.k, config.rank_threshold
        )));
    }
    let docs: HashMap<&str, &Document> = documents.iter().map(|d| (d.id.as_str(), d)).collect();

    let mut links: Vec<&CitationLink> = ppcs.iter().collect();
    links.sort_by(|a, b| {
        (&a.patent_id, &a.paper_id)
            .cmp(&(&b.patent_id, &b.paper_id))
            .then(b.confidence.cmp(&a.confidence))
    });
    links.dedup_by(|a, b| a.patent_id == b.patent_id && a.paper_id == b.paper_id);

    let mut by_patent: BTreeMap<&str, Vec<&CitationLink>> = BTreeMap::new();
    for l in links {
        by_patent.entry(&l.patent_id).or_default().push(l);
    }
    let groups: Vec<(&str, Vec<&CitationLink>)> = by_patent.into_iter().collect();

    let per_patent = groups
        .par_iter()
        .map(|(patent_id, links)| {
            let doc = docs
                .get(patent_id)
                .ok_or_else(|| StudyError::MissingDocument(patent_id.to_string()))?;
            let missing = |field| StudyError::MissingField {
                id: patent_id.to_string(),
                field,
            };
            let filing_year = doc.filing_year.ok_or_else(|| missing("filing_year"))?;
            let authority = doc.authority.clone().ok_or_else(|| missing("authority"))?;
            let Some(vector) = index.store().get(patent_id) else {
                return Ok(None);
            };
            let filter = SearchFilter {
                year_min: None,
                year_max: Some(filing_year),
                kind: Some(DocKind::Paper),
            };
            let hits = index.search(vector, config.k, &filter, None)?;
            let ranks: HashMap<&str, usize> = hits
                .iter()
                .enumerate()
                .map(|(i, n)| (n.doc_id.as_str(), i + 1))
                .collect();
            let records: Vec<PpcMatchRecord> = links
                .iter()
                .map(|l| {
                    let rank = ranks.get(l.paper_id.as_str()).copied();
                    PpcMatchRecord {
                        patent_id: l.patent_id.clone(),
                        paper_id: l.paper_id.clone(),
                        rank,
                        matched: rank.is_some_and(|r| r <= config.rank_threshold),
                        authority: authority.clone(),
                        filing_year,
                        location: l.location,
                        self_citation: l.self_citation,
                        confidence: l.confidence,
                        cpc_sections: doc.cpc_sections.clone(),
                        n_paper_citations: links.len(),
                    }
                })
                .collect();
            Ok(Some(records))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut result = PpcMatchResult {
        records: Vec::new(),
        per_patent: Vec::new(),
        share_histogram: Histogram::share(),
        unscored: Vec::new(),
    };
    for ((patent_id, links), records) in groups.iter().zip(per_patent) {
        match records {
            Some(records) => {
                let matched = records.iter().filter(|r| r.matched).count();
                let share = matched as f64 / records.len() as f64;
                result.share_histogram.add(share);
                result.per_patent.push(PatentShare {
                    patent_id: patent_id.to_string(),
                    links: records.len(),
                    matched,
                    share,
                });
                result.records.extend(records);
            }
            None => result.unscored.extend(links.iter().map(|l| (*l).clone())),
        }
    }
    if !result.unscored.is_empty() {
        log::warn!(
            "{} citation links unscored: patent has no embedding",
            result.unscored.len()
        );
    }
    Ok(result)
}

pub const CPC_COLUMNS: [&str; 9] = [
    "cpc_A", "cpc_B", "cpc_C", "cpc_D", "cpc_E", "cpc_F", "cpc_G", "cpc_H", "cpc_Y",
];

/// Flat CSV form of [`PpcMatchRecord`].
#[derive(Debug, Serialize, Deserialize)]
struct MatchRow {
    patent_id: String,
    paper_id: String,
    rank: Option<usize>,
    matched: u8,
    authority: String,
    filing_year: i32,
    location: CitationLocation,
    front_and_body: u8,
    self_citation: u8,
    confidence: u8,
    n_paper_citations: usize,
    cpc: String,
    #[serde(rename = "cpc_A")]
    a: u8,
    #[serde(rename = "cpc_B")]
    b: u8,
    #[serde(rename = "cpc_C")]
    c: u8,
    #[serde(rename = "cpc_D")]
    d: u8,
    #[serde(rename = "cpc_E")]
    e: u8,
    #[serde(rename = "cpc_F")]
    f: u8,
    #[serde(rename = "cpc_G")]
    g: u8,
    #[serde(rename = "cpc_H")]
    h: u8,
    #[serde(rename = "cpc_Y")]
    y: u8,
}

pub fn write_match_records<W: Write>(writer: W, records: &[PpcMatchRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        let has = |s: CpcSection| u8::from(r.cpc_sections.contains(&s));
        w.serialize(MatchRow {
            patent_id: r.patent_id.clone(),
            paper_id: r.paper_id.clone(),
            rank: r.rank,
            matched: u8::from(r.matched),
            authority: r.authority.clone(),
            filing_year: r.filing_year,
            location: r.location,
            front_and_body: u8::from(r.location == CitationLocation::FrontAndBody),
            self_citation: u8::from(r.self_citation),
            confidence: r.confidence,
            n_paper_citations: r.n_paper_citations,
            cpc: cpc_to_letters(&r.cpc_sections),
            a: has(CpcSection::A),
            b: has(CpcSection::B),
            c: has(CpcSection::C),
            d: has(CpcSection::D),
            e: has(CpcSection::E),
            f: has(CpcSection::F),
            g: has(CpcSection::G),
            h: has(CpcSection::H),
            y: has(CpcSection::Y),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_match_records<R: Read>(reader: R) -> Result<Vec<PpcMatchRecord>> {
    let mut out = Vec::new();
    for (i, row) in csv::Reader::from_reader(reader)
        .deserialize::<MatchRow>()
        .enumerate()
    {
        let row = row?;
        let cpc_sections = cpc_from_letters(&row.cpc)
            .map_err(|e| StudyError::Config(format!("match record {}: {e}", i + 1)))?;
        out.push(PpcMatchRecord {
            patent_id: row.patent_id,
            paper_id: row.paper_id,
            rank: row.rank,
            matched: row.matched == 1,
            authority: row.authority,
            filing_year: row.filing_year,
            location: row.location,
            self_citation: row.self_citation == 1,
            confidence: row.confidence,
            cpc_sections,
            n_paper_citations: row.n_paper_citations,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameOptions {
    pub filing_year_fe: bool,
    pub confidence_fe: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFrame {
    pub table: Table,
    pub spec: DesignSpec,
    /// Indicator columns left out because they are constant in the data.
    pub dropped: Vec<String>,
}

pub const REFERENCE_AUTHORITY: &str = "EP";

/// Response `matched`; authority dummies against EP, front-and-body and
/// self-citation indicators, citation count, optional year and confidence
/// fixed effects, and one indicator per CPC section.
pub fn build_regression_frame(
    records: &[PpcMatchRecord],
    options: FrameOptions,
) -> Result<RegressionFrame> {
    if records.is_empty() {
        return Err(StudyError::NoPairs);
    }
    let invalid: Vec<(usize, String)> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            !(r.authority.len() == 2 && r.authority.bytes().all(|b| b.is_ascii_uppercase()))
        })
        .map(|(i, r)| (i + 1, r.authority.clone()))
        .collect();
    if !invalid.is_empty() {
        return Err(StudyError::InvalidAuthority(invalid));
    }

    let num = |f: &dyn Fn(&PpcMatchRecord) -> f64| Column::Numeric(records.iter().map(f).collect());
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let mut table = Table::new()
        .with("matched", num(&|r| flag(r.matched)))?
        .with(
            "authority",
            Column::Text(records.iter().map(|r| r.authority.clone()).collect()),
        )?
        .with(
            "front_and_body",
            num(&|r| flag(r.location == CitationLocation::FrontAndBody)),
        )?
        .with("self_citation", num(&|r| flag(r.self_citation)))?
        .with("n_paper_citations", num(&|r| r.n_paper_citations as f64))?
        .with("filing_year", num(&|r| r.filing_year as f64))?
        .with("confidence", num(&|r| r.confidence as f64))?;
    for (name, section) in CPC_COLUMNS.iter().zip(CpcSection::ALL) {
        table.push(*name, num(&|r| flag(r.cpc_sections.contains(&section))))?;
    }

    let mut dropped = Vec::new();
    let mut varying = |names: &[&str]| -> Result<Vec<String>> {
        let mut keep = Vec::new();
        for &n in names {
            let v = table.numeric(n)?;
            if v.iter().all(|x| *x == v[0]) {
                log::warn!("dropping constant indicator `{n}`");
                dropped.push(n.to_string());
            } else {
                keep.push(n.to_string());
            }
        }
        Ok(keep)
    };
    let indicators = varying(&["front_and_body", "self_citation"])?;
    let cpc = varying(&CPC_COLUMNS)?;

    let mut spec = DesignSpec::new("matched")
        .categorical("authority", Some(REFERENCE_AUTHORITY))
        .dummies(indicators)
        .continuous("n_paper_citations");
    if options.filing_year_fe {
        spec = spec.categorical("filing_year", None);
    }
    if options.confidence_fe {
        spec = spec.categorical("confidence", None);
    }
    spec = spec.dummies(cpc);
    Ok(RegressionFrame {
        table,
        spec,
        dropped,
    })
}
