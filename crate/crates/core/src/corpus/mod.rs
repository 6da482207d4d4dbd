//! Patent and publication records, citation links, and text preparation.
//!
//! Everything downstream (embedding, benchmark construction, studies) consumes
//! the immutable values produced here.

mod clean;
mod family;
mod io;
mod lang;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clean::{clean_abstract, CleaningRule, CleaningRules};
pub use family::{
    authority_rank, compare_application_ids, select_family_representative, PECKING_ORDER,
};
pub use io::{
    ingest_documents, read_citations, read_documents_jsonl, read_documents_tsv, read_ppps,
    reconstruct_abstract, write_citations, write_documents, write_ppps, DocumentFormat,
};
pub use lang::{detect_language, is_english, LanguageDetector, LanguageGuess};

/// Separator placed between title and abstract when building encoder input.
pub const DEFAULT_SEPARATOR: &str = "[SEP]";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: field `{field}`: {reason}")]
    Malformed {
        line: usize,
        field: String,
        reason: String,
    },
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("duplicate position {0} in inverted abstract")]
    DuplicatePosition(u32),
    #[error("family representative requested for an empty member list")]
    EmptyFamily,
    #[error("document `{id}` is missing `{field}`")]
    MissingField { id: String, field: &'static str },
    #[error("document `{0}` belongs to a different family")]
    FamilyMismatch(String),
    #[error("document `{0}` has neither title nor abstract")]
    EmptyDocument(String),
    #[error("missing header: expected columns {expected:?}, found {found:?}")]
    Header {
        expected: Vec<&'static str>,
        found: Vec<String>,
    },
    #[error("invalid cleaning rule on line {line}: {reason}")]
    Rule { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Patent,
    Paper,
}

impl DocKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DocKind::Patent => "patent",
            DocKind::Paper => "paper",
        }
    }
}

impl fmt::Display for DocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "patent" => Ok(DocKind::Patent),
            "paper" => Ok(DocKind::Paper),
            other => Err(format!("unknown document kind `{other}`")),
        }
    }
}

/// Top-level CPC section letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CpcSection {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    Y,
}

impl CpcSection {
    pub const ALL: [CpcSection; 9] = [
        CpcSection::A,
        CpcSection::B,
        CpcSection::C,
        CpcSection::D,
        CpcSection::E,
        CpcSection::F,
        CpcSection::G,
        CpcSection::H,
        CpcSection::Y,
    ];

    pub fn letter(self) -> char {
        match self {
            CpcSection::A => 'A',
            CpcSection::B => 'B',
            CpcSection::C => 'C',
            CpcSection::D => 'D',
            CpcSection::E => 'E',
            CpcSection::F => 'F',
            CpcSection::G => 'G',
            CpcSection::H => 'H',
            CpcSection::Y => 'Y',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        CpcSection::ALL.into_iter().find(|s| s.letter() == c)
    }
}

/// Compact rendering used in TSV files: `{A, G}` becomes `"AG"`.
pub fn cpc_to_letters(set: &BTreeSet<CpcSection>) -> String {
    set.iter().map(|s| s.letter()).collect()
}

pub fn cpc_from_letters(s: &str) -> Result<BTreeSet<CpcSection>, String> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| CpcSection::from_letter(c).ok_or_else(|| format!("invalid CPC section `{c}`")))
        .collect()
}

/// A patent or paper record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub kind: DocKind,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub lang: Option<String>,
    pub pub_date: NaiveDate,
    pub filing_year: Option<i32>,
    pub authority: Option<String>,
    pub family_id: Option<String>,
    pub application_id: Option<String>,
    pub cpc_sections: BTreeSet<CpcSection>,
}

impl Document {
    pub fn pub_year(&self) -> i32 {
        self.pub_date.year()
    }

    /// Family used for deduplication; a patent without a DocDB family is its own family.
    pub fn family_key(&self) -> &str {
        self.family_id.as_deref().unwrap_or(&self.id)
    }

    /// Checks the cross-field invariants, reporting the first violated field.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.id.trim().is_empty() {
            return Err(("id", "must be non-empty".into()));
        }
        if let Some(lang) = &self.lang {
            if lang.len() != 2 || !lang.chars().all(|c| c.is_ascii_lowercase()) {
                return Err(("lang", format!("`{lang}` is not a 2-letter code")));
            }
        }
        if let Some(auth) = &self.authority {
            if auth.len() != 2 || !auth.chars().all(|c| c.is_ascii_uppercase()) {
                return Err((
                    "authority",
                    format!("`{auth}` is not a 2-letter office code"),
                ));
            }
        }
        for (field, value) in [
            ("family_id", &self.family_id),
            ("application_id", &self.application_id),
        ] {
            if value.as_deref().is_some_and(|v| v.trim().is_empty()) {
                return Err((field, "must be non-empty when present".into()));
            }
        }
        if self.kind == DocKind::Paper {
            if self.authority.is_some() {
                return Err(("authority", "papers carry no authority".into()));
            }
            if self.family_id.is_some() {
                return Err(("family_id", "papers carry no family".into()));
            }
            if self.filing_year.is_some() {
                return Err(("filing_year", "papers carry no filing year".into()));
            }
            if !self.cpc_sections.is_empty() {
                return Err(("cpc_sections", "papers carry no CPC sections".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CitationLocation {
    Front,
    Body,
    FrontAndBody,
}

impl CitationLocation {
    pub fn as_str(self) -> &'static str {
        match self {
            CitationLocation::Front => "front",
            CitationLocation::Body => "body",
            CitationLocation::FrontAndBody => "front_and_body",
        }
    }
}

impl fmt::Display for CitationLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CitationLocation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "front" => Ok(CitationLocation::Front),
            "body" => Ok(CitationLocation::Body),
            "front_and_body" => Ok(CitationLocation::FrontAndBody),
            other => Err(format!("unknown citation location `{other}`")),
        }
    }
}

/// A patent's reference to a scientific paper (PPC).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationLink {
    pub patent_id: String,
    pub paper_id: String,
    /// 1 (lowest) to 10 (highest).
    pub confidence: u8,
    pub location: CitationLocation,
    pub self_citation: bool,
}

/// A verified patent-paper pair (PPP) with confidence level 1-4.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PppRecord {
    pub patent_id: String,
    pub paper_id: String,
    pub confidence_level: u8,
}

/// Title, separator, and cleaned abstract, as fed to the encoder.
pub fn build_model_input(doc: &Document, separator: &str) -> Result<String> {
    let abstract_text = clean_abstract(&doc.abstract_text);
    let title = doc.title.trim();
    if title.is_empty() && abstract_text.is_empty() {
        return Err(CorpusError::EmptyDocument(doc.id.clone()));
    }
    Ok(format!("{title}{separator}{abstract_text}"))
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn model_input_joins_title_and_abstract() {
        let doc = paper("w1", "T", "A");
        assert_eq!(
            build_model_input(&doc, DEFAULT_SEPARATOR).unwrap(),
            "T[SEP]A"
        );
    }

    #[test]
    fn model_input_with_empty_abstract() {
        let doc = paper("w1", "T", "");
        assert_eq!(
            build_model_input(&doc, DEFAULT_SEPARATOR).unwrap(),
            "T[SEP]"
        );
    }

    #[test]
    fn model_input_rejects_empty_document() {
        let doc = paper("w1", "", "");
        assert!(matches!(
            build_model_input(&doc, DEFAULT_SEPARATOR),
            Err(CorpusError::EmptyDocument(id)) if id == "w1"
        ));
    }

    #[test]
    fn model_input_cleans_abstract() {
        let doc = paper("w1", "T", "BACKGROUND: We study X. © 2020 Elsevier.");
        assert_eq!(build_model_input(&doc, " | ").unwrap(), "T | We study X.");
    }

    #[test]
    fn paper_invariants() {
        let mut doc = paper("w1", "T", "A");
        assert!(doc.validate().is_ok());
        doc.authority = Some("EP".into());
        assert_eq!(doc.validate().unwrap_err().0, "authority");
        let mut doc = paper("w1", "T", "A");
        doc.cpc_sections.insert(CpcSection::A);
        assert_eq!(doc.validate().unwrap_err().0, "cpc_sections");
    }

    #[test]
    fn cpc_letters() {
        let set = cpc_from_letters("GA").unwrap();
        assert_eq!(cpc_to_letters(&set), "AG");
        assert!(cpc_from_letters("AZ").is_err());
    }
}
