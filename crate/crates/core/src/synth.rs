//! Seeded synthetic corpora: topical papers, patent families across
//! offices, paired papers that reuse most of a patent's content tokens, and
//! cited papers that reuse some.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    write_citations, write_documents, write_ppps, CitationLink, CitationLocation, CorpusError,
    CpcSection, DocKind, Document, DocumentFormat, PppRecord, PECKING_ORDER,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic corpus configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SynthError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Total documents; unrelated papers fill whatever families leave over.
    pub documents: usize,
    pub families: usize,
    pub max_family_size: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    pub general_words: usize,
    /// Content tokens per document, stopwords excluded.
    pub content_tokens: usize,
    /// Share of general (topic-free) words in a fresh text.
    pub general_share: f64,
    /// Share of families whose representative has a paired paper.
    pub ppp_share: f64,
    pub ppp_overlap: f64,
    pub ppc_overlap: f64,
    /// Cited papers per family, inclusive range.
    pub citations_per_family: (usize, usize),
    /// Share of citations pointing at an unrelated earlier paper.
    pub unrelated_citation_share: f64,
    /// Share of citations with confidence below 10.
    pub low_confidence_share: f64,
    pub german_share: f64,
    pub paper_years: (i32, i32),
    pub filing_years: (i32, i32),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            documents: 500,
            families: 40,
            max_family_size: 3,
            topics: 12,
            words_per_topic: 150,
            general_words: 600,
            content_tokens: 40,
            general_share: 0.3,
            ppp_share: 0.5,
            ppp_overlap: 0.8,
            ppc_overlap: 0.3,
            citations_per_family: (5, 9),
            unrelated_citation_share: 0.15,
            low_confidence_share: 0.1,
            german_share: 0.08,
            paper_years: (1975, 2020),
            filing_years: (2000, 2018),
        }
    }
}

impl SynthConfig {
    /// Family count scaled so that families fill about three quarters of `documents`.
    pub fn scaled(documents: usize, seed: u64) -> Self {
        let base = Self::default();
        let (lo, hi) = base.citations_per_family;
        let per_family = (base.max_family_size + 1) as f64 / 2.0
            + base.ppp_share
            + (lo + hi) as f64 / 2.0 * (1.0 - base.unrelated_citation_share);
        Self {
            seed,
            documents,
            families: ((documents as f64 * 0.75 / per_family) as usize).max(1),
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SynthError::Config(m.to_string()));
        let shares = [
            self.general_share,
            self.ppp_share,
            self.ppp_overlap,
            self.ppc_overlap,
            self.unrelated_citation_share,
            self.low_confidence_share,
            self.german_share,
        ];
        if shares.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return bad("shares must lie in [0, 1]");
        }
        if self.topics == 0
            || self.words_per_topic == 0
            || self.general_words == 0
            || self.content_tokens == 0
        {
            return bad("vocabulary and text sizes must be positive");
        }
        if self.max_family_size == 0 || self.citations_per_family.0 > self.citations_per_family.1 {
            return bad("family size must be positive and the citation range ordered");
        }
        if self.paper_years.0 > self.paper_years.1 || self.filing_years.0 > self.filing_years.1 {
            return bad("year ranges must be ordered");
        }
        if self.paper_years.0 >= self.filing_years.0 {
            return bad("papers must start before the first filing year");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthCorpus {
    /// Patents first, then papers, each in id order.
    pub documents: Vec<Document>,
    pub citations: Vec<CitationLink>,
    pub ppps: Vec<PppRecord>,
}

pub const DOCUMENTS_FILE: &str = "documents.jsonl";
pub const CITATIONS_FILE: &str = "citations.tsv";
pub const PPPS_FILE: &str = "ppps.tsv";

impl SynthCorpus {
    pub fn patents(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| d.kind == DocKind::Patent)
    }

    pub fn papers(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| d.kind == DocKind::Paper)
    }

    /// Writes the documents, citations and pairs files into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_documents(
            BufWriter::new(File::create(dir.join(DOCUMENTS_FILE))?),
            &self.documents,
            DocumentFormat::Jsonl,
        )?;
        write_citations(
            BufWriter::new(File::create(dir.join(CITATIONS_FILE))?),
            &self.citations,
        )?;
        write_ppps(
            BufWriter::new(File::create(dir.join(PPPS_FILE))?),
            &self.ppps,
        )?;
        Ok(())
    }
}

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ter", "pho", "gen", "sa", "vor", "li", "dra", "nu", "xi", "bel", "tro",
    "ce", "mon", "ri", "dus", "fa", "zen", "qua", "pel", "o", "vin",
];
const EN_STOP: [&str; 12] = [
    "the", "of", "and", "in", "is", "for", "with", "by", "to", "a", "on", "this",
];
const DE_STOP: [&str; 12] = [
    "der", "die", "und", "mit", "von", "ist", "für", "das", "eine", "zur", "durch", "wird",
];
const OTHER_AUTHORITIES: [&str; 3] = ["AU", "CA", "IN"];

/// Deterministic pronounceable word for a vocabulary slot.
fn word(mut slot: usize) -> String {
    let mut w = String::new();
    loop {
        w.push_str(SYLLABLES[slot % SYLLABLES.len()]);
        slot /= SYLLABLES.len();
        if slot == 0 {
            break;
        }
    }
    w.push_str("ine");
    w
}

struct Vocab {
    topics: Vec<Vec<String>>,
    general: Vec<String>,
}

struct Generator<'a> {
    cfg: &'a SynthConfig,
    rng: ChaCha8Rng,
    vocab: Vocab,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Lang {
    En,
    De,
}

impl Generator<'_> {
    fn fresh_token(&mut self, topic: usize) -> String {
        if self.rng.gen_bool(self.cfg.general_share) {
            self.vocab
                .general
                .choose(&mut self.rng)
                .expect("non-empty")
                .clone()
        } else {
            self.vocab.topics[topic]
                .choose(&mut self.rng)
                .expect("non-empty")
                .clone()
        }
    }

    fn fresh_content(&mut self, topic: usize) -> Vec<String> {
        (0..self.cfg.content_tokens)
            .map(|_| self.fresh_token(topic))
            .collect()
    }

    /// Keeps `overlap` of the source tokens (rounded) and redraws the rest.
    fn derived_content(&mut self, source: &[String], topic: usize, overlap: f64) -> Vec<String> {
        let keep = (source.len() as f64 * overlap).round() as usize;
        let mut out: Vec<String> = source
            .choose_multiple(&mut self.rng, keep)
            .cloned()
            .collect();
        while out.len() < source.len() {
            out.push(self.fresh_token(topic));
        }
        out.shuffle(&mut self.rng);
        out
    }

    fn lang(&mut self) -> Lang {
        if self.rng.gen_bool(self.cfg.german_share) {
            Lang::De
        } else {
            Lang::En
        }
    }

    /// Title from the first few tokens; abstract from the rest with stopwords every third word.
    fn render(&mut self, content: &[String], lang: Lang) -> (String, String) {
        let split = content.len().min(6);
        let mut title = content[..split].join(" ");
        if let Some(first) = title.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        let stop = match lang {
            Lang::En => &EN_STOP,
            Lang::De => &DE_STOP,
        };
        let mut words = Vec::new();
        for (i, w) in content[split..].iter().enumerate() {
            if i % 3 == 0 {
                words.push(*stop.choose(&mut self.rng).expect("non-empty"));
            }
            words.push(w.as_str());
        }
        let abstract_text = if words.is_empty() {
            String::new()
        } else {
            format!("{}.", words.join(" "))
        };
        (title, abstract_text)
    }

    fn date(&mut self, year: i32) -> NaiveDate {
        NaiveDate::from_yo_opt(year, self.rng.gen_range(1..=365)).expect("valid ordinal day")
    }

    fn paper(&mut self, id: String, content: &[String], year: i32, lang: Lang) -> Document {
        let (title, abstract_text) = self.render(content, lang);
        Document {
            id,
            kind: DocKind::Paper,
            title,
            abstract_text,
            lang: Some(if lang == Lang::En { "en" } else { "de" }.into()),
            pub_date: self.date(year),
            filing_year: None,
            authority: None,
            family_id: None,
            application_id: None,
            cpc_sections: BTreeSet::new(),
        }
    }
}

/// Generates a corpus; the same config always yields the same corpus.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let topics = (0..cfg.topics)
        .map(|t| {
            (0..cfg.words_per_topic)
                .map(|j| word(cfg.general_words + t * cfg.words_per_topic + j))
                .collect()
        })
        .collect();
    let general = (0..cfg.general_words).map(word).collect();
    let mut g = Generator {
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        vocab: Vocab { topics, general },
    };

    let mut patents = Vec::new();
    let mut papers: Vec<Document> = Vec::new();
    let mut citations = Vec::new();
    let mut ppps = Vec::new();
    let mut next_paper = 0usize;
    let mut next_application = 0usize;
    let mut paper_id = || {
        next_paper += 1;
        format!("W{next_paper:07}")
    };

    // unrelated papers are created up front so citations can point at them
    let mut planned_unrelated = Vec::new();
    for f in 0..cfg.families {
        let topic = g.rng.gen_range(0..cfg.topics);
        let filing_year = g.rng.gen_range(cfg.filing_years.0..=cfg.filing_years.1);
        let content = g.fresh_content(topic);
        let size = g.rng.gen_range(1..=cfg.max_family_size);
        let mut offices: Vec<&str> = PECKING_ORDER
            .iter()
            .chain(OTHER_AUTHORITIES.iter())
            .copied()
            .collect();
        offices.shuffle(&mut g.rng);
        let family_id = format!("FAM{:06}", f + 1);
        let n_sections = g.rng.gen_range(1..=2);
        let cpc_sections: BTreeSet<CpcSection> = CpcSection::ALL
            .choose_multiple(&mut g.rng, n_sections)
            .copied()
            .collect();
        let mut members = Vec::new();
        for (m, office) in offices.iter().take(size).enumerate() {
            // the first member is always English so every family has a representative
            let lang = if m == 0 { Lang::En } else { g.lang() };
            let (title, abstract_text) = g.render(&content, lang);
            next_application += 1;
            let application_id = format!(
                "{}",
                1_000_000 + next_application * 37 + g.rng.gen_range(0..37)
            );
            let pub_year = filing_year + g.rng.gen_range(1..=3);
            members.push(Document {
                id: format!("{office}{application_id}"),
                kind: DocKind::Patent,
                title,
                abstract_text,
                lang: Some(if lang == Lang::En { "en" } else { "de" }.into()),
                pub_date: g.date(pub_year),
                filing_year: Some(filing_year),
                authority: Some(office.to_string()),
                family_id: Some(family_id.clone()),
                application_id: Some(application_id),
                cpc_sections: cpc_sections.clone(),
            });
        }
        let representative = crate::corpus::select_family_representative(
            &members
                .iter()
                .filter(|d| d.lang.as_deref() == Some("en"))
                .collect::<Vec<_>>(),
        )
        .map_err(SynthError::Corpus)?
        .id
        .clone();
        let family_year = members
            .iter()
            .map(Document::pub_year)
            .min()
            .expect("non-empty family");

        if g.rng.gen_bool(cfg.ppp_share) {
            let paper_content = g.derived_content(&content, topic, cfg.ppp_overlap);
            let year = (filing_year + g.rng.gen_range(-2..=3)).min(cfg.paper_years.1);
            let paper = g.paper(paper_id(), &paper_content, year, Lang::En);
            ppps.push(PppRecord {
                patent_id: representative.clone(),
                paper_id: paper.id.clone(),
                confidence_level: g.rng.gen_range(1..=4),
            });
            papers.push(paper);
        }

        let n_cited = g
            .rng
            .gen_range(cfg.citations_per_family.0..=cfg.citations_per_family.1);
        for _ in 0..n_cited {
            let confidence = if g.rng.gen_bool(cfg.low_confidence_share) {
                g.rng.gen_range(1..=9)
            } else {
                10
            };
            let location = *[
                CitationLocation::Front,
                CitationLocation::Body,
                CitationLocation::FrontAndBody,
            ]
            .choose(&mut g.rng)
            .expect("non-empty");
            let self_citation = g.rng.gen_bool(0.1);
            let citing = if g.rng.gen_bool(0.8) {
                representative.clone()
            } else {
                members.choose(&mut g.rng).expect("non-empty").id.clone()
            };
            let latest = (family_year - 1).min(filing_year);
            if g.rng.gen_bool(cfg.unrelated_citation_share) {
                planned_unrelated.push((citing, latest, confidence, location, self_citation));
                continue;
            }
            let cited_content = g.derived_content(&content, topic, cfg.ppc_overlap);
            let year = g
                .rng
                .gen_range((latest - 20).max(cfg.paper_years.0)..=latest);
            let paper = g.paper(paper_id(), &cited_content, year, Lang::En);
            citations.push(CitationLink {
                patent_id: citing,
                paper_id: paper.id.clone(),
                confidence,
                location,
                self_citation,
            });
            papers.push(paper);
        }
        patents.extend(members);
    }

    let used = patents.len() + papers.len();
    if used > cfg.documents {
        return Err(SynthError::Config(format!(
            "{} families need {used} documents, more than the {} requested",
            cfg.families, cfg.documents
        )));
    }
    let unrelated_start = papers.len();
    for _ in used..cfg.documents {
        let topic = g.rng.gen_range(0..cfg.topics);
        let content = g.fresh_content(topic);
        let year = g.rng.gen_range(cfg.paper_years.0..=cfg.paper_years.1);
        let lang = g.lang();
        let paper = g.paper(paper_id(), &content, year, lang);
        papers.push(paper);
    }
    for (patent_id, latest, confidence, location, self_citation) in planned_unrelated {
        let eligible: Vec<&Document> = papers[unrelated_start..]
            .iter()
            .filter(|p| p.pub_year() <= latest)
            .collect();
        let Some(paper) = eligible.choose(&mut g.rng) else {
            continue;
        };
        if citations
            .iter()
            .any(|c: &CitationLink| c.patent_id == patent_id && c.paper_id == paper.id)
        {
            continue;
        }
        citations.push(CitationLink {
            patent_id,
            paper_id: paper.id.clone(),
            confidence,
            location,
            self_citation,
        });
    }

    patents.sort_by(|a, b| a.id.cmp(&b.id));
    citations.sort_by(|a, b| (&a.patent_id, &a.paper_id).cmp(&(&b.patent_id, &b.paper_id)));
    ppps.sort_by(|a, b| (&a.patent_id, &a.paper_id).cmp(&(&b.patent_id, &b.paper_id)));
    let mut documents = patents;
    documents.extend(papers);
    Ok(SynthCorpus {
        documents,
        citations,
        ppps,
    })
}
