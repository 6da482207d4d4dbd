//! Building the 5-positive/25-negative triplet tasks.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64;

use super::{EvalError, Result};
use crate::corpus::{is_english, select_family_representative, CitationLink, DocKind, Document};

pub const POSITIVES: usize = 5;
pub const NEGATIVES: usize = 25;
/// Only citations with this confidence count.
pub const REQUIRED_CONFIDENCE: u8 = 10;
/// Negatives are published 1..=38 years before the family year.
pub const RISK_WINDOW_YEARS: (i32, i32) = (1, 38);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletTask {
    /// The DocDB family key.
    pub task_id: String,
    pub focal_patent_id: String,
    /// Sorted.
    pub positives: Vec<String>,
    /// Sorted.
    pub negatives: Vec<String>,
    pub family_year: i32,
}

impl TripletTask {
    pub fn candidates(&self) -> impl Iterator<Item = &String> {
        self.positives.iter().chain(&self.negatives)
    }

    pub fn relevant(&self) -> HashSet<String> {
        self.positives.iter().cloned().collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| EvalError::InvalidTask {
            task: self.task_id.clone(),
            reason,
        };
        if self.positives.len() != POSITIVES || self.negatives.len() != NEGATIVES {
            return Err(bad(format!(
                "{} positives and {} negatives, expected {POSITIVES} and {NEGATIVES}",
                self.positives.len(),
                self.negatives.len()
            )));
        }
        let all: HashSet<&String> = self.candidates().collect();
        if all.len() != POSITIVES + NEGATIVES {
            return Err(bad("candidates are not distinct".into()));
        }
        if all.contains(&self.focal_patent_id) {
            return Err(bad("focal patent is among the candidates".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFamily {
    pub family: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaskBuild {
    /// Sorted by task id.
    pub tasks: Vec<TripletTask>,
    /// Families with enough citations that still could not form a task.
    pub skipped: Vec<SkippedFamily>,
}

fn english_with_abstract(doc: &Document) -> bool {
    !doc.abstract_text.trim().is_empty() && is_english(doc)
}

/// Builds one task per family that cites at least five distinct English
/// papers with top confidence. Sampling is seeded per family, so a family's
/// task does not depend on which other families are present.
pub fn build_tasks(
    citations: &[CitationLink],
    documents: &[Document],
    seed: u64,
) -> Result<TaskBuild> {
    let docs: HashMap<&str, &Document> = documents.iter().map(|d| (d.id.as_str(), d)).collect();
    let lookup = |id: &str| {
        docs.get(id)
            .copied()
            .ok_or_else(|| EvalError::MissingDocument(id.to_string()))
    };

    let mut families: BTreeMap<&str, Vec<&Document>> = BTreeMap::new();
    for d in documents.iter().filter(|d| d.kind == DocKind::Patent) {
        families.entry(d.family_key()).or_default().push(d);
    }

    // family -> (all cited papers, confidence-10 English cited papers)
    let mut cited: HashMap<&str, (HashSet<&str>, BTreeSet<&str>)> = HashMap::new();
    for link in citations {
        let patent = lookup(&link.patent_id)?;
        let paper = lookup(&link.paper_id)?;
        if patent.kind != DocKind::Patent {
            return Err(EvalError::WrongKind(patent.id.clone(), DocKind::Patent));
        }
        if paper.kind != DocKind::Paper {
            return Err(EvalError::WrongKind(paper.id.clone(), DocKind::Paper));
        }
        let entry = cited.entry(patent.family_key()).or_default();
        entry.0.insert(&paper.id);
        if link.confidence == REQUIRED_CONFIDENCE && english_with_abstract(paper) {
            entry.1.insert(&paper.id);
        }
    }

    let mut risk_pool: BTreeMap<i32, Vec<&str>> = BTreeMap::new();
    for d in documents
        .iter()
        .filter(|d| d.kind == DocKind::Paper && english_with_abstract(d))
    {
        risk_pool.entry(d.pub_year()).or_default().push(&d.id);
    }
    risk_pool.values_mut().for_each(|v| v.sort_unstable());

    let mut out = TaskBuild::default();
    for (family, members) in &families {
        let Some((all_cited, strong)) = cited.get(family) else {
            continue;
        };
        if strong.len() < POSITIVES {
            continue;
        }
        let family_year = members
            .iter()
            .map(|d| d.pub_year())
            .min()
            .expect("non-empty family");
        let focal = select_family_representative(members)
            .map(|d| d.id.clone())
            .unwrap_or_else(|_| {
                members
                    .iter()
                    .map(|d| d.id.clone())
                    .min()
                    .expect("non-empty family")
            });
        let risk: Vec<&str> = risk_pool
            .range(family_year - RISK_WINDOW_YEARS.1..=family_year - RISK_WINDOW_YEARS.0)
            .flat_map(|(_, ids)| ids.iter().copied())
            .filter(|id| !all_cited.contains(id))
            .collect();
        if risk.len() < NEGATIVES {
            let reason = format!(
                "risk set has {} papers from {}..={}, need {NEGATIVES}",
                risk.len(),
                family_year - RISK_WINDOW_YEARS.1,
                family_year - RISK_WINDOW_YEARS.0
            );
            log::info!("skipping family {family}: {reason}");
            out.skipped.push(SkippedFamily {
                family: family.to_string(),
                reason,
            });
            continue;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ xxh3_64(family.as_bytes()));
        let strong: Vec<&str> = strong.iter().copied().collect();
        let pick = |rng: &mut ChaCha8Rng, from: &[&str], k: usize| -> Vec<String> {
            let mut v: Vec<String> = sample(rng, from.len(), k)
                .into_iter()
                .map(|i| from[i].to_string())
                .collect();
            v.sort_unstable();
            v
        };
        let positives = pick(&mut rng, &strong, POSITIVES);
        let negatives = pick(&mut rng, &risk, NEGATIVES);
        let task = TripletTask {
            task_id: family.to_string(),
            focal_patent_id: focal,
            positives,
            negatives,
            family_year,
        };
        task.validate()?;
        out.tasks.push(task);
    }
    Ok(out)
}

pub fn write_tasks<W: Write>(mut writer: W, tasks: &[TripletTask]) -> Result<()> {
    for t in tasks {
        serde_json::to_writer(&mut writer, t)
            .map_err(|e| EvalError::Json { line: 0, source: e })?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_tasks<R: BufRead>(reader: R) -> Result<Vec<TripletTask>> {
    let mut tasks = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let task: TripletTask = serde_json::from_str(&line).map_err(|e| EvalError::Json {
            line: i + 1,
            source: e,
        })?;
        task.validate()?;
        if !seen.insert(task.task_id.clone()) {
            return Err(EvalError::InvalidTask {
                task: task.task_id,
                reason: "duplicate task id".into(),
            });
        }
        tasks.push(task);
    }
    Ok(tasks)
}
