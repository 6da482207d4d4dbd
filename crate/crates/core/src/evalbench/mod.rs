//! Triplet benchmark: each task ranks 5 cited and 25 non-cited papers
//! against a focal patent; models are scored by first relevant rank,
//! average precision and reciprocal rank at 10.

mod metrics;
mod tasks;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocKind;
use crate::embed::{EmbeddingStore, Pooling};
use crate::index::cosine;
use crate::stats::{
    encode_design, ols_fit, summarize_many, Column, DesignSpec, RegressionFit, StarScheme, Summary,
    Table,
};

pub use metrics::{average_precision, rfr, rr_at10, RR_CUTOFF};
pub use tasks::{
    build_tasks, read_tasks, write_tasks, SkippedFamily, TaskBuild, TripletTask, NEGATIVES,
    POSITIVES, REQUIRED_CONFIDENCE, RISK_WINDOW_YEARS,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("relevant set is empty")]
    NoRelevant,
    #[error("relevant item `{0}` is not in the ranked list")]
    RelevantNotRanked(String),
    #[error("no per-query records to aggregate")]
    Empty,
    #[error("document `{0}` is referenced but not in the corpus")]
    MissingDocument(String),
    #[error("document `{0}` should be a {1}")]
    WrongKind(String, DocKind),
    #[error("no embedding for `{0}`")]
    MissingEmbedding(String),
    #[error("task `{task}`: {reason}")]
    InvalidTask { task: String, reason: String },
    #[error("model `{model}` does not cover the same tasks as `{base}`; missing: {}", missing.join(", "))]
    TaskCoverage {
        model: String,
        base: String,
        missing: Vec<String>,
    },
    #[error("base model `{0}` has no metrics")]
    UnknownBaseModel(String),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error(transparent)]
    Index(#[from] crate::index::IndexError),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub task_id: String,
    /// Most similar first; ties by ascending paper id.
    pub ordered: Vec<(String, f64)>,
}

impl RankedList {
    pub fn ids(&self) -> Vec<&str> {
        self.ordered.iter().map(|(id, _)| id.as_str()).collect()
    }
}

/// Sorts the task's candidates by cosine to `focal`.
pub fn rank_task(task: &TripletTask, store: &EmbeddingStore, focal: &[f32]) -> Result<RankedList> {
    let mut ordered = task
        .candidates()
        .map(|id| {
            let v = store
                .get(id)
                .ok_or_else(|| EvalError::MissingEmbedding(id.clone()))?;
            Ok((id.clone(), cosine(focal, v)?))
        })
        .collect::<Result<Vec<_>>>()?;
    ordered.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(RankedList {
        task_id: task.task_id.clone(),
        ordered,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub task_id: String,
    pub rfr: usize,
    pub ap: f64,
    pub rr10: f64,
}

impl QueryMetrics {
    pub fn of(list: &RankedList, relevant: &HashSet<String>) -> Result<Self> {
        let ids = list.ids();
        Ok(Self {
            task_id: list.task_id.clone(),
            rfr: rfr(&ids, relevant)?,
            ap: average_precision(&ids, relevant)?,
            rr10: rr_at10(&ids, relevant)?,
        })
    }

    pub fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Rfr => self.rfr as f64,
            Metric::Ap => self.ap,
            Metric::Rr10 => self.rr10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    Rfr,
    Ap,
    Rr10,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Rfr, Metric::Ap, Metric::Rr10];

    /// Name of the metric's query mean.
    pub fn label(self) -> &'static str {
        match self {
            Metric::Rfr => "Avg. RFR",
            Metric::Ap => "MAP",
            Metric::Rr10 => "MRR@10",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Sorted by task id.
    pub per_query: Vec<QueryMetrics>,
    pub avg_rfr: f64,
    pub map: f64,
    pub mrr10: f64,
    pub query_count: usize,
}

/// Query means, summed in task-id order.
pub fn aggregate(records: &[QueryMetrics]) -> Result<MetricReport> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut per_query = records.to_vec();
    per_query.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    let q = per_query.len() as f64;
    let mean = |m: Metric| per_query.iter().map(|r| r.value(m)).sum::<f64>() / q;
    Ok(MetricReport {
        avg_rfr: mean(Metric::Rfr),
        map: mean(Metric::Ap),
        mrr10: mean(Metric::Rr10),
        query_count: per_query.len(),
        per_query,
    })
}

/// Ranks every task with one model's store; output sorted by task id.
pub fn evaluate(tasks: &[TripletTask], store: &EmbeddingStore) -> Result<Vec<QueryMetrics>> {
    let mut out = tasks
        .par_iter()
        .map(|t| {
            let focal = store
                .get(&t.focal_patent_id)
                .ok_or_else(|| EvalError::MissingEmbedding(t.focal_patent_id.clone()))?;
            QueryMetrics::of(&rank_task(t, store, focal)?, &t.relevant())
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    Ok(out)
}

/// MAP expected from uniformly random rankings, estimated over `shuffles`
/// random permutations of every task's candidates.
pub fn random_baseline_map(tasks: &[TripletTask], shuffles: usize, seed: u64) -> Result<f64> {
    if tasks.is_empty() || shuffles == 0 {
        return Err(EvalError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..shuffles {
        let mut sum = 0.0;
        for t in tasks {
            let mut ids: Vec<&str> = t.candidates().map(String::as_str).collect();
            ids.shuffle(&mut rng);
            sum += average_precision(&ids, &t.relevant())?;
        }
        total += sum / tasks.len() as f64;
    }
    Ok(total / shuffles as f64)
}

/// One row of the per-query metrics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub task_id: String,
    pub model: String,
    pub pooling: Pooling,
    pub rfr: usize,
    pub ap: f64,
    pub rr10: f64,
}

impl MetricRow {
    pub fn new(model: &str, pooling: Pooling, m: &QueryMetrics) -> Self {
        Self {
            task_id: m.task_id.clone(),
            model: model.to_string(),
            pooling,
            rfr: m.rfr,
            ap: m.ap,
            rr10: m.rr10,
        }
    }

    pub fn metrics(&self) -> QueryMetrics {
        QueryMetrics {
            task_id: self.task_id.clone(),
            rfr: self.rfr,
            ap: self.ap,
            rr10: self.rr10,
        }
    }
}

pub fn write_metric_rows<W: Write>(writer: W, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metric_rows<R: Read>(reader: R) -> Result<Vec<MetricRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(EvalError::from))
        .collect()
}

/// Regresses one metric on model dummies (reference `base`) over the stacked
/// (task, model) rows. The intercept is the base model's mean and each model
/// coefficient is that model's mean minus the base mean.
pub fn compare_models(
    per_model: &BTreeMap<String, Vec<QueryMetrics>>,
    metric: Metric,
    base: &str,
) -> Result<RegressionFit> {
    let base_tasks: BTreeSet<&str> = per_model
        .get(base)
        .ok_or_else(|| EvalError::UnknownBaseModel(base.to_string()))?
        .iter()
        .map(|m| m.task_id.as_str())
        .collect();
    if base_tasks.is_empty() {
        return Err(EvalError::UnknownBaseModel(base.to_string()));
    }
    let mut y = Vec::new();
    let mut model = Vec::new();
    for (name, rows) in per_model {
        let tasks: BTreeSet<&str> = rows.iter().map(|m| m.task_id.as_str()).collect();
        if tasks != base_tasks || tasks.len() != rows.len() {
            let mut missing: Vec<String> = base_tasks
                .symmetric_difference(&tasks)
                .map(|s| s.to_string())
                .collect();
            if missing.is_empty() {
                missing.push("(duplicate task rows)".into());
            }
            return Err(EvalError::TaskCoverage {
                model: name.clone(),
                base: base.to_string(),
                missing,
            });
        }
        let mut rows: Vec<&QueryMetrics> = rows.iter().collect();
        rows.sort_by(|a, b| a.task_id.cmp(&b.task_id));
        for r in rows {
            y.push(r.value(metric));
            model.push(name.clone());
        }
    }
    let table = Table::new()
        .with("metric", Column::Numeric(y))?
        .with("model", Column::Text(model))?;
    let design = encode_design(
        &table,
        &DesignSpec::new("metric").categorical("model", Some(base)),
    )?;
    Ok(ols_fit(&design.matrix, &design.response)?)
}

/// All three metric regressions, rendered side by side.
pub fn comparison_table(
    per_model: &BTreeMap<String, Vec<QueryMetrics>>,
    base: &str,
    scheme: StarScheme,
) -> Result<(Vec<(Metric, RegressionFit)>, Summary)> {
    let fits = Metric::ALL
        .iter()
        .map(|&m| Ok((m, compare_models(per_model, m, base)?)))
        .collect::<Result<Vec<_>>>()?;
    let labelled: Vec<(&str, &RegressionFit)> = fits.iter().map(|(m, f)| (m.label(), f)).collect();
    let summary = summarize_many(&labelled, scheme);
    Ok((fits, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn task(n: usize) -> TripletTask {
        TripletTask {
            task_id: format!("T{n}"),
            focal_patent_id: "P".into(),
            positives: (0..5).map(|i| format!("a{i}")).collect(),
            negatives: (0..25).map(|i| format!("b{i:02}")).collect(),
            family_year: 2010,
        }
    }

    #[test]
    fn identical_candidates_sort_by_id() {
        let t = task(0);
        let mut store = EmbeddingStore::new(2, "t").unwrap();
        store.insert("P", &[1.0, 0.0]).unwrap();
        for id in t.candidates() {
            store.insert(id.clone(), &[1.0, 0.0]).unwrap();
        }
        let list = rank_task(&t, &store, &[1.0, 0.0]).unwrap();
        assert!(list.ordered.iter().all(|(_, s)| *s == 1.0));
        let ids = list.ids();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn single_aligned_positive_ranks_first() {
        let t = task(0);
        let mut store = EmbeddingStore::new(2, "t").unwrap();
        for id in t.candidates() {
            let v = if id == "a3" { [1.0, 0.0] } else { [0.0, 1.0] };
            store.insert(id.clone(), &v).unwrap();
        }
        let list = rank_task(&t, &store, &[1.0, 0.0]).unwrap();
        assert_eq!(list.ordered[0].0, "a3");
        let m = QueryMetrics::of(&list, &t.relevant()).unwrap();
        assert_eq!((m.rfr, m.rr10), (1, 1.0));
    }

    #[test]
    fn missing_embedding_is_named() {
        let t = task(0);
        let store = EmbeddingStore::new(2, "t").unwrap();
        assert!(matches!(
            rank_task(&t, &store, &[1.0, 0.0]),
            Err(EvalError::MissingEmbedding(_))
        ));
    }

    #[test]
    fn aggregate_means() {
        let q = |id: &str, ap: f64| QueryMetrics {
            task_id: id.into(),
            rfr: 1,
            ap,
            rr10: 1.0,
        };
        let r = aggregate(&[q("b", 0.5), q("a", 1.0)]).unwrap();
        assert_eq!(r.map, 0.75);
        assert_eq!(r.query_count, 2);
        assert_eq!(r.per_query[0].task_id, "a");
        assert!(matches!(aggregate(&[]), Err(EvalError::Empty)));
    }

    fn metrics_for(values: &[f64]) -> Vec<QueryMetrics> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| QueryMetrics {
                task_id: format!("t{i:03}"),
                rfr: 1 + (v * 29.0) as usize,
                ap: v,
                rr10: v,
            })
            .collect()
    }

    #[test]
    fn identical_models_differ_by_zero() {
        let vals: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let per_model = BTreeMap::from([
            ("base".to_string(), metrics_for(&vals)),
            ("other".to_string(), metrics_for(&vals)),
        ]);
        let fit = compare_models(&per_model, Metric::Ap, "base").unwrap();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((fit.estimate("Intercept").unwrap() - mean).abs() < 1e-12);
        assert!(fit.estimate("model=other").unwrap().abs() < 1e-12);
    }

    #[test]
    fn constant_shift_is_recovered() {
        let vals: Vec<f64> = (0..40).map(|i| 0.3 + 0.01 * (i % 7) as f64).collect();
        let shifted: Vec<f64> = vals.iter().map(|v| v + 0.1).collect();
        let per_model = BTreeMap::from([
            ("base".to_string(), metrics_for(&vals)),
            ("b".to_string(), metrics_for(&shifted)),
        ]);
        let fit = compare_models(&per_model, Metric::Ap, "base").unwrap();
        assert!((fit.estimate("model=b").unwrap() - 0.1).abs() < 1e-10);
    }

    #[test]
    fn coverage_mismatch_lists_tasks() {
        let a = metrics_for(&[0.1, 0.2, 0.3]);
        let b = metrics_for(&[0.1, 0.2]);
        let per_model = BTreeMap::from([("a".to_string(), a), ("b".to_string(), b)]);
        match compare_models(&per_model, Metric::Ap, "a") {
            Err(EvalError::TaskCoverage { model, missing, .. }) => {
                assert_eq!(model, "b");
                assert_eq!(missing, vec!["t002"]);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            compare_models(&per_model, Metric::Ap, "zzz"),
            Err(EvalError::UnknownBaseModel(_))
        ));
    }

    #[test]
    fn random_baseline_close_to_expectation() {
        // E[AP] for 5 relevant among 30 random is about 0.2525
        let tasks: Vec<TripletTask> = (0..20).map(task).collect();
        let b = random_baseline_map(&tasks, 200, 1).unwrap();
        assert!((0.235..0.27).contains(&b), "{b}");
    }

    #[test]
    fn metric_rows_csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<MetricRow> = (0..10)
            .map(|i| MetricRow {
                task_id: format!("F{i}"),
                model: "toy".into(),
                pooling: Pooling::Mean,
                rfr: rng.gen_range(1..=26),
                ap: rng.gen(),
                rr10: rng.gen(),
            })
            .collect();
        let mut buf = Vec::new();
        write_metric_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("task_id,model,pooling,rfr,ap,rr10\n"));
        assert_eq!(read_metric_rows(buf.as_slice()).unwrap(), rows);
    }
}
