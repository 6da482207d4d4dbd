//! Validation and analysis studies over embedded patents and papers:
//! similarity separation of pairs versus citations, retrieval of paired
//! papers, and which citations are semantically close to the citing patent.

mod ppc;
mod predict;
mod separation;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ppc::{
    build_regression_frame, ppc_match_study, read_match_records, restrict_to_representatives,
    write_match_records, FrameOptions, PatentShare, PpcMatchConfig, PpcMatchRecord, PpcMatchResult,
    RegressionFrame, CPC_COLUMNS, REFERENCE_AUTHORITY,
};
pub use predict::{
    predict_ppp, write_ppp_outcomes, EcdfPoint, PppPredictConfig, PppPrediction, PppSearchOutcome,
    RankSummary, TOTAL_LEVEL,
};
pub use separation::{
    ppp_ppc_similarity, write_pair_records, PairSimRecord, PairType, SeparationResult,
};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("no pairs left to score")]
    NoPairs,
    #[error("invalid study configuration: {0}")]
    Config(String),
    #[error("document `{0}` is referenced but not in the corpus")]
    MissingDocument(String),
    #[error("patent `{id}` has no {field}")]
    MissingField { id: String, field: &'static str },
    #[error("invalid authority codes: {}", .0.iter().map(|(r, a)| format!("row {r}: `{a}`")).collect::<Vec<_>>().join(", "))]
    InvalidAuthority(Vec<(usize, String)>),
    #[error(transparent)]
    Index(#[from] crate::index::IndexError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = StudyError> = std::result::Result<T, E>;

/// Fixed-width histogram over `[lo, hi]`; the top edge falls in the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Self {
            lo,
            bin_width: (hi - lo) / bins as f64,
            counts: vec![0; bins],
        }
    }

    /// 400 bins of width 0.005 over [-1, 1].
    pub fn similarity() -> Self {
        Self::new(-1.0, 1.0, 400)
    }

    /// 20 bins of width 0.05 over [0, 1].
    pub fn share() -> Self {
        Self::new(0.0, 1.0, 20)
    }

    pub fn bin_of(&self, x: f64) -> usize {
        let b = ((x - self.lo) / self.bin_width).floor();
        (b.max(0.0) as usize).min(self.counts.len() - 1)
    }

    pub fn add(&mut self, x: f64) {
        let b = self.bin_of(x);
        self.counts[b] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(bin_lo, bin_hi, count)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| {
            let lo = self.lo + i as f64 * self.bin_width;
            (lo, lo + self.bin_width, c)
        })
    }
}

/// Sample mean and standard deviation (n - 1), and median.
pub(crate) fn describe(values: &[f64]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    };
    let mean = v.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Some((median, mean, std))
}
