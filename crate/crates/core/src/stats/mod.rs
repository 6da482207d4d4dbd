//! Ordinary least squares with dummy coding, classical standard errors,
//! model-fit statistics and table rendering.

mod design;
mod ols;
mod summary;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

pub use design::{encode_design, Column, DesignMatrix, DesignSpec, EncodedDesign, Table, Term};
pub use ols::{ols_fit, Coefficient, RegressionFit, BLOCK_ROWS};
pub use summary::{summarize, summarize_many, Summary};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("no rows")]
    Empty,
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("column `{column}` has {actual} rows, expected {expected}")]
    RaggedColumn {
        column: String,
        expected: usize,
        actual: usize,
    },
    #[error("column `{0}` is not numeric")]
    NotNumeric(String),
    #[error("reference level `{level}` does not occur in `{column}`")]
    MissingReference { column: String, level: String },
    #[error("dummy column `{column}` has non-0/1 value {value} at row {row}")]
    NotDummy {
        column: String,
        row: usize,
        value: f64,
    },
    #[error("non-finite value in `{column}` at row {row}")]
    NonFinite { column: String, row: usize },
    #[error("need more rows than columns: {rows} rows, {cols} columns")]
    TooFewRows { rows: usize, cols: usize },
    #[error("design is rank deficient: column `{0}` is linearly dependent on earlier columns")]
    RankDeficient(String),
    #[error("{actual} response values for {expected} rows")]
    ResponseLength { expected: usize, actual: usize },
    #[error("need at least two observations per group")]
    TooFewObservations,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = StatsError> = std::result::Result<T, E>;

/// Significance thresholds. `Standard`: 0.1/0.05/0.01. `Strict`: 0.05/0.01/0.001.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StarScheme {
    #[default]
    Standard,
    Strict,
}

impl StarScheme {
    fn thresholds(self) -> [f64; 3] {
        match self {
            StarScheme::Standard => [0.01, 0.05, 0.1],
            StarScheme::Strict => [0.001, 0.01, 0.05],
        }
    }

    pub fn legend(self) -> String {
        let [a, b, c] = self.thresholds();
        format!("* p<{c}, ** p<{b}, *** p<{a}")
    }
}

impl fmt::Display for StarScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StarScheme::Standard => "standard",
            StarScheme::Strict => "strict",
        })
    }
}

impl FromStr for StarScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "standard" => Ok(StarScheme::Standard),
            "strict" => Ok(StarScheme::Strict),
            other => Err(format!(
                "unknown star scheme `{other}` (expected standard or strict)"
            )),
        }
    }
}

pub fn significance_stars(p_value: f64, scheme: StarScheme) -> &'static str {
    let [three, two, one] = scheme.thresholds();
    if p_value.is_nan() {
        ""
    } else if p_value < three {
        "***"
    } else if p_value < two {
        "**"
    } else if p_value < one {
        "*"
    } else {
        ""
    }
}

/// Two-sided p-value of a t statistic.
pub(crate) fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub mean_a: f64,
    pub mean_b: f64,
    pub t: f64,
    pub df: f64,
    /// P(T >= t) under H0, for the alternative mean_a > mean_b.
    pub p_greater: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance t-test of mean(a) > mean(b).
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::TooFewObservations);
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se = (sa + sb).sqrt();
    let t = (ma - mb) / se;
    let df =
        (sa + sb).powi(2) / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    let p_greater = if se == 0.0 {
        if ma > mb {
            0.0
        } else {
            1.0
        }
    } else {
        StudentsT::new(0.0, 1.0, df).expect("df > 0").sf(t)
    };
    Ok(WelchTest {
        mean_a: ma,
        mean_b: mb,
        t,
        df,
        p_greater,
    })
}
