//! Least squares by Givens QR of the augmented matrix `[X | y]`.
//!
//! Rows are absorbed into per-block triangles in parallel; the triangles are
//! merged in block order, so the result does not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::DesignMatrix;
use super::{t_two_sided_p, Result, StatsError};

/// Rows per independently factored block.
pub const BLOCK_ROWS: usize = 4096;

/// Relative size of a diagonal entry of R (against its column norm) below
/// which the column counts as dependent.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub coefficients: Vec<Coefficient>,
    pub n: usize,
    pub n_params: usize,
    pub df_resid: usize,
    pub rss: f64,
    pub residual_variance: f64,
    pub r_squared: f64,
    pub r_squared_adj: f64,
    pub log_likelihood: f64,
    pub bic: f64,
}

impl RegressionFit {
    pub fn get(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.get(name).map(|c| c.estimate)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }

    /// `y - X beta`.
    pub fn residuals(&self, x: &DesignMatrix, y: &[f64]) -> Vec<f64> {
        let beta = self.estimates();
        (0..x.rows()).map(|i| y[i] - dot(x.row(i), &beta)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Upper-triangular `k x k` factor, row-major.
#[derive(Debug, Clone)]
struct Triangle {
    k: usize,
    r: Vec<f64>,
}

impl Triangle {
    fn new(k: usize) -> Self {
        Self {
            k,
            r: vec![0.0; k * k],
        }
    }

    /// Rotates `row` (zero before column `from`) into the triangle.
    fn absorb(&mut self, row: &mut [f64], from: usize) {
        let k = self.k;
        for j in from..k {
            let x = row[j];
            if x == 0.0 {
                continue;
            }
            let d = self.r[j * k + j];
            let h = d.hypot(x);
            let (c, s) = (d / h, x / h);
            self.r[j * k + j] = h;
            row[j] = 0.0;
            let rj = &mut self.r[j * k + j + 1..(j + 1) * k];
            for (a, b) in rj.iter_mut().zip(&mut row[j + 1..]) {
                let (ra, rb) = (*a, *b);
                *a = c * ra + s * rb;
                *b = c * rb - s * ra;
            }
        }
    }

    fn merge(&mut self, other: &Triangle) {
        let k = self.k;
        let mut row = vec![0.0; k];
        for i in 0..k {
            row.copy_from_slice(&other.r[i * k..(i + 1) * k]);
            self.absorb(&mut row, i);
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.k + j]
    }
}

fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// Deterministic blocked sum of `f(i)` over rows.
fn blocked_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let blocks: Vec<f64> = (0..n.div_ceil(BLOCK_ROWS))
        .into_par_iter()
        .map(|b| neumaier((b * BLOCK_ROWS..((b + 1) * BLOCK_ROWS).min(n)).map(&f)))
        .collect();
    neumaier(blocks.into_iter())
}

pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<RegressionFit> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(StatsError::ResponseLength {
            expected: n,
            actual: y.len(),
        });
    }
    if n <= p {
        return Err(StatsError::TooFewRows { rows: n, cols: p });
    }
    if let Some(i) = x.data().iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite {
            column: x.names()[i % p].clone(),
            row: i / p,
        });
    }
    if let Some(row) = y.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite {
            column: "<response>".into(),
            row,
        });
    }

    let k = p + 1;
    let blocks: Vec<Triangle> = (0..n.div_ceil(BLOCK_ROWS))
        .into_par_iter()
        .map(|b| {
            let mut tri = Triangle::new(k);
            let mut row = vec![0.0; k];
            let rows = b * BLOCK_ROWS..((b + 1) * BLOCK_ROWS).min(n);
            for (i, &yi) in rows.clone().zip(&y[rows]) {
                row[..p].copy_from_slice(x.row(i));
                row[p] = yi;
                tri.absorb(&mut row, 0);
            }
            tri
        })
        .collect();
    let mut blocks = blocks.into_iter();
    let mut r = blocks.next().expect("n > 0");
    for b in blocks {
        r.merge(&b);
    }

    // |X_j| is the norm of column j of R
    for j in 0..p {
        let col_norm = (0..=j).map(|i| r.at(i, j).powi(2)).sum::<f64>().sqrt();
        if col_norm == 0.0 || r.at(j, j).abs() <= RANK_TOLERANCE * col_norm {
            return Err(StatsError::RankDeficient(x.names()[j].clone()));
        }
    }

    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r.at(i, j) * beta[j]).sum();
        beta[i] = (r.at(i, p) - s) / r.at(i, i);
    }

    // rows of R^-1; diag((X'X)^-1)_j = |row j of R^-1|^2
    let mut rinv = vec![0.0; p * p];
    for c in 0..p {
        for i in (0..=c).rev() {
            let rhs = if i == c { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=c).map(|j| r.at(i, j) * rinv[j * p + c]).sum();
            rinv[i * p + c] = (rhs - s) / r.at(i, i);
        }
    }

    let rss = blocked_sum(n, |i| (y[i] - dot(x.row(i), &beta)).powi(2));
    let mean_y = blocked_sum(n, |i| y[i]) / n as f64;
    let tss = blocked_sum(n, |i| (y[i] - mean_y).powi(2));
    let df = n - p;
    let sigma2 = rss / df as f64;

    let coefficients = (0..p)
        .map(|j| {
            let v = (j..p).map(|c| rinv[j * p + c].powi(2)).sum::<f64>();
            let se = (sigma2 * v).sqrt();
            let t = beta[j] / se;
            Coefficient {
                name: x.names()[j].clone(),
                estimate: beta[j],
                std_error: se,
                t_stat: t,
                p_value: t_two_sided_p(t, df as f64),
            }
        })
        .collect();

    let nf = n as f64;
    let log_likelihood = -nf / 2.0 * ((2.0 * std::f64::consts::PI).ln() + (rss / nf).ln() + 1.0);
    let r_squared = 1.0 - rss / tss;
    Ok(RegressionFit {
        coefficients,
        n,
        n_params: p,
        df_resid: df,
        rss,
        residual_variance: sigma2,
        r_squared,
        r_squared_adj: 1.0 - (1.0 - r_squared) * (nf - 1.0) / df as f64,
        log_likelihood,
        bic: -2.0 * log_likelihood + p as f64 * nf.ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(names: &[&str], rows: &[Vec<f64>]) -> DesignMatrix {
        DesignMatrix::from_rows(names.iter().map(|s| s.to_string()).collect(), rows.concat())
            .unwrap()
    }

    #[test]
    fn exact_line() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 1.0 + 2.0 * i as f64).collect();
        let fit = ols_fit(&matrix(&["Intercept", "x"], &rows), &y).unwrap();
        assert!((fit.estimate("Intercept").unwrap() - 1.0).abs() < 1e-10);
        assert!((fit.estimate("x").unwrap() - 2.0).abs() < 1e-10);
        assert!(fit.residual_variance.abs() < 1e-10);
    }

    #[test]
    fn intercept_only_is_mean() {
        let y = [3.0, 5.0, 10.0, -1.0];
        let rows = vec![vec![1.0]; 4];
        let fit = ols_fit(&matrix(&["Intercept"], &rows), &y).unwrap();
        assert!((fit.estimate("Intercept").unwrap() - 4.25).abs() < 1e-12);
        // sd(y)/sqrt(n)
        let var = y.iter().map(|v| (v - 4.25f64).powi(2)).sum::<f64>() / 3.0;
        assert!((fit.coefficients[0].std_error - (var / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn matches_reference_fit() {
        // values from statsmodels OLS on the same data
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let y = [1.1, 1.9, 3.2, 3.9, 5.3, 5.8, 7.2];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
        let fit = ols_fit(&matrix(&["Intercept", "x"], &rows), &y).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9 * b.abs().max(1.0);
        assert!(close(fit.log_likelihood, 2.246417533060562));
        assert!(close(fit.bic, -0.6010147680104976));
        assert!(close(fit.r_squared_adj, 0.9909544728434504));
        assert!(close(fit.coefficients[0].estimate, 0.02857142857142857));
        assert!(close(fit.coefficients[1].std_error, 0.039253233325811716));
        assert!((fit.coefficients[1].p_value - 1.6795123295129355e-06).abs() < 1e-15);
        assert!((fit.coefficients[0].p_value - 0.8770827107002761).abs() < 1e-9);
        assert_eq!(fit.df_resid, 5);
    }

    #[test]
    fn zero_column_is_rank_deficient() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64, 0.0]).collect();
        let y: Vec<f64> = (0..10).map(f64::from).collect();
        match ols_fit(&matrix(&["Intercept", "x", "z"], &rows), &y) {
            Err(StatsError::RankDeficient(c)) => assert_eq!(c, "z"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn collinear_column_is_named() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![1.0, i as f64, 3.0 * i as f64 - 2.0])
            .collect();
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        match ols_fit(&matrix(&["Intercept", "x", "w"], &rows), &y) {
            Err(StatsError::RankDeficient(c)) => assert_eq!(c, "w"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn input_errors() {
        let rows = vec![vec![1.0, 2.0], vec![1.0, 3.0]];
        assert!(matches!(
            ols_fit(&matrix(&["a", "b"], &rows), &[1.0, 2.0]),
            Err(StatsError::TooFewRows { .. })
        ));
        let rows = vec![vec![1.0], vec![f64::NAN], vec![1.0]];
        assert!(matches!(
            ols_fit(&matrix(&["a"], &rows), &[1.0, 2.0, 3.0]),
            Err(StatsError::NonFinite { row: 1, .. })
        ));
        let rows = vec![vec![1.0]; 3];
        assert!(matches!(
            ols_fit(&matrix(&["a"], &rows), &[1.0, 2.0]),
            Err(StatsError::ResponseLength { .. })
        ));
    }

    #[test]
    fn row_order_does_not_matter_across_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 3 * BLOCK_ROWS + 17;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![1.0, rng.gen(), rng.gen()]).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 0.5 + r[1] - 2.0 * r[2] + rng.gen_range(-0.1..0.1))
            .collect();
        let fit = ols_fit(&matrix(&["Intercept", "a", "b"], &rows), &y).unwrap();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.reverse();
        let rows2: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
        let y2: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let fit2 = ols_fit(&matrix(&["Intercept", "a", "b"], &rows2), &y2).unwrap();
        for (a, b) in fit.coefficients.iter().zip(&fit2.coefficients) {
            assert!((a.estimate - b.estimate).abs() < 1e-10);
            assert!((a.std_error - b.std_error).abs() < 1e-10);
        }
    }
}
