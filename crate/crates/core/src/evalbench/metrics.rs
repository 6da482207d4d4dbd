//! Ranking metrics over one ranked candidate list.

use std::collections::HashSet;

use super::{EvalError, Result};

/// Cut-off for the reciprocal-rank metric.
pub const RR_CUTOFF: usize = 10;

fn relevant_ranks<S: AsRef<str>>(ranked: &[S], relevant: &HashSet<String>) -> Result<Vec<usize>> {
    if relevant.is_empty() {
        return Err(EvalError::NoRelevant);
    }
    let ranks: Vec<usize> = ranked
        .iter()
        .enumerate()
        .filter(|(_, id)| relevant.contains(id.as_ref()))
        .map(|(i, _)| i + 1)
        .collect();
    if ranks.is_empty() {
        return Err(EvalError::RelevantNotRanked(
            relevant.iter().min().cloned().unwrap_or_default(),
        ));
    }
    Ok(ranks)
}

/// 1-based rank of the first relevant id.
pub fn rfr<S: AsRef<str>>(ranked: &[S], relevant: &HashSet<String>) -> Result<usize> {
    Ok(relevant_ranks(ranked, relevant)?[0])
}

/// Mean over relevant items of precision at the item's rank. Every relevant
/// id must appear in the list.
pub fn average_precision<S: AsRef<str>>(ranked: &[S], relevant: &HashSet<String>) -> Result<f64> {
    let ranks = relevant_ranks(ranked, relevant)?;
    if ranks.len() != relevant.len() {
        let present: HashSet<&str> = ranked.iter().map(AsRef::as_ref).collect();
        let mut missing: Vec<&String> = relevant
            .iter()
            .filter(|r| !present.contains(r.as_str()))
            .collect();
        missing.sort();
        return Err(EvalError::RelevantNotRanked(missing[0].clone()));
    }
    if let Some(ap) = exact_mean_precision(&ranks) {
        return Ok(ap);
    }
    let sum: f64 = ranks
        .iter()
        .enumerate()
        .map(|(hits_before, &k)| (hits_before + 1) as f64 / k as f64)
        .sum();
    Ok(sum / relevant.len() as f64)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Sums the precisions as a reduced fraction and divides once, giving the
/// correctly rounded mean. `None` when the fraction outgrows f64's exact range.
fn exact_mean_precision(ranks: &[usize]) -> Option<f64> {
    const EXACT: u128 = 1 << f64::MANTISSA_DIGITS;
    let (mut num, mut den) = (0u128, 1u128);
    for (hits_before, &k) in ranks.iter().enumerate() {
        let (h, k) = ((hits_before + 1) as u128, k as u128);
        let lcm = den / gcd(den, k) * k;
        num = num.checked_mul(lcm / den)?.checked_add(h * (lcm / k))?;
        den = lcm;
        let g = gcd(num, den);
        (num, den) = (num / g, den / g);
    }
    let den = den.checked_mul(ranks.len() as u128)?;
    let g = gcd(num, den);
    let (num, den) = (num / g, den / g);
    (num < EXACT && den < EXACT).then(|| num as f64 / den as f64)
}

/// `1 / rfr` when the first relevant item is within the top 10, else 0.
pub fn rr_at10<S: AsRef<str>>(ranked: &[S], relevant: &HashSet<String>) -> Result<f64> {
    let r = rfr(ranked, relevant)?;
    Ok(if r <= RR_CUTOFF { 1.0 / r as f64 } else { 0.0 })
}
