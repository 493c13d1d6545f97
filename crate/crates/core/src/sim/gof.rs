//! Chi-square goodness of fit against a geometric law on `{1, 2, ...}`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::SimError;

/// Smallest expected count allowed in a bin.
const MIN_EXPECTED: f64 = 5.0;

/// Bin `[lo, hi]`; `hi = None` is the pooled tail `[lo, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofBin {
    pub lo: u64,
    pub hi: Option<u64>,
    pub observed: u64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub pass: bool,
    pub statistic: f64,
    pub dof: usize,
    pub critical: f64,
    pub p_value: f64,
    pub bins: Vec<GofBin>,
}

/// Test `samples` against `P(L = k) = p (1 − p)^(k−1)`.
///
/// Single values get their own bin while both the bin and everything above
/// it expect at least 5 counts; the rest is pooled into one tail bin. `p = 1`
/// is a point mass at 1 and passes iff every sample is 1.
pub fn geometric_fit(samples: &[u64], p: f64, alpha: f64) -> Result<GofResult, SimError> {
    if samples.is_empty() {
        return Err(SimError::DegenerateSamples("no samples".into()));
    }
    if samples.contains(&0) {
        return Err(SimError::DegenerateSamples("round counts start at 1".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(SimError::InvalidArgument(format!("p = {p} outside (0, 1]")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SimError::InvalidArgument(format!("alpha = {alpha} outside (0, 1)")));
    }
    let total = samples.len() as f64;

    if p == 1.0 {
        let ones = samples.iter().filter(|&&s| s == 1).count() as u64;
        let pass = ones == samples.len() as u64;
        return Ok(GofResult {
            pass,
            statistic: if pass { 0.0 } else { f64::INFINITY },
            dof: 0,
            critical: 0.0,
            p_value: if pass { 1.0 } else { 0.0 },
            bins: vec![GofBin {
                lo: 1,
                hi: None,
                observed: samples.len() as u64,
                expected: total,
            }],
        });
    }

    let mut bins = Vec::new();
    let mut tail = total;
    let mut k = 1u64;
    loop {
        let e = tail * p;
        if e >= MIN_EXPECTED && tail - e >= MIN_EXPECTED {
            bins.push(GofBin {
                lo: k,
                hi: Some(k),
                observed: 0,
                expected: e,
            });
            tail -= e;
            k += 1;
        } else {
            bins.push(GofBin {
                lo: k,
                hi: None,
                observed: 0,
                expected: tail,
            });
            break;
        }
    }
    if bins.len() < 2 {
        return Err(SimError::DegenerateSamples(format!(
            "{} samples are too few for two bins with expected count {MIN_EXPECTED}",
            samples.len()
        )));
    }
    let last = bins.len() - 1;
    for &s in samples {
        let i = ((s - 1) as usize).min(last);
        bins[i].observed += 1;
    }
    let statistic: f64 = bins
        .iter()
        .map(|b| {
            let d = b.observed as f64 - b.expected;
            d * d / b.expected
        })
        .sum();
    let dof = bins.len() - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| SimError::InvalidArgument(e.to_string()))?;
    let critical = chi.inverse_cdf(1.0 - alpha);
    Ok(GofResult {
        pass: statistic < critical,
        statistic,
        dof,
        critical,
        p_value: chi.sf(statistic),
        bins,
    })
}
