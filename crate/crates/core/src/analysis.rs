//! Closed-form round success probability, expected delay and expected rate.
//!
//! A round sends the `n`-symbol codeword and then a `γ`-symbol indicator
//! block. It succeeds when the zero-undetected-error decoder returns a unique
//! message (probability `1 − λ_m`) and at least one of the `γ` indicator
//! symbols lands on the disprover output (probability `1 − (1 − p)^γ`). Rounds
//! are independent, so the number of rounds is geometric.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebook::CodeQuality;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),
}

/// `(1 − λ_m)·[1 − (1 − p_indicator)^γ]`.
pub fn round_success_prob(lambda_m: f64, p_indicator: f64, gamma: usize) -> Result<f64, AnalysisError> {
    if !(0.0..1.0).contains(&lambda_m) {
        return Err(AnalysisError::DegenerateConfig(format!(
            "erasure probability {lambda_m} outside [0, 1)"
        )));
    }
    if !(p_indicator > 0.0 && p_indicator <= 1.0) {
        return Err(AnalysisError::DegenerateConfig(format!(
            "indicator probability {p_indicator} outside (0, 1]"
        )));
    }
    if gamma == 0 {
        return Err(AnalysisError::DegenerateConfig("gamma must be at least 1".into()));
    }
    let miss = (1.0 - p_indicator).powi(gamma.min(i32::MAX as usize) as i32);
    Ok((1.0 - lambda_m) * (1.0 - miss))
}

/// `max(1, ⌈log2 n⌉)`.
pub fn gamma_auto(n: usize) -> usize {
    assert!(n >= 1, "blocklength must be positive");
    // ceil(log2 n) = bit length of n - 1.
    let bits = (usize::BITS - (n - 1).leading_zeros()) as usize;
    bits.max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Round success probability per message.
    pub p: Vec<f64>,
    pub expected_rounds: Vec<f64>,
    /// Expected channel uses per message.
    pub n_bar: f64,
    /// `log2|M| / n_bar`, bits per channel use.
    pub r_bar: f64,
    /// `n_bar / log2|M|`, channel uses per bit.
    pub d_bar: f64,
    pub n: usize,
    pub gamma: usize,
    pub messages: usize,
    pub p_indicator: f64,
}

impl Prediction {
    /// Uniform average of the expected round counts.
    pub fn mean_rounds(&self) -> f64 {
        self.expected_rounds.iter().sum::<f64>() / self.expected_rounds.len() as f64
    }
}

/// Fill a [`Prediction`] under a uniform message prior.
pub fn predict(quality: &CodeQuality, p_indicator: f64, n: usize, gamma: usize) -> Result<Prediction, AnalysisError> {
    if quality.lambda.is_empty() {
        return Err(AnalysisError::DegenerateConfig("empty code".into()));
    }
    let p = quality
        .lambda
        .iter()
        .map(|&l| round_success_prob(l, p_indicator, gamma))
        .collect::<Result<Vec<_>, _>>()?;
    let expected_rounds: Vec<f64> = p.iter().map(|pm| 1.0 / pm).collect();
    let messages = p.len();
    let n_bar = (n + gamma) as f64 * expected_rounds.iter().sum::<f64>() / messages as f64;
    let bits = (messages as f64).log2();
    Ok(Prediction {
        r_bar: bits / n_bar,
        d_bar: n_bar / bits,
        p,
        expected_rounds,
        n_bar,
        n,
        gamma,
        messages,
        p_indicator,
    })
}
