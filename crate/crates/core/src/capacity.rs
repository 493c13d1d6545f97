//! Shannon capacity by Blahut–Arimoto alternating maximization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dmc::{validate_distribution, ChannelError, Dmc};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no convergence after {} iterations (gap {})", .0.iterations, .0.gap_bound)]
    MaxIterExceeded(Box<CapacityResult>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity_bits: f64,
    pub q_star: Vec<f64>,
    pub iterations: usize,
    pub gap_bound: f64,
    #[serde(default = "converged_default")]
    pub converged: bool,
}

fn converged_default() -> bool {
    true
}

/// `I(Q;W)` in bits. Terms with `q[x]·W(y|x) = 0` contribute nothing.
pub fn mutual_information(q: &[f64], ch: &Dmc) -> Result<f64, ChannelError> {
    validate_distribution(q, ch.input_size())?;
    let r = output_distribution(q, ch.rows());
    let mut info = 0.0;
    for (x, row) in ch.rows().iter().enumerate() {
        if q[x] == 0.0 {
            continue;
        }
        for (y, &w) in row.iter().enumerate() {
            if w > 0.0 {
                info += q[x] * w * (w / r[y]).log2();
            }
        }
    }
    Ok(info.max(0.0))
}

fn output_distribution(q: &[f64], rows: &[Vec<f64>]) -> Vec<f64> {
    let mut r = vec![0.0; rows[0].len()];
    for (qx, row) in q.iter().zip(rows) {
        for (ry, w) in r.iter_mut().zip(row) {
            *ry += qx * w;
        }
    }
    r
}

/// Per-input divergence `D(W(·|x) ‖ r)` in bits.
fn divergences(rows: &[Vec<f64>], r: &[f64], out: &mut [f64]) {
    for (d, row) in out.iter_mut().zip(rows) {
        *d = row
            .iter()
            .zip(r)
            .filter(|(&w, _)| w > 0.0)
            .map(|(&w, &ry)| w * (w / ry).log2())
            .sum();
    }
}

/// Capacity in bits per channel use, starting from the uniform input distribution.
///
/// Stops once `max_x D(W(·|x)‖r) − I(q;W) ≤ tol`; that bracket always
/// contains the capacity. The midpoint is reported.
pub fn blahut_arimoto(ch: &Dmc, tol: f64, max_iter: usize) -> Result<CapacityResult, CapacityError> {
    run(ch, tol, max_iter, None)
}

/// Same as [`blahut_arimoto`] but also records the lower bound after every iteration.
pub fn blahut_arimoto_trace(ch: &Dmc, tol: f64, max_iter: usize) -> Result<(CapacityResult, Vec<f64>), CapacityError> {
    let mut trace = Vec::new();
    let res = run(ch, tol, max_iter, Some(&mut trace))?;
    Ok((res, trace))
}

fn run(ch: &Dmc, tol: f64, max_iter: usize, mut trace: Option<&mut Vec<f64>>) -> Result<CapacityResult, CapacityError> {
    if !(tol > 0.0) {
        return Err(CapacityError::InvalidTolerance(tol));
    }
    let xs = ch.input_size();
    // Drop outputs no input can reach.
    let live: Vec<usize> = (0..ch.output_size())
        .filter(|&y| (0..xs).any(|x| ch.can_produce(x, y)))
        .collect();
    let rows: Vec<Vec<f64>> = ch
        .rows()
        .iter()
        .map(|row| live.iter().map(|&y| row[y]).collect())
        .collect();

    let mut q = vec![1.0 / xs as f64; xs];
    let mut d = vec![0.0; xs];
    let mut iterations = 0;
    loop {
        let r = output_distribution(&q, &rows);
        divergences(&rows, &r, &mut d);
        let lower: f64 = q.iter().zip(&d).map(|(qx, dx)| qx * dx).sum();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if let Some(t) = trace.as_deref_mut() {
            t.push(lower);
        }
        let gap = (upper - lower).max(0.0);
        let result = || CapacityResult {
            capacity_bits: (0.5 * (upper + lower)).max(0.0),
            q_star: q.clone(),
            iterations,
            gap_bound: gap,
            converged: gap <= tol,
        };
        if gap <= tol {
            return Ok(result());
        }
        if iterations >= max_iter {
            return Err(CapacityError::MaxIterExceeded(Box::new(result())));
        }
        // Subtract the max before exponentiating to keep the weights bounded.
        let mut total = 0.0;
        for (qx, dx) in q.iter_mut().zip(&d) {
            *qx *= (dx - upper).exp2();
            total += *qx;
        }
        q.iter_mut().for_each(|qx| *qx /= total);
        iterations += 1;
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}
