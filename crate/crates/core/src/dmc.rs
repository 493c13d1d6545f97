//! Discrete memoryless channels.
//!
//! A [`Dmc`] is a row-stochastic table `w[x][y] = W(y|x)`. The value `0.0` is
//! a structural zero: the pair `(x, y)` can never occur, and every positivity
//! test in this crate is a strict `> 0.0` comparison against it. Only the
//! row-sum check carries a tolerance.

use std::collections::{BTreeMap, VecDeque};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance on each row sum.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Default threshold below which an input is considered outside the support of Q*.
pub const DEFAULT_SUPPORT_EPS: f64 = 1e-9;
/// Default log-space tolerance for the product-form check.
pub const DEFAULT_TOL_DECOMP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("transition table is empty")]
    EmptyTable,
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedTable {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("entry w[{x}][{y}] = {value} is negative")]
    NegativeEntry { x: usize, y: usize, value: f64 },
    #[error("entry w[{x}][{y}] = {value} is not a probability")]
    InvalidEntry { x: usize, y: usize, value: f64 },
    #[error("row {row} sums to {sum}, not 1")]
    NonStochasticRow { row: usize, sum: f64 },
    #[error("symbol {index} out of range for alphabet of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("invalid input distribution: {0}")]
    InvalidDistribution(String),
    #[error("declared {what} size {declared} does not match table size {actual}")]
    SizeMismatch {
        what: &'static str,
        declared: usize,
        actual: usize,
    },
}

/// Row sampler restricted to the positive entries of one row.
#[derive(Debug, Clone)]
struct RowSampler {
    support: Vec<usize>,
    index: WeightedIndex<f64>,
}

impl RowSampler {
    fn new(row: &[f64]) -> Self {
        let support: Vec<usize> = (0..row.len()).filter(|&y| row[y] > 0.0).collect();
        let index = WeightedIndex::new(support.iter().map(|&y| row[y]))
            .expect("validated row has positive mass");
        RowSampler { support, index }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.support[self.index.sample(rng)]
    }
}

/// A validated discrete memoryless channel. Immutable once constructed.
#[derive(Debug, Clone)]
pub struct Dmc {
    rows: Vec<Vec<f64>>,
    output_size: usize,
    samplers: Vec<RowSampler>,
}

impl PartialEq for Dmc {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
    }
}

impl Dmc {
    /// Validate a transition table and build the channel.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ChannelError> {
        let output_size = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || output_size == 0 {
            return Err(ChannelError::EmptyTable);
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != output_size {
                return Err(ChannelError::RaggedTable {
                    row: x,
                    expected: output_size,
                    found: row.len(),
                });
            }
            for (y, &value) in row.iter().enumerate() {
                if value.is_nan() || value.is_infinite() || value > 1.0 {
                    return Err(ChannelError::InvalidEntry { x, y, value });
                }
                if value < 0.0 {
                    return Err(ChannelError::NegativeEntry { x, y, value });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(ChannelError::NonStochasticRow { row: x, sum });
            }
        }
        let samplers = rows.iter().map(|r| RowSampler::new(r)).collect();
        Ok(Dmc {
            rows,
            output_size,
            samplers,
        })
    }

    /// Noiseless channel on `size` symbols.
    pub fn identity(size: usize) -> Self {
        let rows = (0..size)
            .map(|x| (0..size).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        Dmc::new(rows).expect("identity is stochastic")
    }

    /// Binary erasure channel with outputs ordered `(0, e, 1)`.
    pub fn bec(epsilon: f64) -> Result<Self, ChannelError> {
        Dmc::new(vec![
            vec![1.0 - epsilon, epsilon, 0.0],
            vec![0.0, epsilon, 1.0 - epsilon],
        ])
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self, ChannelError> {
        Dmc::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Z-channel: input 0 is received as 0 surely, input 1 flips to 0 with probability `p`.
    pub fn z_channel(p: f64) -> Result<Self, ChannelError> {
        Dmc::new(vec![vec![1.0, 0.0], vec![p, 1.0 - p]])
    }

    pub fn input_size(&self) -> usize {
        self.rows.len()
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `W(y|x)`. Panics on out-of-range indices.
    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    /// Whether input `x` can produce output `y` (strictly positive transition).
    #[inline]
    pub fn can_produce(&self, x: usize, y: usize) -> bool {
        self.rows[x][y] > 0.0
    }

    /// Outputs reachable from `x`, in increasing order.
    pub fn support(&self, x: usize) -> &[usize] {
        &self.samplers[x].support
    }

    fn check_input(&self, x: usize) -> Result<(), ChannelError> {
        if x >= self.input_size() {
            return Err(ChannelError::IndexOutOfRange {
                index: x,
                size: self.input_size(),
            });
        }
        Ok(())
    }

    /// Draw one channel output for input `x`. Outputs with `W(y|x) = 0` are never returned.
    pub fn sample_output<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Result<usize, ChannelError> {
        self.check_input(x)?;
        Ok(self.samplers[x].sample(rng))
    }

    /// Pass a block through `n` independent uses of the channel.
    pub fn transmit_block<R: Rng + ?Sized>(
        &self,
        inputs: &[usize],
        rng: &mut R,
    ) -> Result<Vec<usize>, ChannelError> {
        let mut out = Vec::with_capacity(inputs.len());
        self.transmit_into(inputs, rng, &mut out)?;
        Ok(out)
    }

    /// Like [`Dmc::transmit_block`] but appends into a reusable buffer.
    pub fn transmit_into<R: Rng + ?Sized>(
        &self,
        inputs: &[usize],
        rng: &mut R,
        out: &mut Vec<usize>,
    ) -> Result<(), ChannelError> {
        for &x in inputs {
            self.check_input(x)?;
        }
        out.extend(inputs.iter().map(|&x| self.samplers[x].sample(rng)));
        Ok(())
    }

    /// Every disprover triple, ordered by `(y_c, x_c, x_e)`.
    pub fn find_disprovers(&self) -> Vec<DisproverTriple> {
        let mut found = Vec::new();
        for y_c in 0..self.output_size {
            for x_c in 0..self.input_size() {
                if !self.can_produce(x_c, y_c) {
                    continue;
                }
                for x_e in 0..self.input_size() {
                    if self.rows[x_e][y_c] == 0.0 {
                        found.push(DisproverTriple { x_c, x_e, y_c });
                    }
                }
            }
        }
        found
    }

    /// Pick a disprover according to `policy`, or `None` if the channel has none.
    pub fn select_disprover(&self, policy: DisproverPolicy) -> Option<DisproverTriple> {
        let all = self.find_disprovers();
        match policy {
            DisproverPolicy::First => all.first().copied(),
            DisproverPolicy::MaxProb => {
                let mut best: Option<DisproverTriple> = None;
                for t in all {
                    if best.is_none_or(|b| self.prob(t.x_c, t.y_c) > self.prob(b.x_c, b.y_c)) {
                        best = Some(t);
                    }
                }
                best
            }
        }
    }

    /// Check that `t` is a disprover of this channel.
    pub fn validate_disprover(&self, t: DisproverTriple) -> Result<(), DisproverError> {
        let (xs, ys) = (self.input_size(), self.output_size);
        if t.x_c >= xs || t.x_e >= xs || t.y_c >= ys {
            return Err(DisproverError::OutOfRange(t));
        }
        if t.x_c == t.x_e {
            return Err(DisproverError::SameInput(t));
        }
        if self.rows[t.x_e][t.y_c] != 0.0 {
            return Err(DisproverError::NotExcluded(t));
        }
        if !self.can_produce(t.x_c, t.y_c) {
            return Err(DisproverError::Unreachable(t));
        }
        Ok(())
    }

    /// True iff two distinct inputs have disjoint output supports (positive zero-error capacity).
    pub fn has_nonconfusable_pair(&self) -> bool {
        let n = self.input_size();
        (0..n).any(|a| {
            (a + 1..n).any(|b| (0..self.output_size).all(|y| !(self.can_produce(a, y) && self.can_produce(b, y))))
        })
    }

    /// Test whether `W(y|x) = A(x)B(y)` on `{(x,y): q[x] > support_eps, W(y|x) > 0}`.
    ///
    /// Log-values are assigned by breadth-first traversal of the bipartite
    /// support graph, one component at a time, rooted at the lowest-index input
    /// with `log A = 0`. Every edge is then checked in log-space. When an edge
    /// fails, the cycle it closes with the traversal tree is returned.
    pub fn check_decomposability(
        &self,
        q: &[f64],
        support_eps: f64,
        tol_decomp: f64,
    ) -> Result<DecompositionCheck, ChannelError> {
        validate_distribution(q, self.input_size())?;
        let xs = self.input_size();
        let ys = self.output_size;
        let in_support = |x: usize, y: usize| q[x] > support_eps && self.can_produce(x, y);

        // Node numbering: inputs 0..xs, outputs xs..xs+ys.
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); xs + ys];
        let mut edges = Vec::new();
        for x in 0..xs {
            for y in 0..ys {
                if in_support(x, y) {
                    adj[x].push(xs + y);
                    adj[xs + y].push(x);
                    edges.push((x, y));
                }
            }
        }

        let mut log_val: Vec<Option<f64>> = vec![None; xs + ys];
        let mut parent: Vec<Option<usize>> = vec![None; xs + ys];
        for root in 0..xs {
            if log_val[root].is_some() || adj[root].is_empty() {
                continue;
            }
            log_val[root] = Some(0.0);
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                let lu = log_val[u].expect("queued nodes are assigned");
                for &v in &adj[u] {
                    if log_val[v].is_some() {
                        continue;
                    }
                    let (x, y) = if u < xs { (u, v - xs) } else { (v, u - xs) };
                    log_val[v] = Some(self.rows[x][y].ln() - lu);
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }

        for &(x, y) in &edges {
            let la = log_val[x].expect("support nodes are assigned");
            let lb = log_val[xs + y].expect("support nodes are assigned");
            let deviation = (self.rows[x][y].ln() - la - lb).abs();
            if deviation > tol_decomp {
                let cycle = tree_cycle(&parent, x, xs + y)
                    .into_iter()
                    .map(|node| {
                        if node < xs {
                            CycleNode::Input(node)
                        } else {
                            CycleNode::Output(node - xs)
                        }
                    })
                    .collect();
                return Ok(DecompositionCheck::Inconsistent(WitnessCycle {
                    nodes: cycle,
                    log_deviation: deviation,
                }));
            }
        }

        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        for &(x, y) in &edges {
            a.insert(x, log_val[x].unwrap().exp());
            b.insert(y, log_val[xs + y].unwrap().exp());
        }
        Ok(DecompositionCheck::Decomposable(Decomposition {
            a,
            b,
            support: edges,
        }))
    }

    /// Full positivity report. `q_star` is the distribution used for the product-form test.
    pub fn report(&self, q_star: &[f64], support_eps: f64, tol_decomp: f64) -> Result<ChannelReport, ChannelError> {
        let disprovers = self.find_disprovers();
        let check = self.check_decomposability(q_star, support_eps, tol_decomp)?;
        let (decomposable_on_support, witness_cycle) = match check {
            DecompositionCheck::Decomposable(d) => (Some(d), None),
            DecompositionCheck::Inconsistent(w) => (None, Some(w)),
        };
        Ok(ChannelReport {
            c0u_positive: !disprovers.is_empty(),
            disprovers,
            has_nonconfusable_pair: self.has_nonconfusable_pair(),
            decomposable_on_support,
            witness_cycle,
        })
    }
}

/// Path `from → … → lca → … → to` through the BFS tree, closed by the edge `(to, from)`.
fn tree_cycle(parent: &[Option<usize>], from: usize, to: usize) -> Vec<usize> {
    let ancestors = |mut node: usize| {
        let mut path = vec![node];
        while let Some(p) = parent[node] {
            path.push(p);
            node = p;
        }
        path
    };
    let up_from = ancestors(from);
    let up_to = ancestors(to);
    let lca = *up_from
        .iter()
        .find(|n| up_to.contains(n))
        .expect("both endpoints lie in one component");
    let mut cycle: Vec<usize> = up_from.iter().copied().take_while(|&n| n != lca).collect();
    cycle.push(lca);
    let tail: Vec<usize> = up_to.iter().copied().take_while(|&n| n != lca).collect();
    cycle.extend(tail.into_iter().rev());
    cycle
}

pub(crate) fn validate_distribution(q: &[f64], size: usize) -> Result<(), ChannelError> {
    if q.len() != size {
        return Err(ChannelError::InvalidDistribution(format!(
            "length {} does not match {size} inputs",
            q.len()
        )));
    }
    if q.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(ChannelError::InvalidDistribution("entries must be finite and non-negative".into()));
    }
    let sum: f64 = q.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(ChannelError::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(())
}

/// `(x_c, x_e, y_c)` with `W(y_c|x_e) = 0` and `W(y_c|x_c) > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DisproverTriple {
    pub x_c: usize,
    pub x_e: usize,
    pub y_c: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DisproverError {
    #[error("disprover {0:?} indexes outside the channel alphabets")]
    OutOfRange(DisproverTriple),
    #[error("disprover {0:?} uses the same input twice")]
    SameInput(DisproverTriple),
    #[error("disprover {0:?}: W(y_c|x_e) is not a structural zero")]
    NotExcluded(DisproverTriple),
    #[error("disprover {0:?}: W(y_c|x_c) is zero")]
    Unreachable(DisproverTriple),
}

/// Which disprover a protocol uses when a channel has several.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisproverPolicy {
    /// First triple in `(y_c, x_c, x_e)` order.
    #[default]
    First,
    /// Largest `W(y_c|x_c)`, ties broken by order.
    MaxProb,
}

/// Positive `A`, `B` with `W(y|x) = A(x)B(y)` on `support`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub a: BTreeMap<usize, f64>,
    pub b: BTreeMap<usize, f64>,
    pub support: Vec<(usize, usize)>,
}

impl Decomposition {
    /// Largest `|W(y|x) - A(x)B(y)|` over the support.
    pub fn max_reconstruction_error(&self, ch: &Dmc) -> f64 {
        self.support
            .iter()
            .map(|&(x, y)| (ch.prob(x, y) - self.a[&x] * self.b[&y]).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleNode {
    Input(usize),
    Output(usize),
}

/// A cycle in the support graph whose alternating log-sum is not zero.
///
/// Consecutive nodes (and the last with the first) are joined by support edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCycle {
    pub nodes: Vec<CycleNode>,
    pub log_deviation: f64,
}

impl WitnessCycle {
    /// Alternating sum of `ln W` around the cycle, recomputed from the channel.
    pub fn alternating_log_sum(&self, ch: &Dmc) -> f64 {
        let len = self.nodes.len();
        let mut sum = 0.0;
        for i in 0..len {
            let (u, v) = (self.nodes[i], self.nodes[(i + 1) % len]);
            let (x, y) = match (u, v) {
                (CycleNode::Input(x), CycleNode::Output(y)) | (CycleNode::Output(y), CycleNode::Input(x)) => (x, y),
                _ => return f64::NAN,
            };
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * ch.prob(x, y).ln();
        }
        sum
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecompositionCheck {
    Decomposable(Decomposition),
    Inconsistent(WitnessCycle),
}

impl DecompositionCheck {
    pub fn decomposition(&self) -> Option<&Decomposition> {
        match self {
            DecompositionCheck::Decomposable(d) => Some(d),
            DecompositionCheck::Inconsistent(_) => None,
        }
    }

    pub fn witness(&self) -> Option<&WitnessCycle> {
        match self {
            DecompositionCheck::Decomposable(_) => None,
            DecompositionCheck::Inconsistent(w) => Some(w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub disprovers: Vec<DisproverTriple>,
    pub has_nonconfusable_pair: bool,
    pub c0u_positive: bool,
    pub decomposable_on_support: Option<Decomposition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_cycle: Option<WitnessCycle>,
}
