//! Depth-first enumeration of every positive-probability execution of the
//! noisy protocol up to a fixed number of rounds.
//!
//! Branch points: the payload loaded at each message boundary, every
//! reachable forward output block, and every reachable backward output
//! block. Each round is checked against the safety invariants; liveness is
//! only checked up to the depth bound.

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::codebook::DecodeOutcome;
use crate::dmc::Dmc;
use crate::protocol::{
    contains_letter, rx_step_variant, tx_step, NoisySessionConfig, ReceiverVariant, RoundRecord, RxState, TxAction,
    TxInput, TxState,
};

/// Largest `(|Y_f|^n · |Y_b|^γ)^depth` accepted.
pub const EXPLORE_BUDGET: u64 = 100_000_000;

/// Counterexamples kept in a report; the rest are only counted.
const KEPT_VIOLATIONS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: String,
    pub detail: String,
    /// Payloads loaded by the transmitter along the branch.
    pub sent: Vec<u64>,
    pub transcript: Vec<RoundRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploreReport {
    pub depth: usize,
    /// Complete executions (leaves) explored, including ones cut short by a violation.
    pub executions: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
    /// Holds up to `depth` rounds only.
    pub liveness_ok: bool,
    pub variant: ReceiverVariant,
    pub n: usize,
    pub gamma: usize,
    pub payload_bits: usize,
}

impl ExploreReport {
    pub fn is_safe(&self) -> bool {
        self.violation_count == 0
    }
}

/// Explore the faithful protocol.
pub fn explore_exhaustive(cfg: &NoisySessionConfig, max_rounds: usize) -> Result<ExploreReport, SimError> {
    explore_variant(cfg, max_rounds, ReceiverVariant::Faithful)
}

/// Explore with a chosen receiver implementation.
pub fn explore_variant(
    cfg: &NoisySessionConfig,
    max_rounds: usize,
    variant: ReceiverVariant,
) -> Result<ExploreReport, SimError> {
    let gamma = cfg.gamma();
    let n = cfg.code().n();
    check_budget(cfg.forward().output_size(), n, cfg.backward().output_size(), gamma, max_rounds)?;
    let mut ex = Explorer {
        cfg,
        variant,
        max_rounds,
        path: Vec::new(),
        sent: Vec::new(),
        report: ExploreReport {
            depth: max_rounds,
            executions: 0,
            violation_count: 0,
            violations: Vec::new(),
            liveness_ok: true,
            variant,
            n,
            gamma,
            payload_bits: cfg.payload_bits(),
        },
    };
    ex.round(TxState::default(), RxState::default(), 0);
    Ok(ex.report)
}

fn check_budget(yf: usize, n: usize, yb: usize, gamma: usize, depth: usize) -> Result<(), SimError> {
    let per_round = (yf as u128)
        .checked_pow(n as u32)
        .and_then(|a| (yb as u128).checked_pow(gamma as u32).and_then(|b| a.checked_mul(b)));
    let total = per_round.and_then(|r| r.checked_pow(u32::try_from(depth).ok()?));
    match total {
        Some(t) if t <= EXPLORE_BUDGET as u128 => Ok(()),
        Some(t) => Err(SimError::BudgetExceeded {
            needed: t.to_string(),
            budget: EXPLORE_BUDGET,
        }),
        None => Err(SimError::BudgetExceeded {
            needed: format!("({yf}^{n} * {yb}^{gamma})^{depth}"),
            budget: EXPLORE_BUDGET,
        }),
    }
}

/// Every output sequence `inputs` can produce with positive probability.
pub(crate) fn reachable_outputs(ch: &Dmc, inputs: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(inputs.len())];
    for &x in inputs {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                ch.support(x).iter().map(move |&y| {
                    let mut seq = prefix.clone();
                    seq.push(y);
                    seq
                })
            })
            .collect();
    }
    out
}

struct Explorer<'a> {
    cfg: &'a NoisySessionConfig,
    variant: ReceiverVariant,
    max_rounds: usize,
    path: Vec<RoundRecord>,
    sent: Vec<u64>,
    report: ExploreReport,
}

impl Explorer<'_> {
    fn round(&mut self, tx: TxState, rx: RxState, done: usize) {
        if done == self.max_rounds {
            self.report.executions += 1;
            return;
        }
        if tx.payload.is_none() {
            for payload in 0..self.cfg.payload_count() {
                self.sent.push(payload);
                self.send(tx.load(payload), rx.clone(), done);
                self.sent.pop();
            }
        } else {
            self.send(tx, rx, done);
        }
    }

    fn send(&mut self, tx: TxState, rx: RxState, done: usize) {
        let cfg = self.cfg;
        let (tx, action) = match tx_step(cfg, tx, TxInput::Slot) {
            Ok(r) => r,
            Err(e) => return self.violate("transmitter", e.to_string()),
        };
        let TxAction::Send { message } = action else {
            return self.violate("transmitter", format!("expected a send, got {action:?}"));
        };
        let codeword = cfg.code().codeword(message).to_vec();
        for y in reachable_outputs(cfg.forward(), &codeword) {
            let (rx2, reply) = match rx_step_variant(cfg, rx.clone(), &y, self.variant) {
                Ok(r) => r,
                Err(e) => {
                    self.violate("receiver", e.to_string());
                    continue;
                }
            };
            for z in reachable_outputs(cfg.backward(), &reply.block) {
                let (tx2, action) = match tx_step(cfg, tx, TxInput::Feedback(&z)) {
                    Ok(r) => r,
                    Err(e) => {
                        self.violate("transmitter", e.to_string());
                        continue;
                    }
                };
                let progressed = matches!(action, TxAction::Advance { .. });
                self.path.push(RoundRecord {
                    message_index: self.sent.len() - 1,
                    round_index: tx2.rounds,
                    forward_sent: codeword.clone(),
                    forward_received: y.clone(),
                    decode: reply.decode,
                    decoded_state_bit: reply.decoded_state_bit,
                    backward_sent: reply.block.clone(),
                    backward_received: z.clone(),
                    tx_progressed: progressed,
                    rx_committed: reply.committed.is_some(),
                    tx_state_bit: Some(tx2.state_bit),
                    rx_state_bit: Some(rx2.state_bit),
                });
                match self.check(&tx2, &rx2, &reply.block, &z, reply.decode, progressed) {
                    Ok(()) => self.round(tx2, rx2.clone(), done + 1),
                    Err((name, detail)) => self.violate(name, detail),
                }
                self.path.pop();
            }
        }
    }

    /// Invariants after a complete round.
    fn check(
        &mut self,
        tx: &TxState,
        rx: &RxState,
        block: &[usize],
        z: &[usize],
        decode: DecodeOutcome,
        progressed: bool,
    ) -> Result<(), (&'static str, String)> {
        let t = self.cfg.backward_disprover();
        // Messages acknowledged so far: all loaded ones except an unfinished current one.
        let acked = self.sent.len() - usize::from(tx.payload.is_some());
        let committed = rx.committed.len();
        if committed > self.sent.len() {
            return Err(("exactly_once", format!("{committed} commits for {} payloads sent", self.sent.len())));
        }
        if let Some(i) = (0..committed).find(|&i| rx.committed[i] != self.sent[i]) {
            return Err((
                "zero_error",
                format!("commit {i} is {} but payload {} was sent", rx.committed[i], self.sent[i]),
            ));
        }
        if committed != acked && committed != acked + 1 {
            return Err(("in_order", format!("{committed} commits with {acked} acknowledgements")));
        }
        if (tx.state_bit != rx.state_bit) != (committed == acked + 1) {
            return Err((
                "state_bit_safety",
                format!(
                    "s_t={} s_r={} with {committed} commits and {acked} acknowledgements",
                    tx.state_bit as u8, rx.state_bit as u8
                ),
            ));
        }
        let saw_yc = contains_letter(z, t.y_c);
        if saw_yc && !block.contains(&t.x_c) {
            return Err(("disprover_soundness", "y'_c observed from a block without x'_c".into()));
        }
        if matches!(decode, DecodeOutcome::Message(_)) && saw_yc && !progressed {
            self.report.liveness_ok = false;
        }
        Ok(())
    }

    fn violate(&mut self, invariant: &str, detail: String) {
        self.report.executions += 1;
        self.report.violation_count += 1;
        if self.report.violations.len() < KEPT_VIOLATIONS {
            self.report.violations.push(Violation {
                invariant: invariant.to_string(),
                detail,
                sent: self.sent.clone(),
                transcript: self.path.clone(),
            });
        }
    }
}
