//! Synchronized delivery over a noisy backward channel.
//!
//! Codewords carry `k` bits `b_1 b_2..b_k`: `b_1` is the transmitter's state
//! bit, the rest is payload. Message index `m = b_1·2^(k−1) + payload`.
//!
//! The receiver commits a uniquely decoded payload only when its state bit
//! matches `b_1`, then flips its own bit. It answers every unique decode with
//! `[x'_c]^γ` and every erasure with `[x'_e]^γ`. The transmitter flips its bit
//! and moves on only after seeing `y'_c`, which `x'_e` can never produce.
//! So `s_t ≠ s_r` exactly while an acknowledgement is outstanding.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{contains_letter, GammaSchedule, MessageOutcome, ProtocolError, RoundRecord, ROUND_CAP};
use crate::codebook::{Codebook, DecodeOutcome};
use crate::dmc::{DisproverError, DisproverPolicy, DisproverTriple, Dmc};

#[derive(Debug, Clone)]
pub struct NoisySessionConfig {
    forward: Dmc,
    backward: Dmc,
    code: Codebook,
    gamma: GammaSchedule,
    backward_disprover: DisproverTriple,
    payload_bits: usize,
}

impl NoisySessionConfig {
    pub fn new(
        forward: Dmc,
        backward: Dmc,
        code: Codebook,
        gamma: GammaSchedule,
        disprover_policy: DisproverPolicy,
    ) -> Result<Self, ProtocolError> {
        let disprover = backward.select_disprover(disprover_policy).ok_or_else(|| {
            ProtocolError::NonterminatingConfig("backward channel has no disprover".into())
        })?;
        Self::with_disprover(forward, backward, code, gamma, disprover)
    }

    pub fn with_disprover(
        forward: Dmc,
        backward: Dmc,
        code: Codebook,
        gamma: GammaSchedule,
        backward_disprover: DisproverTriple,
    ) -> Result<Self, ProtocolError> {
        if let GammaSchedule::Fixed(0) = gamma {
            return Err(ProtocolError::InvalidConfig("gamma must be at least 1".into()));
        }
        let messages = code.messages();
        if messages < 2 || !messages.is_power_of_two() {
            return Err(ProtocolError::InvalidConfig(format!(
                "codebook needs 2^k codewords with k >= 1, has {messages}"
            )));
        }
        let payload_bits = messages.trailing_zeros() as usize - 1;
        if payload_bits > 62 {
            return Err(ProtocolError::InvalidConfig("payloads wider than 62 bits".into()));
        }
        code.check_channel(&forward)?;
        if forward.find_disprovers().is_empty() {
            return Err(ProtocolError::NonterminatingConfig(
                "forward channel has no disprover, so no code can avoid erasures".into(),
            ));
        }
        match backward.validate_disprover(backward_disprover) {
            Ok(()) => {}
            Err(DisproverError::Unreachable(t)) => {
                return Err(ProtocolError::NonterminatingConfig(format!(
                    "W_b(y'_c|x'_c) = 0 for disprover {t:?}"
                )))
            }
            Err(e) => return Err(e.into()),
        }
        for m in 0..messages {
            if !code.can_decode_uniquely(&forward, m)? {
                return Err(ProtocolError::NonterminatingConfig(format!(
                    "codeword {m} is never decoded uniquely (erasure probability 1)"
                )));
            }
        }
        Ok(NoisySessionConfig {
            forward,
            backward,
            code,
            gamma,
            backward_disprover,
            payload_bits,
        })
    }

    pub fn forward(&self) -> &Dmc {
        &self.forward
    }

    pub fn backward(&self) -> &Dmc {
        &self.backward
    }

    pub fn code(&self) -> &Codebook {
        &self.code
    }

    pub fn backward_disprover(&self) -> DisproverTriple {
        self.backward_disprover
    }

    /// Payload bits per message, `k − 1`.
    pub fn payload_bits(&self) -> usize {
        self.payload_bits
    }

    pub fn payload_count(&self) -> u64 {
        1 << self.payload_bits
    }

    pub fn gamma(&self) -> usize {
        self.gamma.resolve(self.code.n())
    }

    pub fn round_length(&self) -> usize {
        self.code.n() + self.gamma()
    }

    /// `W_b(y'_c|x'_c)`.
    pub fn p_indicator(&self) -> f64 {
        self.backward.prob(self.backward_disprover.x_c, self.backward_disprover.y_c)
    }

    pub fn message_index(&self, state_bit: bool, payload: u64) -> usize {
        (usize::from(state_bit) << self.payload_bits) | payload as usize
    }

    /// Inverse of [`NoisySessionConfig::message_index`].
    pub fn split_message(&self, m: usize) -> (bool, u64) {
        let bit = (m >> self.payload_bits) & 1 == 1;
        (bit, (m & ((1 << self.payload_bits) - 1)) as u64)
    }

    fn check_payload(&self, payload: u64) -> Result<(), ProtocolError> {
        if payload >= self.payload_count() {
            return Err(ProtocolError::InvalidConfig(format!(
                "payload {payload} does not fit in {} bits",
                self.payload_bits
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxPhase {
    /// Next slot carries the codeword.
    Forward,
    /// Waiting for the `γ` backward outputs.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxState {
    /// `s_t`.
    pub state_bit: bool,
    pub payload: Option<u64>,
    /// Rounds spent on the current payload.
    pub rounds: u64,
    pub phase: TxPhase,
}

impl Default for TxState {
    fn default() -> Self {
        TxState {
            state_bit: false,
            payload: None,
            rounds: 0,
            phase: TxPhase::Forward,
        }
    }
}

impl TxState {
    pub fn with_state_bit(state_bit: bool) -> Self {
        TxState {
            state_bit,
            ..TxState::default()
        }
    }

    /// Queue the next payload.
    pub fn load(self, payload: u64) -> Self {
        TxState {
            payload: Some(payload),
            rounds: 0,
            phase: TxPhase::Forward,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxInput<'a> {
    /// The forward slot is open.
    Slot,
    /// Outputs of the backward indicator block.
    Feedback(&'a [usize]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxAction {
    Send { message: usize },
    /// No `y'_c` seen; the same codeword goes out next round.
    Retransmit,
    /// `y'_c` seen: the state bit flipped and the payload is done.
    Advance { rounds: u64 },
}

/// Transmitter transition.
pub fn tx_step(cfg: &NoisySessionConfig, st: TxState, input: TxInput<'_>) -> Result<(TxState, TxAction), ProtocolError> {
    match (st.phase, input) {
        (TxPhase::Forward, TxInput::Slot) => {
            let payload = st.payload.ok_or(ProtocolError::PhaseMismatch {
                phase: st.phase,
                input: "slot with no payload loaded",
            })?;
            let message = cfg.message_index(st.state_bit, payload);
            let next = TxState {
                rounds: st.rounds + 1,
                phase: TxPhase::Verify,
                ..st
            };
            Ok((next, TxAction::Send { message }))
        }
        (TxPhase::Verify, TxInput::Feedback(outputs)) => {
            if outputs.len() != cfg.gamma() {
                return Err(ProtocolError::Integrity(format!(
                    "indicator block of length {}, expected {}",
                    outputs.len(),
                    cfg.gamma()
                )));
            }
            if contains_letter(outputs, cfg.backward_disprover.y_c) {
                let next = TxState {
                    state_bit: !st.state_bit,
                    payload: None,
                    rounds: st.rounds,
                    phase: TxPhase::Forward,
                };
                Ok((next, TxAction::Advance { rounds: st.rounds }))
            } else {
                let next = TxState {
                    phase: TxPhase::Forward,
                    ..st
                };
                Ok((next, TxAction::Retransmit))
            }
        }
        (phase, TxInput::Slot) => Err(ProtocolError::PhaseMismatch { phase, input: "slot" }),
        (phase, TxInput::Feedback(_)) => Err(ProtocolError::PhaseMismatch { phase, input: "feedback" }),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RxState {
    /// `s_r`.
    pub state_bit: bool,
    /// Payloads delivered so far, in order.
    pub committed: Vec<u64>,
}

impl RxState {
    pub fn with_state_bit(state_bit: bool) -> Self {
        RxState {
            state_bit,
            committed: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RxReply {
    pub decode: DecodeOutcome,
    pub decoded_state_bit: Option<bool>,
    /// Payload committed in this step, if any.
    pub committed: Option<u64>,
    /// Indicator block for the backward channel.
    pub block: Vec<usize>,
}

/// Receiver logic. Everything but `Faithful` is a deliberately broken
/// receiver used to check that the explorer catches protocol faults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverVariant {
    #[default]
    Faithful,
    /// Commits on every unique decode, ignoring the state bit.
    IgnoreStateBit,
    /// Sends `x'_e` on unique decodes and `x'_c` on erasures.
    SwapIndicators,
}

/// Receiver transition.
pub fn rx_step(cfg: &NoisySessionConfig, st: RxState, y: &[usize]) -> Result<(RxState, RxReply), ProtocolError> {
    rx_step_variant(cfg, st, y, ReceiverVariant::Faithful)
}

pub fn rx_step_variant(
    cfg: &NoisySessionConfig,
    mut st: RxState,
    y: &[usize],
    variant: ReceiverVariant,
) -> Result<(RxState, RxReply), ProtocolError> {
    if y.len() != cfg.code.n() {
        return Err(crate::codebook::CodeError::LengthMismatch {
            expected: cfg.code.n(),
            found: y.len(),
        }
        .into());
    }
    let decode = cfg.code.decode_unchecked(&cfg.forward, y)?;
    let t = cfg.backward_disprover;
    let (confirm, deny) = match variant {
        ReceiverVariant::SwapIndicators => (t.x_e, t.x_c),
        _ => (t.x_c, t.x_e),
    };
    let gamma = cfg.gamma();
    let reply = match decode {
        DecodeOutcome::Message(m) => {
            let (bit, payload) = cfg.split_message(m);
            let commit = bit == st.state_bit || variant == ReceiverVariant::IgnoreStateBit;
            if commit {
                st.committed.push(payload);
                if bit == st.state_bit {
                    st.state_bit = !st.state_bit;
                }
            }
            RxReply {
                decode,
                decoded_state_bit: Some(bit),
                committed: commit.then_some(payload),
                block: vec![confirm; gamma],
            }
        }
        DecodeOutcome::Erasure => RxReply {
            decode,
            decoded_state_bit: None,
            committed: None,
            block: vec![deny; gamma],
        },
    };
    Ok((st, reply))
}

/// A running transmitter/receiver pair.
#[derive(Debug, Clone)]
pub struct NoisySession<'a> {
    cfg: &'a NoisySessionConfig,
    tx: TxState,
    rx: RxState,
    /// Index of the first message of this session within a longer stream.
    base: usize,
    delivered: usize,
}

impl<'a> NoisySession<'a> {
    pub fn new(cfg: &'a NoisySessionConfig) -> Self {
        Self::starting_at(cfg, 0)
    }

    /// A session picking up at message `index` of a longer stream. Both state
    /// bits equal the parity of `index` at every message boundary.
    pub fn starting_at(cfg: &'a NoisySessionConfig, index: usize) -> Self {
        let bit = index % 2 == 1;
        NoisySession {
            cfg,
            tx: TxState::with_state_bit(bit),
            rx: RxState::with_state_bit(bit),
            base: index,
            delivered: 0,
        }
    }

    pub fn tx(&self) -> &TxState {
        &self.tx
    }

    pub fn rx(&self) -> &RxState {
        &self.rx
    }

    /// Run rounds until `payload` is acknowledged.
    pub fn deliver<R: Rng + ?Sized>(
        &mut self,
        payload: u64,
        rng: &mut R,
        mut transcript: Option<&mut Vec<RoundRecord>>,
    ) -> Result<MessageOutcome, ProtocolError> {
        let cfg = self.cfg;
        cfg.check_payload(payload)?;
        let message_index = self.base + self.delivered;
        self.tx = self.tx.load(payload);
        let mut y = Vec::with_capacity(cfg.code.n());
        let mut z = Vec::with_capacity(cfg.gamma());
        loop {
            let (tx, action) = tx_step(cfg, self.tx, TxInput::Slot)?;
            self.tx = tx;
            let TxAction::Send { message } = action else {
                return Err(ProtocolError::Integrity("transmitter skipped its forward slot".into()));
            };
            if self.tx.rounds > ROUND_CAP {
                return Err(ProtocolError::RoundCap {
                    message: message_index,
                    cap: ROUND_CAP,
                });
            }
            let codeword = cfg.code.codeword(message);
            y.clear();
            cfg.forward.transmit_into(codeword, rng, &mut y)?;
            let (rx, reply) = rx_step(cfg, std::mem::take(&mut self.rx), &y)?;
            self.rx = rx;
            z.clear();
            cfg.backward.transmit_into(&reply.block, rng, &mut z)?;
            let (tx, action) = tx_step(cfg, self.tx, TxInput::Feedback(&z))?;
            self.tx = tx;
            let advanced = matches!(action, TxAction::Advance { .. });
            if let Some(tr) = transcript.as_deref_mut() {
                tr.push(RoundRecord {
                    message_index,
                    round_index: self.tx.rounds,
                    forward_sent: codeword.to_vec(),
                    forward_received: y.clone(),
                    decode: reply.decode,
                    decoded_state_bit: reply.decoded_state_bit,
                    backward_sent: reply.block.clone(),
                    backward_received: z.clone(),
                    tx_progressed: advanced,
                    rx_committed: reply.committed.is_some(),
                    tx_state_bit: Some(self.tx.state_bit),
                    rx_state_bit: Some(self.rx.state_bit),
                });
            }
            if let TxAction::Advance { rounds } = action {
                self.delivered += 1;
                let committed_ok =
                    self.rx.committed.len() == self.delivered && self.rx.committed.last() == Some(&payload);
                return Ok(MessageOutcome {
                    payload,
                    rounds,
                    delay_uses: rounds * cfg.round_length() as u64,
                    committed_ok,
                });
            }
        }
    }
}

/// Result of [`run_noisy_session`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyRun {
    pub outcomes: Vec<MessageOutcome>,
    pub committed: Vec<u64>,
    pub transcript: Vec<RoundRecord>,
}

/// Deliver `payloads` in order over one session.
pub fn run_noisy_session<R: Rng + ?Sized>(
    cfg: &NoisySessionConfig,
    payloads: &[u64],
    rng: &mut R,
) -> Result<NoisyRun, ProtocolError> {
    let mut session = NoisySession::new(cfg);
    let mut transcript = Vec::new();
    let outcomes = payloads
        .iter()
        .map(|&p| session.deliver(p, rng, Some(&mut transcript)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(NoisyRun {
        outcomes,
        committed: session.rx.committed,
        transcript,
    })
}
