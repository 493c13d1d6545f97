//! Adaptive zero-error protocols on a slotted schedule.
//!
//! Every round is `n` forward channel uses carrying a codeword followed by `γ`
//! uses carrying an indicator block built from a disprover `(x_c, x_e, y_c)`.
//! `y_c` can only come out of `x_c`, so seeing it anywhere in the block is a
//! certificate that `x_c` was sent.
//!
//! * [`noiseless`]: perfect output feedback. The transmitter reruns the
//!   receiver's decoder on the fed-back block and sends the indicator on the
//!   forward channel.
//! * [`noisy`]: the receiver sends the indicator back over a noisy backward
//!   channel, and a one-bit state carried in every codeword keeps the two
//!   ends agreeing on message boundaries.

pub mod noiseless;
pub mod noisy;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::analysis::gamma_auto;
use crate::codebook::{CodeError, DecodeOutcome};
use crate::dmc::{ChannelError, DisproverError};

pub use noiseless::{run_noiseless_message, NoiselessSessionConfig};
pub use noisy::{
    run_noisy_session, rx_step, rx_step_variant, tx_step, NoisySession, NoisySessionConfig, ReceiverVariant, RxReply,
    RxState, TxAction, TxInput, TxPhase, TxState,
};

/// Rounds allowed for a single message before the run is aborted.
pub const ROUND_CAP: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("configuration can never deliver: {0}")]
    NonterminatingConfig(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("transmitter in {phase:?} phase cannot accept {input}")]
    PhaseMismatch { phase: TxPhase, input: &'static str },
    #[error("message {message} exceeded {cap} rounds")]
    RoundCap { message: usize, cap: u64 },
    #[error("transcript integrity violation: {0}")]
    Integrity(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Disprover(#[from] DisproverError),
}

/// `seq ≏ letter`: the letter occurs somewhere in the sequence.
pub fn contains_letter(seq: &[usize], letter: usize) -> bool {
    seq.contains(&letter)
}

/// Indicator block length. `Auto` uses `max(1, ⌈log2 n⌉)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaSchedule {
    #[default]
    Auto,
    Fixed(usize),
}

impl GammaSchedule {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            GammaSchedule::Auto => gamma_auto(n.max(1)),
            GammaSchedule::Fixed(g) => g,
        }
    }
}

impl Serialize for GammaSchedule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            GammaSchedule::Auto => s.serialize_str("auto"),
            GammaSchedule::Fixed(g) => s.serialize_u64(*g as u64),
        }
    }
}

impl<'de> Deserialize<'de> for GammaSchedule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(u64),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Text(t) => t.parse(),
            Raw::Int(g) => g.to_string().parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for GammaSchedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(GammaSchedule::Auto);
        }
        match s.parse::<usize>() {
            Ok(g) if g >= 1 => Ok(GammaSchedule::Fixed(g)),
            _ => Err(format!("gamma must be \"auto\" or a positive integer, got {s:?}")),
        }
    }
}

/// One round of a session, as seen by both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// Position of the message in the session.
    pub message_index: usize,
    /// 1-based round number within the message.
    pub round_index: u64,
    pub forward_sent: Vec<usize>,
    pub forward_received: Vec<usize>,
    pub decode: DecodeOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoded_state_bit: Option<bool>,
    /// Indicator block: on the backward channel (noisy) or the forward channel (noiseless).
    pub backward_sent: Vec<usize>,
    pub backward_received: Vec<usize>,
    pub tx_progressed: bool,
    pub rx_committed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_state_bit: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_state_bit: Option<bool>,
}

/// Result of delivering one message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageOutcome {
    /// Message index (noiseless) or payload value (noisy).
    pub payload: u64,
    pub rounds: u64,
    /// `(n + γ) · rounds`.
    pub delay_uses: u64,
    pub committed_ok: bool,
}
