//! Repeat-until-verified delivery with perfect output feedback.

use rand::Rng;

use super::{contains_letter, GammaSchedule, MessageOutcome, ProtocolError, RoundRecord, ROUND_CAP};
use crate::codebook::{Codebook, DecodeOutcome};
use crate::dmc::{DisproverError, DisproverPolicy, DisproverTriple, Dmc};

#[derive(Debug, Clone)]
pub struct NoiselessSessionConfig {
    channel: Dmc,
    code: Codebook,
    gamma: GammaSchedule,
    disprover: DisproverTriple,
    disprover_policy: DisproverPolicy,
}

impl NoiselessSessionConfig {
    /// Pick the disprover by `policy` and validate the whole configuration.
    pub fn new(
        channel: Dmc,
        code: Codebook,
        gamma: GammaSchedule,
        disprover_policy: DisproverPolicy,
    ) -> Result<Self, ProtocolError> {
        let disprover = channel.select_disprover(disprover_policy).ok_or_else(|| {
            ProtocolError::NonterminatingConfig("forward channel has no disprover".into())
        })?;
        Self::build(channel, code, gamma, disprover, disprover_policy)
    }

    /// Use an explicit disprover triple.
    pub fn with_disprover(
        channel: Dmc,
        code: Codebook,
        gamma: GammaSchedule,
        disprover: DisproverTriple,
    ) -> Result<Self, ProtocolError> {
        Self::build(channel, code, gamma, disprover, DisproverPolicy::First)
    }

    fn build(
        channel: Dmc,
        code: Codebook,
        gamma: GammaSchedule,
        disprover: DisproverTriple,
        disprover_policy: DisproverPolicy,
    ) -> Result<Self, ProtocolError> {
        if let GammaSchedule::Fixed(0) = gamma {
            return Err(ProtocolError::InvalidConfig("gamma must be at least 1".into()));
        }
        code.check_channel(&channel)?;
        match channel.validate_disprover(disprover) {
            Ok(()) => {}
            Err(DisproverError::Unreachable(t)) => {
                return Err(ProtocolError::NonterminatingConfig(format!(
                    "W(y_c|x_c) = 0 for disprover {t:?}"
                )))
            }
            Err(e) => return Err(e.into()),
        }
        for m in 0..code.messages() {
            if !code.can_decode_uniquely(&channel, m)? {
                return Err(ProtocolError::NonterminatingConfig(format!(
                    "message {m} is never decoded uniquely (erasure probability 1)"
                )));
            }
        }
        Ok(NoiselessSessionConfig {
            channel,
            code,
            gamma,
            disprover,
            disprover_policy,
        })
    }

    pub fn channel(&self) -> &Dmc {
        &self.channel
    }

    pub fn code(&self) -> &Codebook {
        &self.code
    }

    pub fn disprover(&self) -> DisproverTriple {
        self.disprover
    }

    pub fn disprover_policy(&self) -> DisproverPolicy {
        self.disprover_policy
    }

    pub fn gamma(&self) -> usize {
        self.gamma.resolve(self.code.n())
    }

    /// `W(y_c|x_c)`: chance a single indicator symbol gets through.
    pub fn p_indicator(&self) -> f64 {
        self.channel.prob(self.disprover.x_c, self.disprover.y_c)
    }

    /// Channel uses per round.
    pub fn round_length(&self) -> usize {
        self.code.n() + self.gamma()
    }
}

/// Deliver message `m`, returning the round count and a full transcript.
pub fn run_noiseless_message<R: Rng + ?Sized>(
    cfg: &NoiselessSessionConfig,
    m: usize,
    rng: &mut R,
) -> Result<(u64, Vec<RoundRecord>), ProtocolError> {
    let mut transcript = Vec::new();
    let outcome = deliver(cfg, 0, m, rng, Some(&mut transcript))?;
    Ok((outcome.rounds, transcript))
}

/// One message of a noiseless-feedback session.
pub(crate) fn deliver<R: Rng + ?Sized>(
    cfg: &NoiselessSessionConfig,
    message_index: usize,
    m: usize,
    rng: &mut R,
    mut transcript: Option<&mut Vec<RoundRecord>>,
) -> Result<MessageOutcome, ProtocolError> {
    if m >= cfg.code.messages() {
        return Err(ProtocolError::InvalidConfig(format!(
            "message {m} out of range for {} codewords",
            cfg.code.messages()
        )));
    }
    let gamma = cfg.gamma();
    let t = cfg.disprover;
    let confirm = vec![t.x_c; gamma];
    let deny = vec![t.x_e; gamma];
    let codeword = cfg.code.codeword(m);
    let mut y = Vec::with_capacity(cfg.code.n());
    let mut z = Vec::with_capacity(gamma);

    let mut rounds = 0u64;
    loop {
        rounds += 1;
        if rounds > ROUND_CAP {
            return Err(ProtocolError::RoundCap {
                message: message_index,
                cap: ROUND_CAP,
            });
        }
        y.clear();
        cfg.channel.transmit_into(codeword, rng, &mut y)?;
        let decoded = cfg.code.decode_unchecked(&cfg.channel, &y)?;
        // The transmitter sees y through the feedback link and runs the same decoder.
        let block = if decoded == DecodeOutcome::Message(m) { &confirm } else { &deny };
        z.clear();
        cfg.channel.transmit_into(block, rng, &mut z)?;
        let done = contains_letter(&z, t.y_c);
        let committed = if done {
            match decoded {
                DecodeOutcome::Message(k) => Some(k),
                DecodeOutcome::Erasure => {
                    return Err(ProtocolError::Integrity("y_c observed after an x_e block".into()));
                }
            }
        } else {
            None
        };
        if let Some(tr) = transcript.as_deref_mut() {
            tr.push(RoundRecord {
                message_index,
                round_index: rounds,
                forward_sent: codeword.to_vec(),
                forward_received: y.clone(),
                decode: decoded,
                decoded_state_bit: None,
                backward_sent: block.clone(),
                backward_received: z.clone(),
                tx_progressed: done,
                rx_committed: done,
                tx_state_bit: None,
                rx_state_bit: None,
            });
        }
        if let Some(k) = committed {
            return Ok(MessageOutcome {
                payload: m as u64,
                rounds,
                delay_uses: rounds * cfg.round_length() as u64,
                committed_ok: k == m,
            });
        }
    }
}
