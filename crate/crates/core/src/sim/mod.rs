//! Monte Carlo runs, bounded exhaustive exploration and goodness of fit.
//!
//! Random substreams: message `i` of a run with seed `s` draws everything
//! (payload first, then channel outputs) from
//! `ChaCha8Rng::seed_from_u64(s)` with `set_stream(i)`. Messages therefore
//! never share randomness, and a parallel run reproduces the sequential one
//! exactly. In the noisy scheme both state bits equal the parity of `i` at
//! every message boundary, so a chunk of messages can start mid-stream.

mod explore;
mod gof;

pub use explore::{explore_exhaustive, explore_variant, ExploreReport, Violation, EXPLORE_BUDGET};
pub use gof::{geometric_fit, GofBin, GofResult};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{predict, AnalysisError, Prediction};
use crate::codebook::{CodeError, CodeQuality, Codebook, EvalMethod};
use crate::dmc::Dmc;
use crate::files::{channel_hash, LoadedSession, Mode, Provenance};
use crate::protocol::{noiseless, NoiselessSessionConfig, NoisySession, NoisySessionConfig, ProtocolError, RoundRecord};

/// Messages handled by one worker task.
const CHUNK: usize = 4096;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "ZEFCHAN_THREADS";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("exploration needs {needed} branches, budget is {budget}")]
    BudgetExceeded { needed: String, budget: u64 },
    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Either protocol, ready to run.
#[derive(Debug, Clone)]
pub enum SessionConfig {
    Noiseless(NoiselessSessionConfig),
    Noisy(NoisySessionConfig),
}

impl SessionConfig {
    pub fn from_loaded(s: &LoadedSession) -> Result<Self, SimError> {
        let f = &s.file;
        Ok(match f.mode {
            Mode::Noiseless => SessionConfig::Noiseless(NoiselessSessionConfig::new(
                s.forward.clone(),
                s.code.clone(),
                f.gamma,
                f.disprover_policy,
            )?),
            Mode::Noisy => {
                let (_, backward) = s
                    .backward
                    .as_ref()
                    .ok_or_else(|| ProtocolError::InvalidConfig("noisy mode needs a backward channel".into()))?;
                SessionConfig::Noisy(NoisySessionConfig::new(
                    s.forward.clone(),
                    backward.clone(),
                    s.code.clone(),
                    f.gamma,
                    f.disprover_policy,
                )?)
            }
        })
    }

    pub fn mode(&self) -> Mode {
        match self {
            SessionConfig::Noiseless(_) => Mode::Noiseless,
            SessionConfig::Noisy(_) => Mode::Noisy,
        }
    }

    pub fn forward(&self) -> &Dmc {
        match self {
            SessionConfig::Noiseless(c) => c.channel(),
            SessionConfig::Noisy(c) => c.forward(),
        }
    }

    pub fn backward(&self) -> Option<&Dmc> {
        match self {
            SessionConfig::Noiseless(_) => None,
            SessionConfig::Noisy(c) => Some(c.backward()),
        }
    }

    pub fn code(&self) -> &Codebook {
        match self {
            SessionConfig::Noiseless(c) => c.code(),
            SessionConfig::Noisy(c) => c.code(),
        }
    }

    pub fn gamma(&self) -> usize {
        match self {
            SessionConfig::Noiseless(c) => c.gamma(),
            SessionConfig::Noisy(c) => c.gamma(),
        }
    }

    pub fn round_length(&self) -> usize {
        self.code().n() + self.gamma()
    }

    /// Probability that a single indicator symbol reveals `y_c`.
    pub fn p_indicator(&self) -> f64 {
        match self {
            SessionConfig::Noiseless(c) => c.p_indicator(),
            SessionConfig::Noisy(c) => c.p_indicator(),
        }
    }

    /// Number of distinct payloads a message can carry.
    pub fn payload_count(&self) -> u64 {
        match self {
            SessionConfig::Noiseless(c) => c.code().messages() as u64,
            SessionConfig::Noisy(c) => c.payload_count(),
        }
    }

    /// `log2` of [`SessionConfig::payload_count`].
    pub fn payload_bits(&self) -> f64 {
        (self.payload_count() as f64).log2()
    }

    /// `log2|M|` over the whole codebook, state bit included.
    pub fn code_bits(&self) -> f64 {
        (self.code().messages() as f64).log2()
    }

    /// Codeword used for payload `payload` as message `index` of a run.
    pub fn codeword_index(&self, index: usize, payload: u64) -> usize {
        match self {
            SessionConfig::Noiseless(_) => payload as usize,
            SessionConfig::Noisy(c) => c.message_index(index % 2 == 1, payload),
        }
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            mode: self.mode(),
            forward_hash: channel_hash(self.forward()),
            backward_hash: self.backward().map(channel_hash),
            code_hash: self.code().content_hash(),
            n: self.code().n(),
            gamma: self.gamma(),
        }
    }

    /// λ of every codeword on the forward channel and the resulting prediction.
    pub fn predict(&self, method: EvalMethod) -> Result<(CodeQuality, Prediction), SimError> {
        let quality = self.code().evaluate(self.forward(), method)?;
        let prediction = predict(&quality, self.p_indicator(), self.code().n(), self.gamma())?;
        Ok((quality, prediction))
    }
}

/// One delivered message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub msg_index: usize,
    pub payload: u64,
    /// Codeword index actually sent (differs from `payload` in the noisy scheme).
    pub codeword: usize,
    pub rounds: u64,
    pub delay_uses: u64,
    pub committed_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub provenance: Provenance,
    pub seed: u64,
    pub messages_sent: usize,
    pub undetected_errors: usize,
    pub mean_rounds: f64,
    /// Sample standard deviation of the round counts.
    pub rounds_std: f64,
    pub mean_delay: f64,
    pub total_uses: u64,
    pub payload_bits_per_message: f64,
    pub code_bits_per_message: f64,
    /// Payload bits per channel use.
    pub empirical_rate: f64,
    /// `log2|M|` bits per channel use, comparable with the predicted rate.
    pub empirical_code_rate: f64,
    pub per_message: Vec<MessageRecord>,
}

impl SimStats {
    fn collect(cfg: &SessionConfig, seed: u64, per_message: Vec<MessageRecord>) -> Self {
        let count = per_message.len();
        let undetected_errors = per_message.iter().filter(|r| !r.committed_ok).count();
        let total_rounds: u64 = per_message.iter().map(|r| r.rounds).sum();
        let total_uses: u64 = per_message.iter().map(|r| r.delay_uses).sum();
        let (mean_rounds, mean_delay) = if count == 0 {
            (0.0, 0.0)
        } else {
            (total_rounds as f64 / count as f64, total_uses as f64 / count as f64)
        };
        let rounds_std = if count < 2 {
            0.0
        } else {
            let ss: f64 = per_message.iter().map(|r| (r.rounds as f64 - mean_rounds).powi(2)).sum();
            (ss / (count - 1) as f64).sqrt()
        };
        let payload_bits = cfg.payload_bits();
        let code_bits = cfg.code_bits();
        let rate = |bits: f64| {
            if total_uses == 0 {
                0.0
            } else {
                bits * count as f64 / total_uses as f64
            }
        };
        SimStats {
            provenance: cfg.provenance(),
            seed,
            messages_sent: count,
            undetected_errors,
            mean_rounds,
            rounds_std,
            mean_delay,
            total_uses,
            payload_bits_per_message: payload_bits,
            code_bits_per_message: code_bits,
            empirical_rate: rate(payload_bits),
            empirical_code_rate: rate(code_bits),
            per_message,
        }
    }

    /// Standard error of `mean_rounds`.
    pub fn rounds_std_error(&self) -> f64 {
        if self.messages_sent == 0 {
            0.0
        } else {
            self.rounds_std / (self.messages_sent as f64).sqrt()
        }
    }

    /// `msg_index,payload,rounds,delay_uses,committed_ok` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("msg_index,payload,rounds,delay_uses,committed_ok\n");
        for r in &self.per_message {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.msg_index, r.payload, r.rounds, r.delay_uses, r.committed_ok
            ));
        }
        out
    }
}

/// RNG for message `index` of a run seeded with `seed`.
pub fn message_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Deliver messages `start..end` as one continuous session.
fn run_range(
    cfg: &SessionConfig,
    seed: u64,
    start: usize,
    end: usize,
    mut transcript: Option<&mut Vec<RoundRecord>>,
) -> Result<Vec<MessageRecord>, SimError> {
    let mut out = Vec::with_capacity(end - start);
    let mut noisy = match cfg {
        SessionConfig::Noisy(c) => Some(NoisySession::starting_at(c, start)),
        SessionConfig::Noiseless(_) => None,
    };
    for index in start..end {
        let mut rng = message_rng(seed, index);
        let payload = rng.random_range(0..cfg.payload_count());
        let outcome = match (cfg, noisy.as_mut()) {
            (SessionConfig::Noiseless(c), _) => {
                noiseless::deliver(c, index, payload as usize, &mut rng, transcript.as_deref_mut())?
            }
            (SessionConfig::Noisy(_), Some(session)) => session.deliver(payload, &mut rng, transcript.as_deref_mut())?,
            (SessionConfig::Noisy(_), None) => unreachable!("noisy session created above"),
        };
        out.push(MessageRecord {
            msg_index: index,
            payload,
            codeword: cfg.codeword_index(index, payload),
            rounds: outcome.rounds,
            delay_uses: outcome.delay_uses,
            committed_ok: outcome.committed_ok,
        });
    }
    Ok(out)
}

/// Run `f` on a pool capped by `ZEFCHAN_THREADS` when it is set.
pub fn with_worker_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, SimError> {
    match std::env::var(THREADS_ENV).ok().filter(|v| !v.is_empty()) {
        None => Ok(f()),
        Some(v) => {
            let threads: usize = v
                .parse()
                .ok()
                .filter(|&t| t >= 1)
                .ok_or_else(|| SimError::InvalidArgument(format!("{THREADS_ENV}={v:?} is not a positive integer")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| SimError::Pool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Deliver `num_messages` uniformly random payloads.
pub fn monte_carlo(cfg: &SessionConfig, num_messages: usize, seed: u64) -> Result<SimStats, SimError> {
    let chunks = num_messages.div_ceil(CHUNK);
    let parts = with_worker_pool(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| run_range(cfg, seed, c * CHUNK, ((c + 1) * CHUNK).min(num_messages), None))
            .collect::<Result<Vec<_>, _>>()
    })??;
    Ok(SimStats::collect(cfg, seed, parts.into_iter().flatten().collect()))
}

/// Sequential run that also records every round. Produces the same
/// statistics as [`monte_carlo`] for the same arguments.
pub fn monte_carlo_with_transcript(
    cfg: &SessionConfig,
    num_messages: usize,
    seed: u64,
) -> Result<(SimStats, Vec<RoundRecord>), SimError> {
    let mut transcript = Vec::new();
    let records = run_range(cfg, seed, 0, num_messages, Some(&mut transcript))?;
    Ok((SimStats::collect(cfg, seed, records), transcript))
}
