//! Command implementations behind the `zefchan` binary.
//!
//! Each command returns a serializable artifact; the binary only parses
//! arguments, writes files and maps failures to exit codes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::Prediction;
use crate::capacity::{blahut_arimoto, CapacityError, CapacityResult};
use crate::codebook::{search_code, CodeError, CodeQuality, Codebook, EvalMethod, SearchStrategy};
use crate::dmc::{ChannelError, ChannelReport, DisproverPolicy, DEFAULT_SUPPORT_EPS, DEFAULT_TOL_DECOMP};
use crate::files::{channel_hash, load_channel, load_codebook, FileError, Provenance, SessionFile};
use crate::protocol::{GammaSchedule, NoiselessSessionConfig, NoisySessionConfig, ProtocolError, RoundRecord};
use crate::sim::{explore_exhaustive, monte_carlo, monte_carlo_with_transcript, ExploreReport, SessionConfig, SimError, SimStats};

/// Relative tolerance for rate and delay rows in a report.
pub const REPORT_REL_TOL: f64 = 0.02;
/// Standard errors allowed between predicted and empirical mean rounds.
pub const REPORT_SIGMAS: f64 = 3.0;
/// Monte Carlo settings used when exact λ enumeration is over budget.
pub const FALLBACK_MC_SAMPLES: u64 = 1_000_000;
pub const FALLBACK_MC_SEED: u64 = 0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("incompatible artifacts: {0}")]
    IncompatibleArtifacts(String),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOutput {
    pub channel: String,
    pub channel_hash: String,
    pub capacity: CapacityResult,
    pub report: ChannelReport,
}

/// Disprovers, confusability and decomposability under the capacity-achieving input.
pub fn cmd_analyze(channel_file: &Path) -> Result<AnalyzeOutput, CliError> {
    let (file, ch) = load_channel(channel_file)?;
    let capacity = blahut_arimoto(&ch, crate::capacity::DEFAULT_TOL, crate::capacity::DEFAULT_MAX_ITER)?;
    let report = ch.report(&capacity.q_star, DEFAULT_SUPPORT_EPS, DEFAULT_TOL_DECOMP)?;
    Ok(AnalyzeOutput {
        channel: file.name,
        channel_hash: channel_hash(&ch),
        capacity,
        report,
    })
}

pub fn cmd_capacity(channel_file: &Path, tol: f64, max_iter: usize) -> Result<CapacityResult, CliError> {
    let (_, ch) = load_channel(channel_file)?;
    Ok(blahut_arimoto(&ch, tol, max_iter)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeEvalOutput {
    pub channel_hash: String,
    pub code_hash: String,
    pub n: usize,
    pub messages: usize,
    pub strategy: Option<SearchStrategy>,
    pub quality: CodeQuality,
}

/// Search a code; returns the codebook and its evaluation.
pub fn cmd_code_build(
    channel_file: &Path,
    n: usize,
    messages: usize,
    strategy: SearchStrategy,
    budget: u64,
) -> Result<(Codebook, CodeEvalOutput), CliError> {
    let (_, ch) = load_channel(channel_file)?;
    let (code, quality) = search_code(&ch, n, messages, strategy, budget)?;
    let out = CodeEvalOutput {
        channel_hash: channel_hash(&ch),
        code_hash: code.content_hash(),
        n,
        messages,
        strategy: Some(strategy),
        quality,
    };
    Ok((code, out))
}

pub fn cmd_code_eval(channel_file: &Path, code_file: &Path, method: EvalMethod) -> Result<CodeEvalOutput, CliError> {
    let (_, ch) = load_channel(channel_file)?;
    let code = load_codebook(code_file)?;
    let quality = code.evaluate(&ch, method)?;
    Ok(CodeEvalOutput {
        channel_hash: channel_hash(&ch),
        code_hash: code.content_hash(),
        n: code.n(),
        messages: code.messages(),
        strategy: None,
        quality,
    })
}

/// Session config from a config file.
pub fn load_session(config: &Path) -> Result<SessionConfig, CliError> {
    Ok(SessionConfig::from_loaded(&SessionFile::load(config)?)?)
}

/// Session config from loose channel and code files; a backward channel selects noisy mode.
pub fn session_from_parts(
    channel_file: &Path,
    code_file: &Path,
    backward_file: Option<&Path>,
    gamma: GammaSchedule,
    policy: DisproverPolicy,
) -> Result<SessionConfig, CliError> {
    let (_, forward) = load_channel(channel_file)?;
    let code = load_codebook(code_file)?;
    Ok(match backward_file {
        None => SessionConfig::Noiseless(NoiselessSessionConfig::new(forward, code, gamma, policy)?),
        Some(b) => {
            let (_, backward) = load_channel(b)?;
            SessionConfig::Noisy(NoisySessionConfig::new(forward, backward, code, gamma, policy)?)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionArtifact {
    pub provenance: Provenance,
    pub p_indicator: f64,
    pub quality: CodeQuality,
    pub prediction: Prediction,
}

pub fn cmd_predict(cfg: &SessionConfig) -> Result<PredictionArtifact, CliError> {
    let (quality, prediction) = cfg.predict(EvalMethod::Auto {
        samples: FALLBACK_MC_SAMPLES,
        seed: FALLBACK_MC_SEED,
    })?;
    Ok(PredictionArtifact {
        provenance: cfg.provenance(),
        p_indicator: cfg.p_indicator(),
        quality,
        prediction,
    })
}

/// Statistics plus, on request, the full round transcript.
pub fn cmd_simulate(
    cfg: &SessionConfig,
    messages: usize,
    seed: u64,
    with_transcript: bool,
) -> Result<(SimStats, Option<Vec<RoundRecord>>), CliError> {
    if with_transcript {
        let (stats, tr) = monte_carlo_with_transcript(cfg, messages, seed)?;
        Ok((stats, Some(tr)))
    } else {
        Ok((monte_carlo(cfg, messages, seed)?, None))
    }
}

/// One JSON object per line.
pub fn transcript_jsonl(transcript: &[RoundRecord]) -> String {
    let mut out = String::new();
    for r in transcript {
        let v = serde_json::to_value(r).expect("round records serialize");
        out.push_str(&serde_json::to_string(&v).expect("values serialize"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub provenance: Provenance,
    pub safe: bool,
    /// Liveness is only established up to `report.depth` rounds.
    pub liveness_bounded: bool,
    pub report: ExploreReport,
}

impl VerifyOutput {
    pub fn passed(&self) -> bool {
        self.safe && self.liveness_bounded
    }
}

pub fn cmd_verify(cfg: &SessionConfig, max_rounds: usize) -> Result<VerifyOutput, CliError> {
    let SessionConfig::Noisy(noisy) = cfg else {
        return Err(CliError::Usage("verify explores the noisy-feedback protocol; config mode is noiseless".into()));
    };
    let report = explore_exhaustive(noisy, max_rounds)?;
    Ok(VerifyOutput {
        provenance: cfg.provenance(),
        safe: report.is_safe(),
        liveness_bounded: report.liveness_ok,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub predicted: f64,
    pub empirical: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ComparisonRow {
    fn new(quantity: &str, predicted: f64, empirical: f64, tolerance: f64) -> Self {
        let delta = empirical - predicted;
        ComparisonRow {
            quantity: quantity.to_string(),
            predicted,
            empirical,
            delta,
            tolerance,
            pass: delta.abs() <= tolerance,
        }
    }

    fn relative(quantity: &str, predicted: f64, empirical: f64) -> Self {
        Self::new(quantity, predicted, empirical, REPORT_REL_TOL * predicted.abs())
    }
}

/// Summary of a simulation without the per-message list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub seed: u64,
    pub messages_sent: usize,
    pub undetected_errors: usize,
    pub mean_rounds: f64,
    pub rounds_std: f64,
    pub mean_delay: f64,
    pub empirical_rate: f64,
    pub empirical_code_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub provenance: Provenance,
    pub quality: CodeQuality,
    pub prediction: Prediction,
    pub stats: StatsSummary,
    pub rows: Vec<ComparisonRow>,
    pub all_pass: bool,
}

impl ReportBundle {
    /// `quantity,predicted,empirical,delta,pass` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,predicted,empirical,delta,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.quantity, r.predicted, r.empirical, r.delta, r.pass
            ));
        }
        out
    }
}

/// Compare a simulation against the prediction for the same configuration.
///
/// Mean rounds must agree within three standard errors; mean delay, rate and
/// delay per bit within 2%; undetected errors must be zero.
pub fn cmd_report(stats: &SimStats, pred: &PredictionArtifact) -> Result<ReportBundle, CliError> {
    if stats.messages_sent == 0 || stats.per_message.len() != stats.messages_sent {
        return Err(CliError::IncompatibleArtifacts("statistics contain no messages".into()));
    }
    if stats.provenance != pred.provenance {
        return Err(CliError::IncompatibleArtifacts(format!(
            "statistics were produced for {:?} but the prediction is for {:?}",
            stats.provenance, pred.provenance
        )));
    }
    let p = &pred.prediction;
    let bits = stats.code_bits_per_message;
    let rows = vec![
        ComparisonRow::new("undetected_errors", 0.0, stats.undetected_errors as f64, 0.0),
        ComparisonRow::new(
            "mean_rounds",
            p.mean_rounds(),
            stats.mean_rounds,
            REPORT_SIGMAS * stats.rounds_std_error(),
        ),
        ComparisonRow::relative("mean_delay", p.n_bar, stats.mean_delay),
        ComparisonRow::relative("rate", p.r_bar, stats.empirical_code_rate),
        ComparisonRow::relative("delay_per_bit", p.d_bar, stats.mean_delay / bits),
    ];
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(ReportBundle {
        provenance: stats.provenance.clone(),
        quality: pred.quality.clone(),
        prediction: p.clone(),
        stats: StatsSummary {
            seed: stats.seed,
            messages_sent: stats.messages_sent,
            undetected_errors: stats.undetected_errors,
            mean_rounds: stats.mean_rounds,
            rounds_std: stats.rounds_std,
            mean_delay: stats.mean_delay,
            empirical_rate: stats.empirical_rate,
            empirical_code_rate: stats.empirical_code_rate,
        },
        rows,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmc::Dmc;

    fn bec_session() -> SessionConfig {
        let code = Codebook::new(2, vec![vec![0, 0], vec![1, 1]]).unwrap();
        SessionConfig::Noiseless(
            NoiselessSessionConfig::new(Dmc::bec(0.3).unwrap(), code, GammaSchedule::Fixed(2), DisproverPolicy::First)
                .unwrap(),
        )
    }

    #[test]
    fn matching_pair_passes() {
        let cfg = bec_session();
        let pred = cmd_predict(&cfg).unwrap();
        let (stats, _) = cmd_simulate(&cfg, 100_000, 3, false).unwrap();
        let bundle = cmd_report(&stats, &pred).unwrap();
        assert!(bundle.all_pass, "{:?}", bundle.rows);
        let csv = bundle.to_csv();
        assert!(csv.starts_with("quantity,predicted,empirical,delta,pass\n"));
        assert!(csv.lines().any(|l| l.starts_with("mean_rounds,") && l.ends_with(",true")));
        assert!(csv.lines().any(|l| l.starts_with("rate,") && l.ends_with(",true")));
    }

    #[test]
    fn mismatched_or_empty_artifacts() {
        let cfg = bec_session();
        let mut pred = cmd_predict(&cfg).unwrap();
        let (stats, _) = cmd_simulate(&cfg, 100, 3, false).unwrap();
        let (empty, _) = cmd_simulate(&cfg, 0, 3, false).unwrap();
        assert!(matches!(cmd_report(&empty, &pred), Err(CliError::IncompatibleArtifacts(_))));
        pred.provenance.code_hash = "0".repeat(64);
        assert!(matches!(cmd_report(&stats, &pred), Err(CliError::IncompatibleArtifacts(_))));
    }

    #[test]
    fn verify_rejects_noiseless() {
        assert!(matches!(cmd_verify(&bec_session(), 2), Err(CliError::Usage(_))));
    }

    #[test]
    fn jsonl_has_one_record_per_line() {
        let (_, tr) = cmd_simulate(&bec_session(), 50, 1, true).unwrap();
        let tr = tr.unwrap();
        let text = transcript_jsonl(&tr);
        assert_eq!(text.lines().count(), tr.len());
        let back: RoundRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back, tr[0]);
    }
}
