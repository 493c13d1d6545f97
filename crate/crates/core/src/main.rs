use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use zefchan::cli::{
    cmd_analyze, cmd_capacity, cmd_code_build, cmd_code_eval, cmd_predict, cmd_report, cmd_simulate, cmd_verify,
    load_session, session_from_parts, transcript_jsonl, PredictionArtifact,
};
use zefchan::codebook::{CodebookFile, EvalMethod, SearchStrategy, DEFAULT_ENUMERATION_BUDGET, DEFAULT_SEARCH_BUDGET};
use zefchan::dmc::DisproverPolicy;
use zefchan::files::{read_json, to_stable_json, write_text};
use zefchan::protocol::GammaSchedule;
use zefchan::sim::SimStats;

#[derive(Parser)]
#[command(name = "zefchan", version, about = "Zero-undetected-error adaptive coding over discrete memoryless channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Disprovers, confusability and decomposability of a channel.
    Analyze {
        channel: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Blahut–Arimoto capacity.
    Capacity {
        channel: PathBuf,
        #[arg(long, default_value_t = zefchan::capacity::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = zefchan::capacity::DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build or evaluate block codes.
    #[command(subcommand)]
    Code(CodeCommand),
    /// Predicted round success, delay and rate.
    Predict {
        #[command(flatten)]
        session: SessionArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo run of a session config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        messages: usize,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write every round as JSON lines.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Write per-message statistics as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Exhaustively explore the noisy-feedback protocol up to a depth.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        max_rounds: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare simulation statistics against a prediction.
    Report {
        #[arg(long)]
        stats: PathBuf,
        #[arg(long)]
        prediction: PathBuf,
        /// Comparison CSV; printed to stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Full report bundle as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CodeCommand {
    /// Search for a code minimizing the largest erasure probability.
    Build {
        #[arg(long)]
        channel: PathBuf,
        #[arg(short)]
        n: usize,
        #[arg(short = 'M', long = "messages")]
        messages: usize,
        #[arg(long, value_enum, default_value_t = Strategy::Greedy)]
        strategy: Strategy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
        budget: u64,
        #[arg(short, long)]
        output: PathBuf,
        /// Code quality JSON; printed to stdout when absent.
        #[arg(long)]
        quality: Option<PathBuf>,
    },
    /// Per-message erasure probabilities of a code.
    Eval {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        code: PathBuf,
        #[arg(long, conflicts_with = "mc")]
        exact: bool,
        /// Monte Carlo with this many samples per message.
        #[arg(long)]
        mc: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Exhaustive,
    Greedy,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    First,
    MaxProb,
}

impl From<Policy> for DisproverPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::First => DisproverPolicy::First,
            Policy::MaxProb => DisproverPolicy::MaxProb,
        }
    }
}

#[derive(Args)]
struct SessionArgs {
    #[arg(long, conflicts_with_all = ["channel", "code", "backward"])]
    config: Option<PathBuf>,
    #[arg(long, requires = "code")]
    channel: Option<PathBuf>,
    #[arg(long, requires = "channel")]
    code: Option<PathBuf>,
    /// Backward channel; selects the noisy-feedback scheme.
    #[arg(long)]
    backward: Option<PathBuf>,
    #[arg(long, default_value = "auto")]
    gamma: GammaSchedule,
    #[arg(long, value_enum, default_value_t = Policy::First)]
    policy: Policy,
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => write_text(path, text).map_err(Into::into),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Analyze { channel, output } => {
            emit(output.as_deref(), &to_stable_json(&cmd_analyze(&channel)?))?;
        }
        Command::Capacity {
            channel,
            tol,
            max_iter,
            output,
        } => {
            emit(output.as_deref(), &to_stable_json(&cmd_capacity(&channel, tol, max_iter)?))?;
        }
        Command::Code(CodeCommand::Build {
            channel,
            n,
            messages,
            strategy,
            seed,
            budget,
            output,
            quality,
        }) => {
            let strategy = match strategy {
                Strategy::Exhaustive => SearchStrategy::Exhaustive,
                Strategy::Greedy => SearchStrategy::Greedy,
                Strategy::Random => SearchStrategy::Random { seed },
            };
            let (code, eval) = cmd_code_build(&channel, n, messages, strategy, budget)?;
            write_text(&output, &to_stable_json(&CodebookFile::from(code)))?;
            emit(quality.as_deref(), &to_stable_json(&eval))?;
        }
        Command::Code(CodeCommand::Eval {
            channel,
            code,
            exact,
            mc,
            seed,
            output,
        }) => {
            let method = match (exact, mc) {
                (_, Some(samples)) => EvalMethod::MonteCarlo { samples, seed },
                (true, None) => EvalMethod::Exact {
                    budget: DEFAULT_ENUMERATION_BUDGET,
                },
                (false, None) => EvalMethod::Auto {
                    samples: zefchan::cli::FALLBACK_MC_SAMPLES,
                    seed,
                },
            };
            emit(output.as_deref(), &to_stable_json(&cmd_code_eval(&channel, &code, method)?))?;
        }
        Command::Predict { session, output } => {
            let cfg = match (&session.config, &session.channel, &session.code) {
                (Some(config), _, _) => load_session(config)?,
                (None, Some(channel), Some(code)) => session_from_parts(
                    channel,
                    code,
                    session.backward.as_deref(),
                    session.gamma,
                    session.policy.into(),
                )?,
                _ => anyhow::bail!("predict needs --config or both --channel and --code"),
            };
            emit(output.as_deref(), &to_stable_json(&cmd_predict(&cfg)?))?;
        }
        Command::Simulate {
            config,
            messages,
            seed,
            output,
            transcript,
            csv,
        } => {
            let cfg = load_session(&config)?;
            let (stats, rounds) = cmd_simulate(&cfg, messages, seed, transcript.is_some())?;
            if let (Some(path), Some(rounds)) = (&transcript, &rounds) {
                write_text(path, &transcript_jsonl(rounds))?;
            }
            if let Some(path) = &csv {
                write_text(path, &stats.to_csv())?;
            }
            emit(output.as_deref(), &to_stable_json(&stats))?;
            if stats.undetected_errors > 0 {
                eprintln!("{} undetected errors", stats.undetected_errors);
                return Ok(false);
            }
        }
        Command::Verify {
            config,
            max_rounds,
            output,
        } => {
            let out = cmd_verify(&load_session(&config)?, max_rounds)?;
            emit(output.as_deref(), &to_stable_json(&out))?;
            if !out.passed() {
                eprintln!("{} invariant violations", out.report.violation_count);
                return Ok(false);
            }
        }
        Command::Report {
            stats,
            prediction,
            output,
            json,
        } => {
            let s: SimStats = read_json(&stats).with_context(|| format!("reading {}", stats.display()))?;
            let p: PredictionArtifact =
                read_json(&prediction).with_context(|| format!("reading {}", prediction.display()))?;
            let bundle = cmd_report(&s, &p)?;
            if let Some(path) = &json {
                write_text(path, &to_stable_json(&bundle))?;
            }
            emit(output.as_deref(), &bundle.to_csv())?;
            return Ok(bundle.all_pass);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}

/// Error chain on one line. Library errors already embed their source in the
/// message, so a cause is only appended when it adds something new.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut shown = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if shown.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
        shown.push_str(&text);
    }
    out
}
