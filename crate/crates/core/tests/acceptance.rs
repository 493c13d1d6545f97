//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and then
//! asserts it, so `cargo test --test acceptance -- --nocapture` gives a
//! readable summary.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use zefchan::capacity::{blahut_arimoto, DEFAULT_MAX_ITER};
use zefchan::codebook::{search_code, Codebook, EvalMethod, SearchStrategy, DEFAULT_ENUMERATION_BUDGET, DEFAULT_SEARCH_BUDGET};
use zefchan::dmc::{DisproverPolicy, DisproverTriple, Dmc, DEFAULT_SUPPORT_EPS, DEFAULT_TOL_DECOMP};
use zefchan::files::{to_stable_json, write_text, ChannelFile};
use zefchan::gamma_auto;
use zefchan::protocol::{GammaSchedule, NoiselessSessionConfig, NoisySessionConfig, ReceiverVariant};
use zefchan::sim::{explore_exhaustive, explore_variant, geometric_fit, monte_carlo, SessionConfig, SimStats};

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    println!("{} [{id}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn rep2() -> Codebook {
    Codebook::new(2, vec![vec![0, 0], vec![1, 1]]).unwrap()
}

fn all_pairs() -> Codebook {
    Codebook::new(2, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]).unwrap()
}

fn noiseless(ch: Dmc, code: Codebook, gamma: usize) -> SessionConfig {
    SessionConfig::Noiseless(NoiselessSessionConfig::new(ch, code, GammaSchedule::Fixed(gamma), DisproverPolicy::First).unwrap())
}

fn noisy(fwd: Dmc, bwd: Dmc, code: Codebook, gamma: usize) -> SessionConfig {
    SessionConfig::Noisy(
        NoisySessionConfig::new(fwd, bwd, code, GammaSchedule::Fixed(gamma), DisproverPolicy::First).unwrap(),
    )
}

fn bec(e: f64) -> Dmc {
    Dmc::bec(e).unwrap()
}

fn z(p: f64) -> Dmc {
    Dmc::z_channel(p).unwrap()
}

#[test]
fn c1_zero_error() {
    let start = Instant::now();
    let configs = [
        ("noiseless BEC(0.3)", noiseless(bec(0.3), rep2(), 1)),
        ("noisy BEC(0.3)/BEC(0.2)", noisy(bec(0.3), bec(0.2), all_pairs(), 1)),
        ("noisy BEC(0.3)/Z(0.4)", noisy(bec(0.3), z(0.4), all_pairs(), 1)),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (i, (name, cfg)) in configs.iter().enumerate() {
        let stats = monte_carlo(cfg, 1_000_000, 100 + i as u64).unwrap();
        pass &= stats.messages_sent == 1_000_000 && stats.undetected_errors == 0;
        details.push(format!("{name}: {} errors in {}", stats.undetected_errors, stats.messages_sent));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 300.0;
    verdict(1, "zero undetected error", pass, &format!("{} ({secs:.1}s)", details.join("; ")));
}

#[test]
fn c2_exhaustive_safety() {
    let start = Instant::now();
    let cfg = NoisySessionConfig::new(bec(0.3), z(0.4), all_pairs(), GammaSchedule::Fixed(1), DisproverPolicy::First)
        .unwrap();
    assert_eq!(cfg.payload_bits(), 1);
    let faithful = explore_exhaustive(&cfg, 4).unwrap();
    let ignore = explore_variant(&cfg, 4, ReceiverVariant::IgnoreStateBit).unwrap();
    let swap = explore_variant(&cfg, 4, ReceiverVariant::SwapIndicators).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = faithful.violation_count == 0
        && faithful.liveness_ok
        && faithful.executions > 0
        && ignore.violation_count > 0
        && swap.violation_count > 0
        && secs < 60.0;
    verdict(
        2,
        "exhaustive safety",
        pass,
        &format!(
            "{} executions, {} violations, liveness {}; mutants caught: state-bit {} ({}), swapped indicators {} ({}); {secs:.2}s",
            faithful.executions,
            faithful.violation_count,
            faithful.liveness_ok,
            ignore.violation_count,
            ignore.violations.first().map_or("-", |v| v.invariant.as_str()),
            swap.violation_count,
            swap.violations.first().map_or("-", |v| v.invariant.as_str()),
        ),
    );
}

#[test]
fn c3_geometric_law() {
    // Analytic λ per codeword alongside each configuration.
    let configs = [
        (
            "noiseless BEC(0.5) {00,11} γ=2",
            SessionConfig::Noiseless(
                NoiselessSessionConfig::with_disprover(
                    bec(0.5),
                    rep2(),
                    GammaSchedule::Fixed(2),
                    DisproverTriple { x_c: 0, x_e: 1, y_c: 0 },
                )
                .unwrap(),
            ),
            0.25,
        ),
        ("noisy BEC(0.5)/identity {00,11} γ=1", noisy(bec(0.5), Dmc::identity(2), rep2(), 1), 0.25),
        ("noisy BEC(0.3)/Z(0.4) all pairs γ=1", noisy(bec(0.3), z(0.4), all_pairs(), 1), 1.0 - 0.7 * 0.7),
    ];
    let mut mean_ok = true;
    let mut fits = 0;
    let mut details = Vec::new();
    for (i, (name, cfg, lambda)) in configs.iter().enumerate() {
        let (quality, prediction) = cfg.predict(EvalMethod::Exact { budget: DEFAULT_ENUMERATION_BUDGET }).unwrap();
        mean_ok &= quality.lambda.iter().all(|l| (l - lambda).abs() < 1e-12);
        let stats = monte_carlo(cfg, 100_000, 300 + i as u64).unwrap();
        let mut cfg_fit = true;
        let mut worst_z: f64 = 0.0;
        for (m, &p) in prediction.p.iter().enumerate() {
            let samples: Vec<u64> = stats.per_message.iter().filter(|r| r.codeword == m).map(|r| r.rounds).collect();
            let count = samples.len() as f64;
            let mean = samples.iter().sum::<u64>() as f64 / count;
            let var = samples.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / (count - 1.0);
            let z_score = (mean - 1.0 / p) / (var / count).sqrt();
            worst_z = worst_z.max(z_score.abs());
            mean_ok &= z_score.abs() <= 3.0;
            cfg_fit &= geometric_fit(&samples, p, 0.01).unwrap().pass;
        }
        fits += cfg_fit as u32;
        details.push(format!("{name}: max |z| {worst_z:.2}, fit {}", if cfg_fit { "pass" } else { "fail" }));
    }
    verdict(
        3,
        "geometric law",
        mean_ok && fits >= 2,
        &format!("{}; {fits}/3 fits pass at α=0.01 (nominal false-reject rate 1% per group)", details.join("; ")),
    );
}

#[test]
fn c4_rate_and_delay() {
    let cfg = noisy(bec(0.3), z(0.4), all_pairs(), 1);
    let (_, pred) = cfg.predict(EvalMethod::Exact { budget: DEFAULT_ENUMERATION_BUDGET }).unwrap();
    let stats = monte_carlo(&cfg, 100_000, 400).unwrap();
    let rate_err = (stats.empirical_code_rate - pred.r_bar).abs() / pred.r_bar;
    let delay_err = (stats.mean_delay - pred.n_bar).abs() / pred.n_bar;
    verdict(
        4,
        "rate and delay formulas",
        rate_err <= 0.02 && delay_err <= 0.02,
        &format!(
            "rate {:.5} vs {:.5} ({:.3}%), delay {:.4} vs {:.4} ({:.3}%); payload rate {:.5}",
            stats.empirical_code_rate,
            pred.r_bar,
            100.0 * rate_err,
            stats.mean_delay,
            pred.n_bar,
            100.0 * delay_err,
            stats.empirical_rate
        ),
    );
}

#[test]
fn c5_capacity_solver() {
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    let z_closed = |p: f64| (1.0 + (1.0 - p) * p.powf(p / (1.0 - p))).log2();
    let cases: Vec<(String, Dmc, f64)> = vec![
        ("BEC(0.1)".into(), bec(0.1), 0.9),
        ("BEC(0.3)".into(), bec(0.3), 0.7),
        ("BEC(0.5)".into(), bec(0.5), 0.5),
        ("BSC(0.1)".into(), Dmc::bsc(0.1).unwrap(), 1.0 - h(0.1)),
        ("BSC(0.3)".into(), Dmc::bsc(0.3).unwrap(), 1.0 - h(0.3)),
        ("Z(0.3)".into(), z(0.3), z_closed(0.3)),
        ("Z(0.5)".into(), z(0.5), z_closed(0.5)),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, ch, expected) in cases {
        let start = Instant::now();
        let r = blahut_arimoto(&ch, 1e-9, DEFAULT_MAX_ITER).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let err = (r.capacity_bits - expected).abs();
        pass &= err <= 1e-6 && secs < 1.0;
        details.push(format!("{name} err {err:.1e}"));
    }
    verdict(5, "capacity solver", pass, &details.join(", "));
}

#[test]
fn c6_exact_vs_monte_carlo_erasure() {
    let ternary = Dmc::new(vec![vec![0.6, 0.4, 0.0], vec![0.0, 0.5, 0.5], vec![0.3, 0.0, 0.7]]).unwrap();
    let pairs: Vec<(&str, Dmc, Codebook)> = vec![
        ("BEC(0.3) {00,11}", bec(0.3), rep2()),
        ("BEC(0.5) all pairs", bec(0.5), all_pairs()),
        ("Z(0.4) {01,10}", z(0.4), Codebook::new(2, vec![vec![0, 1], vec![1, 0]]).unwrap()),
        (
            "ternary {000,111,222}",
            ternary,
            Codebook::new(3, vec![vec![0, 0, 0], vec![1, 1, 1], vec![2, 2, 2]]).unwrap(),
        ),
        (
            "BEC(0.2) greedy n=4 M=4",
            bec(0.2),
            search_code(&bec(0.2), 4, 4, SearchStrategy::Greedy, DEFAULT_SEARCH_BUDGET).unwrap().0,
        ),
    ];
    let samples = 200_000;
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for (i, (_, ch, code)) in pairs.iter().enumerate() {
        for m in 0..code.messages() {
            let exact = code.erasure_prob_exact(ch, m, DEFAULT_ENUMERATION_BUDGET).unwrap();
            let mc = code.erasure_prob_mc(ch, m, samples, 600 + i as u64).unwrap();
            let sigma = (exact * (1.0 - exact) / samples as f64).sqrt();
            if sigma == 0.0 {
                pass &= mc == exact;
            } else {
                let z = (mc - exact).abs() / sigma;
                worst = worst.max(z);
                pass &= z <= 3.0;
            }
        }
    }
    // BEC {00,11}: an erasure needs both symbols erased.
    let analytic = rep2().erasure_prob_exact(&bec(0.3), 0, DEFAULT_ENUMERATION_BUDGET).unwrap();
    pass &= (analytic - 0.09).abs() < 1e-15;
    verdict(
        6,
        "exact vs Monte Carlo erasure",
        pass,
        &format!("{} pairs, worst deviation {worst:.2}σ, BEC(0.3) λ={analytic}", pairs.len()),
    );
}

#[test]
fn c7_decomposability() {
    let report = |ch: &Dmc| {
        let q = blahut_arimoto(ch, 1e-9, DEFAULT_MAX_ITER).unwrap().q_star;
        ch.report(&q, DEFAULT_SUPPORT_EPS, DEFAULT_TOL_DECOMP).unwrap()
    };
    let b = bec(0.3);
    let zc = z(0.4);
    let bsc = Dmc::bsc(0.3).unwrap();
    let (rb, rz, rs) = (report(&b), report(&zc), report(&bsc));
    let bec_err = rb.decomposable_on_support.as_ref().map(|d| d.max_reconstruction_error(&b));
    let z_err = rz.decomposable_on_support.as_ref().map(|d| d.max_reconstruction_error(&zc));
    let witness = rs.witness_cycle.as_ref().map(|w| w.alternating_log_sum(&bsc));
    let pass = bec_err.is_some_and(|e| e <= 1e-9)
        && z_err.is_some_and(|e| e <= 1e-9)
        && rs.decomposable_on_support.is_none()
        && witness.is_some_and(|s| s.abs() > 1e-9);
    verdict(
        7,
        "decomposability",
        pass,
        &format!("BEC error {bec_err:?}, Z error {z_err:?}, BSC(0.3) witness log-sum {witness:?}"),
    );
}

#[test]
fn c8_trend() {
    let ch = bec(0.3);
    let capacity = blahut_arimoto(&ch, 1e-9, DEFAULT_MAX_ITER).unwrap().capacity_bits;
    let mut pass = true;
    let mut details = Vec::new();
    for (i, n) in [2usize, 4, 6].into_iter().enumerate() {
        let (code, _) = search_code(&ch, n, 2, SearchStrategy::Exhaustive, DEFAULT_SEARCH_BUDGET).unwrap();
        let gamma = gamma_auto(n);
        let cfg = noiseless(ch.clone(), code, gamma);
        let (_, pred) = cfg.predict(EvalMethod::Exact { budget: DEFAULT_ENUMERATION_BUDGET }).unwrap();
        let stats = monte_carlo(&cfg, 100_000, 800 + i as u64).unwrap();
        let err = (stats.empirical_code_rate - pred.r_bar).abs() / pred.r_bar;
        pass &= err <= 0.02 && stats.undetected_errors == 0;
        details.push(format!("n={n} γ={gamma}: R̄ {:.4} vs {:.4} ({:.2}%)", stats.empirical_code_rate, pred.r_bar, 100.0 * err));
    }
    let disprovers = ch.find_disprovers().len();
    verdict(
        8,
        "rate trend",
        pass,
        &format!(
            "{}; C = {capacity:.4} bits/use, {disprovers} disprovers so zero-undetected-error capacity is positive; \
             two-message codes stay far below C and no convergence is claimed",
            details.join("; ")
        ),
    );
}

fn write_session(dir: &Path) {
    let put = |name: &str, text: String| write_text(&dir.join(name), &text).unwrap();
    put("fwd.json", to_stable_json(&ChannelFile::from_dmc("bec0.3", &bec(0.3))));
    put("bwd.json", to_stable_json(&ChannelFile::from_dmc("z0.4", &z(0.4))));
    put("code.json", r#"{"n":2,"messages":4,"codewords":[[0,0],[0,1],[1,0],[1,1]]}"#.into());
    put(
        "session.json",
        r#"{"mode":"noisy","forward":"fwd.json","backward":"bwd.json","code":"code.json","gamma":1}"#.into(),
    );
}

fn run_cli(args: &[&str], dir: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_zefchan"))
        .args(args)
        .current_dir(dir)
        .status()
        .unwrap();
    assert!(status.success(), "zefchan {args:?} failed");
}

#[test]
fn c9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_session(d);
    for run in ["a", "b"] {
        run_cli(
            &[
                "simulate", "--config", "session.json", "--messages", "5000", "--seed", "9",
                "-o", &format!("stats_{run}.json"), "--transcript", &format!("tr_{run}.jsonl"),
                "--csv", &format!("stats_{run}.csv"),
            ],
            d,
        );
        run_cli(&["verify", "--config", "session.json", "--max-rounds", "3", "-o", &format!("verify_{run}.json")], d);
    }
    let same = |a: &str, b: &str| std::fs::read(d.join(a)).unwrap() == std::fs::read(d.join(b)).unwrap();
    let files_match = same("stats_a.json", "stats_b.json")
        && same("tr_a.jsonl", "tr_b.jsonl")
        && same("stats_a.csv", "stats_b.csv")
        && same("verify_a.json", "verify_b.json");
    let stats: SimStats = serde_json::from_slice(&std::fs::read(d.join("stats_a.json")).unwrap()).unwrap();

    // Thread count must not change results.
    let cfg = noisy(bec(0.3), z(0.4), all_pairs(), 1);
    let parallel = monte_carlo(&cfg, 20_000, 9).unwrap();
    let single = Command::new(env!("CARGO_BIN_EXE_zefchan"))
        .args(["simulate", "--config", "session.json", "--messages", "5000", "--seed", "9", "-o", "stats_c.json"])
        .env("ZEFCHAN_THREADS", "1")
        .current_dir(d)
        .status()
        .unwrap();
    let pass = files_match
        && stats.messages_sent == 5000
        && single.success()
        && same("stats_a.json", "stats_c.json")
        && parallel == monte_carlo(&cfg, 20_000, 9).unwrap();
    verdict(9, "determinism", pass, "simulate (JSON, JSONL, CSV) and verify outputs byte-identical across runs and thread counts");
}
