use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use zefchan::codebook::{Codebook, DecodeOutcome};
use zefchan::dmc::{DisproverPolicy, Dmc};
use zefchan::protocol::{
    run_noiseless_message, run_noisy_session, rx_step, tx_step, GammaSchedule, NoiselessSessionConfig,
    NoisySessionConfig, RxState, TxAction, TxInput, TxState,
};
use zefchan::sim::explore_exhaustive;

fn words(n: usize) -> Codebook {
    let w = (0..1usize << n).map(|m| (0..n).map(|i| (m >> (n - 1 - i)) & 1).collect()).collect();
    Codebook::new(n, w).unwrap()
}

/// The backward link withholds `y'_c` for `r` rounds after the receiver
/// commits; the receiver keeps re-decoding the same codeword but commits once.
#[test]
fn withheld_acknowledgement_commits_once() {
    let cfg = NoisySessionConfig::new(
        Dmc::bec(0.3).unwrap(),
        Dmc::z_channel(0.4).unwrap(),
        words(2),
        GammaSchedule::Fixed(2),
        DisproverPolicy::First,
    )
    .unwrap();
    let t = cfg.backward_disprover();
    let miss: Vec<usize> = vec![0; 2];
    assert!(!miss.contains(&t.y_c));
    for r in 0..6u64 {
        let mut tx = TxState::default().load(1);
        let mut rx = RxState::default();
        let mut rounds = 0;
        loop {
            let (s, action) = tx_step(&cfg, tx, TxInput::Slot).unwrap();
            tx = s;
            let TxAction::Send { message } = action else { panic!() };
            // Noise-free forward outputs for this codeword.
            let y: Vec<usize> = cfg.code().codeword(message).iter().map(|&x| 2 * x).collect();
            let (s, reply) = rx_step(&cfg, rx, &y).unwrap();
            rx = s;
            assert_eq!(reply.decode, DecodeOutcome::Message(message));
            assert_eq!(reply.block, vec![t.x_c; 2]);
            rounds += 1;
            let z = if rounds <= r { miss.clone() } else { vec![t.y_c, 0] };
            let (s, action) = tx_step(&cfg, tx, TxInput::Feedback(&z)).unwrap();
            tx = s;
            if let TxAction::Advance { rounds: l } = action {
                assert_eq!(l, r + 1);
                break;
            }
            assert_ne!(tx.state_bit, rx.state_bit);
        }
        assert_eq!(rx.committed, vec![1]);
        assert_eq!(tx.state_bit, rx.state_bit);
    }
}

#[test]
fn noiseless_scheme_never_errs() {
    let ch = Dmc::bec(0.4).unwrap();
    let cfg = NoiselessSessionConfig::new(ch, words(3), GammaSchedule::Auto, DisproverPolicy::MaxProb).unwrap();
    assert_eq!(cfg.gamma(), 2);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for m in (0..8).cycle().take(5000) {
        let (rounds, tr) = run_noiseless_message(&cfg, m, &mut rng).unwrap();
        assert_eq!(tr.len() as u64, rounds);
        let last = tr.last().unwrap();
        assert_eq!(last.decode, DecodeOutcome::Message(m));
        assert!(last.rx_committed);
    }
}

#[test]
fn noisy_session_delivers_in_order() {
    let cfg = NoisySessionConfig::new(
        Dmc::bec(0.3).unwrap(),
        Dmc::bec(0.2).unwrap(),
        words(3),
        GammaSchedule::Fixed(1),
        DisproverPolicy::First,
    )
    .unwrap();
    let payloads: Vec<u64> = (0..4000u64).map(|i| (i * i + 3) % 4).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let run = run_noisy_session(&cfg, &payloads, &mut rng).unwrap();
    assert_eq!(run.committed, payloads);
    assert!(run.outcomes.iter().all(|o| o.committed_ok && o.delay_uses == 4 * o.rounds));
}

#[test]
fn deterministic_links_explore_cleanly() {
    // Eight codewords over a binary identity channel: 2 payload bits.
    let cfg = NoisySessionConfig::new(Dmc::identity(2), Dmc::identity(2), words(3), GammaSchedule::Fixed(1), DisproverPolicy::First)
        .unwrap();
    assert_eq!(cfg.payload_bits(), 2);
    let r = explore_exhaustive(&cfg, 3).unwrap();
    assert!(r.is_safe() && r.liveness_ok);
}
