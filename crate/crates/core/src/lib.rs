//! Adaptive zero-error communication over discrete memoryless channels.
//!
//! A transmitter repeats a codeword until the receiver has decoded it with
//! certainty, using a *disprover* output (one that some inputs can never
//! produce) to confirm success without risk of a false acknowledgement.
//!
//! * [`dmc`]: channels, disprovers, confusability, product-form check.
//! * [`capacity`]: Blahut–Arimoto capacity and mutual information.
//! * [`codebook`]: block codes under the erasure-only decoder.
//! * [`protocol`]: noiseless- and noisy-feedback state machines.
//! * [`analysis`]: closed-form success probability, delay and rate.
//! * [`sim`]: Monte Carlo runs, exhaustive exploration, goodness of fit.
//! * [`cli`]: the command implementations behind the `zefchan` binary.

pub mod analysis;
pub mod capacity;
pub mod cli;
pub mod codebook;
pub mod dmc;
pub mod files;
pub mod protocol;
pub mod sim;

pub use analysis::{gamma_auto, predict, round_success_prob, Prediction};
pub use capacity::{blahut_arimoto, mutual_information, CapacityResult};
pub use codebook::{search_code, CodeQuality, Codebook, DecodeOutcome, SearchStrategy};
pub use dmc::{ChannelReport, DisproverPolicy, DisproverTriple, Dmc};
