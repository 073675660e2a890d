//! Desk-scale laboratory for the probability key distribution (PKD) protocol.
//!
//! A PKD session distributes secret key between two parties without a quantum
//! channel: both locally prepare discrete phase-randomized weak coherent pulses,
//! interfere them against a reference, and announce which detector clicked. The
//! phase of each pulse is tied to a per-session random mapping rule shared via
//! one-time pad, Alice's phase substrings are negotiated through a Toeplitz-expanded
//! pad, and the reconciled raw key is compressed by a universal hash.
//!
//! The crate provides:
//!
//! * [`coherent`] — scalar mathematics of phase-randomized coherent states
//!   (pseudo photon-number distributions, trace distances, discrimination
//!   probabilities), with [`logscalar::LogScalar`] carrying magnitudes far below
//!   double underflow.
//! * [`mapping`] — the per-session random bijection between global phases and
//!   bit substrings, plus its one-time-pad transport encoding.
//! * [`toeplitz`] — GF(2) Toeplitz products for negotiation-pad expansion,
//!   Wegman-Carter style tags, and privacy amplification (packed kernel plus a
//!   naive normative reference).
//! * [`optics`] — analytic click/gain/error-rate formulas and the seeded Monte
//!   Carlo interference model.
//! * [`session`] — the five-step session orchestrator with key-consumption ledger
//!   and public transcript.
//! * [`entangle`] — small-Fock-space verification that the virtual two-qubit
//!   state has deterministic X-basis parity (zero phase error).
//!
//! Monte Carlo work is sharded over deterministic per-shard random streams; with
//! the default `parallel` feature the shards run on rayon, without it they run
//! sequentially, and either way the results are bit-identical for a given seed.

pub mod bits;
pub mod coherent;
pub mod entangle;
pub mod logscalar;
pub mod mapping;
pub mod optics;
pub mod session;
pub mod special;
pub mod streams;
pub mod toeplitz;

pub use bits::BitString;
pub use coherent::{AnalysisReport, PseudoPhotonSpec};
pub use logscalar::LogScalar;
pub use mapping::MappingRule;
pub use optics::{DetectionEvent, Detector, OpticsParams};
pub use session::{KeyLedger, SessionConfig, SessionOutcome, SessionReport};
pub use toeplitz::ToeplitzSeed;
