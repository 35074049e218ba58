//! Miller-Rabin witness machinery and replayable primality evidence.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is deterministic
//! given its inputs; entropy enters only through [`entropy::ByteStream`]
//! implementations supplied by the caller, apart from the built-in seeded
//! SplitMix64 stream.

#![no_std]

extern crate alloc;

pub mod arith;
pub mod entropy;
pub mod error;
pub mod evidence;
pub mod testers;
pub mod witness;

pub use arith::{gcd, mod_pow, two_adic_split, Natural, ParseNaturalError, TwoAdicSplit};
pub use entropy::{
    sample_uniform, BitBlock, ByteStream, EntropyDescriptor, EntropySource, Provenance,
    SplitMix64,
};
pub use error::{Error, Result};
pub use evidence::{
    build_record, replay_verify, required_rounds, Certificate, Discrepancy, EvidenceRecord,
    ProofDetail, ProofTranscript, ReplayReport, ReplayStatus, FIDELITY_DISCLAIMER,
    FORMAT_VERSION,
};
pub use testers::{
    exhaustive_deterministic_test, lucas_lehmer, miller_rabin_test, trial_division, LLTrace,
    Method, MillerRabinRun, PreScreen, Verdict, VerdictTag,
};
pub use witness::{
    eval_witness, witness_density, FailingCondition, WitnessDensity, WitnessEvaluation,
    WitnessOutcome,
};
