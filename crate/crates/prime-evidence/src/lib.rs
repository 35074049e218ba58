//! Certificate files, OS and remote entropy, and the `prime-evidence`
//! command-line tool, built on [`prime_evidence_core`].

pub mod cli;
pub mod codec;
pub mod literal;
pub mod sources;

pub use codec::{deserialize, serialize, CodecError};

use prime_evidence_core::{replay_verify, ReplayReport};

/// Parses and replays certificate bytes; parse failures come back as a
/// `Malformed` report rather than an error.
pub fn verify_bytes(bytes: &[u8]) -> ReplayReport {
    match deserialize(bytes) {
        Ok(cert) => replay_verify(&cert),
        Err(e) => ReplayReport::malformed(e.to_string()),
    }
}
