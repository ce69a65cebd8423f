//! Software model of an infrared Code 39 card scanner and its receiving
//! back end.
//!
//! The pipeline runs card code → 36-element pattern ([`code39`]) → raw
//! `'0'`/`'5'` scanner stream ([`scanline`]) → noisy link ([`channel`]) →
//! correction, run-length thresholding and nearest-pattern matching
//! ([`decode`]) → database lookup, audit log and password gate ([`auth`]).
//! [`experiment`] runs the whole chain as a seeded Monte Carlo sweep.

pub mod auth;
pub mod channel;
pub mod code39;
pub mod decode;
mod error;
pub mod experiment;
pub mod scanline;

pub use code39::{CardCode, MatchResult, Pattern36};
pub use decode::{DecodeReport, FailureReason, Run, RunArray};
pub use error::Error;
pub use scanline::{ScanConfig, Symbol, SymbolStream};
