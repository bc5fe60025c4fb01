//! Simulation of adaptive statistical-query games: fingerprinting attacks
//! on natural mechanisms, their lifting to arbitrary mechanisms, and the
//! Encrypermute composition counterexamples.

pub mod attack;
pub mod bits;
pub mod composition;
pub mod error;
pub mod fingerprint;
pub mod harness;
pub mod lifting;
pub mod mechanisms;
pub mod prg;
pub mod query;
pub mod rng;
pub mod stats;
pub mod universe;

pub use bits::BitVector;
pub use error::{Error, Result};
pub use query::{phg_gap, query_mean_population, query_mean_sample, GapReport, Query};
pub use universe::{Dataset, Population, UniversePoint};
