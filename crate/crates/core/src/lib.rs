//! Exact, bounded algorithmic information theory on a small fixed machine.
//!
//! - [`machine`]: the UM-1 prefix-free reference machine.
//! - [`census`]: exhaustive enumeration of halting programs.
//! - [`analysis`]: bounded `K`, `Q` and logical depth, diagonal construction
//!   of deep strings, slow-growth audit.
//! - [`verify`]: prover/verifier simulations for value claims.
//! - [`proxy`]: an instrumented LZ codec whose decode work stands in for depth.

pub mod analysis;
pub mod bits;
pub mod census;
pub mod machine;
pub mod proxy;
pub mod rational;
pub mod verify;

pub use bits::BitString;
pub use census::{build_census, CensusParams, HaltingCensus};
pub use machine::{run, ExecutionOutcome, MachineLimits, Program, MACHINE_VERSION};
pub use rational::Rational;
