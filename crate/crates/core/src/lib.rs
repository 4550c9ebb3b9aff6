//! Quantum steering in spatial, temporal and channel scenarios, decided through
//! minimal Stinespring dilations and joint measurability of POVMs.
//!
//! * [`linalg`] dense complex matrices, partial traces and canonical eigenbases.
//! * [`qobjects`] states, POVMs, assemblages, channels and instruments.
//! * [`dilation`] minimal dilations and the dummy-POVM correspondence.
//! * [`compat`] the joint-measurability SDP, certificates and steering reductions.
//! * [`scenarios`] concrete constructions and sequential-measurement statistics.

pub mod compat;
pub mod dilation;
pub mod error;
pub mod linalg;
pub mod parallel;
pub mod qobjects;
pub mod random;
pub mod scenarios;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ToleranceConfig};
pub use parallel::Parallelism;
