//! Numerical toolkit for harmonic analysis in the rational Dunkl setting.
//!
//! The crate is organised bottom-up: [`reflection`] builds root systems and
//! their groups, [`measure`] the invariant weight and ball volumes,
//! [`kernels`] the heat and Riesz kernels, [`spaces`] grid functions and
//! oscillation machinery, [`operators`] discretized transforms and
//! commutators, and [`verify`] sweeps that measure the constants in the
//! kernel and commutator estimates. [`config`] holds the serializable run
//! configuration used by the command-line tool.

pub mod config;
pub mod kernels;
pub mod measure;
pub mod operators;
pub mod quad;
pub mod reflection;
pub mod spaces;
pub mod verify;
