//! Wigner and Liouville evolution of the kicked harmonic oscillator on a
//! shared phase-space grid, with a diffusive reservoir and the tools to
//! measure how quantum and classical distributions separate.

pub mod decoherence;
pub mod error;
pub mod grid;
pub mod harness;
pub mod liouville;
pub mod maps;
pub mod metrics;
pub mod oracle;
pub mod special;
mod spectral;
pub mod wigner;

pub use error::{KhoError, Result};
pub use grid::{coherent_state, integrate, make_grid, Field, FieldKind, ModelParams, PhaseSpaceGrid};
