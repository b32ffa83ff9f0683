//! Solver and verification harness for the Weertman traveling-wave problem.
//!
//! The library evolves `du/dt + |d/dx| u = -F'(u)` for a bistable potential
//! `F` with a pseudospectral exponential integrator, converges it to the
//! traveling wave `(eta, c)` of `-|d/dx| eta + c eta' = F'(eta)`, and checks
//! the quantitative structure of that wave: 1/x tail asymptotes, two
//! integral identities for the velocity, a comparison principle with
//! explicit sub/super-solutions, and the exponential rate of convergence.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod halflap;
pub mod pipeline;
pub mod potential;
pub mod semigroup;
pub mod squeeze;
pub mod wave_analysis;

pub use error::{Error, Result};
pub use evolution::{
    evolve, make_initial, weertman_residual, EvolveConfig, InitialKind, ReferenceProfile,
    RunReport, WaveState,
};
pub use grid::Grid;
pub use potential::{BistablePotential, PotentialFamily, WellCurvature};
pub use semigroup::EtdOrder;
