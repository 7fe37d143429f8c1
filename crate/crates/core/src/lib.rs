//! Spectral toolkit for Sturm-Liouville operators `-y'' + q y = mu^2 y` on `[0, 1]`
//! with regular but not strongly regular two-point boundary conditions.
//!
//! The crate reduces general boundary conditions to canonical families, computes
//! the characteristic determinant, locates eigenvalues by argument-principle
//! counting plus Newton refinement, compares them against asymptotic formulas,
//! and tests the Riesz-basis property of the eigenfunction system.

pub mod asymptotics;
pub mod bc_model;
pub mod contour;
pub mod determinant;
pub mod eig_solver;
pub mod error;
pub mod ode;
pub mod oracle;
pub mod potential;
pub mod quadrature;
pub mod riesz_diag;
pub mod sampled;
pub mod stats;

pub use error::{Result, SpectralError};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Numerical tolerances shared by the solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Algebraic comparisons (proportionality, regularity tests).
    pub alg: f64,
    /// Oscillatory quadrature.
    pub quad: f64,
    /// ODE integration (relative and absolute).
    pub ode: f64,
    /// Base factor of the eigenvalue residual bound `eig * (1 + |mu|^2)`.
    pub eig: f64,
    /// Radius below which two roots are treated as one multiple root.
    pub mult: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            alg: 1e-10,
            quad: 1e-12,
            ode: 1e-11,
            eig: 1e-8,
            mult: 1e-4,
        }
    }
}

impl Tolerances {
    /// Determinant residual bound at `mu`.
    pub fn eig_bound(&self, mu: C64) -> f64 {
        self.eig * (1.0 + mu.norm_sqr())
    }
}
