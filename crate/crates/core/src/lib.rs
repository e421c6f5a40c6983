//! Finite element solver for `-Δu = f` on a bounded planar domain when the
//! Dirichlet data is only known through noisy point observations on the
//! boundary.
//!
//! The boundary condition is imposed weakly with a Lagrange multiplier that
//! lives in continuous piecewise-linear functions on the boundary mesh. All
//! boundary integrals are replaced by an empirical inner product built from
//! the measurement sites, so the discrete problem never needs the data at the
//! mesh vertices:
//!
//! ```text
//! (∇u_h, ∇v_h) + <λ_h, Π_h v_h>_n = (I_h f, v_h)     for all v_h in V_h
//!               <μ_h, Π_h u_h>_n = <μ_h, g>_n         for all μ_h in Q_h
//! ```
//!
//! Module map:
//!
//! * [`mesh`]: unit square and unit disk triangulations, boundary
//!   parametrisations, quality checks and a plain-text mesh format.
//! * [`observations`]: measurement placement, noise models, the local
//!   quadrature weights and the empirical inner product.
//! * [`fem`]: P1 field space, boundary multiplier space, the saddle-point
//!   blocks and stability measurements.
//! * [`solver`]: direct block elimination and a preconditioned MINRES path.
//! * [`analysis`]: manufactured solutions, error functionals, rate fits and
//!   Monte-Carlo studies.
//! * [`cli`]: the `obsfem` command-line driver.

// Negated float comparisons deliberately reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
#[cfg(feature = "cli")]
pub mod cli;
mod error;
pub mod fem;
pub mod mesh;
pub mod observations;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use nalgebra::{Point2, Vector2};
