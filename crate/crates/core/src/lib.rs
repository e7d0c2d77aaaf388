//! Numerics for the quadratically coupled Klein-Gordon system
//!
//!   u1_tt - Δu1 + m1² u1 = 2 conj(u1) u2,
//!   u2_tt - Δu2 + m2² u2 = u1²,
//!
//! restricted to radial profiles in dimension N = 2, 3: ground states,
//! conserved and variational functionals, charge-invariant scaling, leapfrog
//! evolution with blow-up detection, and the localized virial quantity.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod groundstate;
pub mod io;
pub mod params;
pub mod variational;
pub mod virial;

pub use error::{Error, Result};
pub use evolution::{evolve, EvolveConfig, EvolveResult, Outcome, TrajectoryRecord};
pub use field::{h1_norm_sq, l2_inner, laplacian, scale_state, Field, FieldPair, State};
pub use functionals::FunctionalReport;
pub use grid::RadialGrid;
pub use groundstate::{solve_sp, GroundState};
pub use params::Params;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
