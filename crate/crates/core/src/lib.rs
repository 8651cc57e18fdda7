// Negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN
// along with the out-of-range values. Stencil loops index by node number.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Numerical laboratory for the strongly damped semilinear wave equation
//! `u_tt - Delta u - Delta u_t = |u|^p` on the exterior of a ball.
//!
//! The crate provides the radial discretization, the closed-form harmonic
//! weights and space-time cut-offs of the test-function method, a
//! Crank-Nicolson time integrator with finite-time blow-up detection, and
//! the diagnostics that reproduce the scaling laws driving the blow-up
//! argument.

pub mod cutoffs;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod solver;
pub mod weights;

pub use cutoffs::{
    conjugate_exponent, default_powers, make_profile, Deriv, HolderFactors, Profile, RhsIntegrals,
    SpatialCutoff, TemporalCutoff, TestFunctionFamily,
};
pub use data::DataFamily;
pub use diagnostics::{
    critical_tail_report, fit_scaling, inequality_sides, linear_mode_trajectory, predicted_slope,
    sign_functional, sign_functional_ibp, weak_form_residual, weighted_data_term,
    CriticalCaseReport, InequalitySides, ScalingReport, SignFunctionalResult, TailTrend,
    WeakFormReport,
};
pub use error::{Error, Result};
pub use grid::{build_radial_grid, unit_sphere_area, Grading, RadialField, RadialGrid};
pub use solver::{
    manufactured_run, run, run_linear, validate_initial_data, Certainty, Controls,
    ConvergenceReport, HistoryRow, InitialData, ManufacturedSolution, NormSnapshot, RunOutcome,
    RunResult, SolverState, SourceKind, Trajectory, Verdict,
};
pub use weights::{make_weight, HarmonicWeight, WeightForm, WeightReport};
