//! Boundary spike/layer steady states of the Keller-Segel system with
//! logarithmic sensitivity on the half-line, solvers for the original and
//! Cole-Hopf transformed systems, and the weighted diagnostics used to
//! exhibit nonlinear stability.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod initial;
pub mod params;
pub mod quadrature;
pub mod solver;
pub mod steady;
pub mod transform;
mod tridiag;

pub use diagnostics::{DiagnosticsRecord, WeightSpec};
pub use error::{KsError, Result};
pub use grid::{Field, Grid, GridKind};
pub use params::{DerivedConstants, Parameters, Regime};
pub use solver::{
    ConvergenceStatus, Formulation, Scheme, SimState, SimulationOutput, SolverConfig, StepResult,
    TimeStep,
};
pub use steady::{SteadyStateProfile, SweepAxis, TestFunction};
