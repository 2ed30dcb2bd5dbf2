//! Fixed-knot splines modulated by a prototype waveform.
//!
//! A signal is modelled either as `S(x, t)·g(t)` (Model 1) or as
//! `S(x₁, t)·g(t) + S(x₂, t)` (Model 2), where `S` is a truncated-power
//! spline and `g` is usually `sin(ωt + τ)`. Before solving the least
//! squares problem the design matrix is screened for singularity with
//! cheap counting and elimination tests; the verdict picks the solver.
//!
//! ```
//! use splinefit::{fit_fixed, FitOptions, Model, Signal, SplineSpec, TimeGrid};
//!
//! let grid = TimeGrid::uniform(0.0, 2.0, 200).unwrap();
//! let y = grid.times().iter().map(|t| (1.0 + t) * (4.0 * t).sin()).collect();
//! let signal = Signal::new(grid, y).unwrap();
//! let spec = SplineSpec::equidistant(2, 2, 0.0, 2.0).unwrap();
//! let fit = fit_fixed(Model::One, &signal, &spec, 4.0, 0.0, &FitOptions::default()).unwrap();
//! assert!(fit.sse < 1e-20);
//! ```

pub mod design;
pub mod error;
pub mod fitter;
pub mod linalg;
pub mod oracle;
pub mod prototype;
pub mod singularity;
pub mod solvers;
pub mod spline;

#[cfg(feature = "cli")]
pub mod cli;

use serde::{Deserialize, Serialize};

pub use design::{
    build_model1, build_model2, interleave_blocks, ColumnLayout, DesignMatrix, Family, Model,
    SplineBasis,
};
pub use error::{Error, Result};
pub use fitter::{
    fit_fixed, grid_search, model_values, FitOptions, FitResult, Fitter, GridCell, GridConfig,
    GridSearchResult, Signal,
};
pub use prototype::{count_zero_samples, sample, PrototypeFn, PrototypeSamples};
pub use singularity::{
    analyze, analyze_matrix, numeric_rank, theorem1_check, theorem2_check, Certifier,
    SingularityVerdict, VerdictStatus,
};
pub use solvers::{dispatch_solve, LsqSolution, SolveMethod};
pub use spline::{
    assign_intervals, eval_spline, IntervalAssignment, SplineCoeffs, SplineSpec, TimeGrid, TimeMap,
};

/// Relative singular-value cut-off used for every rank decision.
pub const DEFAULT_EPS_RANK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative threshold for counting a prototype sample as zero.
    pub eps_zero: f64,
    pub eps_rank: f64,
    /// Settle undecided verdicts with a numeric rank computation.
    pub certify: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_zero: prototype::DEFAULT_EPS_ZERO,
            eps_rank: DEFAULT_EPS_RANK,
            certify: true,
        }
    }
}
