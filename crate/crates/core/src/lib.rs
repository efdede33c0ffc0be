//! Geometric multigrid for the 2D Poisson equation `−∇²u = f` on the unit
//! square with homogeneous Dirichlet boundaries.
//!
//! The V-cycle uses Gauss-Seidel smoothing, full-weighting restriction and
//! bilinear prolongation by default, down to a 1×1 grid solved in closed
//! form. Jacobi and SOR are available both as smoothers and as standalone
//! solvers. Every solver can run in saturating Q-format fixed-point
//! arithmetic, and [`cyclecost`] models clock cycles of the kernels under
//! `par` timing semantics.
//!
//! ```
//! use mgkit::{solve_mg, GridDims, PoissonProblem, SolverConfig};
//!
//! let problem = PoissonProblem::manufactured(GridDims::from_interior(64).unwrap());
//! let report = solve_mg(&problem, &SolverConfig::default()).unwrap();
//! assert!(report.converged);
//! ```

pub mod bench;
pub mod cyclecost;
mod error;
pub mod fixedpoint;
pub mod grid;
pub mod multigrid;
pub mod operators;
pub mod smoothers;

#[cfg(test)]
extern crate self as mgkit;

#[cfg(test)]
#[path = "../tests/common/mod.rs"]
mod dense_oracle;

pub use bench::{BenchCase, BenchRow, ConvergenceReport, ReferenceTimes, SolverChoice, SuiteOptions};
pub use cyclecost::{evaluate, CostExpr, CostReport, Kernel, Parallelism};
pub use error::{MgError, Result};
pub use fixedpoint::{ArithmeticMode, FixedContext, FixedPoint, QFormat};
pub use grid::{apply_operator, make_hierarchy, Grid, Grid2D, GridDims, Level, PoissonProblem};
pub use multigrid::{coarse_solve, solve_mg, v_cycle, SolveReport, SolverConfig};
pub use operators::{correct, prolong, residual, restrict, GridTransfer, ProlongationKind, RestrictionKind};
pub use smoothers::{solve_stationary, solve_stationary_with, sweep, Ordering, SmootherKind, StationaryConfig};
