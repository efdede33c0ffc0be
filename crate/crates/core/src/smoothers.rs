//! Jacobi, Gauss-Seidel and SOR relaxation, usable as multigrid smoothers
//! or run to convergence on their own.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{MgError, Result};
use crate::fixedpoint::{Arithmetic, ArithmeticMode, FixedContext, RealArithmetic};
use crate::grid::{neighbour_sum, Grid, Grid2D, Level, PoissonProblem};
use crate::multigrid::SolveReport;
use crate::operators::residual_in;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SmootherKind {
    Jacobi,
    GaussSeidel,
    /// Successive over-relaxation with factor `omega` in `(0, 2)`.
    Sor(f64),
}

impl SmootherKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SmootherKind::Sor(w) if !(w > 0.0 && w < 2.0) => Err(MgError::InvalidOmega(w)),
            _ => Ok(()),
        }
    }
}

/// Traversal order of a Gauss-Seidel or SOR sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Ordering {
    /// Row-major.
    #[default]
    Lexicographic,
    /// All `(i + j)` even points, then all odd points.
    RedBlack,
}

/// Per-level constants of the relaxation formula, pre-converted into the arithmetic.
pub(crate) struct SweepConsts<V> {
    inv_h2: V,
    quarter: V,
    omega: V,
    one_minus_omega: V,
}

impl<V: Copy> SweepConsts<V> {
    pub(crate) fn new<A: Arithmetic<Value = V>>(a: &A, level: Level, kind: SmootherKind) -> Self {
        let omega = match kind {
            SmootherKind::Sor(w) => w,
            _ => 1.0,
        };
        SweepConsts {
            inv_h2: a.from_f64(level.inv_h2()),
            quarter: a.from_f64(0.25),
            omega: a.from_f64(omega),
            one_minus_omega: a.from_f64(1.0 - omega),
        }
    }
}

/// One relaxation pass over the interior; returns the updated grid.
pub fn sweep(u: &Grid2D, f: &Grid2D, kind: SmootherKind, ordering: Ordering) -> Result<Grid2D> {
    u.check_same_dims(f)?;
    kind.validate()?;
    let level = Level {
        dims: u.dims(),
        spacing: u.spacing(),
    };
    let a = RealArithmetic;
    let c = SweepConsts::new(&a, level, kind);
    let mut out = u.clone();
    sweep_in(&a, &c, &mut out, f, kind, ordering);
    Ok(out)
}

pub(crate) fn sweep_in<A: Arithmetic>(
    a: &A,
    c: &SweepConsts<A::Value>,
    u: &mut Grid<A::Value>,
    f: &Grid<A::Value>,
    kind: SmootherKind,
    ordering: Ordering,
) {
    let n = u.interior();
    // Gauss-Seidel candidate (Σ neighbours + h²f)/4 read from `src`.
    let candidate = |src: &Grid<A::Value>, i: usize, j: usize| {
        let h2f = a.div(f.get(i, j), c.inv_h2);
        a.mul(a.add(neighbour_sum(a, src, i, j), h2f), c.quarter)
    };
    match kind {
        SmootherKind::Jacobi => {
            let old = u.clone();
            for i in 1..=n {
                for j in 1..=n {
                    u.put(i, j, candidate(&old, i, j));
                }
            }
        }
        SmootherKind::GaussSeidel | SmootherKind::Sor(_) => {
            let relax = |u: &mut Grid<A::Value>, i: usize, j: usize| {
                let gs = candidate(u, i, j);
                let v = match kind {
                    SmootherKind::Sor(_) => a.add(a.mul(c.one_minus_omega, u.get(i, j)), a.mul(c.omega, gs)),
                    _ => gs,
                };
                u.put(i, j, v);
            };
            match ordering {
                Ordering::Lexicographic => {
                    for i in 1..=n {
                        for j in 1..=n {
                            relax(u, i, j);
                        }
                    }
                }
                Ordering::RedBlack => {
                    for colour in [0, 1] {
                        for i in 1..=n {
                            let start = if (i + 1) % 2 == colour { 1 } else { 2 };
                            for j in (start..=n).step_by(2) {
                                relax(u, i, j);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Settings for running a relaxation scheme to convergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryConfig {
    pub kind: SmootherKind,
    pub ordering: Ordering,
    pub tol: f64,
    /// `None` selects `10·N²`.
    pub max_iter: Option<usize>,
    pub arithmetic: ArithmeticMode,
}

impl StationaryConfig {
    pub fn new(kind: SmootherKind, tol: f64) -> Self {
        StationaryConfig {
            kind,
            ordering: Ordering::Lexicographic,
            tol,
            max_iter: None,
            arithmetic: ArithmeticMode::Real,
        }
    }

    pub fn max_iter_for(&self, interior: usize) -> usize {
        self.max_iter.unwrap_or(10 * interior * interior)
    }
}

/// Relaxes from `u = 0` until `‖r‖∞ ≤ tol` or `max_iter` sweeps.
pub fn solve_stationary(p: &PoissonProblem, kind: SmootherKind, tol: f64, max_iter: usize) -> Result<SolveReport> {
    let cfg = StationaryConfig {
        max_iter: Some(max_iter),
        ..StationaryConfig::new(kind, tol)
    };
    solve_stationary_with(p, &cfg)
}

pub fn solve_stationary_with(p: &PoissonProblem, cfg: &StationaryConfig) -> Result<SolveReport> {
    cfg.kind.validate()?;
    if !(cfg.tol > 0.0) {
        return Err(MgError::InvalidConfig(format!("tolerance must be positive, got {}", cfg.tol)));
    }
    let max_iter = cfg.max_iter_for(p.dims().interior());
    if max_iter == 0 {
        return Err(MgError::InvalidConfig("max_iter must be at least 1".into()));
    }
    Ok(match cfg.arithmetic {
        ArithmeticMode::Real => stationary_in(&RealArithmetic, p, cfg, max_iter),
        ArithmeticMode::Fixed(fmt) => {
            let ctx = FixedContext::new(fmt);
            let mut report = stationary_in(&ctx, p, cfg, max_iter);
            report.saturated = ctx.saturated();
            report
        }
    })
}

pub(crate) fn residual_norm_in<A: Arithmetic>(a: &A, level: Level, u: &Grid<A::Value>, f: &Grid<A::Value>) -> f64 {
    residual_in(a, level, u, f)
        .interior_values()
        .fold(0.0, |m, v| m.max(a.to_f64(v).abs()))
}

fn stationary_in<A: Arithmetic>(
    a: &A,
    p: &PoissonProblem,
    cfg: &StationaryConfig,
    max_iter: usize,
) -> SolveReport {
    let start = Instant::now();
    let level = p.level();
    let f = p.rhs().map(|v| a.from_f64(v));
    let mut u = Grid::zeros(p.dims(), p.spacing());
    let c = SweepConsts::new(a, level, cfg.kind);
    let initial = residual_norm_in(a, level, &u, &f);
    let mut history = Vec::new();
    let mut work = 1.0;
    let mut norm = initial;
    while norm > cfg.tol && history.len() < max_iter {
        sweep_in(a, &c, &mut u, &f, cfg.kind, cfg.ordering);
        norm = residual_norm_in(a, level, &u, &f);
        work += 2.0;
        history.push(norm);
    }
    SolveReport {
        iterations: history.len(),
        initial_residual_norm: initial,
        final_residual_norm: norm,
        converged: norm <= cfg.tol,
        wall_time: start.elapsed().as_secs_f64(),
        residual_history: history,
        work,
        saturated: false,
        solution: u.map(|v| a.to_f64(v)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense_oracle::dense_solve;
    use crate::grid::{apply_operator, GridDims};
    use crate::operators::residual;
    use rand::{Rng, SeedableRng};

    fn random_grid(dims: GridDims, seed: u64) -> Grid2D {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Grid2D::from_index_fn(dims, dims.unit_spacing(), |_, _| rng.gen_range(-1.0..1.0))
    }

    const ALL: [SmootherKind; 3] = [SmootherKind::Jacobi, SmootherKind::GaussSeidel, SmootherKind::Sor(1.5)];

    #[test]
    fn zero_is_a_fixed_point() {
        let dims = GridDims::new(3);
        let z = Grid2D::zeros(dims, dims.unit_spacing());
        for kind in ALL {
            for ord in [Ordering::Lexicographic, Ordering::RedBlack] {
                assert_eq!(sweep(&z, &z, kind, ord).unwrap(), z);
            }
        }
    }

    #[test]
    fn single_point_updates() {
        let dims = GridDims::new(0);
        let u = Grid2D::zeros(dims, 0.5);
        let mut f = Grid2D::zeros(dims, 0.5);
        f.set(1, 1, 16.0);
        let gs = sweep(&u, &f, SmootherKind::GaussSeidel, Ordering::Lexicographic).unwrap();
        assert_eq!(gs.get(1, 1), 1.0);
        let sor = sweep(&u, &f, SmootherKind::Sor(1.5), Ordering::Lexicographic).unwrap();
        assert_eq!(sor.get(1, 1), 1.5);
        let jac = sweep(&u, &f, SmootherKind::Jacobi, Ordering::Lexicographic).unwrap();
        assert_eq!(jac.get(1, 1), 1.0);
    }

    #[test]
    fn omega_must_lie_in_open_interval() {
        let dims = GridDims::new(1);
        let z = Grid2D::zeros(dims, 0.3);
        for w in [0.0, 2.0, -1.0, 2.5, f64::NAN] {
            assert!(sweep(&z, &z, SmootherKind::Sor(w), Ordering::Lexicographic).is_err());
        }
        let p = PoissonProblem::zero(dims);
        assert!(matches!(solve_stationary(&p, SmootherKind::Sor(2.0), 1e-3, 10), Err(MgError::InvalidOmega(_))));
    }

    #[test]
    fn invalid_tolerance_and_budget_are_rejected() {
        let p = PoissonProblem::zero(GridDims::new(1));
        assert!(solve_stationary(&p, SmootherKind::Jacobi, 0.0, 10).is_err());
        assert!(solve_stationary(&p, SmootherKind::Jacobi, 1e-3, 0).is_err());
    }

    #[test]
    fn jacobi_ignores_ordering() {
        let dims = GridDims::new(3);
        let u = random_grid(dims, 1);
        let f = random_grid(dims, 2);
        let a = sweep(&u, &f, SmootherKind::Jacobi, Ordering::Lexicographic).unwrap();
        let b = sweep(&u, &f, SmootherKind::Jacobi, Ordering::RedBlack).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sor_with_unit_omega_is_gauss_seidel_bitwise() {
        let dims = GridDims::new(4);
        let u = random_grid(dims, 3);
        let f = random_grid(dims, 4);
        for ord in [Ordering::Lexicographic, Ordering::RedBlack] {
            let gs = sweep(&u, &f, SmootherKind::GaussSeidel, ord).unwrap();
            let sor = sweep(&u, &f, SmootherKind::Sor(1.0), ord).unwrap();
            assert_eq!(gs, sor);
        }
    }

    #[test]
    fn red_black_differs_from_lexicographic() {
        let dims = GridDims::new(3);
        let u = random_grid(dims, 5);
        let f = random_grid(dims, 6);
        let lex = sweep(&u, &f, SmootherKind::GaussSeidel, Ordering::Lexicographic).unwrap();
        let rb = sweep(&u, &f, SmootherKind::GaussSeidel, Ordering::RedBlack).unwrap();
        assert_ne!(lex, rb);
        assert!(rb.is_boundary_zero() && lex.is_boundary_zero());
    }

    #[test]
    fn red_black_updates_every_point_once() {
        // With zero neighbours the red pass sees only f; black points then see red values.
        let dims = GridDims::new(1);
        let u = Grid2D::zeros(dims, 1.0);
        let f = Grid2D::from_index_fn(dims, 1.0, |_, _| 4.0);
        let rb = sweep(&u, &f, SmootherKind::GaussSeidel, Ordering::RedBlack).unwrap();
        // Red points (1,1), (2,2): (0 + 4)/4 = 1. Black: (1 + 1 + 4)/4 = 1.5.
        assert_eq!(rb.get(1, 1), 1.0);
        assert_eq!(rb.get(2, 2), 1.0);
        assert_eq!(rb.get(1, 2), 1.5);
        assert_eq!(rb.get(2, 1), 1.5);
    }

    #[test]
    fn gauss_seidel_decreases_energy_norm_of_error() {
        let p = PoissonProblem::manufactured(GridDims::new(2));
        let exact = dense_solve(&p);
        let zero = PoissonProblem::zero(p.dims());
        let energy = |u: &Grid2D| {
            let e = u.axpy(-1.0, &exact).unwrap();
            apply_operator(&zero, &e).unwrap().dot(&e)
        };
        for seed in 0..20 {
            let u = random_grid(p.dims(), seed);
            for ord in [Ordering::Lexicographic, Ordering::RedBlack] {
                let next = sweep(&u, p.rhs(), SmootherKind::GaussSeidel, ord).unwrap();
                assert!(energy(&next) < energy(&u));
            }
        }
    }

    #[test]
    fn zero_rhs_converges_immediately() {
        let p = PoissonProblem::zero(GridDims::new(3));
        for kind in ALL {
            let r = solve_stationary(&p, kind, 1e-3, 100).unwrap();
            assert_eq!(r.iterations, 0);
            assert!(r.converged);
            assert!(r.residual_history.is_empty());
        }
    }

    #[test]
    fn sor_needs_fewer_iterations_than_jacobi() {
        let p = PoissonProblem::manufactured(GridDims::new(3));
        let sor = solve_stationary(&p, SmootherKind::Sor(1.5), 1e-3, 10_000).unwrap();
        let jac = solve_stationary(&p, SmootherKind::Jacobi, 1e-3, 10_000).unwrap();
        let gs = solve_stationary(&p, SmootherKind::GaussSeidel, 1e-3, 10_000).unwrap();
        assert!(sor.converged && jac.converged && gs.converged);
        assert!(sor.iterations < gs.iterations && gs.iterations < jac.iterations);
    }

    #[test]
    fn stationary_solutions_match_dense_oracle() {
        let p = PoissonProblem::manufactured(GridDims::new(2));
        let exact = dense_solve(&p);
        let tol = 1e-3;
        for kind in ALL {
            for ordering in [Ordering::Lexicographic, Ordering::RedBlack] {
                let cfg = StationaryConfig { ordering, ..StationaryConfig::new(kind, tol) };
                let r = solve_stationary_with(&p, &cfg).unwrap();
                assert!(r.converged);
                assert!(r.solution.max_abs_diff(&exact) <= 10.0 * tol, "{kind:?}/{ordering:?}");
                let res = residual(&p, &r.solution).unwrap();
                assert!(res.norm_inf() <= tol);
            }
        }
    }

    #[test]
    fn iteration_counts_grow_with_size() {
        for kind in [SmootherKind::Jacobi, SmootherKind::Sor(1.5)] {
            let counts: Vec<usize> = (3..=6)
                .map(|l| {
                    let p = PoissonProblem::manufactured(GridDims::new(l));
                    let r = solve_stationary_with(&p, &StationaryConfig::new(kind, 1e-3)).unwrap();
                    assert!(r.converged);
                    r.iterations
                })
                .collect();
            assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{kind:?}: {counts:?}");
        }
    }

    #[test]
    fn budget_exhaustion_is_reported_not_failed() {
        let p = PoissonProblem::manufactured(GridDims::new(4));
        let r = solve_stationary(&p, SmootherKind::Jacobi, 1e-3, 5).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
        assert_eq!(r.residual_history.len(), 5);
    }

    #[test]
    fn default_budget_is_ten_n_squared() {
        assert_eq!(StationaryConfig::new(SmootherKind::Jacobi, 1e-3).max_iter_for(8), 640);
    }
}
