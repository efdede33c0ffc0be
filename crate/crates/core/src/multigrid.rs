//! Recursive V-cycle and the outer iteration to tolerance.

use std::time::Instant;

use crate::error::{MgError, Result};
use crate::fixedpoint::{Arithmetic, ArithmeticMode, FixedContext, RealArithmetic};
use crate::grid::{hierarchy_from, Grid, Grid2D, Level, PoissonProblem};
use crate::operators::{correct_in, residual_in, GridTransfer, ProlongationKind, RestrictionKind, TransferIn};
use crate::smoothers::{residual_norm_in, sweep_in, Ordering, SmootherKind, SweepConsts};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub smoother: SmootherKind,
    pub ordering: Ordering,
    /// Pre-smoothing sweeps.
    pub nu1: usize,
    /// Post-smoothing sweeps.
    pub nu2: usize,
    pub restriction: RestrictionKind,
    pub prolongation: ProlongationKind,
    pub tol: f64,
    pub max_cycles: usize,
    pub arithmetic: ArithmeticMode,
}

impl Default for SolverConfig {
    /// Gauss-Seidel smoothing (2 pre, 2 post), full weighting, bilinear
    /// interpolation, tolerance `1e−3`.
    fn default() -> Self {
        SolverConfig {
            smoother: SmootherKind::GaussSeidel,
            ordering: Ordering::Lexicographic,
            nu1: 2,
            nu2: 2,
            restriction: RestrictionKind::FullWeighting,
            prolongation: ProlongationKind::Bilinear,
            tol: 1e-3,
            max_cycles: 100,
            arithmetic: ArithmeticMode::Real,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.smoother.validate()?;
        if self.nu1 + self.nu2 == 0 {
            return Err(MgError::InvalidConfig("nu1 + nu2 must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(MgError::InvalidConfig(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_cycles == 0 {
            return Err(MgError::InvalidConfig("max_cycles must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// V-cycles for multigrid, sweeps for stationary solvers.
    pub iterations: usize,
    pub initial_residual_norm: f64,
    /// `‖f − A u‖∞` of the returned solution.
    pub final_residual_norm: f64,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
    /// Residual ∞-norm after each cycle or sweep.
    pub residual_history: Vec<f64>,
    /// Stencil passes (smoothing sweeps plus residual evaluations), each
    /// weighted by its grid size relative to the finest grid.
    pub work: f64,
    /// Set when a fixed-point solve saturated at least once.
    pub saturated: bool,
    pub solution: Grid2D,
}

/// Exact solve of the single-unknown system `4u/h² = f`.
pub fn coarse_solve(f: &Grid2D) -> Result<Grid2D> {
    if f.interior() != 1 {
        return Err(MgError::NotCoarsest(f.interior()));
    }
    let level = Level {
        dims: f.dims(),
        spacing: f.spacing(),
    };
    Ok(coarse_solve_in(&RealArithmetic, &LevelConsts::new(&RealArithmetic, level, SmootherKind::GaussSeidel), f))
}

/// One V-cycle on `hierarchy[0]` starting from `u`.
pub fn v_cycle(hierarchy: &[Level], u: Grid2D, f: &Grid2D, cfg: &SolverConfig) -> Result<Grid2D> {
    let top = hierarchy
        .first()
        .ok_or_else(|| MgError::InvalidConfig("empty hierarchy".into()))?;
    if top.dims != u.dims() {
        return Err(MgError::DimensionMismatch {
            expected: top.dims.interior(),
            actual: u.interior(),
        });
    }
    u.check_same_dims(f)?;
    for w in hierarchy.windows(2) {
        if w[0].coarser() != Some(w[1]) {
            return Err(MgError::InvalidConfig("levels do not form a coarsening chain".into()));
        }
    }
    if hierarchy.last().map(|l| l.dims.interior()) != Some(1) {
        return Err(MgError::InvalidConfig("hierarchy must end at the 1x1 level".into()));
    }
    cfg.validate()?;
    let a = RealArithmetic;
    let consts: Vec<_> = hierarchy.iter().map(|&l| LevelConsts::new(&a, l, cfg.smoother)).collect();
    let mut u = u;
    let mut work = 0.0;
    v_cycle_in(&a, &consts, &mut u, f, cfg, 1.0, &mut work);
    Ok(u)
}

/// Repeats V-cycles from `u = 0` until `‖r‖∞ ≤ tol` or `max_cycles`.
pub fn solve_mg(p: &PoissonProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    Ok(match cfg.arithmetic {
        ArithmeticMode::Real => solve_mg_in(&RealArithmetic, p, cfg),
        ArithmeticMode::Fixed(fmt) => {
            let ctx = FixedContext::new(fmt);
            let mut report = solve_mg_in(&ctx, p, cfg);
            report.saturated = ctx.saturated();
            report
        }
    })
}

pub(crate) struct LevelConsts<V> {
    level: Level,
    /// Transfers to the next coarser level; `None` on the coarsest.
    transfer: Option<TransferIn<V>>,
    sweep: SweepConsts<V>,
    inv_h2: V,
    quarter: V,
}

impl<V: Copy> LevelConsts<V> {
    fn new<A: Arithmetic<Value = V>>(a: &A, level: Level, smoother: SmootherKind) -> Self {
        let transfer = level
            .coarser()
            .map(|c| GridTransfer::new(level, c).expect("coarsening chain").in_arith(a));
        LevelConsts {
            level,
            transfer,
            sweep: SweepConsts::new(a, level, smoother),
            inv_h2: a.from_f64(level.inv_h2()),
            quarter: a.from_f64(0.25),
        }
    }
}

fn coarse_solve_in<A: Arithmetic>(a: &A, c: &LevelConsts<A::Value>, f: &Grid<A::Value>) -> Grid<A::Value> {
    let mut u = Grid::zeros(f.dims(), f.spacing());
    u.put(1, 1, a.mul(a.div(f.get(1, 1), c.inv_h2), c.quarter));
    u
}

fn v_cycle_in<A: Arithmetic>(
    a: &A,
    levels: &[LevelConsts<A::Value>],
    u: &mut Grid<A::Value>,
    f: &Grid<A::Value>,
    cfg: &SolverConfig,
    weight: f64,
    work: &mut f64,
) {
    let (here, coarser) = levels.split_first().expect("non-empty hierarchy");
    if coarser.is_empty() {
        *u = coarse_solve_in(a, here, f);
        return;
    }
    for _ in 0..cfg.nu1 {
        sweep_in(a, &here.sweep, u, f, cfg.smoother, cfg.ordering);
    }
    let r = residual_in(a, here.level, u, f);
    let transfer = here.transfer.as_ref().expect("transfer on non-coarsest level");
    let r_coarse = transfer.restrict(a, &r, cfg.restriction);
    let mut e_coarse = Grid::zeros(r_coarse.dims(), r_coarse.spacing());
    v_cycle_in(a, coarser, &mut e_coarse, &r_coarse, cfg, weight / 4.0, work);
    let ProlongationKind::Bilinear = cfg.prolongation;
    let e = transfer.prolong(a, &e_coarse);
    correct_in(a, u, &e);
    for _ in 0..cfg.nu2 {
        sweep_in(a, &here.sweep, u, f, cfg.smoother, cfg.ordering);
    }
    *work += weight * (cfg.nu1 + cfg.nu2 + 1) as f64;
}

fn solve_mg_in<A: Arithmetic>(a: &A, p: &PoissonProblem, cfg: &SolverConfig) -> SolveReport {
    let start = Instant::now();
    let hierarchy = hierarchy_from(p.level());
    let consts: Vec<_> = hierarchy.iter().map(|&l| LevelConsts::new(a, l, cfg.smoother)).collect();
    let f = p.rhs().map(|v| a.from_f64(v));
    let mut u = Grid::zeros(p.dims(), p.spacing());
    let initial = residual_norm_in(a, p.level(), &u, &f);
    let mut norm = initial;
    let mut history = Vec::new();
    let mut work = 1.0;
    while norm > cfg.tol && history.len() < cfg.max_cycles {
        v_cycle_in(a, &consts, &mut u, &f, cfg, 1.0, &mut work);
        norm = residual_norm_in(a, p.level(), &u, &f);
        work += 1.0;
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
