//! Solver/size sweeps, CSV and markdown tables, and manufactured-solution
//! convergence checks.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::cyclecost::{execution_time, mg_solve_cycles, speedup, stationary_solve_cycles, CycleShape, Parallelism};
use crate::error::{MgError, Result};
use crate::grid::{manufactured_solution, GridDims, PoissonProblem};
use crate::multigrid::{solve_mg, SolveReport, SolverConfig};
use crate::operators::residual;
use crate::smoothers::{solve_stationary_with, SmootherKind, StationaryConfig};

/// CSV header emitted by [`write_csv`].
pub const CSV_HEADER: &str = "solver,interior,tol,iterations,final_residual,wall_time_s,modeled_cycles,modeled_time_s,speedup";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverChoice {
    Mg,
    Jacobi,
    /// SOR with the given relaxation factor.
    Sor(f64),
}

impl SolverChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::Mg => "mg",
            SolverChoice::Jacobi => "jacobi",
            SolverChoice::Sor(_) => "sor",
        }
    }
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverChoice {
    type Err = MgError;

    /// `mg`, `jacobi` or `sor` (SOR gets `omega = 1.5`).
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mg" => Ok(SolverChoice::Mg),
            "jacobi" => Ok(SolverChoice::Jacobi),
            "sor" => Ok(SolverChoice::Sor(1.5)),
            other => Err(MgError::Parse { pos: 0, msg: format!("unknown solver {other:?}") }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchCase {
    pub solver: SolverChoice,
    pub dims: GridDims,
    /// Tolerance, arithmetic and ordering apply to every solver; the
    /// multigrid-specific fields only to [`SolverChoice::Mg`].
    pub cfg: SolverConfig,
    pub repetitions: usize,
}

impl BenchCase {
    pub fn new(solver: SolverChoice, dims: GridDims, cfg: SolverConfig) -> Self {
        BenchCase { solver, dims, cfg, repetitions: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(MgError::InvalidConfig("repetitions must be at least 1".into()));
        }
        self.cfg.validate()?;
        if let SolverChoice::Sor(w) = self.solver {
            SmootherKind::Sor(w).validate()?;
        }
        Ok(())
    }

    fn stationary_config(&self, kind: SmootherKind) -> StationaryConfig {
        StationaryConfig {
            ordering: self.cfg.ordering,
            arithmetic: self.cfg.arithmetic,
            ..StationaryConfig::new(kind, self.cfg.tol)
        }
    }

    /// Runs the case once on the manufactured problem.
    pub fn solve(&self) -> Result<SolveReport> {
        let p = PoissonProblem::manufactured(self.dims);
        match self.solver {
            SolverChoice::Mg => solve_mg(&p, &self.cfg),
            SolverChoice::Jacobi => solve_stationary_with(&p, &self.stationary_config(SmootherKind::Jacobi)),
            SolverChoice::Sor(w) => solve_stationary_with(&p, &self.stationary_config(SmootherKind::Sor(w))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub solver: String,
    pub interior: usize,
    pub tol: f64,
    pub iterations: usize,
    pub final_residual: f64,
    /// Minimum over repetitions.
    pub wall_time_s: f64,
    pub modeled_cycles: Option<u64>,
    pub modeled_time_s: Option<f64>,
    pub speedup: Option<f64>,
}

impl BenchRow {
    pub fn converged(&self) -> bool {
        self.final_residual <= self.tol
    }
}

/// Reference wall times keyed by solver name and interior size.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceTimes(HashMap<(String, usize), f64>);

#[derive(Debug, Deserialize)]
struct ReferenceRecord {
    solver: String,
    interior: usize,
    time_s: f64,
}

impl ReferenceTimes {
    pub fn insert(&mut self, solver: &str, interior: usize, seconds: f64) {
        self.0.insert((solver.to_string(), interior), seconds);
    }

    pub fn get(&self, solver: &str, interior: usize) -> Option<f64> {
        self.0.get(&(solver.to_string(), interior)).copied()
    }

    /// Reads CSV with header `solver,interior,time_s`.
    pub fn from_csv<R: Read>(r: R) -> Result<Self> {
        let mut out = ReferenceTimes::default();
        for rec in csv::Reader::from_reader(r).deserialize::<ReferenceRecord>() {
            let rec = rec?;
            if !(rec.time_s > 0.0) {
                return Err(MgError::Csv(format!("reference time for {} {} must be positive", rec.solver, rec.interior)));
            }
            out.insert(&rec.solver, rec.interior, rec.time_s);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub reference_times: Option<ReferenceTimes>,
    /// Clock frequency for modeled execution times.
    pub fmax_mhz: Option<f64>,
    /// `par` granularity for modeled cycles; `None` skips the cost model.
    pub cost_model: Option<Parallelism>,
    /// Worker threads; cases run sequentially when `<= 1`.
    pub threads: usize,
}

/// Executes every case and returns one row per case, in input order.
pub fn run_suite(cases: &[BenchCase], opts: &SuiteOptions) -> Result<Vec<BenchRow>> {
    for c in cases {
        c.validate()?;
    }
    if let Some(f) = opts.fmax_mhz {
        execution_time(0, f)?;
    }
    let threads = opts.threads.clamp(1, cases.len().max(1));
    if threads == 1 {
        return cases.iter().map(|c| run_case(c, opts)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<BenchRow>>>> = Mutex::new(vec![None; cases.len()]);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let k = next.fetch_add(1, AtomicOrdering::Relaxed);
                let Some(case) = cases.get(k) else { break };
                let row = run_case(case, opts);
                slots.lock().expect("result lock")[k] = Some(row);
            });
        }
    });
    slots
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every case ran"))
        .collect()
}

fn run_case(case: &BenchCase, opts: &SuiteOptions) -> Result<BenchRow> {
    let mut best: Option<SolveReport> = None;
    let mut wall = f64::INFINITY;
    for _ in 0..case.repetitions {
        let report = case.solve()?;
        wall = wall.min(report.wall_time);
        best = Some(report);
    }
    let report = best.expect("at least one repetition");
    let modeled_cycles = opts.cost_model.map(|mode| match case.solver {
        SolverChoice::Mg => {
            let shape = CycleShape { nu1: case.cfg.nu1 as u64, nu2: case.cfg.nu2 as u64 };
            mg_solve_cycles(case.dims, shape, report.iterations as u64, mode)
        }
        _ => stationary_solve_cycles(case.dims, report.iterations as u64, mode),
    });
    let modeled_time_s = match (modeled_cycles, opts.fmax_mhz) {
        (Some(c), Some(f)) => Some(execution_time(c, f)?),
        _ => None,
    };
    let speedup = match opts.reference_times.as_ref().and_then(|r| r.get(case.solver.name(), case.dims.interior())) {
        Some(t_ref) => Some(speedup(t_ref, wall.max(f64::MIN_POSITIVE))?),
        None => None,
    };
    Ok(BenchRow {
        solver: case.solver.name().to_string(),
        interior: case.dims.interior(),
        tol: case.cfg.tol,
        iterations: report.iterations,
        final_residual: report.final_residual_norm,
        wall_time_s: wall,
        modeled_cycles,
        modeled_time_s,
        speedup,
    })
}

pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|e| MgError::Csv(e.to_string()))
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<BenchRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(MgError::Csv(format!("unexpected header {:?}", header.join(","))));
    }
    rdr.deserialize().map(|r| r.map_err(MgError::from)).collect()
}

/// Markdown table of `rows`, noting how wall times were taken.
pub fn to_markdown(rows: &[BenchRow], repetitions: usize) -> String {
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    let mut s = String::new();
    let _ = writeln!(s, "| solver | interior | tol | iterations | final residual | wall time (s) | modeled cycles | modeled time (s) | speedup |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|");
    for r in rows {
        let _ = writeln!(
            s,
            "| {} | {}x{} | {} | {}{} | {:.3e} | {:.3e} | {} | {} | {} |",
            r.solver,
            r.interior,
            r.interior,
            r.tol,
            r.iterations,
            if r.converged() { "" } else { " (not converged)" },
            r.final_residual,
            r.wall_time_s,
            opt(r.modeled_cycles.map(|c| c.to_string())),
            opt(r.modeled_time_s.map(|t| format!("{t:.3e}"))),
            opt(r.speedup.map(|x| format!("{x:.4}"))),
        );
    }
    let _ = writeln!(s, "\nwall time: minimum over {repetitions} repetition(s)");
    s
}

/// Analytic test problem: exact solution and matching right-hand side of `−∇²u = f`.
#[derive(Clone, Copy)]
pub struct ManufacturedCase {
    pub exact: fn(f64, f64) -> f64,
    pub rhs: fn(f64, f64) -> f64,
}

impl ManufacturedCase {
    pub const SINE: ManufacturedCase = ManufacturedCase {
        exact: manufactured_solution,
        rhs: |x, y| 2.0 * std::f64::consts::PI * std::f64::consts::PI * manufactured_solution(x, y),
    };

    pub const ZERO: ManufacturedCase = ManufacturedCase { exact: |_, _| 0.0, rhs: |_, _| 0.0 };
}

/// Error of one converged solve against the analytic solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelError {
    pub interior: usize,
    pub spacing: f64,
    pub max_error: f64,
    pub cycles: usize,
    pub converged: bool,
    pub final_residual: f64,
    /// `‖r‖∞ / λ_min(A_h)`: size of the iteration error left by stopping at this residual.
    pub algebraic_error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub coarse: LevelError,
    pub fine: LevelError,
    /// `coarse.max_error / fine.max_error`.
    pub error_ratio: f64,
    /// `ln(ratio) / ln(h_coarse / h_fine)`; `None` when either error is zero.
    pub order: Option<f64>,
    /// False when either solve did not converge or its iteration error is not
    /// small (below a tenth) next to the measured error.
    pub reliable: bool,
}

fn level_error(dims: GridDims, cfg: &SolverConfig, case: ManufacturedCase) -> Result<LevelError> {
    let p = PoissonProblem::from_fn(dims, case.rhs);
    let report = solve_mg(&p, cfg)?;
    let h = p.spacing();
    let max_error = report
        .solution
        .interior_values()
        .enumerate()
        .map(|(k, v)| {
            let n = dims.interior();
            let (i, j) = (k / n + 1, k % n + 1);
            (v - (case.exact)(j as f64 * h, i as f64 * h)).abs()
        })
        .fold(0.0, f64::max);
    let final_residual = residual(&p, &report.solution)?.norm_inf();
    let lambda_min = 8.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    Ok(LevelError {
        interior: dims.interior(),
        spacing: h,
        max_error,
        cycles: report.iterations,
        converged: report.converged,
        final_residual,
        algebraic_error_estimate: final_residual / lambda_min,
    })
}

/// Solves the sine problem on `dims` and its refinement and estimates the
/// order of the discretization error.
pub fn verify_manufactured(dims: GridDims, cfg: &SolverConfig) -> Result<ConvergenceReport> {
    verify_case(dims, cfg, ManufacturedCase::SINE)
}

pub fn verify_case(dims: GridDims, cfg: &SolverConfig, case: ManufacturedCase) -> Result<ConvergenceReport> {
    if dims.level() < 2 {
        return Err(MgError::InvalidConfig(format!(
            "convergence check needs at least a 4x4 interior, got {0}x{0}",
            dims.interior()
        )));
    }
    cfg.validate()?;
    let coarse = level_error(dims, cfg, case)?;
    let fine = level_error(dims.refine(), cfg, case)?;
    let error_ratio = coarse.max_error / fine.max_error;
    let order = (coarse.max_error > 0.0 && fine.max_error > 0.0)
        .then(|| error_ratio.ln() / (coarse.spacing / fine.spacing).ln());
    let trustworthy = |l: &LevelError| l.converged && l.algebraic_error_estimate <= 0.1 * l.max_error;
    Ok(ConvergenceReport {
        coarse,
        fine,
        error_ratio,
        order,
        reliable: order.is_some() && trustworthy(&coarse) && trustworthy(&fine),
    })
}
