//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::dense_solve;
use mgkit::bench::{verify_manufactured, BenchCase, SolverChoice};
use mgkit::cyclecost::{execution_time, speedup};
use mgkit::fixedpoint::{from_fixed, to_fixed};
use mgkit::smoothers::StationaryConfig;
use mgkit::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn dims(n: usize) -> GridDims {
    GridDims::from_interior(n).expect("power of two")
}

fn spread(xs: &[usize]) -> usize {
    xs.iter().max().unwrap() - xs.iter().min().unwrap()
}

fn mesh_independence() -> Outcome {
    let sizes = [8, 16, 32, 64, 128, 256];
    let cfg = SolverConfig::default();
    let mut cycles = Vec::new();
    let mut all_converged = true;
    for n in sizes {
        let r = solve_mg(&PoissonProblem::manufactured(dims(n)), &cfg).unwrap();
        all_converged &= r.converged;
        cycles.push(r.iterations);
    }
    let ok = all_converged && spread(&cycles) <= 2;
    outcome(ok, format!("sizes {sizes:?} cycles {cycles:?} (spread <= 2)"))
}

fn solver_ordering() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    let cfg = SolverConfig { tol: TOL, ..SolverConfig::default() };
    for n in [32, 64, 128] {
        let solvers = [SolverChoice::Mg, SolverChoice::Sor(1.5), SolverChoice::Jacobi];
        let repetitions = if n <= 64 { 3 } else { 1 };
        let mut t = Vec::new();
        let mut work = Vec::new();
        let mut converged = true;
        for s in solvers {
            let case = BenchCase::new(s, dims(n), cfg);
            let runs: Vec<SolveReport> = (0..repetitions).map(|_| case.solve().unwrap()).collect();
            t.push(runs.iter().map(|r| r.wall_time).fold(f64::INFINITY, f64::min));
            work.push(runs[0].work);
            converged &= runs[0].converged;
        }
        ok &= converged && t[0] < t[1] && t[1] < t[2] && work[0] < work[1] && work[1] < work[2];
        detail.push(format!(
            "{n}: time {:.2e}<{:.2e}<{:.2e} work {:.0}<{:.0}<{:.0}",
            t[0], t[1], t[2], work[0], work[1], work[2]
        ));
    }
    outcome(ok, detail.join("; "))
}

fn oracle_agreement() -> Outcome {
    let p = PoissonProblem::manufactured(dims(4));
    let exact = dense_solve(&p);
    let mut worst = 0.0f64;
    let mg = solve_mg(&p, &SolverConfig::default()).unwrap();
    worst = worst.max(mg.solution.max_abs_diff(&exact));
    let mut converged = mg.converged;
    for kind in [SmootherKind::Jacobi, SmootherKind::GaussSeidel, SmootherKind::Sor(1.5)] {
        for ordering in [Ordering::Lexicographic, Ordering::RedBlack] {
            let cfg = StationaryConfig { ordering, ..StationaryConfig::new(kind, TOL) };
            let r = solve_stationary_with(&p, &cfg).unwrap();
            converged &= r.converged;
            worst = worst.max(r.solution.max_abs_diff(&exact));
        }
    }

    // Two-grid correction from a zero guess with the coarse problem solved exactly.
    let fine = Level::finest(p.dims());
    let transfer = GridTransfer::new(fine, fine.coarser().unwrap()).unwrap();
    let u0 = Grid2D::zeros(p.dims(), p.spacing());
    let r = residual(&p, &u0).unwrap();
    let e_c = dense_solve(&PoissonProblem::new(transfer.restrict(&r, RestrictionKind::FullWeighting).unwrap()));
    let u1 = correct(&u0, &transfer.prolong(&e_c).unwrap()).unwrap();
    let before = exact.axpy(-1.0, &u0).unwrap().norm_l2();
    let after = exact.axpy(-1.0, &u1).unwrap().norm_l2();

    let ok = converged && worst <= 10.0 * TOL && after < before;
    outcome(
        ok,
        format!("max |u - u_dense| = {worst:.2e} (<= {:.0e}); two-grid error {before:.3e} -> {after:.3e}", 10.0 * TOL),
    )
}

fn discretization_order() -> Outcome {
    let cfg = SolverConfig { tol: 1e-6, ..SolverConfig::default() };
    let rep = verify_manufactured(dims(32), &cfg).unwrap();
    let ok = rep.coarse.converged && rep.fine.converged && (3.5..=4.5).contains(&rep.error_ratio);
    outcome(
        ok,
        format!(
            "error 32: {:.3e}, 64: {:.3e}, ratio {:.3} in [3.5, 4.5], order {:.3}",
            rep.coarse.max_error,
            rep.fine.max_error,
            rep.error_ratio,
            rep.order.unwrap_or(f64::NAN)
        ),
    )
}

fn par_semantics() -> Outcome {
    let seq = evaluate(&CostExpr::seq(vec![CostExpr::Assign; 3]));
    let par = evaluate(&CostExpr::par(vec![CostExpr::Assign; 3]));
    let parsed_seq = evaluate(&"seq(assign,assign,assign)".parse().unwrap());
    let parsed_par = evaluate(&"par(assign,assign,assign)".parse().unwrap());
    let ok = seq == 3 && par == 1 && parsed_seq == 3 && parsed_par == 1;
    outcome(ok, format!("Seq[3 Assign] = {seq}, Par[3 Assign] = {par} (text form {parsed_seq}, {parsed_par})"))
}

fn timing_arithmetic() -> Outcome {
    let t = execution_time(10_064, 159.74).unwrap();
    let s = speedup(9.0e-3, 6.3e-5).unwrap();
    let t_err = (t - 6.30e-5).abs() / 6.30e-5;
    let s_err = (s - 142.86).abs() / 142.86;
    outcome(
        t_err <= 0.01 && s_err <= 0.005,
        format!("time {t:.4e} s ({:.3}% off 6.30e-5), speedup {s:.3} ({:.3}% off 142.86)", 100.0 * t_err, 100.0 * s_err),
    )
}

fn random_grid(d: GridDims, h: f64, rng: &mut ChaCha8Rng) -> Grid2D {
    let n = d.interior();
    Grid2D::from_index_fn(d, h, |i, j| {
        if (1..=n).contains(&i) && (1..=n).contains(&j) {
            rng.gen_range(-1.0..1.0)
        } else {
            0.0
        }
    })
}

fn operator_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let fine = dims(16);
    let coarse = dims(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let r = random_grid(fine, fine.unit_spacing(), &mut rng);
        let e = random_grid(coarse, 2.0 * fine.unit_spacing(), &mut rng);
        let lhs = restrict(&r, RestrictionKind::FullWeighting).unwrap().dot(&e);
        let rhs = 0.25 * r.dot(&prolong(&e).unwrap());
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE));
    }

    // Constants survive every restriction wherever the stencil stays off the boundary ring.
    let ones = Grid2D::from_index_fn(fine, fine.unit_spacing(), |_, _| 1.0);
    let level = Level::finest(fine);
    let transfer = GridTransfer::new(level, level.coarser().unwrap()).unwrap();
    let mut constants = true;
    for kind in [RestrictionKind::FullWeighting, RestrictionKind::HalfWeighting, RestrictionKind::Injection] {
        let c = restrict(&ones, kind).unwrap();
        let nc = c.interior();
        for i in 1..nc {
            for j in 1..nc {
                constants &= (c.get(i, j) - 1.0).abs() <= 1e-15;
            }
        }
        let g = transfer.restrict(&ones, kind).unwrap();
        constants &= g.interior_values().all(|v| (v - 1.0).abs() <= 1e-12);
    }
    outcome(
        worst <= 1e-12 && constants,
        format!("adjoint relative gap {worst:.2e} (<= 1e-12); constants preserved: {constants}"),
    )
}

fn fixed_point_fidelity() -> Outcome {
    let fmt = QFormat::Q15_16;
    let d = dims(64);
    let p = PoissonProblem::manufactured(d);
    let cfg = SolverConfig::default();
    let real = solve_mg(&p, &cfg).unwrap();
    let fixed = solve_mg(&p, &SolverConfig { arithmetic: ArithmeticMode::Fixed(fmt), ..cfg }).unwrap();
    let gap = fixed.solution.max_abs_diff(&real.solution);

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (lo, hi) = (fmt.min_value(), fmt.max_value());
    let mut worst = 0.0f64;
    let mut flagged = false;
    for _ in 0..100_000 {
        let x = rng.gen_range(lo..=hi);
        let (v, sat) = to_fixed(x, fmt);
        flagged |= sat;
        worst = worst.max((from_fixed(v) - x).abs());
    }
    let half_ulp = fmt.resolution() / 2.0;
    // Any nonzero residual of a Q-format iterate is at least one lattice step
    // of A·u, i.e. 2^-frac_bits / h².
    let lattice = fmt.resolution() * Level::finest(d).inv_h2();

    let ok = fixed.converged && !fixed.saturated && gap <= 1e-2 && !flagged && worst <= half_ulp;
    outcome(
        ok,
        format!(
            "q15.16 64x64: converged {} after {} cycles, residual {:.4} (tol {TOL:.0e}, A·u lattice step {lattice:.4}), \
             saturated {}, |u_fixed - u_real| = {gap:.2e} (<= 1e-2); round-trip max error {worst:.3e} (<= {half_ulp:.3e})",
            fixed.converged, fixed.iterations, fixed.final_residual_norm, fixed.saturated
        ),
    )
}

fn determinism() -> Outcome {
    let p = PoissonProblem::manufactured(dims(32));
    let configs = [
        SolverConfig::default(),
        SolverConfig { ordering: Ordering::RedBlack, restriction: RestrictionKind::HalfWeighting, ..SolverConfig::default() },
        SolverConfig { arithmetic: ArithmeticMode::Fixed(QFormat::Q15_16), max_cycles: 20, ..SolverConfig::default() },
    ];
    let bits = |r: &SolveReport| r.residual_history.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let mut same = true;
    for cfg in &configs {
        let a = solve_mg(&p, cfg).unwrap();
        let b = solve_mg(&p, cfg).unwrap();
        same &= a.iterations == b.iterations && bits(&a) == bits(&b) && a.solution == b.solution;
    }
    for kind in [SmootherKind::Jacobi, SmootherKind::Sor(1.5)] {
        let a = solve_stationary(&p, kind, TOL, 100_000).unwrap();
        let b = solve_stationary(&p, kind, TOL, 100_000).unwrap();
        same &= a.iterations == b.iterations && bits(&a) == bits(&b);
    }
    outcome(same, format!("{} configurations repeated bitwise: {same}", configs.len() + 2))
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Duration); 9] = [
        ("mesh-independent multigrid convergence", mesh_independence, Duration::from_secs(60)),
        ("solver ordering MG < SOR < Jacobi", solver_ordering, Duration::from_secs(120)),
        ("agreement with dense oracle", oracle_agreement, Duration::from_secs(1)),
        ("second-order discretisation error", discretization_order, Duration::from_secs(30)),
        ("par cost semantics", par_semantics, Duration::from_secs(1)),
        ("timing arithmetic", timing_arithmetic, Duration::from_secs(1)),
        ("transfer operator algebra", operator_algebra, Duration::from_secs(1)),
        ("fixed-point fidelity", fixed_point_fidelity, Duration::from_secs(30)),
        ("determinism", determinism, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (k, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let pass = out.pass && took <= *limit;
        failures += usize::from(!pass);
        println!(
            "{} [{}] {name}: {} ({:.2} s, limit {} s)",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            out.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
