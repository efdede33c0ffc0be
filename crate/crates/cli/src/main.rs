use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mgkit::bench::{read_csv, run_suite, to_markdown, verify_manufactured, write_csv, BenchCase, SolverChoice, SuiteOptions};
use mgkit::smoothers::StationaryConfig;
use mgkit::{
    solve_mg, solve_stationary_with, ArithmeticMode, CostExpr, CostReport, GridDims, Ordering, Parallelism,
    PoissonProblem, QFormat, ReferenceTimes, RestrictionKind, SmootherKind, SolveReport, SolverConfig,
};

/// Geometric multigrid and relaxation solvers for the 2D Poisson equation.
#[derive(Parser)]
#[command(name = "mgkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the manufactured sine problem once.
    Solve(SolveArgs),
    /// Run a solver/size sweep and write CSV.
    Bench(BenchArgs),
    /// Evaluate a cost expression under par timing semantics.
    Cost(CostArgs),
    /// Check second-order convergence of the discretization error.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Mg,
    Jacobi,
    Sor,
}

#[derive(Clone, Copy, ValueEnum)]
enum RestrictionArg {
    Full,
    Half,
    Injection,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderingArg {
    Lex,
    Rb,
}

#[derive(Clone, Copy, ValueEnum)]
enum SmootherArg {
    Gs,
    Jacobi,
    Sor,
}

#[derive(Args)]
struct MgOptions {
    /// Pre-smoothing sweeps.
    #[arg(long, default_value_t = 2)]
    nu1: usize,
    /// Post-smoothing sweeps.
    #[arg(long, default_value_t = 2)]
    nu2: usize,
    /// Multigrid smoother.
    #[arg(long, value_enum, default_value = "gs")]
    smoother: SmootherArg,
    /// SOR relaxation factor.
    #[arg(long, default_value_t = 1.5)]
    omega: f64,
    #[arg(long, value_enum, default_value = "full")]
    restriction: RestrictionArg,
    #[arg(long, value_enum, default_value = "lex")]
    ordering: OrderingArg,
    /// Run in fixed-point arithmetic, e.g. `q15.16`.
    #[arg(long, value_name = "qI.F")]
    fixed: Option<QFormat>,
    #[arg(long, default_value_t = 100)]
    max_cycles: usize,
}

impl MgOptions {
    fn config(&self, tol: f64) -> SolverConfig {
        SolverConfig {
            smoother: match self.smoother {
                SmootherArg::Gs => SmootherKind::GaussSeidel,
                SmootherArg::Jacobi => SmootherKind::Jacobi,
                SmootherArg::Sor => SmootherKind::Sor(self.omega),
            },
            ordering: match self.ordering {
                OrderingArg::Lex => Ordering::Lexicographic,
                OrderingArg::Rb => Ordering::RedBlack,
            },
            nu1: self.nu1,
            nu2: self.nu2,
            restriction: match self.restriction {
                RestrictionArg::Full => RestrictionKind::FullWeighting,
                RestrictionArg::Half => RestrictionKind::HalfWeighting,
                RestrictionArg::Injection => RestrictionKind::Injection,
            },
            tol,
            max_cycles: self.max_cycles,
            arithmetic: self.fixed.map_or(ArithmeticMode::Real, ArithmeticMode::Fixed),
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "mg")]
    solver: SolverArg,
    /// Interior points per side (a power of two).
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Sweep limit for Jacobi and SOR (default 10·N²).
    #[arg(long)]
    max_iter: Option<usize>,
    #[command(flatten)]
    mg: MgOptions,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "mg,jacobi,sor")]
    solvers: Vec<SolverChoice>,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Output CSV path.
    #[arg(long)]
    csv: PathBuf,
    /// Reference times CSV (`solver,interior,time_s`) for speedups.
    #[arg(long = "ref", value_name = "TIMES_CSV")]
    reference: Option<PathBuf>,
    /// Clock frequency in MHz for modeled execution times.
    #[arg(long, value_name = "MHZ")]
    fmax: Option<f64>,
    /// Cost-model granularity: `seq`, `full`, or a block width.
    #[arg(long, default_value = "full")]
    parallelism: Parallelism,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Permit interiors above 1024.
    #[arg(long)]
    allow_large: bool,
    /// Also print a markdown table.
    #[arg(long)]
    markdown: bool,
    #[command(flatten)]
    mg: MgOptions,
}

#[derive(Args)]
struct CostArgs {
    /// Prefix expression, e.g. `seq(assign,par(assign,assign),loop(4,assign))`.
    #[arg(long)]
    expr: CostExpr,
    #[arg(long, value_name = "MHZ")]
    fmax: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

/// Failure of the requested run itself, as opposed to bad input.
struct NotConverged;

fn dims(n: usize) -> anyhow::Result<GridDims> {
    Ok(GridDims::from_interior(n)?)
}

fn print_report(label: &str, n: usize, r: &SolveReport) {
    println!("solver:          {label}");
    println!("interior:        {n}x{n}");
    println!("iterations:      {}", r.iterations);
    println!("initial residual {:.6e}", r.initial_residual_norm);
    println!("final residual   {:.6e}", r.final_residual_norm);
    println!("converged:       {}", r.converged);
    println!("work:            {:.2}", r.work);
    println!("wall time (s):   {:.6e}", r.wall_time);
    if r.saturated {
        println!("saturated:       true");
    }
}

fn solve(args: &SolveArgs) -> anyhow::Result<Result<(), NotConverged>> {
    let d = dims(args.size)?;
    let p = PoissonProblem::manufactured(d);
    let cfg = args.mg.config(args.tol);
    let stationary = |kind| {
        let sc = StationaryConfig {
            ordering: cfg.ordering,
            arithmetic: cfg.arithmetic,
            max_iter: args.max_iter,
            ..StationaryConfig::new(kind, args.tol)
        };
        solve_stationary_with(&p, &sc)
    };
    let (label, report) = match args.solver {
        SolverArg::Mg => ("mg".to_string(), solve_mg(&p, &cfg)?),
        SolverArg::Jacobi => ("jacobi".to_string(), stationary(SmootherKind::Jacobi)?),
        SolverArg::Sor => (format!("sor (omega {})", args.mg.omega), stationary(SmootherKind::Sor(args.mg.omega))?),
    };
    print_report(&label, args.size, &report);
    Ok(if report.converged { Ok(()) } else { Err(NotConverged) })
}

fn bench(args: &BenchArgs) -> anyhow::Result<Result<(), NotConverged>> {
    if !args.allow_large {
        if let Some(n) = args.sizes.iter().find(|&&n| n > 1024) {
            bail!("interior {n} exceeds 1024; pass --allow-large to run it");
        }
    }
    let cfg = args.mg.config(args.tol);
    let mut cases = Vec::new();
    for &solver in &args.solvers {
        let solver = match solver {
            SolverChoice::Sor(_) => SolverChoice::Sor(args.mg.omega),
            s => s,
        };
        for &n in &args.sizes {
            cases.push(BenchCase { repetitions: args.repetitions, ..BenchCase::new(solver, dims(n)?, cfg) });
        }
    }
    let reference_times = match &args.reference {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            Some(ReferenceTimes::from_csv(file)?)
        }
        None => None,
    };
    let opts = SuiteOptions {
        reference_times,
        fmax_mhz: args.fmax,
        cost_model: Some(args.parallelism),
        threads: args.threads,
    };
    let rows = run_suite(&cases, &opts)?;
    let out = File::create(&args.csv).with_context(|| format!("creating {}", args.csv.display()))?;
    write_csv(&rows, BufWriter::new(out))?;
    // Read back so a malformed file is caught here rather than downstream.
    read_csv(File::open(&args.csv)?)?;
    if args.markdown {
        print!("{}", to_markdown(&rows, args.repetitions));
    }
    for r in rows.iter().filter(|r| !r.converged()) {
        eprintln!(
            "not converged: {} {}x{} residual {:.3e} > {}",
            r.solver, r.interior, r.interior, r.final_residual, r.tol
        );
    }
    println!("wrote {} rows to {}", rows.len(), args.csv.display());
    Ok(if rows.iter().all(|r| r.converged()) { Ok(()) } else { Err(NotConverged) })
}

fn cost(args: &CostArgs) -> anyhow::Result<Result<(), NotConverged>> {
    let report = CostReport::of(&args.expr, args.fmax)?;
    println!("cycles: {}", report.cycles);
    if let (Some(f), Some(t)) = (report.fmax_mhz, report.execution_time) {
        println!("time at {f} MHz: {t:.6e} s");
    }
    Ok(Ok(()))
}

fn verify(args: &VerifyArgs) -> anyhow::Result<Result<(), NotConverged>> {
    let mut sizes = args.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        bail!("verify needs at least two sizes");
    }
    let cfg = SolverConfig { tol: args.tol, ..SolverConfig::default() };
    let mut all_ok = true;
    println!("{:>8} {:>8} {:>12} {:>12} {:>8} {:>7} reliable", "coarse", "fine", "err coarse", "err fine", "ratio", "order");
    for w in sizes.windows(2) {
        let (c, f) = (dims(w[0])?, dims(w[1])?);
        if f != c.refine() {
            bail!("sizes must double: {} then {}", w[0], w[1]);
        }
        let rep = verify_manufactured(c, &cfg)?;
        all_ok &= rep.coarse.converged && rep.fine.converged;
        println!(
            "{:>8} {:>8} {:>12.4e} {:>12.4e} {:>8.3} {:>7.3} {}",
            w[0],
            w[1],
            rep.coarse.max_error,
            rep.fine.max_error,
            rep.error_ratio,
            rep.order.unwrap_or(f64::NAN),
            rep.reliable
        );
    }
    Ok(if all_ok { Ok(()) } else { Err(NotConverged) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Cost(a) => cost(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(NotConverged)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
