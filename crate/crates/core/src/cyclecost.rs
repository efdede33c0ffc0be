//! Static clock-cycle model under `par` timing semantics: every assignment
//! takes one cycle, a sequence costs the sum of its parts, a parallel block
//! the maximum of its branches, and everything else is free.

use std::fmt;
use std::str::FromStr;

use crate::error::{MgError, Result};
use crate::grid::GridDims;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CostExpr {
    Assign,
    Seq(Vec<CostExpr>),
    Par(Vec<CostExpr>),
    Loop(u64, Box<CostExpr>),
}

impl CostExpr {
    pub fn seq(children: impl IntoIterator<Item = CostExpr>) -> Self {
        CostExpr::Seq(children.into_iter().collect())
    }

    pub fn par(children: impl IntoIterator<Item = CostExpr>) -> Self {
        CostExpr::Par(children.into_iter().collect())
    }

    pub fn repeat(count: u64, body: CostExpr) -> Self {
        CostExpr::Loop(count, Box::new(body))
    }

    /// A `par` block of `n` independent assignments.
    pub fn par_assigns(n: u64) -> Self {
        CostExpr::Par(vec![CostExpr::Assign; n as usize])
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            CostExpr::Assign => 1,
            CostExpr::Seq(xs) | CostExpr::Par(xs) => 1 + xs.iter().map(CostExpr::size).sum::<usize>(),
            CostExpr::Loop(_, body) => 1 + body.size(),
        }
    }
}

/// Clock cycles of `e`. Saturates at `u64::MAX`.
pub fn evaluate(e: &CostExpr) -> u64 {
    match e {
        CostExpr::Assign => 1,
        CostExpr::Seq(xs) => xs.iter().map(evaluate).fold(0, u64::saturating_add),
        CostExpr::Par(xs) => xs.iter().map(evaluate).max().unwrap_or(0),
        CostExpr::Loop(n, body) => n.saturating_mul(evaluate(body)),
    }
}

impl fmt::Display for CostExpr {
    /// Prefix form, e.g. `seq(assign,par(assign,assign),loop(8,assign))`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, xs: &[CostExpr]| {
            write!(f, "{name}(")?;
            for (k, x) in xs.iter().enumerate() {
                if k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str(")")
        };
        match self {
            CostExpr::Assign => f.write_str("assign"),
            CostExpr::Seq(xs) => list(f, "seq", xs),
            CostExpr::Par(xs) => list(f, "par", xs),
            CostExpr::Loop(n, body) => write!(f, "loop({n},{body})"),
        }
    }
}

impl FromStr for CostExpr {
    type Err = MgError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(e)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> MgError {
        MgError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn word(&mut self) -> &[u8] {
        self.skip_ws();
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(u8::is_ascii_alphanumeric) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn expr(&mut self) -> Result<CostExpr> {
        let start = self.pos;
        match self.word() {
            b"assign" => Ok(CostExpr::Assign),
            b"seq" => Ok(CostExpr::Seq(self.children()?)),
            b"par" => Ok(CostExpr::Par(self.children()?)),
            b"loop" => {
                self.eat(b'(')?;
                let count_at = self.pos;
                let digits = self.word();
                let count = std::str::from_utf8(digits)
                    .ok()
                    .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                    .and_then(|d| d.parse::<u64>().ok())
                    .ok_or(MgError::Parse { pos: count_at, msg: "expected loop count".into() })?;
                self.eat(b',')?;
                let body = self.expr()?;
                self.eat(b')')?;
                Ok(CostExpr::Loop(count, Box::new(body)))
            }
            _ => {
                self.pos = start;
                self.skip_ws();
                Err(self.error("expected assign, seq, par or loop"))
            }
        }
    }

    fn children(&mut self) -> Result<Vec<CostExpr>> {
        self.eat(b'(')?;
        let mut out = Vec::new();
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b')') {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            self.skip_ws();
            match self.src.get(self.pos) {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return Err(self.error("expected ',' or ')'")),
            }
        }
    }
}

/// The multigrid kernels of the hardware design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    /// One relaxation sweep (two colour phases when parallel).
    Smoother,
    FindResidual,
    /// Writes the coarse grid of `dims`.
    RestrictResidual,
    /// Writes `dims` from its coarse grid.
    Prolongate,
    Correct,
}

impl Kernel {
    pub const ALL: [Kernel; 5] = [
        Kernel::Smoother,
        Kernel::FindResidual,
        Kernel::RestrictResidual,
        Kernel::Prolongate,
        Kernel::Correct,
    ];
}

/// How many independent point updates share one `par` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Parallelism {
    #[default]
    Sequential,
    /// Blocks of at most `width` point updates.
    Blocked(u64),
    /// Every independent update of a phase in a single block.
    Full,
}

impl From<bool> for Parallelism {
    fn from(parallel: bool) -> Self {
        if parallel {
            Parallelism::Full
        } else {
            Parallelism::Sequential
        }
    }
}

impl FromStr for Parallelism {
    type Err = MgError;

    /// `seq`, `full`, or a block width such as `64`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "seq" => Ok(Parallelism::Sequential),
            "full" => Ok(Parallelism::Full),
            w => match w.parse::<u64>() {
                Ok(width) if width > 0 => Ok(Parallelism::Blocked(width)),
                _ => Err(MgError::Parse { pos: 0, msg: format!("expected seq, full or a positive width, got {w:?}") }),
            },
        }
    }
}

/// Independent-update phases of a kernel: point counts per phase.
fn phases(kernel: Kernel, dims: GridDims) -> Vec<u64> {
    let n = dims.interior_points() as u64;
    match kernel {
        Kernel::Smoother => {
            let red = n.div_ceil(2);
            [red, n - red].into_iter().filter(|&c| c > 0).collect()
        }
        Kernel::RestrictResidual => {
            let c = dims.coarsen().map_or(0, |d| d.interior_points() as u64);
            vec![c]
        }
        Kernel::FindResidual | Kernel::Prolongate | Kernel::Correct => vec![n],
    }
}

fn phase_tree(count: u64, mode: Parallelism) -> CostExpr {
    match mode {
        Parallelism::Sequential => CostExpr::repeat(count, CostExpr::Assign),
        Parallelism::Full => CostExpr::par_assigns(count),
        Parallelism::Blocked(width) => {
            let width = width.max(1);
            let (full, rem) = (count / width, count % width);
            let mut parts = vec![CostExpr::repeat(full, CostExpr::par_assigns(width))];
            if rem > 0 {
                parts.push(CostExpr::par_assigns(rem));
            }
            CostExpr::Seq(parts)
        }
    }
}

fn phase_cycles(count: u64, mode: Parallelism) -> u64 {
    match mode {
        Parallelism::Sequential => count,
        Parallelism::Full => u64::from(count > 0),
        Parallelism::Blocked(width) => count.div_ceil(width.max(1)),
    }
}

/// Cost tree of one kernel invocation on `dims`.
pub fn kernel_cost(kernel: Kernel, dims: GridDims, parallel: impl Into<Parallelism>) -> CostExpr {
    let mode = parallel.into();
    let mut trees: Vec<_> = phases(kernel, dims).into_iter().map(|c| phase_tree(c, mode)).collect();
    if trees.len() == 1 {
        trees.pop().unwrap()
    } else {
        CostExpr::Seq(trees)
    }
}

/// `evaluate(kernel_cost(..))` in closed form, without building the tree.
pub fn kernel_cycles(kernel: Kernel, dims: GridDims, parallel: impl Into<Parallelism>) -> u64 {
    let mode = parallel.into();
    phases(kernel, dims).into_iter().map(|c| phase_cycles(c, mode)).sum()
}

/// Smoothing sweeps per V-cycle level used by the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleShape {
    pub nu1: u64,
    pub nu2: u64,
}

/// Cost tree of one V-cycle descending from `dims` to the 1×1 level.
pub fn vcycle_cost(dims: GridDims, shape: CycleShape, parallel: impl Into<Parallelism>) -> CostExpr {
    let mode = parallel.into();
    match dims.coarsen() {
        None => CostExpr::Assign,
        Some(coarse) => CostExpr::seq([
            CostExpr::repeat(shape.nu1, kernel_cost(Kernel::Smoother, dims, mode)),
            kernel_cost(Kernel::FindResidual, dims, mode),
            kernel_cost(Kernel::RestrictResidual, dims, mode),
            vcycle_cost(coarse, shape, mode),
            kernel_cost(Kernel::Prolongate, dims, mode),
            kernel_cost(Kernel::Correct, dims, mode),
            CostExpr::repeat(shape.nu2, kernel_cost(Kernel::Smoother, dims, mode)),
        ]),
    }
}

pub fn vcycle_cycles(dims: GridDims, shape: CycleShape, parallel: impl Into<Parallelism>) -> u64 {
    let mode = parallel.into();
    match dims.coarsen() {
        None => 1,
        Some(coarse) => {
            let k = |kernel| kernel_cycles(kernel, dims, mode);
            (shape.nu1 + shape.nu2) * k(Kernel::Smoother)
                + k(Kernel::FindResidual)
                + k(Kernel::RestrictResidual)
                + vcycle_cycles(coarse, shape, mode)
                + k(Kernel::Prolongate)
                + k(Kernel::Correct)
        }
    }
}

/// Modeled cycles of a multigrid solve: an initial residual check, then per
/// V-cycle the cycle itself plus a residual check.
pub fn mg_solve_cycles(dims: GridDims, shape: CycleShape, cycles: u64, parallel: impl Into<Parallelism>) -> u64 {
    let mode = parallel.into();
    let check = kernel_cycles(Kernel::FindResidual, dims, mode);
    check + cycles * (vcycle_cycles(dims, shape, mode) + check)
}

/// Modeled cycles of a stationary solve: an initial residual check, then per
/// iteration one sweep plus a residual check.
pub fn stationary_solve_cycles(dims: GridDims, iterations: u64, parallel: impl Into<Parallelism>) -> u64 {
    let mode = parallel.into();
    let check = kernel_cycles(Kernel::FindResidual, dims, mode);
    check + iterations * (kernel_cycles(Kernel::Smoother, dims, mode) + check)
}

/// Seconds taken by `cycles` clock cycles at `fmax_mhz`.
pub fn execution_time(cycles: u64, fmax_mhz: f64) -> Result<f64> {
    if !(fmax_mhz > 0.0) || !fmax_mhz.is_finite() {
        return Err(MgError::InvalidConfig(format!("fmax must be positive, got {fmax_mhz}")));
    }
    Ok(cycles as f64 / (fmax_mhz * 1e6))
}

/// `t_ref / t_new`.
pub fn speedup(t_ref: f64, t_new: f64) -> Result<f64> {
    if !(t_new > 0.0) || !(t_ref > 0.0) || !t_ref.is_finite() || !t_new.is_finite() {
        return Err(MgError::InvalidConfig(format!(
            "times must be positive, got reference {t_ref} and new {t_new}"
        )));
    }
    Ok(t_ref / t_new)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub cycles: u64,
    pub fmax_mhz: Option<f64>,
    /// Present exactly when `fmax_mhz` is.
    pub execution_time: Option<f64>,
}

impl CostReport {
    pub fn new(cycles: u64, fmax_mhz: Option<f64>) -> Result<Self> {
        let execution_time = fmax_mhz.map(|f| execution_time(cycles, f)).transpose()?;
        Ok(CostReport { cycles, fmax_mhz, execution_time })
    }

    pub fn of(e: &CostExpr, fmax_mhz: Option<f64>) -> Result<Self> {
        CostReport::new(evaluate(e), fmax_mhz)
    }
}
