//! Problem domain: square grids with a one-cell Dirichlet boundary ring,
//! the level hierarchy, and the 5-point negative Laplacian.

use crate::error::{MgError, Result};
use crate::fixedpoint::{Arithmetic, RealArithmetic};

/// Dimensions of a square grid at a given level: `interior = 2^level` unknowns
/// per side and `interior + 2` stored points per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridDims {
    level: u32,
}

impl GridDims {
    pub fn new(level: u32) -> Self {
        assert!(level < 31, "level {level} too large");
        GridDims { level }
    }

    /// Dimensions with the given number of interior points per side.
    pub fn from_interior(interior: usize) -> Result<Self> {
        if interior == 0 || !interior.is_power_of_two() {
            return Err(MgError::NotPowerOfTwo(interior));
        }
        Ok(GridDims::new(interior.trailing_zeros()))
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn interior(&self) -> usize {
        1 << self.level
    }

    /// Points per side including the boundary ring.
    pub fn total(&self) -> usize {
        self.interior() + 2
    }

    pub fn interior_points(&self) -> usize {
        self.interior() * self.interior()
    }

    pub fn coarsen(&self) -> Option<GridDims> {
        (self.level >= 1).then(|| GridDims::new(self.level - 1))
    }

    pub fn refine(&self) -> GridDims {
        GridDims::new(self.level + 1)
    }

    /// Spacing of this grid as the finest level on the unit square.
    pub fn unit_spacing(&self) -> f64 {
        1.0 / (self.interior() + 1) as f64
    }
}

/// Dense row-major grid storage with a boundary ring that is kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    dims: GridDims,
    spacing: f64,
    values: Vec<T>,
}

/// Real-valued grid.
pub type Grid2D = Grid<f64>;

impl<T: Copy + Default> Grid<T> {
    pub fn zeros(dims: GridDims, spacing: f64) -> Self {
        let n = dims.total();
        Grid {
            dims,
            spacing,
            values: vec![T::default(); n * n],
        }
    }

    /// Fills interior point `(i, j)` with `f(i, j)`; the boundary stays zero.
    pub fn from_index_fn(dims: GridDims, spacing: f64, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut g = Self::zeros(dims, spacing);
        let n = dims.interior();
        for i in 1..=n {
            for j in 1..=n {
                let k = g.idx(i, j);
                g.values[k] = f(i, j);
            }
        }
        g
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn interior(&self) -> usize {
        self.dims.interior()
    }

    #[inline(always)]
    pub(crate) fn idx(&self, i: usize, j: usize) -> usize {
        i * self.dims.total() + j
    }

    /// Value at boundary-inclusive index `(i, j)`, `0 ≤ i, j ≤ interior + 1`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[self.idx(i, j)]
    }

    /// Sets an interior value. Panics on boundary indices.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let n = self.interior();
        assert!(
            (1..=n).contains(&i) && (1..=n).contains(&j),
            "({i}, {j}) is not an interior index of a {n}x{n} grid"
        );
        let k = self.idx(i, j);
        self.values[k] = v;
    }

    #[inline(always)]
    pub(crate) fn put(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i >= 1 && j >= 1 && i <= self.interior() && j <= self.interior());
        let k = self.idx(i, j);
        self.values[k] = v;
    }

    /// Raw boundary-inclusive storage, row-major.
    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn interior_values(&self) -> impl Iterator<Item = T> + '_ {
        let n = self.interior();
        (1..=n).flat_map(move |i| (1..=n).map(move |j| self.get(i, j)))
    }

    pub fn boundary_values(&self) -> impl Iterator<Item = T> + '_ {
        let t = self.dims.total();
        (0..t).flat_map(move |i| {
            (0..t)
                .filter(move |&j| i == 0 || j == 0 || i == t - 1 || j == t - 1)
                .map(move |j| self.get(i, j))
        })
    }

    pub fn map<U: Copy + Default>(&self, mut f: impl FnMut(T) -> U) -> Grid<U> {
        let mut out = Grid::zeros(self.dims, self.spacing);
        let n = self.interior();
        for i in 1..=n {
            for j in 1..=n {
                let k = self.idx(i, j);
                out.values[k] = f(self.values[k]);
            }
        }
        out
    }

    pub(crate) fn check_same_dims<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.dims != other.dims {
            return Err(MgError::DimensionMismatch {
                expected: self.interior(),
                actual: other.dims.interior(),
            });
        }
        Ok(())
    }
}

impl Grid2D {
    /// Samples `f(x, y)` at interior points, with `x = j·h`, `y = i·h`.
    pub fn from_fn(dims: GridDims, spacing: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        Grid::from_index_fn(dims, spacing, |i, j| f(j as f64 * spacing, i as f64 * spacing))
    }

    pub fn is_boundary_zero(&self) -> bool {
        self.boundary_values().all(|v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm_inf(&self) -> f64 {
        self.interior_values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Euclidean inner product over interior points (no `h²` weighting).
    pub fn dot(&self, other: &Grid2D) -> f64 {
        self.interior_values()
            .zip(other.interior_values())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Pointwise `self + alpha * other` on the interior.
    pub fn axpy(&self, alpha: f64, other: &Grid2D) -> Result<Grid2D> {
        self.check_same_dims(other)?;
        let mut out = self.clone();
        for (o, x) in out.values.iter_mut().zip(&other.values) {
            *o += alpha * x;
        }
        Ok(out)
    }

    pub fn scale(&self, alpha: f64) -> Grid2D {
        self.map(|v| alpha * v)
    }

    /// ∞-norm of `self − other` over the interior.
    pub fn max_abs_diff(&self, other: &Grid2D) -> f64 {
        self.interior_values()
            .zip(other.interior_values())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// One level of a coarse/fine hierarchy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub dims: GridDims,
    pub spacing: f64,
}

impl Level {
    pub fn finest(dims: GridDims) -> Self {
        Level {
            dims,
            spacing: dims.unit_spacing(),
        }
    }

    pub fn coarser(&self) -> Option<Level> {
        self.dims.coarsen().map(|dims| Level {
            dims,
            spacing: dims.unit_spacing(),
        })
    }

    /// `1/h²` for this level.
    pub fn inv_h2(&self) -> f64 {
        1.0 / (self.spacing * self.spacing)
    }
}

/// Builds the level chain from `finest` down to the 1×1 interior. Every level
/// discretises the unit square, so spacing roughly doubles per level.
pub fn make_hierarchy(finest: GridDims) -> Result<Vec<Level>> {
    if finest.level() == 0 {
        return Err(MgError::NothingToCoarsen(0));
    }
    Ok(hierarchy_from(Level::finest(finest)))
}

/// Like [`make_hierarchy`] but accepts a 1×1 finest level (a single-level chain).
pub(crate) fn hierarchy_from(finest: Level) -> Vec<Level> {
    std::iter::successors(Some(finest), Level::coarser).collect()
}

/// Discrete problem `A_h u = f` where `A_h` is the 5-point negative Laplacian
/// with homogeneous Dirichlet boundaries on the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonProblem {
    rhs: Grid2D,
}

impl PoissonProblem {
    /// Problem `−∇²u = f` with the given right-hand side samples.
    pub fn new(rhs: Grid2D) -> Self {
        PoissonProblem { rhs }
    }

    /// Problem `−∇²u = f(x, y)` on the unit square.
    pub fn from_fn(dims: GridDims, f: impl Fn(f64, f64) -> f64) -> Self {
        PoissonProblem::new(Grid2D::from_fn(dims, dims.unit_spacing(), f))
    }

    /// Problem written as `∇²u = g(x, y)`; the right-hand side is negated on ingestion.
    pub fn from_laplacian_rhs(dims: GridDims, g: impl Fn(f64, f64) -> f64) -> Self {
        PoissonProblem::from_fn(dims, |x, y| -g(x, y))
    }

    /// Manufactured problem with solution `sin(πx)·sin(πy)`, so `f = 2π²·u`.
    pub fn manufactured(dims: GridDims) -> Self {
        PoissonProblem::from_fn(dims, |x, y| 2.0 * PI * PI * manufactured_solution(x, y))
    }

    pub fn zero(dims: GridDims) -> Self {
        PoissonProblem::new(Grid2D::zeros(dims, dims.unit_spacing()))
    }

    pub fn dims(&self) -> GridDims {
        self.rhs.dims()
    }

    pub fn spacing(&self) -> f64 {
        self.rhs.spacing()
    }

    pub fn rhs(&self) -> &Grid2D {
        &self.rhs
    }

    pub fn level(&self) -> Level {
        Level {
            dims: self.dims(),
            spacing: self.spacing(),
        }
    }
}

use std::f64::consts::PI;

/// `sin(πx)·sin(πy)`.
pub fn manufactured_solution(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (PI * y).sin()
}

/// `A_h u` on the interior: `(4u − Σ neighbours)/h²`.
pub fn apply_operator(p: &PoissonProblem, u: &Grid2D) -> Result<Grid2D> {
    p.rhs.check_same_dims(u)?;
    Ok(apply_in(&RealArithmetic, p.level(), u))
}

pub(crate) fn apply_in<A: Arithmetic>(a: &A, level: Level, u: &Grid<A::Value>) -> Grid<A::Value> {
    let inv_h2 = a.from_f64(level.inv_h2());
    let four = a.from_f64(4.0);
    let n = u.interior();
    let mut out = Grid::zeros(u.dims(), u.spacing());
    for i in 1..=n {
        for j in 1..=n {
            let diff = stencil_defect(a, u, four, i, j);
            out.put(i, j, a.mul(diff, inv_h2));
        }
    }
    out
}

/// `4·u[i,j] − (u[i+1,j] + u[i−1,j] + u[i,j−1] + u[i,j+1])` in the given arithmetic.
#[inline(always)]
pub(crate) fn stencil_defect<A: Arithmetic>(a: &A, u: &Grid<A::Value>, four: A::Value, i: usize, j: usize) -> A::Value {
    let c = a.mul(four, u.get(i, j));
    a.sub(c, neighbour_sum(a, u, i, j))
}

#[inline(always)]
pub(crate) fn neighbour_sum<A: Arithmetic>(a: &A, u: &Grid<A::Value>, i: usize, j: usize) -> A::Value {
    let s = a.add(u.get(i + 1, j), u.get(i - 1, j));
    let s = a.add(s, u.get(i, j - 1));
    a.add(s, u.get(i, j + 1))
}
