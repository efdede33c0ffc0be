//! Residual, restriction, prolongation and coarse-grid correction.
//!
//! [`restrict`] and [`prolong`] are the classical index stencils: coarse
//! point `(I, J)` sits on fine point `(2I, 2J)` in boundary-inclusive
//! coordinates and taps landing on the boundary ring read zero.
//!
//! A `2^l` interior grid and its `2^(l-1)` coarsening do not nest on the unit
//! square (the fine grid has an odd number of cells), so the V-cycle uses
//! [`GridTransfer`]: the same operators built from node positions. Bilinear
//! interpolation is evaluated at the true fine coordinates and full
//! weighting is its row-normalised transpose. On nested grids both reduce to
//! the index stencils.

use serde::{Deserialize, Serialize};

use crate::error::{MgError, Result};
use crate::fixedpoint::{Arithmetic, RealArithmetic};
use crate::grid::{stencil_defect, Grid, Grid2D, Level, PoissonProblem};

/// Fine-to-coarse transfer of residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RestrictionKind {
    /// `(1/16)·[1 2 1; 2 4 2; 1 2 1]`
    #[default]
    #[serde(rename = "full")]
    FullWeighting,
    /// `(1/8)·[0 1 0; 1 4 1; 0 1 0]`
    #[serde(rename = "half")]
    HalfWeighting,
    /// Copies the coincident fine value. In the V-cycle the coarse nodes fall
    /// between fine nodes, so the sample mixes neighbouring values; combined
    /// with red-black smoothing this diverges.
    Injection,
}

/// Coarse-to-fine transfer of corrections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProlongationKind {
    #[default]
    Bilinear,
}

/// `r = f − A_h u`.
pub fn residual(p: &PoissonProblem, u: &Grid2D) -> Result<Grid2D> {
    p.rhs().check_same_dims(u)?;
    Ok(residual_in(&RealArithmetic, p.level(), u, p.rhs()))
}

pub fn restrict(r_fine: &Grid2D, kind: RestrictionKind) -> Result<Grid2D> {
    if r_fine.dims().coarsen().is_none() {
        return Err(MgError::NothingToCoarsen(r_fine.dims().level()));
    }
    Ok(restrict_in(&RealArithmetic, r_fine, kind))
}

/// Bilinear interpolation onto the next finer grid.
pub fn prolong(e_coarse: &Grid2D) -> Result<Grid2D> {
    Ok(prolong_in(&RealArithmetic, e_coarse, ProlongationKind::Bilinear))
}

/// `u + e` on the interior.
pub fn correct(u: &Grid2D, e_fine: &Grid2D) -> Result<Grid2D> {
    u.check_same_dims(e_fine)?;
    let mut out = u.clone();
    correct_in(&RealArithmetic, &mut out, e_fine);
    Ok(out)
}

pub(crate) fn residual_in<A: Arithmetic>(
    a: &A,
    level: Level,
    u: &Grid<A::Value>,
    f: &Grid<A::Value>,
) -> Grid<A::Value> {
    let inv_h2 = a.from_f64(level.inv_h2());
    let four = a.from_f64(4.0);
    let n = u.interior();
    let mut out = Grid::zeros(u.dims(), u.spacing());
    for i in 1..=n {
        for j in 1..=n {
            let au = a.mul(stencil_defect(a, u, four, i, j), inv_h2);
            out.put(i, j, a.sub(f.get(i, j), au));
        }
    }
    out
}

pub(crate) fn restrict_in<A: Arithmetic>(a: &A, fine: &Grid<A::Value>, kind: RestrictionKind) -> Grid<A::Value> {
    let coarse_dims = fine.dims().coarsen().expect("restriction below the coarsest level");
    let mut out = Grid::zeros(coarse_dims, 2.0 * fine.spacing());
    let nc = coarse_dims.interior();
    let two = a.from_f64(2.0);
    let four = a.from_f64(4.0);
    let sixteenth = a.from_f64(1.0 / 16.0);
    let eighth = a.from_f64(1.0 / 8.0);
    for ci in 1..=nc {
        for cj in 1..=nc {
            let (i, j) = (2 * ci, 2 * cj);
            let v = match kind {
                RestrictionKind::Injection => fine.get(i, j),
                RestrictionKind::FullWeighting => {
                    let edges = a.add(
                        a.add(fine.get(i - 1, j), fine.get(i + 1, j)),
                        a.add(fine.get(i, j - 1), fine.get(i, j + 1)),
                    );
                    let corners = a.add(
                        a.add(fine.get(i - 1, j - 1), fine.get(i - 1, j + 1)),
                        a.add(fine.get(i + 1, j - 1), fine.get(i + 1, j + 1)),
                    );
                    let sum = a.add(a.add(a.mul(four, fine.get(i, j)), a.mul(two, edges)), corners);
                    a.mul(sum, sixteenth)
                }
                RestrictionKind::HalfWeighting => {
                    let edges = a.add(
                        a.add(fine.get(i - 1, j), fine.get(i + 1, j)),
                        a.add(fine.get(i, j - 1), fine.get(i, j + 1)),
                    );
                    a.mul(a.add(a.mul(four, fine.get(i, j)), edges), eighth)
                }
            };
            out.put(ci, cj, v);
        }
    }
    out
}

pub(crate) fn prolong_in<A: Arithmetic>(a: &A, coarse: &Grid<A::Value>, kind: ProlongationKind) -> Grid<A::Value> {
    let ProlongationKind::Bilinear = kind;
    let fine_dims = coarse.dims().refine();
    let mut out = Grid::zeros(fine_dims, coarse.spacing() / 2.0);
    let n = fine_dims.interior();
    let half = a.from_f64(0.5);
    let quarter = a.from_f64(0.25);
    for i in 1..=n {
        for j in 1..=n {
            let v = match (i % 2 == 0, j % 2 == 0) {
                (true, true) => coarse.get(i / 2, j / 2),
                (true, false) => a.mul(a.add(coarse.get(i / 2, j / 2), coarse.get(i / 2, j / 2 + 1)), half),
                (false, true) => a.mul(a.add(coarse.get(i / 2, j / 2), coarse.get(i / 2 + 1, j / 2)), half),
                (false, false) => {
                    let (ci, cj) = (i / 2, j / 2);
                    let s = a.add(
                        a.add(coarse.get(ci, cj), coarse.get(ci, cj + 1)),
                        a.add(coarse.get(ci + 1, cj), coarse.get(ci + 1, cj + 1)),
                    );
                    a.mul(s, quarter)
                }
            };
            out.put(i, j, v);
        }
    }
    out
}

pub(crate) fn correct_in<A: Arithmetic>(a: &A, u: &mut Grid<A::Value>, e: &Grid<A::Value>) {
    let n = u.interior();
    for i in 1..=n {
        for j in 1..=n {
            let v = a.add(u.get(i, j), e.get(i, j));
            u.put(i, j, v);
        }
    }
}

/// One-dimensional linear map as sparse rows: `out[k] = Σ w · in[idx]`.
/// Indices are boundary-inclusive; boundary rows are empty.
#[derive(Debug, Clone, PartialEq)]
struct Weights1D {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Weights1D {
    /// Linear interpolation from `coarse_n` to `fine_n` interior nodes, both
    /// uniformly spaced on `[0, 1]` with zero end values.
    fn interpolation(fine_n: usize, coarse_n: usize) -> Self {
        Weights1D {
            rows: (0..fine_n + 2)
                .map(|i| {
                    if i == 0 || i == fine_n + 1 {
                        return Vec::new();
                    }
                    sample(i as f64 / (fine_n + 1) as f64, coarse_n)
                })
                .collect(),
        }
    }

    /// Linear sampling of a fine field at the coarse nodes.
    fn injection(fine_n: usize, coarse_n: usize) -> Self {
        Weights1D {
            rows: (0..coarse_n + 2)
                .map(|k| {
                    if k == 0 || k == coarse_n + 1 {
                        return Vec::new();
                    }
                    sample(k as f64 / (coarse_n + 1) as f64, fine_n)
                })
                .collect(),
        }
    }

    /// Transpose of [`Weights1D::interpolation`] with every row scaled to sum to one.
    fn full_weighting(fine_n: usize, coarse_n: usize) -> Self {
        let interp = Weights1D::interpolation(fine_n, coarse_n);
        let mut rows = vec![Vec::new(); coarse_n + 2];
        for (i, row) in interp.rows.iter().enumerate() {
            for &(k, w) in row {
                rows[k].push((i, w));
            }
        }
        for row in &mut rows {
            let total: f64 = row.iter().map(|&(_, w)| w).sum();
            for (_, w) in row.iter_mut() {
                *w /= total;
            }
        }
        Weights1D { rows }
    }

    fn to_arith<A: Arithmetic>(&self, a: &A) -> Vec<Vec<(usize, A::Value)>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(k, w)| (k, a.from_f64(w))).collect())
            .collect()
    }
}

/// Hat-function weights of the interior nodes of an `n`-node grid at `x ∈ (0, 1)`.
fn sample(x: f64, n: usize) -> Vec<(usize, f64)> {
    let s = x * (n + 1) as f64;
    let k = (s.floor() as usize).min(n);
    let t = s - k as f64;
    let mut out = Vec::with_capacity(2);
    // Tolerance absorbs round-off when a node coincides with `x`.
    const EPS: f64 = 1e-12;
    if k >= 1 && 1.0 - t > EPS {
        out.push((k, 1.0 - t));
    }
    if k < n && t > EPS {
        out.push((k + 1, t));
    }
    out
}

/// Applies `out(I, J) = Σ rows_I(i) · cols_J(j) · x(i, j)`.
fn apply_separable<A: Arithmetic>(
    a: &A,
    rows: &[Vec<(usize, A::Value)>],
    cols: &[Vec<(usize, A::Value)>],
    x: &Grid<A::Value>,
    out: &mut Grid<A::Value>,
) {
    let n_in = x.dims().total();
    let n_out = out.interior();
    // Contract columns first: tmp(i, J) = Σ_j cols_J(j) x(i, j).
    let mut tmp = vec![A::Value::default(); n_in * (n_out + 2)];
    for i in 1..n_in - 1 {
        for (jj, col) in cols.iter().enumerate() {
            let mut acc = A::Value::default();
            for &(j, w) in col {
                acc = a.add(acc, a.mul(w, x.get(i, j)));
            }
            tmp[i * (n_out + 2) + jj] = acc;
        }
    }
    for (ii, row) in rows.iter().enumerate().take(n_out + 1).skip(1) {
        for jj in 1..=n_out {
            let mut acc = A::Value::default();
            for &(i, w) in row {
                acc = a.add(acc, a.mul(w, tmp[i * (n_out + 2) + jj]));
            }
            out.put(ii, jj, acc);
        }
    }
}

/// Position-based transfers between a unit-square grid and its coarsening.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTransfer {
    fine: Level,
    coarse: Level,
    interpolation: Weights1D,
    full_weighting: Weights1D,
    injection: Weights1D,
}

impl GridTransfer {
    pub fn new(fine: Level, coarse: Level) -> Result<Self> {
        if fine.dims.coarsen() != Some(coarse.dims) {
            return Err(MgError::DimensionMismatch {
                expected: fine.dims.interior() / 2,
                actual: coarse.dims.interior(),
            });
        }
        let (nf, nc) = (fine.dims.interior(), coarse.dims.interior());
        Ok(GridTransfer {
            fine,
            coarse,
            interpolation: Weights1D::interpolation(nf, nc),
            full_weighting: Weights1D::full_weighting(nf, nc),
            injection: Weights1D::injection(nf, nc),
        })
    }

    pub fn fine(&self) -> Level {
        self.fine
    }

    pub fn coarse(&self) -> Level {
        self.coarse
    }

    pub fn restrict(&self, r_fine: &Grid2D, kind: RestrictionKind) -> Result<Grid2D> {
        if r_fine.dims() != self.fine.dims {
            return Err(MgError::DimensionMismatch {
                expected: self.fine.dims.interior(),
                actual: r_fine.interior(),
            });
        }
        Ok(self.in_arith(&RealArithmetic).restrict(&RealArithmetic, r_fine, kind))
    }

    pub fn prolong(&self, e_coarse: &Grid2D) -> Result<Grid2D> {
        if e_coarse.dims() != self.coarse.dims {
            return Err(MgError::DimensionMismatch {
                expected: self.coarse.dims.interior(),
                actual: e_coarse.interior(),
            });
        }
        Ok(self.in_arith(&RealArithmetic).prolong(&RealArithmetic, e_coarse))
    }

    pub(crate) fn in_arith<A: Arithmetic>(&self, a: &A) -> TransferIn<A::Value> {
        TransferIn {
            fine: self.fine,
            coarse: self.coarse,
            interpolation: self.interpolation.to_arith(a),
            full_weighting: self.full_weighting.to_arith(a),
            injection: self.injection.to_arith(a),
            half: a.from_f64(0.5),
        }
    }
}

/// [`GridTransfer`] weights converted into a particular arithmetic.
pub(crate) struct TransferIn<V> {
    fine: Level,
    coarse: Level,
    interpolation: Vec<Vec<(usize, V)>>,
    full_weighting: Vec<Vec<(usize, V)>>,
    injection: Vec<Vec<(usize, V)>>,
    half: V,
}

impl<V: Copy + Default> TransferIn<V> {
    pub(crate) fn restrict<A: Arithmetic<Value = V>>(&self, a: &A, fine: &Grid<V>, kind: RestrictionKind) -> Grid<V> {
        let mut out = Grid::zeros(self.coarse.dims, self.coarse.spacing);
        match kind {
            RestrictionKind::FullWeighting => {
                apply_separable(a, &self.full_weighting, &self.full_weighting, fine, &mut out)
            }
            RestrictionKind::Injection => apply_separable(a, &self.injection, &self.injection, fine, &mut out),
            // Half weighting is the mean of full weighting along one axis with
            // injection along the other, taken both ways.
            RestrictionKind::HalfWeighting => {
                let mut other = Grid::zeros(self.coarse.dims, self.coarse.spacing);
                apply_separable(a, &self.full_weighting, &self.injection, fine, &mut out);
                apply_separable(a, &self.injection, &self.full_weighting, fine, &mut other);
                let n = out.interior();
                for i in 1..=n {
                    for j in 1..=n {
                        let v = a.mul(a.add(out.get(i, j), other.get(i, j)), self.half);
                        out.put(i, j, v);
                    }
                }
            }
        }
        out
    }

    pub(crate) fn prolong<A: Arithmetic<Value = V>>(&self, a: &A, coarse: &Grid<V>) -> Grid<V> {
        let mut out = Grid::zeros(self.fine.dims, self.fine.spacing);
        apply_separable(a, &self.interpolation, &self.interpolation, coarse, &mut out);
        out
    }
}
