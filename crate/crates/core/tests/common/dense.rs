// Dense Gaussian elimination oracle for small Poisson problems.
//
// Assembles the 5-point negative Laplacian as an explicit matrix and solves
// with partial pivoting. Shares nothing with the iterative code paths beyond
// the grid container.

use super::grid_types::*;

/// Explicit `n² × n²` matrix of the 5-point operator at spacing `h`.
pub fn assemble(n: usize, h: f64) -> Vec<Vec<f64>> {
    let m = n * n;
    let mut a = vec![vec![0.0; m]; m];
    let id = |i: usize, j: usize| i * n + j;
    for i in 0..n {
        for j in 0..n {
            let row = id(i, j);
            a[row][row] = 4.0 / (h * h);
            if i > 0 {
                a[row][id(i - 1, j)] = -1.0 / (h * h);
            }
            if i + 1 < n {
                a[row][id(i + 1, j)] = -1.0 / (h * h);
            }
            if j > 0 {
                a[row][id(i, j - 1)] = -1.0 / (h * h);
            }
            if j + 1 < n {
                a[row][id(i, j + 1)] = -1.0 / (h * h);
            }
        }
    }
    a
}

pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let m = b.len();
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..m {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..m {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Exact discrete solution of `p` by dense elimination.
pub fn dense_solve(p: &PoissonProblem) -> Grid2D {
    let n = p.dims().interior();
    let b: Vec<f64> = p.rhs().interior_values().collect();
    let x = gauss_solve(assemble(n, p.spacing()), b);
    Grid2D::from_index_fn(p.dims(), p.spacing(), |i, j| x[(i - 1) * n + (j - 1)])
}
