#![allow(dead_code)]

mod grid_types {
    pub use mgkit::{Grid2D, PoissonProblem};
}

#[path = "dense.rs"]
mod dense;

#[allow(unused_imports)]
pub use dense::{assemble, dense_solve, gauss_solve};
