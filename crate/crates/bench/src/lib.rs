//! Fixtures shared by the benchmarks in `benches/`.

use dmd_core::{build_hubbard, LatticeSpec, ManyBodyOperator};
use nalgebra::{DMatrix, DVector};

/// Half-filled open Hubbard chain at `U/t = 8` in its default sector.
pub fn hubbard_chain(sites: usize) -> ManyBodyOperator {
    let spec = LatticeSpec::chain(sites);
    build_hubbard(&spec, spec.default_sector(), 1.0, 8.0).expect("valid chain")
}

/// Deterministic well-conditioned design matrix with an exact linear response.
pub fn regression_problem(rows: usize, cols: usize) -> (DMatrix<f64>, DVector<f64>) {
    let x = DMatrix::from_fn(rows, cols, |i, j| ((i * 7 + j * 13) % 17) as f64 / 17.0 + if i % cols == j { 1.0 } else { 0.0 });
    let g = DVector::from_fn(cols, |j, _| 1.0 / (j + 1) as f64);
    let y = &x * g;
    (x, y)
}
