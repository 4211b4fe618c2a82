//! Sector diagonalization: dense for small problems, Chebyshev-filtered
//! subspace iteration for a few low states of large ones.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{spin_flip, FockBasis, ManyBodyOperator, Wavefunction};
use crate::sparse::CsrMatrix;

/// Ascending eigenpairs of one sector operator.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: DMatrix<f64>,
    pub basis: Arc<FockBasis>,
    /// True when every eigenpair of the sector is present.
    pub complete: bool,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).into_owned()
    }

    pub fn state(&self, k: usize) -> Wavefunction {
        Wavefunction {
            basis: self.basis.clone(),
            amplitudes: self.vector(k),
            subnormalized: false,
        }
    }

    /// `max_k ||H v_k - E_k v_k||`
    pub fn max_residual(&self, op: &ManyBodyOperator) -> f64 {
        let hv = op.matrix.mul_mat(&self.eigenvectors);
        (0..self.len())
            .map(|k| (hv.column(k) - self.eigenvectors.column(k) * self.eigenvalues[k]).norm())
            .fold(0.0, f64::max)
    }

    /// `max |V^T V - I|`
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.eigenvectors;
        let n = g.nrows();
        (g - DMatrix::identity(n, n)).amax()
    }

    /// Number of eigenvalues `<= threshold`.
    pub fn count_below(&self, threshold: f64) -> usize {
        self.eigenvalues.iter().filter(|&&e| e <= threshold).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Request {
    All,
    Lowest(usize),
}

#[derive(Debug, Clone)]
pub struct EigenConfig {
    /// Largest sector handled by the dense solver.
    pub dense_limit: usize,
    /// Absolute cap on the sector dimension.
    pub cap: usize,
    /// Residual tolerance relative to the operator norm bound.
    pub rel_tol: f64,
    pub max_iter: usize,
    pub filter_degree: usize,
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            dense_limit: 4096,
            cap: crate::lattice::DEFAULT_DIMENSION_CAP,
            rel_tol: 1e-10,
            max_iter: 500,
            filter_degree: 16,
            seed: 0x5eed,
        }
    }
}

/// Eigenvalues closer than this (relative to the norm bound) form one cluster.
const DEGENERACY_TOL: f64 = 1e-8;

/// Full decomposition.
pub fn diagonalize(op: &ManyBodyOperator) -> Result<SpectralDecomposition> {
    diagonalize_with(op, Request::All, &EigenConfig::default())
}

/// The `k` lowest eigenpairs.
pub fn diagonalize_lowest(op: &ManyBodyOperator, k: usize) -> Result<SpectralDecomposition> {
    diagonalize_with(op, Request::Lowest(k), &EigenConfig::default())
}

pub fn diagonalize_with(op: &ManyBodyOperator, request: Request, config: &EigenConfig) -> Result<SpectralDecomposition> {
    let dim = op.dim();
    if dim > config.cap {
        return Err(Error::DimensionCap { dim, cap: config.cap });
    }
    let k = match request {
        Request::All => dim,
        Request::Lowest(k) => k.min(dim),
    };
    let scale = op.norm_bound.max(1.0);
    let use_dense = dim <= config.dense_limit && (dim <= 400 || 4 * k >= dim);
    let (vals, vecs) = if use_dense {
        dense_lowest(&op.matrix, k, scale)
    } else if k == dim {
        return Err(Error::DimensionCap {
            dim,
            cap: config.dense_limit,
        });
    } else {
        chebyshev_subspace(&op.matrix, k, scale, config)?
    };
    Ok(SpectralDecomposition {
        eigenvalues: vals,
        eigenvectors: vecs,
        basis: op.basis.clone(),
        complete: k == dim,
    })
}

fn dense_lowest(m: &CsrMatrix, k: usize, scale: f64) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.to_dense());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.dim(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let (vals, vecs) = canonicalize(vals, vecs, scale);
    let vecs = vecs.columns(0, k).into_owned();
    (vals[..k].to_vec(), vecs)
}

/// Chebyshev-filtered subspace iteration for the `k` lowest eigenpairs.
fn chebyshev_subspace(m: &CsrMatrix, k: usize, scale: f64, config: &EigenConfig) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.dim();
    let block = (k + (k / 4).max(12)).min(n);
    let (_, upper) = m.gershgorin_interval();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x0 = DMatrix::from_fn(n, block, |_, _| rng.gen::<f64>() - 0.5);
    let (mut theta, mut x, mut hx) = rayleigh_ritz(m, x0);
    let tol = config.rel_tol * scale;
    let mut worst = f64::INFINITY;
    for _ in 0..config.max_iter {
        worst = (0..k)
            .map(|j| (hx.column(j) - x.column(j) * theta[j]).norm())
            .fold(0.0, f64::max);
        if worst <= tol {
            let (vals, vecs) = canonicalize(theta, x, scale);
            return Ok((vals[..k].to_vec(), vecs.columns(0, k).into_owned()));
        }
        let cut = theta[block - 1];
        let y = chebyshev_filter(m, &x, config.filter_degree, cut, upper * 1.01 + 1e-12, theta[0]);
        (theta, x, hx) = rayleigh_ritz(m, y);
    }
    Err(Error::NoConvergence {
        iterations: config.max_iter,
        residual: worst,
    })
}

/// Damps the spectrum on `[a, b]` relative to values near `a0`.
fn chebyshev_filter(m: &CsrMatrix, x: &DMatrix<f64>, degree: usize, a: f64, b: f64, a0: f64) -> DMatrix<f64> {
    let e = (b - a) / 2.0;
    let c = (b + a) / 2.0;
    if e <= 0.0 {
        return x.clone();
    }
    let mut sigma = e / (a0 - c);
    let tau = 2.0 / sigma;
    let mut prev = x.clone();
    let mut cur = (m.mul_mat(x) - x * c) * (sigma / e);
    for _ in 1..degree {
        let next_sigma = 1.0 / (tau - sigma);
        let next = (m.mul_mat(&cur) - &cur * c) * (2.0 * next_sigma / e) - &prev * (sigma * next_sigma);
        prev = cur;
        cur = next;
        sigma = next_sigma;
    }
    cur
}

fn rayleigh_ritz(m: &CsrMatrix, y: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let q = y.qr().q();
    let hq = m.mul_mat(&q);
    let mut g = q.transpose() * &hq;
    g = (&g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let v = DMatrix::from_fn(order.len(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, &q * &v, &hq * &v)
}

/// Fixes a reproducible basis inside every degenerate cluster and the
/// overall sign of every vector.
///
/// Within a cluster, unit vectors are projected onto the eigenspace in
/// index order and Gram-Schmidt orthogonalized until the cluster is
/// spanned. Each vector's largest-magnitude amplitude is made positive,
/// ties going to the lowest index.
pub fn canonicalize(vals: Vec<f64>, mut vecs: DMatrix<f64>, scale: f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = vals.len();
    let tol = DEGENERACY_TOL * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] <= tol {
            end += 1;
        }
        let g = end - start;
        if g > 1 {
            let v = vecs.columns(start, g).into_owned();
            let mut coeffs: Vec<DVector<f64>> = Vec::with_capacity(g);
            for r in 0..v.nrows() {
                if coeffs.len() == g {
                    break;
                }
                let mut c = v.row(r).transpose();
                if c.norm() < 1e-3 {
                    continue;
                }
                for _ in 0..2 {
                    for prev in &coeffs {
                        let overlap = prev.dot(&c);
                        c -= prev * overlap;
                    }
                }
                let norm = c.norm();
                if norm >= 1e-3 {
                    coeffs.push(c / norm);
                }
            }
            if coeffs.len() == g {
                let cmat = DMatrix::from_columns(&coeffs);
                let rotated = &v * cmat;
                vecs.columns_mut(start, g).copy_from(&rotated);
            }
        }
        start = end;
    }
    for c in 0..vecs.ncols() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for (r, &a) in vecs.column(c).iter().enumerate() {
            if a.abs() > best_abs * (1.0 + 1e-12) {
                best_abs = a.abs();
                best = r;
            }
        }
        if vecs[(best, c)] < 0.0 {
            vecs.column_mut(c).neg_mut();
        }
    }
    (vals, vecs)
}

/// Every eigenvalue of the sector, ascending, without eigenvectors.
///
/// Spin-flip symmetric operators at `S_z = 0` are split into their even
/// and odd blocks first, which cuts the dense work by about four.
pub fn eigenvalues(op: &ManyBodyOperator) -> Result<Vec<f64>> {
    let dim = op.dim();
    let limit = 2 * EigenConfig::default().dense_limit;
    if dim > limit {
        return Err(Error::DimensionCap { dim, cap: limit });
    }
    let sector = op.basis.sector();
    let mut vals = if op.spin_flip_symmetric && sector.n_up == sector.n_dn && dim > 64 {
        let (even, odd) = spin_flip_blocks(op);
        let mut v: Vec<f64> = even.symmetric_eigenvalues().iter().copied().collect();
        v.extend(odd.symmetric_eigenvalues().iter().copied());
        v
    } else {
        op.matrix.to_dense().symmetric_eigenvalues().iter().copied().collect()
    };
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Projects the operator onto the `+1` and `-1` spin-flip eigenspaces.
pub fn spin_flip_blocks(op: &ManyBodyOperator) -> (DMatrix<f64>, DMatrix<f64>) {
    let basis = &op.basis;
    let dim = basis.dim();
    // (block, position, coefficient) for each component of each basis index
    let mut members: Vec<Vec<(usize, f64)>> = vec![Vec::new(), Vec::new()];
    let mut slots: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); dim];
    let mut sizes = [0usize; 2];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for (i, &w) in basis.states().iter().enumerate() {
        let (w2, s) = spin_flip(w);
        let j = basis.index(w2).expect("spin flip stays in an S_z = 0 sector");
        if j == i {
            let blk = if s > 0.0 { 0 } else { 1 };
            slots[i].push((blk, sizes[blk], 1.0));
            members[blk].push((i, 1.0));
            sizes[blk] += 1;
        } else if i < j {
            for (blk, sign) in [(0usize, s), (1usize, -s)] {
                slots[i].push((blk, sizes[blk], h));
                slots[j].push((blk, sizes[blk], h * sign));
                sizes[blk] += 1;
            }
        }
    }
    let mut blocks = [DMatrix::zeros(sizes[0], sizes[0]), DMatrix::zeros(sizes[1], sizes[1])];
    for i in 0..dim {
        for (r, v) in op.matrix.row(i) {
            for &(bi, pi, ci) in &slots[i] {
                for &(br, pr, cr) in &slots[r] {
                    if bi == br {
                        blocks[bi][(pi, pr)] += ci * v * cr;
                    }
                }
            }
        }
    }
    let [even, odd] = blocks;
    (even, odd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_heisenberg, build_hubbard, LatticeSpec, Sector};

    #[test]
    fn dimer_spectrum() {
        let u = 8.0;
        let h = build_hubbard(&LatticeSpec::chain(2), Sector::new(1, 1), 1.0, u).unwrap();
        let s = diagonalize(&h).unwrap();
        let root = (u * u + 16.0f64).sqrt();
        let expect = [(u - root) / 2.0, 0.0, u, (u + root) / 2.0];
        for (a, b) in s.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(s.max_residual(&h) < 1e-10 * h.norm_bound);
        assert!(s.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn two_spin_heisenberg() {
        let spec = LatticeSpec::chain(2);
        let mut all = Vec::new();
        for up in 0..=2 {
            let h = build_heisenberg(&spec, up, 1.0, 0.0).unwrap();
            all.extend(diagonalize(&h).unwrap().eigenvalues);
        }
        all.sort_by(f64::total_cmp);
        let expect = [-0.75, 0.25, 0.25, 0.25];
        for (a, b) in all.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn iterative_matches_dense() {
        let spec = LatticeSpec::chain(6);
        let h = build_hubbard(&spec, Sector::new(3, 3), 1.0, 6.0).unwrap();
        let dense = diagonalize(&h).unwrap();
        let cfg = EigenConfig {
            dense_limit: 10,
            ..EigenConfig::default()
        };
        let iter = diagonalize_with(&h, Request::Lowest(12), &cfg).unwrap();
        for k in 0..12 {
            assert!((dense.eigenvalues[k] - iter.eigenvalues[k]).abs() < 1e-9);
        }
        assert!(iter.max_residual(&h) < 1e-10 * h.norm_bound);
        // canonical vectors agree wherever the whole cluster is inside the request
        for k in 0..12 {
            let cluster: Vec<usize> = (0..dense.len())
                .filter(|&j| (dense.eigenvalues[j] - dense.eigenvalues[k]).abs() < 1e-7)
                .collect();
            if cluster.iter().all(|&j| j < 12) {
                let diff = (dense.vector(k) - iter.vector(k)).amax();
                assert!(diff < 1e-6, "vector {k} differs by {diff}");
            }
        }
    }

    #[test]
    fn spin_flip_split_preserves_spectrum() {
        let spec = LatticeSpec::ladder(6);
        let h = build_hubbard(&spec, Sector::new(3, 3), 1.0, 5.0).unwrap();
        let full: Vec<f64> = h.matrix.to_dense().symmetric_eigenvalues().iter().copied().collect();
        let mut full = full;
        full.sort_by(f64::total_cmp);
        let split = eigenvalues(&h).unwrap();
        assert_eq!(full.len(), split.len());
        for (a, b) in full.iter().zip(&split) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_vectors_are_canonical() {
        let spec = LatticeSpec::chain(2);
        let h = build_heisenberg(&spec, 1, 0.0, 5.0).unwrap();
        let s = diagonalize(&h).unwrap();
        assert!(s.eigenvalues.iter().all(|&e| (e - 5.0).abs() < 1e-12));
        assert_eq!(s.eigenvectors, DMatrix::identity(2, 2));
    }
}
