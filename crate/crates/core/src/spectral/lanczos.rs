//! Block Lanczos with full reorthogonalization for the smallest eigenpairs
//! of a symmetric operator.
//!
//! Both the orthonormal basis `V` and its image `AV` are kept, so the
//! projected matrix `VᵀAV` is formed explicitly and every Ritz residual is
//! computed from vectors rather than from recurrence coefficients. Rank
//! deficient blocks are refilled with random vectors.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LanczosOptions {
    pub block: usize,
    pub max_dim: usize,
    /// Convergence when every wanted residual is below `tol · ‖A‖`.
    pub tol: f64,
    pub seed: u64,
    pub want_vectors: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            block: 4,
            max_dim: 2000,
            tol: 1e-8,
            seed: 0,
            want_vectors: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// Ritz vectors (one per value) when requested.
    pub vectors: Option<Vec<Vec<f64>>>,
    pub residuals: Vec<f64>,
    pub krylov_dim: usize,
    pub matvecs: usize,
    pub norm_estimate: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthogonalize `w` against `basis` (two classical Gram–Schmidt passes).
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) {
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.iter().map(|v| dot(v, w)).collect();
        for (v, c) in basis.iter().zip(coeffs) {
            axpy(-c, v, w);
        }
    }
}

struct Krylov<'a> {
    op: &'a dyn Fn(&[f64], &mut [f64]),
    n: usize,
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
    /// Columns of the projected matrix, `h[j][i] = v_iᵀ A v_j` for `i ≤ j`.
    h: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
    matvecs: usize,
}

impl<'a> Krylov<'a> {
    fn new(op: &'a dyn Fn(&[f64], &mut [f64]), n: usize, seed: u64) -> Self {
        Self {
            op,
            n,
            v: Vec::new(),
            av: Vec::new(),
            h: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            matvecs: 0,
        }
    }

    fn random_vector(&mut self) -> Vec<f64> {
        (0..self.n).map(|_| StandardNormal.sample(&mut self.rng)).collect()
    }

    /// Orthonormalize candidates against the basis and append them. Returns
    /// how many vectors were added.
    fn extend(&mut self, candidates: Vec<Vec<f64>>) -> usize {
        let mut added = 0;
        for mut w in candidates {
            if self.v.len() >= self.n {
                break;
            }
            let mut accepted = false;
            for attempt in 0..4 {
                let before = norm(&w);
                orthogonalize(&self.v, &mut w);
                let after = norm(&w);
                if after > 1e-10 * before.max(f64::MIN_POSITIVE) && after > 0.0 {
                    for x in w.iter_mut() {
                        *x /= after;
                    }
                    accepted = true;
                    break;
                }
                if attempt < 3 {
                    w = self.random_vector();
                }
            }
            if !accepted {
                continue;
            }
            let mut aw = vec![0.0; self.n];
            (self.op)(&w, &mut aw);
            self.matvecs += 1;
            self.v.push(w);
            let col: Vec<f64> = self.v.iter().map(|vi| dot(vi, &aw)).collect();
            self.h.push(col);
            self.av.push(aw);
            added += 1;
        }
        added
    }

    fn projected(&self) -> DMatrix<f64> {
        let s = self.v.len();
        let mut m = DMatrix::<f64>::zeros(s, s);
        for (j, col) in self.h.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    }

    /// Ritz pairs sorted ascending.
    fn ritz(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.projected());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vecs = DMatrix::<f64>::zeros(eig.eigenvectors.nrows(), order.len());
        for (c, &i) in order.iter().enumerate() {
            vecs.set_column(c, &eig.eigenvectors.column(i));
        }
        (values, vecs)
    }

    fn combine(&self, basis: &[Vec<f64>], y: nalgebra::DVectorView<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (b, &c) in basis.iter().zip(y.iter()) {
            axpy(c, b, &mut out);
        }
        out
    }
}

/// The `k` smallest eigenpairs of the symmetric operator `op` on `R^n`.
pub fn smallest_eigenpairs(
    op: &dyn Fn(&[f64], &mut [f64]),
    n: usize,
    k: usize,
    opts: &LanczosOptions,
) -> Result<EigenResult> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("need 0 < k <= n, got k = {k}, n = {n}")));
    }
    let block = opts.block.max(1).min(n);
    let max_dim = opts.max_dim.max(k + block).min(n);
    let mut kr = Krylov::new(op, n, opts.seed);
    let start: Vec<Vec<f64>> = (0..block).map(|_| kr.random_vector()).collect();
    kr.extend(start);
    let mut last_check = 0;
    let mut block_start = 0;
    loop {
        let s = kr.v.len();
        let due = s >= max_dim || s >= n || (s >= k && s - last_check >= (2 * block).max(s / 8));
        if due {
            last_check = s;
            let (values, y) = kr.ritz();
            let norm_est = values.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
            let mut residuals = Vec::with_capacity(k);
            let mut vectors = Vec::new();
            for i in 0..k.min(values.len()) {
                let yi = y.column(i);
                let x = kr.combine(&kr.v, yi);
                let mut r = kr.combine(&kr.av, yi);
                axpy(-values[i], &x, &mut r);
                residuals.push(norm(&r));
                if opts.want_vectors {
                    vectors.push(x);
                }
            }
            let max_res = residuals.iter().copied().fold(0.0, f64::max);
            let converged = values.len() >= k && max_res <= opts.tol * norm_est;
            if converged || s >= n {
                return Ok(EigenResult {
                    values: values[..k].to_vec(),
                    vectors: opts.want_vectors.then_some(vectors),
                    residuals,
                    krylov_dim: s,
                    matvecs: kr.matvecs,
                    norm_estimate: norm_est,
                });
            }
            if s >= max_dim {
                return Err(Error::NonConvergence {
                    iterations: kr.matvecs,
                    max_residual: max_res / norm_est,
                });
            }
        }
        // Next block: images of the latest block.
        let next: Vec<Vec<f64>> = kr.av[block_start..].to_vec();
        block_start = kr.v.len();
        let room = max_dim - kr.v.len();
        let candidates: Vec<Vec<f64>> = next.into_iter().take(room.max(1)).collect();
        if kr.extend(candidates) == 0 {
            let fresh: Vec<Vec<f64>> = (0..block.min(room.max(1))).map(|_| kr.random_vector()).collect();
            if kr.extend(fresh) == 0 {
                // The basis spans the whole space numerically.
                let s = kr.v.len();
                if s < k {
                    return Err(Error::NonConvergence {
                        iterations: kr.matvecs,
                        max_residual: f64::INFINITY,
                    });
                }
                let (values, _) = kr.ritz();
                return Ok(EigenResult {
                    values: values[..k].to_vec(),
                    vectors: None,
                    residuals: vec![0.0; k],
                    krylov_dim: s,
                    matvecs: kr.matvecs,
                    norm_estimate: values.iter().fold(0.0_f64, |a, v| a.max(v.abs())),
                });
            }
        }
    }
}

/// All Ritz values from a single-vector Krylov space of exactly `dim`
/// vectors. Spaces for the same seed are nested, so by interlacing the
/// i-th value never increases with `dim`.
pub fn krylov_ritz_values(op: &dyn Fn(&[f64], &mut [f64]), n: usize, dim: usize, seed: u64) -> Vec<f64> {
    let dim = dim.clamp(1, n);
    let mut kr = Krylov::new(op, n, seed);
    let start = kr.random_vector();
    kr.extend(vec![start]);
    while kr.v.len() < dim {
        let w = kr.av.last().expect("nonempty basis").clone();
        if kr.extend(vec![w]) == 0 {
            let r = kr.random_vector();
            if kr.extend(vec![r]) == 0 {
                break;
            }
        }
    }
    kr.ritz().0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_op(a: DMatrix<f64>) -> impl Fn(&[f64], &mut [f64]) {
        move |x: &[f64], y: &mut [f64]| {
            let n = a.nrows();
            for i in 0..n {
                y[i] = (0..n).map(|j| a[(i, j)] * x[j]).sum();
            }
        }
    }

    #[test]
    fn diagonal_operator() {
        let n = 300;
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| (i as f64).sqrt()));
        let op = dense_op(a);
        let r = smallest_eigenpairs(&op, n, 6, &LanczosOptions::default()).unwrap();
        for (i, v) in r.values.iter().enumerate() {
            assert!((v - (i as f64).sqrt()).abs() < 1e-8, "{i}: {v}");
        }
    }

    #[test]
    fn repeated_eigenvalues_are_resolved_by_the_block() {
        let n = 120;
        let mut d: Vec<f64> = (0..n).map(|i| 5.0 + i as f64).collect();
        d[0] = 0.0;
        d[1] = 1.0;
        d[2] = 1.0;
        d[3] = 1.0;
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
        let op = dense_op(a);
        let r = smallest_eigenpairs(&op, n, 5, &LanczosOptions::default()).unwrap();
        let want = [0.0, 1.0, 1.0, 1.0, 9.0];
        for (v, w) in r.values.iter().zip(want) {
            assert!((v - w).abs() < 1e-8);
        }
    }

    #[test]
    fn ritz_values_interlace() {
        let n = 80;
        let a = DMatrix::from_fn(n, n, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()));
        let op = dense_op(a);
        let small = krylov_ritz_values(&op, n, 10, 3);
        let big = krylov_ritz_values(&op, n, 15, 3);
        for i in 0..10 {
            assert!(big[i] <= small[i] + 1e-12);
        }
    }

    #[test]
    fn k_larger_than_n_is_rejected() {
        let op = |x: &[f64], y: &mut [f64]| y.copy_from_slice(x);
        assert!(smallest_eigenpairs(&op, 3, 4, &LanczosOptions::default()).is_err());
    }
}
