//! Small dense complex linear-algebra helpers shared by the j-map and
//! geometry code. Everything here works on `nalgebra::DMatrix<Complex<f64>>`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Real inner product `Re tr(A* B)`.
pub fn re_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Orthonormal basis of su(m) with respect to `Re tr(X* Y)` (generalized
/// Gell-Mann matrices times `i`, normalized).
pub fn su_basis(m: usize) -> Vec<CMat> {
    let mut basis = Vec::with_capacity(m * m - 1);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..m {
        for j in (i + 1)..m {
            let mut e = CMat::zeros(m, m);
            e[(i, j)] = C64::new(s, 0.0);
            e[(j, i)] = C64::new(-s, 0.0);
            basis.push(e);
            let mut f = CMat::zeros(m, m);
            f[(i, j)] = C64::new(0.0, s);
            f[(j, i)] = C64::new(0.0, s);
            basis.push(f);
        }
    }
    for k in 1..m {
        let norm = ((k * (k + 1)) as f64).sqrt();
        let mut d = CMat::zeros(m, m);
        for l in 0..k {
            d[(l, l)] = C64::new(0.0, 1.0 / norm);
        }
        d[(k, k)] = C64::new(0.0, -(k as f64) / norm);
        basis.push(d);
    }
    basis
}

/// Coordinates of `x` in an orthonormal real basis.
pub fn coords_in(basis: &[CMat], x: &CMat) -> Vec<f64> {
    basis.iter().map(|b| re_inner(b, x)).collect()
}

/// Skew-Hermitian traceless part of a square matrix (orthogonal projection
/// onto su(m) for the real inner product).
pub fn project_su(g: &CMat) -> CMat {
    let m = g.nrows();
    let mut p = (g - g.adjoint()) * C64::new(0.5, 0.0);
    let tr = p.trace() / C64::new(m as f64, 0.0);
    for k in 0..m {
        p[(k, k)] -= tr;
    }
    p
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in ascending
/// order and eigenvectors in the matching columns.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Sorted spectrum of the Hermitian matrix `-i X` for a skew-Hermitian `X`.
pub fn skew_spectrum(x: &CMat) -> Vec<f64> {
    let h = x * C64::new(0.0, -1.0);
    hermitian_eigen(&h).0
}

/// `exp(X)` for skew-Hermitian `X`, computed through the Hermitian
/// eigen-decomposition of `-iX`.
pub fn exp_skew(x: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(&(x * C64::new(0.0, -1.0)));
    let n = x.nrows();
    let mut scaled = vecs.clone();
    for (c, &v) in vals.iter().enumerate() {
        let phase = C64::from_polar(1.0, v);
        for r in 0..n {
            scaled[(r, c)] *= phase;
        }
    }
    scaled * vecs.adjoint()
}

/// Nearest unitary matrix (polar factor `U V*`) for a square matrix, or the
/// nearest matrix with orthonormal columns for a tall one.
pub fn polar_factor(a: &CMat) -> CMat {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    u * v_t
}

/// Rescale a unitary matrix by a scalar phase so that its determinant is 1.
pub fn to_special_unitary(a: &CMat) -> CMat {
    let m = a.nrows();
    let det = a.determinant();
    let phase = C64::from_polar(1.0, -det.arg() / m as f64);
    a * phase
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed element of U(m), via QR with the phase convention
/// removed from the diagonal of R.
pub fn random_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CMat {
    let qr = gaussian_matrix(m, m, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..m {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..m {
            q[(row, c)] *= phase;
        }
    }
    q
}

pub fn random_special_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CMat {
    to_special_unitary(&random_unitary(m, rng))
}

/// Random element of su(m) with i.i.d. standard normal coordinates in the
/// orthonormal basis.
pub fn random_su<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CMat {
    let mut x = CMat::zeros(m, m);
    for b in su_basis(m) {
        let c: f64 = rng.sample(StandardNormal);
        x += b * C64::new(c, 0.0);
    }
    x
}

/// Orthonormal basis (as columns) of the null space of a real matrix.
/// Singular values at or below `tol` count as null directions.
pub fn null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    let padded = if rows < cols {
        let mut p = DMatrix::<f64>::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("svd v_t");
    let null: Vec<usize> = (0..cols)
        .filter(|&k| svd.singular_values[k] <= tol)
        .collect();
    let mut out = DMatrix::<f64>::zeros(cols, null.len());
    for (c, &k) in null.iter().enumerate() {
        out.set_column(c, &v_t.row(k).transpose());
    }
    out
}

/// Moore-Penrose solve `x = A^+ b` (minimum-norm least squares).
pub fn min_norm_solve(a: &DMatrix<f64>, b: &[f64], rcond: f64) -> Vec<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = svd
        .solve(&rhs, rcond * smax.max(f64::MIN_POSITIVE))
        .expect("svd solve");
    x.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn su_basis_is_orthonormal_and_traceless() {
        for m in 2..5 {
            let b = su_basis(m);
            assert_eq!(b.len(), m * m - 1);
            for (i, x) in b.iter().enumerate() {
                assert!(x.trace().norm() < 1e-14);
                assert!(fro_norm(&(x + x.adjoint())) < 1e-14);
                for (j, y) in b.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((re_inner(x, y) - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn haar_sample_is_special_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_special_unitary(4, &mut rng);
        let id = CMat::identity(4, 4);
        assert!(fro_norm(&(a.adjoint() * &a - id)) < 1e-12);
        assert!((a.determinant() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn exp_of_skew_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_su(3, &mut rng);
        let e = exp_skew(&x);
        assert!(fro_norm(&(e.adjoint() * &e - CMat::identity(3, 3))) < 1e-12);
        assert!((e.determinant() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&a, 1e-12);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).norm() < 1e-12);
    }
}
