//! Linear maps `j: t ≅ R² → su(m)` and the decision procedures built on
//! them: isospectrality, equivalence, genericity, and the generation of
//! continuous isospectral families.

mod equivalence;
mod family;
mod generic;
mod invariants;
mod io;

pub use equivalence::{
    equivalence_residual, find_equivalence, EquivalenceSearch, EquivalenceSearchConfig,
    EquivalenceWitness,
};
pub use family::{generate_family, Family, FamilyConfig, FamilyMember, FamilyValidation};
pub use generic::{is_generic, GenericityReport};
pub use invariants::{
    equivalence_invariants, invariant_gap, word_traces, InvariantGap, INVARIANT_WORDS,
};
pub use io::{JMapDocument, Provenance};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fro_norm, hermitian_eigen, polar_factor, to_special_unitary, CMat, C64};

/// Spectral agreement tolerance used when no other value is given.
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-9;
/// Minimum invariant gap that certifies non-equivalence.
pub const DEFAULT_INVARIANT_TOL: f64 = 1e-6;

/// A skew-Hermitian square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewHermitian(CMat);

impl SkewHermitian {
    pub const TOL: f64 = 1e-12;

    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                actual: mat.ncols(),
            });
        }
        let deviation = fro_norm(&(&mat + mat.adjoint()));
        if deviation > Self::TOL * fro_norm(&mat).max(1.0) {
            return Err(Error::NotSkewHermitian { deviation });
        }
        Ok(Self(mat))
    }

    /// Element of su(m): skew-Hermitian and traceless.
    pub fn in_su(mat: CMat) -> Result<Self> {
        let x = Self::new(mat)?;
        let trace = x.0.trace().norm();
        if trace > Self::TOL * fro_norm(&x.0).max(1.0) {
            return Err(Error::NotTraceless { trace });
        }
        Ok(x)
    }

    pub fn zeros(m: usize) -> Self {
        Self(CMat::zeros(m, m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    /// Ascending real spectrum of the Hermitian matrix `-iX`.
    pub fn spectrum(&self) -> Vec<f64> {
        crate::linalg::skew_spectrum(&self.0)
    }
}

/// Element `a·Z₁ + b·Z₂` of the torus Lie algebra.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusVector {
    pub a: f64,
    pub b: f64,
}

impl TorusVector {
    pub const Z1: TorusVector = TorusVector { a: 1.0, b: 0.0 };
    pub const Z2: TorusVector = TorusVector { a: 0.0, b: 1.0 };

    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }
}

/// Integral weight `μ = (p, q)` of the torus lattice. Weights are mapped to
/// directions `Z = (p, q)`; conjugators are scale invariant so the lattice
/// normalization never enters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weight {
    pub p: i64,
    pub q: i64,
}

impl Weight {
    pub fn new(p: i64, q: i64) -> Self {
        Self { p, q }
    }

    pub fn direction(&self) -> TorusVector {
        TorusVector::new(self.p as f64, self.q as f64)
    }

    /// `μ(c) = p·c₁ + q·c₂` for a t-value given in the basis (Z₁, Z₂).
    pub fn apply(&self, c1: f64, c2: f64) -> f64 {
        self.p as f64 * c1 + self.q as f64 * c2
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

/// One of the 16 symmetries used by the equivalence relation: a signed
/// permutation of (Z₁, Z₂), optionally composed with complex conjugation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EquivalenceSymmetry {
    /// `Ψ(Z₁) = sign1·Z_{σ(1)}`, `Ψ(Z₂) = sign2·Z_{σ(2)}` with σ the swap when set.
    pub swap: bool,
    pub sign1: i8,
    pub sign2: i8,
    pub conjugate: bool,
}

impl EquivalenceSymmetry {
    pub const IDENTITY: EquivalenceSymmetry = EquivalenceSymmetry {
        swap: false,
        sign1: 1,
        sign2: 1,
        conjugate: false,
    };

    /// All 16 symmetries, identity first.
    pub fn all() -> Vec<EquivalenceSymmetry> {
        let mut out = Vec::with_capacity(16);
        for conjugate in [false, true] {
            for swap in [false, true] {
                for sign1 in [1, -1] {
                    for sign2 in [1, -1] {
                        out.push(EquivalenceSymmetry {
                            swap,
                            sign1,
                            sign2,
                            conjugate,
                        });
                    }
                }
            }
        }
        out
    }

    /// The map `Z ↦ j_{Ψ(Z)}` (conjugated when requested).
    pub fn apply(&self, j: &JMap) -> JMap {
        let (first, second) = if self.swap { (&j.j2, &j.j1) } else { (&j.j1, &j.j2) };
        let mut a = first.0.clone() * C64::new(self.sign1 as f64, 0.0);
        let mut b = second.0.clone() * C64::new(self.sign2 as f64, 0.0);
        if self.conjugate {
            a = a.map(|z| z.conj());
            b = b.map(|z| z.conj());
        }
        JMap {
            j1: SkewHermitian(a),
            j2: SkewHermitian(b),
        }
    }
}

impl fmt::Display for EquivalenceSymmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |k: usize| if k == 0 { "Z1" } else { "Z2" };
        let (t1, t2) = if self.swap { (1, 0) } else { (0, 1) };
        let s = |v: i8| if v < 0 { "-" } else { "+" };
        write!(
            f,
            "Z1->{}{}, Z2->{}{}{}",
            s(self.sign1),
            name(t1),
            s(self.sign2),
            name(t2),
            if self.conjugate { ", conj" } else { "" }
        )
    }
}

/// Linear map `t ≅ R² → su(m)`, stored as the images of Z₁ and Z₂.
#[derive(Clone, Debug, PartialEq)]
pub struct JMap {
    j1: SkewHermitian,
    j2: SkewHermitian,
}

impl JMap {
    pub fn new(j1: CMat, j2: CMat) -> Result<Self> {
        let j1 = SkewHermitian::in_su(j1)?;
        let j2 = SkewHermitian::in_su(j2)?;
        if j1.dim() != j2.dim() {
            return Err(Error::DimensionMismatch {
                expected: j1.dim(),
                actual: j2.dim(),
            });
        }
        if j1.dim() < 2 {
            return Err(Error::InvalidParameter(format!("m = {} must be at least 2", j1.dim())));
        }
        Ok(Self { j1, j2 })
    }

    pub fn zero(m: usize) -> Self {
        Self {
            j1: SkewHermitian::zeros(m),
            j2: SkewHermitian::zeros(m),
        }
    }

    pub fn m(&self) -> usize {
        self.j1.dim()
    }

    pub fn j1(&self) -> &CMat {
        self.j1.matrix()
    }

    pub fn j2(&self) -> &CMat {
        self.j2.matrix()
    }

    /// Image of the k-th basis vector (0 → Z₁, 1 → Z₂).
    pub fn image(&self, k: usize) -> &CMat {
        match k {
            0 => self.j1.matrix(),
            1 => self.j2.matrix(),
            _ => panic!("torus basis index {k} out of range"),
        }
    }

    pub fn eval(&self, z: TorusVector) -> SkewHermitian {
        SkewHermitian(self.j1() * C64::new(z.a, 0.0) + self.j2() * C64::new(z.b, 0.0))
    }

    pub fn scaled(&self, c: f64) -> JMap {
        let s = C64::new(c, 0.0);
        JMap {
            j1: SkewHermitian(self.j1() * s),
            j2: SkewHermitian(self.j2() * s),
        }
    }

    /// `Z ↦ A j_Z A⁻¹` for a unitary `A`.
    pub fn conjugated(&self, a: &CMat) -> JMap {
        let adj = a.adjoint();
        JMap {
            j1: SkewHermitian(a * self.j1() * &adj),
            j2: SkewHermitian(a * self.j2() * &adj),
        }
    }

    pub fn transformed(&self, sym: EquivalenceSymmetry) -> JMap {
        sym.apply(self)
    }

    pub fn norm(&self) -> f64 {
        (fro_norm(self.j1()).powi(2) + fro_norm(self.j2()).powi(2)).sqrt()
    }

    /// Coordinates in the orthonormal basis of su(m) ⊕ su(m).
    pub fn coords(&self, basis: &[CMat]) -> Vec<f64> {
        let mut c = crate::linalg::coords_in(basis, self.j1());
        c.extend(crate::linalg::coords_in(basis, self.j2()));
        c
    }

    pub fn from_coords(basis: &[CMat], x: &[f64]) -> JMap {
        let n = basis.len();
        debug_assert_eq!(x.len(), 2 * n);
        let m = basis[0].nrows();
        let mut a = CMat::zeros(m, m);
        let mut b = CMat::zeros(m, m);
        for (k, e) in basis.iter().enumerate() {
            a += e * C64::new(x[k], 0.0);
            b += e * C64::new(x[n + k], 0.0);
        }
        JMap {
            j1: SkewHermitian(a),
            j2: SkewHermitian(b),
        }
    }
}

/// Directions `(cos θᵢ, sin θᵢ)`, `θᵢ = π i / count`, pairwise
/// non-proportional.
pub fn projective_directions(count: usize) -> Vec<TorusVector> {
    (0..count)
        .map(|i| {
            let th = std::f64::consts::PI * i as f64 / count as f64;
            TorusVector::new(th.cos(), th.sin())
        })
        .collect()
}

/// The m+1 directions on which isospectrality is certified: characteristic
/// coefficients of `a·J1 + b·J2` are homogeneous of degree ≤ m in (a, b).
pub fn certification_directions(m: usize) -> Vec<TorusVector> {
    projective_directions(m + 1)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsospectralityReport {
    pub isospectral: bool,
    pub tol: f64,
    pub directions: Vec<TorusVector>,
    /// Max sorted-eigenvalue discrepancy per direction.
    pub discrepancies: Vec<f64>,
    pub max_discrepancy: f64,
}

fn spectral_discrepancy(a: &SkewHermitian, b: &SkewHermitian) -> f64 {
    a.spectrum()
        .iter()
        .zip(b.spectrum())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn is_isospectral(j: &JMap, j2: &JMap, tol: f64) -> Result<IsospectralityReport> {
    if j.m() != j2.m() {
        return Err(Error::DimensionMismatch {
            expected: j.m(),
            actual: j2.m(),
        });
    }
    let directions = certification_directions(j.m());
    let discrepancies: Vec<f64> = directions
        .iter()
        .map(|&z| spectral_discrepancy(&j.eval(z), &j2.eval(z)))
        .collect();
    let max_discrepancy = discrepancies.iter().copied().fold(0.0, f64::max);
    Ok(IsospectralityReport {
        isospectral: max_discrepancy < tol,
        tol,
        directions,
        discrepancies,
        max_discrepancy,
    })
}

/// `A_Z ∈ SU(m)` with `A j_Z A⁻¹ = j2_Z`, built by aligning the
/// eigendecompositions of `-i j_Z` and `-i j2_Z`. Eigenvalues closer than
/// `cluster_tol` form one eigenspace; inside it the two orthonormal bases
/// are matched by the unitary Procrustes solution.
pub fn conjugator(j: &JMap, j2: &JMap, z: TorusVector, tol: f64) -> Result<CMat> {
    if j.m() != j2.m() {
        return Err(Error::DimensionMismatch {
            expected: j.m(),
            actual: j2.m(),
        });
    }
    let minus_i = C64::new(0.0, -1.0);
    let x = j.eval(z).into_inner();
    let y = j2.eval(z).into_inner();
    let (lx, vx) = hermitian_eigen(&(&x * minus_i));
    let (ly, vy) = hermitian_eigen(&(&y * minus_i));
    let scale = lx.iter().chain(ly.iter()).fold(1.0_f64, |a, v| a.max(v.abs()));
    let mismatch = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if mismatch > tol * scale {
        return Err(Error::Hypothesis(format!(
            "spectra differ by {mismatch:.3e} in direction ({}, {})",
            z.a, z.b
        )));
    }
    let m = j.m();
    let cluster_tol = 1e-8 * scale;
    let mut a = CMat::zeros(m, m);
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && (lx[end] - lx[end - 1]).abs() <= cluster_tol {
            end += 1;
        }
        let width = end - start;
        let bx = vx.columns(start, width).into_owned();
        let by = vy.columns(start, width).into_owned();
        let align = polar_factor(&(by.adjoint() * &bx));
        a += &by * align * bx.adjoint();
        start = end;
    }
    let a = to_special_unitary(&a);
    let residual = fro_norm(&(&a * &x * a.adjoint() - &y));
    if residual > tol.max(1e-9) * scale * (m as f64) {
        return Err(Error::Hypothesis(format!(
            "conjugator residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(a)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::{random_special_unitary, random_su};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_jmap(m: usize, seed: u64) -> JMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        JMap::new(random_su(m, &mut rng), random_su(m, &mut rng)).unwrap()
    }

    #[test]
    fn eval_is_linear() {
        let j = random_jmap(3, 1);
        assert_eq!(j.eval(TorusVector::new(0.0, 0.0)).matrix(), &CMat::zeros(3, 3));
        assert_eq!(j.eval(TorusVector::Z1).matrix(), j.j1());
        let got = j.eval(TorusVector::new(2.0, 3.0));
        for r in 0..3 {
            for c in 0..3 {
                let want = j.j1()[(r, c)] * 2.0 + j.j2()[(r, c)] * 3.0;
                assert!((got.matrix()[(r, c)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_non_skew_and_traceful() {
        let mut h = CMat::zeros(2, 2);
        h[(0, 1)] = C64::new(1.0, 0.0);
        h[(1, 0)] = C64::new(1.0, 0.0);
        assert!(matches!(SkewHermitian::new(h), Err(Error::NotSkewHermitian { .. })));
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(0.0, 1.0),
            C64::new(0.0, 1.0),
        ]));
        assert!(matches!(SkewHermitian::in_su(d), Err(Error::NotTraceless { .. })));
    }

    #[test]
    fn isospectral_identity_and_conjugation() {
        let j = random_jmap(3, 2);
        assert!(is_isospectral(&j, &j, 1e-9).unwrap().isospectral);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_special_unitary(3, &mut rng);
        let report = is_isospectral(&j, &j.conjugated(&a), 1e-9).unwrap();
        assert!(report.isospectral, "{report:?}");
        assert_eq!(report.discrepancies.len(), 4);
    }

    #[test]
    fn scaled_second_image_is_not_isospectral() {
        let j = random_jmap(3, 3);
        let j2 = JMap::new(j.j1().clone(), j.j2() * C64::new(1.1, 0.0)).unwrap();
        let report = is_isospectral(&j, &j2, 1e-9).unwrap();
        assert!(!report.isospectral);
        // Brute force at Z = (0, 1): eigenvalues scale by 1.1.
        let s = SkewHermitian(j.j2().clone()).spectrum();
        let s2 = SkewHermitian(j2.j2().clone()).spectrum();
        for (a, b) in s.iter().zip(&s2) {
            assert!((1.1 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = random_jmap(3, 4);
        let b = random_jmap(4, 4);
        assert!(matches!(is_isospectral(&a, &b, 1e-9), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn symmetries_form_sixteen_distinct_actions() {
        let j = random_jmap(3, 9);
        let all = EquivalenceSymmetry::all();
        assert_eq!(all.len(), 16);
        assert_eq!(all[0], EquivalenceSymmetry::IDENTITY);
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                assert_ne!(a.apply(&j), b.apply(&j));
            }
        }
    }

    #[test]
    fn conjugator_recovers_global_conjugation() {
        let j = random_jmap(4, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random_special_unitary(4, &mut rng);
        let j2 = j.conjugated(&a);
        for z in [TorusVector::Z1, TorusVector::new(2.0, -1.0), TorusVector::new(3.0, 5.0)] {
            let az = conjugator(&j, &j2, z, 1e-9).unwrap();
            let lhs = &az * j.eval(z).matrix() * az.adjoint();
            assert!(fro_norm(&(lhs - j2.eval(z).matrix())) < 1e-10);
            assert!((az.determinant() - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn conjugator_of_identical_maps_is_identity_even_with_repeated_eigenvalues() {
        let mut d = CMat::zeros(3, 3);
        d[(0, 0)] = C64::new(0.0, 1.0);
        d[(1, 1)] = C64::new(0.0, 1.0);
        d[(2, 2)] = C64::new(0.0, -2.0);
        let j = JMap::new(d, CMat::zeros(3, 3)).unwrap();
        let a = conjugator(&j, &j, TorusVector::Z1, 1e-9).unwrap();
        assert!(fro_norm(&(a - CMat::identity(3, 3))) < 1e-12);
    }
}
