//! The manifolds `S^{2m+3} ⊂ C^{m+2}` and `V_r(C^s)`, `s = m+2`, with the
//! circle action `G` on the first `m` coordinates and the torus `T` on the
//! last two, the admissible forms built from a [`JMap`], and the deformed
//! metrics `g_κ(X, Y) = g₀(X + κ(X)^#, Y + κ(Y)^#)`.
//!
//! Points and tangent vectors are stored as ambient `s×r` complex matrices
//! (`r = 1` for the sphere). The round metric is `g₀(X, Y) = Re tr(X* Y)`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jmaps::{conjugator, JMap, Weight, DEFAULT_SPECTRAL_TOL};
use crate::linalg::{fro_norm, gaussian_matrix, polar_factor, re_inner, CMat, C64, I};

/// Components `(c₁, c₂)` of a t-value in the basis `(Z₁, Z₂)`.
pub type TValue = [f64; 2];

/// Ambient representative of a tangent vector.
pub type Tangent = CMat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Manifold {
    /// `S^{2m+3} ⊂ C^m ⊕ C²`.
    Sphere { m: usize },
    /// `V_r(C^{m+2})`.
    Stiefel { m: usize, r: usize },
}

/// Generators of the fundamental fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    Z1,
    Z2,
    /// The generator `𝔦` of the Lie algebra of `G`.
    G,
}

/// A point on a [`Manifold`], stored as an `s×r` matrix with orthonormal
/// columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(CMat);

impl Point {
    pub const TOL: f64 = 1e-12;

    /// Sphere point `(u, v)`; the norm constraint is checked.
    pub fn sphere(u: &[C64], v: [C64; 2]) -> Result<Self> {
        let mut q = CMat::zeros(u.len() + 2, 1);
        for (k, z) in u.iter().chain(v.iter()).enumerate() {
            q[(k, 0)] = *z;
        }
        Self::stiefel(q)
    }

    /// Stiefel point; `Q*Q = I` is checked.
    pub fn stiefel(q: CMat) -> Result<Self> {
        let r = q.ncols();
        let dev = fro_norm(&(q.adjoint() * &q - CMat::identity(r, r)));
        if dev > Self::TOL * (r as f64).sqrt().max(1.0) * 10.0 {
            return Err(Error::Domain(format!("Q*Q deviates from the identity by {dev:.3e}")));
        }
        Ok(Self(q))
    }

    /// Wraps a matrix already known to satisfy the constraint.
    pub(crate) fn from_matrix(q: CMat) -> Self {
        Self(q)
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    pub fn s(&self) -> usize {
        self.0.nrows()
    }

    pub fn r(&self) -> usize {
        self.0.ncols()
    }

    /// Top `m` entries of the first column (the `u` block of a sphere point).
    pub fn u(&self) -> Vec<C64> {
        let m = self.s() - 2;
        (0..m).map(|k| self.0[(k, 0)]).collect()
    }

    /// Last two entries of the first column.
    pub fn v(&self) -> [C64; 2] {
        let m = self.s() - 2;
        [self.0[(m, 0)], self.0[(m + 1, 0)]]
    }

    /// Norm of the top `m×r` block, the part moved by `G`.
    pub fn top_norm(&self) -> f64 {
        let m = self.s() - 2;
        self.0.rows(0, m).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Manifold {
    pub fn m(&self) -> usize {
        match *self {
            Manifold::Sphere { m } | Manifold::Stiefel { m, .. } => m,
        }
    }

    pub fn s(&self) -> usize {
        self.m() + 2
    }

    pub fn r(&self) -> usize {
        match *self {
            Manifold::Sphere { .. } => 1,
            Manifold::Stiefel { r, .. } => r,
        }
    }

    /// Real dimension: `2sr − r²` (for the sphere `2m+3`).
    pub fn dim(&self) -> usize {
        2 * self.s() * self.r() - self.r() * self.r()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m() < 1 {
            return Err(Error::InvalidParameter("m must be positive".into()));
        }
        if self.r() < 1 || self.r() > self.s() {
            return Err(Error::InvalidParameter(format!(
                "r = {} must satisfy 1 <= r <= m+2 = {}",
                self.r(),
                self.s()
            )));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match *self {
            Manifold::Sphere { m } => format!("sphere(m={m})"),
            Manifold::Stiefel { m, r } => format!("stiefel(m={m},r={r})"),
        }
    }

    pub fn point(&self, q: CMat) -> Result<Point> {
        if q.nrows() != self.s() || q.ncols() != self.r() {
            return Err(Error::DimensionMismatch {
                expected: self.s() * self.r(),
                actual: q.nrows() * q.ncols(),
            });
        }
        Point::stiefel(q)
    }

    /// Uniform point for `g₀`: polar factor of a complex Gaussian matrix
    /// (for `r = 1` a normalized Gaussian vector).
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let g = gaussian_matrix(self.s(), self.r(), rng);
        if self.r() == 1 {
            let n = fro_norm(&g);
            Point(g / C64::new(n, 0.0))
        } else {
            Point(polar_factor(&g))
        }
    }

    /// Orthogonal projection onto `T_Q M = {X : Q*X + X*Q = 0}`:
    /// `X − Q·herm(Q*X)`.
    pub fn project(&self, p: &Point, x: &CMat) -> Tangent {
        project_tangent(p.matrix(), x)
    }

    pub fn tangency_residual(&self, p: &Point, x: &Tangent) -> f64 {
        let a = p.matrix().adjoint() * x;
        fro_norm(&(&a + a.adjoint()))
    }

    /// Gaussian ambient vector, projected and normalized.
    pub fn random_tangent<R: Rng + ?Sized>(&self, p: &Point, rng: &mut R) -> Tangent {
        let x = self.project(p, &gaussian_matrix(self.s(), self.r(), rng));
        let n = fro_norm(&x);
        x / C64::new(n, 0.0)
    }

    /// A `g₀`-orthonormal basis of `T_p M`, by projecting the real ambient
    /// basis and running Gram–Schmidt.
    pub fn tangent_basis(&self, p: &Point) -> Vec<Tangent> {
        let (s, r) = (self.s(), self.r());
        let mut basis: Vec<Tangent> = Vec::with_capacity(self.dim());
        for c in 0..r {
            for row in 0..s {
                for unit in [C64::new(1.0, 0.0), I] {
                    let mut e = CMat::zeros(s, r);
                    e[(row, c)] = unit;
                    let mut x = self.project(p, &e);
                    for _ in 0..2 {
                        for b in &basis {
                            let d = re_inner(b, &x);
                            x -= b * C64::new(d, 0.0);
                        }
                    }
                    let n = fro_norm(&x);
                    if n > 1e-8 {
                        basis.push(x / C64::new(n, 0.0));
                    }
                }
            }
        }
        basis
    }

    /// Fundamental field of a generator: `𝒵₁Q`, `𝒵₂Q`, `𝓘Q`.
    pub fn fundamental(&self, generator: Generator, p: &Point) -> Tangent {
        let q = p.matrix();
        let m = self.m();
        let mut out = CMat::zeros(q.nrows(), q.ncols());
        let rows: Vec<usize> = match generator {
            Generator::Z1 => vec![m],
            Generator::Z2 => vec![m + 1],
            Generator::G => (0..m).collect(),
        };
        for row in rows {
            for c in 0..q.ncols() {
                out[(row, c)] = I * q[(row, c)];
            }
        }
        out
    }

    /// `c₁ Z₁^# + c₂ Z₂^#`.
    pub fn t_field(&self, p: &Point, c: TValue) -> Tangent {
        let q = p.matrix();
        let m = self.m();
        let mut out = CMat::zeros(q.nrows(), q.ncols());
        for col in 0..q.ncols() {
            out[(m, col)] = I * q[(m, col)] * c[0];
            out[(m + 1, col)] = I * q[(m + 1, col)] * c[1];
        }
        out
    }

    /// Left multiplication by `diag(e^{iθ} I_m, 1, 1)`.
    pub fn g_matrix(&self, theta: f64) -> CMat {
        let mut d = CMat::identity(self.s(), self.s());
        for k in 0..self.m() {
            d[(k, k)] = C64::from_polar(1.0, theta);
        }
        d
    }

    /// Left multiplication by `diag(I_m, e^{iφ₁}, e^{iφ₂})`.
    pub fn t_matrix(&self, phi1: f64, phi2: f64) -> CMat {
        let mut d = CMat::identity(self.s(), self.s());
        let m = self.m();
        d[(m, m)] = C64::from_polar(1.0, phi1);
        d[(m + 1, m + 1)] = C64::from_polar(1.0, phi2);
        d
    }

    pub fn act(&self, left: &CMat, p: &Point) -> Point {
        Point(left * p.matrix())
    }
}

pub(crate) fn project_tangent(q: &CMat, x: &CMat) -> CMat {
    let a = q.adjoint() * x;
    let herm = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    x - q * herm
}

/// An admissible t-valued 1-form built from a j-map: the sphere form, or
/// the Stiefel form `κ` and its horizontalization `κ_𝓗`.
#[derive(Clone, Debug)]
pub struct AdmissibleForm {
    pub manifold: Manifold,
    pub j: JMap,
    /// Stiefel only; the sphere form is always the explicit sphere formula.
    pub horizontalized: bool,
}

impl AdmissibleForm {
    pub fn new(manifold: Manifold, j: JMap, horizontalized: bool) -> Result<Self> {
        manifold.validate()?;
        if manifold.m() != j.m() {
            return Err(Error::DimensionMismatch {
                expected: manifold.m(),
                actual: j.m(),
            });
        }
        Ok(Self {
            manifold,
            j,
            horizontalized: matches!(manifold, Manifold::Sphere { .. }) || horizontalized,
        })
    }

    pub fn sphere(j: JMap) -> Self {
        let m = j.m();
        Self::new(Manifold::Sphere { m }, j, true).expect("consistent dimensions")
    }

    pub fn stiefel(j: JMap, r: usize, horizontalized: bool) -> Result<Self> {
        let m = j.m();
        Self::new(Manifold::Stiefel { m, r }, j, horizontalized)
    }

    pub fn with_j(&self, j: JMap) -> Result<Self> {
        Self::new(self.manifold, j, self.horizontalized)
    }

    pub fn kappa(&self, p: &Point, x: &Tangent) -> TValue {
        match self.manifold {
            Manifold::Sphere { .. } => kappa_sphere(&self.j, p, x),
            Manifold::Stiefel { .. } => {
                if self.horizontalized {
                    kappa_horizontal(&self.j, p, x)
                } else {
                    kappa_stiefel(&self.j, p, x)
                }
            }
        }
    }

    /// `X + κ(X)^#`.
    pub fn lift(&self, p: &Point, x: &Tangent) -> Tangent {
        x + self.manifold.t_field(p, self.kappa(p, x))
    }

    pub fn metric(&self, p: &Point, x: &Tangent, y: &Tangent) -> f64 {
        re_inner(&self.lift(p, x), &self.lift(p, y))
    }

    /// Gram matrix of `g_κ` on a frame.
    pub fn gram(&self, p: &Point, frame: &[Tangent]) -> DMatrix<f64> {
        let lifted: Vec<Tangent> = frame.iter().map(|x| self.lift(p, x)).collect();
        DMatrix::from_fn(frame.len(), frame.len(), |a, b| re_inner(&lifted[a], &lifted[b]))
    }
}

fn top_inner(a: &CMat, b: &CMat, m: usize) -> f64 {
    let mut s = 0.0;
    for c in 0..a.ncols() {
        for r in 0..m {
            let (x, y) = (a[(r, c)], b[(r, c)]);
            s += x.re * y.re + x.im * y.im;
        }
    }
    s
}

/// `J_k` applied to the top `m` rows of `q`, padded with zeros.
fn j_field(j: &JMap, k: usize, q: &CMat) -> CMat {
    let m = j.m();
    let top = j.image(k) * q.rows(0, m);
    let mut out = CMat::zeros(q.nrows(), q.ncols());
    out.rows_mut(0, m).copy_from(&top);
    out
}

/// Sphere form: `κ^k = ‖u‖²⟨j_k u, U⟩ − ⟨U, iu⟩⟨j_k u, iu⟩` with
/// `⟨a, b⟩ = Re(a* b)`.
pub fn kappa_sphere(j: &JMap, p: &Point, x: &Tangent) -> TValue {
    let m = j.m();
    let q = p.matrix();
    let u: Vec<C64> = (0..m).map(|k| q[(k, 0)]).collect();
    let uu: Vec<C64> = (0..m).map(|k| x[(k, 0)]).collect();
    let iu: Vec<C64> = u.iter().map(|z| I * z).collect();
    let dot = |a: &[C64], b: &[C64]| -> f64 { a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum() };
    let norm2 = dot(&u, &u);
    let mut out = [0.0; 2];
    for (k, slot) in out.iter_mut().enumerate() {
        let jk = j.image(k);
        let ju: Vec<C64> = (0..m).map(|r| (0..m).map(|c| jk[(r, c)] * u[c]).sum()).collect();
        *slot = norm2 * dot(&ju, &uu) - dot(&uu, &iu) * dot(&ju, &iu);
    }
    out
}

/// Stiefel form `κ^k(X) = g₀(X, 𝒥_k Q) = Re tr(X* 𝒥_k Q)`.
pub fn kappa_stiefel(j: &JMap, p: &Point, x: &Tangent) -> TValue {
    let m = j.m();
    let q = p.matrix();
    [top_inner(x, &j_field(j, 0, q), m), top_inner(x, &j_field(j, 1, q), m)]
}

/// `κ_𝓗(X) = ‖𝔦^#‖²κ(X) − g₀(X, 𝔦^#)κ(𝔦^#)`.
pub fn kappa_horizontal(j: &JMap, p: &Point, x: &Tangent) -> TValue {
    horizontalize(j, p, x, kappa_stiefel)
}

/// Horizontalization of any t-valued form with respect to the single
/// generator of `G`.
pub fn horizontalize<F>(j: &JMap, p: &Point, x: &Tangent, kappa: F) -> TValue
where
    F: Fn(&JMap, &Point, &Tangent) -> TValue,
{
    let manifold = Manifold::Stiefel {
        m: j.m(),
        r: p.r(),
    };
    let ig = manifold.fundamental(Generator::G, p);
    let n2 = re_inner(&ig, &ig);
    let g = re_inner(x, &ig);
    let kx = kappa(j, p, x);
    let ki = kappa(j, p, &ig);
    [n2 * kx[0] - g * ki[0], n2 * kx[1] - g * ki[1]]
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub points: usize,
    pub t_horizontal: f64,
    pub g_horizontal: f64,
    pub t_invariant: f64,
    pub g_invariant: f64,
    pub tol: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Horizontality and invariance of `κ` at random points: `κ(Z_k^#) = 0`,
/// `κ(𝔦^#) = 0`, and `κ_{a·p}(a·X) = κ_p(X)` for random `a ∈ G`, `a ∈ T`.
pub fn check_admissible(form: &AdmissibleForm, n_points: usize, seed: u64, tol: f64) -> AdmissibilityReport {
    let mf = form.manifold;
    let rows: Vec<[f64; 4]> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
            let p = mf.random_point(&mut rng);
            let x = mf.random_tangent(&p, &mut rng);
            let norm = |c: TValue| c[0].abs().max(c[1].abs());
            let th = norm(form.kappa(&p, &mf.fundamental(Generator::Z1, &p)))
                .max(norm(form.kappa(&p, &mf.fundamental(Generator::Z2, &p))));
            let gh = norm(form.kappa(&p, &mf.fundamental(Generator::G, &p)));
            let base = form.kappa(&p, &x);
            let diff = |c: TValue| (c[0] - base[0]).abs().max((c[1] - base[1]).abs());
            let tm = mf.t_matrix(rng.random::<f64>() * std::f64::consts::TAU, rng.random::<f64>() * std::f64::consts::TAU);
            let ti = diff(form.kappa(&mf.act(&tm, &p), &(&tm * &x)));
            let gm = mf.g_matrix(rng.random::<f64>() * std::f64::consts::TAU);
            let gi = diff(form.kappa(&mf.act(&gm, &p), &(&gm * &x)));
            [th, gh, ti, gi]
        })
        .collect();
    let max = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    let mut report = AdmissibilityReport {
        points: n_points,
        t_horizontal: max(0),
        g_horizontal: max(1),
        t_invariant: max(2),
        g_invariant: max(3),
        tol,
        ..Default::default()
    };
    for (name, v) in [
        ("T-horizontality", report.t_horizontal),
        ("G-horizontality", report.g_horizontal),
        ("T-invariance", report.t_invariant),
        ("G-invariance", report.g_invariant),
    ] {
        if v >= tol {
            report.failures.push(format!("{name} residual {v:.3e}"));
        }
    }
    report.passed = report.failures.is_empty();
    report
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntertwiningReport {
    pub weight: Weight,
    pub points: usize,
    /// `max |μ(κ_p(X)) − μ(κ'_{E p}(E X))|`.
    pub max_residual: f64,
    /// `max ‖E(a·p) − a·E(p)‖` over random `a ∈ G`, `a ∈ T`.
    pub equivariance_residual: f64,
    /// `‖E*E − I‖`.
    pub isometry_residual: f64,
    /// Tangency of pushed-forward vectors.
    pub tangency_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// `E_μ = diag(A_Z, I₂)` with `Z` the direction of `μ` and `A_Z` the
/// eigen-alignment conjugator.
pub fn e_mu(j: &JMap, j2: &JMap, mu: Weight) -> Result<CMat> {
    if mu.p == 0 && mu.q == 0 {
        return Err(Error::InvalidParameter("the zero weight has no direction".into()));
    }
    let a = conjugator(j, j2, mu.direction(), DEFAULT_SPECTRAL_TOL)?;
    let m = j.m();
    let mut e = CMat::identity(m + 2, m + 2);
    e.view_mut((0, 0), (m, m)).copy_from(&a);
    Ok(e)
}

/// Residuals of `μ∘κ = E_μ^*(μ∘κ')` at random points, without judging them.
pub fn intertwining_report(
    form: &AdmissibleForm,
    j2: &JMap,
    mu: Weight,
    n_points: usize,
    seed: u64,
    tol: f64,
) -> Result<IntertwiningReport> {
    let other = form.with_j(j2.clone())?;
    let e = e_mu(&form.j, j2, mu)?;
    let mf = form.manifold;
    let (p_w, q_w) = (mu.p as f64, mu.q as f64);
    let rows: Vec<[f64; 3]> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let p = mf.random_point(&mut rng);
            let x = mf.random_tangent(&p, &mut rng);
            let ep = mf.act(&e, &p);
            let ex = &e * &x;
            let k = form.kappa(&p, &x);
            let k2 = other.kappa(&ep, &ex);
            let res = (p_w * k[0] + q_w * k[1] - (p_w * k2[0] + q_w * k2[1])).abs();
            let tm = mf.t_matrix(rng.random::<f64>() * 6.0, rng.random::<f64>() * 6.0);
            let gm = mf.g_matrix(rng.random::<f64>() * 6.0);
            let eq_t = fro_norm(&(&e * &tm * p.matrix() - &tm * ep.matrix()));
            let eq_g = fro_norm(&(&e * &gm * p.matrix() - &gm * ep.matrix()));
            [res, eq_t.max(eq_g), mf.tangency_residual(&ep, &ex)]
        })
        .collect();
    let max = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
    let s = mf.s();
    let isometry_residual = fro_norm(&(e.adjoint() * &e - CMat::identity(s, s)));
    let max_residual = max(0);
    Ok(IntertwiningReport {
        weight: mu,
        points: n_points,
        max_residual,
        equivariance_residual: max(1),
        isometry_residual,
        tangency_residual: max(2),
        tol,
        passed: max_residual < tol && max(1) < 1e-12 && isometry_residual < 1e-12,
    })
}

/// As [`intertwining_report`], failing with a hypothesis violation when the
/// residual reaches `tol` or `E_μ` cannot be built.
pub fn verify_intertwining(
    form: &AdmissibleForm,
    j2: &JMap,
    mu: Weight,
    n_points: usize,
    seed: u64,
    tol: f64,
) -> Result<IntertwiningReport> {
    let report = intertwining_report(form, j2, mu, n_points, seed, tol)?;
    if !report.passed {
        return Err(Error::Hypothesis(format!(
            "intertwining for weight {mu} fails: residual {:.3e}, equivariance {:.3e}, isometry {:.3e}",
            report.max_residual, report.equivariance_residual, report.isometry_residual
        )));
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolumeReport {
    pub points: usize,
    /// `max |det Gram(g_κ) − det Gram(g₀)|` on `g₀`-orthonormal frames.
    pub max_deviation: f64,
    pub frame_dim: usize,
}

/// Volume preservation: Gram determinants of `g_κ` and `g₀` agree on an
/// orthonormal tangent frame.
pub fn volume_check(form: &AdmissibleForm, n_points: usize, seed: u64) -> VolumeReport {
    let mf = form.manifold;
    let zero = AdmissibleForm {
        manifold: mf,
        j: JMap::zero(form.j.m()),
        horizontalized: form.horizontalized,
    };
    let devs: Vec<(f64, usize)> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x51_7CC1_B727_220A_u64.wrapping_mul(i as u64 + 1)));
            let p = mf.random_point(&mut rng);
            let frame = mf.tangent_basis(&p);
            let dk = form.gram(&p, &frame).determinant();
            let d0 = zero.gram(&p, &frame).determinant();
            ((dk - d0).abs(), frame.len())
        })
        .collect();
    VolumeReport {
        points: n_points,
        max_deviation: devs.iter().map(|d| d.0).fold(0.0, f64::max),
        frame_dim: devs.first().map_or(mf.dim(), |d| d.1),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReductionReport {
    pub points: usize,
    /// `max |κ_𝓗(X) − κ_sphere(X)|` over the sampled pairs on `V_1(C^{m+2})`.
    pub max_difference: f64,
}

/// For `r = 1` the horizontalized Stiefel form is the sphere form.
pub fn sphere_reduction_check(j: &JMap, n_points: usize, seed: u64) -> ReductionReport {
    let mf = Manifold::Stiefel { m: j.m(), r: 1 };
    let diffs: Vec<f64> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x6A09_E667_F3BC_C909_u64.wrapping_mul(i as u64 + 1)));
            let p = mf.random_point(&mut rng);
            let x = mf.random_tangent(&p, &mut rng);
            let a = kappa_horizontal(j, &p, &x);
            let b = kappa_sphere(j, &p, &x);
            (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
        })
        .collect();
    ReductionReport {
        points: n_points,
        max_difference: diffs.into_iter().fold(0.0, f64::max),
    }
}
