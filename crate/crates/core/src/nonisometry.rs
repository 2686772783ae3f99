//! Connection forms on the principal torus bundle over the sphere quotient,
//! their exterior derivatives, and the non-isometry verdict for pairs of
//! j-maps.
//!
//! Everything is evaluated upstairs on `M̂ = {u ≠ 0, v₁ ≠ 0, v₂ ≠ 0}` in
//! `S^{2m+3}` through the projection to the circle quotient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AdmissibleForm, Generator, Manifold, Point, TValue, Tangent};
use crate::jmaps::{
    find_equivalence, invariant_gap, is_generic, is_isospectral, EquivalenceSearch, EquivalenceSearchConfig,
    GenericityReport, InvariantGap, IsospectralityReport, JMap, DEFAULT_INVARIANT_TOL, DEFAULT_SPECTRAL_TOL,
};
use crate::linalg::{fro_norm, re_inner, CMat, C64, I};

/// Below this `|v_j|` a point is treated as outside `M̂`.
pub const DOMAIN_TOL: f64 = 1e-10;

fn require_sphere(p: &Point) -> Result<usize> {
    if p.r() != 1 {
        return Err(Error::Domain("connection forms are defined on the sphere only".into()));
    }
    Ok(p.s() - 2)
}

/// `ω₀^j(X) = ⟨V_j, i v_j⟩ / |v_j|²`.
pub fn omega0(p: &Point, x: &Tangent) -> Result<TValue> {
    let m = require_sphere(p)?;
    let q = p.matrix();
    let mut out = [0.0; 2];
    for (k, o) in out.iter_mut().enumerate() {
        let v = q[(m + k, 0)];
        let n2 = v.norm_sqr();
        if n2.sqrt() < DOMAIN_TOL {
            return Err(Error::Domain(format!("|v_{}| = {:e} vanishes: point outside the principal part", k + 1, n2.sqrt())));
        }
        *o = (x[(m + k, 0)].conj() * (I * v)).re / n2;
    }
    Ok(out)
}

/// `ω_λ = ω₀ + κ`.
pub fn omega_lambda(form: &AdmissibleForm, p: &Point, x: &Tangent) -> Result<TValue> {
    if !matches!(form.manifold, Manifold::Sphere { .. }) {
        return Err(Error::Domain("connection forms are defined on the sphere only".into()));
    }
    let w = omega0(p, x)?;
    let k = form.kappa(p, x);
    Ok([w[0] + k[0], w[1] + k[1]])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitGram {
    /// Quotient metric on `Z₁^*, Z₂^*`.
    pub gram: [[f64; 2]; 2],
    /// Area of the torus orbit, `4π²·sqrt(det gram)`.
    pub area: f64,
}

/// Gram matrix of the torus fields on the circle quotient: the `g_κ`
/// metric on the parts orthogonal to the `G`-orbit.
pub fn orbit_gram(form: &AdmissibleForm, p: &Point) -> Result<OrbitGram> {
    let mf = form.manifold;
    if !matches!(mf, Manifold::Sphere { .. }) {
        return Err(Error::Domain("orbit Gram matrices are computed on the sphere only".into()));
    }
    let z = [mf.fundamental(Generator::Z1, p), mf.fundamental(Generator::Z2, p)];
    let g = mf.fundamental(Generator::G, p);
    let gg = form.metric(p, &g, &g);
    let mut gram = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let mut v = form.metric(p, &z[a], &z[b]);
            if gg > 0.0 {
                v -= form.metric(p, &z[a], &g) * form.metric(p, &z[b], &g) / gg;
            }
            gram[a][b] = v;
        }
    }
    let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
    Ok(OrbitGram {
        gram,
        area: 4.0 * std::f64::consts::PI * std::f64::consts::PI * det.max(0.0).sqrt(),
    })
}

/// `S_a = {|v₁| = |v₂| = a}` for `a ∈ (0, 1/√2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    a: f64,
}

impl LevelSet {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < std::f64::consts::FRAC_1_SQRT_2) {
            return Err(Error::InvalidParameter(format!("level a = {a} must lie in (0, 1/sqrt 2)")));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Rescale the `u`, `v₁`, `v₂` blocks to norms `√(1−2a²)`, `a`, `a`.
    pub fn retract(&self, m: usize, x: &CMat) -> Result<Point> {
        let mut q = x.clone();
        let targets = [(1.0 - 2.0 * self.a * self.a).sqrt(), self.a, self.a];
        for (b, rows) in blocks(m).into_iter().enumerate() {
            let n = rows.clone().map(|r| q[(r, 0)].norm_sqr()).sum::<f64>().sqrt();
            if n < DOMAIN_TOL {
                return Err(Error::Domain("block vanishes; cannot retract to the level set".into()));
            }
            for r in rows {
                q[(r, 0)] *= C64::new(targets[b] / n, 0.0);
            }
        }
        Ok(Point::from_matrix(q))
    }

    pub fn random_point<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Point {
        loop {
            let p = Manifold::Sphere { m }.random_point(rng);
            if let Ok(q) = self.retract(m, p.matrix()) {
                return q;
            }
        }
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        let m = p.s() - 2;
        let q = p.matrix();
        (q[(m, 0)].norm() - self.a).abs() < tol && (q[(m + 1, 0)].norm() - self.a).abs() < tol && (fro_norm(q) - 1.0).abs() < tol
    }
}

fn blocks(m: usize) -> [std::ops::Range<usize>; 3] {
    [0..m, m..m + 1, m + 1..m + 2]
}

/// Where a finite-difference computation lives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum Domain {
    Sphere,
    LevelSet { level: LevelSet },
}

impl Domain {
    /// Orthogonal projection of an ambient vector onto the tangent space.
    pub fn project(&self, p: &Point, x: &CMat) -> Tangent {
        let m = p.s() - 2;
        let q = p.matrix();
        match self {
            Domain::Sphere => {
                let c = re_inner(q, x);
                x - q * C64::new(c, 0.0)
            }
            Domain::LevelSet { .. } => {
                let mut out = x.clone();
                for rows in blocks(m) {
                    let mut b = CMat::zeros(q.nrows(), 1);
                    for r in rows {
                        b[(r, 0)] = q[(r, 0)];
                    }
                    let n2 = re_inner(&b, &b);
                    if n2 > 0.0 {
                        out -= &b * C64::new(re_inner(&b, x) / n2, 0.0);
                    }
                }
                out
            }
        }
    }

    pub fn retract(&self, m: usize, x: &CMat) -> Result<Point> {
        match self {
            Domain::Sphere => {
                let n = fro_norm(x);
                Ok(Point::from_matrix(x / C64::new(n, 0.0)))
            }
            Domain::LevelSet { level } => level.retract(m, x),
        }
    }

    pub fn random_tangent<R: Rng + ?Sized>(&self, p: &Point, rng: &mut R) -> Tangent {
        let g = crate::linalg::gaussian_matrix(p.s(), 1, rng);
        self.project(p, &g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExteriorDerivative {
    pub value: TValue,
    pub h: f64,
    /// Round-off level of the central differences, `ε_mach·max|ω|/h`.
    pub noise_floor: f64,
}

/// `dω(X, Y) = X(ω(Ỹ)) − Y(ω(X̃)) − ω([X̃, Ỹ])` by central differences,
/// with `X̃, Ỹ` the projected ambient-constant extensions and the bracket
/// computed as `D_X Ỹ − D_Y X̃` by the same scheme.
pub fn finite_diff_d<F>(omega: F, domain: Domain, p: &Point, x: &Tangent, y: &Tangent, h: f64) -> Result<ExteriorDerivative>
where
    F: Fn(&Point, &Tangent) -> Result<TValue>,
{
    if !(h > 1e-12 && h < 1.0) {
        return Err(Error::InvalidParameter(format!("step h = {h:e} outside (1e-12, 1)")));
    }
    let m = p.s() - 2;
    let q = p.matrix();
    let shifted = |dir: &Tangent, s: f64| domain.retract(m, &(q + dir * C64::new(s, 0.0)));
    let mut scale: f64 = 0.0;
    // Directional derivative of `ω(extension of w)` along `dir`, and of the
    // extension itself.
    let mut derive = |dir: &Tangent, w: &Tangent| -> Result<(TValue, Tangent)> {
        let (pp, pm) = (shifted(dir, h)?, shifted(dir, -h)?);
        let (wp, wm) = (domain.project(&pp, w), domain.project(&pm, w));
        let (fp, fm) = (omega(&pp, &wp)?, omega(&pm, &wm)?);
        scale = scale.max(fp[0].abs()).max(fp[1].abs()).max(fm[0].abs()).max(fm[1].abs());
        let dw = (wp - wm) / C64::new(2.0 * h, 0.0);
        Ok(([(fp[0] - fm[0]) / (2.0 * h), (fp[1] - fm[1]) / (2.0 * h)], dw))
    };
    let (xy, dxy) = derive(x, y)?;
    let (yx, dyx) = derive(y, x)?;
    let bracket = domain.project(p, &(dxy - dyx));
    let wb = omega(p, &bracket)?;
    Ok(ExteriorDerivative {
        value: [xy[0] - yx[0] - wb[0], xy[1] - yx[1] - wb[1]],
        h,
        noise_floor: f64::EPSILON * scale.max(1.0) / h,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosednessReport {
    pub level: f64,
    pub samples: usize,
    pub h: f64,
    pub max_abs: f64,
}

/// `max |d(ω₀)^L(X, Y)|` over random points and tangent pairs on `S_a`.
pub fn omega0_closedness(m: usize, level: LevelSet, samples: usize, h: f64, seed: u64) -> Result<ClosednessReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = Domain::LevelSet { level };
    let mut max_abs: f64 = 0.0;
    for _ in 0..samples {
        let p = level.random_point(m, &mut rng);
        let x = domain.random_tangent(&p, &mut rng);
        let y = domain.random_tangent(&p, &mut rng);
        let d = finite_diff_d(omega0, domain, &p, &x, &y, h)?;
        max_abs = max_abs.max(d.value[0].abs()).max(d.value[1].abs());
    }
    Ok(ClosednessReport {
        level: level.a(),
        samples,
        h,
        max_abs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureContrast {
    pub level: f64,
    pub samples: usize,
    pub h: f64,
    /// `max |dκ_A − dκ_B|` on `S_a`.
    pub max_difference: f64,
    /// `max |dκ_A|`, for scale.
    pub max_a: f64,
    pub max_noise_floor: f64,
}

/// Compare `dκ` of two forms on the same sampled tangent pairs of `S_a`.
pub fn curvature_contrast(ja: &JMap, jb: &JMap, level: LevelSet, samples: usize, h: f64, seed: u64) -> Result<CurvatureContrast> {
    let m = ja.m();
    let (fa, fb) = (AdmissibleForm::sphere(ja.clone()), AdmissibleForm::sphere(jb.clone()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = Domain::LevelSet { level };
    let (mut diff, mut max_a, mut floor): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let p = level.random_point(m, &mut rng);
        let x = domain.random_tangent(&p, &mut rng);
        let y = domain.random_tangent(&p, &mut rng);
        let da = finite_diff_d(|q: &Point, t: &Tangent| Ok(fa.kappa(q, t)), domain, &p, &x, &y, h)?;
        let db = finite_diff_d(|q: &Point, t: &Tangent| Ok(fb.kappa(q, t)), domain, &p, &x, &y, h)?;
        for k in 0..2 {
            diff = diff.max((da.value[k] - db.value[k]).abs());
            max_a = max_a.max(da.value[k].abs());
        }
        floor = floor.max(da.noise_floor).max(db.noise_floor);
    }
    Ok(CurvatureContrast {
        level: level.a(),
        samples,
        h,
        max_difference: diff,
        max_a,
        max_noise_floor: floor,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The two maps coincide.
    Identical,
    /// An explicit equivalence was found; the criterion does not apply.
    Equivalent,
    /// Non-equivalent and generic: the quotients are not isometric.
    NonIsometric,
    Inconclusive,
}

impl Verdict {
    pub fn describe(&self) -> &'static str {
        match self {
            Verdict::Identical => "isometric (identical)",
            Verdict::Equivalent => "equivalent, criterion inapplicable",
            Verdict::NonIsometric => "non-isometric",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonisometryConfig {
    pub invariant_tol: f64,
    pub spectral_tol: f64,
    pub generic_tol: f64,
    pub search: EquivalenceSearchConfig,
}

impl Default for NonisometryConfig {
    fn default() -> Self {
        Self {
            invariant_tol: DEFAULT_INVARIANT_TOL,
            spectral_tol: DEFAULT_SPECTRAL_TOL,
            generic_tol: 1e-8,
            search: EquivalenceSearchConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonisometryReport {
    pub verdict: Verdict,
    pub summary: String,
    pub isospectrality: IsospectralityReport,
    pub invariants: InvariantGap,
    pub invariants_separate: bool,
    pub equivalence: EquivalenceSearch,
    pub generic_a: GenericityReport,
    pub generic_b: GenericityReport,
    /// Checks that prevented a definite answer.
    pub failing_checks: Vec<String>,
}

/// Decide whether the sphere quotients of `ja` and `jb` are isometric.
pub fn nonisometry_report(ja: &JMap, jb: &JMap, manifold: Manifold, config: &NonisometryConfig) -> Result<NonisometryReport> {
    if let Manifold::Stiefel { .. } = manifold {
        return Err(Error::InvalidParameter(
            "non-isometry criterion not available for Stiefel quotients (open problem)".into(),
        ));
    }
    if ja.m() != manifold.m() || jb.m() != manifold.m() {
        return Err(Error::DimensionMismatch {
            expected: manifold.m(),
            actual: if ja.m() != manifold.m() { ja.m() } else { jb.m() },
        });
    }
    let isospectrality = is_isospectral(ja, jb, config.spectral_tol)?;
    let invariants = invariant_gap(ja, jb);
    let invariants_separate = invariants.gap > config.invariant_tol;
    let equivalence = find_equivalence(ja, jb, &config.search)?;
    let generic_a = is_generic(ja, config.generic_tol);
    let generic_b = is_generic(jb, config.generic_tol);

    let mut failing = Vec::new();
    let verdict = if ja == jb {
        Verdict::Identical
    } else if equivalence.witness.is_some() {
        Verdict::Equivalent
    } else {
        if !isospectrality.isospectral {
            failing.push(format!(
                "not isospectral: max discrepancy {:e}",
                isospectrality.max_discrepancy
            ));
        }
        if !invariants_separate {
            failing.push(format!(
                "invariants do not separate: gap {:e} <= {:e}",
                invariants.gap, config.invariant_tol
            ));
        }
        if !generic_b.generic {
            failing.push(format!(
                "second map not generic: commutant dimension {}",
                generic_b.commutant_dimension
            ));
        }
        if failing.is_empty() {
            Verdict::NonIsometric
        } else {
            Verdict::Inconclusive
        }
    };
    let summary = match verdict {
        Verdict::NonIsometric => format!(
            "non-isometric: invariant gap {:.3e} over all 16 symmetries, commutant dimension {}",
            invariants.gap, generic_b.commutant_dimension
        ),
        Verdict::Inconclusive => format!("inconclusive: {}", failing.join("; ")),
        v => v.describe().to_string(),
    };
    Ok(NonisometryReport {
        verdict,
        summary,
        isospectrality,
        invariants,
        invariants_separate,
        equivalence,
        generic_a,
        generic_b,
        failing_checks: failing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jmaps::tests::random_jmap;

    fn point(u: [f64; 3], v1: C64, v2: C64) -> Point {
        let n: f64 = (u.iter().map(|x| x * x).sum::<f64>() + v1.norm_sqr() + v2.norm_sqr()).sqrt();
        let uu: Vec<C64> = u.iter().map(|&x| C64::new(x / n, 0.0)).collect();
        Point::sphere(&uu, [v1 / n, v2 / n]).unwrap()
    }

    #[test]
    fn omega0_is_dual_to_the_torus_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mf = Manifold::Sphere { m: 3 };
        for _ in 0..50 {
            let p = mf.random_point(&mut rng);
            let w1 = omega0(&p, &mf.fundamental(Generator::Z1, &p)).unwrap();
            let w2 = omega0(&p, &mf.fundamental(Generator::Z2, &p)).unwrap();
            assert!((w1[0] - 1.0).abs() < 1e-14 && w1[1].abs() < 1e-14);
            assert!(w2[0].abs() < 1e-14 && (w2[1] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn omega0_plug_in() {
        let a = C64::new(0.4, 0.3);
        let p = point([0.5, 0.1, 0.2], a, C64::new(0.3, 0.0));
        let mut x = CMat::zeros(5, 1);
        x[(3, 0)] = I * p.matrix()[(3, 0)] * C64::new(0.7, 0.0);
        let w = omega0(&p, &x).unwrap();
        assert!((w[0] - 0.7).abs() < 1e-14 && w[1] == 0.0);
    }

    #[test]
    fn omega0_domain_error() {
        let p = point([0.5, 0.1, 0.2], C64::new(0.0, 0.0), C64::new(0.3, 0.0));
        assert!(matches!(omega0(&p, &CMat::zeros(5, 1)), Err(Error::Domain(_))));
    }

    #[test]
    fn omega_lambda_of_zero_map_is_omega0() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mf = Manifold::Sphere { m: 3 };
        let f0 = AdmissibleForm::sphere(JMap::zero(3));
        let f = AdmissibleForm::sphere(random_jmap(3, 3));
        for _ in 0..20 {
            let p = mf.random_point(&mut rng);
            let x = mf.random_tangent(&p, &mut rng);
            assert_eq!(omega_lambda(&f0, &p, &x).unwrap(), omega0(&p, &x).unwrap());
            let z1 = omega_lambda(&f, &p, &mf.fundamental(Generator::Z1, &p)).unwrap();
            assert!((z1[0] - 1.0).abs() < 1e-12 && z1[1].abs() < 1e-12);
        }
    }

    #[test]
    fn orbit_gram_closed_form() {
        let half = C64::new(0.5, 0.0);
        let u = (1.0f64 - 0.5).sqrt();
        let p = Point::sphere(&[C64::new(u, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)], [half, half * I]).unwrap();
        let f = AdmissibleForm::sphere(random_jmap(3, 4));
        let g = orbit_gram(&f, &p).unwrap();
        assert!((g.gram[0][0] - 0.25).abs() < 1e-12 && (g.gram[1][1] - 0.25).abs() < 1e-12);
        assert!(g.gram[0][1].abs() < 1e-12);
        assert!((g.area - std::f64::consts::PI.powi(2)).abs() < 1e-11);
    }

    #[test]
    fn exact_forms_are_closed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = crate::linalg::gaussian_matrix(5, 1, &mut rng);
        let df = |_: &Point, t: &Tangent| Ok([re_inner(&c, t), 0.0]);
        let mf = Manifold::Sphere { m: 3 };
        let p = mf.random_point(&mut rng);
        let x = Domain::Sphere.random_tangent(&p, &mut rng);
        let y = Domain::Sphere.random_tangent(&p, &mut rng);
        let d = finite_diff_d(df, Domain::Sphere, &p, &x, &y, 1e-4).unwrap();
        assert!(d.value[0].abs() < 1e-7, "{:?}", d.value);
    }

    #[test]
    fn level_set_bounds() {
        assert!(LevelSet::new(0.0).is_err());
        assert!(LevelSet::new(0.75).is_err());
        let l = LevelSet::new(0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = l.random_point(3, &mut rng);
        assert!(l.contains(&p, 1e-12));
    }

    #[test]
    fn stiefel_is_refused() {
        let j = random_jmap(3, 7);
        let err = nonisometry_report(&j, &j, Manifold::Stiefel { m: 3, r: 2 }, &NonisometryConfig::default()).unwrap_err();
        assert!(err.to_string().contains("Stiefel"));
    }
}
