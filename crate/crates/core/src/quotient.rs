//! The quotient `G∖M` with the distance induced by `g_κ`:
//! orbit distances, stabilizers, and the stratification report.
//!
//! Distances are first-order: the chord between two nearby points is
//! projected to the tangent space at their midpoint and measured with
//! `g_κ` there. The quotient distance minimizes this over the `G`-orbit of
//! the second point.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::geometry::{project_tangent, AdmissibleForm, Generator, Manifold, Point};
use crate::linalg::{fro_norm, polar_factor, CMat, C64};

/// Stabilizer tolerance on block norms.
pub const STABILIZER_TOL: f64 = 1e-8;
pub const DEFAULT_RESOLUTION: usize = 64;
const GOLDEN_TOL: f64 = 1e-10;

/// Nearest point of the manifold to an ambient matrix (normalization or
/// polar factor).
fn retract(a: &CMat) -> CMat {
    if a.ncols() == 1 {
        let n = fro_norm(a);
        a / C64::new(n, 0.0)
    } else {
        polar_factor(a)
    }
}

/// `g_κ`-length of the chord `q − p` projected to the tangent space at the
/// retracted midpoint. Symmetric in `p` and `q`.
pub fn local_distance(form: &AdmissibleForm, p: &Point, q: &Point) -> f64 {
    local_distance_raw(form, p.matrix(), q.matrix())
}

fn local_distance_raw(form: &AdmissibleForm, p: &CMat, q: &CMat) -> f64 {
    let w = retract(&(p + q));
    let chord = project_tangent(&w, &(q - p));
    let w = Point::from_matrix(w);
    form.metric(&w, &chord, &chord).max(0.0).sqrt()
}

/// Sum of [`local_distance`] over `segments` pieces of the retracted chord.
pub fn local_distance_segments(form: &AdmissibleForm, p: &Point, q: &Point, segments: usize) -> f64 {
    segmented(form, p.matrix(), q.matrix(), segments)
}

fn segmented(form: &AdmissibleForm, p: &CMat, q: &CMat, segments: usize) -> f64 {
    if segments <= 1 {
        return local_distance_raw(form, p, q);
    }
    let d = q - p;
    let mut prev = p.clone();
    let mut total = 0.0;
    for k in 1..=segments {
        let next = if k == segments {
            q.clone()
        } else {
            retract(&(p + &d * C64::new(k as f64 / segments as f64, 0.0)))
        };
        total += local_distance_raw(form, &prev, &next);
        prev = next;
    }
    total
}

/// Golden-section minimization of `f` on `[a, b]` to width `tol`.
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimize a 2π-periodic objective: uniform scan, then golden section in
/// the bracket around the best sample.
pub(crate) fn minimize_periodic<F: FnMut(f64) -> f64>(mut f: F, resolution: usize) -> (f64, f64) {
    let n = resolution.max(3);
    let step = std::f64::consts::TAU / n as f64;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..n {
        let th = i as f64 * step;
        let v = f(th);
        if v < best.1 {
            best = (th, v);
        }
    }
    let (th, v) = golden_min(&mut f, best.0 - step, best.0 + step, GOLDEN_TOL);
    if v < best.1 {
        (th, v)
    } else {
        best
    }
}

/// Distance on `G∖M` between the orbits of two representatives.
#[derive(Clone, Debug)]
pub struct QuotientMetric {
    pub form: AdmissibleForm,
    pub resolution: usize,
    pub segments: usize,
}

impl QuotientMetric {
    pub fn new(form: AdmissibleForm) -> Self {
        Self {
            form,
            resolution: DEFAULT_RESOLUTION,
            segments: 1,
        }
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn with_segments(mut self, segments: usize) -> Self {
        self.segments = segments.max(1);
        self
    }

    /// `min_θ d_loc(x, e^{iθ}·y)` together with the minimizing angle.
    pub fn distance_with_angle(&self, x: &Point, y: &Point) -> (f64, f64) {
        let mf = self.form.manifold;
        let (xm, ym) = (x.matrix(), y.matrix());
        minimize_periodic(
            |th| segmented(&self.form, xm, &(mf.g_matrix(th) * ym), self.segments),
            self.resolution,
        )
    }

    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        self.distance_with_angle(x, y).1
    }
}

/// [`QuotientMetric::distance`] with a single segment.
pub fn quotient_distance(form: &AdmissibleForm, x: &Point, y: &Point, resolution: usize) -> f64 {
    QuotientMetric::new(form.clone()).with_resolution(resolution).distance(x, y)
}

/// Ambient distance between `G`-orbits, `min_θ ‖x − e^{iθ}y‖`, in closed
/// form.
pub fn orbit_gap(manifold: Manifold, x: &Point, y: &Point) -> f64 {
    let m = manifold.m();
    let (xm, ym) = (x.matrix(), y.matrix());
    let xt = xm.rows(0, m);
    let yt = ym.rows(0, m);
    let cross: C64 = xt.iter().zip(yt.iter()).map(|(a, b)| a.conj() * b).sum();
    let phase = if cross.norm() > 0.0 { cross.conj() / cross.norm() } else { C64::new(1.0, 0.0) };
    let top: f64 = xt.iter().zip(yt.iter()).map(|(a, b)| (a - phase * b).norm_sqr()).sum();
    let bottom: f64 = xm
        .rows(m, 2)
        .iter()
        .zip(ym.rows(m, 2).iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    (top + bottom).max(0.0).sqrt()
}

/// Orbit equality up to `1e-9`.
pub fn same_orbit(manifold: Manifold, x: &Point, y: &Point) -> bool {
    orbit_gap(manifold, x, y) < 1e-9
}

/// Dimension of the `G`-stabilizer: 1 exactly on the fixed-point set.
pub fn stabilizer_dim(manifold: Manifold, p: &Point) -> usize {
    match manifold {
        Manifold::Stiefel { r, .. } if r >= 3 => 0,
        _ => usize::from(p.top_norm() < STABILIZER_TOL),
    }
}

/// Closed-form membership in `M̂ = {u ≠ 0, v₁ ≠ 0, v₂ ≠ 0}` for sphere points.
pub fn in_m_hat(p: &Point) -> bool {
    let v = p.v();
    p.top_norm() >= STABILIZER_TOL && v[0].norm() >= STABILIZER_TOL && v[1].norm() >= STABILIZER_TOL
}

/// Rank of `{𝔦^#, Z₁^#, Z₂^#}` at `p`; 3 iff both `G` and `T` act locally
/// freely there.
pub fn orbit_rank(manifold: Manifold, p: &Point) -> usize {
    let fields: Vec<CMat> = [Generator::G, Generator::Z1, Generator::Z2]
        .iter()
        .map(|&g| manifold.fundamental(g, p))
        .collect();
    let len = fields[0].len();
    let mut a = DMatrix::<f64>::zeros(2 * len, 3);
    for (c, f) in fields.iter().enumerate() {
        for (k, z) in f.iter().enumerate() {
            a[(2 * k, c)] = z.re;
            a[(2 * k + 1, c)] = z.im;
        }
    }
    a.svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > STABILIZER_TOL)
        .count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbifoldReport {
    pub manifold: Manifold,
    pub quotient_dim: usize,
    /// `None` when the singular set is empty.
    pub singular_dim: Option<usize>,
    pub codim: Option<usize>,
    pub is_orbifold: bool,
    pub singular_set: String,
}

/// Stratification of `G∖M`. The singular set is the image of the `G`-fixed
/// points: `(0, v)` with `|v| = 1` on the sphere (a round 3-sphere), the
/// frames with vanishing top block for Stiefel `r ≤ 2` (`S³` for `r = 1`,
/// `U(2)` for `r = 2`), and nothing for `r ≥ 3`.
pub fn orbifold_report(manifold: Manifold) -> OrbifoldReport {
    let quotient_dim = manifold.dim() - 1;
    let (singular_dim, singular_set) = match manifold {
        Manifold::Sphere { .. } | Manifold::Stiefel { r: 1, .. } => (Some(3), "S^3 (round)".to_string()),
        Manifold::Stiefel { r: 2, .. } => (Some(4), "U(2) (bi-invariant)".to_string()),
        Manifold::Stiefel { .. } => (None, "empty".to_string()),
    };
    let codim = singular_dim.map(|d| quotient_dim - d);
    OrbifoldReport {
        manifold,
        quotient_dim,
        singular_dim,
        codim,
        is_orbifold: codim.is_none_or(|c| c <= 2),
        singular_set,
    }
}

/// Sphere points prepared for fast orbit distances under the sphere form:
/// `J_k u` is cached per point, so every θ-evaluation costs O(m).
#[derive(Clone, Debug)]
pub struct PreparedSphere {
    m: usize,
    /// Per point: `[u (m), v (2), J1 u (m), J2 u (m)]`.
    data: Vec<C64>,
    stride: usize,
    resolution: usize,
}

impl PreparedSphere {
    pub fn new(form: &AdmissibleForm, points: &[Point]) -> Self {
        assert!(matches!(form.manifold, Manifold::Sphere { .. }), "sphere form required");
        let m = form.j.m();
        let stride = 3 * m + 2;
        let mut data = Vec::with_capacity(stride * points.len());
        for p in points {
            let q = p.matrix();
            data.extend((0..m + 2).map(|k| q[(k, 0)]));
            for k in 0..2 {
                let jk = form.j.image(k);
                data.extend((0..m).map(|r| (0..m).map(|c| jk[(r, c)] * q[(c, 0)]).sum::<C64>()));
            }
        }
        Self {
            m,
            data,
            stride,
            resolution: DEFAULT_RESOLUTION,
        }
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.stride
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    /// Rigorous lower bound for the quotient distance: the smallest chord
    /// over the orbit minus the part a deformation along the T-directions
    /// can absorb.
    pub fn lower_bound(&self, i: usize, j: usize) -> f64 {
        let (x, y) = (self.row(i), self.row(j));
        let m = self.m;
        let cross: C64 = (0..m).map(|k| x[k].conj() * y[k]).sum();
        let vdot: f64 = (m..m + 2).map(|k| (x[k].conj() * y[k]).re).sum();
        let mut lb2 = 2.0 - 2.0 * cross.norm() - 2.0 * vdot;
        for k in m..m + 2 {
            let s = (x[k] + y[k]).norm_sqr();
            if s > 0.0 {
                let im = (y[k].conj() * x[k]).im;
                lb2 -= 4.0 * im * im / s;
            }
        }
        lb2.max(0.0).sqrt()
    }

    /// Squared local distance between point `i` and `e^{iθ}·` point `j`.
    fn local_sq(&self, i: usize, j: usize, th: f64) -> f64 {
        let (x, y) = (self.row(i), self.row(j));
        let m = self.m;
        let e = C64::from_polar(1.0, th);
        // w = (x + y_θ)/n, c = y_θ − x; c is already tangent at w.
        let mut n2 = 0.0;
        let mut c2 = 0.0;
        let mut uw2 = 0.0;
        let mut uc_iuw = 0.0;
        for k in 0..m {
            let yk = e * y[k];
            let s = x[k] + yk;
            let d = yk - x[k];
            n2 += s.norm_sqr();
            c2 += d.norm_sqr();
            uw2 += s.norm_sqr();
            // ⟨d, i s⟩ = Re(conj(d) i s)
            uc_iuw += (d.conj() * s).im * -1.0;
        }
        let mut vs = [C64::new(0.0, 0.0); 2];
        let mut vd = [C64::new(0.0, 0.0); 2];
        for k in 0..2 {
            vs[k] = x[m + k] + y[m + k];
            vd[k] = y[m + k] - x[m + k];
            n2 += vs[k].norm_sqr();
            c2 += vd[k].norm_sqr();
        }
        if n2 <= 1e-300 {
            return f64::INFINITY;
        }
        let n = n2.sqrt();
        // Unnormalized s = n·u_w; fold the powers of n in at the end.
        let uw2 = uw2 / n2;
        let uc_iuw = uc_iuw / n;
        let mut kappa = [0.0; 2];
        for (k, kap) in kappa.iter_mut().enumerate() {
            let off = m + 2 + k * m;
            let mut ju_uc = 0.0;
            let mut ju_iuw = 0.0;
            for r in 0..m {
                let ju = (x[off + r] + e * y[off + r]) / n;
                let d = e * y[r] - x[r];
                let s = (x[r] + e * y[r]) / n;
                ju_uc += (ju.conj() * d).re;
                ju_iuw += (ju.conj() * s).im * -1.0;
            }
            *kap = uw2 * ju_uc - uc_iuw * ju_iuw;
        }
        let mut g = c2;
        for k in 0..2 {
            let w = vs[k] / n;
            // ⟨vd, i w⟩ and |w|²
            let cross = -(vd[k].conj() * w).im;
            g += 2.0 * kappa[k] * cross + kappa[k] * kappa[k] * w.norm_sqr();
        }
        g.max(0.0)
    }

    /// Quotient distance between points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        minimize_periodic(|th| self.local_sq(i, j, th), self.resolution).1.sqrt()
    }

    /// Quotient distance, or `None` when the lower bound already reaches
    /// `cutoff`.
    pub fn distance_below(&self, i: usize, j: usize, cutoff: f64) -> Option<f64> {
        if self.lower_bound(i, j) >= cutoff {
            return None;
        }
        let d = self.distance(i, j);
        (d < cutoff).then_some(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jmaps::JMap;
    use crate::linalg::random_su;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_j(m: usize, seed: u64) -> JMap {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        JMap::new(random_su(m, &mut r), random_su(m, &mut r)).unwrap()
    }

    fn nearby(mf: Manifold, p: &Point, step: f64, seed: u64) -> Point {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = mf.random_tangent(p, &mut rng);
        Point::from_matrix(retract(&(p.matrix() + x * C64::new(step, 0.0))))
    }

    #[test]
    fn local_distance_basics() {
        let mf = Manifold::Sphere { m: 3 };
        let form = AdmissibleForm::sphere(random_j(3, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = mf.random_point(&mut rng);
        assert_eq!(local_distance(&form, &p, &p), 0.0);
        let q = nearby(mf, &p, 0.2, 3);
        let a = local_distance(&form, &p, &q);
        let b = local_distance(&form, &q, &p);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn round_local_distance_is_the_chord() {
        let mf = Manifold::Sphere { m: 3 };
        let flat = AdmissibleForm::sphere(JMap::zero(3));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..20 {
            let p = mf.random_point(&mut rng);
            let q = nearby(mf, &p, 0.1 + 0.02 * seed as f64, 100 + seed);
            let dot: f64 = p.matrix().iter().zip(q.matrix().iter()).map(|(a, b)| (a.conj() * b).re).sum();
            let arc = dot.clamp(-1.0, 1.0).acos();
            let d = local_distance(&flat, &p, &q);
            assert!((d - 2.0 * (arc / 2.0).sin()).abs() < 1e-13);
            assert!((d - arc).abs() <= arc.powi(3) / 24.0 * 1.01);
        }
    }

    #[test]
    fn step_along_z1_has_orbit_length() {
        let mf = Manifold::Sphere { m: 3 };
        let form = AdmissibleForm::sphere(random_j(3, 5));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = mf.random_point(&mut rng);
        let eps = 1e-3;
        let v1 = p.v()[0].norm();
        let q = mf.act(&mf.t_matrix(eps, 0.0), &p);
        let d = local_distance(&form, &p, &q);
        assert!((d / (eps * v1) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn same_orbit_has_zero_quotient_distance() {
        let mf = Manifold::Sphere { m: 3 };
        let form = AdmissibleForm::sphere(random_j(3, 7));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = mf.random_point(&mut rng);
        let y = mf.act(&mf.g_matrix(2.1), &x);
        assert!(quotient_distance(&form, &x, &y, 64) < 1e-9);
        assert!(same_orbit(mf, &x, &y));
    }

    #[test]
    fn singular_set_is_a_round_three_sphere() {
        let mf = Manifold::Sphere { m: 3 };
        let flat = AdmissibleForm::sphere(JMap::zero(3));
        let z = C64::new(0.0, 0.0);
        let x = Point::sphere(&[z; 3], [C64::new(0.8, 0.0), C64::new(0.0, 0.6)]).unwrap();
        let y = Point::sphere(&[z; 3], [C64::new(0.7, 0.1), C64::new(0.1, 0.7)]).unwrap();
        let want = ((x.v()[0].conj() * y.v()[0] + x.v()[1].conj() * y.v()[1]).re).acos();
        let metric = QuotientMetric::new(flat).with_segments(4);
        assert!((metric.distance(&x, &y) / want - 1.0).abs() < 1e-3);
        assert_eq!(stabilizer_dim(mf, &x), 1);
    }

    #[test]
    fn round_quotient_matches_closed_form() {
        let mf = Manifold::Sphere { m: 3 };
        let metric = QuotientMetric::new(AdmissibleForm::sphere(JMap::zero(3))).with_segments(4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..20 {
            let x = mf.random_point(&mut rng);
            let y0 = nearby(mf, &x, 0.05 + 0.012 * seed as f64, 200 + seed);
            let y = mf.act(&mf.g_matrix(seed as f64), &y0);
            let ux: Vec<C64> = x.u();
            let uy: Vec<C64> = y.u();
            let cu: C64 = ux.iter().zip(&uy).map(|(a, b)| a.conj() * b).sum();
            let cv: f64 = (0..2).map(|k| (x.v()[k].conj() * y.v()[k]).re).sum();
            let want = (cu.norm() + cv).clamp(-1.0, 1.0).acos();
            let got = metric.distance(&x, &y);
            assert!((got / want - 1.0).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn prepared_kernel_matches_generic_path() {
        let mf = Manifold::Sphere { m: 3 };
        let form = AdmissibleForm::sphere(random_j(3, 10));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pts = Vec::new();
        for k in 0..10 {
            let p = mf.random_point(&mut rng);
            pts.push(nearby(mf, &p, 0.3, 300 + k));
            pts.push(p);
        }
        let prep = PreparedSphere::new(&form, &pts);
        let metric = QuotientMetric::new(form);
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                let a = prep.distance(i, j);
                let b = metric.distance(&pts[i], &pts[j]);
                assert!((a - b).abs() < 1e-9 * (1.0 + b), "{i},{j}: {a} vs {b}");
                assert!(prep.lower_bound(i, j) <= a + 1e-7, "{i},{j}: lb {} d {a}", prep.lower_bound(i, j));
            }
        }
    }

    #[test]
    fn stabilizers_and_m_hat() {
        let z = C64::new(0.0, 0.0);
        let mf = Manifold::Sphere { m: 3 };
        let p = Point::sphere(&[C64::new(0.5, 0.0), z, z], [C64::new(0.0, 0.5), C64::new(0.5f64.sqrt(), 0.0)]).unwrap();
        assert_eq!(stabilizer_dim(mf, &p), 0);
        assert!(in_m_hat(&p));
        assert_eq!(orbit_rank(mf, &p), 3);
        let q = Point::sphere(&[C64::new(0.6, 0.0), z, z], [z, C64::new(0.8, 0.0)]).unwrap();
        assert!(!in_m_hat(&q));
        assert_eq!(orbit_rank(mf, &q), 2);
        let st = Manifold::Stiefel { m: 3, r: 3 };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        assert_eq!(stabilizer_dim(st, &st.random_point(&mut rng)), 0);
    }

    #[test]
    fn stratification_reports() {
        let s = orbifold_report(Manifold::Sphere { m: 3 });
        assert_eq!((s.quotient_dim, s.singular_dim, s.codim, s.is_orbifold), (8, Some(3), Some(5), false));
        let r2 = orbifold_report(Manifold::Stiefel { m: 3, r: 2 });
        assert_eq!((r2.quotient_dim, r2.singular_dim, r2.codim, r2.is_orbifold), (15, Some(4), Some(11), false));
        let r3 = orbifold_report(Manifold::Stiefel { m: 3, r: 3 });
        assert_eq!((r3.singular_dim, r3.is_orbifold), (None, true));
    }
}
