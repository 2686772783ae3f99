//! Continuation along the isospectral variety through a random generic seed.
//!
//! Coordinates are `x ∈ R^{2(m²−1)}` in an orthonormal basis of
//! su(m) ⊕ su(m). The variety is cut out by the power sums
//! `p_k(θ) = tr((−i(cos θ J1 + sin θ J2))^k)`, `k = 2..m`, at `k+1` directions
//! each; by Newton's identities these fix every characteristic coefficient
//! of `a·J1 + b·J2`. The tangent is taken orthogonal to the conjugation orbit
//! and the parameter `t` is pseudo-arclength in these coordinates.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{invariant_gap, is_generic, is_isospectral, JMap, DEFAULT_INVARIANT_TOL, DEFAULT_SPECTRAL_TOL};
use crate::error::{Error, Result};
use crate::linalg::{commutator, coords_in, min_norm_solve, null_space, su_basis, CMat, C64};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub m: usize,
    pub t_values: Vec<f64>,
    pub seed: u64,
    /// Frobenius norm of the seed map j(0).
    pub scale: f64,
    pub max_step: f64,
    pub max_reseeds: usize,
    pub spectral_tol: f64,
    pub invariant_tol: f64,
}

impl FamilyConfig {
    pub fn new(m: usize, t_values: Vec<f64>, seed: u64) -> Self {
        Self {
            m,
            t_values,
            seed,
            scale: 1.0,
            max_step: 0.01,
            max_reseeds: 8,
            spectral_tol: DEFAULT_SPECTRAL_TOL,
            invariant_tol: DEFAULT_INVARIANT_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub t: f64,
    pub jmap: JMap,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FamilyValidation {
    pub passed: bool,
    /// Largest sorted-eigenvalue discrepancy of any member against j(0).
    pub max_isospectral_discrepancy: f64,
    /// Smallest invariant gap over pairs of members with distinct t.
    pub min_invariant_gap: Option<f64>,
    pub commutant_dimensions: Vec<usize>,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Family {
    pub m: usize,
    /// Seed actually used for j(0) after any re-seeding.
    pub seed: u64,
    pub reseeds: usize,
    pub members: Vec<FamilyMember>,
    pub validation: FamilyValidation,
}

struct Variety {
    basis: Vec<CMat>,
    /// (k, θ) pairs of the constraint equations.
    constraints: Vec<(usize, f64)>,
}

impl Variety {
    fn new(m: usize) -> Self {
        let mut constraints = Vec::new();
        for k in 2..=m {
            for i in 0..=k {
                constraints.push((k, std::f64::consts::PI * i as f64 / (k + 1) as f64));
            }
        }
        Self {
            basis: su_basis(m),
            constraints,
        }
    }

    fn dim(&self) -> usize {
        2 * self.basis.len()
    }

    fn hermitian(&self, j: &JMap, th: f64) -> CMat {
        (j.j1() * C64::new(th.cos(), 0.0) + j.j2() * C64::new(th.sin(), 0.0)) * C64::new(0.0, -1.0)
    }

    fn values(&self, x: &[f64]) -> Vec<f64> {
        let j = JMap::from_coords(&self.basis, x);
        self.constraints
            .iter()
            .map(|&(k, th)| {
                let h = self.hermitian(&j, th);
                let mut p = h.clone();
                for _ in 1..k {
                    p = &p * &h;
                }
                p.trace().re
            })
            .collect()
    }

    /// `∂p_k/∂x_a = k·Re tr(H^{k−1} ∂H/∂x_a)`.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let j = JMap::from_coords(&self.basis, x);
        let n = self.basis.len();
        let herm_basis: Vec<CMat> = self.basis.iter().map(|b| b * C64::new(0.0, -1.0)).collect();
        let mut jac = DMatrix::<f64>::zeros(self.constraints.len(), 2 * n);
        for (row, &(k, th)) in self.constraints.iter().enumerate() {
            let h = self.hermitian(&j, th);
            let mut pow = CMat::identity(h.nrows(), h.nrows());
            for _ in 1..k {
                pow = &pow * &h;
            }
            for (a, hb) in herm_basis.iter().enumerate() {
                let t = (&pow * hb).trace().re * k as f64;
                jac[(row, a)] = t * th.cos();
                jac[(row, n + a)] = t * th.sin();
            }
        }
        jac
    }

    /// Rows spanning the tangent space of the conjugation orbit at x.
    fn orbit_rows(&self, x: &[f64]) -> DMatrix<f64> {
        let j = JMap::from_coords(&self.basis, x);
        let n = self.basis.len();
        let mut rows = DMatrix::<f64>::zeros(n, 2 * n);
        for (a, b) in self.basis.iter().enumerate() {
            let c1 = coords_in(&self.basis, &commutator(b, j.j1()));
            let c2 = coords_in(&self.basis, &commutator(b, j.j2()));
            for i in 0..n {
                rows[(a, i)] = c1[i];
                rows[(a, n + i)] = c2[i];
            }
        }
        rows
    }

    /// Unit tangent of the variety orthogonal to the conjugation orbit. With
    /// a multi-dimensional admissible space the previous tangent is projected
    /// onto it, or a random combination is drawn for the first step.
    fn tangent(&self, x: &[f64], prev: Option<&[f64]>, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let jac = self.jacobian(x);
        let orbit = self.orbit_rows(x);
        let (r1, r2, cols) = (jac.nrows(), orbit.nrows(), self.dim());
        let mut sys = DMatrix::<f64>::zeros(r1 + r2, cols);
        sys.view_mut((0, 0), (r1, cols)).copy_from(&jac);
        sys.view_mut((r1, 0), (r2, cols)).copy_from(&orbit);
        let scale = sys.norm().max(1.0);
        let null = null_space(&sys, 1e-9 * scale);
        if null.ncols() == 0 {
            return None;
        }
        let coeffs: Vec<f64> = match prev {
            Some(p) => (0..null.ncols())
                .map(|c| null.column(c).iter().zip(p).map(|(a, b)| a * b).sum())
                .collect(),
            None => (0..null.ncols()).map(|_| StandardNormal.sample(rng)).collect(),
        };
        let mut tau = vec![0.0; cols];
        for (c, w) in coeffs.iter().enumerate() {
            for i in 0..cols {
                tau[i] += w * null[(i, c)];
            }
        }
        let norm = tau.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return None;
        }
        Some(tau.into_iter().map(|v| v / norm).collect())
    }

    /// Newton corrector for `F(y) = F0`, `τ·(y − x) = h`.
    fn correct(&self, x: &[f64], tau: &[f64], h: f64, f0: &[f64]) -> Option<Vec<f64>> {
        let mut y: Vec<f64> = x.iter().zip(tau).map(|(a, t)| a + h * t).collect();
        let fscale = f0.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        let mut last = f64::INFINITY;
        for _ in 0..12 {
            let f = self.values(&y);
            let mut rhs: Vec<f64> = f.iter().zip(f0).map(|(a, b)| b - a).collect();
            let arc = h - y.iter().zip(x).zip(tau).map(|((a, b), t)| (a - b) * t).sum::<f64>();
            rhs.push(arc);
            let res = rhs.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if res < 1e-14 * fscale {
                return Some(y);
            }
            if res > 0.5 * last && last < 1e-10 * fscale {
                return Some(y);
            }
            if !res.is_finite() || res > 10.0 * last {
                return None;
            }
            last = res;
            let jac = self.jacobian(&y);
            let mut sys = DMatrix::<f64>::zeros(jac.nrows() + 1, jac.ncols());
            sys.view_mut((0, 0), (jac.nrows(), jac.ncols())).copy_from(&jac);
            for (i, t) in tau.iter().enumerate() {
                sys[(jac.nrows(), i)] = *t;
            }
            let dy = min_norm_solve(&sys, &rhs, 1e-12);
            for (a, d) in y.iter_mut().zip(&dy) {
                *a += d;
            }
        }
        let f = self.values(&y);
        let res = f.iter().zip(f0).fold(0.0_f64, |a, (u, v)| a.max((u - v).abs()));
        (res < 1e-12 * fscale).then_some(y)
    }
}

fn seed_point(variety: &Variety, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..variety.dim()).map(|_| StandardNormal.sample(rng)).collect();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut x {
        *v *= scale / norm;
    }
    x
}

/// Continue from `x0` to each target (ascending, all on one side of 0,
/// signed by `direction`). Returns the points reached, in target order.
fn march(
    variety: &Variety,
    x0: &[f64],
    tau0: &[f64],
    targets: &[f64],
    max_step: f64,
) -> Result<Vec<Vec<f64>>> {
    let f0 = variety.values(x0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut x = x0.to_vec();
    let mut tau = tau0.to_vec();
    let mut t = 0.0;
    let mut h = max_step;
    let mut out = Vec::with_capacity(targets.len());
    for &target in targets {
        while target - t > 1e-15 {
            let step = h.min(target - t);
            match variety.correct(&x, &tau, step, &f0) {
                Some(y) => {
                    let next = variety
                        .tangent(&y, Some(&tau), &mut rng)
                        .ok_or_else(|| Error::Continuation(format!("tangent lost at t = {}", t + step)))?;
                    x = y;
                    tau = next;
                    t += step;
                    h = (h * 1.5).min(max_step);
                }
                None => {
                    h *= 0.5;
                    if h < 1e-8 {
                        return Err(Error::Continuation(format!("step underflow at t = {t}")));
                    }
                }
            }
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Generate `j(t)` for every requested `t`, validate, and report.
pub fn generate_family(config: &FamilyConfig) -> Result<Family> {
    let m = config.m;
    if m < 3 {
        return Err(Error::InvalidParameter(format!(
            "m = {m}: continuous isospectral families require m >= 3"
        )));
    }
    if config.t_values.is_empty() || config.t_values.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("t_values must be a non-empty list of finite reals".into()));
    }
    if !(config.scale > 0.0 && config.max_step > 0.0) {
        return Err(Error::InvalidParameter("scale and max_step must be positive".into()));
    }
    let variety = Variety::new(m);
    let mut last_err = None;
    for reseed in 0..=config.max_reseeds {
        let seed = config.seed.wrapping_add((reseed as u64).wrapping_mul(0x5851_F42D_4C95_7F2D));
        match attempt(&variety, config, seed) {
            Ok(members) => {
                let validation = validate(&members, config);
                return Ok(Family {
                    m,
                    seed,
                    reseeds: reseed,
                    members,
                    validation,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Continuation("no attempts made".into())))
}

fn attempt(variety: &Variety, config: &FamilyConfig, seed: u64) -> Result<Vec<FamilyMember>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = seed_point(variety, config.scale, &mut rng);
    let j0 = JMap::from_coords(&variety.basis, &x0);
    if !is_generic(&j0, 1e-9).generic {
        return Err(Error::Continuation("seed map is not generic".into()));
    }
    let tau0 = variety
        .tangent(&x0, None, &mut rng)
        .ok_or_else(|| Error::Continuation("isospectral set is locally the conjugation orbit".into()))?;
    let neg_tau: Vec<f64> = tau0.iter().map(|v| -v).collect();

    let mut pos: Vec<f64> = config.t_values.iter().copied().filter(|&t| t > 0.0).collect();
    let mut neg: Vec<f64> = config.t_values.iter().filter(|&&t| t < 0.0).map(|t| -t).collect();
    pos.sort_by(f64::total_cmp);
    pos.dedup();
    neg.sort_by(f64::total_cmp);
    neg.dedup();
    let pos_x = march(variety, &x0, &tau0, &pos, config.max_step)?;
    let neg_x = march(variety, &x0, &neg_tau, &neg, config.max_step)?;

    Ok(config
        .t_values
        .iter()
        .map(|&t| {
            let x = if t > 0.0 {
                &pos_x[pos.iter().position(|&v| v == t).expect("target reached")]
            } else if t < 0.0 {
                &neg_x[neg.iter().position(|&v| v == -t).expect("target reached")]
            } else {
                &x0
            };
            FamilyMember {
                t,
                jmap: JMap::from_coords(&variety.basis, x),
            }
        })
        .collect())
}

fn validate(members: &[FamilyMember], config: &FamilyConfig) -> FamilyValidation {
    let mut v = FamilyValidation::default();
    let base = members
        .iter()
        .find(|mb| mb.t == 0.0)
        .map(|mb| mb.jmap.clone());
    for mb in members {
        if let Some(b) = &base {
            if let Ok(r) = is_isospectral(b, &mb.jmap, config.spectral_tol) {
                v.max_isospectral_discrepancy = v.max_isospectral_discrepancy.max(r.max_discrepancy);
            }
        }
        let g = is_generic(&mb.jmap, 1e-9);
        if !g.generic {
            v.failures.push(format!("member t = {} is not generic", mb.t));
        }
        v.commutant_dimensions.push(g.commutant_dimension);
    }
    for (i, a) in members.iter().enumerate() {
        for b in &members[i + 1..] {
            if let Ok(r) = is_isospectral(&a.jmap, &b.jmap, config.spectral_tol) {
                v.max_isospectral_discrepancy = v.max_isospectral_discrepancy.max(r.max_discrepancy);
            }
            if a.t != b.t {
                let gap = invariant_gap(&a.jmap, &b.jmap).gap;
                v.min_invariant_gap = Some(v.min_invariant_gap.map_or(gap, |g| g.min(gap)));
                if gap <= config.invariant_tol {
                    v.failures.push(format!(
                        "members t = {} and t = {} are not invariant-separated (gap {gap:.3e})",
                        a.t, b.t
                    ));
                }
            }
        }
    }
    if v.max_isospectral_discrepancy >= config.spectral_tol {
        v.failures.push(format!(
            "isospectral discrepancy {:.3e} exceeds {:.1e}",
            v.max_isospectral_discrepancy, config.spectral_tol
        ));
    }
    v.passed = v.failures.is_empty();
    v
}
