//! Search for an equivalence `j2_Z = A j_{Ψ(Z)} A⁻¹`, `A ∈ SU(m) ∪ SU(m)∘conj`.
//!
//! For each symmetry Ψ the objective `f(A) = Σ_k ‖A P_k A* − K_k‖²` with
//! `P_k = (Ψ·j)_{Z_k}` and `K_k = j2_{Z_k}` is minimized by Riemannian
//! gradient descent on SU(m) from the eigen-alignment conjugator and from
//! Haar-random restarts. A symmetry is skipped when the eigenvalues already
//! force `√f` above the tolerance (Hoffman–Wielandt).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::cmat_rows;
use super::{conjugator, EquivalenceSymmetry, JMap, TorusVector};
use crate::error::{Error, Result};
use crate::linalg::{exp_skew, fro_norm, project_su, random_special_unitary, skew_spectrum, CMat, C64};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceSearchConfig {
    /// Descent iterations per start point.
    pub budget: usize,
    /// Haar-random start points per symmetry, in addition to the aligned one.
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for EquivalenceSearchConfig {
    fn default() -> Self {
        Self {
            budget: 4000,
            restarts: 8,
            tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceWitness {
    pub symmetry: EquivalenceSymmetry,
    #[serde(with = "cmat_rows")]
    pub a: CMat,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceSearch {
    /// `None` means the budget was exhausted; it is not a proof of
    /// non-equivalence.
    pub witness: Option<EquivalenceWitness>,
    pub best_residual: f64,
    pub symmetries_searched: usize,
    pub symmetries_pruned: usize,
}

/// `sqrt(Σ_k ‖A (Ψ·j)_{Z_k} A* − j2_{Z_k}‖²)`.
pub fn equivalence_residual(j: &JMap, j2: &JMap, a: &CMat, sym: EquivalenceSymmetry) -> f64 {
    let p = sym.apply(j);
    let adj = a.adjoint();
    (0..2)
        .map(|k| fro_norm(&(a * p.image(k) * &adj - j2.image(k))).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn spectral_lower_bound(p: &JMap, j2: &JMap) -> f64 {
    (0..2)
        .map(|k| {
            skew_spectrum(p.image(k))
                .iter()
                .zip(skew_spectrum(j2.image(k)))
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

fn objective(p: &[CMat; 2], k: &[CMat; 2], a: &CMat) -> f64 {
    let adj = a.adjoint();
    (0..2).map(|i| fro_norm(&(a * &p[i] * &adj - &k[i])).powi(2)).sum()
}

/// Riemannian gradient of the objective in the right-trivialization
/// `A ↦ A exp(X)`, as an element of su(m).
fn gradient(p: &[CMat; 2], k: &[CMat; 2], a: &CMat) -> CMat {
    let adj = a.adjoint();
    let mut g = CMat::zeros(a.nrows(), a.nrows());
    for i in 0..2 {
        let r = &p[i] - &adj * &k[i] * a;
        g += (&p[i] * &r - &r * &p[i]) * C64::new(2.0, 0.0);
    }
    project_su(&g)
}

fn descend(p: &[CMat; 2], k: &[CMat; 2], start: CMat, budget: usize, tol: f64) -> (CMat, f64) {
    let mut a = start;
    let mut f = objective(p, k, &a);
    let mut eta = 0.1 / (fro_norm(&p[0]).powi(2) + fro_norm(&p[1]).powi(2)).max(1e-12);
    let target = tol * tol * 1e-2;
    for _ in 0..budget {
        if f <= target {
            break;
        }
        let g = gradient(p, k, &a);
        let gn2 = fro_norm(&g).powi(2);
        if gn2 < 1e-300 {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &a * exp_skew(&(&g * C64::new(-eta, 0.0)));
            let fc = objective(p, k, &cand);
            if fc <= f - 1e-4 * eta * gn2 {
                a = cand;
                f = fc;
                eta *= 2.0;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (a, f.max(0.0).sqrt())
}

fn restart_seed(seed: u64, sym_idx: usize, restart: usize) -> u64 {
    seed ^ (0x9E37_79B9_7F4A_7C15u64
        .wrapping_mul(sym_idx as u64 + 1)
        .wrapping_add(0xD1B5_4A32_D192_ED03u64.wrapping_mul(restart as u64 + 1)))
}

pub fn find_equivalence(j: &JMap, j2: &JMap, config: &EquivalenceSearchConfig) -> Result<EquivalenceSearch> {
    if j.m() != j2.m() {
        return Err(Error::DimensionMismatch {
            expected: j.m(),
            actual: j2.m(),
        });
    }
    let m = j.m();
    let k = [j2.j1().clone(), j2.j2().clone()];
    let mut best_residual = f64::INFINITY;
    let mut searched = 0;
    let mut pruned = 0;
    for (sym_idx, sym) in EquivalenceSymmetry::all().into_iter().enumerate() {
        let pj = sym.apply(j);
        if spectral_lower_bound(&pj, j2) >= config.tol {
            pruned += 1;
            continue;
        }
        searched += 1;
        let p = [pj.j1().clone(), pj.j2().clone()];
        let aligned = conjugator(&pj, j2, TorusVector::Z1, 1e-6).ok();
        let starts: Vec<Option<CMat>> = std::iter::once(aligned)
            .chain((0..config.restarts).map(|_| None))
            .collect();
        let results: Vec<(CMat, f64)> = starts
            .into_par_iter()
            .enumerate()
            .map(|(r, start)| {
                let start = start.unwrap_or_else(|| {
                    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(config.seed, sym_idx, r));
                    random_special_unitary(m, &mut rng)
                });
                descend(&p, &k, start, config.budget, config.tol)
            })
            .collect();
        // Lowest residual wins; ties go to the lowest restart index.
        let (a, _) = results
            .into_iter()
            .fold(None::<(CMat, f64)>, |acc, cur| match acc {
                Some(b) if b.1 <= cur.1 => Some(b),
                _ => Some(cur),
            })
            .expect("at least one start point");
        let residual = equivalence_residual(j, j2, &a, sym);
        best_residual = best_residual.min(residual);
        if residual < config.tol {
            return Ok(EquivalenceSearch {
                witness: Some(EquivalenceWitness {
                    symmetry: sym,
                    a,
                    residual,
                }),
                best_residual,
                symmetries_searched: searched,
                symmetries_pruned: pruned,
            });
        }
    }
    Ok(EquivalenceSearch {
        witness: None,
        best_residual,
        symmetries_searched: searched,
        symmetries_pruned: pruned,
    })
}
