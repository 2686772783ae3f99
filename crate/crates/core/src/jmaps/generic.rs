use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::JMap;
use crate::linalg::{commutator, su_basis};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenericityReport {
    pub generic: bool,
    /// Dimension of the joint commutant of j_{Z₁}, j_{Z₂} inside su(m).
    pub commutant_dimension: usize,
    /// Smallest singular value of the commutator system.
    pub smallest_singular_value: f64,
    pub tol: f64,
}

/// Nullspace dimension of `X ↦ ([X, J1], [X, J2])` on su(m). Singular values
/// at or below `tol · max(1, ‖j‖)` count as null directions.
pub fn is_generic(j: &JMap, tol: f64) -> GenericityReport {
    let m = j.m();
    let basis = su_basis(m);
    let rows = 4 * m * m;
    let mut system = DMatrix::<f64>::zeros(rows, basis.len());
    for (c, x) in basis.iter().enumerate() {
        let mut r = 0;
        for k in 0..2 {
            let comm = commutator(x, j.image(k));
            for z in comm.iter() {
                system[(r, c)] = z.re;
                system[(r + 1, c)] = z.im;
                r += 2;
            }
        }
    }
    let svd = system.svd(false, false);
    let threshold = tol * j.norm().max(1.0);
    let commutant_dimension = svd.singular_values.iter().filter(|&&s| s <= threshold).count();
    let smallest_singular_value = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    GenericityReport {
        generic: commutant_dimension == 0,
        commutant_dimension,
        smallest_singular_value,
        tol,
    }
}
