//! Conjugation invariants of the pair (J1, J2): traces of words in the
//! Hermitian matrices `H_k = -i J_k`, up to length 4, one word per cyclic
//! class. Every such word is equal to its own reversal up to rotation, so all
//! traces are real.
//!
//! Length ≤ 3 traces and the combination `4·tr(H1²H2²) + 2·tr(H1H2H1H2)` are
//! determined by the spectra of `a·J1 + b·J2`; the remaining length-4 degree
//! of freedom is what separates isospectral maps.

use serde::{Deserialize, Serialize};

use super::{EquivalenceSymmetry, JMap};
use crate::linalg::{CMat, C64};

pub const INVARIANT_WORDS: [&str; 13] = [
    "11", "12", "22", "111", "112", "122", "222", "1111", "1112", "1122", "1212", "1222", "2222",
];

/// Word traces of `j` in the order of [`INVARIANT_WORDS`].
pub fn word_traces(j: &JMap) -> Vec<f64> {
    let minus_i = C64::new(0.0, -1.0);
    let h = [j.j1() * minus_i, j.j2() * minus_i];
    let m = j.m();
    INVARIANT_WORDS
        .iter()
        .map(|word| {
            let mut prod = CMat::identity(m, m);
            for ch in word.bytes() {
                prod *= &h[(ch - b'1') as usize];
            }
            prod.trace().re
        })
        .collect()
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-9 * (1.0 + x.abs().max(y.abs())) {
            return x < y;
        }
    }
    false
}

/// Canonical invariant vector: the lexicographically minimal word-trace
/// vector over the 16-element symmetry orbit. Equivalent maps share it.
pub fn equivalence_invariants(j: &JMap) -> Vec<f64> {
    let mut best: Option<Vec<f64>> = None;
    for sym in EquivalenceSymmetry::all() {
        let v = word_traces(&sym.apply(j));
        match &best {
            Some(b) if !lex_less(&v, b) => {}
            _ => best = Some(v),
        }
    }
    best.expect("symmetry group is non-empty")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvariantGap {
    /// `min_Ψ max_w |tr_w(Ψ·j) − tr_w(j2)|`.
    pub gap: f64,
    pub closest_symmetry: EquivalenceSymmetry,
    /// Gap for every symmetry, in the order of [`EquivalenceSymmetry::all`].
    pub per_symmetry: Vec<f64>,
}

/// Distance between the invariant orbits of `j` and `j2`. A gap above the
/// separation tolerance certifies that the maps are not equivalent.
pub fn invariant_gap(j: &JMap, j2: &JMap) -> InvariantGap {
    let target = word_traces(j2);
    let syms = EquivalenceSymmetry::all();
    let per_symmetry: Vec<f64> = syms
        .iter()
        .map(|s| {
            word_traces(&s.apply(j))
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let (idx, gap) = per_symmetry
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, g)| if g < acc.1 { (i, g) } else { acc });
    InvariantGap {
        gap,
        closest_symmetry: syms[idx],
        per_symmetry,
    }
}
