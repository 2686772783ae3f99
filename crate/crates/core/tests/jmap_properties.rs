use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use isospec_core::jmaps::{
    certification_directions, equivalence_invariants, find_equivalence, generate_family, invariant_gap, is_generic,
    is_isospectral, EquivalenceSearchConfig, EquivalenceSymmetry, FamilyConfig, JMap, JMapDocument, Provenance,
    TorusVector,
};
use isospec_core::linalg::{random_special_unitary, random_su};

mod common;
use common::random_jmap;

#[test]
fn default_family_is_valid() {
    let mut cfg = FamilyConfig::new(3, vec![0.0, 0.05, 0.1], 0);
    cfg.scale = 3.0;
    let fam = generate_family(&cfg).unwrap();
    assert!(fam.validation.passed, "{:?}", fam.validation.failures);
    let ms = &fam.members;
    for (i, a) in ms.iter().enumerate() {
        assert_eq!(is_generic(&a.jmap, 1e-8).commutant_dimension, 0);
        for b in &ms[i + 1..] {
            assert!(is_isospectral(&a.jmap, &b.jmap, 1e-9).unwrap().max_discrepancy < 1e-9);
            assert!(invariant_gap(&a.jmap, &b.jmap).gap > 1e-6);
        }
    }
}

#[test]
fn families_need_m_at_least_three() {
    let err = generate_family(&FamilyConfig::new(2, vec![0.0], 0)).unwrap_err();
    assert!(err.to_string().contains("m >= 3"));
}

#[test]
fn isospectrality_is_certified_on_all_directions() {
    let fam = generate_family(&FamilyConfig::new(4, vec![0.0, 0.05], 3)).unwrap();
    let (a, b) = (&fam.members[0].jmap, &fam.members[1].jmap);
    for k in 0..40 {
        let th = k as f64 * 0.157;
        let z = TorusVector::new(th.cos(), th.sin());
        let (sa, sb) = (a.eval(z).spectrum(), b.eval(z).spectrum());
        for (x, y) in sa.iter().zip(&sb) {
            assert!((x - y).abs() < 1e-9);
        }
    }
    assert_eq!(certification_directions(4).len(), 5);
}

#[test]
fn commuting_maps_are_not_generic() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_su(3, &mut rng);
    let j = JMap::new(a.clone(), a.scale(2.0)).unwrap();
    assert!(!is_generic(&j, 1e-8).generic);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn conjugation_preserves_spectra_and_invariants(seed in 0u64..10_000, sym in 0usize..16) {
        let j = random_jmap(3, seed);
        let u = random_special_unitary(3, &mut ChaCha8Rng::seed_from_u64(seed ^ 7));
        let c = j.conjugated(&u);
        prop_assert!(is_isospectral(&j, &c, 1e-9).unwrap().isospectral);
        let psi = EquivalenceSymmetry::all()[sym];
        let moved = j.transformed(psi).conjugated(&u);
        prop_assert!(invariant_gap(&j, &moved).gap < 1e-9);
        let a = equivalence_invariants(&j);
        let b = equivalence_invariants(&c);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn random_maps_are_generic_and_separated(seed in 0u64..10_000) {
        let a = random_jmap(3, seed);
        let b = random_jmap(3, seed + 10_000);
        prop_assert_eq!(is_generic(&a, 1e-8).commutant_dimension, 0);
        prop_assert!(invariant_gap(&a, &b).gap > 1e-6);
    }

    #[test]
    fn documents_round_trip(seed in 0u64..10_000, t in -1.0f64..1.0, m in 3usize..6) {
        let j = random_jmap(m, seed);
        let text = JMapDocument::new(&j, Provenance::new(seed, t)).to_json().unwrap();
        let doc = JMapDocument::from_json(&text).unwrap();
        prop_assert_eq!(doc.to_json().unwrap(), text);
        prop_assert_eq!(doc.to_jmap().unwrap(), j);
        prop_assert_eq!(doc.provenance.t, t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn search_recovers_planted_equivalences(seed in 0u64..10_000, sym in 0usize..16) {
        let j = random_jmap(3, seed);
        let u = random_special_unitary(3, &mut ChaCha8Rng::seed_from_u64(seed ^ 9));
        let target = j.transformed(EquivalenceSymmetry::all()[sym]).conjugated(&u);
        let r = find_equivalence(&j, &target, &EquivalenceSearchConfig::default()).unwrap();
        let w = r.witness.expect("witness");
        prop_assert!(w.residual < 1e-8);
    }
}
