#![allow(dead_code)]

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use isospec_core::jmaps::{generate_family, FamilyConfig, JMap};
use isospec_core::linalg::random_su;

pub fn random_jmap(m: usize, seed: u64) -> JMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    JMap::new(random_su(m, &mut rng), random_su(m, &mut rng)).unwrap()
}

/// The members `t = 0` and `t = 0.1` of the default m = 3 family.
pub fn family_pair() -> (JMap, JMap) {
    static PAIR: OnceLock<(JMap, JMap)> = OnceLock::new();
    PAIR.get_or_init(|| {
        let mut cfg = FamilyConfig::new(3, vec![0.0, 0.1], 0);
        cfg.scale = 3.0;
        let fam = generate_family(&cfg).unwrap();
        assert!(fam.validation.passed, "{:?}", fam.validation.failures);
        (fam.members[0].jmap.clone(), fam.members[1].jmap.clone())
    })
    .clone()
}
