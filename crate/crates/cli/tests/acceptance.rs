//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use isospec_core::geometry::{
    intertwining_report, sphere_reduction_check, volume_check, AdmissibleForm, Generator, Manifold,
};
use isospec_core::jmaps::{
    certification_directions, generate_family, invariant_gap, is_generic, is_isospectral, EquivalenceSymmetry,
    FamilyConfig, JMap, Weight,
};
use isospec_core::linalg::{commutator, exp_skew};
use isospec_core::nonisometry::{
    finite_diff_d, nonisometry_report, omega0, omega0_closedness, omega_lambda, orbit_gram, Domain, LevelSet,
    NonisometryConfig, Verdict,
};
use isospec_core::quotient::orbifold_report;
use isospec_core::spectral::{calibrate_round, compare_spectra, median, CompareConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const FAMILY_SCALE: f64 = 3.0;

fn family(t_values: Vec<f64>) -> Vec<JMap> {
    let mut cfg = FamilyConfig::new(3, t_values, 0);
    cfg.scale = FAMILY_SCALE;
    let fam = generate_family(&cfg).expect("family generation");
    fam.members.into_iter().map(|m| m.jmap).collect()
}

fn manifolds() -> Vec<Manifold> {
    let mut v = vec![Manifold::Sphere { m: 3 }];
    v.extend((1..=3).map(|r| Manifold::Stiefel { m: 3, r }));
    v
}

fn form(mf: Manifold, j: &JMap) -> AdmissibleForm {
    AdmissibleForm::new(mf, j.clone(), !matches!(mf, Manifold::Sphere { .. })).unwrap()
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let js = family(vec![0.0, 0.05, 0.1]);
    let (mut disc, mut gap, mut commutant): (f64, f64, usize) = (0.0, f64::INFINITY, 0);
    for (i, a) in js.iter().enumerate() {
        commutant = commutant.max(is_generic(a, 1e-8).commutant_dimension);
        for b in &js[i + 1..] {
            let r = is_isospectral(a, b, 1e-9).map_err(|e| e.to_string())?;
            if r.directions.len() != certification_directions(3).len() {
                return Err("wrong number of certification directions".into());
            }
            disc = disc.max(r.max_discrepancy);
            gap = gap.min(invariant_gap(a, b).gap);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        disc < 1e-9 && gap > 1e-6 && commutant == 0 && secs < 60.0,
        format!("discrepancy {disc:.2e}, min gap {gap:.2e}, commutant dim {commutant}, {secs:.2}s"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let js = family(vec![0.0, 0.1]);
    let weights = [(1, 0), (0, 1), (1, 1), (2, -1), (3, 5)].map(|(p, q)| Weight::new(p, q));
    let mut worst: f64 = 0.0;
    let mut all = true;
    for mf in manifolds() {
        let f = form(mf, &js[0]);
        for mu in weights {
            let r = intertwining_report(&f, &js[1], mu, 200, 2, 1e-8).map_err(|e| e.to_string())?;
            worst = worst.max(r.max_residual);
            all &= r.passed;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        all && worst < 1e-8 && secs < 60.0,
        format!("max residual {worst:.2e} over 4 manifolds x 5 weights, {secs:.2}s"),
    )
}

fn criterion_3() -> Outcome {
    let js = family(vec![0.0, 0.05, 0.1]);
    let mut worst: f64 = 0.0;
    for mf in manifolds() {
        for j in &js {
            worst = worst.max(volume_check(&form(mf, j), 1000, 3).max_deviation);
        }
    }
    ensure(worst < 1e-10, format!("max |det g_k - det g_0| = {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let js = family(vec![0.0, 0.05, 0.1]);
    let worst = js
        .iter()
        .map(|j| sphere_reduction_check(j, 1000, 4).max_difference)
        .fold(0.0, f64::max);
    ensure(worst < 1e-12, format!("max difference {worst:.2e}"))
}

fn criterion_5() -> Outcome {
    let js = family(vec![0.0, 0.1]);
    let mf = Manifold::Sphere { m: 3 };
    let forms: Vec<_> = std::iter::once(AdmissibleForm::sphere(JMap::zero(3)))
        .chain(js.iter().map(|j| AdmissibleForm::sphere(j.clone())))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut dual, mut gram_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let p = mf.random_point(&mut rng);
        let fields = [Generator::Z1, Generator::Z2, Generator::G].map(|g| mf.fundamental(g, &p));
        let want = [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        for (x, w) in fields.iter().zip(want) {
            let mut vals = vec![omega0(&p, x).map_err(|e| e.to_string())?];
            for f in &forms {
                vals.push(omega_lambda(f, &p, x).map_err(|e| e.to_string())?);
            }
            for v in vals {
                dual = dual.max((v[0] - w[0]).abs()).max((v[1] - w[1]).abs());
            }
        }
        let v = p.v();
        let target = [[v[0].norm_sqr(), 0.0], [0.0, v[1].norm_sqr()]];
        for f in &forms {
            let g = orbit_gram(f, &p).map_err(|e| e.to_string())?.gram;
            for a in 0..2 {
                for b in 0..2 {
                    gram_err = gram_err.max((g[a][b] - target[a][b]).abs());
                }
            }
        }
    }
    let level = LevelSet::new(0.4).unwrap();
    let closed = omega0_closedness(3, level, 200, 1e-4, 5).map_err(|e| e.to_string())?.max_abs;
    let defects: Vec<f64> = [0.08, 0.04, 0.02]
        .iter()
        .map(|&h| omega0_closedness(3, level, 200, h, 5).map(|r| r.max_abs))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let bounded = defects.iter().zip([0.08f64, 0.04, 0.02]).all(|(d, h)| *d <= 1e-3 * h * h + 1e-12);
    // Order of the difference scheme, observed on the curvature of a deformed form.
    let domain = Domain::LevelSet { level };
    let f = AdmissibleForm::sphere(js[1].clone());
    let mut orders = Vec::new();
    for _ in 0..20 {
        let p = level.random_point(3, &mut rng);
        let x = domain.random_tangent(&p, &mut rng);
        let y = domain.random_tangent(&p, &mut rng);
        let d = |h: f64| finite_diff_d(|q, t| Ok(f.kappa(q, t)), domain, &p, &x, &y, h).map(|r| r.value);
        let v: Vec<[f64; 2]> = [0.01, 0.005, 0.0025]
            .iter()
            .map(|&h| d(h))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let diff = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
        orders.push((diff(v[0], v[1]) / diff(v[1], v[2])).log2());
    }
    let order = median(&orders);
    ensure(
        dual < 1e-10 && gram_err < 1e-12 && closed < 1e-6 && bounded && (order - 2.0).abs() < 0.15,
        format!(
            "dual/horizontal {dual:.2e}, gram {gram_err:.2e}, d(omega0) {closed:.2e} at h=1e-4, \
             max defect {:.1e} at h=0.08/0.04/0.02, scheme order {order:.2}",
            defects.iter().copied().fold(0.0, f64::max)
        ),
    )
}

fn criterion_6() -> Outcome {
    let sphere = orbifold_report(Manifold::Sphere { m: 3 });
    let r2 = orbifold_report(Manifold::Stiefel { m: 3, r: 2 });
    let r3 = orbifold_report(Manifold::Stiefel { m: 3, r: 3 });
    let ok_sphere = sphere.codim == Some(5) && !sphere.is_orbifold;
    let ok_r2 = r2.codim == Some(7) && !r2.is_orbifold;
    let ok_r3 = r3.is_orbifold;
    let fmt = |c: Option<usize>| c.map_or("none".to_string(), |c| c.to_string());
    ensure(
        ok_sphere && ok_r2 && ok_r3,
        format!(
            "sphere codim {} orbifold {}; stiefel r=2 codim {} (expected 7) orbifold {}; r=3 orbifold {}",
            fmt(sphere.codim),
            sphere.is_orbifold,
            fmt(r2.codim),
            r2.is_orbifold,
            r3.is_orbifold
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let runs: Vec<_> = (0..5)
        .map(|seed| calibrate_round(2, 3000, None, 10, seed))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let med = |i: usize| median(&runs.iter().map(|r| r.estimate.eigenvalues[i]).collect::<Vec<_>>());
    let low = (1..=3).map(|i| (med(i) - 2.0).abs() / 2.0).fold(0.0, f64::max);
    let l4 = (med(4) - 6.0).abs() / 6.0;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        low < 0.12 && l4 < 0.15 && secs < 300.0,
        format!(
            "median lambda1..4 = {:.3} {:.3} {:.3} {:.3}; errors {:.1}% / {:.1}%, {secs:.1}s",
            med(1),
            med(2),
            med(3),
            med(4),
            100.0 * low,
            100.0 * l4
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let js = family(vec![0.0, 0.1]);
    let cfg = CompareConfig::new(Manifold::Sphere { m: 3 }, 4000, 10, (0..5).collect());
    let r = compare_spectra(&js[0], &js[1], &cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        r.median_pair_max < r.median_control_max && secs < 1800.0,
        format!(
            "median max relative difference: pair {:.2e}, control {:.2e}, {secs:.0}s",
            r.median_pair_max, r.median_control_max
        ),
    )
}

fn criterion_9() -> Outcome {
    let js = family(vec![0.0, 0.1]);
    let mf = Manifold::Sphere { m: 3 };
    let cfg = NonisometryConfig::default();
    let r = nonisometry_report(&js[0], &js[1], mf, &cfg).map_err(|e| e.to_string())?;
    let certified = r.verdict == Verdict::NonIsometric
        && r.invariants_separate
        && r.generic_a.generic
        && r.generic_b.generic
        && r.isospectrality.isospectral;
    let a = exp_skew(&(js[0].j1() * nalgebra::Complex::new(0.7, 0.0) + commutator(js[0].j1(), js[0].j2())));
    let mut witnessed = true;
    let mut worst: f64 = 0.0;
    for psi in EquivalenceSymmetry::all() {
        let b = js[0].transformed(psi).conjugated(&a);
        let e = nonisometry_report(&js[0], &b, mf, &cfg).map_err(|e| e.to_string())?;
        match (&e.verdict, &e.equivalence.witness) {
            (Verdict::Equivalent, Some(w)) => worst = worst.max(w.residual),
            (Verdict::Identical, _) => {}
            _ => witnessed = false,
        }
    }
    ensure(
        certified && witnessed && worst < 1e-8,
        format!(
            "family pair: {} (gap {:.2e}, commutant dims {}/{}); 16 planted equivalences: max witness residual {worst:.2e}",
            r.verdict.describe(),
            r.invariants.gap,
            r.generic_a.commutant_dimension,
            r.generic_b.commutant_dimension
        ),
    )
}

fn run_cli(config: &Path, out: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_isospec"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&status.stderr)))
    }
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("run.json");
    std::fs::write(
        &config,
        r#"{"m": 3, "t_values": [0, 0.1], "scale": 3.0, "n": 300, "k": 6, "seeds": [0, 1], "save_cloud": true}"#,
    )
    .map_err(|e| e.to_string())?;
    let out = tmp.path().join("out");
    let family = out.join("family").display().to_string();
    let commands: [&[&str]; 8] = [
        &["family", "gen"],
        &["verify"],
        &["strata"],
        &["spectrum", "calibrate"],
        &["spectrum", "estimate"],
        &["spectrum", "compare"],
        &["nonisometry"],
        &["family", "check", "--family", &family],
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let _ = std::fs::remove_dir_all(&out);
        for args in commands {
            run_cli(&config, &out, args)?;
        }
        runs.push(snapshot(&out));
    }
    let names: Vec<_> = runs[0].iter().map(|(n, _)| n.clone()).collect();
    let n_data = names
        .iter()
        .filter(|n| n.ends_with(".csv") || n.ends_with(".json") || n.ends_with(".txt"))
        .count();
    ensure(
        runs[0] == runs[1] && n_data > 10,
        format!("{} files over {} commands, {n_data} CSV/JSON/cloud files byte-identical", names.len(), commands.len()),
    )
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 family validity", criterion_1),
        ("2 intertwining", criterion_2),
        ("3 volume preservation", criterion_3),
        ("4 rank-one reduction", criterion_4),
        ("5 connection form identities", criterion_5),
        ("6 orbifold criterion", criterion_6),
        ("7 estimator calibration", criterion_7),
        ("8 isospectrality contrast", criterion_8),
        ("9 non-isometry pipeline", criterion_9),
        ("10 determinism", criterion_10),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|w| name.contains(w.as_str())) {
            continue;
        }
        match f() {
            Ok(msg) => println!("criterion {name}: PASS ({msg})"),
            Err(msg) => {
                failed += 1;
                println!("criterion {name}: FAIL ({msg})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
