use std::path::Path;

use serde_json::{json, Value};

use isospec_core::geometry::{
    check_admissible, intertwining_report, sphere_reduction_check, volume_check, AdmissibleForm, Manifold,
};
use isospec_core::jmaps::{
    generate_family, invariant_gap, is_generic, is_isospectral, FamilyConfig, JMap, JMapDocument, Provenance,
};
use isospec_core::nonisometry::{
    curvature_contrast, nonisometry_report, omega0_closedness, LevelSet, NonisometryConfig, Verdict,
};
use isospec_core::quotient::orbifold_report;
use isospec_core::spectral::{
    calibrate_round, compare_spectra, estimate_quotient_spectrum, median, round_sphere_spectrum, sample_uniform,
    CompareConfig, Space, DEFAULT_QUOTIENT_POINTS,
};
use isospec_core::{Error, Result};

use crate::config::RunConfig;
use crate::report::Output;
use crate::svg::{staircase, Series};

const CALIBRATION_POINTS: usize = 3000;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Outcome {
    pub passed: bool,
    pub results: Value,
    pub summary: Vec<String>,
}

pub struct Member {
    pub t: f64,
    pub jmap: JMap,
}

fn family_config(c: &RunConfig) -> FamilyConfig {
    let mut f = FamilyConfig::new(c.m, c.t_values.clone(), c.seed);
    f.scale = c.scale;
    f.spectral_tol = c.tolerances.spectral;
    f.invariant_tol = c.tolerances.invariant;
    f
}

fn member_file(i: usize) -> String {
    format!("j_{i:03}.json")
}

/// Reads a persisted family directory, or generates the configured family.
pub fn load_family(c: &RunConfig) -> Result<Vec<Member>> {
    match &c.family {
        Some(dir) => read_family(dir),
        None => {
            let fam = generate_family(&family_config(c))?;
            if !fam.validation.passed {
                return Err(Error::Hypothesis(format!(
                    "generated family failed validation: {}",
                    fam.validation.failures.join("; ")
                )));
            }
            Ok(fam.members.into_iter().map(|m| Member { t: m.t, jmap: m.jmap }).collect())
        }
    }
}

fn read_family(dir: &Path) -> Result<Vec<Member>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidParameter(format!("no j-map files in {}", dir.display())));
    }
    files
        .iter()
        .map(|p| {
            let doc = JMapDocument::read(p).map_err(|e| match e {
                Error::Json(e) => Error::Parse(format!("{}: {e}", p.display())),
                e => e,
            })?;
            Ok(Member {
                t: doc.provenance.t,
                jmap: doc.to_jmap()?,
            })
        })
        .collect()
}

fn pair(members: &[Member]) -> Result<(&Member, &Member)> {
    match (members.first(), members.last()) {
        (Some(a), Some(b)) if members.len() >= 2 => Ok((a, b)),
        _ => Err(Error::InvalidParameter("a family pair needs at least two t values".into())),
    }
}

/// Pairwise isospectrality, invariant separation, and genericity.
fn family_checks(c: &RunConfig, members: &[Member]) -> Result<(bool, Value, Vec<String>)> {
    let tol = &c.tolerances;
    let mut failures = Vec::new();
    let mut pairs = Vec::new();
    let mut max_disc = 0.0_f64;
    let mut min_gap = f64::INFINITY;
    for (i, a) in members.iter().enumerate() {
        for b in &members[i + 1..] {
            let iso = is_isospectral(&a.jmap, &b.jmap, tol.spectral)?;
            let gap = invariant_gap(&a.jmap, &b.jmap).gap;
            max_disc = max_disc.max(iso.max_discrepancy);
            if a.t != b.t {
                min_gap = min_gap.min(gap);
            }
            if !iso.isospectral {
                failures.push(format!("t={} and t={} are not isospectral ({:.3e})", a.t, b.t, iso.max_discrepancy));
            }
            if a.t != b.t && gap <= tol.invariant {
                failures.push(format!("t={} and t={} are not invariant-separated ({:.3e})", a.t, b.t, gap));
            }
            pairs.push(json!({
                "t": [a.t, b.t],
                "isospectral_discrepancy": iso.max_discrepancy,
                "invariant_gap": gap,
            }));
        }
    }
    let mut members_out = Vec::new();
    for m in members {
        let g = is_generic(&m.jmap, 1e-8);
        if !g.generic {
            failures.push(format!("t={} is not generic (commutant dimension {})", m.t, g.commutant_dimension));
        }
        members_out.push(json!({
            "t": m.t,
            "norm": m.jmap.norm(),
            "commutant_dimension": g.commutant_dimension,
            "smallest_singular_value": g.smallest_singular_value,
        }));
    }
    let summary = vec![
        format!("members: {}", members.len()),
        format!("max isospectral discrepancy: {max_disc:.3e}"),
        format!(
            "min invariant gap: {}",
            if min_gap.is_finite() { format!("{min_gap:.3e}") } else { "n/a".into() }
        ),
    ];
    let passed = failures.is_empty();
    let results = json!({
        "passed": passed,
        "members": members_out,
        "pairs": pairs,
        "max_isospectral_discrepancy": max_disc,
        "min_invariant_gap": if min_gap.is_finite() { Some(min_gap) } else { None },
        "failures": failures,
    });
    Ok((passed, results, summary))
}

pub fn family_gen(c: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let fam = generate_family(&family_config(c))?;
    let members: Vec<Member> = fam
        .members
        .iter()
        .map(|m| Member {
            t: m.t,
            jmap: m.jmap.clone(),
        })
        .collect();
    let mut files = Vec::new();
    for (i, m) in members.iter().enumerate() {
        let doc = JMapDocument::new(&m.jmap, Provenance::new(fam.seed, m.t));
        let name = format!("family/{}", member_file(i));
        out.text(&name, &doc.to_json()?)?;
        files.push(name);
    }
    let (passed, mut checks, summary) = family_checks(c, &members)?;
    let passed = passed && fam.validation.passed;
    checks["validation"] = serde_json::to_value(&fam.validation)?;
    checks["seed_used"] = json!(fam.seed);
    checks["reseeds"] = json!(fam.reseeds);
    checks["files"] = json!(files);
    checks["passed"] = json!(passed);
    Ok(Outcome {
        passed,
        results: checks,
        summary,
    })
}

pub fn family_check(c: &RunConfig) -> Result<Outcome> {
    if c.family.is_none() {
        return Err(Error::InvalidParameter("family check needs --family".into()));
    }
    let members = load_family(c)?;
    let (passed, results, summary) = family_checks(c, &members)?;
    Ok(Outcome {
        passed,
        results,
        summary,
    })
}

pub fn verify(c: &RunConfig) -> Result<Outcome> {
    let manifold = c.manifold()?;
    let members = load_family(c)?;
    let tol = &c.tolerances;
    let horizontal = !matches!(manifold, Manifold::Sphere { .. });
    let base = AdmissibleForm::new(manifold, members[0].jmap.clone(), horizontal)?;
    let mut failures = Vec::new();
    let mut per_member = Vec::new();
    let mut worst_intertwining = 0.0_f64;
    let mut worst_volume = 0.0_f64;
    for (i, m) in members.iter().enumerate() {
        let form = base.with_j(m.jmap.clone())?;
        let adm = check_admissible(&form, c.points, c.seed, tol.residual);
        if !adm.passed {
            failures.extend(adm.failures.iter().map(|f| format!("t={}: {f}", m.t)));
        }
        let vol = volume_check(&form, c.points, c.seed);
        worst_volume = worst_volume.max(vol.max_deviation);
        if vol.max_deviation >= tol.volume {
            failures.push(format!("t={}: volume deviation {:.3e}", m.t, vol.max_deviation));
        }
        let mut weights = Vec::new();
        if i > 0 {
            for mu in c.weights() {
                match intertwining_report(&base, &m.jmap, mu, c.points, c.seed, tol.residual) {
                    Ok(r) => {
                        worst_intertwining = worst_intertwining.max(r.max_residual);
                        if !r.passed {
                            failures.push(format!(
                                "t={}: intertwining for weight {mu} fails (residual {:.3e})",
                                m.t, r.max_residual
                            ));
                        }
                        weights.push(serde_json::to_value(&r)?);
                    }
                    Err(e) => {
                        failures.push(format!("t={}: intertwining for weight {mu} fails: {e}", m.t));
                        weights.push(json!({ "weight": mu, "error": e.to_string() }));
                    }
                }
            }
        }
        let reduction = match manifold {
            Manifold::Stiefel { r: 1, .. } => {
                let red = sphere_reduction_check(&m.jmap, c.points, c.seed);
                if red.max_difference >= tol.reduction {
                    failures.push(format!("t={}: sphere reduction differs by {:.3e}", m.t, red.max_difference));
                }
                Some(red)
            }
            _ => None,
        };
        per_member.push(json!({
            "t": m.t,
            "admissibility": adm,
            "volume": vol,
            "intertwining": weights,
            "sphere_reduction": reduction,
        }));
    }
    let strata = orbifold_report(manifold);
    let nonisometry = match manifold {
        Manifold::Sphere { .. } => "available".to_string(),
        Manifold::Stiefel { .. } => "refused: no non-isometry criterion for Stiefel quotients (open problem)".into(),
    };
    let passed = failures.is_empty();
    let summary = vec![
        format!("manifold: {}", manifold.label()),
        format!("max intertwining residual: {worst_intertwining:.3e}"),
        format!("max volume deviation: {worst_volume:.3e}"),
        format!(
            "quotient: dim {}, {}",
            strata.quotient_dim,
            if strata.is_orbifold { "orbifold" } else { "not an orbifold" }
        ),
        format!("nonisometry: {nonisometry}"),
    ];
    Ok(Outcome {
        passed,
        results: json!({
            "passed": passed,
            "manifold": manifold,
            "members": per_member,
            "max_intertwining_residual": worst_intertwining,
            "max_volume_deviation": worst_volume,
            "strata": strata,
            "nonisometry": nonisometry,
            "failures": failures,
        }),
        summary,
    })
}

pub fn strata(c: &RunConfig) -> Result<Outcome> {
    let manifold = c.manifold()?;
    let report = orbifold_report(manifold);
    let summary = vec![format!(
        "{}: quotient dim {}, singular set {} (codim {}), {}",
        manifold.label(),
        report.quotient_dim,
        report.singular_set,
        report.codim.map_or("none".into(), |c| c.to_string()),
        if report.is_orbifold { "orbifold" } else { "not an orbifold" }
    )];
    Ok(Outcome {
        passed: true,
        results: serde_json::to_value(&report)?,
        summary,
    })
}

pub fn spectrum_calibrate(c: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let n = c.n.unwrap_or(CALIBRATION_POINTS);
    let mut runs = Vec::new();
    for &seed in &c.seeds {
        let rep = calibrate_round(c.sphere_dim, n, c.epsilon, c.k, seed)?;
        out.text(&format!("calibrate_seed{seed}.csv"), &rep.estimate.to_csv())?;
        if c.save_cloud {
            let cloud = sample_uniform(Space::Round { dim: c.sphere_dim }, n, seed)?;
            cloud.write(&out.path(&format!("cloud_round_seed{seed}.txt")))?;
        }
        runs.push(rep);
    }
    let k = c.k;
    let median_estimate: Vec<f64> = (0..k)
        .map(|i| median(&runs.iter().map(|r| r.estimate.eigenvalues[i]).collect::<Vec<_>>()))
        .collect();
    let median_error: Vec<f64> = (0..k)
        .map(|i| median(&runs.iter().map(|r| r.relative_errors[i]).collect::<Vec<_>>()))
        .collect();
    let analytic = round_sphere_spectrum(c.sphere_dim, k);
    let mut csv = String::from("index,analytic,median_estimate,median_relative_error\n");
    for i in 0..k {
        csv.push_str(&format!("{i},{:e},{:e},{:e}\n", analytic[i], median_estimate[i], median_error[i]));
    }
    out.text("calibrate_summary.csv", &csv)?;
    out.text(
        "calibrate.svg",
        &staircase(
            &format!("round S^{} (N={n})", c.sphere_dim),
            &[
                Series { label: "analytic", color: "black", values: &analytic, dashed: true },
                Series { label: "median estimate", color: COLORS[0], values: &median_estimate, dashed: false },
            ],
        ),
    )?;
    let summary = vec![
        format!("median estimate: {}", fmt_values(&median_estimate)),
        format!("analytic:        {}", fmt_values(&analytic)),
    ];
    Ok(Outcome {
        passed: true,
        results: json!({
            "n_points": n,
            "analytic": analytic,
            "median_estimate": median_estimate,
            "median_relative_error": median_error,
            "runs": runs,
        }),
        summary,
    })
}

pub fn spectrum_estimate(c: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let manifold = c.manifold()?;
    let members = load_family(c)?;
    let n = c.n.unwrap_or(DEFAULT_QUOTIENT_POINTS);
    let horizontal = !matches!(manifold, Manifold::Sphere { .. });
    let mut estimates = Vec::new();
    let mut summary = Vec::new();
    for (i, m) in members.iter().enumerate() {
        let form = AdmissibleForm::new(manifold, m.jmap.clone(), horizontal)?;
        let est = estimate_quotient_spectrum(&form, n, c.epsilon, c.k, c.seed)?;
        out.text(&format!("estimate_{i:03}.csv"), &est.to_csv())?;
        summary.push(format!("t={}: {}", m.t, fmt_values(&est.eigenvalues)));
        for w in &est.diagnostics.warnings {
            summary.push(format!("  warning: {w}"));
        }
        estimates.push(json!({ "t": m.t, "estimate": est }));
    }
    if c.save_cloud {
        let cloud = sample_uniform(Space::Manifold { manifold }, n, c.seed)?;
        cloud.write(&out.path("cloud.txt"))?;
    }
    let values: Vec<Vec<f64>> = estimates
        .iter()
        .map(|e| serde_json::from_value(e["estimate"]["eigenvalues"].clone()).unwrap_or_default())
        .collect();
    let labels: Vec<String> = members.iter().map(|m| format!("t = {}", m.t)).collect();
    let series: Vec<Series> = values
        .iter()
        .zip(&labels)
        .enumerate()
        .map(|(i, (v, l))| Series {
            label: l,
            color: COLORS[i % COLORS.len()],
            values: v,
            dashed: i > 0,
        })
        .collect();
    out.text("estimate.svg", &staircase(&format!("{} quotient spectra (N={n})", manifold.label()), &series))?;
    Ok(Outcome {
        passed: true,
        results: json!({ "manifold": manifold, "n_points": n, "estimates": estimates }),
        summary,
    })
}

pub fn spectrum_compare(c: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let manifold = c.manifold()?;
    let members = load_family(c)?;
    let (a, b) = pair(&members)?;
    let n = c.n.unwrap_or(DEFAULT_QUOTIENT_POINTS);
    let mut cfg = CompareConfig::new(manifold, n, c.k, c.seeds.clone());
    cfg.epsilon = c.epsilon;
    cfg.control_scale = c.control_scale;
    cfg.horizontalized = !matches!(manifold, Manifold::Sphere { .. });
    let rep = compare_spectra(&a.jmap, &b.jmap, &cfg)?;
    let mut csv = String::from("seed,index,a,b,control,pair_relative,control_relative\n");
    for s in &rep.seeds {
        for i in 0..s.a.len() {
            let (pr, cr) = if i == 0 {
                (0.0, 0.0)
            } else {
                (s.pair_relative[i - 1], s.control_relative[i - 1])
            };
            csv.push_str(&format!(
                "{},{i},{:e},{:e},{:e},{:e},{:e}\n",
                s.seed, s.a[i], s.b[i], s.control[i], pr, cr
            ));
        }
    }
    out.text("compare.csv", &csv)?;
    if let Some(s) = rep.seeds.first() {
        let la = format!("t = {}", a.t);
        let lb = format!("t = {}", b.t);
        let lc = format!("control ({}x)", c.control_scale);
        out.text(
            "compare.svg",
            &staircase(
                &format!("{} pair vs control, seed {}", manifold.label(), s.seed),
                &[
                    Series { label: &la, color: COLORS[0], values: &s.a, dashed: false },
                    Series { label: &lb, color: COLORS[1], values: &s.b, dashed: true },
                    Series { label: &lc, color: COLORS[2], values: &s.control, dashed: false },
                ],
            ),
        )?;
    }
    if c.save_cloud {
        for &seed in &c.seeds {
            let cloud = sample_uniform(Space::Manifold { manifold }, n, seed)?;
            cloud.write(&out.path(&format!("cloud_seed{seed}.txt")))?;
        }
    }
    let summary = vec![
        format!("median pair difference:    {:.4e}", rep.median_pair_max),
        format!("median control difference: {:.4e}", rep.median_control_max),
        format!("contrast: {}", rep.contrast),
    ];
    Ok(Outcome {
        passed: rep.contrast,
        results: serde_json::to_value(&rep)?,
        summary,
    })
}

pub fn nonisometry(c: &RunConfig) -> Result<Outcome> {
    let manifold = c.manifold()?;
    let members = load_family(c)?;
    let (a, b) = pair(&members)?;
    let mut cfg = NonisometryConfig::default();
    cfg.invariant_tol = c.tolerances.invariant;
    cfg.spectral_tol = c.tolerances.spectral;
    cfg.search.seed = c.seed;
    let rep = nonisometry_report(&a.jmap, &b.jmap, manifold, &cfg)?;
    let level = LevelSet::new(c.level)?;
    let closed = omega0_closedness(c.m, level, c.points, c.fd_step, c.seed)?;
    let curvature = curvature_contrast(&a.jmap, &b.jmap, level, c.points, c.fd_step, c.seed)?;
    let mut summary = vec![
        format!("t={} vs t={}: {}", a.t, b.t, rep.verdict.describe()),
        format!("invariant gap: {:.3e}", rep.invariants.gap),
        format!(
            "generic: commutant dimensions {} and {}",
            rep.generic_a.commutant_dimension, rep.generic_b.commutant_dimension
        ),
        format!("closedness of omega0 on S_a: {:.3e}", closed.max_abs),
    ];
    summary.extend(rep.failing_checks.iter().map(|f| format!("  failing: {f}")));
    Ok(Outcome {
        passed: rep.verdict != Verdict::Inconclusive,
        results: json!({
            "t": [a.t, b.t],
            "report": rep,
            "omega0_closedness": closed,
            "curvature_contrast": curvature,
        }),
        summary,
    })
}

fn fmt_values(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
}
