//! Laplace spectra of quotients estimated from Gaussian ε-graphs over
//! uniform samples.
//!
//! For a cloud of `N` points drawn from a space of dimension `n` and volume
//! `V`, the graph Laplacian `c·(D − W)` with
//!
//! ```text
//! c = 2V / (N σ² (2πσ²)^{n/2} P(n/2 + 1, 9/2)),   σ = ε/3,
//! ```
//!
//! approximates the positive Laplacian; `P` is the regularized lower
//! incomplete gamma function and accounts for the cutoff at `3σ`. Samples
//! on a quotient are uniform upstairs, so the volume is the Monte-Carlo
//! estimate `vol(M)·E[1/|orbit|]`.

pub mod graph;
pub mod lanczos;
pub mod sampling;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr};

pub use graph::{build_unnormalized, close_pairs, graph_from_pairs, orbit_chord_bound, Connectivity, QuotientGraph};
pub use lanczos::{krylov_ritz_values, smallest_eigenpairs, EigenResult, LanczosOptions};
pub use sampling::{sample_uniform, PointCloud, Samples, Space};

use crate::error::{Error, Result};
use crate::geometry::{AdmissibleForm, Manifold};
use crate::jmaps::{is_isospectral, IsospectralityReport, JMap, DEFAULT_SPECTRAL_TOL};

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_QUOTIENT_POINTS: usize = 4000;
/// Expected neighbor count inside the cutoff ball used by [`default_epsilon`].
pub const DEFAULT_NEIGHBORS: f64 = 270.0;
pub const DEFAULT_CONTROL_SCALE: f64 = 1.2;
/// Krylov block size used by [`smallest_eigenvalues`].
pub const DEFAULT_BLOCK: usize = 6;

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0 + 1.0)
}

/// Volume of the round unit sphere `S^dim`.
pub fn round_sphere_volume(dim: usize) -> f64 {
    let h = (dim as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// `g₀`-volume of `V_r(C^s)`, `∏_{k=s−r+1}^{s} 2π^k/(k−1)!`.
pub fn manifold_volume(manifold: Manifold) -> f64 {
    let s = manifold.s();
    (s - manifold.r() + 1..=s)
        .map(|k| 2.0 * PI.powi(k as i32) / gamma(k as f64))
        .product()
}

/// Dimension of the space the graph Laplacian approximates.
pub fn intrinsic_dim(space: Space) -> usize {
    match space {
        Space::Round { dim } => dim,
        Space::Manifold { manifold } => manifold.dim() - 1,
    }
}

/// Volume of the underlying space; for quotients a Monte-Carlo estimate
/// from the cloud.
pub fn estimated_volume(cloud: &PointCloud) -> f64 {
    match (&cloud.samples, cloud.space) {
        (Samples::Round(_), Space::Round { dim }) => round_sphere_volume(dim),
        (Samples::Manifold(p), Space::Manifold { manifold }) => {
            let inv: Vec<f64> = p
                .iter()
                .map(|x| x.top_norm())
                .filter(|&t| t > 0.0)
                .map(|t| 1.0 / (2.0 * PI * t))
                .collect();
            manifold_volume(manifold) * inv.iter().sum::<f64>() / p.len() as f64
        }
        _ => unreachable!("samples match their space"),
    }
}

/// `ε = (K·V / (N·ω_n))^{1/n}`: about `K` points fall in an `ε`-ball.
pub fn epsilon_rule(dim: usize, volume: f64, n_points: usize, neighbors: f64) -> f64 {
    (neighbors * volume / (n_points as f64 * unit_ball_volume(dim))).powf(1.0 / dim as f64)
}

pub fn default_epsilon(cloud: &PointCloud) -> f64 {
    epsilon_rule(intrinsic_dim(cloud.space), estimated_volume(cloud), cloud.len(), DEFAULT_NEIGHBORS)
}

/// The constant `c(ε, N, n)` of the module docs.
pub fn normalization_constant(dim: usize, volume: f64, n_points: usize, epsilon: f64) -> f64 {
    let sigma = epsilon * graph::SIGMA_RATIO;
    let h = dim as f64 / 2.0;
    let cutoff = 0.5 * (epsilon / sigma).powi(2);
    2.0 * volume / (n_points as f64 * sigma * sigma * (2.0 * PI * sigma * sigma).powf(h) * gamma_lr(h + 1.0, cutoff))
}

/// Normalized Gaussian ε-graph; `form` is `None` exactly for round clouds.
pub fn build_graph(cloud: &PointCloud, form: Option<&AdmissibleForm>, epsilon: f64) -> Result<QuotientGraph> {
    let mut g = build_unnormalized(cloud, form, epsilon)?;
    g.normalization = normalization_constant(intrinsic_dim(cloud.space), estimated_volume(cloud), cloud.len(), epsilon);
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub epsilon: f64,
    pub sigma: f64,
    pub n_points: usize,
    pub connectivity: Connectivity,
    pub krylov_dim: usize,
    pub matvecs: usize,
    /// Largest residual `‖L x − λ x‖` among the returned pairs.
    pub max_residual: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub eigenvalues: Vec<f64>,
    pub normalization: f64,
    pub seed: u64,
    pub diagnostics: Diagnostics,
}

impl SpectrumEstimate {
    /// Eigenvalues of the unnormalized `D − W`.
    pub fn raw_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|v| v / self.normalization).collect()
    }

    /// `index,value,normalization,N,epsilon,seed` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value,normalization,N,epsilon,seed\n");
        for (i, v) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!(
                "{i},{v:e},{:e},{},{:e},{}\n",
                self.normalization, self.diagnostics.n_points, self.diagnostics.epsilon, self.seed
            ));
        }
        out
    }
}

/// The `k` smallest eigenvalues of `L` with a seeded block Lanczos start.
pub fn smallest_eigenvalues(graph: &QuotientGraph, k: usize, seed: u64) -> Result<SpectrumEstimate> {
    let opts = LanczosOptions {
        block: DEFAULT_BLOCK,
        seed,
        ..LanczosOptions::default()
    };
    smallest_eigenvalues_with(graph, k, &opts)
}

pub fn smallest_eigenvalues_with(graph: &QuotientGraph, k: usize, opts: &LanczosOptions) -> Result<SpectrumEstimate> {
    let n = graph.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("need 0 < k < N, got k = {k}, N = {n}")));
    }
    let op = |x: &[f64], y: &mut [f64]| graph.apply(x, y);
    let res = smallest_eigenpairs(&op, n, k, opts)?;
    let connectivity = graph.connectivity();
    let mut warnings = Vec::new();
    if !connectivity.connected {
        warnings.push(format!(
            "graph is disconnected: {} components, {} isolated vertices",
            connectivity.components, connectivity.isolated
        ));
    }
    Ok(SpectrumEstimate {
        eigenvalues: res.values,
        normalization: graph.normalization,
        seed: opts.seed,
        diagnostics: Diagnostics {
            epsilon: graph.epsilon,
            sigma: graph.sigma,
            n_points: n,
            connectivity,
            krylov_dim: res.krylov_dim,
            matvecs: res.matvecs,
            max_residual: res.residuals.iter().copied().fold(0.0, f64::max),
            warnings,
        },
    })
}

/// Sample, build the quotient graph of `form`, and extract `k` eigenvalues.
pub fn estimate_quotient_spectrum(
    form: &AdmissibleForm,
    n_points: usize,
    epsilon: Option<f64>,
    k: usize,
    seed: u64,
) -> Result<SpectrumEstimate> {
    let cloud = sample_uniform(Space::Manifold { manifold: form.manifold }, n_points, seed)?;
    let eps = epsilon.unwrap_or_else(|| default_epsilon(&cloud));
    smallest_eigenvalues(&build_graph(&cloud, Some(form), eps)?, k, seed)
}

/// The first `k` Laplace eigenvalues of the round `S^dim`, `l(l+dim−1)`
/// with multiplicity.
pub fn round_sphere_spectrum(dim: usize, k: usize) -> Vec<f64> {
    let binom = |n: i64, r: i64| -> f64 {
        if n < r || r < 0 {
            return 0.0;
        }
        (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    let mut out = Vec::with_capacity(k);
    let mut l = 0i64;
    let d = dim as i64;
    while out.len() < k {
        let mult = binom(l + d, d) - binom(l + d - 2, d);
        let value = (l * (l + d - 1)) as f64;
        for _ in 0..mult.round() as usize {
            if out.len() < k {
                out.push(value);
            }
        }
        l += 1;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub dim: usize,
    pub estimate: SpectrumEstimate,
    pub analytic: Vec<f64>,
    /// `|λ̂_i − λ_i| / λ_i` for `i ≥ 1`, `|λ̂_0|` at index 0.
    pub relative_errors: Vec<f64>,
}

/// The pipeline on the round `S^dim` with chord distances, against the
/// analytic spectrum.
pub fn calibrate_round(dim: usize, n_points: usize, epsilon: Option<f64>, k: usize, seed: u64) -> Result<CalibrationReport> {
    if dim == 0 {
        return Err(Error::InvalidParameter("sphere dimension must be positive".into()));
    }
    let cloud = sample_uniform(Space::Round { dim }, n_points, seed)?;
    let eps = epsilon.unwrap_or_else(|| default_epsilon(&cloud));
    let estimate = smallest_eigenvalues(&build_graph(&cloud, None, eps)?, k, seed)?;
    let analytic = round_sphere_spectrum(dim, k);
    let relative_errors = estimate
        .eigenvalues
        .iter()
        .zip(&analytic)
        .map(|(e, a)| if *a == 0.0 { e.abs() } else { (e - a).abs() / a })
        .collect();
    Ok(CalibrationReport {
        dim,
        estimate,
        analytic,
        relative_errors,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompareConfig {
    pub manifold: Manifold,
    /// Stiefel only: use the horizontalized form.
    pub horizontalized: bool,
    pub n_points: usize,
    pub epsilon: Option<f64>,
    pub k: usize,
    pub seeds: Vec<u64>,
    pub control_scale: f64,
}

impl CompareConfig {
    pub fn new(manifold: Manifold, n_points: usize, k: usize, seeds: Vec<u64>) -> Self {
        Self {
            manifold,
            horizontalized: true,
            n_points,
            epsilon: None,
            k,
            seeds,
            control_scale: DEFAULT_CONTROL_SCALE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedComparison {
    pub seed: u64,
    pub epsilon: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub control: Vec<f64>,
    /// Per index `i ≥ 1`: `|a_i − b_i| / ((a_i + b_i)/2)`.
    pub pair_relative: Vec<f64>,
    pub control_relative: Vec<f64>,
    pub pair_max: f64,
    pub control_max: f64,
    pub edges: [usize; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub isospectrality: IsospectralityReport,
    pub control_isospectral: bool,
    pub control_scale: f64,
    pub n_points: usize,
    pub k: usize,
    pub seeds: Vec<SeedComparison>,
    pub median_pair_max: f64,
    pub median_control_max: f64,
    /// The pair differs less than the control in the median over seeds.
    pub contrast: bool,
}

pub fn relative_differences(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .skip(1)
        .map(|(x, y)| {
            let mid = 0.5 * (x.abs() + y.abs());
            if mid == 0.0 {
                0.0
            } else {
                (x - y).abs() / mid
            }
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Coupled comparison: one cloud per seed carries the graphs of `ja`, `jb`
/// and the control `control_scale·jb`.
pub fn compare_spectra(ja: &JMap, jb: &JMap, config: &CompareConfig) -> Result<ComparisonReport> {
    if config.seeds.is_empty() {
        return Err(Error::InvalidParameter("at least one seed is required".into()));
    }
    let isospectrality = is_isospectral(ja, jb, DEFAULT_SPECTRAL_TOL)?;
    let jc = jb.scaled(config.control_scale);
    let control_isospectral = is_isospectral(ja, &jc, DEFAULT_SPECTRAL_TOL)?.isospectral;
    let form = |j: &JMap| AdmissibleForm::new(config.manifold, j.clone(), config.horizontalized);
    let forms = [form(ja)?, form(jb)?, form(&jc)?];
    let mut seeds = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let cloud = sample_uniform(Space::Manifold { manifold: config.manifold }, config.n_points, seed)?;
        let eps = config.epsilon.unwrap_or_else(|| default_epsilon(&cloud));
        let mut spectra = Vec::with_capacity(3);
        let mut edges = [0; 3];
        for (i, f) in forms.iter().enumerate() {
            let g = build_graph(&cloud, Some(f), eps)?;
            edges[i] = g.edge_count();
            spectra.push(smallest_eigenvalues(&g, config.k, seed)?.eigenvalues);
        }
        let pair_relative = relative_differences(&spectra[0], &spectra[1]);
        let control_relative = relative_differences(&spectra[0], &spectra[2]);
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        seeds.push(SeedComparison {
            seed,
            epsilon: eps,
            pair_max: max(&pair_relative),
            control_max: max(&control_relative),
            a: spectra[0].clone(),
            b: spectra[1].clone(),
            control: spectra[2].clone(),
            pair_relative,
            control_relative,
            edges,
        });
    }
    let median_pair_max = median(&seeds.iter().map(|s| s.pair_max).collect::<Vec<_>>());
    let median_control_max = median(&seeds.iter().map(|s| s.control_max).collect::<Vec<_>>());
    Ok(ComparisonReport {
        isospectrality,
        control_isospectral,
        control_scale: config.control_scale,
        n_points: config.n_points,
        k: config.k,
        seeds,
        median_pair_max,
        median_control_max,
        contrast: median_pair_max < median_control_max,
    })
}
