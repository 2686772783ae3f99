mod commands;
mod config;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use isospec_core::Error;

use config::{ManifoldKind, RunConfig};

const OUT_ENV: &str = "ISOSPEC_OUT";

#[derive(Parser, Debug)]
#[command(name = "isospec", version, about = "Isospectral, non-isometric circle quotients: construction and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON run configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $ISOSPEC_OUT, then ./isospec-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Thread cap for the parallel kernels.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Residual tolerance for the pointwise checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Record wall time in reports (breaks byte-identical reruns).
    #[arg(long, global = true)]
    timing: bool,
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true, value_enum)]
    manifold: Option<ManifoldArg>,
    #[arg(long, global = true)]
    r: Option<usize>,
    #[arg(long = "t-values", global = true, value_delimiter = ',', allow_hyphen_values = true)]
    t_values: Option<Vec<f64>>,
    #[arg(long, global = true)]
    scale: Option<f64>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long = "sphere-dim", global = true)]
    sphere_dim: Option<usize>,
    #[arg(long = "control-scale", global = true)]
    control_scale: Option<f64>,
    #[arg(long, global = true)]
    points: Option<usize>,
    #[arg(long, global = true)]
    level: Option<f64>,
    #[arg(long = "fd-step", global = true)]
    fd_step: Option<f64>,
    /// Directory of persisted j-maps (from `family gen`).
    #[arg(long, global = true)]
    family: Option<PathBuf>,
    /// Also write the sampled point clouds.
    #[arg(long = "save-cloud", global = true)]
    save_cloud: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ManifoldArg {
    Sphere,
    Stiefel,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate or re-check a continuous isospectral family.
    Family {
        #[command(subcommand)]
        action: FamilyAction,
    },
    /// Hypothesis checks on the admissible forms of a family.
    Verify,
    /// Stratification of the quotient and the orbifold criterion.
    Strata,
    /// Graph-Laplacian spectrum estimates.
    Spectrum {
        #[command(subcommand)]
        action: SpectrumAction,
    },
    /// Isometry decision for the first and last family members.
    Nonisometry,
}

#[derive(Subcommand, Debug)]
enum FamilyAction {
    Gen,
    Check,
}

#[derive(Subcommand, Debug)]
enum SpectrumAction {
    /// Round sphere against its analytic spectrum.
    Calibrate,
    /// Spectrum of every family member's quotient.
    Estimate,
    /// Coupled comparison of a family pair and a scaled control.
    Compare,
}

impl Global {
    fn resolve(&self) -> isospec_core::Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone();
                }
            )*};
        }
        set!(seed, m, t_values, scale, k, seeds, sphere_dim, control_scale, points, level, fd_step);
        if let Some(v) = self.r {
            c.r = Some(v);
        }
        if let Some(v) = self.n {
            c.n = Some(v);
        }
        if let Some(v) = self.epsilon {
            c.epsilon = Some(v);
        }
        if let Some(v) = &self.family {
            c.family = Some(v.clone());
        }
        if let Some(v) = &self.out {
            c.out = Some(v.clone());
        }
        if let Some(v) = self.tol {
            c.tolerances.residual = v;
        }
        if let Some(v) = self.manifold {
            c.manifold = match v {
                ManifoldArg::Sphere => ManifoldKind::Sphere,
                ManifoldArg::Stiefel => ManifoldKind::Stiefel,
            };
        }
        c.save_cloud |= self.save_cloud;
        c.validate()?;
        Ok(c)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::NotSkewHermitian { .. }
        | Error::NotTraceless { .. }
        | Error::Parse(_)
        | Error::Json(_) => 2,
        Error::NonConvergence { .. } | Error::Continuation(_) | Error::Hypothesis(_) | Error::Domain(_) => 3,
        Error::Io(_) => 4,
    }
}

fn run(cli: &Cli) -> isospec_core::Result<bool> {
    let config = cli.global.resolve()?;
    if let Some(w) = cli.global.workers {
        if w == 0 {
            return Err(Error::InvalidParameter("workers must be positive".into()));
        }
        // A second build in the same process is harmless to ignore.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let out_dir = config
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("isospec-out"));
    let mut out = report::Output::new(out_dir)?;
    let start = cli.global.timing.then(Instant::now);
    let (name, outcome) = match &cli.command {
        Command::Family { action: FamilyAction::Gen } => ("family gen", commands::family_gen(&config, &mut out)?),
        Command::Family { action: FamilyAction::Check } => ("family check", commands::family_check(&config)?),
        Command::Verify => ("verify", commands::verify(&config)?),
        Command::Strata => ("strata", commands::strata(&config)?),
        Command::Spectrum { action: SpectrumAction::Calibrate } => {
            ("spectrum calibrate", commands::spectrum_calibrate(&config, &mut out)?)
        }
        Command::Spectrum { action: SpectrumAction::Estimate } => {
            ("spectrum estimate", commands::spectrum_estimate(&config, &mut out)?)
        }
        Command::Spectrum { action: SpectrumAction::Compare } => {
            ("spectrum compare", commands::spectrum_compare(&config, &mut out)?)
        }
        Command::Nonisometry => ("nonisometry", commands::nonisometry(&config)?),
    };
    let wall = start.map(|s| s.elapsed().as_secs_f64());
    let file = format!("{}.json", name.replace(' ', "_"));
    let doc = report::report(name, &config, outcome.results, wall);
    let path = out.json(&file, &doc)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    println!("{}: {}", if outcome.passed { "ok" } else { "FAILED" }, path.display());
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
