//! Run configuration: a JSON file whose keys may each be overridden by a
//! flag of the same name.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use isospec_core::geometry::Manifold;
use isospec_core::jmaps::Weight;
use isospec_core::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Sphere,
    Stiefel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub spectral: f64,
    pub invariant: f64,
    /// Residual bound for admissibility and intertwining checks.
    pub residual: f64,
    pub volume: f64,
    pub reduction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            spectral: 1e-9,
            invariant: 1e-6,
            residual: 1e-8,
            volume: 1e-10,
            reduction: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub m: usize,
    pub manifold: ManifoldKind,
    /// Stiefel rank.
    pub r: Option<usize>,
    pub t_values: Vec<f64>,
    /// Family scale `‖j(0)‖`.
    pub scale: f64,
    pub seed: u64,
    /// Sample count; the per-command default applies when absent.
    pub n: Option<usize>,
    pub epsilon: Option<f64>,
    pub k: usize,
    pub seeds: Vec<u64>,
    /// Dimension of the round sphere used by calibration.
    pub sphere_dim: usize,
    pub control_scale: f64,
    /// Random points per verification check.
    pub points: usize,
    pub weights: Vec<(i64, i64)>,
    pub level: f64,
    pub fd_step: f64,
    pub tolerances: Tolerances,
    /// Directory holding a persisted family.
    pub family: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub save_cloud: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m: 3,
            manifold: ManifoldKind::Sphere,
            r: None,
            t_values: vec![0.0, 0.05, 0.1],
            scale: 3.0,
            seed: 0,
            n: None,
            epsilon: None,
            k: 10,
            seeds: vec![0, 1, 2, 3, 4],
            sphere_dim: 2,
            control_scale: 1.2,
            points: 200,
            weights: vec![(1, 0), (0, 1), (1, 1), (2, -1), (3, 5)],
            level: 0.4,
            fd_step: 1e-4,
            tolerances: Tolerances::default(),
            family: None,
            out: None,
            save_cloud: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn manifold(&self) -> Result<Manifold> {
        let mf = match self.manifold {
            ManifoldKind::Sphere => Manifold::Sphere { m: self.m },
            ManifoldKind::Stiefel => Manifold::Stiefel {
                m: self.m,
                r: self
                    .r
                    .ok_or_else(|| Error::InvalidParameter("stiefel runs need `r`".into()))?,
            },
        };
        mf.validate()?;
        Ok(mf)
    }

    pub fn weights(&self) -> Vec<Weight> {
        self.weights.iter().map(|&(p, q)| Weight::new(p, q)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("seeds must not be empty".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return Err(Error::InvalidParameter(format!("epsilon = {e} must be positive")));
            }
        }
        if self.t_values.is_empty() {
            return Err(Error::InvalidParameter("t_values must not be empty".into()));
        }
        Ok(())
    }

    /// Lowercase hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
