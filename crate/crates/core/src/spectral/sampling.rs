//! Uniform point clouds and their columnar text format.
//!
//! The file format is line oriented:
//!
//! ```text
//! # isospec-cloud space=sphere(m=3) seed=7 n=4000 columns=10
//! re im re im ...
//! ```
//!
//! Round spheres store one real coordinate per column. Manifold points
//! store the entries of the `s×r` matrix in column-major order, each as a
//! real/imaginary pair.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point};
use crate::linalg::{CMat, C64};

/// Where a cloud lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "lowercase")]
pub enum Space {
    /// The round unit sphere `S^dim ⊂ R^{dim+1}`.
    Round { dim: usize },
    Manifold { manifold: Manifold },
}

impl Space {
    pub fn label(&self) -> String {
        match self {
            Space::Round { dim } => format!("round(dim={dim})"),
            Space::Manifold { manifold } => manifold.label(),
        }
    }

    pub fn parse_label(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown space tag `{s}`"));
        let (kind, rest) = s.split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        let get = |key: &str| -> Result<usize> {
            args.split(',')
                .filter_map(|kv| kv.split_once('='))
                .find(|(k, _)| *k == key)
                .and_then(|(_, v)| v.parse().ok())
                .ok_or_else(bad)
        };
        match kind {
            "round" => Ok(Space::Round { dim: get("dim")? }),
            "sphere" => Ok(Space::Manifold {
                manifold: Manifold::Sphere { m: get("m")? },
            }),
            "stiefel" => Ok(Space::Manifold {
                manifold: Manifold::Stiefel {
                    m: get("m")?,
                    r: get("r")?,
                },
            }),
            _ => Err(bad()),
        }
    }

    fn columns(&self) -> usize {
        match self {
            Space::Round { dim } => dim + 1,
            Space::Manifold { manifold } => 2 * manifold.s() * manifold.r(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Samples {
    Round(Vec<Vec<f64>>),
    Manifold(Vec<Point>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub space: Space,
    pub seed: u64,
    pub samples: Samples,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        match &self.samples {
            Samples::Round(p) => p.len(),
            Samples::Manifold(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Manifold points, or `None` for round clouds.
    pub fn points(&self) -> Option<&[Point]> {
        match &self.samples {
            Samples::Manifold(p) => Some(p),
            Samples::Round(_) => None,
        }
    }

    /// The cloud with its points reordered: entry `i` is old point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let samples = match &self.samples {
            Samples::Round(p) => Samples::Round(perm.iter().map(|&i| p[i].clone()).collect()),
            Samples::Manifold(p) => Samples::Manifold(perm.iter().map(|&i| p[i].clone()).collect()),
        };
        Self {
            space: self.space,
            seed: self.seed,
            samples,
        }
    }

    fn row(&self, i: usize) -> Vec<f64> {
        match &self.samples {
            Samples::Round(p) => p[i].clone(),
            Samples::Manifold(p) => p[i].matrix().iter().flat_map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# isospec-cloud space={} seed={} n={} columns={}\n",
            self.space.label(),
            self.seed,
            self.len(),
            self.space.columns()
        );
        for i in 0..self.len() {
            let row = self.row(i);
            for (c, x) in row.iter().enumerate() {
                if c > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{x:e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty cloud file".into()))?;
        let fields = header
            .strip_prefix("# isospec-cloud ")
            .ok_or_else(|| Error::Parse("missing cloud header".into()))?;
        let field = |key: &str| -> Result<&str> {
            fields
                .split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| Error::Parse(format!("cloud header lacks `{key}`")))
        };
        let space = Space::parse_label(field("space")?)?;
        let seed: u64 = field("seed")?
            .parse()
            .map_err(|_| Error::Parse("bad seed in cloud header".into()))?;
        let n: usize = field("n")?
            .parse()
            .map_err(|_| Error::Parse("bad n in cloud header".into()))?;
        let cols = space.columns();
        let mut rows = Vec::with_capacity(n);
        for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            if row.len() != cols {
                return Err(Error::Parse(format!(
                    "line {}: expected {cols} columns, found {}",
                    lineno + 2,
                    row.len()
                )));
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(Error::Parse(format!("header says n={n}, found {} rows", rows.len())));
        }
        let samples = match space {
            Space::Round { .. } => Samples::Round(rows),
            Space::Manifold { manifold } => Samples::Manifold(
                rows.into_iter()
                    .map(|row| {
                        let entries: Vec<C64> = row.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
                        manifold.point(CMat::from_column_slice(manifold.s(), manifold.r(), &entries))
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Self { space, seed, samples })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// `n` i.i.d. points, uniform for the round metric (respectively `g₀`).
pub fn sample_uniform(space: Space, n: usize, seed: u64) -> Result<PointCloud> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 points, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = match space {
        Space::Round { dim } => {
            if dim == 0 {
                return Err(Error::InvalidParameter("sphere dimension must be positive".into()));
            }
            Samples::Round(
                (0..n)
                    .map(|_| {
                        let mut x: Vec<f64> = (0..=dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                        x.iter_mut().for_each(|v| *v /= norm);
                        x
                    })
                    .collect(),
            )
        }
        Space::Manifold { manifold } => {
            manifold.validate()?;
            Samples::Manifold((0..n).map(|_| manifold.random_point(&mut rng)).collect())
        }
    };
    Ok(PointCloud { space, seed, samples })
}
