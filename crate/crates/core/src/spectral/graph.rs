//! ε-graphs with Gaussian weights and their normalized Laplacians.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{PointCloud, Samples, Space};
use crate::error::{Error, Result};
use crate::geometry::{AdmissibleForm, Manifold, Point};
use crate::quotient::{PreparedSphere, QuotientMetric};

/// Kernel width relative to the cutoff.
pub const SIGMA_RATIO: f64 = 1.0 / 3.0;

/// Symmetric weighted graph in CSR layout with `L = c·(D − W)`.
#[derive(Clone, Debug)]
pub struct QuotientGraph {
    pub space: Space,
    pub epsilon: f64,
    pub sigma: f64,
    /// The constant `c`; 1 for an unnormalized Laplacian.
    pub normalization: f64,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub degrees: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Connectivity {
    pub edges: usize,
    pub mean_degree: f64,
    pub isolated: usize,
    pub components: usize,
    pub connected: bool,
}

impl QuotientGraph {
    /// Graph on `n` vertices from undirected weighted edges `(i, j, w)`,
    /// `i ≠ j`, each listed once.
    pub fn from_edges(space: Space, n: usize, edges: &[(usize, usize, f64)], epsilon: f64, normalization: f64) -> Result<Self> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidParameter(format!("bad edge ({i}, {j}) on {n} vertices")));
            }
            if !(w >= 0.0) {
                return Err(Error::InvalidParameter(format!("negative weight {w} on edge ({i}, {j})")));
            }
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut weights = Vec::new();
        let mut degrees = Vec::with_capacity(n);
        indptr.push(0);
        for row in adj.iter_mut() {
            row.sort_by_key(|e| e.0);
            let mut deg = 0.0;
            for &(j, w) in row.iter() {
                indices.push(j);
                weights.push(w);
                deg += w;
            }
            degrees.push(deg);
            indptr.push(indices.len());
        }
        Ok(Self {
            space,
            epsilon,
            sigma: epsilon * SIGMA_RATIO,
            normalization,
            indptr,
            indices,
            weights,
            degrees,
        })
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.indices.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    /// `y = (D − W) x`.
    pub fn apply_unnormalized(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let wx: f64 = self.neighbors(i).map(|(j, w)| w * x[j]).sum();
            *yi = self.degrees[i] * x[i] - wx;
        }
    }

    /// `y = L x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_unnormalized(x, y);
        if self.normalization != 1.0 {
            y.iter_mut().for_each(|v| *v *= self.normalization);
        }
    }

    /// Dense `L`, for small graphs.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.len();
        let mut l = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            l[(i, i)] = self.normalization * self.degrees[i];
            for (j, w) in self.neighbors(i) {
                l[(i, j)] -= self.normalization * w;
            }
        }
        l
    }

    /// Gershgorin bound `2c·max deg ≥ ‖L‖`.
    pub fn norm_bound(&self) -> f64 {
        2.0 * self.normalization * self.degrees.iter().copied().fold(0.0, f64::max)
    }

    pub fn connectivity(&self) -> Connectivity {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for i in 0..n {
            for (j, _) in self.neighbors(i) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let components = (0..n).filter(|&i| find(&mut parent, i) == i).count();
        let isolated = (0..n).filter(|&i| self.indptr[i] == self.indptr[i + 1]).count();
        Connectivity {
            edges: self.edge_count(),
            mean_degree: if n == 0 { 0.0 } else { self.indices.len() as f64 / n as f64 },
            isolated,
            components,
            connected: components <= 1,
        }
    }
}

/// `min_{θ,φ1,φ2} ‖x − diag(e^{iθ}I_m, e^{iφ1}, e^{iφ2})·y‖`, a lower bound
/// for the `g_κ` quotient distance of any admissible form: `g_κ` agrees
/// with `g₀` orthogonally to the torus orbits, and chords are shorter than
/// geodesics.
pub fn orbit_chord_bound(manifold: Manifold, x: &Point, y: &Point) -> f64 {
    let m = manifold.m();
    let (xm, ym) = (x.matrix(), y.matrix());
    let mut total = 0.0;
    let inner = |rows: std::ops::Range<usize>| -> f64 {
        rows.flat_map(|r| (0..xm.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| xm[(r, c)].conj() * ym[(r, c)])
            .sum::<crate::linalg::C64>()
            .norm()
    };
    total += inner(0..m);
    total += inner(m..m + 1);
    total += inner(m + 1..m + 2);
    (2.0 * xm.ncols() as f64 - 2.0 * total).max(0.0).sqrt()
}

fn gaussian(d: f64, sigma: f64) -> f64 {
    (-d * d / (2.0 * sigma * sigma)).exp()
}

fn chord(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Pairwise distances below `epsilon`, as `(i, j, d)` with `i < j`.
pub fn close_pairs(cloud: &PointCloud, form: Option<&AdmissibleForm>, epsilon: f64) -> Result<Vec<(usize, usize, f64)>> {
    let n = cloud.len();
    let collect = |f: &(dyn Fn(usize, usize) -> Option<f64> + Sync)| -> Vec<(usize, usize, f64)> {
        let rows: Vec<Vec<(usize, usize, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).filter_map(|j| f(i, j).filter(|&d| d < epsilon).map(|d| (i, j, d))).collect())
            .collect();
        rows.into_iter().flatten().collect()
    };
    match (&cloud.samples, form) {
        (Samples::Round(p), None) => Ok(collect(&|i, j| Some(chord(&p[i], &p[j])))),
        (Samples::Round(_), Some(_)) => Err(Error::InvalidParameter("round clouds take no admissible form".into())),
        (Samples::Manifold(_), None) => Err(Error::InvalidParameter("manifold clouds need an admissible form".into())),
        (Samples::Manifold(p), Some(form)) => {
            let Space::Manifold { manifold } = cloud.space else {
                unreachable!("manifold samples carry a manifold space")
            };
            if form.manifold != manifold {
                return Err(Error::InvalidParameter(format!(
                    "form lives on {}, cloud on {}",
                    form.manifold.label(),
                    manifold.label()
                )));
            }
            match manifold {
                Manifold::Sphere { .. } => {
                    let prep = PreparedSphere::new(form, p);
                    Ok(collect(&|i, j| prep.distance_below(i, j, epsilon)))
                }
                Manifold::Stiefel { .. } => {
                    let metric = QuotientMetric::new(form.clone());
                    Ok(collect(&|i, j| {
                        if orbit_chord_bound(manifold, &p[i], &p[j]) >= epsilon {
                            None
                        } else {
                            Some(metric.distance(&p[i], &p[j]))
                        }
                    }))
                }
            }
        }
    }
}

/// Gaussian ε-graph from precomputed close pairs.
pub fn graph_from_pairs(space: Space, n: usize, pairs: &[(usize, usize, f64)], epsilon: f64, normalization: f64) -> Result<QuotientGraph> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let sigma = epsilon * SIGMA_RATIO;
    let edges: Vec<(usize, usize, f64)> = pairs
        .iter()
        .filter(|p| p.2 < epsilon)
        .map(|&(i, j, d)| (i, j, gaussian(d, sigma)))
        .collect();
    QuotientGraph::from_edges(space, n, &edges, epsilon, normalization)
}

/// The unnormalized Gaussian ε-graph of a cloud under the quotient distance
/// of `form` (chord distance for round clouds, which take no form).
pub fn build_unnormalized(cloud: &PointCloud, form: Option<&AdmissibleForm>, epsilon: f64) -> Result<QuotientGraph> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let pairs = close_pairs(cloud, form, epsilon)?;
    graph_from_pairs(cloud.space, cloud.len(), &pairs, epsilon, 1.0)
}
