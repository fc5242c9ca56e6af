//! Base-station topology: neighborhood graph, Gaussian similarity, and the
//! seeded K-means partition used to group sites for coordinated switch-off.
//!
//! Distances are planar Euclidean in meters. Two BSs are neighbors when
//! their distance is at most `e_d` (boundary inclusive); similarity decays
//! as a Gaussian of distance with bandwidth `sigma_d` and is exactly zero
//! beyond the neighborhood radius.

use std::path::Path;

use crate::error::{Error, Result};
use crate::seeds;
use rand::Rng;

/// Default neighborhood radius in meters (twice a small cell's coverage).
pub const DEFAULT_E_D: f64 = 80.0;
/// Default similarity bandwidth in meters.
pub const DEFAULT_SIGMA_D: f64 = 30.0;

/// Static site layout. BS ids are indices into `positions`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub positions: Vec<(f64, f64)>,
    /// Neighborhood radius (m).
    pub e_d: f64,
    /// Similarity bandwidth (m).
    pub sigma_d: f64,
}

impl Topology {
    pub fn new(positions: Vec<(f64, f64)>, e_d: f64, sigma_d: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Validation("topology needs at least one BS".into()));
        }
        if !(e_d.is_finite() && e_d > 0.0) {
            return Err(Error::Config(format!("e_d must be positive, got {e_d}")));
        }
        if !(sigma_d.is_finite() && sigma_d > 0.0) {
            return Err(Error::Config(format!("sigma_d must be positive, got {sigma_d}")));
        }
        for (i, (x, y)) in positions.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::Validation(format!("BS {i} has a non-finite coordinate")));
            }
        }
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                if positions[i] == positions[j] {
                    return Err(Error::Validation(format!(
                        "BS {i} and BS {j} share the position {:?}",
                        positions[i]
                    )));
                }
            }
        }
        Ok(Self { positions, e_d, sigma_d })
    }

    /// Uniform random layout over a `side x side` meter square.
    pub fn synthetic(n: usize, side: f64, e_d: f64, sigma_d: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("topology needs at least one BS".into()));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::Config(format!("side must be positive, got {side}")));
        }
        let mut rng = seeds::rng(seed, &[seeds::stream::TOPOLOGY]);
        let positions: Vec<(f64, f64)> =
            (0..n).map(|_| (rng.gen_range(0.0..side), rng.gen_range(0.0..side))).collect();
        Self::new(positions, e_d, sigma_d)
    }

    /// Reads rows `bs_id,x_meters,y_meters` with ids contiguous from 0.
    pub fn from_csv(path: &Path, e_d: f64, sigma_d: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut positions = Vec::new();
        for (row, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let mut next = |name: &str| {
                fields
                    .next()
                    .ok_or_else(|| Error::Parse {
                        row: row + 1,
                        msg: format!("missing field {name}"),
                    })
                    .and_then(|s| {
                        s.trim().parse::<f64>().map_err(|e| Error::Parse {
                            row: row + 1,
                            msg: format!("field {name}: {e}"),
                        })
                    })
            };
            let id = next("bs_id")?;
            let x = next("x_meters")?;
            let y = next("y_meters")?;
            if id != positions.len() as f64 {
                return Err(Error::Validation(format!(
                    "bs_id {id} at row {} breaks the contiguous ordering from 0",
                    row + 1
                )));
            }
            positions.push((x, y));
        }
        Self::new(positions, e_d, sigma_d)
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (xi, yi) = self.positions[i];
        let (xj, yj) = self.positions[j];
        ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt()
    }
}

/// Per-BS sorted neighbor lists: `j` neighbors `i` iff their distance is at
/// most `e_d` and `i != j`.
pub fn adjacency(topo: &Topology) -> Vec<Vec<usize>> {
    let n = topo.n();
    let mut out = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if topo.distance(i, j) <= topo.e_d {
                out[i].push(j);
                out[j].push(i);
            }
        }
    }
    out
}

/// Symmetric Gaussian similarity with hard cutoff beyond the neighborhood
/// radius; the diagonal is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Builds the Gaussian similarity matrix:
/// `w = exp(-d^2 / (2 sigma_d^2))` when `d <= e_d`, else 0.
pub fn similarity(topo: &Topology) -> SimilarityMatrix {
    let n = topo.n();
    let mut data = vec![0.0; n * n];
    let two_sigma_sq = 2.0 * topo.sigma_d * topo.sigma_d;
    for i in 0..n {
        for j in 0..n {
            let d = topo.distance(i, j);
            data[i * n + j] = if d <= topo.e_d { (-d * d / two_sigma_sq).exp() } else { 0.0 };
        }
    }
    SimilarityMatrix { n, data }
}

/// Disjoint, nonempty clusters of BS ids covering the whole topology.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub clusters: Vec<Vec<usize>>,
}

impl Partition {
    /// Cluster index containing the given BS.
    pub fn cluster_of(&self, bs: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.contains(&bs))
    }

    pub fn n_members(&self) -> usize {
        self.clusters.iter().map(|c| c.len()).sum()
    }
}

/// Seeded K-means on raw coordinates.
///
/// Initialization picks one random site, then repeatedly the site farthest
/// from its nearest chosen centroid (ties to the lower id). Lloyd's
/// iteration runs until every centroid moves less than 1e-6 m or 100
/// rounds; a cluster left empty is repaired by moving in the farthest
/// member of the largest cluster. Deterministic in `(topo, k, seed)`.
pub fn kmeans_partition(topo: &Topology, k: usize, seed: u64) -> Result<Partition> {
    let n = topo.n();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k must lie in 1..={n}, got {k}")));
    }
    let mut rng = seeds::rng(seed, &[seeds::stream::KMEANS]);
    let mut centroids: Vec<(f64, f64)> = Vec::with_capacity(k);
    centroids.push(topo.positions[rng.gen_range(0..n)]);
    while centroids.len() < k {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, p) in topo.positions.iter().enumerate() {
            let nearest = centroids
                .iter()
                .map(|c| dist(*p, *c))
                .fold(f64::INFINITY, f64::min);
            if nearest > best.1 {
                best = (i, nearest);
            }
        }
        centroids.push(topo.positions[best.0]);
    }

    let mut assignment = vec![0usize; n];
    for _round in 0..100 {
        // Assign to the nearest centroid, ties to the lower cluster index.
        for (i, p) in topo.positions.iter().enumerate() {
            let mut best = (0usize, f64::INFINITY);
            for (c, centroid) in centroids.iter().enumerate() {
                let d = dist(*p, *centroid);
                if d < best.1 {
                    best = (c, d);
                }
            }
            assignment[i] = best.0;
        }

        // Repair empty clusters from the largest one.
        loop {
            let mut counts = vec![0usize; k];
            for &c in &assignment {
                counts[c] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else { break };
            let largest = counts
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(c, _)| c)
                .expect("k >= 1");
            let centroid = centroids[largest];
            let farthest = assignment
                .iter()
                .enumerate()
                .filter(|(_, &c)| c == largest)
                .map(|(i, _)| i)
                .max_by(|&a, &b| {
                    dist(topo.positions[a], centroid)
                        .total_cmp(&dist(topo.positions[b], centroid))
                        .then(b.cmp(&a))
                })
                .expect("largest cluster is nonempty");
            assignment[farthest] = empty;
            centroids[empty] = topo.positions[farthest];
        }

        // Recompute centroids and check convergence.
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
        for (i, &c) in assignment.iter().enumerate() {
            let (x, y) = topo.positions[i];
            sums[c].0 += x;
            sums[c].1 += y;
            sums[c].2 += 1;
        }
        let mut shift = 0.0f64;
        for (c, (sx, sy, cnt)) in sums.into_iter().enumerate() {
            let new = (sx / cnt as f64, sy / cnt as f64);
            shift = shift.max(dist(centroids[c], new));
            centroids[c] = new;
        }
        if shift < 1e-6 {
            break;
        }
    }

    let mut clusters = vec![Vec::new(); k];
    for (i, &c) in assignment.iter().enumerate() {
        clusters[c].push(i);
    }
    debug_assert!(clusters.iter().all(|c| !c.is_empty()));
    Ok(Partition { clusters })
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}
