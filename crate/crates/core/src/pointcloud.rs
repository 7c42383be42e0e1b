//! Point-cloud container and the clean-preprocessing statistics the losses
//! and metrics consume: kNN graph, farthest-point sampling, PCA normals and
//! the surface-variation curvature proxy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::eigen::{sym_eigen, Mat3, SymEigen};
use crate::vec3::{dist2, Vec3};

/// An ordered set of 3D points with an optional class label and sample id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    #[serde(default)]
    pub label: Option<usize>,
    #[serde(default)]
    pub id: Option<String>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self {
            points,
            label: None,
            id: None,
        }
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().flatten().all(|c| c.is_finite())
    }

    /// Returns a copy displaced by `delta` (same length as the cloud).
    pub fn displaced(&self, delta: &[Vec3]) -> PointCloud {
        debug_assert_eq!(delta.len(), self.points.len());
        PointCloud {
            points: self
                .points
                .iter()
                .zip(delta)
                .map(|(p, d)| crate::vec3::add(*p, *d))
                .collect(),
            label: self.label,
            id: self.id.clone(),
        }
    }

    /// FNV-1a hash of the coordinate bit patterns; binds derived statistics
    /// to the exact cloud they were computed from.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(self.points.len() as u64);
        for p in &self.points {
            for c in p {
                eat(c.to_bits());
            }
        }
        h
    }
}

/// k nearest neighbors of every point, excluding the point itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    pub k: usize,
    /// Row-major N×k neighbor indices.
    pub neighbors: Vec<usize>,
    pub source_id: u64,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.neighbors.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    fn check_source(&self, cloud: &PointCloud) -> Result<()> {
        if self.source_id != cloud.fingerprint() || self.len() != cloud.len() {
            return Err(Error::GraphMismatch);
        }
        Ok(())
    }
}

/// Per-point PCA normals and curvature proxy.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFrame {
    pub normals: Vec<Vec3>,
    pub curvature: Vec<f64>,
}

/// Exhaustive kNN with ties broken by the lower index.
pub fn knn_graph(cloud: &PointCloud, k: usize) -> Result<NeighborGraph> {
    let n = cloud.len();
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if k >= n {
        return Err(Error::invalid(format!("k = {k} must be < N = {n}")));
    }
    if !cloud.is_finite() {
        return Err(Error::invalid("cloud has non-finite coordinates"));
    }
    let neighbors = knn_rows(&cloud.points, k);
    Ok(NeighborGraph {
        k,
        neighbors,
        source_id: cloud.fingerprint(),
    })
}

/// Row-major N×k nearest-neighbor indices (self excluded, ties to the lower
/// index). Requires k < N.
pub(crate) fn knn_rows(pts: &[Vec3], k: usize) -> Vec<usize> {
    let n = pts.len();
    let mut neighbors = Vec::with_capacity(n * k);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    for i in 0..n {
        cand.clear();
        cand.extend((0..n).filter(|&j| j != i).map(|j| (dist2(pts[i], pts[j]), j)));
        cand.select_nth_unstable_by(k - 1, cmp);
        let head = &mut cand[..k];
        head.sort_unstable_by(cmp);
        neighbors.extend(head.iter().map(|&(_, j)| j));
    }
    neighbors
}

/// Covariance (1/m normalization) of the given points, with their mean.
pub fn covariance(points: impl Iterator<Item = Vec3> + Clone) -> (Mat3, Vec3) {
    let mut mean = [0.0; 3];
    let mut m = 0usize;
    for p in points.clone() {
        crate::vec3::add_assign(&mut mean, p);
        m += 1;
    }
    let inv = 1.0 / m as f64;
    let mean = crate::vec3::scale(mean, inv);
    let mut c = [[0.0; 3]; 3];
    for p in points {
        let d = crate::vec3::sub(p, mean);
        for r in 0..3 {
            for s in r..3 {
                c[r][s] += d[r] * d[s];
            }
        }
    }
    for r in 0..3 {
        for s in r..3 {
            c[r][s] *= inv;
            c[s][r] = c[r][s];
        }
    }
    (c, mean)
}

/// Indices of the neighborhood used for PCA at point `i`: the point itself
/// followed by its graph neighbors.
pub fn neighborhood(graph: &NeighborGraph, i: usize) -> impl Iterator<Item = usize> + Clone + '_ {
    std::iter::once(i).chain(graph.row(i).iter().copied())
}

/// Eigen-decomposition of the neighborhood covariance at `i`, evaluated on
/// `points` (which may differ from the cloud the graph was built on).
pub fn neighborhood_eigen(points: &[Vec3], graph: &NeighborGraph, i: usize) -> SymEigen {
    let (c, _) = covariance(neighborhood(graph, i).map(|j| points[j]));
    sym_eigen(&c)
}

/// Flips `n` so its largest-magnitude component is positive (first index on ties).
pub fn orient_normal(n: Vec3) -> Vec3 {
    let mut best = 0;
    for c in 1..3 {
        if n[c].abs() > n[best].abs() {
            best = c;
        }
    }
    if n[best] < 0.0 {
        [-n[0], -n[1], -n[2]]
    } else {
        n
    }
}

fn rank_deficient(e: &SymEigen) -> bool {
    let trace = e.values.iter().map(|v| v.max(0.0)).sum::<f64>();
    trace <= 1e-300 || e.values[1] <= 1e-12 * trace
}

pub fn estimate_normals(cloud: &PointCloud, graph: &NeighborGraph) -> Result<Vec<Vec3>> {
    graph.check_source(cloud)?;
    (0..cloud.len())
        .map(|i| {
            let e = neighborhood_eigen(&cloud.points, graph, i);
            if rank_deficient(&e) {
                return Err(Error::DegenerateNeighborhood { index: i });
            }
            Ok(orient_normal(e.vectors[0]))
        })
        .collect()
}

/// Surface variation λ_min / (λ0 + λ1 + λ2); 0 for vanishing traces.
pub fn surface_variation(e: &SymEigen) -> f64 {
    let lo = e.values[0].max(0.0);
    let trace = lo + e.values[1].max(0.0) + e.values[2].max(0.0);
    if trace < 1e-12 {
        0.0
    } else {
        lo / trace
    }
}

pub fn curvature_proxy(cloud: &PointCloud, graph: &NeighborGraph) -> Result<Vec<f64>> {
    graph.check_source(cloud)?;
    Ok((0..cloud.len())
        .map(|i| surface_variation(&neighborhood_eigen(&cloud.points, graph, i)))
        .collect())
}

pub fn local_frame(cloud: &PointCloud, graph: &NeighborGraph) -> Result<LocalFrame> {
    Ok(LocalFrame {
        normals: estimate_normals(cloud, graph)?,
        curvature: curvature_proxy(cloud, graph)?,
    })
}

/// Greedy max-min selection of `m` indices starting at `seed_index`.
/// Ties in the max-min distance go to the lower index.
pub fn farthest_point_sample(cloud: &PointCloud, m: usize, seed_index: usize) -> Result<Vec<usize>> {
    let n = cloud.len();
    if m > n {
        return Err(Error::invalid(format!("m = {m} exceeds N = {n}")));
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    if seed_index >= n {
        return Err(Error::invalid(format!("seed index {seed_index} out of range")));
    }
    let pts = &cloud.points;
    let mut selected = Vec::with_capacity(m);
    let mut min_d = vec![f64::INFINITY; n];
    let mut cur = seed_index;
    selected.push(cur);
    while selected.len() < m {
        let mut best = usize::MAX;
        let mut best_d = f64::NEG_INFINITY;
        for (j, d) in min_d.iter_mut().enumerate() {
            let nd = dist2(pts[cur], pts[j]);
            if nd < *d {
                *d = nd;
            }
            if *d > best_d {
                best_d = *d;
                best = j;
            }
        }
        cur = best;
        selected.push(cur);
    }
    Ok(selected)
}
