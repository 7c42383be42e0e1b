//! Geometric imperceptibility regularizers and their gradients with respect
//! to the adversarial coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::eigen::{mat_vec, Mat3};
use crate::grad::GradField;
use crate::pointcloud::{covariance, knn_graph, local_frame, neighborhood, NeighborGraph, PointCloud};
use crate::vec3::{axpy, dist, dot, scale, sub, Vec3};

pub const DEFAULT_K: usize = 16;

/// kNN graph, normals and curvature of the clean cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanStats {
    pub points: Vec<Vec3>,
    pub graph: NeighborGraph,
    pub normals: Vec<Vec3>,
    pub curvature: Vec<f64>,
}

impl CleanStats {
    pub fn new(cloud: &PointCloud, k: usize) -> Result<Self> {
        let graph = knn_graph(cloud, k)?;
        let frame = local_frame(cloud, &graph)?;
        Ok(Self {
            points: cloud.points.clone(),
            graph,
            normals: frame.normals,
            curvature: frame.curvature,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn check(&self, adv: &[Vec3]) -> Result<()> {
        if adv.len() != self.points.len() {
            return Err(Error::invalid(format!(
                "adversarial cloud has {} points, clean has {}",
                adv.len(),
                self.points.len()
            )));
        }
        Ok(())
    }
}

fn nearest(from: Vec3, to: &[Vec3]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, &q) in to.iter().enumerate() {
        let d = crate::vec3::dist2(from, q);
        if d < best.1 {
            best = (j, d);
        }
    }
    (best.0, best.1.sqrt())
}

/// Direction of `a − b`, zero when the points coincide.
fn unit_from(a: Vec3, b: Vec3) -> Vec3 {
    let d = dist(a, b);
    if d == 0.0 {
        [0.0; 3]
    } else {
        scale(sub(a, b), 1.0 / d)
    }
}

/// (1/|P|)(Σ_{x∈P} min_y ‖x−y‖ + Σ_{y∈P_adv} min_x ‖y−x‖) with the gradient
/// with respect to `adv`; nearest neighbors are held fixed.
pub fn chamfer(clean: &[Vec3], adv: &[Vec3]) -> Result<(f64, GradField)> {
    if clean.is_empty() || adv.is_empty() {
        return Err(Error::invalid("chamfer needs non-empty clouds"));
    }
    let inv = 1.0 / clean.len() as f64;
    let mut grad = GradField::zeros(adv.len());
    let mut total = 0.0;
    for &x in clean {
        let (j, d) = nearest(x, adv);
        total += d;
        axpy(&mut grad.grads[j], inv, unit_from(adv[j], x));
    }
    for (j, &y) in adv.iter().enumerate() {
        let (i, d) = nearest(y, clean);
        total += d;
        axpy(&mut grad.grads[j], inv, unit_from(y, clean[i]));
    }
    Ok((inv * total, grad))
}

/// Adds the pullback of a covariance-space gradient `g` (symmetric) of the
/// neighborhood of `i` to the point gradients.
fn pull_covariance(stats: &CleanStats, adv: &[Vec3], i: usize, mean: Vec3, g: &Mat3, w: f64, out: &mut GradField) {
    let members: Vec<usize> = neighborhood(&stats.graph, i).collect();
    let m = members.len() as f64;
    for a in members {
        let v = mat_vec(g, sub(adv[a], mean));
        axpy(&mut out.grads[a], w * 2.0 / m, v);
    }
}

/// (1/|P|) Σ ‖n_adv − n_clean‖² with adversarial normals from the clean
/// neighborhoods, flipped into the clean normal's hemisphere. Points whose
/// eigengap is too small contribute to the value only.
pub fn normal_consistency(stats: &CleanStats, adv: &[Vec3]) -> Result<(f64, GradField)> {
    stats.check(adv)?;
    let n = adv.len();
    let inv = 1.0 / n as f64;
    let mut grad = GradField::zeros(n);
    let mut total = 0.0;
    for i in 0..n {
        let (c, mean) = covariance(neighborhood(&stats.graph, i).map(|j| adv[j]));
        let eig = crate::grad::eigen::sym_eigen(&c);
        let nc = stats.normals[i];
        let s = if dot(eig.vectors[0], nc) < 0.0 { -1.0 } else { 1.0 };
        let na = scale(eig.vectors[0], s);
        let diff = sub(na, nc);
        total += dot(diff, diff);
        if let Ok(g) = eig.vector_vjp(0, scale(diff, 2.0 * s)) {
            pull_covariance(stats, adv, i, mean, &g, inv, &mut grad);
        }
    }
    Ok((inv * total, grad))
}

/// (1/|P|) Σ (κ_adv − κ_clean)² with κ = λ_min / trace on the clean
/// neighborhoods.
pub fn curvature_consistency(stats: &CleanStats, adv: &[Vec3]) -> Result<(f64, GradField)> {
    stats.check(adv)?;
    let n = adv.len();
    let inv = 1.0 / n as f64;
    let mut grad = GradField::zeros(n);
    let mut total = 0.0;
    for i in 0..n {
        let (c, mean) = covariance(neighborhood(&stats.graph, i).map(|j| adv[j]));
        let eig = crate::grad::eigen::sym_eigen(&c);
        let kappa = crate::pointcloud::surface_variation(&eig);
        let r = kappa - stats.curvature[i];
        total += r * r;
        let trace = c[0][0] + c[1][1] + c[2][2];
        if trace < 1e-12 || r == 0.0 {
            continue;
        }
        // dκ/dC = (v0 v0ᵀ · tr − λ0 · I) / tr²
        let mut g = eig.value_grad(0);
        for (row_idx, row) in g.iter_mut().enumerate() {
            for (col, x) in row.iter_mut().enumerate() {
                let id = if row_idx == col { eig.values[0].max(0.0) } else { 0.0 };
                *x = 2.0 * r * (*x * trace - id) / (trace * trace);
            }
        }
        pull_covariance(stats, adv, i, mean, &g, inv, &mut grad);
    }
    Ok((inv * total, grad))
}

/// (1/N) Σ ‖δ_i − mean_{j∈kNN(i)} δ_j‖² and its gradient (2/N) AᵀAδ with
/// A = I − (row mean over the clean neighbors).
pub fn laplacian_smooth(delta: &[Vec3], graph: &NeighborGraph) -> Result<(f64, GradField)> {
    if graph.len() != delta.len() {
        return Err(Error::invalid(format!(
            "perturbation has {} rows, graph has {}",
            delta.len(),
            graph.len()
        )));
    }
    let n = delta.len();
    if n == 0 {
        return Ok((0.0, GradField::zeros(0)));
    }
    let inv = 1.0 / n as f64;
    let kinv = 1.0 / graph.k as f64;
    let mut grad = GradField::zeros(n);
    let mut total = 0.0;
    for i in 0..n {
        let mut r = delta[i];
        for &j in graph.row(i) {
            axpy(&mut r, -kinv, delta[j]);
        }
        total += dot(r, r);
        axpy(&mut grad.grads[i], 2.0 * inv, r);
        for &j in graph.row(i) {
            axpy(&mut grad.grads[j], -2.0 * inv * kinv, r);
        }
    }
    Ok((inv * total, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GeomTerms {
    pub chamfer: f64,
    pub normal: f64,
    pub curvature: f64,
    pub laplacian: f64,
    pub total: f64,
}

/// Unweighted sum of the four regularizers at `adv = clean + delta`.
pub fn geom_total(stats: &CleanStats, adv: &[Vec3], delta: &[Vec3]) -> Result<(GeomTerms, GradField)> {
    stats.check(adv)?;
    stats.check(delta)?;
    let (cd, mut grad) = chamfer(&stats.points, adv)?;
    let (nl, g) = normal_consistency(stats, adv)?;
    grad.add_scaled(&g, 1.0);
    let (cv, g) = curvature_consistency(stats, adv)?;
    grad.add_scaled(&g, 1.0);
    let (lp, g) = laplacian_smooth(delta, &stats.graph)?;
    grad.add_scaled(&g, 1.0);
    Ok((
        GeomTerms {
            chamfer: cd,
            normal: nl,
            curvature: cv,
            laplacian: lp,
            total: cd + nl + cv + lp,
        },
        grad,
    ))
}
