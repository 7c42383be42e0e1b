//! Attack success and imperceptibility metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::attack::Trajectory;
use crate::classifier::PointClassifier;
use crate::error::{Error, Result};
use crate::persistence::{diagram_of, persistence_entropy, PersistenceDiagram};
use crate::pointcloud::{curvature_proxy, farthest_point_sample, knn_graph, PointCloud};
use crate::vec3::{dist, dist2, norm2, Vec3};

pub const CSD_K: usize = 16;
pub const UNIFORM_SEEDS: usize = 50;
pub const UNIFORM_FRACTIONS: [f64; 5] = [0.004, 0.006, 0.008, 0.010, 0.012];

/// Per-sample evaluation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub label: usize,
    pub clean_prediction: usize,
    pub adv_prediction: usize,
    /// Clean cloud classified correctly, so the sample counts toward ASR.
    pub eligible: bool,
    pub success: bool,
    pub csd: f64,
    pub uniform: f64,
    pub chamfer: f64,
    pub hausdorff: f64,
    pub l2: f64,
    pub delta_entropy: [f64; 3],
}

/// 100 · successes / eligible samples.
pub fn asr(records: &[SampleRecord]) -> Result<f64> {
    let eligible: Vec<&SampleRecord> = records.iter().filter(|r| r.eligible).collect();
    if eligible.is_empty() {
        return Err(Error::EmptyCohort(
            "no sample is correctly classified when clean".into(),
        ));
    }
    let wins = eligible.iter().filter(|r| r.success).count();
    Ok(100.0 * wins as f64 / eligible.len() as f64)
}

fn population_std(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// |std κ(P) − std κ(P_adv)| with population standard deviations.
pub fn csd_of_fields(kappa: &[f64], kappa_adv: &[f64]) -> f64 {
    (population_std(kappa) - population_std(kappa_adv)).abs()
}

/// Curvature std difference with κ computed on each cloud's own kNN graph.
pub fn csd(clean: &PointCloud, adv: &PointCloud) -> Result<f64> {
    let field = |c: &PointCloud| -> Result<Vec<f64>> {
        let k = CSD_K.min(c.len().saturating_sub(1));
        curvature_proxy(c, &knn_graph(c, k)?)
    };
    Ok(csd_of_fields(&field(clean)?, &field(adv)?))
}

/// Patch-based uniformity: for FPS seed points and area fractions p, a ball
/// of radius √(p·A/π) (A: area of the bounding sphere about the centroid)
/// contributes (n̂ − n)²/n̂ · mean_j (d_j − d̂)²/d̂ with n̂ = p·N, d_j the
/// nearest-neighbor distance inside the patch and d̂ = √(2πr²/(√3·n)).
/// Patches with fewer than two points contribute nothing.
pub fn uniform_metric(cloud: &PointCloud, fps_seed: usize) -> Result<f64> {
    let n = cloud.len();
    if n < 64 {
        return Err(Error::invalid(format!("uniform metric needs >= 64 points, got {n}")));
    }
    let pts = &cloud.points;
    let mut centroid = [0.0; 3];
    for p in pts {
        crate::vec3::add_assign(&mut centroid, *p);
    }
    let centroid = crate::vec3::scale(centroid, 1.0 / n as f64);
    let radius2 = pts.iter().map(|p| dist2(*p, centroid)).fold(0.0, f64::max);
    let area = 4.0 * std::f64::consts::PI * radius2;
    let seeds = farthest_point_sample(cloud, UNIFORM_SEEDS.min(n), fps_seed)?;
    let mut total = 0.0;
    for &p in &UNIFORM_FRACTIONS {
        let r2 = p * area / std::f64::consts::PI;
        let expected = p * n as f64;
        for &s in &seeds {
            let patch: Vec<Vec3> = pts.iter().copied().filter(|q| dist2(*q, pts[s]) <= r2).collect();
            let m = patch.len();
            if m < 2 {
                continue;
            }
            let imbalance = (expected - m as f64).powi(2) / expected;
            let d_hat = (2.0 * std::f64::consts::PI * r2 / (3f64.sqrt() * m as f64)).sqrt();
            let clutter = patch
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let d = patch
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, b)| dist2(*a, *b))
                        .fold(f64::INFINITY, f64::min)
                        .sqrt();
                    (d - d_hat).powi(2) / d_hat
                })
                .sum::<f64>()
                / m as f64;
            total += imbalance * clutter;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub chamfer: f64,
    pub hausdorff: f64,
    pub l2: f64,
}

fn directed_hausdorff(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter()
        .map(|p| b.iter().map(|q| dist2(*p, *q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
        .sqrt()
}

/// Chamfer (geometric-loss normalization), symmetric Hausdorff and RMS
/// per-point displacement.
pub fn distance_report(clean: &[Vec3], adv: &[Vec3]) -> Result<DistanceReport> {
    if clean.len() != adv.len() {
        return Err(Error::invalid(format!(
            "l2 needs equal point counts, got {} and {}",
            clean.len(),
            adv.len()
        )));
    }
    let (chamfer, _) = crate::geo_loss::chamfer(clean, adv)?;
    let hausdorff = directed_hausdorff(clean, adv).max(directed_hausdorff(adv, clean));
    let l2 = (clean.iter().zip(adv).map(|(p, q)| dist2(*p, *q)).sum::<f64>() / clean.len() as f64).sqrt();
    Ok(DistanceReport { chamfer, hausdorff, l2 })
}

/// E_k(P_adv) − E_k(P) for k = 0, 1, 2 from precomputed diagrams.
pub fn entropy_delta_of(clean: &PersistenceDiagram, adv: &PersistenceDiagram) -> [f64; 3] {
    [0, 1, 2].map(|k| persistence_entropy(adv, k) - persistence_entropy(clean, k))
}

pub fn entropy_delta(clean: &[Vec3], adv: &[Vec3], seed: u64) -> Result<[f64; 3]> {
    let (_, a) = diagram_of(clean, seed)?;
    let (_, b) = diagram_of(adv, seed)?;
    Ok(entropy_delta_of(&a, &b))
}

/// Full metric record of one clean/adversarial pair against `model`.
pub fn evaluate_sample(
    model: &PointClassifier,
    id: &str,
    label: usize,
    clean: &PointCloud,
    adv: &PointCloud,
    seed: u64,
) -> Result<SampleRecord> {
    let clean_prediction = model.predict(&clean.points);
    let adv_prediction = model.predict(&adv.points);
    let d = distance_report(&clean.points, &adv.points)?;
    Ok(SampleRecord {
        id: id.to_string(),
        label,
        clean_prediction,
        adv_prediction,
        eligible: clean_prediction == label,
        success: adv_prediction != label,
        csd: csd(clean, adv)?,
        uniform: uniform_metric(adv, 0)?,
        chamfer: d.chamfer,
        hausdorff: d.hausdorff,
        l2: d.l2,
        delta_entropy: entropy_delta(&clean.points, &adv.points, seed)?,
    })
}

/// ASR of pre-generated adversarial clouds against another model, with
/// eligibility judged by that model on the clean clouds.
pub fn transfer_eval(
    pairs: &[(&PointCloud, &PointCloud, usize)],
    source_classes: usize,
    target: &PointClassifier,
) -> Result<f64> {
    if source_classes != target.classes {
        return Err(Error::invalid(format!(
            "source model has {source_classes} classes, target has {}",
            target.classes
        )));
    }
    let mut eligible = 0usize;
    let mut wins = 0usize;
    for (clean, adv, label) in pairs {
        if target.predict(&clean.points) == *label {
            eligible += 1;
            wins += (target.predict(&adv.points) != *label) as usize;
        }
    }
    if eligible == 0 {
        return Err(Error::EmptyCohort("no eligible sample for transfer evaluation".into()));
    }
    Ok(100.0 * wins as f64 / eligible as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricMeans {
    pub count: usize,
    pub csd: f64,
    pub uniform: f64,
    pub chamfer: f64,
    pub hausdorff: f64,
    pub l2: f64,
    pub delta_entropy: [f64; 3],
    pub abs_delta_entropy: [f64; 3],
}

impl MetricMeans {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a SampleRecord>) -> Self {
        let mut m = MetricMeans::default();
        for r in records {
            m.count += 1;
            m.csd += r.csd;
            m.uniform += r.uniform;
            m.chamfer += r.chamfer;
            m.hausdorff += r.hausdorff;
            m.l2 += r.l2;
            for k in 0..3 {
                m.delta_entropy[k] += r.delta_entropy[k];
                m.abs_delta_entropy[k] += r.delta_entropy[k].abs();
            }
        }
        if m.count > 0 {
            let inv = 1.0 / m.count as f64;
            for x in [&mut m.csd, &mut m.uniform, &mut m.chamfer, &mut m.hausdorff, &mut m.l2] {
                *x *= inv;
            }
            for k in 0..3 {
                m.delta_entropy[k] *= inv;
                m.abs_delta_entropy[k] *= inv;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub asr: f64,
    pub transfer_asr: Option<f64>,
    pub records: Vec<SampleRecord>,
    /// Means over eligible, successful samples.
    pub means: MetricMeans,
    pub config: serde_json::Value,
}

impl EvalReport {
    pub fn new(records: Vec<SampleRecord>, transfer_asr: Option<f64>, config: serde_json::Value) -> Result<Self> {
        let asr = asr(&records)?;
        let means = MetricMeans::of(records.iter().filter(|r| r.eligible && r.success));
        Ok(Self {
            asr,
            transfer_asr,
            records,
            means,
            config,
        })
    }

    /// One JSON object per sample followed by a summary object.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut s = String::new();
        let enc = |v: serde_json::Value| serde_json::to_string(&v).map_err(|e| Error::invalid(e.to_string()));
        for r in &self.records {
            let mut v = serde_json::to_value(r).map_err(|e| Error::invalid(e.to_string()))?;
            v["kind"] = "sample".into();
            s.push_str(&enc(v)?);
            s.push('\n');
        }
        let summary = serde_json::json!({
            "kind": "summary",
            "asr": self.asr,
            "transfer_asr": self.transfer_asr,
            "means": self.means,
            "config": self.config,
        });
        s.push_str(&enc(summary)?);
        s.push('\n');
        Ok(s)
    }

    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<28} {:>4} {:>4} {:>5} {:>9} {:>9} {:>9} {:>9} {:>9} {:>8} {:>8} {:>8}",
            "id", "y", "adv", "ok", "csd", "uniform", "chamfer", "hausdorff", "l2", "dE0", "dE1", "dE2"
        );
        for r in &self.records {
            let ok = if !r.eligible {
                "skip"
            } else if r.success {
                "yes"
            } else {
                "no"
            };
            let _ = writeln!(
                s,
                "{:<28} {:>4} {:>4} {:>5} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>9.5} {:>8.4} {:>8.4} {:>8.4}",
                r.id,
                r.label,
                r.adv_prediction,
                ok,
                r.csd,
                r.uniform,
                r.chamfer,
                r.hausdorff,
                r.l2,
                r.delta_entropy[0],
                r.delta_entropy[1],
                r.delta_entropy[2]
            );
        }
        let eligible = self.records.iter().filter(|r| r.eligible).count();
        let _ = writeln!(s, "ASR {:.2}% over {eligible} eligible samples", self.asr);
        if let Some(t) = self.transfer_asr {
            let _ = writeln!(s, "transfer ASR {t:.2}%");
        }
        let m = &self.means;
        let _ = writeln!(
            s,
            "means over {} successes: csd {:.5} uniform {:.5} chamfer {:.5} hausdorff {:.5} l2 {:.5} dE ({:.4}, {:.4}, {:.4})",
            m.count, m.csd, m.uniform, m.chamfer, m.hausdorff, m.l2, m.delta_entropy[0], m.delta_entropy[1], m.delta_entropy[2]
        );
        s
    }
}

/// `restart iteration cls ph geom total` rows for plotting loss curves.
pub fn loss_plot_data(trajectories: &[Trajectory]) -> String {
    let mut s = String::from("# restart iteration cls ph geom total\n");
    for tr in trajectories {
        for r in &tr.records {
            let _ = writeln!(
                s,
                "{} {} {:?} {:?} {:?} {:?}",
                tr.restart, r.t, r.cls, r.ph, r.geom, r.total
            );
        }
    }
    s
}

/// `dim birth death` rows of finite pairs.
pub fn diagram_plot_data(dgm: &PersistenceDiagram) -> String {
    let mut s = String::from("# dim birth death\n");
    for p in dgm.pairs.iter().filter(|p| p.is_finite()) {
        let _ = writeln!(s, "{} {:?} {:?}", p.dim, p.birth, p.death);
    }
    s
}

/// Root-mean-square of a displacement field.
pub fn rms(delta: &[Vec3]) -> f64 {
    if delta.is_empty() {
        return 0.0;
    }
    (delta.iter().map(|d| norm2(*d)).sum::<f64>() / delta.len() as f64).sqrt()
}

/// Mean distance between matched points; a cheap sanity figure for logs.
pub fn mean_displacement(clean: &[Vec3], adv: &[Vec3]) -> f64 {
    if clean.is_empty() {
        return 0.0;
    }
    clean.iter().zip(adv).map(|(a, b)| dist(*a, *b)).sum::<f64>() / clean.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(eligible: bool, success: bool) -> SampleRecord {
        SampleRecord {
            id: String::new(),
            label: 0,
            clean_prediction: 0,
            adv_prediction: 0,
            eligible,
            success,
            csd: 0.0,
            uniform: 0.0,
            chamfer: 0.0,
            hausdorff: 0.0,
            l2: 0.0,
            delta_entropy: [0.0; 3],
        }
    }

    #[test]
    fn asr_policy() {
        assert_eq!(asr(&[rec(true, true), rec(true, false)]).unwrap(), 50.0);
        assert_eq!(asr(&[rec(true, true), rec(true, true)]).unwrap(), 100.0);
        assert_eq!(
            asr(&[rec(false, true), rec(true, true), rec(true, false)]).unwrap(),
            50.0
        );
        assert!(matches!(asr(&[rec(false, true)]), Err(Error::EmptyCohort(_))));
    }

    #[test]
    fn csd_of_known_fields() {
        assert_eq!(csd_of_fields(&[0.0; 3], &[0.0; 3]), 0.0);
        let a = [0.5, -0.5, 0.5, -0.5];
        let b = [0.3, -0.3, 0.3, -0.3];
        assert!((csd_of_fields(&a, &b) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn translated_single_point() {
        let t = 0.25;
        let r = distance_report(&[[0.0; 3]], &[[t, 0.0, 0.0]]).unwrap();
        assert!((r.chamfer - 2.0 * t).abs() < 1e-15);
        assert!((r.hausdorff - t).abs() < 1e-15);
        assert!((r.l2 - t).abs() < 1e-15);
        assert!(distance_report(&[[0.0; 3]], &[]).is_err());
    }

    fn grid(n: usize) -> Vec<Vec3> {
        let mut v = Vec::new();
        for i in 0..n {
            for j in 0..n {
                v.push([i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64, 0.0]);
            }
        }
        v
    }

    #[test]
    fn uniform_ordering() {
        let g = grid(16);
        let base = uniform_metric(&PointCloud::new(g.clone()), 0).unwrap();
        let mut clustered = g.clone();
        for (i, p) in clustered.iter_mut().enumerate().take(40) {
            let a = i as f64 * 0.7;
            *p = [0.5 + 0.01 * a.cos(), 0.5 + 0.01 * a.sin(), 0.0];
        }
        let c = uniform_metric(&PointCloud::new(clustered), 0).unwrap();
        assert!(base < c, "{base} vs {c}");
        let mut dup = g.clone();
        dup.extend_from_slice(&g);
        let d = uniform_metric(&PointCloud::new(dup), 0).unwrap();
        assert!(base < d, "{base} vs {d}");
        assert_eq!(base, uniform_metric(&PointCloud::new(g), 0).unwrap());
    }
}
