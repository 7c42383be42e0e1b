//! Gradient and persistence checks shared by the gradient tests and the
//! acceptance suite. Each returns the worst error over its instances so the
//! caller decides the tolerance.

use rand::Rng;
use topo_adv::classifier::{cw_margin_loss, input_grad, PointClassifier, Variant};
use topo_adv::delaunay::Simplex;
use topo_adv::geo_loss::{
    chamfer, curvature_consistency, geom_total, laplacian_smooth, normal_consistency, CleanStats,
};
use topo_adv::grad::{circumradius_grad, circumsphere, critical_map, eigen_grads, EigenSelection};
use topo_adv::persistence::{diagram_of, PersistenceDiagram, PersistencePair};
use topo_adv::pointcloud::{covariance, neighborhood, PointCloud};
use topo_adv::topo_loss::{embed, embed_vjp, loss_ph, EmbeddingNet, Mode, TopoLossConfig};

use super::*;

pub const H: f64 = 1e-5;

#[derive(Debug, Clone, Copy, Default)]
pub struct Check {
    pub instances: usize,
    pub max_err: f64,
}

impl Check {
    fn add(&mut self, err: f64) {
        self.instances += 1;
        self.max_err = self.max_err.max(err);
    }
}

/// Circumradius of 2, 3 and 4 points; `per_len` instances of each.
pub fn circumradius(per_len: usize) -> Check {
    let mut r = rng(11);
    let mut out = Check::default();
    for len in 2..=4 {
        let mut done = 0;
        while done < per_len {
            let pts: Vec<V3> = (0..len).map(|_| [0; 3].map(|_| r.random_range(-1.0..1.0))).collect();
            // slivers make the finite difference itself unreliable
            match circumsphere(&pts) {
                Ok(s) if s.radius < 3.0 => {}
                _ => continue,
            }
            let (_, g) = circumradius_grad(&pts).unwrap();
            let fd = fd_gradient(|p| circumsphere(p).unwrap().radius, &pts, H);
            out.add(field_rel_err(&g, &fd, 1e-8));
            done += 1;
        }
    }
    out
}

pub fn random_diagram(r: &mut ChaCha8Rng) -> PersistenceDiagram {
    let n = r.random_range(1..8);
    let pairs = (0..n)
        .map(|i| {
            let b: f64 = r.random_range(0.0..0.5);
            let d = b + r.random_range(0.01..0.5);
            let v = 4 * i as u32;
            PersistencePair {
                dim: r.random_range(0..3),
                birth: b,
                death: d,
                birth_index: i,
                death_index: Some(100 + i),
                birth_simplex: Simplex::new(&[v, v + 1]),
                death_simplex: Some(Simplex::new(&[v, v + 1, v + 2])),
            }
        })
        .collect();
    PersistenceDiagram::new(pairs)
}

/// Embedding vector-Jacobian product with respect to every birth and death.
pub fn embedding(instances: usize) -> Check {
    let net = EmbeddingNet::new(5);
    let mut r = rng(12);
    let mut out = Check::default();
    for _ in 0..instances {
        let dgm = random_diagram(&mut r);
        let up: Vec<f64> = (0..net.output_len()).map(|_| r.random_range(-1.0..1.0)).collect();
        let g = embed_vjp(&dgm, &net, &up).unwrap();
        let f = |d: &PersistenceDiagram| embed(d, &net).iter().zip(&up).map(|(a, b)| a * b).sum::<f64>();
        let mut worst: f64 = 0.0;
        for (i, &(gb, gd)) in g.iter().enumerate() {
            let shifted = |db: f64, dd: f64| {
                let mut d = dgm.clone();
                d.pairs[i].birth += db;
                d.pairs[i].death += dd;
                f(&d)
            };
            let fb = (shifted(H, 0.0) - shifted(-H, 0.0)) / (2.0 * H);
            let fd = (shifted(0.0, H) - shifted(0.0, -H)) / (2.0 * H);
            worst = worst.max(rel_err(gb, fb)).max(rel_err(gd, fd));
        }
        out.add(worst);
    }
    out
}

/// CW margin loss through both classifier variants, alternating.
pub fn cw_input(instances: usize) -> Check {
    let mut out = Check::default();
    for seed in 1..=instances as u64 {
        let variant = if seed % 2 == 0 {
            Variant::Pointwise
        } else {
            Variant::Edge
        };
        let model = PointClassifier::new(variant, 4, seed).unwrap();
        let pts = random_points(20, 1000 + seed);
        let logits = model.logits(&pts);
        let y = (0..4).max_by(|&a, &b| logits[a].total_cmp(&logits[b])).unwrap();
        let (loss, g) = input_grad(&model, &pts, y, 0.05).unwrap();
        assert!(loss > 0.0);
        let fd = fd_gradient(|p| cw_margin_loss(&model.logits(p), y, 0.05).unwrap().0, &pts, H);
        out.add(field_rel_err(&g.grads, &fd, 1e-8));
    }
    out
}

pub fn geo_instance(seed: u64) -> (CleanStats, Vec<V3>, Vec<V3>) {
    let clean = PointCloud::new(noisy_sphere(60, 0.02, seed));
    let stats = CleanStats::new(&clean, 8).unwrap();
    let mut r = rng(seed + 500);
    let delta: Vec<V3> = (0..60).map(|_| [0; 3].map(|_| r.random_range(-0.03..0.03))).collect();
    let adv: Vec<V3> = clean
        .points
        .iter()
        .zip(&delta)
        .map(|(p, d)| [p[0] + d[0], p[1] + d[1], p[2] + d[2]])
        .collect();
    (stats, adv, delta)
}

/// Every local covariance has a simple smallest eigenvalue, so the normal
/// term is differentiable at `adv`.
fn gaps_ok(stats: &CleanStats, adv: &[V3]) -> bool {
    (0..adv.len()).all(|i| {
        let (c, _) = covariance(neighborhood(&stats.graph, i).map(|j| adv[j]));
        eigen_grads(&c, EigenSelection::Smallest).is_ok()
    })
}

/// Chamfer, normal, curvature and Laplacian terms, then their sum.
pub fn geometric(instances: usize) -> [Check; 5] {
    let mut out = [Check::default(); 5];
    let mut seed = 0;
    while out.iter().any(|c| c.instances < instances) {
        let (stats, adv, delta) = geo_instance(seed);
        seed += 1;
        let clean = stats.points.clone();
        let smooth = gaps_ok(&stats, &adv);

        let (_, g) = chamfer(&clean, &adv).unwrap();
        let fd = fd_gradient(|p| chamfer(&clean, p).unwrap().0, &adv, H);
        out[0].add(field_rel_err(&g.grads, &fd, 1e-8));

        if smooth {
            let (_, g) = normal_consistency(&stats, &adv).unwrap();
            let fd = fd_gradient(|p| normal_consistency(&stats, p).unwrap().0, &adv, H);
            out[1].add(field_rel_err(&g.grads, &fd, 1e-8));
        }

        let (_, g) = curvature_consistency(&stats, &adv).unwrap();
        let fd = fd_gradient(|p| curvature_consistency(&stats, p).unwrap().0, &adv, H);
        out[2].add(field_rel_err(&g.grads, &fd, 1e-8));

        let (_, g) = laplacian_smooth(&delta, &stats.graph).unwrap();
        let fd = fd_gradient(|d| laplacian_smooth(d, &stats.graph).unwrap().0, &delta, H);
        out[3].add(field_rel_err(&g.grads, &fd, 1e-8));

        let (terms, g) = geom_total(&stats, &adv, &delta).unwrap();
        let sum = chamfer(&clean, &adv).unwrap().0
            + normal_consistency(&stats, &adv).unwrap().0
            + curvature_consistency(&stats, &adv).unwrap().0
            + laplacian_smooth(&delta, &stats.graph).unwrap().0;
        assert!((terms.total - sum).abs() < 1e-12);
        if smooth {
            let total = |p: &[V3]| {
                let d: Vec<V3> = p
                    .iter()
                    .zip(&clean)
                    .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
                    .collect();
                geom_total(&stats, p, &d).unwrap().0.total
            };
            let fd = fd_gradient(total, &adv, H);
            out[4].add(field_rel_err(&g.grads, &fd, 1e-8));
        }
    }
    out
}

type Signature = Vec<(Option<Simplex>, Option<Simplex>)>;

fn pairing_signature(pts: &[V3]) -> Option<Signature> {
    let (filt, dgm) = diagram_of(pts, 0).ok()?;
    Some(critical_map(&filt, &dgm).entries)
}

/// Topology loss through the whole persistence pipeline, compared only at
/// coordinates whose ±h moves keep every birth and death simplex.
pub fn end_to_end(instances: usize) -> Check {
    let net = EmbeddingNet::new(2);
    let cfg = TopoLossConfig {
        alpha: 1.0,
        beta: 1.0,
        w: [0.3, 1.0, 1.0],
        k: 50,
    };
    let mut out = Check::default();
    let mut seed = 0;
    while out.instances < instances {
        seed += 1;
        let clean = random_points(20, 7000 + seed);
        let (_, dgm_clean) = diagram_of(&clean, 0).unwrap();
        let phi_clean = embed(&dgm_clean, &net);
        let mut r = rng(seed);
        let adv: Vec<V3> = clean
            .iter()
            .map(|p| [0, 1, 2].map(|c| p[c] + r.random_range(-0.02..0.02)))
            .collect();
        let (filt, dgm) = diagram_of(&adv, 0).unwrap();
        let l = loss_ph(&adv, &filt, &dgm, &phi_clean, &net, &cfg, Mode::Destruction).unwrap();
        let base = pairing_signature(&adv);
        let loss = |p: &[V3]| {
            let (f, d) = diagram_of(p, 0).unwrap();
            loss_ph(p, &f, &d, &phi_clean, &net, &cfg, Mode::Destruction)
                .unwrap()
                .value
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut work = adv.clone();
        for i in 0..adv.len() {
            for c in 0..3 {
                let x = work[i][c];
                work[i][c] = x + H;
                let sp = pairing_signature(&work);
                let fp = loss(&work);
                work[i][c] = x - H;
                let sm = pairing_signature(&work);
                let fm = loss(&work);
                work[i][c] = x;
                if sp == base && sm == base {
                    a.push(l.grad.grads[i][c]);
                    b.push((fp - fm) / (2.0 * H));
                }
            }
        }
        if a.len() < 30 {
            continue;
        }
        let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-8);
        out.add(num / den);
    }
    out
}

/// Largest difference between library and oracle over filtration values
/// and finite diagram points, or a description of the first structural
/// mismatch.
pub fn oracle_equivalence(pts: &[V3]) -> Result<f64, String> {
    let (filt, dgm) = diagram_of(pts, 0).map_err(|e| e.to_string())?;
    let mut got: Vec<(Vec<usize>, f64)> = filt
        .simplices
        .iter()
        .map(|s| (s.simplex.vertices().iter().map(|&v| v as usize).collect(), s.value))
        .collect();
    let mut expect = oracle_filtration(pts);
    if got.len() != expect.len() {
        return Err(format!("{} simplices vs {} from the oracle", got.len(), expect.len()));
    }
    got.sort_by(|x, y| x.0.cmp(&y.0));
    let naive = naive_diagram(&expect);
    expect.sort_by(|x, y| x.0.cmp(&y.0));
    let mut worst: f64 = 0.0;
    for (x, y) in got.iter().zip(&expect) {
        if x.0 != y.0 {
            return Err(format!("simplex {:?} vs {:?}", x.0, y.0));
        }
        worst = worst.max((x.1 - y.1).abs());
    }
    let mut ours: Vec<(usize, f64, f64)> = dgm
        .pairs
        .iter()
        .map(|p| (p.dim, p.birth, if p.is_finite() { p.death } else { f64::INFINITY }))
        .filter(|t| t.2 - t.1 > 1e-9)
        .collect();
    ours.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let theirs: Vec<_> = naive.into_iter().filter(|t| t.2 - t.1 > 1e-9).collect();
    if ours.len() != theirs.len() {
        return Err(format!("{} bars vs {} from the oracle", ours.len(), theirs.len()));
    }
    for (x, y) in ours.iter().zip(&theirs) {
        if x.0 != y.0 || x.2.is_finite() != y.2.is_finite() {
            return Err(format!("bar {x:?} vs {y:?}"));
        }
        worst = worst.max((x.1 - y.1).abs());
        if x.2.is_finite() {
            worst = worst.max((x.2 - y.2).abs());
        }
    }
    Ok(worst)
}
