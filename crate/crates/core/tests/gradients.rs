//! Analytic gradients against central finite differences (h = 1e-5).

mod common;

use common::checks::{self, geo_instance, H};
use common::*;
use topo_adv::classifier::{input_grad, PointClassifier, Variant};
use topo_adv::geo_loss::laplacian_smooth;
use topo_adv::persistence::{PersistenceDiagram, PersistencePair};
use topo_adv::topo_loss::{embed_vjp, EmbeddingNet};

const INSTANCES: usize = 50;

#[test]
fn circumradius_gradients() {
    let c = checks::circumradius(INSTANCES);
    assert_eq!(c.instances, 3 * INSTANCES);
    assert!(c.max_err < 1e-4, "{c:?}");
}

#[test]
fn embedding_gradients() {
    let c = checks::embedding(INSTANCES);
    assert!(c.max_err < 1e-4, "{c:?}");
}

#[test]
fn single_pair_embedding_gradient() {
    let net = EmbeddingNet::new(1);
    let dgm = PersistenceDiagram::new(vec![PersistencePair {
        dim: 1,
        birth: 0.2,
        death: 0.7,
        birth_index: 0,
        death_index: Some(1),
        birth_simplex: topo_adv::delaunay::Simplex::new(&[0, 1]),
        death_simplex: Some(topo_adv::delaunay::Simplex::new(&[0, 1, 2])),
    }]);
    let mut up = vec![0.0; net.output_len()];
    up[64 + 7] = 1.0;
    let (gb, gd) = embed_vjp(&dgm, &net, &up).unwrap()[0];
    let f = |b: f64, d: f64| (d - b) * net.psi(1, b, d - b)[7];
    let fb = central_diff(|h| f(0.2 + h, 0.7), H);
    let fd = central_diff(|h| f(0.2, 0.7 + h), H);
    assert!((gb - fb).abs() / fb.abs().max(1e-12) < 1e-6, "{gb} vs {fb}");
    assert!((gd - fd).abs() / fd.abs().max(1e-12) < 1e-6, "{gd} vs {fd}");
}

#[test]
fn cw_input_gradients() {
    let c = checks::cw_input(INSTANCES);
    assert!(c.max_err < 1e-4, "{c:?}");
}

#[test]
fn cw_gradient_of_single_point_closed_form() {
    // logits are affine in the pooled feature, which for one point is the
    // point's feature itself; compare with an explicit chain rule through
    // f_y − f_j along each axis
    let model = PointClassifier::new(Variant::Pointwise, 2, 3).unwrap();
    let p = vec![[0.3, -0.2, 0.5]];
    let l = model.logits(&p);
    let y = if l[0] >= l[1] { 0 } else { 1 };
    let (_, g) = input_grad(&model, &p, y, 0.0).unwrap();
    for c in 0..3 {
        let m = |x: f64| {
            let mut q = p.clone();
            q[0][c] = x;
            let l = model.logits(&q);
            l[y] - l[1 - y]
        };
        let fd = (m(p[0][c] + H) - m(p[0][c] - H)) / (2.0 * H);
        assert!((g.grads[0][c] - fd).abs() < 1e-7, "{c}: {} vs {fd}", g.grads[0][c]);
    }
}

#[test]
fn geometric_loss_gradients() {
    let checks = checks::geometric(INSTANCES);
    for (name, c) in ["chamfer", "normal", "curvature", "laplacian", "total"]
        .iter()
        .zip(&checks)
    {
        assert!(c.instances >= INSTANCES, "{name}: {c:?}");
        assert!(c.max_err < 1e-4, "{name}: {c:?}");
    }
    assert!(checks[3].max_err < 1e-6, "{:?}", checks[3]);
}

#[test]
fn laplacian_matches_matrix_form() {
    let (stats, _, delta) = geo_instance(3);
    let n = delta.len();
    let k = stats.graph.k as f64;
    // A = I − row mean over neighbors; value (1/N)‖Aδ‖², gradient (2/N)AᵀAδ
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
        for &j in stats.graph.row(i) {
            row[j] -= 1.0 / k;
        }
    }
    let ad: Vec<V3> = (0..n)
        .map(|i| [0, 1, 2].map(|c| (0..n).map(|j| a[i][j] * delta[j][c]).sum::<f64>()))
        .collect();
    let value: f64 = ad.iter().flatten().map(|x| x * x).sum::<f64>() / n as f64;
    let grad: Vec<V3> = (0..n)
        .map(|j| [0, 1, 2].map(|c| 2.0 / n as f64 * (0..n).map(|i| a[i][j] * ad[i][c]).sum::<f64>()))
        .collect();
    let (v, g) = laplacian_smooth(&delta, &stats.graph).unwrap();
    assert!((v - value).abs() < 1e-14);
    assert!(field_rel_err(&g.grads, &grad, 1e-12) < 1e-12);
}

#[test]
fn laplacian_three_point_chain() {
    // k = 1 chain 0→1, 1→0, 2→1 with δ nonzero only at point 0
    let graph = topo_adv::pointcloud::NeighborGraph {
        k: 1,
        neighbors: vec![1, 0, 1],
        source_id: 0,
    };
    let delta = vec![[1.0, 0.0, 0.0], [0.0; 3], [0.0; 3]];
    // residuals: r0 = 1, r1 = −1, r2 = 0 → (1 + 1 + 0)/3
    let (v, _) = laplacian_smooth(&delta, &graph).unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn end_to_end_topology_gradient() {
    let c = checks::end_to_end(INSTANCES);
    assert!(c.max_err < 1e-3, "{c:?}");
}
