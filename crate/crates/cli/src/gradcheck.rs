//! Finite-difference check of the topology-loss point gradient.

use rand::Rng;
use topo_adv::grad::critical_map;
use topo_adv::persistence::diagram_of;
use topo_adv::topo_loss::{embed, loss_ph, EmbeddingNet, Mode, TopoLossConfig};
use topo_adv::vec3::Vec3;

use crate::error::CliError;

pub const H: f64 = 1e-5;

pub struct Report {
    pub max_rel_err: f64,
    pub stable: usize,
    pub total: usize,
}

/// Compares the analytic gradient of the topology loss at `points` with
/// central differences, over coordinates whose ±h perturbations keep every
/// pair's defining simplices. The reference diagram is that of a seeded
/// jitter of the cloud. Errors are relative to the largest finite-difference
/// component.
pub fn check(points: &[Vec3], seed: u64) -> Result<Report, CliError> {
    let net = EmbeddingNet::new(seed);
    let cfg = TopoLossConfig::default();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let reference: Vec<Vec3> = points
        .iter()
        .map(|p| [0, 1, 2].map(|c| p[c] + rng.random_range(-0.01..0.01)))
        .collect();
    let (_, ref_dgm) = diagram_of(&reference, seed)?;
    let phi_clean = embed(&ref_dgm, &net);

    let eval = |p: &[Vec3]| -> Result<(f64, Vec<Vec3>, Vec<_>), CliError> {
        let (filt, dgm) = diagram_of(p, seed)?;
        let l = loss_ph(p, &filt, &dgm, &phi_clean, &net, &cfg, Mode::Destruction)?;
        Ok((l.value, l.grad.grads, critical_map(&filt, &dgm).entries))
    };
    let (_, grad, base) = eval(points)?;
    let mut work = points.to_vec();
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for i in 0..points.len() {
        for c in 0..3 {
            let x = work[i][c];
            work[i][c] = x + H;
            let (fp, _, sp) = eval(&work)?;
            work[i][c] = x - H;
            let (fm, _, sm) = eval(&work)?;
            work[i][c] = x;
            if sp == base && sm == base {
                analytic.push(grad[i][c]);
                numeric.push((fp - fm) / (2.0 * H));
            }
        }
    }
    let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let max_rel_err = analytic
        .iter()
        .zip(&numeric)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / scale));
    Ok(Report {
        max_rel_err,
        stable: analytic.len(),
        total: 3 * points.len(),
    })
}
