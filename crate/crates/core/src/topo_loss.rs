//! Differentiable persistence embedding and the topology losses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::{critical_map, diagram_vjp, GradField};
use crate::persistence::{top_k_lifetimes, Filtration, PersistenceDiagram};
use crate::vec3::Vec3;

pub const HIDDEN: usize = 32;
pub const EMBED_DIM: usize = 64;
pub const HOMOLOGY_DIMS: usize = 3;

/// One ψ_k: (birth, persistence) → tanh hidden layer → linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Psi {
    w1: Vec<[f64; 2]>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
}

impl Psi {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let a1 = 1.0 / 2f64.sqrt();
        let a2 = 1.0 / (HIDDEN as f64).sqrt();
        let mut u = |a: f64| rng.random_range(-a..a);
        let w1 = (0..HIDDEN).map(|_| [u(a1), u(a1)]).collect();
        let b1 = (0..HIDDEN).map(|_| u(a1)).collect();
        let w2 = (0..EMBED_DIM).map(|_| (0..HIDDEN).map(|_| u(a2)).collect()).collect();
        let b2 = (0..EMBED_DIM).map(|_| u(a2)).collect();
        Psi { w1, b1, w2, b2 }
    }

    fn hidden(&self, b: f64, p: f64) -> Vec<f64> {
        self.w1
            .iter()
            .zip(&self.b1)
            .map(|(w, c)| (w[0] * b + w[1] * p + c).tanh())
            .collect()
    }

    fn eval(&self, b: f64, p: f64) -> Vec<f64> {
        let h = self.hidden(b, p);
        self.w2
            .iter()
            .zip(&self.b2)
            .map(|(row, c)| row.iter().zip(&h).map(|(w, x)| w * x).sum::<f64>() + c)
            .collect()
    }

    /// Returns ψ(b, p) and the pullback of `g` to (∂b, ∂p).
    fn eval_vjp(&self, b: f64, p: f64, g: &[f64]) -> (Vec<f64>, f64, f64) {
        let h = self.hidden(b, p);
        let out = self.eval(b, p);
        let (mut gb, mut gp) = (0.0, 0.0);
        for (j, (w, hj)) in self.w1.iter().zip(&h).enumerate() {
            let gh: f64 = self.w2.iter().zip(g).map(|(row, gi)| row[j] * gi).sum();
            let pre = gh * (1.0 - hj * hj);
            gb += pre * w[0];
            gp += pre * w[1];
        }
        (out, gb, gp)
    }
}

/// Frozen random-feature ψ networks, one per homology dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingNet {
    pub init_seed: u64,
    psi: Vec<Psi>,
}

impl EmbeddingNet {
    pub fn new(init_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
        let psi = (0..HOMOLOGY_DIMS).map(|_| Psi::random(&mut rng)).collect();
        Self { init_seed, psi }
    }

    /// ψ_k(b, p).
    pub fn psi(&self, dim: usize, birth: f64, persistence: f64) -> Vec<f64> {
        self.psi[dim].eval(birth, persistence)
    }

    pub fn output_len(&self) -> usize {
        HOMOLOGY_DIMS * EMBED_DIM
    }
}

/// φ = [φ_0, φ_1, φ_2] with φ_k = Σ p_i ψ_k(b_i, p_i) over finite pairs.
pub fn embed(dgm: &PersistenceDiagram, net: &EmbeddingNet) -> Vec<f64> {
    let mut out = vec![0.0; net.output_len()];
    for pair in dgm.pairs.iter().filter(|p| p.is_finite() && p.dim < HOMOLOGY_DIMS) {
        let p = pair.lifetime();
        let psi = net.psi(pair.dim, pair.birth, p);
        let block = &mut out[pair.dim * EMBED_DIM..(pair.dim + 1) * EMBED_DIM];
        for (o, v) in block.iter_mut().zip(psi) {
            *o += p * v;
        }
    }
    out
}

/// Pulls an upstream gradient on φ back to per-pair (∂birth, ∂death).
pub fn embed_vjp(dgm: &PersistenceDiagram, net: &EmbeddingNet, upstream: &[f64]) -> Result<Vec<(f64, f64)>> {
    if upstream.len() != net.output_len() {
        return Err(Error::invalid(format!(
            "embedding gradient has length {}, expected {}",
            upstream.len(),
            net.output_len()
        )));
    }
    Ok(dgm
        .pairs
        .iter()
        .map(|pair| {
            if !pair.is_finite() || pair.dim >= HOMOLOGY_DIMS {
                return (0.0, 0.0);
            }
            let g = &upstream[pair.dim * EMBED_DIM..(pair.dim + 1) * EMBED_DIM];
            let p = pair.lifetime();
            let (psi, gb, gp_psi) = net.psi[pair.dim].eval_vjp(pair.birth, p, g);
            let gp = psi.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() + p * gp_psi;
            let gb = p * gb;
            (gb - gp, gp)
        })
        .collect())
}

/// ‖φ_adv − φ_clean‖² and its gradient with respect to φ_adv.
pub fn loss_div(phi_adv: &[f64], phi_clean: &[f64]) -> Result<(f64, Vec<f64>)> {
    if phi_adv.len() != phi_clean.len() {
        return Err(Error::invalid(format!(
            "embedding lengths differ: {} vs {}",
            phi_adv.len(),
            phi_clean.len()
        )));
    }
    let diff: Vec<f64> = phi_adv.iter().zip(phi_clean).map(|(a, c)| a - c).collect();
    let value = diff.iter().map(|d| d * d).sum();
    Ok((value, diff.into_iter().map(|d| 2.0 * d).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Destruction,
    Creation,
}

impl Mode {
    fn sign(self) -> f64 {
        match self {
            Mode::Destruction => 1.0,
            Mode::Creation => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopoLossConfig {
    pub alpha: f64,
    pub beta: f64,
    pub w: [f64; 3],
    #[serde(rename = "top_k")]
    pub k: usize,
}

impl Default for TopoLossConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            w: [0.3, 1.0, 1.0],
            k: 50,
        }
    }
}

impl TopoLossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::invalid("topo alpha and beta must be >= 0"));
        }
        if self.w.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("topo w must be finite"));
        }
        if self.k == 0 {
            return Err(Error::invalid("topo top_k must be >= 1"));
        }
        Ok(())
    }
}

/// Σ_k w_k s_k with s_k = ±(sum of the top-K lifetimes of dimension k).
pub fn loss_dir(dgm: &PersistenceDiagram, cfg: &TopoLossConfig, mode: Mode) -> (f64, Vec<(f64, f64)>) {
    let mut grads = vec![(0.0, 0.0); dgm.pairs.len()];
    let mut value = 0.0;
    for (dim, &w) in cfg.w.iter().enumerate() {
        let s = mode.sign() * w;
        let mut sum = 0.0;
        for f in top_k_lifetimes(dgm, dim, cfg.k) {
            sum += f.lifetime;
            grads[f.pair] = (-s, s);
        }
        value += s * sum;
    }
    (value, grads)
}

/// Destruction for the first `patience` iterations, creation afterward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseScheduler {
    pub patience: usize,
    pub iter: usize,
}

impl PhaseScheduler {
    pub fn new(patience: usize) -> Self {
        Self { patience, iter: 0 }
    }

    pub fn mode(&self) -> Mode {
        if self.iter < self.patience {
            Mode::Destruction
        } else {
            Mode::Creation
        }
    }

    pub fn step(&mut self) {
        self.iter += 1;
    }

    pub fn reset(&mut self) {
        self.iter = 0;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhLoss {
    pub value: f64,
    pub div: f64,
    pub dir: f64,
    pub grad: GradField,
}

/// α·L_div + β·L_dir at the diagram of `points`, pulled back to the points.
pub fn loss_ph(
    points: &[Vec3],
    filt: &Filtration,
    dgm: &PersistenceDiagram,
    phi_clean: &[f64],
    net: &EmbeddingNet,
    cfg: &TopoLossConfig,
    mode: Mode,
) -> Result<PhLoss> {
    let mut upstream = vec![(0.0, 0.0); dgm.pairs.len()];
    let mut div = 0.0;
    if cfg.alpha != 0.0 {
        let phi = embed(dgm, net);
        let (v, g) = loss_div(&phi, phi_clean)?;
        div = v;
        for (u, e) in upstream.iter_mut().zip(embed_vjp(dgm, net, &g)?) {
            u.0 += cfg.alpha * e.0;
            u.1 += cfg.alpha * e.1;
        }
    }
    let mut dir = 0.0;
    if cfg.beta != 0.0 {
        let (v, g) = loss_dir(dgm, cfg, mode);
        dir = v;
        for (u, e) in upstream.iter_mut().zip(g) {
            u.0 += cfg.beta * e.0;
            u.1 += cfg.beta * e.1;
        }
    }
    let grad = if upstream.iter().all(|&(a, b)| a == 0.0 && b == 0.0) {
        GradField::zeros(points.len())
    } else {
        diagram_vjp(points, dgm, &critical_map(filt, dgm), &upstream)?
    };
    Ok(PhLoss {
        value: cfg.alpha * div + cfg.beta * dir,
        div,
        dir,
        grad,
    })
}
