//! Small permutation-invariant point-cloud classifiers with hand-written
//! backward passes.

mod checkpoint;
mod nn;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_HEADER};
pub use train::{train, EpochLog, Optimizer, TrainConfig, TrainLog};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::GradField;
use crate::pointcloud::knn_rows;
use crate::vec3::{sub, Vec3};
use nn::Mlp;

pub const EDGE_K: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Pointwise,
    Edge,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointwise" => Ok(Variant::Pointwise),
            "edge" => Ok(Variant::Edge),
            other => Err(Error::invalid(format!(
                "unknown variant `{other}` (expected pointwise or edge)"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Pointwise => "pointwise",
            Variant::Edge => "edge",
        })
    }
}

/// Point-cloud classifier. All parameters live in one flat vector.
///
/// Hidden layers use softplus, a smooth non-saturating stand-in for ReLU.
///
/// * pointwise: per-point 3→32→64, max pool, head 64→32→C.
/// * edge: per-edge (p_i, p_j − p_i) 6→16→32 over the k nearest neighbors,
///   max over neighbors, per-point 32→64, max pool, same head.
#[derive(Debug, Clone, PartialEq)]
pub struct PointClassifier {
    pub variant: Variant,
    pub classes: usize,
    pub k: usize,
    pub seed: u64,
    pub params: Vec<f64>,
    edge: Option<Mlp>,
    point: Mlp,
    head: Mlp,
}

impl PointClassifier {
    pub fn new(variant: Variant, classes: usize, seed: u64) -> Result<Self> {
        if classes < 2 {
            return Err(Error::invalid("classifier needs at least 2 classes"));
        }
        let mut model = Self::layout(variant, classes, EDGE_K, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; model.param_count()];
        for mlp in model.mlps() {
            mlp.init(&mut params, &mut rng);
        }
        model.params = params;
        Ok(model)
    }

    fn layout(variant: Variant, classes: usize, k: usize, seed: u64) -> Self {
        let mut off = 0;
        let (edge, point) = match variant {
            Variant::Pointwise => (None, Mlp::new(&[3, 32, 64], true, &mut off)),
            Variant::Edge => {
                let e = Mlp::new(&[6, 16, 32], true, &mut off);
                (Some(e), Mlp::new(&[32, 64], true, &mut off))
            }
        };
        let head = Mlp::new(&[64, 32, classes], false, &mut off);
        Self {
            variant,
            classes,
            k,
            seed,
            params: Vec::new(),
            edge,
            point,
            head,
        }
    }

    fn mlps(&self) -> impl Iterator<Item = &Mlp> {
        self.edge.iter().chain([&self.point, &self.head])
    }

    pub fn param_count(&self) -> usize {
        self.head.end()
    }

    /// Zeroes the output layer, which makes every logit zero.
    pub fn zero_head(&mut self) {
        let last = self.head.layers.last().expect("head has layers");
        let range = last.off..last.end();
        self.params[range].iter_mut().for_each(|p| *p = 0.0);
    }

    pub fn logits(&self, points: &[Vec3]) -> Vec<f64> {
        self.run(points).logits
    }

    pub fn predict(&self, points: &[Vec3]) -> usize {
        argmax(&self.logits(points))
    }

    fn neighbors(&self, points: &[Vec3]) -> (usize, Vec<usize>) {
        let k = self.k.min(points.len().saturating_sub(1));
        if k == 0 {
            return (0, Vec::new());
        }
        (k, knn_rows(points, k))
    }

    /// Forward pass keeping everything the backward pass needs.
    fn run(&self, points: &[Vec3]) -> Trace {
        let p = &self.params;
        let n = points.len();
        let mut edges = Vec::new();
        let inputs: Vec<Vec<f64>> = match &self.edge {
            None => points.iter().map(|q| q.to_vec()).collect(),
            Some(edge) => {
                let (k, nb) = self.neighbors(points);
                let mut feats = Vec::with_capacity(n);
                for i in 0..n {
                    let row = &nb[i * k..(i + 1) * k];
                    let acts: Vec<Vec<Vec<f64>>> = row
                        .iter()
                        .map(|&j| {
                            let d = sub(points[j], points[i]);
                            let x = [points[i][0], points[i][1], points[i][2], d[0], d[1], d[2]];
                            edge.forward(p, &x)
                        })
                        .collect();
                    let width = edge.out_dim();
                    let mut best = vec![f64::NEG_INFINITY; width];
                    let mut arg = vec![0usize; width];
                    for (slot, a) in acts.iter().enumerate() {
                        let out = a.last().expect("activations");
                        for c in 0..width {
                            if out[c] > best[c] {
                                best[c] = out[c];
                                arg[c] = slot;
                            }
                        }
                    }
                    if k == 0 {
                        best.iter_mut().for_each(|b| *b = 0.0);
                    }
                    edges.push(EdgeTrace {
                        neighbors: row.to_vec(),
                        acts,
                        arg,
                    });
                    feats.push(best);
                }
                feats
            }
        };
        let point_acts: Vec<Vec<Vec<f64>>> = inputs.iter().map(|x| self.point.forward(p, x)).collect();
        let width = self.point.out_dim();
        let mut pooled = vec![f64::NEG_INFINITY; width];
        let mut pool_arg = vec![0usize; width];
        for (i, a) in point_acts.iter().enumerate() {
            let out = a.last().expect("activations");
            for c in 0..width {
                if out[c] > pooled[c] {
                    pooled[c] = out[c];
                    pool_arg[c] = i;
                }
            }
        }
        if n == 0 {
            pooled.iter_mut().for_each(|v| *v = 0.0);
        }
        let head_acts = self.head.forward(p, &pooled);
        let logits = head_acts.last().expect("activations").clone();
        Trace {
            edges,
            point_acts,
            pool_arg,
            head_acts,
            logits,
        }
    }

    /// Backpropagates `g_logits`; returns the point gradient and, when
    /// `param_grad` is given, accumulates the parameter gradient into it.
    fn backward(
        &self,
        points: &[Vec3],
        trace: &Trace,
        g_logits: &[f64],
        mut param_grad: Option<&mut [f64]>,
    ) -> GradField {
        let p = &self.params;
        let n = points.len();
        let mut out = GradField::zeros(n);
        let g_pool = self
            .head
            .backward(p, &trace.head_acts, g_logits, param_grad.as_deref_mut());
        let width = self.point.out_dim();
        let mut g_point: Vec<Option<Vec<f64>>> = vec![None; n];
        for c in 0..width {
            if g_pool[c] != 0.0 && n > 0 {
                let slot = g_point[trace.pool_arg[c]].get_or_insert_with(|| vec![0.0; width]);
                slot[c] += g_pool[c];
            }
        }
        for (i, g) in g_point.iter().enumerate() {
            let Some(g) = g else { continue };
            let g_in = self
                .point
                .backward(p, &trace.point_acts[i], g, param_grad.as_deref_mut());
            match &self.edge {
                None => {
                    for c in 0..3 {
                        out.grads[i][c] += g_in[c];
                    }
                }
                Some(edge) => {
                    let et = &trace.edges[i];
                    if et.neighbors.is_empty() {
                        continue;
                    }
                    let ew = edge.out_dim();
                    let mut per_slot: Vec<Option<Vec<f64>>> = vec![None; et.neighbors.len()];
                    for c in 0..ew {
                        if g_in[c] != 0.0 {
                            let s = per_slot[et.arg[c]].get_or_insert_with(|| vec![0.0; ew]);
                            s[c] += g_in[c];
                        }
                    }
                    for (slot, g) in per_slot.iter().enumerate() {
                        let Some(g) = g else { continue };
                        let ge = edge.backward(p, &et.acts[slot], g, param_grad.as_deref_mut());
                        let j = et.neighbors[slot];
                        for c in 0..3 {
                            out.grads[i][c] += ge[c] - ge[c + 3];
                            out.grads[j][c] += ge[c + 3];
                        }
                    }
                }
            }
        }
        out
    }

    /// Gradient of ⟨g_logits, logits⟩ with respect to the points.
    pub fn logits_vjp(&self, points: &[Vec3], g_logits: &[f64]) -> GradField {
        let trace = self.run(points);
        self.backward(points, &trace, g_logits, None)
    }
}

struct EdgeTrace {
    neighbors: Vec<usize>,
    acts: Vec<Vec<Vec<f64>>>,
    arg: Vec<usize>,
}

struct Trace {
    edges: Vec<EdgeTrace>,
    point_acts: Vec<Vec<Vec<f64>>>,
    pool_arg: Vec<usize>,
    head_acts: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Logits of the model on a cloud.
pub fn forward(model: &PointClassifier, points: &[Vec3]) -> Vec<f64> {
    model.logits(points)
}

/// max(f_y − max_{j≠y} f_j, −κ) and its gradient with respect to the logits.
/// The competing class is the lowest index among ties; the gradient is zero
/// when the value is clamped.
pub fn cw_margin_loss(logits: &[f64], y: usize, kappa: f64) -> Result<(f64, Vec<f64>)> {
    if y >= logits.len() || logits.len() < 2 {
        return Err(Error::invalid(format!(
            "label {y} out of range for {} logits",
            logits.len()
        )));
    }
    if !(kappa >= 0.0) {
        return Err(Error::invalid("kappa must be >= 0"));
    }
    let mut other = usize::MAX;
    for (j, &f) in logits.iter().enumerate() {
        if j != y && (other == usize::MAX || f > logits[other]) {
            other = j;
        }
    }
    let margin = logits[y] - logits[other];
    let mut grad = vec![0.0; logits.len()];
    if margin < -kappa {
        return Ok((-kappa, grad));
    }
    grad[y] = 1.0;
    grad[other] = -1.0;
    Ok((margin, grad))
}

/// Logits, CW margin loss and its point gradient from one forward/backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ClsEval {
    pub logits: Vec<f64>,
    pub loss: f64,
    pub grad: GradField,
}

pub fn cls_eval(model: &PointClassifier, points: &[Vec3], y: usize, kappa: f64) -> Result<ClsEval> {
    let trace = model.run(points);
    let (loss, g) = cw_margin_loss(&trace.logits, y, kappa)?;
    let grad = if g.iter().all(|&x| x == 0.0) {
        GradField::zeros(points.len())
    } else {
        model.backward(points, &trace, &g, None)
    };
    Ok(ClsEval {
        logits: trace.logits,
        loss,
        grad,
    })
}

/// CW margin loss of the model at `points` and its gradient with respect to
/// the points.
pub fn input_grad(model: &PointClassifier, points: &[Vec3], y: usize, kappa: f64) -> Result<(f64, GradField)> {
    let e = cls_eval(model, points, y, kappa)?;
    Ok((e.loss, e.grad))
}

/// Softmax cross-entropy and its gradient with respect to the logits.
pub fn cross_entropy(logits: &[f64], y: usize) -> (f64, Vec<f64>) {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    let loss = z.ln() + m - logits[y];
    let mut g: Vec<f64> = exps.iter().map(|e| e / z).collect();
    g[y] -= 1.0;
    (loss, g)
}
