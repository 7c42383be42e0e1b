//! Projected gradient descent on the joint classification / topology /
//! geometry objective, with restarts and stability-checked early stopping.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classifier::{argmax, cls_eval, PointClassifier};
use crate::error::{Error, Result};
use crate::geo_loss::{geom_total, CleanStats};
use crate::grad::GradField;
use crate::persistence::{diagram_of, PersistenceDiagram};
use crate::pointcloud::PointCloud;
use crate::topo_loss::{embed, loss_ph, EmbeddingNet, PhaseScheduler, TopoLossConfig};
use crate::vec3::{axpy, dot, norm, scale, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    pub epsilon: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub eta0: f64,
    pub decay: f64,
    /// Iterations between decays; `None` means ⌈iterations / 3⌉.
    pub decay_period: Option<usize>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub kappa: f64,
    pub topo: TopoLossConfig,
    pub patience: usize,
    pub stability: usize,
    pub seed: u64,
    pub embed_seed: u64,
    pub k_neighbors: usize,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.55,
            iterations: 300,
            restarts: 3,
            eta0: 0.001,
            decay: 0.5,
            decay_period: None,
            lambda1: 10.0,
            lambda2: 0.001,
            lambda3: 5.0,
            kappa: 0.05,
            topo: TopoLossConfig::default(),
            patience: 30,
            stability: 3,
            seed: 0,
            embed_seed: 0,
            k_neighbors: crate::geo_loss::DEFAULT_K,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        let nonneg = |x: f64| x >= 0.0 && x.is_finite();
        if !pos(self.epsilon) {
            return Err(Error::invalid("attack epsilon must be > 0"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("attack iterations must be >= 1"));
        }
        if !pos(self.eta0) {
            return Err(Error::invalid("attack eta0 must be > 0"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::invalid("attack decay must be in (0, 1]"));
        }
        if self.decay_period == Some(0) {
            return Err(Error::invalid("attack decay_period must be >= 1"));
        }
        if !(nonneg(self.lambda1) && nonneg(self.lambda2) && nonneg(self.lambda3)) {
            return Err(Error::invalid("attack lambda1..3 must be >= 0"));
        }
        if !nonneg(self.kappa) {
            return Err(Error::invalid("attack kappa must be >= 0"));
        }
        if self.stability == 0 {
            return Err(Error::invalid("attack stability must be >= 1"));
        }
        if self.k_neighbors < 2 {
            return Err(Error::invalid("attack k_neighbors must be >= 2"));
        }
        self.topo.validate()
    }

    pub fn period(&self) -> usize {
        self.decay_period.unwrap_or(self.iterations.div_ceil(3))
    }

    /// η_t = eta0 · decay^⌊t / period⌋.
    pub fn step_size(&self, t: usize) -> f64 {
        self.eta0 * self.decay.powi((t / self.period()) as i32)
    }
}

/// Rows whose normal component is this small relative to their length are
/// already tangent and left untouched, which makes projection idempotent in
/// floating point.
const TANGENT_TOL: f64 = 8.0 * f64::EPSILON;

fn is_tangent(d: Vec3, n: Vec3) -> bool {
    dot(d, n).abs() <= TANGENT_TOL * norm(d)
}

/// δ_i ← δ_i − ⟨δ_i, n_i⟩ n_i.
pub fn tangent_project(delta: &mut [Vec3], normals: &[Vec3]) {
    for (d, n) in delta.iter_mut().zip(normals) {
        // a second pass removes the rounding residue of the first
        for _ in 0..4 {
            if is_tangent(*d, *n) {
                break;
            }
            let c = dot(*d, *n);
            axpy(d, -c, *n);
        }
    }
}

/// Rescales rows longer than `epsilon` onto the sphere of radius `epsilon`.
pub fn clip_ball(delta: &mut [Vec3], epsilon: f64) {
    for d in delta.iter_mut() {
        let l = norm(*d);
        if l > epsilon {
            *d = scale(*d, epsilon / l);
            // rounding can leave the rescaled row an ulp outside
            while norm(*d) > epsilon {
                *d = scale(*d, 1.0 - f64::EPSILON);
            }
        }
    }
}

/// Isotropic Gaussian rows with expected norm 0.1·ε, projected onto the
/// tangent planes and the ε-ball.
pub fn random_tangent_init(normals: &[Vec3], epsilon: f64, seed: u64) -> Vec<Vec3> {
    // E‖g‖ = σ·2√(2/π) for a standard 3D Gaussian scaled by σ
    let sigma = 0.1 * epsilon / (2.0 * (2.0 / std::f64::consts::PI).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delta: Vec<Vec3> = normals
        .iter()
        .map(|_| {
            [0; 3].map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * z
            })
        })
        .collect();
    tangent_project(&mut delta, normals);
    clip_ball(&mut delta, epsilon);
    delta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub t: usize,
    pub cls: f64,
    pub ph: f64,
    pub geom: f64,
    pub total: f64,
    /// Prediction on the iterate the losses were evaluated at.
    pub prediction: usize,
    /// max_i ‖δ_i‖ after this iteration's projection.
    pub max_norm: f64,
    /// max_i |⟨δ_i, n_i⟩| after this iteration's projection.
    pub max_normal_component: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub restart: usize,
    /// max ‖δ_i‖ and max |⟨δ_i, n_i⟩| of the initial field.
    pub init_max_norm: f64,
    pub init_max_normal_component: f64,
    pub records: Vec<IterRecord>,
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub adv_cloud: PointCloud,
    pub delta: Vec<Vec3>,
    pub success: bool,
    /// The clean cloud was already misclassified; nothing was optimized.
    pub trivial: bool,
    pub label: usize,
    pub clean_prediction: usize,
    pub predicted: usize,
    pub restart_index: usize,
    pub iterations_used: usize,
    pub trajectories: Vec<Trajectory>,
    pub clean_diagram: Option<PersistenceDiagram>,
    pub adv_diagram: Option<PersistenceDiagram>,
    /// Number of Delaunay + persistence computations performed.
    pub ph_evaluations: usize,
}

fn field_stats(delta: &[Vec3], normals: &[Vec3]) -> (f64, f64) {
    delta.iter().zip(normals).fold((0.0f64, 0.0f64), |(a, b), (d, n)| {
        (a.max(norm(*d)), b.max(dot(*d, *n).abs()))
    })
}

struct Context<'a> {
    model: &'a PointClassifier,
    clean: &'a PointCloud,
    stats: &'a CleanStats,
    label: usize,
    cfg: &'a AttackConfig,
    net: &'a EmbeddingNet,
    phi_clean: Vec<f64>,
    ph_evaluations: usize,
}

enum Outcome {
    Success {
        delta: Vec<Vec3>,
        pred: usize,
        iterations: usize,
    },
    Failed {
        delta: Vec<Vec3>,
        pred: usize,
    },
}

impl Context<'_> {
    fn topo_grad(&mut self, adv: &[Vec3], sched: &PhaseScheduler, seed: u64) -> Result<(f64, GradField)> {
        let mut attempt = |s: u64| -> Result<(f64, GradField)> {
            self.ph_evaluations += 1;
            let (filt, dgm) = diagram_of(adv, s)?;
            let l = loss_ph(
                adv,
                &filt,
                &dgm,
                &self.phi_clean,
                self.net,
                &self.cfg.topo,
                sched.mode(),
            )?;
            Ok((l.value, l.grad))
        };
        match attempt(seed) {
            Ok(v) => Ok(v),
            Err(_) => attempt(seed ^ 0x5bd1_e995_a5a5_a5a5),
        }
    }

    fn trajectory(&mut self, restart: usize, mut delta: Vec<Vec3>) -> (Trajectory, Outcome) {
        let cfg = self.cfg;
        let normals = &self.stats.normals;
        let (init_max_norm, init_max_normal_component) = field_stats(&delta, normals);
        let mut trace = Trajectory {
            restart,
            init_max_norm,
            init_max_normal_component,
            records: Vec::with_capacity(cfg.iterations),
            aborted: None,
        };
        let mut sched = PhaseScheduler::new(cfg.patience);
        let mut streak: Option<(Vec<Vec3>, usize, usize)> = None;
        let mut streak_len = 0;
        let mut last_pred = self.label;
        for t in 0..=cfg.iterations {
            let adv: Vec<Vec3> = self
                .clean
                .points
                .iter()
                .zip(&delta)
                .map(|(p, d)| crate::vec3::add(*p, *d))
                .collect();
            let cls = match cls_eval(self.model, &adv, self.label, cfg.kappa) {
                Ok(c) => c,
                Err(e) => {
                    trace.aborted = Some(e.to_string());
                    break;
                }
            };
            let pred = argmax(&cls.logits);
            last_pred = pred;
            if pred != self.label {
                if streak.is_none() {
                    streak = Some((delta.clone(), pred, t));
                }
                streak_len += 1;
                if streak_len >= cfg.stability {
                    let (d, p, _) = streak.take().expect("streak start");
                    return (
                        trace,
                        Outcome::Success {
                            delta: d,
                            pred: p,
                            iterations: t,
                        },
                    );
                }
            } else {
                streak = None;
                streak_len = 0;
            }
            if t == cfg.iterations {
                break;
            }

            let mut grad = cls.grad.scaled(cfg.lambda1);
            let mut ph = 0.0;
            if cfg.lambda2 > 0.0 {
                let seed = cfg
                    .seed
                    .wrapping_mul(0x9e37_79b9)
                    .wrapping_add((restart * 100_003 + t) as u64);
                match self.topo_grad(&adv, &sched, seed) {
                    Ok((v, g)) => {
                        ph = v;
                        grad.add_scaled(&g, cfg.lambda2);
                    }
                    Err(e) => {
                        trace.aborted = Some(format!("iteration {t}: {e}"));
                        break;
                    }
                }
            }
            let mut geom = 0.0;
            if cfg.lambda3 > 0.0 {
                match geom_total(self.stats, &adv, &delta) {
                    Ok((terms, g)) => {
                        geom = terms.total;
                        grad.add_scaled(&g, cfg.lambda3);
                    }
                    Err(e) => {
                        trace.aborted = Some(format!("iteration {t}: {e}"));
                        break;
                    }
                }
            }
            let eta = cfg.step_size(t);
            for (d, g) in delta.iter_mut().zip(&grad.grads) {
                axpy(d, -eta, *g);
            }
            tangent_project(&mut delta, normals);
            clip_ball(&mut delta, cfg.epsilon);
            sched.step();
            let (max_norm, max_normal_component) = field_stats(&delta, normals);
            trace.records.push(IterRecord {
                t,
                cls: cls.loss,
                ph,
                geom,
                total: cfg.lambda1 * cls.loss + cfg.lambda2 * ph + cfg.lambda3 * geom,
                prediction: pred,
                max_norm,
                max_normal_component,
            });
        }
        (trace, Outcome::Failed { delta, pred: last_pred })
    }
}

/// Runs 1 + R trajectories (zero start, then random tangent starts seeded
/// `seed + r`) and returns the first stable misclassification, or the last
/// iterate of the last trajectory.
pub fn run_attack(
    model: &PointClassifier,
    clean: &PointCloud,
    stats: &CleanStats,
    label: usize,
    cfg: &AttackConfig,
    net: &EmbeddingNet,
) -> Result<AttackResult> {
    cfg.validate()?;
    if stats.len() != clean.len() {
        return Err(Error::invalid("clean statistics do not match the cloud"));
    }
    if label >= model.classes {
        return Err(Error::invalid(format!(
            "label {label} outside the model's {} classes",
            model.classes
        )));
    }
    let n = clean.len();
    let clean_prediction = model.predict(&clean.points);
    if clean_prediction != label {
        return Ok(AttackResult {
            adv_cloud: clean.clone(),
            delta: vec![[0.0; 3]; n],
            success: true,
            trivial: true,
            label,
            clean_prediction,
            predicted: clean_prediction,
            restart_index: 0,
            iterations_used: 0,
            trajectories: Vec::new(),
            clean_diagram: None,
            adv_diagram: None,
            ph_evaluations: 0,
        });
    }

    let mut ctx = Context {
        model,
        clean,
        stats,
        label,
        cfg,
        net,
        phi_clean: Vec::new(),
        ph_evaluations: 0,
    };
    let mut clean_diagram = None;
    if cfg.lambda2 > 0.0 {
        ctx.ph_evaluations += 1;
        let (_, dgm) = diagram_of(&clean.points, cfg.seed)?;
        ctx.phi_clean = embed(&dgm, net);
        clean_diagram = Some(dgm);
    }

    let mut trajectories = Vec::with_capacity(cfg.restarts + 1);
    let mut result = None;
    for r in 0..=cfg.restarts {
        let init = if r == 0 {
            vec![[0.0; 3]; n]
        } else {
            random_tangent_init(&stats.normals, cfg.epsilon, cfg.seed.wrapping_add(r as u64))
        };
        let (trace, outcome) = ctx.trajectory(r, init);
        trajectories.push(trace);
        let done = matches!(outcome, Outcome::Success { .. });
        result = Some((r, outcome));
        if done {
            break;
        }
    }
    let (restart_index, outcome) = result.expect("at least one trajectory");
    let (delta, predicted, success, iterations_used) = match outcome {
        Outcome::Success {
            delta,
            pred,
            iterations,
        } => (delta, pred, true, iterations),
        Outcome::Failed { delta, pred } => {
            let it = trajectories.last().map_or(0, |t| t.records.len());
            (delta, pred, false, it)
        }
    };
    let adv_cloud = clean.displaced(&delta);
    let mut adv_diagram = None;
    if cfg.lambda2 > 0.0 {
        ctx.ph_evaluations += 1;
        adv_diagram = diagram_of(&adv_cloud.points, cfg.seed).ok().map(|(_, d)| d);
    }
    Ok(AttackResult {
        adv_cloud,
        delta,
        success,
        trivial: false,
        label,
        clean_prediction,
        predicted,
        restart_index,
        iterations_used,
        trajectories,
        clean_diagram,
        adv_diagram,
        ph_evaluations: ctx.ph_evaluations,
    })
}
