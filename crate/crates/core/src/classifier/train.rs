use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, cross_entropy, PointClassifier, Variant};
use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Momentum,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub variant: Variant,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Pointwise,
            epochs: 40,
            batch_size: 16,
            learning_rate: 0.003,
            optimizer: Optimizer::Adam,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("train epochs and batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("train learning_rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainLog {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.loss)
    }
}

enum State {
    Momentum { v: Vec<f64> },
    Adam { m: Vec<f64>, v: Vec<f64>, t: i32 },
}

const MOMENTUM: f64 = 0.9;
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl State {
    fn step(&mut self, params: &mut [f64], g: &[f64], lr: f64) {
        match self {
            State::Momentum { v } => {
                for ((p, vi), gi) in params.iter_mut().zip(v.iter_mut()).zip(g) {
                    *vi = MOMENTUM * *vi + gi;
                    *p -= lr * *vi;
                }
            }
            State::Adam { m, v, t } => {
                *t += 1;
                let c1 = 1.0 - BETA1.powi(*t);
                let c2 = 1.0 - BETA2.powi(*t);
                for (((p, mi), vi), gi) in params.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g) {
                    *mi = BETA1 * *mi + (1.0 - BETA1) * gi;
                    *vi = BETA2 * *vi + (1.0 - BETA2) * gi * gi;
                    *p -= lr * (*mi / c1) / ((*vi / c2).sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Minimizes mean softmax cross-entropy over mini-batches. Per-sample
/// gradients may be computed in parallel; they are summed in sample order so
/// the result depends only on the seed.
pub fn train(dataset: &[PointCloud], classes: usize, cfg: &TrainConfig) -> Result<(PointClassifier, TrainLog)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let labels: Vec<usize> = dataset
        .iter()
        .enumerate()
        .map(|(i, c)| match c.label {
            Some(l) if l < classes => Ok(l),
            Some(l) => Err(Error::invalid(format!(
                "sample {i} has label {l} outside [0, {classes})"
            ))),
            None => Err(Error::invalid(format!("sample {i} has no label"))),
        })
        .collect::<Result<_>>()?;

    let mut model = PointClassifier::new(cfg.variant, classes, cfg.seed)?;
    let np = model.param_count();
    let mut state = match cfg.optimizer {
        Optimizer::Momentum => State::Momentum { v: vec![0.0; np] },
        Optimizer::Adam => State::Adam {
            m: vec![0.0; np],
            v: vec![0.0; np],
            t: 0,
        },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7261_696e);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut log = TrainLog::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total_loss = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let m = &model;
            let results = crate::par::map(batch, |&i| {
                let pts = &dataset[i].points;
                let trace = m.run(pts);
                let (loss, g) = cross_entropy(&trace.logits, labels[i]);
                let mut pg = vec![0.0; np];
                m.backward(pts, &trace, &g, Some(&mut pg));
                (loss, argmax(&trace.logits) == labels[i], pg)
            });
            let mut grad = vec![0.0; np];
            for (loss, ok, pg) in &results {
                total_loss += loss;
                correct += *ok as usize;
                for (a, b) in grad.iter_mut().zip(pg) {
                    *a += b;
                }
            }
            let inv = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            state.step(&mut model.params, &grad, cfg.learning_rate);
        }
        log.epochs.push(EpochLog {
            epoch,
            loss: total_loss / dataset.len() as f64,
            accuracy: correct as f64 / dataset.len() as f64,
        });
    }
    Ok((model, log))
}
