use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Dense layer stored at `off` in a flat parameter vector: row-major
/// `out × inp` weights followed by `out` biases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Layer {
    pub inp: usize,
    pub out: usize,
    pub off: usize,
}

impl Layer {
    pub fn end(&self) -> usize {
        self.off + self.out * (self.inp + 1)
    }
}

/// softplus(x) = ln(1 + eˣ), evaluated without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// softplus′ expressed through the output y: σ(x) = 1 − e^{−y}.
fn softplus_grad(y: f64) -> f64 {
    -(-y).exp_m1()
}

/// Chain of dense layers with softplus between them; `last_act` also
/// applies it to the final layer.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mlp {
    pub layers: Vec<Layer>,
    pub last_act: bool,
}

impl Mlp {
    pub fn new(widths: &[usize], last_act: bool, off: &mut usize) -> Self {
        let layers = widths
            .windows(2)
            .map(|w| {
                let l = Layer {
                    inp: w[0],
                    out: w[1],
                    off: *off,
                };
                *off = l.end();
                l
            })
            .collect();
        Self { layers, last_act }
    }

    pub fn end(&self) -> usize {
        self.layers.last().map_or(0, |l| l.end())
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out)
    }

    /// Uniform in ±1/√fan_in for weights and biases.
    pub fn init(&self, params: &mut [f64], rng: &mut ChaCha8Rng) {
        for l in &self.layers {
            let a = 1.0 / (l.inp as f64).sqrt();
            for p in &mut params[l.off..l.end()] {
                *p = rng.random_range(-a..a);
            }
        }
    }

    fn activates(&self, idx: usize) -> bool {
        idx + 1 < self.layers.len() || self.last_act
    }

    /// Activations of every layer, input first.
    pub fn forward(&self, params: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (idx, l) in self.layers.iter().enumerate() {
            let input = acts.last().expect("input");
            let w = &params[l.off..l.off + l.out * l.inp];
            let b = &params[l.off + l.out * l.inp..l.end()];
            let mut y: Vec<f64> = w
                .chunks_exact(l.inp)
                .zip(b)
                .map(|(row, bi)| row.iter().zip(input).map(|(a, c)| a * c).sum::<f64>() + bi)
                .collect();
            if self.activates(idx) {
                y.iter_mut().for_each(|v| *v = softplus(*v));
            }
            acts.push(y);
        }
        acts
    }

    /// Gradient with respect to the input; accumulates parameter gradients
    /// when `grad` is given.
    pub fn backward(&self, params: &[f64], acts: &[Vec<f64>], g_out: &[f64], mut grad: Option<&mut [f64]>) -> Vec<f64> {
        let mut g = g_out.to_vec();
        for (idx, l) in self.layers.iter().enumerate().rev() {
            if self.activates(idx) {
                for (gi, y) in g.iter_mut().zip(&acts[idx + 1]) {
                    *gi *= softplus_grad(*y);
                }
            }
            let input = &acts[idx];
            if let Some(pg) = grad.as_deref_mut() {
                let (gw, gb) = pg[l.off..l.end()].split_at_mut(l.out * l.inp);
                for (o, &go) in g.iter().enumerate() {
                    if go == 0.0 {
                        continue;
                    }
                    for (w, x) in gw[o * l.inp..(o + 1) * l.inp].iter_mut().zip(input) {
                        *w += go * x;
                    }
                    gb[o] += go;
                }
            }
            let w = &params[l.off..l.off + l.out * l.inp];
            let mut gin = vec![0.0; l.inp];
            for (row, &go) in w.chunks_exact(l.inp).zip(&g) {
                if go == 0.0 {
                    continue;
                }
                for (gi, wi) in gin.iter_mut().zip(row) {
                    *gi += go * wi;
                }
            }
            g = gin;
        }
        g
    }
}
