//! Browser bindings. A [`Demo`] holds one synthetic cloud and supports three
//! operations: its persistence diagram, the alpha complex at a chosen scale,
//! and gradient steps on the topology loss alone.

use serde::Serialize;
use topo_adv::attack::{clip_ball, tangent_project};
use topo_adv::data_io::{generate_shape, Family, Shape, ShapeSpec};
use topo_adv::geo_loss::{CleanStats, DEFAULT_K};
use topo_adv::persistence::{diagram_of, Filtration, PersistenceDiagram};
use topo_adv::topo_loss::{embed, loss_ph, EmbeddingNet, Mode, TopoLossConfig};
use topo_adv::vec3::Vec3;
use topo_adv::{PointCloud, Result};
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct State<'a> {
    points: &'a [Vec3],
    /// `[dim, birth, death]`, death `null` for essential classes.
    diagram: Vec<(usize, f64, Option<f64>)>,
    max_value: f64,
}

#[derive(Serialize)]
struct Complex {
    alpha: f64,
    edges: Vec<[u32; 2]>,
    triangles: Vec<[u32; 3]>,
    betti: [usize; 3],
}

#[derive(Serialize)]
struct Push<'a> {
    loss: f64,
    mode: &'static str,
    max_displacement: f64,
    state: State<'a>,
}

#[wasm_bindgen]
pub struct Demo {
    clean: PointCloud,
    stats: CleanStats,
    delta: Vec<Vec3>,
    current: Vec<Vec3>,
    net: EmbeddingNet,
    phi_clean: Vec<f64>,
    filt: Filtration,
    dgm: PersistenceDiagram,
    epsilon: f64,
}

impl Demo {
    pub fn create(family: &str, n_points: usize, seed: u64) -> Result<Self> {
        let family: Family = family.parse()?;
        let spec = ShapeSpec {
            shape: Shape::default_for(family),
            n_points,
            noise_sigma: 0.005,
            seed,
        };
        let clean = generate_shape(&spec)?;
        let stats = CleanStats::new(&clean, DEFAULT_K)?;
        let (filt, dgm) = diagram_of(&clean.points, 0)?;
        let net = EmbeddingNet::new(seed);
        let phi_clean = embed(&dgm, &net);
        Ok(Self {
            delta: vec![[0.0; 3]; clean.len()],
            current: clean.points.clone(),
            clean,
            stats,
            net,
            phi_clean,
            filt,
            dgm,
            epsilon: 0.55,
        })
    }

    pub fn state_json(&self) -> String {
        to_json(&self.snapshot())
    }

    fn snapshot(&self) -> State<'_> {
        State {
            points: &self.current,
            diagram: self
                .dgm
                .pairs
                .iter()
                .map(|p| (p.dim, p.birth, p.death_index.map(|_| p.death)))
                .collect(),
            max_value: self.filt.simplices.last().map_or(0.0, |s| s.value),
        }
    }

    /// Edges and triangles with filtration value ≤ `alpha`, and the Betti
    /// numbers of that complex read off the diagram.
    pub fn complex_json(&self, alpha: f64) -> String {
        let mut edges = Vec::new();
        let mut triangles = Vec::new();
        for s in self.filt.simplices.iter().take_while(|s| s.value <= alpha) {
            let v = s.simplex.vertices();
            match s.simplex.dim() {
                1 => edges.push([v[0], v[1]]),
                2 => triangles.push([v[0], v[1], v[2]]),
                _ => {}
            }
        }
        let mut betti = [0; 3];
        for p in &self.dgm.pairs {
            let alive = p.birth <= alpha && (p.death_index.is_none() || alpha < p.death);
            if alive && p.dim < 3 {
                betti[p.dim] += 1;
            }
        }
        to_json(&Complex {
            alpha,
            edges,
            triangles,
            betti,
        })
    }

    /// `steps` projected gradient steps on the topology loss, measured
    /// against the diagram of the unperturbed cloud.
    pub fn push_json(&mut self, steps: usize, step_size: f64, creation: bool) -> Result<String> {
        let mode = if creation { Mode::Creation } else { Mode::Destruction };
        let cfg = TopoLossConfig::default();
        let mut loss = 0.0;
        for _ in 0..steps {
            let l = loss_ph(
                &self.current,
                &self.filt,
                &self.dgm,
                &self.phi_clean,
                &self.net,
                &cfg,
                mode,
            )?;
            loss = l.value;
            for (d, g) in self.delta.iter_mut().zip(&l.grad.grads) {
                for c in 0..3 {
                    d[c] -= step_size * g[c];
                }
            }
            tangent_project(&mut self.delta, &self.stats.normals);
            clip_ball(&mut self.delta, self.epsilon);
            self.refresh()?;
        }
        let max_displacement = self
            .delta
            .iter()
            .map(|d| (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt())
            .fold(0.0, f64::max);
        Ok(to_json(&Push {
            loss,
            mode: if creation { "creation" } else { "destruction" },
            max_displacement,
            state: self.snapshot(),
        }))
    }

    pub fn reset_points(&mut self) -> Result<()> {
        self.delta.iter_mut().for_each(|d| *d = [0.0; 3]);
        self.refresh()
    }

    fn refresh(&mut self) -> Result<()> {
        self.current = self.clean.displaced(&self.delta).points;
        let (filt, dgm) = diagram_of(&self.current, 0)?;
        self.filt = filt;
        self.dgm = dgm;
        Ok(())
    }
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string(v).expect("demo state serializes")
}

fn js_err(e: topo_adv::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(family: &str, n_points: usize, seed: u32) -> Result<Demo, JsError> {
        Demo::create(family, n_points, seed as u64).map_err(js_err)
    }

    /// Points and persistence diagram as JSON.
    pub fn state(&self) -> String {
        self.state_json()
    }

    /// Alpha complex at `alpha` as JSON.
    pub fn complex(&self, alpha: f64) -> String {
        self.complex_json(alpha)
    }

    /// Topology-loss steps; returns the new state as JSON.
    pub fn push(&mut self, steps: usize, step_size: f64, creation: bool) -> Result<String, JsError> {
        self.push_json(steps, step_size, creation).map_err(js_err)
    }

    pub fn reset(&mut self) -> Result<(), JsError> {
        self.reset_points().map_err(js_err)
    }
}

/// Names accepted by the constructor.
#[wasm_bindgen]
pub fn families() -> String {
    to_json(&Family::ALL.iter().map(|f| f.name()).collect::<Vec<_>>())
}
