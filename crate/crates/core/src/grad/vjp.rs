use serde::{Deserialize, Serialize};

use crate::delaunay::Simplex;
use crate::error::{Error, Result};
use crate::persistence::{Filtration, PersistenceDiagram};
use crate::vec3::{axpy, Vec3};

use super::circumradius_grad;

/// Per-point gradient, aligned with the source cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradField {
    pub grads: Vec<Vec3>,
}

impl GradField {
    pub fn zeros(n: usize) -> Self {
        Self {
            grads: vec![[0.0; 3]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn add_scaled(&mut self, other: &GradField, s: f64) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            axpy(a, s, *b);
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for g in &mut self.grads {
            *g = crate::vec3::scale(*g, s);
        }
        self
    }

    pub fn dot(&self, dir: &[Vec3]) -> f64 {
        self.grads.iter().zip(dir).map(|(g, d)| crate::vec3::dot(*g, *d)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().flatten().all(|x| x.is_finite())
    }
}

/// Defining simplices (whose circumradius equals the value) of each pair's
/// birth and death. Vertices have constant value 0 and no defining simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalMap {
    pub entries: Vec<(Option<Simplex>, Option<Simplex>)>,
}

pub fn critical_map(filt: &Filtration, dgm: &PersistenceDiagram) -> CriticalMap {
    let def = |idx: usize| {
        let s = &filt.simplices[idx];
        (s.simplex.dim() > 0).then_some(s.defining)
    };
    CriticalMap {
        entries: dgm
            .pairs
            .iter()
            .map(|p| (def(p.birth_index), p.death_index.and_then(def)))
            .collect(),
    }
}

/// Pulls per-pair upstream gradients (∂L/∂birth, ∂L/∂death) back to points
/// through the circumradius of each defining simplex.
pub fn diagram_vjp(
    points: &[Vec3],
    dgm: &PersistenceDiagram,
    crit: &CriticalMap,
    upstream: &[(f64, f64)],
) -> Result<GradField> {
    if upstream.len() != dgm.pairs.len() || crit.entries.len() != dgm.pairs.len() {
        return Err(Error::invalid(
            "upstream and critical map must have one entry per diagram pair",
        ));
    }
    let mut out = GradField::zeros(points.len());
    let mut route = |s: &Simplex, g: f64| -> Result<()> {
        if g == 0.0 {
            return Ok(());
        }
        let coords: Vec<Vec3> = s.vertices().iter().map(|&v| points[v as usize]).collect();
        let (_, grads) = circumradius_grad(&coords)?;
        for (&v, gv) in s.vertices().iter().zip(grads) {
            axpy(&mut out.grads[v as usize], g, gv);
        }
        Ok(())
    };
    for ((b, d), &(gb, gd)) in crit.entries.iter().zip(upstream) {
        if let Some(s) = b {
            route(s, gb)?;
        }
        if let Some(s) = d {
            route(s, gd)?;
        }
    }
    Ok(out)
}
