use serde::{Deserialize, Serialize};

use crate::delaunay::Simplex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
    /// Position of the birth simplex in the filtration.
    pub birth_index: usize,
    pub death_index: Option<usize>,
    pub birth_simplex: Simplex,
    pub death_simplex: Option<Simplex>,
}

impl PersistencePair {
    pub fn is_finite(&self) -> bool {
        self.death.is_finite()
    }

    pub fn lifetime(&self) -> f64 {
        self.death - self.birth
    }
}

/// Birth/death pairs in dimensions 0..=2, kept in a canonical order
/// (dim, birth, death, birth simplex) so that sums over pairs are
/// reproducible.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn new(mut pairs: Vec<PersistencePair>) -> Self {
        pairs.sort_by(|a, b| {
            a.dim
                .cmp(&b.dim)
                .then(a.birth.total_cmp(&b.birth))
                .then(a.death.total_cmp(&b.death))
                .then(a.birth_simplex.cmp(&b.birth_simplex))
                .then(a.death_simplex.cmp(&b.death_simplex))
        });
        Self { pairs }
    }

    pub fn finite(&self, dim: usize) -> impl Iterator<Item = (usize, &PersistencePair)> {
        self.pairs
            .iter()
            .enumerate()
            .filter(move |(_, p)| p.dim == dim && p.is_finite())
    }

    pub fn essential_count(&self, dim: usize) -> usize {
        self.pairs.iter().filter(|p| p.dim == dim && !p.is_finite()).count()
    }

    pub fn count(&self, dim: usize) -> usize {
        self.pairs.iter().filter(|p| p.dim == dim).count()
    }
}

/// Shannon entropy (natural log) of the normalized finite lifetimes in `dim`;
/// zero when fewer than two finite bars exist.
pub fn persistence_entropy(dgm: &PersistenceDiagram, dim: usize) -> f64 {
    let lifetimes: Vec<f64> = dgm.finite(dim).map(|(_, p)| p.lifetime()).collect();
    entropy_of_lifetimes(&lifetimes)
}

pub fn entropy_of_lifetimes(lifetimes: &[f64]) -> f64 {
    if lifetimes.len() < 2 {
        return 0.0;
    }
    let total: f64 = lifetimes.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -lifetimes
        .iter()
        .map(|&l| l / total)
        .filter(|&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

/// One of the K most persistent finite features of a dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopFeature {
    pub lifetime: f64,
    /// Index into `PersistenceDiagram::pairs`.
    pub pair: usize,
    pub birth_simplex: Simplex,
    pub death_simplex: Simplex,
}

/// Finite pairs of `dim` by lifetime descending, ties by birth ascending and
/// then birth/death simplex, truncated to `k`.
pub fn top_k_lifetimes(dgm: &PersistenceDiagram, dim: usize, k: usize) -> Vec<TopFeature> {
    let mut feats: Vec<(f64, f64, TopFeature)> = dgm
        .finite(dim)
        .map(|(i, p)| {
            (
                p.lifetime(),
                p.birth,
                TopFeature {
                    lifetime: p.lifetime(),
                    pair: i,
                    birth_simplex: p.birth_simplex,
                    death_simplex: p.death_simplex.expect("finite pair has a death simplex"),
                },
            )
        })
        .collect();
    feats.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.birth_simplex.cmp(&b.2.birth_simplex))
            .then(a.2.death_simplex.cmp(&b.2.death_simplex))
    });
    feats.truncate(k);
    feats.into_iter().map(|f| f.2).collect()
}
