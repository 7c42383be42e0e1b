//! 3D Delaunay triangulation by incremental Bowyer–Watson insertion.
//!
//! The hull is closed with ghost tetrahedra that share a vertex at infinity,
//! so every insertion is a cavity retriangulation. Orientation and in-sphere
//! tests use adaptive exact predicates. Any exact zero seen while growing a
//! cavity (cospherical or coplanar configurations), or a flat tetrahedron
//! about to be created, restarts the build once on jittered coordinates. The
//! jitter only decides the combinatorics; the triangulation keeps the
//! caller's coordinates.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust::Coord3D;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec3::{dist, Vec3};

const INF: u32 = u32::MAX;
const NONE: u32 = u32::MAX;

/// Relative magnitude of the degeneracy jitter (times the bounding-box diagonal).
pub const JITTER_SCALE: f64 = 1e-9;

/// A simplex of dimension 0..=3 stored with sorted vertex indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Simplex {
    dim: u8,
    verts: [u32; 4],
}

impl Simplex {
    pub fn new(vertices: &[u32]) -> Self {
        assert!((1..=4).contains(&vertices.len()), "simplex needs 1..=4 vertices");
        let mut verts = [u32::MAX; 4];
        verts[..vertices.len()].copy_from_slice(vertices);
        verts[..vertices.len()].sort_unstable();
        Simplex {
            dim: (vertices.len() - 1) as u8,
            verts,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn vertices(&self) -> &[u32] {
        &self.verts[..=self.dim as usize]
    }

    /// Codimension-one faces, the i-th omitting the i-th vertex.
    pub fn facets(&self) -> impl Iterator<Item = Simplex> + '_ {
        let d = self.dim();
        (0..if d == 0 { 0 } else { d + 1 }).map(move |skip| {
            let mut v = [0u32; 3];
            let mut k = 0;
            for (i, &x) in self.vertices().iter().enumerate() {
                if i != skip {
                    v[k] = x;
                    k += 1;
                }
            }
            Simplex::new(&v[..d])
        })
    }

    pub fn contains(&self, other: &Simplex) -> bool {
        other.vertices().iter().all(|v| self.vertices().contains(v))
    }
}

impl std::fmt::Display for Simplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.vertices().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

/// Delaunay tetrahedralization of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub points: Vec<Vec3>,
    /// Tetrahedra with ascending vertex indices, sorted lexicographically.
    pub tetrahedra: Vec<[u32; 4]>,
    /// True when a degeneracy forced the jittered rebuild.
    pub jittered: bool,
    pub perturb_seed: u64,
}

/// All simplices of a triangulation, grouped by dimension, with coface links.
#[derive(Debug, Clone)]
pub struct SimplicialComplex {
    levels: [Vec<Simplex>; 4],
    /// `cofaces[d][i]` lists indices into level d+1 of the cofaces of simplex i of level d.
    cofaces: [Vec<Vec<u32>>; 3],
}

impl SimplicialComplex {
    pub fn from_triangulation(tri: &Triangulation) -> Self {
        let n = tri.points.len();
        let tets: Vec<Simplex> = tri.tetrahedra.iter().map(|t| Simplex::new(t)).collect();
        let mut tris: Vec<Simplex> = tets.iter().flat_map(|t| t.facets().collect::<Vec<_>>()).collect();
        tris.sort_unstable();
        tris.dedup();
        let mut edges: Vec<Simplex> = tris.iter().flat_map(|t| t.facets().collect::<Vec<_>>()).collect();
        edges.sort_unstable();
        edges.dedup();
        let verts: Vec<Simplex> = (0..n as u32).map(|v| Simplex::new(&[v])).collect();
        let levels = [verts, edges, tris, tets];
        let mut cofaces: [Vec<Vec<u32>>; 3] = Default::default();
        for d in 0..3 {
            let index: HashMap<Simplex, usize> = levels[d].iter().enumerate().map(|(i, s)| (*s, i)).collect();
            let mut links = vec![Vec::new(); levels[d].len()];
            for (j, s) in levels[d + 1].iter().enumerate() {
                for f in s.facets() {
                    links[index[&f]].push(j as u32);
                }
            }
            cofaces[d] = links;
        }
        SimplicialComplex { levels, cofaces }
    }

    pub fn simplices(&self, dim: usize) -> &[Simplex] {
        &self.levels[dim]
    }

    pub fn cofaces(&self, dim: usize, index: usize) -> &[u32] {
        &self.cofaces[dim][index]
    }

    pub fn counts(&self) -> [usize; 4] {
        [
            self.levels[0].len(),
            self.levels[1].len(),
            self.levels[2].len(),
            self.levels[3].len(),
        ]
    }
}

/// Simplices of dimension `dim` with the indices of their cofaces in dimension `dim + 1`.
pub fn simplices_by_dim(tri: &Triangulation, dim: usize) -> Vec<(Simplex, Vec<u32>)> {
    let cx = SimplicialComplex::from_triangulation(tri);
    cx.simplices(dim)
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let co = if dim < 3 {
                cx.cofaces(dim, i).to_vec()
            } else {
                Vec::new()
            };
            (*s, co)
        })
        .collect()
}

/// Triangulates `points`; see the module docs for the degeneracy policy.
pub fn delaunay(points: &[Vec3], perturb_seed: u64) -> Result<Triangulation> {
    if points.len() < 4 {
        return Err(Error::invalid(format!(
            "Delaunay needs at least 4 points, got {}",
            points.len()
        )));
    }
    if points.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::invalid("non-finite coordinates"));
    }
    let (tets, jittered) = match build(points, perturb_seed) {
        Ok(t) => (t, false),
        Err(BuildError::Coplanar) => return Err(Error::DegenerateInput("all points are coplanar".into())),
        Err(BuildError::Degenerate) => {
            let jittered = jitter(points, perturb_seed);
            match build(&jittered, perturb_seed) {
                Ok(t) => (t, true),
                Err(_) => {
                    return Err(Error::DegenerateInput(
                        "degenerate configuration persists after jitter".into(),
                    ))
                }
            }
        }
    };
    Ok(Triangulation {
        points: points.to_vec(),
        tetrahedra: tets,
        jittered,
        perturb_seed,
    })
}

fn jitter(points: &[Vec3], seed: u64) -> Vec<Vec3> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for c in 0..3 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let mag = JITTER_SCALE * dist(lo, hi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    points
        .iter()
        .map(|p| {
            [
                p[0] + mag * rng.random_range(-1.0..1.0),
                p[1] + mag * rng.random_range(-1.0..1.0),
                p[2] + mag * rng.random_range(-1.0..1.0),
            ]
        })
        .collect()
}

#[derive(Debug)]
enum BuildError {
    Degenerate,
    Coplanar,
}

#[derive(Clone, Copy)]
struct Tet {
    v: [u32; 4],
    n: [u32; 4],
    alive: bool,
}

impl Tet {
    fn inf_slot(&self) -> Option<usize> {
        self.v.iter().position(|&x| x == INF)
    }
}

struct Builder<'a> {
    pts: &'a [Vec3],
    tets: Vec<Tet>,
    free: Vec<u32>,
    stamp: Vec<u32>,
    outside: Vec<u32>,
    epoch: u32,
    last: u32,
    rng: ChaCha8Rng,
}

#[inline]
fn c3(p: Vec3) -> Coord3D<f64> {
    Coord3D {
        x: p[0],
        y: p[1],
        z: p[2],
    }
}

fn collinear(a: Vec3, b: Vec3, c: Vec3) -> bool {
    let o = |i: usize, j: usize| {
        robust::orient2d(
            robust::Coord { x: a[i], y: a[j] },
            robust::Coord { x: b[i], y: b[j] },
            robust::Coord { x: c[i], y: c[j] },
        )
    };
    o(0, 1) == 0.0 && o(1, 2) == 0.0 && o(2, 0) == 0.0
}

fn build(pts: &[Vec3], seed: u64) -> std::result::Result<Vec<[u32; 4]>, BuildError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<u32> = (0..pts.len() as u32).collect();
    order.shuffle(&mut rng);

    // seed tetrahedron: first affinely independent quadruple in insertion order
    let p = |i: u32| pts[i as usize];
    let a = order[0];
    let b = *order[1..].iter().find(|&&j| p(j) != p(a)).ok_or(BuildError::Coplanar)?;
    let c = *order
        .iter()
        .find(|&&j| j != a && j != b && !collinear(p(a), p(b), p(j)))
        .ok_or(BuildError::Coplanar)?;
    let d = *order
        .iter()
        .find(|&&j| j != a && j != b && j != c && robust::orient3d(c3(p(a)), c3(p(b)), c3(p(c)), c3(p(j))) != 0.0)
        .ok_or(BuildError::Coplanar)?;
    let first = [a, b, c, d];
    order.retain(|x| !first.contains(x));

    let mut bld = Builder {
        pts,
        tets: Vec::with_capacity(pts.len() * 8),
        free: Vec::new(),
        stamp: Vec::new(),
        outside: Vec::new(),
        epoch: 0,
        last: 0,
        rng,
    };
    bld.init(first);
    for &v in &order {
        bld.insert(v)?;
    }
    let mut out: Vec<[u32; 4]> = bld
        .tets
        .iter()
        .filter(|t| t.alive && t.inf_slot().is_none())
        .map(|t| {
            let mut v = t.v;
            v.sort_unstable();
            v
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

impl<'a> Builder<'a> {
    fn pt(&self, i: u32) -> Coord3D<f64> {
        c3(self.pts[i as usize])
    }

    fn orient(&self, v: [u32; 4]) -> f64 {
        robust::orient3d(self.pt(v[0]), self.pt(v[1]), self.pt(v[2]), self.pt(v[3]))
    }

    fn init(&mut self, mut first: [u32; 4]) {
        if self.orient(first) < 0.0 {
            first.swap(0, 1);
        }
        let mut tets = vec![Tet {
            v: first,
            n: [NONE; 4],
            alive: true,
        }];
        for i in 0..4 {
            let mut v = first;
            v[i] = INF;
            v.swap((i + 1) % 4, (i + 2) % 4);
            tets.push(Tet {
                v,
                n: [NONE; 4],
                alive: true,
            });
        }
        let mut faces: HashMap<[u32; 3], (usize, usize)> = HashMap::new();
        for t in 0..tets.len() {
            for i in 0..4 {
                let key = face_key(tets[t].v, i);
                if let Some((u, j)) = faces.remove(&key) {
                    tets[t].n[i] = u as u32;
                    tets[u].n[j] = t as u32;
                } else {
                    faces.insert(key, (t, i));
                }
            }
        }
        debug_assert!(faces.is_empty());
        self.tets = tets;
        self.stamp = vec![0; self.tets.len()];
        self.outside = vec![0; self.tets.len()];
        self.last = 0;
    }

    /// Strictly positive when `p` conflicts with tetrahedron `t`; zero marks a degeneracy.
    fn conflict(&self, t: u32, p: u32) -> f64 {
        let tet = &self.tets[t as usize];
        match tet.inf_slot() {
            None => robust::insphere(
                self.pt(tet.v[0]),
                self.pt(tet.v[1]),
                self.pt(tet.v[2]),
                self.pt(tet.v[3]),
                self.pt(p),
            ),
            Some(j) => {
                let mut v = tet.v;
                v[j] = p;
                self.orient(v)
            }
        }
    }

    fn locate(&mut self, p: u32) -> u32 {
        let mut t = self.last;
        if !self.tets[t as usize].alive {
            t = self.tets.iter().position(|x| x.alive).unwrap() as u32;
        }
        if let Some(j) = self.tets[t as usize].inf_slot() {
            t = self.tets[t as usize].n[j];
        }
        'walk: loop {
            let tet = self.tets[t as usize];
            if tet.inf_slot().is_some() {
                return t;
            }
            let start = self.rng.random_range(0..4usize);
            for k in 0..4 {
                let i = (start + k) % 4;
                let mut v = tet.v;
                v[i] = p;
                if self.orient(v) < 0.0 {
                    t = tet.n[i];
                    continue 'walk;
                }
            }
            return t;
        }
    }

    fn alloc(&mut self, tet: Tet) -> u32 {
        if let Some(id) = self.free.pop() {
            self.tets[id as usize] = tet;
            id
        } else {
            self.tets.push(tet);
            self.stamp.push(0);
            self.outside.push(0);
            (self.tets.len() - 1) as u32
        }
    }

    fn insert(&mut self, p: u32) -> std::result::Result<(), BuildError> {
        let start = self.locate(p);
        if self.conflict(start, p) <= 0.0 {
            return Err(BuildError::Degenerate);
        }
        self.epoch += 1;
        let epoch = self.epoch;
        let mut cavity = vec![start];
        self.stamp[start as usize] = epoch;
        let mut boundary: Vec<(u32, usize)> = Vec::new();
        let mut head = 0;
        while head < cavity.len() {
            let t = cavity[head];
            head += 1;
            for i in 0..4 {
                let nb = self.tets[t as usize].n[i];
                if self.stamp[nb as usize] == epoch {
                    continue;
                }
                if self.outside[nb as usize] == epoch {
                    boundary.push((t, i));
                    continue;
                }
                let s = self.conflict(nb, p);
                if s == 0.0 {
                    return Err(BuildError::Degenerate);
                }
                if s > 0.0 {
                    self.stamp[nb as usize] = epoch;
                    cavity.push(nb);
                } else {
                    self.outside[nb as usize] = epoch;
                    boundary.push((t, i));
                }
            }
        }

        let mut links: HashMap<(u32, u32), (u32, usize)> = HashMap::with_capacity(boundary.len() * 2);
        let mut created = Vec::with_capacity(boundary.len());
        for &(t, i) in &boundary {
            let old = self.tets[t as usize];
            let mut v = old.v;
            v[i] = p;
            let out = old.n[i];
            if !v.contains(&INF) && self.orient(v) <= 0.0 {
                return Err(BuildError::Degenerate);
            }
            let mut n = [NONE; 4];
            n[i] = out;
            let nt = self.alloc(Tet { v, n, alive: true });
            if let Some(k) = self.tets[out as usize].n.iter().position(|&x| x == t) {
                self.tets[out as usize].n[k] = nt;
            }
            for j in 0..4 {
                if j == i {
                    continue;
                }
                let mut others = [0u32; 2];
                let mut c = 0;
                for m in 0..4 {
                    if m != i && m != j {
                        others[c] = v[m];
                        c += 1;
                    }
                }
                let key = (others[0].min(others[1]), others[0].max(others[1]));
                if let Some((u, uj)) = links.remove(&key) {
                    self.tets[nt as usize].n[j] = u;
                    self.tets[u as usize].n[uj] = nt;
                } else {
                    links.insert(key, (nt, j));
                }
            }
            created.push(nt);
        }
        if !links.is_empty() {
            return Err(BuildError::Degenerate);
        }
        for &t in &cavity {
            self.tets[t as usize].alive = false;
            self.free.push(t);
        }
        self.last = created
            .iter()
            .copied()
            .find(|&t| self.tets[t as usize].inf_slot().is_none())
            .unwrap_or(created[0]);
        Ok(())
    }
}

fn face_key(v: [u32; 4], skip: usize) -> [u32; 3] {
    let mut k = [0u32; 3];
    let mut c = 0;
    for (i, &x) in v.iter().enumerate() {
        if i != skip {
            k[c] = x;
            c += 1;
        }
    }
    k.sort_unstable();
    k
}
