use std::collections::HashMap;

use crate::delaunay::{Simplex, SimplicialComplex, Triangulation};
use crate::error::{Error, Result};
use crate::grad::{circumsphere, sliver_circumsphere, Circumsphere};
use crate::vec3::{cross, dist2, norm, sub, Vec3};

/// A simplex with its alpha value (a radius) and the simplex whose
/// circumradius realizes that value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredSimplex {
    pub simplex: Simplex,
    pub value: f64,
    pub gabriel: bool,
    /// Equal to `simplex` for Gabriel simplices; otherwise the coface the
    /// value was inherited from (followed transitively).
    pub defining: Simplex,
}

/// Alpha filtration sorted by (value, dim, vertices).
#[derive(Debug, Clone)]
pub struct Filtration {
    pub simplices: Vec<FilteredSimplex>,
    pub points: Vec<Vec3>,
}

impl Filtration {
    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Boundary columns as ascending filtration indices.
    pub fn boundary_columns(&self) -> Vec<Vec<u32>> {
        let index: HashMap<Simplex, u32> = self
            .simplices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.simplex, i as u32))
            .collect();
        self.simplices
            .iter()
            .map(|s| {
                let mut col: Vec<u32> = s.simplex.facets().map(|f| index[&f]).collect();
                col.sort_unstable();
                col
            })
            .collect()
    }

    pub fn gabriel_flags(&self) -> Vec<bool> {
        self.simplices.iter().map(|s| s.gabriel).collect()
    }
}

fn vertex_coords(points: &[Vec3], s: &Simplex) -> Vec<Vec3> {
    s.vertices().iter().map(|&v| points[v as usize]).collect()
}

/// Smallest circumball of `s` and the simplex that realizes it.
///
/// A flat tetrahedron only enters a Delaunay complex when its four vertices
/// are (numerically) cocircular; its ball is the one of its best-conditioned
/// facet, which also passes through the fourth vertex. A flat tetrahedron
/// that is not cocircular keeps its own (huge) circumball.
fn simplex_ball(points: &[Vec3], s: &Simplex) -> Result<(Circumsphere, Simplex)> {
    match circumsphere(&vertex_coords(points, s)) {
        Ok(cs) => Ok((cs, *s)),
        Err(_) if s.dim() == 3 => {
            let facet = s
                .facets()
                .max_by(|a, b| facet_area(points, a).total_cmp(&facet_area(points, b)))
                .expect("tetrahedron has facets");
            let cs = circumsphere(&vertex_coords(points, &facet)).map_err(|_| degenerate(s))?;
            let apex = s
                .vertices()
                .iter()
                .find(|v| !facet.vertices().contains(v))
                .expect("facet omits one vertex");
            let off = (dist2(points[*apex as usize], cs.center).sqrt() - cs.radius).abs();
            if off > 1e-6 * cs.radius {
                // a hull sliver: flat at working precision, not cocircular
                let cs = sliver_circumsphere(&vertex_coords(points, s)).map_err(|_| degenerate(s))?;
                return Ok((cs, *s));
            }
            Ok((cs, facet))
        }
        Err(_) => Err(degenerate(s)),
    }
}

fn facet_area(points: &[Vec3], f: &Simplex) -> f64 {
    let v = f.vertices();
    let a = points[v[0] as usize];
    let e1 = sub(points[v[1] as usize], a);
    let e2 = sub(points[v[2] as usize], a);
    norm(cross(e1, e2))
}

/// Assigns alpha values by a downward pass over the Delaunay complex: a
/// simplex whose smallest circumball holds none of its cofaces' opposite
/// vertices gets its circumradius, any other simplex inherits the smallest
/// value among its cofaces (ties to the lexicographically lowest coface).
pub fn alpha_filtration(tri: &Triangulation) -> Result<Filtration> {
    let cx = SimplicialComplex::from_triangulation(tri);
    let pts = &tri.points;
    let mut values: [Vec<f64>; 4] = Default::default();
    let mut gabriel: [Vec<bool>; 4] = Default::default();
    let mut defining: [Vec<Simplex>; 4] = Default::default();

    for t in cx.simplices(3) {
        let (cs, def) = simplex_ball(pts, t)?;
        values[3].push(cs.radius);
        gabriel[3].push(true);
        defining[3].push(def);
    }
    for d in (1..3).rev() {
        let level = cx.simplices(d);
        let mut vals = Vec::with_capacity(level.len());
        let mut gabs = Vec::with_capacity(level.len());
        let mut defs = Vec::with_capacity(level.len());
        for (i, s) in level.iter().enumerate() {
            let (cs, _) = simplex_ball(pts, s)?;
            let cof = cx.cofaces(d, i);
            let attached = cof.iter().any(|&j| {
                let c = cx.simplices(d + 1)[j as usize];
                c.vertices()
                    .iter()
                    .filter(|v| !s.vertices().contains(v))
                    .any(|&v| dist2(pts[v as usize], cs.center) < cs.radius2 * (1.0 - 1e-12))
            });
            if attached {
                // cofaces are indexed in lexicographic order, so the first minimum wins ties
                let mut best = cof[0] as usize;
                for &j in &cof[1..] {
                    if values[d + 1][j as usize] < values[d + 1][best] {
                        best = j as usize;
                    }
                }
                vals.push(values[d + 1][best]);
                gabs.push(false);
                defs.push(defining[d + 1][best]);
            } else {
                vals.push(cs.radius);
                gabs.push(true);
                defs.push(*s);
            }
        }
        values[d] = vals;
        gabriel[d] = gabs;
        defining[d] = defs;
    }

    let mut simplices = Vec::with_capacity(cx.counts().iter().sum());
    for v in cx.simplices(0) {
        simplices.push(FilteredSimplex {
            simplex: *v,
            value: 0.0,
            gabriel: true,
            defining: *v,
        });
    }
    for d in 1..4 {
        for (i, s) in cx.simplices(d).iter().enumerate() {
            simplices.push(FilteredSimplex {
                simplex: *s,
                value: values[d][i],
                gabriel: gabriel[d][i],
                defining: defining[d][i],
            });
        }
    }
    simplices.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.simplex.dim().cmp(&b.simplex.dim()))
            .then(a.simplex.vertices().cmp(b.simplex.vertices()))
    });
    Ok(Filtration {
        simplices,
        points: pts.clone(),
    })
}

fn degenerate(s: &Simplex) -> Error {
    Error::DegenerateInput(format!("degenerate Delaunay simplex {s}"))
}
