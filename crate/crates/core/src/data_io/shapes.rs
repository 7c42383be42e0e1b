use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;
use crate::vec3::{norm, scale, Vec3};

pub const MIN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sphere,
    Torus,
    DoubleTorus,
    Cylinder,
    Box,
    TwoSpheres,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Sphere,
        Family::Torus,
        Family::DoubleTorus,
        Family::Cylinder,
        Family::Box,
        Family::TwoSpheres,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Sphere => "sphere",
            Family::Torus => "torus",
            Family::DoubleTorus => "double_torus",
            Family::Cylinder => "cylinder",
            Family::Box => "box",
            Family::TwoSpheres => "two_spheres",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown shape family `{s}`")))
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Surface geometry. The cylinder is open (no caps); the double torus is
/// the boundary of the union of two overlapping solid tori along x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Sphere { radius: f64 },
    Torus { major: f64, minor: f64 },
    DoubleTorus { major: f64, minor: f64, offset: f64 },
    Cylinder { radius: f64, height: f64 },
    Box { extents: [f64; 3] },
    TwoSpheres { radius: f64, separation: f64 },
}

impl Shape {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Sphere => Shape::Sphere { radius: 1.0 },
            Family::Torus => Shape::Torus {
                major: 1.0,
                minor: 0.35,
            },
            Family::DoubleTorus => Shape::DoubleTorus {
                major: 0.7,
                minor: 0.25,
                offset: 0.8,
            },
            Family::Cylinder => Shape::Cylinder {
                radius: 0.5,
                height: 1.6,
            },
            Family::Box => Shape::Box {
                extents: [1.0, 0.7, 0.5],
            },
            Family::TwoSpheres => Shape::TwoSpheres {
                radius: 0.5,
                separation: 1.6,
            },
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Shape::Sphere { .. } => Family::Sphere,
            Shape::Torus { .. } => Family::Torus,
            Shape::DoubleTorus { .. } => Family::DoubleTorus,
            Shape::Cylinder { .. } => Family::Cylinder,
            Shape::Box { .. } => Family::Box,
            Shape::TwoSpheres { .. } => Family::TwoSpheres,
        }
    }

    /// Every size parameter multiplied by `factors` (cycled), e.g. for
    /// per-sample variation inside a class.
    pub fn scaled(&self, f: [f64; 3]) -> Self {
        match *self {
            Shape::Sphere { radius } => Shape::Sphere { radius: radius * f[0] },
            Shape::Torus { major, minor } => Shape::Torus {
                major: major * f[0],
                minor: minor * f[1],
            },
            Shape::DoubleTorus { major, minor, offset } => Shape::DoubleTorus {
                major: major * f[0],
                minor: minor * f[1],
                offset: offset * f[2],
            },
            Shape::Cylinder { radius, height } => Shape::Cylinder {
                radius: radius * f[0],
                height: height * f[1],
            },
            Shape::Box { extents } => Shape::Box {
                extents: [extents[0] * f[0], extents[1] * f[1], extents[2] * f[2]],
            },
            Shape::TwoSpheres { radius, separation } => Shape::TwoSpheres {
                radius: radius * f[0],
                separation: separation * f[1],
            },
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            Shape::Sphere { radius } => vec![radius],
            Shape::Torus { major, minor } => vec![major, minor],
            Shape::DoubleTorus { major, minor, offset } => vec![major, minor, offset],
            Shape::Cylinder { radius, height } => vec![radius, height],
            Shape::Box { extents } => extents.to_vec(),
            Shape::TwoSpheres { radius, separation } => vec![radius, separation],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.params().iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::invalid(format!("{} parameters must be positive", self.family())));
        }
        match *self {
            Shape::Torus { major, minor } | Shape::DoubleTorus { major, minor, .. } if minor >= major => Err(
                Error::invalid(format!("{} minor radius must be below the major radius", self.family())),
            ),
            Shape::TwoSpheres { radius, separation } if separation <= 2.0 * radius => {
                Err(Error::invalid("two_spheres separation must exceed twice the radius"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub shape: Shape,
    pub n_points: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl ShapeSpec {
    pub fn new(family: Family, n_points: usize, seed: u64) -> Self {
        Self {
            shape: Shape::default_for(family),
            n_points,
            noise_sigma: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if self.n_points < MIN_POINTS {
            return Err(Error::invalid(format!("n_points must be >= {MIN_POINTS}")));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma must be >= 0"));
        }
        Ok(())
    }
}

fn unit_sphere(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v: Vec3 = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let n = norm(v);
        if n > 1e-12 {
            return scale(v, 1.0 / n);
        }
    }
}

/// Area-uniform torus sample around the z axis, by rejection on the
/// (R + r cos v) area element.
fn torus_point(rng: &mut ChaCha8Rng, major: f64, minor: f64) -> Vec3 {
    loop {
        let u = rng.random_range(0.0..std::f64::consts::TAU);
        let v = rng.random_range(0.0..std::f64::consts::TAU);
        let w = rng.random_range(0.0..1.0);
        if w * (major + minor) <= major + minor * v.cos() {
            let rr = major + minor * v.cos();
            return [rr * u.cos(), rr * u.sin(), minor * v.sin()];
        }
    }
}

fn inside_solid_torus(p: Vec3, cx: f64, major: f64, minor: f64) -> bool {
    let x = p[0] - cx;
    let q = (x * x + p[1] * p[1]).sqrt() - major;
    q * q + p[2] * p[2] < minor * minor
}

fn box_point(rng: &mut ChaCha8Rng, e: [f64; 3]) -> Vec3 {
    let areas = [e[1] * e[2], e[0] * e[2], e[0] * e[1]];
    let total: f64 = areas.iter().sum();
    let mut pick = rng.random_range(0.0..total);
    let mut axis = 2;
    for (i, a) in areas.iter().enumerate() {
        if pick < *a {
            axis = i;
            break;
        }
        pick -= a;
    }
    let mut p = [0.0; 3];
    for (c, slot) in p.iter_mut().enumerate() {
        *slot = if c == axis {
            if rng.random_bool(0.5) {
                e[c]
            } else {
                -e[c]
            }
        } else {
            rng.random_range(-e[c]..e[c])
        };
    }
    p
}

fn sample_point(shape: &Shape, rng: &mut ChaCha8Rng) -> Vec3 {
    match *shape {
        Shape::Sphere { radius } => scale(unit_sphere(rng), radius),
        Shape::Torus { major, minor } => torus_point(rng, major, minor),
        Shape::DoubleTorus { major, minor, offset } => loop {
            let left = rng.random_bool(0.5);
            let (cx, other) = if left { (-offset, offset) } else { (offset, -offset) };
            let mut p = torus_point(rng, major, minor);
            p[0] += cx;
            if !inside_solid_torus(p, other, major, minor) {
                return p;
            }
        },
        Shape::Cylinder { radius, height } => {
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let z = rng.random_range(-0.5 * height..0.5 * height);
            [radius * t.cos(), radius * t.sin(), z]
        }
        Shape::Box { extents } => box_point(rng, extents),
        Shape::TwoSpheres { radius, separation } => {
            let mut p = scale(unit_sphere(rng), radius);
            p[0] += if rng.random_bool(0.5) { -0.5 } else { 0.5 } * separation;
            p
        }
    }
}

/// Scales a cloud so its largest point norm is 1 (no translation).
pub fn scale_to_unit(points: &mut [Vec3]) {
    let m = points.iter().map(|p| norm(*p)).fold(0.0, f64::max);
    if m > 0.0 {
        points.iter_mut().for_each(|p| *p = scale(*p, 1.0 / m));
    }
}

/// Moves the bounding-box center to the origin and scales to max norm 1.
pub fn normalize_unit_sphere(points: &mut [Vec3]) {
    if points.is_empty() {
        return;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points.iter() {
        for c in 0..3 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])];
    points.iter_mut().for_each(|p| *p = crate::vec3::sub(*p, center));
    scale_to_unit(points);
}

/// Area-uniform surface sample with Gaussian noise, centered at the origin
/// by construction and scaled to max norm 1.
pub fn generate_shape(spec: &ShapeSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut pts: Vec<Vec3> = (0..spec.n_points)
        .map(|_| {
            let mut p = sample_point(&spec.shape, &mut rng);
            if spec.noise_sigma > 0.0 {
                for c in &mut p {
                    *c += noise.sample(&mut rng);
                }
            }
            p
        })
        .collect();
    scale_to_unit(&mut pts);
    Ok(PointCloud::new(pts))
}
