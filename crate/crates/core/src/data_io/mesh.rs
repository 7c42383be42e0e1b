//! ASCII OFF and PLY readers plus area-weighted surface sampling.
//!
//! Tokenization: lines are split on ASCII whitespace; `#` starts a comment in
//! OFF files; blank lines are skipped. Polygons with more than three vertices
//! are fan-triangulated from their first vertex.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;
use crate::vec3::{cross, norm, sub, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    PlyAscii,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
        {
            Some(e) if e == "off" => Ok(MeshFormat::Off),
            Some(e) if e == "ply" => Ok(MeshFormat::PlyAscii),
            _ => Err(Error::invalid(format!(
                "cannot infer mesh format of {}",
                path.display()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    comments: bool,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, comments: bool) -> Self {
        Self {
            inner: text.lines().enumerate(),
            comments,
            last: 0,
        }
    }

    /// Next non-empty line as (line number, tokens).
    fn next_tokens(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let line = if self.comments {
                line.split('#').next().unwrap_or("")
            } else {
                line
            };
            let toks: Vec<&str> = line.split_ascii_whitespace().collect();
            if !toks.is_empty() {
                return Ok((i + 1, toks));
            }
        }
        Err(Error::parse(
            self.last + 1,
            format!("unexpected end of file, expected {what}"),
        ))
    }
}

fn num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid number `{tok}`")))
}

fn coord(line: usize, tok: &str) -> Result<f64> {
    let x: f64 = num(line, tok)?;
    if !x.is_finite() {
        return Err(Error::parse(line, format!("non-finite coordinate `{tok}`")));
    }
    Ok(x)
}

fn push_polygon(faces: &mut Vec<[usize; 3]>, idx: &[usize], nv: usize, line: usize) -> Result<()> {
    if idx.len() < 3 {
        return Err(Error::parse(line, "face with fewer than 3 vertices"));
    }
    if let Some(bad) = idx.iter().find(|&&i| i >= nv) {
        return Err(Error::parse(
            line,
            format!("face index {bad} out of range ({nv} vertices)"),
        ));
    }
    for w in 1..idx.len() - 1 {
        faces.push([idx[0], idx[w], idx[w + 1]]);
    }
    Ok(())
}

pub fn parse_off(text: &str) -> Result<Mesh> {
    let mut lines = Lines::new(text, true);
    let (no, toks) = lines.next_tokens("OFF header")?;
    let counts: Vec<&str> = match toks[0] {
        "OFF" => toks[1..].to_vec(),
        t if t.starts_with("OFF") => std::iter::once(&t[3..]).chain(toks[1..].iter().copied()).collect(),
        _ => return Err(Error::parse(no, "missing OFF header")),
    };
    let (no, counts) = if counts.is_empty() {
        lines.next_tokens("vertex/face counts")?
    } else {
        (no, counts)
    };
    if counts.len() < 2 {
        return Err(Error::parse(no, "expected `<vertices> <faces> [edges]`"));
    }
    let nv: usize = num(no, counts[0])?;
    let nf: usize = num(no, counts[1])?;
    let mut mesh = Mesh::default();
    for _ in 0..nv {
        let (no, t) = lines.next_tokens("vertex")?;
        if t.len() < 3 {
            return Err(Error::parse(no, "vertex needs 3 coordinates"));
        }
        mesh.vertices
            .push([coord(no, t[0])?, coord(no, t[1])?, coord(no, t[2])?]);
    }
    for _ in 0..nf {
        let (no, t) = lines.next_tokens("face")?;
        let k: usize = num(no, t[0])?;
        if t.len() < k + 1 {
            return Err(Error::parse(
                no,
                format!("face declares {k} vertices but lists {}", t.len() - 1),
            ));
        }
        let idx = t[1..=k].iter().map(|s| num(no, s)).collect::<Result<Vec<usize>>>()?;
        push_polygon(&mut mesh.faces, &idx, nv, no)?;
    }
    Ok(mesh)
}

struct PlyElement {
    name: String,
    count: usize,
    props: Vec<(String, bool)>,
}

/// ASCII PLY with a `vertex` element (x, y, z among its scalar properties)
/// and an optional `face` element with one list property.
pub fn parse_ply(text: &str) -> Result<Mesh> {
    let mut lines = Lines::new(text, false);
    let (no, t) = lines.next_tokens("ply magic")?;
    if t != ["ply"] {
        return Err(Error::parse(no, "missing `ply` magic line"));
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut saw_format = false;
    loop {
        let (no, t) = lines.next_tokens("header line")?;
        match t[0] {
            "format" => {
                if t.get(1) != Some(&"ascii") {
                    return Err(Error::parse(no, "only `format ascii 1.0` is supported"));
                }
                saw_format = true;
            }
            "comment" | "obj_info" => {}
            "element" => {
                if t.len() != 3 {
                    return Err(Error::parse(no, "expected `element <name> <count>`"));
                }
                elements.push(PlyElement {
                    name: t[1].to_string(),
                    count: num(no, t[2])?,
                    props: Vec::new(),
                });
            }
            "property" => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(no, "property before any element"))?;
                let is_list = t.get(1) == Some(&"list");
                let name = if is_list { t.get(4) } else { t.get(2) };
                let name = name.ok_or_else(|| Error::parse(no, "malformed property line"))?;
                el.props.push((name.to_string(), is_list));
            }
            "end_header" => break,
            other => return Err(Error::parse(no, format!("unknown header keyword `{other}`"))),
        }
    }
    if !saw_format {
        return Err(Error::parse(lines.last, "missing format line"));
    }
    let mut mesh = Mesh::default();
    let mut nv = None;
    for el in &elements {
        match el.name.as_str() {
            "vertex" => {
                let pos = |n: &str| {
                    el.props
                        .iter()
                        .position(|(p, list)| p == n && !list)
                        .ok_or_else(|| Error::parse(lines.last, format!("vertex element lacks property `{n}`")))
                };
                let (ix, iy, iz) = (pos("x")?, pos("y")?, pos("z")?);
                if el.props.iter().any(|(_, l)| *l) {
                    return Err(Error::parse(
                        lines.last,
                        "list properties on vertices are not supported",
                    ));
                }
                for _ in 0..el.count {
                    let (no, t) = lines.next_tokens("vertex")?;
                    if t.len() != el.props.len() {
                        return Err(Error::parse(
                            no,
                            format!("expected {} values, found {}", el.props.len(), t.len()),
                        ));
                    }
                    mesh.vertices
                        .push([coord(no, t[ix])?, coord(no, t[iy])?, coord(no, t[iz])?]);
                }
                nv = Some(el.count);
            }
            "face" => {
                let nv = nv.ok_or_else(|| Error::parse(lines.last, "face element before vertex element"))?;
                if el.props.len() != 1 || !el.props[0].1 {
                    return Err(Error::parse(
                        lines.last,
                        "face element must have exactly one list property",
                    ));
                }
                for _ in 0..el.count {
                    let (no, t) = lines.next_tokens("face")?;
                    let k: usize = num(no, t[0])?;
                    if t.len() != k + 1 {
                        return Err(Error::parse(
                            no,
                            format!("face declares {k} vertices but lists {}", t.len() - 1),
                        ));
                    }
                    let idx = t[1..].iter().map(|s| num(no, s)).collect::<Result<Vec<usize>>>()?;
                    push_polygon(&mut mesh.faces, &idx, nv, no)?;
                }
            }
            _ => {
                for _ in 0..el.count {
                    lines.next_tokens(&el.name)?;
                }
            }
        }
    }
    if nv.is_none() {
        return Err(Error::parse(lines.last, "no vertex element"));
    }
    Ok(mesh)
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        MeshFormat::Off => parse_off(&text),
        MeshFormat::PlyAscii => parse_ply(&text),
    }
}

/// Area-weighted triangle choice and uniform barycentric draws. The result is
/// in mesh coordinates; see `normalize_unit_sphere`.
pub fn sample_surface(mesh: &Mesh, n: usize, seed: u64) -> Result<PointCloud> {
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in &mesh.faces {
        let [a, b, c] = f.map(|i| mesh.vertices[i]);
        total += 0.5 * norm(cross(sub(b, a), sub(c, a)));
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::invalid("mesh has zero surface area"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..n)
        .map(|_| {
            let t = rng.random_range(0.0..total);
            let fi = cumulative.partition_point(|&c| c <= t).min(mesh.faces.len() - 1);
            let [a, b, c] = mesh.faces[fi].map(|i| mesh.vertices[i]);
            let r1: f64 = rng.random_range(0.0..1.0);
            let r2: f64 = rng.random_range(0.0..1.0);
            let s = r1.sqrt();
            let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
            [0, 1, 2].map(|k| wa * a[k] + wb * b[k] + wc * c[k])
        })
        .collect();
    Ok(PointCloud::new(pts))
}
