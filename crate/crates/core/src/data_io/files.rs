//! XYZ clouds, diagram dumps and JSONL dataset manifests.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;
use crate::pointcloud::PointCloud;
use crate::vec3::Vec3;

/// One `x y z` line per point, 9 significant digits.
pub fn format_xyz(points: &[Vec3]) -> String {
    let mut s = String::with_capacity(points.len() * 48);
    for p in points {
        let _ = writeln!(s, "{:.8e} {:.8e} {:.8e}", p[0], p[1], p[2]);
    }
    s
}

pub fn parse_xyz(text: &str) -> Result<Vec<Vec3>> {
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_ascii_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 3 {
            return Err(Error::parse(
                i + 1,
                format!("expected 3 coordinates, found {}", toks.len()),
            ));
        }
        let mut p = [0.0; 3];
        for (slot, tok) in p.iter_mut().zip(&toks) {
            let x: f64 = tok
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("invalid number `{tok}`")))?;
            if !x.is_finite() {
                return Err(Error::parse(i + 1, format!("non-finite coordinate `{tok}`")));
            }
            *slot = x;
        }
        pts.push(p);
    }
    Ok(pts)
}

pub fn save_cloud(path: &Path, points: &[Vec3]) -> Result<()> {
    std::fs::write(path, format_xyz(points)).map_err(|e| Error::io(path, e))
}

pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(PointCloud::new(parse_xyz(&text)?))
}

/// `dim birth death` per pair at 9 significant digits, `inf` for essential
/// classes.
pub fn format_diagram(dgm: &PersistenceDiagram) -> String {
    let mut s = String::from("# dim birth death\n");
    for p in &dgm.pairs {
        if p.is_finite() {
            let _ = writeln!(s, "{} {:.8e} {:.8e}", p.dim, p.birth, p.death);
        } else {
            let _ = writeln!(s, "{} {:.8e} inf", p.dim, p.birth);
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Relative to the manifest's directory unless absolute.
    pub path: PathBuf,
    pub label: usize,
    pub split: Split,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ManifestLine {
    Header {
        classes: Vec<String>,
        config: serde_json::Value,
    },
    Sample(ManifestEntry),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub classes: Vec<String>,
    pub config: serde_json::Value,
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths resolve against.
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::invalid(format!("duplicate sample id `{}`", e.id)));
            }
            if e.label >= self.classes.len() {
                return Err(Error::invalid(format!(
                    "sample `{}` has label {} but only {} classes",
                    e.id,
                    e.label,
                    self.classes.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut s = String::new();
        let header = ManifestLine::Header {
            classes: self.classes.clone(),
            config: self.config.clone(),
        };
        let enc = |l: &ManifestLine| serde_json::to_string(l).map_err(|e| Error::invalid(e.to_string()));
        s.push_str(&enc(&header)?);
        s.push('\n');
        for e in &self.entries {
            s.push_str(&enc(&ManifestLine::Sample(e.clone()))?);
            s.push('\n');
        }
        Ok(s)
    }

    pub fn parse(text: &str, root: &Path) -> Result<Self> {
        let mut header = None;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ManifestLine = serde_json::from_str(line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            match parsed {
                ManifestLine::Header { classes, config } => {
                    if header.is_some() {
                        return Err(Error::parse(i + 1, "second header line"));
                    }
                    header = Some((classes, config));
                }
                ManifestLine::Sample(e) => entries.push(e),
            }
        }
        let (classes, config) = header.ok_or_else(|| Error::parse(1, "manifest has no header line"))?;
        let m = Self {
            classes,
            config,
            entries,
            root: root.to_path_buf(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &root)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl()?).map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.root.join(&entry.path)
        }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Loads every cloud of a split with its label and id attached.
    pub fn load_split(&self, split: Split) -> Result<Vec<PointCloud>> {
        self.split(split)
            .map(|e| Ok(load_cloud(&self.resolve(e))?.with_label(e.label).with_id(e.id.clone())))
            .collect()
    }
}
