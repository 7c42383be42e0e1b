//! Text checkpoint format:
//!
//! ```text
//! topo-adv-classifier v1
//! variant <pointwise|edge>
//! classes <C>
//! k <neighbors>
//! seed <u64>
//! params <count>
//! <one parameter per line, shortest round-trip decimal>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{PointClassifier, Variant};
use crate::error::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "topo-adv-classifier v1";

pub fn write_checkpoint(model: &PointClassifier) -> String {
    let mut s = String::with_capacity(24 * model.params.len() + 128);
    let _ = writeln!(s, "{CHECKPOINT_HEADER}");
    let _ = writeln!(s, "variant {}", model.variant);
    let _ = writeln!(s, "classes {}", model.classes);
    let _ = writeln!(s, "k {}", model.k);
    let _ = writeln!(s, "seed {}", model.seed);
    let _ = writeln!(s, "params {}", model.params.len());
    for p in &model.params {
        let _ = writeln!(s, "{p:?}");
    }
    s
}

fn field<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| Error::parse(0, format!("missing `{key}` line")))?;
    let value = line
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| Error::parse(no, format!("expected `{key} <value>`")))?;
    Ok((no, value.trim()))
}

fn number<T: std::str::FromStr>(no: usize, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::parse(no, format!("invalid number `{v}`")))
}

pub fn read_checkpoint(text: &str) -> Result<PointClassifier> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim() == CHECKPOINT_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header `{CHECKPOINT_HEADER}`"))),
    }
    let (no, v) = field(&mut lines, "variant")?;
    let variant: Variant = v.parse().map_err(|e: Error| Error::parse(no, e.to_string()))?;
    let (no, v) = field(&mut lines, "classes")?;
    let classes: usize = number(no, v)?;
    let (no, v) = field(&mut lines, "k")?;
    let k: usize = number(no, v)?;
    let (no, v) = field(&mut lines, "seed")?;
    let seed: u64 = number(no, v)?;
    let (no, v) = field(&mut lines, "params")?;
    let count: usize = number(no, v)?;

    let mut model = PointClassifier::new(variant, classes, seed).map_err(|e| Error::parse(no, e.to_string()))?;
    model.k = k;
    if count != model.param_count() {
        return Err(Error::parse(
            no,
            format!("{count} parameters, architecture needs {}", model.param_count()),
        ));
    }
    for (i, slot) in model.params.iter_mut().enumerate() {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(no + i + 1, "truncated parameter list"))?;
        let x: f64 = number(no, line.trim())?;
        if !x.is_finite() {
            return Err(Error::parse(no, "non-finite parameter"));
        }
        *slot = x;
    }
    if let Some((no, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(no, format!("unexpected trailing content `{extra}`")));
    }
    Ok(model)
}

pub fn save_checkpoint(model: &PointClassifier, path: &Path) -> Result<()> {
    std::fs::write(path, write_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<PointClassifier> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_bit_exactly() {
        let mut m = PointClassifier::new(Variant::Edge, 5, 11).unwrap();
        m.params[0] = 1e-300;
        m.params[1] = -123456.789e10;
        let back = read_checkpoint(&write_checkpoint(&m)).unwrap();
        assert_eq!(back, m);
        assert_eq!(write_checkpoint(&back), write_checkpoint(&m));
    }

    #[test]
    fn rejects_truncation() {
        let m = PointClassifier::new(Variant::Pointwise, 2, 1).unwrap();
        let text = write_checkpoint(&m);
        let cut: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_checkpoint(&cut), Err(Error::Parse { .. })));
        assert!(read_checkpoint("nope\n").is_err());
    }
}
