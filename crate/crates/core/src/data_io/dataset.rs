use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::files::{save_cloud, DatasetManifest, ManifestEntry, Split};
use super::shapes::{generate_shape, Family, Shape, ShapeSpec};
use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;

/// Synthetic classification set: one class per family, each sample with its
/// size parameters scaled by independent factors in [1 − variation, 1 + variation].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub families: Vec<Family>,
    pub n_points: usize,
    pub noise_sigma: f64,
    pub variation: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            families: Family::ALL.to_vec(),
            n_points: 256,
            noise_sigma: 0.005,
            variation: 0.1,
            train_per_class: 20,
            test_per_class: 10,
            seed: 0,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::invalid("dataset families must not be empty"));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(f) = self.families.iter().find(|f| !seen.insert(**f)) {
            return Err(Error::invalid(format!("dataset families lists `{f}` twice")));
        }
        if !(0.0..0.5).contains(&self.variation) {
            return Err(Error::invalid("dataset variation must be in [0, 0.5)"));
        }
        ShapeSpec {
            shape: Shape::default_for(self.families[0]),
            n_points: self.n_points,
            noise_sigma: self.noise_sigma,
            seed: 0,
        }
        .validate()
    }
}

/// Generated sample with its manifest metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub entry: ManifestEntry,
    pub cloud: PointCloud,
}

/// Generates every sample in manifest order: classes in `families` order,
/// train before test, index ascending.
pub fn generate_dataset(cfg: &DatasetConfig) -> Result<Vec<Sample>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for (label, &family) in cfg.families.iter().enumerate() {
        for (split, count) in [(Split::Train, cfg.train_per_class), (Split::Test, cfg.test_per_class)] {
            for i in 0..count {
                let f = [0; 3].map(|_| 1.0 + rng.random_range(-cfg.variation..=cfg.variation));
                let spec = ShapeSpec {
                    shape: Shape::default_for(family).scaled(f),
                    n_points: cfg.n_points,
                    noise_sigma: cfg.noise_sigma,
                    seed: rng.random(),
                };
                let split_name = match split {
                    Split::Train => "train",
                    Split::Test => "test",
                };
                let id = format!("{split_name}_{family}_{i:03}");
                let cloud = generate_shape(&spec)?.with_label(label).with_id(id.clone());
                out.push(Sample {
                    entry: ManifestEntry {
                        path: format!("{id}.xyz").into(),
                        id,
                        label,
                        split,
                    },
                    cloud,
                });
            }
        }
    }
    Ok(out)
}

/// Writes the clouds and `manifest.jsonl` into `dir`.
pub fn write_dataset(dir: &Path, cfg: &DatasetConfig, config_echo: serde_json::Value) -> Result<DatasetManifest> {
    let samples = generate_dataset(cfg)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for s in &samples {
        save_cloud(&dir.join(&s.entry.path), &s.cloud.points)?;
    }
    let manifest = DatasetManifest {
        classes: cfg.families.iter().map(|f| f.to_string()).collect(),
        config: config_echo,
        entries: samples.into_iter().map(|s| s.entry).collect(),
        root: dir.to_path_buf(),
    };
    manifest.save(&dir.join("manifest.jsonl"))?;
    Ok(manifest)
}
