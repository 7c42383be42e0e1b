use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use topo_adv::attack::{run_attack, AttackConfig, AttackResult, Trajectory};
use topo_adv::classifier::{load_checkpoint, save_checkpoint, train as train_model, PointClassifier};
use topo_adv::data_io::{format_diagram, load_cloud, save_cloud, write_dataset, DatasetManifest, ManifestEntry};
use topo_adv::geo_loss::CleanStats;
use topo_adv::metrics::{diagram_plot_data, evaluate_sample, loss_plot_data, transfer_eval, EvalReport};
use topo_adv::persistence::diagram_of;
use topo_adv::topo_loss::EmbeddingNet;
use topo_adv::{Error, PointCloud};

use crate::config::{write_file, RunConfig, ECHO_FILE};
use crate::error::CliError;
use crate::gradcheck;

pub struct Log {
    pub quiet: bool,
}

impl Log {
    pub fn line(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn json_line(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string(v).expect("record serializes");
    s.push('\n');
    s
}

pub fn gen_data(cfg: &RunConfig, out: &Path, log: &Log) -> Result<(), CliError> {
    let manifest = write_dataset(out, &cfg.dataset, cfg.to_json())?;
    cfg.write_echo(&out.join(ECHO_FILE))?;
    log.line(format!(
        "wrote {} clouds in {} classes to {}",
        manifest.entries.len(),
        manifest.classes.len(),
        out.display()
    ));
    Ok(())
}

fn accuracy(model: &PointClassifier, clouds: &[PointCloud]) -> f64 {
    let ok = clouds
        .par_iter()
        .map(|c| (model.predict(&c.points) == c.label.expect("manifest clouds are labelled")) as usize)
        .sum::<usize>();
    ok as f64 / clouds.len().max(1) as f64
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum TrainLine<'a> {
    Epoch(&'a topo_adv::classifier::EpochLog),
    Summary {
        variant: String,
        classes: usize,
        train_samples: usize,
        heldout_samples: usize,
        train_accuracy: f64,
        heldout_accuracy: f64,
        config: serde_json::Value,
    },
}

/// Writes the checkpoint to `out`, the log to `<out>.log.jsonl` and the
/// config echo to `<out>.config.toml`.
pub fn train(cfg: &RunConfig, data: &Path, out: &Path, log: &Log) -> Result<(), CliError> {
    let manifest = DatasetManifest::load(data)?;
    let train_set = manifest.load_split(topo_adv::data_io::Split::Train)?;
    let heldout = manifest.load_split(topo_adv::data_io::Split::Test)?;
    let classes = manifest.classes.len();
    log.line(format!(
        "training {} on {} samples, {} classes",
        cfg.train.variant,
        train_set.len(),
        classes
    ));
    let (model, train_log) = train_model(&train_set, classes, &cfg.train)?;
    let train_accuracy = accuracy(&model, &train_set);
    let heldout_accuracy = accuracy(&model, &heldout);
    log.line(format!(
        "final loss {:.5} train accuracy {:.4} held-out accuracy {:.4}",
        train_log.final_loss(),
        train_accuracy,
        heldout_accuracy
    ));
    save_checkpoint(&model, out)?;
    let mut text = String::new();
    for e in &train_log.epochs {
        text.push_str(&json_line(&TrainLine::Epoch(e)));
    }
    text.push_str(&json_line(&TrainLine::Summary {
        variant: cfg.train.variant.to_string(),
        classes,
        train_samples: train_set.len(),
        heldout_samples: heldout.len(),
        train_accuracy,
        heldout_accuracy,
        config: cfg.to_json(),
    }));
    write_file(&sidecar(out, "log.jsonl"), text.as_bytes())?;
    cfg.write_echo(&sidecar(out, "config.toml"))
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cohort<'a>(cfg: &RunConfig, manifest: &'a DatasetManifest) -> Vec<&'a ManifestEntry> {
    let mut v: Vec<&ManifestEntry> = manifest.split(cfg.run.split).collect();
    if let Some(l) = cfg.run.limit {
        v.truncate(l);
    }
    v
}

/// Per-sample line of `records.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackRecord {
    pub id: String,
    pub label: usize,
    pub clean_prediction: usize,
    pub predicted: usize,
    pub success: bool,
    pub trivial: bool,
    pub restart_index: usize,
    pub iterations_used: usize,
    pub ph_evaluations: usize,
    pub final_cls: Option<f64>,
    pub final_ph: Option<f64>,
    pub final_geom: Option<f64>,
    pub final_total: Option<f64>,
    pub max_norm: f64,
    pub max_normal_component: f64,
    pub cloud: PathBuf,
    pub trace: PathBuf,
    pub clean_diagram: Option<PathBuf>,
    pub adv_diagram: Option<PathBuf>,
}

fn record_of(id: &str, r: &AttackResult, stats: &CleanStats) -> AttackRecord {
    let last = r.trajectories.get(r.restart_index).and_then(|t| t.records.last());
    let (max_norm, max_normal_component) =
        r.delta
            .iter()
            .zip(&stats.normals)
            .fold((0.0f64, 0.0f64), |(a, b), (d, n)| {
                let dn = d[0] * n[0] + d[1] * n[1] + d[2] * n[2];
                (a.max((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()), b.max(dn.abs()))
            });
    AttackRecord {
        id: id.to_string(),
        label: r.label,
        clean_prediction: r.clean_prediction,
        predicted: r.predicted,
        success: r.success,
        trivial: r.trivial,
        restart_index: r.restart_index,
        iterations_used: r.iterations_used,
        ph_evaluations: r.ph_evaluations,
        final_cls: last.map(|l| l.cls),
        final_ph: last.map(|l| l.ph),
        final_geom: last.map(|l| l.geom),
        final_total: last.map(|l| l.total),
        max_norm,
        max_normal_component,
        cloud: format!("{id}.xyz").into(),
        trace: format!("{id}.trace.json").into(),
        clean_diagram: r.clean_diagram.as_ref().map(|_| format!("{id}.clean.dgm").into()),
        adv_diagram: r.adv_diagram.as_ref().map(|_| format!("{id}.adv.dgm").into()),
    }
}

#[derive(Serialize)]
struct AttackSummary {
    kind: &'static str,
    epsilon: f64,
    asr: Option<f64>,
    eligible: usize,
    successes: usize,
    ph_evaluations: usize,
    config: serde_json::Value,
}

/// Attacks the cohort into `out`. With a non-empty sweep, each epsilon gets
/// its own `eps_<value>` subdirectory and `sweep.jsonl` lists their ASRs.
pub fn attack(cfg: &RunConfig, model_path: &Path, data: &Path, out: &Path, log: &Log) -> Result<(), CliError> {
    let model = load_checkpoint(model_path)?;
    let manifest = DatasetManifest::load(data)?;
    if manifest.classes.len() != model.classes {
        return Err(Error::InvalidArgument(format!(
            "model has {} classes, manifest has {}",
            model.classes,
            manifest.classes.len()
        ))
        .into());
    }
    let entries = cohort(cfg, &manifest);
    if entries.is_empty() {
        return Err(Error::EmptyCohort(format!("split {:?} of {} is empty", cfg.run.split, data.display())).into());
    }
    let clouds: Vec<PointCloud> = entries
        .iter()
        .map(|e| {
            Ok(load_cloud(&manifest.resolve(e))?
                .with_label(e.label)
                .with_id(e.id.clone()))
        })
        .collect::<Result<_, Error>>()?;
    let stats: Vec<CleanStats> = clouds
        .par_iter()
        .map(|c| CleanStats::new(c, cfg.attack.k_neighbors))
        .collect::<Result<_, _>>()?;
    let net = EmbeddingNet::new(cfg.attack.embed_seed);

    if cfg.run.eps_sweep.is_empty() {
        cfg.write_echo(&out.join(ECHO_FILE))?;
        attack_cohort(cfg, &cfg.attack, &model, &clouds, &stats, &net, out, log)?;
        return Ok(());
    }
    cfg.write_echo(&out.join(ECHO_FILE))?;
    let mut sweep = String::new();
    for &eps in &cfg.run.eps_sweep {
        let attack_cfg = AttackConfig {
            epsilon: eps,
            ..cfg.attack.clone()
        };
        let dir = out.join(format!("eps_{eps}"));
        log.line(format!("epsilon {eps}"));
        let summary = attack_cohort(cfg, &attack_cfg, &model, &clouds, &stats, &net, &dir, log)?;
        sweep.push_str(&json_line(&summary));
    }
    write_file(&out.join("sweep.jsonl"), sweep.as_bytes())
}

#[allow(clippy::too_many_arguments)]
fn attack_cohort(
    cfg: &RunConfig,
    attack_cfg: &AttackConfig,
    model: &PointClassifier,
    clouds: &[PointCloud],
    stats: &[CleanStats],
    net: &EmbeddingNet,
    out: &Path,
    log: &Log,
) -> Result<serde_json::Value, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    if attack_cfg.lambda2 == 0.0 {
        log.line("persistence: skipped (lambda2 = 0)");
    }
    let progress = Mutex::new((0usize, 0usize, 0usize));
    let total = clouds.len();
    let results: Vec<(AttackRecord, AttackResult)> = clouds
        .par_iter()
        .zip(stats)
        .enumerate()
        .map(|(i, (cloud, st))| {
            let sample_cfg = AttackConfig {
                seed: attack_cfg.seed.wrapping_add(i as u64),
                ..attack_cfg.clone()
            };
            let id = cloud.id.clone().unwrap_or_else(|| format!("sample_{i:04}"));
            let label = cloud.label.expect("manifest clouds are labelled");
            let r = run_attack(model, cloud, st, label, &sample_cfg, net)?;
            let rec = record_of(&id, &r, st);
            {
                let mut p = progress.lock().expect("progress lock");
                p.0 += 1;
                if !r.trivial {
                    p.1 += 1;
                    p.2 += r.success as usize;
                }
                let running = if p.1 > 0 { 100.0 * p.2 as f64 / p.1 as f64 } else { 0.0 };
                log.line(format!(
                    "[{}/{total}] sample={id} success={} trivial={} iterations={} restart={} ph_evaluations={} asr={running:.2}%",
                    p.0, r.success, r.trivial, r.iterations_used, r.restart_index, r.ph_evaluations
                ));
            }
            Ok((rec, r))
        })
        .collect::<Result<_, Error>>()?;

    let mut records = String::new();
    let (mut eligible, mut successes, mut ph_evaluations) = (0, 0, 0);
    for (rec, r) in &results {
        save_cloud(&out.join(&rec.cloud), &r.adv_cloud.points)?;
        write_file(&out.join(&rec.trace), json_line(&r.trajectories).as_bytes())?;
        if let (Some(p), Some(d)) = (&rec.clean_diagram, &r.clean_diagram) {
            write_file(&out.join(p), format_diagram(d).as_bytes())?;
        }
        if let (Some(p), Some(d)) = (&rec.adv_diagram, &r.adv_diagram) {
            write_file(&out.join(p), format_diagram(d).as_bytes())?;
        }
        if !r.trivial {
            eligible += 1;
            successes += r.success as usize;
        }
        ph_evaluations += r.ph_evaluations;
        let mut v = serde_json::to_value(rec).expect("record serializes");
        v["kind"] = "sample".into();
        records.push_str(&json_line(&v));
    }
    let summary = AttackSummary {
        kind: "summary",
        epsilon: attack_cfg.epsilon,
        asr: (eligible > 0).then(|| 100.0 * successes as f64 / eligible as f64),
        eligible,
        successes,
        ph_evaluations,
        config: RunConfig {
            attack: attack_cfg.clone(),
            ..cfg.clone()
        }
        .to_json(),
    };
    records.push_str(&json_line(&summary));
    write_file(&out.join("records.jsonl"), records.as_bytes())?;
    match summary.asr {
        Some(a) => log.line(format!(
            "epsilon {} ASR {a:.2}% ({successes}/{eligible}), {ph_evaluations} persistence evaluations",
            attack_cfg.epsilon
        )),
        None => log.line("no eligible sample: every clean cloud is misclassified"),
    }
    Ok(serde_json::to_value(&summary).expect("summary serializes"))
}

pub struct EvalPaths<'a> {
    pub clean: &'a Path,
    pub adv: &'a Path,
    pub model: &'a Path,
    pub transfer: Option<&'a Path>,
    pub out: &'a Path,
}

/// Scores every cohort sample with an adversarial cloud in `adv`; writes the
/// report, its config echo to `<report>.config.toml`, and prints the summary
/// table.
pub fn eval(cfg: &RunConfig, paths: &EvalPaths, plot_data: bool, log: &Log) -> Result<(), CliError> {
    let model = load_checkpoint(paths.model)?;
    let manifest = DatasetManifest::load(paths.clean)?;
    let mut pairs = Vec::new();
    for e in cohort(cfg, &manifest) {
        let adv_path = paths.adv.join(format!("{}.xyz", e.id));
        if !adv_path.exists() {
            continue;
        }
        let clean = load_cloud(&manifest.resolve(e))?
            .with_label(e.label)
            .with_id(e.id.clone());
        let adv = load_cloud(&adv_path)?;
        if adv.len() != clean.len() {
            return Err(Error::InvalidArgument(format!(
                "{}: adversarial cloud has {} points, clean has {}",
                e.id,
                adv.len(),
                clean.len()
            ))
            .into());
        }
        pairs.push((e, clean, adv));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyCohort(format!("no adversarial cloud found in {}", paths.adv.display())).into());
    }
    log.line(format!("evaluating {} samples", pairs.len()));
    let records = pairs
        .par_iter()
        .map(|(e, clean, adv)| evaluate_sample(&model, &e.id, e.label, clean, adv, cfg.attack.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let transfer_asr = match paths.transfer {
        Some(p) => {
            let target = load_checkpoint(p)?;
            let v: Vec<(&PointCloud, &PointCloud, usize)> = pairs.iter().map(|(e, c, a)| (c, a, e.label)).collect();
            Some(transfer_eval(&v, model.classes, &target)?)
        }
        None => None,
    };
    let report = EvalReport::new(records, transfer_asr, cfg.to_json())?;
    write_file(paths.out, report.to_jsonl()?.as_bytes())?;
    cfg.write_echo(&sidecar(paths.out, "config.toml"))?;
    print!("{}", report.summary_table());
    if plot_data {
        let dir = paths.adv.join("plot");
        for (e, clean, adv) in &pairs {
            let trace = paths.adv.join(format!("{}.trace.json", e.id));
            if let Ok(text) = std::fs::read_to_string(&trace) {
                let traj: Vec<Trajectory> = serde_json::from_str(&text)
                    .map_err(|err| CliError::Config(format!("{}: {err}", trace.display())))?;
                write_file(
                    &dir.join(format!("{}.loss.txt", e.id)),
                    loss_plot_data(&traj).as_bytes(),
                )?;
            }
            for (tag, c) in [("clean", clean), ("adv", adv)] {
                let (_, d) = diagram_of(&c.points, cfg.attack.seed)?;
                write_file(
                    &dir.join(format!("{}.{tag}.diagram.txt", e.id)),
                    diagram_plot_data(&d).as_bytes(),
                )?;
            }
        }
        log.line(format!("plot data in {}", dir.display()));
    }
    Ok(())
}

pub fn ph(cloud: &Path, grad_check: bool, seed: u64) -> Result<(), CliError> {
    let c = load_cloud(cloud)?;
    let (_, dgm) = diagram_of(&c.points, seed)?;
    let mut out = format_diagram(&dgm);
    if grad_check {
        let r = gradcheck::check(&c.points, seed)?;
        let _ = writeln!(
            out,
            "# grad-check: max relative error {:.3e} over {} of {} pairing-stable coordinates (h = {:e})",
            r.max_rel_err,
            r.stable,
            r.total,
            gradcheck::H
        );
    }
    print!("{out}");
    Ok(())
}
