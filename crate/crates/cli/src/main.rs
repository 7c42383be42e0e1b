//! `topo-adv`: dataset generation, victim training, attacks, evaluation and
//! standalone persistence diagrams.

mod commands;
mod config;
mod error;
mod gradcheck;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "topo-adv", version, about = "Topology-driven adversarial point clouds")]
struct Cli {
    /// Suppress progress logging on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    /// Worker threads for per-sample work (0 = all cores). Outputs do not
    /// depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset and its manifest.
    GenData {
        /// Config file; its [dataset] section describes the dataset.
        #[arg(long, env = config::CONFIG_ENV)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(long)]
        train_per_class: Option<usize>,
        #[arg(long)]
        test_per_class: Option<usize>,
        #[arg(long)]
        noise_sigma: Option<f64>,
        /// Comma-separated family names.
        #[arg(long, value_delimiter = ',')]
        families: Option<Vec<String>>,
    },
    /// Train a victim classifier on the train split of a manifest.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Attack every sample of a split and write adversarial clouds.
    Attack {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        flags: AttackFlags,
    },
    /// Score adversarial clouds against their clean originals.
    Eval {
        /// Manifest of the clean dataset.
        #[arg(long)]
        clean: PathBuf,
        /// Directory written by `attack`.
        #[arg(long)]
        adv: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Second model for transfer ASR.
        #[arg(long)]
        transfer: Option<PathBuf>,
        /// Also write loss curves and diagrams as plain columns.
        #[arg(long)]
        plot_data: bool,
        /// Report path; defaults to `<adv>/eval.jsonl`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        split: Option<String>,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Print the persistence diagram of a cloud.
    Ph {
        #[arg(long)]
        cloud: PathBuf,
        /// Compare the topology-loss gradient with finite differences.
        #[arg(long)]
        grad_check: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ConfigArg {
    /// TOML config file, layered over the defaults.
    #[arg(long, env = config::CONFIG_ENV)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AttackFlags {
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated epsilons; one report per value.
    #[arg(long, value_delimiter = ',')]
    eps_sweep: Option<Vec<f64>>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    lambda3: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    limit: Option<usize>,
}

fn parse_split(s: &str) -> Result<topo_adv::data_io::Split, CliError> {
    match s {
        "train" => Ok(topo_adv::data_io::Split::Train),
        "test" => Ok(topo_adv::data_io::Split::Test),
        other => Err(CliError::Config(format!(
            "unknown split `{other}` (expected train or test)"
        ))),
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let log = commands::Log { quiet: cli.quiet };
    let workers = cli.workers;
    let finish = |cfg: RunConfig| -> Result<RunConfig, CliError> {
        cfg.validate()?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    };
    match cli.command {
        Command::GenData {
            spec,
            out,
            seed,
            n_points,
            train_per_class,
            test_per_class,
            noise_sigma,
            families,
        } => {
            let mut cfg = RunConfig::load(spec.as_deref())?;
            let d = &mut cfg.dataset;
            set(&mut d.seed, seed);
            set(&mut d.n_points, n_points);
            set(&mut d.train_per_class, train_per_class);
            set(&mut d.test_per_class, test_per_class);
            set(&mut d.noise_sigma, noise_sigma);
            if let Some(f) = families {
                d.families = f.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
            }
            commands::gen_data(&finish(cfg)?, &out, &log)
        }
        Command::Train {
            data,
            variant,
            out,
            config,
            epochs,
            seed,
            learning_rate,
        } => {
            let mut cfg = RunConfig::load(config.config.as_deref())?;
            let t = &mut cfg.train;
            if let Some(v) = variant {
                t.variant = v.parse()?;
            }
            set(&mut t.epochs, epochs);
            set(&mut t.seed, seed);
            set(&mut t.learning_rate, learning_rate);
            commands::train(&finish(cfg)?, &data, &out, &log)
        }
        Command::Attack {
            model,
            data,
            out,
            config,
            flags,
        } => {
            let mut cfg = RunConfig::load(config.config.as_deref())?;
            let a = &mut cfg.attack;
            set(&mut a.epsilon, flags.eps);
            set(&mut a.iterations, flags.iterations);
            set(&mut a.restarts, flags.restarts);
            set(&mut a.lambda1, flags.lambda1);
            set(&mut a.lambda2, flags.lambda2);
            set(&mut a.lambda3, flags.lambda3);
            set(&mut a.seed, flags.seed);
            set(&mut cfg.run.eps_sweep, flags.eps_sweep);
            if let Some(s) = flags.split {
                cfg.run.split = parse_split(&s)?;
            }
            if flags.limit.is_some() {
                cfg.run.limit = flags.limit;
            }
            commands::attack(&finish(cfg)?, &model, &data, &out, &log)
        }
        Command::Eval {
            clean,
            adv,
            model,
            transfer,
            plot_data,
            out,
            config,
            split,
            limit,
        } => {
            let mut cfg = RunConfig::load(config.config.as_deref())?;
            if let Some(s) = split {
                cfg.run.split = parse_split(&s)?;
            }
            if limit.is_some() {
                cfg.run.limit = limit;
            }
            let out = out.unwrap_or_else(|| adv.join("eval.jsonl"));
            let paths = commands::EvalPaths {
                clean: &clean,
                adv: &adv,
                model: &model,
                transfer: transfer.as_deref(),
                out: &out,
            };
            commands::eval(&finish(cfg)?, &paths, plot_data, &log)
        }
        Command::Ph {
            cloud,
            grad_check,
            seed,
        } => {
            finish(RunConfig::default())?;
            commands::ph(&cloud, grad_check, seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
