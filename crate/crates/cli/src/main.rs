//! `ipgd` command line: experiments, estimators and training.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ipgd::experiment::{run_experiment, run_training, side_info_instance, ExperimentConfig, ExperimentKind, SideInfoParams, TrainSpec};
use ipgd::geom::{
    mean_width_monte_carlo, rho_alternating, rho_brute_force, statistical_dimension_l1_sparse, ConeDescriptor,
};
use ipgd::linalg::{gaussian_matrix, l1_norm, rng};
use ipgd::model::ConstraintSet;
use ipgd::proj::measure_epsilon;
use ipgd::solve::{step_size_for, StepPolicy};

#[derive(Parser)]
#[command(name = "ipgd", version, about = "Inexact projected gradient descent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write CSV traces plus a manifest.
    Run(RunArgs),
    /// Print an estimate as JSON.
    Estimate {
        #[command(subcommand)]
        kind: EstimateKind,
    },
    /// Train an unrolled network from a JSON specification.
    Train(TrainArgs),
}

#[derive(Args)]
struct RunArgs {
    /// spectral-cs, tree, side-info, bound-check, width-table or lista-mm
    experiment: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// JSON configuration applied before `--set` overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration field, e.g. `--set tree.m=80`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SetKind {
    SparseDifference,
    TreeDifference,
    L1Descent,
    Subspace,
}

#[derive(Clone, Copy, ValueEnum)]
enum RhoMethodArg {
    BruteForce,
    Alternating,
}

#[derive(Subcommand)]
enum EstimateKind {
    /// Gaussian mean width of a difference set or descent cone.
    Width {
        #[arg(long, value_enum, default_value = "sparse-difference")]
        set: SetKind,
        #[arg(long, default_value_t = 127)]
        d: usize,
        #[arg(long, default_value_t = 13)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Restricted rate ρ of `I − μMᵀM` for a Gaussian `M`.
    Rho {
        #[arg(long, value_enum, default_value = "sparse-difference")]
        set: SetKind,
        #[arg(long, default_value_t = 8)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        m: usize,
        /// Step size; `1/m` when absent.
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, value_enum, default_value = "brute-force")]
        method: RhoMethodArg,
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Model error of the oracle Haar-subset operator on an image patch.
    Epsilon {
        #[arg(long, default_value_t = 0.95)]
        fraction: f64,
        #[arg(long, default_value_t = 32)]
        patch: usize,
        /// Binary PGM image; a synthetic image is used when absent.
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "results/train")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

/// Error in the invocation itself rather than in the computation.
#[derive(Debug)]
struct Usage(anyhow::Error);

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u.0)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<ipgd::Error> for Failure {
    fn from(e: ipgd::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> Result<T, Usage> {
    r.map_err(|e| Usage(e.into()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, Usage> {
    let text = usage(std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())))?;
    usage(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())))
}

fn resolve_config(args: &RunArgs) -> Result<ExperimentConfig, Usage> {
    let kind = usage(ExperimentKind::parse(&args.experiment))?;
    let mut config = match &args.config {
        Some(path) => read_json(path)?,
        None => ExperimentConfig::default(),
    };
    config.name = kind;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = Some(trials);
    }
    for item in &args.overrides {
        let (path, value) = item
            .split_once('=')
            .ok_or_else(|| Usage(anyhow::anyhow!("override '{item}' is not of the form path=value")))?;
        usage(config.set(path.trim(), value.trim()))?;
    }
    if config.trials() == 0 {
        return Err(Usage(anyhow::anyhow!("trials must be at least 1")));
    }
    Ok(config)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let config = resolve_config(&args)?;
    if args.print_config {
        println!("{}", config.to_json()?);
        return Ok(());
    }
    log::info!("running {} with seed {}", config.name.name(), config.seed);
    let manifest = run_experiment(&config, args.out.as_deref())?;
    for f in &manifest.files {
        log::info!("wrote {} ({})", f.path, &f.sha256[..12]);
    }
    println!("{}", serde_json::to_string_pretty(&manifest.files).map_err(anyhow::Error::from)?);
    Ok(())
}

fn cone_for(set: SetKind, d: usize, k: usize) -> Result<ConeDescriptor, Usage> {
    match set {
        SetKind::SparseDifference => Ok(ConeDescriptor::SparseDifference { d, k }),
        SetKind::TreeDifference => {
            if !(d + 1).is_power_of_two() {
                return Err(Usage(anyhow::anyhow!("tree sets need d = 2^L − 1, got {d}")));
            }
            Ok(ConeDescriptor::TreeDifference {
                k,
                levels: (d + 1).trailing_zeros() as usize,
            })
        }
        SetKind::Subspace => Ok(ConeDescriptor::Subspace {
            d,
            indices: (0..k.min(d)).collect(),
        }),
        SetKind::L1Descent => Err(Usage(anyhow::anyhow!("the ℓ1 descent cone has no ρ estimator"))),
    }
}

fn estimate(kind: EstimateKind) -> Result<(), Failure> {
    let value = match kind {
        EstimateKind::Width { set, d, k, samples, seed } => {
            let est = match set {
                SetKind::L1Descent => statistical_dimension_l1_sparse(k, d)?,
                other => mean_width_monte_carlo(&cone_for(other, d, k)?, samples, seed)?,
            };
            serde_json::to_value(est).map_err(anyhow::Error::from)?
        }
        EstimateKind::Rho {
            set,
            d,
            k,
            m,
            mu,
            method,
            restarts,
            seed,
        } => {
            let cone = cone_for(set, d, k)?;
            if m == 0 {
                return Err(Usage(anyhow::anyhow!("m must be positive")).into());
            }
            let matrix = gaussian_matrix(&mut rng(seed, 0), m, d);
            let mu = mu.unwrap_or_else(|| step_size_for(m, d, StepPolicy::Aggressive));
            let est = match method {
                RhoMethodArg::BruteForce => rho_brute_force(matrix.view(), &cone, mu, None)?,
                RhoMethodArg::Alternating => rho_alternating(matrix.view(), &cone, mu, None, restarts, seed)?,
            };
            serde_json::to_value(est).map_err(anyhow::Error::from)?
        }
        EstimateKind::Epsilon {
            fraction,
            patch,
            image,
            seed,
        } => {
            let params = SideInfoParams {
                patch,
                energy_fraction: fraction,
                image_path: image.map(|p| p.display().to_string()),
                fixed_columns: 0,
                fixed_schedule_start: 0,
                ..SideInfoParams::default()
            };
            let inst = side_info_instance(&params, seed)?;
            let ball = ConstraintSet::L1Ball {
                radius: l1_norm(inst.x.view()),
            };
            let report = measure_epsilon(&inst.oracle, &ball, inst.x.view())?;
            serde_json::json!({
                "epsilon_sufficient": report.epsilon_sufficient,
                "epsilon_convex": report.epsilon_convex,
                "oracle_columns": inst.oracle_columns,
                "dimension": inst.x.len(),
            })
        }
    };
    println!("{}", serde_json::to_string_pretty(&value).map_err(anyhow::Error::from)?);
    Ok(())
}

fn train_cmd(args: TrainArgs) -> Result<(), Failure> {
    let mut spec: TrainSpec = match &args.config {
        Some(path) => read_json(path)?,
        None => TrainSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.data_seed = seed;
        spec.training.seed = seed;
    }
    let outcome = run_training(&spec, &args.out)?;
    let last = outcome.history.last().expect("history has the initial row");
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "best_epoch": outcome.best_epoch,
            "final_train_loss": last.train_loss,
            "final_val_loss": last.val_loss,
            "out": args.out.display().to_string(),
        }))
        .map_err(anyhow::Error::from)?
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Estimate { kind } => estimate(kind),
        Command::Train(args) => train_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
