//! Seeded wealth-exchange experiments from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use yardsale_cli::exit_code;
use yardsale_cli::experiment::{execute, ExperimentOutput};
use yardsale_cli::manifest::{
    env_key, resolve_manifest, Experiment, ManifestError, RawOptions, RunManifest,
};
use yardsale_cli::output::{emit_results, print_summary};

#[derive(Parser)]
#[command(
    name = "yardsale",
    version,
    about = "Monte Carlo wealth-exchange experiments: social protection, taxation, inequality metrics",
    after_help = "Every flag can also be set through YARDSALE_* environment variables or a\n\
                  key=value config file (--config); precedence is flag > environment >\n\
                  config file > default."
)]
struct Cli {
    #[command(subcommand)]
    experiment: ExperimentCmd,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// One parameter point, one replica ensemble
    SingleRun(CommonArgs),
    /// Sweep the social protection factor f
    SweepF(CommonArgs),
    /// Sweep the tax rate lambda
    SweepLambda(CommonArgs),
    /// Grid over (lambda, p) with targeted redistribution
    GridLambdaP(CommonArgs),
    /// Locate the Gini-minimizing targeted fraction at one lambda
    PStar(CommonArgs),
}

impl ExperimentCmd {
    fn split(self) -> (Experiment, CommonArgs) {
        match self {
            ExperimentCmd::SingleRun(a) => (Experiment::SingleRun, a),
            ExperimentCmd::SweepF(a) => (Experiment::SweepF, a),
            ExperimentCmd::SweepLambda(a) => (Experiment::SweepLambda, a),
            ExperimentCmd::GridLambdaP(a) => (Experiment::GridLambdaP, a),
            ExperimentCmd::PStar(a) => (Experiment::PStar, a),
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Population size
    #[arg(long)]
    n: Option<String>,
    /// Master seed for the replica streams
    #[arg(long)]
    seed: Option<String>,
    /// Replicas per parameter point
    #[arg(long)]
    replicas: Option<String>,
    /// Transfer rule: fair|loser
    #[arg(long)]
    rule: Option<String>,
    /// Social protection factor in [0, 0.5]
    #[arg(long)]
    f: Option<String>,
    /// Tax rate per Monte Carlo step, in [0, 1]
    #[arg(long)]
    lambda: Option<String>,
    /// Redistribution mode: universal|targeted
    #[arg(long)]
    mode: Option<String>,
    /// Targeted fraction in (0, 1]
    #[arg(long)]
    p: Option<String>,
    /// Monte Carlo step cap per replica
    #[arg(long)]
    max_steps: Option<String>,
    /// Stationarity window, in Monte Carlo steps
    #[arg(long)]
    equil_window: Option<String>,
    /// Relative window-mean Gini tolerance
    #[arg(long)]
    equil_tol: Option<String>,
    /// Sample metrics every this many steps
    #[arg(long)]
    metric_stride: Option<String>,
    /// Zero-wealth classification threshold
    #[arg(long)]
    zwa_threshold: Option<String>,
    /// Output path for the results table
    #[arg(long)]
    out: Option<String>,
    /// Table format: csv|jsonl
    #[arg(long)]
    format: Option<String>,
    /// Rayon worker threads (0 = all cores)
    #[arg(long)]
    workers: Option<String>,
    /// Preset: N=10000 (single-run: 100000) and 1000 replicas
    #[arg(long)]
    paper_scale: bool,
    /// Sweep grid: smallest f
    #[arg(long)]
    f_min: Option<String>,
    /// Sweep grid: largest f
    #[arg(long)]
    f_max: Option<String>,
    /// Sweep grid: f increment
    #[arg(long)]
    f_step: Option<String>,
    /// Sweep grid: smallest lambda
    #[arg(long)]
    lambda_min: Option<String>,
    /// Sweep grid: largest lambda
    #[arg(long)]
    lambda_max: Option<String>,
    /// Sweep grid: lambda increment
    #[arg(long)]
    lambda_step: Option<String>,
    /// Explicit comma-separated lambda grid (overrides min/max/step)
    #[arg(long)]
    lambda_values: Option<String>,
    /// Explicit comma-separated p grid
    #[arg(long)]
    p_values: Option<String>,
    /// Flat key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
}

impl CommonArgs {
    fn into_raw(self) -> Result<(RawOptions, Option<PathBuf>), ManifestError> {
        let mut raw = RawOptions::default();
        let pairs: [(&'static str, &Option<String>); 24] = [
            ("n", &self.n),
            ("seed", &self.seed),
            ("replicas", &self.replicas),
            ("rule", &self.rule),
            ("f", &self.f),
            ("lambda", &self.lambda),
            ("mode", &self.mode),
            ("p", &self.p),
            ("max-steps", &self.max_steps),
            ("equil-window", &self.equil_window),
            ("equil-tol", &self.equil_tol),
            ("metric-stride", &self.metric_stride),
            ("zwa-threshold", &self.zwa_threshold),
            ("out", &self.out),
            ("format", &self.format),
            ("workers", &self.workers),
            ("f-min", &self.f_min),
            ("f-max", &self.f_max),
            ("f-step", &self.f_step),
            ("lambda-min", &self.lambda_min),
            ("lambda-max", &self.lambda_max),
            ("lambda-step", &self.lambda_step),
            ("lambda-values", &self.lambda_values),
            ("p-values", &self.p_values),
        ];
        for (key, value) in pairs {
            if let Some(value) = value {
                raw.set_from_kv(key, value)?;
            }
        }
        if self.paper_scale {
            raw.paper_scale = Some(true);
        }
        Ok((raw, self.config))
    }
}

fn usage_error(err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code::USAGE as u8)
}

fn runtime_error(err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code::RUNTIME as u8)
}

fn resolve(experiment: Experiment, args: CommonArgs) -> Result<RunManifest, ExitCode> {
    let (raw, config_flag) = args.into_raw().map_err(usage_error)?;

    let config_path =
        config_flag.or_else(|| std::env::var(env_key("config")).ok().map(PathBuf::from));
    let config_text = match &config_path {
        None => None,
        Some(path) => Some(std::fs::read_to_string(path).map_err(|source| {
            usage_error(ManifestError::UnreadableConfig {
                path: path.display().to_string(),
                source,
            })
        })?),
    };
    let config = config_path
        .as_ref()
        .zip(config_text.as_ref())
        .map(|(path, text)| (path.to_str().unwrap_or("config"), text.as_str()));

    let env = |key: &str| std::env::var(key).ok();
    resolve_manifest(experiment, raw, config, &env).map_err(usage_error)
}

fn run(manifest: &RunManifest) -> Result<ExperimentOutput, ExitCode> {
    let work = || execute(manifest);
    let output = if manifest.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(manifest.workers)
            .build()
            .map_err(runtime_error)?;
        pool.install(work)
    } else {
        work()
    };
    output.map_err(runtime_error)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = cli.experiment.split();

    let manifest = match resolve(experiment, args) {
        Ok(manifest) => manifest,
        Err(code) => return code,
    };

    println!("# resolved manifest");
    print!("{}", manifest.echo());
    println!();

    let output = match run(&manifest) {
        Ok(output) => output,
        Err(code) => return code,
    };

    let files = match emit_results(&output.result, &manifest) {
        Ok(files) => files,
        Err(err) => return runtime_error(err),
    };

    if print_summary(&output.result, std::io::stdout()).is_err() {
        return ExitCode::from(exit_code::RUNTIME as u8);
    }
    if let Some((p_star, gini)) = output.p_star {
        println!(
            "p* = {p_star} with gini {:.6} +- {:.6} at lambda = {}",
            gini.mean, gini.stderr, manifest.lambda
        );
    }
    println!("wrote {}", files.table.display());
    println!("wrote {}", files.lorenz.display());
    println!("wrote {}", files.metadata.display());

    let all_converged = output
        .result
        .rows
        .iter()
        .all(|row| row.ensemble.converged_fraction >= 1.0);
    if all_converged {
        ExitCode::from(exit_code::SUCCESS as u8)
    } else {
        println!("note: some replicas hit max-steps without equilibrating");
        ExitCode::from(exit_code::UNCONVERGED as u8)
    }
}
