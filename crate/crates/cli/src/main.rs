//! `ncx`: batch driver for the feature extraction and classification pipeline.
//!
//! Exit status is 0 on success, 2 when the configuration or the command line
//! is invalid, and 1 for any other failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ncx::pipeline::{self, DataSource, PipelineConfig};
use ncx::stats::FeatureMatrix;
use ncx::Error;

#[derive(Parser)]
#[command(
    name = "ncx",
    version,
    about = "Nonlinear EEG complexity features and two-group classification"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config with dotted keys, e.g. `evaluation.K = 10`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (falls back to NCX_THREADS, then all cores).
    #[arg(long, global = true, env = "NCX_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the surrogate cohort into <out>/recordings.
    Synth,
    /// Epoch recordings and write <out>/features.csv.
    Extract {
        /// Recordings directory with labels.csv; defaults to data.directory or <out>/recordings.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Fit every classifier on all rows and save models to <out>/models.
    Train {
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Cross-validate the experiment grids and write <out>/results/results.json.
    Evaluate {
        /// Any features CSV in the documented layout; defaults to <out>/features.csv.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Turn results into tables under <out>/report.
    Report {
        /// Defaults to <out>/results.
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// All stages end to end.
    Run,
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Extract { .. } => "extract",
            Command::Train { .. } => "train",
            Command::Evaluate { .. } => "evaluate",
            Command::Report { .. } => "report",
            Command::Run => "run",
        }
    }
}

fn load_config(common: &Common) -> ncx::Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    cfg.resolve()
}

fn read_features(path: &Path) -> ncx::Result<FeatureMatrix> {
    if !path.is_file() {
        return Err(Error::config(
            "--features",
            format!("{} not found", path.display()),
        ));
    }
    FeatureMatrix::read_csv(path)
}

fn execute(command: &Command, cfg: &PipelineConfig) -> ncx::Result<()> {
    let out = cfg.output.as_path();
    match command {
        Command::Synth => {
            let cohort = pipeline::synth_stage(cfg, out)?;
            log::info!(
                "wrote {} recordings to {}",
                cohort.recordings.len(),
                pipeline::recordings_dir(out).display()
            );
        }
        Command::Extract { input } => {
            let dir = match (input, cfg.data.source) {
                (Some(d), _) => d.clone(),
                (None, DataSource::Directory) => cfg.data.directory.clone().expect("validated"),
                (None, DataSource::Surrogate) => pipeline::recordings_dir(out),
            };
            if !dir.is_dir() {
                return Err(Error::config(
                    "--input",
                    format!("{} is not a directory", dir.display()),
                ));
            }
            let labels = if input.is_none() {
                cfg.data.labels.as_deref()
            } else {
                None
            };
            let (recs, labels) = pipeline::load_recordings(&dir, labels, &cfg.data)?;
            let fm = pipeline::extract_stage(cfg, &recs, &labels)?;
            std::fs::create_dir_all(out).map_err(|e| Error::Io {
                path: out.into(),
                source: e,
            })?;
            fm.write_csv(&pipeline::features_path(out))?;
            log::info!("{} rows x {} features", fm.n_rows(), fm.n_features());
        }
        Command::Train { features } => {
            let fm = read_features(
                &features
                    .clone()
                    .unwrap_or_else(|| pipeline::features_path(out)),
            )?;
            let saved = pipeline::train_stage(cfg, &fm, out)?;
            log::info!("saved {} models", saved.len());
        }
        Command::Evaluate { features } => {
            let fm = read_features(
                &features
                    .clone()
                    .unwrap_or_else(|| pipeline::features_path(out)),
            )?;
            let results = pipeline::evaluate_stage(cfg, &fm)?;
            pipeline::write_results(&results, out)?;
        }
        Command::Report { results } => {
            let dir = results
                .clone()
                .unwrap_or_else(|| pipeline::results_dir(out));
            for r in pipeline::report_stage(&dir, out)? {
                for m in &r.margins.per_feature_set {
                    println!("{}\t{:.2}", m.features, m.mean_accuracy_pct);
                }
            }
        }
        Command::Run => {
            let reports = pipeline::run_pipeline(cfg)?;
            for r in &reports {
                for m in &r.margins.per_feature_set {
                    println!("{}\t{:.2}", m.features, m.mean_accuracy_pct);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stage = cli.command.stage();
    if let Some(n) = cli.common.threads {
        if n == 0 {
            eprintln!("ncx: invalid config field `--threads`: must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("ncx: {stage}: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = load_config(&cli.common).and_then(|cfg| execute(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_validation() => {
            eprintln!("ncx: {stage}: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("ncx: {stage}: {e}");
            ExitCode::from(1)
        }
    }
}
