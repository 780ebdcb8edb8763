use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rle_core::config::RunConfig;
use rle_core::envs::GridLayout;
use rle_core::eval::EvalOptions;
use rle_core::run::{
    cmd_aggregate, cmd_eval, cmd_sweep, cmd_train, resolve_run_dir, thread_cap, AggregateRequest, RunStatus, Statistic,
};
use rle_core::Error;

#[derive(Parser)]
#[command(name = "rle-lab", version, about = "Train, sweep, evaluate and aggregate exploration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config; may name a preset under "preset".
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset to start from when no config file is given.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Dot-path override, e.g. `--set rle.dim=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    deterministic: bool,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut overrides = self.overrides.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        if self.deterministic {
            overrides.push("deterministic=true".into());
        }
        match (&self.config, &self.preset) {
            (Some(p), _) => RunConfig::load(p, &overrides),
            (None, Some(name)) => RunConfig::from_value(serde_json::json!({ "preset": name }), &overrides),
            (None, None) => Err(Error::Usage("pass --config <file> or --preset <name>".into())),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one run.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Run directory; defaults to output_dir or runs/<env>-<explorer>-s<seed>-<time>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite an existing run directory.
        #[arg(long)]
        force: bool,
    },
    /// Train one run per seed and collect final scores.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated seeds or an inclusive range `a..b`.
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Roll out a trained checkpoint.
    Eval {
        #[arg(long)]
        run: PathBuf,
        /// Defaults to the last checkpoint of the run.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        n_rollouts: usize,
        #[arg(long, default_value_t = 1)]
        z_samples: usize,
        /// Take the most likely action instead of sampling.
        #[arg(long)]
        greedy: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Bootstrap a statistic over score tables.
    Aggregate {
        #[arg(long, required = true, num_args = 1..)]
        scores: Vec<PathBuf>,
        #[arg(long)]
        baselines: Option<PathBuf>,
        /// iqm, mean, median or poi.
        #[arg(long, default_value = "iqm")]
        statistic: String,
        #[arg(long)]
        algorithm: String,
        /// Second algorithm for poi.
        #[arg(long)]
        versus: Option<String>,
        #[arg(long, default_value_t = 2000)]
        resamples: usize,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report here as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the FourRoom grid.
    Layout,
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>, Error> {
    let bad = || Error::Usage(format!("cannot parse seeds {spec:?}"));
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train { cfg, out, force } => {
            let cfg = cfg.load()?;
            let dir = resolve_run_dir(&cfg, out.as_deref());
            let m = cmd_train(&cfg, &dir, force)?;
            println!("{}", dir.display());
            log::info!("final score {:?}, {} checkpoints", m.final_score, m.checkpoints.len());
        }
        Command::Sweep { cfg, seeds, out, force } => {
            let cfg = cfg.load()?;
            let seeds = parse_seeds(&seeds)?;
            let m = cmd_sweep(&cfg, &seeds, &out, force, thread_cap())?;
            for r in &m.runs {
                println!("{}\t{:?}\t{}", r.seed, r.status, r.run_dir);
            }
            let failed = m.runs.iter().filter(|r| r.status == RunStatus::Failed).count();
            if failed > 0 {
                return Err(Error::Usage(format!("{failed} of {} seeds failed; see sweep.json", m.runs.len())));
            }
        }
        Command::Eval {
            run,
            checkpoint,
            n_rollouts,
            z_samples,
            greedy,
            seed,
        } => {
            let opts = EvalOptions {
                n_rollouts,
                z_samples,
                greedy,
                seed,
            };
            let s = cmd_eval(&run, checkpoint.as_deref(), &opts)?;
            println!("{}", serde_json::to_string(&s)?);
        }
        Command::Aggregate {
            scores,
            baselines,
            statistic,
            algorithm,
            versus,
            resamples,
            confidence,
            seed,
            out,
        } => {
            let req = AggregateRequest {
                score_csvs: scores,
                baseline_csv: baselines,
                statistic: statistic.parse::<Statistic>()?,
                algorithm,
                versus,
                resamples,
                confidence,
                seed,
            };
            let report = cmd_aggregate(&req)?;
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            if let Some(p) = out {
                std::fs::write(&p, json + "\n").map_err(|e| Error::Io { path: p, source: e })?;
            }
        }
        Command::Layout => print!("{}", GridLayout::canonical().ascii()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            eprintln!("error[E_USAGE]: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
