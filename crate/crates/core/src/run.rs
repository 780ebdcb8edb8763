//! Run persistence behind the command-line front end: run directories,
//! manifests, seed sweeps, evaluation artifacts and score aggregation.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::envs::{EnvKind, FourRoomVariant};
use crate::error::{Error, Result};
use crate::eval::{evaluate, restore, EvalOptions};
use crate::metrics::{
    bootstrap_ci, emit_heatmap, iqm_pooled, probability_of_improvement, read_baselines, Interval, ScoreTable,
};
use crate::nn::Checkpoint;
use crate::ppo::train::MetricsRow;
use crate::ppo::{train, TrainOptions};
use crate::rng::{stream, Stream};

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
pub const THREADS_ENV: &str = "RLE_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub code_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub final_metrics: Option<MetricsRow>,
    /// Rolling task return at the end of training; `null` when no episode finished.
    pub final_score: Option<f64>,
    pub files: Vec<String>,
    pub checkpoints: Vec<String>,
}

impl RunManifest {
    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Short name of the environment configuration, used as the score task.
pub fn task_name(cfg: &RunConfig) -> String {
    match cfg.env.kind {
        EnvKind::Pointreach => "pointreach".into(),
        EnvKind::Fourroom => {
            let v = match cfg.env.variant {
                FourRoomVariant::Sparse => "fourroom_sparse",
                FourRoomVariant::RewardFree => "fourroom_reward_free",
            };
            if cfg.env.noisy_tv {
                format!("{v}_noisy_tv")
            } else {
                v.into()
            }
        }
    }
}

/// `<env>-<explorer>-s<seed>`, with a timestamp suffix unless omitted.
pub fn run_name(cfg: &RunConfig, timestamped: bool) -> String {
    let env = match cfg.env.kind {
        EnvKind::Fourroom => "fourroom",
        EnvKind::Pointreach => "pointreach",
    };
    let base = format!("{env}-{}-s{}", cfg.explorer.name(), cfg.seed);
    if timestamped {
        format!("{base}-{}", chrono::Utc::now().format("%Y%m%dT%H%M%S"))
    } else {
        base
    }
}

fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let occupied = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?.next().is_some();
        if occupied && !force {
            return Err(Error::Collision(dir.to_path_buf()));
        }
        if occupied {
            fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Resolves the run directory: explicit argument, then `output_dir`, then a
/// timestamped name under `runs/`.
pub fn resolve_run_dir(cfg: &RunConfig, explicit: Option<&Path>) -> PathBuf {
    match (explicit, &cfg.output_dir) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => Path::new("runs").join(run_name(cfg, true)),
    }
}

/// Trains one run into `run_dir`; the manifest is written even when training fails.
pub fn cmd_train(cfg: &RunConfig, run_dir: &Path, force: bool) -> Result<RunManifest> {
    cfg.validate()?;
    prepare_dir(run_dir, force)?;
    let started_at = now();
    write_atomic(&run_dir.join("config.json"), cfg.to_json().as_bytes())?;
    let outcome = train(
        cfg,
        &TrainOptions {
            out_dir: Some(run_dir.to_path_buf()),
            keep_checkpoints: false,
        },
    );
    let rel = |p: &Path| p.strip_prefix(run_dir).unwrap_or(p).to_string_lossy().into_owned();
    let mut manifest = RunManifest {
        config: cfg.clone(),
        code_version: CODE_VERSION.into(),
        started_at,
        finished_at: now(),
        status: RunStatus::Completed,
        error: None,
        final_metrics: None,
        final_score: None,
        files: Vec::new(),
        checkpoints: Vec::new(),
    };
    let result = match outcome {
        Ok(a) => {
            manifest.final_metrics = a.metrics.last().cloned();
            manifest.final_score = a.final_score.is_finite().then_some(a.final_score);
            manifest.checkpoints = a.checkpoint_files.iter().map(|p| rel(p)).collect();
            Ok(())
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(format!("{}: {e}", e.code()));
            Err(e)
        }
    };
    for f in ["config.json", "metrics.csv", "visitation.csv"] {
        if run_dir.join(f).exists() {
            manifest.files.push(f.into());
        }
    }
    write_atomic(&run_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    result.map(|_| manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub seed: u64,
    pub run_dir: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub final_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub code_version: String,
    pub algorithm: String,
    pub task: String,
    pub runs: Vec<SweepEntry>,
    pub scores_csv: String,
}

/// Parallelism cap from `RLE_LAB_THREADS`, defaulting to one.
pub fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

/// One run per seed under `root`; failed seeds are recorded and the rest
/// still run. Scores of completed runs go to `root/scores.csv`.
pub fn cmd_sweep(cfg: &RunConfig, seeds: &[u64], root: &Path, force: bool, threads: usize) -> Result<SweepManifest> {
    if seeds.is_empty() {
        return Err(Error::Usage("a sweep needs at least one seed".into()));
    }
    cfg.validate()?;
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let jobs: Vec<RunConfig> = seeds
        .iter()
        .map(|&s| RunConfig {
            seed: s,
            output_dir: None,
            ..cfg.clone()
        })
        .collect();
    let results: Mutex<Vec<Option<SweepEntry>>> = Mutex::new(vec![None; jobs.len()]);
    let next = Mutex::new(0usize);
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, jobs.len()) {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().expect("sweep queue");
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some(job) = jobs.get(i) else { break };
                let dir = root.join(run_name(job, false));
                let entry = match cmd_train(job, &dir, force) {
                    Ok(m) => SweepEntry {
                        seed: job.seed,
                        run_dir: dir.to_string_lossy().into_owned(),
                        status: RunStatus::Completed,
                        error: None,
                        final_score: m.final_score,
                    },
                    Err(e) => {
                        log::warn!("seed {} failed: {e}", job.seed);
                        SweepEntry {
                            seed: job.seed,
                            run_dir: dir.to_string_lossy().into_owned(),
                            status: RunStatus::Failed,
                            error: Some(format!("{}: {e}", e.code())),
                            final_score: None,
                        }
                    }
                };
                results.lock().expect("sweep results")[i] = Some(entry);
            });
        }
    });
    let runs: Vec<SweepEntry> = results
        .into_inner()
        .expect("sweep results")
        .into_iter()
        .map(|e| e.expect("every job ran"))
        .collect();
    let algorithm = cfg.explorer.name().to_string();
    let task = task_name(cfg);
    let mut table = ScoreTable::new();
    for r in &runs {
        if let Some(s) = r.final_score {
            table.insert(&algorithm, &task, r.seed, s);
        }
    }
    let scores = root.join("scores.csv");
    table.write_csv(&scores)?;
    let manifest = SweepManifest {
        code_version: CODE_VERSION.into(),
        algorithm,
        task,
        runs,
        scores_csv: "scores.csv".into(),
    };
    write_atomic(&root.join("sweep.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}

/// Latest checkpoint listed in a run's manifest.
pub fn latest_checkpoint(run_dir: &Path) -> Result<PathBuf> {
    let m = RunManifest::load(run_dir)?;
    m.checkpoints
        .last()
        .map(|c| run_dir.join(c))
        .ok_or_else(|| Error::Checkpoint(format!("{} lists no checkpoints", run_dir.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub checkpoint: String,
    pub episodes: usize,
    pub mean_return: f64,
    pub z_ids: usize,
    pub unique_cells: usize,
    pub rooms_visited: usize,
}

/// Rolls out a checkpoint of `run_dir` and writes `eval/trajectories.csv`,
/// `eval/visitation.csv`, `eval/heatmap.pgm` and `eval/summary.json`.
pub fn cmd_eval(run_dir: &Path, checkpoint: Option<&Path>, opts: &EvalOptions) -> Result<EvalSummary> {
    let cfg = RunConfig::load(&run_dir.join("config.json"), &[])?;
    let ck_path = match checkpoint {
        Some(p) => p.to_path_buf(),
        None => latest_checkpoint(run_dir)?,
    };
    let ck = Checkpoint::load(&ck_path)?;
    let (agent, explorer) = restore(&cfg, &ck)?;
    let res = evaluate(&cfg, &agent, &explorer, opts)?;
    let out = run_dir.join("eval");
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    res.trajectories.write_csv(&out.join("trajectories.csv"))?;
    emit_heatmap(&res.visitation, &out.join("visitation.csv"), &out.join("heatmap.pgm"))?;
    let cov = res.visitation.coverage(&crate::envs::GridLayout::canonical());
    let summary = EvalSummary {
        checkpoint: ck_path.to_string_lossy().into_owned(),
        episodes: res.returns.len(),
        mean_return: res.returns.iter().sum::<f64>() / res.returns.len() as f64,
        z_ids: res.trajectories.z_ids().len(),
        unique_cells: cov.unique_cells,
        rooms_visited: cov.rooms_visited(),
    };
    write_atomic(&out.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    /// Interquartile mean of one algorithm's pooled runs.
    Iqm,
    Mean,
    Median,
    /// Probability that the first algorithm outperforms the second.
    Poi,
}

impl std::str::FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "iqm" => Statistic::Iqm,
            "mean" => Statistic::Mean,
            "median" => Statistic::Median,
            "poi" => Statistic::Poi,
            _ => return Err(Error::Usage(format!("unknown statistic {s:?} (iqm, mean, median, poi)"))),
        })
    }
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Iqm => "iqm",
            Statistic::Mean => "mean",
            Statistic::Median => "median",
            Statistic::Poi => "poi",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AggregateRequest {
    pub score_csvs: Vec<PathBuf>,
    pub baseline_csv: Option<PathBuf>,
    pub statistic: Statistic,
    pub algorithm: String,
    /// Second algorithm for `poi`.
    pub versus: Option<String>,
    pub resamples: usize,
    pub confidence: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub statistic: String,
    pub algorithm: String,
    pub versus: Option<String>,
    pub point: f64,
    pub low: f64,
    pub high: f64,
    pub resamples: usize,
    pub confidence: f64,
    pub seed: u64,
}

pub fn cmd_aggregate(req: &AggregateRequest) -> Result<AggregateReport> {
    if req.score_csvs.is_empty() {
        return Err(Error::Usage("aggregate needs at least one score CSV".into()));
    }
    let mut table = ScoreTable::new();
    for p in &req.score_csvs {
        table.merge(&ScoreTable::read_csv(p)?);
    }
    if let Some(b) = &req.baseline_csv {
        table = table.normalized(&read_baselines(b)?)?;
    }
    let alg = req.algorithm.clone();
    let versus = req.versus.clone();
    let stat = req.statistic;
    if stat == Statistic::Poi && versus.is_none() {
        return Err(Error::Usage("poi needs a second algorithm".into()));
    }
    let f = move |t: &ScoreTable| -> Result<f64> {
        match stat {
            Statistic::Iqm => iqm_pooled(t, &alg),
            Statistic::Mean => {
                let v = t.pooled(&alg)?;
                Ok(v.iter().sum::<f64>() / v.len() as f64)
            }
            Statistic::Median => {
                let mut v = t.pooled(&alg)?;
                v.sort_by(f64::total_cmp);
                Ok(crate::metrics::scores::quantile(&v, 0.5))
            }
            Statistic::Poi => probability_of_improvement(t, &alg, versus.as_deref().unwrap_or_default()),
        }
    };
    let mut rng = stream(req.seed, Stream::Bootstrap);
    let Interval { point, low, high } = bootstrap_ci(&table, f, req.resamples, req.confidence, &mut rng)?;
    Ok(AggregateReport {
        statistic: req.statistic.name().into(),
        algorithm: req.algorithm.clone(),
        versus: req.versus.clone(),
        point,
        low,
        high,
        resamples: req.resamples,
        confidence: req.confidence,
        seed: req.seed,
    })
}
