//! Multi-seed runs and their files: config echo, JSONL metrics, CSV
//! summaries, evaluation reports, checkpoints, and comparison tables.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Baseline, RunConfig};
use super::eval::{evaluate, mean_se, run_baseline, EvalReport};
use super::rollout::Policy;
use super::run::{IterationMetrics, Trainer};
use crate::error::{Error, Result};

pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const EVALUATION_FILE: &str = "evaluation.json";
pub const COMPARE_FILE: &str = "compare.csv";
pub const COMPARE_BY_K_FILE: &str = "compare_by_k.csv";
pub const COMPARE_EPISODES_FILE: &str = "compare_episodes.csv";

pub fn metrics_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("metrics-seed-{seed}.jsonl"))
}

pub fn checkpoint_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("checkpoint-seed-{seed}.json"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    config_hash: String,
    config: &'a RunConfig,
}

pub fn write_config(out: &Path, cfg: &RunConfig) -> Result<()> {
    let echo = ConfigEcho { config_hash: cfg.hash(), config: cfg };
    let mut f = BufWriter::new(fs::File::create(out.join(CONFIG_FILE))?);
    serde_json::to_writer_pretty(&mut f, &echo)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// First iteration at which the 20-iteration moving average of reward moved
/// by less than 1% over the preceding 20 iterations.
pub fn convergence_iteration(rewards: &[f64]) -> Option<usize> {
    const W: usize = 20;
    let ma = |end: usize| rewards[end - W..end].iter().sum::<f64>() / W as f64;
    (2 * W..=rewards.len()).find_map(|end| {
        let (prev, cur) = (ma(end - W), ma(end));
        ((cur - prev).abs() < 0.01 * prev.abs()).then_some(end)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub config_hash: String,
    pub seed: u64,
    pub policy: Baseline,
    pub num_mlus: usize,
    pub iterations: usize,
    pub converged_iteration: Option<usize>,
    pub eval_episodes: usize,
    pub latency_mean: f64,
    pub latency_se: f64,
    pub reward_mean: f64,
    pub accuracy_mean: f64,
    pub accuracy_se: f64,
    pub hallucination_mean: f64,
    pub hallucination_se: f64,
    pub energy_mean: f64,
    pub alpha_mean: f64,
    pub accuracy_satisfied: f64,
    pub hallucination_satisfied: f64,
    pub both_satisfied: f64,
    pub energy_violation_rate: f64,
}

impl SummaryRow {
    fn new(hash: &str, num_mlus: usize, iterations: usize, converged: Option<usize>, r: &EvalReport) -> Self {
        Self {
            config_hash: hash.to_string(),
            seed: r.seed,
            policy: r.policy,
            num_mlus,
            iterations,
            converged_iteration: converged,
            eval_episodes: r.episodes,
            latency_mean: r.latency_mean,
            latency_se: r.latency_se,
            reward_mean: r.reward_mean,
            accuracy_mean: r.accuracy_mean,
            accuracy_se: r.accuracy_se,
            hallucination_mean: r.hallucination_mean,
            hallucination_se: r.hallucination_se,
            energy_mean: r.energy_mean,
            alpha_mean: r.alpha_mean,
            accuracy_satisfied: r.accuracy_satisfied,
            hallucination_satisfied: r.hallucination_satisfied,
            both_satisfied: r.both_satisfied,
            energy_violation_rate: r.energy_violation_rate,
        }
    }
}

/// Result of training (or evaluating) one seed.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    /// Rows produced by this invocation.
    pub metrics: Vec<IterationMetrics>,
    pub trainer: Option<Trainer>,
    pub eval: EvalReport,
}

/// Trains one seed for the configured iterations, optionally continuing a
/// checkpoint, then evaluates the mean policy.
///
/// `on_checkpoint` is called at every checkpoint interval and at the end.
pub fn train_seed(
    cfg: &RunConfig,
    seed: u64,
    resume_from: Option<Trainer>,
    mut on_checkpoint: impl FnMut(&Trainer) -> Result<()>,
) -> Result<SeedRun> {
    let params = cfg.system_config().resolve()?;
    if !cfg.baseline.is_learned() {
        let eval = run_baseline(cfg.baseline, &params, seed, cfg.eval_episodes)?;
        return Ok(SeedRun { seed, metrics: Vec::new(), trainer: None, eval });
    }
    let mut trainer = match resume_from {
        Some(mut t) => {
            if t.config_hash != cfg.hash() || t.seed != seed {
                return Err(Error::Checkpoint(format!(
                    "checkpoint for seed {} and config {} does not match this run",
                    t.seed, t.config_hash
                )));
            }
            t.config.iterations = cfg.iterations;
            t
        }
        None => Trainer::new(cfg, seed)?,
    };
    let mut metrics = Vec::new();
    while trainer.iteration < cfg.iterations {
        metrics.push(trainer.train_iteration()?);
        if cfg.checkpoint_interval > 0 && trainer.iteration % cfg.checkpoint_interval == 0 {
            on_checkpoint(&trainer)?;
        }
    }
    on_checkpoint(&trainer)?;
    let eval = evaluate(Policy::Mean(&trainer.agent.actor), cfg.baseline, &params, seed, cfg.eval_episodes)?;
    Ok(SeedRun { seed, metrics, trainer: Some(trainer), eval })
}

/// Runs `f` over `seeds` with up to `parallel` worker threads, keeping input order.
pub fn map_seeds<T: Send>(seeds: &[u64], parallel: usize, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let parallel = parallel.max(1);
    let mut out = Vec::with_capacity(seeds.len());
    for group in seeds.chunks(parallel) {
        if group.len() == 1 {
            out.push(f(group[0])?);
            continue;
        }
        let results: Vec<Result<T>> = std::thread::scope(|s| {
            let handles: Vec<_> = group.iter().map(|&seed| {
                let f = &f;
                s.spawn(move || f(seed))
            }).collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::InvalidArgument("worker thread panicked".into()))))
                .collect()
        });
        for r in results {
            out.push(r?);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct EvaluationFile<'a> {
    config_hash: String,
    reports: Vec<&'a EvalReport>,
}

fn write_evaluation(out: &Path, hash: &str, reports: Vec<&EvalReport>) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(out.join(EVALUATION_FILE))?);
    serde_json::to_writer(&mut f, &EvaluationFile { config_hash: hash.to_string(), reports })?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn append_metrics(path: &Path, rows: &[IterationMetrics], append: bool) -> Result<()> {
    let file = fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(append)
        .truncate(!append)
        .open(path)?;
    let mut w = BufWriter::new(file);
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Trains every seed of `cfg` and writes the run directory.
///
/// With `resume`, seeds that have a checkpoint in `out` continue from it and
/// their metrics files are appended to.
pub fn train_run(cfg: &RunConfig, out: &Path, parallel: usize, resume: bool) -> Result<Vec<SeedRun>> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let hash = cfg.hash();
    let runs = map_seeds(&cfg.seeds, parallel, |seed| {
        let ckpt = checkpoint_path(out, seed);
        let prior = if resume && ckpt.exists() { Some(Trainer::load(&ckpt)?) } else { None };
        let resumed = prior.is_some();
        let run = train_seed(cfg, seed, prior, |t| t.save(&ckpt))?;
        if cfg.baseline.is_learned() {
            append_metrics(&metrics_path(out, seed), &run.metrics, resumed)?;
        }
        Ok(run)
    })?;
    write_config(out, cfg)?;
    let k = cfg.system_config().num_mlus;
    let rows: Vec<SummaryRow> = runs
        .iter()
        .map(|r| {
            let (iters, conv) = match &r.trainer {
                Some(t) => (t.iteration, convergence_iteration(&t.reward_history)),
                None => (0, None),
            };
            SummaryRow::new(&hash, k, iters, conv, &r.eval)
        })
        .collect();
    write_csv(&out.join(SUMMARY_FILE), &rows)?;
    write_evaluation(out, &hash, runs.iter().map(|r| &r.eval).collect())?;
    Ok(runs)
}

/// Evaluates a checkpoint's mean policy on its own configuration.
pub fn evaluate_checkpoint(path: &Path, episodes: Option<usize>, seed: Option<u64>) -> Result<EvalReport> {
    let t = Trainer::load(path)?;
    let params = t.config.system_config().resolve()?;
    evaluate(
        Policy::Mean(&t.agent.actor),
        t.config.baseline,
        &params,
        seed.unwrap_or(t.seed),
        episodes.unwrap_or(t.config.eval_episodes),
    )
}

/// One `(K, policy, seed)` cell of a comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub config_hash: String,
    pub num_mlus: usize,
    pub seed: u64,
    pub policy: Baseline,
    pub iterations: usize,
    pub latency_mean: f64,
    pub latency_se: f64,
    pub reward_mean: f64,
    pub accuracy_mean: f64,
    pub accuracy_se: f64,
    pub hallucination_mean: f64,
    pub hallucination_se: f64,
    pub energy_mean: f64,
    pub alpha_mean: f64,
    pub both_satisfied: f64,
}

/// Seed-averaged cell per `(K, policy)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareByK {
    pub config_hash: String,
    pub num_mlus: usize,
    pub policy: Baseline,
    /// Seeds averaged over, `;`-separated.
    pub seeds: String,
    pub latency_mean: f64,
    pub latency_se_across_seeds: f64,
    pub accuracy_mean: f64,
    pub hallucination_mean: f64,
    pub reward_mean: f64,
    /// `1 − latency / latency(ppo)`; empty for the PPO row itself.
    pub latency_reduction_vs_ppo: Option<f64>,
}

/// Accuracy and hallucination per training episode (learned policies) or
/// evaluation episode (static policies).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeRow {
    pub config_hash: String,
    pub num_mlus: usize,
    pub seed: u64,
    pub policy: Baseline,
    pub episode: usize,
    pub reward: f64,
    pub latency: f64,
    pub accuracy: f64,
    pub hallucination: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
    pub by_k: Vec<CompareByK>,
    pub episodes: Vec<EpisodeRow>,
}

/// Runs all four policies for every `K` in `ks` on the seeds of `cfg`.
pub fn compare(cfg: &RunConfig, ks: &[usize], parallel: usize) -> Result<Comparison> {
    let hash = cfg.hash();
    let mut cmp = Comparison::default();
    for &k in ks {
        let mut latency_by_policy = Vec::new();
        for policy in Baseline::ALL {
            let mut c = cfg.clone();
            c.baseline = policy;
            c.system.num_mlus = k;
            c.system.devices.clear();
            c.validate()?;
            let runs = map_seeds(&c.seeds, parallel, |seed| train_seed(&c, seed, None, |_| Ok(())))?;
            for r in &runs {
                let e = &r.eval;
                cmp.rows.push(CompareRow {
                    config_hash: hash.clone(),
                    num_mlus: k,
                    seed: r.seed,
                    policy,
                    iterations: r.metrics.len(),
                    latency_mean: e.latency_mean,
                    latency_se: e.latency_se,
                    reward_mean: e.reward_mean,
                    accuracy_mean: e.accuracy_mean,
                    accuracy_se: e.accuracy_se,
                    hallucination_mean: e.hallucination_mean,
                    hallucination_se: e.hallucination_se,
                    energy_mean: e.energy_mean,
                    alpha_mean: e.alpha_mean,
                    both_satisfied: e.both_satisfied,
                });
                if r.metrics.is_empty() {
                    for (i, ep) in e.per_episode.iter().enumerate() {
                        cmp.episodes.push(EpisodeRow {
                            config_hash: hash.clone(),
                            num_mlus: k,
                            seed: r.seed,
                            policy,
                            episode: i + 1,
                            reward: ep.reward,
                            latency: ep.latency,
                            accuracy: ep.accuracy,
                            hallucination: ep.hallucination,
                        });
                    }
                } else {
                    for m in &r.metrics {
                        cmp.episodes.push(EpisodeRow {
                            config_hash: hash.clone(),
                            num_mlus: k,
                            seed: r.seed,
                            policy,
                            episode: m.iteration,
                            reward: m.reward_mean,
                            latency: m.latency_mean,
                            accuracy: m.accuracy_mean,
                            hallucination: m.hallucination_mean,
                        });
                    }
                }
            }
            let col = |f: fn(&EvalReport) -> f64| runs.iter().map(|r| f(&r.eval)).collect::<Vec<_>>();
            let (lat, lat_se) = mean_se(&col(|e| e.latency_mean));
            latency_by_policy.push((policy, lat));
            cmp.by_k.push(CompareByK {
                config_hash: hash.clone(),
                num_mlus: k,
                policy,
                seeds: c.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"),
                latency_mean: lat,
                latency_se_across_seeds: lat_se,
                accuracy_mean: mean_se(&col(|e| e.accuracy_mean)).0,
                hallucination_mean: mean_se(&col(|e| e.hallucination_mean)).0,
                reward_mean: mean_se(&col(|e| e.reward_mean)).0,
                latency_reduction_vs_ppo: None,
            });
        }
        let ppo_lat = latency_by_policy.iter().find(|(p, _)| *p == Baseline::Ppo).map(|x| x.1);
        let start = cmp.by_k.len() - Baseline::ALL.len();
        for row in &mut cmp.by_k[start..] {
            if row.policy != Baseline::Ppo {
                row.latency_reduction_vs_ppo = ppo_lat.map(|p| 1.0 - row.latency_mean / p);
            }
        }
    }
    Ok(cmp)
}

/// Writes the three comparison tables and the config echo.
pub fn write_comparison(out: &Path, cfg: &RunConfig, cmp: &Comparison) -> Result<()> {
    fs::create_dir_all(out)?;
    write_config(out, cfg)?;
    write_csv(&out.join(COMPARE_FILE), &cmp.rows)?;
    write_csv(&out.join(COMPARE_BY_K_FILE), &cmp.by_k)?;
    write_csv(&out.join(COMPARE_EPISODES_FILE), &cmp.episodes)?;
    Ok(())
}
