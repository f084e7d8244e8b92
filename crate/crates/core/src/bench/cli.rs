//! Subcommand runners: each reads an [`ExperimentConfig`], runs every seed
//! and writes CSV (and SVG) files into the output directory.
//!
//! CSV schemas are fixed per experiment kind. Wall-clock times go to a
//! separate `timing.csv` so that every other file is a pure function of the
//! config and seeds.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, ModelKind, ModelSource};
use super::data::{gen_random_dataset, pretrain_ebm, pretrain_ff};
use super::eval::{run_episode, Agent};
use super::experiments::{
    online_train_ff, pretrain_pair, run_ablation, run_diversity, run_explore, run_obstacle_gen, ExplorePolicy,
};
use super::heatmap::{energy_heatmap, heatmap_svg, matrix_csv, visitation_map};
use crate::baselines::ActionFfModel;
use crate::ebm::EnergyModel;
use crate::envs::{Env, OccupancyGrid};
use crate::error::{Error, Result};
use crate::nn::checkpoint;
use crate::trainer::{online_train, StepMetrics};
use crate::{seeded_rng, Rng};

#[derive(Debug, Serialize)]
pub struct PretrainRow {
    pub seed: u64,
    pub step: usize,
    pub loss: f64,
}

#[derive(Debug, Serialize)]
pub struct ScoreRow {
    pub seed: u64,
    pub score: f64,
}

/// Per-step online training record.
#[derive(Debug, Serialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub step: usize,
    pub episode: usize,
    pub score: f64,
    pub loss: f64,
    pub occupancy: usize,
}

#[derive(Debug, Serialize)]
pub struct EpisodeRow {
    pub seed: u64,
    pub episode: usize,
    pub score: f64,
}

#[derive(Debug, Serialize)]
pub struct ExploreRow {
    pub seed: u64,
    pub policy: &'static str,
    pub step: usize,
    pub occupancy: usize,
}

#[derive(Debug, Serialize)]
pub struct ObstacleRow {
    pub seed: u64,
    pub model: &'static str,
    pub obstacle: bool,
    pub score: f64,
}

#[derive(Debug, Serialize)]
pub struct AblationRow {
    pub seed: u64,
    pub model: &'static str,
    pub mode: &'static str,
    pub score: f64,
}

#[derive(Debug, Serialize)]
pub struct DiversityRow {
    pub seed: u64,
    pub horizon: usize,
    pub spread: f64,
}

#[derive(Debug, Serialize)]
pub struct TimingRow {
    pub seed: u64,
    pub seconds: f64,
}

/// Writes `rows` (with header) to `dir/name` through a temporary file.
pub fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<PathBuf> {
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, &path)?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, text)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

fn load_checkpoint(cfg: &ExperimentConfig) -> Result<crate::nn::Mlp> {
    let path =
        cfg.checkpoint.as_ref().ok_or_else(|| Error::Config("this experiment needs `checkpoint` to be set".into()))?;
    checkpoint::load(path)
}

fn ebm_from_source(
    cfg: &ExperimentConfig,
    env: &Env,
    source: ModelSource,
    rng: &mut Rng,
) -> Result<(EnergyModel, Vec<Vec<f64>>)> {
    match source {
        ModelSource::Checkpoint => Ok((EnergyModel::new(load_checkpoint(cfg)?, env.state_dim())?, Vec::new())),
        ModelSource::Pretrain => {
            let data = gen_random_dataset(env, cfg.pretrain.dataset_size, cfg.pretrain.reset_every, rng)?;
            let mut model = EnergyModel::random(env.state_dim(), &cfg.pretrain.model, rng);
            pretrain_ebm(&mut model, env, &data, &cfg.pretrain, rng)?;
            Ok((model, Vec::new()))
        }
        ModelSource::Explore => {
            let mut online = cfg.online.clone();
            online.env_step_budget = cfg.explore.budget;
            online.episode_length = cfg.explore.budget;
            online.planner.score_mode = crate::mppi::ScoreMode::PriorOnly;
            let run = online_train(env, &cfg.env.start, None, &online, rng)?;
            Ok((run.model, run.visited))
        }
    }
}

fn metrics_rows(
    seed: u64,
    env: &Env,
    metrics: &[StepMetrics],
    visited: &[Vec<f64>],
    cell_size: f64,
) -> Vec<MetricsRow> {
    // visited holds one entry per transition plus the start and one per reset
    let mut grid = OccupancyGrid::new(cell_size);
    let mut it = visited.iter();
    let mut taken = 0usize;
    if let Some(s) = it.next() {
        grid.visit(env.occupancy_coords(s));
    }
    let mut rows = Vec::with_capacity(metrics.len());
    for m in metrics {
        let mut steps = m.env_steps - taken;
        while steps > 0 {
            let Some(s) = it.next() else { break };
            grid.visit(env.occupancy_coords(s));
            steps -= 1;
        }
        taken = m.env_steps;
        if m.episode_done {
            // the reset entry
            it.next();
        }
        rows.push(MetricsRow {
            seed,
            step: m.env_steps,
            episode: m.episode,
            score: m.episode_score,
            loss: m.loss,
            occupancy: grid.count(),
        });
    }
    rows
}

/// Runs one experiment kind over every seed of `cfg`. Returns the files
/// written.
pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig, quiet: bool) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    cfg.check_kind(kind)?;
    let env = cfg.env.build()?;
    let out = cfg.out.as_path();
    fs::create_dir_all(out)?;
    let say = |msg: String| {
        if !quiet {
            println!("{msg}");
        }
    };
    let start = cfg.env.start.as_slice();
    let goal = cfg.env.goal.as_slice();
    let mut files = Vec::new();
    let mut timing = Vec::new();

    match kind {
        ExperimentKind::Pretrain => {
            let (mut losses, mut scores) = (Vec::new(), Vec::new());
            for &seed in &cfg.seeds {
                let t = Instant::now();
                let mut rng = seeded_rng(seed);
                let data = gen_random_dataset(&env, cfg.pretrain.dataset_size, cfg.pretrain.reset_every, &mut rng)?;
                let (loss, score, net) = match cfg.model {
                    ModelKind::Ebm => {
                        let mut m = EnergyModel::random(env.state_dim(), &cfg.pretrain.model, &mut rng);
                        let loss = pretrain_ebm(&mut m, &env, &data, &cfg.pretrain, &mut rng)?;
                        let agent = Agent::ebm(&m, &cfg.eval.planner)?;
                        let score = super::eval::run_eval(
                            &agent,
                            &env,
                            start,
                            goal,
                            cfg.eval.episode_length,
                            cfg.eval.episodes,
                            &mut rng,
                        )?;
                        (loss, score, m.into_net())
                    }
                    ModelKind::ActionFf => {
                        let mut m =
                            ActionFfModel::random(env.state_dim(), env.action_dim(), &cfg.pretrain.model, &mut rng);
                        let loss = pretrain_ff(&mut m, &data, &cfg.pretrain, &mut rng)?;
                        let agent = Agent::ff(&m, &cfg.eval.planner)?;
                        let score = super::eval::run_eval(
                            &agent,
                            &env,
                            start,
                            goal,
                            cfg.eval.episode_length,
                            cfg.eval.episodes,
                            &mut rng,
                        )?;
                        (loss, score, m.into_net())
                    }
                };
                let ckpt = out.join(format!("{}-seed{seed}.ckpt", cfg.model.name()));
                checkpoint::save(&net, &ckpt)?;
                files.push(ckpt);
                say(format!(
                    "seed {seed}: final loss {:.5}, eval score {score:.3}",
                    loss.last().copied().unwrap_or(f64::NAN)
                ));
                losses.extend(loss.into_iter().enumerate().map(|(step, loss)| PretrainRow { seed, step, loss }));
                scores.push(ScoreRow { seed, score });
                timing.push(TimingRow { seed, seconds: t.elapsed().as_secs_f64() });
            }
            files.push(write_csv(out, "pretrain.csv", &losses)?);
            files.push(write_csv(out, "pretrain-eval.csv", &scores)?);
        }
        ExperimentKind::Online => {
            let (mut rows, mut episodes) = (Vec::new(), Vec::new());
            for &seed in &cfg.seeds {
                let t = Instant::now();
                let mut rng = seeded_rng(seed);
                let (net, scores, metrics, visited) = match cfg.model {
                    ModelKind::Ebm => {
                        let r = online_train(&env, start, Some(goal), &cfg.online, &mut rng)?;
                        (r.model.into_net(), r.episode_scores, r.metrics, r.visited)
                    }
                    ModelKind::ActionFf => {
                        let r = online_train_ff(&env, start, goal, &cfg.online, &mut rng)?;
                        (r.model.into_net(), r.episode_scores, r.metrics, r.visited)
                    }
                };
                let ckpt = out.join(format!("{}-seed{seed}.ckpt", cfg.model.name()));
                checkpoint::save(&net, &ckpt)?;
                files.push(ckpt);
                if let Some((first, last)) = super::experiments::quartile_means(&scores) {
                    say(format!(
                        "seed {seed}: {} episodes, first quartile {first:.3}, last quartile {last:.3}",
                        scores.len()
                    ));
                }
                rows.extend(metrics_rows(seed, &env, &metrics, &visited, cfg.explore.cell_size));
                episodes.extend(scores.into_iter().enumerate().map(|(episode, score)| EpisodeRow {
                    seed,
                    episode,
                    score,
                }));
                timing.push(TimingRow { seed, seconds: t.elapsed().as_secs_f64() });
            }
            files.push(write_csv(out, "metrics.csv", &rows)?);
            files.push(write_csv(out, "episodes.csv", &episodes)?);
        }
        ExperimentKind::Eval => {
            let net = load_checkpoint(cfg)?;
            let ebm;
            let ff;
            let agent = match cfg.model {
                ModelKind::Ebm => {
                    ebm = EnergyModel::new(net, env.state_dim())?;
                    Agent::ebm(&ebm, &cfg.eval.planner)?
                }
                ModelKind::ActionFf => {
                    ff = ActionFfModel::new(net, env.state_dim(), env.action_dim())?;
                    Agent::ff(&ff, &cfg.eval.planner)?
                }
            };
            let mut rows = Vec::new();
            for &seed in &cfg.seeds {
                let t = Instant::now();
                let mut rng = seeded_rng(seed);
                let mut total = 0.0;
                for episode in 0..cfg.eval.episodes {
                    let (score, _) = run_episode(&env, start, goal, cfg.eval.episode_length, |s| {
                        agent.act(&env, s, goal, &mut rng)
                    })?;
                    total += score;
                    rows.push(EpisodeRow { seed, episode, score });
                }
                say(format!("seed {seed}: mean score {:.3}", total / cfg.eval.episodes as f64));
                timing.push(TimingRow { seed, seconds: t.elapsed().as_secs_f64() });
            }
            files.push(write_csv(out, "eval.csv", &rows)?);
        }
        ExperimentKind::Explore => {
            let mut rows = Vec::new();
            for &seed in &cfg.seeds {
                let t = Instant::now();
                let mut finals = Vec::new();
                for policy in [ExplorePolicy::EbmPrior, ExplorePolicy::Random] {
                    let mut rng = seeded_rng(seed);
                    let (series, _) = run_explore(
                        policy,
                        &env,
                        start,
                        cfg.explore.budget,
                        cfg.explore.cell_size,
                        &cfg.online,
                        &mut rng,
                    )?;
                    finals.push(*series.last().expect("budget >= 1"));
                    rows.extend(series.into_iter().enumerate().map(|(i, occupancy)| ExploreRow {
                        seed,
                        policy: policy.name(),
                        step: i + 1,
                        occupancy,
                    }));
                }
                say(format!("seed {seed}: occupancy ebm-prior {} random {}", finals[0], finals[1]));
                timing.push(TimingRow { seed, seconds: t.elapsed().as_secs_f64() });
            }
            files.push(write_csv(out, "explore.csv", &rows)?);
        }
        ExperimentKind::ObstacleGen => {
            if !matches!(env, Env::Particle) {
                return Err(Error::Config(
                    "obstacle-gen trains on the open particle map; set env.kind = \"particle\"".into(),
                ));
            }
            let mut rows = Vec::new();
            for &seed in &cfg.seeds {
                let t = Instant::now();
                let mut rng = seeded_rng(seed);
                let (ebm, ff) = pretrain_pair(&env, &cfg.pretrain, &mut rng)?;
                let s = run_obstacle_gen(&ebm, &ff, cfg.obstacle.half_width, start, goal, &cfg.eval, &mut rng)?;
                say(format!(
                    "seed {seed}: obstacle ebm {:.3} ff {:.3}; open ebm {:.3} ff {:.3}",
                    s.ebm, s.ff, s.ebm_open, s.ff_open
                ));
                for (model, obstacle, score) in [
                    ("ebm", true, s.ebm),
                    ("action-ff", true, s.ff),
                    ("ebm", false, s.ebm_open),
                    ("action-ff", false, s.ff_open),
                ] {
                    rows.push(ObstacleRow { seed, model, obstacle, score });
                }
                timing.push(TimingRow { seed, seconds: t.elapsed().as_secs_f64() });
            }
            files.push(write_csv(out, "obstacle.csv", &rows)?);
        }
        ExperimentKind::CorrelatedAblation => {
            let mut rows = Vec::new();
            for &seed in &cfg.seeds {
                let t = Instant::now();
                let mut rng = seeded_rng(seed);
                let s = run_ablation(&env, &cfg.pretrain, start, goal, &cfg.eval, &mut rng)?;
                let (de, df) = s.drops();
                say(format!("seed {seed}: sequential drop ebm {de:.3} action-ff {df:.3}"));
                for (model, mode, score) in [
                    ("ebm", "shuffled", s.ebm_shuffled),
                    ("ebm", "sequential-repeated", s.ebm_sequential),
                    ("action-ff", "shuffled", s.ff_shuffled),
                    ("action-ff", "sequential-repeated", s.ff_sequential),
                ] {
                    rows.push(AblationRow { seed, model, mode, score });
                }
                timing.push(TimingRow { seed, seconds: t.elapsed().as_secs_f64() });
            }
            files.push(write_csv(out, "ablation.csv", &rows)?);
        }
        ExperimentKind::Diversity => {
            let mut rows = Vec::new();
            for &seed in &cfg.seeds {
                let t = Instant::now();
                let mut rng = seeded_rng(seed);
                let (model, _) = ebm_from_source(cfg, &env, cfg.diversity_source, &mut rng)?;
                let spreads = run_diversity(
                    &model,
                    start,
                    goal,
                    &cfg.diversity.horizons,
                    cfg.diversity.trials,
                    &cfg.eval.planner,
                    &mut rng,
                )?;
                say(format!("seed {seed}: spreads {spreads:?}"));
                rows.extend(cfg.diversity.horizons.iter().zip(spreads).map(|(&horizon, spread)| DiversityRow {
                    seed,
                    horizon,
                    spread,
                }));
                timing.push(TimingRow { seed, seconds: t.elapsed().as_secs_f64() });
            }
            files.push(write_csv(out, "diversity.csv", &rows)?);
        }
        ExperimentKind::Heatmap => {
            for &seed in &cfg.seeds {
                let t = Instant::now();
                let mut rng = seeded_rng(seed);
                let (model, visited) = ebm_from_source(cfg, &env, cfg.heatmap.source, &mut rng)?;
                let m = energy_heatmap(&model, cfg.heatmap.resolution, cfg.heatmap.displacement)?;
                files.push(write_text(out, &format!("energy-seed{seed}.csv"), &matrix_csv(&m))?);
                files.push(write_text(out, &format!("energy-seed{seed}.svg"), &heatmap_svg(&m, "energy"))?);
                if !visited.is_empty() {
                    let pts: Vec<[f64; 2]> = visited.iter().map(|s| env.occupancy_coords(s)).collect();
                    let v = visitation_map(&pts, cfg.heatmap.resolution);
                    files.push(write_text(out, &format!("visits-seed{seed}.csv"), &matrix_csv(&v))?);
                    files.push(write_text(out, &format!("visits-seed{seed}.svg"), &heatmap_svg(&v, "visits"))?);
                }
                say(format!("seed {seed}: {}x{} heatmap", cfg.heatmap.resolution, cfg.heatmap.resolution));
                timing.push(TimingRow { seed, seconds: t.elapsed().as_secs_f64() });
            }
        }
    }
    files.push(write_csv(out, "timing.csv", &timing)?);
    Ok(files)
}
