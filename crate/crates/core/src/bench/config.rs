//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::data::PretrainConfig;
use crate::envs::{Env, EnvKind, MazeLayout, ReacherParams};
use crate::error::{Error, Result};
use crate::mppi::PlannerConfig;
use crate::trainer::OnlineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Pretrain,
    Online,
    Eval,
    Explore,
    ObstacleGen,
    CorrelatedAblation,
    Diversity,
    Heatmap,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Pretrain => "pretrain",
            ExperimentKind::Online => "online",
            ExperimentKind::Eval => "eval",
            ExperimentKind::Explore => "explore",
            ExperimentKind::ObstacleGen => "obstacle-gen",
            ExperimentKind::CorrelatedAblation => "correlated-ablation",
            ExperimentKind::Diversity => "diversity",
            ExperimentKind::Heatmap => "heatmap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Ebm,
    ActionFf,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ebm => "ebm",
            ModelKind::ActionFf => "action-ff",
        }
    }
}

/// Environment, start state and goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: EnvKind,
    /// Maze walls; the S-corridor layout when absent.
    pub maze: Option<MazeLayout>,
    pub reacher: ReacherParams,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            kind: EnvKind::Particle,
            maze: None,
            reacher: ReacherParams::default(),
            start: vec![-0.5, -0.5],
            goal: vec![0.5, 0.5],
        }
    }
}

impl EnvConfig {
    pub fn build(&self) -> Result<Env> {
        let env = match self.kind {
            EnvKind::Particle => Env::Particle,
            EnvKind::Maze => Env::Maze(self.maze.clone().unwrap_or_else(MazeLayout::s_corridor)),
            EnvKind::Reacher => Env::Reacher(self.reacher),
        };
        let d = env.state_dim();
        if self.start.len() != d || self.goal.len() != d {
            return Err(Error::Config(format!("start and goal must have {d} entries for {:?}", self.kind)));
        }
        if !env.is_admissible(&self.start) {
            return Err(Error::Config(format!("start {:?} is not admissible", self.start)));
        }
        Ok(env)
    }
}

/// Fixed-length evaluation episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub episodes: usize,
    pub episode_length: usize,
    pub planner: PlannerConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { episodes: 3, episode_length: 50, planner: PlannerConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExploreConfig {
    pub budget: usize,
    pub cell_size: f64,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        Self { budget: 2_000, cell_size: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiversityConfig {
    pub horizons: Vec<usize>,
    pub trials: usize,
}

impl Default for DiversityConfig {
    fn default() -> Self {
        Self { horizons: vec![10, 20, 40], trials: 32 }
    }
}

/// Where a heatmap or diversity run gets its energy model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelSource {
    /// Offline pretraining on a random-policy dataset.
    Pretrain,
    /// Goal-free online training, as in the explore experiment.
    Explore,
    /// The top-level `checkpoint` file.
    Checkpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeatmapConfig {
    pub resolution: usize,
    /// Displacement of the scored transition `(p, p + displacement)`.
    pub displacement: [f64; 2],
    pub source: ModelSource,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self { resolution: 40, displacement: [0.0, 0.0], source: ModelSource::Explore }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObstacleConfig {
    /// Half width of the square block placed at the origin.
    pub half_width: f64,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        Self { half_width: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// When set, must match the subcommand.
    pub kind: Option<ExperimentKind>,
    pub model: ModelKind,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    /// Model parameters for `eval` and checkpoint-sourced runs.
    pub checkpoint: Option<PathBuf>,
    /// Model source for `diversity`.
    pub diversity_source: ModelSource,
    pub env: EnvConfig,
    pub online: OnlineConfig,
    pub pretrain: PretrainConfig,
    pub eval: EvalConfig,
    pub explore: ExploreConfig,
    pub diversity: DiversityConfig,
    pub heatmap: HeatmapConfig,
    pub obstacle: ObstacleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: None,
            model: ModelKind::Ebm,
            seeds: vec![0],
            out: PathBuf::from("runs"),
            checkpoint: None,
            diversity_source: ModelSource::Pretrain,
            env: EnvConfig::default(),
            online: OnlineConfig::default(),
            pretrain: PretrainConfig::default(),
            eval: EvalConfig::default(),
            explore: ExploreConfig::default(),
            diversity: DiversityConfig::default(),
            heatmap: HeatmapConfig::default(),
            obstacle: ObstacleConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        self.env.build()?;
        self.online.validate()?;
        self.eval.planner.validate()?;
        self.pretrain.negative_planner.validate()?;
        if self.eval.episodes == 0 {
            return Err(Error::Config("eval.episodes must be at least 1".into()));
        }
        if !(self.explore.cell_size > 0.0) {
            return Err(Error::Config("explore.cell_size must be positive".into()));
        }
        if self.diversity.trials < 2 {
            return Err(Error::Config("diversity.trials must be at least 2".into()));
        }
        if self.heatmap.resolution == 0 {
            return Err(Error::Config("heatmap.resolution must be at least 1".into()));
        }
        Ok(())
    }

    /// Rejects a config written for a different experiment.
    pub fn check_kind(&self, kind: ExperimentKind) -> Result<()> {
        match self.kind {
            Some(k) if k != kind => {
                Err(Error::Config(format!("config is for `{}` but `{}` was requested", k.name(), kind.name())))
            }
            _ => Ok(()),
        }
    }
}
