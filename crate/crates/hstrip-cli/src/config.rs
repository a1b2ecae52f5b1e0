//! JSON run configuration.

use std::path::{Path, PathBuf};

use hstrip::graph::{BaseGraph, GraphFile, StripGraph, Weights};
use hstrip::measure::DeformationParams;
use hstrip::par::Execution;
use hstrip::sampler::{Moves, SamplerConfig};
use hstrip::transfer::GridSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Base graph and weights (a `GraphFile`), relative to the config file.
    pub graph: PathBuf,
    pub lo: i32,
    pub hi: i32,
    /// Replaces the weights of the graph file when present.
    #[serde(default)]
    pub weights: Option<WeightsOverride>,
    #[serde(default)]
    pub sampler: SamplerSettings,
    /// Transfer grid; the library default for the weights and `η` if absent.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub deformation: DeformationParams,
    #[serde(default)]
    pub decay: DecaySettings,
    #[serde(default)]
    pub spectrum: SpectrumSettings,
    #[serde(default)]
    pub vrjp: VrjpSettings,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub execution: Execution,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsOverride {
    pub beta_vertical: Vec<f64>,
    pub beta_horizontal: Vec<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSettings {
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
    pub t_step: f64,
    pub chains: usize,
    pub batches: usize,
    pub moves: Moves,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        let d = SamplerConfig::default();
        SamplerSettings {
            burn_in: d.burn_in,
            samples: d.samples,
            thin: d.thin,
            t_step: d.t_step,
            chains: d.chains,
            batches: d.batches,
            moves: d.moves,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecaySettings {
    /// Distances `ℓ` at which `E[e^{(t_ℓ−t₀)/2}]` is estimated.
    pub ls: Vec<i32>,
    /// Second right extent for the slope stability check.
    pub compare_hi: Option<i32>,
}

impl Default for DecaySettings {
    fn default() -> Self {
        DecaySettings { ls: (1..=8).collect(), compare_hi: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSettings {
    /// Window lengths `ℓ` for the transfer-operator energy `E(α)`.
    pub energy_ls: Vec<i32>,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        SpectrumSettings { energy_ls: vec![1, 2, 4] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VrjpSettings {
    /// Clock horizon of the recorded trajectories.
    pub horizon: f64,
    /// Number of recorded trajectories.
    pub runs: usize,
    /// Longest path length in the mixing check.
    pub tmax: usize,
    /// Direct VRJP runs in the mixing check.
    pub mixing_runs: usize,
    /// Extents of the strip for the mixing check.
    pub mixing_lo: i32,
    pub mixing_hi: i32,
    /// Extents of the long strip for localization statistics.
    pub localization_lo: i32,
    pub localization_hi: i32,
    pub localization_steps: usize,
    pub localization_runs: usize,
}

impl Default for VrjpSettings {
    fn default() -> Self {
        VrjpSettings {
            horizon: 100.0,
            runs: 100,
            tmax: 3,
            mixing_runs: 100_000,
            mixing_lo: 0,
            mixing_hi: 0,
            localization_lo: -80,
            localization_hi: 80,
            localization_steps: 100_000,
            localization_runs: 400,
        }
    }
}

/// A parsed config together with its raw bytes and loaded graph.
pub struct Loaded {
    pub config: RunConfig,
    pub raw: Vec<u8>,
    pub base: BaseGraph,
    pub weights: Weights,
}

impl Loaded {
    pub fn strip(&self) -> Result<StripGraph, CliError> {
        self.strip_with(self.config.lo, self.config.hi)
    }

    pub fn strip_with(&self, lo: i32, hi: i32) -> Result<StripGraph, CliError> {
        Ok(StripGraph::new(self.base.clone(), lo, hi, self.weights.clone())?)
    }

    pub fn sampler(&self) -> SamplerConfig {
        let s = &self.config.sampler;
        SamplerConfig {
            seed: self.config.seed,
            burn_in: s.burn_in,
            samples: s.samples,
            thin: s.thin,
            t_step: s.t_step,
            chains: s.chains,
            batches: s.batches,
            moves: s.moves,
            execution: self.config.execution,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.config.grid.unwrap_or_else(|| GridSpec::default_for(&self.weights, self.config.deformation.eta))
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T, CliError> {
    serde_json::from_slice(bytes).map_err(|e| CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
}

pub fn load(path: &Path, seed: Option<u64>) -> Result<Loaded, CliError> {
    let raw = read(path)?;
    let mut config: RunConfig = parse(path, &raw)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let graph_path = path.parent().unwrap_or(Path::new(".")).join(&config.graph);
    let file: GraphFile = parse(&graph_path, &read(&graph_path)?)?;
    let (base, mut weights) = file.into_parts()?;
    if let Some(w) = &config.weights {
        weights = Weights { vertical: w.beta_vertical.clone(), horizontal: w.beta_horizontal.clone(), epsilon: w.epsilon };
        weights.validate(&base)?;
    }
    config.deformation.validate()?;
    if let Some(g) = &config.grid {
        g.validate(config.deformation.eta)?;
    }
    let loaded = Loaded { config, raw, base, weights };
    loaded.strip()?;
    loaded.sampler().validate()?;
    Ok(loaded)
}
