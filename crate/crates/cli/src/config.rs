//! TOML experiment configuration.
//!
//! A config file holds one `[synthetic]`, `[sysid]` (optionally with
//! `[validate]`), or `[certify]` section; the subcommand picks the section it
//! needs. Paths are resolved relative to the config file's directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base seed; `--seed` overrides it.
    pub seed: u64,
    pub synthetic: Option<SyntheticConfig>,
    pub sysid: Option<SysidConfig>,
    pub validate: Option<ValidateConfig>,
    pub certify: Option<CertifyConfig>,
}

/// Synthetic drifting-subspace study with certificate evaluation.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub ambient: usize,
    pub dim: usize,
    /// Per-step subspace drift c.
    pub drift: f64,
    /// Measurement-error norm ε.
    pub noise: f64,
    /// Window length T.
    pub window: usize,
    /// Inner iterations K.
    pub inner_iters: usize,
    /// Tube radius r_b.
    pub tube_radius: f64,
    /// Number of samples; tracking covers t = window .. horizon.
    pub horizon: usize,
    /// Chordal distance of the initial estimate from the truth.
    pub init_offset: f64,
    /// Step sizes to run: "cvg", "ub", "mid", or a literal number.
    pub step_sizes: Vec<StepSizeSpec>,
    /// Baseline trackers to run on the same dataset for comparison
    /// ("grouse", "past"); they emit distance curves without bounds.
    #[serde(default)]
    pub baselines: Vec<String>,
    /// PAST forgetting factor for the baseline run.
    #[serde(default = "default_synthetic_forget")]
    pub past_forget: f64,
    /// Write dataset.csv / truth.csv next to the run artifacts.
    #[serde(default)]
    pub emit_dataset: bool,
    /// Ingest samples from a previously emitted dataset instead of
    /// regenerating them (path to dataset.csv; truth.csv must sit next
    /// to it).
    #[serde(default)]
    pub dataset: Option<PathBuf>,
}

fn default_synthetic_forget() -> f64 {
    0.985
}

/// A step size: tuned or literal.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StepSizeSpec {
    Named(String),
    Literal(f64),
}

impl StepSizeSpec {
    pub fn label(&self) -> String {
        match self {
            StepSizeSpec::Named(s) => s.clone(),
            StepSizeSpec::Literal(v) => format!("{v:e}"),
        }
    }
}

/// Online identification study on a user-supplied plant.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SysidConfig {
    /// Plant description file.
    pub plant: PathBuf,
    /// Trajectory lag L; samples stack L+1 input/output pairs.
    pub lag: usize,
    pub t_ini: usize,
    pub t_fut: usize,
    /// Tracked subspace dimension d.
    pub dim: usize,
    /// Window length T for the window tracker.
    pub window: usize,
    /// Inner iterations K.
    pub inner_iters: usize,
    /// Fixed step size (also the line-search initial step).
    pub step_size: f64,
    /// Use Armijo line search instead of the fixed step.
    #[serde(default)]
    pub line_search: bool,
    /// Which trackers to run: "great", "grouse", "past".
    pub trackers: Vec<String>,
    /// PAST forgetting factor β.
    #[serde(default = "default_forget")]
    pub past_forget: f64,
    /// Measurement-noise standard deviation added to plant outputs.
    #[serde(default)]
    pub noise_std: f64,
    /// Split sizes in samples.
    pub init_len: usize,
    pub validate_len: usize,
    pub test_len: usize,
    /// Test repetitions for mean/std statistics.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Optional output spike: index within the test split and magnitude.
    #[serde(default)]
    pub disturbance_at: Option<usize>,
    #[serde(default = "default_disturbance_scale")]
    pub disturbance_scale: f64,
}

fn default_forget() -> f64 {
    0.985
}

fn default_repetitions() -> usize {
    20
}

fn default_disturbance_scale() -> f64 {
    50.0
}

/// Hyperparameter grid searched on the validation split.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub tracker: String,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub windows: Vec<usize>,
    #[serde(default)]
    pub forgets: Vec<f64>,
}

/// Stand-alone certificate evaluation (no tracker run).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub noise_bound: f64,
    pub drift_bound: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub tube_radius: f64,
    pub step_size: StepSizeSpec,
    pub window: usize,
    pub inner_iters: usize,
    pub dim: usize,
    /// Sup of the noise bound over the horizon.
    pub delta_sup: f64,
    /// Squared chordal distance of the initial estimate.
    pub initial_dist_sq: f64,
    /// Outer steps to tabulate.
    pub horizon: u64,
}

impl ExperimentConfig {
    /// Loads a config and re-anchors its relative paths at the file's parent
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if let Some(sysid) = config.sysid.as_mut() {
            sysid.plant = resolve(base, &sysid.plant);
            if !sysid.plant.exists() {
                bail!("plant file {} does not exist", sysid.plant.display());
            }
        }
        if let Some(synthetic) = config.synthetic.as_mut() {
            if let Some(dataset) = synthetic.dataset.as_mut() {
                *dataset = resolve(base, dataset);
                if !dataset.exists() {
                    bail!("dataset file {} does not exist", dataset.display());
                }
            }
        }
        Ok(config)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
