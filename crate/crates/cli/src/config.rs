//! Experiment configuration.
//!
//! Values are resolved in three layers: built-in defaults, then the JSON
//! config file, then command-line flags. The output root is the exception:
//! `--out`, then `output_dir` from the file, then `$QPORT_OUT_DIR`, then
//! `./out`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qport::data::{load_table, synthesize_table, MunicipalityTable, TablePaths};
use qport::qaoa::{warm_params, QaoaParams};
use qport::qubo::ObjectiveWeights;
use qport::zne::{NoiseConfig, ZneMethod};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const OUT_DIR_ENV: &str = "QPORT_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Directory with the four table files under their standard names.
    Directory {
        path: PathBuf,
    },
    Synthetic {
        n: usize,
        seed: u64,
    },
}

/// Noise settings shared by every `lambda`; the trajectory seed comes from
/// the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSettings {
    pub two_qubit_depolarizing_prob: f64,
    pub trajectories: Option<usize>,
    pub noisy_cost_layer: bool,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        let base = NoiseConfig::default();
        Self {
            two_qubit_depolarizing_prob: base.two_qubit_depolarizing_prob,
            trajectories: base.trajectories,
            noisy_cost_layer: base.noisy_cost_layer,
        }
    }
}

impl NoiseSettings {
    pub fn at(&self, lambda: f64, seed: u64) -> NoiseConfig {
        NoiseConfig {
            two_qubit_depolarizing_prob: self.two_qubit_depolarizing_prob,
            fold_factor: lambda,
            seed,
            trajectories: self.trajectories,
            noisy_cost_layer: self.noisy_cost_layer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub data: DataSource,
    pub weights: ObjectiveWeights,
    pub k: usize,
    pub penalty_weight: f64,
    pub threshold: f64,
    /// `None` uses the fixed warm-start angles derived from the table.
    pub qaoa: Option<QaoaParams>,
    pub noise: NoiseSettings,
    pub lambdas: Vec<f64>,
    pub shots: u64,
    pub seeds: Vec<u64>,
    pub bootstrap_resamples: usize,
    pub random_iterations: u64,
    pub sa_evaluations: u64,
    /// Extrapolation whose estimate counts as a run's ZNE score.
    pub zne_method: ZneMethod,
    /// Replay baseline when the replay file carries none.
    pub baseline: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            data: DataSource::Synthetic { n: 12, seed: 42 },
            weights: ObjectiveWeights::default(),
            k: 4,
            penalty_weight: 100.0,
            threshold: 0.01,
            qaoa: None,
            noise: NoiseSettings::default(),
            lambdas: vec![1.0, 2.0, 3.0],
            shots: 8192,
            seeds: vec![42],
            bootstrap_resamples: 100,
            random_iterations: 10_000,
            sa_evaluations: 100_000,
            zne_method: ZneMethod::Richardson,
            baseline: None,
            output_dir: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub name: Option<String>,
    pub seeds: Vec<u64>,
    pub shots: Option<u64>,
    pub lambdas: Vec<f64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads `path` (or starts from defaults) and applies `overrides`.
    /// Relative data paths are taken from the config file's directory.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                let mut cfg: ExperimentConfig = serde_json::from_str(&text)
                    .with_context(|| format!("invalid config {}", p.display()))?;
                if let DataSource::Directory { path: dir } = &mut cfg.data {
                    if dir.is_relative() {
                        if let Some(parent) = p.parent() {
                            *dir = parent.join(&*dir);
                        }
                    }
                }
                cfg
            }
            None => Self::default(),
        };
        if let Some(n) = &overrides.name {
            cfg.name = n.clone();
        }
        if !overrides.seeds.is_empty() {
            cfg.seeds = overrides.seeds.clone();
        }
        if let Some(s) = overrides.shots {
            cfg.shots = s;
        }
        if !overrides.lambdas.is_empty() {
            cfg.lambdas = overrides.lambdas.clone();
        }
        if let Some(o) = &overrides.out {
            cfg.output_dir = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || self.name.contains(['/', '\\'])
            || self.name == "."
            || self.name == ".."
        {
            bail!(
                "experiment name `{}` is not a plain directory name",
                self.name
            );
        }
        if self.seeds.is_empty() {
            bail!("config lists no seeds");
        }
        if self.shots == 0 {
            bail!("shots must be at least 1");
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(*l >= 1.0)) {
            bail!(
                "noise scales must be non-empty and each >= 1, got {:?}",
                self.lambdas
            );
        }
        if let DataSource::Directory { path } = &self.data {
            let paths = TablePaths::in_dir(path);
            let missing: Vec<String> = [
                &paths.scores,
                &paths.adjacency,
                &paths.bio_synergy,
                &paths.soc_synergy,
            ]
            .into_iter()
            .filter(|p| !p.is_file())
            .map(|p| p.display().to_string())
            .collect();
            if !missing.is_empty() {
                bail!("missing data file(s): {}", missing.join(", "));
            }
        }
        self.weights.validate()?;
        Ok(())
    }

    pub fn table(&self) -> Result<MunicipalityTable> {
        Ok(match &self.data {
            DataSource::Directory { path } => load_table(&TablePaths::in_dir(path))?,
            DataSource::Synthetic { n, seed } => synthesize_table(*n, *seed)?,
        })
    }

    pub fn qaoa_params(&self, table: &MunicipalityTable) -> QaoaParams {
        self.qaoa
            .clone()
            .unwrap_or_else(|| warm_params(table, &self.weights))
    }

    /// SHA-256 of the canonical JSON of everything except the output root,
    /// so the same experiment written to two places hashes the same.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn output_root(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn experiment_dir(&self) -> PathBuf {
        self.output_root().join(&self.name)
    }
}
