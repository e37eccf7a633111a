//! Write-once experiment directories and the envelope stamped on every file.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub version: String,
    pub command: String,
    pub experiment: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub result: T,
}

impl<T> Envelope<T> {
    pub fn new(cfg: &ExperimentConfig, command: &str, seeds: Vec<u64>, result: T) -> Self {
        Self {
            version: qport::VERSION.to_string(),
            command: command.to_string(),
            experiment: cfg.name.clone(),
            config_hash: cfg.hash(),
            seeds,
            result,
        }
    }
}

pub struct Experiment {
    pub dir: PathBuf,
}

impl Experiment {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            dir: cfg.experiment_dir(),
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    /// Fails before any work is done if one of `rels` already exists.
    pub fn ensure_fresh(&self, rels: &[String]) -> Result<()> {
        for rel in rels {
            let p = self.path(rel);
            if p.exists() {
                bail!("refusing to overwrite {}", p.display());
            }
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(rel, &text)
    }

    pub fn write_text(&self, rel: &str, text: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
        let mut f = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&p)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => {
                    anyhow::anyhow!("refusing to overwrite {}", p.display())
                }
                _ => anyhow::Error::new(e).context(format!("cannot create {}", p.display())),
            })?;
        f.write_all(text.as_bytes())
            .with_context(|| format!("cannot write {}", p.display()))?;
        Ok(p)
    }

    /// Envelopes in `runs/` whose file name starts with `prefix`, in file
    /// name order.
    pub fn read_runs<T: DeserializeOwned>(&self, prefix: &str) -> Result<Vec<Envelope<T>>> {
        let dir = self.path("runs");
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut names: Vec<PathBuf> = fs::read_dir(&dir)
            .with_context(|| format!("cannot list {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json")
                    && p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with(prefix))
            })
            .collect();
        names.sort();
        names.iter().map(|p| read_json(p)).collect()
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_are_write_once() {
        let root = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            output_dir: Some(root.path().to_path_buf()),
            ..Default::default()
        };
        let exp = Experiment::new(&cfg);
        let env = Envelope::new(&cfg, "test", vec![1], 3.5);
        exp.write_json("runs/a.json", &env).unwrap();
        let err = exp.write_json("runs/a.json", &env).unwrap_err().to_string();
        assert!(err.contains("refusing to overwrite"));
        assert!(exp.ensure_fresh(&["runs/a.json".into()]).is_err());
        assert!(exp.ensure_fresh(&["runs/b.json".into()]).is_ok());
        let back: Vec<Envelope<f64>> = exp.read_runs("a").unwrap();
        assert_eq!(back, vec![env]);
    }
}
