//! Run-level records of recorded hardware executions, and the summary
//! statistics recomputed from them.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::inference::{
    compare_to_baseline, leave_one_out, mann_whitney_u, run_bootstrap_mean, spearman,
    ComparisonReport,
};
use super::{mean, sample_sd};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: u32,
    pub backend: String,
    pub raw_score: f64,
    pub zne_score: f64,
    pub valid_rate: f64,
    pub jaccard: Option<f64>,
    /// Days since the earliest run.
    pub day: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayData {
    pub baseline: Option<f64>,
    pub runs: Vec<RunSummary>,
}

#[derive(Deserialize)]
struct RawRun {
    run_id: u32,
    backend: String,
    raw_score: f64,
    zne_score: f64,
    valid_rate: f64,
    #[serde(default)]
    jaccard: Option<f64>,
    #[serde(default)]
    day: Option<u32>,
    #[serde(default)]
    date: Option<NaiveDate>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawReplay {
    Runs(Vec<RawRun>),
    Document {
        #[serde(default)]
        baseline: Option<f64>,
        runs: Vec<RawRun>,
    },
}

/// Parses a replay document: either a bare array of runs or an object with
/// `runs` and an optional greedy `baseline`. Days come from `date` fields
/// when every run has one, otherwise from explicit `day` fields.
pub fn parse_replay(text: &str) -> Result<ReplayData> {
    let raw: RawReplay = serde_json::from_str(text)?;
    let (baseline, raw_runs) = match raw {
        RawReplay::Runs(r) => (None, r),
        RawReplay::Document { baseline, runs } => (baseline, runs),
    };
    let first_date = if raw_runs.iter().all(|r| r.date.is_some()) {
        raw_runs.iter().filter_map(|r| r.date).min()
    } else {
        None
    };
    let mut runs = Vec::with_capacity(raw_runs.len());
    for r in raw_runs {
        let day = match (first_date, r.date, r.day) {
            (Some(first), Some(d), _) => (d - first).num_days() as u32,
            (_, _, Some(day)) => day,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "run {} has neither a usable date nor a day",
                    r.run_id
                )))
            }
        };
        if !(0.0..=1.0).contains(&r.valid_rate) {
            return Err(Error::OutOfRange(format!(
                "run {}: valid_rate {} outside [0, 1]",
                r.run_id, r.valid_rate
            )));
        }
        if let Some(j) = r.jaccard {
            if !(0.0..=1.0).contains(&j) {
                return Err(Error::OutOfRange(format!(
                    "run {}: jaccard {j} outside [0, 1]",
                    r.run_id
                )));
            }
        }
        runs.push(RunSummary {
            run_id: r.run_id,
            backend: r.backend,
            raw_score: r.raw_score,
            zne_score: r.zne_score,
            valid_rate: r.valid_rate,
            jaccard: r.jaccard,
            day,
            date: r.date,
        });
    }
    Ok(ReplayData { baseline, runs })
}

pub fn load_replay(path: &Path) -> Result<ReplayData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_replay(&text).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn replay_runs(path: &Path) -> Result<Vec<RunSummary>> {
    Ok(load_replay(path)?.runs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendGroup {
    pub backend: String,
    pub runs: usize,
    pub mean_zne: f64,
    pub mean_jaccard: Option<f64>,
    pub spearman_day: Option<[f64; 2]>,
}

/// Statistics recomputable from run-level records. Sections that need
/// more runs than available are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub baseline: f64,
    pub runs: usize,
    pub mean_zne: f64,
    pub sd_zne: Option<f64>,
    pub comparison: Option<ComparisonReport>,
    pub bootstrap_mean_ci: [f64; 2],
    pub leave_one_out: Option<Vec<Option<ComparisonReport>>>,
    pub spearman_day: Option<[f64; 2]>,
    pub backends: Vec<BackendGroup>,
    /// Mann-Whitney `[U, p]` between the first two backends.
    pub mann_whitney: Option<[f64; 2]>,
    pub mean_valid_rate: f64,
    pub mean_jaccard: Option<f64>,
}

fn mean_jaccard(runs: &[&RunSummary]) -> Option<f64> {
    let js: Vec<f64> = runs.iter().filter_map(|r| r.jaccard).collect();
    (!js.is_empty()).then(|| mean(&js))
}

pub fn summarize_replay(
    runs: &[RunSummary],
    baseline: f64,
    bootstrap_b: usize,
    bootstrap_seed: u64,
) -> Result<ReplaySummary> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("no runs to summarize".into()));
    }
    let zne: Vec<f64> = runs.iter().map(|r| r.zne_score).collect();
    let days: Vec<f64> = runs.iter().map(|r| f64::from(r.day)).collect();

    let mut names: Vec<&str> = Vec::new();
    for r in runs {
        if !names.contains(&r.backend.as_str()) {
            names.push(&r.backend);
        }
    }
    let backends: Vec<BackendGroup> = names
        .iter()
        .map(|&name| {
            let group: Vec<&RunSummary> = runs.iter().filter(|r| r.backend == name).collect();
            let z: Vec<f64> = group.iter().map(|r| r.zne_score).collect();
            let d: Vec<f64> = group.iter().map(|r| f64::from(r.day)).collect();
            BackendGroup {
                backend: name.to_string(),
                runs: group.len(),
                mean_zne: mean(&z),
                mean_jaccard: mean_jaccard(&group),
                spearman_day: spearman(&z, &d).ok().map(|(r, p)| [r, p]),
            }
        })
        .collect();
    let mann_whitney = if names.len() >= 2 {
        let a: Vec<f64> = runs
            .iter()
            .filter(|r| r.backend == names[0])
            .map(|r| r.zne_score)
            .collect();
        let b: Vec<f64> = runs
            .iter()
            .filter(|r| r.backend == names[1])
            .map(|r| r.zne_score)
            .collect();
        let (u, p) = mann_whitney_u(&a, &b)?;
        Some([u, p])
    } else {
        None
    };
    let all: Vec<&RunSummary> = runs.iter().collect();
    Ok(ReplaySummary {
        baseline,
        runs: runs.len(),
        mean_zne: mean(&zne),
        sd_zne: (runs.len() >= 2).then(|| sample_sd(&zne)),
        comparison: compare_to_baseline(&zne, baseline).ok(),
        bootstrap_mean_ci: run_bootstrap_mean(&zne, bootstrap_b, bootstrap_seed)?,
        leave_one_out: leave_one_out(&zne, baseline)
            .ok()
            .map(|v| v.into_iter().map(|r| r.ok()).collect()),
        spearman_day: spearman(&zne, &days).ok().map(|(r, p)| [r, p]),
        backends,
        mann_whitney,
        mean_valid_rate: mean(&runs.iter().map(|r| r.valid_rate).collect::<Vec<_>>()),
        mean_jaccard: mean_jaccard(&all),
    })
}
