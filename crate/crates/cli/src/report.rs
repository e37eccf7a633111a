//! Method comparison, run detail and ZNE reliability tables.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use qport::stats::{summarize_replay, ComparisonReport, ReplaySummary, RunSummary};
use qport::zne::ZneMethod;
use serde::{Deserialize, Serialize};

use crate::commands::{gather_runs, SolveOutput, ZneOutput};
use crate::config::ExperimentConfig;
use crate::output::{Envelope, Experiment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub seed: Option<u64>,
    pub score: f64,
    /// Score over the best score in the table.
    pub ratio: f64,
    pub evaluations: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub random_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub random_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZneRow {
    pub seed: u64,
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub noiseless: f64,
    pub linear: f64,
    pub linear_r2: f64,
    pub quadratic: Option<f64>,
    pub richardson: Option<f64>,
    pub linear_ci: Option<[f64; 2]>,
    pub quadratic_ci: Option<[f64; 2]>,
    pub richardson_ci: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOutput {
    pub source: String,
    pub zne_method: Option<ZneMethod>,
    pub baseline: Option<f64>,
    pub methods: Vec<MethodRow>,
    pub runs: Vec<RunSummary>,
    pub zne: Vec<ZneRow>,
    pub summary: Option<ReplaySummary>,
}

fn method_rows(exp: &Experiment) -> Result<Vec<MethodRow>> {
    let solves: Vec<Envelope<SolveOutput>> = exp.read_runs("solve-")?;
    let best = solves
        .iter()
        .map(|e| e.result.solver.score)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut rows: Vec<MethodRow> = solves
        .into_iter()
        .map(|e| {
            let s = e.result.solver;
            MethodRow {
                method: s.method.name().to_string(),
                seed: s.seed,
                score: s.score,
                ratio: s.score / best,
                evaluations: s.evaluations,
                random_mean: e.result.random.as_ref().map(|r| r.mean),
                random_sd: e.result.random.as_ref().map(|r| r.sd),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.method.cmp(&b.method))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}

fn zne_rows(exp: &Experiment) -> Result<Vec<ZneRow>> {
    let mut runs: Vec<Envelope<ZneOutput>> = exp.read_runs("zne-")?;
    runs.sort_by_key(|e| e.result.seed);
    Ok(runs
        .into_iter()
        .map(|e| {
            let r = e.result;
            let ci = |m| r.estimate.bootstrap.as_ref().and_then(|b| b.get(m));
            ZneRow {
                seed: r.seed,
                lambdas: r.estimate.lambdas.clone(),
                values: r.estimate.values.clone(),
                noiseless: r.noiseless_score,
                linear: r.estimate.linear_e0,
                linear_r2: r.estimate.linear_r2,
                quadratic: r.estimate.quadratic_e0,
                richardson: r.estimate.richardson_e0,
                linear_ci: ci(ZneMethod::Linear),
                quadratic_ci: ci(ZneMethod::Quadratic),
                richardson_ci: ci(ZneMethod::Richardson),
            }
        })
        .collect())
}

pub fn build_report(
    cfg: &ExperimentConfig,
    replay: Option<&Path>,
    method: ZneMethod,
) -> Result<ReportOutput> {
    let exp = Experiment::new(cfg);
    let methods = method_rows(&exp)?;
    let zne = if replay.is_some() {
        Vec::new()
    } else {
        zne_rows(&exp)?
    };
    let gathered = gather_runs(cfg, replay, method)?;
    if methods.is_empty() && gathered.is_none() {
        bail!("no run records under {}", exp.path("runs").display());
    }
    let (source, runs, baseline, zne_method, summary) = match gathered {
        Some((source, runs, baseline, zm)) => {
            let s = summarize_replay(&runs, baseline, cfg.bootstrap_resamples, cfg.seeds[0])?;
            (source, runs, Some(baseline), zm, Some(s))
        }
        None => ("runs".to_string(), Vec::new(), None, None, None),
    };
    Ok(ReportOutput {
        source,
        zne_method,
        baseline,
        methods,
        runs,
        zne,
        summary,
    })
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.digits$}"))
}

fn ci(v: Option<[f64; 2]>) -> String {
    v.map_or_else(|| "n/a".to_string(), |[a, b]| format!("[{a:.3}, {b:.3}]"))
}

fn comparison_lines(out: &mut String, c: &ComparisonReport) {
    let _ = writeln!(out, "  runs                 {}", c.n);
    let _ = writeln!(
        out,
        "  mean (sd)            {:.4} ({:.4})",
        c.mean_score, c.sd_score
    );
    let _ = writeln!(out, "  mean difference      {:.4}", c.mean_diff);
    let _ = writeln!(out, "  t({})                 {:.4}", c.df, c.t_stat);
    let _ = writeln!(out, "  one-sided p          {:.6}", c.p_one_sided);
    let _ = writeln!(out, "  Cohen's d            {:.4}", c.cohen_d);
    let _ = writeln!(
        out,
        "  95% CI of difference [{:.4}, {:.4}]",
        c.ci95[0], c.ci95[1]
    );
    let _ = writeln!(
        out,
        "  Wilcoxon W (p)       {} ({:.7})",
        c.wilcoxon_w, c.wilcoxon_p
    );
}

pub fn render_text(r: &ReportOutput, header: &Envelope<()>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "qport {} report for `{}`",
        header.version, header.experiment
    );
    let _ = writeln!(out, "config {}", header.config_hash);
    let _ = writeln!(out, "source {}", r.source);
    let _ = writeln!(out);

    let _ = writeln!(out, "Method comparison");
    if r.methods.is_empty() {
        let _ = writeln!(out, "  unavailable: no solver records");
    } else {
        let _ = writeln!(
            out,
            "  {:<20} {:>6} {:>12} {:>8} {:>12} {:>20}",
            "method", "seed", "score", "ratio", "evaluations", "random mean (sd)"
        );
        for m in &r.methods {
            let random = match (m.random_mean, m.random_sd) {
                (Some(a), Some(b)) => format!("{a:.4} ({b:.4})"),
                _ => "-".to_string(),
            };
            let seed = m.seed.map_or_else(|| "-".to_string(), |s| s.to_string());
            let _ = writeln!(
                out,
                "  {:<20} {:>6} {:>12.4} {:>8.4} {:>12} {:>20}",
                m.method, seed, m.score, m.ratio, m.evaluations, random
            );
        }
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "Run detail");
    if r.runs.is_empty() {
        let _ = writeln!(out, "  unavailable: no ZNE runs");
    } else {
        let _ = writeln!(
            out,
            "  {:>4} {:<12} {:>10} {:>10} {:>8} {:>8} {:>4}",
            "run", "backend", "raw", "zne", "valid", "jaccard", "day"
        );
        for run in &r.runs {
            let _ = writeln!(
                out,
                "  {:>4} {:<12} {:>10.3} {:>10.3} {:>8.3} {:>8} {:>4}",
                run.run_id,
                run.backend,
                run.raw_score,
                run.zne_score,
                run.valid_rate,
                opt(run.jaccard, 3),
                run.day
            );
        }
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "ZNE reliability");
    if r.zne.is_empty() {
        let _ = writeln!(out, "  unavailable: no per-scale records");
    } else {
        for z in &r.zne {
            let values: Vec<String> = z
                .lambdas
                .iter()
                .zip(&z.values)
                .map(|(l, v)| format!("E({l})={v:.4}"))
                .collect();
            let _ = writeln!(
                out,
                "  seed {}: {}  noiseless {:.4}",
                z.seed,
                values.join(" "),
                z.noiseless
            );
            let _ = writeln!(
                out,
                "    linear     {:>10.4} {}  R2 {:.4}",
                z.linear,
                ci(z.linear_ci),
                z.linear_r2
            );
            let _ = writeln!(
                out,
                "    quadratic  {:>10} {}",
                opt(z.quadratic, 4),
                ci(z.quadratic_ci)
            );
            let _ = writeln!(
                out,
                "    richardson {:>10} {}",
                opt(z.richardson, 4),
                ci(z.richardson_ci)
            );
        }
    }
    let _ = writeln!(out);

    let _ = writeln!(out, "Comparison against baseline {}", opt(r.baseline, 4));
    match &r.summary {
        None => {
            let _ = writeln!(out, "  unavailable: no runs");
        }
        Some(s) => {
            match &s.comparison {
                Some(c) => comparison_lines(&mut out, c),
                None => {
                    let _ = writeln!(
                        out,
                        "  paired tests unavailable: need at least 2 runs with varying scores"
                    );
                }
            }
            let b = s.bootstrap_mean_ci;
            let _ = writeln!(out, "  bootstrap mean CI    [{:.4}, {:.4}]", b[0], b[1]);
            match &s.leave_one_out {
                Some(loo) => {
                    for (i, c) in loo.iter().enumerate() {
                        let line = c.as_ref().map_or_else(
                            || "unavailable".to_string(),
                            |c| {
                                format!(
                                    "mean {:.4}, t {:.4}, p {:.6}",
                                    c.mean_score, c.t_stat, c.p_one_sided
                                )
                            },
                        );
                        let _ = writeln!(out, "  without run {:<2}       {line}", r.runs[i].run_id);
                    }
                }
                None => {
                    let _ = writeln!(out, "  leave-one-out unavailable: need at least 3 runs");
                }
            }
            let _ = writeln!(
                out,
                "  Spearman vs day      {}",
                s.spearman_day.map_or_else(
                    || "unavailable".to_string(),
                    |[r, p]| format!("rho {r:.4}, p {p:.4}")
                )
            );
            match s.mann_whitney {
                Some([u, p]) => {
                    let names: Vec<&str> = s
                        .backends
                        .iter()
                        .take(2)
                        .map(|b| b.backend.as_str())
                        .collect();
                    let _ = writeln!(
                        out,
                        "  Mann-Whitney ({})   U {u}, p {p:.4}",
                        names.join(" vs ")
                    );
                }
                None => {
                    let _ = writeln!(out, "  Mann-Whitney         unavailable: single backend");
                }
            }
            for b in &s.backends {
                let _ = writeln!(
                    out,
                    "  backend {:<12} runs {}, mean {:.4}, jaccard {}",
                    b.backend,
                    b.runs,
                    b.mean_zne,
                    opt(b.mean_jaccard, 3)
                );
            }
        }
    }
    out
}

pub fn report(
    cfg: &ExperimentConfig,
    replay: Option<&Path>,
    method: ZneMethod,
) -> Result<Vec<String>> {
    let exp = Experiment::new(cfg);
    exp.ensure_fresh(&["report.json".into(), "report.txt".into()])?;
    let r = build_report(cfg, replay, method)?;
    let header = Envelope::new(cfg, "report", vec![cfg.seeds[0]], ());
    let text = render_text(&r, &header);
    let json = exp.write_json(
        "report.json",
        &Envelope::new(cfg, "report", vec![cfg.seeds[0]], r),
    )?;
    let txt = exp.write_text("report.txt", &text)?;
    Ok(vec![json.display().to_string(), txt.display().to_string()])
}
