use std::path::Path;

use anyhow::{bail, Context, Result};
use qport::classical::{
    enumerate_exact, greedy, random_search, simulated_annealing, SaBudget, SaSchedule, SolverRecord,
};
use qport::data::{save_table, search_space_size, TablePaths};
use qport::ising::{qubo_to_ising, IsingFile, IsingModel};
use qport::qaoa::{expectation, run_qaoa, sample_shots, QaoaParams, MAX_QUBITS};
use qport::qubo::{build_qubo, objective_score, QuboFile, QuboProblem};
use qport::shots::ShotRecord;
use qport::stats::{
    feasible_shot_rate, jaccard, load_replay, mode_bitstring, summarize_replay, ReplaySummary,
    RunSummary,
};
use qport::zne::{bootstrap_all, noisy_run, penalized_score_scorer, ZneEstimate, ZneMethod};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, NoiseSettings};
use crate::output::{Envelope, Experiment};

/// Solver choices accepted by `solve --method`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    Greedy,
    Sa,
    Random,
    Exact,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub n: usize,
    pub seed: u64,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildOutput {
    pub qubo: QuboFile,
    pub offdiagonal_nonzeros: usize,
    pub search_space_size: String,
    pub ising: IsingFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSummary {
    pub mean: f64,
    pub sd: f64,
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub n: usize,
    pub k: usize,
    pub solver: SolverRecord,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub random: Option<RandomSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub bitstring: String,
    pub selected: Vec<usize>,
    pub score: f64,
    pub jaccard_vs_greedy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaOutput {
    pub seed: u64,
    pub params: QaoaParams,
    pub greedy: SolverRecord,
    /// `-scale <H>` of the exact final state, in objective units.
    pub expectation_score: f64,
    pub shot_mean_score: f64,
    pub leakage: f64,
    pub feasible_rate: f64,
    pub mode: ModeSummary,
    pub shots: ShotRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZneOutput {
    pub seed: u64,
    pub params: QaoaParams,
    pub noise: NoiseSettings,
    pub greedy_score: f64,
    pub noiseless_score: f64,
    /// Score of the maximally mixed state, the infinite-noise limit.
    pub mixed_score: f64,
    pub estimate: ZneEstimate,
    pub feasible_rates: Vec<f64>,
    /// Mode of the lowest-noise record.
    pub mode: ModeSummary,
    pub records: Vec<ShotRecord>,
}

fn lowest(lambdas: &[f64]) -> usize {
    (0..lambdas.len())
        .min_by(|&a, &b| lambdas[a].total_cmp(&lambdas[b]))
        .unwrap_or(0)
}

impl ZneOutput {
    pub fn run_summary(&self, run_id: u32, method: ZneMethod) -> Result<RunSummary> {
        let low = lowest(&self.estimate.lambdas);
        let zne_score = self.estimate.e0(method).with_context(|| {
            format!(
                "run with seed {} has no {} estimate for noise scales {:?}",
                self.seed,
                method.name(),
                self.estimate.lambdas
            )
        })?;
        Ok(RunSummary {
            run_id,
            backend: "simulator".into(),
            raw_score: self.estimate.values[low],
            zne_score,
            valid_rate: self.feasible_rates[low],
            jaccard: Some(self.mode.jaccard_vs_greedy),
            day: 0,
            date: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsOutput {
    pub source: String,
    pub zne_method: Option<ZneMethod>,
    pub summary: ReplaySummary,
}

pub fn synth(cfg: &ExperimentConfig, n: Option<usize>, seed: Option<u64>) -> Result<Vec<String>> {
    let (base_n, base_seed) = match &cfg.data {
        crate::config::DataSource::Synthetic { n, seed } => (*n, *seed),
        crate::config::DataSource::Directory { .. } => (12, 42),
    };
    let (n, seed) = (n.unwrap_or(base_n), seed.unwrap_or(base_seed));
    let exp = Experiment::new(cfg);
    let paths = TablePaths::in_dir(exp.path("data"));
    let files = [
        &paths.scores,
        &paths.adjacency,
        &paths.bio_synergy,
        &paths.soc_synergy,
    ];
    let rels: Vec<String> = files
        .iter()
        .map(|p| format!("data/{}", p.file_name().unwrap().to_string_lossy()))
        .collect();
    let mut all = rels.clone();
    all.push("data/manifest.json".into());
    exp.ensure_fresh(&all)?;
    let table = qport::data::synthesize_table(n, seed)?;
    save_table(&table, &paths)?;
    let out = SynthOutput {
        n,
        seed,
        files: rels,
    };
    let p = exp.write_json(
        "data/manifest.json",
        &Envelope::new(cfg, "synth", vec![seed], out),
    )?;
    Ok(vec![
        exp.path("data").display().to_string(),
        p.display().to_string(),
    ])
}

fn build_problem(
    cfg: &ExperimentConfig,
    table: &qport::data::MunicipalityTable,
) -> Result<QuboProblem> {
    Ok(build_qubo(
        table,
        &cfg.weights,
        cfg.k,
        cfg.penalty_weight,
        cfg.threshold,
    )?)
}

pub fn build(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let exp = Experiment::new(cfg);
    exp.ensure_fresh(&["qubo.json".into()])?;
    let table = cfg.table()?;
    let q = build_problem(cfg, &table)?;
    let out = BuildOutput {
        qubo: q.to_file(),
        offdiagonal_nonzeros: q.offdiagonal_nonzeros(),
        search_space_size: search_space_size(q.n() as u64, q.k() as u64)?.to_string(),
        ising: qubo_to_ising(&q).to_file(),
    };
    let p = exp.write_json("qubo.json", &Envelope::new(cfg, "build", Vec::new(), out))?;
    Ok(vec![p.display().to_string()])
}

pub fn solve(cfg: &ExperimentConfig, method: MethodArg) -> Result<Vec<String>> {
    let exp = Experiment::new(cfg);
    let table = cfg.table()?;
    let (n, k) = (table.len(), cfg.k);
    let methods: Vec<MethodArg> = match method {
        MethodArg::All => vec![
            MethodArg::Greedy,
            MethodArg::Exact,
            MethodArg::Sa,
            MethodArg::Random,
        ],
        m => vec![m],
    };
    let mut jobs: Vec<(MethodArg, Option<u64>, String)> = Vec::new();
    for m in methods {
        match m {
            MethodArg::Greedy => jobs.push((m, None, "runs/solve-greedy.json".into())),
            MethodArg::Exact => jobs.push((m, None, "runs/solve-exact.json".into())),
            MethodArg::Sa | MethodArg::Random => {
                let tag = if m == MethodArg::Sa { "sa" } else { "random" };
                for &s in &cfg.seeds {
                    jobs.push((m, Some(s), format!("runs/solve-{tag}-seed{s}.json")));
                }
            }
            MethodArg::All => unreachable!(),
        }
    }
    let rels: Vec<String> = jobs.iter().map(|j| j.2.clone()).collect();
    exp.ensure_fresh(&rels)?;

    let mut outputs = Vec::with_capacity(jobs.len());
    for (m, seed, rel) in &jobs {
        let (result, random) = match (m, seed) {
            (MethodArg::Greedy, _) => (greedy(&table, &cfg.weights, k)?, None),
            (MethodArg::Exact, _) => (
                enumerate_exact(&table, &cfg.weights, k)
                    .context("exact enumeration refused; use greedy, sa or random instead")?,
                None,
            ),
            (MethodArg::Sa, Some(s)) => (
                simulated_annealing(
                    &table,
                    &cfg.weights,
                    k,
                    SaBudget::Evaluations(cfg.sa_evaluations),
                    *s,
                    &SaSchedule::default(),
                )?,
                None,
            ),
            (MethodArg::Random, Some(s)) => {
                let r = random_search(&table, &cfg.weights, k, cfg.random_iterations, *s)?;
                let summary = RandomSummary {
                    mean: r.mean,
                    sd: r.sd,
                    iterations: r.iterations,
                };
                (r.best, Some(summary))
            }
            _ => unreachable!(),
        };
        outputs.push((
            rel.clone(),
            Envelope::new(
                cfg,
                "solve",
                seed.iter().copied().collect(),
                SolveOutput {
                    n,
                    k,
                    solver: result.record(false),
                    random,
                },
            ),
        ));
    }
    outputs
        .iter()
        .map(|(rel, env)| exp.write_json(rel, env).map(|p| p.display().to_string()))
        .collect()
}

struct Prepared {
    table: qport::data::MunicipalityTable,
    qubo: QuboProblem,
    model: IsingModel,
    params: QaoaParams,
    greedy: qport::classical::SolverResult,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let table = cfg.table()?;
    if table.len() > MAX_QUBITS {
        bail!(
            "n = {} exceeds the simulator limit of {MAX_QUBITS} qubits",
            table.len()
        );
    }
    let qubo = build_problem(cfg, &table)?;
    let model = qubo_to_ising(&qubo);
    let params = cfg.qaoa_params(&table);
    let greedy = greedy(&table, &cfg.weights, cfg.k)?;
    Ok(Prepared {
        table,
        qubo,
        model,
        params,
        greedy,
    })
}

fn mode_summary(cfg: &ExperimentConfig, p: &Prepared, record: &ShotRecord) -> Result<ModeSummary> {
    let mode = mode_bitstring(record, cfg.k)?;
    Ok(ModeSummary {
        bitstring: mode.to_bitstring(),
        selected: mode.selected().collect(),
        score: objective_score(&p.table, &cfg.weights, &mode)?,
        jaccard_vs_greedy: jaccard(&mode, &p.greedy.portfolio)?,
    })
}

pub fn qaoa(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let exp = Experiment::new(cfg);
    let rels: Vec<String> = cfg
        .seeds
        .iter()
        .map(|s| format!("runs/qaoa-seed{s}.json"))
        .collect();
    exp.ensure_fresh(&rels)?;
    let p = prepare(cfg)?;
    let scale = p.qubo.scale();
    let scorer = penalized_score_scorer(&p.model, scale);
    let state = run_qaoa(&p.model, &p.params, &p.greedy.portfolio)?;
    let expectation_score = -scale * expectation(&state, &p.model);
    let leakage = state.leakage(cfg.k);
    let mut written = Vec::new();
    for (&seed, rel) in cfg.seeds.iter().zip(&rels) {
        let shots = sample_shots(&state, cfg.shots, seed)?;
        let out = QaoaOutput {
            seed,
            params: p.params.clone(),
            greedy: p.greedy.record(false),
            expectation_score,
            shot_mean_score: shots.mean_by(&scorer)?,
            leakage,
            feasible_rate: feasible_shot_rate(&shots, cfg.k)?,
            mode: mode_summary(cfg, &p, &shots)?,
            shots,
        };
        let path = exp.write_json(rel, &Envelope::new(cfg, "qaoa", vec![seed], out))?;
        written.push(path.display().to_string());
    }
    Ok(written)
}

/// One seeded ZNE run. Every noise scale reuses the run seed, so the
/// amplified circuits share their random stream.
pub fn zne_run(cfg: &ExperimentConfig, seed: u64) -> Result<ZneOutput> {
    let p = prepare(cfg)?;
    zne_run_prepared(cfg, &p, seed)
}

fn zne_run_prepared(cfg: &ExperimentConfig, p: &Prepared, seed: u64) -> Result<ZneOutput> {
    let scale = p.qubo.scale();
    let scorer = penalized_score_scorer(&p.model, scale);
    let noiseless = run_qaoa(&p.model, &p.params, &p.greedy.portfolio)?;
    let records: Vec<ShotRecord> = cfg
        .lambdas
        .iter()
        .map(|&l| {
            noisy_run(
                &p.model,
                &p.params,
                &p.greedy.portfolio,
                &cfg.noise.at(l, seed),
                cfg.shots,
            )
        })
        .collect::<qport::Result<_>>()?;
    let values: Vec<f64> = records
        .iter()
        .map(|r| r.mean_by(&scorer))
        .collect::<qport::Result<_>>()?;
    let mut estimate = ZneEstimate::from_points(&cfg.lambdas, &values)?;
    estimate.bootstrap = Some(bootstrap_all(
        &records,
        cfg.bootstrap_resamples,
        seed,
        &scorer,
    )?);
    let feasible_rates = records
        .iter()
        .map(|r| feasible_shot_rate(r, cfg.k))
        .collect::<qport::Result<Vec<_>>>()?;
    let low = lowest(&cfg.lambdas);
    let mode = mode_summary(cfg, p, &records[low])
        .with_context(|| format!("mode extraction at noise scale {}", cfg.lambdas[low]))?;
    Ok(ZneOutput {
        seed,
        params: p.params.clone(),
        noise: cfg.noise.clone(),
        greedy_score: p.greedy.score,
        noiseless_score: -scale * expectation(&noiseless, &p.model),
        mixed_score: -scale * p.model.offset(),
        estimate,
        feasible_rates,
        mode,
        records,
    })
}

pub fn zne(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let exp = Experiment::new(cfg);
    let rels: Vec<String> = cfg
        .seeds
        .iter()
        .map(|s| format!("runs/zne-seed{s}.json"))
        .collect();
    exp.ensure_fresh(&rels)?;
    let p = prepare(cfg)?;
    let mut written = Vec::new();
    for (&seed, rel) in cfg.seeds.iter().zip(&rels) {
        let out = zne_run_prepared(cfg, &p, seed)?;
        let path = exp.write_json(rel, &Envelope::new(cfg, "zne", vec![seed], out))?;
        written.push(path.display().to_string());
    }
    Ok(written)
}

/// Run summaries from `--replay` or from the experiment's ZNE records,
/// with the baseline to compare them against.
pub(crate) fn gather_runs(
    cfg: &ExperimentConfig,
    replay: Option<&Path>,
    method: ZneMethod,
) -> Result<Option<(String, Vec<RunSummary>, f64, Option<ZneMethod>)>> {
    if let Some(path) = replay {
        let data = load_replay(path)?;
        let baseline = match data.baseline.or(cfg.baseline) {
            Some(b) => b,
            None => greedy(&cfg.table()?, &cfg.weights, cfg.k)?.score,
        };
        return Ok(Some((
            path.display().to_string(),
            data.runs,
            baseline,
            None,
        )));
    }
    let exp = Experiment::new(cfg);
    let mut runs: Vec<Envelope<ZneOutput>> = exp.read_runs("zne-")?;
    if runs.is_empty() {
        return Ok(None);
    }
    runs.sort_by_key(|e| e.result.seed);
    let summaries = runs
        .iter()
        .enumerate()
        .map(|(i, e)| e.result.run_summary(i as u32 + 1, method))
        .collect::<Result<Vec<_>>>()?;
    let baseline = cfg.baseline.unwrap_or(runs[0].result.greedy_score);
    Ok(Some((
        "runs".to_string(),
        summaries,
        baseline,
        Some(method),
    )))
}

pub fn stats(cfg: &ExperimentConfig, replay: Option<&Path>) -> Result<Vec<String>> {
    let exp = Experiment::new(cfg);
    exp.ensure_fresh(&["stats.json".into()])?;
    let (source, runs, baseline, zne_method) = gather_runs(cfg, replay, cfg.zne_method)?
        .with_context(|| {
            format!(
                "no ZNE records under {} and no --replay file given",
                exp.path("runs").display()
            )
        })?;
    let summary = summarize_replay(&runs, baseline, cfg.bootstrap_resamples, cfg.seeds[0])?;
    let p = exp.write_json(
        "stats.json",
        &Envelope::new(
            cfg,
            "stats",
            vec![cfg.seeds[0]],
            StatsOutput {
                source,
                zne_method,
                summary,
            },
        ),
    )?;
    Ok(vec![p.display().to_string()])
}
