//! Browser bindings for three small experiments on synthetic instances.
//! Each export returns a JSON string; the `*_json` functions behind them
//! are plain Rust so they can be tested natively.

use qport::classical::{
    enumerate_exact, greedy, random_search, simulated_annealing, SaBudget, SaSchedule,
    ENUMERATION_LIMIT,
};
use qport::data::{search_space_size, synthesize_table, MunicipalityTable};
use qport::ising::{qubo_to_ising, IsingModel};
use qport::qaoa::{expectation, run_qaoa, warm_params, QaoaParams};
use qport::qubo::{build_qubo, ObjectiveWeights, Portfolio, QuboProblem};
use qport::shots::index_to_bitstring;
use qport::stats::feasible_shot_rate;
use qport::zne::{noisy_run, penalized_score_scorer, NoiseConfig, ZneEstimate};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest register the page may request; keeps the tab responsive.
pub const DEMO_MAX_QUBITS: usize = 14;

struct Instance {
    table: MunicipalityTable,
    weights: ObjectiveWeights,
    qubo: QuboProblem,
    model: IsingModel,
    warm: Portfolio,
    warm_score: f64,
}

fn instance(n: usize, k: usize, seed: u64, max_n: usize) -> Result<Instance, String> {
    if n > max_n {
        return Err(format!("n = {n} is above the demo limit of {max_n}"));
    }
    let table = synthesize_table(n, seed).map_err(|e| e.to_string())?;
    let weights = ObjectiveWeights::default();
    let qubo = build_qubo(&table, &weights, k, 100.0, 0.01).map_err(|e| e.to_string())?;
    let model = qubo_to_ising(&qubo);
    let g = greedy(&table, &weights, k).map_err(|e| e.to_string())?;
    Ok(Instance {
        table,
        weights,
        qubo,
        model,
        warm: g.portfolio,
        warm_score: g.score,
    })
}

#[derive(Serialize)]
struct Outcome {
    bitstring: String,
    probability: f64,
    score: f64,
}

#[derive(Serialize)]
struct Distribution {
    gamma: f64,
    beta: f64,
    warm_start: String,
    warm_score: f64,
    expectation_score: f64,
    leakage: f64,
    top: Vec<Outcome>,
}

/// Probabilities of the most likely outcomes after a warm-started circuit.
/// Non-finite `gamma` or `beta` fall back to the fixed warm-start angles.
pub fn qaoa_distribution_json(
    n: usize,
    k: usize,
    seed: u64,
    gamma: f64,
    beta: f64,
    layers: usize,
    top: usize,
) -> Result<String, String> {
    let inst = instance(n, k, seed, DEMO_MAX_QUBITS)?;
    let warm = warm_params(&inst.table, &inst.weights);
    let params = QaoaParams {
        gamma: if gamma.is_finite() { gamma } else { warm.gamma },
        beta: if beta.is_finite() { beta } else { warm.beta },
        layers,
        ..warm
    };
    let state = run_qaoa(&inst.model, &params, &inst.warm).map_err(|e| e.to_string())?;
    let scale = inst.qubo.scale();
    let mut ranked: Vec<(usize, f64)> = state.probabilities().into_iter().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let top = ranked
        .into_iter()
        .take(top.max(1))
        .filter(|&(_, p)| p > 0.0)
        .map(|(idx, p)| Outcome {
            bitstring: index_to_bitstring(n, idx),
            probability: p,
            score: -scale * inst.model.energy_of_index(idx),
        })
        .collect();
    let out = Distribution {
        gamma: params.gamma,
        beta: params.beta,
        warm_start: inst.warm.to_bitstring(),
        warm_score: inst.warm_score,
        expectation_score: -scale * expectation(&state, &inst.model),
        leakage: state.leakage(k),
        top,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curve {
    noiseless: f64,
    mixed: f64,
    feasible_rates: Vec<f64>,
    estimate: ZneEstimate,
}

/// Noisy expectations at noise scales 1, 2, 3 and their extrapolations.
pub fn zne_curve_json(
    n: usize,
    k: usize,
    seed: u64,
    error_prob: f64,
    shots: u64,
) -> Result<String, String> {
    let inst = instance(n, k, seed, 12)?;
    let params = warm_params(&inst.table, &inst.weights);
    let scale = inst.qubo.scale();
    let scorer = penalized_score_scorer(&inst.model, scale);
    let lambdas = [1.0, 2.0, 3.0];
    let mut values = Vec::new();
    let mut rates = Vec::new();
    for l in lambdas {
        let noise = NoiseConfig {
            two_qubit_depolarizing_prob: error_prob,
            fold_factor: l,
            seed,
            ..Default::default()
        };
        let rec = noisy_run(&inst.model, &params, &inst.warm, &noise, shots)
            .map_err(|e| e.to_string())?;
        values.push(rec.mean_by(&scorer).map_err(|e| e.to_string())?);
        rates.push(feasible_shot_rate(&rec, k).map_err(|e| e.to_string())?);
    }
    let noiseless = run_qaoa(&inst.model, &params, &inst.warm).map_err(|e| e.to_string())?;
    let out = Curve {
        noiseless: -scale * expectation(&noiseless, &inst.model),
        mixed: -scale * inst.model.offset(),
        feasible_rates: rates,
        estimate: ZneEstimate::from_points(&lambdas, &values).map_err(|e| e.to_string())?,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SolverRow {
    method: &'static str,
    score: f64,
    bitstring: String,
    evaluations: u64,
}

#[derive(Serialize)]
struct Comparison {
    search_space: String,
    rows: Vec<SolverRow>,
    random_mean: f64,
}

/// Greedy, annealing, random search and, when small enough, exhaustive
/// search on one instance.
pub fn solver_comparison_json(n: usize, k: usize, seed: u64) -> Result<String, String> {
    if n > 200 {
        return Err(format!("n = {n} is above the demo limit of 200"));
    }
    let table = synthesize_table(n, seed).map_err(|e| e.to_string())?;
    let w = ObjectiveWeights::default();
    let err = |e: qport::Error| e.to_string();
    let space = search_space_size(n as u64, k as u64).map_err(err)?;
    let mut rows = Vec::new();
    let row = |method, r: &qport::classical::SolverResult| SolverRow {
        method,
        score: r.score,
        bitstring: r.portfolio.to_bitstring(),
        evaluations: r.evaluations,
    };
    if space <= ENUMERATION_LIMIT.into() {
        rows.push(row("exact", &enumerate_exact(&table, &w, k).map_err(err)?));
    }
    rows.push(row("greedy", &greedy(&table, &w, k).map_err(err)?));
    let sa = simulated_annealing(
        &table,
        &w,
        k,
        SaBudget::Evaluations(100_000),
        seed,
        &SaSchedule::default(),
    )
    .map_err(err)?;
    rows.push(row("simulated_annealing", &sa));
    let random = random_search(&table, &w, k, 10_000, seed).map_err(err)?;
    rows.push(row("random_search", &random.best));
    let out = Comparison {
        search_space: space.to_string(),
        rows,
        random_mean: random.mean,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

// Seeds and shot counts are `u32` at the boundary so JavaScript can pass
// plain numbers instead of BigInts.

#[wasm_bindgen]
pub fn qaoa_distribution(
    n: usize,
    k: usize,
    seed: u32,
    gamma: f64,
    beta: f64,
    layers: usize,
) -> Result<String, JsValue> {
    qaoa_distribution_json(n, k, seed.into(), gamma, beta, layers, 12)
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn zne_curve(
    n: usize,
    k: usize,
    seed: u32,
    error_prob: f64,
    shots: u32,
) -> Result<String, JsValue> {
    zne_curve_json(n, k, seed.into(), error_prob, shots.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn solver_comparison(n: usize, k: usize, seed: u32) -> Result<String, JsValue> {
    solver_comparison_json(n, k, seed.into()).map_err(|e| JsValue::from_str(&e))
}
