//! Classical baselines: greedy construction, swap-move simulated annealing,
//! uniform random search and exhaustive enumeration.

use std::time::Duration;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{search_space_size, MunicipalityTable};
use crate::error::{Error, Result};
use crate::qubo::{ObjectiveModel, ObjectiveWeights, Portfolio};
use crate::stats::sample_sd;

/// Largest `C(n, k)` the exact enumerator accepts.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Greedy,
    SimulatedAnnealing,
    RandomSearch,
    Exact,
}

impl SolverMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolverMethod::Greedy => "greedy",
            SolverMethod::SimulatedAnnealing => "simulated_annealing",
            SolverMethod::RandomSearch => "random_search",
            SolverMethod::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub method: SolverMethod,
    pub portfolio: Portfolio,
    pub score: f64,
    pub evaluations: u64,
    pub elapsed: Duration,
    pub seed: Option<u64>,
}

impl SolverResult {
    /// Serializable form. Timing is left out unless asked for, so that
    /// records of identical runs compare byte for byte.
    pub fn record(&self, with_timing: bool) -> SolverRecord {
        SolverRecord {
            method: self.method,
            seed: self.seed,
            score: self.score,
            bitstring: self.portfolio.to_bitstring(),
            selected: self.portfolio.selected().collect(),
            evaluations: self.evaluations,
            elapsed_ms: with_timing.then(|| self.elapsed.as_secs_f64() * 1e3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverRecord {
    pub method: SolverMethod,
    pub seed: Option<u64>,
    pub score: f64,
    pub bitstring: String,
    pub selected: Vec<usize>,
    pub evaluations: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub elapsed_ms: Option<f64>,
}

/// Wall clock that degrades to a zero reading where no clock exists.
#[derive(Clone, Copy)]
struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed()
        }
        #[cfg(target_arch = "wasm32")]
        {
            Duration::ZERO
        }
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cardinality k = {k} must satisfy 0 < k <= n = {n}"
        )));
    }
    Ok(())
}

fn portfolio_of(n: usize, selected: &[usize]) -> Portfolio {
    let mut bits = vec![false; n];
    for &i in selected {
        bits[i] = true;
    }
    Portfolio::from_bits(bits)
}

/// Adds, `k` times, the candidate with the largest marginal gain given the
/// current selection (lowest index on ties).
pub fn greedy(
    table: &MunicipalityTable,
    weights: &ObjectiveWeights,
    k: usize,
) -> Result<SolverResult> {
    weights.validate()?;
    greedy_model(&ObjectiveModel::new(table, weights), k)
}

pub fn greedy_model(model: &ObjectiveModel, k: usize) -> Result<SolverResult> {
    let n = model.n();
    check_k(n, k)?;
    let clock = Stopwatch::start();
    let mut gain: Vec<f64> = (0..n).map(|i| model.linear(i)).collect();
    let mut taken = vec![false; n];
    let mut selected = Vec::with_capacity(k);
    let mut evaluations = 0u64;
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for c in 0..n {
            if taken[c] {
                continue;
            }
            evaluations += 1;
            if best.map_or(true, |b| gain[c] > gain[b]) {
                best = Some(c);
            }
        }
        let pick = best.expect("k <= n leaves a candidate");
        taken[pick] = true;
        selected.push(pick);
        for (c, g) in gain.iter_mut().enumerate() {
            *g += model.pair(c, pick);
        }
    }
    selected.sort_unstable();
    Ok(SolverResult {
        method: SolverMethod::Greedy,
        score: model.score_indices(&selected),
        portfolio: portfolio_of(n, &selected),
        evaluations,
        elapsed: clock.elapsed(),
        seed: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSweep {
    pub results: Vec<SolverResult>,
    /// Every smaller-k selection is contained in every larger-k one.
    pub nested: bool,
}

pub fn greedy_k_sweep(
    table: &MunicipalityTable,
    weights: &ObjectiveWeights,
    ks: &[usize],
) -> Result<KSweep> {
    weights.validate()?;
    let model = ObjectiveModel::new(table, weights);
    let results: Vec<SolverResult> = ks
        .iter()
        .map(|&k| greedy_model(&model, k))
        .collect::<Result<_>>()?;
    let mut by_k: Vec<&SolverResult> = results.iter().collect();
    by_k.sort_by_key(|r| r.portfolio.cardinality());
    let nested = by_k.windows(2).all(|w| {
        w[0].portfolio
            .selected()
            .all(|i| w[1].portfolio.is_selected(i))
    });
    Ok(KSweep { results, nested })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaBudget {
    /// Number of swap moves evaluated.
    Evaluations(u64),
    /// Wall-clock limit. Results then depend on machine speed.
    Time(Duration),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaSchedule {
    /// Fixed starting temperature; `None` uses the score spread of
    /// `calibration_samples` random feasible portfolios.
    pub initial_temperature: Option<f64>,
    pub calibration_samples: usize,
    pub cooling: f64,
    pub floor: f64,
    pub greedy_start: bool,
}

impl Default for SaSchedule {
    fn default() -> Self {
        Self {
            initial_temperature: None,
            calibration_samples: 100,
            cooling: 0.995,
            floor: 1e-6,
            greedy_start: false,
        }
    }
}

impl SaSchedule {
    fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "cooling factor {} outside (0, 1]",
                self.cooling
            )));
        }
        if let Some(t) = self.initial_temperature {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "bad initial temperature {t}"
                )));
            }
        }
        if !(self.floor >= 0.0) {
            return Err(Error::InvalidArgument(
                "temperature floor must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

fn sample_subset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut s = sample(rng, n, k).into_vec();
    s.sort_unstable();
    s
}

/// Metropolis search over swap moves (drop one selected, add one
/// unselected), so every visited state has exactly `k` members. The
/// temperature is multiplied by `cooling` after every `k (n - k)` moves.
/// Returns the best portfolio seen.
pub fn simulated_annealing(
    table: &MunicipalityTable,
    weights: &ObjectiveWeights,
    k: usize,
    budget: SaBudget,
    seed: u64,
    schedule: &SaSchedule,
) -> Result<SolverResult> {
    weights.validate()?;
    simulated_annealing_model(
        &ObjectiveModel::new(table, weights),
        k,
        budget,
        seed,
        schedule,
    )
}

pub fn simulated_annealing_model(
    model: &ObjectiveModel,
    k: usize,
    budget: SaBudget,
    seed: u64,
    schedule: &SaSchedule,
) -> Result<SolverResult> {
    let n = model.n();
    check_k(n, k)?;
    schedule.validate()?;
    #[cfg(target_arch = "wasm32")]
    if matches!(budget, SaBudget::Time(_)) {
        return Err(Error::InvalidArgument(
            "wall-clock budgets are unavailable on this target".into(),
        ));
    }
    let clock = Stopwatch::start();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut current = if schedule.greedy_start {
        greedy_model(model, k)?.portfolio.selected().collect()
    } else {
        sample_subset(&mut rng, n, k)
    };
    let mut temperature = match schedule.initial_temperature {
        Some(t) => t,
        None => {
            let scores: Vec<f64> = (0..schedule.calibration_samples)
                .map(|_| model.score_indices(&sample_subset(&mut rng, n, k)))
                .collect();
            sample_sd(&scores)
        }
    };
    let mut outside: Vec<usize> = {
        let mut inside = vec![false; n];
        for &i in &current {
            inside[i] = true;
        }
        (0..n).filter(|&i| !inside[i]).collect()
    };

    let mut score = model.score_indices(&current);
    let mut best = current.clone();
    let mut best_score = score;
    let stage = (k * (n - k)) as u64;
    let mut evaluations = 0u64;

    let exhausted = |evals: u64| match budget {
        SaBudget::Evaluations(limit) => evals >= limit,
        SaBudget::Time(limit) => evals % 256 == 0 && clock.elapsed() >= limit,
    };

    if stage > 0 {
        while !exhausted(evaluations) {
            let a = rng.gen_range(0..k);
            let b = rng.gen_range(0..n - k);
            let (out_c, in_c) = (current[a], outside[b]);
            let mut delta = model.linear(in_c) - model.linear(out_c);
            for &t in &current {
                if t != out_c {
                    delta += model.pair(in_c, t) - model.pair(out_c, t);
                }
            }
            evaluations += 1;
            let accept = delta >= 0.0
                || (temperature > 0.0 && rng.gen::<f64>() < (delta / temperature).exp());
            if accept {
                current[a] = in_c;
                outside[b] = out_c;
                score += delta;
                if score > best_score {
                    best_score = score;
                    best.clone_from(&current);
                }
            }
            if evaluations % stage == 0 && temperature > 0.0 {
                temperature = (temperature * schedule.cooling).max(schedule.floor);
            }
        }
    }

    best.sort_unstable();
    Ok(SolverResult {
        method: SolverMethod::SimulatedAnnealing,
        // rescored from scratch to shed accumulated rounding
        score: model.score_indices(&best),
        portfolio: portfolio_of(n, &best),
        evaluations,
        elapsed: clock.elapsed(),
        seed: Some(seed),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSearchResult {
    pub best: SolverResult,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single iteration.
    pub sd: f64,
    pub iterations: u64,
}

pub fn random_search(
    table: &MunicipalityTable,
    weights: &ObjectiveWeights,
    k: usize,
    iterations: u64,
    seed: u64,
) -> Result<RandomSearchResult> {
    weights.validate()?;
    random_search_model(&ObjectiveModel::new(table, weights), k, iterations, seed)
}

pub fn random_search_model(
    model: &ObjectiveModel,
    k: usize,
    iterations: u64,
    seed: u64,
) -> Result<RandomSearchResult> {
    let n = model.n();
    check_k(n, k)?;
    if iterations == 0 {
        return Err(Error::InvalidArgument(
            "random search needs iterations >= 1".into(),
        ));
    }
    let clock = Stopwatch::start();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores = Vec::with_capacity(iterations as usize);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..iterations {
        let s = sample_subset(&mut rng, n, k);
        let v = model.score_indices(&s);
        scores.push(v);
        if best.as_ref().map_or(true, |(b, _)| v > *b) {
            best = Some((v, s));
        }
    }
    let (best_score, best_set) = best.expect("iterations >= 1");
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok(RandomSearchResult {
        best: SolverResult {
            method: SolverMethod::RandomSearch,
            portfolio: portfolio_of(n, &best_set),
            score: best_score,
            evaluations: iterations,
            elapsed: clock.elapsed(),
            seed: Some(seed),
        },
        mean,
        sd: sample_sd(&scores),
        iterations,
    })
}

/// Exhaustive maximum over all `C(n, k)` portfolios. Equal scores go to
/// the lexicographically smaller MSB-first bitstring.
pub fn enumerate_exact(
    table: &MunicipalityTable,
    weights: &ObjectiveWeights,
    k: usize,
) -> Result<SolverResult> {
    weights.validate()?;
    enumerate_exact_model(&ObjectiveModel::new(table, weights), k)
}

pub fn enumerate_exact_model(model: &ObjectiveModel, k: usize) -> Result<SolverResult> {
    let n = model.n();
    check_k(n, k)?;
    let size = search_space_size(n as u64, k as u64)?;
    if size > ENUMERATION_LIMIT.into() {
        return Err(Error::TooLarge(format!(
            "C({n}, {k}) = {size} portfolios exceeds the enumeration limit of {ENUMERATION_LIMIT}"
        )));
    }
    let clock = Stopwatch::start();
    let mut comb: Vec<usize> = (0..k).collect();
    let mut best = comb.clone();
    let mut best_score = f64::NEG_INFINITY;
    let mut evaluations = 0u64;
    loop {
        let v = model.score_indices(&comb);
        evaluations += 1;
        let tol = 1e-12 * v.abs().max(1.0);
        let better = v > best_score + tol;
        let tie = (v - best_score).abs() <= tol && smaller_bitstring(&comb, &best);
        if better || tie {
            best_score = v;
            best.clone_from(&comb);
        }
        // next combination in lexicographic order
        let mut i = k;
        while i > 0 && comb[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        comb[i - 1] += 1;
        for j in i..k {
            comb[j] = comb[j - 1] + 1;
        }
    }
    Ok(SolverResult {
        method: SolverMethod::Exact,
        score: model.score_indices(&best),
        portfolio: portfolio_of(n, &best),
        evaluations,
        elapsed: clock.elapsed(),
        seed: None,
    })
}

/// Whether sorted set `a` has the smaller MSB-first bitstring than `b`,
/// i.e. loses at the highest index where the sets differ.
fn smaller_bitstring(a: &[usize], b: &[usize]) -> bool {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// `score / exact`, the fraction of the optimum a heuristic reached.
pub fn approximation_ratio(score: f64, exact: f64) -> Result<f64> {
    if exact == 0.0 {
        return Err(Error::InvalidArgument("exact optimum is zero".into()));
    }
    Ok(score / exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthesize_table, MunicipalityRecord};
    use crate::matrix::SquareMatrix;
    use crate::qubo::objective_score;

    fn zero_synergy(scores: &[f64]) -> MunicipalityTable {
        let n = scores.len();
        let recs = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| MunicipalityRecord {
                id: format!("Z{i}"),
                carbon: s,
                biodiversity: s,
                social: s,
            })
            .collect();
        MunicipalityTable::new(
            recs,
            SquareMatrix::zeros(n),
            SquareMatrix::zeros(n),
            SquareMatrix::zeros(n),
        )
        .unwrap()
    }

    fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut out = idx[..k].to_vec();
        out.sort_unstable();
        out
    }

    const SCORES: [f64; 9] = [0.3, 0.9, 0.1, 0.75, 0.5, 0.95, 0.2, 0.6, 0.05];

    #[test]
    fn greedy_without_synergy_is_top_k() {
        let t = zero_synergy(&SCORES);
        let w = ObjectiveWeights::default();
        for k in 1..=SCORES.len() {
            let r = greedy(&t, &w, k).unwrap();
            assert_eq!(
                r.portfolio.selected().collect::<Vec<_>>(),
                top_k(&SCORES, k)
            );
            assert!((r.score - objective_score(&t, &w, &r.portfolio).unwrap()).abs() < 1e-12);
        }
        assert!(greedy(&t, &w, 0).is_err());
        assert!(greedy(&t, &w, 10).is_err());
        assert!(greedy_k_sweep(&t, &w, &[2, 5, 3]).unwrap().nested);
    }

    #[test]
    fn greedy_tie_breaks_low_index() {
        let t = zero_synergy(&[0.5, 0.5, 0.5, 0.1]);
        let r = greedy(&t, &ObjectiveWeights::default(), 2).unwrap();
        assert_eq!(r.portfolio.to_bitstring(), "0011");
    }

    #[test]
    fn exact_trivial_cases() {
        let t = synthesize_table(8, 4).unwrap();
        let w = ObjectiveWeights::default();
        let full = enumerate_exact(&t, &w, 8).unwrap();
        assert_eq!(full.portfolio.cardinality(), 8);
        assert_eq!(full.evaluations, 1);
        let all = Portfolio::from_bits(vec![true; 8]);
        assert!((full.score - objective_score(&t, &w, &all).unwrap()).abs() < 1e-12);

        let one = enumerate_exact(&t, &w, 1).unwrap();
        let m = ObjectiveModel::new(&t, &w);
        let best = (0..8)
            .max_by(|&a, &b| m.linear(a).total_cmp(&m.linear(b)))
            .unwrap();
        assert!(one.portfolio.is_selected(best));
        assert_eq!(one.evaluations, 8);
    }

    #[test]
    fn exact_tie_break_prefers_smaller_bitstring() {
        let t = zero_synergy(&[0.4, 0.4, 0.4]);
        let r = enumerate_exact(&t, &ObjectiveWeights::default(), 2).unwrap();
        assert_eq!(r.portfolio.to_bitstring(), "011");
    }

    #[test]
    fn exact_guard() {
        let t = zero_synergy(&vec![0.1; 40]);
        let err = enumerate_exact(&t, &ObjectiveWeights::default(), 20).unwrap_err();
        assert!(matches!(err, Error::TooLarge(_)));
    }

    #[test]
    fn sa_zero_budget_returns_start() {
        let t = synthesize_table(10, 1).unwrap();
        let w = ObjectiveWeights::default();
        let r = simulated_annealing(
            &t,
            &w,
            4,
            SaBudget::Evaluations(0),
            5,
            &SaSchedule::default(),
        )
        .unwrap();
        assert_eq!(r.evaluations, 0);
        assert_eq!(r.portfolio.cardinality(), 4);
        // the start is the first subset drawn from the seed
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let start = sample_subset(&mut rng, 10, 4);
        assert_eq!(r.portfolio.selected().collect::<Vec<_>>(), start);
    }

    #[test]
    fn sa_hill_climb_never_worsens_greedy_start() {
        let t = synthesize_table(14, 8).unwrap();
        let w = ObjectiveWeights::default();
        let g = greedy(&t, &w, 5).unwrap();
        let sched = SaSchedule {
            initial_temperature: Some(0.0),
            greedy_start: true,
            ..Default::default()
        };
        for seed in 0..10 {
            let r =
                simulated_annealing(&t, &w, 5, SaBudget::Evaluations(500), seed, &sched).unwrap();
            assert!(r.score >= g.score - 1e-12);
        }
    }

    #[test]
    fn sa_zero_synergy_reaches_top_k() {
        let t = zero_synergy(&SCORES);
        let r = simulated_annealing(
            &t,
            &ObjectiveWeights::default(),
            4,
            SaBudget::Evaluations(20_000),
            3,
            &SaSchedule::default(),
        )
        .unwrap();
        assert_eq!(
            r.portfolio.selected().collect::<Vec<_>>(),
            top_k(&SCORES, 4)
        );
    }

    #[test]
    fn sa_and_random_are_deterministic() {
        let t = synthesize_table(12, 2).unwrap();
        let w = ObjectiveWeights::default();
        let s = SaSchedule::default();
        let a = simulated_annealing(&t, &w, 4, SaBudget::Evaluations(3000), 9, &s).unwrap();
        let b = simulated_annealing(&t, &w, 4, SaBudget::Evaluations(3000), 9, &s).unwrap();
        assert_eq!((a.portfolio, a.score), (b.portfolio, b.score));
        let r1 = random_search(&t, &w, 4, 200, 9).unwrap();
        let r2 = random_search(&t, &w, 4, 200, 9).unwrap();
        assert_eq!(
            (r1.mean, r1.sd, r1.best.score),
            (r2.mean, r2.sd, r2.best.score)
        );
    }

    #[test]
    fn random_single_iteration() {
        let t = synthesize_table(8, 3).unwrap();
        let w = ObjectiveWeights::default();
        let r = random_search(&t, &w, 3, 1, 0).unwrap();
        assert_eq!(r.sd, 0.0);
        assert_eq!(r.mean, r.best.score);
        assert!(random_search(&t, &w, 3, 0, 0).is_err());
    }

    #[test]
    fn record_omits_timing_by_default() {
        let t = synthesize_table(6, 3).unwrap();
        let r = greedy(&t, &ObjectiveWeights::default(), 2).unwrap();
        let json = serde_json::to_string(&r.record(false)).unwrap();
        assert!(!json.contains("elapsed_ms"));
        assert!(json.contains("\"method\":\"greedy\""));
        assert!(r.record(true).elapsed_ms.is_some());
    }

    #[test]
    fn ratio() {
        assert_eq!(approximation_ratio(3.0, 4.0).unwrap(), 0.75);
        assert!(approximation_ratio(1.0, 0.0).is_err());
    }
}
