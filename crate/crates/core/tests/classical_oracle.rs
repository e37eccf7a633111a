mod common;

use common::{brute_force_best, masks_of_weight, objective_from_mask};
use qport::classical::{
    enumerate_exact, greedy, greedy_k_sweep, random_search, simulated_annealing, SaBudget,
    SaSchedule,
};
use qport::data::synthesize_table;
use qport::qubo::ObjectiveWeights;

#[test]
fn exact_matches_brute_force() {
    let w = ObjectiveWeights::default();
    for seed in 0..6 {
        let t = synthesize_table(8, seed).unwrap();
        for k in 1..=8 {
            let (mask, score) = brute_force_best(&t, &w, k);
            let r = enumerate_exact(&t, &w, k).unwrap();
            assert!((r.score - score).abs() < 1e-12);
            assert_eq!(
                r.portfolio.to_basis_index() as u64,
                mask,
                "seed {seed} k {k}"
            );
        }
    }
}

#[test]
fn solver_ordering_on_small_instances() {
    let w = ObjectiveWeights::default();
    for seed in 0..10 {
        let t = synthesize_table(8, 100 + seed).unwrap();
        let exact = enumerate_exact(&t, &w, 3).unwrap();
        let g = greedy(&t, &w, 3).unwrap();
        let r = random_search(&t, &w, 3, 200, seed).unwrap();
        assert!(exact.score >= g.score - 1e-12);
        assert!(exact.score >= r.best.score - 1e-12);
        assert!(g.score >= r.mean);
        for res in [&exact, &g, &r.best] {
            assert_eq!(res.portfolio.cardinality(), 3);
        }
    }
}

#[test]
fn annealing_reaches_optimum_on_most_seeds() {
    let t = synthesize_table(8, 77).unwrap();
    let w = ObjectiveWeights::default();
    let (_, best) = brute_force_best(&t, &w, 3);
    let hits = (0..100)
        .filter(|&seed| {
            let r = simulated_annealing(
                &t,
                &w,
                3,
                SaBudget::Evaluations(100_000),
                seed,
                &SaSchedule::default(),
            )
            .unwrap();
            r.score >= 0.99 * best
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn random_search_finds_top_scores_with_enough_draws() {
    let w = ObjectiveWeights::default();
    let t = synthesize_table(8, 31).unwrap();
    let mut scores: Vec<f64> = masks_of_weight(8, 3)
        .into_iter()
        .map(|m| objective_from_mask(&t, &w, m))
        .collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    // top 5% of the 56 portfolios
    let cutoff = scores[(0.05 * scores.len() as f64).ceil() as usize - 1];
    let draws = (56.0 * 56f64.ln()).ceil() as u64;
    for seed in 0..20 {
        let r = random_search(&t, &w, 3, draws, seed).unwrap();
        assert!(r.best.score >= cutoff - 1e-12);
    }
}

#[test]
fn calibration_instance_regression() {
    let t = synthesize_table(20, 42).unwrap();
    let w = ObjectiveWeights::default();
    let exact = enumerate_exact(&t, &w, 5).unwrap();
    assert_eq!(exact.evaluations, 15_504);
    let (mask, score) = brute_force_best(&t, &w, 5);
    assert_eq!(exact.portfolio.to_basis_index() as u64, mask);
    assert!((exact.score - score).abs() < 1e-12);
    assert_eq!(exact.portfolio.to_bitstring(), FROZEN_BITSTRING);
    assert!((exact.score - FROZEN_SCORE).abs() < 1e-9, "{}", exact.score);
}

const FROZEN_BITSTRING: &str = "10100101000000000010";
const FROZEN_SCORE: f64 = 4.224_957_733_531_725;

#[test]
fn k_sweep_reports_nesting() {
    let t = synthesize_table(20, 42).unwrap();
    let w = ObjectiveWeights::default();
    let sweep = greedy_k_sweep(&t, &w, &[3, 5, 7, 9]).unwrap();
    assert_eq!(sweep.results.len(), 4);
    let direct = sweep.results.windows(2).all(|p| {
        p[0].portfolio
            .selected()
            .all(|i| p[1].portfolio.is_selected(i))
    });
    assert_eq!(sweep.nested, direct);
    // a smaller-k run repeats the first picks of a larger one
    assert!(sweep.nested);
    for r in &sweep.results {
        let k = r.portfolio.cardinality();
        assert_eq!(r.portfolio, greedy(&t, &w, k).unwrap().portfolio);
    }
}
