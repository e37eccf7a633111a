mod common;

use common::{objective_from_mask, portfolio_from_mask};
use proptest::prelude::*;
use qport::data::synthesize_table;
use qport::ising::{ising_energy, qubo_to_ising, spins};
use qport::matrix::SquareMatrix;
use qport::qubo::{build_qubo, objective_score, ObjectiveModel, ObjectiveWeights, QuboProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn objective_routes_agree_on_every_portfolio() {
    let t = synthesize_table(8, 5).unwrap();
    let w = ObjectiveWeights {
        n_biomes: 3,
        ..Default::default()
    };
    let model = ObjectiveModel::new(&t, &w);
    let q = build_qubo(&t, &w, 3, 100.0, 0.0).unwrap();
    for mask in 0u64..256 {
        let x = portfolio_from_mask(8, mask);
        let oracle = objective_from_mask(&t, &w, mask);
        assert!((objective_score(&t, &w, &x).unwrap() - oracle).abs() < 1e-12);
        assert!((model.score(&x) - oracle).abs() < 1e-12);
        assert!(
            (q.implied_objective(&x).unwrap() - oracle).abs() < 1e-9,
            "mask {mask:08b}"
        );
        let excess = mask.count_ones() as f64 - 3.0;
        let raw = -oracle + 100.0 * excess * excess;
        assert!((q.raw_energy(&x).unwrap() - raw).abs() < 1e-9);
    }
}

#[test]
fn feasible_minimum_is_objective_maximum() {
    let t = synthesize_table(12, 21).unwrap();
    let w = ObjectiveWeights::default();
    let q = build_qubo(&t, &w, 4, 100.0, 0.0).unwrap();
    let (best_mask, _) = common::brute_force_best(&t, &w, 4);
    let argmin = (0u64..1 << 12)
        .min_by(|&a, &b| {
            let ea = q.penalized_energy(&portfolio_from_mask(12, a)).unwrap();
            let eb = q.penalized_energy(&portfolio_from_mask(12, b)).unwrap();
            ea.total_cmp(&eb)
        })
        .unwrap();
    assert_eq!(argmin, best_mask);
}

#[test]
fn scaling_keeps_the_argmin() {
    let t = synthesize_table(10, 2).unwrap();
    let q = build_qubo(&t, &ObjectiveWeights::default(), 3, 100.0, 0.0).unwrap();
    let max = q.entries().map(|(_, _, v)| v.abs()).fold(0.0, f64::max);
    assert!((max - 1.0).abs() < 1e-15);
    // unscaled energies are a positive multiple, so orderings coincide
    let mut by_scaled: Vec<u64> = (0u64..1 << 10).collect();
    let mut by_raw = by_scaled.clone();
    by_scaled.sort_by(|&a, &b| {
        q.penalized_energy(&portfolio_from_mask(10, a))
            .unwrap()
            .total_cmp(&q.penalized_energy(&portfolio_from_mask(10, b)).unwrap())
            .then(a.cmp(&b))
    });
    by_raw.sort_by(|&a, &b| {
        q.raw_energy(&portfolio_from_mask(10, a))
            .unwrap()
            .total_cmp(&q.raw_energy(&portfolio_from_mask(10, b)).unwrap())
            .then(a.cmp(&b))
    });
    assert_eq!(by_scaled[0], by_raw[0]);
}

#[test]
fn sparsification_error_is_small_on_calibration_instance() {
    let t = synthesize_table(20, 42).unwrap();
    let w = ObjectiveWeights::default();
    let dense = build_qubo(&t, &w, 5, 100.0, 0.0).unwrap();
    let sparse = build_qubo(&t, &w, 5, 100.0, 0.01).unwrap();
    assert_eq!(dense.dropped_count(), 0);
    assert!(sparse.dropped_count() > 0);

    // at the optimum, and for what the truncated model would pick instead
    let (best_mask, best) = common::brute_force_best(&t, &w, 5);
    let at_best = sparse
        .implied_objective(&portfolio_from_mask(20, best_mask))
        .unwrap();
    assert!(
        (at_best - best).abs() / best.abs() < 0.01,
        "{at_best} vs {best}"
    );
    let sparse_pick = common::masks_of_weight(20, 5)
        .into_iter()
        .max_by(|&a, &b| {
            let sa = sparse
                .implied_objective(&portfolio_from_mask(20, a))
                .unwrap();
            let sb = sparse
                .implied_objective(&portfolio_from_mask(20, b))
                .unwrap();
            sa.total_cmp(&sb).then(b.cmp(&a))
        })
        .unwrap();
    let realized = objective_from_mask(&t, &w, sparse_pick);
    assert!(
        (best - realized) / best.abs() < 0.01,
        "{realized} vs {best}"
    );

    // averaged over random feasible portfolios
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut total = 0.0;
    for _ in 0..2000 {
        let idx = rand::seq::index::sample(&mut rng, 20, 5).into_vec();
        let mask = idx.iter().fold(0u64, |m, &i| m | 1 << i);
        let x = portfolio_from_mask(20, mask);
        let exact = objective_from_mask(&t, &w, mask);
        assert!((dense.implied_objective(&x).unwrap() - exact).abs() < 1e-9);
        total += (sparse.implied_objective(&x).unwrap() - exact).abs() / exact.abs();
    }
    let mean = total / 2000.0;
    assert!(mean < 0.01, "mean relative error {mean}");
}

#[test]
fn ising_matches_qubo_on_every_state() {
    for seed in 0..5 {
        let t = synthesize_table(9, seed).unwrap();
        let q = build_qubo(&t, &ObjectiveWeights::default(), 4, 100.0, 0.01).unwrap();
        let m = qubo_to_ising(&q);
        let diag = m.diagonal();
        for mask in 0u64..1 << 9 {
            let x = portfolio_from_mask(9, mask);
            let e = ising_energy(&m, &spins(&x)).unwrap();
            let expect = q.energy_with_constant(&x).unwrap();
            assert!((e - expect).abs() < 1e-9);
            assert!((m.energy_of_index(mask as usize) - e).abs() < 1e-12);
            assert!((diag[mask as usize] + m.offset() - e).abs() < 1e-9);
        }
    }
}

fn upper_triangular(n: usize, seed: u64) -> QuboProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            if rng.gen_bool(0.7) {
                m.set(i, j, rng.gen_range(-3.0..3.0));
            }
        }
    }
    let constant = rng.gen_range(-2.0..2.0);
    QuboProblem::from_parts(m, 1, 1.0, 1.0, 0.0, 0, constant).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ising_transform_is_exact(n in 1usize..=10, seed in any::<u64>()) {
        let q = upper_triangular(n, seed);
        let m = qubo_to_ising(&q);
        for mask in 0u64..1 << n {
            let x = portfolio_from_mask(n, mask);
            // x^T Q x written directly over the upper triangle
            let mut direct = q.constant();
            for i in 0..n {
                for j in i..n {
                    if x.is_selected(i) && x.is_selected(j) {
                        direct += q.get(i, j);
                    }
                }
            }
            prop_assert!((ising_energy(&m, &spins(&x)).unwrap() - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn qubo_entries_stay_in_unit_box(n in 3usize..=14, k_frac in 0.1f64..0.9, seed in any::<u64>()) {
        let t = synthesize_table(n, seed).unwrap();
        let k = ((n as f64 * k_frac) as usize).clamp(1, n - 1);
        let q = build_qubo(&t, &ObjectiveWeights::default(), k, 100.0, 0.0).unwrap();
        let mut max = 0.0f64;
        for (i, j, v) in q.entries() {
            prop_assert!(i <= j);
            prop_assert!(v.abs() <= 1.0 + 1e-15);
            max = max.max(v.abs());
        }
        prop_assert!((max - 1.0).abs() < 1e-15);
        prop_assert_eq!(q.offdiagonal_nonzeros(), n * (n - 1) / 2);
    }
}
