#![allow(dead_code)]

use qport::data::MunicipalityTable;
use qport::qubo::{ObjectiveWeights, Portfolio};

/// Objective written out from the table for a bitmask selection, pair by
/// pair over the full `i < j` range.
pub fn objective_from_mask(t: &MunicipalityTable, w: &ObjectiveWeights, mask: u64) -> f64 {
    let n = t.len();
    let on = |i: usize| (mask >> i) & 1 == 1;
    let mut carbon = 0.0;
    let mut bio = 0.0;
    let mut social = 0.0;
    for i in (0..n).filter(|&i| on(i)) {
        let r = &t.records()[i];
        carbon += r.carbon;
        bio += r.biodiversity;
        social += r.social;
        for j in (i + 1..n).filter(|&j| on(j)) {
            carbon += w.lambda_carbon * t.adjacency().get(i, j);
            bio += (w.n_biomes as f64).sqrt() * w.lambda_biodiversity * t.bio_synergy().get(i, j);
            social += w.lambda_social * t.soc_synergy().get(i, j);
        }
    }
    w.w_carbon * carbon + w.w_biodiversity * bio + w.w_social * social
}

pub fn portfolio_from_mask(n: usize, mask: u64) -> Portfolio {
    Portfolio::from_bits((0..n).map(|i| (mask >> i) & 1 == 1).collect())
}

/// All `k`-subsets of `0..n` as bitmasks.
pub fn masks_of_weight(n: usize, k: usize) -> Vec<u64> {
    (0u64..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .collect()
}

/// Best feasible score by brute force, with the lexicographically smallest
/// MSB-first bitstring (= smallest mask) among ties.
pub fn brute_force_best(t: &MunicipalityTable, w: &ObjectiveWeights, k: usize) -> (u64, f64) {
    let mut best = (0u64, f64::NEG_INFINITY);
    for m in masks_of_weight(t.len(), k) {
        let v = objective_from_mask(t, w, m);
        if v > best.1 + 1e-12 || ((v - best.1).abs() <= 1e-12 && m < best.0) {
            best = (m, v);
        }
    }
    best
}
