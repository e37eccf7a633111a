//! Dense statevector simulation of warm-started QAOA with an XY mixer.
//!
//! Qubit `i` is bit `i` of the basis index (qubit 0 is the least significant
//! bit). The register starts in the basis state of a classical portfolio, and
//! each layer applies the diagonal cost phase `exp(-i gamma E(z))` followed by
//! one pass of two-qubit XY rotations over the mixer edges in ascending
//! order.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::MunicipalityTable;
use crate::error::{Error, Result};
use crate::ising::IsingModel;
use crate::qubo::{ObjectiveWeights, Portfolio};
use crate::shots::ShotRecord;

/// Largest register the dense simulator accepts (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

pub const DEFAULT_GAMMA_BASE: f64 = 0.05;
pub const DEFAULT_BETA: f64 = 0.20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MixerTopology {
    /// `0-1, 1-2, ..., (n-1)-0`.
    #[default]
    Ring,
    Complete,
    Custom(Vec<(usize, usize)>),
}

impl MixerTopology {
    /// Normalized `(low, high)` edges in ascending order, duplicates removed.
    pub fn edges(&self, n: usize) -> Result<Vec<(usize, usize)>> {
        let raw: Vec<(usize, usize)> = match self {
            MixerTopology::Ring => match n {
                0 | 1 => Vec::new(),
                _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
            },
            MixerTopology::Complete => (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .collect(),
            MixerTopology::Custom(e) => e.clone(),
        };
        let mut edges = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            if a == b || a >= n || b >= n {
                return Err(Error::InvalidArgument(format!(
                    "mixer edge ({a}, {b}) is not a pair of distinct qubits below {n}"
                )));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(edges)
    }
}

/// How `beta` maps onto the rotation angle inside the `{|01>, |10>}` block.
///
/// On that block `X_i X_j + Y_i Y_j` acts as `2 sigma_x`, so
/// `exp(-i beta (XX + YY) / 4)` rotates by `beta / 2` and
/// `exp(-i beta (XX + YY))` rotates by `2 beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum XyConvention {
    /// Generator `(XX + YY) / 4`; angle `beta / 2`.
    #[default]
    Quarter,
    /// Generator `XX + YY`; angle `2 beta`.
    Full,
}

impl XyConvention {
    pub fn rotation_angle(self, beta: f64) -> f64 {
        match self {
            XyConvention::Quarter => beta / 2.0,
            XyConvention::Full => 2.0 * beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QaoaParams {
    pub gamma: f64,
    pub beta: f64,
    pub layers: usize,
    pub topology: MixerTopology,
    pub convention: XyConvention,
}

impl Default for QaoaParams {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA_BASE,
            beta: DEFAULT_BETA,
            layers: 1,
            topology: MixerTopology::Ring,
            convention: XyConvention::Quarter,
        }
    }
}

impl QaoaParams {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::InvalidArgument(
                "QAOA needs at least one layer".into(),
            ));
        }
        if !(self.gamma.is_finite() && self.beta.is_finite()) {
            return Err(Error::InvalidArgument("QAOA angles must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {n} qubits",
                amps.len()
            )));
        }
        Ok(Self { n, amps })
    }

    /// Uniform superposition over all basis states.
    pub fn uniform(n: usize) -> Result<Self> {
        check_width(n)?;
        let dim = 1usize << n;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Self {
            n,
            amps: vec![a; dim],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Probability mass on basis states of Hamming weight `k`.
    pub fn weight_mass(&self, k: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i.count_ones() as usize == k)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Mass outside the weight-`k` subspace.
    pub fn leakage(&self, k: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i.count_ones() as usize != k)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

fn check_width(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::TooLarge(format!(
            "{n} qubits exceeds the simulator limit of {MAX_QUBITS}"
        )));
    }
    Ok(())
}

pub fn warm_start_state(n: usize, x0: &Portfolio) -> Result<Statevector> {
    check_width(n)?;
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "warm start has {} bits, register has {n}",
            x0.len()
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n];
    amps[x0.to_basis_index()] = Complex64::new(1.0, 0.0);
    Ok(Statevector { n, amps })
}

/// Multiplies every amplitude by `exp(-i gamma E(z))`, `E` from the model
/// (offset dropped as a global phase).
pub fn apply_cost_layer(state: &mut Statevector, model: &IsingModel, gamma: f64) -> Result<()> {
    if model.n() != state.n {
        return Err(Error::Dimension(format!(
            "model has {} spins, state has {} qubits",
            model.n(),
            state.n
        )));
    }
    apply_cost_phases(state, &model.diagonal(), gamma);
    Ok(())
}

/// Cost layer from a precomputed energy diagonal.
pub fn apply_cost_phases(state: &mut Statevector, diagonal: &[f64], gamma: f64) {
    debug_assert_eq!(diagonal.len(), state.amps.len());
    if gamma == 0.0 {
        return;
    }
    for (a, &e) in state.amps.iter_mut().zip(diagonal) {
        *a *= Complex64::from_polar(1.0, -gamma * e);
    }
}

/// Rotates by `theta` inside the `{|01>, |10>}` block of qubits `i`, `j`:
/// `a01' = cos(theta) a01 - i sin(theta) a10` and symmetrically.
pub fn apply_xy_rotation(state: &mut Statevector, i: usize, j: usize, theta: f64) {
    let (c, s) = (theta.cos(), theta.sin());
    let mi = 1usize << i;
    let mj = 1usize << j;
    let minus_is = Complex64::new(0.0, -s);
    for idx in 0..state.amps.len() {
        // visit each pair once, from the member with bit i set and bit j clear
        if idx & mi != 0 && idx & mj == 0 {
            let partner = idx ^ mi ^ mj;
            let a = state.amps[idx];
            let b = state.amps[partner];
            state.amps[idx] = a * c + b * minus_is;
            state.amps[partner] = a * minus_is + b * c;
        }
    }
}

pub fn apply_xy_mixer(
    state: &mut Statevector,
    edges: &[(usize, usize)],
    beta: f64,
    convention: XyConvention,
) -> Result<()> {
    for &(i, j) in edges {
        if i == j || i >= state.n || j >= state.n {
            return Err(Error::InvalidArgument(format!(
                "mixer edge ({i}, {j}) invalid for {} qubits",
                state.n
            )));
        }
    }
    let theta = convention.rotation_angle(beta);
    for &(i, j) in edges {
        apply_xy_rotation(state, i, j, theta);
    }
    Ok(())
}

/// Warm start followed by `layers` rounds of cost and mixer.
pub fn run_qaoa(model: &IsingModel, params: &QaoaParams, x0: &Portfolio) -> Result<Statevector> {
    params.validate()?;
    let n = model.n();
    let mut state = warm_start_state(n, x0)?;
    let diag = model.diagonal();
    let edges = params.topology.edges(n)?;
    for _ in 0..params.layers {
        apply_cost_phases(&mut state, &diag, params.gamma);
        apply_xy_mixer(&mut state, &edges, params.beta, params.convention)?;
    }
    Ok(state)
}

/// `<psi| H_C |psi>` including the model offset.
pub fn expectation(state: &Statevector, model: &IsingModel) -> f64 {
    expectation_with_diagonal(state, &model.diagonal()) + model.offset()
}

/// Offset-free expectation against a precomputed diagonal.
pub fn expectation_with_diagonal(state: &Statevector, diagonal: &[f64]) -> f64 {
    state
        .amps
        .iter()
        .zip(diagonal)
        .map(|(a, e)| a.norm_sqr() * e)
        .sum()
}

/// Categorical sampler over the basis states of a state.
pub(crate) struct OutcomeSampler {
    dist: WeightedIndex<f64>,
}

impl OutcomeSampler {
    pub(crate) fn new(state: &Statevector) -> Result<Self> {
        let dist = WeightedIndex::new(state.probabilities())
            .map_err(|e| Error::InvalidArgument(format!("cannot sample state: {e}")))?;
        Ok(Self { dist })
    }

    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        self.dist.sample(rng)
    }
}

/// Multinomial measurement of `shots` outcomes.
pub fn sample_shots(state: &Statevector, shots: u64, seed: u64) -> Result<ShotRecord> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let sampler = OutcomeSampler::new(state)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: HashMap<usize, u64> = HashMap::new();
    for _ in 0..shots {
        *counts.entry(sampler.sample(&mut rng)).or_insert(0) += 1;
    }
    Ok(ShotRecord::from_index_counts(state.n, counts, 1.0, seed))
}

/// Population standard deviation of the weighted per-candidate scores.
pub fn score_spread(table: &MunicipalityTable, weights: &ObjectiveWeights) -> f64 {
    let scores: Vec<f64> = table
        .records()
        .iter()
        .map(|r| {
            weights.w_carbon * r.carbon
                + weights.w_biodiversity * r.biodiversity
                + weights.w_social * r.social
        })
        .collect();
    if scores.is_empty() {
        return 0.0;
    }
    let m = scores.iter().sum::<f64>() / scores.len() as f64;
    (scores.iter().map(|s| (s - m).powi(2)).sum::<f64>() / scores.len() as f64).sqrt()
}

/// Fixed warm-start angles: `gamma = 0.05 (1 + sigma)`, `beta = 0.20`, one layer.
pub fn warm_params(table: &MunicipalityTable, weights: &ObjectiveWeights) -> QaoaParams {
    QaoaParams {
        gamma: DEFAULT_GAMMA_BASE * (1.0 + score_spread(table, weights)),
        beta: DEFAULT_BETA,
        layers: 1,
        ..Default::default()
    }
}
