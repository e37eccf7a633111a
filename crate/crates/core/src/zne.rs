//! Noise amplification on the simulator and zero-noise extrapolation.
//!
//! Noise is a two-qubit depolarizing channel applied after every mixer edge
//! (and, optionally, after every ZZ interaction of the cost layer), sampled
//! as Pauli trajectories on the statevector. A fold factor `lambda` raises
//! the per-gate error probability to `1 - (1 - q)^lambda`, i.e. the channel
//! composed `lambda` times.

use std::collections::HashMap;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingModel;
use crate::par_map;
use crate::qaoa::{
    apply_cost_phases, apply_xy_rotation, run_qaoa, sample_shots, warm_start_state, OutcomeSampler,
    QaoaParams, Statevector,
};
use crate::qubo::Portfolio;
use crate::shots::{bitstring_to_index, ShotRecord};
use crate::stats::percentile;

/// Simulated final states kept per distinct error pattern, in amplitudes.
const PATTERN_CACHE_BUDGET: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub two_qubit_depolarizing_prob: f64,
    pub fold_factor: f64,
    pub seed: u64,
    /// Independent error trajectories; `None` samples one per shot.
    pub trajectories: Option<usize>,
    /// Also inject the channel after each ZZ term of the cost layer.
    pub noisy_cost_layer: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            two_qubit_depolarizing_prob: 0.01,
            fold_factor: 1.0,
            seed: 42,
            trajectories: None,
            noisy_cost_layer: false,
        }
    }
}

/// Per-gate error probability after folding: `1 - (1 - q)^lambda`.
pub fn effective_error(base_prob: f64, lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&base_prob) {
        return Err(Error::OutOfRange(format!(
            "base error probability {base_prob} outside [0, 1)"
        )));
    }
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "fold factor {lambda} must be >= 1"
        )));
    }
    Ok(1.0 - (1.0 - base_prob).powf(lambda))
}

/// Location after which a channel may fire.
#[derive(Debug, Clone, Copy)]
enum Site {
    Mixer(usize, usize),
    Coupling(usize, usize, f64),
}

fn apply_pauli(state: &mut Statevector, q: usize, pauli: u8) {
    let m = 1usize << q;
    let amps = state.amplitudes_mut();
    match pauli {
        0 => {}
        1 => {
            for idx in 0..amps.len() {
                if idx & m == 0 {
                    amps.swap(idx, idx | m);
                }
            }
        }
        2 => {
            let i = num_complex::Complex64::new(0.0, 1.0);
            for idx in 0..amps.len() {
                if idx & m == 0 {
                    let (a0, a1) = (amps[idx], amps[idx | m]);
                    amps[idx] = -i * a1;
                    amps[idx | m] = i * a0;
                }
            }
        }
        3 => {
            for (idx, a) in amps.iter_mut().enumerate() {
                if idx & m != 0 {
                    *a = -*a;
                }
            }
        }
        _ => unreachable!("single-qubit Pauli index {pauli}"),
    }
}

/// Applies the two-qubit Pauli `code` in `1..16`: low two bits act on `a`,
/// high two bits on `b` (0 = I, 1 = X, 2 = Y, 3 = Z).
fn apply_two_qubit_pauli(state: &mut Statevector, a: usize, b: usize, code: u8) {
    apply_pauli(state, a, code & 3);
    apply_pauli(state, b, code >> 2);
}

fn apply_zz_phase(state: &mut Statevector, a: usize, b: usize, angle: f64) {
    let plus = num_complex::Complex64::from_polar(1.0, -angle);
    let minus = num_complex::Complex64::from_polar(1.0, angle);
    for (idx, amp) in state.amplitudes_mut().iter_mut().enumerate() {
        let parity = ((idx >> a) ^ (idx >> b)) & 1;
        *amp *= if parity == 0 { plus } else { minus };
    }
}

fn apply_field_phases(state: &mut Statevector, h: &[f64], gamma: f64) {
    for (idx, amp) in state.amplitudes_mut().iter_mut().enumerate() {
        let mut e = 0.0;
        for (q, &hq) in h.iter().enumerate() {
            e += if (idx >> q) & 1 == 1 { -hq } else { hq };
        }
        *amp *= num_complex::Complex64::from_polar(1.0, -gamma * e);
    }
}

struct NoisyCircuit<'a> {
    model: &'a IsingModel,
    params: &'a QaoaParams,
    x0: &'a Portfolio,
    diagonal: Vec<f64>,
    layer_sites: Vec<Site>,
    noisy_cost: bool,
}

impl NoisyCircuit<'_> {
    fn sites_per_layer(&self) -> usize {
        self.layer_sites.len()
    }

    /// Runs the circuit with Pauli `code` injected after each `(site, code)`
    /// of `pattern` (site numbering runs over all layers).
    fn simulate(&self, pattern: &[(u32, u8)]) -> Result<Statevector> {
        let n = self.model.n();
        let mut state = warm_start_state(n, self.x0)?;
        let mut next = pattern.iter().peekable();
        let per_layer = self.sites_per_layer();
        for layer in 0..self.params.layers {
            if !self.noisy_cost {
                apply_cost_phases(&mut state, &self.diagonal, self.params.gamma);
            } else {
                apply_field_phases(&mut state, self.model.fields(), self.params.gamma);
            }
            let theta = self.params.convention.rotation_angle(self.params.beta);
            for (offset, site) in self.layer_sites.iter().enumerate() {
                let (a, b) = match *site {
                    Site::Coupling(a, b, j) => {
                        apply_zz_phase(&mut state, a, b, self.params.gamma * j);
                        (a, b)
                    }
                    Site::Mixer(a, b) => {
                        apply_xy_rotation(&mut state, a, b, theta);
                        (a, b)
                    }
                };
                let global = (layer * per_layer + offset) as u32;
                while let Some(&&(s, code)) = next.peek() {
                    if s != global {
                        break;
                    }
                    apply_two_qubit_pauli(&mut state, a, b, code);
                    next.next();
                }
            }
        }
        Ok(state)
    }
}

/// Shot record from a Pauli-trajectory simulation at `noise.fold_factor`.
pub fn noisy_run(
    model: &IsingModel,
    params: &QaoaParams,
    x0: &Portfolio,
    noise: &NoiseConfig,
    shots: u64,
) -> Result<ShotRecord> {
    params.validate()?;
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let p_eff = effective_error(noise.two_qubit_depolarizing_prob, noise.fold_factor)?;
    if p_eff == 0.0 {
        let state = run_qaoa(model, params, x0)?;
        let mut record = sample_shots(&state, shots, noise.seed)?;
        record.noise_scale = noise.fold_factor;
        return Ok(record);
    }

    let n = model.n();
    let mut layer_sites = Vec::new();
    if noise.noisy_cost_layer {
        layer_sites.extend(
            model
                .couplings()
                .iter()
                .filter(|(_, &v)| v != 0.0)
                .map(|(&(a, b), &v)| Site::Coupling(a, b, v)),
        );
    }
    layer_sites.extend(
        params
            .topology
            .edges(n)?
            .into_iter()
            .map(|(a, b)| Site::Mixer(a, b)),
    );
    let circuit = NoisyCircuit {
        model,
        params,
        x0,
        diagonal: model.diagonal(),
        layer_sites,
        noisy_cost: noise.noisy_cost_layer,
    };
    let total_sites = circuit.sites_per_layer() * params.layers;

    let trajectories = noise
        .trajectories
        .map_or(shots, |t| (t.max(1) as u64).min(shots));
    let base = shots / trajectories;
    let extra = shots % trajectories;

    let dim = 1usize << n;
    let mut cache: HashMap<Vec<(u32, u8)>, Rc<OutcomeSampler>> = HashMap::new();
    let mut cached_amplitudes = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut counts: HashMap<usize, u64> = HashMap::new();
    let mut pattern = Vec::new();
    for t in 0..trajectories {
        pattern.clear();
        for site in 0..total_sites {
            if rng.gen::<f64>() < p_eff {
                pattern.push((site as u32, rng.gen_range(1u8..16)));
            }
        }
        let sampler = match cache.get(&pattern) {
            Some(s) => Rc::clone(s),
            None => {
                let s = Rc::new(OutcomeSampler::new(&circuit.simulate(&pattern)?)?);
                if cached_amplitudes + dim <= PATTERN_CACHE_BUDGET {
                    cached_amplitudes += dim;
                    cache.insert(pattern.clone(), Rc::clone(&s));
                }
                s
            }
        };
        let take = base + u64::from(t < extra);
        for _ in 0..take {
            *counts.entry(sampler.sample(&mut rng)).or_insert(0) += 1;
        }
    }
    Ok(ShotRecord::from_index_counts(
        n,
        counts,
        noise.fold_factor,
        noise.seed,
    ))
}

/// Least-squares line; `intercept` is the zero-noise estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// Coefficient of determination; 1 when the points have no spread.
    pub r2: f64,
}

fn distinct_lambdas(points: &[(f64, f64)]) -> usize {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.len()
}

pub fn extrapolate_linear(points: &[(f64, f64)]) -> Result<LinearFit> {
    if distinct_lambdas(points) < 2 {
        return Err(Error::InvalidArgument(
            "linear extrapolation needs at least two distinct noise scales".into(),
        ));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LinearFit {
        intercept,
        slope,
        r2,
    })
}

/// Least-squares parabola evaluated at zero noise. Three points give the
/// interpolating parabola.
pub fn extrapolate_quadratic(points: &[(f64, f64)]) -> Result<f64> {
    if distinct_lambdas(points) < 3 {
        return Err(Error::InvalidArgument(
            "quadratic extrapolation needs at least three distinct noise scales".into(),
        ));
    }
    // centre the abscissa for conditioning: y = a + b u + c u^2, u = x - mx
    let mx = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(x, y) in points {
        let u = x - mx;
        let basis = [1.0, u, u * u];
        for r in 0..3 {
            atb[r] += basis[r] * y;
            for c in 0..3 {
                ata[r][c] += basis[r] * basis[c];
            }
        }
    }
    let [a, b, c] =
        solve3(ata, atb).ok_or_else(|| Error::InvalidArgument("singular quadratic fit".into()))?;
    let u0 = -mx;
    Ok(a + b * u0 + c * u0 * u0)
}

fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in (col + 1)..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = ((row + 1)..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (v[row] - s) / m[row][row];
    }
    Some(x)
}

/// Zero-noise combination for scales `(1, 2, 3)`.
pub fn richardson(e1: f64, e2: f64, e3: f64) -> f64 {
    3.0 * e1 - 3.0 * e2 + e3
}

/// Richardson elimination on three points. Scales `(1, 2, 3)` use the
/// closed form; other scales use the Lagrange weights at zero.
pub fn richardson_points(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() != 3 || distinct_lambdas(points) != 3 {
        return Err(Error::InvalidArgument(
            "Richardson extrapolation needs exactly three distinct noise scales".into(),
        ));
    }
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0));
    if p[0].0 == 1.0 && p[1].0 == 2.0 && p[2].0 == 3.0 {
        return Ok(richardson(p[0].1, p[1].1, p[2].1));
    }
    let mut e0 = 0.0;
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if i != j {
                w *= p[j].0 / (p[j].0 - p[i].0);
            }
        }
        e0 += w * p[i].1;
    }
    Ok(e0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZneMethod {
    Linear,
    Quadratic,
    Richardson,
}

impl ZneMethod {
    pub const ALL: [ZneMethod; 3] = [
        ZneMethod::Linear,
        ZneMethod::Quadratic,
        ZneMethod::Richardson,
    ];

    pub fn extrapolate(self, points: &[(f64, f64)]) -> Result<f64> {
        match self {
            ZneMethod::Linear => extrapolate_linear(points).map(|f| f.intercept),
            ZneMethod::Quadratic => extrapolate_quadratic(points),
            ZneMethod::Richardson => richardson_points(points),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ZneMethod::Linear => "linear",
            ZneMethod::Quadratic => "quadratic",
            ZneMethod::Richardson => "richardson",
        }
    }
}

/// Percentile-bootstrap 95% intervals per method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapIntervals {
    pub linear: Option<[f64; 2]>,
    pub quadratic: Option<[f64; 2]>,
    pub richardson: Option<[f64; 2]>,
    pub resamples: usize,
    pub seed: u64,
}

impl BootstrapIntervals {
    pub fn get(&self, method: ZneMethod) -> Option<[f64; 2]> {
        match method {
            ZneMethod::Linear => self.linear,
            ZneMethod::Quadratic => self.quadratic,
            ZneMethod::Richardson => self.richardson,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZneEstimate {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub linear_e0: f64,
    pub linear_r2: f64,
    pub quadratic_e0: Option<f64>,
    /// Always `None`: with three points the parabola has no residual
    /// degrees of freedom.
    pub quadratic_r2: Option<f64>,
    pub richardson_e0: Option<f64>,
    pub bootstrap: Option<BootstrapIntervals>,
}

impl ZneEstimate {
    pub fn from_points(lambdas: &[f64], values: &[f64]) -> Result<Self> {
        if lambdas.len() != values.len() || lambdas.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need matching lambda/value lists of length >= 2, got {} and {}",
                lambdas.len(),
                values.len()
            )));
        }
        let points: Vec<(f64, f64)> = lambdas
            .iter()
            .copied()
            .zip(values.iter().copied())
            .collect();
        let lin = extrapolate_linear(&points)?;
        let quadratic_e0 = (distinct_lambdas(&points) >= 3)
            .then(|| extrapolate_quadratic(&points))
            .transpose()?;
        let richardson_e0 = (points.len() == 3 && distinct_lambdas(&points) == 3)
            .then(|| richardson_points(&points))
            .transpose()?;
        Ok(Self {
            lambdas: lambdas.to_vec(),
            values: values.to_vec(),
            linear_e0: lin.intercept,
            linear_r2: lin.r2,
            quadratic_e0,
            quadratic_r2: None,
            richardson_e0,
            bootstrap: None,
        })
    }

    pub fn e0(&self, method: ZneMethod) -> Option<f64> {
        match method {
            ZneMethod::Linear => Some(self.linear_e0),
            ZneMethod::Quadratic => self.quadratic_e0,
            ZneMethod::Richardson => self.richardson_e0,
        }
    }
}

/// A shot record flattened to per-outcome values and cumulative counts.
struct ValuedRecord {
    lambda: f64,
    values: Vec<f64>,
    cumulative: Vec<u64>,
    shots: u64,
}

impl ValuedRecord {
    fn new(record: &ShotRecord, scorer: &(dyn Fn(&str) -> f64 + Sync)) -> Result<Self> {
        if record.shots == 0 || record.counts.is_empty() {
            return Err(Error::InvalidArgument("empty shot record".into()));
        }
        record.validate()?;
        let mut values = Vec::with_capacity(record.counts.len());
        let mut cumulative = Vec::with_capacity(record.counts.len());
        let mut acc = 0;
        for (key, &c) in &record.counts {
            acc += c;
            values.push(scorer(key));
            cumulative.push(acc);
        }
        Ok(Self {
            lambda: record.noise_scale,
            values,
            cumulative,
            shots: record.shots,
        })
    }

    fn mean(&self) -> f64 {
        let mut prev = 0;
        let mut s = 0.0;
        for (v, &c) in self.values.iter().zip(&self.cumulative) {
            s += v * (c - prev) as f64;
            prev = c;
        }
        s / self.shots as f64
    }

    fn resampled_mean(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut s = 0.0;
        for _ in 0..self.shots {
            let u = rng.gen_range(0..self.shots);
            let slot = self.cumulative.partition_point(|&c| c <= u);
            s += self.values[slot];
        }
        s / self.shots as f64
    }
}

/// Per-record means of `scorer`, as `(lambda, mean)` points.
pub fn record_points(
    records: &[ShotRecord],
    scorer: &(dyn Fn(&str) -> f64 + Sync),
) -> Result<Vec<(f64, f64)>> {
    records
        .iter()
        .map(|r| ValuedRecord::new(r, scorer).map(|v| (v.lambda, v.mean())))
        .collect()
}

/// Re-extrapolated estimates from `b` shot-level resamples. Resample `r`
/// draws from its own ChaCha stream, so the result does not depend on
/// scheduling.
fn bootstrap_estimates(
    records: &[ShotRecord],
    methods: &[ZneMethod],
    b: usize,
    seed: u64,
    scorer: &(dyn Fn(&str) -> f64 + Sync),
) -> Result<Vec<Vec<f64>>> {
    if b == 0 {
        return Err(Error::InvalidArgument("bootstrap needs b >= 1".into()));
    }
    if records.is_empty() {
        return Err(Error::InvalidArgument("no shot records to resample".into()));
    }
    let valued: Vec<ValuedRecord> = records
        .iter()
        .map(|r| ValuedRecord::new(r, scorer))
        .collect::<Result<_>>()?;
    let per_resample: Vec<Result<Vec<f64>>> = par_map(b, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let points: Vec<(f64, f64)> = valued
            .iter()
            .map(|v| (v.lambda, v.resampled_mean(&mut rng)))
            .collect();
        methods.iter().map(|m| m.extrapolate(&points)).collect()
    });
    let mut by_method = vec![Vec::with_capacity(b); methods.len()];
    for row in per_resample {
        for (slot, v) in by_method.iter_mut().zip(row?) {
            slot.push(v);
        }
    }
    Ok(by_method)
}

fn interval(mut estimates: Vec<f64>) -> [f64; 2] {
    estimates.sort_by(f64::total_cmp);
    [percentile(&estimates, 2.5), percentile(&estimates, 97.5)]
}

/// 95% percentile-bootstrap interval of one extrapolation method.
pub fn bootstrap_ci(
    records: &[ShotRecord],
    method: ZneMethod,
    b: usize,
    seed: u64,
    scorer: &(dyn Fn(&str) -> f64 + Sync),
) -> Result<[f64; 2]> {
    let mut est = bootstrap_estimates(records, &[method], b, seed, scorer)?;
    Ok(interval(est.remove(0)))
}

/// Intervals for every method applicable to the records, from one shared
/// set of resamples.
pub fn bootstrap_all(
    records: &[ShotRecord],
    b: usize,
    seed: u64,
    scorer: &(dyn Fn(&str) -> f64 + Sync),
) -> Result<BootstrapIntervals> {
    let points: Vec<(f64, f64)> = records.iter().map(|r| (r.noise_scale, 0.0)).collect();
    let methods: Vec<ZneMethod> = ZneMethod::ALL
        .into_iter()
        .filter(|m| m.extrapolate(&points).is_ok())
        .collect();
    let est = bootstrap_estimates(records, &methods, b, seed, scorer)?;
    let mut out = BootstrapIntervals {
        linear: None,
        quadratic: None,
        richardson: None,
        resamples: b,
        seed,
    };
    for (m, e) in methods.into_iter().zip(est) {
        let ci = Some(interval(e));
        match m {
            ZneMethod::Linear => out.linear = ci,
            ZneMethod::Quadratic => out.quadratic = ci,
            ZneMethod::Richardson => out.richardson = ci,
        }
    }
    Ok(out)
}

/// Scorer reporting each outcome in objective units: `-scale * E_ising`.
/// Higher is better; the maximally mixed state scores `-scale * offset`.
pub fn penalized_score_scorer(model: &IsingModel, scale: f64) -> impl Fn(&str) -> f64 + Sync + '_ {
    move |key: &str| -scale * model.energy_of_index(bitstring_to_index(key))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthesize_table;
    use crate::ising::qubo_to_ising;
    use crate::qubo::{build_qubo, ObjectiveWeights};
    use std::collections::BTreeMap;

    #[test]
    fn effective_error_examples() {
        assert_eq!(effective_error(0.02, 1.0).unwrap(), 0.020000000000000018);
        assert!((effective_error(0.02, 1.0).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(effective_error(0.0, 3.0).unwrap(), 0.0);
        assert!((effective_error(0.01, 3.0).unwrap() - 0.029701).abs() < 1e-15);
        assert!(effective_error(1.0, 1.0).is_err());
        assert!(effective_error(-0.1, 1.0).is_err());
        assert!(effective_error(0.1, 0.5).is_err());
    }

    #[test]
    fn effective_error_strictly_increasing() {
        for &q in &[1e-4, 0.01, 0.3, 0.9] {
            let mut prev = effective_error(q, 1.0).unwrap();
            for step in 1..50 {
                let cur = effective_error(q, 1.0 + step as f64 * 0.25).unwrap();
                assert!(cur > prev);
                prev = cur;
            }
        }
    }

    #[test]
    fn linear_examples() {
        let f = extrapolate_linear(&[(1.0, 10.0), (2.0, 8.0), (3.0, 6.0)]).unwrap();
        assert!((f.intercept - 12.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let f = extrapolate_linear(&[(1.0, 4.5), (2.0, 4.5), (3.0, 4.5)]).unwrap();
        assert_eq!(f.intercept, 4.5);
        assert!(extrapolate_linear(&[(2.0, 1.0), (2.0, 3.0)]).is_err());
    }

    #[test]
    fn quadratic_examples() {
        let e = extrapolate_quadratic(&[(1.0, 6.0), (2.0, 11.0), (3.0, 18.0)]).unwrap();
        assert!((e - 3.0).abs() < 1e-9);
        let e = extrapolate_quadratic(&[(1.0, 7.0), (2.0, 7.0), (3.0, 7.0)]).unwrap();
        assert!((e - 7.0).abs() < 1e-12);
        assert!(extrapolate_quadratic(&[(1.0, 1.0), (2.0, 2.0), (2.0, 3.0)]).is_err());
        // overdetermined exact parabola
        let pts: Vec<(f64, f64)> = (1..=6)
            .map(|l| {
                let l = l as f64;
                (l, 2.0 - 0.5 * l + 0.25 * l * l)
            })
            .collect();
        assert!((extrapolate_quadratic(&pts).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn richardson_examples() {
        assert_eq!(richardson(5.0, 5.0, 5.0), 5.0);
        assert_eq!(richardson(10.0, 8.0, 6.0), 12.0);
        // general scales reduce to the interpolating parabola at zero
        let pts = [(1.0, 6.0), (1.5, 8.25), (3.0, 18.0)];
        let expect = extrapolate_quadratic(&pts).unwrap();
        assert!((richardson_points(&pts).unwrap() - expect).abs() < 1e-9);
        assert!(richardson_points(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn estimate_marks_quadratic_r2_undefined() {
        let e = ZneEstimate::from_points(&[1.0, 2.0, 3.0], &[10.0, 8.0, 6.0]).unwrap();
        assert_eq!(e.quadratic_r2, None);
        assert!((e.quadratic_e0.unwrap() - 12.0).abs() < 1e-9);
        assert_eq!(e.richardson_e0, Some(12.0));
        let two = ZneEstimate::from_points(&[1.0, 2.0], &[10.0, 8.0]).unwrap();
        assert_eq!(two.quadratic_e0, None);
        assert_eq!(two.richardson_e0, None);
        assert!(ZneEstimate::from_points(&[1.0], &[1.0]).is_err());
        let json = serde_json::to_value(&e).unwrap();
        assert!(json["quadratic_r2"].is_null());
    }

    fn degenerate(lambda: f64) -> ShotRecord {
        let mut counts = BTreeMap::new();
        counts.insert("0110".to_string(), 500);
        ShotRecord {
            counts,
            shots: 500,
            noise_scale: lambda,
            seed: 0,
        }
    }

    #[test]
    fn bootstrap_degenerate_is_point() {
        let recs: Vec<ShotRecord> = [1.0, 2.0, 3.0].iter().map(|&l| degenerate(l)).collect();
        let scorer = |_: &str| 2.5;
        for m in ZneMethod::ALL {
            let ci = bootstrap_ci(&recs, m, 50, 42, &scorer).unwrap();
            assert!(
                (ci[0] - 2.5).abs() < 1e-9 && (ci[1] - 2.5).abs() < 1e-9,
                "{m:?} {ci:?}"
            );
        }
        assert!(bootstrap_ci(&[], ZneMethod::Linear, 10, 1, &scorer).is_err());
        let mut empty = degenerate(1.0);
        empty.counts.clear();
        empty.shots = 0;
        assert!(bootstrap_ci(&[empty], ZneMethod::Linear, 10, 1, &scorer).is_err());
    }

    fn small_problem() -> (IsingModel, f64, Portfolio) {
        let t = synthesize_table(6, 11).unwrap();
        let w = ObjectiveWeights::default();
        let q = build_qubo(&t, &w, 3, 100.0, 0.0).unwrap();
        let greedy = crate::classical::greedy(&t, &w, 3).unwrap();
        (qubo_to_ising(&q), q.scale(), greedy.portfolio)
    }

    #[test]
    fn zero_noise_matches_noiseless_sampling() {
        let (model, _, x0) = small_problem();
        let params = QaoaParams::default();
        let noise = NoiseConfig {
            two_qubit_depolarizing_prob: 0.0,
            fold_factor: 2.0,
            seed: 9,
            ..Default::default()
        };
        let noisy = noisy_run(&model, &params, &x0, &noise, 2000).unwrap();
        let clean = sample_shots(&run_qaoa(&model, &params, &x0).unwrap(), 2000, 9).unwrap();
        assert_eq!(noisy.counts, clean.counts);
        assert_eq!(noisy.noise_scale, 2.0);
    }

    #[test]
    fn noisy_run_is_deterministic_and_complete() {
        let (model, _, x0) = small_problem();
        let noise = NoiseConfig {
            two_qubit_depolarizing_prob: 0.05,
            fold_factor: 2.0,
            seed: 3,
            ..Default::default()
        };
        let a = noisy_run(&model, &QaoaParams::default(), &x0, &noise, 3000).unwrap();
        let b = noisy_run(&model, &QaoaParams::default(), &x0, &noise, 3000).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert_eq!(a.shots, 3000);
        let capped = NoiseConfig {
            trajectories: Some(7),
            noisy_cost_layer: true,
            ..noise
        };
        let c = noisy_run(&model, &QaoaParams::default(), &x0, &capped, 3000).unwrap();
        assert_eq!(c.shots, 3000);
        c.validate().unwrap();
    }

    #[test]
    fn noisy_cost_layer_without_errors_matches_diagonal_layer() {
        let (model, _, x0) = small_problem();
        let params = QaoaParams {
            gamma: 0.37,
            ..Default::default()
        };
        let mut layer_sites: Vec<Site> = model
            .couplings()
            .iter()
            .map(|(&(a, b), &v)| Site::Coupling(a, b, v))
            .collect();
        layer_sites.extend(
            params
                .topology
                .edges(model.n())
                .unwrap()
                .into_iter()
                .map(|(a, b)| Site::Mixer(a, b)),
        );
        let circuit = NoisyCircuit {
            model: &model,
            params: &params,
            x0: &x0,
            diagonal: model.diagonal(),
            layer_sites,
            noisy_cost: true,
        };
        let decomposed = circuit.simulate(&[]).unwrap();
        let reference = run_qaoa(&model, &params, &x0).unwrap();
        // equal up to the global phase of the dropped offset
        let overlap: num_complex::Complex64 = decomposed
            .amplitudes()
            .iter()
            .zip(reference.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pauli_pair_is_an_involution() {
        let mut s = Statevector::uniform(3).unwrap();
        crate::qaoa::apply_cost_phases(&mut s, &[0.1, 0.5, -0.3, 0.9, 0.0, 0.2, 0.7, -1.0], 1.0);
        let before = s.clone();
        for code in 1u8..16 {
            apply_two_qubit_pauli(&mut s, 0, 2, code);
            apply_two_qubit_pauli(&mut s, 0, 2, code);
            for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
