//! Multi-objective portfolio score and its penalized QUBO form.
//!
//! Solvers minimize, the portfolio objective is maximized. The builder
//! negates every benefit term, so minimizing `x^T Q x` maximizes the score.
//! The penalty constant `lambda_pen * k^2` is kept out of the matrix and
//! carried as [`QuboProblem::constant`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::MunicipalityTable;
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Weights of the three score dimensions and their synergy scalings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveWeights {
    pub w_carbon: f64,
    pub w_biodiversity: f64,
    pub w_social: f64,
    pub lambda_carbon: f64,
    pub lambda_biodiversity: f64,
    pub lambda_social: f64,
    /// Number of biomes; the biodiversity synergy is scaled by its square root.
    pub n_biomes: u32,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            w_carbon: 0.33,
            w_biodiversity: 0.33,
            w_social: 0.34,
            lambda_carbon: 0.15,
            lambda_biodiversity: 0.25,
            lambda_social: 0.20,
            n_biomes: 1,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.w_carbon,
            self.w_biodiversity,
            self.w_social,
            self.lambda_carbon,
            self.lambda_biodiversity,
            self.lambda_social,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "objective weights must be finite and non-negative".into(),
            ));
        }
        let sum = self.w_carbon + self.w_biodiversity + self.w_social;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "w_carbon + w_biodiversity + w_social = {sum}, expected 1"
            )));
        }
        if self.n_biomes == 0 {
            return Err(Error::InvalidArgument("n_biomes must be >= 1".into()));
        }
        Ok(())
    }

    pub fn biome_factor(&self) -> f64 {
        f64::from(self.n_biomes).sqrt()
    }
}

/// Binary selection vector over the candidates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Portfolio {
    bits: Vec<bool>,
}

impl Portfolio {
    pub fn empty(n: usize) -> Self {
        Self {
            bits: vec![false; n],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_indices(n: usize, selected: &[usize]) -> Result<Self> {
        let mut bits = vec![false; n];
        for &i in selected {
            if i >= n {
                return Err(Error::Dimension(format!("index {i} outside 0..{n}")));
            }
            bits[i] = true;
        }
        Ok(Self { bits })
    }

    /// Bit `i` of the basis index is candidate `i` (qubit 0 is the LSB).
    pub fn from_basis_index(n: usize, index: usize) -> Self {
        Self {
            bits: (0..n).map(|i| (index >> i) & 1 == 1).collect(),
        }
    }

    pub fn to_basis_index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| 1usize << i)
            .sum()
    }

    /// Parses an MSB-first bitstring: the last character is candidate 0.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .rev()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!(
                    "bitstring contains `{other}`"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bits })
    }

    /// MSB-first bitstring, matching [`Portfolio::from_bitstring`].
    pub fn to_bitstring(&self) -> String {
        self.bits
            .iter()
            .rev()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn cardinality(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.bits
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }
}

impl fmt::Display for Portfolio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

pub fn feasibility(x: &Portfolio, k: usize) -> bool {
    x.cardinality() == k
}

fn check_dims(table: &MunicipalityTable, x: &Portfolio) -> Result<()> {
    if table.len() != x.len() {
        return Err(Error::Dimension(format!(
            "portfolio has {} bits, table has {} records",
            x.len(),
            table.len()
        )));
    }
    Ok(())
}

/// Reporting score: the three linear sums plus their scaled synergy sums,
/// weighted per dimension. No penalty term.
pub fn objective_score(
    table: &MunicipalityTable,
    weights: &ObjectiveWeights,
    x: &Portfolio,
) -> Result<f64> {
    check_dims(table, x)?;
    let selected: Vec<usize> = x.selected().collect();
    let recs = table.records();
    let (mut c_lin, mut b_lin, mut s_lin) = (0.0, 0.0, 0.0);
    for &i in &selected {
        c_lin += recs[i].carbon;
        b_lin += recs[i].biodiversity;
        s_lin += recs[i].social;
    }
    let (mut c_quad, mut b_quad, mut s_quad) = (0.0, 0.0, 0.0);
    for (a, &i) in selected.iter().enumerate() {
        for &j in &selected[a + 1..] {
            c_quad += table.adjacency().get(i, j);
            b_quad += table.bio_synergy().get(i, j);
            s_quad += table.soc_synergy().get(i, j);
        }
    }
    Ok(weights.w_carbon * (c_lin + weights.lambda_carbon * c_quad)
        + weights.w_biodiversity
            * (b_lin + weights.biome_factor() * weights.lambda_biodiversity * b_quad)
        + weights.w_social * (s_lin + weights.lambda_social * s_quad))
}

/// Precomputed linear and pairwise benefit coefficients, shared by the
/// classical solvers for O(k) move evaluation.
#[derive(Debug, Clone)]
pub struct ObjectiveModel {
    linear: Vec<f64>,
    pair: SquareMatrix,
}

impl ObjectiveModel {
    pub fn new(table: &MunicipalityTable, weights: &ObjectiveWeights) -> Self {
        let n = table.len();
        let linear = table
            .records()
            .iter()
            .map(|r| {
                weights.w_carbon * r.carbon
                    + weights.w_biodiversity * r.biodiversity
                    + weights.w_social * r.social
            })
            .collect();
        let mut pair = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                pair.set_sym(i, j, synergy_coefficient(table, weights, i, j));
            }
        }
        Self { linear, pair }
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    #[inline]
    pub fn linear(&self, i: usize) -> f64 {
        self.linear[i]
    }

    #[inline]
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.pair.get(i, j)
    }

    pub fn score_indices(&self, selected: &[usize]) -> f64 {
        let mut s = 0.0;
        for (a, &i) in selected.iter().enumerate() {
            s += self.linear[i];
            let row = self.pair.row(i);
            for &j in &selected[a + 1..] {
                s += row[j];
            }
        }
        s
    }

    pub fn score(&self, x: &Portfolio) -> f64 {
        let idx: Vec<usize> = x.selected().collect();
        self.score_indices(&idx)
    }

    /// Gain from adding `c` to a set whose members are `selected`.
    pub fn marginal_gain(&self, c: usize, selected: &[usize]) -> f64 {
        let row = self.pair.row(c);
        self.linear[c] + selected.iter().map(|&s| row[s]).sum::<f64>()
    }
}

fn synergy_coefficient(table: &MunicipalityTable, w: &ObjectiveWeights, i: usize, j: usize) -> f64 {
    w.w_carbon * w.lambda_carbon * table.adjacency().get(i, j)
        + w.w_biodiversity
            * w.biome_factor()
            * w.lambda_biodiversity
            * table.bio_synergy().get(i, j)
        + w.w_social * w.lambda_social * table.soc_synergy().get(i, j)
}

/// Scaled, upper-triangular QUBO with its build metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    n: usize,
    k: usize,
    penalty_weight: f64,
    scale: f64,
    sparsity_threshold: f64,
    dropped_count: usize,
    /// `lambda_pen * k^2 / scale`, in the same units as the scaled matrix.
    constant: f64,
    q: SquareMatrix,
}

impl QuboProblem {
    /// Assembles a problem from an already-scaled upper-triangular matrix.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        q: SquareMatrix,
        k: usize,
        penalty_weight: f64,
        scale: f64,
        sparsity_threshold: f64,
        dropped_count: usize,
        constant: f64,
    ) -> Result<Self> {
        let n = q.dim();
        for i in 0..n {
            for j in 0..i {
                if q.get(i, j) != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "QUBO matrix has a nonzero below the diagonal at ({i}, {j})"
                    )));
                }
            }
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale must be positive, got {scale}"
            )));
        }
        Ok(Self {
            n,
            k,
            penalty_weight,
            scale,
            sparsity_threshold,
            dropped_count,
            constant,
            q,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn penalty_weight(&self) -> f64 {
        self.penalty_weight
    }
    /// `Q_max`, the divisor applied to the unscaled matrix.
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn sparsity_threshold(&self) -> f64 {
        self.sparsity_threshold
    }
    pub fn dropped_count(&self) -> usize {
        self.dropped_count
    }
    pub fn constant(&self) -> f64 {
        self.constant
    }
    pub fn matrix(&self) -> &SquareMatrix {
        &self.q
    }
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q.get(i, j)
    }

    /// Nonzero upper-triangular entries `(i, j, value)` with `i <= j`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i..self.n).filter_map(move |j| {
                let v = self.q.get(i, j);
                (v != 0.0).then_some((i, j, v))
            })
        })
    }

    pub fn offdiagonal_nonzeros(&self) -> usize {
        self.entries().filter(|(i, j, _)| i != j).count()
    }

    fn check(&self, x: &Portfolio) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!(
                "portfolio has {} bits, QUBO has {} variables",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// `x^T Q' x` over the scaled matrix (constant not included).
    pub fn penalized_energy(&self, x: &Portfolio) -> Result<f64> {
        self.check(x)?;
        let sel: Vec<usize> = x.selected().collect();
        let mut e = 0.0;
        for (a, &i) in sel.iter().enumerate() {
            let row = self.q.row(i);
            for &j in &sel[a..] {
                e += row[j];
            }
        }
        Ok(e)
    }

    /// Scaled energy including the tracked constant; zero for feasible
    /// portfolios with no benefit.
    pub fn energy_with_constant(&self, x: &Portfolio) -> Result<f64> {
        Ok(self.penalized_energy(x)? + self.constant)
    }

    /// Energy in unscaled units: `-objective + lambda_pen (sum x - k)^2`
    /// (up to sparsification).
    pub fn raw_energy(&self, x: &Portfolio) -> Result<f64> {
        Ok(self.scale * self.energy_with_constant(x)?)
    }

    /// The objective implied by the (possibly sparsified) matrix: penalty
    /// removed, sign flipped back to maximization.
    pub fn implied_objective(&self, x: &Portfolio) -> Result<f64> {
        let raw = self.raw_energy(x)?;
        let excess = x.cardinality() as f64 - self.k as f64;
        Ok(-raw + self.penalty_weight * excess * excess)
    }

    pub fn to_file(&self) -> QuboFile {
        QuboFile {
            n: self.n,
            k: self.k,
            penalty_weight: self.penalty_weight,
            scale: self.scale,
            threshold: self.sparsity_threshold,
            dropped_count: self.dropped_count,
            constant: self.constant,
            entries: self.entries().collect(),
        }
    }

    pub fn from_file(file: &QuboFile) -> Result<Self> {
        let mut q = SquareMatrix::zeros(file.n);
        for &(i, j, v) in &file.entries {
            if i > j || j >= file.n {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) is not in the upper triangle of a {0}x{0} matrix",
                    file.n
                )));
            }
            q.set(i, j, v);
        }
        Self::from_parts(
            q,
            file.k,
            file.penalty_weight,
            file.scale,
            file.threshold,
            file.dropped_count,
            file.constant,
        )
    }
}

/// JSON layout of an exported QUBO.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboFile {
    pub n: usize,
    pub k: usize,
    pub penalty_weight: f64,
    pub scale: f64,
    pub threshold: f64,
    #[serde(default)]
    pub dropped_count: usize,
    pub constant: f64,
    pub entries: Vec<(usize, usize, f64)>,
}

/// Builds the penalized, sparsified and globally scaled QUBO.
///
/// Pre-scaling entries are
/// `Q_ii = -(w_C c_i + w_B b_i + w_S s_i) + lambda_pen (1 - 2k)` and
/// `Q_ij = -syn_ij + 2 lambda_pen` for `i < j`, where `syn_ij` is the weighted
/// synergy. Only `syn_ij` is subject to the sparsity threshold; the penalty
/// coupling is always kept. The matrix is then divided by its largest
/// absolute entry.
pub fn build_qubo(
    table: &MunicipalityTable,
    weights: &ObjectiveWeights,
    k: usize,
    penalty_weight: f64,
    sparsity_threshold: f64,
) -> Result<QuboProblem> {
    weights.validate()?;
    let n = table.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "cardinality must satisfy 0 < k < n, got k = {k}, n = {n}"
        )));
    }
    if !(penalty_weight > 0.0 && penalty_weight.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "penalty weight must be positive, got {penalty_weight}"
        )));
    }
    if !(sparsity_threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sparsity threshold must be >= 0, got {sparsity_threshold}"
        )));
    }
    let raw = unscaled_matrix(table, weights, k, penalty_weight, sparsity_threshold);
    let mut q = raw.matrix;
    let q_max = q.rows().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if q_max > 0.0 { q_max } else { 1.0 };
    for i in 0..n {
        for j in i..n {
            q.set(i, j, q.get(i, j) / scale);
        }
    }
    let k_f = k as f64;
    QuboProblem::from_parts(
        q,
        k,
        penalty_weight,
        scale,
        sparsity_threshold,
        raw.dropped,
        penalty_weight * k_f * k_f / scale,
    )
}

struct Unscaled {
    matrix: SquareMatrix,
    dropped: usize,
}

fn unscaled_matrix(
    table: &MunicipalityTable,
    weights: &ObjectiveWeights,
    k: usize,
    penalty: f64,
    threshold: f64,
) -> Unscaled {
    let n = table.len();
    let model = ObjectiveModel::new(table, weights);
    let mut q = SquareMatrix::zeros(n);
    let mut dropped = 0;
    let diag_penalty = penalty * (1.0 - 2.0 * k as f64);
    for i in 0..n {
        q.set(i, i, -model.linear(i) + diag_penalty);
        for j in (i + 1)..n {
            let mut syn = model.pair(i, j);
            if syn != 0.0 && syn.abs() < threshold {
                syn = 0.0;
                dropped += 1;
            }
            q.set(i, j, -syn + 2.0 * penalty);
        }
    }
    Unscaled { matrix: q, dropped }
}
