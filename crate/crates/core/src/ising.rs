//! Ising form of a QUBO under `x_i = (1 - z_i) / 2`.
//!
//! Spin `z = +1` is an unselected candidate (`x = 0`), `z = -1` a selected
//! one. The offset absorbs every constant produced by the substitution plus
//! the QUBO's tracked penalty constant, so
//! `ising_energy(spins(x)) == qubo.energy_with_constant(x)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{Portfolio, QuboProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n: usize,
    h: Vec<f64>,
    j: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl IsingModel {
    pub fn new(h: Vec<f64>, j: BTreeMap<(usize, usize), f64>, offset: f64) -> Result<Self> {
        let n = h.len();
        for &(a, b) in j.keys() {
            if a >= b || b >= n {
                return Err(Error::InvalidArgument(format!(
                    "coupling key ({a}, {b}) must satisfy i < j < {n}"
                )));
            }
        }
        Ok(Self { n, h, j, offset })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn fields(&self) -> &[f64] {
        &self.h
    }
    pub fn couplings(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.j
    }
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Energy of the computational basis state `index` (qubit `i` is bit `i`).
    pub fn energy_of_index(&self, index: usize) -> f64 {
        let z = |i: usize| if (index >> i) & 1 == 1 { -1.0 } else { 1.0 };
        let mut e = self.offset;
        for (i, &h) in self.h.iter().enumerate() {
            e += h * z(i);
        }
        for (&(a, b), &v) in &self.j {
            e += v * z(a) * z(b);
        }
        e
    }

    /// Energies of all `2^n` basis states, offset excluded.
    ///
    /// Uses the recurrence over the highest set bit, O(n 2^n) total.
    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.n;
        let mut dense = vec![0.0; n * n];
        for (&(a, b), &v) in &self.j {
            dense[a * n + b] = v;
            dense[b * n + a] = v;
        }
        let dim = 1usize << n;
        let mut diag = vec![0.0; dim];
        // all spins +1
        diag[0] = self.h.iter().sum::<f64>() + self.j.values().sum::<f64>();
        for idx in 1..dim {
            let m = usize::BITS as usize - 1 - idx.leading_zeros() as usize;
            let rest = idx & !(1 << m);
            // flipping spin m from +1 to -1 with every higher spin at +1
            let row = &dense[m * n..(m + 1) * n];
            let mut field = self.h[m];
            for (jdx, &c) in row.iter().enumerate() {
                if c != 0.0 && jdx != m {
                    let zj = if (rest >> jdx) & 1 == 1 { -1.0 } else { 1.0 };
                    field += c * zj;
                }
            }
            diag[idx] = diag[rest] - 2.0 * field;
        }
        diag
    }

    pub fn to_file(&self) -> IsingFile {
        IsingFile {
            n: self.n,
            h: self.h.clone(),
            j: self.j.iter().map(|(&(a, b), &v)| (a, b, v)).collect(),
            offset: self.offset,
        }
    }

    pub fn from_file(file: &IsingFile) -> Result<Self> {
        if file.h.len() != file.n {
            return Err(Error::Dimension(format!(
                "h has {} entries, n = {}",
                file.h.len(),
                file.n
            )));
        }
        let j = file.j.iter().map(|&(a, b, v)| ((a, b), v)).collect();
        Self::new(file.h.clone(), j, file.offset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingFile {
    pub n: usize,
    pub h: Vec<f64>,
    pub j: Vec<(usize, usize, f64)>,
    pub offset: f64,
}

pub fn qubo_to_ising(qubo: &QuboProblem) -> IsingModel {
    let n = qubo.n();
    let mut h = vec![0.0; n];
    let mut j = BTreeMap::new();
    let mut offset = qubo.constant();
    for (a, b, q) in qubo.entries() {
        if a == b {
            h[a] -= q / 2.0;
            offset += q / 2.0;
        } else {
            j.insert((a, b), q / 4.0);
            h[a] -= q / 4.0;
            h[b] -= q / 4.0;
            offset += q / 4.0;
        }
    }
    IsingModel { n, h, j, offset }
}

pub fn ising_energy(model: &IsingModel, z: &[i8]) -> Result<f64> {
    if z.len() != model.n {
        return Err(Error::Dimension(format!(
            "spin vector has {} entries, model has {}",
            z.len(),
            model.n
        )));
    }
    if let Some(bad) = z.iter().find(|&&s| s != 1 && s != -1) {
        return Err(Error::InvalidArgument(format!(
            "spin value {bad} is not +-1"
        )));
    }
    let zf = |i: usize| f64::from(z[i]);
    let mut e = model.offset;
    for (i, &h) in model.h.iter().enumerate() {
        e += h * zf(i);
    }
    for (&(a, b), &v) in &model.j {
        e += v * zf(a) * zf(b);
    }
    Ok(e)
}

pub fn spins(x: &Portfolio) -> Vec<i8> {
    x.bits().iter().map(|&b| if b { -1 } else { 1 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SquareMatrix;

    fn qubo(entries: &[(usize, usize, f64)], n: usize) -> QuboProblem {
        let mut m = SquareMatrix::zeros(n);
        for &(i, j, v) in entries {
            m.set(i, j, v);
        }
        QuboProblem::from_parts(m, 1, 1.0, 1.0, 0.0, 0, 0.0).unwrap()
    }

    #[test]
    fn one_variable() {
        let m = qubo_to_ising(&qubo(&[(0, 0, 3.0)], 1));
        assert_eq!(m.fields(), &[-1.5]);
        assert_eq!(m.offset(), 1.5);
        assert!(m.couplings().is_empty());
    }

    #[test]
    fn one_coupling() {
        let m = qubo_to_ising(&qubo(&[(0, 1, 2.0)], 2));
        assert_eq!(m.couplings()[&(0, 1)], 0.5);
        assert_eq!(m.fields(), &[-0.5, -0.5]);
        assert_eq!(m.offset(), 0.5);
    }

    #[test]
    fn energy_examples() {
        let m = IsingModel::new(vec![0.0; 3], BTreeMap::new(), 2.5).unwrap();
        assert_eq!(ising_energy(&m, &[1, -1, 1]).unwrap(), 2.5);
        let m = IsingModel::new(vec![1.0], BTreeMap::new(), 0.25).unwrap();
        assert_eq!(ising_energy(&m, &[-1]).unwrap(), 0.25 - 1.0);
        assert!(ising_energy(&m, &[1, 1]).is_err());
        assert!(ising_energy(&m, &[0]).is_err());
    }

    #[test]
    fn bad_coupling_key() {
        let mut j = BTreeMap::new();
        j.insert((1, 0), 1.0);
        assert!(IsingModel::new(vec![0.0; 2], j, 0.0).is_err());
    }

    #[test]
    fn diagonal_matches_direct_energy() {
        let mut j = BTreeMap::new();
        j.insert((0, 2), 0.7);
        j.insert((1, 3), -1.1);
        j.insert((2, 3), 0.3);
        let m = IsingModel::new(vec![0.2, -0.4, 1.0, 0.5], j, 0.9).unwrap();
        let d = m.diagonal();
        for (idx, e) in d.iter().enumerate() {
            assert!((e + m.offset() - m.energy_of_index(idx)).abs() < 1e-12);
        }
    }
}
