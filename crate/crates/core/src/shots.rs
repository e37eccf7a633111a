use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::Portfolio;

/// Measurement outcomes keyed by MSB-first bitstring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub noise_scale: f64,
    pub seed: u64,
}

impl ShotRecord {
    /// Builds a record from `(basis index, count)` pairs on `n` qubits.
    pub fn from_index_counts(
        n: usize,
        counts: impl IntoIterator<Item = (usize, u64)>,
        noise_scale: f64,
        seed: u64,
    ) -> Self {
        let mut map = BTreeMap::new();
        let mut shots = 0;
        for (idx, c) in counts {
            if c == 0 {
                continue;
            }
            *map.entry(index_to_bitstring(n, idx)).or_insert(0) += c;
            shots += c;
        }
        Self {
            counts: map,
            shots,
            noise_scale,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let total: u64 = self.counts.values().sum();
        if total != self.shots {
            return Err(Error::InvalidArgument(format!(
                "counts sum to {total} but shots = {}",
                self.shots
            )));
        }
        let mut width = None;
        for key in self.counts.keys() {
            if key.chars().any(|c| c != '0' && c != '1') {
                return Err(Error::InvalidArgument(format!("bad bitstring `{key}`")));
            }
            match width {
                None => width = Some(key.len()),
                Some(w) if w != key.len() => {
                    return Err(Error::InvalidArgument("bitstrings of mixed width".into()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.shots == 0
    }

    /// `(basis index, count)` pairs in bitstring order.
    pub fn index_counts(&self) -> Vec<(usize, u64)> {
        self.counts
            .iter()
            .map(|(s, &c)| (bitstring_to_index(s), c))
            .collect()
    }

    /// Count-weighted mean of `value` over the recorded outcomes.
    pub fn mean_by(&self, mut value: impl FnMut(&str) -> f64) -> Result<f64> {
        if self.shots == 0 {
            return Err(Error::InvalidArgument("empty shot record".into()));
        }
        let total: f64 = self.counts.iter().map(|(s, &c)| value(s) * c as f64).sum();
        Ok(total / self.shots as f64)
    }

    pub fn portfolio(key: &str) -> Result<Portfolio> {
        Portfolio::from_bitstring(key)
    }
}

pub fn index_to_bitstring(n: usize, idx: usize) -> String {
    (0..n)
        .rev()
        .map(|q| if (idx >> q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn bitstring_to_index(s: &str) -> usize {
    s.bytes()
        .fold(0usize, |acc, b| (acc << 1) | usize::from(b == b'1'))
}
