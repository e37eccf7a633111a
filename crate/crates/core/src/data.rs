//! Municipality scores and the three pairwise synergy matrices.
//!
//! A table is stored on disk as four files: a score CSV with header
//! `id,carbon,biodiversity,social` and three dense `n x n` matrices without
//! header (`adjacency.csv`, `bio_synergy.csv`, `soc_synergy.csv`) whose row
//! order matches the score file.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

pub const SCORES_FILE: &str = "goias_multiobjective.csv";
pub const ADJACENCY_FILE: &str = "adjacency.csv";
pub const BIO_SYNERGY_FILE: &str = "bio_synergy.csv";
pub const SOC_SYNERGY_FILE: &str = "soc_synergy.csv";

const SCORE_HEADER: [&str; 4] = ["id", "carbon", "biodiversity", "social"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MunicipalityRecord {
    pub id: String,
    pub carbon: f64,
    pub biodiversity: f64,
    pub social: f64,
}

/// Validated candidate set: normalized scores plus symmetric, zero-diagonal
/// adjacency (binary) and synergy (`[0, 1]`) matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MunicipalityTable {
    records: Vec<MunicipalityRecord>,
    adjacency: SquareMatrix,
    bio_synergy: SquareMatrix,
    soc_synergy: SquareMatrix,
}

impl MunicipalityTable {
    pub fn new(
        records: Vec<MunicipalityRecord>,
        adjacency: SquareMatrix,
        bio_synergy: SquareMatrix,
        soc_synergy: SquareMatrix,
    ) -> Result<Self> {
        let n = records.len();
        let mut seen = HashSet::with_capacity(n);
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate id `{}`", r.id)));
            }
            for (name, v) in [
                ("carbon", r.carbon),
                ("biodiversity", r.biodiversity),
                ("social", r.social),
            ] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange(format!(
                        "{name} score of `{}` is {v}, expected [0, 1]",
                        r.id
                    )));
                }
            }
        }
        for (name, m, binary) in [
            ("adjacency", &adjacency, true),
            ("bio_synergy", &bio_synergy, false),
            ("soc_synergy", &soc_synergy, false),
        ] {
            if m.dim() != n {
                return Err(Error::Dimension(format!(
                    "{name} is {0}x{0} but there are {n} records",
                    m.dim()
                )));
            }
            if let Some((i, j, a, b)) = m.first_asymmetry() {
                return Err(Error::NotSymmetric {
                    name: name.to_string(),
                    i,
                    j,
                    a,
                    b,
                });
            }
            for i in 0..n {
                if m.get(i, i) != 0.0 {
                    return Err(Error::OutOfRange(format!(
                        "{name} has nonzero diagonal entry at {i}"
                    )));
                }
                for j in 0..n {
                    let v = m.get(i, j);
                    let ok = if binary {
                        v == 0.0 || v == 1.0
                    } else {
                        (0.0..=1.0).contains(&v)
                    };
                    if !ok {
                        return Err(Error::OutOfRange(format!(
                            "{name}[{i}][{j}] = {v} outside its declared range"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            records,
            adjacency,
            bio_synergy,
            soc_synergy,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[MunicipalityRecord] {
        &self.records
    }

    pub fn adjacency(&self) -> &SquareMatrix {
        &self.adjacency
    }

    pub fn bio_synergy(&self) -> &SquareMatrix {
        &self.bio_synergy
    }

    pub fn soc_synergy(&self) -> &SquareMatrix {
        &self.soc_synergy
    }
}

/// Locations of the four files that make up a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablePaths {
    pub scores: PathBuf,
    pub adjacency: PathBuf,
    pub bio_synergy: PathBuf,
    pub soc_synergy: PathBuf,
}

impl TablePaths {
    /// Default file names inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            scores: dir.join(SCORES_FILE),
            adjacency: dir.join(ADJACENCY_FILE),
            bio_synergy: dir.join(BIO_SYNERGY_FILE),
            soc_synergy: dir.join(SOC_SYNERGY_FILE),
        }
    }

    pub fn all_exist(&self) -> bool {
        [
            &self.scores,
            &self.adjacency,
            &self.bio_synergy,
            &self.soc_synergy,
        ]
        .iter()
        .all(|p| p.is_file())
    }
}

pub fn load_table(paths: &TablePaths) -> Result<MunicipalityTable> {
    let records = read_scores(&paths.scores)?;
    let adjacency = read_matrix(&paths.adjacency)?;
    let bio = read_matrix(&paths.bio_synergy)?;
    let soc = read_matrix(&paths.soc_synergy)?;
    MunicipalityTable::new(records, adjacency, bio, soc)
}

pub fn save_table(table: &MunicipalityTable, paths: &TablePaths) -> Result<()> {
    let mut out = String::from("id,carbon,biodiversity,social\n");
    for r in table.records() {
        if r.id.contains([',', '"', '\n']) {
            return Err(Error::InvalidArgument(format!(
                "id `{}` cannot be written without quoting",
                r.id
            )));
        }
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.id, r.carbon, r.biodiversity, r.social
        ));
    }
    write_file(&paths.scores, &out)?;
    write_matrix(&paths.adjacency, table.adjacency())?;
    write_matrix(&paths.bio_synergy, table.bio_synergy())?;
    write_matrix(&paths.soc_synergy, table.soc_synergy())?;
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_matrix(path: &Path, m: &SquareMatrix) -> Result<()> {
    let mut out = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

fn read_scores(path: &Path) -> Result<Vec<MunicipalityRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .clone();
    let got: Vec<&str> = header.iter().collect();
    if got != SCORE_HEADER {
        return Err(Error::parse(
            path,
            format!(
                "header {:?} does not match expected {:?}",
                got, SCORE_HEADER
            ),
        ));
    }
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::parse(path, e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            row[i].parse::<f64>().map_err(|e| {
                Error::parse(
                    path,
                    format!("line {}: column `{}`: {e}", line + 2, SCORE_HEADER[i]),
                )
            })
        };
        records.push(MunicipalityRecord {
            id: row[0].to_string(),
            carbon: field(1)?,
            biodiversity: field(2)?,
            social: field(3)?,
        });
    }
    Ok(records)
}

fn read_matrix(path: &Path) -> Result<SquareMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::parse(path, e.to_string()))?;
        let values = row
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(path, format!("line {}: {e}", line + 1)))?;
        rows.push(values);
    }
    let n = rows.len();
    SquareMatrix::from_rows(rows).ok_or_else(|| {
        Error::Dimension(format!("{}: expected {n} columns per row", path.display()))
    })
}

/// Linear min-max rescaling onto `[0, 1]`. A constant input maps to zeros.
pub fn min_max_normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot normalize an empty list".into(),
        ));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::OutOfRange("non-finite value in input".into()));
    }
    let span = hi - lo;
    if span == 0.0 {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|&v| (v - lo) / span).collect())
}

/// Desk-scale synthetic instance.
///
/// Candidates are placed uniformly on the unit square and joined when closer
/// than a radius giving mean degree about 4. Adjacent pairs get uniform
/// `[0, 1]` biodiversity and social synergies; pairs within twice the radius
/// but not adjacent get weak synergies in `[0, 0.1]`, so a sparsification
/// threshold has something to drop.
pub fn synthesize_table(n: usize, seed: u64) -> Result<MunicipalityTable> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "synthetic table needs n >= 2, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let mut raw = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        for col in raw.iter_mut() {
            col[i] = rng.gen::<f64>();
        }
    }
    let [carbon, bio, soc] = raw.map(|c| min_max_normalize(&c).expect("non-empty column"));

    let radius = (4.0 / (std::f64::consts::PI * (n as f64 - 1.0))).sqrt();
    let mut adjacency = SquareMatrix::zeros(n);
    let mut bio_syn = SquareMatrix::zeros(n);
    let mut soc_syn = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (points[i].0 - points[j].0).hypot(points[i].1 - points[j].1);
            // Draw both values for every pair so the stream does not depend on geometry.
            let (b, s): (f64, f64) = (rng.gen(), rng.gen());
            if d < radius {
                adjacency.set_sym(i, j, 1.0);
                bio_syn.set_sym(i, j, b);
                soc_syn.set_sym(i, j, s);
            } else if d < 2.0 * radius {
                bio_syn.set_sym(i, j, 0.1 * b);
                soc_syn.set_sym(i, j, 0.1 * s);
            }
        }
    }
    let width = (n - 1).to_string().len().max(3);
    let records = (0..n)
        .map(|i| MunicipalityRecord {
            id: format!("M{i:0width$}"),
            carbon: carbon[i],
            biodiversity: bio[i],
            social: soc[i],
        })
        .collect();
    MunicipalityTable::new(records, adjacency, bio_syn, soc_syn)
}

/// Exact binomial coefficient `C(n, k)`.
pub fn search_space_size(n: u64, k: u64) -> Result<BigUint> {
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    Ok(acc)
}
