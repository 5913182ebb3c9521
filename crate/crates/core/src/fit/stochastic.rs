//! Doubly stochastic targets, the Birkhoff sampler, parameter counting and
//! inverse-CDF outcome sampling.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::rng::stream_rng;

/// Tolerance on row and column sums of a valid target.
pub const TARGET_TOL: f64 = 1e-10;

/// True iff all entries are `>= -tol` and every row and column sums to one within `tol`.
pub fn is_doubly_stochastic(m: &RealMatrix, tol: f64) -> Result<bool> {
    if m.rows() != m.cols() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let nonnegative = m.as_slice().iter().all(|&x| x >= -tol);
    let sums_ok = m
        .row_sums()
        .into_iter()
        .chain(m.column_sums())
        .all(|s| (s - 1.0).abs() <= tol);
    Ok(nonnegative && sums_ok)
}

/// A square nonnegative matrix with unit row and column sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublyStochasticTarget {
    entries: RealMatrix,
}

impl DoublyStochasticTarget {
    pub fn new(entries: RealMatrix) -> Result<Self> {
        Self::with_tolerance(entries, TARGET_TOL)
    }

    pub fn with_tolerance(entries: RealMatrix, tol: f64) -> Result<Self> {
        let n = entries.rows();
        if n != entries.cols() || n == 0 {
            return Err(Error::InvalidTarget(format!(
                "expected a non-empty square matrix, got {}x{}",
                entries.rows(),
                entries.cols()
            )));
        }
        if let Some(x) = entries.as_slice().iter().find(|&&x| x < 0.0) {
            return Err(Error::InvalidTarget(format!("negative entry {x}")));
        }
        if !is_doubly_stochastic(&entries, tol)? {
            return Err(Error::InvalidTarget(format!(
                "row or column sum deviates from 1 by more than {tol:e}"
            )));
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(RealMatrix::from_rows(rows).map_err(|e| Error::InvalidTarget(e.to_string()))?)
    }

    /// Parses comma-separated rows; `#` lines are comments.
    pub fn from_csv(text: &str, tol: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::InvalidTarget(e.to_string()))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let row = record
                .iter()
                .map(|field| {
                    field
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidTarget(format!("not a number: '{field}'")))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let m = RealMatrix::from_rows(&rows).map_err(|e| Error::InvalidTarget(e.to_string()))?;
        Self::with_tolerance(m, tol)
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn entries(&self) -> &RealMatrix {
        &self.entries
    }

    /// Short stable fingerprint of the entries (hex of a SHA-256 prefix).
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.dim() as u64).to_le_bytes());
        for x in self.entries.as_slice() {
            hasher.update(x.to_bits().to_le_bytes());
        }
        hex::encode(&hasher.finalize()[..8])
    }

    /// Flat matrix with every entry `1/n`.
    pub fn flat(n: usize) -> Result<Self> {
        Self::new(RealMatrix::filled(n, 1.0 / n as f64))
    }
}

/// Dimensions relevant to the "enough parameters" question at size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterCount {
    /// Dimension of the Birkhoff polytope, `(n-1)^2`.
    pub polytope_dim: usize,
    /// Parameters of a real orthogonal matrix, `n(n-1)/2`.
    pub orthogonal_dim: usize,
    /// Parameters of a unitary modulo left and right diagonal phases, `(n-1)^2`.
    pub unitary_overlap_dim: usize,
}

pub fn parameter_count(n: usize) -> Result<ParameterCount> {
    if n < 2 {
        return Err(Error::BadDimension(n));
    }
    Ok(ParameterCount {
        polytope_dim: (n - 1) * (n - 1),
        orthogonal_dim: n * (n - 1) / 2,
        unitary_overlap_dim: (n - 1) * (n - 1),
    })
}

/// Convex combination of `num_permutations` uniformly random permutation
/// matrices with flat Dirichlet weights.
pub fn birkhoff_sample(n: usize, num_permutations: usize, seed: u64) -> Result<DoublyStochasticTarget> {
    if n < 2 {
        return Err(Error::BadDimension(n));
    }
    if num_permutations == 0 {
        return Err(Error::InvalidConfig("num_permutations must be at least 1".into()));
    }
    let mut rng = stream_rng(seed, n as u64);
    let raw: Vec<f64> = (0..num_permutations).map(|_| rng.sample(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let mut m = RealMatrix::zeros(n, n);
    let mut perm: Vec<usize> = (0..n).collect();
    for w in raw {
        perm.shuffle(&mut rng);
        for (i, &j) in perm.iter().enumerate() {
            m[(i, j)] += w / total;
        }
    }
    DoublyStochasticTarget::with_tolerance(m, 1e-12)
}

/// Inverse-CDF draw of an index from `probabilities` using one uniform variate.
pub fn sample_outcome<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> Result<usize> {
    if probabilities.is_empty() {
        return Err(Error::InvalidDistribution("empty".into()));
    }
    if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!("entry {p}")));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("sums to {total}")));
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    for (k, &p) in probabilities.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return Ok(k);
        }
    }
    // u landed on the rounding sliver at the top: last outcome with mass
    Ok(probabilities.iter().rposition(|&p| p > 0.0).expect("total is positive"))
}
