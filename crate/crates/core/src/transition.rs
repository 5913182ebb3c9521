//! Transition-probability matrices and context-change unitaries.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::error::{Error, Result};
use crate::format::fmt_sig;
use crate::linalg::{commutator_norm, trace_product};
use crate::matrix::{ComplexMatrix, RealMatrix};

/// Entries below `-CLAMP_TOL` or above `1 + CLAMP_TOL` indicate a bug.
const CLAMP_TOL: f64 = 1e-12;

/// `probs[(i, j)]` is the probability of outcome `j` of the target context
/// given outcome `i` of the source context (and, symmetrically, the reverse).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub source_context: String,
    pub target_context: String,
    pub probs: RealMatrix,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.probs.rows()
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_deviation(&self) -> f64 {
        max_deviation(&self.probs.row_sums())
    }

    /// Largest deviation of a column sum from one.
    pub fn max_column_deviation(&self) -> f64 {
        max_deviation(&self.probs.column_sums())
    }

    /// `# source=<id> target=<id>` followed by one comma-separated row per
    /// source outcome, 15 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# source={} target={}\n", self.source_context, self.target_context);
        for i in 0..self.dim() {
            let row: Vec<String> = self.probs.row(i).iter().map(|&p| fmt_sig(p)).collect();
            writeln!(out, "{}", row.join(",")).expect("writing to a String");
        }
        out
    }
}

fn max_deviation(sums: &[f64]) -> f64 {
    sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
}

fn check_same_dim(a: &Context, b: &Context) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "context '{}' has dimension {} but '{}' has {}",
            a.id(),
            a.dim(),
            b.id(),
            b.dim()
        )));
    }
    Ok(())
}

fn clamp_probability(p: f64) -> f64 {
    debug_assert!(
        (-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&p),
        "probability {p} outside tolerance"
    );
    p.clamp(0.0, 1.0)
}

/// `p_ij = |<a_i|b_j>|^2` from the overlap of the two bases.
pub fn transition_matrix(e: &Context, e_prime: &Context) -> Result<TransitionMatrix> {
    check_same_dim(e, e_prime)?;
    let overlap = &e.basis().adjoint() * e_prime.basis();
    let n = e.dim();
    let data = overlap
        .squared_moduli()
        .as_slice()
        .iter()
        .map(|&p| clamp_probability(p))
        .collect();
    Ok(TransitionMatrix {
        source_context: e.id().to_string(),
        target_context: e_prime.id().to_string(),
        probs: RealMatrix::from_vec(n, n, data)?,
    })
}

/// Same table computed as `Tr(pi_i pi'_j)` from the projectors. Slower; kept
/// as an independent route for cross-checking [`transition_matrix`].
pub fn transition_matrix_by_trace(e: &Context, e_prime: &Context) -> Result<RealMatrix> {
    check_same_dim(e, e_prime)?;
    let n = e.dim();
    let left = e.projectors();
    let right = e_prime.projectors();
    let mut probs = RealMatrix::zeros(n, n);
    for (i, pi) in left.iter().enumerate() {
        for (j, pj) in right.iter().enumerate() {
            probs[(i, j)] = trace_product(pi, pj)?.re;
        }
    }
    Ok(probs)
}

/// Unitary `sigma` carrying the k-th basis vector of the source context onto
/// the k-th basis vector of the target context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextChange {
    pub source_context: String,
    pub target_context: String,
    pub sigma: ComplexMatrix,
}

impl ContextChange {
    /// `sigma X sigma^dagger`.
    pub fn conjugate(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &(&self.sigma * x) * &self.sigma.adjoint()
    }
}

/// `sigma = sum_k b_k a_k^dagger`, so that `sigma pi_k sigma^dagger = pi'_k`.
pub fn context_change(e: &Context, e_prime: &Context) -> Result<ContextChange> {
    check_same_dim(e, e_prime)?;
    Ok(ContextChange {
        source_context: e.id().to_string(),
        target_context: e_prime.id().to_string(),
        sigma: e_prime.basis() * &e.basis().adjoint(),
    })
}

/// `|[sigma(E -> E1), sigma(E -> E2)]|_F`; zero when the two changes commute.
pub fn context_noncommutativity(e: &Context, e1: &Context, e2: &Context) -> Result<f64> {
    let s1 = context_change(e, e1)?;
    let s2 = context_change(e, e2)?;
    commutator_norm(&s1.sigma, &s2.sigma)
}
