//! Observables as real-weighted sums of a context's projectors.

use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// `operator = sum_i values[i] * pi_i` over the projectors of `context_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub context_id: String,
    pub values: Vec<f64>,
    pub operator: ComplexMatrix,
}

impl Observable {
    /// `|operator - sum_i values[i] pi_i|_F` against `ctx`.
    pub fn residual(&self, ctx: &Context) -> Result<f64> {
        Ok(self.operator.distance(&spectral_sum(ctx, &self.values)?))
    }
}

fn spectral_sum(ctx: &Context, values: &[f64]) -> Result<ComplexMatrix> {
    if values.len() != ctx.dim() {
        return Err(Error::LengthMismatch {
            expected: ctx.dim(),
            got: values.len(),
        });
    }
    let v = ctx.basis();
    let scaled = ComplexMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * values[j]);
    let op = &scaled * &v.adjoint();
    // exact hermitian symmetrization of the rounding noise
    op.hermitian_part()
}

/// Builds the observable taking value `values[i]` with certainty on outcome `i`.
pub fn observable_operator(ctx: &Context, values: &[f64]) -> Result<Observable> {
    Ok(Observable {
        context_id: ctx.id().to_string(),
        values: values.to_vec(),
        operator: spectral_sum(ctx, values)?,
    })
}
