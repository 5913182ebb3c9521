//! Cyclic translations on `n` sites: position and Fourier-momentum contexts.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::context::Context;
use crate::error::{Error, Result};
use crate::linalg::unitary_from_generator;
use crate::matrix::{ComplexMatrix, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct CyclicTranslationRep {
    n: usize,
    pub position_context: Context,
    pub momentum_context: Context,
    /// `sum_k (2 pi k / n) |f_k><f_k|`.
    pub p_dimensionless: ComplexMatrix,
}

impl CyclicTranslationRep {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `exp(-i a p)`; for integer `a` this shifts site `x` to `x + a mod n`.
    pub fn translation(&self, a: f64) -> Result<ComplexMatrix> {
        unitary_from_generator(&self.p_dimensionless, a)
    }
}

/// Permutation matrix sending `|x>` to `|x + shift mod n>`.
pub fn cyclic_shift(n: usize, shift: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == (j + shift) % n {
            Complex64::new(1.0, 0.0)
        } else {
            ZERO
        }
    })
}

pub fn cyclic_translation_rep(n: usize) -> Result<CyclicTranslationRep> {
    if n < 2 {
        return Err(Error::BadDimension(n));
    }
    let norm = 1.0 / (n as f64).sqrt();
    let fourier = ComplexMatrix::from_fn(n, n, |x, k| {
        // reduce k x mod n before scaling so large n keeps full phase accuracy
        let phase = 2.0 * PI * ((k * x) % n) as f64 / n as f64;
        Complex64::from_polar(norm, phase)
    });
    let momenta: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
    let p = (&(&fourier * &ComplexMatrix::real_diagonal(&momenta)) * &fourier.adjoint()).hermitian_part()?;
    let momentum_context = Context::new("momentum", fourier, (0..n).map(|k| format!("k={k}")).collect())?;
    let position_context = Context::new(
        "position",
        ComplexMatrix::identity(n),
        (0..n).map(|x| format!("x={x}")).collect(),
    )?;
    Ok(CyclicTranslationRep {
        n,
        position_context,
        momentum_context,
        p_dimensionless: p,
    })
}
