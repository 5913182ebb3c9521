//! Spin-j representations of the rotation algebra, rotation unitaries and
//! the hbar-scaled physical observable.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::error::{Error, Result};
use crate::group::rotation::{rotation_compose, RotationVector};
use crate::linalg::{trace_product, unitary_from_generator};
use crate::matrix::{ComplexMatrix, I, ZERO};

/// Largest supported spin.
pub const MAX_SPIN_TWICE: u32 = 50;

/// A nonnegative half-integer, stored as `2j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInteger(u32);

impl HalfInteger {
    pub fn from_twice(twice: u32) -> Self {
        Self(twice)
    }

    /// Accepts `j` if `2j` is a nonnegative integer (within 1e-12).
    pub fn from_f64(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !j.is_finite() || j < 0.0 || (twice - twice.round()).abs() > 1e-12 {
            return Err(Error::NotHalfInteger(j.to_string()));
        }
        Ok(Self(twice.round() as u32))
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl fmt::Display for HalfInteger {
    /// Reduced fraction: `1/2`, `1/1`, `3/2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}/1", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for HalfInteger {
    type Err = Error;

    /// Parses `p/q` fractions or decimals.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::NotHalfInteger(s.to_string());
        let t = s.trim();
        let value = match t.split_once('/') {
            Some((p, q)) => {
                let p: f64 = p.trim().parse().map_err(|_| bad())?;
                let q: f64 = q.trim().parse().map_err(|_| bad())?;
                if q == 0.0 {
                    return Err(bad());
                }
                p / q
            }
            None => t.parse().map_err(|_| bad())?,
        };
        Self::from_f64(value).map_err(|_| bad())
    }
}

/// Signed half-integer label, e.g. `-3/2`, `0`, `1`.
pub(crate) fn m_label(twice_m: i64) -> String {
    if twice_m % 2 == 0 {
        (twice_m / 2).to_string()
    } else {
        format!("{twice_m}/2")
    }
}

/// Dimensionless generators `jx, jy, jz` at spin `j`, basis ordered by
/// descending `m` (index 0 is `m = j`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpinRepr", into = "SpinRepr")]
pub struct SpinRepresentation {
    j: HalfInteger,
    pub jx: ComplexMatrix,
    pub jy: ComplexMatrix,
    pub jz: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct SpinRepr {
    j: String,
    dim: usize,
    jx: ComplexMatrix,
    jy: ComplexMatrix,
    jz: ComplexMatrix,
}

impl From<SpinRepresentation> for SpinRepr {
    fn from(rep: SpinRepresentation) -> Self {
        SpinRepr {
            j: rep.j.to_string(),
            dim: rep.dim(),
            jx: rep.jx,
            jy: rep.jy,
            jz: rep.jz,
        }
    }
}

impl TryFrom<SpinRepr> for SpinRepresentation {
    type Error = Error;

    fn try_from(repr: SpinRepr) -> Result<Self> {
        let j: HalfInteger = repr.j.parse()?;
        let dim = j.twice() as usize + 1;
        for m in [&repr.jx, &repr.jy, &repr.jz] {
            if m.rows() != dim || m.cols() != dim || repr.dim != dim {
                return Err(Error::DimensionMismatch(format!("spin {j} needs dimension {dim}")));
            }
        }
        Ok(Self {
            j,
            jx: repr.jx,
            jy: repr.jy,
            jz: repr.jz,
        })
    }
}

/// Ladder construction of the spin-`j` generators.
pub fn spin_matrices(j: HalfInteger) -> Result<SpinRepresentation> {
    if j.twice() > MAX_SPIN_TWICE {
        return Err(Error::TooLarge(j.to_string()));
    }
    let n = j.twice() as usize + 1;
    let jv = j.value();
    let m_of = |k: usize| jv - k as f64;

    let jz = ComplexMatrix::real_diagonal(&(0..n).map(m_of).collect::<Vec<_>>());
    // <m+1| j+ |m> sits at row k-1, column k
    let mut raise = ComplexMatrix::zeros(n, n);
    for k in 1..n {
        let m = m_of(k);
        raise[(k - 1, k)] = Complex64::new((jv * (jv + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let jx = (&raise + &lower).scale_real(0.5);
    let jy = (&raise - &lower).scale(-I * 0.5);
    Ok(SpinRepresentation { j, jx, jy, jz })
}

/// Convenience wrapper taking `j` as a float.
pub fn spin_matrices_f64(j: f64) -> Result<SpinRepresentation> {
    spin_matrices(HalfInteger::from_f64(j)?)
}

/// Commutator and Casimir residuals of a representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraResiduals {
    /// `|[jx,jy] - i jz|_F`, `|[jy,jz] - i jx|_F`, `|[jz,jx] - i jy|_F`.
    pub commutators: [f64; 3],
    /// `|jx^2 + jy^2 + jz^2 - j(j+1) I|_F`.
    pub casimir: f64,
}

impl SpinRepresentation {
    pub fn j(&self) -> HalfInteger {
        self.j
    }

    pub fn dim(&self) -> usize {
        self.jz.rows()
    }

    /// `u . j`.
    pub fn generator(&self, u: [f64; 3]) -> ComplexMatrix {
        &(&self.jx.scale_real(u[0]) + &self.jy.scale_real(u[1])) + &self.jz.scale_real(u[2])
    }

    pub fn algebra_residuals(&self) -> AlgebraResiduals {
        let comm = |a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix| {
            (&(&(a * b) - &(b * a)) - &c.scale(I)).frobenius_norm()
        };
        let jv = self.j.value();
        let casimir = &(&(&self.jx * &self.jx) + &(&self.jy * &self.jy)) + &(&self.jz * &self.jz);
        AlgebraResiduals {
            commutators: [
                comm(&self.jx, &self.jy, &self.jz),
                comm(&self.jy, &self.jz, &self.jx),
                comm(&self.jz, &self.jx, &self.jy),
            ],
            casimir: casimir.distance(&ComplexMatrix::identity(self.dim()).scale_real(jv * (jv + 1.0))),
        }
    }

    /// Context of the rotated `jz` eigenbasis, re-indexed to ascending `m`
    /// so it matches the ascending-eigenvalue order of observable contexts.
    /// Outcome `k` is `m = -j + k` along the axis `R_u z`.
    pub fn rotated_context(&self, u: &RotationVector, id: impl Into<String>) -> Result<Context> {
        let rot = rotation_unitary(self, u)?;
        let n = self.dim();
        let columns: Vec<Vec<Complex64>> = (0..n).rev().map(|k| rot.column(k)).collect();
        let twice = i64::from(self.j.twice());
        let labels = (0..n as i64).map(|k| m_label(-twice + 2 * k)).collect();
        Context::new(id, ComplexMatrix::from_columns(&columns), labels)
    }
}

/// `exp(-i u . j)`.
pub fn rotation_unitary(rep: &SpinRepresentation, u: &RotationVector) -> Result<ComplexMatrix> {
    unitary_from_generator(&rep.generator(u.components()), 1.0)
}

/// Projective composition defect and the phase that minimizes it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresentationDefect {
    pub defect: f64,
    /// `phi` in `U(u1) U(u2) ~ e^{i phi} U(u1 * u2)`, in `(-pi, pi]`.
    pub phase: f64,
}

/// `min_phi |U(u1) U(u2) - e^{i phi} U(compose(u1, u2))|_F`.
pub fn representation_defect(
    rep: &SpinRepresentation,
    u1: &RotationVector,
    u2: &RotationVector,
) -> Result<RepresentationDefect> {
    let product = &rotation_unitary(rep, u1)? * &rotation_unitary(rep, u2)?;
    let composed = rotation_unitary(rep, &rotation_compose(u1, u2))?;
    let overlap = trace_product(&composed.adjoint(), &product)?;
    let phase = if overlap == ZERO { 0.0 } else { overlap.arg() };
    let defect = product.distance(&composed.scale(Complex64::from_polar(1.0, phase)));
    Ok(RepresentationDefect { defect, phase })
}

/// If `u` is proportional to the identity within `tol`, its scalar phase.
pub fn global_phase(u: &ComplexMatrix, tol: f64) -> Option<Complex64> {
    let n = u.rows();
    let scalar = u.trace() / n as f64;
    let residual = u.distance(&ComplexMatrix::identity(n).scale(scalar));
    (residual <= tol).then_some(scalar)
}

/// Strictly positive physical constant matching generators to measured observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalScale {
    hbar: f64,
}

impl PhysicalScale {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidConfig(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { hbar })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }
}

impl Default for PhysicalScale {
    fn default() -> Self {
        Self { hbar: 1.0 }
    }
}

/// `hbar (axis . j)` for a unit `axis`.
pub fn physical_observable(rep: &SpinRepresentation, axis: [f64; 3], scale: PhysicalScale) -> Result<ComplexMatrix> {
    let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-10 {
        return Err(Error::BadAxis { norm });
    }
    Ok(rep.generator(axis).scale_real(scale.hbar()))
}
