//! Hermitian eigendecomposition, unitary exponentials, orthonormalization and
//! the small set of products the rest of the crate needs.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ZERO};

/// Relative hermiticity tolerance: `|H - H^dagger|_F <= HERMITIAN_TOL * max(1, |H|_F)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Jacobi stops once the off-diagonal mass falls below this fraction of `|H|_F`.
const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Moduli within this relative distance of the largest one count as ties.
const PHASE_TIE_TOL: f64 = 1e-10;

/// Gram-Schmidt refuses residuals smaller than this before normalization.
pub const RANK_TOL: f64 = 1e-12;

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    /// `V diag(lambda) V^dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let scaled = ComplexMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * self.eigenvalues[j]);
        &scaled * &v.adjoint()
    }
}

/// Checks hermiticity within tolerance and returns the symmetrized matrix.
pub fn require_hermitian(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let asymmetry = h.hermitian_defect()?;
    if asymmetry > HERMITIAN_TOL * h.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { asymmetry });
    }
    h.hermitian_part()
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation first removes the phase of `a_pq` with a diagonal unitary and
/// then applies the classical real symmetric Jacobi rotation to the pair.
pub fn hermitian_eigendecomposition(h: &ComplexMatrix) -> Result<HermitianEig> {
    let mut a = require_hermitian(h)?;
    let n = a.rows();
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_TOL * a.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let conj_phase = apq.conj() / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J restricted to (p, q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = conj_phase * (-s);
                let jqq = conj_phase * c;

                for r in 0..n {
                    let x = a[(r, p)];
                    let y = a[(r, q)];
                    a[(r, p)] = x * jpp + y * jqp;
                    a[(r, q)] = x * jpq + y * jqq;
                }
                for col in 0..n {
                    let x = a[(p, col)];
                    let y = a[(q, col)];
                    a[(p, col)] = jpp.conj() * x + jqp.conj() * y;
                    a[(q, col)] = jpq.conj() * x + jqq.conj() * y;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                for r in 0..n {
                    let x = v[(r, p)];
                    let y = v[(r, q)];
                    v[(r, p)] = x * jpp + y * jqp;
                    v[(r, q)] = x * jpq + y * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&k| a[(k, k)].re).collect();
    let columns: Vec<Vec<Complex64>> = order
        .iter()
        .map(|&k| {
            let mut col = v.column(k);
            apply_phase_convention(&mut col);
            col
        })
        .collect();

    Ok(HermitianEig {
        eigenvalues,
        eigenvectors: ComplexMatrix::from_columns(&columns),
    })
}

/// Rotates the vector's global phase so that its largest-modulus component is
/// real and positive. Near-ties go to the lowest index.
pub fn apply_phase_convention(v: &mut [Complex64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - PHASE_TIE_TOL))
        .expect("maximum is attained");
    let r = v[pivot].norm();
    let phase = v[pivot].conj() / r;
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[pivot] = Complex64::new(r, 0.0);
}

/// Applies [`apply_phase_convention`] to every column.
pub fn phase_normalized_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let cols: Vec<Vec<Complex64>> = m
        .columns()
        .into_iter()
        .map(|mut c| {
            apply_phase_convention(&mut c);
            c
        })
        .collect();
    ComplexMatrix::from_columns(&cols)
}

/// `exp(-i t H)` through the eigendecomposition of `H`.
pub fn unitary_from_generator(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eigendecomposition(h)?;
    let v = &eig.eigenvectors;
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&lambda| Complex64::from_polar(1.0, -t * lambda))
        .collect();
    let scaled = ComplexMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * phases[j]);
    Ok(&scaled * &v.adjoint())
}

fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Returns an
/// `N x k` matrix whose columns follow the global phase convention.
pub fn gram_schmidt(vectors: &[Vec<Complex64>]) -> Result<ComplexMatrix> {
    let Some(first) = vectors.first() else {
        return Err(Error::EmptyInput);
    };
    let dim = first.len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} among vectors of length {dim}",
            bad.len()
        )));
    }
    if vectors.len() > dim {
        return Err(Error::RankDeficient {
            index: dim,
            residual: 0.0,
        });
    }

    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let residual = norm(&w);
        if residual < RANK_TOL {
            return Err(Error::RankDeficient { index, residual });
        }
        for z in w.iter_mut() {
            *z /= residual;
        }
        apply_phase_convention(&mut w);
        basis.push(w);
    }
    Ok(ComplexMatrix::from_columns(&basis))
}

/// `|AB - BA|_F`.
pub fn commutator_norm(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let n = a.require_square()?;
    let m = b.require_square()?;
    if n != m {
        return Err(Error::DimensionMismatch(format!("commutator of {n}x{n} and {m}x{m}")));
    }
    Ok((&(a * b) - &(b * a)).frobenius_norm())
}

/// `Tr(AB)` as `sum_ij A_ij B_ji`, without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    if a.cols() != b.rows() || a.rows() != b.cols() {
        return Err(Error::DimensionMismatch(format!(
            "trace of {}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut acc = ZERO;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    Ok(acc)
}

/// Haar-distributed unitary: Gram-Schmidt (QR with positive diagonal) of a
/// complex Ginibre matrix, followed by the column phase convention.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    random_orthonormal(n, rng, true)
}

/// Haar-distributed real orthogonal matrix (real Gaussian start).
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    random_orthonormal(n, rng, false)
}

fn random_orthonormal<R: Rng + ?Sized>(n: usize, rng: &mut R, complex: bool) -> ComplexMatrix {
    loop {
        let vectors: Vec<Vec<Complex64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
                        Complex64::new(re, im)
                    })
                    .collect()
            })
            .collect();
        // a singular Gaussian draw has probability zero; redraw if it happens
        if let Ok(q) = gram_schmidt(&vectors) {
            return q;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{pauli, I, ONE};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn diagonal_eigenvalues_sorted_with_permuted_identity() {
        let h = ComplexMatrix::real_diagonal(&[3.0, 1.0, 2.0]);
        let eig = hermitian_eigendecomposition(&h).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
        let expected = ComplexMatrix::from_real_rows(&[vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert_eq!(eig.eigenvectors, expected);
    }

    #[test]
    fn pauli_spectra() {
        let z = hermitian_eigendecomposition(&pauli::z()).unwrap();
        assert_eq!(z.eigenvalues, vec![-1.0, 1.0]);

        let x = hermitian_eigendecomposition(&pauli::x()).unwrap();
        assert!((x.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((x.eigenvalues[1] - 1.0).abs() < 1e-15);
        // hand check: X (1,-1) = -(1,-1), X (1,1) = (1,1)
        let minus = x.eigenvectors.column(0);
        let plus = x.eigenvectors.column(1);
        let s = FRAC_1_SQRT_2;
        assert!((minus[0] - c(s)).norm() < 1e-15 && (minus[1] - c(-s)).norm() < 1e-15);
        assert!((plus[0] - c(s)).norm() < 1e-15 && (plus[1] - c(s)).norm() < 1e-15);
        for (k, lambda) in x.eigenvalues.iter().enumerate() {
            let v = x.eigenvectors.column(k);
            let hv = pauli::x().mul_vec(&v).unwrap();
            for (a, b) in hv.iter().zip(&v) {
                assert!((a - b * lambda).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn complex_hermitian_reconstruction() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(2.0), Complex64::new(1.0, -1.0), Complex64::new(0.0, 0.5)],
            vec![Complex64::new(1.0, 1.0), c(-1.0), Complex64::new(0.3, 0.2)],
            vec![Complex64::new(0.0, -0.5), Complex64::new(0.3, -0.2), c(0.5)],
        ]);
        let eig = hermitian_eigendecomposition(&h).unwrap();
        assert!(eig.eigenvectors.unitarity_defect() < 1e-12);
        assert!(eig.reconstruct().distance(&h) < 1e-12 * h.frobenius_norm());
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_non_hermitian_and_non_square() {
        let m = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(matches!(
            hermitian_eigendecomposition(&m),
            Err(Error::NotHermitian { .. })
        ));
        assert!(matches!(
            hermitian_eigendecomposition(&ComplexMatrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
        // within tolerance: symmetrized, accepted
        let mut near = pauli::x();
        near[(0, 1)] += c(1e-12);
        assert!(hermitian_eigendecomposition(&near).is_ok());
    }

    #[test]
    fn zero_generator_gives_identity() {
        let u = unitary_from_generator(&ComplexMatrix::zeros(3, 3), 1.7).unwrap();
        assert_eq!(u, ComplexMatrix::identity(3));
    }

    #[test]
    fn pauli_z_half_turn_is_minus_identity() {
        let u = unitary_from_generator(&pauli::z(), PI).unwrap();
        assert!(u.distance(&ComplexMatrix::identity(2).scale_real(-1.0)) < 1e-15);
    }

    /// Truncated power series for exp(-i t H), independent of the eigensolver.
    fn expm_series(h: &ComplexMatrix, t: f64, terms: usize) -> ComplexMatrix {
        let n = h.rows();
        let a = h.scale(Complex64::new(0.0, -t));
        let mut term = ComplexMatrix::identity(n);
        let mut sum = term.clone();
        for k in 1..terms {
            term = (&term * &a).scale_real(1.0 / k as f64);
            sum = &sum + &term;
        }
        sum
    }

    #[test]
    fn pauli_x_quarter_turn_matches_series() {
        let u = unitary_from_generator(&pauli::x(), PI / 2.0).unwrap();
        let series = expm_series(&pauli::x(), PI / 2.0, 30);
        assert!(u.distance(&series) < 1e-12);
        assert!(u.distance(&pauli::x().scale(-I)) < 1e-12);
    }

    #[test]
    fn gram_schmidt_examples() {
        let e = vec![vec![ONE, ZERO], vec![ZERO, ONE]];
        assert_eq!(gram_schmidt(&e).unwrap(), ComplexMatrix::identity(2));

        let q = gram_schmidt(&[vec![ONE, ONE], vec![ONE, ZERO]]).unwrap();
        let s = FRAC_1_SQRT_2;
        let expected = ComplexMatrix::from_real_rows(&[vec![s, s], vec![s, -s]]);
        assert!(q.distance(&expected) < 1e-15);

        let err = gram_schmidt(&[vec![ONE, ZERO], vec![c(2.0), ZERO]]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { index: 1, .. }));
    }

    #[test]
    fn phase_convention_picks_lowest_index_on_ties() {
        let mut v = vec![Complex64::new(0.0, 0.5), Complex64::new(0.0, -0.5)];
        apply_phase_convention(&mut v);
        assert_eq!(v[0], c(0.5));
        assert!((v[1] - c(-0.5)).norm() < 1e-16);
    }

    #[test]
    fn commutator_examples() {
        let d1 = ComplexMatrix::real_diagonal(&[1.0, 2.0]);
        let d2 = ComplexMatrix::real_diagonal(&[5.0, -3.0]);
        assert_eq!(commutator_norm(&d1, &d2).unwrap(), 0.0);
        let zx = commutator_norm(&pauli::z(), &pauli::x()).unwrap();
        assert!((zx - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(commutator_norm(&pauli::y(), &pauli::y()).unwrap(), 0.0);
        assert!(commutator_norm(&d1, &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn trace_product_examples() {
        let id = ComplexMatrix::identity(4);
        assert_eq!(trace_product(&id, &id).unwrap(), c(4.0));
        let pz = ComplexMatrix::real_diagonal(&[1.0, 0.0]);
        let px = ComplexMatrix::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert_eq!(trace_product(&pz, &px).unwrap(), c(0.5));
        assert_eq!(trace_product(&pauli::z(), &pauli::x()).unwrap(), ZERO);
        assert!(trace_product(&ComplexMatrix::zeros(2, 3), &ComplexMatrix::zeros(2, 3)).is_err());
    }
}
