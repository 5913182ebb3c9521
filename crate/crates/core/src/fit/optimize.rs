//! Riemannian gradient descent of `f(U) = sum_ij (|U_ij|^2 - B_ij)^2` over the
//! unitary group or the real orthogonal group.
//!
//! Each iteration builds a hermitian tangent generator `G` from the Euclidean
//! gradient, then tries `U <- exp(-i eps G) U` with backtracking on `eps`.
//! Restarts begin from Haar-random points and are merged by minimum residual.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::stochastic::DoublyStochasticTarget;
use crate::linalg::{haar_orthogonal, haar_unitary, hermitian_eigendecomposition, HermitianEig};
use crate::matrix::{ComplexMatrix, I};
use crate::rng::stream_rng;

/// A fit counts as converged when its best residual is at or below this.
pub const CONVERGED_RESIDUAL: f64 = 1e-10;

/// Line search gives up once the step drops below this.
const MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e12;

/// Below this residual the iterate is exact to working precision.
const RESIDUAL_FLOOR: f64 = 1e-28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Manifold {
    Unitary,
    Orthogonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub seed: u64,
    pub initial_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iterations: 2000,
            gradient_tolerance: 1e-12,
            seed: 0,
            initial_step: 0.1,
        }
    }
}

impl FitConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::InvalidConfig("initial_step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub best_matrix: ComplexMatrix,
    pub residual: f64,
    pub restarts_run: usize,
    pub converged: bool,
    pub per_restart_residuals: Vec<f64>,
}

impl FitResult {
    /// `{"residual", "converged", "restarts", "matrix", "per_restart"}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "residual": self.residual,
            "converged": self.converged,
            "restarts": self.restarts_run,
            "matrix": self.best_matrix,
            "per_restart": self.per_restart_residuals,
        })
    }
}

/// Outcome of a single descent from one starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct Descent {
    pub matrix: ComplexMatrix,
    pub residual: f64,
    /// Residual after every accepted or rejected iteration, starting point first.
    pub history: Vec<f64>,
    pub gradient_norm: f64,
}

/// `sum_ij (|U_ij|^2 - B_ij)^2`.
pub fn fit_residual(u: &ComplexMatrix, target: &DoublyStochasticTarget) -> f64 {
    u.as_slice()
        .iter()
        .zip(target.entries().as_slice())
        .map(|(z, b)| (z.norm_sqr() - b).powi(2))
        .sum()
}

/// Hermitian descent generator at `u`: moving along `exp(-i eps G) u` lowers
/// the residual to first order by `eps |G|_F^2`.
fn descent_generator(u: &ComplexMatrix, target: &DoublyStochasticTarget, manifold: Manifold) -> ComplexMatrix {
    let b = target.entries().as_slice();
    let grad = ComplexMatrix::from_vec(
        u.rows(),
        u.cols(),
        u.as_slice()
            .iter()
            .zip(b)
            .map(|(z, bij)| z * (4.0 * (z.norm_sqr() - bij)))
            .collect(),
    )
    .expect("same shape as u");
    match manifold {
        Manifold::Unitary => (&u.scale(I) * &grad.adjoint()).hermitian_part().expect("square"),
        Manifold::Orthogonal => {
            // exp(-eps A) with A = skew(grad u^T), written as exp(-i eps (-i A))
            let a = (&grad * &u.transpose()).antisymmetric_real_part().expect("square");
            a.scale(-I)
        }
    }
}

fn step_from(eig: &HermitianEig, eps: f64, u: &ComplexMatrix, manifold: Manifold) -> ComplexMatrix {
    let v = &eig.eigenvectors;
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&lambda| Complex64::from_polar(1.0, -eps * lambda))
        .collect();
    let scaled = ComplexMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * phases[j]);
    let next = &(&scaled * &v.adjoint()) * u;
    match manifold {
        Manifold::Unitary => next,
        Manifold::Orthogonal => next.real_part().to_complex(),
    }
}

/// Runs one descent from `start` with monotone backtracking: a step that does
/// not lower the residual is halved, an accepted step is doubled (up to a cap).
pub fn descend(start: ComplexMatrix, target: &DoublyStochasticTarget, cfg: &FitConfig, manifold: Manifold) -> Descent {
    let mut u = start;
    let mut residual = fit_residual(&u, target);
    let mut history = vec![residual];
    let mut step = cfg.initial_step;
    let mut gradient_norm = f64::INFINITY;

    for _ in 0..cfg.max_iterations {
        if residual <= RESIDUAL_FLOOR {
            break;
        }
        let g = descent_generator(&u, target, manifold);
        gradient_norm = g.frobenius_norm();
        if gradient_norm < cfg.gradient_tolerance {
            break;
        }
        let eig = hermitian_eigendecomposition(&g).expect("generator is hermitian by construction");
        let mut accepted = false;
        while step >= MIN_STEP {
            let candidate = step_from(&eig, step, &u, manifold);
            let value = fit_residual(&candidate, target);
            if value < residual {
                u = candidate;
                residual = value;
                step = (step * 2.0).min(MAX_STEP);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        history.push(residual);
        if !accepted {
            break;
        }
    }

    Descent {
        matrix: u,
        residual,
        history,
        gradient_norm,
    }
}

fn random_start(n: usize, seed: u64, restart: usize, manifold: Manifold) -> ComplexMatrix {
    let mut rng = stream_rng(seed, restart as u64);
    match manifold {
        Manifold::Unitary => haar_unitary(n, &mut rng),
        Manifold::Orthogonal => haar_orthogonal(n, &mut rng),
    }
}

/// Multi-restart fit from Haar-random starts plus any explicit `extra_starts`
/// (run after the random ones, in order).
pub fn fit_with_starts(
    target: &DoublyStochasticTarget,
    cfg: &FitConfig,
    manifold: Manifold,
    extra_starts: &[ComplexMatrix],
) -> Result<FitResult> {
    cfg.validate()?;
    let n = target.dim();
    if n < 1 {
        return Err(Error::InvalidTarget("empty target".into()));
    }
    for s in extra_starts {
        if s.rows() != n || s.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "start of shape {}x{} for target of dimension {n}",
                s.rows(),
                s.cols()
            )));
        }
    }

    let total = cfg.restarts + extra_starts.len();
    let descents: Vec<Descent> = (0..total)
        .into_par_iter()
        .map(|r| {
            let start = if r < cfg.restarts {
                random_start(n, cfg.seed, r, manifold)
            } else {
                extra_starts[r - cfg.restarts].clone()
            };
            descend(start, target, cfg, manifold)
        })
        .collect();

    let per_restart_residuals: Vec<f64> = descents.iter().map(|d| d.residual).collect();
    // strict comparison keeps the lowest index on ties
    let best = descents.iter().enumerate().fold(
        0,
        |best, (k, d)| if d.residual < descents[best].residual { k } else { best },
    );
    let residual = descents[best].residual;
    Ok(FitResult {
        best_matrix: descents[best].matrix.clone(),
        residual,
        restarts_run: total,
        converged: residual <= CONVERGED_RESIDUAL,
        per_restart_residuals,
    })
}

/// Searches for a unitary `U` with `|U_ij|^2 = B_ij`.
pub fn unistochastic_fit(target: &DoublyStochasticTarget, cfg: &FitConfig) -> Result<FitResult> {
    fit_with_starts(target, cfg, Manifold::Unitary, &[])
}

/// Searches for a real orthogonal `O` with `O_ij^2 = B_ij`.
pub fn orthostochastic_fit(target: &DoublyStochasticTarget, cfg: &FitConfig) -> Result<FitResult> {
    fit_with_starts(target, cfg, Manifold::Orthogonal, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::stochastic::{birkhoff_sample, is_doubly_stochastic};
    use crate::matrix::RealMatrix;

    fn quick(seed: u64) -> FitConfig {
        FitConfig {
            restarts: 8,
            ..FitConfig::with_seed(seed)
        }
    }

    #[test]
    fn generator_is_a_descent_direction() {
        // finite differences along exp(-i eps G) u must decrease at rate |G|^2
        let target = birkhoff_sample(3, 3, 4).unwrap();
        for manifold in [Manifold::Unitary, Manifold::Orthogonal] {
            let u = random_start(3, 1, 0, manifold);
            let g = descent_generator(&u, &target, manifold);
            let eig = hermitian_eigendecomposition(&g).unwrap();
            let h = 1e-6;
            let plus = fit_residual(&step_from(&eig, h, &u, manifold), &target);
            let minus = fit_residual(&step_from(&eig, -h, &u, manifold), &target);
            let slope = (plus - minus) / (2.0 * h);
            let expected = -g.frobenius_norm().powi(2);
            assert!(
                (slope - expected).abs() < 1e-6 * expected.abs().max(1.0),
                "{manifold:?} {slope} {expected}"
            );
        }
    }

    #[test]
    fn identity_target_is_reached() {
        let target = DoublyStochasticTarget::new(RealMatrix::identity(3)).unwrap();
        let uni = unistochastic_fit(&target, &quick(1)).unwrap();
        assert!(uni.converged, "{}", uni.residual);
        let ortho = orthostochastic_fit(&target, &quick(1)).unwrap();
        assert!(ortho.converged, "{}", ortho.residual);
        assert!(ortho.best_matrix.max_imaginary() == 0.0);
    }

    #[test]
    fn two_by_two_rotation_target() {
        let p = 0.3;
        let target = DoublyStochasticTarget::from_rows(&[vec![p, 1.0 - p], vec![1.0 - p, p]]).unwrap();
        // oracle: rotation with cos^2 = p realizes it exactly
        let c = p.sqrt();
        let s = (1.0 - p).sqrt();
        let rotation = ComplexMatrix::from_real_rows(&[vec![c, -s], vec![s, c]]);
        assert!(fit_residual(&rotation, &target) < 1e-30);
        let fit = orthostochastic_fit(&target, &quick(3)).unwrap();
        assert!(fit.residual <= 1e-10);
        assert!(fit.best_matrix.unitarity_defect() < 1e-8);
    }

    #[test]
    fn residual_is_monotone_within_a_descent() {
        let target = birkhoff_sample(4, 5, 10).unwrap();
        for (r, manifold) in [Manifold::Unitary, Manifold::Orthogonal].into_iter().enumerate() {
            let d = descend(
                random_start(4, 2, r, manifold),
                &target,
                &FitConfig::default(),
                manifold,
            );
            assert!(d.history.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(*d.history.last().unwrap(), d.residual);
        }
    }

    #[test]
    fn fitted_unitaries_give_doubly_stochastic_moduli() {
        for seed in 0..5 {
            let target = birkhoff_sample(4, 3, seed).unwrap();
            let fit = unistochastic_fit(&target, &quick(seed)).unwrap();
            assert!(fit.best_matrix.unitarity_defect() < 1e-8);
            assert!(is_doubly_stochastic(&fit.best_matrix.squared_moduli(), 1e-8).unwrap());
            let min = fit.per_restart_residuals.iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(fit.residual, min);
        }
    }

    #[test]
    fn fits_are_deterministic() {
        let target = birkhoff_sample(3, 4, 77).unwrap();
        let a = unistochastic_fit(&target, &quick(5)).unwrap();
        let b = unistochastic_fit(&target, &quick(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_config() {
        let target = DoublyStochasticTarget::flat(2).unwrap();
        let cfg = FitConfig {
            restarts: 0,
            ..FitConfig::default()
        };
        assert!(matches!(unistochastic_fit(&target, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn json_schema() {
        let target = DoublyStochasticTarget::flat(2).unwrap();
        let fit = unistochastic_fit(&target, &quick(0)).unwrap();
        let json = fit.to_json();
        for key in ["residual", "converged", "restarts", "matrix", "per_restart"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["restarts"], 8);
    }
}
