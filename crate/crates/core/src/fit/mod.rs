//! Realizing doubly stochastic matrices as squared moduli of unitary or real
//! orthogonal matrices.

pub mod optimize;
pub mod stochastic;

pub use optimize::{
    descend, fit_residual, fit_with_starts, orthostochastic_fit, unistochastic_fit, Descent, FitConfig, FitResult,
    Manifold, CONVERGED_RESIDUAL,
};
pub use stochastic::{
    birkhoff_sample, is_doubly_stochastic, parameter_count, sample_outcome, DoublyStochasticTarget, ParameterCount,
};
