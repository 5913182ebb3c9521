//! Contexts (orthonormal bases of mutually exclusive outcomes) and modalities.
//!
//! A context is built either from a hermitian observable with non-degenerate
//! spectrum, from a commuting family of observables whose joint spectrum is
//! non-degenerate, or sampled from the Haar measure. Outcomes built from
//! observables are ordered by ascending eigenvalue.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, apply_phase_convention, commutator_norm, hermitian_eigendecomposition};
use crate::matrix::ComplexMatrix;
use crate::rng::stream_rng;

/// Orthonormality tolerance for context bases.
pub const BASIS_TOL: f64 = 1e-10;

/// Relative eigenvalue gap below which two outcomes cannot be told apart.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Relative commutator tolerance for a commuting family.
pub const COMMUTING_TOL: f64 = 1e-8;

/// An orthonormal basis whose columns are the modality vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ContextRepr", into = "ContextRepr")]
pub struct Context {
    id: String,
    basis: ComplexMatrix,
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ContextRepr {
    id: String,
    dim: usize,
    basis: ComplexMatrix,
    labels: Vec<String>,
}

impl TryFrom<ContextRepr> for Context {
    type Error = Error;

    fn try_from(repr: ContextRepr) -> Result<Self> {
        if repr.basis.rows() != repr.dim {
            return Err(Error::DimensionMismatch(format!(
                "declared dim {} but basis has {} rows",
                repr.dim,
                repr.basis.rows()
            )));
        }
        Context::new(repr.id, repr.basis, repr.labels)
    }
}

impl From<Context> for ContextRepr {
    fn from(c: Context) -> Self {
        ContextRepr {
            dim: c.dim(),
            id: c.id,
            basis: c.basis,
            labels: c.labels,
        }
    }
}

impl Context {
    /// Validates the basis and applies the column phase convention.
    pub fn new(id: impl Into<String>, basis: ComplexMatrix, labels: Vec<String>) -> Result<Self> {
        let dim = basis.require_square()?;
        if dim < 2 {
            return Err(Error::BadDimension(dim));
        }
        if labels.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                got: labels.len(),
            });
        }
        let deviation = basis.unitarity_defect();
        if deviation > BASIS_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Self {
            id: id.into(),
            basis: linalg::phase_normalized_columns(&basis),
            labels,
        })
    }

    /// Context with outcome labels `"0"`, `"1"`, ...
    pub fn with_index_labels(id: impl Into<String>, basis: ComplexMatrix) -> Result<Self> {
        let labels = (0..basis.cols()).map(|k| k.to_string()).collect();
        Self::new(id, basis, labels)
    }

    /// The standard basis of dimension `n`.
    pub fn standard(id: impl Into<String>, n: usize) -> Result<Self> {
        Self::with_index_labels(id, ComplexMatrix::identity(n))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Same basis and labels under a new id.
    pub fn renamed(&self, id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ..self.clone()
        }
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index < self.dim() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index, dim: self.dim() })
        }
    }

    /// Basis vector of outcome `index`.
    pub fn vector(&self, index: usize) -> Result<Vec<Complex64>> {
        self.check_index(index)?;
        Ok(self.basis.column(index))
    }

    pub fn modality(&self, index: usize) -> Result<Modality> {
        self.check_index(index)?;
        Ok(Modality {
            context_id: self.id.clone(),
            index,
        })
    }

    /// Rank-one projector `u u^dagger` onto outcome `index`.
    pub fn projector(&self, index: usize) -> Result<ComplexMatrix> {
        let u = self.vector(index)?;
        Ok(ComplexMatrix::outer(&u, &u))
    }

    pub fn projectors(&self) -> Vec<ComplexMatrix> {
        (0..self.dim())
            .map(|k| self.projector(k).expect("index in range"))
            .collect()
    }
}

/// One of the mutually exclusive outcomes of a context.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Modality {
    pub context_id: String,
    pub index: usize,
}

impl Modality {
    pub fn new(context_id: impl Into<String>, index: usize) -> Self {
        Self {
            context_id: context_id.into(),
            index,
        }
    }
}

/// Contexts by id. Insertion is the only mutation.
#[derive(Debug, Clone, Default)]
pub struct ContextRegistry {
    contexts: BTreeMap<String, Context>,
}

impl ContextRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a context. Re-registering an identical context is a no-op;
    /// reusing an id for a different basis is an error.
    pub fn insert(&mut self, ctx: Context) -> Result<()> {
        match self.contexts.get(ctx.id()) {
            Some(existing) if *existing == ctx => Ok(()),
            Some(_) => Err(Error::DuplicateContext(ctx.id().to_string())),
            None => {
                self.contexts.insert(ctx.id().to_string(), ctx);
                Ok(())
            }
        }
    }

    pub fn get(&self, id: &str) -> Result<&Context> {
        self.contexts
            .get(id)
            .ok_or_else(|| Error::UnknownContext(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// Projector of a registered modality.
    pub fn projector(&self, m: &Modality) -> Result<ComplexMatrix> {
        self.get(&m.context_id)?.projector(m.index)
    }
}

impl FromIterator<Context> for Result<ContextRegistry> {
    fn from_iter<T: IntoIterator<Item = Context>>(iter: T) -> Self {
        let mut reg = ContextRegistry::new();
        for ctx in iter {
            reg.insert(ctx)?;
        }
        Ok(reg)
    }
}

/// Human-readable eigenvalue label with float noise rounded away.
pub(crate) fn value_label(x: f64) -> String {
    let r = (x * 1e10).round() / 1e10;
    format!("{}", r + 0.0)
}

fn degeneracy_threshold(values: &[f64]) -> f64 {
    let spread = values.last().copied().unwrap_or(0.0) - values.first().copied().unwrap_or(0.0);
    DEGENERACY_TOL * spread.max(1.0)
}

/// Eigenbasis of a non-degenerate hermitian observable, with its eigenvalues
/// in ascending order.
pub fn context_from_observable(a: &ComplexMatrix, id: impl Into<String>) -> Result<(Context, Vec<f64>)> {
    let eig = hermitian_eigendecomposition(a)?;
    let threshold = degeneracy_threshold(&eig.eigenvalues);
    if let Some(gap) = eig
        .eigenvalues
        .windows(2)
        .map(|w| w[1] - w[0])
        .find(|&gap| gap <= threshold)
    {
        return Err(Error::DegenerateSpectrum { gap, threshold });
    }
    let labels = eig.eigenvalues.iter().map(|&x| value_label(x)).collect();
    let ctx = Context::new(id, eig.eigenvectors, labels)?;
    Ok((ctx, eig.eigenvalues))
}

/// Common eigenbasis of a commuting family of observables.
///
/// The first observable splits the space into eigenspaces; each eigenspace is
/// refined by diagonalizing the next observable restricted to it, and so on.
/// Outcomes are ordered lexicographically by their joint eigenvalue tuples,
/// which also become the labels.
pub fn csco_context(observables: &[ComplexMatrix], id: impl Into<String>) -> Result<Context> {
    let Some(first) = observables.first() else {
        return Err(Error::EmptyInput);
    };
    let n = first.require_square()?;
    let mut hermitian = Vec::with_capacity(observables.len());
    for a in observables {
        if a.require_square()? != n {
            return Err(Error::DimensionMismatch(format!(
                "observables of dimension {n} and {}",
                a.rows()
            )));
        }
        hermitian.push(linalg::require_hermitian(a)?);
    }
    for i in 0..hermitian.len() {
        for j in (i + 1)..hermitian.len() {
            let norm = commutator_norm(&hermitian[i], &hermitian[j])?;
            let scale = (hermitian[i].frobenius_norm() * hermitian[j].frobenius_norm()).max(1.0);
            if norm > COMMUTING_TOL * scale {
                return Err(Error::NotCommuting {
                    first: i,
                    second: j,
                    norm,
                });
            }
        }
    }

    // Each block: orthonormal columns spanning a joint eigenspace, plus the
    // eigenvalue tuple seen so far.
    let mut blocks: Vec<(Vec<Vec<Complex64>>, Vec<f64>)> = vec![((0..n).map(|k| unit(n, k)).collect(), Vec::new())];
    for a in &hermitian {
        let mut refined = Vec::with_capacity(n);
        for (vectors, tuple) in blocks {
            let w = ComplexMatrix::from_columns(&vectors);
            let restricted = &(&w.adjoint() * a) * &w;
            let eig = hermitian_eigendecomposition(&restricted)?;
            let threshold = degeneracy_threshold(&eig.eigenvalues).max(DEGENERACY_TOL * spectral_scale(a));
            let rotated = &w * &eig.eigenvectors;
            let mut k = 0;
            while k < eig.eigenvalues.len() {
                let mut end = k + 1;
                while end < eig.eigenvalues.len() && eig.eigenvalues[end] - eig.eigenvalues[end - 1] <= threshold {
                    end += 1;
                }
                let cluster: Vec<Vec<Complex64>> = (k..end).map(|c| rotated.column(c)).collect();
                let mean = eig.eigenvalues[k..end].iter().sum::<f64>() / (end - k) as f64;
                let mut t = tuple.clone();
                t.push(mean);
                refined.push((cluster, t));
                k = end;
            }
        }
        blocks = refined;
    }

    if let Some((vectors, _)) = blocks.iter().find(|(v, _)| v.len() > 1) {
        return Err(Error::DegenerateJointSpectrum(vectors.len()));
    }
    let single = observables.len() == 1;
    let mut columns = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (mut vectors, tuple) in blocks {
        let mut v = vectors.pop().expect("singleton block");
        apply_phase_convention(&mut v);
        columns.push(v);
        let parts: Vec<String> = tuple.iter().map(|&x| value_label(x)).collect();
        labels.push(if single {
            parts[0].clone()
        } else {
            format!("({})", parts.join(","))
        });
    }
    Context::new(id, ComplexMatrix::from_columns(&columns), labels)
}

fn spectral_scale(a: &ComplexMatrix) -> f64 {
    a.frobenius_norm().max(1.0)
}

fn unit(n: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// Haar-random context of dimension `n`, identified as `haar-<n>-<seed>`.
pub fn random_context(n: usize, seed: u64) -> Result<Context> {
    if n < 2 {
        return Err(Error::BadDimension(n));
    }
    let mut rng = stream_rng(seed, n as u64);
    let basis = linalg::haar_unitary(n, &mut rng);
    Context::with_index_labels(format!("haar-{n}-{seed}"), basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::pauli;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn pauli_z_context_orders_by_ascending_eigenvalue() {
        let (ctx, values) = context_from_observable(&pauli::z(), "Z").unwrap();
        assert_eq!(values, vec![-1.0, 1.0]);
        let expected = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(ctx.basis(), &expected);
        assert_eq!(ctx.labels(), &["-1".to_string(), "1".to_string()]);
    }

    #[test]
    fn pauli_x_context() {
        let (ctx, values) = context_from_observable(&pauli::x(), "X").unwrap();
        assert!((values[0] + 1.0).abs() < 1e-15 && (values[1] - 1.0).abs() < 1e-15);
        let s = FRAC_1_SQRT_2;
        let expected = ComplexMatrix::from_real_rows(&[vec![s, s], vec![-s, s]]);
        assert!(ctx.basis().distance(&expected) < 1e-15);
    }

    #[test]
    fn degenerate_spectrum_is_refused() {
        let err = context_from_observable(&ComplexMatrix::identity(3), "I").unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum { .. }));
        let near = ComplexMatrix::real_diagonal(&[0.0, 1e-9, 1.0]);
        assert!(context_from_observable(&near, "near").is_err());
    }

    #[test]
    fn csco_of_diagonal_pair() {
        let a = ComplexMatrix::real_diagonal(&[1.0, 1.0, 2.0]);
        let b = ComplexMatrix::real_diagonal(&[3.0, 4.0, 5.0]);
        let ctx = csco_context(&[a, b], "ab").unwrap();
        assert_eq!(ctx.basis(), &ComplexMatrix::identity(3));
        assert_eq!(ctx.labels(), &["(1,3)", "(1,4)", "(2,5)"]);
    }

    #[test]
    fn csco_with_rotated_degenerate_block() {
        // A = diag(1,1,2) and B mixing the first two axes: joint basis is
        // (1,-1,0)/sqrt2, (1,1,0)/sqrt2, e3
        let a = ComplexMatrix::real_diagonal(&[1.0, 1.0, 2.0]);
        let b = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 7.0]]);
        let ctx = csco_context(&[a, b], "ab").unwrap();
        let s = FRAC_1_SQRT_2;
        let expected = ComplexMatrix::from_real_rows(&[vec![s, s, 0.0], vec![-s, s, 0.0], vec![0.0, 0.0, 1.0]]);
        assert!(ctx.basis().distance(&expected) < 1e-14);
        assert_eq!(ctx.labels(), &["(1,-1)", "(1,1)", "(2,7)"]);
    }

    #[test]
    fn csco_errors() {
        assert!(matches!(
            csco_context(&[pauli::z(), pauli::x()], "zx"),
            Err(Error::NotCommuting { .. })
        ));
        assert_eq!(csco_context(&[], "none"), Err(Error::EmptyInput));
        let a = ComplexMatrix::real_diagonal(&[1.0, 1.0, 2.0]);
        let b = ComplexMatrix::real_diagonal(&[3.0, 3.0, 5.0]);
        assert!(matches!(
            csco_context(&[a, b], "deg"),
            Err(Error::DegenerateJointSpectrum(2))
        ));
    }

    #[test]
    fn csco_single_matches_observable_context() {
        let single = csco_context(&[pauli::z()], "Z").unwrap();
        let (ctx, _) = context_from_observable(&pauli::z(), "Z").unwrap();
        assert_eq!(single, ctx);
    }

    #[test]
    fn projectors() {
        let std2 = Context::standard("std", 2).unwrap();
        assert_eq!(std2.projector(0).unwrap(), ComplexMatrix::real_diagonal(&[1.0, 0.0]));
        assert!(matches!(
            std2.projector(2),
            Err(Error::IndexOutOfRange { index: 2, dim: 2 })
        ));

        let (x, _) = context_from_observable(&pauli::x(), "X").unwrap();
        let plus = x.projector(1).unwrap();
        let expected = ComplexMatrix::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(plus.distance(&expected) < 1e-15);

        let reg: Result<ContextRegistry> = [std2, x].into_iter().collect();
        let reg = reg.unwrap();
        assert!(matches!(
            reg.projector(&Modality::new("nope", 0)),
            Err(Error::UnknownContext(_))
        ));
        let p = reg.projector(&Modality::new("X", 0)).unwrap();
        assert!((p.trace().re - 1.0).abs() < 1e-12);
        assert!((&p * &p).distance(&p) < 1e-12);
        assert!(p.hermitian_defect().unwrap() < 1e-12);
    }

    #[test]
    fn registry_rejects_conflicting_ids() {
        let mut reg = ContextRegistry::new();
        reg.insert(Context::standard("a", 2).unwrap()).unwrap();
        reg.insert(Context::standard("a", 2).unwrap()).unwrap();
        let (x, _) = context_from_observable(&pauli::x(), "a").unwrap();
        assert_eq!(reg.insert(x), Err(Error::DuplicateContext("a".into())));
        assert_eq!(reg.len(), 1);
    }

    #[test]
    fn context_validation() {
        let bad = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert!(matches!(
            Context::with_index_labels("bad", bad),
            Err(Error::NotOrthonormal { .. })
        ));
        assert_eq!(Context::standard("one", 1), Err(Error::BadDimension(1)));
        assert!(matches!(
            Context::new("x", ComplexMatrix::identity(2), vec!["a".into()]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn context_json_schema() {
        let ctx = Context::standard("std", 2).unwrap();
        let json = serde_json::to_value(&ctx).unwrap();
        assert_eq!(json["id"], "std");
        assert_eq!(json["dim"], 2);
        assert_eq!(json["labels"], serde_json::json!(["0", "1"]));
        assert_eq!(json["basis"]["re"], serde_json::json!([1.0, 0.0, 0.0, 1.0]));
        let back: Context = serde_json::from_value(json.clone()).unwrap();
        assert_eq!(back, ctx);

        let mut wrong = json;
        wrong["dim"] = 3.into();
        assert!(serde_json::from_value::<Context>(wrong).is_err());
    }

    #[test]
    fn random_context_is_deterministic_and_unitary() {
        let a = random_context(5, 7).unwrap();
        let b = random_context(5, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.basis().unitarity_defect() <= 1e-10);
        assert_ne!(a.basis(), random_context(5, 8).unwrap().basis());
        assert_eq!(random_context(1, 0), Err(Error::BadDimension(1)));
    }

    #[test]
    fn haar_average_of_first_overlap() {
        // Monte Carlo oracle: E|<e_0|u_0>|^2 = 1/N for Haar u
        let std2 = Context::standard("std", 2).unwrap();
        let samples = 10_000;
        let mean: f64 = (0..samples)
            .map(|seed| {
                let ctx = random_context(2, seed).unwrap();
                let u = ctx.vector(0).unwrap();
                let e = std2.vector(0).unwrap();
                (e[0].conj() * u[0] + e[1].conj() * u[1]).norm_sqr()
            })
            .sum::<f64>()
            / samples as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }
}
