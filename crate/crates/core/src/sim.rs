//! Seeded Monte Carlo simulation of chains of projective measurements.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::context::{context_from_observable, Context, ContextRegistry, Modality};
use crate::error::{Error, Result};
use crate::fit::sample_outcome;
use crate::format::{fmt_sig, round_json};
use crate::group::{rotation_unitary, spin_matrices, HalfInteger, RotationVector};
use crate::matrix::RealMatrix;
use crate::observable::observable_operator;
use crate::rng::{derive_seed, stream_rng};
use crate::transition::transition_matrix;

/// Minimum shots for the statistical estimators.
pub const MIN_ESTIMATOR_SHOTS: u64 = 100;

/// The modality the system was last found in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemState {
    pub current: Modality,
}

impl SystemState {
    pub fn new(ctx: &Context, index: usize) -> Result<Self> {
        Ok(Self {
            current: ctx.modality(index)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub step: usize,
    pub context_id: String,
    pub outcome_index: usize,
}

/// Measures `ctx` on `state`. The state's own context is looked up in `registry`.
pub fn measure<R: Rng + ?Sized>(
    state: &SystemState,
    ctx: &Context,
    registry: &ContextRegistry,
    rng: &mut R,
) -> Result<(usize, SystemState)> {
    let source = registry.get(&state.current.context_id)?;
    if source.dim() != ctx.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state lives in dimension {} but '{}' has dimension {}",
            source.dim(),
            ctx.id(),
            ctx.dim()
        )));
    }
    if source.id() == ctx.id() {
        return Ok((state.current.index, state.clone()));
    }
    let table = transition_matrix(source, ctx)?;
    let outcome = sample_outcome(table.probs.row(state.current.index), rng)?;
    Ok((
        outcome,
        SystemState {
            current: Modality::new(ctx.id(), outcome),
        },
    ))
}

/// One step of a precomputed chain.
enum Step {
    /// Same context as before: the outcome repeats.
    Repeat,
    Sample(RealMatrix),
}

/// Outcome-tuple counts of a measurement chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub shots: u64,
    pub chain: Vec<String>,
    pub counts: BTreeMap<Vec<usize>, u64>,
}

fn tuple_key(outcomes: &[usize]) -> String {
    let parts: Vec<String> = outcomes.iter().map(usize::to_string).collect();
    format!("({})", parts.join(","))
}

impl SequenceResult {
    pub fn frequency(&self, outcomes: &[usize]) -> f64 {
        self.counts.get(outcomes).copied().unwrap_or(0) as f64 / self.shots as f64
    }

    /// Frequency with which the outcome of step `step` equals `index`.
    pub fn marginal(&self, step: usize, index: usize) -> f64 {
        let hits: u64 = self
            .counts
            .iter()
            .filter(|(k, _)| k[step] == index)
            .map(|(_, c)| c)
            .sum();
        hits as f64 / self.shots as f64
    }

    pub fn empirical_frequencies(&self) -> BTreeMap<Vec<usize>, f64> {
        self.counts
            .iter()
            .map(|(k, &c)| (k.clone(), c as f64 / self.shots as f64))
            .collect()
    }

    /// `{"shots", "chain", "frequencies": {"(i,j,k)": f}}`.
    pub fn to_json(&self) -> Value {
        let frequencies: serde_json::Map<String, Value> = self
            .empirical_frequencies()
            .into_iter()
            .map(|(k, f)| (tuple_key(&k), json!(f)))
            .collect();
        let mut v = json!({"shots": self.shots, "chain": self.chain, "frequencies": frequencies});
        round_json(&mut v);
        v
    }

    /// `outcome_tuple,count,frequency` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidConfig(e.to_string());
        writer
            .write_record(["outcome_tuple", "count", "frequency"])
            .map_err(io)?;
        for (k, &c) in &self.counts {
            let f = c as f64 / self.shots as f64;
            writer
                .write_record([tuple_key(k), c.to_string(), fmt_sig(f)])
                .map_err(io)?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Transition tables for each step of `chain`, validated against `initial`.
fn plan_chain(initial: &Context, index: usize, chain: &[Context]) -> Result<Vec<Step>> {
    if chain.is_empty() {
        return Err(Error::EmptyInput);
    }
    initial.modality(index)?;
    let mut steps = Vec::with_capacity(chain.len());
    let mut previous = initial;
    for ctx in chain {
        if previous.dim() != ctx.dim() {
            return Err(Error::DimensionMismatch(format!(
                "'{}' has dimension {} but '{}' has {}",
                previous.id(),
                previous.dim(),
                ctx.id(),
                ctx.dim()
            )));
        }
        steps.push(if previous.id() == ctx.id() {
            Step::Repeat
        } else {
            Step::Sample(transition_matrix(previous, ctx)?.probs)
        });
        previous = ctx;
    }
    Ok(steps)
}

fn sample_chain(steps: &[Step], index: usize, seed: u64, shot: u64) -> Result<Vec<usize>> {
    let mut rng = stream_rng(seed, shot);
    let mut current = index;
    let mut outcomes = Vec::with_capacity(steps.len());
    for step in steps {
        if let Step::Sample(table) = step {
            current = sample_outcome(table.row(current), &mut rng)?;
        }
        outcomes.push(current);
    }
    Ok(outcomes)
}

/// Runs `shots` independent copies of the chain from `(initial, index)`.
/// Shot `s` draws from `stream_rng(seed, s)`, so the result does not depend
/// on how shots are spread across threads.
pub fn run_sequence(
    initial: &Context,
    index: usize,
    chain: &[Context],
    shots: u64,
    seed: u64,
) -> Result<SequenceResult> {
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be at least 1".into()));
    }
    let steps = plan_chain(initial, index, chain)?;
    let counts = (0..shots)
        .into_par_iter()
        .try_fold(BTreeMap::new, |mut acc: BTreeMap<Vec<usize>, u64>, shot| {
            *acc.entry(sample_chain(&steps, index, seed, shot)?).or_insert(0) += 1;
            Ok::<_, Error>(acc)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (k, c) in b {
                *a.entry(k).or_insert(0) += c;
            }
            Ok(a)
        })?;

    Ok(SequenceResult {
        shots,
        chain: chain.iter().map(|c| c.id().to_string()).collect(),
        counts,
    })
}

/// Step-by-step record of shot `shot` of the same run as [`run_sequence`].
pub fn replay_shot(
    initial: &Context,
    index: usize,
    chain: &[Context],
    seed: u64,
    shot: u64,
) -> Result<Vec<MeasurementRecord>> {
    let steps = plan_chain(initial, index, chain)?;
    let outcomes = sample_chain(&steps, index, seed, shot)?;
    Ok(chain
        .iter()
        .zip(outcomes)
        .enumerate()
        .map(|(step, (ctx, outcome_index))| MeasurementRecord {
            step,
            context_id: ctx.id().to_string(),
            outcome_index,
        })
        .collect())
}

fn binomial_stderr(p: f64, shots: u64) -> f64 {
    (p * (1.0 - p) / shots as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReciprocityEstimate {
    /// Frequency of `j` in `E'` starting from `(E, i)`.
    pub forward: f64,
    /// Frequency of `i` in `E` starting from `(E', j)`.
    pub reverse: f64,
    /// Larger of the two binomial standard errors.
    pub stderr: f64,
}

impl ReciprocityEstimate {
    pub fn agrees(&self, sigmas: f64) -> bool {
        (self.forward - self.reverse).abs() <= sigmas * self.stderr
    }
}

pub fn estimate_reciprocity(
    e: &Context,
    e_prime: &Context,
    i: usize,
    j: usize,
    shots: u64,
    seed: u64,
) -> Result<ReciprocityEstimate> {
    if shots < MIN_ESTIMATOR_SHOTS {
        return Err(Error::InvalidConfig(format!(
            "need at least {MIN_ESTIMATOR_SHOTS} shots"
        )));
    }
    e_prime.modality(j)?;
    let forward = run_sequence(e, i, std::slice::from_ref(e_prime), shots, derive_seed(seed, 0))?.marginal(0, j);
    let reverse = run_sequence(e_prime, j, std::slice::from_ref(e), shots, derive_seed(seed, 1))?.marginal(0, i);
    Ok(ReciprocityEstimate {
        forward,
        reverse,
        stderr: binomial_stderr(forward, shots).max(binomial_stderr(reverse, shots)),
    })
}

/// Non-contextual hidden values: every context has a predetermined outcome
/// that measurement reveals without disturbing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalRefinementModel {
    pub hidden_assignment: BTreeMap<String, usize>,
}

impl ClassicalRefinementModel {
    pub fn assign(&mut self, ctx: &Context, index: usize) -> Result<()> {
        ctx.modality(index)?;
        self.hidden_assignment.insert(ctx.id().to_string(), index);
        Ok(())
    }

    pub fn measure(&self, ctx: &Context) -> Result<usize> {
        self.hidden_assignment
            .get(ctx.id())
            .copied()
            .ok_or_else(|| Error::UnknownContext(ctx.id().to_string()))
    }
}

/// One row of the refinement sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementPoint {
    pub theta: f64,
    pub quantum: f64,
    pub classical: f64,
    /// `p^2 + (1-p)^2` with `p = cos^2(theta/2)`.
    pub analytic: f64,
    /// Binomial standard error of the quantum estimate around `analytic`.
    pub stderr: f64,
}

/// Spin-1/2 contexts along z and along z tilted by `theta` about y.
pub fn bloch_pair(theta: f64) -> Result<(Context, Context)> {
    let rep = spin_matrices(HalfInteger::from_twice(1))?;
    let alpha = rep.rotated_context(&RotationVector::new([0.0; 3]), "alpha")?;
    let beta = rep.rotated_context(&RotationVector::new([0.0, theta, 0.0]), "beta")?;
    Ok((alpha, beta))
}

/// Return probability of the chain `alpha -> beta -> alpha` from `(alpha, +)`,
/// quantum versus the non-disturbing classical comparator.
pub fn classical_refinement_demo(theta: f64, shots: u64, seed: u64) -> Result<RefinementPoint> {
    if shots < MIN_ESTIMATOR_SHOTS {
        return Err(Error::InvalidConfig(format!(
            "need at least {MIN_ESTIMATOR_SHOTS} shots"
        )));
    }
    let (alpha, beta) = bloch_pair(theta)?;
    // ascending m: index 1 is m = +1/2
    let plus = 1;
    let chain = [beta.clone(), alpha.clone()];
    let quantum = run_sequence(&alpha, plus, &chain, shots, derive_seed(seed, 0))?.marginal(1, plus);

    // classical arm: the beta value is drawn once per shot from the same
    // marginal, then every measurement just reads the hidden table
    let beta_row = transition_matrix(&alpha, &beta)?.probs.row(plus).to_vec();
    let classical_seed = derive_seed(seed, 1);
    let returns = (0..shots)
        .into_par_iter()
        .map(|shot| -> Result<u64> {
            let mut rng = stream_rng(classical_seed, shot);
            let mut model = ClassicalRefinementModel::default();
            model.assign(&alpha, plus)?;
            model.assign(&beta, sample_outcome(&beta_row, &mut rng)?)?;
            let _ = model.measure(&beta)?;
            Ok(u64::from(model.measure(&alpha)? == plus))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;

    let p = (theta / 2.0).cos().powi(2);
    let analytic = p * p + (1.0 - p) * (1.0 - p);
    Ok(RefinementPoint {
        theta,
        quantum,
        classical: returns as f64 / shots as f64,
        analytic,
        stderr: binomial_stderr(analytic, shots),
    })
}

/// `points` evenly spaced angles from 0 to pi inclusive.
pub fn refinement_sweep(points: usize, shots: u64, seed: u64) -> Result<Vec<RefinementPoint>> {
    if points < 2 {
        return Err(Error::InvalidConfig("sweep needs at least 2 points".into()));
    }
    (0..points)
        .map(|k| {
            let theta = PI * k as f64 / (points - 1) as f64;
            classical_refinement_demo(theta, shots, derive_seed(seed, k as u64))
        })
        .collect()
}

/// Six-sided die measured in a basis rotated by the spin-5/2 representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiceResult {
    pub labels: Vec<String>,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    /// Exact probabilities from the transition matrix.
    pub expected: Vec<f64>,
    pub shots: u64,
}

pub fn quantum_dice_demo(u: &RotationVector, shots: u64, seed: u64) -> Result<DiceResult> {
    let faces: Vec<f64> = (1..=6).map(f64::from).collect();
    let standard = Context::standard("dice", 6)?;
    let die = observable_operator(&standard, &faces)?;
    let (dice, values) = context_from_observable(&die.operator, "dice")?;

    let rep = spin_matrices(HalfInteger::from_twice(5))?;
    let rot = rotation_unitary(&rep, u)?;
    let rotated_operator = (&(&rot * &die.operator) * &rot.adjoint()).hermitian_part()?;
    let (rotated, _) = context_from_observable(&rotated_operator, "dice-rotated")?;

    let result = run_sequence(&dice, 0, std::slice::from_ref(&rotated), shots, seed)?;
    let counts: Vec<u64> = (0..6)
        .map(|k| result.counts.get(&vec![k]).copied().unwrap_or(0))
        .collect();
    Ok(DiceResult {
        labels: values.iter().map(|v| format!("{v}")).collect(),
        frequencies: counts.iter().map(|&c| c as f64 / shots as f64).collect(),
        counts,
        expected: transition_matrix(&dice, &rotated)?.probs.row(0).to_vec(),
        shots,
    })
}
