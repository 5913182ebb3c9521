//! Command-line front end. Exit codes: 0 success, 2 input error, 3 fit did
//! not converge.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _};
use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::context::{random_context, Context, ContextRegistry};
use crate::fit::{
    birkhoff_sample, fit_with_starts, is_doubly_stochastic, DoublyStochasticTarget, FitConfig, FitResult, Manifold,
};
use crate::format::{fmt_sig, round_json};
use crate::group::{
    global_phase, physical_observable, representation_defect, rotation_unitary, spin_matrices, HalfInteger,
    PhysicalScale, RotationVector,
};
use crate::linalg::hermitian_eigendecomposition;
use crate::rng::{derive_seed, stream_rng};
use crate::sim::{estimate_reciprocity, quantum_dice_demo, refinement_sweep, run_sequence};
use crate::transition::transition_matrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

const DEFAULT_SHOTS: u64 = 100_000;
const DEFECT_PAIRS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "modality",
    version,
    about = "Transition matrices, stochastic fits, spin representations and measurement simulation"
)]
pub struct Cli {
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Monte Carlo shots [default: 100000, or the value in a chain spec]
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    #[arg(long, global = true, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMode {
    #[value(alias = "unistochastic")]
    Uni,
    #[value(alias = "orthostochastic")]
    Ortho,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    Dice,
    Refinement,
    Reciprocity,
    Atlas,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transition matrix between two context files, with a doubly-stochastic verdict.
    Transition { a: PathBuf, b: PathBuf },
    /// Fit a doubly stochastic CSV target by squared moduli of a unitary or orthogonal matrix.
    Fit {
        target: PathBuf,
        #[arg(long, value_enum, default_value_t = FitMode::Uni)]
        mode: FitMode,
    },
    /// Check the spin-j representation and print the physical observable.
    Spin {
        /// Half-integer such as 1/2, 1, 1.5.
        j: String,
        /// Rotation vector x,y,z (axis times angle).
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        /// Unit axis of the physical observable.
        #[arg(long, default_value = "0,0,1", allow_hyphen_values = true)]
        axis: String,
    },
    /// Run a measurement chain described by a JSON spec.
    Simulate { spec: PathBuf },
    /// Canned demonstrations.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
        /// Rotation vector for the dice demo.
        #[arg(long, default_value = "1.5707963267948966,0,0", allow_hyphen_values = true)]
        u: String,
        /// Dimension for reciprocity [default 4] and atlas [default 3].
        #[arg(long)]
        n: Option<usize>,
        /// Number of tuples (reciprocity) or targets (atlas).
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Theta points for the refinement sweep.
        #[arg(long, default_value_t = 16)]
        points: usize,
    },
}

/// Rendered output plus exit code.
struct Report {
    json: Value,
    csv: String,
    code: i32,
}

impl Report {
    fn ok(json: Value, csv: String) -> Self {
        Self {
            json,
            csv,
            code: EXIT_OK,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    let result = validate(cli).and_then(|()| dispatch(cli)).and_then(|report| {
        write_output(cli, &report)?;
        Ok(report.code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INPUT
        }
    }
}

fn validate(cli: &Cli) -> anyhow::Result<()> {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        bail!("--tol must be positive");
    }
    if cli.restarts == 0 {
        bail!("--restarts must be at least 1");
    }
    if cli.shots == Some(0) {
        bail!("--shots must be at least 1");
    }
    Ok(())
}

fn write_output(cli: &Cli, report: &Report) -> anyhow::Result<()> {
    let text = match cli.format {
        OutputFormat::Json => {
            let mut v = report.json.clone();
            round_json(&mut v);
            serde_json::to_string_pretty(&v)? + "\n"
        }
        OutputFormat::Csv => report.csv.clone(),
    };
    match &cli.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> anyhow::Result<Report> {
    match &cli.command {
        Command::Transition { a, b } => cmd_transition(cli, a, b),
        Command::Fit { target, mode } => cmd_fit(cli, target, *mode),
        Command::Spin { j, u, hbar, axis } => cmd_spin(cli, j, u, *hbar, axis),
        Command::Simulate { spec } => cmd_simulate(cli, spec),
        Command::Demo {
            name,
            u,
            n,
            count,
            points,
        } => match name {
            DemoName::Dice => demo_dice(cli, u),
            DemoName::Refinement => demo_refinement(cli, *points),
            DemoName::Reciprocity => demo_reciprocity(cli, n.unwrap_or(4), *count),
            DemoName::Atlas => demo_atlas(cli, n.unwrap_or(3), *count),
        },
    }
}

fn read_context(path: &Path) -> anyhow::Result<Context> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing context {}", path.display()))
}

fn parse_vector(s: &str) -> anyhow::Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| anyhow!("expected three comma-separated numbers, got '{s}'"))?;
    let v: [f64; 3] = parts
        .try_into()
        .map_err(|_| anyhow!("expected three comma-separated numbers, got '{s}'"))?;
    if v.iter().any(|x| !x.is_finite()) {
        bail!("non-finite component in '{s}'");
    }
    Ok(v)
}

fn csv_line(fields: &[String]) -> String {
    fields.join(",") + "\n"
}

fn cmd_transition(cli: &Cli, a: &Path, b: &Path) -> anyhow::Result<Report> {
    let (ea, eb) = (read_context(a)?, read_context(b)?);
    let t = transition_matrix(&ea, &eb)?;
    let pass = is_doubly_stochastic(&t.probs, cli.tol)?;
    let (row_dev, col_dev) = (t.max_row_deviation(), t.max_column_deviation());
    let json = json!({
        "source": t.source_context,
        "target": t.target_context,
        "matrix": t.probs.to_rows(),
        "verdict": {
            "doubly_stochastic": pass,
            "max_row_deviation": row_dev,
            "max_column_deviation": col_dev,
            "tol": cli.tol,
        },
    });
    let mut csv = t.to_csv();
    writeln!(
        csv,
        "# doubly_stochastic={pass} max_row_deviation={} max_column_deviation={}",
        fmt_sig(row_dev),
        fmt_sig(col_dev)
    )?;
    Ok(Report::ok(json, csv))
}

fn fit_config(cli: &Cli, seed: u64) -> FitConfig {
    FitConfig {
        restarts: cli.restarts,
        ..FitConfig::with_seed(seed)
    }
}

fn cmd_fit(cli: &Cli, path: &Path, mode: FitMode) -> anyhow::Result<Report> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let target =
        DoublyStochasticTarget::from_csv(&text, cli.tol).with_context(|| format!("target {}", path.display()))?;
    let manifold = match mode {
        FitMode::Uni => Manifold::Unitary,
        FitMode::Ortho => Manifold::Orthogonal,
    };
    let fit = fit_with_starts(&target, &fit_config(cli, cli.seed), manifold, &[])?;
    let converged = fit.residual <= cli.tol;

    let mut json = fit.to_json();
    json["converged"] = json!(converged);
    json["mode"] = json!(manifold);
    json["target"] = json!(target.fingerprint());

    let mut csv = String::new();
    writeln!(
        csv,
        "# mode={} target={} residual={} converged={converged} restarts={}",
        json["mode"].as_str().unwrap_or_default(),
        target.fingerprint(),
        fmt_sig(fit.residual),
        fit.restarts_run
    )?;
    csv.push_str("row,col,re,im,modulus_squared\n");
    let m = &fit.best_matrix;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let z = m[(i, j)];
            csv.push_str(&csv_line(&[
                i.to_string(),
                j.to_string(),
                fmt_sig(z.re),
                fmt_sig(z.im),
                fmt_sig(z.norm_sqr()),
            ]));
        }
    }
    let code = if converged { EXIT_OK } else { EXIT_NOT_CONVERGED };
    Ok(Report { json, csv, code })
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.value <= self.tolerance
    }
}

fn cmd_spin(cli: &Cli, j: &str, u: &str, hbar: f64, axis: &str) -> anyhow::Result<Report> {
    let j: HalfInteger = j.parse()?;
    let u = RotationVector::new(parse_vector(u)?);
    let axis = parse_vector(axis)?;
    let scale = PhysicalScale::new(hbar)?;
    let rep = spin_matrices(j)?;

    let algebra = rep.algebra_residuals();
    let relative = cli.tol * rep.jz.frobenius_norm().max(1.0);
    let two_pi = rotation_unitary(&rep, &RotationVector::new([0.0, 0.0, 2.0 * std::f64::consts::PI]))?;
    let sign = if j.twice().is_multiple_of(2) { 1.0 } else { -1.0 };
    let two_pi_error = two_pi.distance(&crate::matrix::ComplexMatrix::identity(rep.dim()).scale_real(sign));

    let mut rng = stream_rng(cli.seed, 0);
    let mut random_vector = || RotationVector::new([0; 3].map(|_| rng.random_range(-4.0..4.0)));
    let mut worst_defect = 0.0f64;
    for _ in 0..DEFECT_PAIRS {
        let (a, b) = (random_vector(), random_vector());
        worst_defect = worst_defect.max(representation_defect(&rep, &a, &b)?.defect);
    }
    let self_defect = representation_defect(&rep, &u, &u)?;

    let checks = [
        Check {
            name: "commutator_xy",
            value: algebra.commutators[0],
            tolerance: relative,
        },
        Check {
            name: "commutator_yz",
            value: algebra.commutators[1],
            tolerance: relative,
        },
        Check {
            name: "commutator_zx",
            value: algebra.commutators[2],
            tolerance: relative,
        },
        Check {
            name: "casimir",
            value: algebra.casimir,
            tolerance: relative,
        },
        Check {
            name: "two_pi_phase",
            value: two_pi_error,
            tolerance: cli.tol,
        },
        Check {
            name: "representation_defect",
            value: worst_defect.max(self_defect.defect),
            tolerance: cli.tol,
        },
    ];

    let rotation = rotation_unitary(&rep, &u)?;
    let phase = global_phase(&rotation, cli.tol.max(1e-9));
    let observable = physical_observable(&rep, axis, scale)?;
    let spectrum = hermitian_eigendecomposition(&observable)?.eigenvalues;

    let json = json!({
        "j": j.to_string(),
        "dim": rep.dim(),
        "u": u.components(),
        "hbar": hbar,
        "checks": checks.iter().map(|c| json!({
            "name": c.name, "value": c.value, "tolerance": c.tolerance, "pass": c.pass(),
        })).collect::<Vec<_>>(),
        "all_pass": checks.iter().all(Check::pass),
        "two_pi_sign": sign,
        "global_phase": phase.map(|z| json!({"re": z.re, "im": z.im})),
        "composition_phase": self_defect.phase,
        "rotation": rotation,
        "observable": {"axis": axis, "matrix": observable, "spectrum": spectrum},
    });

    let mut csv = String::from("check,value,tolerance,pass\n");
    for c in &checks {
        csv.push_str(&csv_line(&[
            c.name.to_string(),
            fmt_sig(c.value),
            fmt_sig(c.tolerance),
            c.pass().to_string(),
        ]));
    }
    match phase {
        Some(z) => writeln!(csv, "# global_phase={},{}", fmt_sig(z.re), fmt_sig(z.im))?,
        None => csv.push_str("# global_phase=none\n"),
    }
    let spectrum_text: Vec<String> = spectrum.iter().map(|&x| fmt_sig(x)).collect();
    writeln!(csv, "# spectrum={}", spectrum_text.join(" "))?;
    Ok(Report::ok(json, csv))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainSpec {
    initial: InitialSpec,
    chain: Vec<PathBuf>,
    shots: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSpec {
    context: PathBuf,
    index: usize,
}

fn cmd_simulate(cli: &Cli, path: &Path) -> anyhow::Result<Report> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: ChainSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing chain spec {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let initial = read_context(&base.join(&spec.initial.context))?;
    let chain = spec
        .chain
        .iter()
        .map(|p| read_context(&base.join(p)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    // one id, one basis
    let registry: crate::Result<ContextRegistry> =
        std::iter::once(initial.clone()).chain(chain.iter().cloned()).collect();
    registry?;

    let shots = cli.shots.or(spec.shots).unwrap_or(DEFAULT_SHOTS);
    let result = run_sequence(&initial, spec.initial.index, &chain, shots, cli.seed)?;
    Ok(Report::ok(result.to_json(), result.to_csv()?))
}

fn demo_dice(cli: &Cli, u: &str) -> anyhow::Result<Report> {
    let u = RotationVector::new(parse_vector(u)?);
    let shots = cli.shots.unwrap_or(DEFAULT_SHOTS);
    let dice = quantum_dice_demo(&u, shots, cli.seed)?;
    let mut csv = String::from("face,count,frequency,expected\n");
    let mut faces = Vec::new();
    for k in 0..dice.labels.len() {
        csv.push_str(&csv_line(&[
            dice.labels[k].clone(),
            dice.counts[k].to_string(),
            fmt_sig(dice.frequencies[k]),
            fmt_sig(dice.expected[k]),
        ]));
        faces.push(json!({
            "face": dice.labels[k],
            "count": dice.counts[k],
            "frequency": dice.frequencies[k],
            "expected": dice.expected[k],
        }));
    }
    Ok(Report::ok(
        json!({"u": u.components(), "shots": shots, "faces": faces}),
        csv,
    ))
}

fn demo_refinement(cli: &Cli, points: usize) -> anyhow::Result<Report> {
    let shots = cli.shots.unwrap_or(DEFAULT_SHOTS);
    let sweep = refinement_sweep(points, shots, cli.seed)?;
    let mut csv = String::from("theta,quantum,classical,analytic,stderr\n");
    for p in &sweep {
        csv.push_str(&csv_line(&[
            fmt_sig(p.theta),
            fmt_sig(p.quantum),
            fmt_sig(p.classical),
            fmt_sig(p.analytic),
            fmt_sig(p.stderr),
        ]));
    }
    Ok(Report::ok(json!({"shots": shots, "points": sweep}), csv))
}

fn demo_reciprocity(cli: &Cli, n: usize, count: usize) -> anyhow::Result<Report> {
    let shots = cli.shots.unwrap_or(DEFAULT_SHOTS);
    let mut csv = String::from("n,i,j,forward,reverse,stderr,exact,agree\n");
    let mut rows = Vec::new();
    for t in 0..count as u64 {
        let e = random_context(n, derive_seed(cli.seed, 2 * t))?;
        let f = random_context(n, derive_seed(cli.seed, 2 * t + 1))?;
        let mut rng = stream_rng(cli.seed, t);
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        let est = estimate_reciprocity(&e, &f, i, j, shots, derive_seed(cli.seed, t))?;
        let exact = transition_matrix(&e, &f)?.probs[(i, j)];
        let agree = est.agrees(5.0);
        csv.push_str(&csv_line(&[
            n.to_string(),
            i.to_string(),
            j.to_string(),
            fmt_sig(est.forward),
            fmt_sig(est.reverse),
            fmt_sig(est.stderr),
            fmt_sig(exact),
            agree.to_string(),
        ]));
        rows.push(json!({
            "i": i, "j": j, "forward": est.forward, "reverse": est.reverse,
            "stderr": est.stderr, "exact": exact, "agree": agree,
        }));
    }
    Ok(Report::ok(json!({"n": n, "shots": shots, "tuples": rows}), csv))
}

/// One atlas row: both fits of the same Birkhoff target.
pub struct AtlasRow {
    pub target: String,
    pub uni: FitResult,
    pub ortho: FitResult,
}

/// Fits `count` random Birkhoff targets of size `n`. The unitary fit also
/// starts from the orthogonal optimum, since every orthogonal matrix is unitary.
pub fn atlas(n: usize, count: usize, restarts: usize, seed: u64) -> crate::Result<Vec<AtlasRow>> {
    let permutations = (n.saturating_sub(1)).pow(2) + 1;
    (0..count as u64)
        .map(|t| {
            let target = birkhoff_sample(n, permutations, derive_seed(seed, t))?;
            let cfg = FitConfig {
                restarts,
                ..FitConfig::with_seed(derive_seed(seed, t))
            };
            let ortho = fit_with_starts(&target, &cfg, Manifold::Orthogonal, &[])?;
            let uni = fit_with_starts(
                &target,
                &cfg,
                Manifold::Unitary,
                std::slice::from_ref(&ortho.best_matrix),
            )?;
            Ok(AtlasRow {
                target: target.fingerprint(),
                uni,
                ortho,
            })
        })
        .collect()
}

fn demo_atlas(cli: &Cli, n: usize, count: usize) -> anyhow::Result<Report> {
    let rows = atlas(n, count, cli.restarts, cli.seed)?;
    let mut csv = String::from("target,uni_residual,ortho_residual\n");
    let mut entries = Vec::new();
    for r in &rows {
        csv.push_str(&csv_line(&[
            r.target.clone(),
            fmt_sig(r.uni.residual),
            fmt_sig(r.ortho.residual),
        ]));
        entries.push(json!({"target": r.target, "uni_residual": r.uni.residual, "ortho_residual": r.ortho.residual}));
    }
    Ok(Report::ok(
        json!({"n": n, "restarts": cli.restarts, "targets": entries}),
        csv,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_parse() {
        assert_eq!(parse_vector("1, -2,3.5").unwrap(), [1.0, -2.0, 3.5]);
        assert!(parse_vector("1,2").is_err());
        assert!(parse_vector("1,2,x").is_err());
        assert!(parse_vector("1,2,inf").is_err());
    }

    #[test]
    fn unknown_flags_are_rejected() {
        assert_eq!(run_with_args(["modality", "--bogus", "demo", "dice"]), EXIT_INPUT);
        assert_eq!(run_with_args(["modality", "demo", "nope"]), EXIT_INPUT);
    }

    #[test]
    fn bad_spin_is_input_error() {
        assert_eq!(run_with_args(["modality", "spin", "0.3", "--u", "0,0,1"]), EXIT_INPUT);
        assert_eq!(
            run_with_args(["modality", "--tol", "0", "spin", "1", "--u", "0,0,1"]),
            EXIT_INPUT
        );
    }

    #[test]
    fn atlas_orders_residuals() {
        for row in atlas(3, 5, 4, 1).unwrap() {
            assert!(row.uni.residual <= row.ortho.residual + 1e-12);
        }
    }
}
