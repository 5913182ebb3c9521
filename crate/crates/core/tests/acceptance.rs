//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use modality::context::{context_from_observable, random_context, Context};
use modality::fit::{
    birkhoff_sample, is_doubly_stochastic, orthostochastic_fit, unistochastic_fit, DoublyStochasticTarget, FitConfig,
};
use modality::group::{
    cyclic_shift, cyclic_translation_rep, global_phase, physical_observable, representation_defect, rotation_unitary,
    spin_matrices, HalfInteger, PhysicalScale, RotationVector,
};
use modality::linalg::hermitian_eigendecomposition;
use modality::matrix::{pauli, RealMatrix};
use modality::rng::{derive_seed, stream_rng};
use modality::sim::{estimate_reciprocity, refinement_sweep, run_sequence};
use modality::transition::{transition_matrix, transition_matrix_by_trace};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs, || {
        format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64())
    })
}

fn pauli_context(m: &modality::ComplexMatrix, id: &str) -> Context {
    context_from_observable(m, id).unwrap().0
}

fn doubly_stochastic_theorem() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for n in [2usize, 3, 4, 8] {
        for k in 0..1000u64 {
            let a = random_context(n, derive_seed(1, 2 * k)).map_err(|e| e.to_string())?;
            let b = random_context(n, derive_seed(1, 2 * k + 1)).map_err(|e| e.to_string())?;
            let ab = transition_matrix(&a, &b).map_err(|e| e.to_string())?;
            let ba = transition_matrix(&b, &a).map_err(|e| e.to_string())?;
            ensure(is_doubly_stochastic(&ab.probs, 1e-10).unwrap(), || {
                format!("N={n} pair {k} not doubly stochastic")
            })?;
            ensure(ab.probs.transpose() == ba.probs, || {
                format!("N={n} pair {k}: reverse is not the exact transpose")
            })?;
            worst = worst.max(ab.max_row_deviation()).max(ab.max_column_deviation());
        }
    }
    within_budget(start.elapsed(), 10.0)?;
    Ok(format!(
        "4000 pairs, worst sum deviation {worst:.1e}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn identity_case() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let n = 2 + (k % 7) as usize;
        let e = random_context(n, derive_seed(2, k)).map_err(|e| e.to_string())?;
        let t = transition_matrix(&e, &e).map_err(|e| e.to_string())?;
        worst = worst.max(t.probs.max_abs_diff(&RealMatrix::identity(n)));
    }
    ensure(worst <= 4.0 * f64::EPSILON, || {
        format!("max deviation from identity {worst:e}")
    })?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn trace_formula() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let a = random_context(4, derive_seed(3, 2 * k)).map_err(|e| e.to_string())?;
        let b = random_context(4, derive_seed(3, 2 * k + 1)).map_err(|e| e.to_string())?;
        let direct = transition_matrix(&a, &b).map_err(|e| e.to_string())?;
        let traced = transition_matrix_by_trace(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max(direct.probs.max_abs_diff(&traced));
    }
    ensure(worst <= 1e-12, || format!("max cell difference {worst:e}"))?;
    Ok(format!("max cell difference {worst:.1e}"))
}

fn complex_vs_real() -> Outcome {
    let start = Instant::now();
    let mut worst_n2 = 0.0f64;
    for k in 0..100u64 {
        let target = birkhoff_sample(2, 2, derive_seed(4, k)).map_err(|e| e.to_string())?;
        let fit = orthostochastic_fit(&target, &FitConfig::with_seed(k)).map_err(|e| e.to_string())?;
        worst_n2 = worst_n2.max(fit.residual);
    }
    ensure(worst_n2 <= 1e-10, || {
        format!("N=2 worst orthostochastic residual {worst_n2:e}")
    })?;

    let flat = DoublyStochasticTarget::flat(3).map_err(|e| e.to_string())?;
    let cfg = FitConfig::with_seed(42);
    let uni = unistochastic_fit(&flat, &cfg).map_err(|e| e.to_string())?;
    let ortho = orthostochastic_fit(&flat, &cfg).map_err(|e| e.to_string())?;
    ensure(uni.restarts_run == 32 && ortho.restarts_run == 32, || {
        "expected 32 restarts".into()
    })?;
    ensure(uni.residual <= 1e-10, || {
        format!("flat uni residual {:e}", uni.residual)
    })?;
    ensure(ortho.residual >= 1e-3, || {
        format!("flat ortho residual {:e}", ortho.residual)
    })?;
    within_budget(start.elapsed(), 60.0)?;
    Ok(format!(
        "N=2 worst {worst_n2:.1e}; flat N=3 uni {:.1e}, ortho {:.4}; {:.2}s",
        uni.residual,
        ortho.residual,
        start.elapsed().as_secs_f64()
    ))
}

fn unistochastic_boundary() -> Outcome {
    let target = DoublyStochasticTarget::from_rows(&[vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]])
        .map_err(|e| e.to_string())?;
    let cfg = FitConfig {
        restarts: 64,
        ..FitConfig::with_seed(42)
    };
    let fit = unistochastic_fit(&target, &cfg).map_err(|e| e.to_string())?;
    ensure(fit.restarts_run == 64, || "expected 64 restarts".into())?;
    ensure(fit.residual >= 1e-4, || format!("residual {:e}", fit.residual))?;
    Ok(format!("best of 64 restarts {:.6}", fit.residual))
}

fn representation_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = stream_rng(6, 0);
    for twice in 1..=4u32 {
        let j = HalfInteger::from_twice(twice);
        let rep = spin_matrices(j).map_err(|e| e.to_string())?;
        let r = rep.algebra_residuals();
        ensure(r.commutators.iter().all(|&c| c <= 1e-10), || {
            format!("j={j} commutators {:?}", r.commutators)
        })?;
        ensure(r.casimir <= 1e-10, || format!("j={j} casimir {:e}", r.casimir))?;

        let expected = if twice % 2 == 0 { 1.0 } else { -1.0 };
        let mut axes = vec![[0.0, 0.0, 1.0]];
        for _ in 0..5 {
            let v: [f64; 3] = [0; 3].map(|_| rng.random_range(-1.0..1.0));
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            axes.push(v.map(|x| x / norm));
        }
        for axis in axes {
            let u =
                rotation_unitary(&rep, &RotationVector::new(axis.map(|x| 2.0 * PI * x))).map_err(|e| e.to_string())?;
            let phase = global_phase(&u, 1e-9).ok_or_else(|| format!("j={j}: 2pi rotation is not a scalar"))?;
            ensure((phase.re - expected).abs() <= 1e-9 && phase.im.abs() <= 1e-9, || {
                format!("j={j}: 2pi phase {phase}")
            })?;
        }

        for _ in 0..100 {
            let a = RotationVector::new([0; 3].map(|_| rng.random_range(-4.0..4.0)));
            let b = RotationVector::new([0; 3].map(|_| rng.random_range(-4.0..4.0)));
            let d = representation_defect(&rep, &a, &b).map_err(|e| e.to_string())?;
            ensure(d.defect <= 1e-8, || format!("j={j}: defect {:e}", d.defect))?;
        }
    }
    within_budget(start.elapsed(), 10.0)?;
    Ok(format!("j = 1/2..2, {:.3}s", start.elapsed().as_secs_f64()))
}

fn hbar_scaling() -> Outcome {
    let mut worst = 0.0f64;
    for twice in 1..=4u32 {
        let rep = spin_matrices(HalfInteger::from_twice(twice)).map_err(|e| e.to_string())?;
        let jv = f64::from(twice) / 2.0;
        let s = 1.0 / 3f64.sqrt();
        for axis in [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [s, -s, s]] {
            for hbar in [0.5, 1.0, 2.0] {
                let obs =
                    physical_observable(&rep, axis, PhysicalScale::new(hbar).unwrap()).map_err(|e| e.to_string())?;
                let spectrum = hermitian_eigendecomposition(&obs)
                    .map_err(|e| e.to_string())?
                    .eigenvalues;
                for (k, value) in spectrum.iter().enumerate() {
                    worst = worst.max((value - hbar * (k as f64 - jv)).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max spectrum error {worst:e}"))?;
    Ok(format!("max spectrum error {worst:.1e}"))
}

fn translation_rep() -> Outcome {
    let (mut flat_err, mut shift_err) = (0.0f64, 0.0f64);
    for n in [2usize, 3, 5, 8] {
        let rep = cyclic_translation_rep(n).map_err(|e| e.to_string())?;
        let t = transition_matrix(&rep.position_context, &rep.momentum_context).map_err(|e| e.to_string())?;
        flat_err = flat_err.max(t.probs.max_abs_diff(&RealMatrix::filled(n, 1.0 / n as f64)));
        let step = rep.translation(1.0).map_err(|e| e.to_string())?;
        shift_err = shift_err.max(step.distance(&cyclic_shift(n, 1)));
    }
    ensure(flat_err <= 1e-10, || format!("flatness error {flat_err:e}"))?;
    ensure(shift_err <= 1e-10, || format!("shift error {shift_err:e}"))?;
    Ok(format!("flatness {flat_err:.1e}, shift {shift_err:.1e}"))
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let shots = 100_000u64;
    let z = pauli_context(&pauli::z(), "Z");
    let x = pauli_context(&pauli::x(), "X");
    let r = run_sequence(&z, 0, &[x, z.clone()], shots, 9).map_err(|e| e.to_string())?;
    let back = r.marginal(1, 0);
    let sigma = (0.25 / shots as f64).sqrt();
    ensure((back - 0.5).abs() <= 4.0 * sigma, || format!("[Z,X,Z] return {back}"))?;

    let sweep = refinement_sweep(16, shots, 9).map_err(|e| e.to_string())?;
    let mut worst_sigmas = 0.0f64;
    for p in &sweep {
        ensure(p.classical == 1.0, || {
            format!("classical return {} at theta {}", p.classical, p.theta)
        })?;
        let gap = (p.quantum - p.analytic).abs();
        ensure(gap <= 4.0 * p.stderr, || {
            format!(
                "theta {}: quantum {} vs {} (4 sigma = {})",
                p.theta,
                p.quantum,
                p.analytic,
                4.0 * p.stderr
            )
        })?;
        if p.stderr > 0.0 {
            worst_sigmas = worst_sigmas.max(gap / p.stderr);
        }
    }
    within_budget(start.elapsed(), 30.0)?;
    Ok(format!(
        "[Z,X,Z] return {back:.5}; sweep worst {worst_sigmas:.2} sigma; {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn reciprocity() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2usize, 4] {
        for t in 0..50u64 {
            let seed = derive_seed(10 + n as u64, t);
            let e = random_context(n, derive_seed(seed, 0)).map_err(|e| e.to_string())?;
            let f = random_context(n, derive_seed(seed, 1)).map_err(|e| e.to_string())?;
            let mut rng = stream_rng(seed, 2);
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            let est = estimate_reciprocity(&e, &f, i, j, 20_000, seed).map_err(|e| e.to_string())?;
            ensure(est.agrees(5.0), || format!("N={n} tuple {t}: {est:?}"))?;
            if est.stderr > 0.0 {
                worst = worst.max((est.forward - est.reverse).abs() / est.stderr);
            }
        }
    }
    Ok(format!("100 tuples, worst {worst:.2} stderr"))
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn cli_determinism() -> Outcome {
    let commands: Vec<Vec<String>> = [
        vec!["transition".into(), data("z.json"), data("y.json")],
        vec![
            "--format".into(),
            "csv".into(),
            "transition".into(),
            data("x.json"),
            data("y.json"),
        ],
        vec!["fit".into(), data("flat3.csv"), "--mode".into(), "uni".into()],
        vec![
            "--format".into(),
            "csv".into(),
            "fit".into(),
            data("zero_diag3.csv"),
            "--mode".into(),
            "ortho".into(),
        ],
        vec![
            "spin".into(),
            "3/2".into(),
            "--u".into(),
            "0.4,-1.1,2.0".into(),
            "--hbar".into(),
            "0.5".into(),
        ],
        vec!["--shots".into(), "20000".into(), "simulate".into(), data("zxz.json")],
        vec![
            "--format".into(),
            "csv".into(),
            "--shots".into(),
            "20000".into(),
            "demo".into(),
            "dice".into(),
        ],
        vec!["--shots".into(), "5000".into(), "demo".into(), "refinement".into()],
        vec![
            "--shots".into(),
            "2000".into(),
            "demo".into(),
            "reciprocity".into(),
            "--count".into(),
            "5".into(),
        ],
        vec![
            "--restarts".into(),
            "8".into(),
            "demo".into(),
            "atlas".into(),
            "--count".into(),
            "5".into(),
        ],
    ]
    .into_iter()
    .collect();

    let run = |args: &[String], threads: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_modality"));
        cmd.args(args);
        match threads {
            Some(t) => cmd.env("RAYON_NUM_THREADS", t),
            None => cmd.env_remove("RAYON_NUM_THREADS"),
        };
        let out = cmd.output().map_err(|e| e.to_string())?;
        Ok::<_, String>((out.status.code(), out.stdout))
    };

    for args in &commands {
        let reference = run(args, None)?;
        ensure(matches!(reference.0, Some(0) | Some(3)), || {
            format!("{args:?} exited {:?}", reference.0)
        })?;
        ensure(!reference.1.is_empty(), || format!("{args:?} printed nothing"))?;
        for threads in [None, Some("1"), Some("4")] {
            let again = run(args, threads)?;
            ensure(again == reference, || {
                format!("{args:?} differs under RAYON_NUM_THREADS={threads:?}")
            })?;
        }
    }
    Ok(format!("{} commands x 4 runs byte-identical", commands.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 doubly-stochastic theorem", doubly_stochastic_theorem),
        ("2 identity case", identity_case),
        ("3 trace-formula equivalence", trace_formula),
        ("4 complex-vs-real separation", complex_vs_real),
        ("5 unistochastic boundary probe", unistochastic_boundary),
        ("6 representation suite", representation_suite),
        ("7 hbar scaling", hbar_scaling),
        ("8 translation representation", translation_rep),
        ("9 Monte Carlo consistency", monte_carlo),
        ("10 reciprocity", reciprocity),
        ("11 CLI determinism", cli_determinism),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
