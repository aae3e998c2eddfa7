//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use med::cli::{
    demo_generative, demo_housing, demo_sinc, demo_sparse, housing_defaults, sinc_defaults, sparse_defaults,
};
use med::data::{Dataset, Task};
use med::expfam::{expfam_log_partition, gaussian_family, ClassSign};
use med::objective::{
    clf_margin_penalty, j_fs_classification, j_fs_regression, j_svm_classification, j_svm_regression,
    reg_margin_penalty, BiasMode, DualProblem, DualVars, Hyperparams, ObjectiveEval, Variant,
};
use med::optimizer::{axis_parallel_maximize, iterated_bounded_qp, OptimizerConfig, QuadBound};
use med::error::Result as MedResult;
use rand::Rng;

use common::*;

type Check = std::result::Result<String, String>;
type Objective = fn(&DualVars, &Dataset, &Hyperparams) -> MedResult<ObjectiveEval>;

const OBJECTIVES: [(&str, Task, Objective); 4] = [
    ("svm-classification", Task::Classification, j_svm_classification),
    ("fs-classification", Task::Classification, j_fs_classification),
    ("svm-regression", Task::Regression, j_svm_regression),
    ("fs-regression", Task::Regression, j_fs_regression),
];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn penalty_duality() -> Check {
    let mut worst: f64 = 0.0;
    let ratios: Vec<f64> = (0..10).map(|k| k as f64 / 10.0).collect();
    let epsilons = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0, 1.5, 2.0];
    let cs = [0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0, 20.0, 50.0, 100.0];
    for &r in &ratios {
        for (&eps, &c_clf) in epsilons.iter().zip(&cs) {
            let c = 5.0;
            let lambda = r * c;
            let closed = reg_margin_penalty(lambda, c, eps).map_err(|e| e.to_string())?;
            let numeric = reg_log_partition_by_quadrature(lambda, c, eps);
            ensure((closed - numeric).abs() <= 1e-8, || {
                format!("regression λ={lambda} ε={eps}: {closed} vs quadrature {numeric}")
            })?;
            worst = worst.max((closed - numeric).abs());

            let lambda = r * c_clf;
            let closed = clf_margin_penalty(lambda, c_clf).map_err(|e| e.to_string())?;
            let numeric = clf_penalty_by_quadrature(lambda, c_clf);
            ensure((closed - numeric).abs() <= 1e-8, || {
                format!("classification λ={lambda} c={c_clf}: {closed} vs quadrature {numeric}")
            })?;
            worst = worst.max((closed - numeric).abs());
        }
    }
    Ok(format!("max |closed − quadrature| = {worst:.2e} over 2×100 grid points"))
}

fn gradient_checks() -> Check {
    let mut rng = rng(2);
    let mut worst: f64 = 0.0;
    for (name, task, j) in OBJECTIVES {
        let variant = if name.starts_with("fs") { Variant::Selection } else { Variant::Plain };
        for _ in 0..50 {
            let t = rng.random_range(2..=20);
            let n = rng.random_range(1..=10);
            let d = random_dataset(&mut rng, task, t, n);
            let h = random_hyper(&mut rng, variant);
            let duals = random_duals(&mut rng, task, t, h.c, 0.9);
            let analytic = j(&duals, &d, &h).map_err(|e| e.to_string())?.gradient;
            let f = |v: &[f64]| j(&DualVars::from_flat(task, v), &d, &h).unwrap().value;
            let numeric = central_gradient(&f, &duals.flatten(), 1e-6);
            let err = max_rel_error(&numeric, &analytic);
            ensure(err <= 1e-5, || format!("{name}: relative error {err:.2e} (T={t}, n={n})"))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("max relative error {worst:.2e} over 4×50 points"))
}

fn concavity() -> Check {
    let mut rng = rng(3);
    let mut worst: f64 = f64::NEG_INFINITY;
    for (name, task, j) in OBJECTIVES {
        let variant = if name.starts_with("fs") { Variant::Selection } else { Variant::Plain };
        for _ in 0..100 {
            let t = rng.random_range(2..=12);
            let n = rng.random_range(1..=6);
            let d = random_dataset(&mut rng, task, t, n);
            let h = random_hyper(&mut rng, variant);
            let a = random_duals(&mut rng, task, t, h.c, 0.99).flatten();
            let b = random_duals(&mut rng, task, t, h.c, 0.99).flatten();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let val = |v: &[f64]| j(&DualVars::from_flat(task, v), &d, &h).unwrap().value;
            let violation = 0.5 * (val(&a) + val(&b)) - val(&mid);
            ensure(violation <= 1e-9, || format!("{name}: midpoint violation {violation:.2e}"))?;
            worst = worst.max(violation);
        }
    }
    Ok(format!("largest midpoint violation {worst:.2e} over 4×100 pairs"))
}

fn svm_limit() -> Check {
    let d = Dataset::from_rows(vec![vec![1.0], vec![-1.0]], vec![1.0, -1.0], Task::Classification).unwrap();
    let h = Hyperparams {
        c: 1e6,
        bias_mode: BiasMode::Hard,
        variant: Variant::Plain,
        ..Hyperparams::default()
    };
    let problem = DualProblem::new(&d, &h).map_err(|e| e.to_string())?;
    let init = problem.unflatten(&problem.initial_point());
    let cfg = OptimizerConfig::default();
    let mut report = Vec::new();
    for (name, result) in [
        ("axis-parallel", axis_parallel_maximize(&problem, &init, &cfg)),
        ("bounded-qp", iterated_bounded_qp(&problem, &init, &cfg)),
    ] {
        let r = result.map_err(|e| e.to_string())?;
        let v = r.duals.flatten();
        // KKT of max 2λ − 2λ² (with λ1 = λ2 = λ): λ = 1/2, W = Σ λ_t y_t x_t = 1
        for &l in &v {
            ensure((l - 0.5).abs() <= 1e-4, || format!("{name}: λ = {v:?}"))?;
        }
        let stats = problem.feature_stats(&v);
        let coef = stats.w[0] * stats.p[0];
        ensure((coef - 1.0).abs() <= 1e-3, || format!("{name}: effective coefficient {coef}"))?;
        report.push(format!("{name} λ=({:.6}, {:.6}) W̃={coef:.6}", v[0], v[1]));
    }
    Ok(report.join("; "))
}

fn reduction_identity() -> Check {
    let mut rng = rng(5);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let task = if k % 2 == 0 { Task::Classification } else { Task::Regression };
        let t = rng.random_range(2..=20);
        let n = rng.random_range(1..=10);
        let d = random_dataset(&mut rng, task, t, n);
        let h = Hyperparams {
            p0: 1.0 - 1e-12,
            ..random_hyper(&mut rng, Variant::Selection)
        };
        let duals = random_duals(&mut rng, task, t, h.c, 0.9);
        let (fs, svm) = match task {
            Task::Classification => (j_fs_classification(&duals, &d, &h), j_svm_classification(&duals, &d, &h)),
            Task::Regression => (j_fs_regression(&duals, &d, &h), j_svm_regression(&duals, &d, &h)),
        };
        let gap = (fs.map_err(|e| e.to_string())?.value - svm.map_err(|e| e.to_string())?.value).abs();
        ensure(gap <= 1e-6, || format!("{task} instance {k}: |J_fs − J_svm| = {gap:.2e}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("max |J_fs − J_svm| = {worst:.2e} over 20 instances"))
}

fn bound_and_mm() -> Check {
    let mut rng = rng(6);
    let cfg = OptimizerConfig::default();
    let (mut tangency, mut slack, mut agreement): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    for k in 0..10 {
        let task = if k % 2 == 0 { Task::Classification } else { Task::Regression };
        let t = rng.random_range(8..=20);
        let n = rng.random_range(2..=6);
        let d = random_dataset(&mut rng, task, t, n);
        let h = Hyperparams {
            p0: rng.random_range(0.01..0.5),
            ..random_hyper(&mut rng, Variant::Selection)
        };
        let problem = DualProblem::new(&d, &h).map_err(|e| e.to_string())?;
        let anchor = random_duals(&mut rng, task, t, h.c, 0.9).flatten();
        for i in 0..n {
            let b = QuadBound::at(&problem, &anchor, i).map_err(|e| e.to_string())?;
            let touch = (b.value(&anchor) - b.exact(&anchor)).abs();
            ensure(touch <= 1e-10, || format!("instance {k} feature {i}: tangency gap {touch:.2e}"))?;
            tangency = tangency.max(touch);
            for _ in 0..200 {
                let x = random_duals(&mut rng, task, t, h.c, 1.0).flatten();
                let gap = b.exact(&x) - b.value(&x);
                ensure(gap >= -1e-9, || format!("instance {k} feature {i}: bound exceeds term by {:.2e}", -gap))?;
                slack = slack.min(gap);
            }
        }
        let init = problem.unflatten(&problem.initial_point());
        let mm = iterated_bounded_qp(&problem, &init, &cfg).map_err(|e| e.to_string())?;
        for (step, pair) in mm.objective_trace.windows(2).enumerate() {
            ensure(pair[1] >= pair[0] - 1e-10, || {
                format!("instance {k}: trace drops at outer step {step}: {} -> {}", pair[0], pair[1])
            })?;
        }
        let ap = axis_parallel_maximize(&problem, &init, &cfg).map_err(|e| e.to_string())?;
        let (jm, ja) = (mm.objective(), ap.objective());
        let scale = ja.abs().max(1.0);
        let rel = (jm - ja).abs() / scale;
        ensure(rel <= 10.0 * cfg.tol, || format!("instance {k}: J_qp = {jm}, J_axis = {ja} (rel gap {rel:.2e})"))?;
        agreement = agreement.max(rel);
    }
    Ok(format!(
        "tangency ≤ {tangency:.2e}, min slack {slack:.2e}, max objective gap {agreement:.2e}·max(1,|J|)"
    ))
}

fn expfam_checks() -> Check {
    let mut rng = rng(7);
    let fam = gaussian_family(1).map_err(|e| e.to_string())?;
    let log2pi = (2.0 * std::f64::consts::PI).ln();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let t = rng.random_range(2..=8);
        let d = random_classification(&mut rng, t, 1);
        let y = d.targets().to_vec();
        let x: Vec<f64> = (0..t).map(|k| d.row(k)[0]).collect();
        let lambda = random_balanced(&mut rng, &y, 2.0);
        let duals = DualVars::classification(lambda.clone());
        for sign in [ClassSign::Plus, ClassSign::Minus] {
            let s = if sign == ClassSign::Plus { 1.0 } else { -1.0 };
            let closed = expfam_log_partition(&fam, &duals, &d, sign).map_err(|e| e.to_string())?;
            // prior N(θ; 0, 1) times Π_t N(x_t; θ, 1)^{s λ_t y_t}
            let shift: f64 = (0..t).map(|k| s * lambda[k] * y[k] * x[k]).sum();
            let f = |theta: f64| {
                let mut log = -0.5 * theta * theta - 0.5 * log2pi;
                for k in 0..t {
                    log += s * lambda[k] * y[k] * (-0.5 * (x[k] - theta).powi(2) - 0.5 * log2pi);
                }
                log.exp()
            };
            let numeric = integrate(&f, shift - 40.0, shift + 40.0, 1e-14).ln();
            let err = (closed - numeric).abs();
            ensure(err <= 1e-6, || format!("log-partition {closed} vs quadrature {numeric}"))?;
            worst = worst.max(err);
        }
    }
    let report = demo_generative(&Hyperparams::default(), &OptimizerConfig::default()).map_err(|e| e.to_string())?;
    ensure(report.test_accuracy >= 0.99 && report.train_accuracy >= 0.99, || {
        format!("accuracy train {} test {}", report.train_accuracy, report.test_accuracy)
    })?;
    Ok(format!(
        "max |closed − quadrature| = {worst:.2e}; clouds accuracy train {} test {}",
        report.train_accuracy, report.test_accuracy
    ))
}

fn sinc() -> Check {
    let (h, opt) = sinc_defaults();
    let r = demo_sinc(&h, &opt).map_err(|e| e.to_string())?;
    let msg = format!(
        "noise-free training RMSE {:.4} (≤ 0.05); noisy grid RMSE {:.4} (≤ 0.25)",
        r.clean.train_rmse, r.noisy.grid_rmse
    );
    ensure(r.clean.train_rmse <= 0.05 && r.noisy.grid_rmse <= 0.25, || msg.clone())?;
    Ok(msg)
}

fn sparse() -> Check {
    let (h, opt) = sparse_defaults();
    let r = demo_sparse(&h, &opt).map_err(|e| e.to_string())?;
    let msg = format!(
        "AUC p0=1e-5 {:.4} vs p0=0.99999 {:.4}; CDF dominance {}",
        r.selected.roc.auc,
        r.unselected.roc.auc,
        r.cdf_dominates()
    );
    ensure(r.selected.roc.auc > r.unselected.roc.auc && r.cdf_dominates(), || msg.clone())?;
    Ok(msg)
}

fn housing() -> Check {
    let (h, opt) = housing_defaults();
    let r = demo_housing(&h, &opt).map_err(|e| e.to_string())?;
    let msg = format!(
        "ε-loss p0=1e-5 {:.4}, p0=0.99999 {:.4}, least squares {:.4}",
        r.selected_loss, r.unselected_loss, r.least_squares_loss
    );
    ensure(
        r.selected_loss <= r.unselected_loss
            && r.selected_loss < r.least_squares_loss
            && r.unselected_loss < r.least_squares_loss,
        || msg.clone(),
    )?;
    Ok(msg)
}

fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_med");
    let mut checked = Vec::new();
    for demo in ["demo-sinc", "demo-sparse", "demo-generative", "demo-housing"] {
        let mut runs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let out = Command::new(bin)
                .args([demo, "--seed", "0", "--out-dir"])
                .arg(dir.path())
                .env("MED_LOG", "quiet")
                .output()
                .map_err(|e| e.to_string())?;
            ensure(out.status.success(), || {
                format!("{demo} failed: {}", String::from_utf8_lossy(&out.stderr))
            })?;
            runs.push((out.stdout, dir_snapshot(dir.path())));
        }
        ensure(runs[0] == runs[1], || format!("{demo}: outputs differ between runs"))?;
        checked.push(format!("{demo} ({} files)", runs[0].1.len()));
    }
    Ok(format!("identical stdout and files: {}", checked.join(", ")))
}

fn main() {
    let criteria: [(u32, &str, f64, fn() -> Check); 11] = [
        (1, "penalty duality", 1.0, penalty_duality),
        (2, "gradient correctness", 5.0, gradient_checks),
        (3, "concavity", f64::INFINITY, concavity),
        (4, "SVM limit", 1.0, svm_limit),
        (5, "reduction identity", f64::INFINITY, reduction_identity),
        (6, "quadratic bound and bounded QP", 30.0, bound_and_mm),
        (7, "exponential-family partition and generative fit", 10.0, expfam_checks),
        (8, "sinc regression", 60.0, sinc),
        (9, "feature-selection benefit", 120.0, sparse),
        (10, "housing-like directionality", 60.0, housing),
        (11, "demo determinism", f64::INFINITY, determinism),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok(d) if secs <= budget => (true, d),
            Ok(d) => (false, format!("{d}; exceeded {budget} s budget")),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} {name}: {detail} [{secs:.2} s]",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
