mod common;

use common::*;
use med::data::{Dataset, Task};
use med::model::fit;
use med::objective::{BiasMode, DualProblem, Hyperparams, Variant};
use med::optimizer::{
    axis_parallel_maximize, iterated_bounded_qp, maximize, qp_subsolve, Method, OptimizerConfig, QuadSurrogate,
};
use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::Rng;

/// Exhaustive active-set search: every coordinate is at 0, at `upper` or
/// free; free coordinates solve the stationarity system. The best feasible
/// candidate is the box-constrained maximum of a strictly concave quadratic.
fn brute_force_box_qp(hess: &DMatrix<f64>, lin: &DVector<f64>, upper: f64) -> Vec<f64> {
    let dim = lin.len();
    let value = |x: &DVector<f64>| lin.dot(x) + 0.5 * x.dot(&(hess * x));
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(dim as u32) {
        let mut state = vec![0u8; dim];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..dim).filter(|&k| state[k] == 2).collect();
        let mut x = DVector::from_fn(dim, |k, _| if state[k] == 1 { upper } else { 0.0 });
        if !free.is_empty() {
            let hff = DMatrix::from_fn(free.len(), free.len(), |r, c| hess[(free[r], free[c])]);
            let rhs = DVector::from_fn(free.len(), |r, _| {
                let k = free[r];
                -(lin[k] + (0..dim).filter(|j| state[*j] != 2).map(|j| hess[(k, j)] * x[j]).sum::<f64>())
            });
            let Some(sol) = hff.lu().solve(&rhs) else { continue };
            if sol.iter().any(|&v| v < -1e-12 || v > upper + 1e-12) {
                continue;
            }
            for (r, &k) in free.iter().enumerate() {
                x[k] = sol[r];
            }
        }
        let f = value(&x);
        if best.as_ref().is_none_or(|(b, _)| f > *b) {
            best = Some((f, x));
        }
    }
    best.unwrap().1.iter().copied().collect()
}

#[test]
fn qp_subsolve_matches_active_set_enumeration() {
    let mut rng = rng(11);
    let cfg = OptimizerConfig {
        qp_inner_tol: 1e-12,
        qp_max_inner: 100_000,
        ..OptimizerConfig::default()
    };
    for _ in 0..3 {
        let dim = 10;
        let cols = 12;
        let rows = Array2::from_shape_fn((dim, cols), |_| rng.random_range(-1.0..1.0));
        let weights: Vec<f64> = (0..cols).map(|_| rng.random_range(0.2..2.0)).collect();
        let linear: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..3.0)).collect();
        let dir = vec![1.0; dim];
        let upper = 1.5;
        let s = QuadSurrogate {
            rows: rows.view(),
            weights: weights.clone(),
            linear: linear.clone(),
            bias_direction: &dir,
            bias_weight: 0.0,
            equality: false,
            upper,
            penalty: None,
        };
        let sol = qp_subsolve(&s, &vec![0.0; dim], &cfg).unwrap();
        assert!(sol.converged);
        let hess = DMatrix::from_fn(dim, dim, |r, c| {
            -(0..cols).map(|i| rows[[r, i]] * weights[i] * rows[[c, i]]).sum::<f64>()
        });
        let oracle = brute_force_box_qp(&hess, &DVector::from_vec(linear), upper);
        for (a, b) in sol.point.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{:?} vs {:?}", sol.point, oracle);
        }
    }
}

#[test]
fn warm_started_outer_iteration_is_cheaper() {
    let mut rng = rng(12);
    let d = random_classification(&mut rng, 30, 6);
    let h = Hyperparams {
        p0: 0.05,
        ..random_hyper(&mut rng, Variant::Selection)
    };
    let problem = DualProblem::new(&d, &h).unwrap();
    let init = problem.unflatten(&problem.initial_point());
    let r = iterated_bounded_qp(&problem, &init, &OptimizerConfig::default()).unwrap();
    assert!(r.inner_sweeps.len() >= 2, "{:?}", r.inner_sweeps);
    assert!(r.inner_sweeps[1] < r.inner_sweeps[0], "{:?}", r.inner_sweeps);
}

fn is_monotone(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] >= w[0] - 1e-10)
}

#[test]
fn ascent_is_monotone_feasible_and_deterministic() {
    let mut rng = rng(13);
    for task in [Task::Classification, Task::Regression] {
        for mode in [BiasMode::Soft, BiasMode::Hard] {
            let d = random_dataset(&mut rng, task, 25, 4);
            let h = Hyperparams {
                bias_mode: mode,
                ..random_hyper(&mut rng, Variant::Selection)
            };
            let problem = DualProblem::new(&d, &h).unwrap();
            let init = problem.unflatten(&problem.initial_point());
            for method in [Method::AxisParallel, Method::BoundedQp] {
                let cfg = OptimizerConfig {
                    method,
                    seed: 5,
                    ..OptimizerConfig::default()
                };
                let a = maximize(&problem, &init, &cfg).unwrap();
                let b = maximize(&problem, &init, &cfg).unwrap();
                assert_eq!(a, b);
                assert!(is_monotone(&a.objective_trace), "{task} {mode:?} {method:?}");
                let v = a.duals.flatten();
                assert!(v.iter().all(|&x| (0.0..h.c).contains(&x)));
                if mode == BiasMode::Hard {
                    assert!(problem.bias_sum(&v).abs() <= 1e-10);
                }
                problem.check_feasible(&v).unwrap();
            }
        }
    }
}

#[test]
fn optimizers_agree_on_objective_and_predictions() {
    let mut rng = rng(14);
    for task in [Task::Classification, Task::Regression] {
        for mode in [BiasMode::Soft, BiasMode::Hard] {
            let d = random_dataset(&mut rng, task, 30, 3);
            let test = random_dataset(&mut rng, task, 20, 3);
            let h = Hyperparams {
                bias_mode: mode,
                p0: 0.3,
                ..random_hyper(&mut rng, Variant::Selection)
            };
            let fit_with = |method| {
                fit(
                    &d,
                    &h,
                    &OptimizerConfig {
                        method,
                        tol: 1e-10,
                        ..OptimizerConfig::default()
                    },
                )
                .unwrap()
            };
            let a = fit_with(Method::AxisParallel);
            let b = fit_with(Method::BoundedQp);
            assert!(
                (a.objective - b.objective).abs() <= 1e-8 * a.objective.abs().max(1.0),
                "{task} {mode:?}: {} vs {}",
                a.objective,
                b.objective
            );
            for t in 0..test.len() {
                let x = test.row(t).to_vec();
                let (pa, pb) = (a.predict(&x).unwrap().score, b.predict(&x).unwrap().score);
                assert!((pa - pb).abs() < 1e-3, "{task} {mode:?}: {pa} vs {pb}");
            }
        }
    }
}

#[test]
fn near_one_prior_matches_plain_solution() {
    let mut rng = rng(15);
    let d = random_classification(&mut rng, 20, 3);
    let base = Hyperparams {
        c: 2.0,
        ..Hyperparams::default()
    };
    let cfg = OptimizerConfig {
        tol: 1e-12,
        ..OptimizerConfig::default()
    };
    let plain = fit(&d, &Hyperparams { variant: Variant::Plain, ..base }, &cfg).unwrap();
    let fs = fit(
        &d,
        &Hyperparams {
            p0: 1.0 - 1e-12,
            ..base
        },
        &OptimizerConfig {
            method: Method::BoundedQp,
            ..cfg
        },
    )
    .unwrap();
    for (a, b) in plain.effective.iter().zip(&fs.effective) {
        assert!((a - b).abs() < 1e-3, "{:?} vs {:?}", plain.effective, fs.effective);
    }
}

#[test]
fn axis_parallel_reaches_stationarity() {
    let mut rng = rng(16);
    let d = random_regression(&mut rng, 15, 3);
    let h = Hyperparams {
        variant: Variant::Plain,
        ..random_hyper(&mut rng, Variant::Plain)
    };
    let problem = DualProblem::new(&d, &h).unwrap();
    let init = problem.unflatten(&problem.initial_point());
    let r = axis_parallel_maximize(
        &problem,
        &init,
        &OptimizerConfig {
            tol: 1e-13,
            ..OptimizerConfig::default()
        },
    )
    .unwrap();
    assert!(r.converged);
    let v = r.duals.flatten();
    let g = problem.evaluate(&v).unwrap().gradient;
    // projected gradient: only a bound may hold a non-zero slope
    for (x, gk) in v.iter().zip(&g) {
        let projected = if *x <= 0.0 { gk.max(0.0) } else { *gk };
        assert!(projected.abs() < 1e-4, "λ = {x}, ∂J = {gk}");
    }
}

#[test]
fn infeasible_start_is_rejected() {
    let d = Dataset::from_rows(vec![vec![1.0], vec![-1.0]], vec![1.0, -1.0], Task::Classification).unwrap();
    let h = Hyperparams {
        bias_mode: BiasMode::Hard,
        ..Hyperparams::default()
    };
    let problem = DualProblem::new(&d, &h).unwrap();
    let bad = problem.unflatten(&[0.3, 0.1]);
    assert!(axis_parallel_maximize(&problem, &bad, &OptimizerConfig::default()).is_err());
    assert!(iterated_bounded_qp(&problem, &bad, &OptimizerConfig::default()).is_err());
}
