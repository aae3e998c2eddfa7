//! Independent oracles shared by the integration tests and the acceptance
//! suite: quadrature, finite differences and random problem instances.

#![allow(dead_code)]

use med::data::{Dataset, Task};
use med::objective::{BiasMode, DualVars, Hyperparams, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

/// `∫_0^∞ e^{-rate·u} g(u) du` for slowly varying `g`, to relative
/// tolerance `rel_tol`. The range is cut where the exponential drops below
/// 1e-20 and split into pieces so the adaptive rule sees the decay.
pub fn integrate_decaying(g: &dyn Fn(f64) -> f64, rate: f64, rel_tol: f64) -> f64 {
    let end = 46.0 / rate;
    let tol = rel_tol * g(0.0).abs() / rate;
    let f = |u: f64| (-rate * u).exp() * g(u);
    let pieces = 16;
    (0..pieces)
        .map(|k| {
            let a = end * k as f64 / pieces as f64;
            let b = end * (k + 1) as f64 / pieces as f64;
            integrate(&f, a, b, tol / pieces as f64)
        })
        .sum()
}

/// `−log ∫ P(γ) e^{−λγ} dγ` for the classification margin prior
/// `P(γ) = c e^{−c(1−γ)}` on `γ ≤ 1`, by quadrature.
pub fn clf_penalty_by_quadrature(lambda: f64, c: f64) -> f64 {
    // γ = 1 − u, u ≥ 0: integrand c e^{−cu} e^{−λ(1−u)}
    let z = integrate_decaying(&|_u| c * (-lambda).exp(), c - lambda, 1e-14);
    -z.ln()
}

/// `log ∫ P(γ) e^{λγ} dγ` for the unnormalized tube prior: 1 on `[0, ε]`,
/// `e^{c(ε−γ)}` above `ε`, by quadrature.
pub fn reg_log_partition_by_quadrature(lambda: f64, c: f64, epsilon: f64) -> f64 {
    let inside = integrate(&|g: f64| (lambda * g).exp(), 0.0, epsilon, 1e-15);
    // γ = ε + u: e^{−cu} e^{λ(ε+u)}
    let tail = integrate_decaying(&|_u| (lambda * epsilon).exp(), c - lambda, 1e-14);
    (inside + tail).ln()
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest componentwise `|a − b| / max(1, |b|)`.
pub fn max_rel_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Random classification set with both labels present.
pub fn random_classification(rng: &mut ChaCha8Rng, t: usize, n: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..t).map(|_| (0..n).map(|_| normal(rng)).collect()).collect();
    let y: Vec<f64> = (0..t)
        .map(|k| match k {
            0 => 1.0,
            1 => -1.0,
            _ if rng.random_bool(0.5) => 1.0,
            _ => -1.0,
        })
        .collect();
    Dataset::from_rows(rows, y, Task::Classification).unwrap()
}

pub fn random_regression(rng: &mut ChaCha8Rng, t: usize, n: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..t).map(|_| (0..n).map(|_| normal(rng)).collect()).collect();
    let y: Vec<f64> = (0..t).map(|_| normal(rng)).collect();
    Dataset::from_rows(rows, y, Task::Regression).unwrap()
}

pub fn random_dataset(rng: &mut ChaCha8Rng, task: Task, t: usize, n: usize) -> Dataset {
    match task {
        Task::Classification => random_classification(rng, t, n),
        Task::Regression => random_regression(rng, t, n),
    }
}

/// Soft-bias hyperparameters with a random `c`, `ε` and `σ`.
pub fn random_hyper(rng: &mut ChaCha8Rng, variant: Variant) -> Hyperparams {
    Hyperparams {
        c: rng.random_range(0.5..5.0),
        epsilon: rng.random_range(0.0..0.5),
        p0: rng.random_range(0.01..0.99),
        sigma: rng.random_range(0.5..3.0),
        bias_mode: BiasMode::Soft,
        variant,
    }
}

/// Multipliers drawn uniformly from `[0, frac·c]` (both λ and λ′ in
/// regression).
pub fn random_duals(rng: &mut ChaCha8Rng, task: Task, t: usize, c: f64, frac: f64) -> DualVars {
    let mut draw = || (0..t).map(|_| rng.random_range(0.0..frac * c)).collect::<Vec<f64>>();
    match task {
        Task::Classification => DualVars::classification(draw()),
        Task::Regression => {
            let l = draw();
            DualVars::regression(l, draw())
        }
    }
}

/// Random point satisfying `⟨s, v⟩ = 0` inside the box, given the bias
/// direction `s` (entries ±1).
pub fn random_balanced(rng: &mut ChaCha8Rng, s: &[f64], c: f64) -> Vec<f64> {
    let mut v: Vec<f64> = s.iter().map(|_| rng.random_range(0.0..0.4 * c)).collect();
    let pos: f64 = v.iter().zip(s).filter(|(_, s)| **s > 0.0).map(|(x, _)| x).sum();
    let neg: f64 = v.iter().zip(s).filter(|(_, s)| **s < 0.0).map(|(x, _)| x).sum();
    // shrink the heavier side so both sums match
    let (heavy, ratio) = if pos > neg { (1.0, neg / pos) } else { (-1.0, pos / neg) };
    for (x, sk) in v.iter_mut().zip(s) {
        if *sk == heavy {
            *x *= ratio;
        }
    }
    v
}
