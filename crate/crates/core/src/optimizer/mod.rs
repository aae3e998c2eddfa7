//! Maximizers for the concave dual objectives.
//!
//! * [`axis_parallel_maximize`]: randomized coordinate ascent. Each line
//!   search solves for the zero of the directional derivative, which is
//!   monotone because J is concave.
//! * [`iterated_bounded_qp`]: minorize–maximize on tangent quadratic bounds
//!   of the feature-selection terms, each surrogate solved by
//!   [`qp_subsolve`].

mod bound;
mod qp;
pub mod scalar;

use log::{debug, warn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Task;
use crate::error::{MedError, Result};
use crate::objective::{BiasMode, DualProblem, DualVars, FeatureTerm};

pub use bound::{build_quad_bound, QuadBound};
pub use qp::{qp_subsolve, QpSolution, QuadSurrogate};

/// Sweep spacings of the longer-range extrapolations.
const LONG_STRIDES: [usize; 3] = [4, 16, 64];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    AxisParallel,
    BoundedQp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Stop once a sweep (outer iteration) improves J by less than
    /// `tol · max(1, |J|)`.
    pub tol: f64,
    /// Sweep (outer iteration) budget.
    pub max_iter: usize,
    pub seed: u64,
    pub qp_inner_tol: f64,
    pub qp_max_inner: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::AxisParallel,
            tol: 1e-8,
            max_iter: 10_000,
            seed: 0,
            qp_inner_tol: 1e-9,
            qp_max_inner: 2_000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(MedError::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 || self.qp_max_inner == 0 {
            return Err(MedError::InvalidParameter("iteration limits must be at least 1".into()));
        }
        if !(self.qp_inner_tol > 0.0) {
            return Err(MedError::InvalidParameter("qp_inner_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptResult {
    pub duals: DualVars,
    /// J after initialization and after every sweep / outer iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Inner QP sweeps per outer iteration (bounded QP only).
    pub inner_sweeps: Vec<usize>,
}

impl OptResult {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace starts with the initial value")
    }
}

fn improvement_small(previous: f64, current: f64, tol: f64) -> bool {
    current - previous < tol * current.abs().max(1.0)
}

/// Mutable ascent state: multipliers plus the cached tilt and bias sum.
struct Ascent<'p> {
    problem: &'p DualProblem,
    v: Vec<f64>,
    w: Vec<f64>,
    sum: f64,
    scratch: Vec<f64>,
    touched: Vec<usize>,
}

impl<'p> Ascent<'p> {
    fn new(problem: &'p DualProblem, v: Vec<f64>) -> Self {
        let w = problem.tilt(&v);
        let sum = problem.bias_sum(&v);
        Self {
            problem,
            v,
            w,
            sum,
            scratch: vec![0.0; problem.n_features()],
            touched: Vec::new(),
        }
    }

    fn resync(&mut self) -> f64 {
        self.w = self.problem.tilt(&self.v);
        self.sum = self.problem.bias_sum(&self.v);
        self.problem.value_unchecked(&self.v)
    }

    /// Tilt change of a move along `dir`, merged over shared features.
    fn tilt_direction(&mut self, dir: &[(usize, f64)]) -> Vec<(usize, f64)> {
        for &(k, coef) in dir {
            for &(i, a) in self.problem.sparse_row(k) {
                if self.scratch[i] == 0.0 {
                    self.touched.push(i);
                }
                self.scratch[i] += coef * a;
            }
        }
        let mut dw = Vec::with_capacity(self.touched.len());
        for &i in &self.touched {
            dw.push((i, self.scratch[i]));
            self.scratch[i] = 0.0;
        }
        self.touched.clear();
        dw
    }

    /// Objective change for a step of length `step` along `dir`.
    fn gain(&self, dir: &[(usize, f64)], dw: &[(usize, f64)], ds: f64, dlin: f64, step: f64) -> f64 {
        let p = self.problem;
        let pen = p.penalty();
        let margins: f64 = dir
            .iter()
            .map(|&(k, coef)| {
                let x = (self.v[k] + coef * step).clamp(0.0, p.upper());
                pen.term(x) - pen.term(self.v[k])
            })
            .sum();
        let feat = p.cumulant().increment(&self.w, dw, step);
        let bias = 0.5 * p.bias_weight() * step * ds * (2.0 * self.sum + step * ds);
        margins + dlin * step - feat - bias
    }

    /// Derivative of [`Ascent::gain`] with respect to `step`.
    fn slope(&self, dir: &[(usize, f64)], dw: &[(usize, f64)], ds: f64, dlin: f64, step: f64) -> f64 {
        let p = self.problem;
        let pen = p.penalty();
        let margins: f64 = dir
            .iter()
            .map(|&(k, coef)| coef * pen.derivative((self.v[k] + coef * step).clamp(0.0, p.upper())))
            .sum();
        let feat = p.cumulant().directional(&self.w, dw, step);
        margins + dlin - feat - p.bias_weight() * ds * (self.sum + step * ds)
    }

    /// Exact line search along `dir` (root of [`Ascent::slope`] on the
    /// feasible segment); applies the step when it strictly improves J.
    fn line_step(&mut self, dir: &[(usize, f64)]) -> f64 {
        let upper = self.problem.upper();
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for &(k, coef) in dir {
            let (a, b) = ((0.0 - self.v[k]) / coef, (upper - self.v[k]) / coef);
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
        if !(hi > lo) {
            return 0.0;
        }
        let dw = self.tilt_direction(dir);
        let ds: f64 = dir.iter().map(|&(k, c)| c * self.problem.bias_direction()[k]).sum();
        let dlin: f64 = dir.iter().map(|&(k, c)| c * self.problem.linear()[k]).sum();
        let g0 = self.slope(dir, &dw, ds, dlin, 0.0);
        let step = if g0 > 0.0 {
            scalar::root_decreasing(|t| self.slope(dir, &dw, ds, dlin, t), 0.0, hi)
        } else if g0 < 0.0 {
            scalar::root_decreasing(|t| self.slope(dir, &dw, ds, dlin, t), lo, 0.0)
        } else {
            return 0.0;
        };
        let gain = self.gain(dir, &dw, ds, dlin, step);
        if !(gain > 0.0) || step == 0.0 {
            return 0.0;
        }
        for &(k, coef) in dir {
            self.v[k] = (self.v[k] + coef * step).clamp(0.0, upper);
        }
        for &(i, d) in &dw {
            self.w[i] += step * d;
        }
        self.sum += step * ds;
        gain
    }

    /// Line search along the net move of the last sweep. Coordinates pinned
    /// at a bound are dropped from the direction; with the equality enforced
    /// the remainder is re-centred so `⟨s, λ⟩` stays fixed.
    fn extrapolate(&mut self, before: &[f64], hard: bool) -> f64 {
        let upper = self.problem.upper();
        let mut dir: Vec<(usize, f64)> = self
            .v
            .iter()
            .zip(before)
            .enumerate()
            .map(|(k, (now, was))| (k, now - was))
            .filter(|&(k, d)| d != 0.0 && !((d < 0.0 && self.v[k] <= 0.0) || (d > 0.0 && self.v[k] >= upper)))
            .collect();
        if dir.len() < 2 {
            return 0.0;
        }
        if hard {
            let s = self.problem.bias_direction();
            let drift = dir.iter().map(|&(k, d)| s[k] * d).sum::<f64>() / dir.len() as f64;
            for (k, d) in dir.iter_mut() {
                *d -= s[*k] * drift;
            }
        }
        self.line_step(&dir)
    }
}

/// Randomized axis-parallel ascent.
///
/// Every sweep visits the coordinates in a fresh seeded random order. Each
/// coordinate is paired with a random partner and the pair moves along the
/// direction that keeps `⟨s, λ⟩` fixed. With the soft bias the coordinate is
/// also moved alone first; the pair move then handles the badly conditioned
/// directions that a large bias variance creates. Each sweep ends with a line
/// search along the sweep's net displacement, which carries the iterate along
/// flat valleys that single coordinates only creep through.
pub fn axis_parallel_maximize(problem: &DualProblem, init: &DualVars, cfg: &OptimizerConfig) -> Result<OptResult> {
    cfg.validate()?;
    let v = init.flatten();
    problem.check_feasible(&v)?;
    let start = problem.value_unchecked(&v);
    if !start.is_finite() {
        return Err(MedError::Numerical(format!("objective is {start} at the initial point")));
    }
    let mut state = Ascent::new(problem, v);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = problem.dim();
    let hard = problem.bias_mode() == BiasMode::Hard;
    let mut order: Vec<usize> = (0..dim).collect();
    let mut trace = vec![start];
    let mut converged = false;
    let mut sweeps = 0;
    // λ_t and λ'_t of one regression example: moving both together leaves the
    // rule unchanged and only rebalances their margin penalties
    let half = dim / 2;
    let partner = |k: usize| (problem.task() == Task::Regression).then(|| if k < half { k + half } else { k - half });
    let mut checkpoints: Vec<(usize, Vec<f64>)> = LONG_STRIDES.iter().map(|&p| (p, state.v.clone())).collect();

    while sweeps < cfg.max_iter {
        sweeps += 1;
        order.shuffle(&mut rng);
        let s = problem.bias_direction();
        let before = state.v.clone();
        for &k in &order {
            if !hard {
                state.line_step(&[(k, 1.0)]);
            }
            if dim >= 2 {
                let mut j = rng.random_range(0..dim - 1);
                if j >= k {
                    j += 1;
                }
                state.line_step(&[(k, s[k]), (j, -s[j])]);
            }
            if let Some(m) = partner(k) {
                state.line_step(&[(k, 1.0), (m, 1.0)]);
            }
        }
        state.extrapolate(&before, hard);
        for (period, snapshot) in checkpoints.iter_mut() {
            if sweeps % *period == 0 {
                state.extrapolate(snapshot, hard);
                snapshot.clone_from(&state.v);
            }
        }
        let previous = *trace.last().unwrap();
        let current = state.resync();
        trace.push(current);
        if improvement_small(previous, current, cfg.tol) {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!("axis-parallel ascent stopped after {sweeps} sweeps without meeting tol {}", cfg.tol);
    }
    debug!("axis-parallel: {sweeps} sweeps, J = {}", trace.last().unwrap());
    Ok(OptResult {
        duals: problem.unflatten(&state.v),
        objective_trace: trace,
        iterations: sweeps,
        converged,
        inner_sweeps: Vec::new(),
    })
}

/// Minorize–maximize with tangent quadratic bounds on the feature terms.
///
/// The margin terms stay exact inside each surrogate, so every accepted
/// outer step increases the true objective.
pub fn iterated_bounded_qp(problem: &DualProblem, init: &DualVars, cfg: &OptimizerConfig) -> Result<OptResult> {
    cfg.validate()?;
    let term: FeatureTerm = problem.cumulant().separable().ok_or_else(|| {
        MedError::InvalidParameter("bounded QP needs a per-feature weight prior".into())
    })?;
    let mut v = init.flatten();
    problem.check_feasible(&v)?;
    let mut current = problem.value_unchecked(&v);
    if !current.is_finite() {
        return Err(MedError::Numerical(format!("objective is {current} at the initial point")));
    }
    let rows = problem.rows();
    let n = problem.n_features();
    let mut trace = vec![current];
    let mut inner_sweeps = Vec::new();
    let mut converged = false;
    let mut outer = 0;

    while outer < cfg.max_iter {
        outer += 1;
        let w = problem.tilt(&v);
        let mut weights = Vec::with_capacity(n);
        let mut linear = problem.linear().to_vec();
        for (i, &ut) in w.iter().enumerate() {
            let b = QuadBound::from_tilt(term, Vec::new(), Vec::new(), ut);
            weights.push(b.curvature);
            if b.slope != 0.0 {
                for (lk, a) in linear.iter_mut().zip(rows.column(i)) {
                    *lk += b.slope * a;
                }
            }
        }
        let surrogate = QuadSurrogate {
            rows: rows.view(),
            weights,
            linear,
            bias_direction: problem.bias_direction(),
            bias_weight: problem.bias_weight(),
            equality: problem.bias_mode() == BiasMode::Hard,
            upper: problem.upper(),
            penalty: Some(problem.penalty()),
        };
        let inner_cfg = OptimizerConfig {
            seed: cfg.seed.wrapping_add(outer as u64),
            ..*cfg
        };
        let sol = qp_subsolve(&surrogate, &v, &inner_cfg)?;
        inner_sweeps.push(sol.sweeps);
        let next = problem.value_unchecked(&sol.point);
        if !next.is_finite() {
            return Err(MedError::Numerical(format!("objective became {next} after outer step {outer}")));
        }
        let previous = current;
        if next >= current {
            v = sol.point;
            current = next;
        }
        trace.push(current);
        if improvement_small(previous, current, cfg.tol) {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!("bounded QP stopped after {outer} outer iterations without meeting tol {}", cfg.tol);
    }
    debug!("bounded QP: {outer} outer iterations, J = {current}");
    Ok(OptResult {
        duals: problem.unflatten(&v),
        objective_trace: trace,
        iterations: outer,
        converged,
        inner_sweeps,
    })
}

/// Runs the configured method. Bounded QP is followed by an axis-parallel
/// polish from its solution; objectives without per-feature terms fall back
/// to axis-parallel ascent.
pub fn maximize(problem: &DualProblem, init: &DualVars, cfg: &OptimizerConfig) -> Result<OptResult> {
    match cfg.method {
        Method::BoundedQp if problem.cumulant().separable().is_some() => {
            let boot = iterated_bounded_qp(problem, init, cfg)?;
            let polish = axis_parallel_maximize(problem, &boot.duals, cfg)?;
            let mut trace = boot.objective_trace;
            trace.extend_from_slice(&polish.objective_trace[1..]);
            Ok(OptResult {
                duals: polish.duals,
                objective_trace: trace,
                iterations: boot.iterations + polish.iterations,
                converged: polish.converged,
                inner_sweeps: boot.inner_sweeps,
            })
        }
        _ => axis_parallel_maximize(problem, init, cfg),
    }
}
