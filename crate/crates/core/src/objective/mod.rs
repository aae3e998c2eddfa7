//! Analytic dual objectives `J(λ) = −log Z(λ)` and their gradients.
//!
//! Every variant shares one shape. With the dual variables flattened into a
//! vector `v` (the λ's, followed by the λ′'s in regression):
//!
//! ```text
//! J(v) = Σ_k pen(v_k) + ⟨lin, v⟩ − G(Aᵀv) − (κ/2)⟨s, v⟩²
//! ```
//!
//! * `pen` integrates the margin prior of one constraint,
//! * row `k` of `A` is the direction example `k` tilts the weight
//!   posterior in, so `W = Aᵀv` is the posterior mean weight without
//!   switches,
//! * `G` is the log-partition of the weight prior at tilt `W`,
//! * `s` is the bias direction: `y_t` in classification, `∓1` for λ / λ′
//!   in regression. With a Gaussian prior on the bias it contributes the
//!   soft penalty with weight κ; with a flat prior it becomes the hard
//!   equality `⟨s, v⟩ = 0`.
//!
//! In regression the tilt on the weights is `Σ_t (λ′_t − λ_t) X_t`, so the
//! λ rows of `A` are `−X_t` and the λ′ rows are `+X_t`.

mod penalty;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Task};
use crate::error::{MedError, Result};

pub use penalty::{
    clf_margin_penalty, feature_inclusion_prob, reg_margin_penalty, selection_threshold,
    FeatureTerm, MarginPenalty,
};

/// Relative margin kept between the multipliers and the barrier at `c`.
pub const BARRIER_GAP: f64 = 1e-12;

/// Tolerance on the hard bias equality, relative to `max(1, Σ|v|)`.
pub const EQUALITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasMode {
    /// Gaussian prior on the bias; quadratic penalty on `⟨s, λ⟩`.
    Soft,
    /// Non-informative bias prior; equality constraint `⟨s, λ⟩ = 0`.
    Hard,
}

/// Which weight prior the objective integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Gaussian weights; the SVM-like objectives.
    Plain,
    /// Gaussian weights behind Bernoulli(p0) feature switches.
    Selection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Margin penalty scale; multipliers live in `[0, c)`.
    pub c: f64,
    /// Half-width of the regression tube.
    pub epsilon: f64,
    /// Prior probability that a feature is switched on.
    pub p0: f64,
    /// Bias prior scale. Enters as `σ²` in classification and `σ` in regression.
    pub sigma: f64,
    pub bias_mode: BiasMode,
    pub variant: Variant,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            c: 10.0,
            epsilon: 0.2,
            p0: 0.99999,
            sigma: 10.0,
            bias_mode: BiasMode::Soft,
            variant: Variant::Selection,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MedError::InvalidParameter(msg));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("c must be positive and finite, got {}", self.c));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return bad(format!("p0 must lie strictly between 0 and 1, got {}", self.p0));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        Ok(())
    }

    /// Largest admissible multiplier.
    pub fn upper(&self) -> f64 {
        self.c * (1.0 - BARRIER_GAP)
    }

    /// Weight κ of the soft bias penalty `−(κ/2)⟨s, λ⟩²`, zero in hard mode.
    pub fn bias_weight(&self, task: Task) -> f64 {
        match (self.bias_mode, task) {
            (BiasMode::Hard, _) => 0.0,
            (BiasMode::Soft, Task::Classification) => self.sigma * self.sigma,
            (BiasMode::Soft, Task::Regression) => self.sigma,
        }
    }

    pub fn feature_term(&self) -> FeatureTerm {
        match self.variant {
            Variant::Plain => FeatureTerm::Gaussian,
            Variant::Selection => FeatureTerm::Switch { p0: self.p0 },
        }
    }

    pub fn margin_penalty(&self, task: Task) -> MarginPenalty {
        match task {
            Task::Classification => MarginPenalty::Classification { c: self.c },
            Task::Regression => MarginPenalty::Regression {
                c: self.c,
                epsilon: self.epsilon,
            },
        }
    }
}

/// Lagrange multipliers; `lambda_prime` is empty outside regression.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DualVars {
    pub lambda: Vec<f64>,
    pub lambda_prime: Vec<f64>,
}

impl DualVars {
    pub fn classification(lambda: Vec<f64>) -> Self {
        Self {
            lambda,
            lambda_prime: Vec::new(),
        }
    }

    pub fn regression(lambda: Vec<f64>, lambda_prime: Vec<f64>) -> Self {
        Self {
            lambda,
            lambda_prime,
        }
    }

    pub fn zeros(task: Task, t: usize) -> Self {
        match task {
            Task::Classification => Self::classification(vec![0.0; t]),
            Task::Regression => Self::regression(vec![0.0; t], vec![0.0; t]),
        }
    }

    pub fn len(&self) -> usize {
        self.lambda.len() + self.lambda_prime.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.lambda.clone();
        v.extend_from_slice(&self.lambda_prime);
        v
    }

    pub fn from_flat(task: Task, v: &[f64]) -> Self {
        match task {
            Task::Classification => Self::classification(v.to_vec()),
            Task::Regression => {
                let t = v.len() / 2;
                Self::regression(v[..t].to_vec(), v[t..].to_vec())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    /// Laid out like [`DualVars::flatten`].
    pub gradient: Vec<f64>,
}

/// Aggregated dual weights and the inclusion probabilities they imply.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStats {
    pub w: Vec<f64>,
    pub p: Vec<f64>,
}

/// Log-partition `G(W)` of the weight prior, as a function of the tilt.
pub trait TiltCumulant: Send + Sync {
    fn value(&self, w: &[f64]) -> f64;

    fn gradient(&self, w: &[f64]) -> Vec<f64>;

    /// `G(w + step·dw) − G(w)` for a sparse tilt change.
    fn increment(&self, w: &[f64], dw: &[(usize, f64)], step: f64) -> f64 {
        let mut moved = w.to_vec();
        for &(i, d) in dw {
            moved[i] += step * d;
        }
        self.value(&moved) - self.value(w)
    }

    /// d/d(step) of [`TiltCumulant::increment`].
    fn directional(&self, w: &[f64], dw: &[(usize, f64)], step: f64) -> f64 {
        let mut moved = w.to_vec();
        for &(i, d) in dw {
            moved[i] += step * d;
        }
        let g = self.gradient(&moved);
        dw.iter().map(|&(i, d)| g[i] * d).sum()
    }

    /// Per-feature term when `G(W) = Σ_i term(W_i)`.
    fn separable(&self) -> Option<FeatureTerm> {
        None
    }
}

impl TiltCumulant for FeatureTerm {
    fn value(&self, w: &[f64]) -> f64 {
        w.iter().map(|&wi| FeatureTerm::value(self, wi)).sum()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        w.iter().map(|&wi| self.derivative(wi)).collect()
    }

    fn increment(&self, w: &[f64], dw: &[(usize, f64)], step: f64) -> f64 {
        dw.iter()
            .map(|&(i, d)| FeatureTerm::value(self, w[i] + step * d) - FeatureTerm::value(self, w[i]))
            .sum()
    }

    fn directional(&self, w: &[f64], dw: &[(usize, f64)], step: f64) -> f64 {
        dw.iter().map(|&(i, d)| d * self.derivative(w[i] + step * d)).sum()
    }

    fn separable(&self) -> Option<FeatureTerm> {
        Some(*self)
    }
}

/// Everything needed to build a [`DualProblem`] by hand.
pub struct DualParts {
    pub task: Task,
    /// One row per dual variable; columns index the weight vector.
    pub rows: Array2<f64>,
    pub linear: Vec<f64>,
    pub bias_direction: Vec<f64>,
    pub penalty: MarginPenalty,
    pub bias_mode: BiasMode,
    pub bias_weight: f64,
    pub cumulant: Box<dyn TiltCumulant>,
}

/// A concrete dual objective over a flattened multiplier vector.
pub struct DualProblem {
    task: Task,
    rows: Array2<f64>,
    sparse_rows: Vec<Vec<(usize, f64)>>,
    linear: Vec<f64>,
    bias_direction: Vec<f64>,
    penalty: MarginPenalty,
    bias_mode: BiasMode,
    bias_weight: f64,
    upper: f64,
    cumulant: Box<dyn TiltCumulant>,
}

impl std::fmt::Debug for DualProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DualProblem")
            .field("task", &self.task)
            .field("dim", &self.dim())
            .field("features", &self.rows.ncols())
            .field("penalty", &self.penalty)
            .field("bias_mode", &self.bias_mode)
            .finish()
    }
}

impl DualProblem {
    pub fn from_parts(parts: DualParts) -> Result<Self> {
        let dim = parts.rows.nrows();
        if parts.linear.len() != dim || parts.bias_direction.len() != dim {
            return Err(MedError::DimensionMismatch {
                expected: dim,
                actual: parts.linear.len().min(parts.bias_direction.len()),
            });
        }
        let sparse_rows = parts
            .rows
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (i, *v))
                    .collect()
            })
            .collect();
        let c = parts.penalty.c();
        Ok(Self {
            task: parts.task,
            rows: parts.rows,
            sparse_rows,
            linear: parts.linear,
            bias_direction: parts.bias_direction,
            penalty: parts.penalty,
            bias_mode: parts.bias_mode,
            bias_weight: if parts.bias_mode == BiasMode::Hard {
                0.0
            } else {
                parts.bias_weight
            },
            upper: c * (1.0 - BARRIER_GAP),
            cumulant: parts.cumulant,
        })
    }

    /// The MED dual for a linear discriminant on `d` under `h`.
    pub fn new(d: &Dataset, h: &Hyperparams) -> Result<Self> {
        h.validate()?;
        let task = d.task();
        let x = d.examples();
        let y = d.targets();
        let (t, n) = x.dim();
        let (rows, linear, bias_direction) = match task {
            Task::Classification => {
                let mut rows = x.clone();
                for (mut r, &yt) in rows.rows_mut().into_iter().zip(y.iter()) {
                    r *= yt;
                }
                (rows, vec![0.0; t], y.to_vec())
            }
            Task::Regression => {
                let mut rows = Array2::zeros((2 * t, n));
                for k in 0..t {
                    rows.row_mut(k).assign(&x.row(k).mapv(|v| -v));
                    rows.row_mut(t + k).assign(&x.row(k));
                }
                let mut linear: Vec<f64> = y.iter().map(|v| -v).collect();
                linear.extend(y.iter());
                let mut dir = vec![-1.0; t];
                dir.extend(std::iter::repeat_n(1.0, t));
                (rows, linear, dir)
            }
        };
        Self::from_parts(DualParts {
            task,
            rows,
            linear,
            bias_direction,
            penalty: h.margin_penalty(task),
            bias_mode: h.bias_mode,
            bias_weight: h.bias_weight(task),
            cumulant: Box::new(h.feature_term()),
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn dim(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub(crate) fn sparse_row(&self, k: usize) -> &[(usize, f64)] {
        &self.sparse_rows[k]
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn bias_direction(&self) -> &[f64] {
        &self.bias_direction
    }

    pub fn penalty(&self) -> MarginPenalty {
        self.penalty
    }

    pub fn bias_mode(&self) -> BiasMode {
        self.bias_mode
    }

    pub fn bias_weight(&self) -> f64 {
        self.bias_weight
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn cumulant(&self) -> &dyn TiltCumulant {
        self.cumulant.as_ref()
    }

    pub fn unflatten(&self, v: &[f64]) -> DualVars {
        DualVars::from_flat(self.task, v)
    }

    /// `W = Aᵀv`.
    pub fn tilt(&self, v: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.n_features()];
        for (k, &vk) in v.iter().enumerate() {
            if vk != 0.0 {
                for &(i, a) in &self.sparse_rows[k] {
                    w[i] += vk * a;
                }
            }
        }
        w
    }

    /// `⟨s, v⟩`.
    pub fn bias_sum(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.bias_direction).map(|(a, b)| a * b).sum()
    }

    pub fn check_feasible(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(MedError::DimensionMismatch {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        if let Some((index, &value)) = v
            .iter()
            .enumerate()
            .find(|(_, x)| !(**x >= 0.0 && **x <= self.upper))
        {
            return Err(MedError::BoxViolation {
                index,
                value,
                upper: self.penalty.c(),
            });
        }
        if self.bias_mode == BiasMode::Hard {
            let residual = self.bias_sum(v);
            let scale = v.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            if residual.abs() > EQUALITY_TOL * scale {
                return Err(MedError::Infeasible { residual });
            }
        }
        Ok(())
    }

    /// J at a point already known to be feasible.
    pub(crate) fn value_unchecked(&self, v: &[f64]) -> f64 {
        let margins: f64 = v.iter().map(|&x| self.penalty.term(x)).sum();
        let linear: f64 = v.iter().zip(&self.linear).map(|(a, b)| a * b).sum();
        let sum = self.bias_sum(v);
        margins + linear - self.cumulant.value(&self.tilt(v)) - 0.5 * self.bias_weight * sum * sum
    }

    pub fn value(&self, v: &[f64]) -> Result<f64> {
        self.check_feasible(v)?;
        Ok(self.value_unchecked(v))
    }

    pub fn gradient_unchecked(&self, v: &[f64]) -> Vec<f64> {
        let gw = self.cumulant.gradient(&self.tilt(v));
        let bias = self.bias_weight * self.bias_sum(v);
        (0..self.dim())
            .map(|k| {
                let feat: f64 = self.sparse_rows[k].iter().map(|&(i, a)| a * gw[i]).sum();
                self.penalty.derivative(v[k]) + self.linear[k] - feat - bias * self.bias_direction[k]
            })
            .collect()
    }

    pub fn evaluate(&self, v: &[f64]) -> Result<ObjectiveEval> {
        self.check_feasible(v)?;
        Ok(ObjectiveEval {
            value: self.value_unchecked(v),
            gradient: self.gradient_unchecked(v),
        })
    }

    /// Interior starting point `min(0.1, c/10)` per multiplier, rescaled on
    /// the heavier side of the bias direction when the equality is enforced.
    pub fn initial_point(&self) -> Vec<f64> {
        let base = (0.1f64).min(self.penalty.c() / 10.0);
        let mut v = vec![base; self.dim()];
        if self.bias_mode == BiasMode::Hard {
            let pos = self.bias_direction.iter().filter(|s| **s > 0.0).count() as f64;
            let neg = self.bias_direction.iter().filter(|s| **s < 0.0).count() as f64;
            if pos > 0.0 && neg > 0.0 {
                for (x, s) in v.iter_mut().zip(&self.bias_direction) {
                    if *s > 0.0 && pos > neg {
                        *x = base * neg / pos;
                    } else if *s < 0.0 && neg > pos {
                        *x = base * pos / neg;
                    }
                }
            } else {
                v.iter_mut().for_each(|x| *x = 0.0);
            }
        }
        v
    }

    pub fn feature_stats(&self, v: &[f64]) -> FeatureStats {
        let w = self.tilt(v);
        let p = match self.cumulant.separable() {
            Some(term) => w.iter().map(|&wi| term.inclusion(wi)).collect(),
            None => vec![1.0; w.len()],
        };
        FeatureStats { w, p }
    }
}

fn checked_problem(duals: &DualVars, d: &Dataset, h: &Hyperparams, task: Task, variant: Variant) -> Result<(DualProblem, Vec<f64>)> {
    if d.task() != task {
        return Err(MedError::ModeMismatch {
            expected: task.to_string(),
            found: d.task().to_string(),
        });
    }
    let expected_prime = if task == Task::Regression { d.len() } else { 0 };
    if duals.lambda.len() != d.len() || duals.lambda_prime.len() != expected_prime {
        return Err(MedError::DimensionMismatch {
            expected: d.len() + expected_prime,
            actual: duals.len(),
        });
    }
    let h = Hyperparams { variant, ..*h };
    Ok((DualProblem::new(d, &h)?, duals.flatten()))
}

/// SVM-like classification dual: Gaussian weights, exponential margin prior.
pub fn j_svm_classification(duals: &DualVars, d: &Dataset, h: &Hyperparams) -> Result<ObjectiveEval> {
    let (p, v) = checked_problem(duals, d, h, Task::Classification, Variant::Plain)?;
    p.evaluate(&v)
}

/// Classification dual with Bernoulli(p0) feature switches.
pub fn j_fs_classification(duals: &DualVars, d: &Dataset, h: &Hyperparams) -> Result<ObjectiveEval> {
    let (p, v) = checked_problem(duals, d, h, Task::Classification, Variant::Selection)?;
    p.evaluate(&v)
}

/// SVM-like ε-tube regression dual.
pub fn j_svm_regression(duals: &DualVars, d: &Dataset, h: &Hyperparams) -> Result<ObjectiveEval> {
    let (p, v) = checked_problem(duals, d, h, Task::Regression, Variant::Plain)?;
    p.evaluate(&v)
}

/// ε-tube regression dual with feature switches.
pub fn j_fs_regression(duals: &DualVars, d: &Dataset, h: &Hyperparams) -> Result<ObjectiveEval> {
    let (p, v) = checked_problem(duals, d, h, Task::Regression, Variant::Selection)?;
    p.evaluate(&v)
}
