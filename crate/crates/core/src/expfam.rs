//! Generative discriminants: each class is an exponential-family density
//! with a conjugate prior on its natural parameter, and the decision rule
//! is the log-likelihood ratio plus a bias.
//!
//! With `p(X|θ) = exp(A(X) + Xᵀθ − K(θ))` and the conjugate prior
//! `p(θ|χ) = exp(Ã(θ) + θᵀχ − K̃(χ))`, the class-`+` partition function is
//!
//! ```text
//! log Z_θ+(λ) = K̃(χ + Σ λ_t y_t X_t) + Σ λ_t y_t A(X_t) − K̃(χ)
//! ```
//!
//! provided `Σ λ_t y_t = 0` (otherwise a `K(θ)` factor survives the
//! integral). The `−` model flips every `y_t`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Task};
use crate::error::{MedError, Result};
use crate::model::{parse_document, read_text, tight_offset, write_text, Prediction, FORMAT_VERSION};
use crate::objective::{BiasMode, DualParts, DualProblem, DualVars, Hyperparams, TiltCumulant, EQUALITY_TOL};
use crate::optimizer::{maximize, OptimizerConfig};

pub const GENERATIVE_MODE: &str = "generative-gaussian";

/// An exponential family with a conjugate prior, given by its carrier
/// `A(X)` and the conjugate cumulant `K̃(χ)`.
///
/// `k_tilde_grad` maps a natural parameter of the prior to the posterior
/// mean of θ (the gradient of `K̃`).
#[derive(Clone)]
pub struct ExpFamilyDescriptor {
    pub name: &'static str,
    pub a_fn: fn(&[f64]) -> f64,
    pub k_tilde_fn: fn(&[f64]) -> f64,
    pub k_tilde_grad: fn(&[f64]) -> Vec<f64>,
    pub chi0: Vec<f64>,
    pub dim: usize,
}

impl fmt::Debug for ExpFamilyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExpFamilyDescriptor")
            .field("name", &self.name)
            .field("chi0", &self.chi0)
            .field("dim", &self.dim)
            .finish()
    }
}

impl PartialEq for ExpFamilyDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.chi0 == other.chi0 && self.dim == other.dim
    }
}

impl ExpFamilyDescriptor {
    pub fn carrier(&self, x: &[f64]) -> f64 {
        (self.a_fn)(x)
    }

    pub fn k_tilde(&self, chi: &[f64]) -> f64 {
        (self.k_tilde_fn)(chi)
    }

    pub fn mean_parameter(&self, chi: &[f64]) -> Vec<f64> {
        (self.k_tilde_grad)(chi)
    }
}

fn gaussian_carrier(x: &[f64]) -> f64 {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    -0.5 * sq - 0.5 * x.len() as f64 * (2.0 * std::f64::consts::PI).ln()
}

fn half_square(chi: &[f64]) -> f64 {
    0.5 * chi.iter().map(|v| v * v).sum::<f64>()
}

fn identity(chi: &[f64]) -> Vec<f64> {
    chi.to_vec()
}

/// Unit-covariance Gaussian with a standard normal prior on its mean.
///
/// `K̃(χ) = ½‖χ‖²` exactly (the prior normalizer leaves no constant), and
/// `χ0 = 0`.
pub fn gaussian_family(dim: usize) -> Result<ExpFamilyDescriptor> {
    if dim == 0 {
        return Err(MedError::InvalidParameter("family dimension must be at least 1".into()));
    }
    Ok(ExpFamilyDescriptor {
        name: "gaussian",
        a_fn: gaussian_carrier,
        k_tilde_fn: half_square,
        k_tilde_grad: identity,
        chi0: vec![0.0; dim],
        dim,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassSign {
    Plus,
    Minus,
}

impl ClassSign {
    fn factor(self) -> f64 {
        match self {
            ClassSign::Plus => 1.0,
            ClassSign::Minus => -1.0,
        }
    }
}

fn check_inputs(fam: &ExpFamilyDescriptor, d: &Dataset) -> Result<()> {
    if d.task() != Task::Classification {
        return Err(MedError::ModeMismatch {
            expected: Task::Classification.to_string(),
            found: d.task().to_string(),
        });
    }
    if d.n_features() != fam.dim || fam.chi0.len() != fam.dim {
        return Err(MedError::DimensionMismatch {
            expected: fam.dim,
            actual: d.n_features(),
        });
    }
    Ok(())
}

/// `log Z_θ±(λ)` in closed form.
pub fn expfam_log_partition(fam: &ExpFamilyDescriptor, duals: &DualVars, d: &Dataset, sign: ClassSign) -> Result<f64> {
    check_inputs(fam, d)?;
    if duals.lambda.len() != d.len() || !duals.lambda_prime.is_empty() {
        return Err(MedError::DimensionMismatch {
            expected: d.len(),
            actual: duals.len(),
        });
    }
    if let Some((index, &value)) = duals.lambda.iter().enumerate().find(|(_, l)| !(**l >= 0.0)) {
        return Err(MedError::BoxViolation {
            index,
            value,
            upper: f64::INFINITY,
        });
    }
    let y = d.targets();
    let residual: f64 = duals.lambda.iter().zip(y).map(|(l, y)| l * y).sum();
    if residual.abs() > EQUALITY_TOL {
        return Err(MedError::Infeasible { residual });
    }
    let s = sign.factor();
    let mut chi = fam.chi0.clone();
    let mut carrier = 0.0;
    for (t, &l) in duals.lambda.iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let x = d.row(t);
        let coef = s * l * y[t];
        for (c, xi) in chi.iter_mut().zip(x.iter()) {
            *c += coef * xi;
        }
        carrier += coef * fam.carrier(x.as_slice().expect("rows are contiguous"));
    }
    Ok(fam.k_tilde(&chi) + carrier - fam.k_tilde(&fam.chi0))
}

/// `log Z_θ+ + log Z_θ−` as a function of `W = Σ λ_t y_t X_t`; the carrier
/// sums cancel between the two classes.
struct PairCumulant {
    fam: ExpFamilyDescriptor,
    base: f64,
}

impl PairCumulant {
    fn new(fam: ExpFamilyDescriptor) -> Self {
        let base = 2.0 * fam.k_tilde(&fam.chi0);
        Self { fam, base }
    }

    fn shifted(&self, w: &[f64], s: f64) -> Vec<f64> {
        self.fam.chi0.iter().zip(w).map(|(c, wi)| c + s * wi).collect()
    }
}

impl TiltCumulant for PairCumulant {
    fn value(&self, w: &[f64]) -> f64 {
        self.fam.k_tilde(&self.shifted(w, 1.0)) + self.fam.k_tilde(&self.shifted(w, -1.0)) - self.base
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let plus = self.fam.mean_parameter(&self.shifted(w, 1.0));
        let minus = self.fam.mean_parameter(&self.shifted(w, -1.0));
        plus.iter().zip(&minus).map(|(p, m)| p - m).collect()
    }
}

/// Dual of the generative discriminant: margin penalty of the exponential
/// margin prior, `−log Z_θ+ − log Z_θ−`, and the bias equality.
pub fn generative_problem(fam: &ExpFamilyDescriptor, d: &Dataset, h: &Hyperparams) -> Result<DualProblem> {
    h.validate()?;
    check_inputs(fam, d)?;
    let y = d.targets();
    let mut rows = d.examples().clone();
    for (mut r, &yt) in rows.rows_mut().into_iter().zip(y.iter()) {
        r *= yt;
    }
    DualProblem::from_parts(DualParts {
        task: Task::Classification,
        rows,
        linear: vec![0.0; d.len()],
        bias_direction: y.to_vec(),
        penalty: h.margin_penalty(Task::Classification),
        bias_mode: BiasMode::Hard,
        bias_weight: 0.0,
        cumulant: Box::new(PairCumulant::new(fam.clone())),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerativeMedModel {
    pub family: ExpFamilyDescriptor,
    pub hyperparams: Hyperparams,
    pub feature_names: Vec<String>,
    pub posterior_natural_plus: Vec<f64>,
    pub posterior_natural_minus: Vec<f64>,
    pub bias: f64,
    pub duals: DualVars,
    pub converged: bool,
    pub objective: f64,
    pub iterations: usize,
}

/// Fits a two-class Gaussian generative discriminant. The bias equality is
/// always enforced, whatever `h.bias_mode` says.
pub fn fit_generative(train: &Dataset, h: &Hyperparams, opt: &OptimizerConfig) -> Result<GenerativeMedModel> {
    opt.validate()?;
    let fam = gaussian_family(train.n_features())?;
    let y = train.targets();
    if !(y.iter().any(|v| *v > 0.0) && y.iter().any(|v| *v < 0.0)) {
        return Err(MedError::InvalidData("generative fit needs examples of both classes".into()));
    }
    let h = Hyperparams {
        bias_mode: BiasMode::Hard,
        ..*h
    };
    let problem = generative_problem(&fam, train, &h)?;
    let init = problem.unflatten(&problem.initial_point());
    let result = maximize(&problem, &init, opt)?;
    if !result.converged {
        log::warn!("generative fit stopped after {} sweeps without converging", result.iterations);
    }
    let v = result.duals.flatten();
    let w = problem.tilt(&v);
    let plus: Vec<f64> = fam.chi0.iter().zip(&w).map(|(c, wi)| c + wi).collect();
    let minus: Vec<f64> = fam.chi0.iter().zip(&w).map(|(c, wi)| c - wi).collect();
    let mut model = GenerativeMedModel {
        family: fam,
        hyperparams: h,
        feature_names: train.feature_names().to_vec(),
        posterior_natural_plus: plus,
        posterior_natural_minus: minus,
        bias: 0.0,
        objective: result.objective(),
        converged: result.converged,
        iterations: result.iterations,
        duals: result.duals,
    };
    model.bias = tight_offset(&problem, &v, train, |t| {
        model.log_ratio(train.row(t).as_slice().expect("rows are contiguous"))
    })?;
    Ok(model)
}

impl GenerativeMedModel {
    pub fn mean_plus(&self) -> Vec<f64> {
        self.family.mean_parameter(&self.posterior_natural_plus)
    }

    pub fn mean_minus(&self) -> Vec<f64> {
        self.family.mean_parameter(&self.posterior_natural_minus)
    }

    // Both class means have posterior N(μ̄±, I). Averaging the log-ratio over
    // them gives
    //   E[−½‖x − μ+‖²] − E[−½‖x − μ−‖²]
    //     = −½(‖x − μ̄+‖² + d) + ½(‖x − μ̄−‖² + d)
    //     = (μ̄+ − μ̄−)ᵀx − ½(‖μ̄+‖² − ‖μ̄−‖²),
    // so the plug-in score at the posterior means is the exact posterior
    // average; the trace terms cancel.
    fn log_ratio(&self, x: &[f64]) -> f64 {
        let (mp, mm) = (self.mean_plus(), self.mean_minus());
        let linear: f64 = x.iter().zip(mp.iter().zip(&mm)).map(|(xi, (p, m))| xi * (p - m)).sum();
        let sq = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        linear - 0.5 * (sq(&mp) - sq(&mm))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.family.dim {
            return Err(MedError::DimensionMismatch {
                expected: self.family.dim,
                actual: x.len(),
            });
        }
        let score = self.log_ratio(x) + self.bias;
        Ok(Prediction {
            score,
            value: if score >= 0.0 { 1.0 } else { -1.0 },
        })
    }

    pub fn predictions(&self, d: &Dataset) -> Result<Vec<Prediction>> {
        (0..d.len()).map(|t| self.predict(&d.row(t).to_vec())).collect()
    }

    pub fn to_json(&self) -> String {
        let doc = GenerativeDocument {
            version: FORMAT_VERSION,
            mode: GENERATIVE_MODE.to_string(),
            hyperparams: self.hyperparams,
            feature_names: self.feature_names.clone(),
            chi0: self.family.chi0.clone(),
            posterior_natural_plus: self.posterior_natural_plus.clone(),
            posterior_natural_minus: self.posterior_natural_minus.clone(),
            bias: self.bias,
            duals: self.duals.clone(),
            converged: self.converged,
            objective: self.objective,
            iterations: self.iterations,
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value = parse_document(text, GENERATIVE_SECTIONS)?;
        if value["mode"] != GENERATIVE_MODE {
            return Err(MedError::ModeMismatch {
                expected: GENERATIVE_MODE.into(),
                found: value["mode"].to_string(),
            });
        }
        let doc: GenerativeDocument =
            serde_json::from_value(value).map_err(|e| MedError::ModelFormat(e.to_string()))?;
        let dim = doc.chi0.len();
        if doc.posterior_natural_plus.len() != dim
            || doc.posterior_natural_minus.len() != dim
            || doc.feature_names.len() != dim
        {
            return Err(MedError::ModelFormat("natural parameters differ in length".into()));
        }
        let mut family = gaussian_family(dim).map_err(|e| MedError::ModelFormat(e.to_string()))?;
        family.chi0 = doc.chi0;
        Ok(Self {
            family,
            hyperparams: doc.hyperparams,
            feature_names: doc.feature_names,
            posterior_natural_plus: doc.posterior_natural_plus,
            posterior_natural_minus: doc.posterior_natural_minus,
            bias: doc.bias,
            duals: doc.duals,
            converged: doc.converged,
            objective: doc.objective,
            iterations: doc.iterations,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&read_text(path.as_ref())?)
    }
}

pub fn predict_generative(model: &GenerativeMedModel, x: &[f64]) -> Result<Prediction> {
    model.predict(x)
}

const GENERATIVE_SECTIONS: &[&str] = &[
    "version",
    "mode",
    "hyperparams",
    "feature_names",
    "chi0",
    "posterior_natural_plus",
    "posterior_natural_minus",
    "bias",
    "duals",
    "converged",
    "objective",
    "iterations",
];

#[derive(Serialize, Deserialize)]
struct GenerativeDocument {
    version: u32,
    mode: String,
    hyperparams: Hyperparams,
    feature_names: Vec<String>,
    chi0: Vec<f64>,
    posterior_natural_plus: Vec<f64>,
    posterior_natural_minus: Vec<f64>,
    bias: f64,
    duals: DualVars,
    converged: bool,
    objective: f64,
    iterations: usize,
}
