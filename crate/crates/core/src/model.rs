//! Trained MED predictors: fitting, bias recovery, prediction and the
//! JSON model file.

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{expand_row, polynomial_expand, standardize, whiten, Dataset, ScalingParams, Task, Whitening};
use crate::error::{MedError, Result};
use crate::objective::{BiasMode, DualProblem, DualVars, Hyperparams};
use crate::optimizer::{maximize, OptimizerConfig};

pub const FORMAT_VERSION: u32 = 1;

/// Input transformation applied before the linear rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocessing {
    /// Component-wise polynomial degree (1 = none).
    pub degree: usize,
    pub standardize: bool,
    /// Decorrelate the standardized features (implies `standardize`).
    pub whiten: bool,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Self {
            degree: 1,
            standardize: false,
            whiten: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MedModel {
    pub task: Task,
    pub hyperparams: Hyperparams,
    /// Names of the model's (expanded) input features.
    pub feature_names: Vec<String>,
    pub degree: usize,
    pub scaling: Option<ScalingParams>,
    pub whitening: Option<Whitening>,
    /// Aggregated dual weights `W`.
    pub w: Vec<f64>,
    /// Inclusion probabilities `P`.
    pub inclusion: Vec<f64>,
    /// Posterior-mean coefficients `W̃ = P·W` used by the decision rule.
    pub effective: Vec<f64>,
    pub bias: f64,
    pub duals: DualVars,
    pub converged: bool,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub score: f64,
    /// ±1 in classification (ties go to +1), the score itself in regression.
    pub value: f64,
}

/// Returns `(W, P, W̃)` for feasible duals.
pub fn effective_coefficients(duals: &DualVars, d: &Dataset, h: &Hyperparams) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let problem = DualProblem::new(d, h)?;
    let v = duals.flatten();
    problem.check_feasible(&v)?;
    let stats = problem.feature_stats(&v);
    let effective = stats.w.iter().zip(&stats.p).map(|(w, p)| w * p).collect();
    Ok((stats.w, stats.p, effective))
}

/// Bias of the decision rule.
///
/// Soft mode returns the posterior mean of the bias under its Gaussian prior
/// tilted by the constraints, `κ·⟨s, λ⟩` (κ = σ² in classification, σ in
/// regression). Hard mode has no posterior for the bias; the heuristic places
/// the rule so that, on each side, the example with the largest multiplier
/// meets its expected margin exactly, and averages the two offsets.
pub fn recover_bias(duals: &DualVars, d: &Dataset, h: &Hyperparams) -> Result<f64> {
    let problem = DualProblem::new(d, h)?;
    let v = duals.flatten();
    problem.check_feasible(&v)?;
    let stats = problem.feature_stats(&v);
    let effective: Vec<f64> = stats.w.iter().zip(&stats.p).map(|(w, p)| w * p).collect();
    bias_for(&problem, &v, &effective, d)
}

fn bias_for(problem: &DualProblem, v: &[f64], effective: &[f64], d: &Dataset) -> Result<f64> {
    if problem.bias_mode() == BiasMode::Soft {
        return Ok(problem.bias_weight() * problem.bias_sum(v));
    }
    tight_offset(problem, v, d, |row| d.row(row).iter().zip(effective).map(|(x, w)| x * w).sum())
}

/// Hard-mode offset for an arbitrary bias-free score of each example.
pub(crate) fn tight_offset(problem: &DualProblem, v: &[f64], d: &Dataset, score: impl Fn(usize) -> f64) -> Result<f64> {
    let t = d.len();
    let pen = problem.penalty();
    // multiplier index -> (example, offset that makes its constraint tight)
    let offset = |k: usize| -> f64 {
        let margin = pen.expected_margin(v[k]);
        match d.task() {
            Task::Classification => d.targets()[k] * margin - score(k),
            Task::Regression if k < t => d.targets()[k] + margin - score(k),
            Task::Regression => d.targets()[k - t] - margin - score(k - t),
        }
    };
    let s = problem.bias_direction();
    let mut candidates = Vec::with_capacity(2);
    for side in [1.0, -1.0] {
        let best = (0..v.len())
            .filter(|&k| s[k] == side && v[k] > 0.0)
            .max_by(|&a, &b| v[a].total_cmp(&v[b]));
        if let Some(k) = best {
            candidates.push(offset(k));
        }
    }
    if candidates.is_empty() {
        return Err(MedError::InvalidData(
            "bias is indeterminate: every multiplier is zero".into(),
        ));
    }
    Ok(candidates.iter().sum::<f64>() / candidates.len() as f64)
}

/// Optimizes the dual for `train` (already in model feature space) and
/// builds the decision rule.
pub fn fit(train: &Dataset, h: &Hyperparams, opt: &OptimizerConfig) -> Result<MedModel> {
    h.validate()?;
    opt.validate()?;
    let problem = DualProblem::new(train, h)?;
    let init = problem.unflatten(&problem.initial_point());
    let result = maximize(&problem, &init, opt)?;
    if !result.converged {
        warn!(
            "optimizer did not converge in {} iterations; the model may be suboptimal",
            result.iterations
        );
    }
    let objective = result.objective();
    let v = result.duals.flatten();
    let stats = problem.feature_stats(&v);
    let effective: Vec<f64> = stats.w.iter().zip(&stats.p).map(|(w, p)| w * p).collect();
    let bias = bias_for(&problem, &v, &effective, train)?;
    Ok(MedModel {
        task: train.task(),
        hyperparams: *h,
        feature_names: train.feature_names().to_vec(),
        degree: 1,
        scaling: None,
        whitening: None,
        w: stats.w,
        inclusion: stats.p,
        effective,
        bias,
        duals: result.duals,
        converged: result.converged,
        objective,
        iterations: result.iterations,
    })
}

/// Applies the expansion and standardization, fits, and stores both in the
/// model so prediction takes raw inputs.
pub fn fit_with(raw: &Dataset, prep: &Preprocessing, h: &Hyperparams, opt: &OptimizerConfig) -> Result<MedModel> {
    let expanded = polynomial_expand(raw, prep.degree)?;
    let (train, scaling) = if prep.standardize || prep.whiten {
        let (d, s) = standardize(&expanded)?;
        (d, Some(s))
    } else {
        (expanded, None)
    };
    let (train, whitening) = if prep.whiten {
        let (d, w) = whiten(&train)?;
        (d, Some(w))
    } else {
        (train, None)
    };
    let mut model = fit(&train, h, opt)?;
    model.degree = prep.degree;
    model.scaling = scaling;
    model.whitening = whitening;
    Ok(model)
}

impl MedModel {
    /// Number of raw inputs expected by [`MedModel::predict`].
    pub fn input_dim(&self) -> usize {
        self.effective.len() / self.degree.max(1)
    }

    /// Maps a raw input into model feature space.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(MedError::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let expanded = if self.degree > 1 {
            expand_row(x, self.degree)
        } else {
            x.to_vec()
        };
        let scaled = match &self.scaling {
            Some(s) => s.apply(&expanded)?,
            None => expanded,
        };
        match &self.whitening {
            Some(w) => w.apply(&scaled),
            None => Ok(scaled),
        }
    }

    /// Score `Σ_i W̃_i x_i + b` of a raw input.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let z = self.transform(x)?;
        let score = z.iter().zip(&self.effective).map(|(a, b)| a * b).sum::<f64>() + self.bias;
        let value = match self.task {
            Task::Classification => {
                if score >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Task::Regression => score,
        };
        Ok(Prediction { score, value })
    }

    /// Scores for every row of a raw dataset.
    pub fn scores(&self, d: &Dataset) -> Result<Vec<f64>> {
        (0..d.len())
            .map(|t| self.predict(&d.row(t).to_vec()).map(|p| p.score))
            .collect()
    }

    pub fn predictions(&self, d: &Dataset) -> Result<Vec<Prediction>> {
        (0..d.len()).map(|t| self.predict(&d.row(t).to_vec())).collect()
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            version: FORMAT_VERSION,
            mode: self.task,
            hyperparams: self.hyperparams,
            feature_names: self.feature_names.clone(),
            degree: self.degree,
            scaling: self.scaling.clone(),
            whitening: self.whitening.clone(),
            w: self.w.clone(),
            p: self.inclusion.clone(),
            w_tilde: self.effective.clone(),
            bias: self.bias,
            duals: self.duals.clone(),
            converged: self.converged,
            objective: self.objective,
            iterations: self.iterations,
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value = parse_document(text, MODEL_SECTIONS)?;
        let doc: ModelDocument =
            serde_json::from_value(value).map_err(|e| MedError::ModelFormat(e.to_string()))?;
        let n = doc.w_tilde.len();
        if doc.w.len() != n || doc.p.len() != n || doc.feature_names.len() != n {
            return Err(MedError::ModelFormat(
                "coefficient arrays and feature names differ in length".into(),
            ));
        }
        if doc.degree == 0 || !n.is_multiple_of(doc.degree) {
            return Err(MedError::ModelFormat(format!(
                "degree {} does not divide {n} features",
                doc.degree
            )));
        }
        if let Some(w) = &doc.whitening {
            if w.matrix.len() != n || w.matrix.iter().any(|row| row.len() != n) {
                return Err(MedError::ModelFormat(format!("whitening matrix is not {n}×{n}")));
            }
        }
        Ok(Self {
            task: doc.mode,
            hyperparams: doc.hyperparams,
            feature_names: doc.feature_names,
            degree: doc.degree,
            scaling: doc.scaling,
            whitening: doc.whitening,
            w: doc.w,
            inclusion: doc.p,
            effective: doc.w_tilde,
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

    /// Loads a model and checks it was trained for `task`.
    pub fn load_for(path: impl AsRef<Path>, task: Task) -> Result<Self> {
        let model = Self::load(path)?;
        model.expect_task(task)?;
        Ok(model)
    }

    pub fn expect_task(&self, task: Task) -> Result<()> {
        if self.task != task {
            return Err(MedError::ModeMismatch {
                expected: task.to_string(),
                found: self.task.to_string(),
            });
        }
        Ok(())
    }
}

const MODEL_SECTIONS: &[&str] = &[
    "version",
    "mode",
    "hyperparams",
    "feature_names",
    "degree",
    "scaling",
    "whitening",
    "W",
    "P",
    "W_tilde",
    "bias",
    "duals",
    "converged",
    "objective",
    "iterations",
];

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    mode: Task,
    hyperparams: Hyperparams,
    feature_names: Vec<String>,
    degree: usize,
    scaling: Option<ScalingParams>,
    whitening: Option<Whitening>,
    #[serde(rename = "W")]
    w: Vec<f64>,
    #[serde(rename = "P")]
    p: Vec<f64>,
    #[serde(rename = "W_tilde")]
    w_tilde: Vec<f64>,
    bias: f64,
    duals: DualVars,
    converged: bool,
    objective: f64,
    iterations: usize,
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| MedError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| MedError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a model-file container and checks its version.
///
/// `sections` lists the top-level keys in file order; a truncated document
/// is reported by the first section that is missing or cut short.
pub(crate) fn parse_document(text: &str, sections: &[&str]) -> Result<Value> {
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) if e.is_eof() => {
            let present: Vec<bool> = sections
                .iter()
                .map(|s| text.contains(&format!("\"{s}\"")))
                .collect();
            let missing = present
                .iter()
                .position(|p| !p)
                .map_or(sections[sections.len() - 1], |i| sections[i]);
            return Err(MedError::ModelFormat(format!(
                "truncated file: section `{missing}` is missing or incomplete"
            )));
        }
        Err(e) => return Err(MedError::ModelFormat(format!("malformed JSON: {e}"))),
    };
    let obj = value
        .as_object()
        .ok_or_else(|| MedError::ModelFormat("top level is not an object".into()))?;
    if let Some(missing) = sections.iter().find(|s| !obj.contains_key(**s)) {
        return Err(MedError::ModelFormat(format!("missing section `{missing}`")));
    }
    let version = obj["version"].as_u64();
    if version != Some(u64::from(FORMAT_VERSION)) {
        return Err(MedError::ModelFormat(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            obj["version"]
        )));
    }
    Ok(value)
}

/// Reads only the `mode` tag of a model file.
pub fn model_mode(path: impl AsRef<Path>) -> Result<String> {
    let text = read_text(path.as_ref())?;
    let value: Value = serde_json::from_str(&text).map_err(|e| MedError::ModelFormat(e.to_string()))?;
    value
        .get("mode")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| MedError::ModelFormat("missing section `mode`".into()))
}
