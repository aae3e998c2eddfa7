//! Metrics and figure data: ROC curves, coefficient-magnitude CDFs,
//! ε-insensitive loss, RMSE and a least-squares baseline.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde_json::{Map, Value};

use crate::data::Dataset;
use crate::error::{MedError, Result};

pub const DEFAULT_CDF_GRID: usize = 200;
const LS_JITTER: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(MedError::DimensionMismatch { expected: a, actual: b });
    }
    Ok(())
}

/// ROC curve over descending score thresholds; equal scores form one step.
pub fn roc_curve(scores: &[f64], labels: &[f64]) -> Result<RocCurve> {
    check_lengths(scores.len(), labels.len())?;
    if let Some(bad) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
        return Err(MedError::InvalidData(format!("label {bad} is not +1 or -1")));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(MedError::InvalidData("NaN score".into()));
    }
    let pos = labels.iter().filter(|y| **y > 0.0).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(MedError::InvalidData("ROC needs both positive and negative labels".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] > 0.0 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let (x0, y0) = *points.last().expect("non-empty");
        let (x1, y1) = (fp / neg, tp / pos);
        auc += (x1 - x0) * (y0 + y1) * 0.5;
        points.push((x1, y1));
    }
    Ok(RocCurve { points, auc })
}

/// Empirical CDF of coefficient magnitudes, `P̂(|W̃| < x)`, on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffCdf {
    pub points: Vec<(f64, f64)>,
    magnitudes: Vec<f64>,
}

impl CoeffCdf {
    /// Fraction of magnitudes strictly below `x`.
    pub fn fraction_below(&self, x: f64) -> f64 {
        let below = self.magnitudes.partition_point(|m| *m < x);
        below as f64 / self.magnitudes.len() as f64
    }

    /// The same CDF evaluated on another grid.
    pub fn on_grid(&self, grid: &[f64]) -> CoeffCdf {
        CoeffCdf {
            points: grid.iter().map(|&x| (x, self.fraction_below(x))).collect(),
            magnitudes: self.magnitudes.clone(),
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        *self.magnitudes.last().expect("non-empty")
    }
}

/// `size` evenly spaced points from 0 to just above `max`, so the last
/// point counts every coefficient.
pub fn cdf_grid(max: f64, size: usize) -> Vec<f64> {
    let top = max.next_up();
    if size <= 1 {
        return vec![top];
    }
    (0..size)
        .map(|k| if k + 1 == size { top } else { max * k as f64 / (size - 1) as f64 })
        .collect()
}

pub fn coefficient_cdf(coeffs: &[f64], grid_size: usize) -> Result<CoeffCdf> {
    if coeffs.is_empty() {
        return Err(MedError::InvalidData("no coefficients".into()));
    }
    if grid_size == 0 {
        return Err(MedError::InvalidParameter("grid size must be positive".into()));
    }
    let mut magnitudes: Vec<f64> = coeffs.iter().map(|c| c.abs()).collect();
    if magnitudes.iter().any(|m| m.is_nan()) {
        return Err(MedError::InvalidData("NaN coefficient".into()));
    }
    magnitudes.sort_by(f64::total_cmp);
    let cdf = CoeffCdf {
        points: Vec::new(),
        magnitudes,
    };
    let grid = cdf_grid(cdf.max_magnitude(), grid_size);
    Ok(cdf.on_grid(&grid))
}

/// Mean of `max(0, |pred − y| − ε)`.
pub fn eps_insensitive_loss(pred: &[f64], y: &[f64], epsilon: f64) -> Result<f64> {
    check_lengths(pred.len(), y.len())?;
    if !(epsilon >= 0.0) {
        return Err(MedError::InvalidParameter(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    if pred.is_empty() {
        return Err(MedError::InvalidData("empty prediction vector".into()));
    }
    let total: f64 = pred.iter().zip(y).map(|(p, t)| ((p - t).abs() - epsilon).max(0.0)).sum();
    Ok(total / pred.len() as f64)
}

pub fn rmse(pred: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), y.len())?;
    if pred.is_empty() {
        return Err(MedError::InvalidData("empty prediction vector".into()));
    }
    let sq: f64 = pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sq / pred.len() as f64).sqrt())
}

/// Fraction of ±1 predictions equal to the labels.
pub fn accuracy(pred: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), y.len())?;
    if pred.is_empty() {
        return Err(MedError::InvalidData("empty prediction vector".into()));
    }
    Ok(pred.iter().zip(y).filter(|(p, t)| p == t).count() as f64 / pred.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        check_lengths(self.coefficients.len(), x.len())?;
        Ok(x.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>() + self.bias)
    }

    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        (0..d.len()).map(|t| self.predict(&d.row(t).to_vec())).collect()
    }
}

/// Ordinary least squares with an intercept, via the normal equations
/// with a `1e−10` ridge so rank-deficient designs still solve.
pub fn least_squares_fit(train: &Dataset) -> Result<LinearFit> {
    let (t, n) = (train.len(), train.n_features());
    let z = DMatrix::from_fn(t, n + 1, |r, c| if c < n { train.examples()[[r, c]] } else { 1.0 });
    let y = DVector::from_iterator(t, train.targets().iter().copied());
    let mut gram = z.transpose() * &z;
    for i in 0..=n {
        gram[(i, i)] += LS_JITTER;
    }
    let rhs = z.transpose() * y;
    let beta = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| MedError::Numerical("normal equations are singular".into()))?,
    };
    Ok(LinearFit {
        coefficients: beta.iter().take(n).copied().collect(),
        bias: beta[n],
    })
}

/// Writes rows of numbers under a header row.
pub fn write_table(path: impl AsRef<Path>, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e: csv::Error| MedError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(MedError::DimensionMismatch {
                expected: header.len(),
                actual: row.len(),
            });
        }
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io_err)?;
    }
    w.flush().map_err(|source| MedError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_roc_csv(curve: &RocCurve, path: impl AsRef<Path>) -> Result<()> {
    write_table(path, &["fpr", "tpr"], curve.points.iter().map(|&(a, b)| vec![a, b]))
}

pub fn write_cdf_csv(cdf: &CoeffCdf, path: impl AsRef<Path>) -> Result<()> {
    write_table(path, &["x", "fraction"], cdf.points.iter().map(|&(a, b)| vec![a, b]))
}

/// Flat name → number map plus a `config` object echoing the run settings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub values: BTreeMap<String, f64>,
    pub config: Value,
}

impl Metrics {
    pub fn new(config: Value) -> Self {
        Self {
            values: BTreeMap::new(),
            config,
        }
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn to_json(&self) -> String {
        let mut obj = Map::new();
        for (k, v) in &self.values {
            obj.insert(k.clone(), Value::from(*v));
        }
        obj.insert("config".into(), self.config.clone());
        serde_json::to_string_pretty(&Value::Object(obj)).expect("metrics serialize")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|source| MedError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
