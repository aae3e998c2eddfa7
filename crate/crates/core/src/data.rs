//! Datasets, explicit polynomial expansion, standardization and the
//! synthetic generators used by the demos and the acceptance suite.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{MedError, Result};

/// Learning task; fixes how targets are interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Classification => f.write_str("classification"),
            Task::Regression => f.write_str("regression"),
        }
    }
}

impl FromStr for Task {
    type Err = MedError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" => Ok(Task::Classification),
            "regression" => Ok(Task::Regression),
            other => Err(MedError::InvalidParameter(format!("unknown task `{other}`"))),
        }
    }
}

/// A T×n design matrix with its targets.
///
/// Rows are examples. In classification mode every target is exactly ±1.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    examples: Array2<f64>,
    targets: Array1<f64>,
    feature_names: Vec<String>,
    task: Task,
}

impl Dataset {
    pub fn new(
        examples: Array2<f64>,
        targets: Array1<f64>,
        feature_names: Vec<String>,
        task: Task,
    ) -> Result<Self> {
        let (t, n) = examples.dim();
        if t == 0 || n == 0 {
            return Err(MedError::InvalidData(format!(
                "need at least one example and one feature, got {t}x{n}"
            )));
        }
        if targets.len() != t {
            return Err(MedError::DimensionMismatch {
                expected: t,
                actual: targets.len(),
            });
        }
        if feature_names.len() != n {
            return Err(MedError::DimensionMismatch {
                expected: n,
                actual: feature_names.len(),
            });
        }
        if let Some(((row, col), v)) = examples.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(MedError::InvalidData(format!(
                "non-finite value {v} at row {row}, column {col}"
            )));
        }
        for (row, &y) in targets.iter().enumerate() {
            if !y.is_finite() {
                return Err(MedError::InvalidData(format!("non-finite target at row {row}")));
            }
            if task == Task::Classification && y != 1.0 && y != -1.0 {
                return Err(MedError::InvalidData(format!(
                    "classification target {y} at row {row} is not +1 or -1"
                )));
            }
        }
        Ok(Self {
            examples,
            targets,
            feature_names,
            task,
        })
    }

    /// Builds a dataset with generated feature names `x1..xn`.
    pub fn from_rows(rows: Vec<Vec<f64>>, targets: Vec<f64>, task: Task) -> Result<Self> {
        let t = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(MedError::DimensionMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let examples = Array2::from_shape_vec((t, n), flat)
            .map_err(|e| MedError::InvalidData(e.to_string()))?;
        let names = (1..=n).map(|i| format!("x{i}")).collect();
        Self::new(examples, Array1::from(targets), names, task)
    }

    pub fn examples(&self) -> &Array2<f64> {
        &self.examples
    }

    pub fn targets(&self) -> &Array1<f64> {
        &self.targets
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn len(&self) -> usize {
        self.examples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.nrows() == 0
    }

    pub fn n_features(&self) -> usize {
        self.examples.ncols()
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, f64> {
        self.examples.row(t)
    }

    /// Copies the listed rows, in order, into a new dataset.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let examples = self.examples.select(Axis(0), rows);
        let targets = self.targets.select(Axis(0), rows);
        Self::new(examples, targets, self.feature_names.clone(), self.task)
    }

    /// Keeps only the listed feature columns.
    pub fn select_features(&self, cols: &[usize]) -> Result<Self> {
        let examples = self.examples.select(Axis(1), cols);
        let names = cols.iter().map(|&c| self.feature_names[c].clone()).collect();
        Self::new(examples, self.targets.clone(), names, self.task)
    }

    /// Splits into the first `train` rows and the remainder.
    pub fn split(&self, train: usize) -> Result<(Self, Self)> {
        if train == 0 || train >= self.len() {
            return Err(MedError::InvalidParameter(format!(
                "split point {train} must lie strictly inside 0..{}",
                self.len()
            )));
        }
        let head: Vec<usize> = (0..train).collect();
        let tail: Vec<usize> = (train..self.len()).collect();
        Ok((self.select(&head)?, self.select(&tail)?))
    }
}

/// Target column selector for [`load_csv`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    Index(usize),
    Last,
}

impl FromStr for TargetColumn {
    type Err = MedError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.parse::<usize>() {
            Ok(i) => TargetColumn::Index(i),
            Err(_) if s == "last" => TargetColumn::Last,
            Err(_) => TargetColumn::Name(s.to_string()),
        })
    }
}

fn parse_cell(raw: &str) -> Option<f64> {
    // accept the typographic minus sign as well
    raw.trim().replace('\u{2212}', "-").parse::<f64>().ok()
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let file = std::fs::File::open(path).map_err(|source| MedError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let parse_err = |row: usize, message: String| MedError::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(0, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(parse_err(0, "missing header row".into()));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        if record.len() != headers.len() {
            return Err(parse_err(
                row,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(col, raw)| {
                parse_cell(raw).ok_or_else(|| {
                    parse_err(row, format!("non-numeric value `{raw}` in column `{}`", headers[col]))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    Ok(Table { headers, rows })
}

/// Reads a comma-separated file with one mandatory header row.
///
/// All columns other than the target become features, in header order.
/// Rows are numbered from 1 (the first data row) in error messages.
pub fn load_csv(path: impl AsRef<Path>, target: &TargetColumn, task: Task) -> Result<Dataset> {
    let path = path.as_ref();
    let table = read_table(path)?;
    let headers = table.headers;
    let parse_err = |row: usize, message: String| MedError::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };
    let target_idx = match target {
        TargetColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(0, format!("no column named `{name}`")))?,
        TargetColumn::Index(i) if *i < headers.len() => *i,
        TargetColumn::Index(i) => {
            return Err(parse_err(
                0,
                format!("target column {i} out of range ({} columns)", headers.len()),
            ))
        }
        TargetColumn::Last => headers.len() - 1,
    };
    if headers.len() < 2 {
        return Err(parse_err(0, "need at least one feature column".into()));
    }

    let n = headers.len() - 1;
    let mut flat = Vec::with_capacity(table.rows.len() * n);
    let mut targets = Vec::with_capacity(table.rows.len());
    for (i, values) in table.rows.into_iter().enumerate() {
        for (col, value) in values.into_iter().enumerate() {
            if col == target_idx {
                if task == Task::Classification && value != 1.0 && value != -1.0 {
                    return Err(parse_err(
                        i + 1,
                        format!("classification label `{value}` is not +1 or -1"),
                    ));
                }
                targets.push(value);
            } else {
                flat.push(value);
            }
        }
    }
    let examples = Array2::from_shape_vec((targets.len(), n), flat)
        .map_err(|e| MedError::InvalidData(e.to_string()))?;
    let names = headers
        .into_iter()
        .enumerate()
        .filter(|&(c, _)| c != target_idx)
        .map(|(_, h)| h)
        .collect();
    Dataset::new(examples, Array1::from(targets), names, task)
}

/// Reads a headed CSV in which every column is an input feature.
pub fn load_features_csv(path: impl AsRef<Path>) -> Result<(Vec<String>, Array2<f64>)> {
    let table = read_table(path.as_ref())?;
    let (t, n) = (table.rows.len(), table.headers.len());
    let flat: Vec<f64> = table.rows.into_iter().flatten().collect();
    let x = Array2::from_shape_vec((t, n), flat).map_err(|e| MedError::InvalidData(e.to_string()))?;
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(MedError::InvalidData(format!("non-finite value {v}")));
    }
    Ok((table.headers, x))
}

/// Writes a dataset as CSV with the target in the last column.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>, target_name: &str) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e: csv::Error| MedError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    let mut header: Vec<&str> = d.feature_names.iter().map(String::as_str).collect();
    header.push(target_name);
    w.write_record(&header).map_err(io_err)?;
    for (row, y) in d.examples.rows().into_iter().zip(d.targets.iter()) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(y.to_string());
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(|source| MedError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Component-wise powers `[x_i, x_i^2, …, x_i^m]` for each feature in turn.
pub fn expand_row(x: &[f64], degree: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * degree);
    for &v in x {
        let mut p = 1.0;
        for _ in 0..degree {
            p *= v;
            out.push(p);
        }
    }
    out
}

/// Explicit polynomial feature map without cross terms.
///
/// Output column `i*m + (k-1)` holds `x_i^k`. Degree 1 returns the input unchanged.
pub fn polynomial_expand(d: &Dataset, degree: usize) -> Result<Dataset> {
    if degree == 0 {
        return Err(MedError::InvalidParameter(
            "polynomial degree must be at least 1".into(),
        ));
    }
    if degree == 1 {
        return Ok(d.clone());
    }
    let (t, n) = d.examples.dim();
    let mut examples = Array2::zeros((t, n * degree));
    for (src, mut dst) in d.examples.rows().into_iter().zip(examples.rows_mut()) {
        let expanded = expand_row(src.as_slice().expect("standard layout"), degree);
        dst.assign(&Array1::from(expanded));
    }
    let names = d
        .feature_names
        .iter()
        .flat_map(|name| (1..=degree).map(move |k| format!("{name}^{k}")))
        .collect();
    Dataset::new(examples, d.targets.clone(), names, d.task)
}

/// Per-feature affine map `x -> (x - shift) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    /// Features whose spread was zero; their scale is pinned to 1.
    pub constant: Vec<bool>,
}

impl ScalingParams {
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.shift.len() {
            return Err(MedError::DimensionMismatch {
                expected: self.shift.len(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn invert(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.shift.len() {
            return Err(MedError::DimensionMismatch {
                expected: self.shift.len(),
                actual: z.len(),
            });
        }
        Ok(z.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| v * s + m)
            .collect())
    }

    pub fn apply_dataset(&self, d: &Dataset) -> Result<Dataset> {
        if d.n_features() != self.shift.len() {
            return Err(MedError::DimensionMismatch {
                expected: self.shift.len(),
                actual: d.n_features(),
            });
        }
        let mut examples = d.examples.clone();
        for (j, mut col) in examples.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.shift[j], self.scale[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Dataset::new(examples, d.targets.clone(), d.feature_names.clone(), d.task)
    }
}

/// Centers each feature and divides by its population standard deviation
/// (divisor T). Constant features keep scale 1 and are flagged.
pub fn standardize(d: &Dataset) -> Result<(Dataset, ScalingParams)> {
    let t = d.len();
    if t < 2 {
        return Err(MedError::InvalidData(
            "standardization needs at least two examples".into(),
        ));
    }
    let mut shift = Vec::with_capacity(d.n_features());
    let mut scale = Vec::with_capacity(d.n_features());
    let mut constant = Vec::with_capacity(d.n_features());
    for col in d.examples.columns() {
        let mean = col.sum() / t as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t as f64;
        let std = var.sqrt();
        let flat = std <= 1e-12 * mean.abs().max(1.0);
        shift.push(mean);
        scale.push(if flat { 1.0 } else { std });
        constant.push(flat);
    }
    let params = ScalingParams {
        shift,
        scale,
        constant,
    };
    Ok((params.apply_dataset(d)?, params))
}

/// Linear decorrelation `z -> L⁻¹z`, where `L Lᵀ` is the second-moment
/// matrix of the (already centered) training features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Whitening {
    /// Rows of the lower-triangular `L⁻¹`.
    pub matrix: Vec<Vec<f64>>,
}

impl Whitening {
    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.matrix.len() {
            return Err(MedError::DimensionMismatch {
                expected: self.matrix.len(),
                actual: z.len(),
            });
        }
        Ok(self
            .matrix
            .iter()
            .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn apply_dataset(&self, d: &Dataset) -> Result<Dataset> {
        let rows = (0..d.len()).map(|t| self.apply(&d.row(t).to_vec())).collect::<Result<Vec<_>>>()?;
        let names = (1..=self.matrix.len()).map(|k| format!("white{k}")).collect();
        let mut out = Dataset::from_rows(rows, d.targets.to_vec(), d.task)?;
        out.feature_names = names;
        Ok(out)
    }
}

/// Fits a [`Whitening`] to `d` and applies it. Fails when the features are
/// linearly dependent (including any constant feature).
pub fn whiten(d: &Dataset) -> Result<(Dataset, Whitening)> {
    let n = d.n_features();
    let t = d.len() as f64;
    let x = nalgebra::DMatrix::from_fn(d.len(), n, |r, c| d.examples[[r, c]]);
    let moment = x.transpose() * &x / t;
    let chol = moment.cholesky().ok_or_else(|| {
        MedError::InvalidData("cannot whiten: features are linearly dependent".into())
    })?;
    let inv = chol
        .l()
        .solve_lower_triangular(&nalgebra::DMatrix::identity(n, n))
        .ok_or_else(|| MedError::Numerical("singular whitening factor".into()))?;
    let matrix = (0..n).map(|r| (0..n).map(|c| inv[(r, c)]).collect()).collect();
    let w = Whitening { matrix };
    Ok((w.apply_dataset(d)?, w))
}

/// `sin|x| / |x|`, continuous at zero.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.abs().sin() / x.abs()
    }
}

/// Inputs uniform on [-10, 10], targets `sinc(x)` plus Gaussian noise.
pub fn gen_sinc(count: usize, noise_std: f64, seed: u64) -> Result<Dataset> {
    if count == 0 {
        return Err(MedError::InvalidParameter("count must be positive".into()));
    }
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(MedError::InvalidParameter(format!(
            "noise_std must be a finite non-negative number, got {noise_std}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_std).map_err(|e| MedError::InvalidParameter(e.to_string()))?;
    let mut xs = Vec::with_capacity(count);
    let mut ys = Vec::with_capacity(count);
    for _ in 0..count {
        let x: f64 = rng.random_range(-10.0..=10.0);
        let y = sinc(x) + if noise_std > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        xs.push(x);
        ys.push(y);
    }
    Dataset::new(
        Array2::from_shape_vec((count, 1), xs).expect("shape"),
        Array1::from(ys),
        vec!["x".to_string()],
        Task::Regression,
    )
}

/// Train/test pair with the ground truth that generated it.
#[derive(Clone, Debug)]
pub struct PlantedTask {
    pub train: Dataset,
    pub test: Dataset,
    /// Indices of the features the generating rule depends on, ascending.
    pub informative: Vec<usize>,
    /// Generating coefficients, zero outside `informative`.
    pub weights: Vec<f64>,
}

/// Writes planted feature indices as a JSON array of integers.
pub fn write_planted_indices(path: impl AsRef<Path>, indices: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(indices).expect("integer array serializes");
    std::fs::write(path, text).map_err(|source| MedError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Binary features with labels from a planted sparse linear rule.
///
/// Each feature is an independent fair coin. `k_informative` features get
/// weights of magnitude in [1, 2] with random sign; the label is the sign of
/// the centered weighted sum plus Gaussian noise at 30% of its spread.
pub fn gen_sparse_binary(
    train: usize,
    test: usize,
    n: usize,
    k_informative: usize,
    seed: u64,
) -> Result<PlantedTask> {
    if train == 0 || test == 0 || n == 0 || k_informative == 0 {
        return Err(MedError::InvalidParameter(
            "train, test, n and k_informative must be positive".into(),
        ));
    }
    if k_informative > n {
        return Err(MedError::InvalidParameter(format!(
            "k_informative ({k_informative}) exceeds the number of features ({n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut informative = sample(&mut rng, n, k_informative).into_vec();
    informative.sort_unstable();
    let mut weights = vec![0.0; n];
    for &i in &informative {
        let magnitude: f64 = rng.random_range(1.0..2.0);
        weights[i] = if rng.random_bool(0.5) { magnitude } else { -magnitude };
    }
    let clean_std = (weights.iter().map(|w| w * w).sum::<f64>() / 4.0).sqrt();
    let noise = Normal::new(0.0, 0.3 * clean_std).expect("positive std");

    let mut draw = |count: usize| -> Result<Dataset> {
        let mut flat = Vec::with_capacity(count * n);
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let mut score = noise.sample(&mut rng);
            for w in &weights {
                let bit = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
                score += w * (bit - 0.5);
                flat.push(bit);
            }
            labels.push(if score >= 0.0 { 1.0 } else { -1.0 });
        }
        let names = (0..n).map(|i| format!("b{i}")).collect();
        Dataset::new(
            Array2::from_shape_vec((count, n), flat).expect("shape"),
            Array1::from(labels),
            names,
            Task::Classification,
        )
    };
    let train = draw(train)?;
    let test = draw(test)?;
    Ok(PlantedTask {
        train,
        test,
        informative,
        weights,
    })
}

/// Housing-like regression: 13 correlated continuous inputs, a sparse
/// response with one quadratic effect, Laplace noise and occasional gross
/// outliers in the targets.
pub fn gen_housing_like(train: usize, test: usize, seed: u64) -> Result<PlantedTask> {
    const N: usize = 13;
    if train == 0 || test == 0 {
        return Err(MedError::InvalidParameter("train and test must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let informative = vec![0, 5, 7, 12];
    let mut weights = vec![0.0; N];
    weights[0] = -3.5;
    weights[5] = 6.0;
    weights[7] = -2.5;
    weights[12] = -4.0;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let outlier = Normal::new(0.0, 20.0).expect("outlier spread");

    let mut draw = |count: usize| -> Result<Dataset> {
        let mut flat = Vec::with_capacity(count * N);
        let mut ys = Vec::with_capacity(count);
        for _ in 0..count {
            let z: Vec<f64> = (0..N).map(|_| std_normal.sample(&mut rng)).collect();
            let x: Vec<f64> = (0..N)
                .map(|j| if j == 0 { z[0] } else { 0.8 * z[j] + 0.6 * z[j - 1] })
                .collect();
            let mut y = 22.0 + 1.5 * x[5] * x[5];
            for &j in &informative {
                y += weights[j] * x[j];
            }
            // Laplace(0, 1.5) by inverse transform
            let u: f64 = rng.random_range(-0.5..0.5);
            y -= 1.5 * u.signum() * (1.0 - 2.0 * u.abs()).ln();
            if rng.random_bool(0.06) {
                y += outlier.sample(&mut rng);
            }
            flat.extend_from_slice(&x);
            ys.push(y);
        }
        let names = (1..=N).map(|i| format!("h{i}")).collect();
        Dataset::new(
            Array2::from_shape_vec((count, N), flat).expect("shape"),
            Array1::from(ys),
            names,
            Task::Regression,
        )
    };
    let train = draw(train)?;
    let test = draw(test)?;
    Ok(PlantedTask {
        train,
        test,
        informative,
        weights,
    })
}

/// Two identity-covariance Gaussian clouds centred at `±offset·1`,
/// alternating positive and negative examples.
pub fn gen_gaussian_clouds(per_class: usize, dim: usize, offset: f64, seed: u64) -> Result<Dataset> {
    if per_class == 0 || dim == 0 {
        return Err(MedError::InvalidParameter(
            "per_class and dim must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut flat = Vec::with_capacity(2 * per_class * dim);
    let mut labels = Vec::with_capacity(2 * per_class);
    for _ in 0..per_class {
        for y in [1.0, -1.0] {
            for _ in 0..dim {
                flat.push(y * offset + std_normal.sample(&mut rng));
            }
            labels.push(y);
        }
    }
    let names = (1..=dim).map(|i| format!("g{i}")).collect();
    Dataset::new(
        Array2::from_shape_vec((2 * per_class, dim), flat).expect("shape"),
        Array1::from(labels),
        names,
        Task::Classification,
    )
}
