//! Command-line front end and the experiment recipes behind the `demo-*`
//! subcommands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::{json, Value};

use crate::data::{
    expand_row, gen_gaussian_clouds, gen_housing_like, gen_sinc, gen_sparse_binary, load_csv, load_features_csv, sinc,
    write_csv, write_planted_indices, Dataset, TargetColumn, Task,
};
use crate::error::{MedError, Result};
use crate::eval::{
    accuracy, cdf_grid, coefficient_cdf, eps_insensitive_loss, least_squares_fit, rmse, roc_curve, write_cdf_csv,
    write_roc_csv, write_table, CoeffCdf, Metrics, RocCurve, DEFAULT_CDF_GRID,
};
use crate::expfam::{fit_generative, GenerativeMedModel, GENERATIVE_MODE};
use crate::model::{fit_with, model_mode, MedModel, Prediction, Preprocessing};
use crate::objective::{BiasMode, Hyperparams, Variant};
use crate::optimizer::{Method, OptimizerConfig};

#[derive(Parser, Debug)]
#[command(name = "med", version, about = "Maximum entropy discrimination with feature selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a model on a CSV dataset and write the model file.
    Train(TrainArgs),
    /// Score a CSV dataset with a saved model.
    Predict(PredictArgs),
    /// Evaluate a saved model on a labelled CSV dataset and write metrics JSON.
    Eval(EvalArgs),
    /// Write the ROC curve of a classifier on a labelled dataset.
    Roc(RocArgs),
    /// Write the empirical CDF of a model's coefficient magnitudes.
    Cdf(CdfArgs),
    /// Fit a degree-8 polynomial regression to sinc samples.
    DemoSinc(DemoArgs),
    /// Compare feature selection on and off on a planted sparse task.
    DemoSparse(DemoArgs),
    /// Fit the Gaussian generative discriminant to two clouds.
    DemoGenerative(DemoArgs),
    /// Compare both MED arms and least squares on a housing-like regression.
    DemoHousing(DemoArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Classification,
    Regression,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Classification => Task::Classification,
            TaskArg::Regression => Task::Regression,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    #[value(alias = "axis_parallel")]
    AxisParallel,
    #[value(alias = "bounded_qp")]
    BoundedQp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BiasModeArg {
    Soft,
    Hard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    /// Gaussian weight prior, no feature switches.
    Plain,
    /// Bernoulli(p0) switch on every feature.
    Selection,
}

/// Model and optimizer settings. Unset flags keep the command's defaults.
#[derive(Args, Clone, Debug, Default)]
pub struct HyperArgs {
    /// Margin penalty scale; multipliers live in [0, c).
    #[arg(long)]
    pub c: Option<f64>,
    /// Half-width of the regression tube.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Prior probability that a feature is switched on.
    #[arg(long)]
    pub p0: Option<f64>,
    /// Bias prior scale; the soft penalty uses σ² in classification and σ in regression.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum)]
    pub bias_mode: Option<BiasModeArg>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    pub optimizer: Option<MethodArg>,
    /// Stop once a sweep improves the objective by less than tol·max(1, |J|).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl HyperArgs {
    /// Overrides `h` and `opt` with every flag that was given, then validates.
    pub fn apply(&self, mut h: Hyperparams, mut opt: OptimizerConfig) -> Result<(Hyperparams, OptimizerConfig)> {
        if let Some(v) = self.c {
            h.c = v;
        }
        if let Some(v) = self.epsilon {
            h.epsilon = v;
        }
        if let Some(v) = self.p0 {
            h.p0 = v;
        }
        if let Some(v) = self.sigma {
            h.sigma = v;
        }
        if let Some(v) = self.bias_mode {
            h.bias_mode = match v {
                BiasModeArg::Soft => BiasMode::Soft,
                BiasModeArg::Hard => BiasMode::Hard,
            };
        }
        if let Some(v) = self.variant {
            h.variant = match v {
                VariantArg::Plain => Variant::Plain,
                VariantArg::Selection => Variant::Selection,
            };
        }
        if let Some(v) = self.optimizer {
            opt.method = match v {
                MethodArg::AxisParallel => Method::AxisParallel,
                MethodArg::BoundedQp => Method::BoundedQp,
            };
        }
        if let Some(v) = self.tol {
            opt.tol = v;
        }
        if let Some(v) = self.max_iter {
            opt.max_iter = v;
        }
        opt.seed = self.seed;
        h.validate()?;
        opt.validate()?;
        Ok((h, opt))
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "classification")]
    pub task: TaskArg,
    /// Target column: a header name, a 0-based index, or `last`.
    #[arg(long, default_value = "last")]
    pub target: TargetColumn,
    /// Component-wise polynomial degree of the input expansion.
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    /// Standardize the (expanded) features using training statistics.
    #[arg(long)]
    pub standardize: bool,
    /// Standardize, then decorrelate the features with the inverse Cholesky
    /// factor of their training covariance.
    #[arg(long)]
    pub whiten: bool,
    /// Where to write the model file.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Input CSV. Every column is a feature unless --target names one to skip.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: Option<TargetColumn>,
    /// Output CSV with columns `score,prediction`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "last")]
    pub target: TargetColumn,
    /// Also fit least squares on this training CSV (regression only).
    #[arg(long, value_name = "TRAIN_CSV")]
    pub baseline: Option<PathBuf>,
    /// Metrics JSON output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RocArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "last")]
    pub target: TargetColumn,
    /// Output CSV with columns `fpr,tpr`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CdfArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CDF_GRID)]
    pub grid: usize,
    /// Output CSV with columns `x,fraction`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// Directory for the generated data, curves and metrics.
    #[arg(long, default_value = "demo-output")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

/// Sets up logging from `MED_LOG` (`quiet`, `info` or `debug`; warnings
/// otherwise).
pub fn init_logging() {
    let level = match std::env::var("MED_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Error,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging();
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Roc(a) => cmd_roc(&a),
        Command::Cdf(a) => cmd_cdf(&a),
        Command::DemoSinc(a) => cmd_demo_sinc(&a),
        Command::DemoSparse(a) => cmd_demo_sparse(&a),
        Command::DemoGenerative(a) => cmd_demo_generative(&a),
        Command::DemoHousing(a) => cmd_demo_housing(&a),
    }
}

fn config_echo(h: &Hyperparams, opt: &OptimizerConfig) -> Value {
    json!({ "hyperparams": h, "optimizer": opt })
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let (h, opt) = a.hyper.apply(Hyperparams::default(), OptimizerConfig::default())?;
    if a.degree == 0 {
        return Err(MedError::InvalidParameter("degree must be at least 1".into()));
    }
    let data = load_csv(&a.data, &a.target, a.task.into())?;
    let prep = Preprocessing {
        degree: a.degree,
        standardize: a.standardize,
        whiten: a.whiten,
    };
    let model = fit_with(&data, &prep, &h, &opt)?;
    model.save(&a.out)?;
    println!(
        "objective={} iterations={} converged={}",
        model.objective, model.iterations, model.converged
    );
    Ok(())
}

/// Either kind of saved model.
enum AnyModel {
    Linear(MedModel),
    Generative(GenerativeMedModel),
}

impl AnyModel {
    fn load(path: &Path) -> Result<Self> {
        if model_mode(path)? == GENERATIVE_MODE {
            Ok(AnyModel::Generative(GenerativeMedModel::load(path)?))
        } else {
            Ok(AnyModel::Linear(MedModel::load(path)?))
        }
    }

    fn task(&self) -> Task {
        match self {
            AnyModel::Linear(m) => m.task,
            AnyModel::Generative(_) => Task::Classification,
        }
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        match self {
            AnyModel::Linear(m) => m.predict(x),
            AnyModel::Generative(m) => m.predict(x),
        }
    }

    fn predict_all(&self, d: &Dataset) -> Result<Vec<Prediction>> {
        (0..d.len()).map(|t| self.predict(&d.row(t).to_vec())).collect()
    }

    fn config(&self) -> Value {
        match self {
            AnyModel::Linear(m) => json!({ "mode": m.task, "hyperparams": m.hyperparams, "degree": m.degree }),
            AnyModel::Generative(m) => json!({ "mode": GENERATIVE_MODE, "hyperparams": m.hyperparams }),
        }
    }
}

fn load_labelled(model: &AnyModel, path: &Path, target: &TargetColumn) -> Result<Dataset> {
    load_csv(path, target, model.task())
}

pub fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let model = AnyModel::load(&a.model)?;
    let rows: Vec<Vec<f64>> = match &a.target {
        Some(target) => {
            let d = load_csv(&a.data, target, Task::Regression)?;
            (0..d.len()).map(|t| d.row(t).to_vec()).collect()
        }
        None => {
            let (_, x) = load_features_csv(&a.data)?;
            x.rows().into_iter().map(|r| r.to_vec()).collect()
        }
    };
    let preds = rows.iter().map(|x| model.predict(x)).collect::<Result<Vec<_>>>()?;
    write_table(&a.out, &["score", "prediction"], preds.iter().map(|p| vec![p.score, p.value]))?;
    info!("wrote {} predictions to {}", preds.len(), a.out.display());
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let model = AnyModel::load(&a.model)?;
    let data = load_labelled(&model, &a.data, &a.target)?;
    let preds = model.predict_all(&data)?;
    let y = data.targets().to_vec();
    let mut config = model.config();
    config["data"] = json!(a.data);
    let mut metrics = Metrics::new(config);
    metrics.insert("n", data.len() as f64);
    match model.task() {
        Task::Classification => {
            if a.baseline.is_some() {
                return Err(MedError::InvalidParameter("--baseline applies to regression models only".into()));
            }
            let values: Vec<f64> = preds.iter().map(|p| p.value).collect();
            let scores: Vec<f64> = preds.iter().map(|p| p.score).collect();
            metrics.insert("accuracy", accuracy(&values, &y)?);
            metrics.insert("auc", roc_curve(&scores, &y)?.auc);
        }
        Task::Regression => {
            let AnyModel::Linear(m) = &model else { unreachable!("generative models classify") };
            let eps = m.hyperparams.epsilon;
            let values: Vec<f64> = preds.iter().map(|p| p.value).collect();
            metrics.insert("rmse", rmse(&values, &y)?);
            metrics.insert("med_eps_loss", eps_insensitive_loss(&values, &y, eps)?);
            if let Some(train_path) = &a.baseline {
                let train = load_csv(train_path, &a.target, Task::Regression)?;
                let ls = least_squares_fit(&train)?;
                let ls_pred = ls.predict_dataset(&data)?;
                metrics.insert("ls_rmse", rmse(&ls_pred, &y)?);
                metrics.insert("ls_eps_loss", eps_insensitive_loss(&ls_pred, &y, eps)?);
                metrics.config["baseline"] = json!(train_path);
            }
        }
    }
    metrics.write(&a.out)?;
    for (k, v) in &metrics.values {
        println!("{k}={v}");
    }
    Ok(())
}

pub fn cmd_roc(a: &RocArgs) -> Result<()> {
    let model = AnyModel::load(&a.model)?;
    if model.task() != Task::Classification {
        return Err(MedError::ModeMismatch {
            expected: Task::Classification.to_string(),
            found: model.task().to_string(),
        });
    }
    let data = load_labelled(&model, &a.data, &a.target)?;
    let scores: Vec<f64> = model.predict_all(&data)?.iter().map(|p| p.score).collect();
    let curve = roc_curve(&scores, data.targets().as_slice().expect("contiguous"))?;
    write_roc_csv(&curve, &a.out)?;
    println!("auc={}", curve.auc);
    Ok(())
}

pub fn cmd_cdf(a: &CdfArgs) -> Result<()> {
    let model = MedModel::load(&a.model)?;
    let cdf = coefficient_cdf(&model.effective, a.grid)?;
    write_cdf_csv(&cdf, &a.out)?;
    println!("max_abs_coefficient={}", cdf.max_magnitude());
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| MedError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Runs two independent closures, concurrently when threads are available.
fn both<A, B, FA, FB>(fa: FA, fb: FB) -> (A, B)
where
    A: Send,
    B: Send,
    FA: FnOnce() -> A + Send,
    FB: FnOnce() -> B + Send,
{
    std::thread::scope(|s| {
        let hb = s.spawn(fb);
        let a = fa();
        (a, hb.join().expect("worker thread panicked"))
    })
}

// ---------------------------------------------------------------------------
// sinc

pub const SINC_POINTS: usize = 100;
pub const SINC_NOISE: f64 = 0.2;
pub const SINC_DEGREE: usize = 8;
pub const SINC_GRID: usize = 1000;

pub fn sinc_defaults() -> (Hyperparams, OptimizerConfig) {
    (
        Hyperparams {
            c: 20.0,
            epsilon: 0.03,
            sigma: 10.0,
            variant: Variant::Plain,
            ..Hyperparams::default()
        },
        OptimizerConfig::default(),
    )
}

#[derive(Clone, Debug)]
pub struct SincArm {
    pub model: MedModel,
    pub train: Dataset,
    pub train_rmse: f64,
    /// RMSE against the noise-free function on an evenly spaced grid.
    pub grid_rmse: f64,
}

#[derive(Clone, Debug)]
pub struct SincReport {
    pub clean: SincArm,
    pub noisy: SincArm,
}

fn sinc_grid() -> Vec<f64> {
    (0..SINC_GRID).map(|k| -10.0 + 20.0 * k as f64 / (SINC_GRID - 1) as f64).collect()
}

fn sinc_arm(noise: f64, seed: u64, h: &Hyperparams, opt: &OptimizerConfig) -> Result<SincArm> {
    let train = gen_sinc(SINC_POINTS, noise, seed)?;
    let prep = Preprocessing {
        degree: SINC_DEGREE,
        standardize: true,
        whiten: true,
    };
    let model = fit_with(&train, &prep, h, opt)?;
    let pred: Vec<f64> = model.predictions(&train)?.iter().map(|p| p.value).collect();
    let train_rmse = rmse(&pred, train.targets().as_slice().expect("contiguous"))?;
    let grid = sinc_grid();
    let grid_pred = grid.iter().map(|&x| model.predict(&[x]).map(|p| p.value)).collect::<Result<Vec<_>>>()?;
    let truth: Vec<f64> = grid.iter().map(|&x| sinc(x)).collect();
    let grid_rmse = rmse(&grid_pred, &truth)?;
    Ok(SincArm {
        model,
        train,
        train_rmse,
        grid_rmse,
    })
}

/// Noise-free and noisy sinc fits with the same settings.
pub fn demo_sinc(h: &Hyperparams, opt: &OptimizerConfig) -> Result<SincReport> {
    let seed = opt.seed;
    let (clean, noisy) = both(
        || sinc_arm(0.0, seed, h, opt),
        || sinc_arm(SINC_NOISE, seed.wrapping_add(1), h, opt),
    );
    Ok(SincReport {
        clean: clean?,
        noisy: noisy?,
    })
}

fn write_sinc_curve(arm: &SincArm, path: &Path) -> Result<()> {
    let mut rows = Vec::with_capacity(SINC_POINTS + SINC_GRID);
    for t in 0..arm.train.len() {
        let x = arm.train.row(t)[0];
        rows.push(vec![x, arm.train.targets()[t], arm.model.predict(&[x])?.value]);
    }
    for x in sinc_grid() {
        rows.push(vec![x, sinc(x), arm.model.predict(&[x])?.value]);
    }
    write_table(path, &["x", "y_true", "y_pred"], rows)
}

pub fn cmd_demo_sinc(a: &DemoArgs) -> Result<()> {
    let (h0, o0) = sinc_defaults();
    let (h, opt) = a.hyper.apply(h0, o0)?;
    let report = demo_sinc(&h, &opt)?;
    ensure_dir(&a.out_dir)?;
    write_sinc_curve(&report.clean, &a.out_dir.join("sinc_clean.csv"))?;
    write_sinc_curve(&report.noisy, &a.out_dir.join("sinc_noisy.csv"))?;
    let mut m = Metrics::new(config_echo(&h, &opt));
    m.insert("clean_train_rmse", report.clean.train_rmse);
    m.insert("clean_grid_rmse", report.clean.grid_rmse);
    m.insert("noisy_train_rmse", report.noisy.train_rmse);
    m.insert("noisy_grid_rmse", report.noisy.grid_rmse);
    m.write(a.out_dir.join("sinc_metrics.json"))?;
    println!("noise-free training RMSE: {}", report.clean.train_rmse);
    println!("noisy training RMSE: {}", report.noisy.train_rmse);
    println!("noisy model RMSE against sinc on the grid: {}", report.noisy.grid_rmse);
    Ok(())
}

// ---------------------------------------------------------------------------
// planted sparse classification

pub const SPARSE_FEATURES: usize = 100;
pub const SPARSE_INFORMATIVE: usize = 10;
pub const SPARSE_TRAIN: usize = 500;
pub const SPARSE_TEST: usize = 4724;
pub const P0_SELECT: f64 = 1e-5;
pub const P0_KEEP: f64 = 0.99999;

pub fn sparse_defaults() -> (Hyperparams, OptimizerConfig) {
    (Hyperparams::default(), OptimizerConfig::default())
}

#[derive(Clone, Debug)]
pub struct SparseArm {
    pub model: MedModel,
    pub roc: RocCurve,
    pub cdf: CoeffCdf,
}

#[derive(Clone, Debug)]
pub struct SparseReport {
    pub selected: SparseArm,
    pub unselected: SparseArm,
    pub informative: Vec<usize>,
    pub train: Dataset,
    pub test: Dataset,
}

impl SparseReport {
    /// Whether the selection arm's CDF lies on or above the other one at
    /// every point of the shared grid.
    pub fn cdf_dominates(&self) -> bool {
        self.selected
            .cdf
            .points
            .iter()
            .zip(&self.unselected.cdf.points)
            .all(|(a, b)| a.1 >= b.1)
    }
}

fn sparse_arm(train: &Dataset, test: &Dataset, p0: f64, h: &Hyperparams, opt: &OptimizerConfig) -> Result<(MedModel, RocCurve)> {
    let h = Hyperparams { p0, ..*h };
    let model = fit_with(train, &Preprocessing::default(), &h, opt)?;
    let scores = model.scores(test)?;
    let roc = roc_curve(&scores, test.targets().as_slice().expect("contiguous"))?;
    Ok((model, roc))
}

/// Trains with selection (`p0 = 1e−5`) and without (`p0 = 0.99999`); the
/// `p0` in `h` is ignored.
pub fn demo_sparse(h: &Hyperparams, opt: &OptimizerConfig) -> Result<SparseReport> {
    let task = gen_sparse_binary(SPARSE_TRAIN, SPARSE_TEST, SPARSE_FEATURES, SPARSE_INFORMATIVE, opt.seed)?;
    let (sel, unsel) = both(
        || sparse_arm(&task.train, &task.test, P0_SELECT, h, opt),
        || sparse_arm(&task.train, &task.test, P0_KEEP, h, opt),
    );
    let (sel_model, sel_roc) = sel?;
    let (unsel_model, unsel_roc) = unsel?;
    let top = max_abs(&sel_model.effective).max(max_abs(&unsel_model.effective));
    let grid = cdf_grid(top, DEFAULT_CDF_GRID);
    let sel_cdf = coefficient_cdf(&sel_model.effective, DEFAULT_CDF_GRID)?.on_grid(&grid);
    let unsel_cdf = coefficient_cdf(&unsel_model.effective, DEFAULT_CDF_GRID)?.on_grid(&grid);
    Ok(SparseReport {
        selected: SparseArm {
            model: sel_model,
            roc: sel_roc,
            cdf: sel_cdf,
        },
        unselected: SparseArm {
            model: unsel_model,
            roc: unsel_roc,
            cdf: unsel_cdf,
        },
        informative: task.informative,
        train: task.train,
        test: task.test,
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn cmd_demo_sparse(a: &DemoArgs) -> Result<()> {
    let (h0, o0) = sparse_defaults();
    let (h, opt) = a.hyper.apply(h0, o0)?;
    let report = demo_sparse(&h, &opt)?;
    let dir = &a.out_dir;
    ensure_dir(dir)?;
    write_csv(&report.train, dir.join("sparse_train.csv"), "y")?;
    write_csv(&report.test, dir.join("sparse_test.csv"), "y")?;
    write_planted_indices(dir.join("sparse_informative.txt"), &report.informative)?;
    write_roc_csv(&report.selected.roc, dir.join("roc_p0_1e-5.csv"))?;
    write_roc_csv(&report.unselected.roc, dir.join("roc_p0_0.99999.csv"))?;
    write_cdf_csv(&report.selected.cdf, dir.join("cdf_p0_1e-5.csv"))?;
    write_cdf_csv(&report.unselected.cdf, dir.join("cdf_p0_0.99999.csv"))?;
    let mut m = Metrics::new(config_echo(&h, &opt));
    m.insert("auc_p0_1e-5", report.selected.roc.auc);
    m.insert("auc_p0_0.99999", report.unselected.roc.auc);
    m.insert("cdf_dominates", if report.cdf_dominates() { 1.0 } else { 0.0 });
    m.write(dir.join("sparse_metrics.json"))?;
    println!("AUC with selection (p0 = {P0_SELECT}): {}", report.selected.roc.auc);
    println!("AUC without selection (p0 = {P0_KEEP}): {}", report.unselected.roc.auc);
    Ok(())
}

// ---------------------------------------------------------------------------
// generative Gaussian clouds

pub const CLOUD_PER_CLASS: usize = 50;
pub const CLOUD_TEST_PER_CLASS: usize = 500;
pub const CLOUD_DIM: usize = 2;
pub const CLOUD_OFFSET: f64 = 3.0;

#[derive(Clone, Debug)]
pub struct GenerativeReport {
    pub model: GenerativeMedModel,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

pub fn demo_generative(h: &Hyperparams, opt: &OptimizerConfig) -> Result<GenerativeReport> {
    let train = gen_gaussian_clouds(CLOUD_PER_CLASS, CLOUD_DIM, CLOUD_OFFSET, opt.seed)?;
    let test = gen_gaussian_clouds(CLOUD_TEST_PER_CLASS, CLOUD_DIM, CLOUD_OFFSET, opt.seed.wrapping_add(1))?;
    let model = fit_generative(&train, h, opt)?;
    let acc = |d: &Dataset| -> Result<f64> {
        let p: Vec<f64> = model.predictions(d)?.iter().map(|p| p.value).collect();
        accuracy(&p, d.targets().as_slice().expect("contiguous"))
    };
    Ok(GenerativeReport {
        train_accuracy: acc(&train)?,
        test_accuracy: acc(&test)?,
        model,
    })
}

pub fn cmd_demo_generative(a: &DemoArgs) -> Result<()> {
    let (h, opt) = a.hyper.apply(Hyperparams::default(), OptimizerConfig::default())?;
    let report = demo_generative(&h, &opt)?;
    ensure_dir(&a.out_dir)?;
    report.model.save(a.out_dir.join("generative_model.json"))?;
    let mut m = Metrics::new(config_echo(&report.model.hyperparams, &opt));
    m.insert("train_accuracy", report.train_accuracy);
    m.insert("test_accuracy", report.test_accuracy);
    m.write(a.out_dir.join("generative_metrics.json"))?;
    println!("training accuracy: {}", report.train_accuracy);
    println!("test accuracy: {}", report.test_accuracy);
    Ok(())
}

// ---------------------------------------------------------------------------
// housing-like regression

pub const HOUSING_TRAIN: usize = 481;
pub const HOUSING_TEST: usize = 25;
pub const HOUSING_DEGREE: usize = 2;

pub fn housing_defaults() -> (Hyperparams, OptimizerConfig) {
    (
        Hyperparams {
            c: 2.0,
            ..Hyperparams::default()
        },
        OptimizerConfig::default(),
    )
}

#[derive(Clone, Debug)]
pub struct HousingReport {
    pub selected_loss: f64,
    pub unselected_loss: f64,
    pub least_squares_loss: f64,
    pub selected: MedModel,
    pub unselected: MedModel,
}

/// ε-insensitive test losses of MED with and without selection and of
/// least squares, all on the degree-2 expansion.
pub fn demo_housing(h: &Hyperparams, opt: &OptimizerConfig) -> Result<HousingReport> {
    let task = gen_housing_like(HOUSING_TRAIN, HOUSING_TEST, opt.seed)?;
    let prep = Preprocessing {
        degree: HOUSING_DEGREE,
        standardize: true,
        whiten: false,
    };
    let y_test = task.test.targets().to_vec();
    let arm = |p0: f64| -> Result<(MedModel, f64)> {
        let model = fit_with(&task.train, &prep, &Hyperparams { p0, ..*h }, opt)?;
        let pred: Vec<f64> = model.predictions(&task.test)?.iter().map(|p| p.value).collect();
        let loss = eps_insensitive_loss(&pred, &y_test, h.epsilon)?;
        Ok((model, loss))
    };
    let (sel, unsel) = both(|| arm(P0_SELECT), || arm(P0_KEEP));
    let (selected, selected_loss) = sel?;
    let (unselected, unselected_loss) = unsel?;

    let expand = |d: &Dataset| -> Result<Dataset> {
        let rows = (0..d.len()).map(|t| expand_row(&d.row(t).to_vec(), HOUSING_DEGREE)).collect();
        Dataset::from_rows(rows, d.targets().to_vec(), Task::Regression)
    };
    let ls = least_squares_fit(&expand(&task.train)?)?;
    let ls_pred = ls.predict_dataset(&expand(&task.test)?)?;
    let least_squares_loss = eps_insensitive_loss(&ls_pred, &y_test, h.epsilon)?;
    Ok(HousingReport {
        selected_loss,
        unselected_loss,
        least_squares_loss,
        selected,
        unselected,
    })
}

pub fn cmd_demo_housing(a: &DemoArgs) -> Result<()> {
    let (h0, o0) = housing_defaults();
    let (h, opt) = a.hyper.apply(h0, o0)?;
    let report = demo_housing(&h, &opt)?;
    ensure_dir(&a.out_dir)?;
    let mut m = Metrics::new(config_echo(&h, &opt));
    m.insert("med_eps_loss_p0_1e-5", report.selected_loss);
    m.insert("med_eps_loss_p0_0.99999", report.unselected_loss);
    m.insert("ls_eps_loss", report.least_squares_loss);
    m.write(a.out_dir.join("housing_metrics.json"))?;
    println!("MED, p0 = {P0_SELECT}: {}", report.selected_loss);
    println!("MED, p0 = {P0_KEEP}: {}", report.unselected_loss);
    println!("least squares: {}", report.least_squares_loss);
    Ok(())
}
