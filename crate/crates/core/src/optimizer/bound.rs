//! Tangent quadratic lower bounds on the per-feature terms
//! `j_i(λ) = −log(1 − p0 + p0 e^{½ λᵀMλ})`, with `M = a aᵀ` for the
//! feature's generator column `a`.
//!
//! At an anchor `λ̃` with `ũ = aᵀλ̃`:
//!
//! ```text
//! j_i(λ) ≥ λᵀ(N + hM)λ̃ − ½ λᵀ(M + N)λ + const
//! N = ¼ (Mλ̃)(Mλ̃)ᵀ,  h = (1 − p0) / (1 − p0 + p0 e^{½ λ̃ᵀMλ̃})
//! ```
//!
//! Everything depends on λ only through `u = aᵀλ`, so the bound is stored
//! in that coordinate: `slope·u − ½·curvature·u² + constant` with
//! `slope = ¼ũ³ + hũ` and `curvature = 1 + ¼ũ²`. Both sides touch at `ũ`.
//! For Gaussian weights without switches `j_i = −½u²` is already quadratic
//! and is returned as is (`N = 0`).

use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{MedError, Result};
use crate::objective::{DualProblem, DualVars, FeatureTerm, Hyperparams};

#[derive(Clone, Debug, PartialEq)]
pub struct QuadBound {
    /// Column `a` of the example matrix; `M = a aᵀ`.
    pub generator: Vec<f64>,
    /// Flattened anchor multipliers λ̃.
    pub anchor: Vec<f64>,
    /// `ũ = aᵀλ̃`.
    pub anchor_tilt: f64,
    pub h: f64,
    /// Coefficient of N relative to `ũ² a aᵀ`: ¼ with switches, 0 without.
    pub rank_one_scale: f64,
    pub slope: f64,
    pub curvature: f64,
    pub constant: f64,
    term: FeatureTerm,
}

impl QuadBound {
    /// Bound on feature column `feature` of `problem`, anchored at `anchor`.
    pub fn at(problem: &DualProblem, anchor: &[f64], feature: usize) -> Result<Self> {
        let term = problem.cumulant().separable().ok_or_else(|| {
            MedError::InvalidParameter("quadratic bounds need a per-feature weight prior".into())
        })?;
        if feature >= problem.n_features() {
            return Err(MedError::InvalidParameter(format!(
                "feature index {feature} out of range ({} features)",
                problem.n_features()
            )));
        }
        let generator = problem.rows().column(feature).to_vec();
        let anchor_tilt = dot(&generator, anchor);
        Ok(Self::from_tilt(term, generator, anchor.to_vec(), anchor_tilt))
    }

    pub(crate) fn from_tilt(term: FeatureTerm, generator: Vec<f64>, anchor: Vec<f64>, ut: f64) -> Self {
        let (h, rank_one_scale) = match term {
            FeatureTerm::Gaussian => (0.0, 0.0),
            FeatureTerm::Switch { .. } => (1.0 - term.inclusion(ut), 0.25),
        };
        let curvature = 1.0 + rank_one_scale * ut * ut;
        let slope = rank_one_scale * ut * ut * ut + h * ut;
        let constant = -term.value(ut) - (slope * ut - 0.5 * curvature * ut * ut);
        Self {
            generator,
            anchor,
            anchor_tilt: ut,
            h,
            rank_one_scale,
            slope,
            curvature,
            constant,
            term,
        }
    }

    /// Bound value at `λ`.
    pub fn value(&self, lambda: &[f64]) -> f64 {
        let u = dot(&self.generator, lambda);
        self.slope * u - 0.5 * self.curvature * u * u + self.constant
    }

    /// The bounded term `j_i(λ)` itself.
    pub fn exact(&self, lambda: &[f64]) -> f64 {
        -self.term.value(dot(&self.generator, lambda))
    }

    pub fn m_matrix(&self) -> Array2<f64> {
        let a = &self.generator;
        Array2::from_shape_fn((a.len(), a.len()), |(r, c)| a[r] * a[c])
    }

    pub fn n_matrix(&self) -> Array2<f64> {
        let m_anchor: Vec<f64> = self.generator.iter().map(|a| a * self.anchor_tilt).collect();
        Array2::from_shape_fn((m_anchor.len(), m_anchor.len()), |(r, c)| {
            self.rank_one_scale * m_anchor[r] * m_anchor[c]
        })
    }

    /// Same bound written with the dense matrices M and N.
    pub fn value_dense(&self, lambda: &[f64]) -> f64 {
        let m = self.m_matrix();
        let n = self.n_matrix();
        let quad = |mat: &Array2<f64>, x: &[f64], y: &[f64]| -> f64 {
            let mut s = 0.0;
            for (r, xr) in x.iter().enumerate() {
                for (c, yc) in y.iter().enumerate() {
                    s += xr * mat[[r, c]] * yc;
                }
            }
            s
        };
        let cross = quad(&n, lambda, &self.anchor) + self.h * quad(&m, lambda, &self.anchor);
        let square = quad(&m, lambda, lambda) + quad(&n, lambda, lambda);
        cross - 0.5 * square + self.constant
    }
}

/// Tangent bound for feature `feature_index` of the dual built from `d` and `h`.
pub fn build_quad_bound(anchor: &DualVars, d: &Dataset, h: &Hyperparams, feature_index: usize) -> Result<QuadBound> {
    let problem = DualProblem::new(d, h)?;
    let v = anchor.flatten();
    problem.check_feasible(&v)?;
    QuadBound::at(&problem, &v, feature_index)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
