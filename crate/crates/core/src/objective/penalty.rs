//! Scalar building blocks of the dual objectives: the per-example margin
//! terms obtained by integrating the margin priors, and the per-feature
//! terms obtained by integrating the weight (and switch) priors.

use crate::error::{MedError, Result};

/// Below this multiplier the regression log-partition uses its Taylor expansion.
const SERIES_CUTOFF: f64 = 1e-8;

fn check_box(lambda: f64, c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(MedError::InvalidParameter(format!("c must be positive, got {c}")));
    }
    if !(lambda >= 0.0 && lambda < c) {
        return Err(MedError::BoxViolation {
            index: 0,
            value: lambda,
            upper: c,
        });
    }
    Ok(())
}

/// Classification margin term `λ + log(1 − λ/c)`.
///
/// This is `−log ∫_{γ≤1} c e^{−c(1−γ)} e^{−λγ} dγ`, the contribution of one
/// example to J. It diverges to −∞ as λ → c.
pub fn clf_margin_penalty(lambda: f64, c: f64) -> Result<f64> {
    check_box(lambda, c)?;
    Ok(clf_term(lambda, c))
}

/// Regression margin log-partition
/// `log Z_γ(λ) = ελ − log λ + log(1 − e^{−λε} + λ/(c − λ))`,
/// with the removable singularity at λ = 0 evaluated as `log(ε + 1/c)`.
pub fn reg_margin_penalty(lambda: f64, c: f64, epsilon: f64) -> Result<f64> {
    check_box(lambda, c)?;
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(MedError::InvalidParameter(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    Ok(reg_log_partition(lambda, c, epsilon))
}

#[inline]
pub(crate) fn clf_term(lambda: f64, c: f64) -> f64 {
    lambda + (-lambda / c).ln_1p()
}

#[inline]
pub(crate) fn clf_term_derivative(lambda: f64, c: f64) -> f64 {
    1.0 - 1.0 / (c - lambda)
}

/// `(1 − e^{−λε})/λ`, continuous at λ = 0.
#[inline]
fn tube_mass(lambda: f64, epsilon: f64) -> f64 {
    if lambda < SERIES_CUTOFF {
        let x = lambda * epsilon;
        epsilon * (1.0 - x / 2.0 + x * x / 6.0)
    } else {
        -(-lambda * epsilon).exp_m1() / lambda
    }
}

/// `((1 + x)e^{−x} − 1)/x²`, so that `d/dλ tube_mass = ε²·tube_curve(λε)`.
#[inline]
fn tube_curve(x: f64) -> f64 {
    if x < 0.1 {
        // Σ_{k≥2} (−1)^k (1−k) x^{k−2} / k!
        let mut sum = 0.0;
        let mut power = 1.0;
        let mut fact = 2.0;
        for k in 2..16 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (1.0 - k as f64) * power / fact;
            power *= x;
            fact *= (k + 1) as f64;
        }
        sum
    } else {
        ((1.0 + x) * (-x).exp() - 1.0) / (x * x)
    }
}

#[inline]
pub(crate) fn reg_log_partition(lambda: f64, c: f64, epsilon: f64) -> f64 {
    epsilon * lambda + (tube_mass(lambda, epsilon) + 1.0 / (c - lambda)).ln()
}

/// d/dλ of [`reg_log_partition`]; equals the posterior mean of the margin.
#[inline]
pub(crate) fn reg_log_partition_derivative(lambda: f64, c: f64, epsilon: f64) -> f64 {
    let g = tube_mass(lambda, epsilon) + 1.0 / (c - lambda);
    let dg = epsilon * epsilon * tube_curve(lambda * epsilon) + 1.0 / ((c - lambda) * (c - lambda));
    epsilon + dg / g
}

/// Margin part of the dual objective, one scalar per dual variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MarginPenalty {
    /// `λ + log(1 − λ/c)`.
    Classification { c: f64 },
    /// `−log Z_γ(λ)` for the ε-tube prior.
    Regression { c: f64, epsilon: f64 },
}

impl MarginPenalty {
    pub fn c(&self) -> f64 {
        match *self {
            MarginPenalty::Classification { c } | MarginPenalty::Regression { c, .. } => c,
        }
    }

    /// Contribution of one dual variable to J. Caller guarantees `0 ≤ λ < c`.
    #[inline]
    pub fn term(&self, lambda: f64) -> f64 {
        match *self {
            MarginPenalty::Classification { c } => clf_term(lambda, c),
            MarginPenalty::Regression { c, epsilon } => -reg_log_partition(lambda, c, epsilon),
        }
    }

    #[inline]
    pub fn derivative(&self, lambda: f64) -> f64 {
        match *self {
            MarginPenalty::Classification { c } => clf_term_derivative(lambda, c),
            MarginPenalty::Regression { c, epsilon } => {
                -reg_log_partition_derivative(lambda, c, epsilon)
            }
        }
    }

    /// Posterior mean of the margin variable tied to a multiplier at `lambda`.
    pub fn expected_margin(&self, lambda: f64) -> f64 {
        match *self {
            MarginPenalty::Classification { c } => clf_term_derivative(lambda, c),
            MarginPenalty::Regression { c, epsilon } => {
                reg_log_partition_derivative(lambda, c, epsilon)
            }
        }
    }
}

/// Posterior probability that feature `i` is switched on, given its
/// aggregated dual weight `W_i`:
/// `P = Logistic(W²/2 + log(p0/(1 − p0)))`.
///
/// Returns exactly `p0` at `W = 0` and is the derivative weight of the
/// switch term, `d/dW log(1 − p0 + p0 e^{W²/2}) = P·W`.
pub fn feature_inclusion_prob(w: f64, p0: f64) -> f64 {
    let u = 0.5 * w * w;
    if u == 0.0 {
        return p0;
    }
    p0 / (p0 + (1.0 - p0) * (-u).exp())
}

/// `|W|` at which the inclusion probability crosses one half,
/// `sqrt(2 log((1 − p0)/p0))`. `None` when `p0 ≥ 1/2` (already at or above one half at zero).
pub fn selection_threshold(p0: f64) -> Option<f64> {
    let log_odds = ((1.0 - p0) / p0).ln();
    (log_odds > 0.0).then(|| (2.0 * log_odds).sqrt())
}

/// Per-feature term of the weight prior's log-partition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeatureTerm {
    /// Gaussian weight, no switch: `W²/2`.
    Gaussian,
    /// Gaussian weight gated by a Bernoulli(p0) switch:
    /// `log(1 − p0 + p0 e^{W²/2})`.
    Switch { p0: f64 },
}

impl FeatureTerm {
    #[inline]
    pub fn value(&self, w: f64) -> f64 {
        let u = 0.5 * w * w;
        match *self {
            FeatureTerm::Gaussian => u,
            FeatureTerm::Switch { p0 } => {
                if u < 700.0 {
                    (p0 * u.exp_m1()).ln_1p()
                } else {
                    u + p0.ln() + ((1.0 - p0) / p0 * (-u).exp()).ln_1p()
                }
            }
        }
    }

    /// Inclusion weight `P` with `d value / dW = P·W`.
    #[inline]
    pub fn inclusion(&self, w: f64) -> f64 {
        match *self {
            FeatureTerm::Gaussian => 1.0,
            FeatureTerm::Switch { p0 } => feature_inclusion_prob(w, p0),
        }
    }

    #[inline]
    pub fn derivative(&self, w: f64) -> f64 {
        self.inclusion(w) * w
    }
}
