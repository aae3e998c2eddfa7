//! Projected coordinate ascent for box-constrained concave quadratics,
//! optionally with a separable concave margin term kept exact.
//!
//! The surrogate is
//!
//! ```text
//! S(v) = Σ_k pen(v_k) + ⟨g, v⟩ − ½ Σ_i D_i ⟨a_i, v⟩² − (κ/2)⟨s, v⟩²
//! ```
//!
//! over `0 ≤ v_k ≤ upper`, with `⟨s, v⟩ = 0` when the equality is enforced.
//! `a_i` are the columns of `rows`; the Hessian is `−(A D Aᵀ + κ s sᵀ)`.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scalar::root_decreasing;
use super::OptimizerConfig;
use crate::error::{MedError, Result};
use crate::objective::MarginPenalty;

#[derive(Clone, Debug)]
pub struct QuadSurrogate<'a> {
    pub rows: ArrayView2<'a, f64>,
    /// Non-negative curvature weights `D_i`, one per column of `rows`.
    pub weights: Vec<f64>,
    pub linear: Vec<f64>,
    pub bias_direction: &'a [f64],
    pub bias_weight: f64,
    pub equality: bool,
    pub upper: f64,
    pub penalty: Option<MarginPenalty>,
}

impl QuadSurrogate<'_> {
    pub fn value(&self, v: &[f64]) -> f64 {
        let mut total: f64 = v.iter().zip(&self.linear).map(|(a, b)| a * b).sum();
        if let Some(pen) = self.penalty {
            total += v.iter().map(|&x| pen.term(x)).sum::<f64>();
        }
        for (i, col) in self.rows.columns().into_iter().enumerate() {
            let u: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
            total -= 0.5 * self.weights[i] * u * u;
        }
        let s: f64 = v.iter().zip(self.bias_direction).map(|(a, b)| a * b).sum();
        total - 0.5 * self.bias_weight * s * s
    }

    /// Gradient of the surrogate, used for KKT checks.
    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = self
            .rows
            .columns()
            .into_iter()
            .map(|col| col.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect();
        let s: f64 = v.iter().zip(self.bias_direction).map(|(a, b)| a * b).sum();
        (0..v.len())
            .map(|k| {
                let row = self.rows.row(k);
                let quad: f64 = row.iter().enumerate().map(|(i, a)| a * self.weights[i] * u[i]).sum();
                let pen = self.penalty.map_or(0.0, |p| p.derivative(v[k]));
                pen + self.linear[k] - quad - self.bias_weight * s * self.bias_direction[k]
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub point: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Largest projected-gradient magnitude seen in the final sweep.
    pub residual: f64,
}

struct Coordinates<'s, 'a> {
    s: &'s QuadSurrogate<'a>,
    sparse: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
    v: Vec<f64>,
    /// `⟨a_i, v⟩`
    u: Vec<f64>,
    /// `⟨s, v⟩`
    sum: f64,
}

impl Coordinates<'_, '_> {
    /// Derivative of the quadratic part along coordinate k.
    fn quad_grad(&self, k: usize) -> f64 {
        let q: f64 = self.sparse[k]
            .iter()
            .map(|&(i, a)| a * self.s.weights[i] * self.u[i])
            .sum();
        self.s.linear[k] - q - self.s.bias_weight * self.sum * self.s.bias_direction[k]
    }

    fn pen_grad(&self, x: f64) -> f64 {
        self.s.penalty.map_or(0.0, |p| p.derivative(x))
    }

    fn cross(&self, k: usize, j: usize) -> f64 {
        // both rows are sorted by column index
        let (a, b) = (&self.sparse[k], &self.sparse[j]);
        let (mut p, mut q, mut acc) = (0, 0, 0.0);
        while p < a.len() && q < b.len() {
            match a[p].0.cmp(&b[q].0) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[p].1 * b[q].1 * self.s.weights[a[p].0];
                    p += 1;
                    q += 1;
                }
            }
        }
        acc + self.s.bias_weight * self.s.bias_direction[k] * self.s.bias_direction[j]
    }

    fn shift(&mut self, k: usize, delta: f64, target: f64) {
        self.v[k] = target;
        for &(i, a) in &self.sparse[k] {
            self.u[i] += delta * a;
        }
        self.sum += delta * self.s.bias_direction[k];
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(0.0, self.s.upper)
    }

    /// Exact maximization along e_k. Returns the projected gradient before the move.
    fn single(&mut self, k: usize) -> f64 {
        let upper = self.s.upper;
        let vk = self.v[k];
        let qg = self.quad_grad(k);
        let g = qg + self.pen_grad(vk);
        let residual = if (vk <= 0.0 && g < 0.0) || (vk >= upper && g > 0.0) {
            0.0
        } else {
            g.abs()
        };
        let curv = self.diag[k];
        let (lo, hi) = (-vk, upper - vk);
        let delta = match self.s.penalty {
            None if curv > 0.0 => (qg / curv).clamp(lo, hi),
            None => {
                if qg > 0.0 {
                    hi
                } else if qg < 0.0 {
                    lo
                } else {
                    0.0
                }
            }
            Some(pen) => root_decreasing(|d| pen.derivative(vk + d) + qg - curv * d, lo, hi),
        };
        if delta != 0.0 {
            let target = if delta == lo {
                0.0
            } else if delta == hi {
                upper
            } else {
                self.clamp(vk + delta)
            };
            self.shift(k, target - vk, target);
        }
        residual
    }

    /// Exact maximization along `s_k e_k − s_j e_j`, which keeps ⟨s, v⟩ fixed.
    fn pair(&mut self, k: usize, j: usize) -> f64 {
        let upper = self.s.upper;
        let (sk, sj) = (self.s.bias_direction[k], self.s.bias_direction[j]);
        let (vk, vj) = (self.v[k], self.v[j]);
        let qd = sk * self.quad_grad(k) - sj * self.quad_grad(j);
        let g = qd + sk * self.pen_grad(vk) - sj * self.pen_grad(vj);
        let curv = self.diag[k] + self.diag[j] - 2.0 * sk * sj * self.cross(k, j);
        // step range keeping both coordinates in the box
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (x, c) in [(vk, sk), (vj, -sj)] {
            let (a, b) = ((0.0 - x) / c, (upper - x) / c);
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
        if !(hi > lo) {
            return 0.0;
        }
        let residual = if (lo >= 0.0 && g < 0.0) || (hi <= 0.0 && g > 0.0) {
            0.0
        } else {
            g.abs()
        };
        let delta = match self.s.penalty {
            None if curv > 0.0 => (qd / curv).clamp(lo, hi),
            None => {
                if qd > 0.0 {
                    hi
                } else if qd < 0.0 {
                    lo
                } else {
                    0.0
                }
            }
            Some(pen) => root_decreasing(
                |d| sk * pen.derivative(vk + sk * d) - sj * pen.derivative(vj - sj * d) + qd - curv * d,
                lo,
                hi,
            ),
        };
        if delta != 0.0 {
            let tk = self.clamp(vk + sk * delta);
            let tj = self.clamp(vj - sj * delta);
            self.shift(k, tk - vk, tk);
            self.shift(j, tj - vj, tj);
        }
        residual
    }
}

/// Maximizes a concave quadratic surrogate by exact coordinate steps.
///
/// Stops once a full sweep sees no projected gradient above
/// `cfg.qp_inner_tol`, or after `cfg.qp_max_inner` sweeps.
pub fn qp_subsolve(s: &QuadSurrogate<'_>, init: &[f64], cfg: &OptimizerConfig) -> Result<QpSolution> {
    let dim = s.rows.nrows();
    if init.len() != dim || s.linear.len() != dim || s.bias_direction.len() != dim {
        return Err(MedError::DimensionMismatch {
            expected: dim,
            actual: init.len(),
        });
    }
    if s.weights.len() != s.rows.ncols() {
        return Err(MedError::DimensionMismatch {
            expected: s.rows.ncols(),
            actual: s.weights.len(),
        });
    }
    if let Some(i) = s.weights.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(MedError::Numerical(format!(
            "surrogate is not concave: curvature weight {i} is {}",
            s.weights[i]
        )));
    }
    if !(s.bias_weight >= 0.0) {
        return Err(MedError::Numerical(format!(
            "surrogate is not concave: bias weight {}",
            s.bias_weight
        )));
    }

    let sparse: Vec<Vec<(usize, f64)>> = s
        .rows
        .rows()
        .into_iter()
        .map(|r| r.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(i, a)| (i, *a)).collect())
        .collect();
    let diag = sparse
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.iter().map(|&(i, a)| s.weights[i] * a * a).sum::<f64>()
                + s.bias_weight * s.bias_direction[k] * s.bias_direction[k]
        })
        .collect();
    let v: Vec<f64> = init.iter().map(|x| x.clamp(0.0, s.upper)).collect();
    let mut u = vec![0.0; s.rows.ncols()];
    for (k, row) in sparse.iter().enumerate() {
        for &(i, a) in row {
            u[i] += a * v[k];
        }
    }
    let sum = v.iter().zip(s.bias_direction).map(|(a, b)| a * b).sum();
    let mut state = Coordinates {
        s,
        sparse,
        diag,
        v,
        u,
        sum,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..dim).collect();
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < cfg.qp_max_inner {
        sweeps += 1;
        residual = 0.0;
        if s.equality {
            if dim < 2 {
                break;
            }
            order.shuffle(&mut rng);
            for &k in &order {
                let mut j = rng.random_range(0..dim - 1);
                if j >= k {
                    j += 1;
                }
                residual = residual.max(state.pair(k, j));
            }
        } else {
            for k in 0..dim {
                residual = residual.max(state.single(k));
            }
        }
        if residual <= cfg.qp_inner_tol {
            break;
        }
    }
    Ok(QpSolution {
        point: state.v,
        sweeps,
        converged: residual <= cfg.qp_inner_tol,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn one_dimensional_clip() {
        let cfg = OptimizerConfig::default();
        for (a, b, c, expected) in [(2.0, 3.0, 10.0, 1.5), (2.0, -3.0, 10.0, 0.0), (0.5, 3.0, 4.0, 4.0)] {
            let rows = Array2::from_elem((1, 1), f64::sqrt(a));
            let dir = [1.0];
            let s = QuadSurrogate {
                rows: rows.view(),
                weights: vec![1.0],
                linear: vec![b],
                bias_direction: &dir,
                bias_weight: 0.0,
                equality: false,
                upper: c,
                penalty: None,
            };
            let sol = qp_subsolve(&s, &[0.3], &cfg).unwrap();
            assert!((sol.point[0] - expected).abs() < 1e-12, "{a} {b} {c}: {:?}", sol.point);
        }
    }

    #[test]
    fn interior_optimum_satisfies_kkt() {
        // well-conditioned 3-D problem with the optimum strictly inside the box
        let rows = Array2::from_shape_vec((3, 3), vec![2.0, 0.3, 0.0, 0.1, 1.5, 0.2, 0.0, 0.4, 1.8]).unwrap();
        let dir = [1.0, 1.0, 1.0];
        let s = QuadSurrogate {
            rows: rows.view(),
            weights: vec![1.0; 3],
            linear: vec![1.0, 0.8, 1.1],
            bias_direction: &dir,
            bias_weight: 0.0,
            equality: false,
            upper: 100.0,
            penalty: None,
        };
        let cfg = OptimizerConfig {
            qp_inner_tol: 1e-10,
            ..OptimizerConfig::default()
        };
        let sol = qp_subsolve(&s, &[0.0; 3], &cfg).unwrap();
        assert!(sol.converged);
        assert!(sol.point.iter().all(|x| *x > 0.0 && *x < 100.0));
        let g = s.gradient(&sol.point);
        assert!(g.iter().all(|x| x.abs() <= 1e-9), "{g:?}");
    }

    #[test]
    fn rejects_negative_curvature() {
        let rows = Array2::from_elem((1, 1), 1.0);
        let dir = [1.0];
        let s = QuadSurrogate {
            rows: rows.view(),
            weights: vec![-1.0],
            linear: vec![0.0],
            bias_direction: &dir,
            bias_weight: 0.0,
            equality: false,
            upper: 1.0,
            penalty: None,
        };
        assert!(matches!(
            qp_subsolve(&s, &[0.0], &OptimizerConfig::default()),
            Err(MedError::Numerical(_))
        ));
    }

    #[test]
    fn equality_is_preserved() {
        let rows = Array2::from_shape_vec((4, 2), vec![1.0, 0.2, -0.5, 1.0, 0.3, -0.7, 0.9, 0.1]).unwrap();
        let dir = [1.0, -1.0, 1.0, -1.0];
        let s = QuadSurrogate {
            rows: rows.view(),
            weights: vec![1.0, 2.0],
            linear: vec![1.0; 4],
            bias_direction: &dir,
            bias_weight: 0.0,
            equality: true,
            upper: 3.0,
            penalty: Some(MarginPenalty::Classification { c: 3.0 }),
        };
        let init = [0.2, 0.2, 0.1, 0.1];
        let sol = qp_subsolve(&s, &init, &OptimizerConfig::default()).unwrap();
        let sum: f64 = sol.point.iter().zip(&dir).map(|(a, b)| a * b).sum();
        assert!(sum.abs() < 1e-12);
        assert!(s.value(&sol.point) >= s.value(&init));
    }
}
