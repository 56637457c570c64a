//! Soft-margin kernel SVM trained by sequential minimal optimisation.
//!
//! Dual problem: minimise `½ αᵀQα − eᵀα` subject to `0 ≤ α ≤ C` and
//! `yᵀα = 0`, with `Q_ij = y_i y_j K(x_i, x_j)`. Working pairs are picked by
//! maximal violation for the first index and second-order gain for the
//! second; iteration stops when the KKT gap drops below `tolerance`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "type")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_iterations: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    kernel: Kernel,
    support: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    coef: Vec<f64>,
    rho: f64,
    pub iterations: usize,
}

const TAU: f64 = 1e-12;

impl SvmModel {
    /// Trains on rows `x` with labels `y` (`true` = positive class).
    pub fn fit(x: &[Vec<f64>], y: &[bool], c: f64, kernel: Kernel, opts: SolverOptions) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::Precondition("svm: feature and label counts differ".into()));
        }
        if !(c > 0.0) {
            return Err(Error::Config("svm.c: must be > 0".into()));
        }
        if !y.iter().any(|&b| b) || y.iter().all(|&b| b) {
            return Err(Error::Data("svm: training data must contain both classes".into()));
        }
        let ys: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
        let k: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| kernel.eval(&x[i], &x[j])).collect())
            .collect();
        let q = |i: usize, j: usize| ys[i] * ys[j] * k[i][j];

        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let upper = |a: f64| a >= c;
        let lower = |a: f64| a <= 0.0;

        let mut iterations = 0;
        while iterations < opts.max_iterations {
            // first index: maximal violation in I_up
            let mut gmax = f64::NEG_INFINITY;
            let mut i_sel = None;
            for t in 0..n {
                let in_up = if ys[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
                if in_up && -ys[t] * grad[t] >= gmax {
                    gmax = -ys[t] * grad[t];
                    i_sel = Some(t);
                }
            }
            let Some(i) = i_sel else { break };

            // second index: best second-order gain in I_low
            let mut gmax2 = f64::NEG_INFINITY;
            let mut j_sel = None;
            let mut best = f64::INFINITY;
            for t in 0..n {
                let in_low = if ys[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
                if !in_low {
                    continue;
                }
                let yg = ys[t] * grad[t];
                gmax2 = gmax2.max(yg);
                let diff = gmax + yg;
                if diff > 0.0 {
                    let quad = k[i][i] + k[t][t] - 2.0 * k[i][t];
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
            let Some(j) = j_sel else { break };
            if gmax + gmax2 < opts.tolerance {
                break;
            }
            iterations += 1;

            let (old_i, old_j) = (alpha[i], alpha[j]);
            if ys[i] != ys[j] {
                let quad = (k[i][i] + k[j][j] - 2.0 * k[i][j]).max(TAU);
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let quad = (k[i][i] + k[j][j] - 2.0 * k[i][j]).max(TAU);
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for (t, g) in grad.iter_mut().enumerate() {
                *g += q(i, t) * di + q(j, t) * dj;
            }
        }

        let rho = {
            let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut free, mut sum) = (0usize, 0.0);
            for t in 0..n {
                let yg = ys[t] * grad[t];
                if upper(alpha[t]) {
                    if ys[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
                } else if lower(alpha[t]) {
                    if ys[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
                } else {
                    free += 1;
                    sum += yg;
                }
            }
            if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 }
        };

        let (support, coef) = (0..n)
            .filter(|&t| alpha[t] > 0.0)
            .map(|t| (x[t].clone(), alpha[t] * ys[t]))
            .unzip();
        Ok(Self {
            kernel,
            support,
            coef,
            rho,
            iterations,
        })
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, a)| a * self.kernel.eval(s, x))
            .sum::<f64>()
            - self.rho
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) > 0.0
    }

    pub fn support_count(&self) -> usize {
        self.support.len()
    }
}
