//! Box-constrained limited-memory quasi-Newton minimization (L-BFGS-B style)
//! with finite-difference gradients.
//!
//! Each iteration fixes the variables that sit on a bound with the gradient
//! pushing outward, builds a two-loop L-BFGS direction over the remaining free
//! variables and runs a projected backtracking line search with an Armijo
//! condition, so the objective never increases between accepted iterates.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsbOptions {
    /// Number of correction pairs kept.
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when `(f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|) <= rel_tol`.
    pub rel_tol: f64,
    /// Stop when the projected gradient's max-norm drops below this.
    pub pg_tol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
    /// Largest coordinate move of a steepest-descent step.
    pub initial_step: f64,
}

impl Default for LbfgsbOptions {
    fn default() -> Self {
        LbfgsbOptions {
            memory: 8,
            max_iter: 200,
            rel_tol: 1e-8,
            pg_tol: 1e-10,
            fd_step: 1e-6,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Objective at the start point and after every accepted step.
    pub history: Vec<f64>,
}

#[inline]
fn project(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// Central differences, one-sided where a bound is within one step.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &[f64],
    fx: f64,
    lower: &[f64],
    upper: &[f64],
    step: f64,
    evaluations: &mut usize,
) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = step * x[i].abs().max(1.0);
        let up = x[i] + h <= upper[i];
        let down = x[i] - h >= lower[i];
        g[i] = match (up, down) {
            (true, true) => {
                probe[i] = x[i] + h;
                let fp = f(&probe);
                probe[i] = x[i] - h;
                let fm = f(&probe);
                *evaluations += 2;
                (fp - fm) / (2.0 * h)
            }
            (true, false) => {
                probe[i] = x[i] + h;
                *evaluations += 1;
                (f(&probe) - fx) / h
            }
            (false, true) => {
                probe[i] = x[i] - h;
                *evaluations += 1;
                (fx - f(&probe)) / h
            }
            (false, false) => 0.0,
        };
        probe[i] = x[i];
    }
    g
}

/// Quasi-Newton state: the bounds and the recent correction pairs.
#[derive(Debug, Clone)]
pub struct BoundedLbfgs {
    lower: Vec<f64>,
    upper: Vec<f64>,
    memory: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>)>,
    initial_step: f64,
}

impl BoundedLbfgs {
    pub fn new(lower: &[f64], upper: &[f64], memory: usize, initial_step: f64) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::invalid("bound vectors differ in length"));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::invalid(format!(
                "lower bound exceeds upper bound at index {i}"
            )));
        }
        Ok(BoundedLbfgs {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            memory,
            pairs: VecDeque::new(),
            initial_step,
        })
    }

    pub fn reset(&mut self) {
        self.pairs.clear();
    }

    pub fn push_pair(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        if sy > 1e-12 * yy && yy > 0.0 {
            if self.pairs.len() == self.memory {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y));
        }
    }

    fn free_mask(&self, x: &[f64], g: &[f64]) -> Vec<bool> {
        (0..x.len())
            .map(|i| {
                let at_lo = x[i] <= self.lower[i] && g[i] > 0.0;
                let at_hi = x[i] >= self.upper[i] && g[i] < 0.0;
                !(at_lo || at_hi) && self.lower[i] < self.upper[i]
            })
            .collect()
    }

    /// Max-norm of the projected gradient step `P(x - g) - x`.
    pub fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        (0..x.len())
            .map(|i| (project(x[i] - g[i], self.lower[i], self.upper[i]) - x[i]).abs())
            .fold(0.0, f64::max)
    }

    fn steepest(&self, g: &[f64], free: &[bool]) -> Vec<f64> {
        let gmax = g
            .iter()
            .zip(free)
            .filter(|(_, &f)| f)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max);
        if gmax == 0.0 {
            return vec![0.0; g.len()];
        }
        let scale = self.initial_step / gmax;
        g.iter()
            .zip(free)
            .map(|(v, &f)| if f { -v * scale } else { 0.0 })
            .collect()
    }

    /// Search direction at `x` given gradient `g`. Always a descent direction
    /// (or zero when no free variable can move).
    pub fn direction(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        let free = self.free_mask(x, g);
        if self.pairs.is_empty() {
            return self.steepest(g, &free);
        }
        let mask = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .zip(&free)
                .map(|(a, &f)| if f { *a } else { 0.0 })
                .collect()
        };
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(p, q)| p * q).sum() };

        let mut q = mask(g);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> =
            self.pairs.iter().map(|(s, y)| (mask(s), mask(y))).collect();
        let mut alphas = vec![0.0; pairs.len()];
        let mut rhos = vec![0.0; pairs.len()];
        for (k, (s, y)) in pairs.iter().enumerate().rev() {
            let sy = dot(s, y);
            if sy <= 0.0 {
                continue;
            }
            rhos[k] = 1.0 / sy;
            alphas[k] = rhos[k] * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= alphas[k] * yi);
        }
        let (s, y) = pairs.last().unwrap();
        let yy = dot(y, y);
        let gamma = if yy > 0.0 && dot(s, y) > 0.0 {
            dot(s, y) / yy
        } else {
            1.0
        };
        q.iter_mut().for_each(|v| *v *= gamma);
        for (k, (s, y)) in pairs.iter().enumerate() {
            if rhos[k] == 0.0 {
                continue;
            }
            let beta = rhos[k] * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (alphas[k] - beta) * si);
        }
        let d: Vec<f64> = q.iter().map(|v| -v).collect();
        if dot(&d, g) < 0.0 && d.iter().all(|v| v.is_finite()) {
            d
        } else {
            self.steepest(g, &free)
        }
    }
}

/// Minimize `f` over the box `[lower, upper]` starting from `x0` (clamped
/// into the box).
pub fn minimize<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &LbfgsbOptions,
) -> Result<Minimum> {
    if x0.len() != lower.len() {
        return Err(Error::invalid("start point and bounds differ in length"));
    }
    let mut state = BoundedLbfgs::new(lower, upper, opts.memory, opts.initial_step)?;
    let mut x: Vec<f64> = (0..x0.len())
        .map(|i| project(x0[i], lower[i], upper[i]))
        .collect();
    let mut evaluations = 1;
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Err(Error::Fit {
            stage: "optimizer".into(),
            message: format!("objective is not finite at the start point {x:?}"),
        });
    }
    let mut history = vec![fx];
    let mut g = fd_gradient(&f, &x, fx, lower, upper, opts.fd_step, &mut evaluations);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if state.projected_gradient_norm(&x, &g) <= opts.pg_tol {
            converged = true;
            break;
        }
        let mut accepted = None;
        for attempt in 0..2 {
            let d = state.direction(&x, &g);
            let mut alpha = 1.0;
            for _ in 0..40 {
                let trial: Vec<f64> = (0..x.len())
                    .map(|i| project(x[i] + alpha * d[i], lower[i], upper[i]))
                    .collect();
                let decrease: f64 = (0..x.len()).map(|i| g[i] * (trial[i] - x[i])).sum();
                if decrease >= 0.0 {
                    alpha *= 0.5;
                    continue;
                }
                let ft = f(&trial);
                evaluations += 1;
                if ft.is_finite() && ft <= fx + 1e-4 * decrease {
                    accepted = Some((trial, ft));
                    break;
                }
                alpha *= 0.5;
            }
            if accepted.is_some() || attempt == 1 {
                break;
            }
            state.reset();
        }
        let Some((x_new, f_new)) = accepted else {
            // No descent left at finite-difference resolution.
            converged = true;
            break;
        };
        iterations += 1;
        let g_new = fd_gradient(&f, &x_new, f_new, lower, upper, opts.fd_step, &mut evaluations);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        state.push_pair(s, y);

        let scale = fx.abs().max(f_new.abs()).max(f64::MIN_POSITIVE);
        let rel = (fx - f_new) / scale;
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        if rel <= opts.rel_tol {
            converged = true;
            break;
        }
    }

    Ok(Minimum {
        x,
        f: fx,
        iterations,
        evaluations,
        converged,
        history,
    })
}
