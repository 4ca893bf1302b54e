//! Limited-memory BFGS for smooth concave maximization.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LbfgsSettings {
    pub max_steps: usize,
    /// Stop once `‖∇f‖_∞` falls below this.
    pub gradient_tolerance: f64,
    pub history: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        LbfgsSettings {
            max_steps: 500,
            gradient_tolerance: 1e-5,
            history: 10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub steps: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximizes `f`, which returns the objective and writes its gradient into
/// the second argument.
pub fn maximize<F>(mut f: F, x0: Vec<f64>, settings: &LbfgsSettings) -> Result<Optimum>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut value = f(&x, &mut grad);
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite { step: 0 });
    }

    // (s, y, 1 / y·s) pairs in ascent form: y = g_old - g_new.
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(settings.history);
    let mut dir = vec![0.0; n];
    let mut alpha = vec![0.0; settings.history];
    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];

    let mut steps = 0;
    loop {
        let gnorm = inf_norm(&grad);
        if gnorm < settings.gradient_tolerance || n == 0 {
            return Ok(Optimum {
                x,
                value,
                gradient_norm: gnorm,
                steps,
                converged: true,
            });
        }
        if steps >= settings.max_steps {
            return Ok(Optimum {
                x,
                value,
                gradient_norm: gnorm,
                steps,
                converged: false,
            });
        }
        steps += 1;

        // Two-loop recursion on the negated problem.
        dir.copy_from_slice(&grad);
        for (k, (s, y, rho)) in memory.iter().enumerate().rev() {
            alpha[k] = rho * dot(s, &dir);
            dir.iter_mut()
                .zip(y)
                .for_each(|(d, yi)| *d -= alpha[k] * yi);
        }
        let scale = match memory.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / inf_norm(&grad).max(1.0),
        };
        dir.iter_mut().for_each(|d| *d *= scale);
        for (k, (s, y, rho)) in memory.iter().enumerate() {
            let beta = rho * dot(y, &dir);
            dir.iter_mut()
                .zip(s)
                .for_each(|(d, si)| *d += (alpha[k] - beta) * si);
        }

        let mut slope = dot(&grad, &dir);
        if slope.is_nan() || slope <= 0.0 {
            // Lost ascent direction; restart from steepest ascent.
            memory.clear();
            let s = 1.0 / inf_norm(&grad).max(1.0);
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = s * g);
            slope = dot(&grad, &dir);
        }

        // Backtracking line search with the Armijo condition.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            trial
                .iter_mut()
                .zip(&x)
                .zip(&dir)
                .for_each(|((tr, xi), d)| *tr = xi + t * d);
            let v = f(&trial, &mut trial_grad);
            if v.is_finite()
                && trial_grad.iter().all(|g| g.is_finite())
                && v >= value + 1e-4 * t * slope
            {
                accepted = Some(v);
                break;
            }
            t *= 0.5;
        }
        let Some(new_value) = accepted else {
            if !value.is_finite() {
                return Err(Error::NonFinite { step: steps });
            }
            // No progress possible at machine precision.
            return Ok(Optimum {
                x,
                value,
                gradient_norm: gnorm,
                steps,
                converged: gnorm < settings.gradient_tolerance,
            });
        };

        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad.iter().zip(&trial_grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if memory.len() == settings.history {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        value = new_value;
    }
}
