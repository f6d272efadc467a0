//! Limited-memory quasi-Newton training: L-BFGS two-loop recursion with a
//! strong-Wolfe line search, and Xavier weight initialization.

use std::collections::VecDeque;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::mlp::Layer;

/// Uniform Xavier tensor on +-sqrt(6 / (fan_in + fan_out)), shape (out, in).
pub fn xavier_init(fan_out: usize, fan_in: usize, rng: &mut StdRng) -> Array2<f64> {
    assert!(fan_in > 0 && fan_out > 0);
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((fan_out, fan_in), |_| rng.gen_range(-bound..bound))
}

/// Xavier-initialized layer stack for the given widths; biases are zero.
pub fn xavier_layers(widths: &[usize], seed: u64) -> Vec<Layer> {
    let mut rng = StdRng::seed_from_u64(seed);
    widths
        .windows(2)
        .map(|w| Layer { w: xavier_init(w[1], w[0], &mut rng), b: Array1::zeros(w[1]) })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LbfgsConfig {
    pub history_size: usize,
    /// Trial step of the very first line search ("learning rate").
    pub initial_step: f64,
    pub tolerance: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search_steps: usize,
    pub max_iters: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            history_size: 20,
            initial_step: 2.0,
            tolerance: 1e-10,
            c1: 1e-4,
            c2: 0.9,
            max_line_search_steps: 25,
            max_iters: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    GradientTolerance,
    LossDecreaseTolerance,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub weights: Vec<f64>,
    pub loss: f64,
    pub history: Vec<IterRecord>,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct LineSearchResult {
    step: f64,
    loss: f64,
    grad: Vec<f64>,
    point: Vec<f64>,
}

/// Strong-Wolfe line search (bracket + zoom with quadratic interpolation).
fn strong_wolfe<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    dir: &[f64],
    a_init: f64,
    cfg: &LbfgsConfig,
) -> Option<LineSearchResult> {
    let dphi0 = dot(g0, dir);
    if dphi0 >= 0.0 {
        return None; // not a descent direction
    }
    let eval = |f: &mut F, a: f64| {
        let point: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + a * di).collect();
        let (loss, grad) = f(&point);
        let dphi = dot(&grad, dir);
        (point, loss, grad, dphi)
    };

    let mut budget = cfg.max_line_search_steps;
    let zoom = |f: &mut F,
                    mut lo: (f64, f64, f64),
                    mut hi: (f64, f64, f64),
                    budget: &mut usize|
     -> Option<LineSearchResult> {
        // lo/hi hold (a, phi, dphi); lo satisfies the sufficient decrease.
        while *budget > 0 {
            *budget -= 1;
            // Quadratic interpolation from lo's value/slope and hi's value,
            // safeguarded toward bisection.
            let (al, pl, dl) = lo;
            let (ah, ph, _) = hi;
            let denom = ph - pl - dl * (ah - al);
            let mut a = if denom.abs() > 1e-300 {
                al - dl * (ah - al) * (ah - al) / (2.0 * denom)
            } else {
                0.5 * (al + ah)
            };
            let (left, right) = if al < ah { (al, ah) } else { (ah, al) };
            let margin = 0.1 * (right - left);
            if !(a.is_finite()) || a < left + margin || a > right - margin {
                a = 0.5 * (al + ah);
            }
            let (point, loss, grad, dphi) = eval(f, a);
            if loss > f0 + cfg.c1 * a * dphi0 || loss >= pl {
                hi = (a, loss, dphi);
            } else {
                if dphi.abs() <= -cfg.c2 * dphi0 {
                    return Some(LineSearchResult { step: a, loss, grad, point });
                }
                if dphi * (ah - al) >= 0.0 {
                    hi = lo;
                }
                lo = (a, loss, dphi);
            }
            if (hi.0 - lo.0).abs() < 1e-16 {
                break;
            }
        }
        None
    };

    let mut a_prev = 0.0;
    let mut phi_prev = f0;
    let mut dphi_prev = dphi0;
    let mut a = a_init;
    let mut first = true;
    while budget > 0 {
        budget -= 1;
        let (point, loss, grad, dphi) = eval(f, a);
        if loss > f0 + cfg.c1 * a * dphi0 || (!first && loss >= phi_prev) {
            return zoom(f, (a_prev, phi_prev, dphi_prev), (a, loss, dphi), &mut budget);
        }
        if dphi.abs() <= -cfg.c2 * dphi0 {
            return Some(LineSearchResult { step: a, loss, grad, point });
        }
        if dphi >= 0.0 {
            return zoom(f, (a, loss, dphi), (a_prev, phi_prev, dphi_prev), &mut budget);
        }
        a_prev = a;
        phi_prev = loss;
        dphi_prev = dphi;
        a *= 2.0;
        first = false;
    }
    None
}

/// L-BFGS minimization of a deterministic full-batch objective.
///
/// `callback` observes each accepted iteration (record, current weights).
pub fn minimize<F, C>(
    mut f: F,
    cfg: &LbfgsConfig,
    w0: Vec<f64>,
    mut callback: C,
) -> MinimizeResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    C: FnMut(&IterRecord, &[f64]),
{
    let start = Instant::now();
    let n = w0.len();
    let mut x = w0;
    let (mut loss, mut grad) = f(&x);
    let mut history: Vec<IterRecord> = Vec::new();
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new(); // (s, y, rho)

    let mut termination = Termination::MaxIterations;
    for iter in 0..cfg.max_iters {
        let gnorm = norm2(&grad);
        if gnorm < cfg.tolerance {
            termination = Termination::GradientTolerance;
            break;
        }

        // Two-loop recursion.
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let alpha = rho * dot(s, &q);
            for i in 0..n {
                q[i] -= alpha * y[i];
            }
            alphas.push(alpha);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            for v in &mut q {
                *v *= gamma;
            }
        }
        for ((s, y, rho), alpha) in pairs.iter().zip(alphas.into_iter().rev()) {
            let beta = rho * dot(y, &q);
            for i in 0..n {
                q[i] += (alpha - beta) * s[i];
            }
        }
        let dir: Vec<f64> = q.iter().map(|v| -v).collect();

        let a_init = if iter == 0 { cfg.initial_step } else { 1.0 };
        let found = strong_wolfe(&mut f, &x, loss, &grad, &dir, a_init, cfg);
        let (step, new_loss, new_grad, new_x) = match found {
            Some(r) => (r.step, r.loss, r.grad, r.point),
            None => {
                // Fall back to steepest descent with halving.
                let mut ok = None;
                let mut a = 1.0 / norm2(&grad).max(1.0);
                for _ in 0..40 {
                    let cand: Vec<f64> =
                        x.iter().zip(&grad).map(|(xi, gi)| xi - a * gi).collect();
                    let (l, g) = f(&cand);
                    if l < loss {
                        ok = Some((a, l, g, cand));
                        break;
                    }
                    a *= 0.5;
                }
                match ok {
                    Some(r) => {
                        pairs.clear();
                        r
                    }
                    None => {
                        termination = Termination::LineSearchFailure;
                        break;
                    }
                }
            }
        };

        let s: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        // Skip pairs that would break positive definiteness.
        if sy > 1e-10 {
            if pairs.len() == cfg.history_size {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }

        let decreased = loss - new_loss;
        x = new_x;
        grad = new_grad;
        loss = new_loss;

        let record = IterRecord {
            iter,
            loss,
            grad_norm: norm2(&grad),
            step,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        callback(&record, &x);
        history.push(record);

        if decreased.abs() < cfg.tolerance {
            termination = Termination::LossDecreaseTolerance;
            break;
        }
    }

    MinimizeResult { weights: x, loss, history, termination }
}
