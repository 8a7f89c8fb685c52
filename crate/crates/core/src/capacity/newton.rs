//! Damped Newton iteration with a Jacobi-preconditioned conjugate gradient
//! inner solve and Armijo backtracking.

use serde::{Deserialize, Serialize};

use super::energy::Energy;
use crate::error::{CapError, Result};

/// One accepted outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub energy: f64,
    /// Newton decrement squared, `-grad . step`.
    pub decrement: f64,
    pub step_length: f64,
    pub cg_iterations: usize,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 50;
const MAX_CG: usize = 4000;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `H d = -g` approximately; returns `(d, iterations)`.
fn pcg(energy: &Energy, u: &[f64], grad: &[f64], diag: &[f64], rel_tol: f64) -> (Vec<f64>, usize) {
    let n = grad.len();
    let inv: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    let mut dir = z.clone();
    let mut rz = dot(&r, &z);
    let target = rel_tol * rz.abs().sqrt();
    let mut hd = vec![0.0; n];
    let mut it = 0;
    while it < MAX_CG && rz.abs().sqrt() > target {
        energy.hess_vec(u, &dir, &mut hd);
        let dhd = dot(&dir, &hd);
        if !(dhd > 0.0) {
            break;
        }
        let alpha = rz / dhd;
        for i in 0..n {
            x[i] += alpha * dir[i];
            r[i] -= alpha * hd[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            dir[i] = z[i] + beta * dir[i];
        }
        it += 1;
    }
    if it == 0 {
        // degenerate curvature: fall back to the preconditioned gradient
        x = grad.iter().zip(&inv).map(|(g, i)| -g * i).collect();
    }
    (x, it)
}

/// Minimizes the energy starting from `u` (fixed entries are never touched).
/// Stops once half the Newton decrement falls below `tol` times the energy.
pub(crate) fn minimize(
    energy: &mut Energy,
    u: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<IterationRecord>> {
    let mut records = Vec::new();
    let mut eta: f64 = 1e-2;
    let mut last_dec = f64::INFINITY;
    for iteration in 0..max_iter {
        let (e0, grad, diag) = energy.linearize(u);
        let (step, cg_iterations) = pcg(energy, u, &grad, &diag, eta);
        let gd = dot(&grad, &step);
        let decrement = -gd;
        last_dec = decrement;
        if !(decrement.is_finite()) {
            return Err(CapError::NonConvergence {
                iterations: iteration,
                decrement,
            });
        }
        if decrement <= 0.0 || 0.5 * decrement < tol * e0 {
            records.push(IterationRecord {
                iteration,
                energy: e0,
                decrement: decrement.max(0.0),
                step_length: 0.0,
                cg_iterations,
            });
            return Ok(records);
        }
        let mut t = 1.0;
        let mut trial = u.to_vec();
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACK {
            for i in 0..u.len() {
                trial[i] = u[i] + t * step[i];
            }
            let e1 = energy.value(&trial);
            if e1 <= e0 + ARMIJO * t * gd {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(CapError::NonConvergence {
                iterations: iteration,
                decrement,
            });
        }
        u.copy_from_slice(&trial);
        records.push(IterationRecord {
            iteration,
            energy: e0,
            decrement,
            step_length: t,
            cg_iterations,
        });
        eta = (decrement / e0).sqrt().clamp(1e-6, 1e-2);
    }
    Err(CapError::NonConvergence {
        iterations: max_iter,
        decrement: last_dec,
    })
}
