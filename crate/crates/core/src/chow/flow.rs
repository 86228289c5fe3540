//! Descent on the torus-reduced Kempf–Ness functional.
//!
//! For a torus element `diag(e^{τ_0}, …, e^{τ_N})` the gradient of the
//! Kempf–Ness functional in `τ` is `diag μ`, so `-μ` is a descent direction
//! and the balanced points are its zeros. Steps are Newton steps on
//! `μ(τ) = 0` (finite-difference Jacobian, pseudo-inverse for the
//! projective and decoupled directions) with gradient steps as fallback;
//! every accepted step strictly decreases `‖diag μ‖²`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::chow::config::{CycleComponent, CycleConfig};
use crate::chow::moments::lambda_center_of_mass;
use crate::error::{Error, Result};

const FD_STEP: f64 = 1e-6;
const MAX_HALVINGS: u32 = 40;
/// Iterations a plateau must last before the flow is declared stuck.
const PLATEAU_WINDOW: usize = 25;
/// Bound on `|τ_j|`; beyond it the weights leave `f64` range and the flow
/// is treated as running off to infinity.
const TAU_BOUND: f64 = 200.0;
/// Trust region: no coordinate moves by more than this in one step. A full
/// Newton step from far out can jump past the balanced point onto a
/// degenerating branch whose `‖μ‖²` is lower.
const MAX_STEP: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct BalanceResult {
    /// The diagonal group element, normalized to `Σ log w = 0`.
    pub weights: Vec<f64>,
    pub tau: Vec<f64>,
    /// `‖diag μ‖_∞` at termination.
    pub residual: f64,
    pub iterations: usize,
    /// `‖diag μ‖²` after each accepted step, starting with the initial value.
    pub energy_history: Vec<f64>,
}

fn project(tau: &mut [f64]) {
    let mean = tau.iter().sum::<f64>() / tau.len() as f64;
    for t in tau {
        *t -= mean;
    }
}

fn diag_mu(config: &CycleConfig, tau: &[f64]) -> Result<Vec<f64>> {
    let w = tau.iter().map(|t| t.exp()).collect();
    Ok(lambda_center_of_mass(&config.with_weights(w))?.diagonal())
}

fn energy(mu: &[f64]) -> f64 {
    mu.iter().map(|x| x * x).sum()
}

fn sup(mu: &[f64]) -> f64 {
    mu.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Coordinates whose entries move under the torus (those on a curve of
/// positive degree other than a line).
fn active_coordinates(config: &CycleConfig) -> Vec<usize> {
    let mut out: Vec<usize> = config
        .curve_components
        .iter()
        .filter_map(|c| match c {
            CycleComponent::WeightedRnc { index_set, .. } if index_set.len() > 2 => Some(index_set.clone()),
            _ => None,
        })
        .flatten()
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn jacobian(config: &CycleConfig, tau: &[f64], active: &[usize]) -> Result<DMatrix<f64>> {
    let dim = tau.len();
    let cols: Vec<(usize, Vec<f64>)> = active
        .par_iter()
        .map(|&j| {
            let mut plus = tau.to_vec();
            let mut minus = tau.to_vec();
            plus[j] += FD_STEP;
            minus[j] -= FD_STEP;
            let a = diag_mu(config, &plus)?;
            let b = diag_mu(config, &minus)?;
            Ok((j, a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * FD_STEP)).collect()))
        })
        .collect::<Result<_>>()?;
    let mut jac = DMatrix::zeros(dim, dim);
    for (j, col) in cols {
        for (i, v) in col.into_iter().enumerate() {
            jac[(i, j)] = v;
        }
    }
    Ok(jac)
}

/// Accepted trial point: `(τ, diag μ, ‖diag μ‖²)`.
type Step = (Vec<f64>, Vec<f64>, f64);

/// Backtracking along `dir` from `tau`; returns the first point with lower
/// energy.
fn line_search(
    config: &CycleConfig,
    tau: &[f64],
    dir: &[f64],
    e0: f64,
    alpha0: f64,
) -> Result<Option<Step>> {
    let longest = dir.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut alpha = if alpha0 * longest > MAX_STEP { MAX_STEP / longest } else { alpha0 };
    for _ in 0..MAX_HALVINGS {
        let mut trial: Vec<f64> = tau.iter().zip(dir).map(|(t, d)| t + alpha * d).collect();
        project(&mut trial);
        if trial.iter().any(|t| !(t.abs() <= TAU_BOUND)) {
            alpha *= 0.5;
            continue;
        }
        let mu = diag_mu(config, &trial)?;
        let e = energy(&mu);
        if e < e0 {
            return Ok(Some((trial, mu, e)));
        }
        alpha *= 0.5;
    }
    Ok(None)
}

/// Minimizes `‖diag μ(e^τ · config)‖²` over `τ` with `Σ τ = 0`, starting at
/// the config's own torus weights.
pub fn balance_flow(config: &CycleConfig, tol: f64, max_iter: usize) -> Result<BalanceResult> {
    config.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let mut tau: Vec<f64> = config.torus_weights().iter().map(|w| w.ln()).collect();
    project(&mut tau);
    let active = active_coordinates(config);
    let mut mu = diag_mu(config, &tau)?;
    let mut e = energy(&mu);
    let mut history = vec![e];
    let finish = |tau: Vec<f64>, mu: &[f64], iterations: usize, history: Vec<f64>| BalanceResult {
        weights: tau.iter().map(|t| t.exp()).collect(),
        tau,
        residual: sup(mu),
        iterations,
        energy_history: history,
    };
    for it in 0..max_iter {
        if sup(&mu) < tol {
            return Ok(finish(tau, &mu, it, history));
        }
        let mut step = None;
        if !active.is_empty() {
            let jac = jacobian(config, &tau, &active)?;
            let rhs = DVector::from_iterator(mu.len(), mu.iter().map(|x| -x));
            let svd = jac.svd(true, true);
            let eps = 1e-10 * svd.singular_values.max();
            if let Ok(delta) = svd.solve(&rhs, eps) {
                let dir: Vec<f64> = delta.iter().copied().collect();
                if dir.iter().all(|x| x.is_finite()) {
                    step = line_search(config, &tau, &dir, e, 1.0)?;
                }
            }
        }
        if step.is_none() {
            let dir: Vec<f64> = mu.iter().map(|x| -x).collect();
            step = line_search(config, &tau, &dir, e, 1.0)?;
        }
        let Some((next, next_mu, next_e)) = step else {
            return Err(Error::MaxIterExceeded { iterations: it, residual: sup(&mu), tau_norm: norm(&tau) });
        };
        tau = next;
        mu = next_mu;
        e = next_e;
        history.push(e);
        // Plateau: the energy has stopped moving while τ keeps running off.
        if history.len() > PLATEAU_WINDOW {
            let old = history[history.len() - 1 - PLATEAU_WINDOW];
            if old - e <= 1e-9 * old && sup(&mu) >= tol {
                return Err(Error::MaxIterExceeded { iterations: it + 1, residual: sup(&mu), tau_norm: norm(&tau) });
            }
        }
    }
    if sup(&mu) < tol {
        return Ok(finish(tau, &mu, max_iter, history));
    }
    Err(Error::MaxIterExceeded { iterations: max_iter, residual: sup(&mu), tau_norm: norm(&tau) })
}
