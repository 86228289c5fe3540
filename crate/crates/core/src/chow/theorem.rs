//! The explicit degenerations that decide the critical λ for a curve of
//! degree `kd`-ish with `d` marked points.
//!
//! * `k = 1`: the star of lines `e_i — e_d` in ℙ^d, `W = {e_0, …, e_{d-1}}`.
//! * `k ≥ 2`: a rational normal curve `Y` on the coordinates `0..=N'`,
//!   `N' = (k-1)d`, made 2/3-balanced together with `E = {e_0, …, e_{d-1}}`,
//!   joined by the lines `e_i — e_{N'+1+i}`; `W = {e_{N'+1+i}}`, `N = kd`.
//!
//! On the second configuration every `Y`-coordinate carries
//! `λ (2N'+d) / (2(N'+1))` once `(Y, E)` is balanced and every
//! line-endpoint carries `λ/2 + (1-λ)`; the two agree only at
//! `λ = 2(N'+1) / (3N'+d+1)`.

use num_rational::Ratio;
use serde::Serialize;

use crate::chow::config::{CycleComponent, CycleConfig};
use crate::chow::flow::{balance_flow, BalanceResult};
use crate::chow::moments::lambda_center_of_mass;
use crate::error::{Error, Result};
use crate::numerics::ln_binomial;

/// Offset of λ used to show the balance is strict.
pub const STRICTNESS_OFFSET: f64 = 0.05;
const FLOW_MAX_ITER: usize = 200;

fn check_dk(d: u32, k: u32) -> Result<()> {
    if d < 2 || k < 1 {
        return Err(Error::InvalidInput(format!("need d >= 2 and k >= 1, got d = {d}, k = {k}")));
    }
    Ok(())
}

/// `2/(d+1)` for `k = 1`, `(2kd+2)/(3kd+d+1)` for `k ≥ 2`.
pub fn lambda_k(d: u32, k: u32) -> Result<Ratio<i64>> {
    check_dk(d, k)?;
    let (d, k) = (i64::from(d), i64::from(k));
    Ok(if k == 1 {
        Ratio::new(2, d + 1)
    } else {
        Ratio::new(2 * k * d + 2, 3 * k * d + d + 1)
    })
}

/// Whether `λ/2 + (1-λ) = λ(2N+d)/(2(N+1))` holds exactly.
pub fn solves_balance_equation(lambda: Ratio<i64>, n: i64, d: i64) -> bool {
    let lhs = lambda / 2 + (Ratio::from_integer(1) - lambda);
    let rhs = lambda * Ratio::new(2 * n + d, 2 * (n + 1));
    lhs == rhs
}

/// Solution of the balance equation with `N` in place: `2(N+1)/(3N+d+1)`.
pub fn balance_equation_root(n: i64, d: i64) -> Ratio<i64> {
    Ratio::new(2 * (n + 1), 3 * n + d + 1)
}

/// Dimension `N'` of the span of `Y` (zero for `k = 1`).
pub fn curve_span(d: u32, k: u32) -> i64 {
    i64::from(k - 1) * i64::from(d)
}

/// The λ at which the configuration built for `(d, k)` is balanced:
/// the root of the balance equation at `N'` for `k ≥ 2`.
pub fn balancing_lambda(d: u32, k: u32) -> Result<Ratio<i64>> {
    check_dk(d, k)?;
    if k == 1 {
        return lambda_k(d, 1);
    }
    Ok(balance_equation_root(curve_span(d, k), i64::from(d)))
}

/// The star configuration in ℙ^d.
pub fn star_config(d: u32, lambda: f64) -> CycleConfig {
    let d = d as usize;
    let lines = (0..d).map(|i| CycleComponent::CoordLine { i, j: d }).collect();
    CycleConfig::new(d, lines, (0..d).collect(), lambda)
}

fn rnc_on(n: usize, weights: Vec<f64>) -> CycleComponent {
    CycleComponent::WeightedRnc { index_set: (0..=n).collect(), weights }
}

/// Which coordinate points of `ℙ^{N'}` make up `E`.
///
/// For the monomial curve `Σ_j j M_j = N'²/2` whatever the torus weights
/// (it is `∫ mean · mean' ds`), so `(Y, E)` can only balance when the
/// indices of `E` sum to `N'd/2`. The leading placement never does; the
/// symmetric one does whenever `N'd` is even.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DivisorPlacement {
    /// `E = {e_0, …, e_{d-1}}`.
    Leading,
    /// `E` symmetric about `N'/2`: `{0, …, h-1} ∪ {N'-h+1, …, N'}` plus
    /// `N'/2` when `d` is odd.
    Symmetric,
}

pub fn divisor_indices(d: u32, k: u32, placement: DivisorPlacement) -> Result<Vec<usize>> {
    let np = curve_span(d, k) as usize;
    let d = d as usize;
    if d > np + 1 {
        return Err(Error::InvalidInput(format!("{d} points do not fit on {} coordinates", np + 1)));
    }
    match placement {
        DivisorPlacement::Leading => Ok((0..d).collect()),
        DivisorPlacement::Symmetric => {
            if d % 2 == 1 && np % 2 == 1 {
                return Err(Error::InvalidInput(format!(
                    "no symmetric placement of {d} points on {} coordinates",
                    np + 1
                )));
            }
            let h = d / 2;
            let mut e: Vec<usize> = (0..h).chain(np + 1 - h..=np).collect();
            if d % 2 == 1 {
                e.push(np / 2);
            }
            e.sort_unstable();
            Ok(e)
        }
    }
}

/// `(Y, E)` in ℙ^{N'} at λ = 2/3, starting from the Veronese weights.
pub fn curve_pair_config(d: u32, k: u32, placement: DivisorPlacement) -> Result<CycleConfig> {
    let n = curve_span(d, k) as usize;
    let w = (0..=n).map(|j| (0.5 * ln_binomial(n as u64, j as u64)).exp()).collect();
    Ok(CycleConfig::new(n, vec![rnc_on(n, w)], divisor_indices(d, k, placement)?, 2.0 / 3.0))
}

/// `Y ∪ lines` in ℙ^{kd}: the lines join the points of `E` to the new
/// coordinates `N'+1, …, N'+d`, which form `D₀`.
pub fn joined_config(d: u32, k: u32, e: &[usize], curve_weights: Vec<f64>, lambda: f64) -> CycleConfig {
    let np = curve_span(d, k) as usize;
    let d = d as usize;
    let mut comps = vec![rnc_on(np, curve_weights)];
    comps.extend(e.iter().enumerate().map(|(i, &q)| CycleComponent::CoordLine { i: q, j: np + 1 + i }));
    CycleConfig::new(np + d, comps, (0..d).map(|i| np + 1 + i).collect(), lambda)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Theorem41Report {
    pub d: u32,
    pub k: u32,
    pub placement: DivisorPlacement,
    pub n: i64,
    /// `λ_k` as `"p/q"`.
    pub lambda_k: String,
    pub lambda_k_value: f64,
    /// Whether `λ_k` solves the balance equation at `N = kd`.
    pub lambda_k_solves_equation: bool,
    /// λ at which the constructed configuration actually balances.
    pub balancing_lambda: String,
    pub balancing_lambda_value: f64,
    /// `‖μ(X₀, D₀, λ_k)‖₂`.
    pub norm_at_lambda_k: f64,
    pub norm_at_balancing_lambda: f64,
    pub norm_below: f64,
    pub norm_above: f64,
    /// Residual and iterations of the `(Y, E)` flow, when one was run.
    pub curve_flow: Option<(f64, usize)>,
    pub tol: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

fn ratio_string(r: Ratio<i64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Builds the degeneration for `(d, k)` with `E` leading, evaluates `‖μ‖₂`
/// at `λ_k` and at `λ_k ± 0.05`, and records every failed assertion.
pub fn verify_theorem41(d: u32, k: u32, tol: f64) -> Result<Theorem41Report> {
    verify_theorem41_with(d, k, tol, DivisorPlacement::Leading)
}

pub fn verify_theorem41_with(d: u32, k: u32, tol: f64, placement: DivisorPlacement) -> Result<Theorem41Report> {
    if d < 3 {
        return Err(Error::InvalidInput(format!("d = {d}: the chain case d = 2 is not covered")));
    }
    let lk = lambda_k(d, k)?;
    let bl = balancing_lambda(d, k)?;
    let n = i64::from(k) * i64::from(d);
    let (base, curve_flow) = if k == 1 {
        (star_config(d, 0.0), None)
    } else {
        let pair = curve_pair_config(d, k, placement)?;
        let BalanceResult { weights, residual, iterations, .. } = balance_flow(&pair, 1e-11, FLOW_MAX_ITER)?;
        let np = curve_span(d, k) as usize;
        let curve_weights: Vec<f64> = (0..=np)
            .map(|j| (0.5 * ln_binomial(np as u64, j as u64)).exp() * weights[j])
            .collect();
        (joined_config(d, k, &pair.divisor_points, curve_weights, 0.0), Some((residual, iterations)))
    };
    let norm_at = |lambda: f64| -> Result<f64> { Ok(lambda_center_of_mass(&base.with_lambda(lambda))?.norm()) };
    let lkv = to_f64(lk);
    let norm_at_lambda_k = norm_at(lkv)?;
    let norm_below = norm_at(lkv - STRICTNESS_OFFSET)?;
    let norm_above = norm_at(lkv + STRICTNESS_OFFSET)?;
    let norm_at_balancing_lambda = norm_at(to_f64(bl))?;
    let mut failures = Vec::new();
    if !(norm_at_lambda_k <= tol) {
        failures.push(format!("|mu| = {norm_at_lambda_k:e} at lambda_k = {} exceeds {tol:e}", ratio_string(lk)));
    }
    for (v, side) in [(norm_below, "-"), (norm_above, "+")] {
        if !(v > tol) {
            failures.push(format!("|mu| = {v:e} at lambda_k {side} {STRICTNESS_OFFSET} is not above {tol:e}"));
        }
    }
    Ok(Theorem41Report {
        d,
        k,
        placement,
        n,
        lambda_k: ratio_string(lk),
        lambda_k_value: lkv,
        lambda_k_solves_equation: solves_balance_equation(lk, n, i64::from(d)),
        balancing_lambda: ratio_string(bl),
        balancing_lambda_value: to_f64(bl),
        norm_at_lambda_k,
        norm_at_balancing_lambda,
        norm_below,
        norm_above,
        curve_flow,
        tol,
        passed: failures.is_empty(),
        failures,
    })
}
