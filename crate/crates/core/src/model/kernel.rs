//! Monomial norms, the series φ and ψ, the kernel ρ and the center-of-mass
//! integrals μ_a on the punctured disk.
//!
//! With `T_a(t) = a^p e^{-(a-1)t}` the terms of φ, the weights
//! `P_t(a) = T_a / φ` form a probability distribution on `a ≥ 1`, and
//!
//! ```text
//! ψ / φ² = e^t · Var_t(a)        μ_a = ∫₀^∞ P_t(a) Var_t(a) dt
//! ```
//!
//! The variance form is what the integrators use; ψ itself is also available
//! through the pairwise coefficients `c_l`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::ModelLevel;
use crate::numerics::{
    integrate_adaptive, integrate_adaptive_detailed, ln_gamma, LnMoments, LogReal, LogSum, QuadratureSpec,
    SeriesWindow, SERIES_REL_CUT,
};

/// Tighter cut for windows whose second moment matters.
const MOMENT_REL_CUT: f64 = 1e-30;
/// Log-drop at which an integrand is treated as outside its support.
const SUPPORT_DROP: f64 = 80.0;

fn check_index(a: i64) -> Result<()> {
    if a <= 0 {
        return Err(Error::InvalidInput(format!(
            "monomial z^{a} is not integrable against the cusp weight (need a >= 1)"
        )));
    }
    Ok(())
}

/// `‖z^a‖²_k = 2π (k-2)! / a^{k-1}`.
pub fn monomial_norm_sq(level: &ModelLevel, a: i64) -> Result<LogReal> {
    check_index(a)?;
    let k = level.k();
    Ok(LogReal::from_ln(
        (2.0 * PI).ln() + ln_gamma(k - 1.0) - (k - 1.0) * (a as f64).ln(),
    ))
}

/// The same norm by radial quadrature, `2π ∫₀^∞ t^{k-2} e^{-at} dt`.
pub fn monomial_norm_sq_quadrature(level: &ModelLevel, a: i64) -> Result<LogReal> {
    check_index(a)?;
    let k = level.k();
    let af = a as f64;
    let peak = (k - 2.0) / af;
    let width = (k - 2.0).sqrt() / af;
    let spec = QuadratureSpec::new(0.0, f64::INFINITY)
        .with_breakpoints((-8..=8).map(|j| peak + j as f64 * width).filter(|&t| t > 0.0));
    let v = integrate_adaptive(
        |t| {
            if t <= 0.0 {
                LogReal::ZERO
            } else {
                LogReal::from_ln((k - 2.0) * t.ln() - af * t)
            }
        },
        &spec,
    )?;
    Ok(v.scale_ln((2.0 * PI).ln()))
}

/// `⟨z^a, z^b⟩_k`. The angular integral `∫ e^{i(a-b)θ} dθ` vanishes exactly
/// for `a ≠ b`; only the radial integral is ever computed.
pub fn inner_product(level: &ModelLevel, a: i64, b: i64) -> Result<LogReal> {
    check_index(a)?;
    check_index(b)?;
    if a != b {
        return Ok(LogReal::ZERO);
    }
    monomial_norm_sq_quadrature(level, a)
}

/// Fraction of `‖z^a‖²` carried by `|t - (k-2)/a| ≤ √k log k / a`.
pub fn concentration_ratio(level: &ModelLevel, a: i64) -> Result<f64> {
    let half_width = level.k().sqrt() * level.ln_k() / a.max(1) as f64;
    concentration_ratio_with_half_width(level, a, half_width)
}

/// Fraction of the mass of `t^{k-2} e^{-at}` within `half_width` of its mode.
/// Computed as one minus the two tails, so the result never exceeds one.
pub fn concentration_ratio_with_half_width(level: &ModelLevel, a: i64, half_width: f64) -> Result<f64> {
    check_index(a)?;
    if !(half_width >= 0.0) {
        return Err(Error::InvalidInput(format!("half width must be >= 0, got {half_width}")));
    }
    let k = level.k();
    let af = a as f64;
    let center = (k - 2.0) / af;
    let ln_total = ln_gamma(k - 1.0) - (k - 1.0) * af.ln();
    let f = |t: f64| {
        if t <= 0.0 {
            LogReal::ZERO
        } else {
            LogReal::from_ln((k - 2.0) * t.ln() - af * t - ln_total)
        }
    };
    let left_end = center - half_width;
    let left = if left_end > 0.0 {
        integrate_adaptive(f, &QuadratureSpec::new(0.0, left_end).with_initial_panels(16))?.to_real()
    } else {
        0.0
    };
    let right_start = center + half_width;
    let right = if right_start.is_finite() {
        integrate_adaptive(f, &QuadratureSpec::new(right_start, f64::INFINITY))?.to_real()
    } else {
        0.0
    };
    Ok(1.0 - (left + right))
}

fn ln_term(p: f64, t: f64, a: i64) -> f64 {
    p * (a as f64).ln() - (a - 1) as f64 * t
}

/// The retained terms `ln T_a(t)` of φ at `t`.
pub fn phi_window(level: &ModelLevel, t: f64, rel_cut: f64) -> SeriesWindow {
    let p = level.exponent();
    let start = (p / t).round().clamp(1.0, 1e15) as i64;
    SeriesWindow::collect(|a| ln_term(p, t, a), start, 1, i64::MAX / 4, rel_cut)
}

/// Normalizer, mean and log-variance of the index distribution `P_t`.
pub fn index_moments(level: &ModelLevel, t: f64) -> LnMoments {
    phi_window(level, t, MOMENT_REL_CUT).ln_moments()
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("t = log(1/|z|^2) must be positive and finite, got {t}")));
    }
    Ok(())
}

/// `φ(t) = Σ_{a≥1} a^p e^{-(a-1)t}`.
pub fn phi_k(level: &ModelLevel, t: f64) -> Result<LogReal> {
    check_t(t)?;
    Ok(LogReal::from_ln(phi_window(level, t, SERIES_REL_CUT).ln_sum()))
}

/// `c_l = Σ_{a+b=l, 1≤a<b} a^p b^p (b-a)²`.
pub fn c_coefficient(level: &ModelLevel, l: i64) -> LogReal {
    let p = level.exponent();
    let mut acc = LogSum::new();
    for a in 1..=((l - 1) / 2) {
        let b = l - a;
        if b <= a {
            break;
        }
        acc.push_ln(p * ((a as f64).ln() + (b as f64).ln()) + 2.0 * ((b - a) as f64).ln());
    }
    acc.value()
}

/// `ψ(t) = Σ_l c_l x^{l-3}`, summed over the pairs inside the φ window.
pub fn psi_k(level: &ModelLevel, t: f64) -> Result<LogReal> {
    check_t(t)?;
    let w = phi_window(level, t, MOMENT_REL_CUT);
    let p = level.exponent();
    let (lo, hi) = (w.first(), w.last());
    let mut acc = LogSum::new();
    for l in (2 * lo + 1)..=(2 * hi - 1) {
        let mut c = LogSum::new();
        let a_min = (l - hi).max(lo);
        for a in a_min..=((l - 1) / 2) {
            let b = l - a;
            c.push_ln(p * ((a as f64).ln() + (b as f64).ln()) + 2.0 * ((b - a) as f64).ln());
        }
        let c = c.value();
        if !c.is_zero() {
            acc.push_ln(c.ln_abs() - (l - 3) as f64 * t);
        }
    }
    Ok(acc.value())
}

/// `ψ` through the variance identity `ψ = e^t φ² Var_t(a)`.
pub fn psi_k_variance_form(level: &ModelLevel, t: f64) -> Result<LogReal> {
    check_t(t)?;
    let m = index_moments(level, t);
    Ok(LogReal::from_ln(t + 2.0 * m.ln_sum + m.ln_variance))
}

/// Values of the model kernel at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    /// `ρ_{k,0} = t^k / (2π (k-2)!) · Σ a^{k-1} x^a`.
    pub rho: LogReal,
    /// Density of `ω_{k,0}` against `i dz∧dz̄`, i.e. `ψ / (2π φ²)`.
    pub omega_density: LogReal,
}

pub fn rho_k0(level: &ModelLevel, t: f64) -> Result<KernelValue> {
    check_t(t)?;
    let k = level.k();
    let m = index_moments(level, t);
    let ln_2pi = (2.0 * PI).ln();
    Ok(KernelValue {
        rho: LogReal::from_ln(k * t.ln() - t + m.ln_sum - ln_2pi - ln_gamma(k - 1.0)),
        omega_density: LogReal::from_ln(t + m.ln_variance - ln_2pi),
    })
}

/// `ln` of the μ-integrand `P_t(a) Var_t(a)`.
fn ln_mu_integrand(level: &ModelLevel, a: i64, t: f64) -> f64 {
    if t <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let m = index_moments(level, t);
    ln_term(level.exponent(), t, a) - m.ln_sum + m.ln_variance
}

/// Extends `[left, right]` until `g` has dropped by [`SUPPORT_DROP`] below
/// the largest value seen, never crossing `floor`.
fn support<G: Fn(f64) -> f64>(g: &G, left: f64, right: f64, floor: f64, step0: f64) -> (f64, f64) {
    let mut reference = g(left).max(g(right)).max(g(0.5 * (left + right)));
    let mut lo = left;
    let mut step = step0;
    for _ in 0..200 {
        // Approach the floor geometrically: near t = 0 the series window
        // grows like 1/t.
        let next = (lo - step).max(floor + 0.5 * (lo - floor));
        let v = g(next);
        reference = reference.max(v);
        lo = next;
        if v < reference - SUPPORT_DROP {
            break;
        }
        step *= 2.0;
    }
    let mut hi = right;
    step = step0;
    for _ in 0..200 {
        let next = hi + step;
        let v = g(next);
        reference = reference.max(v);
        hi = next;
        if v < reference - SUPPORT_DROP {
            break;
        }
        step *= 2.0;
    }
    (lo, hi)
}

/// Where `z^a` is the dominant term: `t ∈ [p log((a+1)/a), p log(a/(a-1))]`.
fn dominance_cell(level: &ModelLevel, a: i64) -> (f64, f64) {
    let p = level.exponent();
    let af = a as f64;
    let lo = p * (1.0 / af).ln_1p();
    let hi = if a == 1 { f64::INFINITY } else { -p * (-1.0 / af).ln_1p() };
    (lo, hi)
}

fn mu_breakpoints(level: &ModelLevel, a: i64, lo: f64, hi: f64) -> Vec<f64> {
    let (c_lo, c_hi) = dominance_cell(level, a);
    let p = level.exponent();
    let af = a as f64;
    let sigma = p.sqrt() / af;
    let center = p / af;
    let mut pts: Vec<f64> = (-16..=16).map(|j| center + 0.5 * j as f64 * sigma).collect();
    pts.push(c_lo);
    if c_hi.is_finite() {
        pts.push(c_hi);
    }
    pts.retain(|&x| x > lo && x < hi);
    pts
}

/// `μ_a = ∫₀^∞ a^p e^{-at} ψ φ^{-3} dt`, the share of `z^a` in the
/// normalized kernel against `ω_{k,0}`.
pub fn mu_direct(level: &ModelLevel, a: u64) -> Result<f64> {
    mu_on_interval(level, a, 0.0, f64::INFINITY)
}

/// The μ-integrand restricted to `t ∈ [t1, t2]`.
pub fn mu_on_interval(level: &ModelLevel, a: u64, t1: f64, t2: f64) -> Result<f64> {
    if a == 0 {
        return Err(Error::InvalidInput("index a must be >= 1".into()));
    }
    if !(t1 >= 0.0) || !(t2 >= t1) {
        return Err(Error::InvalidInput(format!("bad interval [{t1}, {t2}]")));
    }
    let a = a as i64;
    let g = |t: f64| ln_mu_integrand(level, a, t);
    let (c_lo, c_hi) = dominance_cell(level, a);
    let p = level.exponent();
    let sigma = p.sqrt() / a as f64;
    let mid_hi = if c_hi.is_finite() { c_hi } else { c_lo + 4.0 * sigma.max(1.0) };
    let (mut lo, mut hi) = support(&g, c_lo.max(1e-300), mid_hi, 0.0, sigma.max(0.25));
    if c_hi.is_infinite() {
        hi = f64::INFINITY;
    }
    lo = lo.max(t1);
    hi = hi.min(t2);
    if !(hi > lo) {
        return Ok(0.0);
    }
    let spec = QuadratureSpec::new(lo, hi)
        .with_breakpoints(mu_breakpoints(level, a, lo, hi.min(1e300)))
        .with_initial_panels(2);
    let v = integrate_adaptive(|t| LogReal::from_ln(g(t)), &spec)?;
    Ok(v.to_real())
}

/// `∫_{t0}^∞` of the `ω_{k,0}` density, radially reduced: `∫ Var_t(a) dt`.
pub fn volume_beyond(level: &ModelLevel, t0: f64) -> Result<f64> {
    if t0.is_infinite() && t0 > 0.0 {
        return Ok(0.0);
    }
    check_t(t0)?;
    // Var separates into bumps at the crossings t = p log((a+1)/a) while
    // their spacing p/a² exceeds their width √p/a; past a ≈ 4√p they merge.
    let p = level.exponent();
    let a_top = (4.0 * p.sqrt()).ceil().min(p / t0 + 1.0).max(1.0) as u64;
    let crossings = (1..=a_top).map(|a| p * (1.0 + 1.0 / a as f64).ln()).filter(|&t| t > t0);
    let spec = QuadratureSpec::new(t0, f64::INFINITY).with_breakpoints(crossings).with_initial_panels(8);
    let i = integrate_adaptive_detailed(|t| LogReal::from_ln(index_moments(level, t).ln_variance), &spec)?;
    Ok(i.value.to_real())
}

/// Closed form of [`volume_beyond`]: `∫_{t0}^∞ Var dt = E_{t0}[a] - 1`,
/// because `d/dt E_t[a] = -Var_t(a)`.
pub fn volume_beyond_closed_form(level: &ModelLevel, t0: f64) -> Result<f64> {
    if t0.is_infinite() && t0 > 0.0 {
        return Ok(0.0);
    }
    check_t(t0)?;
    Ok(index_moments(level, t0).mean - 1.0)
}

/// Volume of `{t ≥ √k / log k}` for `ω_{k,0} / k`, the form whose leading
/// part is `ω₀ / 2π`; it is `O(k^{-1/2} log k)`.
pub fn volume_near_cusp(level: &ModelLevel) -> Result<f64> {
    if level.k() < 50.0 {
        return Err(Error::InvalidInput(format!(
            "volume near the cusp needs k >= 50, got {}",
            level.k()
        )));
    }
    Ok(volume_beyond(level, level.neck_lower())? / level.k())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lv(k: f64) -> ModelLevel {
        ModelLevel::new(k).unwrap()
    }

    #[test]
    fn norms_at_k5() {
        // 2π·3! and 2π·3!/2^4
        assert_relative_eq!(monomial_norm_sq(&lv(8.0), 1).unwrap().to_real(), 2.0 * PI * 720.0, max_relative = 1e-13);
        let k5 = ModelLevel { k: 5.0 };
        assert_relative_eq!(monomial_norm_sq(&k5, 1).unwrap().to_real(), 37.699_111_843_077_52, max_relative = 1e-13);
        assert_relative_eq!(monomial_norm_sq(&k5, 2).unwrap().to_real(), 2.356_194_490_192_345, max_relative = 1e-13);
        let q = monomial_norm_sq_quadrature(&k5, 1).unwrap().to_real();
        assert_relative_eq!(q, 37.699_111_843_077_52, max_relative = 1e-10);
        assert!(monomial_norm_sq(&k5, 0).is_err());
        assert!(monomial_norm_sq(&k5, -3).is_err());
    }

    #[test]
    fn off_diagonal_inner_products_vanish() {
        let l = lv(40.0);
        assert!(inner_product(&l, 3, 5).unwrap().is_zero());
        assert!(!inner_product(&l, 4, 4).unwrap().is_zero());
    }

    #[test]
    fn concentration() {
        // half width ≈ 4.65σ of the Gamma(99, 3) profile
        let r = concentration_ratio(&lv(100.0), 3).unwrap();
        assert!(r > 0.9999 && r < 1.0, "{r}");
        let r = concentration_ratio(&lv(20.0), 1).unwrap();
        assert!(r > 0.0 && r <= 1.0);
        assert_eq!(concentration_ratio_with_half_width(&lv(20.0), 1, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn c3_for_k11_is_2_to_the_10() {
        // exponent p = 10
        assert_relative_eq!(c_coefficient(&lv(11.0), 3).to_real(), 1024.0, max_relative = 1e-14);
        // c_4 = 3^p·4
        assert_relative_eq!(c_coefficient(&lv(11.0), 4).to_real(), 4.0 * 3f64.powi(10), max_relative = 1e-14);
    }

    #[test]
    fn phi_and_psi_at_first_ladder_point() {
        // t = p log 2: φ = 1 + 2^p x + ε = 2 + ε, ψ = (1+ε)(2^p + 6^p 4^{-p})
        let l = lv(61.0);
        let p = l.exponent();
        let t = p * 2f64.ln();
        let phi = phi_k(&l, t).unwrap().to_real();
        assert!((phi - 2.0).abs() < 1e-6, "{phi}");
        let psi = psi_k(&l, t).unwrap();
        let expect = (2f64.powf(p) + 1.5f64.powf(p)).ln();
        assert!((psi.ln_abs() - expect).abs() < 1e-6);
    }

    #[test]
    fn psi_forms_agree() {
        for &(k, t) in &[(20.0, 0.7), (61.0, 15.0), (400.0, 2.0), (400.0, 260.0)] {
            let l = lv(k);
            let a = psi_k(&l, t).unwrap().ln_abs();
            let b = psi_k_variance_form(&l, t).unwrap().ln_abs();
            assert!((a - b).abs() < 1e-11 * a.abs().max(1.0), "k={k} t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn rho_in_the_bulk_and_deep_cusp() {
        let l = lv(400.0);
        let t = 1.0 / (20.0 * l.ln_k() * 0.5);
        let v = rho_k0(&l, t).unwrap();
        let r = 2.0 * PI * v.rho.to_real() / 400.0;
        assert!((r - 1.0).abs() <= 5.0 / 400.0, "{r}");
        // deep cusp: full sum / first term
        let t = 800.0;
        let w = phi_window(&l, t, SERIES_REL_CUT);
        let ratio = (w.ln_sum() - ln_term(l.exponent(), t, 1)).exp();
        assert!((1.0..=1.0 + 1e-12).contains(&ratio));
        assert!(v.omega_density.to_real() > 0.0);
    }

    #[test]
    fn volume_routes_agree() {
        let l = lv(100.0);
        let t0 = l.neck_lower();
        let q = volume_beyond(&l, t0).unwrap();
        let c = volume_beyond_closed_form(&l, t0).unwrap();
        assert_relative_eq!(q, c, max_relative = 1e-9);
        assert_eq!(volume_beyond(&l, f64::INFINITY).unwrap(), 0.0);
        let v = volume_near_cusp(&l).unwrap();
        let ratio = v / (l.ln_k() / 10.0);
        assert!(ratio > 0.0 && ratio <= 10.0, "{ratio}");
    }

    #[test]
    fn mu_values_at_k400() {
        let l = lv(400.0);
        let m1 = mu_direct(&l, 1).unwrap();
        let m3 = mu_direct(&l, 3).unwrap();
        assert!((m1 - 0.5).abs() < 0.02, "{m1}");
        assert!((m3 - 1.0).abs() < 0.02, "{m3}");
    }
}
