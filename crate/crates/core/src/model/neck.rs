//! The neck regime `√k / log k ≤ a < √k log k`.
//!
//! Shifting `t = u + p/a` and dividing φ by its `a`-th term gives
//!
//! ```text
//! f_a(u) = Σ_{c ≥ 1-a} exp(p (log(1 + c/a) - c/a) - c u),   μ_a = ∫ (log f_a)'' / f_a du
//! ```
//!
//! `(log f_a)''` is the variance of `c` under the weights of `f_a`, so the
//! integrand never suffers cancellation. `h_a` replaces the exponent by its
//! quadratic part, `-p c² / (2a²)`.

use crate::error::{Error, Result};
use crate::model::{ModelLevel, Regime};
use crate::numerics::{integrate_adaptive, LogReal, QuadratureSpec, SeriesWindow, SERIES_REL_CUT};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeckValues {
    pub f: LogReal,
    /// `f_a''(u)`.
    pub fdd: LogReal,
    /// `f_a` restricted to `|c| ≤ (log k)^5`.
    pub g: LogReal,
    pub h: LogReal,
}

fn ln_f_term(p: f64, a: f64, c: i64, u: f64) -> f64 {
    let r = c as f64 / a;
    p * (r.ln_1p() - r) - c as f64 * u
}

/// Mode of `c ↦ -p c²/(2a²) - c u`, which also seeds the `f_a` search.
fn seed(p: f64, a: f64, u: f64) -> i64 {
    (-u * a * a / p).round().clamp(-1e15, 1e15) as i64
}

fn f_window(level: &ModelLevel, a: u64, u: f64) -> SeriesWindow {
    let p = level.exponent();
    let af = a as f64;
    let min_c = 1 - a as i64;
    SeriesWindow::collect(
        |c| ln_f_term(p, af, c, u),
        seed(p, af, u).max(min_c),
        min_c,
        i64::MAX / 4,
        SERIES_REL_CUT,
    )
}

fn h_window(b: f64, u: f64) -> SeriesWindow {
    let start = (-u / (2.0 * b)).round().clamp(-1e15, 1e15) as i64;
    SeriesWindow::collect(
        |c| {
            let c = c as f64;
            -b * c * c - c * u
        },
        start,
        i64::MIN / 4,
        i64::MAX / 4,
        SERIES_REL_CUT,
    )
}

fn check_neck(level: &ModelLevel, a: u64) -> Result<()> {
    let found = level.regime(a);
    if found != Regime::CaseIII {
        return Err(Error::WrongRegime { a, found, expected: Regime::CaseIII });
    }
    Ok(())
}

/// Normalizer, mean and log-variance of a window.
struct WindowStats {
    ln_sum: f64,
    mean: f64,
    ln_var: f64,
}

fn stats(w: &SeriesWindow) -> WindowStats {
    let m = w.ln_moments();
    WindowStats { ln_sum: m.ln_sum, mean: m.mean, ln_var: m.ln_variance }
}

impl WindowStats {
    /// `ln Σ c² e^{L(c)}` from the centered moments.
    fn ln_second(&self) -> f64 {
        let var = LogReal::from_ln(self.ln_var);
        let mean_sq = LogReal::from_real(self.mean * self.mean);
        (var + mean_sq).ln_abs() + self.ln_sum
    }
}

/// `f_a, f_a'', g_a, h_a` at `u`.
pub fn neck_functions(level: &ModelLevel, a: u64, u: f64) -> Result<NeckValues> {
    check_neck(level, a)?;
    let bound = 2.0 * level.ln_k().powi(2);
    if !(u.abs() <= bound) {
        return Err(Error::InvalidInput(format!("|u| = {} exceeds 2 (log k)^2 = {bound}", u.abs())));
    }
    let w = f_window(level, a, u);
    let s = stats(&w);
    let cut = level.ln_k().powi(5);
    let mut g = crate::numerics::LogSum::new();
    for (c, l) in w.iter() {
        if (c as f64).abs() <= cut {
            g.push_ln(l);
        }
    }
    let b = level.exponent() / (2.0 * (a as f64).powi(2));
    Ok(NeckValues {
        f: LogReal::from_ln(s.ln_sum),
        fdd: LogReal::from_ln(s.ln_second()),
        g: g.value(),
        h: LogReal::from_ln(h_window(b, u).ln_sum()),
    })
}

/// `h_a(u) = Σ_{c∈ℤ} e^{-b c² - c u}` with `b = p / (2a²)`.
pub fn h_theta(b: f64, u: f64) -> LogReal {
    LogReal::from_ln(h_window(b, u).ln_sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeckMu {
    /// `∫_{-(log k)²}^{(log k)²} (log f)''/f du`.
    pub mu: f64,
    /// The same integrand over the rest of `u > -p/a`.
    pub tail: f64,
    pub tail_fraction: f64,
}

fn neck_integral<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, a: f64, p: f64) -> Result<f64> {
    if !(hi > lo) {
        return Ok(0.0);
    }
    // The comb has period p/a² in u and width ~ √p / a.
    let period = p / (a * a);
    let mut pts = Vec::new();
    let step = period.max(a / p.sqrt()).max(0.05);
    let mut x = (lo / step).ceil() * step;
    while x < hi && pts.len() < 4000 {
        if x > lo {
            pts.push(x);
        }
        x += step;
    }
    let spec = QuadratureSpec::new(lo, hi).with_breakpoints(pts).with_rel_tol(1e-11);
    Ok(integrate_adaptive(|u| LogReal::from_ln(g(u)), &spec)?.to_real())
}

/// Walks from `start` towards `floor` (where `t = 0`) until `g` has dropped
/// far below its value at `start`; near the floor the series window grows
/// like `1/t`, so the floor itself is never evaluated.
fn lower_support<G: Fn(f64) -> f64>(g: &G, start: f64, floor: f64) -> f64 {
    let mut reference = g(start);
    let mut lo = start;
    let mut step = 1.0;
    for _ in 0..200 {
        lo = (lo - step).max(floor + 0.5 * (lo - floor));
        let v = g(lo);
        if v < reference - 80.0 {
            break;
        }
        reference = reference.max(v);
        step *= 2.0;
    }
    lo
}

pub fn mu_neck(level: &ModelLevel, a: u64) -> Result<f64> {
    Ok(mu_neck_detailed(level, a)?.mu)
}

pub fn mu_neck_detailed(level: &ModelLevel, a: u64) -> Result<NeckMu> {
    check_neck(level, a)?;
    let p = level.exponent();
    let af = a as f64;
    let l = level.ln_k().powi(2);
    let u_min = -p / af;
    let integrand = |u: f64| {
        if u <= u_min {
            return f64::NEG_INFINITY;
        }
        let s = stats(&f_window(level, a, u));
        s.ln_var - s.ln_sum
    };
    let mut tail = integrate_adaptive(
        |u| LogReal::from_ln(integrand(u)),
        &QuadratureSpec::new(l, f64::INFINITY),
    )?
    .to_real();
    let mu = if -l > u_min {
        let lo = lower_support(&integrand, -l, u_min);
        tail += neck_integral(integrand, lo, -l, af, p)?;
        neck_integral(integrand, -l, l, af, p)?
    } else {
        let lo = lower_support(&integrand, 0.0, u_min);
        neck_integral(integrand, lo, l, af, p)?
    };
    Ok(NeckMu { mu, tail, tail_fraction: tail / (mu + tail) })
}

/// Integration-by-parts pair `(∫ f''/f², 2 ∫ f'²/f³)` over `|u| ≤ (log k)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IbpCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_diff: f64,
}

pub fn ibp_check(level: &ModelLevel, a: u64) -> Result<IbpCheck> {
    check_neck(level, a)?;
    let p = level.exponent();
    let af = a as f64;
    let l = level.ln_k().powi(2);
    let lo = if -l > -p / af {
        -l
    } else {
        lower_support(&|u| { let s = stats(&f_window(level, a, u)); s.ln_var - s.ln_sum }, 0.0, -p / af)
    };
    let lhs = neck_integral(
        |u| {
            let s = stats(&f_window(level, a, u));
            s.ln_second() - 2.0 * s.ln_sum
        },
        lo,
        l,
        af,
        p,
    )?;
    let rhs = 2.0
        * neck_integral(
            |u| {
                let s = stats(&f_window(level, a, u));
                // f'² / f³ = mean² / f
                2.0 * s.mean.abs().ln() - s.ln_sum
            },
            lo,
            l,
            af,
            p,
        )?;
    Ok(IbpCheck { lhs, rhs, rel_diff: (lhs - rhs).abs() / lhs.abs() })
}

/// `∫_ℝ h''/h² du` for `h(u) = Σ_{c∈ℤ} e^{-b c² - c u}`; equals 2 for
/// every `b > 0`.
pub fn theta_identity(b: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::InvalidInput(format!("b must be positive and finite, got {b}")));
    }
    let g = |u: f64| {
        let s = stats(&h_window(b, u));
        LogReal::from_ln(s.ln_second() - 2.0 * s.ln_sum)
    };
    // Bumps sit where neighbouring terms cross, u = b(2j + 1); for small b
    // they merge into a Gaussian of width ~ √b.
    let mut pts: Vec<f64> = Vec::new();
    for j in 0..6 {
        let c = b * (2 * j + 1) as f64;
        pts.extend([c - 4.0, c - 1.0, c, c + 1.0, c + 4.0]);
    }
    for j in 1..=16 {
        pts.push(b.sqrt() * j as f64);
    }
    let hi = 11.0 * b + 40.0 * (1.0 + b.sqrt());
    pts.retain(|&x| x > 0.0 && x < hi);
    let spec = QuadratureSpec::new(0.0, hi).with_breakpoints(pts).with_rel_tol(1e-13);
    let half = integrate_adaptive(g, &spec)?.to_real();
    // h is even, so the integrand is even too.
    let tail = integrate_adaptive(g, &QuadratureSpec::new(hi, f64::INFINITY))?.to_real();
    Ok(2.0 * (half + tail))
}
