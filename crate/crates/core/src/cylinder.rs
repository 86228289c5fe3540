//! The flat-cylinder model of the neck.
//!
//! Near the circle `t = (k-2)/a` the weight `t^{k-2} e^{-at}` is Gaussian in
//! `u = t - (k-2)/a`, which turns the annulus into ℂ* with the measure
//! `e^{-a²u²/(2k)} du dθ`. There every `z^c`, `c ∈ ℤ`, is square-integrable
//! with `‖z^c‖² ∝ e^{kc²/(2a²)}`, and the kernel is a Gaussian comb.

use crate::error::{Error, Result};
use crate::model::{rho_k0, ModelLevel, Regime};
use crate::numerics::{LogReal, SeriesWindow, SERIES_REL_CUT};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylinderParams {
    k: f64,
    a: u64,
}

impl CylinderParams {
    /// Requires `(k, a)` to be a neck index of the model at level `k`.
    pub fn new(k: f64, a: u64) -> Result<Self> {
        let level = ModelLevel::new(k)?;
        let found = level.regime(a);
        if found != Regime::CaseIII {
            return Err(Error::WrongRegime { a, found, expected: Regime::CaseIII });
        }
        Ok(CylinderParams { k, a })
    }

    pub fn for_level(level: &ModelLevel, a: u64) -> Result<Self> {
        Self::new(level.k(), a)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    /// `k / a²`, the period of the comb.
    pub fn period(&self) -> f64 {
        self.k / (self.a as f64).powi(2)
    }

    /// `k / (2a²)`.
    pub fn theta_b(&self) -> f64 {
        0.5 * self.period()
    }
}

/// `‖z^c‖² = e^{k c² / (2a²)}`.
pub fn cylinder_norm_sq(p: &CylinderParams, c: i64) -> LogReal {
    LogReal::from_ln(p.theta_b() * (c as f64).powi(2))
}

/// `ρ(u) = Σ_{c∈ℤ} e^{-(a²/2k)(u - k c/a²)²}`.
pub fn cylinder_rho(p: &CylinderParams, u: f64) -> LogReal {
    let period = p.period();
    let inv = 1.0 / (2.0 * period);
    let start = (u / period).round().clamp(-1e15, 1e15) as i64;
    let w = SeriesWindow::collect(
        |c| {
            let d = u - period * c as f64;
            -d * d * inv
        },
        start,
        i64::MIN / 4,
        i64::MAX / 4,
        SERIES_REL_CUT,
    );
    LogReal::from_ln(w.ln_sum())
}

/// Half-width of the comparison window: where `e^{-a²u²/(2k)}` falls to
/// `1e-6`.
pub fn comparison_half_width(p: &CylinderParams) -> f64 {
    (2.0 * 1e6f64.ln() * p.period()).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskComparison {
    /// `sup |ρ_cyl(u)/ρ_cyl(0) · ρ_disk(t0)/ρ_disk(t0+u) - 1|`.
    pub sup_deviation: f64,
    pub u_at_sup: f64,
    pub t0: f64,
    pub half_width: f64,
    pub points: usize,
}

/// Compares the comb with `ρ_{k,0}` on the annulus around `t0 = (k-2)/a`,
/// both normalized to one at `u = 0`.
pub fn cylinder_vs_disk_deviation(p: &CylinderParams, points: usize) -> Result<DiskComparison> {
    if points < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 grid points, got {points}")));
    }
    let level = ModelLevel::new(p.k)?;
    let t0 = (p.k - 2.0) / p.a as f64;
    let half_width = comparison_half_width(p).min(0.999 * t0);
    let disk0 = rho_k0(&level, t0)?.rho.ln_abs();
    let cyl0 = cylinder_rho(p, 0.0).ln_abs();
    let mut sup = 0.0f64;
    let mut u_at = 0.0;
    for j in 0..points {
        let u = -half_width + 2.0 * half_width * j as f64 / (points - 1) as f64;
        let disk = rho_k0(&level, t0 + u)?.rho.ln_abs() - disk0;
        let cyl = cylinder_rho(p, u).ln_abs() - cyl0;
        let dev = (cyl - disk).exp_m1().abs();
        if dev > sup {
            sup = dev;
            u_at = u;
        }
    }
    Ok(DiskComparison { sup_deviation: sup, u_at_sup: u_at, t0, half_width, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::h_theta;

    fn neck() -> CylinderParams {
        CylinderParams::new(1e4, 100).unwrap()
    }

    #[test]
    fn norms() {
        let p = neck();
        assert_eq!(cylinder_norm_sq(&p, 0).to_real(), 1.0);
        assert!((cylinder_norm_sq(&p, 1).to_real() - 0.5f64.exp()).abs() < 1e-15);
        assert_eq!(cylinder_norm_sq(&p, 3), cylinder_norm_sq(&p, -3));
    }

    #[test]
    fn rho_at_zero_with_wide_spacing() {
        // k/a² = 25: three dominant terms c = -1, 0, 1
        let p = CylinderParams::new(1e4, 20).unwrap();
        let expect = 1.0 + 2.0 * (-p.theta_b()).exp();
        assert!((cylinder_rho(&p, 0.0).to_real() / expect - 1.0).abs() < 1e-15);
    }

    #[test]
    fn periodic_and_even() {
        let p = CylinderParams::new(1e4, 37).unwrap();
        for &u in &[0.0, 0.4, 3.3, -11.0] {
            let r = cylinder_rho(&p, u).ln_abs();
            assert!((cylinder_rho(&p, u + p.period()).ln_abs() - r).abs() < 1e-13);
            assert!((cylinder_rho(&p, -u).ln_abs() - r).abs() < 1e-13);
        }
    }

    #[test]
    fn h_relation() {
        let p = neck();
        for &u in &[0.0, 1.7, -23.0, 60.0] {
            let lhs = h_theta(p.theta_b(), u).ln_abs();
            let rhs = cylinder_rho(&p, u).ln_abs() + (p.a as f64).powi(2) * u * u / (2.0 * p.k);
            assert!(((lhs - rhs).abs()) < 1e-12 * lhs.abs().max(1.0), "u={u}");
        }
    }

    #[test]
    fn matches_the_disk_kernel() {
        let c = cylinder_vs_disk_deviation(&neck(), 2001).unwrap();
        assert!(c.sup_deviation <= 1e-2, "{c:?}");
    }

    #[test]
    fn rejects_non_neck_indices() {
        assert!(CylinderParams::new(1e4, 2).is_err());
    }
}
