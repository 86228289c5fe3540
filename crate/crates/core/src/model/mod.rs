//! The punctured-disk model: conventions, regimes and the kernel series.
//!
//! Convention: a level `k` always means the Bergman space `H_{k,0}` with
//! weight `(log 1/|z|²)^k`, and the associated series carry the exponent
//! `p = k - 1`:
//!
//! ```text
//! φ(x) = Σ_{a≥1} a^p x^{a-1},   ψ = φ Δφ - |∂φ|²,   μ_a = ∫₀¹ a^p x^{a-1} ψ φ^{-3} dx
//! ```
//!
//! Written with the exponent `k` in place of `p`, those formulas describe
//! `H_{k+1,0}`; everything in this crate is stated for `H_{k,0}` instead.
//! All radial quantities are evaluated in `t = log(1/x)`, `x = |z|²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod kernel;
pub mod ladder;
pub mod neck;

pub use kernel::*;
pub use ladder::*;
pub use neck::*;

/// Smallest level for which the three regimes are separated.
pub const MIN_LEVEL: f64 = 8.0;

/// A tensor power `k` of the model. Real-valued because the global
/// estimates rescale it by the scalar curvature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelLevel {
    k: f64,
}

impl ModelLevel {
    pub fn new(k: f64) -> Result<Self> {
        if !(k >= MIN_LEVEL) || !k.is_finite() {
            return Err(Error::InvalidInput(format!(
                "model level must be a finite real >= {MIN_LEVEL}, got {k}"
            )));
        }
        Ok(ModelLevel { k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Exponent `p = k - 1` of the series φ.
    pub fn exponent(&self) -> f64 {
        self.k - 1.0
    }

    pub fn ln_k(&self) -> f64 {
        self.k.ln()
    }

    /// `√k / log k`, the lower edge of the neck.
    pub fn neck_lower(&self) -> f64 {
        self.k.sqrt() / self.ln_k()
    }

    /// `√k · log k`, the upper edge of the neck.
    pub fn neck_upper(&self) -> f64 {
        self.k.sqrt() * self.ln_k()
    }

    pub fn regime(&self, a: u64) -> Regime {
        let a = a as f64;
        if a >= self.neck_upper() {
            Regime::CaseI
        } else if a >= self.neck_lower() {
            Regime::CaseIII
        } else {
            Regime::CaseII
        }
    }

    pub fn index(&self, a: u64) -> Result<RegimeIndex> {
        if a == 0 {
            return Err(Error::InvalidInput(
                "index a must be >= 1 (z^0 is not in the Bergman space)".into(),
            ));
        }
        Ok(RegimeIndex {
            level: *self,
            a,
            regime: self.regime(a),
        })
    }
}

/// Which asymptotic description applies to the section `z^a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Bulk: `a ≥ √k log k`.
    CaseI,
    /// Deep cusp, ladder-dominated: `a < √k / log k`.
    CaseII,
    /// Neck: `√k / log k ≤ a < √k log k`.
    CaseIII,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::CaseI => "I",
            Regime::CaseII => "II",
            Regime::CaseIII => "III",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeIndex {
    pub level: ModelLevel,
    pub a: u64,
    pub regime: Regime,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_levels() {
        assert!(ModelLevel::new(7.9).is_err());
        assert!(ModelLevel::new(f64::NAN).is_err());
        assert!(ModelLevel::new(8.0).is_ok());
    }

    #[test]
    fn regime_edges_at_k_10000() {
        // √k / log k = 10.857..., √k log k = 921.03...
        let lv = ModelLevel::new(1e4).unwrap();
        assert_eq!(lv.regime(10), Regime::CaseII);
        assert_eq!(lv.regime(11), Regime::CaseIII);
        assert_eq!(lv.regime(921), Regime::CaseIII);
        assert_eq!(lv.regime(922), Regime::CaseI);
        assert!(lv.index(0).is_err());
    }
}
