//! Log-Gamma and friends.

use std::f64::consts::PI;

// B_{2j} / (2j (2j - 1)) for j = 1..=8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

const SHIFT: f64 = 15.0;

/// `ln Γ(x)` for `x > 0` by the Stirling series after upward recurrence to
/// `x >= 15`. Truncation error is below `1e-20`; the result is limited by
/// `f64` rounding only.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma requires x > 0, got {x}");
    if x.is_infinite() {
        return f64::INFINITY;
    }
    let mut y = x;
    let mut shift = 0.0;
    if y < SHIFT {
        let mut prod = 1.0;
        while y < SHIFT {
            prod *= y;
            y += 1.0;
        }
        shift = prod.ln();
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut pow = inv;
    for c in STIRLING {
        series += c * pow;
        pow *= inv2;
    }
    (y - 0.5) * y.ln() - y + 0.5 * (2.0 * PI).ln() + series - shift
}

/// `ln n!` for real `n >= 0`.
pub fn ln_factorial(n: f64) -> f64 {
    ln_gamma(n + 1.0)
}

/// `ln C(n, j)`.
pub fn ln_binomial(n: u64, j: u64) -> f64 {
    assert!(j <= n);
    ln_factorial(n as f64) - ln_factorial(j as f64) - ln_factorial((n - j) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integer_and_small_values() {
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-15);
        assert!(ln_gamma(1.0).abs() < 1e-13);
        assert!(ln_gamma(2.0).abs() < 1e-13);
        // Γ(1e-3) = 999.4237724845955
        assert!((ln_gamma(1e-3) - 999.423_772_484_595_5_f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn agrees_with_summed_logs_of_integers() {
        let mut acc = 0.0f64;
        for n in 1..3000u32 {
            // acc = ln((n-1)!)
            let g = ln_gamma(f64::from(n));
            assert!(
                (g - acc).abs() <= 1e-13 * acc.abs().max(1.0),
                "n = {n}: {g} vs {acc}"
            );
            acc += f64::from(n).ln();
        }
    }

    #[test]
    fn recurrence_holds_across_the_shift() {
        for &x in &[0.3, 3.7, 14.2, 14.99, 15.0, 27.5, 1234.5] {
            let lhs = ln_gamma(x + 1.0);
            let rhs = ln_gamma(x) + f64::ln(x);
            assert!((lhs - rhs).abs() < 2e-13 * lhs.abs().max(1.0), "{x}");
        }
    }

    #[test]
    fn binomial() {
        assert!((ln_binomial(12, 6) - 924f64.ln()).abs() < 1e-13);
        assert!(ln_binomial(7, 0).abs() < 1e-13);
    }
}
