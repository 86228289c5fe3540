//! Signed scalars stored as `sign * exp(logmag)`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A signed real number held in log-magnitude form.
///
/// Series terms such as `a^(k-1) x^(a-1)` overflow `f64` long before the
/// quantities built from them stop being meaningful, so every such term is
/// carried as a `LogReal` and only leaves log-space at the very end.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogReal {
    sign: i8,
    logmag: f64,
}

impl LogReal {
    pub const ZERO: LogReal = LogReal {
        sign: 0,
        logmag: f64::NEG_INFINITY,
    };
    pub const ONE: LogReal = LogReal {
        sign: 1,
        logmag: 0.0,
    };

    /// Positive number `exp(logmag)`. A `-inf` log-magnitude gives zero.
    pub fn from_ln(logmag: f64) -> Self {
        if logmag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogReal { sign: 1, logmag }
        }
    }

    pub fn from_parts(sign: i8, logmag: f64) -> Self {
        if sign == 0 || logmag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogReal {
                sign: sign.signum(),
                logmag,
            }
        }
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else if x.is_nan() {
            LogReal {
                sign: 1,
                logmag: f64::NAN,
            }
        } else {
            LogReal {
                sign: if x > 0.0 { 1 } else { -1 },
                logmag: x.abs().ln(),
            }
        }
    }

    pub fn to_real(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.logmag.exp(),
        }
    }

    /// Natural log of the absolute value (`-inf` for zero).
    pub fn ln_abs(self) -> f64 {
        self.logmag
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn is_finite(self) -> bool {
        self.sign == 0 || self.logmag.is_finite()
    }

    pub fn abs(self) -> Self {
        LogReal {
            sign: self.sign.abs(),
            logmag: self.logmag,
        }
    }

    pub fn powf(self, e: f64) -> Self {
        assert!(self.sign >= 0, "powf of a negative LogReal");
        if self.sign == 0 {
            return if e == 0.0 { Self::ONE } else { Self::ZERO };
        }
        Self::from_ln(self.logmag * e)
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        LogReal {
            sign: self.sign,
            logmag: -self.logmag,
        }
    }

    /// Scales by `exp(shift)`.
    pub fn scale_ln(self, shift: f64) -> Self {
        if self.sign == 0 {
            self
        } else {
            LogReal {
                sign: self.sign,
                logmag: self.logmag + shift,
            }
        }
    }

    /// Compares absolute values.
    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        self.logmag.total_cmp(&other.logmag)
    }
}

impl Default for LogReal {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Display for LogReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}exp({})", if s < 0 { "-" } else { "" }, self.logmag),
        }
    }
}

impl Mul for LogReal {
    type Output = LogReal;
    fn mul(self, rhs: LogReal) -> LogReal {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        LogReal {
            sign: self.sign * rhs.sign,
            logmag: self.logmag + rhs.logmag,
        }
    }
}

impl Div for LogReal {
    type Output = LogReal;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: LogReal) -> LogReal {
        self * rhs.recip()
    }
}

impl Neg for LogReal {
    type Output = LogReal;
    fn neg(self) -> LogReal {
        LogReal {
            sign: -self.sign,
            logmag: self.logmag,
        }
    }
}

impl Add for LogReal {
    type Output = LogReal;
    fn add(self, rhs: LogReal) -> LogReal {
        log_sum_exp(&[self, rhs])
    }
}

impl Sub for LogReal {
    type Output = LogReal;
    fn sub(self, rhs: LogReal) -> LogReal {
        log_sum_exp(&[self, -rhs])
    }
}

impl Sum for LogReal {
    fn sum<I: Iterator<Item = LogReal>>(iter: I) -> LogReal {
        let mut acc = LogSum::new();
        for x in iter {
            acc.push(x);
        }
        acc.value()
    }
}

/// Signed sum of log-space terms, pivoting on the largest magnitude.
pub fn log_sum_exp(terms: &[LogReal]) -> LogReal {
    let Some(pivot) = terms
        .iter()
        .enumerate()
        .filter(|(_, t)| t.sign != 0)
        .max_by(|a, b| a.1.logmag.total_cmp(&b.1.logmag))
        .map(|(i, _)| i)
    else {
        return LogReal::ZERO;
    };
    let p = terms[pivot];
    if !p.logmag.is_finite() {
        return p;
    }
    // Everything is expressed relative to the pivot, which contributes exactly 1.
    let mut rest = 0.0;
    let mut comp = 0.0;
    for (i, t) in terms.iter().enumerate() {
        if i == pivot || t.sign == 0 {
            continue;
        }
        let v = f64::from(t.sign * p.sign) * (t.logmag - p.logmag).exp();
        // Kahan summation keeps permutation sensitivity at the rounding level.
        let y = v - comp;
        let s = rest + y;
        comp = (s - rest) - y;
        rest = s;
    }
    combine(p.sign, p.logmag, rest)
}

fn combine(sign: i8, logmag: f64, rest: f64) -> LogReal {
    let total = 1.0 + rest;
    if total == 0.0 {
        LogReal::ZERO
    } else if total > 0.0 {
        LogReal {
            sign,
            logmag: logmag + rest.ln_1p(),
        }
    } else {
        LogReal {
            sign: -sign,
            logmag: logmag + (-total).ln(),
        }
    }
}

/// Streaming version of [`log_sum_exp`] for sums too long to buffer.
#[derive(Clone, Debug)]
pub struct LogSum {
    pivot: f64,
    sum: f64,
}

impl LogSum {
    pub fn new() -> Self {
        LogSum {
            pivot: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    pub fn push(&mut self, x: LogReal) {
        if x.sign == 0 {
            return;
        }
        let v = f64::from(x.sign);
        if x.logmag > self.pivot {
            if self.pivot.is_finite() {
                self.sum *= (self.pivot - x.logmag).exp();
            } else {
                self.sum = 0.0;
            }
            self.pivot = x.logmag;
            self.sum += v;
        } else {
            self.sum += v * (x.logmag - self.pivot).exp();
        }
    }

    pub fn push_ln(&mut self, logmag: f64) {
        self.push(LogReal::from_ln(logmag));
    }

    pub fn value(&self) -> LogReal {
        if !self.pivot.is_finite() || self.sum == 0.0 {
            return LogReal::ZERO;
        }
        LogReal::from_real(self.sum).scale_ln(self.pivot)
    }
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_plus_one() {
        let s = log_sum_exp(&[LogReal::ONE, LogReal::ONE]);
        assert_eq!(s.sign(), 1);
        assert!((s.ln_abs() - 2f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn single_term_is_identity() {
        for x in [-3.5, 1e-300, 7.0e200] {
            let t = LogReal::from_real(x);
            assert_eq!(log_sum_exp(&[t]), t);
        }
        let big = LogReal::from_ln(5000.0);
        assert_eq!(log_sum_exp(&[big]), big);
    }

    #[test]
    fn huge_terms_do_not_overflow() {
        // 1000 + log(1 + e^-2) to 40 digits: 1000.126928011042972496443726806358304431
        let s = log_sum_exp(&[LogReal::from_ln(1000.0), LogReal::from_ln(998.0)]);
        assert!((s.ln_abs() - 1_000.126_928_011_043).abs() < 1e-12);
    }

    #[test]
    fn empty_and_zero_terms() {
        assert!(log_sum_exp(&[]).is_zero());
        assert!(log_sum_exp(&[LogReal::ZERO, LogReal::ZERO]).is_zero());
        let x = LogReal::from_real(2.5);
        assert_eq!(log_sum_exp(&[LogReal::ZERO, x]), x);
    }

    #[test]
    fn cancellation_gives_sign_flip() {
        let s = LogReal::from_real(2.0) - LogReal::from_real(5.0);
        assert!((s.to_real() + 3.0).abs() < 1e-15);
        assert!((LogReal::from_real(4.0) - LogReal::from_real(4.0)).is_zero());
    }

    #[test]
    fn product_adds_logmags() {
        let a = LogReal::from_ln(700.25);
        let b = LogReal::from_parts(-1, 800.5);
        let p = a * b;
        assert_eq!(p.ln_abs(), 700.25 + 800.5);
        assert_eq!(p.sign(), -1);
    }

    #[test]
    fn streaming_matches_batch() {
        let terms: Vec<LogReal> = (0..50)
            .map(|i| LogReal::from_parts(if i % 7 == 3 { -1 } else { 1 }, (i as f64) * 13.1 - 200.0))
            .collect();
        let mut acc = LogSum::new();
        for &t in &terms {
            acc.push(t);
        }
        let a = acc.value();
        let b = log_sum_exp(&terms);
        assert_eq!(a.sign(), b.sign());
        assert!((a.ln_abs() - b.ln_abs()).abs() < 1e-13);
    }
}
