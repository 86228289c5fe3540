//! The ladder of radii on which φ and ψ are two-term dominated, and the
//! rational-function integrals that build μ_a from it.
//!
//! With `a_n = (n+1)/n`, `b_n = √((n+2)/n)` and `p = k - 1` the cells are
//!
//! ```text
//! A_n : t ∈ [p log b_n, p log a_n]        (A_1 extends to t = ∞)
//! B_n : t ∈ [p log a_{n+1}, p log b_n]
//! ```
//!
//! On `A_n` the terms `n, n+1` of φ dominate, on `B_n` the terms `n+1, n+2`;
//! on both, ψ is carried by the pairs `(n, n+1)` and `(n+1, n+2)`.
//!
//! Integrals are indexed like the integrand `(a+1)^p x^a ψ φ^{-3}`, so
//! `μ_s` collects the pieces with `a = s - 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelLevel;
use crate::numerics::{integrate_adaptive, LogReal, LogSum, QuadratureSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderCell {
    pub n: u32,
    pub kind: CellKind,
    pub t_lo: f64,
    pub t_hi: f64,
}

/// The cells `A_1, B_1, …, A_{n_max}, B_{n_max}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderPartition {
    level: ModelLevel,
    n_max: u32,
}

fn largest_n_below(bound: f64) -> u32 {
    // n² < bound
    let mut n = bound.sqrt().floor() as u32;
    while n > 0 && f64::from(n).powi(2) >= bound {
        n -= 1;
    }
    n
}

/// `n_max` with `n² < k / (2 log k)`.
pub fn strict_n_max(level: &ModelLevel) -> u32 {
    largest_n_below(level.k() / (2.0 * level.ln_k()))
}

/// `n_max` with `n² < k / log k`.
pub fn relaxed_n_max(level: &ModelLevel) -> u32 {
    largest_n_below(level.k() / level.ln_k())
}

impl LadderPartition {
    /// Partition capped at `n² < k / (2 log k)`.
    pub fn new(level: ModelLevel) -> Result<Self> {
        Self::with_n_max(level, strict_n_max(&level))
    }

    /// Partition capped at `n² < k / log k`, the widest cap the two-term
    /// approximation is still asymptotically valid for.
    pub fn relaxed(level: ModelLevel) -> Result<Self> {
        Self::with_n_max(level, relaxed_n_max(&level))
    }

    pub fn with_n_max(level: ModelLevel, n_max: u32) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidInput(format!("ladder at k = {} has no cells", level.k())));
        }
        if n_max > relaxed_n_max(&level) {
            return Err(Error::OutOfLadder {
                t: t_a(&level, n_max + 1),
                n_max: relaxed_n_max(&level),
            });
        }
        Ok(LadderPartition { level, n_max })
    }

    pub fn level(&self) -> &ModelLevel {
        &self.level
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// Lowest `t` covered: `p log a_{n_max+1}`.
    pub fn t_min(&self) -> f64 {
        t_a(&self.level, self.n_max + 1)
    }

    pub fn cell(&self, n: u32, kind: CellKind) -> Result<LadderCell> {
        if n == 0 || n > self.n_max {
            return Err(Error::OutOfLadder { t: t_a(&self.level, n.max(1)), n_max: self.n_max });
        }
        Ok(make_cell(&self.level, n, kind))
    }

    pub fn cells(&self) -> impl Iterator<Item = LadderCell> + '_ {
        (1..=self.n_max).flat_map(move |n| {
            [make_cell(&self.level, n, CellKind::A), make_cell(&self.level, n, CellKind::B)]
        })
    }

    /// The cell containing `t` (cells are closed; a shared edge resolves to
    /// the cell with the smaller `n`, `A` before `B`).
    pub fn locate(&self, t: f64) -> Result<LadderCell> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
        }
        if t < self.t_min() {
            return Err(Error::OutOfLadder { t, n_max: self.n_max });
        }
        for n in 1..=self.n_max {
            if t >= t_b(&self.level, n) {
                return Ok(make_cell(&self.level, n, CellKind::A));
            }
            if t >= t_a(&self.level, n + 1) {
                return Ok(make_cell(&self.level, n, CellKind::B));
            }
        }
        Err(Error::OutOfLadder { t, n_max: self.n_max })
    }
}

/// `p log a_n`.
fn t_a(level: &ModelLevel, n: u32) -> f64 {
    level.exponent() * (1.0 / f64::from(n)).ln_1p()
}

/// `p log b_n`.
fn t_b(level: &ModelLevel, n: u32) -> f64 {
    0.5 * level.exponent() * (2.0 / f64::from(n)).ln_1p()
}

fn make_cell(level: &ModelLevel, n: u32, kind: CellKind) -> LadderCell {
    match kind {
        CellKind::A => LadderCell {
            n,
            kind,
            t_lo: t_b(level, n),
            t_hi: if n == 1 { f64::INFINITY } else { t_a(level, n) },
        },
        CellKind::B => LadderCell { n, kind, t_lo: t_a(level, n + 1), t_hi: t_b(level, n) },
    }
}

/// Two-term approximants of `(φ, ψ)` at `t`.
pub fn ladder_approx(t: f64, partition: &LadderPartition) -> Result<(LogReal, LogReal)> {
    let cell = partition.locate(t)?;
    let p = partition.level().exponent();
    let n = f64::from(cell.n);
    let term = |a: f64| p * a.ln() - (a - 1.0) * t;
    let phi = match cell.kind {
        CellKind::A => LogReal::from_ln(term(n)) + LogReal::from_ln(term(n + 1.0)),
        CellKind::B => LogReal::from_ln(term(n + 1.0)) + LogReal::from_ln(term(n + 2.0)),
    };
    let psi = LogReal::from_ln(p * (n * (n + 1.0)).ln() - (2.0 * n - 2.0) * t)
        + LogReal::from_ln(p * ((n + 1.0) * (n + 2.0)).ln() - 2.0 * n * t);
    Ok((phi, psi))
}

/// `ln ∫_{lo}^{hi} y^m (1 + β y²) / (1 + y)³ dy`, integrated in `s = log y`.
fn ln_rational_integral(m: f64, ln_beta: f64, s_lo: f64, s_hi: f64) -> Result<f64> {
    if !(s_hi > s_lo) {
        return Ok(f64::NEG_INFINITY);
    }
    let f = |s: f64| {
        let quad = ln_1p_exp(ln_beta + 2.0 * s);
        LogReal::from_ln((m + 1.0) * s + quad - 3.0 * ln_1p_exp(s))
    };
    let mut pts = vec![0.0, -0.5 * ln_beta];
    for j in -6..=6 {
        pts.push(j as f64);
    }
    pts.retain(|&x| x > s_lo && x < s_hi);
    let spec = QuadratureSpec::new(s_lo, s_hi).with_breakpoints(pts).with_rel_tol(1e-12);
    Ok(integrate_adaptive(f, &spec)?.ln_abs())
}

/// `ln(1 + e^x)` without overflow.
fn ln_1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

struct Factors {
    /// `ln` of the prefactor of the `A_n` integral.
    ln_c: f64,
    /// `m = a - n + 1`.
    m: f64,
    /// `ln b` with `b = (n(n+2)/(n+1)²)^p`.
    ln_b: f64,
    /// `ln` of the prefactor of the `B_n` integral.
    ln_c_prime: f64,
    /// `m' = a - n - 2`.
    m_prime: f64,
}

fn factors(level: &ModelLevel, a: u64, n: u32) -> Factors {
    let p = level.exponent();
    let af = a as f64;
    let nf = f64::from(n);
    let m = af - nf + 1.0;
    let ln_ratio = nf.ln() - (nf + 1.0).ln();
    let ln_c = p * ((af + 1.0).ln() - (nf + 1.0).ln()) + p * (m - 1.0) * ln_ratio;
    let ln_b = p * (nf.ln() + (nf + 2.0).ln() - 2.0 * (nf + 1.0).ln());
    let m_prime = af - nf - 2.0;
    let ln_s = p * ((nf + 2.0).ln() - (nf + 1.0).ln());
    let ln_c_prime = p * ((af + 1.0).ln() + nf.ln() - 2.0 * (nf + 1.0).ln()) - (m_prime + 1.0) * ln_s;
    Factors { ln_c, m, ln_b, ln_c_prime, m_prime }
}

/// `I_{a,n}` over `A_n` (for `n = 1` without the cusp cap `t > p log a_1`)
/// and `I'_{a,n}` over `B_n`, both with the two-term approximants.
fn ladder_pair(level: &ModelLevel, a: u64, n: u32) -> Result<(f64, f64)> {
    let f = factors(level, a, n);
    // A_n: y from 1 to b^{-1/2}
    let i = ln_rational_integral(f.m, f.ln_b, 0.0, -0.5 * f.ln_b)?;
    // B_n: y from b^{1/2} to 1, with β = 1/b
    let ip = ln_rational_integral(f.m_prime, -f.ln_b, 0.5 * f.ln_b, 0.0)?;
    Ok(((f.ln_c + i).exp(), (f.ln_c_prime + ip).exp()))
}

/// `(I_{a,n}, I'_{a,n})`. Expected values for `n ≥ 2`: `3/8` at `a = n`,
/// `1/8` at `a = n - 1`, negligible at `a = n - 2`.
pub fn ladder_integrals(level: &ModelLevel, a: u64, n: u32) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("ladder integrals need n >= 2, got {n}")));
    }
    let cap = relaxed_n_max(level);
    if n > cap {
        return Err(Error::OutOfLadder { t: t_a(level, n), n_max: cap });
    }
    ladder_pair(level, a, n)
}

/// Contribution of `t ≥ p log 2` beyond the `A_1` cell, i.e. `y ∈ (0, 1]`.
fn cusp_cap(level: &ModelLevel, a: u64) -> Result<f64> {
    let f = factors(level, a, 1);
    // The integrand behaves like y^m near 0; start far enough out.
    let s_lo = (-745.0 / (f.m + 1.0).max(1e-3)).max(-745.0);
    let i = ln_rational_integral(f.m, f.ln_b, s_lo, 0.0)?;
    Ok((f.ln_c + i).exp())
}

/// Breakdown of the ladder route for one index.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderSum {
    pub mu: f64,
    pub cusp_cap: f64,
    /// `(n, I_{a,n}, I'_{a,n})` for `n = 1..=n_max`.
    pub cells: Vec<(u32, f64, f64)>,
}

/// `μ_s` summed from the ladder integrals over the relaxed partition.
pub fn mu_ladder_sum(level: &ModelLevel, s: u64) -> Result<LadderSum> {
    if s == 0 {
        return Err(Error::InvalidInput("index must be >= 1".into()));
    }
    let a = s - 1;
    let n_max = relaxed_n_max(level);
    let cap = cusp_cap(level, a)?;
    let mut acc = LogSum::new();
    acc.push(LogReal::from_real(cap));
    let mut cells = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let (i, ip) = ladder_pair(level, a, n)?;
        acc.push(LogReal::from_real(i));
        acc.push(LogReal::from_real(ip));
        cells.push((n, i, ip));
    }
    Ok(LadderSum { mu: acc.value().to_real(), cusp_cap: cap, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::kernel::{phi_k, psi_k};

    fn lv(k: f64) -> ModelLevel {
        ModelLevel::new(k).unwrap()
    }

    #[test]
    fn caps() {
        // k/(2 log k) ≈ 33.4, k/log k ≈ 66.8 at k = 400
        assert_eq!(strict_n_max(&lv(400.0)), 5);
        assert_eq!(relaxed_n_max(&lv(400.0)), 8);
    }

    #[test]
    fn cells_tile_the_ladder() {
        let part = LadderPartition::new(lv(400.0)).unwrap();
        let cells: Vec<_> = part.cells().collect();
        assert!(cells[0].t_hi.is_infinite());
        for w in cells.windows(2) {
            assert_eq!(w[0].t_lo, w[1].t_hi);
        }
        assert_eq!(cells.last().unwrap().t_lo, part.t_min());
        for c in &cells {
            let mid = if c.t_hi.is_finite() { 0.5 * (c.t_lo + c.t_hi) } else { c.t_lo + 1.0 };
            let found = part.locate(mid).unwrap();
            assert_eq!((found.n, found.kind), (c.n, c.kind));
        }
        assert!(matches!(part.locate(0.5 * part.t_min()), Err(Error::OutOfLadder { .. })));
    }

    #[test]
    fn approximants_match_full_series() {
        let l = lv(400.0);
        let part = LadderPartition::new(l).unwrap();
        for kind in [CellKind::A, CellKind::B] {
            let c = part.cell(2, kind).unwrap();
            let t = 0.5 * (c.t_lo + c.t_hi);
            let (phi, psi) = ladder_approx(t, &part).unwrap();
            let fp = phi_k(&l, t).unwrap();
            let fs = psi_k(&l, t).unwrap();
            assert!(((phi.ln_abs() - fp.ln_abs()).exp() - 1.0).abs() < 1e-6);
            assert!(((psi.ln_abs() - fs.ln_abs()).exp() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn first_cell_phi_is_one_plus_two_to_p_x() {
        let l = lv(200.0);
        let part = LadderPartition::new(l).unwrap();
        let c = part.cell(1, CellKind::A).unwrap();
        let t = c.t_lo + 3.0;
        let (phi, _) = ladder_approx(t, &part).unwrap();
        let expect = 1.0 + (l.exponent() * 2f64.ln() - t).exp();
        assert!((phi.to_real() / expect - 1.0).abs() < 1e-14);
    }

    #[test]
    fn antiderivative_oracle_for_m_equal_one() {
        // ∫ y(1+βy²)/(1+y)³ dy = (1+β)/(2(1+y)²) - (1+3β)/(1+y) + β(1+y) - 3β log(1+y)
        let beta: f64 = 0.37;
        let big_f = |y: f64| {
            (1.0 + beta) / (2.0 * (1.0 + y).powi(2)) - (1.0 + 3.0 * beta) / (1.0 + y) + beta * (1.0 + y)
                - 3.0 * beta * (1.0 + y).ln()
        };
        let (lo, hi) = (0.2f64, 3.5f64);
        let v = ln_rational_integral(1.0, beta.ln(), lo.ln(), hi.ln()).unwrap().exp();
        assert!((v - (big_f(hi) - big_f(lo))).abs() < 1e-12);
    }

    #[test]
    fn small_n_rejected() {
        assert!(ladder_integrals(&lv(400.0), 1, 1).is_err());
        assert!(matches!(ladder_integrals(&lv(400.0), 3, 9), Err(Error::OutOfLadder { .. })));
    }

    #[test]
    fn ladder_values_at_k400() {
        let l = lv(400.0);
        let (i, _) = ladder_integrals(&l, 3, 3).unwrap();
        assert!((i - 0.375).abs() <= 0.01, "{i}");
        let (i, _) = ladder_integrals(&l, 2, 3).unwrap();
        assert!((i - 0.125).abs() <= 0.01, "{i}");
        let (i, _) = ladder_integrals(&l, 1, 3).unwrap();
        assert!(i.abs() <= 1e-4, "{i}");
    }

    #[test]
    fn ladder_sum_gives_half_then_one() {
        let l = lv(400.0);
        let m1 = mu_ladder_sum(&l, 1).unwrap().mu;
        let m3 = mu_ladder_sum(&l, 3).unwrap().mu;
        assert!((m1 - 0.5).abs() < 0.01, "{m1}");
        assert!((m3 - 1.0).abs() < 0.01, "{m3}");
    }
}
