//! Globally adaptive Gauss–Kronrod quadrature for integrands living in log-space.
//!
//! Each panel is evaluated with the 7/15-point Gauss–Kronrod pair. Integrand
//! values are rescaled by the panel's largest magnitude before the weighted
//! sum, so integrands like `t^2000 e^{-t}` never leave log-space.

use crate::error::{Error, Result};
use crate::numerics::logreal::{LogReal, LogSum};

// Kronrod abscissae (positive half, descending) and weights for the 15-point rule.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_PANELS: usize = 200_000;
const MAX_TAIL_DOUBLINGS: usize = 1100;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    pub lo: f64,
    /// Upper limit; `f64::INFINITY` selects exponential-tail truncation.
    pub hi: f64,
    /// Extra interior points where the initial partition must break.
    pub breakpoints: Vec<f64>,
    /// Number of equal panels each initial interval is cut into.
    pub initial_panels: usize,
}

impl QuadratureSpec {
    pub const DEFAULT_REL_TOL: f64 = 1e-10;
    pub const DEFAULT_ABS_TOL: f64 = 1e-300;
    pub const DEFAULT_MAX_DEPTH: u32 = 60;

    pub fn new(lo: f64, hi: f64) -> Self {
        QuadratureSpec {
            abs_tol: Self::DEFAULT_ABS_TOL,
            rel_tol: Self::DEFAULT_REL_TOL,
            max_depth: Self::DEFAULT_MAX_DEPTH,
            lo,
            hi,
            breakpoints: Vec::new(),
            initial_panels: 4,
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(points);
        self
    }

    pub fn with_initial_panels(mut self, n: usize) -> Self {
        self.initial_panels = n.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerances must be positive (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidInput("max_depth must be >= 1".into()));
        }
        if !self.lo.is_finite() || self.hi.is_nan() || self.hi == f64::NEG_INFINITY {
            return Err(Error::InvalidInput(format!(
                "bad domain [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.hi < self.lo {
            return Err(Error::InvalidInput(format!(
                "domain is reversed: [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Integral {
    pub value: LogReal,
    /// Natural log of the absolute error estimate.
    pub ln_error: f64,
    pub panels: usize,
    /// Upper limit actually used (the truncation point for infinite domains).
    pub effective_hi: f64,
}

impl Integral {
    pub fn error(&self) -> f64 {
        self.ln_error.exp()
    }
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    lo: f64,
    hi: f64,
    depth: u32,
    value: LogReal,
    ln_err: f64,
}

fn gauss_kronrod<F>(f: &F, lo: f64, hi: f64, depth: u32) -> Panel
where
    F: Fn(f64) -> LogReal,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut vals = [LogReal::ZERO; 15];
    for j in 0..7 {
        let dx = half * XGK[j];
        vals[2 * j] = f(center - dx);
        vals[2 * j + 1] = f(center + dx);
    }
    vals[14] = f(center);

    let scale = vals
        .iter()
        .filter(|v| !v.is_zero())
        .map(|v| v.ln_abs())
        .fold(f64::NEG_INFINITY, f64::max);
    if scale == f64::NEG_INFINITY {
        return Panel {
            lo,
            hi,
            depth,
            value: LogReal::ZERO,
            ln_err: f64::NEG_INFINITY,
        };
    }
    let r = |v: LogReal| -> f64 {
        if v.is_zero() {
            0.0
        } else {
            f64::from(v.sign()) * (v.ln_abs() - scale).exp()
        }
    };

    let fc = r(vals[14]);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut res_abs = (WGK[7] * fc).abs();
    let mut scaled = [0.0; 15];
    scaled[14] = fc;
    for j in 0..7 {
        let a = r(vals[2 * j]);
        let b = r(vals[2 * j + 1]);
        scaled[2 * j] = a;
        scaled[2 * j + 1] = b;
        kronrod += WGK[j] * (a + b);
        res_abs += WGK[j] * (a.abs() + b.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (a + b);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((scaled[2 * j] - mean).abs() + (scaled[2 * j + 1] - mean).abs());
    }
    let abs_half = half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    res_asc *= abs_half;
    res_abs *= abs_half;
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    let value = LogReal::from_real(kronrod * half).scale_ln(scale);
    let ln_err = if err > 0.0 {
        err.ln() + scale
    } else {
        f64::NEG_INFINITY
    };
    Panel {
        lo,
        hi,
        depth,
        value,
        ln_err,
    }
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Finds a truncation point for `[lo, inf)`: sample at `lo + h 2^j` until the
/// integrand has fallen below `rel_tol * 1e-3` of the largest sample and is
/// decreasing. Returns the sample points as a geometric initial partition.
fn tail_grid<F>(f: &F, lo: f64, rel_tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> LogReal,
{
    let threshold = (rel_tol * 1e-3).ln();
    let h = lo.abs().max(1.0) * 0.5;
    let mut grid = vec![lo];
    let mut running_max = f64::NEG_INFINITY;
    let mut prev = f(lo).ln_abs();
    if prev.is_finite() {
        running_max = prev;
    }
    let mut step = h;
    for _ in 0..MAX_TAIL_DOUBLINGS {
        let x = lo + step;
        let v = f(x).ln_abs();
        grid.push(x);
        if v.is_nan() {
            return Err(Error::InvalidInput(format!("integrand is NaN at {x}")));
        }
        if v > running_max {
            running_max = v;
        }
        let negligible = v == f64::NEG_INFINITY || v < running_max + threshold;
        if running_max.is_finite() && negligible && v <= prev {
            return Ok(grid);
        }
        prev = v;
        step *= 2.0;
        if !x.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence {
        estimate: f64::NAN,
        error: f64::INFINITY,
        panels: 0,
    })
}

/// Integrates `f` over the spec's domain, returning value and error estimate.
pub fn integrate_adaptive_detailed<F>(f: F, spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> LogReal,
{
    spec.validate()?;
    if spec.hi == spec.lo {
        return Ok(Integral {
            value: LogReal::ZERO,
            ln_error: f64::NEG_INFINITY,
            panels: 0,
            effective_hi: spec.hi,
        });
    }

    let mut cuts: Vec<f64> = if spec.hi.is_infinite() {
        tail_grid(&f, spec.lo, spec.rel_tol)?
    } else {
        vec![spec.lo, spec.hi]
    };
    let hi = *cuts.last().unwrap();
    cuts.extend(
        spec.breakpoints
            .iter()
            .copied()
            .filter(|&b| b > spec.lo && b < hi),
    );
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut panels = Vec::new();
    for w in cuts.windows(2) {
        let n = spec.initial_panels;
        let width = (w[1] - w[0]) / n as f64;
        for i in 0..n {
            let a = w[0] + width * i as f64;
            let b = if i + 1 == n { w[1] } else { a + width };
            panels.push(gauss_kronrod(&f, a, b, 0));
        }
    }

    let mut integral = refine(&f, panels, spec)?;

    if spec.hi.is_infinite() {
        // Verify the truncation by integrating one more doubling of the range.
        let mut end = hi;
        for _ in 0..MAX_TAIL_DOUBLINGS {
            let next = spec.lo + 2.0 * (end - spec.lo);
            let tail = refine(&f, vec![gauss_kronrod(&f, end, next, 0)], spec)?;
            integral.value = integral.value + tail.value;
            integral.ln_error = ln_add(integral.ln_error, tail.ln_error);
            integral.panels += tail.panels;
            end = next;
            let ln_tol = spec.rel_tol.ln() + integral.value.ln_abs();
            if tail.value.is_zero() || tail.value.ln_abs() < ln_tol {
                break;
            }
        }
        integral.effective_hi = end;
    }
    if integral.value.ln_abs().is_nan() {
        return Err(Error::NonConvergence {
            estimate: f64::NAN,
            error: f64::NAN,
            panels: integral.panels,
        });
    }
    Ok(integral)
}

fn refine<F>(f: &F, mut panels: Vec<Panel>, spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> LogReal,
{
    let ln_abs_tol = spec.abs_tol.ln();
    let ln_rel = spec.rel_tol.ln();
    let mut evaluations = panels.len();
    loop {
        let mut total = LogSum::new();
        let mut ln_err = f64::NEG_INFINITY;
        let mut worst: Option<usize> = None;
        for (i, p) in panels.iter().enumerate() {
            total.push(p.value);
            ln_err = ln_add(ln_err, p.ln_err);
            if p.depth < spec.max_depth
                && worst.is_none_or(|w| p.ln_err > panels[w].ln_err)
            {
                worst = Some(i);
            }
        }
        let value = total.value();
        if ln_err.is_nan() {
            return Err(Error::NonConvergence {
                estimate: value.to_real(),
                error: f64::NAN,
                panels: evaluations,
            });
        }
        let ln_tol = ln_abs_tol.max(ln_rel + value.ln_abs());
        if ln_err <= ln_tol {
            return Ok(Integral {
                value,
                ln_error: ln_err,
                panels: evaluations,
                effective_hi: f64::NAN,
            });
        }
        let Some(w) = worst.filter(|_| evaluations < MAX_PANELS) else {
            return Err(Error::NonConvergence {
                estimate: value.to_real(),
                error: ln_err.exp(),
                panels: evaluations,
            });
        };
        let p = panels.swap_remove(w);
        let mid = 0.5 * (p.lo + p.hi);
        if !(mid > p.lo && mid < p.hi) {
            return Err(Error::NonConvergence {
                estimate: value.to_real(),
                error: ln_err.exp(),
                panels: evaluations,
            });
        }
        panels.push(gauss_kronrod(f, p.lo, mid, p.depth + 1));
        panels.push(gauss_kronrod(f, mid, p.hi, p.depth + 1));
        evaluations += 2;
    }
}

/// Integrates a log-space integrand over the spec's domain.
pub fn integrate_adaptive<F>(f: F, spec: &QuadratureSpec) -> Result<LogReal>
where
    F: Fn(f64) -> LogReal,
{
    integrate_adaptive_detailed(f, spec).map(|i| i.value)
}

/// Convenience wrapper for ordinary real integrands.
pub fn integrate_real<F>(f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_adaptive(|x| LogReal::from_real(f(x)), spec).map(LogReal::to_real)
}
