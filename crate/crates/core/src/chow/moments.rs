//! Moment matrices `∫ ZZ*/|Z|² dμ_FS` of coordinate-aligned components and
//! the λ-center of mass.
//!
//! Every component here is invariant under the maximal torus up to the
//! diagonal action, so all moments are diagonal.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::chow::config::{CycleComponent, CycleConfig};
use crate::error::{Error, Result};
use crate::numerics::{integrate_adaptive, integrate_real, LogReal, QuadratureSpec, SeriesWindow};

/// Margin, in `s = log |t|²`, beyond the outermost crossing of the curve
/// moment integrals; the integrands decay like `e^{-|s|}` there.
const RNC_MARGIN: f64 = 60.0;

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMoment {
    pub entries: DMatrix<f64>,
    /// Set when only the diagonal can be non-zero (torus symmetry).
    pub diagonal_only: bool,
}

impl HermitianMoment {
    pub fn zeros(dim: usize) -> Self {
        HermitianMoment { entries: DMatrix::zeros(dim, dim), diagonal_only: true }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        HermitianMoment {
            entries: DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            diagonal_only: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.entries.diagonal().iter().copied().collect()
    }

    /// `‖·‖₂`, the Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        self.entries.diagonal().amax()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.entries - self.entries.transpose()).amax() <= tol
    }
}

/// A coordinate point has `Z = e_i`.
pub fn moment_of_point(i: usize, n: usize) -> Result<HermitianMoment> {
    if i > n {
        return Err(Error::InvalidInput(format!("point index {i} outside [0, {n}]")));
    }
    let mut m = HermitianMoment::zeros(n + 1);
    m.entries[(i, i)] = 1.0;
    Ok(m)
}

/// The line through `e_i, e_j`. A diagonal group element maps the line onto
/// itself, so the weights only reparametrize it: both entries are `1/2`
/// (the `s ↔ 1/s` symmetry), whatever the weights.
pub fn moment_of_line(i: usize, j: usize, weights: (f64, f64), n: usize) -> Result<HermitianMoment> {
    CycleComponent::CoordLine { i, j }.validate(n)?;
    check_weight(weights.0)?;
    check_weight(weights.1)?;
    let mut m = HermitianMoment::zeros(n + 1);
    m.entries[(i, i)] = 0.5;
    m.entries[(j, j)] = 0.5;
    Ok(m)
}

fn check_weight(w: f64) -> Result<()> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidInput(format!("weights must be positive, got {w}")));
    }
    Ok(())
}

/// `∫₀^∞ w_i² s / (w_i² s + w_j²) ds/(1+s)²`: the `e_i` entry of the line
/// with the weights applied to `ZZ*/|Z|²` but the measure left unmoved.
/// Not a moment of any cycle; kept as the closed form it is checked against.
pub fn line_frozen_measure_entry(wi: f64, wj: f64) -> Result<f64> {
    check_weight(wi)?;
    check_weight(wj)?;
    let r = (wi / wj).powi(2);
    let f = |s: f64| r * s / ((r * s + 1.0) * (1.0 + s).powi(2));
    // s = e^x spreads both ends over a finite range
    let spec = QuadratureSpec::new(-60.0, 60.0 + r.ln().abs()).with_rel_tol(1e-13).with_abs_tol(1e-300);
    integrate_real(|x| f(x.exp()) * x.exp(), &spec)
}

/// Closed form of [`line_frozen_measure_entry`]:
/// `r (r - 1 - log r) / (r - 1)²` with `r = (w_i / w_j)²`.
pub fn line_frozen_measure_closed_form(wi: f64, wj: f64) -> f64 {
    let r = (wi / wj).powi(2);
    let e = r - 1.0;
    if e.abs() < 1e-4 {
        // series in e: 1/2 + e/6 - e²/12 + e³/20
        return 0.5 + e / 6.0 - e * e / 12.0 + e.powi(3) / 20.0;
    }
    r * (e - r.ln()) / (e * e)
}

/// Diagonal of the moment of `[w_0 : w_1 t : … : w_m t^m]`:
/// `M_j = ∫ q_j Var_q ds` with `q_j ∝ w_j² e^{js}`.
pub fn rnc_diagonal(weights: &[f64]) -> Result<Vec<f64>> {
    let m = weights.len();
    if m < 2 {
        return Err(Error::InvalidInput("need at least two coordinates".into()));
    }
    for &w in weights {
        check_weight(w)?;
    }
    let ln_w2: Vec<f64> = weights.iter().map(|w| 2.0 * w.ln()).collect();
    let crossings: Vec<f64> = ln_w2.windows(2).map(|p| p[0] - p[1]).collect();
    let lo = crossings.iter().copied().fold(f64::INFINITY, f64::min) - RNC_MARGIN;
    let hi = crossings.iter().copied().fold(f64::NEG_INFINITY, f64::max) + RNC_MARGIN;
    let moments = |s: f64| {
        let logs: Vec<f64> = ln_w2.iter().enumerate().map(|(j, l)| l + j as f64 * s).collect();
        let w = SeriesWindow::from_terms(0, logs);
        let mo = w.ln_moments();
        (w, mo)
    };
    let mut diag: Vec<f64> = (0..m)
        .map(|j| {
            let spec = QuadratureSpec::new(lo, hi)
                .with_breakpoints(crossings.iter().copied())
                .with_rel_tol(1e-13);
            integrate_adaptive(
                |s| {
                    let (w, mo) = moments(s);
                    LogReal::from_ln(w.ln_weight(j as i64, mo.ln_sum) + mo.ln_variance)
                },
                &spec,
            )
            .map(LogReal::to_real)
        })
        .collect::<Result<_>>()?;
    // ∫ Var ds = m - 1 exactly; remove the residual quadrature error.
    let total: f64 = diag.iter().sum();
    let scale = (m - 1) as f64 / total;
    for d in &mut diag {
        *d *= scale;
    }
    Ok(diag)
}

/// Moment of a weighted rational normal curve on `index_set` in ℙ^N.
pub fn moment_of_rnc(index_set: &[usize], weights: &[f64], n: usize) -> Result<HermitianMoment> {
    CycleComponent::WeightedRnc { index_set: index_set.to_vec(), weights: weights.to_vec() }.validate(n)?;
    let d = rnc_diagonal(weights)?;
    let mut out = HermitianMoment::zeros(n + 1);
    for (&i, v) in index_set.iter().zip(d) {
        out.entries[(i, i)] = v;
    }
    Ok(out)
}

/// Moment of one component after the diagonal element `torus` acts.
pub fn component_moment(c: &CycleComponent, torus: &[f64], n: usize) -> Result<HermitianMoment> {
    match c {
        CycleComponent::Point { index } => moment_of_point(*index, n),
        CycleComponent::CoordLine { i, j } => moment_of_line(*i, *j, (torus[*i], torus[*j]), n),
        CycleComponent::WeightedRnc { index_set, weights } => {
            let w: Vec<f64> = index_set.iter().zip(weights).map(|(&i, w)| w * torus[i]).collect();
            moment_of_rnc(index_set, &w, n)
        }
    }
}

/// `μ(V, W, λ) = λ ∫_V + (1-λ) ∫_W - (λ Vol V + (1-λ) Vol W)/(N+1) · Id`.
pub fn lambda_center_of_mass(config: &CycleConfig) -> Result<HermitianMoment> {
    config.validate()?;
    let n = config.n;
    let torus = config.torus_weights();
    let parts: Vec<HermitianMoment> = config
        .curve_components
        .par_iter()
        .map(|c| component_moment(c, &torus, n))
        .collect::<Result<_>>()?;
    let lambda = config.lambda;
    let mut total = DMatrix::<f64>::zeros(n + 1, n + 1);
    for p in &parts {
        total += &p.entries * lambda;
    }
    for &i in &config.divisor_points {
        total[(i, i)] += 1.0 - lambda;
    }
    let shift = (lambda * config.curve_volume() + (1.0 - lambda) * config.divisor_volume()) / (n + 1) as f64;
    for i in 0..=n {
        total[(i, i)] -= shift;
    }
    Ok(HermitianMoment { entries: total, diagonal_only: true })
}
