//! The deviation model for `‖μ_X + ½μ_D − c̃_k‖₂²` of a cusped curve
//! embedded by `H⁰(kL)`.
//!
//! Rows of the moment matrix split into cusp rows (indices `a ≤ A` at each
//! of the `d` cusps, whose diagonal entries come from the model μ_a) and
//! bulk rows, with diagonal `1 - (S/2)/k + O(k^{-2})`. Off-diagonal entries
//! are carried as counts times the squared bound of their class. The
//! sections that would realize these bounds are not constructed; the
//! constants of the bounds are explicit parameters.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{mu_direct, ModelLevel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceData {
    pub genus: u32,
    /// `deg L`.
    pub degree: u32,
    /// Number of cusps.
    pub cusps: u32,
}

impl SurfaceData {
    pub fn new(genus: u32, degree: u32, cusps: u32) -> Result<Self> {
        if degree == 0 || cusps == 0 {
            return Err(Error::InvalidInput("degree and number of cusps must be positive".into()));
        }
        if i64::from(cusps) <= 2 - 2 * i64::from(genus) {
            return Err(Error::InvalidInput(format!(
                "need d > 2 - 2g for a hyperbolic cusp metric, got g = {genus}, d = {cusps}"
            )));
        }
        Ok(SurfaceData { genus, degree, cusps })
    }

    /// `S = -(d + 2g - 2)/l`.
    pub fn scalar_curvature(&self) -> f64 {
        -(f64::from(self.cusps) + 2.0 * f64::from(self.genus) - 2.0) / f64::from(self.degree)
    }

    /// `N_k + 1 = kl - d - g + 1`.
    pub fn section_count(&self, k: u32) -> i64 {
        i64::from(k) * i64::from(self.degree) - i64::from(self.cusps) - i64::from(self.genus) + 1
    }

    /// `-2k/S`, the model level matching the cusp metric rescaled to `S = -2`.
    pub fn model_level(&self, k: u32) -> Result<ModelLevel> {
        ModelLevel::new(-2.0 * f64::from(k) / self.scalar_curvature())
    }

    /// `A = ⌊2√k log k⌋`, capped so the cusp rows fit in `N_k + 1`.
    pub fn cusp_index_cut(&self, k: u32) -> u64 {
        let kf = f64::from(k);
        let a = (2.0 * kf.sqrt() * kf.ln()).floor().max(1.0) as u64;
        let fit = (self.section_count(k).max(0) as u64) / u64::from(self.cusps);
        a.min(fit)
    }
}

/// `c̃_k = (kl - d/2) / (kl - d - g + 1)`, exactly.
pub fn c_tilde_k(surface: &SurfaceData, k: u32) -> Result<Ratio<i64>> {
    let den = surface.section_count(k);
    if den <= 0 {
        return Err(Error::InvalidInput(format!("kl - d - g + 1 = {den} <= 0 at k = {k}")));
    }
    let kl = i64::from(k) * i64::from(surface.degree);
    Ok(Ratio::new(2 * kl - i64::from(surface.cusps), 2 * den))
}

/// `1 - (S/2)/k`, the first-order expansion of `c̃_k`.
pub fn c_tilde_first_order(surface: &SurfaceData, k: u32) -> f64 {
    1.0 - 0.5 * surface.scalar_curvature() / f64::from(k)
}

/// Which bound the cusp–bulk off-diagonal pairs are charged with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CuspBulkClass {
    /// The `ε(k)` class of cusp–cusp pairs.
    Epsilon,
    /// The `C k^{-2}` class of the remaining pairs.
    InverseSquare,
}

/// First-order term of the bulk diagonal `1 + (·) + C k^{-2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BulkExpansion {
    /// `-(S/2)/k`: the `k^{-1}` term of the metric rescaled to `S = -2`,
    /// the same normalization as the cusp rows.
    Rescaled,
    /// `k^{-1}` with `S` left as is; cancels `c̃_k` only when `S = -2`.
    Unrescaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    /// `C` in the `C k^{-2}` bounds.
    pub c: f64,
    /// `ε(k) = k^{-epsilon_power}`.
    pub epsilon_power: f64,
    pub cusp_bulk: CuspBulkClass,
    pub bulk: BulkExpansion,
}

impl Default for ErrorModel {
    fn default() -> Self {
        ErrorModel { c: 1.0, epsilon_power: 10.0, cusp_bulk: CuspBulkClass::InverseSquare, bulk: BulkExpansion::Rescaled }
    }
}

impl ErrorModel {
    pub fn epsilon(&self, k: u32) -> f64 {
        f64::from(k).powf(-self.epsilon_power)
    }

    pub fn inverse_square(&self, k: u32) -> f64 {
        self.c / f64::from(k).powi(2)
    }
}

/// Every entry of the `(N+1) × (N+1)` deviation matrix, grouped.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DeviationLedger {
    pub k: u32,
    pub c_tilde: f64,
    pub cusp_index_cut: u64,
    /// `(a, μ_a - c̃)` for `2 ≤ a ≤ A`, one cusp.
    pub diag_neck: Vec<(u64, f64)>,
    /// `μ_1 + ½ - c̃`: the `a = 1` rows where the divisor contributes.
    pub divisor_diag: f64,
    pub diag_bulk_count: u64,
    /// `1 + (first order) + C k^{-2} - c̃`.
    pub diag_bulk_deviation: f64,
    pub off_diag_epsilon_count: u64,
    pub off_diag_epsilon_bound: f64,
    pub off_diag_inverse_square_count: u64,
    pub off_diag_inverse_square_bound: f64,
    pub cusps: u32,
}

impl DeviationLedger {
    /// Squared deviations summed over the rows of a single cusp.
    pub fn single_cusp_sum(&self) -> f64 {
        self.divisor_diag.powi(2) + self.diag_neck.iter().map(|(_, v)| v * v).sum::<f64>()
    }

    pub fn cusp_sum(&self) -> f64 {
        f64::from(self.cusps) * self.single_cusp_sum()
    }

    pub fn bulk_sum(&self) -> f64 {
        self.diag_bulk_count as f64 * self.diag_bulk_deviation.powi(2)
    }

    pub fn off_diag_sum(&self) -> f64 {
        self.off_diag_epsilon_count as f64 * self.off_diag_epsilon_bound.powi(2)
            + self.off_diag_inverse_square_count as f64 * self.off_diag_inverse_square_bound.powi(2)
    }

    pub fn energy(&self) -> f64 {
        self.cusp_sum() + self.bulk_sum() + self.off_diag_sum()
    }

    /// Entries accounted for: diagonal plus ordered off-diagonal pairs.
    pub fn entry_count(&self) -> u64 {
        let cusp_rows = u64::from(self.cusps) * self.cusp_index_cut;
        cusp_rows + self.diag_bulk_count + self.off_diag_epsilon_count + self.off_diag_inverse_square_count
    }
}

pub fn assemble_ledger(
    surface: &SurfaceData,
    k: u32,
    mus: &BTreeMap<u64, f64>,
    model: &ErrorModel,
) -> Result<DeviationLedger> {
    let ct = c_tilde_k(surface, k)?;
    let c_tilde = *ct.numer() as f64 / *ct.denom() as f64;
    let a_cut = surface.cusp_index_cut(k);
    if a_cut == 0 {
        return Err(Error::InvalidInput(format!("no cusp rows fit at k = {k}")));
    }
    let mu = |a: u64| mus.get(&a).copied().ok_or(Error::MissingMu(a));
    let divisor_diag = mu(1)? + 0.5 - c_tilde;
    let diag_neck = (2..=a_cut).map(|a| Ok((a, mu(a)? - c_tilde))).collect::<Result<Vec<_>>>()?;

    let rows = surface.section_count(k) as u64;
    let cusp_rows = u64::from(surface.cusps) * a_cut;
    let bulk_rows = rows - cusp_rows;
    let first = match model.bulk {
        BulkExpansion::Rescaled => c_tilde_first_order(surface, k),
        BulkExpansion::Unrescaled => 1.0 + 1.0 / f64::from(k),
    };
    let diag_bulk_deviation = first + model.inverse_square(k) - c_tilde;

    let cusp_cusp = cusp_rows * (cusp_rows - 1);
    let cusp_bulk = 2 * cusp_rows * bulk_rows;
    let bulk_bulk = bulk_rows * bulk_rows.saturating_sub(1);
    let (eps_count, inv_count) = match model.cusp_bulk {
        CuspBulkClass::Epsilon => (cusp_cusp + cusp_bulk, bulk_bulk),
        CuspBulkClass::InverseSquare => (cusp_cusp, cusp_bulk + bulk_bulk),
    };
    Ok(DeviationLedger {
        k,
        c_tilde,
        cusp_index_cut: a_cut,
        diag_neck,
        divisor_diag,
        diag_bulk_count: bulk_rows,
        diag_bulk_deviation,
        off_diag_epsilon_count: eps_count,
        off_diag_epsilon_bound: model.epsilon(k),
        off_diag_inverse_square_count: inv_count,
        off_diag_inverse_square_bound: model.inverse_square(k),
        cusps: surface.cusps,
    })
}

/// Energy of the deviation model with the default error constants.
pub fn assemble_energy(surface: &SurfaceData, k: u32, mus: &BTreeMap<u64, f64>) -> Result<f64> {
    Ok(assemble_ledger(surface, k, mus, &ErrorModel::default())?.energy())
}

/// `μ_a`, `1 ≤ a ≤ A`, at the rescaled level `-2k/S`.
pub fn model_mus(surface: &SurfaceData, k: u32) -> Result<BTreeMap<u64, f64>> {
    let level = surface.model_level(k)?;
    let a_cut = surface.cusp_index_cut(k);
    (1..=a_cut)
        .into_par_iter()
        .map(|a| Ok((a, mu_direct(&level, a)?)))
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub k: u32,
    pub energy: f64,
    /// `Δ log E / Δ log k` against the previous row.
    pub slope: Option<f64>,
}

pub fn scan_energy(surface: &SurfaceData, ks: &[u32], model: &ErrorModel) -> Result<Vec<ScanRow>> {
    if ks.is_empty() {
        return Err(Error::InvalidInput("empty k list".into()));
    }
    if ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("k list must be strictly increasing".into()));
    }
    let mut rows: Vec<ScanRow> = Vec::with_capacity(ks.len());
    for &k in ks {
        let mus = model_mus(surface, k)?;
        let energy = assemble_ledger(surface, k, &mus, model)?.energy();
        let slope = rows
            .last()
            .map(|p| (energy.ln() - p.energy.ln()) / (f64::from(k).ln() - f64::from(p.k).ln()));
        rows.push(ScanRow { k, energy, slope });
    }
    Ok(rows)
}

/// Least-squares slope of `log E` against `log k`.
pub fn regression_slope(rows: &[ScanRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| f64::from(r.k).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.energy.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// `k,energy,slope` with round-trip precision; the slope is blank on the
/// first row.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("k,energy,slope\n");
    for r in rows {
        let slope = r.slope.map(|s| format!("{s:.16e}")).unwrap_or_default();
        let _ = writeln!(out, "{},{:.16e},{}", r.k, r.energy, slope);
    }
    out
}

/// Two-column `log k, log E` text.
pub fn plot_data(rows: &[ScanRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(out, "{:.16e} {:.16e}", f64::from(r.k).ln(), r.energy.ln());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere3() -> SurfaceData {
        SurfaceData::new(0, 3, 3).unwrap()
    }

    #[test]
    fn c_tilde_example() {
        assert_eq!(c_tilde_k(&sphere3(), 2).unwrap(), Ratio::new(9, 8));
        let s = SurfaceData::new(0, 1, 3).unwrap();
        assert!(c_tilde_k(&s, 2).is_err());
    }

    #[test]
    fn c_tilde_is_first_order_accurate() {
        let s = sphere3();
        for k in [100u32, 1000, 10000] {
            let c = c_tilde_k(&s, k).unwrap();
            let c = *c.numer() as f64 / *c.denom() as f64;
            let r = (c - c_tilde_first_order(&s, k)) * f64::from(k).powi(2);
            assert!(r.abs() < 1.0, "k={k}: {r}");
        }
    }

    #[test]
    fn surfaces_are_validated() {
        assert!(SurfaceData::new(0, 3, 2).is_err());
        assert!(SurfaceData::new(1, 3, 1).is_ok());
        assert!((sphere3().scalar_curvature() + 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn missing_mu_is_reported() {
        let mut mus = BTreeMap::new();
        mus.insert(1, 0.5);
        assert!(matches!(assemble_energy(&sphere3(), 100, &mus), Err(Error::MissingMu(2))));
    }

    #[test]
    fn ledger_accounts_for_every_entry() {
        let s = sphere3();
        let k = 100;
        let a = s.cusp_index_cut(k);
        let mus: BTreeMap<u64, f64> = (1..=a).map(|a| (a, if a == 1 { 0.5 } else { 1.0 })).collect();
        for class in [CuspBulkClass::Epsilon, CuspBulkClass::InverseSquare] {
            let model = ErrorModel { cusp_bulk: class, ..ErrorModel::default() };
            let l = assemble_ledger(&s, k, &mus, &model).unwrap();
            let n = s.section_count(k) as u64;
            assert_eq!(l.entry_count(), n * n);
        }
    }

    #[test]
    fn csv_layout() {
        let rows = vec![ScanRow { k: 100, energy: 0.5, slope: None }, ScanRow { k: 200, energy: 0.25, slope: Some(-1.0) }];
        let csv = scan_csv(&rows);
        assert_eq!(csv.lines().next(), Some("k,energy,slope"));
        assert_eq!(csv.lines().nth(1), Some("100,5.0000000000000000e-1,"));
        assert!((regression_slope(&rows).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(regression_slope(&rows[..1]), None);
    }
}
