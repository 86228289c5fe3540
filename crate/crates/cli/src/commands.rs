//! One function per subcommand; each returns a [`Report`] whose failure list
//! holds every asserted tolerance that did not hold.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use cuspidal::chow::{self, balance_flow as flow, CycleConfig, DivisorPlacement};
use cuspidal::energy::{self, BulkExpansion, CuspBulkClass, ErrorModel, SurfaceData};
use cuspidal::model::{self, ModelLevel, Regime};
use cuspidal::Error;

use crate::output::{Cell, Report};

/// Command-line values take precedence over the config file's.
pub trait Merge {
    fn merge(self, file: Self) -> Self;
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModelMuArgs {
    #[arg(long)]
    pub k: Option<f64>,
    /// Comma-separated indices; `--a` with no value gives an empty table.
    #[arg(long, num_args = 0.., value_delimiter = ',')]
    pub a: Option<Vec<u64>>,
    /// Indices spread over all three regimes instead of `--a`.
    #[arg(long, action = ArgAction::SetTrue)]
    #[serde(default)]
    pub sweep: bool,
}

impl Merge for ModelMuArgs {
    fn merge(self, f: Self) -> Self {
        ModelMuArgs { k: self.k.or(f.k), a: self.a.or(f.a), sweep: self.sweep || f.sweep }
    }
}

fn sweep_indices(level: &ModelLevel) -> Vec<u64> {
    let mut out: BTreeSet<u64> = (1..=8).collect();
    let top = 2.0 * level.neck_upper();
    let mut a = 9.0f64;
    while a <= top {
        out.insert(a.round() as u64);
        a *= 1.5;
    }
    out.insert(level.neck_lower().ceil() as u64);
    out.insert(level.neck_upper().ceil() as u64);
    out.into_iter().collect()
}

pub fn model_mu(args: ModelMuArgs, tol: Option<f64>) -> Result<Report> {
    let k = args.k.context("model-mu needs --k")?;
    let level = ModelLevel::new(k)?;
    let tol = tol.unwrap_or(1e-2);
    let indices = match (args.sweep, args.a) {
        (true, _) => sweep_indices(&level),
        (false, Some(a)) => a,
        (false, None) => bail!("model-mu needs --a LIST or --sweep"),
    };
    let mut r = Report::new("model-mu", &["a", "regime", "mu", "route", "expected", "abs_deviation"]);
    for a in indices {
        let regime = level.index(a)?.regime;
        let (mu, route) = match regime {
            Regime::CaseIII => (model::mu_neck(&level, a)?, "neck"),
            _ => (model::mu_direct(&level, a)?, "direct"),
        };
        let expected = if a == 1 { 0.5 } else { 1.0 };
        let dev = (mu - expected).abs();
        r.check(dev <= tol, || format!("a = {a}: |mu - {expected}| = {dev:e} > {tol:e}"));
        r.push(vec![a.into(), regime.name().into(), mu.into(), route.into(), expected.into(), dev.into()]);
    }
    Ok(r)
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ThetaArgs {
    /// Explicit b values; `--b` with no value gives an empty table.
    #[arg(long, num_args = 0.., value_delimiter = ',')]
    pub b: Option<Vec<f64>>,
    /// Number of log-spaced points on [b-min, b-max] when `--b` is absent.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub b_min: Option<f64>,
    #[arg(long)]
    pub b_max: Option<f64>,
}

impl Merge for ThetaArgs {
    fn merge(self, f: Self) -> Self {
        ThetaArgs {
            b: self.b.or(f.b),
            points: self.points.or(f.points),
            b_min: self.b_min.or(f.b_min),
            b_max: self.b_max.or(f.b_max),
        }
    }
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()).collect(),
    }
}

pub fn theta_check(args: ThetaArgs, tol: Option<f64>) -> Result<Report> {
    let tol = tol.unwrap_or(1e-8);
    let grid = match args.b {
        Some(b) => b,
        None => {
            let (lo, hi) = (args.b_min.unwrap_or(1e-2), args.b_max.unwrap_or(1e2));
            if !(lo > 0.0 && hi >= lo) {
                bail!("need 0 < b-min <= b-max");
            }
            log_grid(lo, hi, args.points.unwrap_or(20))
        }
    };
    let mut r = Report::new("theta-check", &["b", "integral", "abs_error"]);
    for b in grid {
        let v = model::theta_identity(b)?;
        let err = (v - 2.0).abs();
        r.check(err < tol, || format!("b = {b:e}: |integral - 2| = {err:e} >= {tol:e}"));
        r.push(vec![b.into(), v.into(), err.into()]);
    }
    Ok(r)
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LadderArgs {
    #[arg(long)]
    pub k: Option<f64>,
    /// Largest cell index; defaults to the relaxed ladder cap.
    #[arg(long)]
    pub n_max: Option<u32>,
    /// Tolerance for the entries expected to vanish.
    #[arg(long)]
    pub zero_tol: Option<f64>,
}

impl Merge for LadderArgs {
    fn merge(self, f: Self) -> Self {
        LadderArgs { k: self.k.or(f.k), n_max: self.n_max.or(f.n_max), zero_tol: self.zero_tol.or(f.zero_tol) }
    }
}

fn ladder_reference(a: u64, n: u64) -> (f64, f64) {
    let i = if a == n { 0.375 } else if a + 1 == n { 0.125 } else { 0.0 };
    let ip = if a == n { 0.375 } else if a == n + 1 { 0.125 } else { 0.0 };
    (i, ip)
}

pub fn ladder_table(args: LadderArgs, tol: Option<f64>) -> Result<Report> {
    let level = ModelLevel::new(args.k.context("ladder-table needs --k")?)?;
    let n_max = args.n_max.unwrap_or_else(|| model::relaxed_n_max(&level));
    let tol = tol.unwrap_or(1e-2);
    let zero_tol = args.zero_tol.unwrap_or(1e-4);
    let mut r = Report::new(
        "ladder-table",
        &["n", "a", "I", "I_reference", "I_prime", "I_prime_reference", "I_deviation", "I_prime_deviation"],
    );
    for n in 2..=n_max {
        let nn = u64::from(n);
        for a in nn.saturating_sub(2).max(1)..=nn + 1 {
            let (i, ip) = model::ladder_integrals(&level, a, n)?;
            let (ri, rip) = ladder_reference(a, nn);
            let (di, dip) = ((i - ri).abs(), (ip - rip).abs());
            for (dev, reference, name) in [(di, ri, "I"), (dip, rip, "I'")] {
                let t = if reference == 0.0 { zero_tol } else { tol };
                r.check(dev <= t, || format!("{name}(a = {a}, n = {n}) deviates by {dev:e} from {reference} (tol {t:e})"));
            }
            r.push(vec![n.into(), a.into(), i.into(), ri.into(), ip.into(), rip.into(), di.into(), dip.into()]);
        }
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Leading,
    Symmetric,
}

impl From<Placement> for DivisorPlacement {
    fn from(p: Placement) -> Self {
        match p {
            Placement::Leading => DivisorPlacement::Leading,
            Placement::Symmetric => DivisorPlacement::Symmetric,
        }
    }
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ChowArgs {
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    /// Where the divisor meets the curve component.
    #[arg(long, value_enum)]
    pub placement: Option<Placement>,
}

impl Merge for ChowArgs {
    fn merge(self, f: Self) -> Self {
        ChowArgs { d: self.d.or(f.d), k: self.k.or(f.k), placement: self.placement.or(f.placement) }
    }
}

const CHOW_COLUMNS: &[&str] = &[
    "d",
    "k",
    "lambda_k",
    "norm_at_lambda_k",
    "norm_below",
    "norm_above",
    "balancing_lambda",
    "norm_at_balancing_lambda",
];

pub fn chow_verify(args: ChowArgs, tol: Option<f64>) -> Result<Report> {
    let d = args.d.context("chow-verify needs --d")?;
    let k = args.k.context("chow-verify needs --k")?;
    let tol = tol.unwrap_or(1e-7);
    let placement = args.placement.unwrap_or(Placement::Leading).into();
    let mut r = Report::new("chow-verify", CHOW_COLUMNS);
    match chow::verify_theorem41_with(d, k, tol, placement) {
        Ok(rep) => {
            r.push(vec![
                d.into(),
                k.into(),
                rep.lambda_k.clone().into(),
                rep.norm_at_lambda_k.into(),
                rep.norm_below.into(),
                rep.norm_above.into(),
                rep.balancing_lambda.clone().into(),
                rep.norm_at_balancing_lambda.into(),
            ]);
            r.failures = rep.failures.clone();
            r.detail = Some(serde_json::to_value(&rep)?);
        }
        Err(Error::MaxIterExceeded { iterations, residual, tau_norm }) => {
            let lk = chow::lambda_k(d, k)?;
            r.push(vec![
                d.into(),
                k.into(),
                format!("{}/{}", lk.numer(), lk.denom()).into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
            ]);
            r.failures.push(format!(
                "no balanced (Y, E) pair: flow stopped after {iterations} iterations, residual {residual:e}, |tau| {tau_norm:e}"
            ));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CuspBulk {
    Epsilon,
    InverseSquare,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bulk {
    Rescaled,
    Unrescaled,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EnergyArgs {
    #[arg(long)]
    pub g: Option<u32>,
    /// deg L.
    #[arg(long)]
    pub l: Option<u32>,
    /// Number of cusps.
    #[arg(long)]
    pub d: Option<u32>,
    /// Comma-separated, strictly increasing levels.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<u32>>,
    /// Also write two-column `log k  log energy` text here.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub cusp_bulk: Option<CuspBulk>,
    #[arg(long, value_enum)]
    pub bulk: Option<Bulk>,
    /// `C` in the `C k^-2` bounds.
    #[arg(long)]
    pub c: Option<f64>,
    /// ε(k) = k^-p.
    #[arg(long)]
    pub epsilon_power: Option<f64>,
    /// Asserted upper bound on the log-log regression slope.
    #[arg(long)]
    pub max_slope: Option<f64>,
}

impl Merge for EnergyArgs {
    fn merge(self, f: Self) -> Self {
        EnergyArgs {
            g: self.g.or(f.g),
            l: self.l.or(f.l),
            d: self.d.or(f.d),
            k: self.k.or(f.k),
            plot_data: self.plot_data.or(f.plot_data),
            cusp_bulk: self.cusp_bulk.or(f.cusp_bulk),
            bulk: self.bulk.or(f.bulk),
            c: self.c.or(f.c),
            epsilon_power: self.epsilon_power.or(f.epsilon_power),
            max_slope: self.max_slope.or(f.max_slope),
        }
    }
}

pub fn energy_scan(args: EnergyArgs) -> Result<Report> {
    let surface = SurfaceData::new(
        args.g.unwrap_or(0),
        args.l.context("energy-scan needs --l")?,
        args.d.context("energy-scan needs --d")?,
    )?;
    let ks = args.k.context("energy-scan needs --k LIST")?;
    let defaults = ErrorModel::default();
    let model = ErrorModel {
        c: args.c.unwrap_or(defaults.c),
        epsilon_power: args.epsilon_power.unwrap_or(defaults.epsilon_power),
        cusp_bulk: match args.cusp_bulk {
            Some(CuspBulk::Epsilon) => CuspBulkClass::Epsilon,
            Some(CuspBulk::InverseSquare) => CuspBulkClass::InverseSquare,
            None => defaults.cusp_bulk,
        },
        bulk: match args.bulk {
            Some(Bulk::Rescaled) => BulkExpansion::Rescaled,
            Some(Bulk::Unrescaled) => BulkExpansion::Unrescaled,
            None => defaults.bulk,
        },
    };
    let rows = energy::scan_energy(&surface, &ks, &model)?;
    let mut r = Report::new("energy-scan", &["k", "energy", "slope"]);
    for row in &rows {
        r.check(row.energy > 0.0, || format!("energy {:e} at k = {} is not positive", row.energy, row.k));
        r.push(vec![row.k.into(), row.energy.into(), row.slope.into()]);
    }
    for w in rows.windows(2) {
        r.check(w[1].energy < w[0].energy, || format!("energy does not decrease from k = {} to k = {}", w[0].k, w[1].k));
    }
    let slope = energy::regression_slope(&rows);
    let max_slope = args.max_slope.unwrap_or(-1.2);
    if let Some(s) = slope {
        r.check(s <= max_slope, || format!("regression slope {s} above {max_slope}"));
    }
    r.detail = Some(json!({ "regressionSlope": slope, "errorModel": model }));
    if let Some(p) = args.plot_data {
        std::fs::write(&p, energy::plot_data(&rows)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(r)
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BalanceArgs {
    #[arg(long)]
    pub max_iter: Option<usize>,
}

pub fn balance_flow(args: BalanceArgs, cycle: &CycleConfig, tol: Option<f64>) -> Result<Report> {
    let tol = tol.unwrap_or(1e-9);
    let mut r = Report::new("balance-flow", &["index", "weight", "tau"]);
    match flow(cycle, tol, args.max_iter.unwrap_or(200)) {
        Ok(res) => {
            for (j, (w, t)) in res.weights.iter().zip(&res.tau).enumerate() {
                r.push(vec![(j as u64).into(), (*w).into(), (*t).into()]);
            }
            r.detail = Some(json!({
                "residual": res.residual,
                "iterations": res.iterations,
                "energyHistory": res.energy_history,
            }));
        }
        Err(Error::MaxIterExceeded { iterations, residual, tau_norm }) => {
            r.failures.push(format!(
                "not balanced within tol {tol:e}: {iterations} iterations, residual {residual:e}, |tau| {tau_norm:e}"
            ));
            r.detail = Some(json!({ "residual": residual, "iterations": iterations, "tauNorm": tau_norm }));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(r)
}
