//! Acceptance criteria 1–9, one PASS/FAIL line each. Tolerances are the
//! published ones; nothing is relaxed to make a line pass.

use std::time::{Duration, Instant};

use cuspidal::chow::*;
use cuspidal::cylinder::{cylinder_rho, CylinderParams};
use cuspidal::energy::{regression_slope, scan_energy, ErrorModel, SurfaceData};
use cuspidal::model::*;
use cuspidal::numerics::{ln_binomial, ln_factorial};
use num_rational::Ratio;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn run(n: u32, title: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = took <= budget;
    let pass = o.pass && in_time;
    println!(
        "criterion {n} {}: {title} [{:.2}s of {}s] {}",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        budget.as_secs(),
        o.detail
    );
    pass
}

fn lv(k: f64) -> ModelLevel {
    ModelLevel::new(k).expect("valid level")
}

fn criterion_1() -> Outcome {
    let mut worst = (0.0f64, 0.0, 0);
    for k in [10.0, 100.0, 1000.0] {
        let level = lv(k);
        for a in 1..=50i64 {
            let oracle = (2.0 * std::f64::consts::PI).ln() + ln_factorial(k - 2.0) - (k - 1.0) * (a as f64).ln();
            let q = match monomial_norm_sq_quadrature(&level, a) {
                Ok(v) => v.ln_abs(),
                Err(e) => return outcome(false, format!("k={k} a={a}: {e}")),
            };
            let rel = (q - oracle).exp_m1().abs();
            if rel > worst.0 {
                worst = (rel, k, a);
            }
        }
    }
    outcome(worst.0 <= 1e-10, format!("max rel error {:.3e} (k={}, a={}) vs 1e-10", worst.0, worst.1, worst.2))
}

fn criterion_2() -> Outcome {
    let mut worst = (0.0f64, 0.0);
    for i in 0..20 {
        let b = (1e-2f64.ln() + (1e2f64.ln() - 1e-2f64.ln()) * i as f64 / 19.0).exp();
        match theta_identity(b) {
            Ok(v) => {
                let e = (v - 2.0).abs();
                if e > worst.0 {
                    worst = (e, b);
                }
            }
            Err(e) => return outcome(false, format!("b={b}: {e}")),
        }
    }
    outcome(worst.0 < 1e-8, format!("max |integral - 2| = {:.3e} (b={:.3e}) vs 1e-8", worst.0, worst.1))
}

fn criterion_3() -> Outcome {
    let level = lv(400.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for n in 2..=6u32 {
        let nn = u64::from(n);
        let get = |a: u64| ladder_integrals(&level, a, n).map(|p| p.0);
        let (inn, in1, in2) = match (get(nn), get(nn - 1), get(nn - 2)) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            (a, b, c) => return outcome(false, format!("n={n}: {:?} {:?} {:?}", a.err(), b.err(), c.err())),
        };
        ok &= (inn - 0.375).abs() <= 0.01 && (in1 - 0.125).abs() <= 0.01 && in2.abs() <= 1e-4;
        parts.push(format!("n={n}: {inn:.5}/{in1:.5}/{in2:.1e}"));
    }
    outcome(ok, format!("I(n,n)/I(n-1,n)/I(n-2,n) at k=400: {}", parts.join(", ")))
}

fn criterion_4() -> Outcome {
    let mut sups = Vec::new();
    let mut at_800 = Vec::new();
    for k in [200.0, 400.0, 800.0] {
        let level = lv(k);
        let mut devs = Vec::new();
        for a in 1..=8u64 {
            let expected = if a == 1 { 0.5 } else { 1.0 };
            match mu_direct(&level, a) {
                Ok(mu) => devs.push((mu - expected).abs()),
                Err(e) => return outcome(false, format!("k={k} a={a}: {e}")),
            }
        }
        sups.push(devs.iter().copied().fold(0.0, f64::max));
        if k == 800.0 {
            at_800 = devs;
        }
    }
    let bounded = at_800.iter().all(|&d| d <= 0.01);
    let shrinking = sups.windows(2).all(|w| w[1] < w[0]);
    let list: Vec<String> = at_800.iter().map(|d| format!("{d:.1e}")).collect();
    outcome(
        bounded && shrinking,
        format!(
            "k=800 |mu_a - expected| a=1..8: [{}]; sup over a at k=200/400/800: {:.3e}/{:.3e}/{:.3e}",
            list.join(" "),
            sups[0],
            sups[1],
            sups[2]
        ),
    )
}

fn criterion_5() -> Outcome {
    let level = lv(1e4);
    let mut ok = true;
    let mut parts = Vec::new();
    for a in [50u64, 100, 200] {
        let (n, d) = match (mu_neck(&level, a), mu_direct(&level, a)) {
            (Ok(n), Ok(d)) => (n, d),
            (n, d) => return outcome(false, format!("a={a}: {:?} {:?}", n.err(), d.err())),
        };
        ok &= (n - 1.0).abs() <= 0.01 && (n - d).abs() <= 1e-3;
        parts.push(format!("a={a}: mu={n:.6} |neck-direct|={:.1e}", (n - d).abs()));
    }
    outcome(ok, parts.join(", "))
}

fn criterion_6() -> Outcome {
    let cases = [(3u32, 1u32, (1, 2)), (4, 1, (2, 5)), (3, 2, (7, 11)), (4, 2, (18, 29)), (3, 3, (20, 31))];
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, k, (p, q)) in cases {
        let exact = lambda_k(d, k).map(|l| l == Ratio::new(p, q)).unwrap_or(false);
        ok &= exact;
        let verdict = match verify_theorem41(d, k, 1e-7) {
            Ok(r) => {
                let strict = r.norm_below > 1e-4 && r.norm_above > 1e-4;
                ok &= r.passed && strict;
                format!(
                    "({d},{k}) lambda={p}/{q}{}: |mu|={:.2e}, window {:.2e}/{:.2e} {}",
                    if exact { "" } else { " (inexact)" },
                    r.norm_at_lambda_k,
                    r.norm_below,
                    r.norm_above,
                    if r.passed && strict { "ok" } else { "FAIL" }
                )
            }
            Err(e) => {
                ok = false;
                let sym = match verify_theorem41_with(d, k, 1e-7, DivisorPlacement::Symmetric) {
                    Ok(r) => format!(
                        "symmetric E: |mu|={:.2e} at {p}/{q}, {:.1e} at {}",
                        r.norm_at_lambda_k, r.norm_at_balancing_lambda, r.balancing_lambda
                    ),
                    Err(e) => format!("symmetric E: {e}"),
                };
                format!("({d},{k}) lambda={p}/{q}: FAIL ({e}; {sym})")
            }
        };
        parts.push(verdict);
    }
    outcome(ok, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let mut worst_res = 0.0f64;
    let mut worst_shape = 0.0f64;
    for m in 1..=12usize {
        let c = CycleConfig::new(
            m,
            vec![CycleComponent::WeightedRnc { index_set: (0..=m).collect(), weights: vec![1.0; m + 1] }],
            vec![],
            1.0,
        );
        let r = match balance_flow(&c, 1e-10, 200) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("m={m}: {e}")),
        };
        worst_res = worst_res.max(r.residual);
        // balanced weights are binomial modulo scale and t -> ct
        let g: Vec<f64> = (0..=m).map(|j| 2.0 * r.weights[j].ln() - ln_binomial(m as u64, j as u64)).collect();
        let slope = (g[m] - g[0]) / m as f64;
        for (j, gj) in g.iter().enumerate() {
            worst_shape = worst_shape.max((gj - g[0] - slope * j as f64).abs());
        }
    }
    outcome(
        worst_res < 1e-9 && worst_shape < 1e-6,
        format!("m=1..12: max residual {worst_res:.2e} vs 1e-9, max deviation from binomial shape {worst_shape:.2e}"),
    )
}

fn criterion_8() -> Outcome {
    let surface = SurfaceData::new(0, 3, 3).expect("valid surface");
    let rows = match scan_energy(&surface, &[100, 200, 400, 800], &ErrorModel::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let positive = rows.iter().all(|r| r.energy > 0.0);
    let decreasing = rows.windows(2).all(|w| w[1].energy < w[0].energy);
    let slope = regression_slope(&rows).unwrap_or(f64::NAN);
    let energies: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.energy)).collect();
    outcome(
        positive && decreasing && slope <= -1.2,
        format!("energy at k=100/200/400/800: {}; regression slope {slope:.4} vs -1.2", energies.join("/")),
    )
}

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: 200, failure_persistence: None, ..Config::default() })
}

fn rnc_strategy() -> impl Strategy<Value = (usize, Vec<f64>, usize, f64)> {
    (1usize..=5).prop_flat_map(|m| {
        (Just(m), prop::collection::vec((-2.0f64..2.0).prop_map(f64::exp), m + 1), 0..=m, 0.0f64..=1.0)
    })
}

/// A curve made of an RNC on the first coordinates and a line, with a
/// divisor point, in ℙ^{m+1}.
fn mixed_config(m: usize, w: &[f64], p: usize, lambda: f64) -> CycleConfig {
    CycleConfig::new(
        m + 1,
        vec![
            CycleComponent::WeightedRnc { index_set: (0..=m).collect(), weights: w.to_vec() },
            CycleComponent::CoordLine { i: p, j: m + 1 },
        ],
        vec![p],
        lambda,
    )
}

fn criterion_9() -> Outcome {
    let mut results = Vec::new();
    let mut check = |name: &str, r: std::result::Result<(), String>| {
        results.push((name.to_string(), r));
    };

    check(
        "trace-zero",
        runner()
            .run(&rnc_strategy(), |(m, w, p, lambda)| {
                let mu = lambda_center_of_mass(&mixed_config(m, &w, p, lambda)).unwrap();
                prop_assert!(mu.trace().abs() <= 1e-12);
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    check(
        "volume-sum",
        runner()
            .run(&rnc_strategy(), |(m, w, _, _)| {
                let d = rnc_diagonal(&w).unwrap();
                prop_assert!((d.iter().sum::<f64>() - m as f64).abs() <= 1e-12);
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    check(
        "flow-monotone",
        runner()
            .run(&rnc_strategy(), |(m, w, _, _)| {
                let c = CycleConfig::new(m, vec![CycleComponent::WeightedRnc { index_set: (0..=m).collect(), weights: w }], vec![], 1.0);
                let r = balance_flow(&c, 1e-9, 100).unwrap();
                prop_assert!(r.energy_history.windows(2).all(|p| p[1] < p[0]));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    check(
        "route-equivalence",
        runner()
            .run(&(2e3f64..2e4, 0.0f64..1.0), |(k, t)| {
                let level = lv(k);
                let (lo, hi) = (level.neck_lower().ceil(), level.neck_upper().ceil() - 1.0);
                let a = (lo + t * (hi - lo)).round() as u64;
                prop_assume!(level.regime(a) == Regime::CaseIII);
                prop_assert!((mu_neck(&level, a).unwrap() - mu_direct(&level, a).unwrap()).abs() <= 1e-3);
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    check(
        "cylinder-h",
        runner()
            .run(&(1e3f64..1e5, 0.0f64..1.0, -3.0f64..3.0), |(k, t, u)| {
                let level = lv(k);
                let (lo, hi) = (level.neck_lower().ceil(), level.neck_upper().ceil() - 1.0);
                let a = (lo + t * (hi - lo)).round() as u64;
                prop_assume!(level.regime(a) == Regime::CaseIII);
                let p = CylinderParams::new(k, a).unwrap();
                let u = u * p.period();
                let lhs = h_theta(p.theta_b(), u).ln_abs();
                let rhs = cylinder_rho(&p, u).ln_abs() + (a as f64).powi(2) * u * u / (2.0 * k);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    let pass = results.iter().all(|(_, r)| r.is_ok());
    let detail: Vec<String> = results
        .iter()
        .map(|(n, r)| match r {
            Ok(()) => format!("{n} ok"),
            Err(e) => format!("{n} FAILED: {e}"),
        })
        .collect();
    outcome(pass, format!("200 cases each: {}", detail.join(", ")))
}

fn main() {
    // `cargo test` passes harness flags; a name filter selects nothing here.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if args.iter().any(|a| !"acceptance".contains(a.as_str()) && !a.starts_with("criterion")) {
        return;
    }
    let s = Duration::from_secs;
    let results = [
        run(1, "monomial norms", s(10), criterion_1),
        run(2, "theta identity", s(5), criterion_2),
        run(3, "ladder integrals", s(30), criterion_3),
        run(4, "cusp indices", s(60), criterion_4),
        run(5, "neck indices", s(120), criterion_5),
        run(6, "degenerate pair balancing", s(60), criterion_6),
        run(7, "Veronese balance", s(30), criterion_7),
        run(8, "energy decay", s(600), criterion_8),
        run(9, "invariant suites", s(300), criterion_9),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, p)| !**p).map(|(i, _)| i + 1).collect();
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: {} of 9 criteria fail: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
