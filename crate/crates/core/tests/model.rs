use cuspidal::cylinder::{cylinder_vs_disk_deviation, CylinderParams};
use cuspidal::model::*;
use cuspidal::numerics::ln_factorial;
use cuspidal::Error;

fn lv(k: f64) -> ModelLevel {
    ModelLevel::new(k).unwrap()
}

#[test]
fn norms_match_the_gamma_closed_form() {
    for k in [10.0, 100.0] {
        let level = lv(k);
        for a in [1i64, 7, 30] {
            // 2π (k-2)! / a^{k-1}
            let expect = (2.0 * std::f64::consts::PI).ln() + ln_factorial(k - 2.0) - (k - 1.0) * (a as f64).ln();
            let q = monomial_norm_sq_quadrature(&level, a).unwrap().ln_abs();
            assert!((q - expect).abs() < 1e-10 * expect.abs().max(1.0), "k={k} a={a}");
        }
    }
}

#[test]
fn monomials_are_orthogonal() {
    let level = lv(50.0);
    assert!(inner_product(&level, 2, 3).unwrap().is_zero());
    assert!(!inner_product(&level, 3, 3).unwrap().is_zero());
}

#[test]
fn regimes_partition_the_indices() {
    let level = lv(1e4);
    assert_eq!(level.regime(1), Regime::CaseII);
    assert_eq!(level.regime(50), Regime::CaseIII);
    assert_eq!(level.regime(2000), Regime::CaseI);
    assert!(level.index(0).is_err());
}

#[test]
fn cusp_indices_give_half_then_one() {
    let level = lv(800.0);
    assert!((mu_direct(&level, 1).unwrap() - 0.5).abs() <= 0.01);
    for a in 2..=8 {
        assert!((mu_direct(&level, a).unwrap() - 1.0).abs() <= 0.01, "a={a}");
    }
}

#[test]
fn neck_mu_agrees_with_the_direct_integral() {
    let level = lv(1e4);
    for a in [50u64, 100, 200] {
        let n = mu_neck(&level, a).unwrap();
        let d = mu_direct(&level, a).unwrap();
        assert!((n - 1.0).abs() <= 0.01 && (n - d).abs() <= 1e-3, "a={a}: {n} {d}");
    }
    assert!(matches!(mu_neck(&level, 2), Err(Error::WrongRegime { .. })));
}

#[test]
fn integration_by_parts_holds_on_the_neck() {
    let c = ibp_check(&lv(1e4), 100).unwrap();
    assert!(c.rel_diff < 1e-8, "{c:?}");
}

#[test]
fn theta_identity_across_scales() {
    for b in [0.01, 0.3, 1.0, 17.0, 100.0] {
        assert!((theta_identity(b).unwrap() - 2.0).abs() < 1e-8, "b={b}");
    }
    assert!(theta_identity(0.0).is_err());
}

#[test]
fn ladder_locates_and_rejects() {
    let p = LadderPartition::new(lv(400.0)).unwrap();
    let cell = p.locate(p.t_min() * 1.5).unwrap();
    assert!(cell.t_lo <= p.t_min() * 1.5 && p.t_min() * 1.5 <= cell.t_hi);
    assert!(matches!(p.locate(p.t_min() * 0.5), Err(Error::OutOfLadder { .. })));
    assert!(ladder_integrals(&lv(400.0), 3, 40).is_err());
}

#[test]
fn volume_beyond_is_the_mean_minus_one() {
    let level = lv(200.0);
    for t0 in [0.5, 2.0, 10.0] {
        let q = volume_beyond(&level, t0).unwrap();
        let c = volume_beyond_closed_form(&level, t0).unwrap();
        assert!((q - c).abs() <= 1e-9 * c.abs().max(1.0), "t0={t0}: {q} {c}");
    }
}

#[test]
fn cylinder_tracks_the_disk_at_the_neck() {
    let level = lv(1e4);
    let p = CylinderParams::for_level(&level, 60).unwrap();
    assert!(cylinder_vs_disk_deviation(&p, 801).unwrap().sup_deviation <= 1e-2);
}
