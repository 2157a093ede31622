use num_complex::Complex64;
use proptest::prelude::*;
use twistlab::lseries::{prime_power_series, sym2_delta, CoefficientSystem};
use twistlab::quadchar::{build_context, ClassChar, SymbolContext};
use twistlab::residues::*;
use twistlab::ringarith::BaseField;

fn ctx() -> SymbolContext {
    build_context(&BaseField::rational()).unwrap()
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn closed_forms_match_series() {
    let sys = sym2_delta(200).unwrap();
    for &r in sys.primes().iter().filter(|&&p| p > 2 && p <= 100) {
        for s in [0.6, 0.75, 1.0] {
            let p = local_pair(&sys, r, c(s), 60).unwrap();
            assert!(p.rel_error() < 1e-10, "r={r} s={s}: {}", p.rel_error());
        }
    }
    let p = local_pair(&sys, 3, c(0.5), 0).unwrap();
    assert!(p.l1.norm() > 0.0 && p.denominator().norm() > 0.0 && p.l1.is_finite());
    // Non-self-dual Satake: the even series needs e2, not e1.
    let g = [Complex64::from_polar(1.0, 0.4), Complex64::from_polar(1.0, 1.1), Complex64::from_polar(1.0, -1.5)];
    let p = local_pair_from_satake(7, &g, Complex64::new(0.8, 3.0), 60).unwrap();
    assert!(p.rel_error() < 1e-12);
    assert_eq!(local_pair(&sys, 9, c(0.5), 2).unwrap_err().code(), "E_DOMAIN");
}

#[test]
fn rr_reconstructs_from_components() {
    let sys = sym2_delta(200).unwrap();
    let ctx = ctx();
    for e in ctx.classes() {
        let rep = residue_report(&sys, &ctx, e, c(0.5), 50, &[3, 5, 7]).unwrap();
        for (r, pair, eta, v) in &rep.rr {
            let rf = *r as f64;
            let again = *eta as f64 * (1.0 + 1.0 / rf) * pair.l1 / (1.0 / rf + pair.l2);
            assert!((again - v).norm() < 1e-12);
            assert_eq!(*v, rr(&sys, &ctx, e, *r, c(0.5)).unwrap());
        }
    }
}

#[test]
fn rr_monotone_in_coefficient() {
    for r in [101u64, 103, 199] {
        let scan = monotonicity_scan(r, c(0.5), -2.0, 2.0, 0.01).unwrap();
        assert_eq!(scan.points.len(), 401);
        assert!(scan.strictly_monotone(), "r={r}");
    }
}

#[test]
fn determination_detects_single_perturbation() {
    let sys = sym2_delta(400).unwrap();
    let ctx = ctx();
    let e = ctx.classes()[0];
    let mut b = sys.clone();
    let a0 = sys.satake(101).unwrap().iter().sum::<Complex64>().re;
    b.set_satake(101, synthetic_satake(a0 + 0.1)).unwrap();
    let primes: Vec<u64> = sys.primes().iter().copied().filter(|&p| p > 2 && p <= 300).collect();
    let rows = determination_rows(&sys, &b, &ctx, e, &primes, c(0.5)).unwrap();
    for row in &rows {
        assert!(!row.flagged());
        assert_eq!(row.detected(), row.r == 101, "r={}", row.r);
    }
    let same = determination_rows(&sys, &sys, &ctx, e, &primes, c(0.5)).unwrap();
    assert!(same.iter().all(|r| !r.flagged() && !r.detected()));
}

#[test]
fn r1_components() {
    let sys = sym2_delta(3000).unwrap();
    let ctx = ctx();
    let rep = r1(&sys, &ctx, ctx.classes()[0], c(0.5), 1000).unwrap();
    assert_eq!(rep.h_c, 4);
    assert!((rep.zeta2 - 1.644_934_066_848_226_4).abs() < 1e-14);
    assert!((rep.s_product - 2.0 / 3.0).abs() < 1e-16);
    let again = rep.constant() * rep.l_s * rep.sym2_partial() * rep.t.value;
    assert!((again - rep.r1).norm() < 1e-15);
    // Synthetic non-self-dual input: the sym² factor at 1 is finite and nonzero.
    let syn = CoefficientSystem::synthetic(4, 3000);
    let rep = r1(&syn, &ctx, ctx.classes()[2], c(0.5), 1000).unwrap();
    assert!(rep.r1.norm() > 1e-6 && rep.r1.is_finite());
    assert!(rep.sym2_partial().norm() > 1e-6);
}

#[test]
fn t_routes() {
    let sys = sym2_delta(20011).unwrap();
    let t2 = t_of_s(&sys, c(2.0), 500).unwrap();
    assert!((t2.value - t_euler(&sys, c(2.0), 500).unwrap()).norm() < 1e-8);
    let lo = t_of_s(&sys, c(0.75), 1000).unwrap();
    let hi = t_of_s(&sys, c(0.75), 10000).unwrap();
    assert!((lo.euler - hi.euler).norm() / hi.euler.norm() < 1e-4);
    // The truncated quotient converges like X^{−1/2}.
    assert!((lo.value - hi.value).norm() / hi.value.norm() < 1e-2);
    assert!(hi.drift < lo.drift);
    assert!((hi.value - hi.euler).norm() < 5e-3);
}

#[test]
fn hypothesis_probe_stabilizes() {
    let sys = sym2_delta(10007).unwrap();
    let pr = hypothesis_probe(&sys, c(0.75), &[100, 1000, 3000, 10000]).unwrap();
    assert!(pr.stable_digits() >= 3.0);
    let pr = hypothesis_probe(&sys, c(0.5), &[100, 1000, 3000, 10000]).unwrap();
    assert!(pr.rows.iter().all(|r| r.value.is_finite()));
    assert_eq!(hypothesis_probe(&sys, c(0.75), &[100, 50]).unwrap_err().code(), "E_CONFIG");
    assert_eq!(hypothesis_probe(&sys, c(0.75), &[100_000]).unwrap_err().code(), "E_DOMAIN");
}

#[test]
fn switching_identity() {
    let sys = sym2_delta(10007).unwrap();
    let sw = switching_check(&sys, 3, c(1.0), 10000).unwrap();
    assert!(sw.residual < 1e-5, "{sw:?}");
    let one = switching_check(&sys, 3, c(1.0), 1).unwrap();
    let l2 = local_pair(&sys, 3, c(1.0), 0).unwrap().l2;
    assert!((one.lhs - 0.75).norm() < 1e-15);
    assert!((one.rhs - 1.0 / (1.0 / 3.0 + l2)).norm() < 1e-15);

    // a supported on powers of r: both sides are geometric in r^{−2s}.
    let r = 5u64;
    let g = [c(1.0), Complex64::from_polar(1.0, 0.7), Complex64::from_polar(1.0, -0.7)];
    let s = Complex64::new(0.9, 0.3);
    let series = prime_power_series(&g, 60);
    let squares: Vec<(u64, Complex64)> = (0..=13).map(|k| (r.pow(k), series[2 * k as usize])).collect();
    let pair = local_pair_from_satake(r, &g, s, 0).unwrap();
    let sw = switching_check_with(&squares, pair.l2, r, s, u64::MAX);
    assert!((sw.lhs - 1.0 / (1.0 + 1.0 / r as f64)).norm() < 1e-15);
    assert!(sw.residual < 1e-12, "{sw:?}");
}

#[test]
fn dedekind_identity_branches() {
    let setup = DedekindSetup::default();
    for (rho, r, n, trivial) in [
        (ClassChar::TRIVIAL, 1u64, 1u64, true),
        (ClassChar::TRIVIAL, 3, 3, true),
        (ClassChar::TRIVIAL, 3, 27, true),
        (ClassChar::TRIVIAL, 3, 15, false),
        (ClassChar::all()[1], 1, 1, false),
        (ClassChar::all()[3], 7, 7, false),
        (ClassChar::TRIVIAL, 5, 1, false),
    ] {
        let d = dedekind_residue_factor_check(rho, r, n, &setup).unwrap();
        assert_eq!(d.trivial, trivial);
        assert_eq!(d.primes_checked, 168);
        assert!(d.holds(), "{d:?}");
        assert!(d.w2_residual <= d.w2_tail_bound, "{d:?}");
    }
}

#[test]
fn scattering_factor() {
    let sys = sym2_delta(100).unwrap();
    for e0 in [1u64, 3, 5, 15] {
        assert!((scattering_m(&sys, e0, c(0.5)).unwrap() - 1.0).norm() < 1e-12);
        let s = Complex64::new(0.6, 0.0);
        let m = scattering_m(&sys, e0, s).unwrap() * scattering_m(&sys, e0, c(1.0) - s).unwrap();
        assert!((m - 1.0).norm() < 1e-8);
        let s = Complex64::new(0.3, 2.0);
        let m = scattering_m(&sys, e0, s).unwrap() * scattering_m(&sys, e0, c(1.0) - s).unwrap();
        assert!((m - 1.0).norm() < 1e-8);
    }
    let syn = CoefficientSystem::synthetic(1, 50);
    assert_eq!(scattering_m(&syn, 1, c(0.6)).unwrap_err().code(), "E_CONFIG");
}

#[test]
fn residue_routes_agree() {
    let sys = sym2_delta(10007).unwrap();
    let ctx = ctx();
    let e = ctx.classes()[0];
    let one = residue_consistency(&sys, &ctx, e, 1, c(0.75), 10000).unwrap();
    assert!(one.deviation < 0.05, "{one:?}");
    let three = residue_consistency(&sys, &ctx, e, 3, c(0.75), 10000).unwrap();
    assert!(three.corrected_deviation < 0.05, "{three:?}");
    assert!(((three.formula / three.corrected).re - 4.0 / 3.0).abs() < 1e-12);

    // Coefficients supported on powers of r.
    let r = 3u64;
    let g = [c(1.0), Complex64::from_polar(1.0, 2.0), Complex64::from_polar(1.0, -2.0)];
    let s = c(0.75);
    let series = prime_power_series(&g, 80);
    let route: Vec<(u64, Complex64)> = (0..=40).map(|k| (r.pow(k), series[k as usize])).collect();
    let squares: Vec<(u64, Complex64)> = (0..=20).map(|k| (r.pow(k), series[2 * k as usize])).collect();
    let pair = local_pair_from_satake(r, &g, s, 0).unwrap();
    for eta in [-1i8, 1] {
        let rc = residue_consistency_with(&route, &squares, Some(&pair), eta, Complex64::new(1.1, -0.2), 4, s).unwrap();
        assert!(rc.corrected_deviation < 1e-10, "{rc:?}");
        assert!((rc.deviation - 0.25).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn series_converges_to_closed_form(t1 in 0.0f64..6.3, t2 in 0.0f64..6.3, r_idx in 0usize..5, sr in 0.55f64..1.5, si in -5.0f64..5.0) {
        let r = [3u64, 5, 7, 11, 97][r_idx];
        let g = [Complex64::from_polar(1.0, t1), Complex64::from_polar(1.0, t2), Complex64::from_polar(1.0, -t1 - t2)];
        let p = local_pair_from_satake(r, &g, Complex64::new(sr, si), 60).unwrap();
        prop_assert!((p.l1 - p.l1_series).norm() <= p.tail_bound + 1e-12);
        prop_assert!((p.l2 - p.l2_series).norm() <= p.tail_bound + 1e-12);
    }

    #[test]
    fn local_factor_identity_needs_unit_character(chi in -3i8..=3, excluded: bool) {
        prop_assert_eq!(dedekind_local_identity(chi, excluded), excluded || chi.abs() <= 1);
    }
}
