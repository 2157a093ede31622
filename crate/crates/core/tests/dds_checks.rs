use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;
use std::collections::BTreeMap;
use twistlab::dds::*;
use twistlab::lseries::{sym2_delta, CoefficientSystem};
use twistlab::quadchar::{build_context, class_of_int, ClassChar, SymbolContext};
use twistlab::ringarith::{BaseField, Sieve};

fn ctx() -> SymbolContext {
    build_context(&BaseField::rational()).unwrap()
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn npow(n: u64, s: Complex64) -> Complex64 {
    (-s * (n as f64).ln()).exp()
}

#[test]
fn pure_d_first_matches_brute_force_for_squarefree_indicator() {
    let ctx = ctx();
    let x = 500;
    let sieve = Sieve::new(x);
    let (s, w) = (c(2.2), Complex64::new(2.1, 0.5));
    let an: Vec<Complex64> =
        (0..=x).map(|n| if n % 2 == 1 && sieve.moebius(n) != 0 { npow(n, s) } else { Complex64::new(0.0, 0.0) }).collect();
    let mut brute = Complex64::new(0.0, 0.0);
    for d in (1..=x).step_by(2) {
        for n in (1..=x).step_by(2) {
            if sieve.moebius(n) != 0 {
                brute += npow(d, w) * npow(n, s) * ctx.chi(d, n).unwrap() as f64;
            }
        }
    }
    for order in [EvalOrder::DFirst, EvalOrder::NFirst] {
        let v = z_pure_from_coeffs(&an, s, w, &ctx, &TruncationSpec::square(x, order));
        assert!((v.value - brute).norm() < 1e-12, "{order:?}: {} vs {brute}", v.value);
    }
}

#[test]
fn pure_orders_agree_on_grid() {
    let sys = sym2_delta(3000).unwrap();
    let ctx = ctx();
    for sr in [2.0, 2.5, 3.0] {
        for wr in [2.0, 2.5, 3.0] {
            let (s, w) = (Complex64::new(sr, 0.5), Complex64::new(wr, -1.0));
            let d = z_pure(s, w, &sys, &ctx, &TruncationSpec::square(3000, EvalOrder::DFirst)).unwrap();
            let n = z_pure(s, w, &sys, &ctx, &TruncationSpec::square(3000, EvalOrder::NFirst)).unwrap();
            assert!((d.value - n.value).norm() < 1e-12, "({sr},{wr})");
            assert!(d.tail.is_finite() && d.last_term.is_finite());
        }
    }
}

#[test]
fn star_matches_brute_force_and_class_partition() {
    let sys = sym2_delta(300).unwrap();
    let ctx = ctx();
    let (s, w) = (c(2.5), c(2.5));
    let trunc = TruncationSpec::square(300, EvalOrder::DFirst);
    let coeffs = sys.coefficient_table(300).unwrap();
    let sieve = Sieve::new(300);
    for alpha in ClassChar::all() {
        for beta in ClassChar::all() {
            let v = z_star(s, w, &sys, &ctx, alpha, beta, None, &trunc).unwrap();
            let mut brute = Complex64::new(0.0, 0.0);
            for d in (1..=300u64).step_by(2).filter(|&d| sieve.moebius(d) != 0) {
                for n in (1..=300u64).step_by(2) {
                    let ch = ctx.chi(d, n).unwrap() as f64 * alpha.at_int(n) as f64 * beta.at_int(d) as f64;
                    brute += coeffs[n as usize] * ch * npow(d, w) * npow(n, s);
                }
            }
            assert!((v.value - brute).norm() < 1e-12);
            let parts: Complex64 =
                ctx.classes().into_iter().map(|e| z_star(s, w, &sys, &ctx, alpha, beta, Some(e), &trunc).unwrap().value).sum();
            assert!((parts - v.value).norm() < 1e-14);
        }
    }
    let one = z_star(s, w, &sys, &ctx, ClassChar::TRIVIAL, ClassChar::TRIVIAL, None, &TruncationSpec::new(1, 300, 1.0, EvalOrder::DFirst).unwrap())
        .unwrap();
    let partial: Complex64 = weighted_odd_coeffs(&sys, 300, s).unwrap().iter().sum();
    assert!((one.value - partial).norm() < 1e-14);
}

fn random_unitary(seed: u64) -> [Complex64; 3] {
    let t1 = (seed as f64 * 0.7548776662).fract() * std::f64::consts::TAU;
    let t2 = (seed as f64 * 0.5698402910).fract() * std::f64::consts::TAU;
    [Complex64::from_polar(1.0, t1), Complex64::from_polar(1.0, t2), Complex64::from_polar(1.0, -t1 - t2)]
}

#[test]
fn correction_functional_equations() {
    for (i, p) in [3u64, 5, 7, 11, 13, 101].into_iter().enumerate() {
        let lc = solve_correction_local(p, &random_unitary(i as u64 + 1), 6).unwrap();
        let rep = correction_fe_check(&lc, 10, 17 + i as u64);
        assert!(rep.holds(1e-10), "{rep:?}");
        assert!(lc.consistency < 1e-9);
    }
    let sys = sym2_delta(2000).unwrap();
    for p in [3u64, 5, 691] {
        let lc = solve_correction_for(&sys, p, 4).unwrap();
        assert!(correction_fe_check(&lc, 10, p).holds(1e-10));
    }
}

#[test]
fn growth_gate_on_large_primes() {
    let sys = sym2_delta(3000).unwrap();
    for &p in sys.primes().iter().filter(|&&p| p >= 101).step_by(37) {
        let lc = solve_correction_for(&sys, p, 3).unwrap();
        for g in growth_gate(&lc, 0.01) {
            assert!(g.holds(), "{g:?}");
        }
    }
}

#[test]
fn basic_identity_and_restricted_series() {
    let sys = sym2_delta(20000).unwrap();
    let ctx = ctx();
    let eng = CorrectedEngine::new(&sys, &ctx, 400, 20000).unwrap();
    let (s, w) = (c(2.5), c(2.5));
    let trunc = TruncationSpec::square(400, EvalOrder::DFirst);
    for (alpha, beta) in [(ClassChar::TRIVIAL, ClassChar::TRIVIAL), (ClassChar::all()[1], ClassChar::all()[3])] {
        let chk = eng.basic_identity_check(s, w, alpha, beta, &trunc).unwrap();
        assert!(chk.residual < 1e-4, "{chk:?}");
    }
    let z = eng.corrected_z(s, w, ClassChar::TRIVIAL, ClassChar::TRIVIAL, &trunc).unwrap();
    let z1 = eng.z_r(1, s, w, ClassChar::TRIVIAL, ClassChar::TRIVIAL, &trunc).unwrap();
    assert_eq!(z.value, z1.value);
    assert_eq!(eng.z_r(9, s, w, ClassChar::TRIVIAL, ClassChar::TRIVIAL, &trunc).unwrap_err().code(), "E_DOMAIN");

    let terms = eng.d_terms(s, w, ClassChar::TRIVIAL, ClassChar::all()[2], 400).unwrap();
    let f: Vec<(u64, Complex64)> = terms.iter().map(|t| (t.0, t.2)).collect();
    let sides = sieve_sides(&f, 15).unwrap();
    assert!((sides.restricted - sides.lemma_sum).norm() < 1e-14);
    assert!((sides.moebius_sum - sides.squarefree_sum).norm() < 1e-14);

    // Squarefree D carry no correction: the squarefree part is Z⋆ up to truncation.
    let star = z_star(s, w, &sys, &ctx, ClassChar::TRIVIAL, ClassChar::TRIVIAL, None, &TruncationSpec::new(400, 20000, 1.0, EvalOrder::DFirst).unwrap())
        .unwrap();
    let sq: Complex64 = eng.d_terms(s, w, ClassChar::TRIVIAL, ClassChar::TRIVIAL, 400).unwrap().iter().filter(|t| t.1 == 1).map(|t| t.2).sum();
    assert!((star.value - sq).norm() < 1e-6, "{} vs {sq}", star.value);
}

#[test]
fn restricted_rearrangement() {
    let sys = sym2_delta(20000).unwrap();
    let ctx = ctx();
    let eng = CorrectedEngine::new(&sys, &ctx, 600, 20000).unwrap();
    for l in [3u64, 15] {
        for alpha in [ClassChar::TRIVIAL, ClassChar::all()[3]] {
            let r = eng.zl_rearrangement(&ctx, l, c(2.5), c(2.5), alpha, ClassChar::all()[1], 600).unwrap();
            assert!(r.residual < 1e-10, "l={l}: {r:?}");
        }
    }
}

#[test]
fn refined_expansions_telescope() {
    let sys = sym2_delta(200).unwrap();
    let pts = [Complex64::new(0.3, 2.0), Complex64::new(1.7, -0.4), Complex64::new(-0.5, 5.0)];
    for r in [1u64, 3, 15, 105] {
        for side in [FeSide::Phi, FeSide::Psi] {
            if side == FeSide::Phi && r == 105 {
                continue;
            }
            for twist in ClassChar::all() {
                for &pt in &pts {
                    let e = refined_fe_expand(&sys, r, twist, side, pt).unwrap();
                    let res = refined_telescoping_residual(&sys, &e, twist, pt).unwrap();
                    assert!(res < 1e-12, "r={r} {side:?}: {res}");
                }
            }
        }
    }
}

#[test]
fn termwise_functional_equations() {
    let sys = sym2_delta(60000).unwrap();
    let m5 = fe_termwise_check(&sys, TermSpec::M(5), c(0.6), 1e-6).unwrap();
    assert!(m5.residual < 1e-6 && !m5.flagged, "{m5:?}");
    for m in [1u64, 3, 45, 7 * 7 * 7] {
        let r = fe_termwise_check(&sys, TermSpec::M(m), Complex64::new(0.7, 1.5), 1e-6).unwrap();
        assert!(r.residual < 1e-6, "M={m}: {r:?}");
    }
    for d in [1u64, 5, 45, 27] {
        let r = fe_termwise_check(&sys, TermSpec::D(d), Complex64::new(0.6, 0.5), 1e-6).unwrap();
        assert!(r.residual < 1e-6, "D={d}: {r:?}");
    }
    let half = fe_termwise_check(&sys, TermSpec::D(5), c(0.5), 1e-6).unwrap();
    assert!(half.residual < 1e-12);
}

#[test]
fn synthetic_system_corrections() {
    let sys: CoefficientSystem = CoefficientSystem::synthetic(9, 500);
    for &p in sys.primes().iter().filter(|&&p| p > 2).take(10) {
        if let Ok(lc) = solve_correction_for(&sys, p, 5) {
            assert!(correction_fe_check(&lc, 10, p).holds(1e-10));
        }
    }
    assert!(class_of_int(7).index() < 4);
}

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn sieve_identities_exact(entries in prop::collection::vec((0u64..5000, -50i64..50, 1i64..20), 1..40), r_idx in 0usize..6) {
        let r = [1u64, 3, 15, 21, 105, 35][r_idx];
        let mut f = BTreeMap::new();
        for (k, n, d) in entries {
            f.insert(2 * k + 1, rational(n, d));
        }
        let chk = sieve_identity_check(&f, r).unwrap();
        prop_assert!(chk.holds());
    }
}
