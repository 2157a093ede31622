//! The fourteen acceptance checks, shared by `twistlab suite` and the test target.

use crate::config::ExperimentConfig;
use crate::experiments::{self, context};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::{Duration, Instant};
use twistlab::dds::{
    correction_fe_check, growth_gate, sieve_identity_check, solve_correction_for, z_pure, CorrectedEngine, EvalOrder, TruncationSpec,
};
use twistlab::error::Result;
use twistlab::fegroup::{box_coverage, check_relations, continuation_pipeline, fe_group, prop56_boundary_check, q, region_r1};
use twistlab::lseries::afe::{AfeEngine, CompletedLParams};
use twistlab::quadchar::{class_of_int, ClassChar};
use twistlab::residues::{dedekind_residue_factor_check, hypothesis_probe, local_pair, monotonicity_scan, DedekindSetup};
use twistlab::ringarith::{gcd, kronecker, trial_factor};

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub checks_ok: bool,
    pub elapsed: Duration,
    pub budget: Duration,
    pub detail: String,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks_ok && self.elapsed <= self.budget
    }

    pub fn line(&self) -> String {
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        let time = if self.elapsed <= self.budget { String::new() } else { " [over time budget]".to_string() };
        format!(
            "{verdict} {:>2} {} ({:.2}s of {}s){time}: {}",
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

pub const TITLES: [(&str, u64); 14] = [
    ("D6 group", 1),
    ("continuation pipeline", 5),
    ("Prop 5.6 boundary", 1),
    ("quadratic-symbol oracle", 10),
    ("Moebius sieve identities", 10),
    ("rearrangement and basic identity", 120),
    ("correction solver", 30),
    ("closed forms of L1, L2", 30),
    ("Dedekind residue identity", 60),
    ("GL(1) completed functional equation", 120),
    ("Rr monotonicity and determination", 60),
    ("nonvanishing experiment", 600),
    ("mean-square growth", 600),
    ("Euler-product probe", 60),
];

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn run_one(id: usize, cfg: &ExperimentConfig) -> Outcome {
    let (title, secs) = TITLES[id - 1];
    let t0 = Instant::now();
    let res: Result<(bool, String)> = match id {
        1 => c1(),
        2 => c2(),
        3 => c3(),
        4 => c4(),
        5 => c5(cfg),
        6 => c6(cfg),
        7 => c7(cfg),
        8 => c8(),
        9 => c9(),
        10 => c10(),
        11 => c11(cfg),
        12 => c12(cfg),
        13 => c13(cfg),
        14 => c14(cfg),
        _ => unreachable!(),
    };
    let (checks_ok, detail) = res.unwrap_or_else(|e| (false, format!("{}: {e}", e.code())));
    Outcome { id, title, checks_ok, elapsed: t0.elapsed(), budget: Duration::from_secs(secs), detail }
}

/// Accepts `all`, numbers `1`..`14` or `c1`..`c14`.
pub fn select(names: &[String]) -> std::result::Result<Vec<usize>, String> {
    if names.is_empty() || names.iter().any(|n| n == "all" || n == "acceptance") {
        return Ok((1..=14).collect());
    }
    names
        .iter()
        .map(|n| {
            n.trim_start_matches('c')
                .parse::<usize>()
                .ok()
                .filter(|i| (1..=14).contains(i))
                .ok_or_else(|| format!("unknown suite `{n}`"))
        })
        .collect()
}

pub fn run(ids: &[usize], cfg: &ExperimentConfig) -> Vec<Outcome> {
    ids.iter().map(|&i| run_one(i, cfg)).collect()
}

pub fn c1() -> Result<(bool, String)> {
    let g = fe_group()?;
    let rel = check_relations()?;
    Ok((
        g.len() == 12 && rel.all_hold(),
        format!(
            "{} elements; phi^2 = id {}, psi^2 = id {}, (phi psi)^6 = id {}, (phi psi)^3 != id {}",
            g.len(),
            rel.phi_squared,
            rel.psi_squared,
            rel.phipsi_sixth,
            rel.phipsi_cubed_nontrivial
        ),
    ))
}

pub fn c2() -> Result<(bool, String)> {
    let stages = continuation_pipeline(&region_r1())?;
    let cov = box_coverage(&stages[3].region, &q(-100, 1), &q(100, 1), 201);
    Ok((cov.covered() && cov.samples == 201 * 201, format!("{} samples, {} outside", cov.samples, cov.outside)))
}

pub fn c3() -> Result<(bool, String)> {
    let b = prop56_boundary_check();
    Ok((b.holds(), format!("tau(1/2) = {}, shared = {}", b.tau_at_half, b.shared)))
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    r
}

/// (a/n) for odd n as a product of Euler criteria over the prime factors of n.
pub fn euler_oracle(a: u64, n: u64) -> i8 {
    let mut out = 1i8;
    for (p, e) in trial_factor(n) {
        let v = pow_mod(a, (p - 1) / 2, p);
        let sym = if v == 0 {
            0
        } else if v == 1 {
            1
        } else {
            -1
        };
        out *= if e % 2 == 0 && sym != 0 { 1 } else { sym };
    }
    out
}

fn squarefree_kernel(n: u64) -> u64 {
    trial_factor(n).iter().filter(|&&(_, e)| e % 2 == 1).map(|&(p, _)| p).product()
}

pub fn c4() -> Result<(bool, String)> {
    let ctx = context()?;
    let (mut pairs, mut bad_oracle, mut bad_recip) = (0, 0, 0);
    for d in (1..=500u64).step_by(2) {
        for n in (1..=500u64).step_by(2) {
            if gcd(d, n) != 1 {
                continue;
            }
            pairs += 1;
            let chi = ctx.chi(d, n)?;
            if chi != euler_oracle(squarefree_kernel(d), n) || chi != kronecker(squarefree_kernel(d) as i64, n) {
                bad_oracle += 1;
            }
            if chi * ctx.chi(n, d)? != ctx.eta(class_of_int(d), class_of_int(n)) {
                bad_recip += 1;
            }
        }
    }
    Ok((bad_oracle == 0 && bad_recip == 0, format!("{pairs} pairs, {bad_oracle} oracle mismatches, {bad_recip} reciprocity mismatches")))
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn c5(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rs = [1u64, 3, 15, 21, 105, 1155];
    let mut ok = 0;
    for i in 0..100 {
        let mut f = BTreeMap::new();
        for _ in 0..rng.gen_range(1..60) {
            let d = 2 * rng.gen_range(0..5000u64) + 1;
            f.insert(d, BigRational::new(BigInt::from(rng.gen_range(-99i64..100)), BigInt::from(rng.gen_range(1i64..50))));
        }
        ok += sieve_identity_check(&f, rs[i % rs.len()])?.holds() as usize;
    }
    // DDS instances: corrected D-terms, exactly as the dyadic rationals they are.
    let sys = experiments::sym2_system(cfg, 5000)?;
    let ctx = context()?;
    let eng = CorrectedEngine::new(&sys, &ctx, 500, 5000)?;
    let mut dds_ok = 0;
    let mut dds_total = 0;
    for (alpha, beta, x) in [(ClassChar::TRIVIAL, ClassChar::TRIVIAL, 500u64), (ClassChar::all()[1], ClassChar::all()[2], 137)] {
        let terms = eng.d_terms(c(2.5), c(2.5), alpha, beta, x)?;
        for part in 0..2 {
            let f: BTreeMap<u64, BigRational> =
                terms.iter().map(|t| (t.0, exact(if part == 0 { t.2.re } else { t.2.im }))).collect();
            for r in [1u64, 3, 15, 105] {
                dds_total += 1;
                dds_ok += sieve_identity_check(&f, r)?.holds() as usize;
            }
        }
    }
    Ok((ok == 100 && dds_ok == dds_total, format!("random {ok}/100, DDS {dds_ok}/{dds_total}")))
}

pub fn c6(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let sys = experiments::sym2_system(cfg, 100_000)?;
    let ctx = context()?;
    let (s, w) = (c(2.5), c(2.5));
    let d = z_pure(s, w, &sys, &ctx, &TruncationSpec::square(10_000, EvalOrder::DFirst))?;
    let n = z_pure(s, w, &sys, &ctx, &TruncationSpec::square(10_000, EvalOrder::NFirst))?;
    let pure = (d.value - n.value).norm();
    let eng = CorrectedEngine::new(&sys, &ctx, 2000, 100_000)?;
    let chk = eng.basic_identity_check(s, w, ClassChar::TRIVIAL, ClassChar::TRIVIAL, &TruncationSpec::square(2000, EvalOrder::DFirst))?;
    Ok((pure < 1e-6 && chk.residual < 1e-5, format!("pure residual {pure:.2e}, corrected residual {:.2e}", chk.residual)))
}

pub fn c7(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let sys = experiments::sym2_system(cfg, 3000)?;
    let mut worst: f64 = 0.0;
    let mut fe_ok = true;
    for (i, p) in [3u64, 5, 7, 11, 13, 101, 691].into_iter().enumerate() {
        let lc = solve_correction_for(&sys, p, 6)?;
        let rep = correction_fe_check(&lc, 10, 100 + i as u64);
        fe_ok &= rep.holds(1e-10) && lc.h(0, 0) == c(1.0);
        worst = worst.max(rep.a_residual).max(rep.b_residual);
    }
    let mut gate = 0;
    let mut gate_ok = true;
    for &p in sys.primes().iter().filter(|&&p| p >= 101).step_by(41) {
        for g in growth_gate(&solve_correction_for(&sys, p, 3)?, 0.01) {
            gate += 1;
            gate_ok &= g.holds();
        }
    }
    Ok((fe_ok && gate_ok && gate > 0, format!("worst FE residual {worst:.2e}, growth samples {gate} ok = {gate_ok}")))
}

pub fn c8() -> Result<(bool, String)> {
    let sys = twistlab::lseries::sym2_delta(200)?;
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for &r in sys.primes().iter().filter(|&&p| p > 2 && p <= 100) {
        for s in [0.6, 0.75, 1.0] {
            worst = worst.max(local_pair(&sys, r, c(s), 60)?.rel_error());
            n += 1;
        }
    }
    Ok((worst <= 1e-10, format!("{n} cases, worst relative error {worst:.2e}")))
}

pub fn c9() -> Result<(bool, String)> {
    let setup = DedekindSetup::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for (rho, r, n) in [
        (ClassChar::TRIVIAL, 1u64, 1u64),
        (ClassChar::TRIVIAL, 3, 3),
        (ClassChar::TRIVIAL, 5, 75),
        (ClassChar::TRIVIAL, 3, 15),
        (ClassChar::all()[1], 1, 1),
        (ClassChar::all()[2], 7, 7),
        (ClassChar::all()[3], 11, 1),
    ] {
        let d = dedekind_residue_factor_check(rho, r, n, &setup)?;
        ok &= d.holds() && d.primes_checked == 168;
        parts.push(if d.trivial {
            format!("r={r} N={n} limit {:.5} vs {:.5}", d.limit, d.target)
        } else {
            format!("r={r} N={n} rho={:?} |v|={:.1e}", rho.signs, d.samples[1].1.abs())
        });
    }
    Ok((ok, parts.join("; ")))
}

pub const FUNDAMENTAL_UP_TO_50: [u64; 15] = [1, 5, 8, 12, 13, 17, 21, 24, 28, 29, 33, 37, 40, 41, 44];

pub fn c10() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for &d in &FUNDAMENTAL_UP_TO_50 {
        let params = CompletedLParams::dirichlet(d, false);
        let chi = move |n: u64| c(kronecker(d as i64, n) as f64);
        for w in [0.4, 0.6] {
            let a = AfeEngine::new(params.clone(), c(w))?.lambda(&chi, &chi, 1.0)?.value;
            let b = AfeEngine::new(params.clone(), c(1.0 - w))?.lambda(&chi, &chi, 1.3)?.value;
            worst = worst.max((a - params.root_number * b).norm());
        }
    }
    Ok((worst < 1e-6, format!("{} discriminants, worst |Λ(w) − εΛ(1−w)| = {worst:.2e}", FUNDAMENTAL_UP_TO_50.len())))
}

pub fn c11(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let scan = monotonicity_scan(101, c(0.5), -2.0, 2.0, 0.01)?;
    let sys = experiments::sym2_system(cfg, 400)?;
    let b = experiments::perturbed(&sys, 101, 0.1)?;
    let mut cfg = cfg.clone();
    cfg.r_range = (3, 300);
    let t = experiments::exp_determination(&cfg, &sys, &b)?;
    let same = experiments::exp_determination(&cfg, &sys, &sys)?;
    let r = t.column("r").unwrap_or_default();
    let det = t.column("detected").unwrap_or_default();
    let detected: Vec<u64> = r.iter().zip(&det).filter(|(_, &d)| d == 1.0).map(|(&r, _)| r as u64).collect();
    let flags = t.column("flag").unwrap_or_default().iter().sum::<f64>();
    let self_flags = same.column("flag").unwrap_or_default().iter().sum::<f64>();
    let self_det = same.column("detected").unwrap_or_default().iter().sum::<f64>();
    let ok = scan.strictly_monotone() && detected == vec![101] && flags == 0.0 && self_flags == 0.0 && self_det == 0.0;
    Ok((ok, format!("monotone = {}, min step {:.2e}; detected at {detected:?}; flags {flags}, self-flags {self_flags}", scan.strictly_monotone(), scan.min_gap)))
}

pub fn c12(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let mut cfg = cfg.clone();
    cfg.x_ladder = vec![1000, 3000, 10000];
    let scan = experiments::central_scan(&cfg, 1000)?;
    let nonzero = experiments::nonzero_count(&scan, 1e-6);
    let t = experiments::exp_nonvanishing(&cfg)?;
    let ratios = t.column("I_over_x").unwrap_or_default();
    let finite = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let stable = finite && hi <= 1.2 * lo;
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
    let skipped: Vec<String> = t.meta.iter().filter(|(k, _)| k.starts_with("skipped_x_")).map(|(k, v)| format!("{k}: {v}")).collect();
    Ok((
        stable && nonzero > 0,
        format!("I(x)/x = [{}]; nonzero L^S(1/2) for {nonzero} of {} D ≤ 1000; {}", shown.join(", "), scan.rows.len(), skipped.join("; ")),
    ))
}

pub fn c13(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let mut cfg = cfg.clone();
    cfg.y_ladder = vec![500, 1000, 2000, 4000];
    let t = experiments::exp_meansquare(&cfg)?;
    let sums = t.column("sum").unwrap_or_default();
    let ys = t.column("Y").unwrap_or_default();
    let pts: Vec<(f64, f64)> = ys.iter().copied().zip(sums.iter().copied()).collect();
    let slope = experiments::loglog_slope(&pts);
    let increasing = sums.windows(2).all(|w| w[1] >= w[0]);
    Ok((slope <= 1.7 && increasing, format!("fitted slope {slope:.4}, sums {sums:?}")))
}

pub fn c14(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let sys = experiments::sym2_system(cfg, 10_000)?;
    let pr = hypothesis_probe(&sys, c(0.75), &[100, 1000, 3000, 10_000])?;
    let digits = pr.stable_digits();
    let last = pr.rows.last().map(|r| r.value.re).unwrap_or(f64::NAN);
    Ok((digits >= 3.0, format!("product {last:.9} at X = 1e4, {digits:.1} stable digits")))
}
