//! Desk-scale experiments over Q with sym²Δ.

use crate::config::ExperimentConfig;
use crate::table::{provenance, ResultTable};
use num_complex::Complex64;
use twistlab::error::{Error, Result};
use twistlab::lseries::cache::load_or_build_sym2_delta;
use twistlab::lseries::family::{TwistFamily, VTable};
use twistlab::lseries::{sym2_delta_shifts, CoefficientSystem};
use twistlab::quadchar::{build_context, SymbolContext};
use twistlab::residues::{determination_rows, residue_report, synthetic_satake};
use twistlab::ringarith::{BaseField, Sieve};

pub fn context() -> Result<SymbolContext> {
    build_context(&BaseField::rational())
}

pub fn sym2_system(cfg: &ExperimentConfig, prime_bound: u64) -> Result<CoefficientSystem> {
    load_or_build_sym2_delta(prime_bound.max(100), cfg.cache_dir())
}

/// Odd squarefree D in [1, x].
pub fn odd_squarefree(x: u64) -> Vec<u64> {
    if x == 0 {
        return Vec::new();
    }
    let sieve = Sieve::new(x.max(2));
    (1..=x).step_by(2).filter(|&d| sieve.moebius(d) != 0).collect()
}

/// Largest D0 for which the family fits in `max_coefficients`.
pub fn family_limit(cfg: &ExperimentConfig) -> Result<u64> {
    let ymax = VTable::new(&sym2_delta_shifts(), cfg.v_tol)?.ymax;
    let (mut lo, mut hi) = (1u64, 1u64 << 32);
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if TwistFamily::required_length(ymax, mid) <= cfg.max_coefficients {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(lo)
}

pub fn build_family(cfg: &ExperimentConfig, max_d0: u64) -> Result<(CoefficientSystem, TwistFamily)> {
    let bound = TwistFamily::required_prime_bound(&sym2_delta_shifts(), max_d0, cfg.v_tol)?;
    if bound > cfg.max_coefficients {
        return Err(Error::Config(format!(
            "central values up to D = {max_d0} need {bound} coefficients; max_coefficients = {}",
            cfg.max_coefficients
        )));
    }
    let sys = sym2_system(cfg, bound.max(4000))?;
    let fam = TwistFamily::new(&sys, max_d0, cfg.v_tol)?;
    Ok((sys, fam))
}

fn base_table(name: &str, cols: &[&str], cfg: &ExperimentConfig) -> ResultTable {
    let mut t = ResultTable::new(name, cols);
    t.meta("provenance", provenance(&cfg.to_text()));
    t.meta("config", cfg.to_text());
    t.meta("system", "sym2_delta over Q, S = {2}");
    t
}

/// L(1/2, π⊗χ_D) and L^S(1/2, π⊗χ_D) for odd squarefree D ≤ d_max.
pub fn central_scan(cfg: &ExperimentConfig, d_max: u64) -> Result<ResultTable> {
    let (_, fam) = build_family(cfg, d_max)?;
    let mut t = base_table("central_values", &["D", "L_half", "LS_half"], cfg);
    let mut skipped = 0;
    for d in odd_squarefree(d_max) {
        match (fam.primitive_central(d), fam.partial_central(d)) {
            (Ok(l), Ok(ls)) => t.push(vec![d as f64, l, ls])?,
            _ => skipped += 1,
        }
    }
    t.meta("skipped", skipped);
    Ok(t)
}

pub fn nonzero_count(table: &ResultTable, threshold: f64) -> usize {
    table.column("LS_half").map(|c| c.iter().filter(|v| v.abs() > threshold).count()).unwrap_or(0)
}

/// Σ_E 2R₁(1/2, π, E)/L_S(1/2, π⊗χ_E) with T and sym² truncated at `x_t`.
pub fn predicted_slope(sys: &CoefficientSystem, ctx: &SymbolContext, x_t: u64) -> Result<f64> {
    let mut total = Complex64::new(0.0, 0.0);
    for e in ctx.classes() {
        let rep = residue_report(sys, ctx, e, Complex64::new(0.5, 0.0), x_t, &[])?;
        total += 2.0 * rep.r1 / rep.l_s;
    }
    Ok(total.re)
}

/// I(x) = Σ_{D odd squarefree} L^S(1/2, π⊗χ_D) e^{−D/x}, cut where the weight drops
/// below `weight_tol`. Cutoffs whose AFE length exceeds the budget are reported
/// as NaN rows.
pub fn exp_nonvanishing(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let ctx = context()?;
    let cut = |x: u64| ((x as f64) * (1.0 / cfg.weight_tol).ln()).floor() as u64;
    let limit = family_limit(cfg)?;
    let feasible: Vec<u64> = cfg.x_ladder.iter().copied().filter(|&x| cut(x).max(1) <= limit).collect();
    let d_top = feasible.iter().map(|&x| cut(x).max(1)).max().unwrap_or(1).min(limit);
    let (sys, fam) = build_family(cfg, d_top)?;
    let x_t = 1000.min(sys.prime_bound() / 2);
    let slope = predicted_slope(&sys, &ctx, x_t)?;
    let mut t = base_table("nonvanishing", &["x", "D_max", "terms", "skipped", "I", "I_over_x", "predicted_slope"], cfg);
    t.meta("predicted_slope", format!("2R1(1/2)/L_S summed over classes, T and sym2 truncated at X = {x_t}; sym2_delta is a lift, so R1 has a pole at 1/2 and the truncation grows like log X"));
    t.meta("family_limit_D", limit);
    let central: Vec<(u64, Option<f64>)> = odd_squarefree(d_top).into_iter().map(|d| (d, fam.partial_central(d).ok())).collect();
    for &x in &cfg.x_ladder {
        let dmax = cut(x).max(1);
        if dmax > limit {
            t.meta(&format!("skipped_x_{x}"), format!("needs D up to {dmax}, budget allows {limit}"));
            t.push(vec![x as f64, dmax as f64, 0.0, f64::NAN, f64::NAN, f64::NAN, slope])?;
            continue;
        }
        let mut acc = twistlab::summation::Neumaier::default();
        let (mut terms, mut skipped) = (0u64, 0u64);
        for &(d, v) in central.iter().take_while(|c| c.0 <= dmax) {
            match v {
                Some(l) => {
                    acc.add(l * (-(d as f64) / x as f64).exp());
                    terms += 1;
                }
                None => skipped += 1,
            }
        }
        let i = acc.value();
        t.push(vec![x as f64, dmax as f64, terms as f64, skipped as f64, i, i / x as f64, slope])?;
    }
    Ok(t)
}

/// Least-squares slope of log S against log Y.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln() / n, b + y.ln() / n));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in points {
        sxy += (x.ln() - mx) * (y.ln() - my);
        sxx += (x.ln() - mx) * (x.ln() - mx);
    }
    sxy / sxx
}

/// Σ_{D ≤ Y} |L(1/2, π⊗χ_D)|² over odd squarefree D.
pub fn exp_meansquare(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let y_top = *cfg.y_ladder.last().expect("validated ladder");
    let (_, fam) = build_family(cfg, y_top)?;
    let mut t = base_table("meansquare", &["Y", "count", "skipped", "sum", "incremental_slope"], cfg);
    let mut acc = twistlab::summation::Neumaier::default();
    let (mut count, mut skipped) = (0u64, 0u64);
    let ds = odd_squarefree(y_top);
    let mut it = ds.iter().peekable();
    let mut prev: Option<(f64, f64)> = None;
    let mut pts = Vec::new();
    for &y in &cfg.y_ladder {
        while let Some(&&d) = it.peek() {
            if d > y {
                break;
            }
            match fam.primitive_central(d) {
                Ok(l) => {
                    acc.add(l * l);
                    count += 1;
                }
                Err(_) => skipped += 1,
            }
            it.next();
        }
        let s = acc.value();
        let inc = prev.map(|(py, ps)| (s / ps).ln() / (y as f64 / py).ln()).unwrap_or(f64::NAN);
        t.push(vec![y as f64, count as f64, skipped as f64, s, inc])?;
        prev = Some((y as f64, s));
        pts.push((y as f64, s));
    }
    let fit = if pts.len() >= 2 { loglog_slope(&pts) } else { f64::NAN };
    t.meta("fitted_slope", crate::table::fmt_num(fit));
    Ok(t)
}

/// sysA = sym²Δ; sysB equals sysA except a(r0) → a(r0) + delta.
pub fn perturbed(sys: &CoefficientSystem, r0: u64, delta: f64) -> Result<CoefficientSystem> {
    let mut b = sys.clone();
    let a0: Complex64 = sys.satake(r0)?.iter().sum();
    b.set_satake(r0, synthetic_satake(a0.re + delta))?;
    b.label = format!("{}+{delta}@{r0}", sys.label);
    Ok(b)
}

pub fn exp_determination(cfg: &ExperimentConfig, sys_a: &CoefficientSystem, sys_b: &CoefficientSystem) -> Result<ResultTable> {
    let ctx = context()?;
    let (lo, hi) = cfg.r_range;
    let primes: Vec<u64> = sys_a.primes().iter().copied().filter(|&p| p > 2 && p >= lo && p <= hi).collect();
    let rows = determination_rows(sys_a, sys_b, &ctx, ctx.classes()[0], &primes, Complex64::new(0.5, 0.0))?;
    let mut t = base_table(
        "determination",
        &["r", "RrA_re", "RrA_im", "RrB_re", "RrB_im", "aA_re", "aA_im", "aB_re", "aB_im", "detected", "flag"],
        cfg,
    );
    t.meta("systems", format!("{} vs {}", sys_a.label, sys_b.label));
    let mut flags = 0;
    for r in rows {
        flags += r.flagged() as usize;
        t.push(vec![
            r.r as f64,
            r.rr_a.re,
            r.rr_a.im,
            r.rr_b.re,
            r.rr_b.im,
            r.a_a.re,
            r.a_a.im,
            r.a_b.re,
            r.a_b.im,
            r.detected() as u8 as f64,
            r.flagged() as u8 as f64,
        ])?;
    }
    t.meta("flags", flags);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [500.0, 1000.0, 2000.0].iter().map(|&y: &f64| (y, 3.0 * y.powf(1.25))).collect();
        assert!((loglog_slope(&pts) - 1.25).abs() < 1e-12);
    }

    #[test]
    fn squarefree_list() {
        assert_eq!(odd_squarefree(30), vec![1, 3, 5, 7, 11, 13, 15, 17, 19, 21, 23, 29]);
    }
}
