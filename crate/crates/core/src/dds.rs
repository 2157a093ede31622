//! Double Dirichlet series over Q with S = {∞, 2}: the pure series Z̃ in both
//! summation orders, its squarefree part Z⋆, the corrected series Z with its
//! local correction polynomials, the restricted series Z_r and Z_(l), and the
//! finite identities relating them.

use crate::error::{Error, Result};
use crate::lseries::afe::AfeEngine;
use crate::lseries::{CoefficientSystem, CompletedLParams, KroneckerChar, Satake};
use crate::quadchar::{class_of_int, ClassChar, RayClass, SymbolContext};
use crate::ringarith::{gcd, jacobi, Sieve};
use crate::summation::CNeumaier;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::ops::{Add, Sub};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// n^{−s}
fn npow(n: u64, s: Complex64) -> Complex64 {
    (-s * (n as f64).ln()).exp()
}

fn poly_eval(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::zero(), |acc, &a| acc * x + a)
}

fn conv(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::zero(); len];
    for (i, &x) in a.iter().enumerate().take(len) {
        for (j, &y) in b.iter().enumerate() {
            if i + j >= len {
                break;
            }
            out[i + j] += x * y;
        }
    }
    out
}

fn check_ctx(ctx: &SymbolContext) -> Result<()> {
    if ctx.modulus != 8 || ctx.h_c != 4 {
        return Err(Error::Unsupported(format!("double Dirichlet series implemented over Q only (context {})", ctx.field)));
    }
    Ok(())
}

fn check_point(s: Complex64, w: Complex64) -> Result<()> {
    if !(s.re.is_finite() && s.im.is_finite() && w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::Domain("evaluation point must be finite".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalOrder {
    DFirst,
    NFirst,
}

impl EvalOrder {
    pub fn tag(&self) -> &'static str {
        match self {
            EvalOrder::DFirst => "D-first",
            EvalOrder::NFirst => "N-first",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "D-first" | "d-first" | "D" | "d" => Ok(EvalOrder::DFirst),
            "N-first" | "n-first" | "N" | "n" => Ok(EvalOrder::NFirst),
            _ => Err(Error::Config(format!("unknown evaluation order {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationSpec {
    pub x_d: u64,
    pub x_n: u64,
    pub tolerance: f64,
    pub order: EvalOrder,
}

impl TruncationSpec {
    pub fn new(x_d: u64, x_n: u64, tolerance: f64, order: EvalOrder) -> Result<Self> {
        if x_d < 1 || x_n < 1 {
            return Err(Error::Config("cutoffs must be ≥ 1".into()));
        }
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        Ok(TruncationSpec { x_d, x_n, tolerance, order })
    }

    pub fn square(x: u64, order: EvalOrder) -> Self {
        TruncationSpec { x_d: x.max(1), x_n: x.max(1), tolerance: 1e-6, order }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DDSValue {
    pub value: Complex64,
    pub last_term: f64,
    pub tail: f64,
    pub terms: u64,
    pub flagged: bool,
}

impl DDSValue {
    pub const CSV_HEADER: &'static str = "s_re,s_im,w_re,w_im,order,X_D,X_N,value_re,value_im,tail";

    pub fn csv_row(&self, s: Complex64, w: Complex64, trunc: &TruncationSpec) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.17e},{:.17e},{:.3e}",
            s.re,
            s.im,
            w.re,
            w.im,
            trunc.order.tag(),
            trunc.x_d,
            trunc.x_n,
            self.value.re,
            self.value.im,
            self.tail
        )
    }
}

/// ζ(σ) ≤ σ/(σ−1) for σ > 1.
fn zeta_bound(sigma: f64) -> f64 {
    sigma / (sigma - 1.0)
}

/// Σ_{n > x} d₃(n) n^{−σ} ≤ ∫_x^∞ (ln t)²/2 t^{−σ} dt.
fn d3_tail(x: f64, sigma: f64) -> f64 {
    let k = sigma - 1.0;
    let l = x.ln();
    x.powf(-k) / (2.0 * k) * (l * l + 2.0 * l / k + 2.0 / (k * k))
}

/// Tail bound for the pure series under the divisor bound |a(N)| ≤ d₃(N).
pub fn pure_tail(s: Complex64, w: Complex64, x_d: u64, x_n: u64) -> f64 {
    let (sigma, tau) = (s.re, w.re);
    if sigma <= 1.0 || tau <= 1.0 {
        return f64::INFINITY;
    }
    let d_tail = (x_d as f64).powf(1.0 - tau) / (tau - 1.0) * zeta_bound(sigma).powi(3);
    let n_tail = d3_tail(x_n as f64, sigma) * zeta_bound(tau);
    d_tail + n_tail
}

/// a(N)·N^{−s} for odd N ≤ x_n, zero elsewhere.
pub fn weighted_odd_coeffs(sys: &CoefficientSystem, x_n: u64, s: Complex64) -> Result<Vec<Complex64>> {
    let a = sys.coefficient_table(x_n)?;
    Ok(a.iter().enumerate().map(|(n, &z)| if n % 2 == 1 { z * npow(n as u64, s) } else { Complex64::zero() }).collect())
}

/// Z̃(s, w) = Σ_D L^S(s, π⊗χ_{D0})|D|^{−w} with both sums truncated.
pub fn z_pure(s: Complex64, w: Complex64, sys: &CoefficientSystem, ctx: &SymbolContext, trunc: &TruncationSpec) -> Result<DDSValue> {
    check_ctx(ctx)?;
    check_point(s, w)?;
    let an = weighted_odd_coeffs(sys, trunc.x_n, s)?;
    Ok(z_pure_from_coeffs(&an, s, w, ctx, trunc))
}

/// Z̃ from precomputed weights a(N)N^{−s} (index N, odd entries used).
pub fn z_pure_from_coeffs(an: &[Complex64], s: Complex64, w: Complex64, ctx: &SymbolContext, trunc: &TruncationSpec) -> DDSValue {
    let (value, last_term, terms) = match trunc.order {
        EvalOrder::DFirst => pure_d_first(an, w, trunc.x_d),
        EvalOrder::NFirst => pure_n_first(an, w, ctx, trunc.x_d),
    };
    let tail = pure_tail(s, w, trunc.x_d, trunc.x_n);
    DDSValue { value, last_term, tail, terms, flagged: !(tail <= trunc.tolerance) }
}

fn pure_d_first(an: &[Complex64], w: Complex64, x_d: u64) -> (Complex64, f64, u64) {
    let sieve = Sieve::new(x_d);
    let mut memo: Vec<Option<Complex64>> = vec![None; x_d as usize + 1];
    let mut total = CNeumaier::new();
    let mut last = 0.0;
    let mut terms = 0;
    for d in (1..=x_d).step_by(2) {
        let (d0, _) = sieve.squarefree_split(d);
        let inner = *memo[d0 as usize].get_or_insert_with(|| {
            let mut acc = CNeumaier::new();
            for n in (1..an.len()).step_by(2) {
                let ch = jacobi(d0 as i64, n as u64);
                if ch != 0 {
                    acc.add(an[n] * ch as f64);
                }
            }
            acc.value()
        });
        let term = npow(d, w) * inner;
        total.add(term);
        last = term.norm();
        terms += an.len() as u64 / 2;
    }
    (total.value(), last, terms)
}

/// Reciprocity order: χ_{D0}(N) = η(D0, N)·(N/D0), with D = D0·D1² and the
/// D0-sums kept as per-class prefix sums over increasing thresholds X_D/D1².
fn pure_n_first(an: &[Complex64], w: Complex64, ctx: &SymbolContext, x_d: u64) -> (Complex64, f64, u64) {
    let sieve = Sieve::new(x_d);
    let mut sqf: Vec<(u64, Complex64, usize)> = Vec::new();
    for d0 in (1..=x_d).step_by(2) {
        if sieve.moebius(d0) != 0 {
            sqf.push((d0, npow(d0, w), class_of_int(d0).index()));
        }
    }
    let mut d1s: Vec<(u64, Complex64)> = Vec::new();
    let mut d1 = 1u64;
    while d1 * d1 <= x_d {
        d1s.push((x_d / (d1 * d1), npow(d1, 2.0 * w)));
        d1 += 2;
    }
    d1s.reverse();
    let classes = ctx.classes();
    let mut total = CNeumaier::new();
    let mut last = 0.0;
    let mut terms = 0;
    for n in (1..an.len()).step_by(2) {
        if an[n] == Complex64::zero() {
            continue;
        }
        let cn = class_of_int(n as u64);
        let eta: Vec<f64> = classes.iter().map(|&e| ctx.eta(e, cn) as f64).collect();
        let mut acc = [Complex64::zero(); 4];
        let mut ptr = 0;
        let mut inner = CNeumaier::new();
        for &(y, wd1) in &d1s {
            while ptr < sqf.len() && sqf[ptr].0 <= y {
                let (d0, wt, cls) = sqf[ptr];
                let ch = jacobi(n as i64, d0);
                if ch != 0 {
                    acc[cls] += wt * ch as f64;
                }
                ptr += 1;
            }
            let v: Complex64 = (0..4).map(|e| acc[e] * eta[e]).sum();
            inner.add(wd1 * v);
        }
        terms += ptr as u64;
        let term = an[n] * inner.value();
        total.add(term);
        last = term.norm();
    }
    (total.value(), last, terms)
}

/// Z⋆(s, w; α, β) = Σ_{D squarefree} β(D)|D|^{−w} Σ_N α(N)χ_D(N)a(N)|N|^{−s},
/// optionally restricted to one class of H_C.
pub fn z_star(
    s: Complex64,
    w: Complex64,
    sys: &CoefficientSystem,
    ctx: &SymbolContext,
    alpha: ClassChar,
    beta: ClassChar,
    class: Option<RayClass>,
    trunc: &TruncationSpec,
) -> Result<DDSValue> {
    check_ctx(ctx)?;
    check_point(s, w)?;
    let an = weighted_odd_coeffs(sys, trunc.x_n, s)?;
    let sieve = Sieve::new(trunc.x_d);
    let twisted: Vec<Complex64> =
        an.iter().enumerate().map(|(n, &z)| if n % 2 == 1 { z * alpha.at_int(n as u64) as f64 } else { z }).collect();
    let mut total = CNeumaier::new();
    let mut last = 0.0;
    let mut terms = 0;
    for d in (1..=trunc.x_d).step_by(2) {
        if sieve.moebius(d) == 0 || class.is_some_and(|e| class_of_int(d) != e) {
            continue;
        }
        let mut inner = CNeumaier::new();
        for n in (1..twisted.len()).step_by(2) {
            let ch = jacobi(d as i64, n as u64);
            if ch != 0 {
                inner.add(twisted[n] * ch as f64);
            }
        }
        let term = npow(d, w) * beta.at_int(d) as f64 * inner.value();
        total.add(term);
        last = term.norm();
        terms += 1;
    }
    let tail = pure_tail(s, w, trunc.x_d, trunc.x_n);
    Ok(DDSValue { value: total.value(), last_term: last, tail, terms, flagged: !(tail <= trunc.tolerance) })
}

/// Coefficients c[i][j] of |P|^{−is}|P|^{−jw}.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionPolynomial {
    pub p: u64,
    pub c: Vec<Vec<Complex64>>,
}

impl CorrectionPolynomial {
    pub fn eval(&self, s: Complex64, w: Complex64) -> Complex64 {
        let x = npow(self.p, s);
        let y = npow(self.p, w);
        let rows: Vec<Complex64> = self.c.iter().map(|row| poly_eval(row, y)).collect();
        poly_eval(&rows, x)
    }

    pub fn constant(&self) -> Complex64 {
        self.c.first().and_then(|r| r.first()).copied().unwrap_or_default()
    }
}

/// Local data at an odd prime P: A_k(x) (x = |P|^{−s}) for D with ord_P D = k,
/// the same for the contragredient, and B_l(y) (y = |P|^{−w}) for M with
/// ord_P M = l.
#[derive(Clone, Debug)]
pub struct LocalCorrection {
    pub p: u64,
    pub kmax: usize,
    pub satake: Satake,
    a: Vec<Vec<Complex64>>,
    a_dual: Vec<Vec<Complex64>>,
    b: Vec<Vec<Complex64>>,
    h: Vec<Vec<Complex64>>,
    pub consistency: f64,
}

fn local_series(g: &Satake, len: usize) -> Vec<Complex64> {
    let mut a = vec![Complex64::zero(); len + 1];
    a[0] = Complex64::one();
    for &gg in g {
        for l in 1..=len {
            let prev = a[l - 1];
            a[l] += gg * prev;
        }
    }
    a
}

fn local_inverse(g: &Satake) -> Vec<Complex64> {
    let mut out = vec![Complex64::one()];
    for &gg in g {
        let mut next = vec![Complex64::zero(); out.len() + 1];
        for (i, &x) in out.iter().enumerate() {
            next[i] += x;
            next[i + 1] -= gg * x;
        }
        out = next;
    }
    out
}

const CONSISTENCY_TOL: f64 = 1e-8;

/// Correction data at P up to ord_P = `kmax`, solved degree by degree from the
/// local interchange identity and the two functional equations.
pub fn solve_correction_local(p: u64, satake: &Satake, kmax: usize) -> Result<LocalCorrection> {
    if p < 3 || p % 2 == 0 {
        return Err(Error::Domain(format!("P = {p} must be an odd prime")));
    }
    let kk = kmax.max(2);
    let gs = [*satake, [satake[0].conj(), satake[1].conj(), satake[2].conj()]];
    let lm = 3 * kk + 3;
    let pf = p as f64;
    let mut h: Vec<Vec<Vec<Complex64>>> = vec![vec![vec![Complex64::zero(); lm + 1]; kk + 1]; 2];
    let mut a: Vec<Vec<Vec<Complex64>>> = vec![vec![Vec::new(); kk + 1]; 2];
    for side in 0..2 {
        h[side][0] = local_series(&gs[side], lm);
        h[side][1][0] = Complex64::one();
        a[side][0] = vec![Complex64::one()];
        a[side][1] = vec![Complex64::one()];
    }
    let dcol = |h: &Vec<Vec<Complex64>>, l: usize, j: usize| -> Complex64 {
        if l % 2 == 0 {
            h[j][l] - if j >= 1 { h[j - 1][l] } else { Complex64::zero() }
        } else {
            h[j][l]
        }
    };
    let mut worst: f64 = 0.0;
    for k in 2..=kk {
        let m = k / 2;
        let mut cs: Vec<Vec<Complex64>> = Vec::with_capacity(2);
        for side in 0..2 {
            for l in 0..(2 * k).min(lm + 1) {
                let n = l / 2;
                let dk = if k > 2 * n { Complex64::zero() } else { pf.powi((k - n) as i32) * dcol(&h[side], l, 2 * n - k) };
                let prev = if l % 2 == 0 { h[side][k - 1][l] } else { Complex64::zero() };
                h[side][k][l] = prev + dk;
            }
            let row = &h[side][k][..3 * m + 1];
            let cvec = if k % 2 == 0 { conv(row, &local_inverse(&gs[side]), 3 * m + 1) } else { row.to_vec() };
            cs.push(cvec);
        }
        for side in 0..2 {
            let mut full = vec![Complex64::zero(); 6 * m + 1];
            full[..3 * m + 1].copy_from_slice(&cs[side]);
            for i in 0..3 * m {
                full[6 * m - i] = pf.powi((3 * m - i) as i32) * cs[1 - side][i];
            }
            worst = worst.max((cs[side][3 * m] - cs[1 - side][3 * m]).norm() / cs[side][3 * m].norm().max(1.0));
            a[side][k] = full;
        }
        for side in 0..2 {
            let new = if k % 2 == 0 {
                conv(&a[side][k], &local_series(&gs[side], lm), lm + 1)
            } else {
                let mut v = vec![Complex64::zero(); lm + 1];
                v[..6 * m + 1].copy_from_slice(&a[side][k]);
                v
            };
            for l in 0..(2 * k).min(lm + 1) {
                worst = worst.max((new[l] - h[side][k][l]).norm() / new[l].norm().max(1.0));
            }
            h[side][k] = new;
        }
    }
    if !(worst < CONSISTENCY_TOL) {
        return Err(Error::Numeric(format!(
            "correction system at P = {p} is inconsistent (residual {worst:.3e}); Satake input violates the local constraints"
        )));
    }
    let b: Vec<Vec<Complex64>> = (0..=kk).map(|l| (0..=2 * (l / 2)).map(|j| dcol(&h[0], l, j)).collect()).collect();
    let h0 = h.swap_remove(0);
    let mut a_iter = a.into_iter();
    let a0 = a_iter.next().unwrap();
    let a1 = a_iter.next().unwrap();
    Ok(LocalCorrection { p, kmax: kk, satake: *satake, a: a0, a_dual: a1, b, h: h0, consistency: worst })
}

/// Correction data for an unramified prime of a coefficient system.
pub fn solve_correction_for(sys: &CoefficientSystem, p: u64, kmax: usize) -> Result<LocalCorrection> {
    solve_correction_local(p, &sys.satake(p)?, kmax)
}

impl LocalCorrection {
    /// Coefficients of A_k in x = |P|^{−s}.
    pub fn a_k(&self, k: usize) -> &[Complex64] {
        &self.a[k]
    }

    pub fn a_dual_k(&self, k: usize) -> &[Complex64] {
        &self.a_dual[k]
    }

    /// Coefficients of B_l in y = |P|^{−w}.
    pub fn b_l(&self, l: usize) -> &[Complex64] {
        &self.b[l]
    }

    /// Coefficient of x^l y^k in the local generating function H(x, y).
    pub fn h(&self, k: usize, l: usize) -> Complex64 {
        self.h[k][l]
    }

    pub fn a_value(&self, k: usize, x: Complex64) -> Complex64 {
        poly_eval(&self.a[k], x)
    }

    pub fn b_value(&self, l: usize, y: Complex64) -> Complex64 {
        poly_eval(&self.b[l], y)
    }

    /// a-side as a two-variable polynomial: c[i][k] = [x^i]A_k.
    pub fn a_polynomial(&self) -> CorrectionPolynomial {
        let width = self.a.iter().map(Vec::len).max().unwrap_or(1);
        let c = (0..width).map(|i| self.a.iter().map(|ak| ak.get(i).copied().unwrap_or_default()).collect()).collect();
        CorrectionPolynomial { p: self.p, c }
    }

    /// b-side as a two-variable polynomial: c[l][j] = [y^j]B_l.
    pub fn b_polynomial(&self) -> CorrectionPolynomial {
        CorrectionPolynomial { p: self.p, c: self.b.clone() }
    }

    /// max_k |A_k^π(s) − P^{3m(1−2s)}A_k^{π̃}(1−s)| / max(1, |A_k^π(s)|).
    pub fn fe_residual_a(&self, s: Complex64) -> f64 {
        let pf = self.p as f64;
        let one = Complex64::one();
        (2..=self.kmax)
            .map(|k| {
                let m = (k / 2) as f64;
                let lhs = self.a_value(k, npow(self.p, s));
                let rhs = c(pf).powc(3.0 * m * (one - 2.0 * s)) * poly_eval(&self.a_dual[k], npow(self.p, one - s));
                (lhs - rhs).norm() / lhs.norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// max_l |B_l(w) − P^{n(1−2w)}B_l(1−w)| / max(1, |B_l(w)|), n = ⌊l/2⌋.
    pub fn fe_residual_b(&self, w: Complex64) -> f64 {
        let pf = self.p as f64;
        let one = Complex64::one();
        (0..=self.kmax)
            .map(|l| {
                let n = (l / 2) as f64;
                let lhs = self.b_value(l, npow(self.p, w));
                let rhs = c(pf).powc(n * (one - 2.0 * w)) * self.b_value(l, npow(self.p, one - w));
                (lhs - rhs).norm() / lhs.norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionFeReport {
    pub p: u64,
    pub a_residual: f64,
    pub b_residual: f64,
    pub a_constant: Complex64,
    pub b_constant: Complex64,
    pub consistency: f64,
}

impl CorrectionFeReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.a_residual < tol && self.b_residual < tol && self.a_constant == Complex64::one() && self.b_constant == Complex64::one()
    }
}

/// Both functional equations at `points` seeded random points with real parts in (−1, 2).
pub fn correction_fe_check(lc: &LocalCorrection, points: usize, seed: u64) -> CorrectionFeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a_res: f64 = 0.0;
    let mut b_res: f64 = 0.0;
    for _ in 0..points {
        let s = Complex64::new(rng.gen_range(-1.0..2.0), rng.gen_range(-10.0..10.0));
        let w = Complex64::new(rng.gen_range(-1.0..2.0), rng.gen_range(-10.0..10.0));
        a_res = a_res.max(lc.fe_residual_a(s));
        b_res = b_res.max(lc.fe_residual_b(w));
    }
    CorrectionFeReport {
        p: lc.p,
        a_residual: a_res,
        b_residual: b_res,
        a_constant: lc.a_polynomial().constant(),
        b_constant: lc.b_polynomial().constant(),
        consistency: lc.consistency,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthSample {
    pub p: u64,
    pub k: usize,
    pub value: f64,
    pub bound: f64,
}

impl GrowthSample {
    pub fn holds(&self) -> bool {
        self.value <= self.bound
    }
}

/// |a(1/2, D)| on D = P² and D = P³ (D1 = P) against |P|^{5/7+ε}.
pub fn growth_gate(lc: &LocalCorrection, eps: f64) -> Vec<GrowthSample> {
    let x = c((lc.p as f64).powf(-0.5));
    let bound = (lc.p as f64).powf(5.0 / 7.0 + eps);
    [2usize, 3]
        .iter()
        .filter(|&&k| k <= lc.kmax)
        .flat_map(|&k| {
            [1.0, -1.0].into_iter().map(move |t| GrowthSample {
                p: lc.p,
                k,
                value: if k % 2 == 0 { lc.a_value(k, x * t).norm() } else { lc.a_value(k, x).norm() },
                bound,
            })
        })
        .collect()
}

/// Per-prime tables of ln L_p(±u) at a fixed argument.
struct EulerTable {
    primes: Vec<u64>,
    u: Vec<Complex64>,
    ln_plus: Vec<Complex64>,
    ln_minus: Vec<Complex64>,
}

impl EulerTable {
    fn gl3(sys: &CoefficientSystem, primes: &[u64], s: Complex64) -> Result<Self> {
        let mut t = EulerTable { primes: primes.to_vec(), u: Vec::new(), ln_plus: Vec::new(), ln_minus: Vec::new() };
        for &p in primes {
            let g = sys.satake(p)?;
            let x = npow(p, s);
            t.u.push(x);
            t.ln_plus.push(-g.iter().map(|&gg| (Complex64::one() - gg * x).ln()).sum::<Complex64>());
            t.ln_minus.push(-g.iter().map(|&gg| (Complex64::one() + gg * x).ln()).sum::<Complex64>());
        }
        Ok(t)
    }

    fn gl1(primes: &[u64], w: Complex64) -> Self {
        let u: Vec<Complex64> = primes.iter().map(|&p| npow(p, w)).collect();
        EulerTable {
            primes: primes.to_vec(),
            ln_plus: u.iter().map(|&y| -(Complex64::one() - y).ln()).collect(),
            ln_minus: u.iter().map(|&y| -(Complex64::one() + y).ln()).collect(),
            u,
        }
    }

    fn u_at(&self, p: u64) -> Complex64 {
        self.u[self.primes.binary_search(&p).expect("prime in table")]
    }

    /// ln L^{S'}(χ) with χ(p) = jacobi(top, p)·ψ(p), skipping primes in `skip`.
    fn ln_l(&self, top: i64, twist: ClassChar, skip: &[u64]) -> Complex64 {
        let mut acc = Complex64::zero();
        for (i, &p) in self.primes.iter().enumerate() {
            let t = jacobi(top, p) * twist.at_int(p);
            if t == 0 || skip.contains(&p) {
                continue;
            }
            acc += if t == 1 { self.ln_plus[i] } else { self.ln_minus[i] };
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityCheck {
    pub d_side: DDSValue,
    pub m_side: DDSValue,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RearrangementCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
    pub terms: usize,
}

/// Corrected series Z(s, w; π, α, β) with per-prime corrections for all odd
/// primes up to `x_max` and Euler products up to `euler_bound`.
pub struct CorrectedEngine<'a> {
    sys: &'a CoefficientSystem,
    pub x_max: u64,
    pub euler_bound: u64,
    euler_primes: Vec<u64>,
    local: BTreeMap<u64, LocalCorrection>,
    sieve: Sieve,
}

impl<'a> CorrectedEngine<'a> {
    pub fn new(sys: &'a CoefficientSystem, ctx: &SymbolContext, x_max: u64, euler_bound: u64) -> Result<Self> {
        check_ctx(ctx)?;
        if x_max < 1 {
            return Err(Error::Config("cutoff must be ≥ 1".into()));
        }
        let euler_primes: Vec<u64> = Sieve::new(euler_bound).primes().iter().copied().filter(|&p| p != 2).collect();
        if euler_primes.last().is_some_and(|&p| p > sys.prime_bound()) {
            return Err(Error::Domain(format!(
                "Euler bound {euler_bound} exceeds the prime bound {} of {}",
                sys.prime_bound(),
                sys.label
            )));
        }
        if euler_bound < x_max {
            return Err(Error::Config("Euler bound must be at least the cutoff".into()));
        }
        let sieve = Sieve::new(x_max.max(3));
        let mut local = BTreeMap::new();
        for &p in sieve.primes_up_to(x_max) {
            if p == 2 {
                continue;
            }
            let mut k = 1;
            let mut q = p;
            while q <= x_max / p {
                q *= p;
                k += 1;
            }
            local.insert(p, solve_correction_for(sys, p, k.max(2))?);
        }
        Ok(CorrectedEngine { sys, x_max, euler_bound, euler_primes, local, sieve })
    }

    pub fn local(&self, p: u64) -> Option<&LocalCorrection> {
        self.local.get(&p)
    }

    fn local_or_err(&self, p: u64, k: usize) -> Result<&LocalCorrection> {
        match self.local.get(&p) {
            Some(lc) if lc.kmax >= k => Ok(lc),
            _ => Err(Error::Domain(format!("no correction data for P^{k} with P = {p}"))),
        }
    }

    fn check_cutoff(&self, x: u64) -> Result<()> {
        if x > self.x_max {
            return Err(Error::Domain(format!("cutoff {x} exceeds the engine range {}", self.x_max)));
        }
        Ok(())
    }

    /// L^{S∪skip}(s, π⊗χ_{D0·l3}α)·a(s, D·l3) for D prime to l3.
    fn d_inner(&self, d: u64, l3: u64, alpha: ClassChar, skip: &[u64], tab: &EulerTable) -> Result<Complex64> {
        let fac = self.sieve.factor(d);
        let d0: u64 = fac.iter().filter(|(_, e)| e % 2 == 1).map(|(p, _)| p).product::<u64>() * l3;
        let mut val = tab.ln_l(d0 as i64, alpha, skip).exp();
        for &(p, e) in &fac {
            let k = e as usize;
            if k < 2 {
                continue;
            }
            let lc = self.local_or_err(p, k)?;
            let x = tab.u_at(p);
            val *= if k % 2 == 0 {
                let t = (jacobi(d0 as i64, p) * alpha.at_int(p)) as f64;
                lc.a_value(k, x * t)
            } else {
                lc.a_value(k, x)
            };
        }
        Ok(val)
    }

    /// L^S(w, χ_{M0*}β)·b(w, M).
    fn m_inner(&self, m: u64, beta: ClassChar, tab: &EulerTable) -> Result<Complex64> {
        let fac = self.sieve.factor(m);
        let m0: u64 = fac.iter().filter(|(_, e)| e % 2 == 1).map(|(p, _)| p).product();
        let mstar = if m0 % 4 == 1 { m0 as i64 } else { -(m0 as i64) };
        let mut val = tab.ln_l(mstar, beta, &[]).exp();
        for &(p, e) in &fac {
            let l = e as usize;
            let lc = self.local_or_err(p, l)?;
            let y = tab.u_at(p);
            val *= if l % 2 == 0 {
                let t = (jacobi(mstar, p) * beta.at_int(p)) as f64;
                lc.b_value(l, y * t)
            } else {
                lc.b_value(l, y)
            };
        }
        Ok(val)
    }

    /// (D, D1, β(D)|D|^{−w}L^S(s, π⊗χ_{D0}α)a(s, D)) for odd D ≤ x_d.
    pub fn d_terms(&self, s: Complex64, w: Complex64, alpha: ClassChar, beta: ClassChar, x_d: u64) -> Result<Vec<(u64, u64, Complex64)>> {
        check_point(s, w)?;
        self.check_cutoff(x_d)?;
        let tab = EulerTable::gl3(self.sys, &self.euler_primes, s)?;
        let mut out = Vec::with_capacity(x_d as usize / 2 + 1);
        for d in (1..=x_d).step_by(2) {
            let inner = self.d_inner(d, 1, alpha, &[], &tab)?;
            out.push((d, self.sieve.squarefree_split(d).1, npow(d, w) * beta.at_int(d) as f64 * inner));
        }
        Ok(out)
    }

    /// (M, α(M)|M|^{−s}L^S(w, χ_{M0*}β)b(w, M)) for odd M ≤ x_m.
    pub fn m_terms(&self, s: Complex64, w: Complex64, alpha: ClassChar, beta: ClassChar, x_m: u64) -> Result<Vec<(u64, Complex64)>> {
        check_point(s, w)?;
        self.check_cutoff(x_m)?;
        let tab = EulerTable::gl1(&self.euler_primes, w);
        let mut out = Vec::with_capacity(x_m as usize / 2 + 1);
        for m in (1..=x_m).step_by(2) {
            let inner = self.m_inner(m, beta, &tab)?;
            out.push((m, npow(m, s) * alpha.at_int(m) as f64 * inner));
        }
        Ok(out)
    }

    fn tail(&self, s: Complex64, w: Complex64, x: u64) -> f64 {
        let (sigma, tau) = (s.re, w.re);
        if sigma <= 1.0 || tau <= 1.0 {
            return f64::INFINITY;
        }
        let b = self.euler_bound as f64;
        let euler = 3.0 * b.powf(1.0 - sigma.min(tau)) / (sigma.min(tau) - 1.0);
        let outer = (x as f64).powf(1.0 - sigma.min(tau)) / (sigma.min(tau) - 1.0);
        (zeta_bound(sigma).powi(3) * zeta_bound(tau)) * (outer + euler)
    }

    fn value_of(&self, terms: impl Iterator<Item = Complex64>, s: Complex64, w: Complex64, x: u64, tol: f64) -> DDSValue {
        let mut acc = CNeumaier::new();
        let mut last = 0.0;
        let mut n = 0;
        for t in terms {
            acc.add(t);
            last = t.norm();
            n += 1;
        }
        let tail = self.tail(s, w, x);
        DDSValue { value: acc.value(), last_term: last, tail, terms: n, flagged: !(tail <= tol) }
    }

    /// Corrected Z summed over D (GL(3) side).
    pub fn corrected_z(&self, s: Complex64, w: Complex64, alpha: ClassChar, beta: ClassChar, trunc: &TruncationSpec) -> Result<DDSValue> {
        let terms = self.d_terms(s, w, alpha, beta, trunc.x_d)?;
        Ok(self.value_of(terms.into_iter().map(|t| t.2), s, w, trunc.x_d, trunc.tolerance))
    }

    /// Corrected Z summed over M (GL(1) side).
    pub fn corrected_z_m_side(&self, s: Complex64, w: Complex64, alpha: ClassChar, beta: ClassChar, trunc: &TruncationSpec) -> Result<DDSValue> {
        let terms = self.m_terms(s, w, alpha, beta, trunc.x_n)?;
        Ok(self.value_of(terms.into_iter().map(|t| t.1), s, w, trunc.x_n, trunc.tolerance))
    }

    pub fn basic_identity_check(&self, s: Complex64, w: Complex64, alpha: ClassChar, beta: ClassChar, trunc: &TruncationSpec) -> Result<IdentityCheck> {
        let d_side = self.corrected_z(s, w, alpha, beta, trunc)?;
        let m_side = self.corrected_z_m_side(s, w, alpha, beta, trunc)?;
        Ok(IdentityCheck { d_side, m_side, residual: (d_side.value - m_side.value).norm() })
    }

    /// Z_r: corrected Z restricted to r | D1.
    pub fn z_r(&self, r: u64, s: Complex64, w: Complex64, alpha: ClassChar, beta: ClassChar, trunc: &TruncationSpec) -> Result<DDSValue> {
        check_odd_squarefree(r, "r")?;
        let terms = self.d_terms(s, w, alpha, beta, trunc.x_d)?;
        Ok(self.value_of(terms.into_iter().filter(|t| t.1 % r == 0).map(|t| t.2), s, w, trunc.x_d, trunc.tolerance))
    }

    /// Z_(l): corrected Z restricted to (D1, l) = 1.
    pub fn z_paren_l(&self, l: u64, s: Complex64, w: Complex64, alpha: ClassChar, beta: ClassChar, trunc: &TruncationSpec) -> Result<DDSValue> {
        check_odd_squarefree(l, "l")?;
        let terms = self.d_terms(s, w, alpha, beta, trunc.x_d)?;
        Ok(self.value_of(terms.into_iter().filter(|t| gcd(t.1, l) == 1).map(|t| t.2), s, w, trunc.x_d, trunc.tolerance))
    }

    /// Z_(l) against its expansion through Z^{S_l}(s, w; αχ_{l3}, βρχ_m):
    /// ∏_{P|l}∏_j(1 − α²γ_j²|P|^{−2s})·Z_(l) =
    ///   Σ_{l3|l} Σ_{m_j | l/l3} Σ_{ρ,ρ'} c_{ρρ'} ∏_{P|l3}∏_j(1 − γ_j²|P|^{−2s}) |l3|^{−w}
    ///   (βρχ_m)(l3) (αρ')(m) ∏_j γ_j(m_j) |m|^{−s} Σ_{D ⊥ l} (βρχ_m)(D)|D|^{−w} L^{S_l}(s, π⊗χ_{D·l3}α) a(s, D),
    /// with η(x, y) = Σ c_{ρρ'}ρ(x)ρ'(y).
    pub fn zl_rearrangement(&self, ctx: &SymbolContext, l: u64, s: Complex64, w: Complex64, alpha: ClassChar, beta: ClassChar, x_d: u64) -> Result<RearrangementCheck> {
        check_odd_squarefree(l, "l")?;
        self.check_cutoff(x_d)?;
        let lp: Vec<u64> = self.sieve.factor(l).into_iter().map(|(p, _)| p).collect();
        let tab = EulerTable::gl3(self.sys, &self.euler_primes, s)?;
        let gam: BTreeMap<u64, Satake> = lp.iter().map(|&p| Ok((p, self.sys.satake(p)?))).collect::<Result<_>>()?;
        let one = Complex64::one();
        let two_s = npow_sq(s);

        let mut lhs_pre = one;
        for &p in &lp {
            let a2 = (alpha.at_int(p) as f64).powi(2);
            for g in gam[&p] {
                lhs_pre *= one - a2 * g * g * two_s(p);
            }
        }
        let mut lhs = CNeumaier::new();
        for d in (1..=x_d).step_by(2) {
            if gcd(self.sieve.squarefree_split(d).1, l) != 1 {
                continue;
            }
            lhs.add(npow(d, w) * beta.at_int(d) as f64 * self.d_inner(d, 1, alpha, &[], &tab)?);
        }
        let lhs = lhs_pre * lhs.value();

        let chars = ClassChar::all();
        let classes = ctx.classes();
        let mut coeff = [[0.0f64; 4]; 4];
        for (i, rho) in chars.iter().enumerate() {
            for (j, rho2) in chars.iter().enumerate() {
                let mut acc = 0i32;
                for &e in &classes {
                    for &e2 in &classes {
                        acc += (ctx.eta(e, e2) * rho.at(e) * rho2.at(e2)) as i32;
                    }
                }
                coeff[i][j] = acc as f64 / 16.0;
            }
        }

        let divisors = |n: u64| -> Vec<u64> { (1..=n).filter(|d| n % d == 0).collect() };
        let mut rhs = CNeumaier::new();
        let mut terms = 0;
        for l3 in divisors(l) {
            let rest = l / l3;
            let mut pre = npow(l3, w);
            for &p in lp.iter().filter(|&&p| l3 % p == 0) {
                for g in gam[&p] {
                    pre *= one - g * g * two_s(p);
                }
            }
            let mut v: Vec<(u64, Complex64)> = Vec::new();
            for d in (1..=x_d / l3).step_by(2) {
                if gcd(d, l) != 1 {
                    continue;
                }
                v.push((d, npow(d, w) * self.d_inner(d, l3, alpha, &lp, &tab)?));
            }
            let dv = divisors(rest);
            for &m1 in &dv {
                for &m2 in &dv {
                    for &m3 in &dv {
                        let ms = [m1, m2, m3];
                        let mprod = m1 * m2 * m3;
                        let m0: u64 = lp.iter().filter(|&&p| ms.iter().filter(|&&mj| mj % p == 0).count() % 2 == 1).product();
                        let mut base = npow(mprod, s);
                        for (j, &mj) in ms.iter().enumerate() {
                            for &p in lp.iter().filter(|&&p| mj % p == 0) {
                                base *= gam[&p][j];
                            }
                        }
                        for (i, rho) in chars.iter().enumerate() {
                            for (j, rho2) in chars.iter().enumerate() {
                                if coeff[i][j] == 0.0 {
                                    continue;
                                }
                                let psi = beta.mul(rho);
                                let head = coeff[i][j]
                                    * (psi.at_int(l3) * jacobi(m0 as i64, l3)) as f64
                                    * (alpha.at_int(mprod) * rho2.at_int(mprod)) as f64;
                                let mut z = CNeumaier::new();
                                for &(d, val) in &v {
                                    let ch = psi.at_int(d) * jacobi(m0 as i64, d);
                                    if ch != 0 {
                                        z.add(val * ch as f64);
                                    }
                                }
                                rhs.add(pre * base * head * z.value());
                                terms += 1;
                            }
                        }
                    }
                }
            }
        }
        let rhs = rhs.value();
        Ok(RearrangementCheck { lhs, rhs, residual: (lhs - rhs).norm(), terms })
    }
}

fn npow_sq(s: Complex64) -> impl Fn(u64) -> Complex64 {
    move |p| npow(p, 2.0 * s)
}

fn check_odd_squarefree(n: u64, what: &str) -> Result<()> {
    if n == 0 || n % 2 == 0 {
        return Err(Error::Domain(format!("{what} = {n} must be odd (prime to S)")));
    }
    if crate::ringarith::trial_factor(n).iter().any(|&(_, e)| e > 1) {
        return Err(Error::Domain(format!("{what} = {n} is not squarefree")));
    }
    Ok(())
}

/// The two sides of Prop 5.1 and of Lemma 5.2 for a finitely supported f on odd D.
#[derive(Clone, Debug, PartialEq)]
pub struct SieveSides<T> {
    pub moebius_sum: T,
    pub squarefree_sum: T,
    pub restricted: T,
    pub lemma_sum: T,
}

const SIEVE_SUPPORT: u64 = 10_000;

pub fn sieve_sides<T>(f: &[(u64, T)], r: u64) -> Result<SieveSides<T>>
where
    T: Clone + Zero + Add<Output = T> + Sub<Output = T>,
{
    check_odd_squarefree(r, "r")?;
    let max = f.iter().map(|e| e.0).max().unwrap_or(1);
    for &(d, _) in f {
        if d == 0 || d % 2 == 0 {
            return Err(Error::Domain(format!("D = {d} is not prime to S")));
        }
    }
    let sieve = Sieve::new(max.max(r).max(3));
    let split: Vec<(u64, u64)> = f.iter().map(|e| sieve.squarefree_split(e.0)).collect();
    let mut squarefree_sum = T::zero();
    let mut moebius_sum = T::zero();
    let mut restricted = T::zero();
    for (i, (_, v)) in f.iter().enumerate() {
        let d1 = split[i].1;
        if d1 == 1 {
            squarefree_sum = squarefree_sum + v.clone();
        }
        if d1 % r == 0 {
            restricted = restricted + v.clone();
        }
    }
    let mut rr = 1u64;
    while rr * rr <= max {
        let mu = sieve.moebius(rr);
        if mu != 0 {
            for (i, (_, v)) in f.iter().enumerate() {
                if split[i].1 % rr == 0 {
                    moebius_sum = if mu == 1 { moebius_sum + v.clone() } else { moebius_sum - v.clone() };
                }
            }
        }
        rr += 2;
    }
    let mut lemma_sum = T::zero();
    for l in (1..=r).step_by(2).filter(|l| r % l == 0) {
        let mu = sieve.moebius(l);
        for (i, (_, v)) in f.iter().enumerate() {
            if gcd(split[i].1, l) == 1 {
                lemma_sum = if mu == 1 { lemma_sum + v.clone() } else { lemma_sum - v.clone() };
            }
        }
    }
    Ok(SieveSides { moebius_sum, squarefree_sum, restricted, lemma_sum })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SieveCheck {
    pub sides: SieveSides<BigRational>,
    pub prop51: bool,
    pub lemma52: bool,
}

impl SieveCheck {
    pub fn holds(&self) -> bool {
        self.prop51 && self.lemma52
    }
}

/// Exact Möbius identities for f supported on odd norms ≤ 10⁴.
pub fn sieve_identity_check(f: &BTreeMap<u64, BigRational>, r: u64) -> Result<SieveCheck> {
    if let Some((&d, _)) = f.iter().next_back() {
        if d > SIEVE_SUPPORT {
            return Err(Error::Domain(format!("support reaches {d} > {SIEVE_SUPPORT}")));
        }
    }
    let entries: Vec<(u64, BigRational)> = f.iter().map(|(&d, v)| (d, v.clone())).collect();
    let sides = sieve_sides(&entries, r)?;
    let prop51 = sides.moebius_sum == sides.squarefree_sum;
    let lemma52 = sides.restricted == sides.lemma_sum;
    Ok(SieveCheck { sides, prop51, lemma52 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeSide {
    Phi,
    Psi,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionTerm {
    /// l (ψ-side) or (l_1, l_2, l_3) (φ-side).
    pub l: Vec<u64>,
    /// m (ψ-side) or (m_1, m_2, m_3) (φ-side).
    pub m: Vec<u64>,
    pub coefficient: Complex64,
    /// Modulus of the twisting character χ_{l·m} (product of all indices).
    pub char_arg: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionDescriptor {
    pub side: FeSide,
    pub r: u64,
    pub f_r: u64,
    pub terms: Vec<ExpansionTerm>,
}

fn squarefree_divisors(primes: &[u64]) -> Vec<u64> {
    let mut out = vec![1u64];
    for &p in primes {
        let n = out.len();
        for i in 0..n {
            out.push(out[i] * p);
        }
    }
    out
}

fn mu_of(n: u64, primes: &[u64]) -> f64 {
    if primes.iter().filter(|&&p| n % p == 0).count() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Divisor-sum expansion of the refined functional equations at a point.
/// ψ-side: Σ_{l,m | r} μ(l)β(l)|l|^{−w}·β(m)|m|^{−(1−w)}·χ(lm), i.e.
/// ∏_{P|r}(1 − βχ(P)|P|^{−w})(1 + βχ(P)|P|^{w−1}).
/// φ-side: Σ over (l_j), (m_j) | r of ∏_j α(l_j)γ_j(l_j)|l_j|^{s−1}·μ(m_j)α(m_j)γ_j(m_j)|m_j|^{−s}
/// times χ(∏l_j m_j), i.e. ∏_{P|r}∏_j(1 + αχγ_j(P)|P|^{s−1})(1 − αχγ_j(P)|P|^{−s}).
/// Character values are carried by `char_arg`, not by the coefficients.
pub fn refined_fe_expand(
    sys: &CoefficientSystem,
    r: u64,
    twist: ClassChar,
    side: FeSide,
    point: Complex64,
) -> Result<ExpansionDescriptor> {
    check_odd_squarefree(r, "r")?;
    let primes: Vec<u64> = crate::ringarith::trial_factor(r).into_iter().map(|(p, _)| p).collect();
    let divs = squarefree_divisors(&primes);
    let one = Complex64::one();
    let mut terms = Vec::new();
    match side {
        FeSide::Psi => {
            for &l in &divs {
                for &m in &divs {
                    let coefficient = mu_of(l, &primes) * (twist.at_int(l) * twist.at_int(m)) as f64 * npow(l, point) * npow(m, one - point);
                    terms.push(ExpansionTerm { l: vec![l], m: vec![m], coefficient, char_arg: l * m });
                }
            }
        }
        FeSide::Phi => {
            let gam: BTreeMap<u64, Satake> = primes.iter().map(|&p| Ok((p, sys.satake(p)?))).collect::<Result<_>>()?;
            let gamma_at = |n: u64, j: usize| -> Complex64 { primes.iter().filter(|&&p| n % p == 0).map(|p| gam[p][j]).product() };
            let mut tuples: Vec<[u64; 3]> = Vec::new();
            for &a in &divs {
                for &b in &divs {
                    for &cc in &divs {
                        tuples.push([a, b, cc]);
                    }
                }
            }
            for ls in &tuples {
                for ms in &tuples {
                    let mut coefficient = one;
                    for j in 0..3 {
                        coefficient *= twist.at_int(ls[j]) as f64 * gamma_at(ls[j], j) * npow(ls[j], one - point);
                        coefficient *= mu_of(ms[j], &primes) * twist.at_int(ms[j]) as f64 * gamma_at(ms[j], j) * npow(ms[j], point);
                    }
                    let char_arg = ls.iter().product::<u64>() * ms.iter().product::<u64>();
                    terms.push(ExpansionTerm { l: ls.to_vec(), m: ms.to_vec(), coefficient, char_arg });
                }
            }
        }
    }
    Ok(ExpansionDescriptor { side, r, f_r: 1, terms })
}

impl ExpansionDescriptor {
    /// Σ coefficient·χ(char_arg) for χ given on the primes of r by `chi_at`.
    pub fn evaluate(&self, chi_at: &dyn Fn(u64) -> f64) -> Complex64 {
        let primes: Vec<u64> = crate::ringarith::trial_factor(self.r).into_iter().map(|(p, _)| p).collect();
        self.terms
            .iter()
            .map(|t| {
                let v: f64 = primes.iter().map(|&p| chi_at(p).powi(t.char_arg_exponent(p) as i32)).product();
                t.coefficient * v
            })
            .sum()
    }
}

impl ExpansionTerm {
    fn char_arg_exponent(&self, p: u64) -> u32 {
        let mut n = self.char_arg;
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        e
    }
}

/// Worst relative gap over χ(P) = ±1 between (expansion)·(local L ratio) and
/// the telescoped product: ∏_{P|r}(1 − β²|P|^{2w−2}) on the ψ-side,
/// ∏_{P|r}∏_j(1 − α²γ_j(P)²|P|^{2s−2}) on the φ-side.
pub fn refined_telescoping_residual(sys: &CoefficientSystem, desc: &ExpansionDescriptor, twist: ClassChar, point: Complex64) -> Result<f64> {
    let primes: Vec<u64> = crate::ringarith::trial_factor(desc.r).into_iter().map(|(p, _)| p).collect();
    let one = Complex64::one();
    let mut worst: f64 = 0.0;
    for mask in 0..(1u32 << primes.len()) {
        let chi = |p: u64| -> f64 {
            let i = primes.iter().position(|&q| q == p).unwrap();
            if mask >> i & 1 == 1 {
                -1.0
            } else {
                1.0
            }
        };
        let mut lhs = desc.evaluate(&chi);
        let mut closed = one;
        for &p in &primes {
            let t = twist.at_int(p) as f64 * chi(p);
            match desc.side {
                FeSide::Psi => {
                    let x = npow(p, point);
                    let xd = npow(p, one - point);
                    lhs *= (one - t * xd) / (one - t * x);
                    closed *= one - xd * xd;
                }
                FeSide::Phi => {
                    for g in sys.satake(p)? {
                        let x = g * npow(p, point);
                        let xd = g * npow(p, one - point);
                        lhs *= (one - t * xd) / (one - t * x);
                        closed *= one - xd * xd;
                    }
                }
            }
        }
        worst = worst.max((lhs - closed).norm() / closed.norm().max(1.0));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermSpec {
    /// D-term of the GL(3) side.
    D(u64),
    /// M-term of the GL(1) side.
    M(u64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermwiseCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
    pub flagged: bool,
}

/// Single-term functional equation through the completed-value engine:
/// L^S(s)·a(s) against L^S(1−s)·a(1−s)·|D1|^{6(1/2−s)}·ε-ratio·(S-local ratio)
/// for D-terms, and the GL(1) analogue with |M1|^{1−2w} for M-terms.
pub fn fe_termwise_check(sys: &CoefficientSystem, term: TermSpec, point: Complex64, tolerance: f64) -> Result<TermwiseCheck> {
    let one = Complex64::one();
    let (n, gl3) = match term {
        TermSpec::D(d) => (d, true),
        TermSpec::M(m) => (m, false),
    };
    if n == 0 || n % 2 == 0 {
        return Err(Error::Domain(format!("term index {n} must be odd")));
    }
    let fac = crate::ringarith::trial_factor(n);
    let n0: u64 = fac.iter().filter(|(_, e)| e % 2 == 1).map(|(p, _)| p).product();
    let n1: u64 = fac.iter().map(|&(p, e)| p.pow(e / 2)).product();
    let local: Vec<(u64, usize, LocalCorrection)> = fac
        .iter()
        .map(|&(p, e)| Ok((p, e as usize, solve_correction_for(sys, p, e as usize)?)))
        .collect::<Result<_>>()?;

    if gl3 {
        if !sys.self_dual {
            return Err(Error::Unsupported("termwise check implemented for self-dual systems".into()));
        }
        if sys.shifts.len() != 3 {
            return Err(Error::Config(format!("{} lacks archimedean shifts", sys.label)));
        }
        let chi = KroneckerChar::attached(n0);
        let params = sys.completed_params(chi.conductor());
        let coeffs = |len: usize| -> Result<Vec<Complex64>> {
            let a = sys.coefficient_table(len as u64)?;
            Ok(a.iter().enumerate().map(|(k, &z)| if k == 0 { z } else { z * chi.at(k as u64) as f64 }).collect())
        };
        let corr = |s: Complex64| -> Complex64 {
            local
                .iter()
                .map(|(p, k, lc)| {
                    let x = npow(*p, s);
                    if k % 2 == 0 {
                        lc.a_value(*k, x * jacobi(n0 as i64, *p) as f64)
                    } else {
                        lc.a_value(*k, x)
                    }
                })
                .product()
        };
        let g2 = sys.satake(2)?;
        let x2 = chi.at(2) as f64;
        let l2_inv = |s: Complex64| -> Complex64 { g2.iter().map(|&g| one - g * x2 * npow(2, s)).product() };
        let (l_s, l_1s) = afe_pair(&params, point, tolerance, &coeffs, sys.prime_bound())?;
        let lhs = l_s * l2_inv(point) * corr(point);
        let fe = params.root_number * params.completion(one - point) / params.completion(point);
        let local_ratio = l2_inv(point) / l2_inv(one - point);
        let rhs = l_1s * l2_inv(one - point) * local_ratio * corr(one - point) * c(n1 as f64).powc(6.0 * (0.5 - point)) * fe;
        let residual = (lhs - rhs).norm() / lhs.norm().max(1e-300);
        Ok(TermwiseCheck { lhs, rhs, residual, flagged: !(residual <= tolerance) })
    } else {
        let mstar = if n0 % 4 == 1 { n0 as i64 } else { -(n0 as i64) };
        let chi = KroneckerChar { disc: mstar };
        let params = CompletedLParams::dirichlet(chi.conductor(), mstar < 0);
        let coeffs = |len: usize| -> Result<Vec<Complex64>> { Ok((0..=len as u64).map(|k| if k == 0 { Complex64::zero() } else { c(chi.at(k) as f64) }).collect()) };
        let corr = |w: Complex64| -> Complex64 {
            local
                .iter()
                .map(|(p, l, lc)| {
                    let y = npow(*p, w);
                    if l % 2 == 0 {
                        lc.b_value(*l, y * jacobi(mstar, *p) as f64)
                    } else {
                        lc.b_value(*l, y)
                    }
                })
                .product()
        };
        let x2 = chi.at(2) as f64;
        let l2_inv = |w: Complex64| -> Complex64 { one - x2 * npow(2, w) };
        let (l_w, l_1w) = afe_pair(&params, point, tolerance, &coeffs, u64::MAX)?;
        let lhs = l_w * l2_inv(point) * corr(point);
        let fe = params.root_number * params.completion(one - point) / params.completion(point);
        let local_ratio = l2_inv(point) / l2_inv(one - point);
        let rhs = l_1w * l2_inv(one - point) * local_ratio * corr(one - point) * c(n1 as f64).powc(one - 2.0 * point) * fe;
        let residual = (lhs - rhs).norm() / lhs.norm().max(1e-300);
        Ok(TermwiseCheck { lhs, rhs, residual, flagged: !(residual <= tolerance) })
    }
}

fn afe_pair(
    params: &CompletedLParams,
    point: Complex64,
    _tolerance: f64,
    coeffs: &dyn Fn(usize) -> Result<Vec<Complex64>>,
    max_len: u64,
) -> Result<(Complex64, Complex64)> {
    let one = Complex64::one();
    let e1 = AfeEngine::new(params.clone(), point)?;
    let e2 = AfeEngine::new(params.clone(), one - point)?;
    let (a1, b1) = e1.default_lengths(1.0)?;
    let (a2, b2) = e2.default_lengths(1.0)?;
    let len = a1.max(b1).max(a2).max(b2);
    if len as u64 > max_len {
        return Err(Error::Domain(format!("engine needs {len} coefficients, beyond the prime bound {max_len}")));
    }
    let tab = coeffs(len + 1)?;
    let a = |k: u64| tab.get(k as usize).copied().unwrap_or_default();
    Ok((e1.l_value(&a, &a, 1.0)?.value, e2.l_value(&a, &a, 1.0)?.value))
}
