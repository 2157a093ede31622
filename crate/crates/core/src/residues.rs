//! Residues at w = 1: the local parity series L_{1,r}, L_{2,r}, the factors R_1
//! and R_r, T(s), the Euler-product probe, the switching identity, the Dedekind
//! residue identity and the scattering factor M(s, E).

use crate::error::{Error, Result};
use crate::lseries::{prime_power_series, squarefree_part, CoefficientSystem, KroneckerChar, Satake};
use crate::quadchar::{class_of_int, ClassChar, RayClass, SymbolContext};
use crate::ringarith::{is_prime_u64, jacobi, trial_factor, Sieve};
use crate::special::{ln_gamma_r, zeta_real};
use crate::summation::{CNeumaier, Neumaier};
use num_complex::Complex64;

/// A(Q), the residue of ζ at 1.
pub const A_Q: f64 = 1.0;
/// ∏_{p∈S}(1 + 1/p)^{−1} for S = {2}.
pub const S_PRODUCT: f64 = 2.0 / 3.0;
const SINGULAR: f64 = 1e-14;
const T_STABLE_TOL: f64 = 1e-4;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn npow(n: u64, s: Complex64) -> Complex64 {
    (-s * (n as f64).ln()).exp()
}

fn check_odd_prime(r: u64) -> Result<()> {
    if r < 3 || !is_prime_u64(r) {
        return Err(Error::Domain(format!("r = {r} must be an odd prime")));
    }
    Ok(())
}

/// ∏_{P|N}(1 + 1/|P|)^{−1}.
pub fn prime_weight(n: u64) -> f64 {
    trial_factor(n).iter().map(|&(p, _)| p as f64 / (p as f64 + 1.0)).product()
}

#[derive(Clone, Debug)]
pub struct LocalSeriesPair {
    pub r: u64,
    pub s: Complex64,
    pub k: usize,
    pub satake: Satake,
    pub l1: Complex64,
    pub l2: Complex64,
    pub l1_series: Complex64,
    pub l2_series: Complex64,
    pub tail_bound: f64,
}

impl LocalSeriesPair {
    pub fn rel_error(&self) -> f64 {
        let e1 = (self.l1 - self.l1_series).norm() / self.l1.norm().max(1e-300);
        let e2 = (self.l2 - self.l2_series).norm() / self.l2.norm().max(1e-300);
        e1.max(e2)
    }

    /// |r|^{−1} + L2.
    pub fn denominator(&self) -> Complex64 {
        c(1.0 / self.r as f64) + self.l2
    }
}

/// Closed forms L1 = (a + r^{−2s}) r^{−s}/Π and L2 = (1 + ã r^{−2s})/Π with
/// Π = ∏_j(1 − γ_j² r^{−2s}), a = e1(γ), ã = e2(γ); series to order K.
pub fn local_pair_from_satake(r: u64, g: &Satake, s: Complex64, k: usize) -> Result<LocalSeriesPair> {
    let rho = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let rs = (r as f64).powf(s.re);
    if rho * rho >= rs * rs {
        return Err(Error::Domain(format!("divergent local factor at r = {r}: |γ|² = {} ≥ |r|^{{2σ}}", rho * rho)));
    }
    let x = npow(r, s);
    let x2 = x * x;
    let e1 = g[0] + g[1] + g[2];
    let e2 = g[0] * g[1] + g[1] * g[2] + g[2] * g[0];
    let pi: Complex64 = g.iter().map(|gj| c(1.0) - gj * gj * x2).product();
    let l1 = (e1 + x2) * x / pi;
    let l2 = (c(1.0) + e2 * x2) / pi;

    let a = prime_power_series(g, 2 * k + 1);
    let mut s1 = CNeumaier::default();
    let mut s2 = CNeumaier::default();
    let mut xp = c(1.0);
    for (n, an) in a.iter().enumerate() {
        if n % 2 == 0 {
            s2.add(an * xp);
        } else {
            s1.add(an * xp);
        }
        xp *= x;
    }
    // |a(r^n)| ≤ C(n+2, 2) ρ^n
    let q = rho / rs;
    let n0 = (2 * k + 2) as f64;
    let tail_bound = if q == 0.0 {
        0.0
    } else {
        (n0 + 2.0) * (n0 + 1.0) / 2.0 * q.powf(n0) / (1.0 - q).powi(3)
    };
    Ok(LocalSeriesPair { r, s, k, satake: *g, l1, l2, l1_series: s1.value(), l2_series: s2.value(), tail_bound })
}

pub fn local_pair(sys: &CoefficientSystem, r: u64, s: Complex64, k: usize) -> Result<LocalSeriesPair> {
    check_odd_prime(r)?;
    local_pair_from_satake(r, &sys.satake(r)?, s, k)
}

/// η(E, r)(1 + 1/|r|) L1/(1/|r| + L2).
pub fn rr_from_pair(pair: &LocalSeriesPair, eta: i8) -> Result<Complex64> {
    let den = pair.denominator();
    if den.norm() < SINGULAR {
        return Err(Error::Numeric(format!("R_r singular at r = {}: |1/r + L2| = {:e}", pair.r, den.norm())));
    }
    let r = pair.r as f64;
    Ok(eta as f64 * (1.0 + 1.0 / r) * pair.l1 / den)
}

pub fn eta_at(ctx: &SymbolContext, e: RayClass, r: u64) -> i8 {
    ctx.eta(e, class_of_int(r))
}

pub fn rr(sys: &CoefficientSystem, ctx: &SymbolContext, e: RayClass, r: u64, s: Complex64) -> Result<Complex64> {
    rr_from_pair(&local_pair(sys, r, s, 0)?, eta_at(ctx, e, r))
}

/// Self-dual triple (1, ρ, 1/ρ) with a = 1 + ρ + 1/ρ. Unitary for a ∈ [−1, 3].
pub fn synthetic_satake(a: f64) -> Satake {
    let b = c(a - 1.0);
    let disc = (b * b - 4.0).sqrt();
    let rho = (b + disc) / 2.0;
    [c(1.0), rho, c(1.0) / rho]
}

pub fn rr_of_coefficient(a: f64, r: u64, s: Complex64, eta: i8) -> Result<Complex64> {
    check_odd_prime(r)?;
    rr_from_pair(&local_pair_from_satake(r, &synthetic_satake(a), s, 0)?, eta)
}

#[derive(Clone, Debug)]
pub struct MonotoneScan {
    pub r: u64,
    pub points: Vec<(f64, f64)>,
    pub increasing: bool,
    pub decreasing: bool,
    pub min_gap: f64,
}

impl MonotoneScan {
    pub fn strictly_monotone(&self) -> bool {
        self.increasing || self.decreasing
    }
}

/// Real part of Rr(s) over a ∈ [lo, hi] in steps of `step`.
pub fn monotonicity_scan(r: u64, s: Complex64, lo: f64, hi: f64, step: f64) -> Result<MonotoneScan> {
    if !(step > 0.0) || hi < lo {
        return Err(Error::Config("scan needs lo ≤ hi and step > 0".into()));
    }
    let n = ((hi - lo) / step).round() as usize;
    let mut points = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let a = lo + i as f64 * step;
        let v = rr_of_coefficient(a, r, s, 1)?;
        points.push((a, v.re));
    }
    let diffs: Vec<f64> = points.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let increasing = diffs.iter().all(|&d| d > 0.0);
    let decreasing = diffs.iter().all(|&d| d < 0.0);
    let min_gap = diffs.iter().map(|d| d.abs()).fold(f64::INFINITY, f64::min);
    Ok(MonotoneScan { r, points, increasing, decreasing, min_gap })
}

#[derive(Clone, Debug)]
pub struct DeterminationRow {
    pub r: u64,
    pub rr_a: Complex64,
    pub rr_b: Complex64,
    pub a_a: Complex64,
    pub a_b: Complex64,
}

impl DeterminationRow {
    pub fn detected(&self) -> bool {
        (self.rr_a - self.rr_b).norm() > 1e-9
    }

    /// Same R_r but different a(r): the injectivity failure.
    pub fn flagged(&self) -> bool {
        !self.detected() && (self.a_a - self.a_b).norm() > 1e-6
    }
}

pub fn determination_rows(
    sys_a: &CoefficientSystem,
    sys_b: &CoefficientSystem,
    ctx: &SymbolContext,
    e: RayClass,
    primes: &[u64],
    s: Complex64,
) -> Result<Vec<DeterminationRow>> {
    primes
        .iter()
        .map(|&r| {
            let ga = sys_a.satake(r)?;
            let gb = sys_b.satake(r)?;
            Ok(DeterminationRow {
                r,
                rr_a: rr(sys_a, ctx, e, r, s)?,
                rr_b: rr(sys_b, ctx, e, r, s)?,
                a_a: ga.iter().sum(),
                a_b: gb.iter().sum(),
            })
        })
        .collect()
}

fn sym2_pairs(g: &Satake) -> [Complex64; 6] {
    [g[0] * g[0], g[1] * g[1], g[2] * g[2], g[0] * g[1], g[1] * g[2], g[2] * g[0]]
}

/// ∏_{odd p ≤ X} ∏_{i≤j}(1 − γ_iγ_j p^{−z})^{−1}.
pub fn sym2_partial(sys: &CoefficientSystem, z: Complex64, x: u64) -> Result<Complex64> {
    let mut out = c(1.0);
    for &p in sys.primes().iter().filter(|&&p| p > 2 && p <= x) {
        let u = npow(p, z);
        for gg in sym2_pairs(&sys.satake(p)?) {
            out /= c(1.0) - gg * u;
        }
    }
    Ok(out)
}

/// (N, a(N²)) for odd N ≤ X.
pub fn square_coefficients(sys: &CoefficientSystem, x: u64) -> Result<Vec<(u64, Complex64)>> {
    let sieve = Sieve::new(x.max(2));
    let mut local: std::collections::HashMap<u64, Vec<Complex64>> = Default::default();
    let mut out = Vec::with_capacity(x as usize / 2 + 1);
    for n in (1..=x).step_by(2) {
        let mut a = c(1.0);
        for (p, e) in sieve.factor(n) {
            let need = 2 * e as usize;
            let series = match local.get(&p) {
                Some(v) if v.len() > need => v,
                _ => {
                    let v = prime_power_series(&sys.satake(p)?, need.max(8));
                    local.insert(p, v);
                    &local[&p]
                }
            };
            a *= series[need];
        }
        out.push((n, a));
    }
    Ok(out)
}

/// Σ_{odd N ≤ X} a(N²) N^{−2s} ∏_{P|N}(1 + 1/P)^{−1}.
pub fn t_numerator_from(squares: &[(u64, Complex64)], s: Complex64, x: u64) -> Complex64 {
    let mut acc = CNeumaier::default();
    for &(n, a) in squares.iter().take_while(|t| t.0 <= x) {
        acc.add(a * npow(n, 2.0 * s) * prime_weight(n));
    }
    acc.value()
}

#[derive(Clone, Debug)]
pub struct TValue {
    pub s: Complex64,
    pub x: u64,
    pub numerator: Complex64,
    pub sym2_partial: Complex64,
    pub value: Complex64,
    pub value_2x: Complex64,
    pub drift: f64,
    pub euler: Complex64,
    pub euler_drift: f64,
    pub flagged: bool,
}

/// T(s) as the quotient of the weighted square sum by the truncated sym² product,
/// at X and 2X.
pub fn t_of_s(sys: &CoefficientSystem, s: Complex64, x: u64) -> Result<TValue> {
    let squares = square_coefficients(sys, 2 * x)?;
    let numerator = t_numerator_from(&squares, s, x);
    let sym2 = sym2_partial(sys, 2.0 * s, x)?;
    let value = numerator / sym2;
    let value_2x = t_numerator_from(&squares, s, 2 * x) / sym2_partial(sys, 2.0 * s, 2 * x)?;
    let drift = (value_2x - value).norm() / value_2x.norm().max(1e-300);
    let euler = t_euler(sys, s, x)?;
    let euler_2x = t_euler(sys, s, 2 * x)?;
    let euler_drift = (euler_2x - euler).norm() / euler_2x.norm().max(1e-300);
    Ok(TValue {
        s,
        x,
        numerator,
        sym2_partial: sym2,
        value,
        value_2x,
        drift,
        euler,
        euler_drift,
        flagged: !(drift <= T_STABLE_TOL),
    })
}

/// ∏_{odd p ≤ X} F_p(s) ∏_{i≤j}(1 − γ_iγ_j p^{−2s}) with
/// F_p = 1 + (p/(p+1)) Σ_{k≥1} a(p^{2k}) p^{−2ks}.
pub fn t_euler(sys: &CoefficientSystem, s: Complex64, x: u64) -> Result<Complex64> {
    let mut out = c(1.0);
    for &p in sys.primes().iter().filter(|&&p| p > 2 && p <= x) {
        let g = sys.satake(p)?;
        let u = npow(p, s);
        let e = |t: Complex64| -> Complex64 { g.iter().map(|gj| c(1.0) / (c(1.0) - gj * t)).product() };
        let even = (e(u) + e(-u)) / 2.0;
        let pf = p as f64;
        let f = c(1.0) + pf / (pf + 1.0) * (even - 1.0);
        let sym: Complex64 = sym2_pairs(&g).iter().map(|gg| c(1.0) - gg * u * u).product();
        out *= f * sym;
    }
    Ok(out)
}

/// L_S(s, π⊗χ_E) = ∏_j(1 − γ_j(2) χ_E(2) 2^{−s})^{−1}.
pub fn l_s_factor(sys: &CoefficientSystem, e0: u64, s: Complex64) -> Result<Complex64> {
    let chi2 = KroneckerChar::attached(e0).at(2) as f64;
    let g = sys.satake(2)?;
    let u = npow(2, s) * chi2;
    Ok(g.iter().map(|gj| c(1.0) / (c(1.0) - gj * u)).product())
}

#[derive(Clone, Debug)]
pub struct ResidueReport {
    pub s: Complex64,
    pub e0: u64,
    pub a_f: f64,
    pub h_c: u32,
    pub zeta2: f64,
    pub s_product: f64,
    pub l_s: Complex64,
    pub t: TValue,
    pub r1: Complex64,
    pub rr: Vec<(u64, LocalSeriesPair, i8, Complex64)>,
}

impl ResidueReport {
    pub fn sym2_partial(&self) -> Complex64 {
        self.t.sym2_partial
    }

    pub fn flagged(&self) -> bool {
        self.t.flagged
    }

    pub fn constant(&self) -> f64 {
        self.a_f / (self.h_c as f64 * self.zeta2) * self.s_product
    }

    /// Named scalar components, in a fixed order.
    pub fn components(&self) -> Vec<(String, Complex64)> {
        let mut v = vec![
            ("A_F".to_string(), c(self.a_f)),
            ("h_C".to_string(), c(self.h_c as f64)),
            ("zeta_F_2".to_string(), c(self.zeta2)),
            ("S_product".to_string(), c(self.s_product)),
            ("L_S".to_string(), self.l_s),
            ("sym2_partial".to_string(), self.t.sym2_partial),
            ("T_of_s".to_string(), self.t.value),
            ("T_of_s_2X".to_string(), self.t.value_2x),
            ("T_euler".to_string(), self.t.euler),
            ("R1".to_string(), self.r1),
        ];
        for (r, pair, eta, val) in &self.rr {
            v.push((format!("L1_{r}"), pair.l1));
            v.push((format!("L2_{r}"), pair.l2));
            v.push((format!("eta_{r}"), c(*eta as f64)));
            v.push((format!("Rr_{r}"), *val));
        }
        v
    }
}

fn check_class_rep(ctx: &SymbolContext, e: RayClass) -> u64 {
    squarefree_part(ctx.representative(e))
}

pub fn r1(sys: &CoefficientSystem, ctx: &SymbolContext, e: RayClass, s: Complex64, x: u64) -> Result<ResidueReport> {
    residue_report(sys, ctx, e, s, x, &[])
}

pub fn residue_report(
    sys: &CoefficientSystem,
    ctx: &SymbolContext,
    e: RayClass,
    s: Complex64,
    x: u64,
    rs: &[u64],
) -> Result<ResidueReport> {
    let e0 = check_class_rep(ctx, e);
    let l_s = l_s_factor(sys, e0, s)?;
    let t = t_of_s(sys, s, x)?;
    let zeta2 = zeta_real(2.0);
    let h_c = ctx.h_c;
    let r1 = A_Q / (h_c as f64 * zeta2) * S_PRODUCT * l_s * t.sym2_partial * t.value;
    let mut rr_rows = Vec::new();
    for &r in rs {
        let pair = local_pair(sys, r, s, 0)?;
        let eta = eta_at(ctx, e, r);
        let v = rr_from_pair(&pair, eta)?;
        rr_rows.push((r, pair, eta, v));
    }
    Ok(ResidueReport { s, e0, a_f: A_Q, h_c, zeta2, s_product: S_PRODUCT, l_s, t, r1, rr: rr_rows })
}

#[derive(Clone, Debug)]
pub struct ProbeRow {
    pub x: u64,
    pub value: Complex64,
    pub drift: f64,
}

#[derive(Clone, Debug)]
pub struct HypothesisProbe {
    pub s: Complex64,
    pub rows: Vec<ProbeRow>,
}

impl HypothesisProbe {
    pub fn final_drift(&self) -> f64 {
        self.rows.last().map(|r| r.drift).unwrap_or(f64::INFINITY)
    }

    /// −log10 of the last relative change along the ladder.
    pub fn stable_digits(&self) -> f64 {
        let d = self.final_drift();
        if d == 0.0 {
            f64::INFINITY
        } else {
            -d.log10()
        }
    }
}

/// (1 + a x)(1 − γ1γ2 x)(1 − γ2γ3 x)(1 − γ3γ1 x) at x = p^{−2s}.
pub fn probe_factor(g: &Satake, p: u64, s: Complex64) -> Complex64 {
    let x = npow(p, 2.0 * s);
    let a = g[0] + g[1] + g[2];
    (c(1.0) + a * x) * (c(1.0) - g[0] * g[1] * x) * (c(1.0) - g[1] * g[2] * x) * (c(1.0) - g[2] * g[0] * x)
}

/// Partial products over odd primes at each cutoff of an increasing ladder.
pub fn hypothesis_probe(sys: &CoefficientSystem, s: Complex64, ladder: &[u64]) -> Result<HypothesisProbe> {
    if ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("probe ladder must be strictly increasing".into()));
    }
    if let Some(&top) = ladder.last() {
        let needed = Sieve::new(top.max(2)).primes().last().copied().unwrap_or(2);
        if needed > sys.prime_bound() {
            return Err(Error::Domain(format!("probe cutoff {top} beyond the system's prime bound {}", sys.prime_bound())));
        }
    }
    let mut rows = Vec::with_capacity(ladder.len());
    let mut prod = c(1.0);
    let mut it = sys.primes().iter().filter(|&&p| p > 2).peekable();
    let mut prev: Option<Complex64> = None;
    for &x in ladder {
        while let Some(&&p) = it.peek() {
            if p > x {
                break;
            }
            prod *= probe_factor(&sys.satake(p)?, p, s);
            it.next();
        }
        let drift = prev.map(|q| (prod - q).norm() / prod.norm().max(1e-300)).unwrap_or(f64::INFINITY);
        rows.push(ProbeRow { x, value: prod, drift });
        prev = Some(prod);
    }
    Ok(HypothesisProbe { s, rows })
}

#[derive(Clone, Debug)]
pub struct SwitchingCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

/// (1 + 1/r)^{−1} Σ_{(N₂,r)=1} vs [1/r + L2]^{−1} Σ_N over the weighted square sum.
pub fn switching_check_with(squares: &[(u64, Complex64)], l2: Complex64, r: u64, s: Complex64, x: u64) -> SwitchingCheck {
    let rf = r as f64;
    let mut restricted = CNeumaier::default();
    let mut full = CNeumaier::default();
    for &(n, a) in squares.iter().take_while(|t| t.0 <= x) {
        let term = a * npow(n, 2.0 * s) * prime_weight(n);
        full.add(term);
        if n % r != 0 {
            restricted.add(term);
        }
    }
    let lhs = restricted.value() / (1.0 + 1.0 / rf);
    let rhs = full.value() / (c(1.0 / rf) + l2);
    SwitchingCheck { lhs, rhs, residual: (lhs - rhs).norm() }
}

pub fn switching_check(sys: &CoefficientSystem, r: u64, s: Complex64, x: u64) -> Result<SwitchingCheck> {
    let pair = local_pair(sys, r, s, 0)?;
    let squares = square_coefficients(sys, x)?;
    Ok(switching_check_with(&squares, pair.l2, r, s, x))
}

fn poly_mul(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    while out.len() > 1 && *out.last().unwrap() == 0 {
        out.pop();
    }
    out
}

/// Local factor at one prime, cross-multiplied as integer polynomials in u = |P|^{−w}:
/// left (1 + χu)/(1 − u²) or 1/(1 − u²) when P is excluded from the D-sum, right
/// 1/(1 − u²) for excluded or χ(P) = 0 primes, 1/(1 − χu) otherwise.
pub fn dedekind_local_identity(chi: i8, excluded: bool) -> bool {
    let one_minus_u2 = [1, 0, -1];
    let (l_num, l_den): (Vec<i64>, Vec<i64>) =
        if excluded { (vec![1], one_minus_u2.to_vec()) } else { (vec![1, chi as i64], one_minus_u2.to_vec()) };
    let (r_num, r_den): (Vec<i64>, Vec<i64>) =
        if excluded || chi == 0 { (vec![1], one_minus_u2.to_vec()) } else { (vec![1], vec![1, -(chi as i64)]) };
    poly_mul(&l_num, &r_den) == poly_mul(&r_num, &l_den)
}

/// D odd squarefree in [1, X].
fn odd_squarefree_flags(x: u64) -> Vec<bool> {
    let mut flags = vec![false; x as usize + 1];
    for d in (1..=x as usize).step_by(2) {
        flags[d] = true;
    }
    let sieve = Sieve::new(((x as f64).sqrt() as u64 + 2).max(3));
    for &p in sieve.primes().iter().filter(|&&p| p > 2) {
        let q = (p * p) as usize;
        if q > x as usize {
            break;
        }
        let mut m = q;
        while m <= x as usize {
            flags[m] = false;
            m += q;
        }
    }
    flags
}

#[derive(Clone, Debug)]
pub struct DedekindReport {
    pub r: u64,
    pub n: u64,
    pub rho: ClassChar,
    pub trivial: bool,
    pub primes_checked: usize,
    pub per_prime_exact: bool,
    pub w2_lhs: f64,
    pub w2_rhs: f64,
    pub w2_residual: f64,
    pub w2_tail_bound: f64,
    pub samples: [(f64, f64); 2],
    pub limit: f64,
    pub target: f64,
    pub branch_ok: bool,
}

impl DedekindReport {
    pub fn holds(&self) -> bool {
        self.per_prime_exact && self.branch_ok
    }
}

pub struct DedekindSetup {
    pub prime_limit: u64,
    pub x_w2: u64,
    pub product_bound: u64,
    pub x_limit: u64,
    pub w_ladder: [f64; 2],
    pub rel_tol: f64,
}

impl Default for DedekindSetup {
    fn default() -> Self {
        DedekindSetup { prime_limit: 1000, x_w2: 10_000, product_bound: 1_000_000, x_limit: 1_000_000, w_ladder: [1e-3, 1e-4], rel_tol: 0.01 }
    }
}

/// The character D ↦ ρ(D)·(rN₀/D) on odd D, with r = 1 or an odd prime and N odd.
pub fn dedekind_residue_factor_check(rho: ClassChar, r: u64, n: u64, setup: &DedekindSetup) -> Result<DedekindReport> {
    if r != 1 {
        check_odd_prime(r)?;
    }
    if n == 0 || n % 2 == 0 {
        return Err(Error::Domain(format!("N = {n} must be odd and positive")));
    }
    let top = r * squarefree_part(n);
    let chi = |d: u64| -> i8 { rho.at_int(d) * jacobi(top as i64, d) };
    let root = (top as f64).sqrt().round() as u64;
    let trivial = rho.is_trivial() && root * root == top;
    let divides_2n = |p: u64| p == 2 || n % p == 0;

    let sieve = Sieve::new(setup.prime_limit.max(setup.product_bound));
    let mut per_prime_exact = true;
    let mut primes_checked = 0;
    for &p in sieve.primes_up_to(setup.prime_limit) {
        let ch = if p == 2 { 0 } else { chi(p) };
        per_prime_exact &= dedekind_local_identity(ch, divides_2n(p));
        primes_checked += 1;
    }

    // w = 2
    let flags = odd_squarefree_flags(setup.x_w2.max(setup.x_limit));
    let mut lhs = Neumaier::default();
    for d in (1..=setup.x_w2).step_by(2) {
        if flags[d as usize] && crate::ringarith::gcd(d, n) == 1 {
            lhs.add(chi(d) as f64 / (d as f64 * d as f64));
        }
    }
    let w2_lhs = zeta_real(4.0) * lhs.value();
    let mut w2_rhs = 1.0;
    for &p in sieve.primes_up_to(setup.product_bound) {
        let u = 1.0 / (p as f64 * p as f64);
        let ch = if p == 2 { 0 } else { chi(p) };
        if divides_2n(p) || ch == 0 {
            w2_rhs /= 1.0 - u * u;
        } else {
            w2_rhs /= 1.0 - ch as f64 * u;
        }
    }
    let xb = setup.x_w2 as f64;
    let pb = setup.product_bound as f64;
    let w2_tail_bound = zeta_real(4.0) * w2_rhs.abs().max(1.0) / xb + 2.0 / (pb * pb.ln());
    let w2_residual = (w2_lhs - w2_rhs).abs();

    // w → 1
    let mut count = 0u64;
    for d in (1..=setup.x_limit).step_by(2) {
        if flags[d as usize] && crate::ringarith::gcd(d, n) == 1 {
            count += 1;
        }
    }
    let x = setup.x_limit as f64;
    let density = count as f64 / x;
    let sample = |h: f64| -> f64 {
        let w = 1.0 + h;
        let mut acc = Neumaier::default();
        for d in (1..=setup.x_limit).step_by(2) {
            if flags[d as usize] && crate::ringarith::gcd(d, n) == 1 {
                acc.add(chi(d) as f64 * (-w * (d as f64).ln()).exp());
            }
        }
        let tail = if trivial { density * x.powf(1.0 - w) / (w - 1.0) } else { 0.0 };
        h * zeta_real(2.0 * w) * (acc.value() + tail)
    };
    let [h1, h2] = setup.w_ladder;
    let v1 = sample(h1);
    let v2 = sample(h2);
    let limit = v2 + (v2 - v1) * h2 / (h1 - h2);
    let target = if trivial {
        A_Q * trial_factor(2 * n).iter().map(|&(p, _)| p as f64 / (p as f64 + 1.0)).product::<f64>()
    } else {
        0.0
    };
    let branch_ok = if trivial { ((limit - target) / target).abs() < setup.rel_tol } else { v2.abs() < 1e-3 };
    Ok(DedekindReport {
        r,
        n,
        rho,
        trivial,
        primes_checked,
        per_prime_exact,
        w2_lhs,
        w2_rhs,
        w2_residual,
        w2_tail_bound,
        samples: [(1.0 + h1, v1), (1.0 + h2, v2)],
        limit,
        target,
        branch_ok,
    })
}

/// M(s, E) = ε_π c(π)^{1/2−s} · γ(1−s)/γ(s) · L_2(1−s)/L_2(s).
pub fn scattering_m(sys: &CoefficientSystem, e0: u64, s: Complex64) -> Result<Complex64> {
    if sys.shifts.len() != 3 {
        return Err(Error::Config(format!("{} has no archimedean parameters", sys.label)));
    }
    let eps = crate::lseries::epsilon_factor(crate::lseries::Degree::Gl3, Some(sys), squarefree_part(e0), s)?;
    let eps = eps / c(squarefree_part(e0) as f64).powc(3.0 * (c(0.5) - s));
    let ln_gamma = |z: Complex64| -> Complex64 { sys.shifts.iter().map(|&mu| ln_gamma_r(z + mu)).sum() };
    let arch = (ln_gamma(c(1.0) - s) - ln_gamma(s)).exp();
    let fin = l_s_factor(sys, e0, c(1.0) - s)? / l_s_factor(sys, e0, s)?;
    Ok(eps * arch * fin)
}

#[derive(Clone, Debug)]
pub struct ResidueConsistency {
    pub r: u64,
    pub s: Complex64,
    pub route: Complex64,
    pub formula: Complex64,
    pub corrected: Complex64,
    pub deviation: f64,
    pub corrected_deviation: f64,
    pub route_terms: usize,
}

/// Route: C·L_S·η(E,r) Σ_{N₀ = r} a(N) N^{−s} ∏_{P|N}(1+1/P)^{−1}.
/// Formula: C·L_S·Σ_{N₂} a(N₂²) N₂^{−2s} ∏(1+1/P)^{−1} · R_r, and the same divided by (1 + 1/r).
pub fn residue_consistency_with(
    route_terms: &[(u64, Complex64)],
    squares: &[(u64, Complex64)],
    pair: Option<&LocalSeriesPair>,
    eta: i8,
    l_s: Complex64,
    h_c: u32,
    s: Complex64,
) -> Result<ResidueConsistency> {
    let r = pair.map(|p| p.r).unwrap_or(1);
    let cst = A_Q / (h_c as f64 * zeta_real(2.0)) * S_PRODUCT * l_s;
    let mut route = CNeumaier::default();
    let mut used = 0;
    for &(n, a) in route_terms {
        if n % 2 == 1 && squarefree_part(n) == r {
            route.add(a * npow(n, s) * prime_weight(n));
            used += 1;
        }
    }
    let route = cst * eta as f64 * route.value();
    let mut sq = CNeumaier::default();
    for &(n, a) in squares {
        sq.add(a * npow(n, 2.0 * s) * prime_weight(n));
    }
    let r1 = cst * sq.value();
    let (formula, corrected) = match pair {
        None => (r1, r1),
        Some(p) => {
            let f = r1 * rr_from_pair(p, eta)?;
            (f, f / (1.0 + 1.0 / p.r as f64))
        }
    };
    let rel = |v: Complex64| (route - v).norm() / v.norm().max(1e-300);
    Ok(ResidueConsistency {
        r,
        s,
        route,
        formula,
        corrected,
        deviation: rel(formula),
        corrected_deviation: rel(corrected),
        route_terms: used,
    })
}

pub fn residue_consistency(
    sys: &CoefficientSystem,
    ctx: &SymbolContext,
    e: RayClass,
    r: u64,
    s: Complex64,
    x: u64,
) -> Result<ResidueConsistency> {
    let table = sys.coefficient_table(x)?;
    let route_terms: Vec<(u64, Complex64)> = (1..=x).step_by(2).map(|n| (n, table[n as usize])).collect();
    let squares = square_coefficients(sys, x)?;
    let e0 = check_class_rep(ctx, e);
    let l_s = l_s_factor(sys, e0, s)?;
    if r == 1 {
        return residue_consistency_with(&route_terms, &squares, None, 1, l_s, ctx.h_c, s);
    }
    let pair = local_pair(sys, r, s, 0)?;
    residue_consistency_with(&route_terms, &squares, Some(&pair), eta_at(ctx, e, r), l_s, ctx.h_c, s)
}
