//! GL(1) and GL(3) L-series: coefficient systems from Satake data, the sym² lift,
//! partial Euler products, ε-factors, and central values through a smoothed
//! approximate functional equation.

pub mod afe;
pub mod cache;
pub mod family;
pub mod tau;

pub use afe::{AfeEngine, AfeValue, CompletedLParams, WFunction};

pub use family::TwistFamily;
pub use tau::{delta_qexp, normalized_tau_at_primes};

use crate::error::{Error, Result};
use crate::ringarith::Sieve;
use num_complex::Complex64;
use num_traits::{Num, One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Satake = [Complex64; 3];

const SATAKE_TOL: f64 = 1e-9;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Unramified Satake data of a GL(3) form with trivial central character,
/// stored for every prime up to `prime_bound` outside `ramified`.
#[derive(Clone, Debug)]
pub struct CoefficientSystem {
    pub label: String,
    pub conductor: u64,
    pub root_number: Complex64,
    pub shifts: Vec<Complex64>,
    pub ramified: Vec<u64>,
    pub self_dual: bool,
    pub synthetic: bool,
    primes: Vec<u64>,
    satake: Vec<Satake>,
}

impl CoefficientSystem {
    pub fn new(label: &str, primes: Vec<u64>, satake: Vec<Satake>, self_dual: bool) -> Result<Self> {
        if primes.len() != satake.len() {
            return Err(Error::Config("prime list and Satake list differ in length".into()));
        }
        if primes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("primes must be strictly increasing".into()));
        }
        for (&p, g) in primes.iter().zip(&satake) {
            let prod = g[0] * g[1] * g[2];
            if (prod - Complex64::one()).norm() > SATAKE_TOL {
                return Err(Error::Domain(format!("central character not trivial at p={p}: product {prod}")));
            }
            let bound = (p as f64).powf(5.0 / 14.0) * (1.0 + SATAKE_TOL);
            if g.iter().any(|x| x.norm() > bound) {
                return Err(Error::Domain(format!("Satake parameter at p={p} exceeds |P|^(5/14)")));
            }
            if self_dual {
                for x in g {
                    let inv = x.inv();
                    if !g.iter().any(|y| (y - inv).norm() < 1e-8) {
                        return Err(Error::Domain(format!("self-dual flag set but Satake multiset at p={p} is not closed under inversion")));
                    }
                }
            }
        }
        Ok(CoefficientSystem {
            label: label.to_string(),
            conductor: 1,
            root_number: Complex64::one(),
            shifts: Vec::new(),
            ramified: Vec::new(),
            self_dual,
            synthetic: false,
            primes,
            satake,
        })
    }

    pub fn from_fn(label: &str, prime_bound: u64, self_dual: bool, f: impl Fn(u64) -> Satake) -> Result<Self> {
        let sieve = Sieve::new(prime_bound);
        let primes = sieve.primes().to_vec();
        let satake = primes.iter().map(|&p| f(p)).collect();
        Self::new(label, primes, satake, self_dual)
    }

    pub fn with_archimedean(mut self, shifts: Vec<Complex64>, conductor: u64, root_number: Complex64) -> Self {
        self.shifts = shifts;
        self.conductor = conductor;
        self.root_number = root_number;
        self
    }

    /// Tempered synthetic system with random unit-modulus Satake triples.
    pub fn synthetic(seed: u64, prime_bound: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sieve = Sieve::new(prime_bound);
        let primes = sieve.primes().to_vec();
        let satake = primes
            .iter()
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let b: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                [Complex64::from_polar(1.0, a), Complex64::from_polar(1.0, b), Complex64::from_polar(1.0, -a - b)]
            })
            .collect();
        let mut sys = Self::new(&format!("synthetic-{seed}"), primes, satake, false).expect("unit Satake data");
        sys.synthetic = true;
        sys
    }

    pub fn prime_bound(&self) -> u64 {
        self.primes.last().copied().unwrap_or(1)
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn satake_table(&self) -> &[Satake] {
        &self.satake
    }

    pub fn satake(&self, p: u64) -> Result<Satake> {
        if self.ramified.contains(&p) {
            return Err(Error::Domain(format!("p={p} is ramified for {}", self.label)));
        }
        match self.primes.binary_search(&p) {
            Ok(i) => Ok(self.satake[i]),
            Err(_) if p > self.prime_bound() => {
                Err(Error::Domain(format!("{} has Satake data only up to {}", self.label, self.prime_bound())))
            }
            Err(_) => Err(Error::Domain(format!("{p} is not a prime of {}", self.label))),
        }
    }

    pub fn set_satake(&mut self, p: u64, g: Satake) -> Result<()> {
        let i = self.primes.binary_search(&p).map_err(|_| Error::Domain(format!("{p} not in table")))?;
        self.satake[i] = g;
        Ok(())
    }

    /// Contragredient: conjugate Satake parameters.
    pub fn dual(&self) -> Self {
        let mut d = self.clone();
        for g in d.satake.iter_mut() {
            for x in g.iter_mut() {
                *x = x.conj();
            }
        }
        d.root_number = self.root_number.conj();
        d.label = format!("{}~", self.label);
        d
    }

    pub fn is_real(&self) -> bool {
        self.satake.iter().all(|g| (g[0] + g[1] + g[2]).im.abs() < 1e-12 && (g[0] * g[1] + g[1] * g[2] + g[2] * g[0]).im.abs() < 1e-12)
    }

    /// a(p^k) for k = 0..=kmax as complete homogeneous symmetric polynomials.
    pub fn prime_power_coeffs(&self, p: u64, kmax: usize) -> Result<Vec<Complex64>> {
        Ok(prime_power_series(&self.satake(p)?, kmax))
    }

    pub fn coeff(&self, n: u64) -> Result<Complex64> {
        if n == 0 {
            return Err(Error::Domain("coefficient index must be positive".into()));
        }
        let mut out = Complex64::one();
        for (p, e) in crate::ringarith::trial_factor(n) {
            out *= self.prime_power_coeffs(p, e as usize)?[e as usize];
        }
        Ok(out)
    }

    pub fn coefficient_table(&self, n_max: u64) -> Result<Vec<Complex64>> {
        self.table_generic(n_max, |z| z)
    }

    /// Coefficient table as reals; only for systems with real coefficients.
    pub fn real_coefficient_table(&self, n_max: u64) -> Result<Vec<f64>> {
        if !self.is_real() {
            return Err(Error::Domain(format!("{} has non-real coefficients", self.label)));
        }
        self.table_generic(n_max, |z| z.re)
    }

    fn table_generic<T: Num + Copy>(&self, n_max: u64, conv: impl Fn(Complex64) -> T) -> Result<Vec<T>> {
        let sieve = Sieve::new(n_max);
        let n = n_max as usize;
        let mut a: Vec<T> = vec![T::zero(); n + 1];
        if n >= 1 {
            a[1] = T::one();
        }
        for m in 2..=n {
            let p = sieve.spf(m as u64) as usize;
            let mut q = p;
            let mut e = 1;
            while (m / q) % p == 0 {
                q *= p;
                e += 1;
            }
            if q == m {
                if self.ramified.contains(&(p as u64)) {
                    a[m] = T::zero();
                } else {
                    let g = self.satake(p as u64)?;
                    a[m] = conv(prime_power_series(&g, e)[e]);
                }
            } else {
                a[m] = a[q] * a[m / q];
            }
        }
        Ok(a)
    }

    pub fn sym2_data(&self, p: u64) -> Result<Sym2Data> {
        let g = self.satake(p)?;
        let mut multiset = Vec::with_capacity(6);
        for i in 0..3 {
            for j in i..3 {
                multiset.push(g[i] * g[j]);
            }
        }
        let b = multiset.iter().sum();
        Ok(Sym2Data { p, b, multiset })
    }

    /// Primes where |a(p)| > p^{3/8}.
    pub fn prop55_violations(&self) -> Vec<(u64, f64)> {
        self.primes
            .iter()
            .zip(&self.satake)
            .filter_map(|(&p, g)| {
                let a = (g[0] + g[1] + g[2]).norm();
                (a > (p as f64).powf(0.375)).then_some((p, a))
            })
            .collect()
    }

    pub fn completed_params(&self, twist_conductor: u64) -> CompletedLParams {
        CompletedLParams {
            shifts: self.shifts.clone(),
            conductor: self.conductor as f64 * (twist_conductor as f64).powi(3),
            root_number: self.root_number,
            degree: 3,
            poles: Vec::new(),
        }
    }
}

pub fn prime_power_series(g: &Satake, kmax: usize) -> Vec<Complex64> {
    let e1 = g[0] + g[1] + g[2];
    let e2 = g[0] * g[1] + g[1] * g[2] + g[2] * g[0];
    let e3 = g[0] * g[1] * g[2];
    let mut h = vec![Complex64::zero(); kmax + 1];
    h[0] = Complex64::one();
    for k in 1..=kmax {
        let mut v = e1 * h[k - 1];
        if k >= 2 {
            v -= e2 * h[k - 2];
        }
        if k >= 3 {
            v += e3 * h[k - 3];
        }
        h[k] = v;
    }
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sym2Data {
    pub p: u64,
    pub b: Complex64,
    pub multiset: Vec<Complex64>,
}

/// Satake triple (α², 1, β²) of the symmetric square from a normalized Hecke eigenvalue.
pub fn sym2_satake(a_f: f64) -> Result<Satake> {
    if a_f.abs() > 2.0 + 1e-12 {
        return Err(Error::Domain(format!("|a_f(p)| = {} exceeds 2: non-tempered input unsupported", a_f.abs())));
    }
    let disc = (4.0 - a_f * a_f).max(0.0);
    let alpha = Complex64::new(a_f / 2.0, disc.sqrt() / 2.0);
    let beta = alpha.conj();
    Ok([alpha * alpha, Complex64::one(), beta * beta])
}

/// Symmetric-square lift from normalized eigenvalues a_f(p), in increasing p.
pub fn gl2_to_sym2(hecke: &[(u64, f64)], label: &str) -> Result<CoefficientSystem> {
    let primes = hecke.iter().map(|&(p, _)| p).collect();
    let satake = hecke.iter().map(|&(_, a)| sym2_satake(a)).collect::<Result<Vec<_>>>()?;
    CoefficientSystem::new(label, primes, satake, true)
}

/// sym² of Δ with Satake data up to `prime_bound`; Γ_R(s+1)Γ_R(s+11)Γ_R(s+12), level 1, ε = 1.
pub fn sym2_delta(prime_bound: u64) -> Result<CoefficientSystem> {
    let sieve = Sieve::new(prime_bound);
    let hecke = normalized_tau_at_primes(prime_bound as usize, sieve.primes());
    Ok(gl2_to_sym2(&hecke, "sym2_delta")?.with_archimedean(sym2_delta_shifts(), 1, Complex64::one()))
}

pub fn sym2_delta_shifts() -> Vec<Complex64> {
    vec![c(1.0), c(11.0), c(12.0)]
}

/// Kronecker character of a positive fundamental discriminant, or the trivial
/// character when `disc = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KroneckerChar {
    pub disc: i64,
}

impl KroneckerChar {
    pub fn at(&self, n: u64) -> i8 {
        crate::ringarith::kronecker(self.disc, n)
    }

    /// Primitive character attached to χ_{D0} for an odd squarefree D0 > 0.
    pub fn attached(d0: u64) -> Self {
        let d = d0 as i64;
        KroneckerChar { disc: if d % 4 == 1 { d } else { 4 * d } }
    }

    pub fn conductor(&self) -> u64 {
        self.disc.unsigned_abs()
    }
}

/// Value and geometric tail estimate of a truncated Euler product.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartialValue {
    pub value: Complex64,
    pub tail: f64,
}

fn prime_tail(sigma: f64, x: u64, degree: f64) -> f64 {
    if sigma <= 1.0 {
        return f64::INFINITY;
    }
    let x = (x.max(2)) as f64;
    degree * x.powf(1.0 - sigma) / ((sigma - 1.0) * x.ln())
}

/// ∏_{p ≤ X, p ∉ S} (1 − χ(p) p^{−w})^{−1}.
pub fn l_partial_gl1(chi: &dyn Fn(u64) -> i8, w: Complex64, s: &[u64], x: u64) -> PartialValue {
    let sieve = Sieve::new(x);
    let mut log = Complex64::zero();
    for &p in sieve.primes() {
        if s.contains(&p) {
            continue;
        }
        let v = chi(p);
        if v != 0 {
            log -= (Complex64::one() - c(v as f64) * c(p as f64).powc(-w)).ln();
        }
    }
    PartialValue { value: log.exp(), tail: prime_tail(w.re, x, 1.0) }
}

/// ∏_{p ≤ X, p ∉ S} ∏_j (1 − γ_j(p) χ(p) p^{−s})^{−1}.
pub fn l_partial_gl3(
    sys: &CoefficientSystem,
    chi: Option<&dyn Fn(u64) -> i8>,
    s: Complex64,
    sset: &[u64],
    x: u64,
) -> Result<PartialValue> {
    let mut log = Complex64::zero();
    for &p in sys.primes_up_to(x) {
        if sset.contains(&p) || sys.ramified.contains(&p) {
            continue;
        }
        let v = chi.map_or(1, |f| f(p));
        if v == 0 {
            continue;
        }
        let u = c(v as f64) * c(p as f64).powc(-s);
        for g in sys.satake(p)? {
            log -= (Complex64::one() - g * u).ln();
        }
    }
    if x > sys.prime_bound() && (x - sys.prime_bound() > 10_000 || (sys.prime_bound() + 1..=x).any(crate::ringarith::is_prime_u64)) {
        return Err(Error::Domain(format!("{} has Satake data only up to {}", sys.label, sys.prime_bound())));
    }
    let bound = 3.0 * 1f64.max(sys.satake.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max));
    Ok(PartialValue { value: log.exp(), tail: prime_tail(s.re, x, bound) })
}

impl CoefficientSystem {
    pub fn primes_up_to(&self, x: u64) -> &[u64] {
        let k = self.primes.partition_point(|&p| p <= x);
        &self.primes[..k]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degree {
    Gl1,
    Gl3,
}

impl Degree {
    pub fn n(&self) -> i32 {
        match self {
            Degree::Gl1 => 1,
            Degree::Gl3 => 3,
        }
    }
}

fn check_squarefree(d0: u64) -> Result<()> {
    if d0 == 0 || crate::ringarith::trial_factor(d0).iter().any(|&(_, e)| e > 1) {
        Err(Error::Domain(format!("{d0} is not squarefree")))
    } else {
        Ok(())
    }
}

pub fn squarefree_part(n: u64) -> u64 {
    crate::ringarith::trial_factor(n).iter().filter(|&&(_, e)| e % 2 == 1).map(|&(p, _)| p).product()
}

/// GL(1): |D0|^{1/2−w}; GL(3): ε_π |D0|^{3(1/2−s)} c(π)^{1/2−s}.
pub fn epsilon_factor(kind: Degree, sys: Option<&CoefficientSystem>, d0: u64, point: Complex64) -> Result<Complex64> {
    check_squarefree(d0)?;
    let half = c(0.5) - point;
    match kind {
        Degree::Gl1 => Ok(c(d0 as f64).powc(half)),
        Degree::Gl3 => {
            let sys = sys.ok_or_else(|| Error::Config("GL(3) ε-factor needs a coefficient system".into()))?;
            Ok(sys.root_number * c(d0 as f64).powc(3.0 * half) * c(sys.conductor as f64).powc(half))
        }
    }
}

/// ε(s, π⊗χ_D)/ε(s, π⊗χ_E) for D, E in the same class of H_C.
pub fn epsilon_class_transport(kind: Degree, sys: Option<&CoefficientSystem>, d: u64, e: u64, point: Complex64) -> Result<Complex64> {
    if d % 2 == 0 || e % 2 == 0 {
        return Err(Error::Domain("D and E must be prime to S".into()));
    }
    if crate::quadchar::class_of_int(d) != crate::quadchar::class_of_int(e) {
        return Err(Error::Domain(format!("{d} and {e} lie in different classes of H_C")));
    }
    let d0 = squarefree_part(d);
    let e0 = squarefree_part(e);
    Ok(epsilon_factor(kind, sys, d0, point)? / epsilon_factor(kind, sys, e0, point)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta_sys() -> CoefficientSystem {
        sym2_delta(2000).unwrap()
    }

    #[test]
    fn sym2_examples() {
        let sys = delta_sys();
        let a2 = sys.coeff(2).unwrap();
        assert!((a2.re - (-0.71875)).abs() < 1e-14 && a2.im.abs() < 1e-14);
        let af3 = 252.0 / 3f64.powf(5.5);
        let a3 = sys.coeff(3).unwrap();
        assert!((a3.re - (af3 * af3 - 1.0)).abs() < 1e-14);
        assert!((a3.re + 0.641_518).abs() < 1e-6);
        assert_eq!(sys.coeff(1).unwrap(), Complex64::one());
        let g = sym2_satake(2.0).unwrap();
        assert!(g.iter().all(|x| (x - Complex64::one()).norm() < 1e-12));
        let g = sym2_satake(0.0).unwrap();
        let a: Complex64 = g.iter().sum();
        assert!((a - c(-1.0)).norm() < 1e-12);
        assert!(sym2_satake(2.1).is_err());
    }

    #[test]
    fn prime_square_matches_series_division() {
        // 1/∏(1−γx) by long division to order 2.
        let x = Complex64::new(1.7, 0.2);
        let g = [x, Complex64::one(), x.inv()];
        let mut num = vec![Complex64::one(), Complex64::zero(), Complex64::zero()];
        for gg in g {
            let mut q = vec![Complex64::zero(); 3];
            for k in 0..3 {
                q[k] = num[k] + if k > 0 { gg * q[k - 1] } else { Complex64::zero() };
            }
            num = q;
        }
        let h = prime_power_series(&g, 2);
        assert!((h[2] - num[2]).norm() < 1e-12);
        assert!((h[1] - num[1]).norm() < 1e-12);
    }

    #[test]
    fn hecke_multiplicativity() {
        let sys = delta_sys();
        let t = sys.coefficient_table(2000).unwrap();
        for m in 1..45u64 {
            for n in 1..45u64 {
                if crate::ringarith::gcd(m, n) == 1 {
                    let lhs = t[(m * n) as usize];
                    assert!((lhs - t[m as usize] * t[n as usize]).norm() < 1e-12);
                }
            }
        }
        for n in [1u64, 12, 360, 1024, 1999] {
            assert!((t[n as usize] - sys.coeff(n).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn ramanujan_gate() {
        let sys = delta_sys();
        for g in sys.satake_table() {
            for x in g {
                assert!((x.norm() - 1.0).abs() < 1e-12);
            }
        }
        let bad = CoefficientSystem::new("bad", vec![2], vec![[c(4.0), c(0.5), c(0.5)]], false);
        assert!(bad.is_err());
    }

    #[test]
    fn partial_l_values() {
        let chi = |p: u64| if p == 2 { 0 } else { 1 };
        let v = l_partial_gl1(&chi, c(2.0), &[], 200_000);
        let expected = 0.75 * std::f64::consts::PI.powi(2) / 6.0;
        assert!((v.value.re - expected).abs() < 1e-5);
        let sys = delta_sys();
        assert_eq!(l_partial_gl3(&sys, None, c(2.0), &[2], 1).unwrap().value, Complex64::one());
        let a = l_partial_gl3(&sys, None, c(2.0), &[], 1000).unwrap().value;
        let b = l_partial_gl3(&sys, None, c(2.0), &[], 2000).unwrap().value;
        assert!((a - b).norm() < 1e-4);
    }

    #[test]
    fn epsilon_examples() {
        assert!((epsilon_factor(Degree::Gl1, None, 5, c(0.5)).unwrap() - c(1.0)).norm() < 1e-15);
        assert!((epsilon_factor(Degree::Gl1, None, 5, c(0.0)).unwrap() - c(5f64.sqrt())).norm() < 1e-14);
        let sys = delta_sys();
        let e = epsilon_factor(Degree::Gl3, Some(&sys), 3, c(0.0)).unwrap();
        assert!((e - c(3f64.powf(1.5))).norm() < 1e-13);
        assert!(epsilon_factor(Degree::Gl1, None, 9, c(0.0)).is_err());
    }

    #[test]
    fn epsilon_transport_examples() {
        let sys = delta_sys();
        assert!((epsilon_class_transport(Degree::Gl3, Some(&sys), 17, 17, c(0.3)).unwrap() - c(1.0)).norm() < 1e-15);
        assert!((epsilon_class_transport(Degree::Gl3, Some(&sys), 17, 1, c(0.5)).unwrap() - c(1.0)).norm() < 1e-15);
        let r = epsilon_class_transport(Degree::Gl1, None, 33, 1, c(0.0)).unwrap();
        assert!((r - c(33f64.sqrt())).norm() < 1e-13);
        assert!(epsilon_class_transport(Degree::Gl1, None, 3, 5, c(0.0)).is_err());
    }

    #[test]
    fn twist_composition() {
        let sys = delta_sys();
        let t = sys.coefficient_table(1000).unwrap();
        let (l, d) = (3i64, 5i64);
        for n in (1..1000u64).filter(|n| n % 2 == 1 && n % 3 != 0 && n % 5 != 0) {
            let lhs = t[n as usize] * c(crate::ringarith::jacobi(l, n) as f64) * c(crate::ringarith::jacobi(d, n) as f64);
            let rhs = t[n as usize] * c(crate::ringarith::jacobi(l * d, n) as f64);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn synthetic_is_tempered_and_not_self_dual() {
        let s = CoefficientSystem::synthetic(7, 500);
        assert!(s.synthetic && !s.self_dual);
        assert!(!s.is_real());
        let d = s.dual();
        let p = 101;
        let a = s.coeff(p).unwrap();
        assert!((d.coeff(p).unwrap() - a.conj()).norm() < 1e-14);
    }
}
