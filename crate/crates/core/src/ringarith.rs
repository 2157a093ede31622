//! Ideal arithmetic for the base field: primes, norms, factorization, squarefree
//! decomposition, Möbius function and partial Dedekind zeta values.
//!
//! Over Q an ideal is identified with its positive generator. For quadratic fields
//! prime ideals are described by the residue characteristic, the splitting type and
//! a root of the minimal polynomial of the ring generator modulo p.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::cmp::Ordering;
use std::f64::consts::PI;

/// Smallest-prime-factor sieve.
#[derive(Clone, Debug)]
pub struct Sieve {
    spf: Vec<u32>,
    primes: Vec<u64>,
}

impl Sieve {
    pub fn new(limit: u64) -> Self {
        let n = limit.max(1) as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u64);
            }
            let si = spf[i];
            for &p in &primes {
                let p32 = p as u32;
                if p32 > si || i * p as usize > n {
                    break;
                }
                spf[i * p as usize] = p32;
            }
        }
        Sieve { spf, primes }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn primes_up_to(&self, x: u64) -> &[u64] {
        let k = self.primes.partition_point(|&p| p <= x);
        &self.primes[..k]
    }

    pub fn is_prime(&self, n: u64) -> bool {
        if n <= self.limit() {
            n >= 2 && self.spf[n as usize] as u64 == n
        } else {
            is_prime_u64(n)
        }
    }

    #[inline]
    pub fn spf(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    /// Prime factorization in increasing prime order.
    pub fn factor(&self, mut n: u64) -> Vec<(u64, u32)> {
        if n > self.limit() {
            return trial_factor(n);
        }
        let mut out: Vec<(u64, u32)> = Vec::new();
        while n > 1 {
            let p = self.spf(n);
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        out
    }

    /// `(n0, n1)` with `n = n0 * n1^2` and `n0` squarefree.
    pub fn squarefree_split(&self, n: u64) -> (u64, u64) {
        let mut n0 = 1;
        let mut n1 = 1;
        for (p, e) in self.factor(n) {
            if e % 2 == 1 {
                n0 *= p;
            }
            n1 *= p.pow(e / 2);
        }
        (n0, n1)
    }

    pub fn moebius(&self, n: u64) -> i8 {
        let f = self.factor(n);
        if f.iter().any(|&(_, e)| e > 1) {
            0
        } else if f.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

pub fn trial_factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Jacobi symbol (a/n) for odd positive n.
pub fn jacobi(a: i64, n: u64) -> i8 {
    assert!(n % 2 == 1, "jacobi: even modulus");
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut r = 1i8;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            r = -r;
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            r = -r;
        }
        a %= n;
    }
    if n == 1 {
        r
    } else {
        0
    }
}

/// Kronecker symbol (a/n) for n ≥ 1.
pub fn kronecker(a: i64, n: u64) -> i8 {
    assert!(n >= 1);
    let tz = n.trailing_zeros();
    let odd = n >> tz;
    let mut r = if odd == 1 { 1 } else { jacobi(a, odd) };
    if tz > 0 {
        let two = if a % 2 == 0 {
            0
        } else {
            match a.rem_euclid(8) {
                1 | 7 => 1,
                _ => -1,
            }
        };
        if tz % 2 == 1 {
            r *= two;
        } else if two == 0 {
            r = 0;
        }
    }
    r
}

/// Square root of `a` modulo an odd prime `p` (Tonelli–Shanks); `None` for non-residues.
pub fn sqrt_mod(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

fn is_squarefree_i64(d: i64) -> bool {
    trial_factor(d.unsigned_abs()).iter().all(|&(_, e)| e == 1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Rational,
    Quadratic { d: i64 },
}

/// Certificate that the ring of S-integers has class number one after adding
/// `extra_primes` to S.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SCertificate {
    pub extra_primes: Vec<u64>,
    pub class_number: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaseField {
    pub kind: FieldKind,
    pub discriminant: i64,
    pub zeta_residue: f64,
    pub class_number_over_s: Option<u32>,
    pub certificate: Option<SCertificate>,
}

impl BaseField {
    pub fn rational() -> Self {
        BaseField {
            kind: FieldKind::Rational,
            discriminant: 1,
            zeta_residue: 1.0,
            class_number_over_s: Some(1),
            certificate: None,
        }
    }

    pub fn quadratic(d: i64, certificate: Option<SCertificate>) -> Result<Self> {
        if d == 0 || d == 1 || !is_squarefree_i64(d) {
            return Err(Error::Config(format!("quadratic field parameter {d} is not a squarefree integer other than 0, 1")));
        }
        if let Some(c) = &certificate {
            if c.class_number != 1 {
                return Err(Error::Config(format!("certificate reports class number {} after S-inversion", c.class_number)));
            }
        }
        let disc = if d.rem_euclid(4) == 1 { d } else { 4 * d };
        Ok(BaseField {
            kind: FieldKind::Quadratic { d },
            discriminant: disc,
            zeta_residue: quadratic_l1(disc),
            class_number_over_s: certificate.as_ref().map(|c| c.class_number),
            certificate,
        })
    }

    pub fn degree(&self) -> u32 {
        match self.kind {
            FieldKind::Rational => 1,
            FieldKind::Quadratic { .. } => 2,
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            FieldKind::Rational => "Q".to_string(),
            FieldKind::Quadratic { d } => format!("Q(sqrt({d}))"),
        }
    }

    /// Splitting type of the rational prime p.
    pub fn splitting(&self, p: u64) -> Splitting {
        match self.kind {
            FieldKind::Rational => Splitting::Split,
            FieldKind::Quadratic { .. } => match kronecker(self.discriminant, p) {
                1 => Splitting::Split,
                -1 => Splitting::Inert,
                _ => Splitting::Ramified,
            },
        }
    }

    /// Prime ideals above p in canonical order.
    pub fn primes_above(&self, p: u64) -> Vec<PrimeIdealRec> {
        match self.kind {
            FieldKind::Rational => vec![PrimeIdealRec { norm: p, p, tag: Splitting::Split, generator: p }],
            FieldKind::Quadratic { d } => {
                let tag = self.splitting(p);
                match tag {
                    Splitting::Inert => vec![PrimeIdealRec { norm: p * p, p, tag, generator: 0 }],
                    Splitting::Ramified => {
                        let r = min_poly_roots(d, p)[0];
                        vec![PrimeIdealRec { norm: p, p, tag, generator: r }]
                    }
                    Splitting::Split => min_poly_roots(d, p)
                        .into_iter()
                        .map(|r| PrimeIdealRec { norm: p, p, tag, generator: r })
                        .collect(),
                }
            }
        }
    }
}

/// Roots modulo p of the minimal polynomial of the ring generator ω, where ω = √d
/// for d ≢ 1 (mod 4) and ω = (1+√d)/2 otherwise. Sorted and deduplicated.
fn min_poly_roots(d: i64, p: u64) -> Vec<u64> {
    let (b, c): (i64, i64) = if d.rem_euclid(4) == 1 { (-1, (1 - d) / 4) } else { (0, -d) };
    let mut roots = Vec::new();
    if p == 2 {
        for x in 0..2i64 {
            if (x * x + b * x + c).rem_euclid(2) == 0 {
                roots.push(x as u64);
            }
        }
        return roots;
    }
    // x = (-b ± sqrt(b^2 - 4c)) / 2
    let disc = (b * b - 4 * c).rem_euclid(p as i64) as u64;
    if let Some(s) = sqrt_mod(disc, p) {
        let inv2 = (p + 1) / 2;
        let mb = (-b).rem_euclid(p as i64) as u64;
        for sign in [s, (p - s) % p] {
            roots.push(mul_mod((mb + sign) % p, inv2, p));
        }
    }
    roots.sort_unstable();
    roots.dedup();
    roots
}

/// L(1, χ_Δ) for a fundamental discriminant Δ ≠ 1 by the finite class number formulas.
pub fn quadratic_l1(disc: i64) -> f64 {
    let m = disc.unsigned_abs();
    if disc > 0 {
        let s: f64 = (1..m)
            .map(|a| kronecker(disc, a) as f64 * (PI * a as f64 / m as f64).sin().ln())
            .sum();
        -s / (m as f64).sqrt()
    } else {
        let s: f64 = (1..m).map(|a| kronecker(disc, a) as f64 * a as f64).sum();
        -PI * s / (m as f64).powf(1.5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeIdealRec {
    pub norm: u64,
    pub p: u64,
    pub tag: Splitting,
    pub generator: u64,
}

impl PrimeIdealRec {
    fn key(&self) -> (u64, Splitting, u64) {
        (self.norm, self.tag, self.generator)
    }
}

impl PartialOrd for PrimeIdealRec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PrimeIdealRec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IdealRec {
    pub factors: Vec<(PrimeIdealRec, u32)>,
    pub norm: u64,
}

impl IdealRec {
    pub fn unit() -> Self {
        IdealRec { factors: Vec::new(), norm: 1 }
    }

    pub fn from_factors(mut factors: Vec<(PrimeIdealRec, u32)>) -> Self {
        factors.retain(|&(_, e)| e > 0);
        factors.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(PrimeIdealRec, u32)> = Vec::with_capacity(factors.len());
        for (p, e) in factors {
            match merged.last_mut() {
                Some(last) if last.0 == p => last.1 += e,
                _ => merged.push((p, e)),
            }
        }
        let norm = merged.iter().map(|&(p, e)| p.norm.pow(e)).product();
        IdealRec { factors: merged, norm }
    }

    /// The principal ideal (n) of Z.
    pub fn rational(n: u64) -> Self {
        assert!(n >= 1);
        let f = trial_factor(n)
            .into_iter()
            .map(|(p, e)| (PrimeIdealRec { norm: p, p, tag: Splitting::Split, generator: p }, e))
            .collect();
        IdealRec::from_factors(f)
    }

    pub fn mul(&self, other: &IdealRec) -> IdealRec {
        let mut f = self.factors.clone();
        f.extend(other.factors.iter().cloned());
        IdealRec::from_factors(f)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn divides(&self, other: &IdealRec) -> bool {
        self.factors.iter().all(|(p, e)| other.exponent(p) >= *e)
    }

    pub fn exponent(&self, p: &PrimeIdealRec) -> u32 {
        self.factors.iter().find(|(q, _)| q == p).map(|&(_, e)| e).unwrap_or(0)
    }

    pub fn is_coprime_to(&self, other: &IdealRec) -> bool {
        self.factors.iter().all(|(p, _)| other.exponent(p) == 0)
    }

    pub fn rational_primes(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.factors.iter().map(|(p, _)| p.p).collect();
        v.dedup();
        v
    }

    /// Positive generator of an ideal of Z; `None` if any factor is not a rational prime.
    pub fn as_rational(&self) -> Option<u64> {
        if self.factors.iter().all(|(p, _)| p.norm == p.p && p.generator == p.p) {
            Some(self.norm)
        } else {
            None
        }
    }
}

impl PartialOrd for IdealRec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for IdealRec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.norm.cmp(&other.norm).then_with(|| {
            let a: Vec<_> = self.factors.iter().map(|(p, e)| (p.key(), *e)).collect();
            let b: Vec<_> = other.factors.iter().map(|(p, e)| (p.key(), *e)).collect();
            a.cmp(&b)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SFDecomposition {
    pub d0: IdealRec,
    pub d1: IdealRec,
}

impl SFDecomposition {
    pub fn recompose(&self) -> IdealRec {
        self.d0.mul(&self.d1).mul(&self.d1)
    }
}

pub fn squarefree_split(d: &IdealRec) -> SFDecomposition {
    let d0 = IdealRec::from_factors(d.factors.iter().filter(|(_, e)| e % 2 == 1).map(|&(p, _)| (p, 1)).collect());
    let d1 = IdealRec::from_factors(d.factors.iter().map(|&(p, e)| (p, e / 2)).collect());
    SFDecomposition { d0, d1 }
}

pub fn moebius(d: &IdealRec) -> i8 {
    if !d.is_squarefree() {
        0
    } else if d.factors.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Prime ideals prime to S with norm at most `x`, in canonical order.
pub fn prime_ideals(field: &BaseField, s: &[u64], x: u64) -> Vec<PrimeIdealRec> {
    let sieve = Sieve::new(x);
    let mut out = Vec::new();
    for &p in sieve.primes() {
        if s.contains(&p) {
            continue;
        }
        for q in field.primes_above(p) {
            if q.norm <= x {
                out.push(q);
            }
        }
    }
    out.sort();
    out
}

/// Every integral ideal prime to S with norm at most `x`, ordered by norm and then
/// by the canonical prime order of its factorization.
pub fn enumerate_ideals(field: &BaseField, s: &[u64], x: u64) -> Result<Vec<IdealRec>> {
    if x < 1 {
        return Err(Error::Domain("norm bound must be at least 1".into()));
    }
    match field.kind {
        FieldKind::Rational => {
            let sieve = Sieve::new(x);
            let mut out = Vec::new();
            for n in 1..=x {
                let f = sieve.factor(n);
                if f.iter().any(|(p, _)| s.contains(p)) {
                    continue;
                }
                let factors = f
                    .into_iter()
                    .map(|(p, e)| (PrimeIdealRec { norm: p, p, tag: Splitting::Split, generator: p }, e))
                    .collect();
                out.push(IdealRec { factors, norm: n });
            }
            Ok(out)
        }
        FieldKind::Quadratic { .. } => {
            let primes = prime_ideals(field, s, x);
            let mut out = Vec::new();
            let mut stack: Vec<(PrimeIdealRec, u32)> = Vec::new();
            build_products(&primes, 0, 1, x, &mut stack, &mut out);
            out.sort();
            Ok(out)
        }
    }
}

fn build_products(
    primes: &[PrimeIdealRec],
    start: usize,
    norm: u64,
    x: u64,
    stack: &mut Vec<(PrimeIdealRec, u32)>,
    out: &mut Vec<IdealRec>,
) {
    out.push(IdealRec { factors: stack.clone(), norm });
    for i in start..primes.len() {
        let q = primes[i];
        if norm.saturating_mul(q.norm) > x {
            break;
        }
        let mut e = 1;
        let mut nn = norm * q.norm;
        while nn <= x {
            stack.push((q, e));
            build_products(primes, i + 1, nn, x, stack, out);
            stack.pop();
            e += 1;
            match nn.checked_mul(q.norm) {
                Some(v) => nn = v,
                None => break,
            }
        }
    }
}

/// Truncated Euler product ∏_{|P| ≤ x, P ∤ S} (1 − |P|^{−w})^{−1}.
pub fn zeta_partial(field: &BaseField, w: Complex64, s: &[u64], x: u64) -> Result<Complex64> {
    if w.re <= 1.0 {
        return Err(Error::Domain(format!("zeta_partial needs Re(w) > 1, got {}", w.re)));
    }
    let mut log = Complex64::new(0.0, 0.0);
    for q in prime_ideals(field, s, x) {
        let u = Complex64::new(q.norm as f64, 0.0).powc(-w);
        log -= (Complex64::new(1.0, 0.0) - u).ln();
    }
    Ok(log.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legendre_euler(a: i64, p: u64) -> i8 {
        let r = pow_mod(a.rem_euclid(p as i64) as u64, (p - 1) / 2, p);
        if r == 0 {
            0
        } else if r == 1 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn sieve_factorization_roundtrip() {
        let s = Sieve::new(10_000);
        for n in 1..=10_000u64 {
            let f = s.factor(n);
            assert_eq!(f.iter().map(|&(p, e)| p.pow(e)).product::<u64>(), n);
            assert!(f.iter().all(|&(p, _)| is_prime_u64(p)));
        }
        assert_eq!(s.primes_up_to(100).len(), 25);
    }

    #[test]
    fn jacobi_matches_euler_criterion_on_primes() {
        let s = Sieve::new(500);
        for &p in s.primes().iter().skip(1) {
            for a in -50i64..200 {
                assert_eq!(jacobi(a, p), legendre_euler(a, p), "a={a} p={p}");
            }
        }
    }

    #[test]
    fn kronecker_at_two() {
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(17, 2), 1);
        assert_eq!(kronecker(12, 2), 0);
        assert_eq!(kronecker(-3, 4), 1);
    }

    #[test]
    fn tonelli_shanks() {
        for p in [3u64, 5, 13, 17, 97, 101, 65537] {
            for a in 0..60 {
                if let Some(r) = sqrt_mod(a, p) {
                    assert_eq!(mul_mod(r, r, p), a % p);
                } else {
                    assert_eq!(legendre_euler(a as i64, p), -1);
                }
            }
        }
    }

    #[test]
    fn rational_enumeration() {
        let q = BaseField::rational();
        let ids = enumerate_ideals(&q, &[2], 10).unwrap();
        let norms: Vec<u64> = ids.iter().map(|i| i.norm).collect();
        assert_eq!(norms, vec![1, 3, 5, 7, 9]);
        assert_eq!(enumerate_ideals(&q, &[2], 1).unwrap(), vec![IdealRec::unit()]);
        assert!(enumerate_ideals(&q, &[2], 0).is_err());
    }

    #[test]
    fn quadratic_enumeration_matches_splitting_scan() {
        for d in [5i64, -1, 2, -3, 13, -7] {
            let f = BaseField::quadratic(d, None).unwrap();
            let ids = enumerate_ideals(&f, &[2], 1000).unwrap();
            let mut counts = vec![0u32; 1001];
            for i in &ids {
                counts[i.norm as usize] += 1;
            }
            for n in 1..=1000u64 {
                let expected: i64 = if n % 2 == 0 {
                    0
                } else {
                    (1..=n).filter(|k| n % k == 0).map(|k| kronecker(f.discriminant, k) as i64).sum()
                };
                assert_eq!(counts[n as usize] as i64, expected, "d={d} n={n}");
            }
            for w in ids.windows(2) {
                assert!(w[0] < w[1]);
            }
        }
        let f = BaseField::quadratic(5, None).unwrap();
        let eleven: Vec<_> = enumerate_ideals(&f, &[2], 11).unwrap().into_iter().filter(|i| i.norm == 11).collect();
        assert_eq!(eleven.len(), 2);
        assert_ne!(eleven[0], eleven[1]);
    }

    #[test]
    fn squarefree_split_examples() {
        let sp = squarefree_split(&IdealRec::rational(45));
        assert_eq!((sp.d0.norm, sp.d1.norm), (5, 3));
        let sp = squarefree_split(&IdealRec::unit());
        assert_eq!((sp.d0.norm, sp.d1.norm), (1, 1));
        let sp = squarefree_split(&IdealRec::rational(27 * 25));
        assert_eq!((sp.d0.norm, sp.d1.norm), (3, 15));
        let q = BaseField::rational();
        for id in enumerate_ideals(&q, &[2], 10_000).unwrap() {
            assert_eq!(squarefree_split(&id).recompose(), id);
        }
    }

    #[test]
    fn moebius_examples_and_brute_force() {
        assert_eq!(moebius(&IdealRec::rational(15)), 1);
        assert_eq!(moebius(&IdealRec::rational(9)), 0);
        assert_eq!(moebius(&IdealRec::rational(105)), -1);
        let s = Sieve::new(100_000);
        for n in 1..=100_000u64 {
            let mut m = n;
            let mut mu = 1i8;
            let mut p = 2;
            while p * p <= m {
                if m % p == 0 {
                    m /= p;
                    if m % p == 0 {
                        mu = 0;
                        break;
                    }
                    mu = -mu;
                }
                p += 1;
            }
            if mu != 0 && m > 1 {
                mu = -mu;
            }
            assert_eq!(s.moebius(n), mu, "n={n}");
        }
    }

    #[test]
    fn zeta_partial_values() {
        let q = BaseField::rational();
        let two = Complex64::new(2.0, 0.0);
        let oracle: f64 = crate::summation::sum_f64((1..2_000_000u64).rev().map(|n| 1.0 / (n as f64 * n as f64)));
        let z = zeta_partial(&q, two, &[], 200_000).unwrap();
        assert!((z.re - oracle).abs() < 1e-5);
        assert!((z.re - PI * PI / 6.0).abs() < 1e-5);
        assert_eq!(zeta_partial(&q, two, &[], 1).unwrap(), Complex64::new(1.0, 0.0));
        let z2 = zeta_partial(&q, two, &[2], 200_000).unwrap();
        assert!((z2.re - 0.75 * PI * PI / 6.0).abs() < 1e-5);
        assert!(zeta_partial(&q, Complex64::new(1.0, 0.0), &[], 10).is_err());
        let mut prev = 0.0;
        for x in [10u64, 100, 1000, 10_000] {
            let v = zeta_partial(&q, two, &[], x).unwrap().re;
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn quadratic_residues_at_one() {
        // h(-4) = 1, w = 4: L(1) = π/4; h(5) = 1, ε = (1+√5)/2: L(1) = 2 log ε / √5.
        assert!((quadratic_l1(-4) - PI / 4.0).abs() < 1e-12);
        let eps = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((quadratic_l1(5) - 2.0 * eps.ln() / 5f64.sqrt()).abs() < 1e-12);
        assert!((quadratic_l1(-3) - PI / (3.0 * 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn norm_multiplicativity() {
        let f = BaseField::quadratic(-7, None).unwrap();
        let ids = enumerate_ideals(&f, &[2], 300).unwrap();
        for a in ids.iter().take(40) {
            for b in ids.iter().take(40) {
                assert_eq!(a.mul(b).norm, a.norm * b.norm);
            }
        }
    }
}
