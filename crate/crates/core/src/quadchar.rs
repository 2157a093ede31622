//! Quadratic symbols χ_D on ideals prime to S, the group H_C = I(S)/I(S)²P_C,
//! the reciprocity table η and class sieving.
//!
//! Over Q: S = {∞, 2}, C = (8), H_C ≅ (Z/8)^× with generator representatives
//! 3 and 5. An ideal D = D0·D1² decomposes as (m)·E·G² with G = D1, E the
//! representative of the class of D0 among {1, 3, 5, 15} and m = D0/E ≡ 1 mod 8.

use crate::error::{Error, Result};
use crate::ringarith::{jacobi, BaseField, FieldKind, Sieve};
use num_rational::Ratio;
use std::fmt::Write as _;

const FORMAT_TAG: &str = "twistlab-symbols";
const FORMAT_VERSION: u32 = 1;

/// Element of H_C as an exponent vector over the generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RayClass {
    pub bits: [u8; 2],
}

impl RayClass {
    pub const ONE: RayClass = RayClass { bits: [0, 0] };

    pub fn from_index(i: usize) -> Self {
        RayClass { bits: [(i & 1) as u8, ((i >> 1) & 1) as u8] }
    }

    pub fn index(&self) -> usize {
        self.bits[0] as usize | ((self.bits[1] as usize) << 1)
    }

    pub fn mul(&self, other: &RayClass) -> RayClass {
        RayClass { bits: [self.bits[0] ^ other.bits[0], self.bits[1] ^ other.bits[1]] }
    }
}

/// Character of H_C given by its ±1 values on the generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassChar {
    pub signs: [i8; 2],
}

impl ClassChar {
    pub const TRIVIAL: ClassChar = ClassChar { signs: [1, 1] };

    pub fn all() -> [ClassChar; 4] {
        [
            ClassChar { signs: [1, 1] },
            ClassChar { signs: [-1, 1] },
            ClassChar { signs: [1, -1] },
            ClassChar { signs: [-1, -1] },
        ]
    }

    pub fn at(&self, c: RayClass) -> i8 {
        let mut v = 1;
        for j in 0..2 {
            if c.bits[j] == 1 {
                v *= self.signs[j];
            }
        }
        v
    }

    /// Value on an odd positive integer (the class of n is n mod 8).
    pub fn at_int(&self, n: u64) -> i8 {
        self.at(class_of_int(n))
    }

    pub fn mul(&self, o: &ClassChar) -> ClassChar {
        ClassChar { signs: [self.signs[0] * o.signs[0], self.signs[1] * o.signs[1]] }
    }

    pub fn is_trivial(&self) -> bool {
        self.signs == [1, 1]
    }
}

/// Class of an odd integer in (Z/8)^×: 1 ↦ [0,0], 3 ↦ [1,0], 5 ↦ [0,1], 7 ↦ [1,1].
pub fn class_of_int(n: u64) -> RayClass {
    match n % 8 {
        1 => RayClass { bits: [0, 0] },
        3 => RayClass { bits: [1, 0] },
        5 => RayClass { bits: [0, 1] },
        7 => RayClass { bits: [1, 1] },
        _ => panic!("class_of_int: {n} is even"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EtaTable {
    pub values: [[i8; 4]; 4],
}

impl EtaTable {
    pub fn get(&self, a: RayClass, b: RayClass) -> i8 {
        self.values[a.index()][b.index()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolContext {
    pub field: String,
    pub s_primes: Vec<u64>,
    pub modulus: u64,
    pub generators: Vec<u64>,
    pub h_c: u32,
    pub eta: EtaTable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub m: Ratio<i64>,
    pub e: u64,
    pub g: u64,
}

fn check_prime_to_s(n: u64, what: &str) -> Result<()> {
    if n == 0 || n % 2 == 0 {
        Err(Error::Domain(format!("{what} = {n} is not prime to S = {{inf, 2}}")))
    } else {
        Ok(())
    }
}

pub fn build_context(field: &BaseField) -> Result<SymbolContext> {
    match field.kind {
        FieldKind::Rational => {}
        FieldKind::Quadratic { .. } => {
            if field.certificate.is_none() {
                return Err(Error::Config(format!(
                    "{} requires an S-set certificate to build quadratic symbols",
                    field.name()
                )));
            }
            return Err(Error::Unsupported(format!(
                "quadratic symbols over {} are not implemented; only enumeration is available",
                field.name()
            )));
        }
    }
    let eta = compute_eta()?;
    Ok(SymbolContext {
        field: "Q".into(),
        s_primes: vec![2],
        modulus: 8,
        generators: vec![3, 5],
        h_c: 4,
        eta,
    })
}

/// η by brute force over witness pairs of coprime primes in each class pair.
fn compute_eta() -> Result<EtaTable> {
    let sieve = Sieve::new(2000);
    let mut by_class: [Vec<u64>; 4] = Default::default();
    by_class[0].push(1);
    for &p in sieve.primes().iter().skip(1) {
        let c = class_of_int(p).index();
        if by_class[c].len() < 21 {
            by_class[c].push(p);
        }
    }
    let mut values = [[0i8; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut seen = 0i8;
            let mut count = 0;
            for &d in &by_class[a] {
                for &n in &by_class[b] {
                    if d == n || count >= 20 {
                        continue;
                    }
                    let v = jacobi(d as i64, n) * jacobi(n as i64, d);
                    if seen == 0 {
                        seen = v;
                    } else if seen != v {
                        return Err(Error::Structural(format!("eta witnesses disagree on classes {a}, {b}")));
                    }
                    count += 1;
                }
            }
            values[a][b] = seen;
        }
    }
    Ok(EtaTable { values })
}

impl SymbolContext {
    pub fn class_of(&self, d: u64) -> Result<RayClass> {
        check_prime_to_s(d, "D")?;
        Ok(class_of_int(d))
    }

    /// Representative E of a class, as the generator m_E.
    pub fn representative(&self, c: RayClass) -> u64 {
        let mut e = 1;
        for (j, &g) in self.generators.iter().enumerate() {
            if c.bits[j] == 1 {
                e *= g;
            }
        }
        e
    }

    pub fn classes(&self) -> Vec<RayClass> {
        (0..self.h_c as usize).map(RayClass::from_index).collect()
    }

    pub fn decompose(&self, d: u64) -> Result<Decomposition> {
        check_prime_to_s(d, "D")?;
        let (d0, d1) = squarefree_parts(d);
        let e = self.representative(class_of_int(d0));
        Ok(Decomposition { m: Ratio::new(d0 as i64, e as i64), e, g: d1 })
    }

    /// χ_D(N) = ((m·m_E)/N).
    pub fn chi(&self, d: u64, n: u64) -> Result<i8> {
        check_prime_to_s(d, "D")?;
        check_prime_to_s(n, "N")?;
        let dec = self.decompose(d)?;
        let top = dec.m * Ratio::from_integer(dec.e as i64);
        debug_assert!(top.is_integer());
        Ok(jacobi(top.to_integer(), n))
    }

    pub fn eta(&self, a: RayClass, b: RayClass) -> i8 {
        self.eta.get(a, b)
    }

    /// The expansion δ_E = Σ_ρ ρ(E)^{-1}/h_C · ρ.
    pub fn sieve_delta(&self, e: RayClass) -> Vec<(ClassChar, Ratio<i64>)> {
        ClassChar::all()
            .iter()
            .map(|&rho| (rho, Ratio::new(rho.at(e) as i64, self.h_c as i64)))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "format = {FORMAT_TAG}").unwrap();
        writeln!(out, "version = {FORMAT_VERSION}").unwrap();
        writeln!(out, "field = {}", self.field).unwrap();
        let s: Vec<String> = std::iter::once("inf".to_string()).chain(self.s_primes.iter().map(|p| p.to_string())).collect();
        writeln!(out, "s = {}", s.join(",")).unwrap();
        writeln!(out, "modulus = {}", self.modulus).unwrap();
        let g: Vec<String> = self.generators.iter().map(|g| g.to_string()).collect();
        writeln!(out, "generators = {}", g.join(",")).unwrap();
        writeln!(out, "h_c = {}", self.h_c).unwrap();
        for a in 0..4 {
            let row: Vec<String> = self.eta.values[a].iter().map(|v| v.to_string()).collect();
            writeln!(out, "eta.{a} = {}", row.join(",")).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv = std::collections::BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("malformed line '{line}'")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| kv.get(k).cloned().ok_or_else(|| Error::Config(format!("missing key '{k}'")));
        if get("format")? != FORMAT_TAG {
            return Err(Error::Config("not a symbol context file".into()));
        }
        let version: u32 = get("version")?.parse().map_err(|_| Error::Config("bad version".into()))?;
        if version != FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported symbol context version {version}")));
        }
        let ints = |s: String| -> Result<Vec<i64>> {
            s.split(',')
                .map(|t| t.trim().parse::<i64>().map_err(|_| Error::Config(format!("bad integer '{t}'"))))
                .collect()
        };
        let s_field = get("s")?;
        let s_primes = s_field
            .split(',')
            .filter(|t| t.trim() != "inf")
            .map(|t| t.trim().parse::<u64>().map_err(|_| Error::Config(format!("bad prime '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        let mut values = [[0i8; 4]; 4];
        for (a, row) in values.iter_mut().enumerate() {
            let r = ints(get(&format!("eta.{a}"))?)?;
            if r.len() != 4 {
                return Err(Error::Config("eta row must have 4 entries".into()));
            }
            for b in 0..4 {
                row[b] = r[b] as i8;
            }
        }
        let ctx = SymbolContext {
            field: get("field")?,
            s_primes,
            modulus: get("modulus")?.parse().map_err(|_| Error::Config("bad modulus".into()))?,
            generators: ints(get("generators")?)?.into_iter().map(|g| g as u64).collect(),
            h_c: get("h_c")?.parse().map_err(|_| Error::Config("bad h_c".into()))?,
            eta: EtaTable { values },
        };
        if ctx.field != "Q" || ctx.generators.len() != 2 || ctx.h_c != 4 {
            return Err(Error::Unsupported("only the context over Q can be loaded".into()));
        }
        Ok(ctx)
    }
}

fn squarefree_parts(mut n: u64) -> (u64, u64) {
    let mut d0 = 1;
    let mut d1 = 1;
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e % 2 == 1 {
            d0 *= p;
        }
        d1 *= p.pow(e / 2);
        p += 1;
    }
    (d0 * n, d1)
}

/// Reciprocity sign for odd positive integers: (−1)^{(a−1)/2·(b−1)/2}.
#[inline]
pub fn eta_int(a: u64, b: u64) -> i8 {
    if a % 4 == 3 && b % 4 == 3 {
        -1
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> SymbolContext {
        build_context(&BaseField::rational()).unwrap()
    }

    #[test]
    fn context_over_q() {
        let c = ctx();
        assert_eq!(c.h_c, 4);
        assert_eq!(c.generators, vec![3, 5]);
        assert_eq!(c.class_of(17).unwrap(), c.class_of(1).unwrap());
        assert_eq!(c.class_of(15).unwrap(), c.class_of(7).unwrap());
        // brute-force group table of (Z/8)^×
        for a in [1u64, 3, 5, 7] {
            for b in [1u64, 3, 5, 7] {
                assert_eq!(class_of_int(a).mul(&class_of_int(b)), class_of_int(a * b));
            }
        }
    }

    #[test]
    fn decomposition_examples() {
        let c = ctx();
        let d = c.decompose(17).unwrap();
        assert_eq!((d.m, d.e, d.g), (Ratio::from_integer(17), 1, 1));
        let d = c.decompose(9).unwrap();
        assert_eq!((d.m, d.e, d.g), (Ratio::from_integer(1), 1, 3));
        let d = c.decompose(3).unwrap();
        assert_eq!((d.m, d.e, d.g), (Ratio::from_integer(1), 3, 1));
        let d = c.decompose(7).unwrap();
        assert_eq!(d.e, 15);
        assert_eq!(d.m, Ratio::new(7, 15));
        assert!(c.decompose(6).is_err());
    }

    #[test]
    fn m_is_one_mod_eight() {
        let c = ctx();
        for n in (1..2000u64).step_by(2) {
            let d = c.decompose(n).unwrap();
            let (num, den) = (*d.m.numer() as u64, *d.m.denom() as u64);
            assert_eq!(num % 8, den % 8, "n={n}");
            assert_eq!(num * d.e * d.g * d.g, n * den);
        }
    }

    #[test]
    fn chi_examples() {
        let c = ctx();
        assert_eq!(c.chi(5, 3).unwrap(), -1);
        assert_eq!(c.chi(45, 7).unwrap(), -1);
        assert_eq!(c.chi(45, 7).unwrap(), c.chi(5, 7).unwrap());
        for d in (1..200u64).step_by(2) {
            assert_eq!(c.chi(d, 1).unwrap(), 1);
        }
        assert!(c.chi(2, 3).is_err());
    }

    #[test]
    fn eta_examples() {
        let c = ctx();
        let (one, three, five) = (class_of_int(1), class_of_int(3), class_of_int(5));
        for k in c.classes() {
            assert_eq!(c.eta(one, k), 1);
        }
        assert_eq!(c.eta(three, three), -1);
        assert_eq!(c.eta(three, five), 1);
    }

    #[test]
    fn sieve_delta_examples() {
        let c = ctx();
        let d = c.sieve_delta(RayClass::ONE);
        assert_eq!(d.len(), 4);
        assert!(d.iter().all(|(_, co)| *co == Ratio::new(1, 4)));
        let apply = |e: RayClass, n: u64| -> Ratio<i64> {
            c.sieve_delta(e).iter().map(|(rho, co)| co * Ratio::from_integer(rho.at_int(n) as i64)).sum()
        };
        assert_eq!(apply(class_of_int(3), 3), Ratio::from_integer(1));
        assert_eq!(apply(class_of_int(3), 5), Ratio::from_integer(0));
    }

    #[test]
    fn text_roundtrip() {
        let c = ctx();
        let t = c.to_text();
        let back = SymbolContext::from_text(&t).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), t);
        assert!(SymbolContext::from_text(&t.replace("version = 1", "version = 9")).is_err());
    }

    #[test]
    fn quadratic_field_needs_certificate() {
        let f = BaseField::quadratic(5, None).unwrap();
        assert_eq!(build_context(&f).unwrap_err().code(), "E_CONFIG");
    }
}
