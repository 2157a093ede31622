//! Ramanujan τ(n) from Δ = q·(η³/q^{1/8})^8 with η³/q^{1/8} = Σ_k (−1)^k (2k+1) q^{k(k+1)/2}.
//!
//! Small orders are expanded exactly in i128. Large orders use three 62-bit NTT
//! primes and Garner reconstruction.

use crate::error::{Error, Result};
use crate::ringarith::is_prime_u64;
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

const SMALL_LIMIT: usize = 4096;
/// |τ(n)| < 2^126 for n ≤ this bound.
const I128_LIMIT: usize = 4_000_000;

fn jacobi_triple_terms(len: usize) -> Vec<(usize, i64)> {
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let e = k * (k + 1) / 2;
        if e >= len {
            break;
        }
        let c = (2 * k + 1) as i64;
        out.push((e, if k % 2 == 0 { c } else { -c }));
        k += 1;
    }
    out
}

/// τ(1..=K) as a vector indexed from 0 (entry i is τ(i+1)).
pub fn delta_qexp(k: usize) -> Result<Vec<i128>> {
    if k == 0 {
        return Err(Error::Domain("delta_qexp needs K >= 1".into()));
    }
    if k <= SMALL_LIMIT {
        return Ok(delta_qexp_exact(k));
    }
    if k > I128_LIMIT {
        return Err(Error::Domain(format!("tau(n) overflows i128 beyond n = {I128_LIMIT}; use tau_at_primes")));
    }
    let res = NttResidues::compute(k);
    Ok((0..k).map(|i| res.reconstruct(i).to_i128().expect("tau fits i128")).collect())
}

pub(crate) fn delta_qexp_exact(k: usize) -> Vec<i128> {
    let j = jacobi_triple_terms(k);
    let mut j2 = vec![0i128; k];
    for &(a, ca) in &j {
        for &(b, cb) in &j {
            if a + b < k {
                j2[a + b] += (ca * cb) as i128;
            }
        }
    }
    let sq = |v: &[i128]| -> Vec<i128> {
        let mut out = vec![0i128; k];
        for (i, &x) in v.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (jj, &y) in v[..k - i].iter().enumerate() {
                out[i + jj] += x * y;
            }
        }
        out
    };
    sq(&sq(&j2))
}

/// τ(p)/p^{11/2} for all primes p ≤ K, in increasing order.
pub fn normalized_tau_at_primes(k: usize, primes: &[u64]) -> Vec<(u64, f64)> {
    let primes: Vec<u64> = primes.iter().copied().filter(|&p| p as usize <= k).collect();
    if k <= SMALL_LIMIT {
        let t = delta_qexp_exact(k);
        return primes.iter().map(|&p| (p, t[p as usize - 1] as f64 / (p as f64).powf(5.5))).collect();
    }
    let res = NttResidues::compute(k);
    primes
        .iter()
        .map(|&p| {
            let v = res.reconstruct(p as usize - 1);
            (p, bigint_to_f64(&v) / (p as f64).powf(5.5))
        })
        .collect()
}

fn bigint_to_f64(v: &BigInt) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug)]
struct Montgomery {
    p: u64,
    n_prime: u64,
    r2: u64,
}

impl Montgomery {
    fn new(p: u64) -> Self {
        let mut inv = 1u64;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = (1u128 << 64) % p as u128;
        let r2 = (r * r % p as u128) as u64;
        Montgomery { p, n_prime: inv.wrapping_neg(), r2 }
    }

    #[inline(always)]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.n_prime);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline(always)]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    fn to_mont(&self, a: u64) -> u64 {
        self.mul(a % self.p, self.r2)
    }

    fn from_mont(&self, a: u64) -> u64 {
        self.redc(a as u128)
    }

    #[inline(always)]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline(always)]
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    fn pow(&self, mut b: u64, mut e: u64) -> u64 {
        let mut r = self.to_mont(1);
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }
}

const TWO_ADICITY: u32 = 27;

/// The three largest primes c·2^27 + 1 below 2^62.
pub(crate) fn ntt_primes() -> [u64; 3] {
    let mut out = [0u64; 3];
    let mut found = 0;
    let mut c = (1u64 << 62) >> TWO_ADICITY;
    while found < 3 {
        c -= 1;
        let p = (c << TWO_ADICITY) + 1;
        if is_prime_u64(p) {
            out[found] = p;
            found += 1;
        }
    }
    out
}

struct Ntt {
    m: Montgomery,
    root: u64,
}

impl Ntt {
    fn new(p: u64) -> Self {
        let m = Montgomery::new(p);
        let mut x = 2u64;
        let root = loop {
            let xm = m.to_mont(x);
            if m.from_mont(m.pow(xm, (p - 1) / 2)) == p - 1 {
                break m.pow(xm, (p - 1) >> TWO_ADICITY);
            }
            x += 1;
        };
        Ntt { m, root }
    }

    fn transform(&self, a: &mut [u64], inverse: bool) {
        let n = a.len();
        let log = n.trailing_zeros();
        assert!(n.is_power_of_two() && log <= TWO_ADICITY);
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                a.swap(i, j);
            }
        }
        let m = &self.m;
        let mut len = 2;
        let mut tw = vec![0u64; n / 2];
        while len <= n {
            let mut w = m.pow(self.root, 1u64 << (TWO_ADICITY - len.trailing_zeros()));
            if inverse {
                w = m.pow(w, m.p - 2);
            }
            let half = len / 2;
            tw[0] = m.to_mont(1);
            for k in 1..half {
                tw[k] = m.mul(tw[k - 1], w);
            }
            for chunk in a.chunks_exact_mut(len) {
                let (lo, hi) = chunk.split_at_mut(half);
                for k in 0..half {
                    let u = lo[k];
                    let v = m.mul(hi[k], tw[k]);
                    lo[k] = m.add(u, v);
                    hi[k] = m.sub(u, v);
                }
            }
            len <<= 1;
        }
        if inverse {
            let inv_n = m.pow(m.to_mont(n as u64), m.p - 2);
            for x in a.iter_mut() {
                *x = m.mul(*x, inv_n);
            }
        }
    }

    /// In-place truncated square: a[..k] ← (a[..k])² mod x^k.
    fn square_truncated(&self, a: &mut Vec<u64>, k: usize) {
        let size = (2 * k).next_power_of_two();
        a.truncate(k);
        a.resize(size, 0);
        self.transform(a, false);
        for x in a.iter_mut() {
            *x = self.m.mul(*x, *x);
        }
        self.transform(a, true);
        a.truncate(k);
    }
}

struct NttResidues {
    primes: [u64; 3],
    residues: [Vec<u64>; 3],
}

impl NttResidues {
    fn compute(k: usize) -> Self {
        let primes = ntt_primes();
        let j = jacobi_triple_terms(k);
        let residues = primes.map(|p| {
            let ntt = Ntt::new(p);
            let m = &ntt.m;
            let mut j2 = vec![0i64; k];
            for (ia, &(a, ca)) in j.iter().enumerate() {
                for &(b, cb) in &j[ia..] {
                    if a + b >= k {
                        break;
                    }
                    let w = if a == b { 1 } else { 2 };
                    j2[a + b] += w * ca * cb;
                }
            }
            let mut v: Vec<u64> = j2.iter().map(|&x| m.to_mont(x.rem_euclid(p as i64) as u64)).collect();
            ntt.square_truncated(&mut v, k);
            ntt.square_truncated(&mut v, k);
            v.iter_mut().for_each(|x| *x = m.from_mont(*x));
            v.shrink_to_fit();
            v
        });
        NttResidues { primes, residues }
    }

    /// Garner reconstruction of coefficient i as a centred integer.
    fn reconstruct(&self, i: usize) -> BigInt {
        let [p1, p2, p3] = self.primes;
        let r1 = self.residues[0][i];
        let r2 = self.residues[1][i];
        let r3 = self.residues[2][i];
        let inv = |a: u64, p: u64| crate::ringarith::pow_mod(a % p, p - 2, p);
        let mm = crate::ringarith::mul_mod;
        let x2 = mm((r2 + p2 - r1 % p2) % p2, inv(p1, p2), p2);
        let p1p2_mod3 = mm(p1 % p3, p2 % p3, p3);
        let t = (r1 % p3 + mm(p1 % p3, x2 % p3, p3)) % p3;
        let x3 = mm((r3 + p3 - t) % p3, inv(p1p2_mod3, p3), p3);
        let bp1 = BigInt::from(p1);
        let bp2 = BigInt::from(p2);
        let bp3 = BigInt::from(p3);
        let modulus = &bp1 * &bp2 * &bp3;
        let mut v = BigInt::from(r1) + &bp1 * BigInt::from(x2) + &bp1 * &bp2 * BigInt::from(x3);
        if &v * 2 > modulus {
            v -= &modulus;
        }
        debug_assert!(!(v.is_zero() && i == 0));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // ∏(1−q^n)^24 expanded factor by factor.
    fn tau_by_product(k: usize) -> Vec<i128> {
        let mut c = vec![0i128; k];
        c[0] = 1;
        for n in 1..k {
            for _ in 0..24 {
                for i in (n..k).rev() {
                    c[i] -= c[i - n];
                }
            }
        }
        c
    }

    #[test]
    fn first_values() {
        let t = delta_qexp(10).unwrap();
        assert_eq!(t[..6], [1, -24, 252, -1472, 4830, -6048]);
        assert_eq!(t[5], t[1] * t[2]);
        assert!(delta_qexp(0).is_err());
    }

    #[test]
    fn exact_path_matches_product_oracle() {
        let k = 600;
        assert_eq!(delta_qexp_exact(k), tau_by_product(k));
    }

    #[test]
    fn ntt_primes_are_prime_with_two_adicity() {
        for p in ntt_primes() {
            assert!(is_prime_u64(p));
            assert!(p < 1 << 62);
            assert_eq!((p - 1) % (1 << TWO_ADICITY), 0);
        }
    }

    #[test]
    fn ntt_path_matches_exact_path() {
        let k = 3000;
        let res = NttResidues::compute(k);
        let exact = delta_qexp_exact(k);
        for i in 0..k {
            assert_eq!(res.reconstruct(i).to_i128().unwrap(), exact[i], "n={}", i + 1);
        }
    }

    #[test]
    fn hecke_relations_on_large_range() {
        let t = delta_qexp(20_000).unwrap();
        let tau = |n: usize| t[n - 1];
        for (m, n) in [(3usize, 7usize), (11, 1000), (101, 103), (5, 3999)] {
            assert_eq!(tau(m * n), tau(m) * tau(n));
        }
        // τ(p²) = τ(p)² − p^11
        for p in [2usize, 3, 5, 7, 11, 13, 101, 139] {
            assert_eq!(tau(p * p), tau(p) * tau(p) - (p as i128).pow(11));
        }
    }
}
