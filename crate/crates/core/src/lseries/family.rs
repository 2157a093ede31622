//! Central values L(1/2, π⊗χ_D) for a real self-dual GL(3) system over odd
//! squarefree D, through the balanced AFE L(1/2) = 2 Σ a_n χ(n) n^{−1/2} V(n/q^{3/2}).
//!
//! Twists by χ_D are even, so the archimedean shifts do not change and the
//! conductor of the primitive twist is q³ with q = D0 or 4·D0.

use super::afe::WFunction;
use super::{CoefficientSystem, KroneckerChar, Satake};
use crate::error::{Error, Result};
use crate::special::ln_gamma_r;
use crate::summation::Neumaier;
use num_complex::Complex64;

const LOG_STEP: f64 = 0.01;
const LOG_LO: f64 = -30.0;
const FINE_STEP: f64 = 1e-4;
const Y_SPLIT: f64 = 0.05;
const BLOCK: usize = 4096;

/// V(y) = W_{1/2}(y) y^{1/2}/γ(1/2): cubic interpolation on a log grid, plus a
/// uniform linear table for y ≥ Y_SPLIT.
#[derive(Clone, Debug)]
pub struct VTable {
    log_vals: Vec<f64>,
    fine: Vec<f64>,
    pub ymax: f64,
}

impl VTable {
    pub fn new(shifts: &[Complex64], v_tol: f64) -> Result<Self> {
        let half = Complex64::new(0.5, 0.0);
        let w = WFunction::new(shifts, half)?;
        let ln_g: f64 = shifts.iter().map(|&mu| ln_gamma_r(half + mu)).sum::<Complex64>().re;
        let v_at = |ln_y: f64| -> f64 { w.eval_ln(ln_y).re * (0.5 * ln_y - ln_g).exp() };
        let mut ln_ymax = 0.0;
        let mut below = 0;
        while ln_ymax < 8.0 {
            if v_at(ln_ymax).abs() < v_tol {
                below += 1;
                if below == 3 {
                    break;
                }
            } else {
                below = 0;
            }
            ln_ymax += 0.01;
        }
        if ln_ymax >= 8.0 {
            return Err(Error::Numeric("V(y) does not decay below the requested tolerance".into()));
        }
        let ymax = ln_ymax.exp();
        let n_log = ((ln_ymax + 0.1 - LOG_LO) / LOG_STEP).ceil() as usize + 4;
        let log_vals: Vec<f64> = (0..n_log).map(|i| v_at(LOG_LO + (i as f64 - 1.0) * LOG_STEP)).collect();
        let mut t = VTable { log_vals, fine: Vec::new(), ymax };
        let n_fine = (ymax / FINE_STEP).ceil() as usize + 2;
        t.fine = (0..n_fine).map(|i| t.eval_log(i as f64 * FINE_STEP)).collect();
        Ok(t)
    }

    /// Four-point Lagrange interpolation in ln y.
    pub fn eval_log(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        let x = (y.ln() - LOG_LO) / LOG_STEP + 1.0;
        if x < 1.0 {
            return self.log_vals[1];
        }
        let i = x.floor() as usize;
        if i + 2 >= self.log_vals.len() {
            return 0.0;
        }
        let f = x - i as f64;
        let (p0, p1, p2, p3) = (self.log_vals[i - 1], self.log_vals[i], self.log_vals[i + 1], self.log_vals[i + 2]);
        -f * (f - 1.0) * (f - 2.0) / 6.0 * p0 + (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0 * p1
            - (f + 1.0) * f * (f - 2.0) / 2.0 * p2
            + (f + 1.0) * f * (f - 1.0) / 6.0 * p3
    }

    #[inline(always)]
    fn eval_fine(&self, x: f64) -> f64 {
        let i = x as usize;
        let f = x - i as f64;
        let a = self.fine[i];
        a + f * (self.fine[i + 1] - a)
    }
}

pub struct TwistFamily {
    pub label: String,
    b: Vec<f64>,
    pub vtab: VTable,
    satake2: Satake,
    pub max_d0: u64,
}

impl TwistFamily {
    /// Family covering odd squarefree D0 ≤ `max_d0`; needs Satake data up to the AFE length.
    pub fn new(sys: &CoefficientSystem, max_d0: u64, v_tol: f64) -> Result<Self> {
        if !sys.self_dual || !sys.is_real() {
            return Err(Error::Config(format!("{} must be real and self-dual for the twist family", sys.label)));
        }
        if sys.shifts.len() != 3 {
            return Err(Error::Config(format!("{} lacks archimedean shifts", sys.label)));
        }
        if sys.conductor != 1 {
            return Err(Error::Unsupported("twist family implemented for level one only".into()));
        }
        let vtab = VTable::new(&sys.shifts, v_tol)?;
        let n_max = Self::required_length(vtab.ymax, max_d0);
        let mut b = sys.real_coefficient_table(n_max)?;
        for (n, x) in b.iter_mut().enumerate().skip(1) {
            *x /= (n as f64).sqrt();
        }
        Ok(TwistFamily { label: sys.label.clone(), b, vtab, satake2: sys.satake(2)?, max_d0 })
    }

    pub fn required_length(ymax: f64, max_d0: u64) -> u64 {
        let q = 4.0 * max_d0 as f64;
        (ymax * q.powf(1.5)).ceil() as u64 + 2
    }

    /// Prime bound a system needs for a family up to `max_d0`.
    pub fn required_prime_bound(shifts: &[Complex64], max_d0: u64, v_tol: f64) -> Result<u64> {
        Ok(Self::required_length(VTable::new(shifts, v_tol)?.ymax, max_d0))
    }

    pub fn terms_for(&self, d0: u64) -> u64 {
        let q = KroneckerChar::attached(d0).conductor() as f64;
        (self.vtab.ymax * q.powf(1.5)) as u64
    }

    /// L(1/2, π⊗χ*) for the primitive character attached to χ_{D0}.
    pub fn primitive_central(&self, d0: u64) -> Result<f64> {
        if d0 % 2 == 0 || d0 > self.max_d0 {
            return Err(Error::Domain(format!("D0 = {d0} outside the family (odd, ≤ {})", self.max_d0)));
        }
        let chi = KroneckerChar::attached(d0);
        let q = chi.conductor() as usize;
        let big_q = (q as f64).powf(1.5);
        let n_end = ((self.vtab.ymax * big_q) as usize).min(self.b.len() - 1);
        let table: Vec<i8> = (0..q as u64).map(|r| if r == 0 { chi.at(q as u64) } else { chi.at(r) }).collect();
        let n_split = ((Y_SPLIT * big_q) as usize).min(n_end);
        let mut total = Neumaier::default();
        for n in 1..=n_split {
            let ch = table[n % q];
            if ch != 0 {
                total.add(ch as f64 * self.b[n] * self.vtab.eval_log(n as f64 / big_q));
            }
        }
        let inv = 1.0 / (big_q * FINE_STEP);
        let mut n = n_split + 1;
        let mut r = n % q;
        while n <= n_end {
            let stop = (n + BLOCK).min(n_end + 1);
            let mut acc = 0.0;
            for m in n..stop {
                let ch = table[r];
                r += 1;
                if r == q {
                    r = 0;
                }
                if ch != 0 {
                    acc += ch as f64 * self.b[m] * self.vtab.eval_fine(m as f64 * inv);
                }
            }
            total.add(acc);
            n = stop;
        }
        Ok(2.0 * total.value())
    }

    /// χ*(2) for the primitive character attached to χ_{D0}.
    pub fn chi_at_two(d0: u64) -> i8 {
        KroneckerChar::attached(d0).at(2)
    }

    /// Euler factor at 2 removed: L^S = L · ∏_j (1 − γ_j(2) χ*(2) 2^{−1/2}).
    pub fn partial_central(&self, d0: u64) -> Result<f64> {
        let l = self.primitive_central(d0)?;
        let x = Self::chi_at_two(d0) as f64 / 2f64.sqrt();
        let f: Complex64 = self.satake2.iter().map(|g| Complex64::new(1.0, 0.0) - g * x).product();
        Ok(l * f.re)
    }

    pub fn coefficient_len(&self) -> usize {
        self.b.len()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{afe::AfeEngine, sym2_delta};
    use super::*;

    #[test]
    fn v_table_limits() {
        let v = VTable::new(&super::super::sym2_delta_shifts(), 1e-8).unwrap();
        assert!((v.eval_log(1e-12) - 1.0).abs() < 1e-9);
        assert!(v.ymax > 4.0 && v.ymax < 12.0);
        for y in [0.06, 0.3, 1.0, 2.5] {
            let fine = v.eval_fine(y / FINE_STEP);
            assert!((fine - v.eval_log(y)).abs() < 1e-8);
        }
    }

    #[test]
    fn matches_generic_engine_and_functional_equation() {
        let max_d0 = 15;
        let shifts = super::super::sym2_delta_shifts();
        let bound = TwistFamily::required_prime_bound(&shifts, max_d0, 1e-10).unwrap();
        let sys = sym2_delta(bound).unwrap();
        let fam = TwistFamily::new(&sys, max_d0, 1e-10).unwrap();
        let coeffs = sys.real_coefficient_table(bound).unwrap();
        for d0 in [1u64, 3, 5, 7] {
            let chi = KroneckerChar::attached(d0);
            let params = sys.completed_params(chi.conductor());
            let a = |n: u64| Complex64::new(coeffs[n as usize] * chi.at(n) as f64, 0.0);
            let half = Complex64::new(0.5, 0.0);
            let eng = AfeEngine::new(params.clone(), half).unwrap();
            let l = eng.l_value(&a, &a, 1.0).unwrap().value;
            let fast = fam.primitive_central(d0).unwrap();
            assert!((l.re - fast).abs() < 1e-6, "d0={d0}: {} vs {fast}", l.re);
            // Λ(0.6) at t = 1 vs Λ(0.4) at t = 1.25 through ε = +1.
            let l6 = AfeEngine::new(params.clone(), Complex64::new(0.6, 0.0)).unwrap().lambda(&a, &a, 1.0).unwrap().value;
            let l4 = AfeEngine::new(params, Complex64::new(0.4, 0.0)).unwrap().lambda(&a, &a, 1.25).unwrap().value;
            assert!((l6 / l4 - 1.0).norm() < 1e-6, "d0={d0}");
        }
    }
}
