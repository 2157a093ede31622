//! Smoothed approximate functional equation.
//!
//! For Λ(s) = N^{s/2} γ(s) L(s), γ(s) = ∏ Γ_R(s + μ_j), with Λ(s) = ε Λ̃(1 − s):
//!
//!   Λ(s) = t^{−s} Σ a_n W_s(n/(√N t)) + ε t^{1−s} Σ ã_n W_{1−s}(n t/√N) − Σ_ρ r_ρ t^{s−ρ}/(ρ − s)
//!
//! where W_s(u) = (2πi)^{−1} ∫_{(c)} γ(s+z) u^{−(s+z)} dz/z and (ρ, r_ρ) run over the
//! poles of Λ. The balance parameter t is free; values at two different t agree
//! only when conductor, root number and shifts are right.

use crate::error::{Error, Result};
use crate::special::ln_gamma_r;
use num_complex::Complex64;
use num_traits::Zero;
use std::f64::consts::PI;

const NODE_REL_CUTOFF: f64 = 1e-22;
const MAX_NODES: usize = 2_000_000;
const RESYNC: usize = 128;

#[derive(Clone, Debug, PartialEq)]
pub struct CompletedLParams {
    pub shifts: Vec<Complex64>,
    pub conductor: f64,
    pub root_number: Complex64,
    pub degree: usize,
    /// Poles of Λ with their residues.
    pub poles: Vec<(Complex64, Complex64)>,
}

impl CompletedLParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.conductor > 0.0 && self.conductor.is_finite()) {
            return Err(Error::Config(format!("conductor must be positive, got {}", self.conductor)));
        }
        if (self.root_number.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("root number {} is not of modulus one", self.root_number)));
        }
        if self.shifts.len() != self.degree {
            return Err(Error::Config(format!(
                "degree {} needs {} archimedean shifts, got {}",
                self.degree,
                self.degree,
                self.shifts.len()
            )));
        }
        Ok(())
    }

    pub fn ln_gamma_factor(&self, s: Complex64) -> Complex64 {
        self.shifts.iter().map(|&mu| ln_gamma_r(s + mu)).sum()
    }

    /// N^{s/2} γ(s).
    pub fn completion(&self, s: Complex64) -> Complex64 {
        (0.5 * s * self.conductor.ln() + self.ln_gamma_factor(s)).exp()
    }

    /// Dirichlet character of conductor q and parity `odd`.
    pub fn dirichlet(q: u64, odd: bool) -> Self {
        let mu = if odd { 1.0 } else { 0.0 };
        let poles = if q == 1 {
            vec![(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)), (Complex64::zero(), Complex64::new(-1.0, 0.0))]
        } else {
            Vec::new()
        };
        CompletedLParams {
            shifts: vec![Complex64::new(mu, 0.0)],
            conductor: q as f64,
            root_number: Complex64::new(1.0, 0.0),
            degree: 1,
            poles,
        }
    }
}

#[derive(Clone, Debug)]
struct Kernel {
    c: f64,
    h: f64,
    k_lo: i64,
    g: Vec<Complex64>,
    ln_gmax: f64,
}

impl Kernel {
    fn new(shifts: &[Complex64], s: Complex64, c: f64) -> Result<Self> {
        let dist = shifts.iter().map(|mu| c + (s + mu).re).fold(c, f64::min);
        if dist <= 0.0 {
            return Err(Error::Numeric(format!("contour Re z = {c} does not separate z = 0 from the Gamma poles at s = {s}")));
        }
        let h = dist.min(1.0) / 16.0;
        let g_at = |k: i64| -> Complex64 {
            let z = Complex64::new(c, k as f64 * h);
            let lg: Complex64 = shifts.iter().map(|&mu| ln_gamma_r(s + z + mu)).sum();
            lg.exp() / z
        };
        let mut right = vec![g_at(0)];
        let mut left: Vec<Complex64> = Vec::new();
        let mut gmax = right[0].norm();
        let grow = |side: &mut Vec<Complex64>, sign: i64, gmax: &mut f64| -> Result<()> {
            let mut k = 1i64;
            loop {
                let v = g_at(sign * k);
                let m = v.norm();
                if m > *gmax {
                    *gmax = m;
                }
                side.push(v);
                if (m < NODE_REL_CUTOFF * *gmax && k as f64 * h > 2.0) || m == 0.0 {
                    break;
                }
                k += 1;
                if side.len() > MAX_NODES {
                    return Err(Error::Numeric("Mellin kernel does not decay along the contour".into()));
                }
            }
            Ok(())
        };
        grow(&mut right, 1, &mut gmax)?;
        grow(&mut left, -1, &mut gmax)?;
        let k_lo = -(left.len() as i64);
        let mut g: Vec<Complex64> = left.into_iter().rev().collect();
        g.extend(right);
        if !gmax.is_finite() || gmax == 0.0 {
            return Err(Error::Numeric(format!("Gamma factor degenerate on contour Re z = {c}")));
        }
        Ok(Kernel { c, h, k_lo, g, ln_gmax: gmax.ln() })
    }

    /// (h/2π) Σ_k g_k u^{−(s+c+i k h)}.
    fn eval(&self, s: Complex64, ln_u: f64) -> Complex64 {
        let rot = Complex64::from_polar(1.0, -self.h * ln_u);
        let mut acc = Complex64::zero();
        let mut phase = Complex64::zero();
        for (i, &gk) in self.g.iter().enumerate() {
            if i % RESYNC == 0 {
                let k = self.k_lo + i as i64;
                phase = Complex64::from_polar(1.0, -(k as f64) * self.h * ln_u);
            }
            acc += gk * phase;
            phase *= rot;
        }
        let pre = (-(s + self.c) * ln_u).exp();
        acc * pre * (self.h / (2.0 * PI))
    }
}

/// W_s(u) evaluated on the contour that minimises cancellation for the given u.
#[derive(Clone, Debug)]
pub struct WFunction {
    s: Complex64,
    shifts: Vec<Complex64>,
    kernels: Vec<Kernel>,
}

impl WFunction {
    pub fn new(shifts: &[Complex64], s: Complex64) -> Result<Self> {
        let mut kernels = Vec::new();
        for c in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
            match Kernel::new(shifts, s, c) {
                Ok(k) => kernels.push(k),
                Err(Error::Numeric(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        if kernels.is_empty() {
            return Err(Error::Numeric(format!("no admissible contour for s = {s}")));
        }
        Ok(WFunction { s, shifts: shifts.to_vec(), kernels })
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    pub fn shifts(&self) -> &[Complex64] {
        &self.shifts
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        self.eval_ln(u.ln())
    }

    pub fn eval_ln(&self, ln_u: f64) -> Complex64 {
        let k = self
            .kernels
            .iter()
            .min_by(|a, b| {
                let ba = a.ln_gmax - (self.s.re + a.c) * ln_u;
                let bb = b.ln_gmax - (self.s.re + b.c) * ln_u;
                ba.partial_cmp(&bb).unwrap()
            })
            .unwrap();
        k.eval(self.s, ln_u)
    }

    /// Smallest u ≥ 1 beyond which |W(u)|·u·scale stays below `tol`.
    pub fn cutoff(&self, scale: f64, tol: f64) -> f64 {
        let mut ln_u = 0.0;
        let mut below = 0;
        let mut first_below = 0.0;
        while ln_u < 12.0 {
            let v = self.eval_ln(ln_u).norm() * ln_u.exp() * scale;
            if v < tol {
                if below == 0 {
                    first_below = ln_u;
                }
                below += 1;
                if below >= 5 {
                    return first_below.exp();
                }
            } else {
                below = 0;
            }
            ln_u += 0.02;
        }
        ln_u.exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AfeValue {
    pub value: Complex64,
    pub terms: usize,
    pub last_term: f64,
}

pub struct AfeEngine {
    pub params: CompletedLParams,
    pub s: Complex64,
    w_s: WFunction,
    w_dual: WFunction,
    pub tolerance: f64,
}

impl AfeEngine {
    pub fn new(params: CompletedLParams, s: Complex64) -> Result<Self> {
        params.validate()?;
        let w_s = WFunction::new(&params.shifts, s)?;
        let w_dual = WFunction::new(&params.shifts, Complex64::new(1.0, 0.0) - s)?;
        Ok(AfeEngine { params, s, w_s, w_dual, tolerance: 1e-15 })
    }

    /// Default number of terms on each side for balance parameter t.
    pub fn default_lengths(&self, t: f64) -> Result<(usize, usize)> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Numeric(format!("balance parameter t = {t} must be positive")));
        }
        let q = self.params.conductor.sqrt();
        let scale = self.params.completion(self.s).norm().max(1.0);
        let u1 = self.w_s.cutoff(q * t, self.tolerance * scale);
        let u2 = self.w_dual.cutoff(q / t, self.tolerance * scale);
        let n1 = (u1 * q * t).ceil() as usize + 1;
        let n2 = (u2 * q / t).ceil() as usize + 1;
        if n1 > 500_000_000 || n2 > 500_000_000 {
            return Err(Error::Numeric(format!("smoothed sums need {n1} and {n2} terms; parameters do not converge at desk scale")));
        }
        Ok((n1, n2))
    }

    pub fn lambda(&self, a: &dyn Fn(u64) -> Complex64, a_dual: &dyn Fn(u64) -> Complex64, t: f64) -> Result<AfeValue> {
        let (n1, n2) = self.default_lengths(t)?;
        self.lambda_with_lengths(a, a_dual, t, n1, n2)
    }

    pub fn lambda_with_lengths(
        &self,
        a: &dyn Fn(u64) -> Complex64,
        a_dual: &dyn Fn(u64) -> Complex64,
        t: f64,
        n1: usize,
        n2: usize,
    ) -> Result<AfeValue> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Numeric(format!("balance parameter t = {t} must be positive")));
        }
        let q = self.params.conductor.sqrt();
        let one = Complex64::new(1.0, 0.0);
        let mut first = crate::summation::CNeumaier::default();
        let mut last = 0.0;
        for n in 1..=n1 as u64 {
            let term = a(n) * self.w_s.eval(n as f64 / (q * t));
            last = term.norm();
            first.add(term);
        }
        let mut second = crate::summation::CNeumaier::default();
        for n in 1..=n2 as u64 {
            let term = a_dual(n) * self.w_dual.eval(n as f64 * t / q);
            last = last.max(term.norm());
            second.add(term);
        }
        let ln_t = t.ln();
        let mut value = (-self.s * ln_t).exp() * first.value()
            + self.params.root_number * ((one - self.s) * ln_t).exp() * second.value();
        for &(rho, r) in &self.params.poles {
            if (rho - self.s).norm() < 1e-12 {
                return Err(Error::Numeric(format!("evaluation point {} is a pole", self.s)));
            }
            value -= r * ((rho - self.s) * ln_t).exp() / (rho - self.s);
        }
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::Numeric("non-finite smoothed sum".into()));
        }
        Ok(AfeValue { value, terms: n1 + n2, last_term: last })
    }

    /// L(s) = Λ(s)/(N^{s/2} γ(s)).
    pub fn l_value(&self, a: &dyn Fn(u64) -> Complex64, a_dual: &dyn Fn(u64) -> Complex64, t: f64) -> Result<AfeValue> {
        let mut v = self.lambda(a, a_dual, t)?;
        v.value /= self.params.completion(self.s);
        Ok(v)
    }
}

/// L(point) from coefficient streams through the smoothed AFE with t = 1.
pub fn central_value(
    params: &CompletedLParams,
    a: &dyn Fn(u64) -> Complex64,
    a_dual: &dyn Fn(u64) -> Complex64,
    point: Complex64,
) -> Result<AfeValue> {
    let eng = AfeEngine::new(params.clone(), point)?;
    eng.l_value(a, a_dual, 1.0)
}
