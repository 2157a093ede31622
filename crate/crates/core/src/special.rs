//! Gamma function on the complex plane (Lanczos, g = 607/128, fifteen terms).

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS: [f64; 15] = [
    0.999_999_999_999_997_091_82,
    57.156_235_665_862_923_517,
    -59.597_960_355_475_491_248,
    14.136_097_974_741_747_174,
    -0.491_913_816_097_620_199_78,
    0.339_946_499_848_118_886_99e-4,
    0.465_236_289_270_485_756_65e-4,
    -0.983_744_753_048_795_646_77e-4,
    0.158_088_703_224_912_488_84e-3,
    -0.210_264_441_724_104_883_19e-3,
    0.217_439_618_115_212_643_20e-3,
    -0.164_318_106_536_763_890_22e-3,
    0.844_182_239_838_527_432_93e-4,
    -0.261_908_384_015_814_086_70e-4,
    0.368_991_826_595_316_227_04e-5,
];

/// ln Γ(z). The imaginary part is continuous along vertical lines but is not
/// normalised to the principal branch; only `exp` of the result is meaningful.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let ln_pi = Complex64::new(PI.ln(), 0.0);
        return ln_pi - ln_sin_pi(z) - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// ln sin(πz) without overflow for large |Im z|.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return ln_sin_pi(z.conj()).conj();
    }
    let i = Complex64::new(0.0, 1.0);
    let e = (2.0 * PI * i * z).exp();
    -i * PI * z + Complex64::new(0.5, 0.0).ln() + i * (PI / 2.0) + (Complex64::new(1.0, 0.0) - e).ln()
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

pub fn gamma_real(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).re
}

/// ln Γ_R(s) = ln(π^{-s/2} Γ(s/2)).
pub fn ln_gamma_r(s: Complex64) -> Complex64 {
    -0.5 * s * PI.ln() + ln_gamma(0.5 * s)
}

pub fn gamma_r(s: Complex64) -> Complex64 {
    ln_gamma_r(s).exp()
}

const BERNOULLI_2K: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// ζ(s) by Euler–Maclaurin with head length 20, for s ≠ 1 and moderate |Im s|.
pub fn zeta(s: Complex64) -> Complex64 {
    const N: u32 = 20;
    let n = N as f64;
    let mut head = Complex64::new(0.0, 0.0);
    for k in 1..N {
        head += (-s * (k as f64).ln()).exp();
    }
    let n_s = (-s * n.ln()).exp();
    let mut total = head + n_s * n / (s - 1.0) + 0.5 * n_s;
    // rising = s(s+1)...(s+2k-2) / (2k)!, times N^{-s-2k+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut npow = n_s / n;
    for (k, b) in BERNOULLI_2K.iter().enumerate() {
        total += b / fact * rising * npow;
        let k2 = 2.0 * (k as f64 + 1.0);
        rising *= (s + k2 - 1.0) * (s + k2);
        fact *= (k2 + 1.0) * (k2 + 2.0);
        npow /= n * n;
    }
    total
}

pub fn zeta_real(x: f64) -> f64 {
    zeta(Complex64::new(x, 0.0)).re
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Stirling series after shifting the argument past |z| = 30.
    fn stirling_ln_gamma(z: Complex64) -> Complex64 {
        let mut shift = Complex64::new(0.0, 0.0);
        let mut w = z;
        while w.norm() < 30.0 {
            shift += w.ln();
            w += 1.0;
        }
        let b = [
            1.0 / 12.0,
            -1.0 / 360.0,
            1.0 / 1260.0,
            -1.0 / 1680.0,
            1.0 / 1188.0,
            -691.0 / 360360.0,
            1.0 / 156.0,
        ];
        let mut series = Complex64::new(0.0, 0.0);
        let w2 = w * w;
        let mut wp = w;
        for coef in b {
            series += coef / wp;
            wp *= w2;
        }
        (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift
    }

    #[test]
    fn factorials_and_half() {
        let mut f = 1.0;
        for n in 1..15 {
            let g = gamma_real(n as f64);
            assert!((g - f).abs() / f < 1e-13, "n={n} {g} {f}");
            f *= n as f64;
        }
        assert!((gamma_real(0.5) - PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn agrees_with_stirling_oracle() {
        for &(re, im) in &[(0.5, 0.0), (0.5, 14.1), (3.25, -7.5), (12.5, 30.0), (6.0, 40.0), (1.1, 0.3)] {
            let a = gamma(c(re, im));
            let b = stirling_ln_gamma(c(re, im)).exp();
            assert!((a - b).norm() / b.norm() < 1e-13, "z=({re},{im}) {a} {b}");
        }
    }

    #[test]
    fn reflection_and_critical_line_modulus() {
        for t in [0.0, 1.0, 5.0, 20.0] {
            let g = gamma(c(0.5, t));
            let expected = PI / (PI * t).cosh();
            assert!((g.norm_sqr() - expected).abs() / expected < 1e-12);
        }
        let z = c(-2.3, 1.7);
        let lhs = gamma(z) * gamma(c(1.0, 0.0) - z);
        let rhs = PI / (PI * z).sin();
        assert!((lhs - rhs).norm() / rhs.norm() < 1e-12);
    }

    #[test]
    fn duplication_formula() {
        let z = c(1.3, 4.2);
        let lhs = gamma(z) * gamma(z + 0.5);
        let rhs = 2f64.powf(1.0 - 2.0 * z.re) * PI.sqrt() * gamma(2.0 * z) * Complex64::new(0.0, -2.0 * z.im * 2f64.ln()).exp();
        assert!((lhs - rhs).norm() / rhs.norm() < 1e-12);
    }

    #[test]
    fn zeta_values() {
        let pi = std::f64::consts::PI;
        assert!((zeta_real(2.0) - pi * pi / 6.0).abs() < 1e-14);
        assert!((zeta_real(4.0) - pi.powi(4) / 90.0).abs() < 1e-14);
        assert!((zeta_real(0.5) + 1.460_354_508_809_586_8).abs() < 1e-12);
        // Laurent expansion near the pole: ζ(1+h) ≈ 1/h + γ.
        let h = 1e-4;
        assert!((zeta_real(1.0 + h) - 1.0 / h - 0.577_215_664_901_532_9).abs() < 1e-4);
        let z = zeta(c(0.5, 14.134_725_141_734_693));
        assert!(z.norm() < 1e-9);
    }
}
