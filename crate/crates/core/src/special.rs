//! Gamma function and the power-exponential integrals behind the
//! candidates and their optimizers.

use crate::quadrature::{integrate, integrate_to_infinity};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for `x >= 1/2` (Lanczos, g = 7).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
    }
    if x == 1.0 || x == 2.0 {
        return 1.0;
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

const QUAD_ABS: f64 = 1e-15;
const QUAD_REL: f64 = 1e-14;

/// `∫_0^1 t^(p-1) e^t dt`.
pub fn power_exp_unit(p: f64) -> f64 {
    if p == 1.0 {
        return std::f64::consts::E - 1.0;
    }
    integrate(|t: f64| t.powf(p - 1.0) * t.exp(), 0.0, 1.0, QUAD_ABS, QUAD_REL).value
}

/// `E(a) = e^a ∫_a^∞ |r|^(p-1) sgn(r) e^(-r) dr` for `p >= 1`.
///
/// For `a >= 0` this is `∫_0^∞ (a+t)^(p-1) e^(-t) dt`; for `a < 0` it is
/// `e^a Γ(p) - ∫_0^|a| (|a|-t)^(p-1) e^(-t) dt`. Neither form cancels.
pub fn tail_weight(a: f64, p: f64) -> f64 {
    let q = p - 1.0;
    if q == 0.0 {
        // ∫_a^∞ sgn(r) e^{-r} dr
        return if a >= 0.0 { 1.0 } else { 2.0 * a.exp() - 1.0 };
    }
    if a == 0.0 {
        return gamma(p);
    }
    if a > 0.0 {
        return integrate_to_infinity(|t: f64| (a + t).powf(q) * (-t).exp(), 0.0, QUAD_ABS, QUAD_REL).value;
    }
    let b = -a;
    let inner = integrate(|t: f64| (b - t).powf(q) * (-t).exp(), 0.0, b, QUAD_ABS, QUAD_REL).value;
    a.exp() * gamma(p) - inner
}

/// `-x - ln(1 - x)` without cancellation near 0.
pub fn neg_x_minus_log1m(x: f64) -> f64 {
    if x.abs() < 0.25 {
        // sum_{k>=2} x^k / k
        let mut term = x * x;
        let mut sum = 0.0;
        let mut k = 2.0;
        while k < 80.0 {
            let add = term / k;
            sum += add;
            if add.abs() <= f64::EPSILON * 1e-3 * sum.abs() {
                break;
            }
            term *= x;
            k += 1.0;
        }
        sum
    } else {
        -x - (-x).ln_1p()
    }
}
