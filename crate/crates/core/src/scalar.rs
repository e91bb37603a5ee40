//! Scalar constants: the tangency abscissae xi±(C), k(C) and its inverse,
//! omega(p) = eps0(p), and the closed-form bounds built from them.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{brent, expand_left, newton_bisect};
use crate::special::{gamma, neg_x_minus_log1m, power_exp_unit};
use crate::tolerance::Tolerance;

/// C together with the two roots of `e^{-xi} = C (1 - xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainParams {
    pub c: f64,
    pub xi_minus: f64,
    pub xi_plus: f64,
}

impl DomainParams {
    pub fn new(c: f64) -> Result<Self> {
        solve_xi(c, &Tolerance::default())
    }

    /// `xi+ - xi-`, the width of the chord between the tangency points.
    pub fn gap(&self) -> f64 {
        self.xi_plus - self.xi_minus
    }

    pub fn is_trivial(&self) -> bool {
        self.c == 1.0
    }

    /// `1 - xi+`, computed as `e^{-xi+}/C` to keep relative accuracy for large C.
    pub fn one_minus_xi_plus(&self) -> f64 {
        (-self.xi_plus).exp() / self.c
    }

    /// `1 - xi-`, equal to `e^{-xi-}/C`.
    pub fn one_minus_xi_minus(&self) -> f64 {
        1.0 - self.xi_minus
    }
}

// h(xi) = -xi - ln(1 - xi) - ln C; its zeros are xi±
fn root_equation(xi: f64, ln_c: f64) -> (f64, f64) {
    (neg_x_minus_log1m(xi) - ln_c, xi / (1.0 - xi))
}

pub fn solve_xi(c: f64, tol: &Tolerance) -> Result<DomainParams> {
    if !c.is_finite() || c < 1.0 {
        return Err(Error::Domain(format!("C must be finite and >= 1, got {c}")));
    }
    if c == 1.0 {
        return Ok(DomainParams { c, xi_minus: 0.0, xi_plus: 0.0 });
    }
    let ln_c = (c - 1.0).ln_1p();
    let h = |xi: f64| root_equation(xi, ln_c);

    // h(hi) = 1 + ln 2 - hi > 0
    let hi = 1.0 - 0.5 / (E * c);
    let xi_plus = newton_bisect(h, 0.0, hi, tol)?;

    let lo = expand_left(|xi| h(xi).0, -1.0, 0.0, 64)?;
    let xi_minus = newton_bisect(h, lo, 0.0, tol)?;

    Ok(DomainParams { c, xi_minus, xi_plus })
}

/// `k(C) = 2 (1-xi-)(1-xi+)(C-1)/(xi+ - xi-)`, with `k(1) = 0`.
pub fn k_of_c(params: &DomainParams) -> f64 {
    if params.is_trivial() {
        return 0.0;
    }
    2.0 * params.one_minus_xi_minus() * params.one_minus_xi_plus() * (params.c - 1.0) / params.gap()
}

/// Equivalent form `2 (1 - 1/C) / (e^{xi+} - e^{xi-})`.
pub fn k_of_c_alt(params: &DomainParams) -> f64 {
    if params.is_trivial() {
        return 0.0;
    }
    2.0 * (1.0 - 1.0 / params.c) / (params.xi_plus.exp() - params.xi_minus.exp())
}

pub fn k_inverse(eps: f64, tol: &Tolerance) -> Result<f64> {
    if !(0.0..2.0 / E).contains(&eps) {
        return Err(Error::Domain(format!("k^-1 needs 0 <= eps < 2/e, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(1.0);
    }
    let upper = 1.0 / (1.0 - 0.5 * E * eps);
    let f = |c: f64| match solve_xi(c, tol) {
        Ok(p) => k_of_c(&p) - eps,
        Err(_) => f64::NAN,
    };
    brent(f, 1.0, upper, tol)
}

/// `omega(p) = [p/e (Γ(p) - ∫_0^1 t^{p-1} e^t dt) + 1]^{1/p}`.
pub fn omega(p: f64) -> Result<f64> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::Domain(format!("omega needs p >= 1, got {p}")));
    }
    let inner = p / E * (gamma(p) - power_exp_unit(p)) + 1.0;
    Ok(inner.powf(1.0 / p))
}

/// The sharp John-Nirenberg constant for `1 <= p <= 2`.
pub fn eps0(p: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::Domain(format!("eps0 is known only for 1 <= p <= 2, got {p}")));
    }
    omega(p)
}

/// Threshold `e^{p-2}/(p-1)` above which b_{p,C} is the Bellman function.
pub fn c_threshold(p: f64) -> f64 {
    if p <= 1.0 {
        return 1.0;
    }
    (p - 2.0).exp() / (p - 1.0)
}

/// Sharp `C(eps, p)` on its window `[(2-p) eps0, eps0)`.
pub fn jn_sharp_c(eps: f64, p: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::Domain(format!("sharp C(eps, p) needs 1 < p <= 2, got {p}")));
    }
    let e0 = eps0(p)?;
    let lo = (2.0 - p) * e0;
    if !(eps >= lo && eps < e0) {
        return Err(Error::Range { what: "eps", value: eps, lo, hi: e0 });
    }
    let r = eps / e0;
    Ok((-r).exp() / (1.0 - r))
}

/// Two-sided bracket `(lower, upper)` for `C(eps, 1)`.
pub fn jn_bound_p1(eps: f64, tol: &Tolerance) -> Result<(f64, f64)> {
    if !(0.0..2.0 / E).contains(&eps) {
        return Err(Error::Domain(format!("C(eps, 1) bracket needs 0 <= eps < 2/e, got {eps}")));
    }
    let r = 0.5 * E * eps;
    let lower = (-r).exp() / (1.0 - r);
    let upper = k_inverse(eps, tol)?;
    Ok((lower, upper.max(lower)))
}

/// `(p-1)^{-1/(2-p)}`, equal to `e` at `p = 2`.
pub fn weak_type_prefactor(p: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::Domain(format!("weak-type bound needs 1 < p <= 2, got {p}")));
    }
    let s = 2.0 - p;
    if s == 0.0 {
        return Ok(E);
    }
    Ok((-(-s).ln_1p() / s).exp())
}

pub fn weak_type_bound(p: f64, lambda: f64, norm: f64) -> Result<f64> {
    let pre = weak_type_prefactor(p)?;
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::Domain(format!("lambda must be >= 0, got {lambda}")));
    }
    if !(norm > 0.0) {
        return Err(Error::Domain(format!("norm must be > 0, got {norm}")));
    }
    Ok(pre * (-eps0(p)? * lambda / norm).exp())
}

/// Lower bound for the distance to `L^inf`; both inputs may be infinite.
pub fn dist_lower_bound(p: f64, eps_phi: f64, eps_minus_phi: f64) -> Result<f64> {
    if !(eps_phi > 0.0 && eps_minus_phi > 0.0) {
        return Err(Error::Domain(format!(
            "eps values must be positive, got ({eps_phi}, {eps_minus_phi})"
        )));
    }
    let e0 = eps0(p)?;
    let m = eps_phi.min(eps_minus_phi);
    if m.is_infinite() {
        return Ok(0.0);
    }
    Ok(e0 / m)
}

pub fn hilbert_lower_bound(p: f64) -> Result<f64> {
    Ok(2.0 / PI * eps0(p)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn forward_c(xi: f64) -> f64 {
        (-xi).exp() / (1.0 - xi)
    }

    #[test]
    fn trivial_c() {
        let p = solve_xi(1.0, &tol()).unwrap();
        assert_eq!((p.xi_minus, p.xi_plus), (0.0, 0.0));
        assert_eq!(k_of_c(&p), 0.0);
    }

    #[test]
    fn xi_plus_half() {
        let c = forward_c(0.5);
        let p = solve_xi(c, &tol()).unwrap();
        assert!((p.xi_plus - 0.5).abs() < 1e-14);
    }

    #[test]
    fn xi_minus_one() {
        let c = forward_c(-1.0);
        assert!((c - E / 2.0).abs() < 1e-15);
        let p = solve_xi(c, &tol()).unwrap();
        assert!((p.xi_minus + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_c() {
        assert!(matches!(solve_xi(0.5, &tol()), Err(Error::Domain(_))));
        assert!(matches!(solve_xi(f64::NAN, &tol()), Err(Error::Domain(_))));
    }

    #[test]
    fn k_forms_agree() {
        for &c in &[forward_c(0.5), 1.001, 2.0, 37.0, 1e5] {
            let p = DomainParams::new(c).unwrap();
            let (a, b) = (k_of_c(&p), k_of_c_alt(&p));
            assert!((a - b).abs() < 1e-12 * b, "C={c}: {a} vs {b}");
        }
    }

    #[test]
    fn k_limit() {
        let p = DomainParams::new(1e8).unwrap();
        assert!((k_of_c(&p) - 2.0 / E).abs() < 1e-3);
    }

    #[test]
    fn k_inverse_round_trip() {
        assert_eq!(k_inverse(0.0, &tol()).unwrap(), 1.0);
        let k2 = k_of_c(&DomainParams::new(2.0).unwrap());
        let c = k_inverse(k2, &tol()).unwrap();
        assert!((c - 2.0).abs() < 1e-10);
        assert!(k_inverse(2.0 / E, &tol()).is_err());
    }

    #[test]
    fn omega_endpoints() {
        assert!((omega(1.0).unwrap() - 2.0 / E).abs() < 1e-14);
        assert!((omega(2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(omega(0.9).is_err());
        assert!(eps0(2.5).is_err());
    }

    #[test]
    fn eps0_increasing() {
        let v: Vec<f64> = [1.0, 1.25, 1.5, 1.75, 2.0].iter().map(|&p| eps0(p).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]), "{v:?}");
    }

    #[test]
    fn sharp_c_values() {
        assert_eq!(jn_sharp_c(0.0, 2.0).unwrap(), 1.0);
        assert!((jn_sharp_c(0.5, 2.0).unwrap() - forward_c(0.5)).abs() < 1e-15);
        let e0 = eps0(1.5).unwrap();
        let c = jn_sharp_c(0.5 * e0, 1.5).unwrap();
        assert!((c - (-0.5f64).exp() / 0.5).abs() < 1e-14);
        assert!(matches!(jn_sharp_c(0.1, 1.5), Err(Error::Range { .. })));
        assert!(matches!(jn_sharp_c(e0, 1.5), Err(Error::Range { .. })));
    }

    #[test]
    fn p1_bracket() {
        assert_eq!(jn_bound_p1(0.0, &tol()).unwrap(), (1.0, 1.0));
        let (lo, hi) = jn_bound_p1(0.5, &tol()).unwrap();
        let r = E / 4.0;
        assert!((lo - (-r).exp() / (1.0 - r)).abs() < 1e-15);
        assert!(hi <= 1.0 / (1.0 - r) && lo <= hi);
    }

    #[test]
    fn weak_type_values() {
        assert!((weak_type_bound(2.0, 0.0, 1.0).unwrap() - E).abs() < 1e-15);
        let v = weak_type_bound(1.5, 1.0, 1.0).unwrap();
        assert!((v - 4.0 * (-eps0(1.5).unwrap()).exp()).abs() < 1e-13);
        // continuity of the prefactor at p = 2
        let near = weak_type_prefactor(2.0 - 1e-9).unwrap();
        assert!((near - E).abs() < 1e-7);
        assert!(weak_type_bound(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn corollary_constants() {
        assert!((dist_lower_bound(2.0, 1.0, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        assert!((dist_lower_bound(1.0, 1.0, f64::INFINITY).unwrap() - 2.0 / E).abs() < 1e-15);
        assert_eq!(dist_lower_bound(1.5, f64::INFINITY, f64::INFINITY).unwrap(), 0.0);
        assert!((hilbert_lower_bound(2.0).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!((hilbert_lower_bound(1.0).unwrap() - 4.0 / (PI * E)).abs() < 1e-15);
    }
}
