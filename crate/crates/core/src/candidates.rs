//! The explicit Bellman candidates on `Omega_C`.

use serde::{Deserialize, Serialize};

use crate::domain::{
    classify_b1, classify_d, is_singular_point, near_gamma1, require_domain, solve_d, solve_v, Branch,
    Point, RegionB1, RegionD,
};
use crate::error::{Error, Result};
use crate::scalar::{c_threshold, DomainParams};
use crate::special::tail_weight;
use crate::tolerance::Tolerance;

/// A value that may legitimately be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Extended::Finite(v) => v,
            Extended::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }
}

impl Serialize for Extended {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        crate::num::serialize(&self.to_f64(), serializer)
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        crate::num::deserialize(deserializer).map(Extended::from)
    }
}

impl From<f64> for Extended {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            Extended::Infinite
        } else {
            Extended::Finite(v)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CandidateKind {
    /// Lower candidate for `<|phi|^p>`, `1 <= p <= 2`.
    LowerP(f64),
    /// Upper candidate for `<phi^2>`.
    UpperSquare,
    /// Upper candidate for `<e^{delta phi}>`, `delta >= 1`.
    ExpDelta(f64),
    /// Upper candidate for `|{phi >= lambda}|`.
    WeakType(f64),
}

impl CandidateKind {
    /// The boundary function `f` with `G(t, e^t) = f(t)`.
    pub fn boundary(&self, t: f64) -> f64 {
        match *self {
            CandidateKind::LowerP(p) => t.abs().powf(p),
            CandidateKind::UpperSquare => t * t,
            CandidateKind::ExpDelta(delta) => (delta * t).exp(),
            CandidateKind::WeakType(lambda) => {
                if t >= lambda {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Lower candidates are locally convex, upper ones locally concave.
    pub fn is_lower(&self) -> bool {
        matches!(self, CandidateKind::LowerP(_))
    }
}

fn solver_tol() -> Tolerance {
    Tolerance::default()
}

/// `b_{p,C}` for `1 < p <= 2`.
pub fn eval_b_p(x: &Point, p: f64, params: &DomainParams) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::Domain(format!("b_p needs 1 < p <= 2, got {p}")));
    }
    require_domain(x, params)?;
    if near_gamma1(x) || params.is_trivial() {
        return Ok(x.x1.abs().powf(p));
    }
    let d = solve_d(x, params, Branch::Plus, &solver_tol())?;
    let u = x.x1 - d;
    let m = b_p_slope(u, p, params.xi_plus);
    Ok(m * d + u.abs().powf(p))
}

// m(u) = p xi^{p-1} E(u/xi)
fn b_p_slope(u: f64, p: f64, xi: f64) -> f64 {
    p * xi.powf(p - 1.0) * tail_weight(u / xi, p)
}

/// `b_{1,C}`, affine on each of the three regions.
pub fn eval_b_1(x: &Point, params: &DomainParams) -> Result<f64> {
    let region = classify_b1(x, params)?;
    if near_gamma1(x) || params.is_trivial() {
        return Ok(x.x1.abs());
    }
    Ok(b1_on_region(x, region, params))
}

pub(crate) fn b1_on_region(x: &Point, region: RegionB1, params: &DomainParams) -> f64 {
    match region {
        RegionB1::OmegaMinus => -x.x1,
        RegionB1::OmegaPlus => x.x1,
        RegionB1::OmegaZero => {
            let gap = params.gap();
            let a = 2.0 * params.one_minus_xi_minus() * params.one_minus_xi_plus() / gap;
            let b = (params.xi_plus + params.xi_minus - 2.0) / gap;
            a * (x.x2 - 1.0) + b * x.x1
        }
    }
}

/// `B_{2,C}`.
pub fn eval_big_b2(x: &Point, params: &DomainParams) -> Result<f64> {
    require_domain(x, params)?;
    if near_gamma1(x) || params.is_trivial() {
        return Ok(x.x1 * x.x1);
    }
    let d = solve_d(x, params, Branch::Minus, &solver_tol())?;
    let u = x.x1 - d;
    Ok(2.0 * u * x.x1 - u * u + 2.0 * params.xi_minus * d)
}

/// `A_{delta,C}`; infinite off `Gamma_1` once `delta >= 1/xi+`.
pub fn eval_a(x: &Point, delta: f64, params: &DomainParams) -> Result<Extended> {
    if !(delta >= 1.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("A needs finite delta >= 1, got {delta}")));
    }
    require_domain(x, params)?;
    if near_gamma1(x) || params.is_trivial() {
        return Ok(Extended::Finite((delta * x.x1).exp()));
    }
    let k = 1.0 - delta * params.xi_plus;
    if k <= 0.0 || delta >= 1.0 / params.xi_plus {
        return Ok(Extended::Infinite);
    }
    let d = solve_d(x, params, Branch::Plus, &solver_tol())?;
    let u = x.x1 - d;
    Ok(Extended::Finite((delta * u).exp() * (delta * d / k + 1.0)))
}

/// `D_{lambda,C}`.
pub fn eval_d(x: &Point, lambda: f64, params: &DomainParams) -> Result<f64> {
    let region = classify_d(x, lambda, params)?;
    if near_gamma1(x) || params.is_trivial() {
        return Ok(if x.x1 >= lambda { 1.0 } else { 0.0 });
    }
    d_on_region(x, lambda, region, params)
}

pub(crate) fn d_on_region(x: &Point, lambda: f64, region: RegionD, params: &DomainParams) -> Result<f64> {
    let gap = params.gap();
    let value = match region {
        RegionD::Omega4 => 1.0,
        RegionD::Omega3 => {
            let s = x.x1 - lambda;
            let z = x.x2 * (-lambda).exp();
            params.one_minus_xi_minus() / (gap * gap) * (s + (1.0 - z) * params.one_minus_xi_plus()) + 1.0
        }
        RegionD::Omega2 => {
            let v = solve_v(x, lambda, params, &solver_tol())?;
            (x.x1 - v) / (lambda - v)
        }
        RegionD::Omega1 => {
            let d = solve_d(x, params, Branch::Plus, &solver_tol())?;
            let u = x.x1 - d;
            ((gap + u - lambda) / params.xi_plus).exp() / gap * d
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Envelope of `sup_x D_{lambda,C}(0, x2)` and the simpler exponential bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerticalMax {
    pub envelope: f64,
    /// Only defined for `lambda >= 0`.
    pub simplified: Option<f64>,
}

pub fn max_d_over_vertical(lambda: f64, params: &DomainParams) -> VerticalMax {
    if lambda <= 0.0 {
        let simplified = (lambda == 0.0).then(|| simplified_bound(0.0, params));
        return VerticalMax { envelope: 1.0, simplified };
    }
    if params.is_trivial() {
        return VerticalMax { envelope: 0.0, simplified: Some(0.0) };
    }
    let (xm, xp) = (params.xi_minus, params.xi_plus);
    let envelope = if lambda <= -xm {
        1.0 - lambda / params.gap()
    } else {
        xp * (-xm / xp).exp() / params.gap() * (-lambda / xp).exp()
    };
    VerticalMax { envelope, simplified: Some(simplified_bound(lambda, params)) }
}

fn simplified_bound(lambda: f64, params: &DomainParams) -> f64 {
    if params.is_trivial() {
        return if lambda <= 0.0 { 1.0 } else { 0.0 };
    }
    let r = params.xi_minus / params.xi_plus;
    (-r).exp() / (1.0 - r) * (-lambda / params.xi_plus).exp()
}

/// A candidate of the form `G = m(u)(x1 - u) + f(u)` with
/// `xi m'(u) = m(u) - f'(u)`, evaluated at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeForm {
    pub u: f64,
    pub xi: f64,
    pub one_minus_xi: f64,
    pub m: f64,
    pub dm: f64,
}

impl SlopeForm {
    /// `(G_{x1}, G_{x2}) = (m - m', m' e^{-u} (1 - xi))`.
    pub fn gradient(&self) -> [f64; 2] {
        [self.m - self.dm, self.dm * (-self.u).exp() * self.one_minus_xi]
    }
}

/// Slope-form data for the candidates that have it at `x`, `None` elsewhere
/// (`b_1`, the affine and secant parts of `D`, points on `Gamma_1`).
pub fn slope_form(kind: &CandidateKind, x: &Point, params: &DomainParams) -> Result<Option<SlopeForm>> {
    require_domain(x, params)?;
    if near_gamma1(x) || params.is_trivial() {
        return Ok(None);
    }
    let tol = solver_tol();
    let plus = |m_of: &dyn Fn(f64) -> (f64, f64)| -> Result<Option<SlopeForm>> {
        let d = solve_d(x, params, Branch::Plus, &tol)?;
        let u = x.x1 - d;
        let (m, fprime) = m_of(u);
        let xi = params.xi_plus;
        Ok(Some(SlopeForm { u, xi, one_minus_xi: params.one_minus_xi_plus(), m, dm: (m - fprime) / xi }))
    };
    match *kind {
        CandidateKind::LowerP(p) if p > 1.0 => plus(&|u| {
            (b_p_slope(u, p, params.xi_plus), p * u.abs().powf(p - 1.0) * u.signum())
        }),
        CandidateKind::LowerP(_) => Ok(None),
        CandidateKind::UpperSquare => {
            let d = solve_d(x, params, Branch::Minus, &tol)?;
            let u = x.x1 - d;
            let xi = params.xi_minus;
            Ok(Some(SlopeForm { u, xi, one_minus_xi: params.one_minus_xi_minus(), m: 2.0 * (u + xi), dm: 2.0 }))
        }
        CandidateKind::ExpDelta(delta) => {
            let k = 1.0 - delta * params.xi_plus;
            if k <= 0.0 || delta >= 1.0 / params.xi_plus {
                return Ok(None);
            }
            plus(&|u| {
                let e = (delta * u).exp();
                (delta * e / k, delta * e)
            })
        }
        CandidateKind::WeakType(lambda) => {
            if classify_d(x, lambda, params)? != RegionD::Omega1 {
                return Ok(None);
            }
            let gap = params.gap();
            plus(&|u| (((gap - lambda + u) / params.xi_plus).exp() / gap, 0.0))
        }
    }
}

/// Result of evaluating a candidate with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: Extended,
    pub region: Option<String>,
    pub u_plus: f64,
    pub u_minus: f64,
    pub v: Option<f64>,
    pub flags: Vec<String>,
}

pub fn evaluate(kind: &CandidateKind, x: &Point, params: &DomainParams) -> Result<Evaluation> {
    require_domain(x, params)?;
    let tol = solver_tol();
    let u_plus = x.x1 - solve_d(x, params, Branch::Plus, &tol)?;
    let u_minus = x.x1 - solve_d(x, params, Branch::Minus, &tol)?;
    let mut flags = Vec::new();
    let mut region = None;
    let mut v = None;
    let value = match *kind {
        CandidateKind::LowerP(p) if p == 1.0 => {
            region = Some(classify_b1(x, params)?.to_string());
            Extended::Finite(eval_b_1(x, params)?)
        }
        CandidateKind::LowerP(p) => {
            if params.c < c_threshold(p) {
                flags.push(format!(
                    "below_threshold: C < e^(p-2)/(p-1) = {}; value is the candidate, not proven to be the Bellman function",
                    c_threshold(p)
                ));
            }
            Extended::Finite(eval_b_p(x, p, params)?)
        }
        CandidateKind::UpperSquare => Extended::Finite(eval_big_b2(x, params)?),
        CandidateKind::ExpDelta(delta) => eval_a(x, delta, params)?,
        CandidateKind::WeakType(lambda) => {
            let r = classify_d(x, lambda, params)?;
            region = Some(r.to_string());
            if is_singular_point(x, lambda) {
                flags.push("singular_point: D jumps at (lambda, e^lambda); value taken from Omega4".into());
            }
            if r == RegionD::Omega2 && !near_gamma1(x) {
                v = Some(solve_v(x, lambda, params, &tol)?);
            }
            Extended::Finite(eval_d(x, lambda, params)?)
        }
    };
    Ok(Evaluation { value, region, u_plus, u_minus, v, flags })
}

/// Evaluates a candidate as a plain number (`+inf` for the infinite case).
pub fn eval_candidate(kind: &CandidateKind, x: &Point, params: &DomainParams) -> Result<f64> {
    match *kind {
        CandidateKind::LowerP(p) if p == 1.0 => eval_b_1(x, params),
        CandidateKind::LowerP(p) => eval_b_p(x, p, params),
        CandidateKind::UpperSquare => eval_big_b2(x, params),
        CandidateKind::ExpDelta(delta) => Ok(eval_a(x, delta, params)?.to_f64()),
        CandidateKind::WeakType(lambda) => eval_d(x, lambda, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{k_of_c, omega};

    fn params(c: f64) -> DomainParams {
        DomainParams::new(c).unwrap()
    }

    #[test]
    fn b_p_boundary_and_top() {
        let p = params(3.0);
        for &t in &[-2.0, -0.3, 0.0, 0.8] {
            assert!((eval_b_p(&Point::on_gamma1(t), 1.5, &p).unwrap() - f64::abs(t).powf(1.5)).abs() < 1e-14);
        }
        for &q in &[1.2, 1.5, 2.0] {
            let v = eval_b_p(&Point::new(0.0, 3.0), q, &p).unwrap();
            let expected = (p.xi_plus * omega(q).unwrap()).powf(q);
            assert!((v - expected).abs() < 1e-12 * expected, "p={q}: {v} vs {expected}");
        }
    }

    #[test]
    fn b_p_at_two_matches_quadratic_form() {
        let p = params(2.5);
        let x = Point::new(0.4, 1.7 * 0.4f64.exp());
        let d = solve_d(&x, &p, Branch::Plus, &Tolerance::default()).unwrap();
        let u = x.x1 - d;
        let b2 = 2.0 * u * x.x1 - u * u + 2.0 * p.xi_plus * (x.x1 - u);
        assert!((eval_b_p(&x, 2.0, &p).unwrap() - b2).abs() < 1e-13);
    }

    #[test]
    fn b1_values() {
        let p = params(2.0);
        assert_eq!(eval_b_1(&Point::on_gamma1(0.5), &p).unwrap(), 0.5);
        assert_eq!(eval_b_1(&Point::on_gamma1(-0.5), &p).unwrap(), 0.5);
        let top = eval_b_1(&Point::new(0.0, 2.0), &p).unwrap();
        assert!((top - k_of_c(&p)).abs() < 1e-14);
        // both branches agree along the tangent from (0,1)
        for &s in &[0.1, 0.5, 0.9] {
            let x1 = s * p.xi_plus;
            let x = Point::new(x1, 2.0 * p.xi_plus.exp() * x1 + 1.0);
            let zero = b1_on_region(&x, RegionB1::OmegaZero, &p);
            let plus = b1_on_region(&x, RegionB1::OmegaPlus, &p);
            assert!((zero - plus).abs() < 1e-12);
        }
    }

    #[test]
    fn upper_square_values() {
        let p = params(2.0);
        assert!((eval_big_b2(&Point::on_gamma1(-1.3), &p).unwrap() - 1.69).abs() < 1e-14);
        let top = eval_big_b2(&Point::new(0.0, 2.0), &p).unwrap();
        assert!((top - p.xi_minus * p.xi_minus).abs() < 1e-13);
        let vals: Vec<f64> = (1..10).map(|i| eval_big_b2(&Point::new(0.0, 1.0 + 0.1 * i as f64), &p).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn exp_delta_values() {
        let p = params(2.0);
        assert!((eval_a(&Point::new(0.0, 2.0), 1.0, &p).unwrap().to_f64() - 2.0).abs() < 1e-13);
        let delta = 1.3;
        let expected = (-delta * p.xi_plus).exp() / (1.0 - delta * p.xi_plus);
        assert!((eval_a(&Point::new(0.0, 2.0), delta, &p).unwrap().to_f64() - expected).abs() < 1e-12);
        let crit = 1.0 / p.xi_plus;
        assert_eq!(eval_a(&Point::new(0.0, 1.5), crit, &p).unwrap(), Extended::Infinite);
        assert_eq!(eval_a(&Point::on_gamma1(0.2), crit, &p).unwrap(), Extended::Finite((crit * 0.2).exp()));
        assert!(eval_a(&Point::new(0.0, 1.5), 0.5, &p).is_err());
    }

    #[test]
    fn weak_type_values() {
        let p = params(2.0);
        assert_eq!(eval_d(&Point::on_gamma1(0.3), 0.2, &p).unwrap(), 1.0);
        assert_eq!(eval_d(&Point::on_gamma1(0.1), 0.2, &p).unwrap(), 0.0);
        for lambda in [-p.xi_minus, 2.0, 2.5] {
            let v = eval_d(&Point::new(0.0, 2.0), lambda, &p).unwrap();
            let env = max_d_over_vertical(lambda, &p).envelope;
            assert!((v - env).abs() < 1e-13, "lambda={lambda}: {v} vs {env}");
        }
        for lambda in [0.05, 0.3, -p.xi_minus] {
            let y = lambda.exp() * (-2.0 * p.xi_minus.exp() * lambda + 1.0);
            let v = eval_d(&Point::new(0.0, y), lambda, &p).unwrap();
            assert!((v - (1.0 - lambda / p.gap())).abs() < 1e-12, "lambda={lambda}");
        }
    }

    #[test]
    fn vertical_envelope() {
        let p = params(4.0);
        assert_eq!(max_d_over_vertical(-1.0, &p).envelope, 1.0);
        let l = -p.xi_minus;
        let middle = 1.0 - l / p.gap();
        let third = p.xi_plus * (-p.xi_minus / p.xi_plus).exp() / p.gap() * (-l / p.xi_plus).exp();
        assert!((middle - third).abs() < 1e-14);
        assert!((middle - p.xi_plus / p.gap()).abs() < 1e-14);
        for &l in &[0.0, 0.2, 1.0, 3.0] {
            let m = max_d_over_vertical(l, &p);
            assert!(m.envelope <= m.simplified.unwrap() * (1.0 + 1e-14));
        }
    }

    #[test]
    fn slope_gradients_match_differences() {
        let p = params(3.0);
        let x = Point::new(0.3, 1.8 * 0.3f64.exp());
        let kinds = [
            CandidateKind::LowerP(1.5),
            CandidateKind::LowerP(2.0),
            CandidateKind::UpperSquare,
            CandidateKind::ExpDelta(1.05),
            CandidateKind::WeakType(4.0),
        ];
        for kind in kinds {
            let g = slope_form(&kind, &x, &p).unwrap().unwrap().gradient();
            let h = 1e-6;
            let f = |a: f64, b: f64| eval_candidate(&kind, &Point::new(a, b), &p).unwrap();
            let g1 = (f(x.x1 + h, x.x2) - f(x.x1 - h, x.x2)) / (2.0 * h);
            let g2 = (f(x.x1, x.x2 + h) - f(x.x1, x.x2 - h)) / (2.0 * h);
            assert!((g[0] - g1).abs() < 1e-6 && (g[1] - g2).abs() < 1e-6, "{kind:?}: {g:?} vs {g1} {g2}");
        }
    }
}
