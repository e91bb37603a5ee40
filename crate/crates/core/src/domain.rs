//! Geometry of `Omega_C`: membership, the tangent coordinates u±, the
//! secant coordinate v, region classification and segment containment.
//!
//! Most routines work in the normalized coordinates `y = x2 e^{-x1}` (so
//! `1 <= y <= C`) and `d = x1 - u`. Along the tangent from `(u, e^u)` the
//! point `x` satisfies `y = e^{-d} (1 + d/(1 - xi))`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::newton_bisect;
use crate::scalar::DomainParams;
use crate::tolerance::Tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
}

impl Point {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    /// The point `(t, e^t)` of the lower boundary.
    pub fn on_gamma1(t: f64) -> Self {
        Self { x1: t, x2: t.exp() }
    }

    /// The point `(t, R e^t)`.
    pub fn on_gamma(r: f64, t: f64) -> Self {
        Self { x1: t, x2: r * t.exp() }
    }

    /// `x2 e^{-x1}`.
    pub fn ratio(&self) -> f64 {
        self.x2 * (-self.x1).exp()
    }

    /// Image under `(x1, x2) -> (x1 - lambda, x2 e^{-lambda})`.
    pub fn recentered(&self, lambda: f64) -> Self {
        Self { x1: self.x1 - lambda, x2: self.x2 * (-lambda).exp() }
    }

    pub fn lerp(&self, other: &Point, s: f64) -> Point {
        Point {
            x1: self.x1 + s * (other.x1 - self.x1),
            x2: self.x2 + s * (other.x2 - self.x2),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// Tolerance used by the candidates when they check membership.
pub fn membership_tolerance() -> Tolerance {
    Tolerance { abs: 1e-300, rel: 1e-12, max_iter: 1 }
}

/// Relative distance from `Gamma_1` below which a point counts as on it.
pub const GAMMA1_TOL: f64 = 1e-14;

pub fn in_domain(x: &Point, params: &DomainParams, tol: &Tolerance) -> bool {
    in_domain_c(x, params.c, tol)
}

pub(crate) fn in_domain_c(x: &Point, c: f64, tol: &Tolerance) -> bool {
    if !x.is_finite() || x.x2 <= 0.0 {
        return false;
    }
    let base = x.x1.exp();
    let slack = tol.rel * c * base + tol.abs;
    x.x2 >= base - slack && x.x2 <= c * base + slack
}

pub(crate) fn require_domain(x: &Point, params: &DomainParams) -> Result<()> {
    if in_domain(x, params, &membership_tolerance()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("point {x} is outside Omega_C for C = {}", params.c)))
    }
}

pub(crate) fn near_gamma1(x: &Point) -> bool {
    x.ratio() - 1.0 <= GAMMA1_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

/// Solves `y = e^{-d}(1 + d/(1 - xi))` for `d` between 0 and `xi`.
fn tangent_offset(y: f64, params: &DomainParams, branch: Branch, tol: &Tolerance) -> Result<f64> {
    let (xi, omx) = match branch {
        Branch::Plus => (params.xi_plus, params.one_minus_xi_plus()),
        Branch::Minus => (params.xi_minus, params.one_minus_xi_minus()),
    };
    if xi == 0.0 || y <= 1.0 {
        return Ok(0.0);
    }
    if y >= params.c {
        return Ok(xi);
    }
    let f = |d: f64| {
        let e = (-d).exp();
        (e * (1.0 + d / omx) - y, e * (xi - d) / omx)
    };
    // rounding in xi can leave y just past the computed end value
    if f(xi).0 <= 0.0 {
        return Ok(xi);
    }
    let (lo, hi) = if xi > 0.0 { (0.0, xi) } else { (xi, 0.0) };
    newton_bisect(f, lo, hi, tol)
}

/// `d = x1 - u±(x)`: zero on `Gamma_1`, `xi±` on `Gamma_C`.
pub fn solve_d(x: &Point, params: &DomainParams, branch: Branch, tol: &Tolerance) -> Result<f64> {
    require_domain(x, params)?;
    tangent_offset(x.ratio(), params, branch, tol)
}

/// The initial abscissa of the tangent `l±(x)`.
pub fn solve_u(x: &Point, params: &DomainParams, branch: Branch, tol: &Tolerance) -> Result<f64> {
    Ok(x.x1 - solve_d(x, params, branch, tol)?)
}

// (e^w - 1)/w and its derivative
fn secant_slope(w: f64) -> (f64, f64) {
    if w.abs() < 1e-4 {
        (1.0 + w / 2.0 + w * w / 6.0 + w * w * w / 24.0, 0.5 + w / 3.0 + w * w / 8.0)
    } else {
        let em1 = w.exp_m1();
        let q = em1 / w;
        (q, (w * w.exp() - em1) / (w * w))
    }
}

/// Whether `x` lies in the closed region `Omega_2(lambda)` (up to rounding).
pub fn in_omega2(x: &Point, lambda: f64, params: &DomainParams) -> bool {
    let s = x.x1 - lambda;
    let z = x.ratio_at(lambda);
    let lo = params.xi_minus - params.xi_plus;
    let slack = 1e-12 * params.c;
    s >= lo - 1e-12 && s < 0.0 && z <= line_minus(params, s) + slack
}

impl Point {
    /// `x2 e^{-lambda}`.
    pub(crate) fn ratio_at(&self, lambda: f64) -> f64 {
        self.x2 * (-lambda).exp()
    }
}

fn line_minus(params: &DomainParams, s: f64) -> f64 {
    params.c * params.xi_minus.exp() * s + 1.0
}

fn line_plus(params: &DomainParams, s: f64) -> f64 {
    params.c * params.xi_plus.exp() * s + 1.0
}

/// Abscissa of the second intersection with `Gamma_1` of the line through
/// `(lambda, e^lambda)` and `x`.
pub fn solve_v(x: &Point, lambda: f64, params: &DomainParams, tol: &Tolerance) -> Result<f64> {
    require_domain(x, params)?;
    let s = x.x1 - lambda;
    if s == 0.0 {
        return Err(Error::DegenerateSecant(lambda));
    }
    if !in_omega2(x, lambda, params) {
        return Err(Error::Domain(format!("point {x} is not in Omega_2({lambda})")));
    }
    let z = x.ratio_at(lambda);
    let target = (z - 1.0) / s;
    let lo = params.xi_minus - params.xi_plus;
    let (q_lo, _) = secant_slope(lo);
    let (q_hi, _) = secant_slope(s);
    // rounding can push the target just outside the bracket
    if target <= q_lo {
        return Ok(lambda + lo);
    }
    if target >= q_hi {
        return Ok(lambda + s);
    }
    let w = newton_bisect(
        |w| {
            let (q, dq) = secant_slope(w);
            (q - target, dq)
        },
        lo,
        s,
        tol,
    )?;
    Ok(lambda + w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionB1 {
    OmegaMinus,
    OmegaZero,
    OmegaPlus,
}

impl fmt::Display for RegionB1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegionB1::OmegaMinus => "OmegaMinus",
            RegionB1::OmegaZero => "OmegaZero",
            RegionB1::OmegaPlus => "OmegaPlus",
        };
        f.write_str(s)
    }
}

const EDGE_SLACK: f64 = 1e-12;

fn b1_region_normalized(s: f64, x2: f64, params: &DomainParams) -> RegionB1 {
    let slack = EDGE_SLACK * params.c * s.exp().max(1.0);
    let in_band = s >= params.xi_minus - EDGE_SLACK && s <= params.xi_plus + EDGE_SLACK;
    if in_band {
        let line = if s <= 0.0 { line_minus(params, s) } else { line_plus(params, s) };
        if x2 >= line - slack {
            return RegionB1::OmegaZero;
        }
    }
    if s > 0.0 {
        RegionB1::OmegaPlus
    } else {
        RegionB1::OmegaMinus
    }
}

/// Region of the three-way split used by `b_{1,C}`; shared edges go to
/// `OmegaZero`.
pub fn classify_b1(x: &Point, params: &DomainParams) -> Result<RegionB1> {
    require_domain(x, params)?;
    Ok(b1_region_normalized(x.x1, x.x2, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionD {
    Omega1,
    Omega2,
    Omega3,
    Omega4,
}

impl fmt::Display for RegionD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegionD::Omega1 => "Omega1",
            RegionD::Omega2 => "Omega2",
            RegionD::Omega3 => "Omega3",
            RegionD::Omega4 => "Omega4",
        };
        f.write_str(s)
    }
}

/// Whether `x` is the point `(lambda, e^lambda)` where `D` jumps.
pub fn is_singular_point(x: &Point, lambda: f64) -> bool {
    let s = x.x1 - lambda;
    let z = x.ratio_at(lambda);
    s.abs() <= 1e-14 * (1.0 + lambda.abs()) && (z - 1.0).abs() <= 1e-14
}

/// Region of the four-way split used by `D_{lambda,C}`. The jump point
/// reports `Omega4`; other shared edges go to the lowest-numbered region.
pub fn classify_d(x: &Point, lambda: f64, params: &DomainParams) -> Result<RegionD> {
    require_domain(x, params)?;
    if is_singular_point(x, lambda) {
        return Ok(RegionD::Omega4);
    }
    let s = x.x1 - lambda;
    let z = x.ratio_at(lambda);
    let (xm, xp) = (params.xi_minus, params.xi_plus);
    let lo = xm - xp;
    let lm = line_minus(params, s);
    if s <= lo || (s <= xm && z >= lm) {
        return Ok(RegionD::Omega1);
    }
    if s < 0.0 && z <= lm {
        return Ok(RegionD::Omega2);
    }
    if (s >= xm && s <= 0.0 && z >= lm) || (s >= 0.0 && s <= xp && z >= line_plus(params, s)) {
        return Ok(RegionD::Omega3);
    }
    Ok(RegionD::Omega4)
}

/// Whether the closed segment `[a, b]` lies in `Omega_{C1}`.
///
/// `x2 - e^{x1}` is concave along the segment, so the lower boundary is
/// checked at the endpoints only; `x2 - C1 e^{x1}` is concave too and its
/// maximum sits where `dx2 = C1 dx1 e^{x1}`.
pub fn segment_in_domain(a: &Point, b: &Point, c1: f64, tol: &Tolerance) -> Result<bool> {
    if !(c1 >= 1.0) {
        return Err(Error::Domain(format!("C1 must be >= 1, got {c1}")));
    }
    for p in [a, b] {
        if !in_domain_c(p, c1, tol) {
            return Err(Error::Precondition(format!("endpoint {p} is outside Omega_{{{c1}}}")));
        }
    }
    let (dx1, dx2) = (b.x1 - a.x1, b.x2 - a.x2);
    if dx1 == 0.0 {
        return Ok(true);
    }
    let r = dx2 / (c1 * dx1);
    if r <= 0.0 {
        return Ok(true);
    }
    let x1_star = r.ln();
    let s = (x1_star - a.x1) / dx1;
    if s <= 0.0 || s >= 1.0 {
        return Ok(true);
    }
    let p = a.lerp(b, s);
    let top = c1 * p.x1.exp();
    Ok(p.x2 <= top + tol.rel * top + tol.abs)
}
