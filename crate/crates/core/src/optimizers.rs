//! Explicit extremal functions as piecewise `Constant` / `LogRamp` objects on
//! `(0, 1)`, the cutoff operator, and exact averages.

use serde::{Deserialize, Serialize};

use crate::candidates::Extended;
use crate::domain::{
    classify_b1, classify_d, near_gamma1, require_domain, solve_d, solve_v, Branch, Point, RegionB1, RegionD,
};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity};
use crate::scalar::DomainParams;
use crate::tolerance::Tolerance;

/// Largest tolerated gap between adjacent pieces.
pub const ADJACENCY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PieceKind {
    Constant {
        #[serde(with = "crate::num")]
        value: f64,
    },
    /// `u + xi ln(alpha / t)`.
    LogRamp {
        #[serde(with = "crate::num")]
        u: f64,
        #[serde(with = "crate::num")]
        xi: f64,
        #[serde(with = "crate::num")]
        alpha: f64,
    },
}

/// One piece on the half-open interval `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    #[serde(with = "crate::num")]
    pub lo: f64,
    #[serde(with = "crate::num")]
    pub hi: f64,
    #[serde(flatten)]
    pub kind: PieceKind,
}

impl Piece {
    pub fn constant(lo: f64, hi: f64, value: f64) -> Self {
        Piece { lo, hi, kind: PieceKind::Constant { value } }
    }

    pub fn log_ramp(lo: f64, hi: f64, u: f64, xi: f64, alpha: f64) -> Self {
        Piece { lo, hi, kind: PieceKind::LogRamp { u, xi, alpha } }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            PieceKind::Constant { value } => value,
            PieceKind::LogRamp { u, xi, alpha } => u + xi * (alpha / t).ln(),
        }
    }

    /// Value at `t = alpha e^{-y}`; avoids underflow of `t` deep in the ramp.
    pub fn eval_log(&self, y: f64) -> f64 {
        match self.kind {
            PieceKind::Constant { value } => value,
            PieceKind::LogRamp { u, xi, .. } => u + xi * y,
        }
    }

    fn slope(&self) -> f64 {
        match self.kind {
            PieceKind::Constant { .. } => 0.0,
            PieceKind::LogRamp { xi, .. } => xi,
        }
    }

    fn mapped(&self, lo: f64, hi: f64, scale: f64, shift: f64) -> Piece {
        let kind = match self.kind {
            PieceKind::Constant { value } => PieceKind::Constant { value: scale * value + shift },
            PieceKind::LogRamp { u, xi, alpha } => {
                PieceKind::LogRamp { u: scale * u + shift, xi: scale * xi, alpha }
            }
        };
        Piece { lo, hi, kind }
    }

    /// Infimum and supremum over `(s, t]`.
    fn range(&self, s: f64, t: f64) -> (f64, f64) {
        let (a, b) = (self.eval(t), self.eval(s));
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// `ln(alpha / t)` at the ends of `(s, t]`.
    fn log_ends(alpha: f64, s: f64, t: f64) -> (f64, f64) {
        let lt = (alpha / t).ln();
        let ls = if s == 0.0 { f64::INFINITY } else { (alpha / s).ln() };
        (lt, ls)
    }

    fn integral(&self, s: f64, t: f64) -> f64 {
        let w = t - s;
        match self.kind {
            PieceKind::Constant { value } => value * w,
            PieceKind::LogRamp { u, xi, alpha } => {
                if xi == 0.0 {
                    return u * w;
                }
                let lt = (alpha / t).ln();
                w * (u + xi * (lt + mean_neg_log(w / t)))
            }
        }
    }

    fn exp_integral(&self, s: f64, t: f64, delta: f64, shift: f64) -> Extended {
        match self.kind {
            PieceKind::Constant { value } => Extended::from((delta * (value - shift)).exp() * (t - s)),
            PieceKind::LogRamp { u, xi, alpha } => {
                if xi == 0.0 {
                    return Extended::from((delta * (u - shift)).exp() * (t - s));
                }
                let k = 1.0 - delta * xi;
                let at_t = t * (delta * (u + xi * (alpha / t).ln() - shift)).exp();
                if s == 0.0 {
                    return if k > 0.0 { Extended::from(at_t / k) } else { Extended::Infinite };
                }
                let r = (s / t).ln();
                let factor = if k == 0.0 { -r } else { -(k * r).exp_m1() / k };
                Extended::from(at_t * factor)
            }
        }
    }

    fn abs_pow_integral(&self, s: f64, t: f64, p: f64, shift: f64) -> f64 {
        match self.kind {
            PieceKind::Constant { value } => (value - shift).abs().powf(p) * (t - s),
            PieceKind::LogRamp { u, xi, alpha } => {
                if xi == 0.0 {
                    return (u - shift).abs().powf(p) * (t - s);
                }
                let (lt, ls) = Self::log_ends(alpha, s, t);
                let y0 = (shift - u) / xi;
                t * xi.abs().powf(p) * weighted_abs_pow(lt - y0, ls - y0, p)
            }
        }
    }

    fn crossing(&self, level: f64) -> f64 {
        match self.kind {
            PieceKind::Constant { .. } => f64::NAN,
            PieceKind::LogRamp { u, xi, alpha } => alpha * ((u - level) / xi).exp(),
        }
    }

    /// `|{r in (s, t] : phi(r) >= level}|`.
    fn measure_above(&self, s: f64, t: f64, level: f64) -> f64 {
        let slope = self.slope();
        if slope == 0.0 {
            return if self.eval(t) >= level { t - s } else { 0.0 };
        }
        let tau = self.crossing(level).clamp(s, t);
        if slope > 0.0 {
            tau - s
        } else {
            t - tau
        }
    }

    /// `|{r in (s, t] : phi(r) <= level}|`.
    fn measure_below(&self, s: f64, t: f64, level: f64) -> f64 {
        let slope = self.slope();
        if slope == 0.0 {
            return if self.eval(t) <= level { t - s } else { 0.0 };
        }
        let tau = self.crossing(level).clamp(s, t);
        if slope > 0.0 {
            t - tau
        } else {
            tau - s
        }
    }
}

/// Mean of `-ln(r)` over `(1 - h, 1)`.
fn mean_neg_log(h: f64) -> f64 {
    if h >= 1.0 {
        return 1.0;
    }
    if h < 0.05 {
        // sum_{k>=2} h^{k-1} / (k (k-1))
        let mut sum = 0.0;
        let mut pow = 1.0;
        for k in 2..40 {
            pow *= h;
            let term = pow / (k * (k - 1)) as f64;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        return sum;
    }
    (h + (1.0 - h) * (-h).ln_1p()) / h
}

/// `S(w1, w2) = int_{w1}^{w2} |w|^p e^{-(w - w1)} dw`.
fn weighted_abs_pow(w1: f64, w2: f64, p: f64) -> f64 {
    if w2 <= w1 {
        return 0.0;
    }
    if p == 1.0 || p == 2.0 {
        let n = p as i32;
        let poly = |w: f64| if n == 1 { w + 1.0 } else { w * w + 2.0 * w + 2.0 };
        // int_a^b w^n e^{-(w - w1)} dw
        let signed = |a: f64, b: f64| {
            let tail = if b.is_infinite() { 0.0 } else { (-(b - w1)).exp() * poly(b) };
            (-(a - w1)).exp() * poly(a) - tail
        };
        let sign = if n == 1 { -1.0 } else { 1.0 };
        return if w1 >= 0.0 {
            signed(w1, w2)
        } else if w2 <= 0.0 {
            sign * signed(w1, w2)
        } else {
            sign * signed(w1, 0.0) + signed(0.0, w2)
        };
    }
    let f = |w: f64| w.abs().powf(p) * (-(w - w1)).exp();
    let mut total = 0.0;
    let mut lo = w1;
    if w1 < 0.0 && w2 > 0.0 {
        total += integrate(f, w1, 0.0, 1e-300, 1e-14).value;
        lo = 0.0;
    }
    if w2.is_infinite() {
        total += integrate_to_infinity(f, lo, 1e-300, 1e-14).value;
    } else {
        total += integrate(f, lo, w2, 1e-300, 1e-14).value;
    }
    total
}

/// A function on `(0, 1)` made of `Constant` and `LogRamp` pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLogStep {
    pieces: Vec<Piece>,
}

impl PiecewiseLogStep {
    /// Validates ordering, coverage of `(0, 1]` and integrability.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Domain("a piecewise function needs at least one piece".into()));
        }
        let mut prev = 0.0;
        for p in &pieces {
            if !(p.lo < p.hi) || (p.lo - prev).abs() > ADJACENCY_TOL {
                return Err(Error::Domain(format!("piece ({}, {}] does not continue from {prev}", p.lo, p.hi)));
            }
            let finite = match p.kind {
                PieceKind::Constant { value } => value.is_finite(),
                PieceKind::LogRamp { u, xi, alpha } => u.is_finite() && xi.is_finite() && alpha > 0.0 && alpha.is_finite(),
            };
            if !finite {
                return Err(Error::Domain(format!("piece ({}, {}] has invalid parameters", p.lo, p.hi)));
            }
            prev = p.hi;
        }
        if pieces[0].lo.abs() > ADJACENCY_TOL || (prev - 1.0).abs() > ADJACENCY_TOL {
            return Err(Error::Domain("pieces must cover (0, 1]".into()));
        }
        Ok(PiecewiseLogStep { pieces })
    }

    /// Builds from possibly empty pieces, dropping zero-width ones.
    fn from_raw(pieces: Vec<Piece>) -> Self {
        let pieces: Vec<Piece> = pieces.into_iter().filter(|p| p.hi > p.lo).collect();
        PiecewiseLogStep { pieces }
    }

    pub fn constant(value: f64) -> Self {
        PiecewiseLogStep { pieces: vec![Piece::constant(0.0, 1.0, value)] }
    }

    /// `scale * ln(1/t)`.
    pub fn log_ramp(scale: f64) -> Self {
        PiecewiseLogStep { pieces: vec![Piece::log_ramp(0.0, 1.0, 0.0, scale, 1.0)] }
    }

    /// Step function with `values[i]` on `(breaks[i], breaks[i+1]]`.
    pub fn steps(breaks: &[f64], values: &[f64]) -> Result<Self> {
        if breaks.len() != values.len() + 1 {
            return Err(Error::Domain("need one more breakpoint than values".into()));
        }
        let pieces = values.iter().enumerate().map(|(i, &v)| Piece::constant(breaks[i], breaks[i + 1], v)).collect();
        Self::new(pieces)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn shifted(&self, c: f64) -> Self {
        self.affine(1.0, c)
    }

    pub fn scaled(&self, k: f64) -> Self {
        self.affine(k, 0.0)
    }

    fn affine(&self, scale: f64, shift: f64) -> Self {
        let pieces = self.pieces.iter().map(|p| p.mapped(p.lo, p.hi, scale, shift)).collect();
        PiecewiseLogStep { pieces }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.pieces.partition_point(|p| p.hi < t).min(self.pieces.len() - 1);
        self.pieces[idx].eval(t)
    }

    /// Pieces overlapping `(a, b)` with the overlap `(s, t]`.
    fn overlaps(&self, a: f64, b: f64) -> impl Iterator<Item = (&Piece, f64, f64)> {
        self.pieces.iter().filter_map(move |p| {
            let (s, t) = (p.lo.max(a), p.hi.min(b));
            (t > s).then_some((p, s, t))
        })
    }

    /// Essential infimum and supremum on `(a, b)`.
    pub fn range(&self, a: f64, b: f64) -> (f64, f64) {
        self.overlaps(a, b).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (p, s, t)| {
            let (l, h) = p.range(s, t);
            (lo.min(l), hi.max(h))
        })
    }

    /// Whether every piece is constant.
    pub fn is_step(&self) -> bool {
        self.pieces.iter().all(|p| matches!(p.kind, PieceKind::Constant { .. }))
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::Domain(format!("interval ({a}, {b}) is not a subinterval of (0, 1)")));
    }
    Ok(())
}

/// `<phi>` over `(a, b)`.
pub fn mean(phi: &PiecewiseLogStep, a: f64, b: f64) -> f64 {
    phi.overlaps(a, b).map(|(p, s, t)| p.integral(s, t)).sum::<f64>() / (b - a)
}

/// `<e^{delta (phi - shift)}>` over `(a, b)`.
pub fn exp_average(phi: &PiecewiseLogStep, a: f64, b: f64, delta: f64, shift: f64) -> Extended {
    let mut total = 0.0;
    for (p, s, t) in phi.overlaps(a, b) {
        match p.exp_integral(s, t, delta, shift) {
            Extended::Finite(v) => total += v,
            Extended::Infinite => return Extended::Infinite,
        }
    }
    Extended::from(total / (b - a))
}

/// `<|phi - shift|^p>` over `(a, b)`.
pub fn abs_pow_average(phi: &PiecewiseLogStep, a: f64, b: f64, p: f64, shift: f64) -> f64 {
    phi.overlaps(a, b).map(|(piece, s, t)| piece.abs_pow_integral(s, t, p, shift)).sum::<f64>() / (b - a)
}

/// Lebesgue measure of `{t in (a, b) : phi(t) >= level}`.
pub fn measure_above(phi: &PiecewiseLogStep, level: f64, a: f64, b: f64) -> f64 {
    phi.overlaps(a, b).map(|(p, s, t)| p.measure_above(s, t, level)).sum()
}

/// Lebesgue measure of `{t in (a, b) : phi(t) <= level}`.
pub fn measure_below(phi: &PiecewiseLogStep, level: f64, a: f64, b: f64) -> f64 {
    phi.overlaps(a, b).map(|(p, s, t)| p.measure_below(s, t, level)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FunctionKind {
    AbsPow(f64),
    Square,
    Exp(f64),
    IndicatorAbove(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageTriple {
    #[serde(with = "crate::num")]
    pub mean: f64,
    pub exp_mean: Extended,
    pub f_mean: Extended,
    pub method: Method,
}

fn check_function(f: &FunctionKind) -> Result<()> {
    match *f {
        FunctionKind::AbsPow(p) if !(p > 0.0 && p.is_finite()) => Err(Error::Domain(format!("|.|^p needs p > 0, got {p}"))),
        FunctionKind::Exp(d) if !d.is_finite() => Err(Error::Domain("exponent must be finite".into())),
        FunctionKind::IndicatorAbove(l) if l.is_nan() => Err(Error::Domain("level is NaN".into())),
        _ => Ok(()),
    }
}

/// Exact `(<phi>, <e^phi>, <f(phi)>)` over `(a, b)`.
pub fn averages(phi: &PiecewiseLogStep, f: &FunctionKind, a: f64, b: f64) -> Result<AverageTriple> {
    check_interval(a, b)?;
    check_function(f)?;
    let f_mean = match *f {
        FunctionKind::AbsPow(p) => Extended::from(abs_pow_average(phi, a, b, p, 0.0)),
        FunctionKind::Square => Extended::from(abs_pow_average(phi, a, b, 2.0, 0.0)),
        FunctionKind::Exp(delta) => exp_average(phi, a, b, delta, 0.0),
        FunctionKind::IndicatorAbove(level) => Extended::Finite(measure_above(phi, level, a, b) / (b - a)),
    };
    Ok(AverageTriple {
        mean: mean(phi, a, b),
        exp_mean: exp_average(phi, a, b, 1.0, 0.0),
        f_mean,
        method: Method::ClosedForm,
    })
}

const ORACLE_ABS: f64 = 1e-300;
const ORACLE_REL: f64 = 1e-12;

/// Integrates `g(phi)` over `(s, t]` of one piece numerically; `None` if the
/// integral does not converge. `log_g(value, y)` returns `ln(g) - y`-style
/// weights so that huge values never materialize.
fn quad_piece(piece: &Piece, s: f64, t: f64, g: &dyn Fn(f64) -> f64, kink: Option<f64>) -> Option<f64> {
    match piece.kind {
        PieceKind::Constant { value } => Some(g(value) * (t - s)),
        PieceKind::LogRamp { alpha, .. } => {
            let (lt, ls) = Piece::log_ends(alpha, s, t);
            // dt = alpha e^{-y} dy
            let h = |y: f64| {
                let w = alpha * (-y).exp();
                if w == 0.0 {
                    0.0
                } else {
                    g(piece.eval_log(y)) * w
                }
            };
            let mut cuts = vec![lt];
            if let Some(k) = kink {
                if k > lt && k < ls {
                    cuts.push(k);
                }
            }
            cuts.push(ls);
            let mut total = 0.0;
            for w in cuts.windows(2) {
                let r = if w[1].is_infinite() {
                    integrate_to_infinity(h, w[0], ORACLE_ABS, ORACLE_REL)
                } else {
                    integrate(h, w[0], w[1], ORACLE_ABS, ORACLE_REL)
                };
                if !r.converged || !r.value.is_finite() {
                    return None;
                }
                total += r.value;
            }
            Some(total)
        }
    }
}

/// Independent quadrature version of [`averages`].
pub fn averages_quadrature(phi: &PiecewiseLogStep, f: &FunctionKind, a: f64, b: f64) -> Result<AverageTriple> {
    check_interval(a, b)?;
    check_function(f)?;
    let len = b - a;
    let mut sum = 0.0;
    let mut exp_sum = Some(0.0);
    let mut f_sum = Some(0.0);
    for (p, s, t) in phi.overlaps(a, b) {
        sum += quad_piece(p, s, t, &|v| v, None).ok_or_else(|| Error::SearchFailed("mean quadrature diverged".into()))?;
        exp_sum = exp_sum.and_then(|acc| exp_piece_quad(p, s, t, 1.0).map(|v| acc + v));
        let fv = match *f {
            FunctionKind::AbsPow(q) => quad_piece(p, s, t, &|v| v.abs().powf(q), kink_at(p, 0.0)),
            FunctionKind::Square => quad_piece(p, s, t, &|v| v * v, None),
            FunctionKind::Exp(delta) => exp_piece_quad(p, s, t, delta),
            FunctionKind::IndicatorAbove(level) => Some(measure_by_bisection(p, s, t, level)),
        };
        f_sum = f_sum.and_then(|acc| fv.map(|v| acc + v));
    }
    let ext = |v: Option<f64>| v.map_or(Extended::Infinite, |v| Extended::from(v / len));
    Ok(AverageTriple { mean: sum / len, exp_mean: ext(exp_sum), f_mean: ext(f_sum), method: Method::Quadrature })
}

fn kink_at(p: &Piece, level: f64) -> Option<f64> {
    match p.kind {
        PieceKind::LogRamp { u, xi, .. } if xi != 0.0 => Some((level - u) / xi),
        _ => None,
    }
}

fn exp_piece_quad(p: &Piece, s: f64, t: f64, delta: f64) -> Option<f64> {
    match p.kind {
        PieceKind::Constant { value } => Some((delta * value).exp() * (t - s)),
        PieceKind::LogRamp { u, xi, alpha } => {
            // e^{delta(u + xi y)} alpha e^{-y}, assembled in the exponent
            let (lt, ls) = Piece::log_ends(alpha, s, t);
            let h = |y: f64| alpha * (delta * u + (delta * xi - 1.0) * y).exp();
            let r = if ls.is_infinite() {
                if delta * xi >= 1.0 {
                    return None;
                }
                integrate_to_infinity(h, lt, ORACLE_ABS, ORACLE_REL)
            } else {
                integrate(h, lt, ls, ORACLE_ABS, ORACLE_REL)
            };
            (r.converged && r.value.is_finite()).then_some(r.value)
        }
    }
}

/// Measure of `{phi >= level}` on a monotone piece by bisecting on values.
fn measure_by_bisection(p: &Piece, s: f64, t: f64, level: f64) -> f64 {
    let probe = |r: f64| p.eval(r) >= level;
    let (left_in, right_in) = (probe(s.max(f64::MIN_POSITIVE)), probe(t));
    if left_in == right_in {
        return if left_in { t - s } else { 0.0 };
    }
    let (mut lo, mut hi) = (s, t);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if probe(mid) == left_in {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let cross = 0.5 * (lo + hi);
    if left_in {
        cross - s
    } else {
        t - cross
    }
}

fn solver_tol() -> Tolerance {
    Tolerance::default()
}

/// Log ramp from `u` with slope `xi`, constant after `alpha`.
fn ramp_then_constant(u: f64, xi: f64, d: f64) -> PiecewiseLogStep {
    let alpha = (d / xi).clamp(0.0, 1.0);
    PiecewiseLogStep::from_raw(vec![Piece::log_ramp(0.0, alpha, u, xi, alpha.max(f64::MIN_POSITIVE)), Piece::constant(alpha, 1.0, u)])
}

/// The optimizer for the lower `|.|^p` candidates and the exponential one.
pub fn phi_plus(x: &Point, params: &DomainParams) -> Result<PiecewiseLogStep> {
    require_domain(x, params)?;
    if near_gamma1(x) || params.is_trivial() {
        return Ok(PiecewiseLogStep::constant(x.x1));
    }
    let d = solve_d(x, params, Branch::Plus, &solver_tol())?;
    Ok(ramp_then_constant(x.x1 - d, params.xi_plus, d))
}

/// The optimizer for the upper quadratic candidate.
pub fn phi_minus(x: &Point, params: &DomainParams) -> Result<PiecewiseLogStep> {
    require_domain(x, params)?;
    if near_gamma1(x) || params.is_trivial() {
        return Ok(PiecewiseLogStep::constant(x.x1));
    }
    let d = solve_d(x, params, Branch::Minus, &solver_tol())?;
    Ok(ramp_then_constant(x.x1 - d, params.xi_minus, d))
}

/// The step optimizer for the `p = 1` candidate.
pub fn psi(x: &Point, params: &DomainParams) -> Result<PiecewiseLogStep> {
    let region = classify_b1(x, params)?;
    if near_gamma1(x) || params.is_trivial() {
        return Ok(PiecewiseLogStep::constant(x.x1));
    }
    psi_branch(x, region, params)
}

fn psi_branch(x: &Point, region: RegionB1, params: &DomainParams) -> Result<PiecewiseLogStep> {
    let gap = params.gap();
    let pieces = match region {
        RegionB1::OmegaPlus => {
            let d = solve_d(x, params, Branch::Plus, &solver_tol())?;
            let u = x.x1 - d;
            let beta = (d / gap).clamp(0.0, 1.0);
            vec![Piece::constant(0.0, beta, u + gap), Piece::constant(beta, 1.0, u)]
        }
        RegionB1::OmegaMinus => {
            let d = solve_d(x, params, Branch::Minus, &solver_tol())?;
            let u = x.x1 - d;
            let beta = (-d / gap).clamp(0.0, 1.0);
            vec![Piece::constant(0.0, 1.0 - beta, u), Piece::constant(1.0 - beta, 1.0, u - gap)]
        }
        RegionB1::OmegaZero => {
            let (gp, gm) = gammas(x, params);
            vec![Piece::constant(0.0, gp, gap), Piece::constant(gp, 1.0 - gm, 0.0), Piece::constant(1.0 - gm, 1.0, -gap)]
        }
    };
    Ok(PiecewiseLogStep::from_raw(pieces))
}

/// Widths of the top and bottom steps on the middle region.
fn gammas(x: &Point, params: &DomainParams) -> (f64, f64) {
    let gap = params.gap();
    let (om, op) = (params.one_minus_xi_minus(), params.one_minus_xi_plus());
    let common = (x.x2 - 1.0) * om * op;
    let gp = ((common - x.x1 * op) / (gap * gap)).max(0.0);
    let gm = ((common - x.x1 * om) / (gap * gap)).max(0.0);
    let total = gp + gm;
    if total > 1.0 {
        (gp / total, gm / total)
    } else {
        (gp, gm)
    }
}

/// The optimizer for the weak-type candidate at level `lambda`.
pub fn eta(x: &Point, lambda: f64, params: &DomainParams) -> Result<PiecewiseLogStep> {
    let region = classify_d(x, lambda, params)?;
    if near_gamma1(x) || params.is_trivial() {
        return Ok(PiecewiseLogStep::constant(x.x1));
    }
    let gap = params.gap();
    match region {
        RegionD::Omega3 | RegionD::Omega4 => {
            let y = x.recentered(lambda);
            if near_gamma1(&y) {
                return Ok(PiecewiseLogStep::constant(x.x1));
            }
            let branch = if region == RegionD::Omega3 { RegionB1::OmegaZero } else { RegionB1::OmegaPlus };
            Ok(psi_branch(&y, branch, params)?.shifted(lambda))
        }
        RegionD::Omega2 => {
            let v = solve_v(x, lambda, params, &solver_tol())?;
            let mu = ((x.x1 - v) / (lambda - v)).clamp(0.0, 1.0);
            Ok(PiecewiseLogStep::from_raw(vec![Piece::constant(0.0, mu, lambda), Piece::constant(mu, 1.0, v)]))
        }
        RegionD::Omega1 => {
            let xp = params.xi_plus;
            let d = solve_d(x, params, Branch::Plus, &solver_tol())?;
            let u = x.x1 - d;
            let alpha = (d / xp).clamp(0.0, 1.0);
            let beta = d / gap;
            let tau = ((u + gap - lambda) / xp).exp().min(1.0);
            let (tb, ta) = (tau * beta, tau * alpha);
            Ok(PiecewiseLogStep::from_raw(vec![
                Piece::constant(0.0, tb, lambda),
                Piece::constant(tb, ta, lambda - gap),
                Piece::log_ramp(ta, alpha, u, xp, alpha),
                Piece::constant(alpha, 1.0, u),
            ]))
        }
    }
}

/// `min(max(phi, c), d)`.
pub fn cutoff(phi: &PiecewiseLogStep, c: f64, d: f64) -> Result<PiecewiseLogStep> {
    if !(c < d) {
        return Err(Error::Domain(format!("cutoff needs c < d, got c={c}, d={d}")));
    }
    let mut out = Vec::with_capacity(phi.pieces.len() + 2);
    for p in &phi.pieces {
        match p.kind {
            PieceKind::Constant { value } => out.push(Piece::constant(p.lo, p.hi, value.clamp(c, d))),
            PieceKind::LogRamp { xi, .. } if xi == 0.0 => {
                out.push(Piece::constant(p.lo, p.hi, p.eval(p.hi).clamp(c, d)))
            }
            PieceKind::LogRamp { xi, .. } => {
                let tc = p.crossing(c).clamp(p.lo, p.hi);
                let td = p.crossing(d).clamp(p.lo, p.hi);
                if xi > 0.0 {
                    out.push(Piece::constant(p.lo, td, d));
                    out.push(Piece { lo: td, hi: tc, kind: p.kind });
                    out.push(Piece::constant(tc, p.hi, c));
                } else {
                    out.push(Piece::constant(p.lo, tc, c));
                    out.push(Piece { lo: tc, hi: td, kind: p.kind });
                    out.push(Piece::constant(td, p.hi, d));
                }
            }
        }
    }
    Ok(PiecewiseLogStep::from_raw(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::{eval_a, eval_b_1, eval_b_p, eval_big_b2, eval_d};
    use crate::scalar::k_of_c;

    fn params(c: f64) -> DomainParams {
        DomainParams::new(c).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1.0)
    }

    #[test]
    fn mean_neg_log_branches_agree() {
        for h in [0.049f64, 0.0499999, 0.05, 0.3, 0.999999] {
            let direct = (h + (1.0 - h) * (-h).ln_1p()) / h;
            assert!((mean_neg_log(h) - direct).abs() < 1e-13, "h={h}");
        }
        assert_eq!(mean_neg_log(1.0), 1.0);
    }

    #[test]
    fn weighted_abs_pow_matches_quadrature() {
        for &(w1, w2) in &[(-1.0, 2.0), (0.5, 3.0), (-3.0, -0.5), (-0.7, f64::INFINITY), (0.2, f64::INFINITY)] {
            for &p in &[1.0, 1.5, 2.0] {
                let f = |w: f64| w.abs().powf(p) * (-(w - w1)).exp();
                let mut q = 0.0;
                let mut lo = w1;
                if w1 < 0.0 && w2 > 0.0 {
                    q += integrate(f, w1, 0.0, 1e-300, 1e-13).value;
                    lo = 0.0;
                }
                q += if w2.is_infinite() {
                    integrate_to_infinity(f, lo, 1e-300, 1e-13).value
                } else {
                    integrate(f, lo, w2, 1e-300, 1e-13).value
                };
                assert!(close(weighted_abs_pow(w1, w2, p), q, 1e-12), "({w1},{w2}) p={p}");
            }
        }
    }

    #[test]
    fn phi_plus_examples() {
        let pr = params(2.0);
        assert_eq!(phi_plus(&Point::on_gamma1(0.4), &pr).unwrap(), PiecewiseLogStep::constant(0.4));
        let top = phi_plus(&Point::new(0.0, 2.0), &pr).unwrap();
        assert_eq!(top.pieces().len(), 1);
        match top.pieces()[0].kind {
            PieceKind::LogRamp { u, xi, alpha } => {
                assert!((u + pr.xi_plus).abs() < 1e-14);
                assert_eq!(xi, pr.xi_plus);
                assert_eq!(alpha, 1.0);
            }
            _ => panic!("expected a ramp"),
        }
        let tr = averages(&top, &FunctionKind::Exp(1.0), 0.0, 1.0).unwrap();
        assert!(close(tr.mean, 0.0, 1e-14));
        assert!(close(tr.exp_mean.to_f64(), 2.0, 1e-13));
    }

    #[test]
    fn optimizers_reproduce_points_and_values() {
        let pr = params(3.5);
        let pts = [Point::new(0.0, 3.5), Point::new(0.7, 2.0 * 0.7f64.exp()), Point::new(-1.2, 1.1 * (-1.2f64).exp())];
        for x in pts {
            let pp = phi_plus(&x, &pr).unwrap();
            let pm = phi_minus(&x, &pr).unwrap();
            let ps = psi(&x, &pr).unwrap();
            for phi in [&pp, &pm, &ps] {
                let tr = averages(phi, &FunctionKind::Square, 0.0, 1.0).unwrap();
                assert!(close(tr.mean, x.x1, 1e-12) && close(tr.exp_mean.to_f64(), x.x2, 1e-12), "{x}");
            }
            let bp = averages(&pp, &FunctionKind::AbsPow(1.5), 0.0, 1.0).unwrap().f_mean.to_f64();
            assert!(close(bp, eval_b_p(&x, 1.5, &pr).unwrap(), 1e-10));
            let b2 = averages(&pm, &FunctionKind::Square, 0.0, 1.0).unwrap().f_mean.to_f64();
            assert!(close(b2, eval_big_b2(&x, &pr).unwrap(), 1e-10));
            let b1 = averages(&ps, &FunctionKind::AbsPow(1.0), 0.0, 1.0).unwrap().f_mean.to_f64();
            assert!(close(b1, eval_b_1(&x, &pr).unwrap(), 1e-12));
            let a = averages(&pp, &FunctionKind::Exp(1.05), 0.0, 1.0).unwrap().f_mean.to_f64();
            assert!(close(a, eval_a(&x, 1.05, &pr).unwrap().to_f64(), 1e-10));
            for lambda in [-0.5, 0.3, 1.5, 4.0, 8.0] {
                let e = eta(&x, lambda, &pr).unwrap();
                let tr = averages(&e, &FunctionKind::IndicatorAbove(lambda), 0.0, 1.0).unwrap();
                assert!(close(tr.mean, x.x1, 1e-12) && close(tr.exp_mean.to_f64(), x.x2, 1e-12), "{x} {lambda}");
                assert!(close(tr.f_mean.to_f64(), eval_d(&x, lambda, &pr).unwrap(), 1e-10), "{x} {lambda}");
            }
        }
        let top = psi(&Point::new(0.0, 3.5), &pr).unwrap();
        let b1 = averages(&top, &FunctionKind::AbsPow(1.0), 0.0, 1.0).unwrap().f_mean.to_f64();
        assert!(close(b1, k_of_c(&pr), 1e-13));
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let pr = params(2.5);
        let x = Point::new(0.2, 1.9 * 0.2f64.exp());
        let fs = [FunctionKind::AbsPow(1.3), FunctionKind::Square, FunctionKind::Exp(1.1), FunctionKind::IndicatorAbove(0.1)];
        for phi in [phi_plus(&x, &pr).unwrap(), phi_minus(&x, &pr).unwrap(), eta(&x, 3.0, &pr).unwrap()] {
            for f in &fs {
                for &(a, b) in &[(0.0, 1.0), (0.0, 0.01), (0.3, 0.9)] {
                    let c = averages(&phi, f, a, b).unwrap();
                    let q = averages_quadrature(&phi, f, a, b).unwrap();
                    assert!(close(c.mean, q.mean, 1e-10), "{f:?} ({a},{b})");
                    assert!(close(c.exp_mean.to_f64(), q.exp_mean.to_f64(), 1e-10));
                    assert!(close(c.f_mean.to_f64(), q.f_mean.to_f64(), 1e-9), "{f:?} ({a},{b}) {c:?} {q:?}");
                }
            }
        }
    }

    #[test]
    fn exp_blows_up_past_critical_slope() {
        let phi = PiecewiseLogStep::log_ramp(1.0);
        assert_eq!(exp_average(&phi, 0.0, 1.0, 1.0, 0.0), Extended::Infinite);
        assert!(exp_average(&phi, 0.1, 1.0, 1.0, 0.0).finite().is_some());
        assert!(averages_quadrature(&phi, &FunctionKind::Exp(1.0), 0.0, 1.0).unwrap().f_mean.is_infinite());
    }

    #[test]
    fn measures() {
        let phi = PiecewiseLogStep::log_ramp(1.0);
        assert!((measure_above(&phi, 2.0, 0.0, 1.0) - (-2.0f64).exp()).abs() < 1e-16);
        assert!((measure_below(&phi, 2.0, 0.0, 1.0) - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        let c = PiecewiseLogStep::constant(0.5);
        assert!((measure_above(&c, 0.5, 0.2, 0.7) - 0.5).abs() < 1e-16);
        assert_eq!(measure_above(&c, 0.6, 0.2, 0.7), 0.0);
    }

    #[test]
    fn cutoff_behaviour() {
        let pr = params(2.0);
        let top = phi_plus(&Point::new(0.0, 2.0), &pr).unwrap();
        assert_eq!(cutoff(&top, -pr.xi_plus, f64::INFINITY).unwrap(), top);
        assert_eq!(cutoff(&top, -10.0, 1e6).unwrap(), top);
        let cut = cutoff(&top, 0.0, 1.0).unwrap();
        for &t in &[1e-9, 0.01, 0.2, 0.5, 0.9, 1.0] {
            assert!((cut.value_at(t) - top.value_at(t).clamp(0.0, 1.0)).abs() < 1e-14, "t={t}");
        }
        assert!(cutoff(&top, 1.0, 1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let pr = params(2.0);
        let e = eta(&Point::new(0.0, 2.0), 3.0, &pr).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains("\"kind\":\"LogRamp\""));
        let back: PiecewiseLogStep = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
