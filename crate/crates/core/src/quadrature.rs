//! Adaptive Gauss-Kronrod quadrature.
//!
//! A 21-point Kronrod rule embedded with the 10-point Gauss rule, refined
//! globally: the subinterval with the largest error estimate is bisected
//! until the summed estimate meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525881328,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Default cap on the number of subintervals.
pub const MAX_SUBINTERVALS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
    pub converged: bool,
}

/// One application of the 21-point rule. Returns (integral, error estimate).
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let (v, e, _) = gk21_full(f, a, b);
    (v, e)
}

// (integral, error estimate, integral of |f|)
fn gk21_full<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..5 {
        let k = 2 * j + 1;
        let dx = half * XGK[k];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[k] = f1;
        fv2[k] = f2;
        resg += WG[j] * (f1 + f2);
        resk += WGK[k] * (f1 + f2);
        resabs += WGK[k] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let k = 2 * j;
        let dx = half * XGK[k];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[k] = f1;
        fv2[k] = f2;
        resk += WGK[k] * (f1 + f2);
        resabs += WGK[k] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for k in 0..10 {
        resasc += WGK[k] * ((fv1[k] - mean).abs() + (fv2[k] - mean).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err, resabs)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    abs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> QuadResult {
    integrate_limited(&f, a, b, abs_tol, rel_tol, MAX_SUBINTERVALS)
}

pub fn integrate_limited<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    limit: usize,
) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, abs_error: 0.0, intervals: 0, converged: true };
    }
    let (v, e, s) = gk21_full(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, err: e, abs: s });
    let mut total = v;
    let mut total_err = e;
    let mut total_abs = s;
    let mut count = 1;
    // beyond this the estimate is dominated by rounding
    let floor = |abs: f64| 100.0 * f64::EPSILON * abs;
    loop {
        let target = abs_tol.max(rel_tol * total.abs()).max(floor(total_abs));
        if total_err <= target {
            break;
        }
        if count >= limit {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval cannot be split further
            heap.push(worst);
            break;
        }
        let (v1, e1, s1) = gk21_full(f, worst.a, mid);
        let (v2, e2, s2) = gk21_full(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        total_abs += s1 + s2 - worst.abs;
        heap.push(Segment { a: worst.a, b: mid, value: v1, err: e1, abs: s1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, err: e2, abs: s2 });
        count += 1;
    }
    // resum to shed accumulated rounding in the running totals
    let (value, abs_error, abs_sum) = heap
        .iter()
        .fold((0.0, 0.0, 0.0), |(s, e, m), seg| (s + seg.value, e + seg.err, m + seg.abs));
    let converged = abs_error <= abs_tol.max(rel_tol * value.abs()).max(floor(abs_sum)) * 1.0001;
    QuadResult { value, abs_error, intervals: count, converged }
}

/// Integrates `f` over `[a, inf)` in chunks `[a, a+1], [a+1, a+3], ...`
/// until two consecutive chunks contribute less than the tolerance.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> QuadResult {
    let mut total = 0.0;
    let mut err = 0.0;
    let mut intervals = 0;
    let mut converged = true;
    let mut lo = a;
    let mut width = 1.0;
    let mut quiet = 0;
    for _ in 0..1100 {
        let hi = lo + width;
        if !hi.is_finite() {
            break;
        }
        let r = integrate_limited(&f, lo, hi, abs_tol * 0.01, rel_tol, MAX_SUBINTERVALS);
        total += r.value;
        err += r.abs_error;
        intervals += r.intervals;
        converged &= r.converged;
        if r.value.abs() <= 0.01 * abs_tol.max(rel_tol * total.abs()) {
            quiet += 1;
            if quiet >= 2 {
                return QuadResult { value: total, abs_error: err, intervals, converged };
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    QuadResult { value: total, abs_error: err, intervals, converged: false }
}
