//! Replay of the Bellman induction on step functions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::report::VerificationReport;
use super::sampling::SampleRng;
use super::scan::ScanConfig;
use crate::candidates::{eval_candidate, CandidateKind};
use crate::domain::{membership_tolerance, segment_in_domain, Point};
use crate::error::{Error, Result};
use crate::optimizers::{mean, PiecewiseLogStep};
use crate::scalar::{c_threshold, DomainParams};

/// Node slack tolerance relative to the candidate's magnitude.
pub const NODE_TOL: f64 = 1e-10;
/// Largest ratio denominator tried by [`find_split`].
pub const MAX_SPLIT_GRID: usize = 4096;

/// A step function on `(0, 1)` with exact averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction2 {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction2 {
    /// `values[i]` on `(breaks[i], breaks[i+1]]`, `breaks` from 0 to 1.
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || breaks.len() != values.len() + 1 {
            return Err(Error::Domain("need n values and n + 1 breakpoints".into()));
        }
        if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("breakpoints must increase from 0 to 1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("values must be finite".into()));
        }
        Ok(StepFunction2 { breaks, values })
    }

    pub fn constant(c: f64) -> Self {
        StepFunction2 { breaks: vec![0.0, 1.0], values: vec![c] }
    }

    /// Averages of `phi` on `n` equal cells.
    pub fn discretize(phi: &PiecewiseLogStep, n: usize) -> Result<Self> {
        let breaks: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let values = breaks.windows(2).map(|w| mean(phi, w[0], w[1])).collect();
        Self::new(breaks, values)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_piecewise(&self) -> PiecewiseLogStep {
        PiecewiseLogStep::steps(&self.breaks, &self.values).expect("validated step function")
    }

    fn first_piece(&self, a: f64) -> usize {
        self.breaks.partition_point(|&x| x <= a).saturating_sub(1).min(self.values.len() - 1)
    }

    /// `int_a^b g(phi)` as a weighted sum over the pieces.
    fn integral(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        let mut total = 0.0;
        let mut i = self.first_piece(a);
        while i < self.values.len() && self.breaks[i] < b {
            let w = self.breaks[i + 1].min(b) - self.breaks[i].max(a);
            if w > 0.0 {
                total += w * g(self.values[i]);
            }
            i += 1;
        }
        total
    }

    /// Whether the function is constant on `(a, b)`.
    pub fn constant_on(&self, a: f64, b: f64) -> bool {
        let i = self.first_piece(a);
        self.breaks[i + 1] >= b
    }

    /// The point `(<phi>_J, <e^phi>_J)`.
    pub fn point(&self, a: f64, b: f64) -> Point {
        if self.constant_on(a, b) {
            let v = self.values[self.first_piece(a)];
            return Point::on_gamma1(v);
        }
        let w = b - a;
        Point::new(self.integral(a, b, |v| v) / w, self.integral(a, b, f64::exp) / w)
    }

    pub fn abs_pow_mean(&self, a: f64, b: f64, p: f64) -> f64 {
        self.integral(a, b, |v| v.abs().powf(p)) / (b - a)
    }

    /// Estimate of the `A_infinity` characteristic of `e^phi` over intervals
    /// with endpoints on a `1/grid` lattice plus the breakpoints, polished by
    /// a local search.
    pub fn characteristic(&self, grid: usize) -> f64 {
        let mut ends: Vec<f64> = (0..=grid).map(|k| k as f64 / grid as f64).chain(self.breaks.iter().copied()).collect();
        ends.sort_by(f64::total_cmp);
        ends.dedup();
        let mut cum = vec![(0.0, 0.0); ends.len()];
        for k in 1..ends.len() {
            let (a, b) = (ends[k - 1], ends[k]);
            let prev = cum[k - 1];
            cum[k] = (prev.0 + self.integral(a, b, |v| v), prev.1 + self.integral(a, b, f64::exp));
        }
        let mut best = (1.0, 0.0, 1.0);
        for i in 0..ends.len() {
            for j in i + 1..ends.len() {
                let w = ends[j] - ends[i];
                let m = (cum[j].0 - cum[i].0) / w;
                let e = (cum[j].1 - cum[i].1) / w;
                let r = e * (-m).exp();
                if r > best.0 {
                    best = (r, ends[i], ends[j]);
                }
            }
        }
        let ratio = |a: f64, b: f64| {
            if !(a < b) {
                return 1.0;
            }
            let x = self.point(a, b);
            x.x2 * (-x.x1).exp()
        };
        let (mut r, mut a, mut b) = best;
        let step = 1.0 / grid as f64;
        for _ in 0..3 {
            let (na, va) = golden(|t| ratio(t, b), (a - step).max(0.0), (a + step).min(b));
            if va > r {
                r = va;
                a = na;
            }
            let (nb, vb) = golden(|t| ratio(a, t), (b - step).max(a), (b + step).min(1.0));
            if vb > r {
                r = vb;
                b = nb;
            }
        }
        r
    }
}

fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..50 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// A random step function with at most `max_steps` pieces.
pub fn random_step_function(rng: &mut SampleRng, max_steps: usize) -> StepFunction2 {
    let n = rng.gen_range(2..=max_steps.max(2));
    let mut inner: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.0..1.0)).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    let mut breaks = vec![0.0];
    breaks.extend(inner.into_iter().filter(|&b| b > 0.0 && b < 1.0));
    breaks.push(1.0);
    let sigma = rng.gen_range(0.1..1.5);
    let mut v: f64 = rng.gen_range(-1.0..1.0);
    let values = (0..breaks.len() - 1)
        .map(|_| {
            v += rng.gen_range(-sigma..sigma);
            v
        })
        .collect();
    StepFunction2::new(breaks, values).expect("random breakpoints are increasing")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub at: f64,
    /// `min(|Q-|, |Q+|) / |Q|`.
    pub theta: f64,
}

/// A splitting point of `(a, b)` whose child points span a segment inside
/// `Omega_{C1}`.
pub fn find_split(phi: &StepFunction2, interval: (f64, f64), c1: f64, _cfg: &ScanConfig) -> Result<Split> {
    let (a, b) = interval;
    if !(a < b) {
        return Err(Error::Domain(format!("empty interval ({a}, {b})")));
    }
    let tol = membership_tolerance();
    let try_ratio = |r: f64| -> bool {
        let s = a + r * (b - a);
        if !(s > a && s < b) {
            return false;
        }
        let (lo, hi) = (phi.point(a, s), phi.point(s, b));
        matches!(segment_in_domain(&lo, &hi, c1, &tol), Ok(true))
    };
    if try_ratio(0.5) {
        return Ok(Split { at: a + 0.5 * (b - a), theta: 0.5 });
    }
    let mut grid = 2;
    while grid <= MAX_SPLIT_GRID {
        // only the ratios new at this resolution, outward from 1/2
        for j in (1..=grid).step_by(2) {
            for sign in [-1.0, 1.0] {
                let r = 0.5 + sign * j as f64 / (2 * grid) as f64;
                if r > 0.0 && r < 1.0 && try_ratio(r) {
                    return Ok(Split { at: a + r * (b - a), theta: r.min(1.0 - r) });
                }
            }
        }
        grid *= 2;
    }
    Err(Error::SearchFailed(format!(
        "no split of ({a}, {b}) with C1={c1} on a 1/{MAX_SPLIT_GRID} grid; point {}",
        phi.point(a, b)
    )))
}

struct Induction<'a> {
    phi: &'a StepFunction2,
    kind: CandidateKind,
    params: DomainParams,
    p: f64,
    cfg: &'a ScanConfig,
    report: VerificationReport,
    min_theta: f64,
    max_open_leaf: f64,
    nodes: usize,
}

impl Induction<'_> {
    fn value(&self, x: &Point) -> Result<f64> {
        eval_candidate(&self.kind, x, &self.params)
    }

    fn visit(&mut self, a: f64, b: f64, level: u32, depth: u32) -> Result<()> {
        self.nodes += 1;
        let x = self.phi.point(a, b);
        let g = self.value(&x)?;
        let constant = self.phi.constant_on(a, b);
        if level == depth || constant {
            let truth = self.phi.abs_pow_mean(a, b, self.p);
            let tol = NODE_TOL * truth.abs().max(1.0);
            self.report.check(g - truth, tol, &[("a", a), ("b", b), ("leaf", 1.0)]);
            if !constant {
                self.max_open_leaf = self.max_open_leaf.max(b - a);
            }
            return Ok(());
        }
        let split = find_split(self.phi, (a, b), self.params.c, self.cfg)?;
        self.min_theta = self.min_theta.min(split.theta);
        let s = split.at;
        let rho = (s - a) / (b - a);
        let (lo, hi) = (self.phi.point(a, s), self.phi.point(s, b));
        let chord = rho * self.value(&lo)? + (1.0 - rho) * self.value(&hi)?;
        let tol = NODE_TOL * g.abs().max(1.0);
        self.report.check(g - chord, tol, &[("a", a), ("b", b), ("split", s)]);
        self.visit(a, s, level + 1, depth)?;
        self.visit(s, b, level + 1, depth)
    }
}

/// Replays the induction for `b_{p,C1}` down to `depth` levels and checks
/// `b_{p,C1}(<phi>, <e^phi>) <= <|phi|^p>`.
pub fn bellman_induct(phi: &StepFunction2, p: f64, c1: f64, depth: u32, cfg: &ScanConfig) -> VerificationReport {
    let mut report = VerificationReport::new(format!("induction p={p} C1={c1}"));
    if !(1.0..=2.0).contains(&p) {
        report.fail(format!("p={p} outside [1, 2]"));
        return report;
    }
    let params = match DomainParams::new(c1) {
        Ok(v) => v,
        Err(e) => {
            report.fail(e.to_string());
            return report;
        }
    };
    let mut p_used = p;
    if p > 1.0 && p < 2.0 && c1 < c_threshold(p) {
        report.flag(format!("C1={c1} below e^(p-2)/(p-1) for p={p}; replayed with p=2"));
        p_used = 2.0;
    }
    let mut run = Induction {
        phi,
        kind: CandidateKind::LowerP(p_used),
        params,
        p: p_used,
        cfg,
        report,
        min_theta: 0.5,
        max_open_leaf: 0.0,
        nodes: 0,
    };
    if let Err(e) = run.visit(0.0, 1.0, 0, depth) {
        run.report.fail(e.to_string());
        return run.report;
    }
    let x = phi.point(0.0, 1.0);
    match run.value(&x) {
        Ok(g) => {
            let truth = phi.abs_pow_mean(0.0, 1.0, p_used);
            run.report.check(g - truth, NODE_TOL * truth.abs().max(1.0), &[("final", 1.0)]);
        }
        Err(e) => run.report.fail(e.to_string()),
    }
    let (nodes, theta, leaf) = (run.nodes, run.min_theta, run.max_open_leaf);
    run.report.flag(format!("nodes={nodes} min_theta={theta:.6} max_nonconstant_leaf_width={leaf:.3e}"));
    run.report
}
