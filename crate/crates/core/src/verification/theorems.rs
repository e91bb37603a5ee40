//! Theorem-level checks built from the candidates, optimizers and scanners.

use rand::Rng;

use super::report::VerificationReport;
use super::sampling::{random_point, sub_rng, OptimizerKind, SampleRng};
use super::scan::{scan_ainfty, scan_bmo_norm, ScanConfig};
use crate::candidates::{eval_b_1, eval_b_p, max_d_over_vertical};
use crate::domain::Point;
use crate::error::{Error, Result};
use crate::optimizers::{abs_pow_average, eta, mean, measure_above, measure_below, psi, PiecewiseLogStep};
use crate::roots::brent;
use crate::scalar::{c_threshold, eps0, jn_sharp_c, k_inverse, k_of_c, weak_type_bound, DomainParams};
use crate::tolerance::Tolerance;

pub const CHAR_TOL: f64 = 1e-4;
pub const NORM_TOL: f64 = 1e-6;
pub const T7_TOL: f64 = 1e-3;
pub const T8_TOL: f64 = 1e-6;
pub const WEAK_JN_TOL: f64 = 1e-9;
pub const MAIN_LIMIT_TOL: f64 = 1e-3;

const P_GRID: [f64; 4] = [1.25, 1.5, 1.75, 2.0];

/// A random interval from the scan family.
pub fn random_interval(rng: &mut SampleRng, depth: u32) -> (f64, f64) {
    if rng.gen_bool(0.25) {
        let k = rng.gen_range(0..=4 * depth);
        return (0.0, (-(k as f64)).exp2());
    }
    let level = rng.gen_range(0..=depth);
    let n = 1u64 << level;
    let k = rng.gen_range(0..n);
    let h = 1.0 / n as f64;
    (k as f64 * h, (k + 1) as f64 * h)
}

/// Lower bounds on `BMO^p` norms and the upper bound for `p = 2`.
pub fn check_theorem_t3(c: f64, cfg: &ScanConfig, seed: u64) -> Result<VerificationReport> {
    let params = DomainParams::new(c)?;
    let mut report = VerificationReport::new(format!("theorem t3 C={c}"));
    let extremal = PiecewiseLogStep::log_ramp(params.xi_plus);
    let ch = scan_ainfty(&extremal, cfg)?;
    report.check_close(ch.value, c, CHAR_TOL * c, &[("C", c)]);
    for p in P_GRID {
        if c < c_threshold(p) {
            report.flag(format!("p={p} skipped: C below e^(p-2)/(p-1)"));
            continue;
        }
        let target = eps0(p)? * params.xi_plus;
        let norm = scan_bmo_norm(&extremal, p, cfg)?;
        report.check_close(norm.value, target, NORM_TOL * target.max(1e-300), &[("p", p)]);
    }
    // p = 1: the full-interval oscillation of psi at (0, C) is k(C); its norm is larger
    let top = psi(&Point::new(0.0, c), &params)?;
    let k = k_of_c(&params);
    let osc = abs_pow_average(&top, 0.0, 1.0, 1.0, mean(&top, 0.0, 1.0));
    report.check_close(osc, k, 1e-12 * k.max(1.0), &[("p", 1.0)]);
    let n1 = scan_bmo_norm(&top, 1.0, cfg)?;
    report.check_at_least(n1.value, k, NORM_TOL * k.max(1.0), &[("p", 1.0), ("a", n1.witness.0), ("b", n1.witness.1)]);

    let mut rng = sub_rng(seed, 10);
    let samples = cfg.samples.clamp(1, 40);
    for _ in 0..samples {
        let x = random_point(&mut rng, &params);
        for kind in [OptimizerKind::PhiPlus, OptimizerKind::PhiMinus] {
            let phi = kind.build(&x, &params)?;
            let ch = scan_ainfty(&phi, cfg)?.value;
            if ch <= 1.0 + 1e-12 {
                continue;
            }
            let own = DomainParams::new(ch)?;
            let w = [("x1", x.x1), ("x2", x.x2), ("char", ch)];
            let n2 = scan_bmo_norm(&phi, 2.0, cfg)?.value;
            report.check_at_least(n2, own.xi_plus, NORM_TOL * own.xi_plus, &w);
            report.check(n2 - own.xi_minus.abs(), NORM_TOL * own.xi_minus.abs(), &w);
            if kind == OptimizerKind::PhiPlus {
                for p in [1.5] {
                    if ch >= c_threshold(p) {
                        let np = scan_bmo_norm(&phi, p, cfg)?.value;
                        let bound = eps0(p)? * own.xi_plus;
                        report.check_at_least(np, bound, NORM_TOL * bound, &w);
                    }
                }
                let n1 = scan_bmo_norm(&phi, 1.0, cfg)?.value;
                let k = k_of_c(&own);
                report.check_at_least(n1, k, NORM_TOL * k, &w);
            }
        }
    }
    Ok(report)
}

/// Characteristic of `e^{delta phi}` for the extremal `phi = xi+ ln(1/t)`.
pub fn check_theorem_t7(c: f64, delta_grid: &[f64], cfg: &ScanConfig) -> Result<VerificationReport> {
    let params = DomainParams::new(c)?;
    let mut report = VerificationReport::new(format!("theorem t7 C={c}"));
    let extremal = PiecewiseLogStep::log_ramp(params.xi_plus);
    for &delta in delta_grid {
        if !(delta >= 1.0 && delta * params.xi_plus < 1.0) {
            report.flag(format!("delta={delta} outside [1, 1/xi+)"));
            continue;
        }
        let r = delta * params.xi_plus;
        let bound = (-r).exp() / (1.0 - r);
        let ch = scan_ainfty(&extremal.scaled(delta), cfg)?;
        report.check(ch.value - bound, T7_TOL * bound, &[("delta", delta)]);
        report.check_close(ch.value, bound, T7_TOL * bound, &[("delta", delta)]);
    }
    Ok(report)
}

/// The maximizing point of `D_{lambda,C}(0, .)`.
pub fn t8_maximizer(lambda: f64, params: &DomainParams) -> Point {
    if lambda <= 0.0 || params.is_trivial() {
        Point::new(0.0, 1.0)
    } else if lambda <= -params.xi_minus {
        let y = lambda.exp() * (-params.c * params.xi_minus.exp() * lambda + 1.0);
        Point::new(0.0, y.clamp(1.0, params.c))
    } else {
        Point::new(0.0, params.c)
    }
}

/// Distribution envelope: attained by `eta` and never exceeded by random
/// optimizers on random subintervals.
pub fn check_theorem_t8(
    c: f64,
    lambda_grid: &[f64],
    cfg: &ScanConfig,
    random_samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let params = DomainParams::new(c)?;
    let mut report = VerificationReport::new(format!("theorem t8 C={c}"));
    for &lambda in lambda_grid {
        let env = max_d_over_vertical(lambda, &params).envelope;
        let x = t8_maximizer(lambda, &params);
        let phi = eta(&x, lambda, &params)?;
        // <eta> = x1 = 0 exactly; the level set sits on a step of eta
        let dist = measure_above(&phi, lambda, 0.0, 1.0);
        report.check_close(dist, env, T8_TOL, &[("lambda", lambda), ("x2", x.x2)]);
    }
    if lambda_grid.is_empty() {
        return Ok(report);
    }
    let mut rng = sub_rng(seed, 11);
    let depth = cfg.grid_depth;
    for _ in 0..random_samples {
        let lambda = lambda_grid[rng.gen_range(0..lambda_grid.len())];
        let x = random_point(&mut rng, &params);
        let kind = match rng.gen_range(0..4) {
            0 => OptimizerKind::PhiPlus,
            1 => OptimizerKind::PhiMinus,
            2 => OptimizerKind::Psi,
            _ => OptimizerKind::Eta(x.x1 + rng.gen_range(-2.0..4.0)),
        };
        let phi = kind.build(&x, &params)?;
        let (a, b) = random_interval(&mut rng, depth);
        let m = mean(&phi, a, b);
        let dist = measure_above(&phi, m + lambda, a, b) / (b - a);
        let env = max_d_over_vertical(lambda, &params).envelope;
        report.check(dist - env, T8_TOL, &[("lambda", lambda), ("x1", x.x1), ("x2", x.x2), ("a", a), ("b", b)]);
    }
    Ok(report)
}

/// `|{|phi - <phi>_J| >= lambda}| / |J|` against the weak-type bound built
/// from the scanned `BMO^p` norm, on `(0, 1)` and on scanned subintervals.
pub fn check_weak_jn(p: f64, phi: &PiecewiseLogStep, lambda_grid: &[f64], cfg: &ScanConfig) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(format!("weak JN p={p}"));
    let norm = scan_bmo_norm(phi, p, cfg)?.value;
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Precondition(format!("scanned BMO^{p} norm must be finite and positive, got {norm}")));
    }
    let bounds = lambda_grid
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| Ok((l, weak_type_bound(p, l, norm)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut intervals = super::scan::interval_family(cfg.grid_depth, cfg.geometric_refine_at_zero);
    intervals.retain(|&(a, b)| b - a > 0.0);
    for (a, b) in intervals {
        let m = mean(phi, a, b);
        let w = b - a;
        for &(lambda, bound) in &bounds {
            let dist = (measure_above(phi, m + lambda, a, b) + measure_below(phi, m - lambda, a, b)) / w;
            report.check(dist - bound, WEAK_JN_TOL * bound.max(1e-300), &[("lambda", lambda), ("a", a), ("b", b)]);
        }
    }
    Ok(report)
}

/// `G(C) = b(0, C)^{1/p}` along an increasing grid of `C`.
pub fn sharp_g(p: f64, c: f64) -> Result<f64> {
    let params = DomainParams::new(c)?;
    let x = Point::new(0.0, c);
    if p == 1.0 {
        return eval_b_1(&x, &params);
    }
    Ok(eval_b_p(&x, p, &params)?.powf(1.0 / p))
}

/// Monotonicity of `G` past `C0`, its limit and its inverse.
pub fn check_theorem_main(p: f64, c_grid: &[f64], _cfg: &ScanConfig) -> Result<VerificationReport> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::Domain(format!("p must be in [1, 2], got {p}")));
    }
    if c_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Precondition("C grid must be increasing".into()));
    }
    let mut report = VerificationReport::new(format!("theorem main p={p}"));
    let c0 = c_threshold(p);
    let mut prev: Option<(f64, f64)> = None;
    let tol = Tolerance::default();
    for &c in c_grid {
        let g = sharp_g(p, c)?;
        if c >= c0 {
            if let Some((pc, pg)) = prev {
                // strictly increasing: each step must gain
                report.check(pg - g, 0.0, &[("C", c), ("C_prev", pc)]);
            }
            prev = Some((c, g));
            // inverse of G against the closed form
            if c > 1.0 + 1e-9 && c < 1e12 {
                let expected = if p == 1.0 { k_inverse(g, &tol) } else { jn_sharp_c(g, p) };
                if let Ok(expected) = expected {
                    let f = |t: f64| sharp_g(p, t).map_or(f64::NAN, |v| v - g);
                    let lo = c0.max(1.0 + 1e-12);
                    match brent(f, lo, 10.0 * c, &tol) {
                        Ok(inv) => {
                            report.check_close(inv, expected, 1e-8 * expected, &[("C", c), ("G", g)]);
                        }
                        Err(e) => report.fail(format!("inverting G at C={c}: {e}")),
                    }
                }
            }
        }
    }
    let limit = eps0(p)?;
    let far = sharp_g(p, 1e6)?;
    report.check((far - limit).abs(), MAIN_LIMIT_TOL, &[("C", 1e6), ("G", far)]);
    report.check(far - limit, 0.0, &[("C", 1e6), ("G_above_limit", far)]);
    Ok(report)
}
