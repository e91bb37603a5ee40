//! Local convexity/concavity, Monge-Ampere degeneracy, slope-form gradients
//! and boundary conditions of the candidates.

use rand::Rng;

use super::report::VerificationReport;
use super::sampling::{log_uniform, random_interior_point, random_point, sub_rng, SampleRng};
use crate::candidates::{eval_candidate, slope_form, CandidateKind};
use crate::domain::{
    classify_b1, classify_d, in_domain, membership_tolerance, segment_in_domain, solve_d, Branch, Point,
};
use crate::error::Result;
use crate::scalar::{c_threshold, DomainParams};
use crate::tolerance::Tolerance;

pub const SEGMENT_TOL: f64 = 1e-9;
pub const MA_TOL: f64 = 1e-4;
pub const GRADIENT_TOL: f64 = 1e-5;

pub fn candidate_label(kind: &CandidateKind) -> String {
    match *kind {
        CandidateKind::LowerP(p) if p == 1.0 => "b_1".into(),
        CandidateKind::LowerP(p) => format!("b_p(p={p})"),
        CandidateKind::UpperSquare => "B_2".into(),
        CandidateKind::ExpDelta(d) => format!("A(delta={d:.6})"),
        CandidateKind::WeakType(l) => format!("D(lambda={l})"),
    }
}

/// Candidates that are meaningful for this `C`: `b_p` only above its
/// threshold and `A` only below the blow-up exponent.
pub fn candidates_for(params: &DomainParams) -> Vec<CandidateKind> {
    let mut out = vec![CandidateKind::LowerP(1.0)];
    for p in [1.25, 1.5, 1.75, 2.0] {
        if params.c >= c_threshold(p) {
            out.push(CandidateKind::LowerP(p));
        }
    }
    out.push(CandidateKind::UpperSquare);
    out.push(CandidateKind::ExpDelta(1.0));
    if !params.is_trivial() {
        out.push(CandidateKind::ExpDelta(0.5 * (1.0 + 1.0 / params.xi_plus)));
    }
    out
}

/// A random segment inside `Omega_C`, shrunk until it fits.
pub fn random_segment(rng: &mut SampleRng, params: &DomainParams) -> Option<(Point, Point)> {
    let mid = random_point(rng, params);
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut half = 10f64.powf(rng.gen_range(-3.0..0.3));
    // endpoints must sit in the closed domain exactly: near Gamma_1 the
    // candidates are steep in x2 and tolerance-admitted outsiders are clamped
    let tol = Tolerance { abs: 0.0, rel: 0.0, max_iter: 1 };
    for _ in 0..60 {
        let dx = (half * theta.cos(), half * mid.x2 * theta.sin());
        let a = Point::new(mid.x1 - dx.0, mid.x2 - dx.1);
        let b = Point::new(mid.x1 + dx.0, mid.x2 + dx.1);
        if in_domain(&a, params, &tol) && in_domain(&b, params, &tol) {
            if let Ok(true) = segment_in_domain(&a, &b, params.c, &tol) {
                return Some((a, b));
            }
        }
        half *= 0.5;
    }
    None
}

/// Convex-combination inequality on `n` random segments; lower candidates
/// must be convex, upper ones concave.
pub fn check_segments(kind: &CandidateKind, params: &DomainParams, n: usize, seed: u64) -> VerificationReport {
    let mut report = VerificationReport::new(format!("segments {} C={}", candidate_label(kind), params.c));
    let mut rng = sub_rng(seed, 1);
    let sign = if kind.is_lower() { 1.0 } else { -1.0 };
    let mut done = 0;
    let mut attempts = 0;
    while done < n && attempts < 20 * n {
        attempts += 1;
        let Some((a, b)) = random_segment(&mut rng, params) else { continue };
        let s: f64 = rng.gen_range(0.05..0.95);
        let m = a.lerp(&b, s);
        let vals = (|| -> Result<(f64, f64, f64)> {
            Ok((eval_candidate(kind, &a, params)?, eval_candidate(kind, &b, params)?, eval_candidate(kind, &m, params)?))
        })();
        match vals {
            Ok((ga, gb, gm)) => {
                let chord = (1.0 - s) * ga + s * gb;
                let slack = sign * (chord - gm);
                let tol = SEGMENT_TOL * gm.abs().max(1.0);
                report.check(-slack, tol, &[("a1", a.x1), ("a2", a.x2), ("b1", b.x1), ("b2", b.x2), ("s", s)]);
            }
            Err(e) => report.fail(format!("evaluation error: {e}")),
        }
        done += 1;
    }
    if done < n {
        report.fail(format!("only {done} of {n} segments could be generated"));
    }
    report
}

/// Smooth-region label used to keep finite-difference stencils away from
/// the seams of the candidate.
pub fn smooth_region(kind: &CandidateKind, x: &Point, params: &DomainParams) -> Result<String> {
    let tol = Tolerance::default();
    Ok(match *kind {
        CandidateKind::LowerP(p) if p == 1.0 => classify_b1(x, params)?.to_string(),
        CandidateKind::LowerP(_) => {
            let u = x.x1 - solve_d(x, params, Branch::Plus, &tol)?;
            if u > 0.0 { "u>0" } else { "u<0" }.into()
        }
        CandidateKind::UpperSquare | CandidateKind::ExpDelta(_) => "all".into(),
        CandidateKind::WeakType(lambda) => classify_d(x, lambda, params)?.to_string(),
    })
}

/// Relative Monge-Ampere residual `|det Hess|` from central differences,
/// or `None` when no stencil fits inside the point's smooth region. The
/// step is halved until consecutive estimates agree best; that pair is
/// extrapolated once.
pub fn ma_residual(kind: &CandidateKind, x: &Point, params: &DomainParams) -> Result<Option<f64>> {
    let r = x.ratio();
    let mut room = (r - 1.0).min(params.c - r) / r;
    if let CandidateKind::WeakType(lambda) = *kind {
        // D fans out of its jump point
        let (s, z) = (x.x1 - lambda, x.ratio_at(lambda) - 1.0);
        room = room.min(s.hypot(z));
    }
    // unit step in scaled coordinates: (w, w x2)
    let w = (params.c - 1.0).min(1.0).min(room);
    let region = smooth_region(kind, x, params)?;
    let tol = membership_tolerance();
    let stencil = |t: f64| -> Result<Option<[[f64; 3]; 3]>> {
        let mut g = [[0.0; 3]; 3];
        for (i, di) in [-1.0, 0.0, 1.0].iter().enumerate() {
            for (j, dj) in [-1.0, 0.0, 1.0].iter().enumerate() {
                let y = Point::new(x.x1 + di * t * w, x.x2 + dj * t * w * x.x2);
                if !in_domain(&y, params, &tol) || smooth_region(kind, &y, params)? != region {
                    return Ok(None);
                }
                g[i][j] = eval_candidate(kind, &y, params)?;
            }
        }
        Ok(Some(g))
    };
    let second = |g: &[[f64; 3]; 3], t: f64| {
        let c = g[1][1];
        [
            (g[2][1] - 2.0 * c + g[0][1]) / (t * t),
            (g[1][2] - 2.0 * c + g[1][0]) / (t * t),
            (g[2][2] - g[2][0] - g[0][2] + g[0][0]) / (4.0 * t * t),
        ]
    };
    let mut prev: Option<[f64; 3]> = None;
    let mut g0 = 0.0;
    let mut choice: Option<(f64, [f64; 3], f64)> = None;
    let mut since_best = 0;
    let mut t = 0.1;
    while t > 1e-7 && since_best < 4 {
        let Some(g) = stencil(t)? else {
            if prev.is_some() {
                break;
            }
            t *= 0.5;
            continue;
        };
        g0 = g[1][1];
        let d = second(&g, t);
        if let Some(p) = prev {
            let norm = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let e = (0..3).map(|k| (d[k] - p[k]).abs()).fold(0.0, f64::max) / norm.max(f64::MIN_POSITIVE);
            if choice.map_or(true, |(best, _, _)| e < best) {
                choice = Some((e, [0, 1, 2].map(|k| (4.0 * d[k] - p[k]) / 3.0), t));
                since_best = 0;
            } else {
                since_best += 1;
            }
        }
        prev = Some(d);
        t *= 0.5;
    }
    let Some((_, [s11, s22, s12], t)) = choice else { return Ok(None) };
    // resolution of the difference quotients: anything below is rounding
    let floor = 1e-6 * (1.0 + g0.abs()) + 1e4 * f64::EPSILON * (1.0 + g0.abs()) / (t * t);
    let scale = s11 * s11 + s22 * s22 + floor * floor;
    Ok(Some((s11 * s22 - s12 * s12).abs() / ((s11 * s22).abs() + s12 * s12 + scale)))
}

/// Point spread around `center` wide enough to reach every region; the
/// offset from `Gamma_1` is log-uniform so thin slivers next to it are hit.
fn region_point(rng: &mut SampleRng, params: &DomainParams, center: f64) -> Point {
    let (xm, xp) = (params.xi_minus, params.xi_plus);
    let s = rng.gen_range(2.0 * (xm - xp) - 1.0..xp + 1.0);
    let span = params.c - 1.0;
    let r = 1.0 + span * log_uniform(rng, 1e-3, 1.0 - 1e-3);
    Point::on_gamma(r, center + s)
}

/// Monge-Ampere residual at `per_region` points in each smooth region.
pub fn check_monge_ampere(
    kind: &CandidateKind,
    params: &DomainParams,
    regions: &[&str],
    per_region: usize,
    seed: u64,
) -> VerificationReport {
    let mut report = VerificationReport::new(format!("monge-ampere {} C={}", candidate_label(kind), params.c));
    let mut rng = sub_rng(seed, 2);
    let mut counts = vec![0usize; regions.len()];
    let lambda_shift = match *kind {
        CandidateKind::WeakType(l) => l,
        _ => 0.0,
    };
    let budget = 400 * per_region * regions.len().max(1);
    let mut tries = 0;
    while counts.iter().any(|&c| c < per_region) && tries < budget {
        tries += 1;
        let x = region_point(&mut rng, params, lambda_shift);
        let region = match smooth_region(kind, &x, params) {
            Ok(r) => r,
            Err(e) => {
                report.fail(format!("classification error: {e}"));
                continue;
            }
        };
        let Some(idx) = regions.iter().position(|r| *r == region) else { continue };
        if counts[idx] >= per_region {
            continue;
        }
        match ma_residual(kind, &x, params) {
            Ok(Some(r)) => {
                counts[idx] += 1;
                report.check(r, MA_TOL, &[("x1", x.x1), ("x2", x.x2)]);
            }
            Ok(None) => {}
            Err(e) => report.fail(format!("evaluation error: {e}")),
        }
    }
    for (r, c) in regions.iter().zip(&counts) {
        if *c < per_region {
            report.fail(format!("region {r}: only {c} of {per_region} stencils fit"));
        }
    }
    report
}

/// Slope-form gradient against central differences.
pub fn check_gradients(kind: &CandidateKind, params: &DomainParams, n: usize, seed: u64) -> VerificationReport {
    let mut report = VerificationReport::new(format!("gradient {} C={}", candidate_label(kind), params.c));
    let mut rng = sub_rng(seed, 3);
    let tol = membership_tolerance();
    let mut done = 0;
    let mut tries = 0;
    while done < n && tries < 50 * n {
        tries += 1;
        let x = random_interior_point(&mut rng, params, 0.05);
        let form = match slope_form(kind, &x, params) {
            Ok(Some(f)) => f,
            Ok(None) => continue,
            Err(e) => {
                report.fail(format!("slope form error: {e}"));
                continue;
            }
        };
        let g = form.gradient();
        let h1 = 1e-6;
        let h2 = 1e-6 * x.x2;
        let pts = [
            Point::new(x.x1 + h1, x.x2),
            Point::new(x.x1 - h1, x.x2),
            Point::new(x.x1, x.x2 + h2),
            Point::new(x.x1, x.x2 - h2),
        ];
        if pts.iter().any(|p| !in_domain(p, params, &tol)) {
            continue;
        }
        let v: Result<Vec<f64>> = pts.iter().map(|p| eval_candidate(kind, p, params)).collect();
        let Ok(v) = v else {
            report.fail("evaluation error near gradient stencil");
            continue;
        };
        let fd = [(v[0] - v[1]) / (2.0 * h1), (v[2] - v[3]) / (2.0 * h2)];
        for k in 0..2 {
            let scale = g[k].abs().max(1.0);
            report.check((g[k] - fd[k]).abs() / scale, GRADIENT_TOL, &[("x1", x.x1), ("x2", x.x2), ("component", k as f64)]);
        }
        done += 1;
    }
    report
}

/// Boundary values on `Gamma_1` and continuity as the boundary is approached.
pub fn check_boundary(kind: &CandidateKind, params: &DomainParams) -> VerificationReport {
    let mut report = VerificationReport::new(format!("boundary {} C={}", candidate_label(kind), params.c));
    let level = match *kind {
        CandidateKind::WeakType(l) => Some(l),
        _ => None,
    };
    for i in 0..=80 {
        let t = -4.0 + 0.1 * i as f64;
        let f = kind.boundary(t);
        let on = eval_candidate(kind, &Point::on_gamma1(t), params);
        match on {
            Ok(v) => {
                report.check_close(v, f, 1e-13 * f.abs().max(1.0), &[("t", t)]);
            }
            Err(e) => report.fail(format!("evaluation error at t={t}: {e}")),
        }
        if level.is_some_and(|l| (t - l).abs() < 0.3) || params.is_trivial() {
            continue;
        }
        for eta in [1e-6, 1e-8, 1e-10] {
            let x = Point::new(t, t.exp() * (1.0 + eta * (params.c - 1.0)));
            if let Ok(v) = eval_candidate(kind, &x, params) {
                let bound = 20.0 * eta.sqrt() * (1.0 + f.abs());
                report.check((v - f).abs(), bound, &[("t", t), ("eta", eta)]);
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_pass() {
        let params = DomainParams::new(2.0).unwrap();
        for kind in candidates_for(&params) {
            let r = check_segments(&kind, &params, 300, 7);
            assert!(r.passed, "{r}");
            let b = check_boundary(&kind, &params);
            assert!(b.passed, "{b}");
        }
        let r = check_segments(&CandidateKind::WeakType(0.4), &params, 300, 7);
        assert!(r.passed, "{r}");
    }

    #[test]
    fn monge_ampere_small() {
        let params = DomainParams::new(3.0).unwrap();
        let r = check_monge_ampere(&CandidateKind::LowerP(1.5), &params, &["u>0", "u<0"], 50, 3);
        assert!(r.passed, "{r}");
        let r = check_monge_ampere(&CandidateKind::WeakType(0.5), &params, &["Omega1", "Omega2"], 50, 3);
        assert!(r.passed, "{r}");
        let r = check_gradients(&CandidateKind::UpperSquare, &params, 50, 3);
        assert!(r.passed, "{r}");
    }
}
