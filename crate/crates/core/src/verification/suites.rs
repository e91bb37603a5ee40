//! Named verification suites; each returns reports in a fixed order.

use rayon::prelude::*;

use super::convexity::{candidates_for, check_boundary, check_gradients, check_monge_ampere, check_segments};
use super::induction::{bellman_induct, random_step_function, StepFunction2};
use super::report::VerificationReport;
use super::sampling::{random_optimizer, sub_rng, OptimizerKind, OptimizerSample};
use super::scan::{scan_ainfty, ScanConfig};
use super::theorems::{
    check_theorem_main, check_theorem_t3, check_theorem_t7, check_theorem_t8, check_weak_jn,
};
use crate::candidates::{eval_candidate, CandidateKind};
use crate::domain::Point;
use crate::error::{Error, Result};
use crate::optimizers::{averages, averages_quadrature, phi_plus, PiecewiseLogStep};
use crate::quadrature::{integrate, integrate_to_infinity};
use crate::scalar::{eps0, jn_sharp_c, omega, DomainParams};

pub const SUITES: [&str; 11] = [
    "admissibility",
    "boundary",
    "constants",
    "convexity",
    "induction",
    "main",
    "optimizers",
    "t3",
    "t7",
    "t8",
    "weak_jn",
];

/// Parameters shared by all suites.
#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub cfg: ScanConfig,
    pub seed: u64,
}

pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<Vec<VerificationReport>> {
    let cfg = &opts.cfg;
    cfg.validate()?;
    let seed = opts.seed;
    let n = cfg.samples.max(1);
    Ok(match name {
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(run_suite(s, opts)?);
            }
            out
        }
        "admissibility" => vec![admissibility(n.min(200), (1.01, 1e3), cfg, seed)],
        "boundary" => boundary(&[1.5, 2.0, 10.0]),
        "constants" => vec![endpoint_constants(), sharp_c_p2(100), omega_identity(9)],
        "convexity" => vec![convexity(&[1.2, 2.0, 10.0, 1000.0], n, (n / 10).max(10), seed)],
        "induction" => vec![induction(n.min(100), 32, 10, seed)],
        "main" => {
            let grid = main_grid();
            [1.0, 1.5, 2.0].iter().map(|&p| check_theorem_main(p, &grid, cfg)).collect::<Result<_>>()?
        }
        "optimizers" => vec![optimality(n, (1.01, 1e3), seed)],
        "t3" => [1.5, 2.0, 10.0].iter().map(|&c| check_theorem_t3(c, cfg, seed)).collect::<Result<_>>()?,
        "t7" => vec![check_theorem_t7(2.0, &t7_grid(2.0, 20)?, cfg)?],
        "t8" => [1.5, 2.0, 10.0]
            .iter()
            .map(|&c| t8_random(c, &t8_grid(c, 50)?, n, cfg, seed))
            .collect::<Result<_>>()?,
        "weak_jn" => vec![weak_jn(&[1.25, 1.5, 1.75, 2.0], n.min(100), &weak_jn_grid(50), cfg, seed)?],
        other => return Err(Error::Domain(format!("unknown suite '{other}'; known: all, {}", SUITES.join(", ")))),
    })
}

/// Increasing `C` grid from 1.01 to `10^6`.
pub fn main_grid() -> Vec<f64> {
    (0..=120).map(|i| 1.01 * (1e6f64 / 1.01).powf(i as f64 / 120.0)).collect()
}

/// `count` exponents evenly spread over `[1, 1/xi+)`.
pub fn t7_grid(c: f64, count: usize) -> Result<Vec<f64>> {
    let p = DomainParams::new(c)?;
    let crit = 1.0 / p.xi_plus;
    Ok((0..count).map(|i| 1.0 + (crit - 1.0) * i as f64 / count as f64).collect())
}

/// Levels covering all three envelope cases.
pub fn t8_grid(c: f64, count: usize) -> Result<Vec<f64>> {
    let p = DomainParams::new(c)?;
    let top = 4.0 * p.xi_minus.abs() + 1.0;
    Ok((0..count).map(|i| -1.0 + (top + 1.0) * i as f64 / (count - 1) as f64).collect())
}

pub fn weak_jn_grid(count: usize) -> Vec<f64> {
    (1..=count).map(|i| 0.1 * i as f64).collect()
}

/// Runs `f` on `n` independent random streams in parallel, merging in order.
fn parallel<F>(name: &str, n: usize, seed: u64, f: F) -> VerificationReport
where
    F: Fn(&mut super::sampling::SampleRng) -> VerificationReport + Sync,
{
    let reports: Vec<VerificationReport> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = sub_rng(seed, 1000 + i as u64);
            f(&mut rng)
        })
        .collect();
    VerificationReport::merged(name, reports)
}

pub fn endpoint_constants() -> VerificationReport {
    let mut r = VerificationReport::new("endpoint constants");
    match (eps0(1.0), eps0(2.0)) {
        (Ok(a), Ok(b)) => {
            r.check_close(a, 2.0 / std::f64::consts::E, 1e-12, &[("p", 1.0)]);
            r.check_close(b, 1.0, 1e-12, &[("p", 2.0)]);
        }
        _ => r.fail("eps0 failed at an endpoint"),
    }
    r
}

/// `C(eps, 2)` against its closed form and against the exponential average
/// of `eps (phi0 - <phi0>)` by quadrature.
pub fn sharp_c_p2(points: usize) -> VerificationReport {
    let mut r = VerificationReport::new("sharp C(eps, 2)");
    for i in 0..points {
        let eps = (i as f64 + 0.5) / points as f64;
        let closed = (-eps).exp() / (1.0 - eps);
        match jn_sharp_c(eps, 2.0) {
            Ok(c) => {
                r.check_close(c, closed, 1e-12 * closed, &[("eps", eps)]);
            }
            Err(e) => r.fail(e.to_string()),
        }
        // int_0^1 e^{eps (ln(1/t) - 1)} dt with t = e^{-y}
        let q = integrate_to_infinity(|y: f64| (eps * (y - 1.0) - y).exp(), 0.0, 1e-300, 1e-13);
        r.check_close(q.value, closed, 1e-8 * closed, &[("eps", eps), ("quadrature", 1.0)]);
    }
    r
}

/// `omega(p)^p = int_0^1 |ln t + 1|^p dt`.
pub fn omega_identity(points: usize) -> VerificationReport {
    let mut r = VerificationReport::new("omega identity");
    for i in 0..points {
        let p = 1.0 + i as f64 / (points - 1).max(1) as f64;
        let f = |t: f64| ((t.ln() + 1.0).abs()).powf(p);
        let split = (-1f64).exp();
        let q = integrate(f, 0.0, split, 1e-300, 1e-13).value + integrate(f, split, 1.0, 1e-300, 1e-13).value;
        match omega(p) {
            Ok(w) => {
                let lhs = w.powf(p);
                r.check_close(lhs, q, 1e-8 * q, &[("p", p)]);
            }
            Err(e) => r.fail(e.to_string()),
        }
    }
    r
}

fn rel_tol(target: f64, rel: f64) -> f64 {
    rel * target.abs() + 1e-14
}

/// Constraint reproduction and optimality of one optimizer.
pub fn check_optimizer(sample: &OptimizerSample, report: &mut VerificationReport) {
    let OptimizerSample { params, x, kind, phi, targets } = sample;
    let w = |tag: f64| [("C", params.c), ("x1", x.x1), ("x2", x.x2), ("kind", tag)];
    let tag = match kind {
        OptimizerKind::PhiPlus => 0.0,
        OptimizerKind::PhiMinus => 1.0,
        OptimizerKind::Psi => 2.0,
        OptimizerKind::Eta(_) => 3.0,
    };
    for (cand, f) in targets {
        let closed = averages(phi, f, 0.0, 1.0);
        let quad = averages_quadrature(phi, f, 0.0, 1.0);
        let value = eval_candidate(cand, x, params);
        let (Ok(closed), Ok(quad), Ok(value)) = (closed, quad, value) else {
            report.fail(format!("evaluation failed for {} at C={} x={x}", kind.name(), params.c));
            continue;
        };
        report.check_close(closed.mean, x.x1, 1e-9, &w(tag));
        report.check_close(closed.exp_mean.to_f64(), x.x2, 1e-9 * x.x2, &w(tag));
        report.check_close(quad.mean, closed.mean, rel_tol(closed.mean, 1e-8), &w(tag));
        report.check_close(quad.exp_mean.to_f64(), closed.exp_mean.to_f64(), rel_tol(x.x2, 1e-8), &w(tag));
        let fc = closed.f_mean.to_f64();
        let fq = quad.f_mean.to_f64();
        report.check_close(fc, value, rel_tol(value, 1e-8), &w(tag));
        report.check_close(fq, value, rel_tol(value, 1e-8), &w(tag));
    }
}

pub fn optimality(n: usize, c_range: (f64, f64), seed: u64) -> VerificationReport {
    parallel("optimizer optimality", n, seed, |rng| {
        let mut r = VerificationReport::new("optimizer optimality");
        match random_optimizer(rng, c_range) {
            Ok(s) => check_optimizer(&s, &mut r),
            Err(e) => r.fail(e.to_string()),
        }
        r
    })
}

pub fn admissibility(n: usize, c_range: (f64, f64), cfg: &ScanConfig, seed: u64) -> VerificationReport {
    let mut report = parallel("admissibility", n, seed, |rng| {
        let mut r = VerificationReport::new("admissibility");
        match random_optimizer(rng, c_range).and_then(|s| Ok((scan_ainfty(&s.phi, cfg)?, s))) {
            Ok((scan, s)) => {
                let c = s.params.c;
                r.check(
                    scan.value - c,
                    1e-6 * c,
                    &[("C", c), ("x1", s.x.x1), ("x2", s.x.x2), ("a", scan.witness.0), ("b", scan.witness.1)],
                );
            }
            Err(e) => r.fail(e.to_string()),
        }
        r
    });
    for c in [1.01, 2.0, 10.0, 1e3] {
        let attained = DomainParams::new(c)
            .and_then(|p| phi_plus(&Point::new(0.0, c), &p))
            .and_then(|phi| scan_ainfty(&phi, cfg));
        match attained {
            Ok(s) => {
                report.check_close(s.value, c, 1e-4 * c, &[("C", c), ("attained", 1.0)]);
            }
            Err(e) => report.fail(e.to_string()),
        }
    }
    report
}

pub fn boundary(cs: &[f64]) -> Vec<VerificationReport> {
    let mut out = Vec::new();
    for &c in cs {
        let Ok(params) = DomainParams::new(c) else { continue };
        let mut kinds = candidates_for(&params);
        kinds.extend([-1.0, 0.0, 0.7, 3.0].map(CandidateKind::WeakType));
        let reports = kinds.iter().map(|k| check_boundary(k, &params));
        out.push(VerificationReport::merged(format!("boundary C={c}"), reports));
    }
    out
}

/// Segment convexity, Monge-Ampere residuals and slope gradients; counts are
/// per candidate and per C.
pub fn convexity(cs: &[f64], segments: usize, ma_points: usize, seed: u64) -> VerificationReport {
    let mut jobs: Vec<(DomainParams, CandidateKind)> = Vec::new();
    for &c in cs {
        let Ok(params) = DomainParams::new(c) else { continue };
        for kind in candidates_for(&params) {
            jobs.push((params, kind));
        }
        for lambda in [-0.5, 0.0, 1.0, 4.0] {
            jobs.push((params, CandidateKind::WeakType(lambda)));
        }
    }
    let reports: Vec<VerificationReport> = jobs
        .par_iter()
        .enumerate()
        .map(|(i, (params, kind))| {
            let s = seed.wrapping_add(i as u64);
            let mut r = check_segments(kind, params, segments, s);
            let regions: &[&str] = match kind {
                CandidateKind::LowerP(p) if *p == 1.0 => &["OmegaMinus", "OmegaZero", "OmegaPlus"],
                CandidateKind::LowerP(_) => &["u>0", "u<0"],
                CandidateKind::UpperSquare | CandidateKind::ExpDelta(_) => &["all"],
                CandidateKind::WeakType(_) => &["Omega1", "Omega2", "Omega3", "Omega4"],
            };
            r.merge(check_monge_ampere(kind, params, regions, ma_points, s));
            r.merge(check_gradients(kind, params, ma_points, s));
            r
        })
        .collect();
    VerificationReport::merged("convexity", reports)
}

pub fn induction(n: usize, max_steps: usize, depth: u32, seed: u64) -> VerificationReport {
    let cfg = ScanConfig::default();
    let reports: Vec<VerificationReport> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = sub_rng(seed, 2000 + i as u64);
            let f = random_step_function(&mut rng, max_steps);
            let c = f.characteristic(1024) * (1.0 + 1e-3);
            let p = [1.0, 1.5, 2.0][i % 3];
            bellman_induct(&f, p, 1.05 * c, depth, &cfg)
        })
        .collect();
    let mut merged = VerificationReport::merged("bellman induction", Vec::new());
    let mut flags = Vec::new();
    for r in reports {
        flags.extend(r.flags.iter().filter(|f| !f.starts_with("nodes=")).cloned());
        let mut r = r;
        r.flags.retain(|f| !f.starts_with("nodes="));
        merged.merge(r);
    }
    merged.flags = flags;
    merged
}

/// Discretized extremal as an induction input.
pub fn discretized_extremal(c: f64, steps: usize) -> Result<StepFunction2> {
    let params = DomainParams::new(c)?;
    StepFunction2::discretize(&phi_plus(&Point::new(0.0, c), &params)?, steps)
}

pub fn weak_jn(ps: &[f64], n: usize, lambdas: &[f64], cfg: &ScanConfig, seed: u64) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("weak JN");
    let phi0 = PiecewiseLogStep::log_ramp(1.0);
    for &p in ps {
        report.merge(check_weak_jn(p, &phi0, lambdas, cfg)?);
    }
    let reports: Vec<VerificationReport> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = sub_rng(seed, 3000 + i as u64);
            let mut r = VerificationReport::new("weak JN");
            let s = match random_optimizer(&mut rng, (1.2, 100.0)) {
                Ok(s) => s,
                Err(e) => {
                    r.fail(e.to_string());
                    return r;
                }
            };
            if s.phi.range(0.0, 1.0).0 == s.phi.range(0.0, 1.0).1 {
                return r;
            }
            for &p in ps {
                match check_weak_jn(p, &s.phi, lambdas, cfg) {
                    Ok(rep) => r.merge(rep),
                    Err(Error::Precondition(_)) => {}
                    Err(e) => r.fail(e.to_string()),
                }
            }
            r
        })
        .collect();
    for r in reports {
        report.merge(r);
    }
    Ok(report)
}

/// Random optimizers on random subintervals never beat the `t8` envelope.
pub fn t8_random(c: f64, lambdas: &[f64], n: usize, cfg: &ScanConfig, seed: u64) -> Result<VerificationReport> {
    let mut base = check_theorem_t8(c, lambdas, cfg, 0, seed)?;
    let chunks = 16usize;
    let per = n.div_ceil(chunks);
    let reports: Vec<Result<VerificationReport>> = (0..chunks)
        .into_par_iter()
        .map(|i| check_theorem_t8(c, lambdas, cfg, per, seed.wrapping_add(7919 * (i as u64 + 1))))
        .collect();
    for r in reports {
        base.merge(r?);
    }
    Ok(base)
}
