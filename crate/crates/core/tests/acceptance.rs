//! End-to-end acceptance criteria; prints one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use jnbellman::verification::suites::{
    admissibility, convexity, endpoint_constants, induction, main_grid, omega_identity, optimality, sharp_c_p2, t7_grid,
    t8_grid, t8_random, weak_jn, weak_jn_grid,
};
use jnbellman::verification::theorems::{check_theorem_main, check_theorem_t7};
use jnbellman::verification::{ScanConfig, VerificationReport};

const SEED: u64 = 42;

fn scan_cfg(depth: u32) -> ScanConfig {
    ScanConfig { grid_depth: depth, geometric_refine_at_zero: true, ..ScanConfig::default() }
}

fn run(id: u32, title: &str, budget_s: u64, f: impl FnOnce() -> VerificationReport) -> bool {
    let start = Instant::now();
    let report = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= Duration::from_secs(budget_s);
    let ok = report.passed && in_time;
    println!(
        "{} criterion {id:>2}: {title:<34} {:>8.2}s (budget {budget_s}s)  checks={} worst={:.3e} tol={:.3e}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        report.checks,
        report.worst_residual,
        report.tolerance_used
    );
    if !ok {
        if !in_time {
            println!("      over time budget");
        }
        println!("      {report}");
    }
    ok
}

fn main() -> ExitCode {
    let quick = std::env::args().any(|a| a == "--list");
    if quick {
        return ExitCode::SUCCESS;
    }
    let mut all = true;
    all &= run(1, "endpoint constants", 1, endpoint_constants);
    all &= run(2, "sharp C(eps, 2)", 5, || sharp_c_p2(100));
    all &= run(3, "omega identity", 5, || omega_identity(9));
    all &= run(4, "optimizer optimality", 60, || optimality(1000, (1.01, 1e3), SEED));
    all &= run(5, "admissibility", 60, || admissibility(1000, (1.01, 1e3), &scan_cfg(14), SEED));
    all &= run(6, "convexity / Monge-Ampere", 120, || convexity(&[1.2, 2.0, 10.0, 1000.0], 10_000, 1000, SEED));
    all &= run(7, "t8 distribution envelope", 60, || {
        let cfg = scan_cfg(14);
        let reports = [1.5, 2.0, 10.0].map(|c| {
            let grid = t8_grid(c, 50).expect("valid C");
            t8_random(c, &grid, 10_000, &cfg, SEED).unwrap_or_else(|e| failed("t8", e))
        });
        VerificationReport::merged("t8", reports)
    });
    all &= run(8, "t7 self-improvement", 30, || {
        let grid = t7_grid(2.0, 20).expect("valid C");
        check_theorem_t7(2.0, &grid, &scan_cfg(14)).unwrap_or_else(|e| failed("t7", e))
    });
    all &= run(9, "Bellman induction replay", 120, || induction(100, 32, 10, SEED));
    all &= run(10, "asymptotics of G(C)", 10, || {
        let grid = main_grid();
        let reports = [1.0, 1.5, 2.0].map(|p| check_theorem_main(p, &grid, &scan_cfg(10)).unwrap_or_else(|e| failed("main", e)));
        VerificationReport::merged("main", reports)
    });
    all &= run(11, "weak-type John-Nirenberg", 60, || {
        weak_jn(&[1.25, 1.5, 1.75, 2.0], 100, &weak_jn_grid(50), &scan_cfg(10), SEED).unwrap_or_else(|e| failed("weak JN", e))
    });
    println!("acceptance: {}", if all { "all criteria passed" } else { "some criteria FAILED" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn failed(name: &str, e: jnbellman::Error) -> VerificationReport {
    let mut r = VerificationReport::new(name);
    r.fail(e.to_string());
    r
}
