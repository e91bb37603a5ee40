//! Suprema of interval functionals over a finite family of subintervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizers::{abs_pow_average, exp_average, mean, PiecewiseLogStep};
use crate::tolerance::Tolerance;

/// Depth used for `BMO^p` scans whose averages need quadrature.
const QUADRATURE_DEPTH_CAP: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Dyadic levels `0..=grid_depth`.
    pub grid_depth: u32,
    /// Adds `(0, 2^-k)` for `k <= 4 grid_depth`.
    pub geometric_refine_at_zero: bool,
    /// Golden-section polish of the best interval.
    pub refine: bool,
    /// Stopping rule of the golden-section polish.
    pub tol: Tolerance,
    /// Sample count for randomized checks built on the scanner.
    pub samples: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { grid_depth: 12, geometric_refine_at_zero: true, refine: true, tol: Tolerance::default(), samples: 1000 }
    }
}

impl ScanConfig {
    pub fn with_depth(grid_depth: u32) -> Result<Self> {
        if grid_depth < 1 {
            return Err(Error::Domain("grid_depth must be at least 1".into()));
        }
        Ok(ScanConfig { grid_depth, ..Default::default() })
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_depth < 1 || self.grid_depth > 30 {
            return Err(Error::Domain(format!("grid_depth must be in 1..=30, got {}", self.grid_depth)));
        }
        Tolerance::new(self.tol.abs, self.tol.rel, self.tol.max_iter)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub value: f64,
    pub witness: (f64, f64),
}

/// Dyadic intervals to the given depth plus the geometric family at 0.
pub fn interval_family(depth: u32, geometric: bool) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity((2usize << depth) + 4 * depth as usize);
    for level in 0..=depth {
        let n = 1u64 << level;
        let h = 1.0 / n as f64;
        for k in 0..n {
            out.push((k as f64 * h, (k + 1) as f64 * h));
        }
    }
    if geometric {
        for k in depth + 1..=4 * depth {
            out.push((0.0, (-(k as f64)).exp2()));
        }
    }
    out
}

/// `<e^{phi - <phi>_J}>_J`, `+inf` when not integrable.
pub fn exp_oscillation(phi: &PiecewiseLogStep, a: f64, b: f64) -> f64 {
    let m = mean(phi, a, b);
    exp_average(phi, a, b, 1.0, m).to_f64()
}

/// `<|phi - <phi>_J|^p>_J^{1/p}`.
pub fn p_oscillation(phi: &PiecewiseLogStep, a: f64, b: f64, p: f64) -> f64 {
    let m = mean(phi, a, b);
    abs_pow_average(phi, a, b, p, m).max(0.0).powf(1.0 / p)
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: &Tolerance) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..tol.max_iter {
        if hi - lo <= tol.abs + tol.rel * hi.abs() {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Local polish of the best interval by alternating golden-section searches.
fn refine<F: Fn(f64, f64) -> f64>(f: &F, best: &mut ScanResult, tol: &Tolerance) {
    let keep = |r: &mut ScanResult, a: f64, b: f64, v: f64| {
        if v.is_finite() && v > r.value && a < b {
            *r = ScanResult { value: v, witness: (a, b) };
        }
    };
    for _ in 0..2 {
        let (a, b) = best.witness;
        let w = b - a;
        let (nb, v) = golden_max(&|x| f(a, x), a + 0.5 * w, (a + 2.0 * w).min(1.0), tol);
        keep(best, a, nb, v);
        let (a, b) = best.witness;
        let w = b - a;
        if a > 0.0 {
            keep(best, 0.0, b, f(0.0, b));
        }
        let (na, v) = golden_max(&|x| f(x, b), (a - w).max(0.0), a + 0.5 * w, tol);
        keep(best, na, b, v);
    }
}

/// Maximizes `f` over the interval family.
pub fn scan_max<F: Fn(f64, f64) -> f64>(f: F, cfg: &ScanConfig, depth: u32) -> ScanResult {
    let mut best = ScanResult { value: f64::NEG_INFINITY, witness: (0.0, 1.0) };
    for (a, b) in interval_family(depth, cfg.geometric_refine_at_zero) {
        let v = f(a, b);
        if v.is_nan() {
            continue;
        }
        if v > best.value {
            best = ScanResult { value: v, witness: (a, b) };
            if v == f64::INFINITY {
                return best;
            }
        }
    }
    if cfg.refine {
        refine(&f, &mut best, &cfg.tol);
    }
    best
}

/// Scanned `A_infinity` characteristic of `e^phi`.
pub fn scan_ainfty(phi: &PiecewiseLogStep, cfg: &ScanConfig) -> Result<ScanResult> {
    cfg.validate()?;
    Ok(scan_max(|a, b| exp_oscillation(phi, a, b), cfg, cfg.grid_depth))
}

/// Scanned `BMO^p` norm.
pub fn scan_bmo_norm(phi: &PiecewiseLogStep, p: f64, cfg: &ScanConfig) -> Result<ScanResult> {
    cfg.validate()?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("BMO^p needs p >= 1, got {p}")));
    }
    let depth = if p == 1.0 || p == 2.0 { cfg.grid_depth } else { cfg.grid_depth.min(QUADRATURE_DEPTH_CAP) };
    Ok(scan_max(|a, b| p_oscillation(phi, a, b, p), cfg, depth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::omega;

    #[test]
    fn family_size() {
        let fam = interval_family(3, true);
        assert_eq!(fam.len(), 1 + 2 + 4 + 8 + 9);
        assert!(fam.contains(&(0.0, 1.0 / 4096.0)));
    }

    #[test]
    fn constants_and_log() {
        let cfg = ScanConfig::with_depth(8).unwrap();
        assert_eq!(scan_ainfty(&PiecewiseLogStep::constant(2.0), &cfg).unwrap().value, 1.0);
        assert_eq!(scan_bmo_norm(&PiecewiseLogStep::constant(2.0), 2.0, &cfg).unwrap().value, 0.0);
        let phi0 = PiecewiseLogStep::log_ramp(1.0);
        for p in [1.0, 1.5, 2.0] {
            let n = scan_bmo_norm(&phi0, p, &cfg).unwrap();
            assert!((n.value - omega(p).unwrap()).abs() < 1e-9, "p={p}: {}", n.value);
        }
        let e = 0.6;
        let c = scan_ainfty(&PiecewiseLogStep::log_ramp(e), &cfg).unwrap().value;
        assert!((c - (-e).exp() / (1.0 - e)).abs() < 1e-12);
        assert_eq!(scan_ainfty(&phi0, &cfg).unwrap().value, f64::INFINITY);
    }
}
