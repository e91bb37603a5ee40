//! Seeded random inputs for the randomized checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::candidates::CandidateKind;
use crate::domain::Point;
use crate::error::Result;
use crate::optimizers::{eta, phi_minus, phi_plus, psi, FunctionKind, PiecewiseLogStep};
use crate::scalar::DomainParams;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` derived from `seed`.
pub fn sub_rng(seed: u64, index: u64) -> SampleRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

pub fn log_uniform(rng: &mut SampleRng, lo: f64, hi: f64) -> f64 {
    (rng.gen::<f64>() * (hi / lo).ln()).exp() * lo
}

/// A point of `Omega_C` with `x1` in `[-2, 2]`; boundary curves get a share
/// of the samples.
pub fn random_point(rng: &mut SampleRng, params: &DomainParams) -> Point {
    let x1 = rng.gen_range(-2.0..2.0);
    let pick: f64 = rng.gen();
    let r = if pick < 0.05 {
        1.0
    } else if pick < 0.1 {
        params.c
    } else {
        log_uniform(rng, 1.0, params.c).clamp(1.0, params.c)
    };
    Point::on_gamma(r, x1)
}

/// A point at least `margin` (relative) away from both boundary curves.
pub fn random_interior_point(rng: &mut SampleRng, params: &DomainParams, margin: f64) -> Point {
    let x1 = rng.gen_range(-2.0..2.0);
    let span = params.c - 1.0;
    let r = 1.0 + span * rng.gen_range(margin..1.0 - margin);
    Point::on_gamma(r, x1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    PhiPlus,
    PhiMinus,
    Psi,
    Eta(f64),
}

impl OptimizerKind {
    pub fn build(&self, x: &Point, params: &DomainParams) -> Result<PiecewiseLogStep> {
        match *self {
            OptimizerKind::PhiPlus => phi_plus(x, params),
            OptimizerKind::PhiMinus => phi_minus(x, params),
            OptimizerKind::Psi => psi(x, params),
            OptimizerKind::Eta(lambda) => eta(x, lambda, params),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::PhiPlus => "phi+",
            OptimizerKind::PhiMinus => "phi-",
            OptimizerKind::Psi => "psi",
            OptimizerKind::Eta(_) => "eta",
        }
    }
}

/// A constructed optimizer together with the candidates it realizes.
#[derive(Debug, Clone)]
pub struct OptimizerSample {
    pub params: DomainParams,
    pub x: Point,
    pub kind: OptimizerKind,
    pub phi: PiecewiseLogStep,
    /// `(candidate, integrand)` pairs with `<f(phi)> = candidate(x)`.
    pub targets: Vec<(CandidateKind, FunctionKind)>,
}

/// Draws `C` log-uniformly from `c_range`, a point of `Omega_C` and one of
/// the four constructors.
pub fn random_optimizer(rng: &mut SampleRng, c_range: (f64, f64)) -> Result<OptimizerSample> {
    let params = DomainParams::new(log_uniform(rng, c_range.0, c_range.1))?;
    let x = random_point(rng, &params);
    let which = rng.gen_range(0..4);
    random_optimizer_of(rng, params, x, which)
}

/// As [`random_optimizer`] with a fixed `C`, point and constructor index.
pub fn random_optimizer_of(rng: &mut SampleRng, params: DomainParams, x: Point, which: usize) -> Result<OptimizerSample> {
    let (kind, targets) = match which {
        0 => {
            let p = rng.gen_range(1.05..=2.0f64);
            let crit = 1.0 / params.xi_plus;
            let delta = 1.0 + rng.gen::<f64>() * 0.9 * (crit.min(10.0) - 1.0);
            (
                OptimizerKind::PhiPlus,
                vec![
                    (CandidateKind::LowerP(p), FunctionKind::AbsPow(p)),
                    (CandidateKind::ExpDelta(delta), FunctionKind::Exp(delta)),
                ],
            )
        }
        1 => (OptimizerKind::PhiMinus, vec![(CandidateKind::UpperSquare, FunctionKind::Square)]),
        2 => (OptimizerKind::Psi, vec![(CandidateKind::LowerP(1.0), FunctionKind::AbsPow(1.0))]),
        _ => {
            let lambda = x.x1 + rng.gen_range(-1.0..1.0) * (1.0 + 2.0 * params.gap());
            (OptimizerKind::Eta(lambda), vec![(CandidateKind::WeakType(lambda), FunctionKind::IndicatorAbove(lambda))])
        }
    };
    let phi = kind.build(&x, &params)?;
    Ok(OptimizerSample { params, x, kind, phi, targets })
}
