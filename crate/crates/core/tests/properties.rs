use jnbellman::candidates::{eval_candidate, CandidateKind};
use jnbellman::domain::{classify_b1, classify_d, in_domain, segment_in_domain, solve_u, Branch, Point};
use jnbellman::optimizers::{averages, averages_quadrature, cutoff, exp_average, mean, FunctionKind};
use jnbellman::scalar::{k_inverse, k_of_c, k_of_c_alt, DomainParams};
use jnbellman::verification::sampling::{random_optimizer, sub_rng};
use jnbellman::verification::scan::{exp_oscillation, interval_family, scan_ainfty};
use jnbellman::verification::ScanConfig;
use jnbellman::{PiecewiseLogStep, Tolerance};
use proptest::prelude::*;

fn params_strategy(max_log10: f64) -> impl Strategy<Value = DomainParams> {
    (1e-3..max_log10).prop_map(|e: f64| DomainParams::new(10f64.powf(e)).unwrap())
}

fn point_in(params: &DomainParams, x1: f64, frac: f64) -> Point {
    Point::on_gamma(1.0 + (params.c - 1.0) * frac, x1)
}

fn cfg() -> ProptestConfig {
    ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn xi_roots_solve_the_defining_equation(params in params_strategy(6.0)) {
        let c = params.c;
        for xi in [params.xi_plus, params.xi_minus] {
            prop_assert!(((-xi).exp() - c * (1.0 - xi)).abs() <= 1e-10 * c);
        }
        prop_assert!(params.xi_minus < 0.0 && 0.0 < params.xi_plus && params.xi_plus < 1.0);
    }

    #[test]
    fn k_forms_agree_and_invert(params in params_strategy(6.0)) {
        let k = k_of_c(&params);
        prop_assert!((k - k_of_c_alt(&params)).abs() <= 1e-10 * k.max(1e-300));
        let back = k_inverse(k, &Tolerance::default()).unwrap();
        prop_assert!((back - params.c).abs() <= 1e-7 * params.c);
    }

    #[test]
    fn tangent_abscissas_are_bracketed(params in params_strategy(4.0), x1 in -5.0..5.0f64, frac in 0.0..=1.0f64, shift in -3.0..3.0f64) {
        let tol = Tolerance::default();
        let x = point_in(&params, x1, frac);
        let up = solve_u(&x, &params, Branch::Plus, &tol).unwrap();
        let um = solve_u(&x, &params, Branch::Minus, &tol).unwrap();
        let slack = 1e-12 * (1.0 + x1.abs());
        prop_assert!(x1 - params.xi_plus - slack <= up && up <= x1 + slack);
        prop_assert!(x1 - slack <= um && um <= x1 - params.xi_minus + slack);
        // shifting along the domain's symmetry shifts the tangents
        let y = Point::new(x.x1 + shift, x.x2 * shift.exp());
        let up2 = solve_u(&y, &params, Branch::Plus, &tol).unwrap();
        prop_assert!((up2 - (up + shift)).abs() <= 1e-9 * (1.0 + up.abs()));
    }

    #[test]
    fn candidates_take_boundary_values(params in params_strategy(3.0), t in -4.0..4.0f64, p in 1.0..=2.0f64, lambda in -3.0..3.0f64) {
        let x = Point::on_gamma1(t);
        let mut kinds = vec![CandidateKind::UpperSquare, CandidateKind::ExpDelta(1.0)];
        if p == 1.0 || params.c >= jnbellman::scalar::c_threshold(p) {
            kinds.push(CandidateKind::LowerP(p));
        }
        if (t - lambda).abs() > 1e-9 {
            kinds.push(CandidateKind::WeakType(lambda));
        }
        for kind in kinds {
            let g = eval_candidate(&kind, &x, &params).unwrap();
            let f = kind.boundary(t);
            prop_assert!((g - f).abs() <= 1e-10 * f.abs().max(1.0), "{kind:?} at t={t}: {g} vs {f}");
        }
    }

    #[test]
    fn regions_tile_the_domain(params in params_strategy(3.0), x1 in -6.0..6.0f64, frac in 0.0..=1.0f64, lambda in -2.0..2.0f64) {
        let x = point_in(&params, x1, frac);
        prop_assert!(classify_b1(&x, &params).is_ok());
        prop_assert!(classify_d(&x, lambda, &params).is_ok());
    }

    #[test]
    fn segment_test_matches_dense_sampling(c in 1.01..20.0f64, a1 in -2.0..2.0f64, b1 in -2.0..2.0f64, fa in 0.0..=1.0f64, fb in 0.0..=1.0f64) {
        let params = DomainParams::new(c).unwrap();
        let (a, b) = (point_in(&params, a1, fa), point_in(&params, b1, fb));
        let claimed = segment_in_domain(&a, &b, c, &Tolerance::default()).unwrap();
        let tol = Tolerance { abs: 0.0, rel: 1e-9, max_iter: 1 };
        let dense = (0..=1000).all(|i| in_domain(&a.lerp(&b, i as f64 / 1000.0), &params, &tol));
        if claimed {
            prop_assert!(dense);
        } else {
            // a miss must be visible with a slightly stricter domain
            let strict = Tolerance { abs: 0.0, rel: 0.0, max_iter: 1 };
            prop_assert!(!(0..=1000).all(|i| in_domain(&a.lerp(&b, i as f64 / 1000.0), &params, &strict)) || !dense);
        }
    }

    #[test]
    fn optimizers_reproduce_their_point(seed in any::<u64>()) {
        let mut rng = sub_rng(seed, 0);
        let s = random_optimizer(&mut rng, (1.01, 1e3)).unwrap();
        let closed = averages(&s.phi, &FunctionKind::Square, 0.0, 1.0).unwrap();
        prop_assert!((closed.mean - s.x.x1).abs() <= 1e-9, "{} vs {}", closed.mean, s.x.x1);
        let e = closed.exp_mean.finite().unwrap();
        prop_assert!((e - s.x.x2).abs() <= 1e-9 * s.x.x2);
        let quad = averages_quadrature(&s.phi, &FunctionKind::Square, 0.0, 1.0).unwrap();
        prop_assert!((quad.mean - closed.mean).abs() <= 1e-8 * (1.0 + closed.mean.abs()));
        prop_assert!((quad.exp_mean.finite().unwrap() - e).abs() <= 1e-8 * e);
    }

    #[test]
    fn jensen_holds_on_subintervals(seed in any::<u64>(), a in 0.0..1.0f64, len in 1e-6..1.0f64) {
        let mut rng = sub_rng(seed, 1);
        let s = random_optimizer(&mut rng, (1.01, 1e3)).unwrap();
        let b = (a + len).min(1.0);
        prop_assume!(b > a);
        let m = mean(&s.phi, a, b);
        let e = exp_average(&s.phi, a, b, 1.0, 0.0).finite().unwrap();
        prop_assert!(e >= m.exp() * (1.0 - 1e-12));
    }

    #[test]
    fn scan_is_monotone_in_depth(seed in any::<u64>(), depth in 1u32..8) {
        let mut rng = sub_rng(seed, 2);
        let s = random_optimizer(&mut rng, (1.01, 100.0)).unwrap();
        let at = |d: u32| {
            let cfg = ScanConfig { grid_depth: d, refine: false, ..ScanConfig::default() };
            scan_ainfty(&s.phi, &cfg).unwrap().value
        };
        prop_assert!(at(depth + 1) >= at(depth));
    }

    #[test]
    fn cutoff_does_not_raise_the_characteristic(seed in any::<u64>(), lo in -3.0..3.0f64, width in 0.0..4.0f64) {
        let mut rng = sub_rng(seed, 3);
        let s = random_optimizer(&mut rng, (1.01, 100.0)).unwrap();
        let cut = cutoff(&s.phi, lo, lo + width).unwrap();
        for (a, b) in interval_family(6, true) {
            let before = exp_oscillation(&s.phi, a, b);
            let after = exp_oscillation(&cut, a, b);
            prop_assert!(after <= before * (1.0 + 1e-12), "on ({a}, {b}): {after} > {before}");
        }
        let cfg = ScanConfig::with_depth(6).unwrap();
        let before = scan_ainfty(&s.phi, &cfg).unwrap().value;
        let after = scan_ainfty(&cut, &cfg).unwrap().value;
        prop_assert!(after <= before * (1.0 + 1e-9));
    }

    #[test]
    fn piecewise_functions_round_trip_through_json(seed in any::<u64>()) {
        let mut rng = sub_rng(seed, 4);
        let s = random_optimizer(&mut rng, (1.01, 1e3)).unwrap();
        let text = serde_json::to_string(&s.phi).unwrap();
        let back: PiecewiseLogStep = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, s.phi);
    }
}
