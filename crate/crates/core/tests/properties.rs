use std::f64::consts::TAU;

use clarkchaos::field::{exact_scaling_covariance, KernelKind, Truncation, Variance};
use clarkchaos::{
    build_measure, count_zeros, covariance_canonical, fit_slope, make_blaschke, Atom, ChaosMode, Complex64,
    DiscFunction, DiscPoint, FieldSample, GridSpec, InnerFunctionEval, TrigPoly,
};
use proptest::prelude::*;

fn atoms() -> impl Strategy<Value = Vec<Atom>> {
    prop::collection::vec((0.0..TAU, 0.01..3.0f64), 1..12)
        .prop_map(|v| v.into_iter().map(|(theta, mass)| Atom { theta, mass }).collect())
}

fn disc_point(max_r: f64) -> impl Strategy<Value = DiscPoint> {
    (0.0..max_r, 0.0..TAU).prop_map(|(r, a)| DiscPoint::polar(r, a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn herglotz_has_positive_real_part(atoms in atoms(), z in disc_point(0.999)) {
        let f = InnerFunctionEval::from_atoms(&atoms).unwrap();
        prop_assert!(f.herglotz(z).re > 0.0);
        prop_assert!(f.phi(z).norm() < 1.0);
        prop_assert!(f.log_abs_phi(z) <= 0.0);
    }

    #[test]
    fn log_abs_matches_direct_modulus(atoms in atoms(), z in disc_point(0.99)) {
        let f = InnerFunctionEval::from_atoms(&atoms).unwrap();
        let direct = f.phi(z).norm().ln();
        prop_assume!(direct > -20.0);
        prop_assert!((f.log_abs_phi(z) - direct).abs() < 1e-8 * (1.0 + direct.abs()));
    }

    #[test]
    fn blaschke_counts_its_zeros(zs in prop::collection::vec((0.0..0.8f64, 0.0..TAU), 0..6)) {
        let zeros: Vec<Complex64> = zs.iter().map(|&(r, a)| Complex64::from_polar(r, a)).collect();
        let b = make_blaschke(&zeros).unwrap();
        prop_assert_eq!(count_zeros(&b, 0.9).unwrap(), zeros.len());
        let w = Complex64::from_polar(1.0 - 1e-9, 0.7);
        prop_assert!((b.value(w).norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn arc_masses_add_up(seed in any::<u64>(), cuts in prop::collection::vec(0.0..TAU, 1..6)) {
        let grid = GridSpec::circle(64).unwrap();
        let mut rng = clarkchaos::rng::seeded(seed);
        let field = clarkchaos::field::sample_canonical(16, grid, &mut rng).unwrap();
        let mu = build_measure(&field, 1.0, ChaosMode::Subcritical).unwrap();
        let mut pts = cuts.clone();
        pts.push(0.0);
        pts.push(TAU);
        pts.sort_by(f64::total_cmp);
        let sum: f64 = pts.windows(2).map(|w| mu.interval_mass(w[0], w[1])).sum();
        prop_assert!((sum - mu.total_mass()).abs() < 1e-12 * mu.total_mass());
    }

    #[test]
    fn chaos_weights_are_positive(values in prop::collection::vec(-5.0..5.0f64, 16), gamma in 0.1..1.4f64) {
        let grid = GridSpec::circle(16).unwrap();
        let f = FieldSample::from_values(grid, values, 4, Variance::Uniform(2.0), KernelKind::Canonical).unwrap();
        let mu = build_measure(&f, gamma, ChaosMode::Subcritical).unwrap();
        prop_assert!(mu.weights().iter().all(|w| *w > 0.0 && w.is_finite()));
    }

    #[test]
    fn canonical_covariance_is_bounded_by_variance(delta in 0.0..TAU, n in 1usize..200) {
        let c = covariance_canonical(delta, Truncation::Finite(n)).unwrap();
        let v = covariance_canonical(0.0, Truncation::Finite(n)).unwrap();
        prop_assert!(c <= v + 1e-12);
        let mirrored = covariance_canonical(TAU - delta, Truncation::Finite(n)).unwrap();
        prop_assert!((c - mirrored).abs() < 1e-10);
    }

    #[test]
    fn exact_scaling_shift(d in 0.0..0.5f64, eps in 0.001..0.5f64, r in 0.01..1.0f64) {
        let lhs = exact_scaling_covariance(r * d, r * eps);
        let rhs = exact_scaling_covariance(d, eps) - r.ln();
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn slope_fit_recovers_lines(slope in -5.0..5.0f64, intercept in -5.0..5.0f64, n in 3usize..10) {
        let pts: Vec<(f64, f64, f64)> = (0..n).map(|k| (k as f64, slope * k as f64 + intercept, 0.1)).collect();
        let fit = fit_slope(&pts).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert!((fit.intercept - intercept).abs() < 1e-9);
    }

    #[test]
    fn trig_poly_is_linear(coeffs in prop::collection::vec(-2.0..2.0f64, 7), c in -3.0..3.0f64, theta in 0.0..TAU) {
        let p = TrigPoly::new(coeffs).unwrap();
        prop_assert!((p.scaled(c).eval(theta) - c * p.eval(theta)).abs() < 1e-12);
        prop_assert!((p.eval(theta) - p.eval(theta + TAU)).abs() < 1e-10);
    }
}
