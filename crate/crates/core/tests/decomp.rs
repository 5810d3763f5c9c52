use std::f64::consts::TAU;

use clarkchaos::decomp::{
    build_operators, build_u, build_u_from_measure, check_hypotheses, deficiency_constraints, find_f1_f2,
    singular_integral, DecompositionSampler, Hypothesis, PerturbFunctions, DEFAULT_TOL_EIG,
};
use clarkchaos::field::PerturbedSampler;
use clarkchaos::rng::{replica_rng, seeded, tag};
use clarkchaos::stats::mean_se;
use clarkchaos::{build_measure, ChaosMode, DiscPoint, Error, GridSpec, KernelSpec, TrigKernel, TrigPoly};
use nalgebra::DMatrix;
use rand::Rng;

// -e1⊗e1 + 0.2(e2⊗e4 + e4⊗e2) + 0.1 e3⊗e3: removes the sine mode and mixes
// in a smooth off-diagonal term.
fn mixed_kernel() -> TrigKernel {
    let mut m = DMatrix::zeros(5, 5);
    m[(1, 1)] = -1.0;
    m[(2, 4)] = 0.2;
    m[(4, 2)] = 0.2;
    m[(3, 3)] = 0.1;
    TrigKernel::new(m).unwrap()
}

#[test]
fn zero_kernel_operators() {
    let op = build_operators(&TrigKernel::zero(0), 6).unwrap();
    assert_eq!(op.dimension(), 13);
    assert_eq!(op.t().amax(), 0.0);
    assert_eq!(op.c()[0], 0.0);
    assert_eq!(op.c1()[0], 1.0);
    assert_eq!(op.c()[5], 1.0 / 3.0);
    assert!(deficiency_constraints(&op, DEFAULT_TOL_EIG).unwrap().is_empty());
}

#[test]
fn removed_sine_mode_is_the_only_constraint() {
    let op = build_operators(&TrigKernel::rank_one(1, -1.0), 6).unwrap();
    let cons = deficiency_constraints(&op, DEFAULT_TOL_EIG).unwrap();
    assert_eq!(cons.len(), 1);
    let psi = &cons[0] / cons[0].norm();
    assert!((psi[1].abs() - 1.0).abs() < 1e-12);
    let t = op.t();
    assert!((t - t.transpose()).amax() < 1e-12);
    assert!(op.t_eigenvalues()[0] >= -1.0 - 1e-9);
}

#[test]
fn constraints_are_orthogonal() {
    let mut m = DMatrix::zeros(5, 5);
    m[(1, 1)] = -1.0;
    m[(4, 4)] = -0.5;
    let op = build_operators(&TrigKernel::new(m).unwrap(), 6).unwrap();
    let cons = deficiency_constraints(&op, DEFAULT_TOL_EIG).unwrap();
    assert_eq!(cons.len(), 2);
    let (a, b) = (&cons[0] / cons[0].norm(), &cons[1] / cons[1].norm());
    assert!(a.dot(&b).abs() < 1e-10);
}

#[test]
fn positive_kernel_has_no_deficiency() {
    let op = build_operators(&TrigKernel::rank_one(1, 1.0), 6).unwrap();
    assert!(op.t_eigenvalues()[0] >= 0.0 - 1e-14);
    assert_eq!(op.deficiency(DEFAULT_TOL_EIG).unwrap(), 0);
}

#[test]
fn zero_kernel_admits_sine_and_cosine() {
    let op = build_operators(&TrigKernel::zero(0), 6).unwrap();
    let pf = find_f1_f2(&op, &[], 4, 512).unwrap();
    assert!(pf.a_inf > 0.0);
    assert!(pf.eps1 > 0.0 && pf.eps2 > 0.0);
    assert!(pf.residual_min_eigenvalue >= -1e-8);
    // Diagonal check: C - (f1 ⊗ f1 + f2 ⊗ f2) with f1 = sin, f2 = cos.
    let sin = TrigPoly::basis_function(1, 4);
    let cos = TrigPoly::basis_function(2, 4);
    let manual = PerturbFunctions::from_modes(sin, cos, 1.0, 1.0);
    assert!((manual.a_inf - 1.0).abs() < 1e-12);
}

#[test]
fn constrained_modes_avoid_the_sine() {
    let op = build_operators(&TrigKernel::rank_one(1, -1.0), 6).unwrap();
    let cons = deficiency_constraints(&op, DEFAULT_TOL_EIG).unwrap();
    let pf = find_f1_f2(&op, &cons, 4, 512).unwrap();
    assert!(pf.a_inf > 0.0);
    assert!(pf.f1.coeffs()[1].abs() < 1e-10 && pf.f2.coeffs()[1].abs() < 1e-10);
    assert!(pf.constraint_defect < 1e-10);
    assert!(pf.residual_min_eigenvalue >= -1e-8);
    let ts: Vec<f64> = (0..4096).map(|k| TAU * k as f64 / 4096.0).collect();
    let min =
        pf.f1.eval_many(&ts).iter().zip(pf.f2.eval_many(&ts)).map(|(a, b)| a * a + b * b).fold(f64::INFINITY, f64::min);
    assert!(min >= pf.a_inf - 1e-9);
}

#[test]
fn mixed_kernel_decomposition() {
    let g = mixed_kernel();
    let op = build_operators(&g, 8).unwrap();
    let cons = deficiency_constraints(&op, DEFAULT_TOL_EIG).unwrap();
    assert_eq!(cons.len(), 1);
    let pf = find_f1_f2(&op, &cons, 5, 512).unwrap();
    assert!(pf.a_inf > 0.0);
    assert!(pf.constraint_defect < 1e-10);
    assert!(pf.residual_min_eigenvalue >= -1e-8);
}

#[test]
fn degree_must_exceed_constraint_count() {
    let op = build_operators(&TrigKernel::rank_one(1, -1.0), 6).unwrap();
    let cons = deficiency_constraints(&op, DEFAULT_TOL_EIG).unwrap();
    assert!(matches!(find_f1_f2(&op, &cons, 2, 256), Err(Error::DegreeTooSmall { .. })));
}

#[test]
fn decomposition_resampling_matches_direct_covariance() {
    let g = mixed_kernel();
    let op = build_operators(&g, 8).unwrap();
    let cons = deficiency_constraints(&op, DEFAULT_TOL_EIG).unwrap();
    let pf = find_f1_f2(&op, &cons, 5, 512).unwrap();
    let (n, m) = (16, 64);
    let grid = GridSpec::circle(m).unwrap();
    let split = DecompositionSampler::new(&pf, &g, n, grid).unwrap();
    let direct = PerturbedSampler::new(&KernelSpec::Perturbed(g), n, grid).unwrap();
    let reps = 6000;
    let a: Vec<Vec<f64>> =
        (0..reps).map(|i| split.sample(&mut replica_rng(1, tag("split"), i)).unwrap().values().to_vec()).collect();
    let b: Vec<Vec<f64>> =
        (0..reps).map(|i| direct.sample(&mut replica_rng(2, tag("direct"), i)).values().to_vec()).collect();
    for lag in [0, 1, 4, 16, 32] {
        let ea = mean_se(&a.iter().map(|v| v[3] * v[(3 + lag) % m]).collect::<Vec<_>>());
        let eb = mean_se(&b.iter().map(|v| v[3] * v[(3 + lag) % m]).collect::<Vec<_>>());
        assert!((ea.value - eb.value).abs() < 4.0 * ea.se.hypot(eb.se), "lag {lag}: {} vs {}", ea.value, eb.value);
    }
}

#[test]
fn u_at_origin_is_the_weighted_sum() {
    let pf = PerturbFunctions::from_modes(TrigPoly::basis_function(1, 2), TrigPoly::basis_function(2, 2), 1.0, 1.0);
    let atoms = [(0.3, 0.5), (2.0, 1.5), (4.0, 0.25)];
    let z = DiscPoint::polar(0.6, 1.0).unwrap();
    let gamma = 0.9;
    let u = build_u(&atoms, z, &pf, gamma).unwrap();
    let (m1, m2) = pf.modes();
    let expected: f64 = atoms
        .iter()
        .map(|&(t, w)| {
            let p = (1.0 - 0.36) / (z.z() - num_complex::Complex64::from_polar(1.0, t)).norm_sqr();
            (-0.5 * gamma * gamma * (m1.eval(t).powi(2) + m2.eval(t).powi(2))).exp() * p * w
        })
        .sum();
    assert!((u.value(0.0, 0.0) - expected).abs() < 1e-12 * expected);
    assert!(u.value(0.0, 0.0) > 0.0);
}

#[test]
fn zero_modes_make_u_constant() {
    let pf = PerturbFunctions::from_modes(TrigPoly::zero(1), TrigPoly::zero(1), 1.0, 1.0);
    let u = build_u(&[(0.1, 1.0), (3.0, 2.0)], DiscPoint::polar(0.5, 0.0).unwrap(), &pf, 1.0).unwrap();
    let v = u.value(0.0, 0.0);
    assert_eq!(u.value(2.0, -1.5), v);
    let report = check_hypotheses(&u, 0.0, 0.0, 3.0, 1);
    assert!(report.passed(), "{:?}", report.violations);
    assert!(report.min_ball_margin.abs() < 1e-12);
}

#[test]
fn u_partials_match_finite_differences() {
    let pf = PerturbFunctions::from_modes(TrigPoly::basis_function(1, 2), TrigPoly::basis_function(2, 2), 1.0, 1.0);
    let atoms: Vec<(f64, f64)> = (0..16).map(|k| (TAU * k as f64 / 16.0, 0.1 + 0.05 * k as f64)).collect();
    let u = build_u(&atoms, DiscPoint::polar(0.7, 0.4).unwrap(), &pf, 1.0).unwrap();
    let mut rng = seeded(3);
    let h = 1e-5;
    for _ in 0..20 {
        let (y1, y2) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let d = u.derivatives(y1, y2);
        let g1 = (u.value(y1 + h, y2) - u.value(y1 - h, y2)) / (2.0 * h);
        let g2 = (u.value(y1, y2 + h) - u.value(y1, y2 - h)) / (2.0 * h);
        let h11 = (u.value(y1 + h, y2) - 2.0 * d.value + u.value(y1 - h, y2)) / (h * h);
        let h12 = (u.value(y1 + h, y2 + h) - u.value(y1 + h, y2 - h) - u.value(y1 - h, y2 + h)
            + u.value(y1 - h, y2 - h))
            / (4.0 * h * h);
        let scale = d.value;
        assert!((g1 - d.gradient[0]).abs() < 1e-6 * scale);
        assert!((g2 - d.gradient[1]).abs() < 1e-6 * scale);
        assert!((h11 - d.hessian[0][0]).abs() < 1e-4 * scale);
        assert!((h12 - d.hessian[0][1]).abs() < 1e-4 * scale);
    }
}

#[test]
fn single_atom_u_satisfies_every_hypothesis() {
    let pf = PerturbFunctions::from_modes(TrigPoly::basis_function(1, 2), TrigPoly::basis_function(2, 2), 1.0, 1.0);
    let gamma = 1.0;
    let u = build_u(&[(0.8, 1.0)], DiscPoint::polar(0.5, 0.2).unwrap(), &pf, gamma).unwrap();
    let report = check_hypotheses(&u, pf.kappa(gamma), pf.gradient_bound(gamma), 3.0, 7);
    assert!(report.passed(), "{:?}", report.violations);
    assert_eq!(report.points, 625);
    assert_eq!(report.balls, 50);
}

#[test]
fn violated_laplacian_bound_is_reported() {
    let pf = PerturbFunctions::from_modes(TrigPoly::basis_function(1, 2), TrigPoly::basis_function(2, 2), 1.0, 1.0);
    let u = build_u(&[(0.8, 1.0)], DiscPoint::polar(0.5, 0.2).unwrap(), &pf, 1.0).unwrap();
    let report = check_hypotheses(&u, 10.0, pf.gradient_bound(1.0), 3.0, 7);
    assert!(!report.passed());
    assert!(report.violations.iter().any(|v| v.hypothesis == Hypothesis::LaplacianLowerBound));
}

#[test]
fn chaos_residual_satisfies_hypotheses() {
    let gamma = 1.0;
    let g = TrigKernel::zero(0);
    let op = build_operators(&g, 6).unwrap();
    let pf = find_f1_f2(&op, &[], 4, 512).unwrap();
    let grid = GridSpec::circle(256).unwrap();
    let sampler = DecompositionSampler::new(&pf, &g, 64, grid).unwrap();
    let (kappa, k_bound) = (pf.kappa(gamma), pf.gradient_bound(gamma));
    assert!(kappa > 0.0);
    for i in 0..5 {
        let (_, _, residual) = sampler.sample_parts(&mut replica_rng(5, tag("hyp"), i)).unwrap();
        let mu = build_measure(&residual, gamma, ChaosMode::Subcritical).unwrap();
        let u = build_u_from_measure(&mu, DiscPoint::polar(0.9, 1.3).unwrap(), &pf, gamma).unwrap();
        let report = check_hypotheses(&u, kappa, k_bound, 3.0, i);
        assert!(report.passed(), "replica {i}: {:?}", report.violations);
    }
}

#[test]
fn singular_integral_is_controlled_by_the_center_value() {
    let gamma = 1.0;
    let g = TrigKernel::zero(0);
    let op = build_operators(&g, 6).unwrap();
    let pf = find_f1_f2(&op, &[], 4, 512).unwrap();
    let grid = GridSpec::circle(256).unwrap();
    let sampler = DecompositionSampler::new(&pf, &g, 64, grid).unwrap();
    let ratio = |range: std::ops::Range<u64>| -> f64 {
        range
            .map(|i| {
                let (_, _, residual) = sampler.sample_parts(&mut replica_rng(6, tag("singular"), i)).unwrap();
                let mu = build_measure(&residual, gamma, ChaosMode::Subcritical).unwrap();
                let u = build_u_from_measure(&mu, DiscPoint::polar(0.95, 0.5).unwrap(), &pf, gamma).unwrap();
                let integral = singular_integral(&u, gamma, 6.0, 120).unwrap();
                integral / u.value(0.0, 0.0).min(1.0)
            })
            .fold(0.0, f64::max)
    };
    let fitted = ratio(0..50);
    let fresh = ratio(50..100);
    assert!(fitted.is_finite() && fresh.is_finite());
    assert!(fresh <= 2.0 * fitted, "{fresh} vs {fitted}");
}
