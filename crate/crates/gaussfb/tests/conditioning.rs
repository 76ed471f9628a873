mod common;

use approx::assert_abs_diff_eq;
use common::{diag_cm, max_abs, random_monitored_system, riccati_field, rk4, rng, sorted_eigenvalues, thermal_system};
use gaussfb::conditioning::{
    apply_efficiency, integrate_riccati, measurement_matrices, standard_unravelling, riccati_rhs,
    riccati_steady_state, stabilising_check, validate_unravelling, LossPort, UnravellingKind, UnravellingMatrix,
};
use gaussfb::dynamics::{lyapunov_steady_state, DriftDiffusion, HamiltonianMatrix, ThermalBathSpec};
use gaussfb::symplectic::{log_negativity, physicality_check, symplectic_eigenvalues, Bipartition, CovarianceMatrix};
use gaussfb::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn eye(d: usize) -> DMatrix<f64> {
    DMatrix::identity(d, d)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn validation_examples() {
    let ok = UnravellingMatrix::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 2)).unwrap();
    assert!(validate_unravelling(&ok).valid);

    let upsilon = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.3, 0.0), c(0.1, 0.0), c(0.0, 0.0)]);
    let bad = UnravellingMatrix::new(DMatrix::identity(2, 2), upsilon).unwrap();
    let diag = validate_unravelling(&bad);
    assert!(!diag.valid);
    assert!(diag.upsilon_asymmetry > 0.1);

    let bath = ThermalBathSpec::new(vec![3.0]).unwrap();
    let hom = standard_unravelling(UnravellingKind::HomodyneSingle { phi: 0.0 }, &bath).unwrap();
    assert!(validate_unravelling(&hom).valid);
}

#[test]
fn zero_unravelling_gives_zero_measurement() {
    let (_, c_ops, _) = thermal_system(&HamiltonianMatrix::zero(1), &[1.0]);
    let m = measurement_matrices(&c_ops, &UnravellingMatrix::unmonitored(2)).unwrap();
    assert!(m.is_trivial());
    assert_eq!(m.c(), &DMatrix::<f64>::zeros(4, 2));
    assert_eq!(m.gamma(), &DMatrix::<f64>::zeros(4, 2));
}

#[test]
fn fixed_points_of_named_unravellings() {
    let (dd, c_ops, bath) = thermal_system(&HamiltonianMatrix::zero(1), &[0.0]);
    let m = measurement_matrices(&c_ops, &standard_unravelling(UnravellingKind::HomodyneSingle { phi: 0.0 }, &bath).unwrap())
        .unwrap();
    assert!(max_abs(&riccati_rhs(&CovarianceMatrix::vacuum(1), &dd, &m).unwrap()) < 1e-14);

    let (dd, c_ops, bath) = thermal_system(&HamiltonianMatrix::zero(1), &[1.0]);
    let u = standard_unravelling(UnravellingKind::OptimalSqueeze { phi: 0.0 }, &bath).unwrap();
    let m = measurement_matrices(&c_ops, &u).unwrap();
    let s = diag_cm(&[1.0 / 3.0, 3.0]);
    assert!(max_abs(&riccati_rhs(&s, &dd, &m).unwrap()) < 1e-14);
    let k = m.gain(s.matrix());
    let lhs = dd.drift() * s.matrix() + s.matrix() * dd.drift().transpose() + dd.diffusion();
    assert!(max_abs(&(lhs - &k * k.transpose())) < 1e-14);

    for n in [0.0, 1.0, 2.5, 7.0] {
        let (dd, c_ops, bath) = thermal_system(&HamiltonianMatrix::zero(2), &[n, n]);
        let m = measurement_matrices(&c_ops, &standard_unravelling(UnravellingKind::HomodyneNonlocal, &bath).unwrap())
            .unwrap();
        let d_th = CovarianceMatrix::thermal(&[n, n]);
        assert!(max_abs(&riccati_rhs(&d_th, &dd, &m).unwrap()) < 1e-12);
    }
}

#[test]
fn rhs_without_measurement_is_lyapunov() {
    let (dd, c_ops, _) = thermal_system(&HamiltonianMatrix::parametric(0.2), &[0.5, 0.5]);
    let m = measurement_matrices(&c_ops, &UnravellingMatrix::unmonitored(4)).unwrap();
    let s = CovarianceMatrix::two_mode_squeezed(0.5).unwrap();
    assert_eq!(riccati_rhs(&s, &dd, &m).unwrap(), dd.moment_rhs(s.matrix()));
}

#[test]
fn rhs_dimension_mismatch() {
    let (dd, c_ops, _) = thermal_system(&HamiltonianMatrix::zero(1), &[1.0]);
    let m = measurement_matrices(&c_ops, &UnravellingMatrix::unmonitored(2)).unwrap();
    assert!(matches!(riccati_rhs(&CovarianceMatrix::vacuum(2), &dd, &m), Err(Error::Dimension(_))));
}

#[test]
fn steady_state_examples() {
    let (dd, c_ops, bath) = thermal_system(&HamiltonianMatrix::zero(1), &[2.0]);
    let m = measurement_matrices(&c_ops, &standard_unravelling(UnravellingKind::HomodyneSingle { phi: 0.0 }, &bath).unwrap())
        .unwrap();
    let s = riccati_steady_state(&dd, &m, None).unwrap();
    assert!(max_abs(&(s.sigma.matrix() - eye(2) * 5.0)) < 1e-10);

    let (dd, c_ops, bath) = thermal_system(&HamiltonianMatrix::zero(1), &[1.0]);
    let m = measurement_matrices(&c_ops, &standard_unravelling(UnravellingKind::OptimalSqueeze { phi: 0.0 }, &bath).unwrap())
        .unwrap();
    let s = riccati_steady_state(&dd, &m, None).unwrap();
    let ev = sorted_eigenvalues(s.sigma.matrix());
    assert_abs_diff_eq!(ev[0], 1.0 / 3.0, epsilon = 1e-10);
    assert_abs_diff_eq!(ev[1], 3.0, epsilon = 1e-10);
    assert_abs_diff_eq!(symplectic_eigenvalues(&s.sigma).unwrap()[0], 1.0, epsilon = 1e-10);
    assert!(!s.non_unique);

    let (dd, c_ops, bath) = thermal_system(&HamiltonianMatrix::zero(2), &[1.0, 1.0]);
    let m = measurement_matrices(&c_ops, &standard_unravelling(UnravellingKind::OptimalEntangle, &bath).unwrap()).unwrap();
    let s = riccati_steady_state(&dd, &m, None).unwrap();
    assert_abs_diff_eq!(log_negativity(&s.sigma, &Bipartition::two_mode()).unwrap(), 3f64.log2(), epsilon = 1e-10);
}

#[test]
fn steady_state_of_unstable_system_fails() {
    let (dd, c_ops, bath) = thermal_system(&HamiltonianMatrix::parametric(0.6), &[1.0, 1.0]);
    let m = measurement_matrices(&c_ops, &standard_unravelling(UnravellingKind::OptimalEntangle, &bath).unwrap()).unwrap();
    assert!(matches!(riccati_steady_state(&dd, &m, None), Err(Error::Unstable { .. })));
}

#[test]
fn stabilising_examples() {
    let (dd, _, _) = thermal_system(&HamiltonianMatrix::zero(1), &[1.0]);
    let r = stabilising_check(&CovarianceMatrix::thermal(&[1.0]), &dd).unwrap();
    assert!(r.stabilising);
    assert_abs_diff_eq!(r.margin, 0.0, epsilon = 1e-14);
    assert!(stabilising_check(&diag_cm(&[1.0 / 3.0, 3.0]), &dd).unwrap().stabilising);

    let dd = DriftDiffusion::new(eye(2) * -0.5, eye(2)).unwrap();
    let r = stabilising_check(&diag_cm(&[10.0, 10.0]), &dd).unwrap();
    assert!(!r.stabilising);
    assert_abs_diff_eq!(r.margin, -9.0, epsilon = 1e-12);
}

#[test]
fn efficiency_examples() {
    let bath = ThermalBathSpec::new(vec![1.0, 1.0]).unwrap();
    let (dd, c_ops, _) = thermal_system(&HamiltonianMatrix::zero(2), &[1.0, 1.0]);
    let u = standard_unravelling(UnravellingKind::OptimalEntangle, &bath).unwrap();
    let port = LossPort::unconditional(&dd).unwrap();
    assert_eq!(port, LossPort::Noise(3.0));

    let same = apply_efficiency(&u, 1.0, port).unwrap();
    assert_eq!(same.real(), u.real());

    let blind = apply_efficiency(&u, 0.0, port).unwrap();
    let m = measurement_matrices(&c_ops, &blind).unwrap();
    let s = riccati_steady_state(&dd, &m, None).unwrap();
    assert!(max_abs(&(s.sigma.matrix() - lyapunov_steady_state(&dd).unwrap().matrix())) < 1e-12);

    let at_threshold = apply_efficiency(&u, 0.75, port).unwrap();
    let m = measurement_matrices(&c_ops, &at_threshold).unwrap();
    let s = riccati_steady_state(&dd, &m, None).unwrap();
    assert_abs_diff_eq!(log_negativity(&s.sigma, &Bipartition::two_mode()).unwrap(), 0.0, epsilon = 1e-9);

    assert!(apply_efficiency(&u, 1.5, port).is_err());
    assert!(apply_efficiency(&u, -0.1, port).is_err());
    let vac = apply_efficiency(&u, 0.6, LossPort::Vacuum).unwrap();
    assert!(max_abs(&(vac.real() - u.real() * 0.6)) < 1e-15);
}

#[test]
fn log_negativity_monotone_in_efficiency() {
    let bath = ThermalBathSpec::new(vec![1.0, 1.0]).unwrap();
    let (dd, c_ops, _) = thermal_system(&HamiltonianMatrix::zero(2), &[1.0, 1.0]);
    let u = standard_unravelling(UnravellingKind::OptimalEntangle, &bath).unwrap();
    let port = LossPort::unconditional(&dd).unwrap();
    let mut previous = -1.0;
    for k in 0..=20 {
        let eta = k as f64 / 20.0;
        let m = measurement_matrices(&c_ops, &apply_efficiency(&u, eta, port).unwrap()).unwrap();
        let en = log_negativity(&riccati_steady_state(&dd, &m, None).unwrap().sigma, &Bipartition::two_mode()).unwrap();
        assert!(en >= previous - 1e-12, "E_N dropped at η = {eta}");
        previous = en;
    }
    assert_abs_diff_eq!(previous, 3f64.log2(), epsilon = 1e-10);
}

#[test]
fn homodyne_and_optimal_agree_at_zero_temperature() {
    let bath = ThermalBathSpec::new(vec![0.0]).unwrap();
    for phi in [0.0, 0.4] {
        let hom = standard_unravelling(UnravellingKind::HomodyneSingle { phi }, &bath).unwrap();
        let opt = standard_unravelling(UnravellingKind::OptimalSqueeze { phi }, &bath).unwrap();
        assert!(max_abs(&(hom.real() - opt.real())) < 1e-15);
    }
}

#[test]
fn homodyne_nonlocal_fixed_point() {
    let (dd, c_ops, bath) = thermal_system(&HamiltonianMatrix::zero(2), &[1.0, 1.0]);
    let m = measurement_matrices(&c_ops, &standard_unravelling(UnravellingKind::HomodyneNonlocal, &bath).unwrap()).unwrap();
    let s = riccati_steady_state(&dd, &m, None).unwrap();
    assert!(max_abs(&(s.sigma.matrix() - eye(4) * 3.0)) < 1e-10);
}

#[test]
fn unequal_bath_variant_reaches_pure_two_mode_squeezing() {
    for (n1, n2) in [(2.0, 1.0), (0.5, 3.0), (4.0, 0.0)] {
        let (dd, c_ops, bath) = thermal_system(&HamiltonianMatrix::zero(2), &[n1, n2]);
        let u = standard_unravelling(UnravellingKind::OptimalEntangleUnequal, &bath).unwrap();
        let s = riccati_steady_state(&dd, &measurement_matrices(&c_ops, &u).unwrap(), None).unwrap().sigma;
        let colder = f64::min(n1, n2);
        let target = CovarianceMatrix::two_mode_squeezed(1.0 / (1.0 + 2.0 * colder)).unwrap();
        assert!(max_abs(&(s.matrix() - target.matrix())) < 1e-8, "({n1}, {n2})");
        for nu in symplectic_eigenvalues(&s).unwrap() {
            assert_abs_diff_eq!(nu, 1.0, epsilon = 1e-8);
        }
    }
}

#[test]
fn named_unravellings_check_mode_count() {
    let one = ThermalBathSpec::new(vec![1.0]).unwrap();
    let two = ThermalBathSpec::new(vec![1.0, 1.0]).unwrap();
    assert!(standard_unravelling(UnravellingKind::OptimalEntangle, &one).is_err());
    assert!(standard_unravelling(UnravellingKind::HomodyneNonlocal, &one).is_err());
    assert!(standard_unravelling(UnravellingKind::OptimalSqueeze { phi: 0.0 }, &two).is_err());
    let unequal = ThermalBathSpec::new(vec![2.0, 1.0]).unwrap();
    assert!(standard_unravelling(UnravellingKind::OptimalEntangle, &unequal).is_err());
}

#[test]
fn phase_only_rotates_the_state() {
    let (dd, c_ops, bath) = thermal_system(&HamiltonianMatrix::zero(1), &[1.5]);
    let reference = {
        let u = standard_unravelling(UnravellingKind::OptimalSqueeze { phi: 0.0 }, &bath).unwrap();
        riccati_steady_state(&dd, &measurement_matrices(&c_ops, &u).unwrap(), None).unwrap().sigma
    };
    for phi in [0.3, 1.0, 2.5, -0.7] {
        for kind in [UnravellingKind::OptimalSqueeze { phi }, UnravellingKind::HomodyneSingle { phi }] {
            let u = standard_unravelling(kind, &bath).unwrap();
            let s = riccati_steady_state(&dd, &measurement_matrices(&c_ops, &u).unwrap(), None).unwrap().sigma;
            let base = match kind {
                UnravellingKind::OptimalSqueeze { .. } => reference.matrix().clone(),
                _ => eye(2) * 4.0,
            };
            let (a, b) = (sorted_eigenvalues(s.matrix()), sorted_eigenvalues(&base));
            assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
        }
    }
}

#[test]
fn real_form_round_trip() {
    let mut r = rng(11);
    for _ in 0..20 {
        let u = common::random_unravelling(&mut r, 4);
        let ideal = UnravellingMatrix::new(u.theta().clone(), u.upsilon().clone()).unwrap();
        let back = UnravellingMatrix::from_real(&ideal.real()).unwrap();
        assert!(max_abs(&(back.real() - ideal.real())) < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 60, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn steady_state_contract(seed in any::<u64>()) {
        let sys = random_monitored_system(&mut rng(seed));
        prop_assert!(validate_unravelling(&sys.unravelling).valid);
        let sol = riccati_steady_state(&sys.dd, &sys.measurement, None).unwrap();
        let tol = 1e-8 * max_abs(sol.sigma.matrix()).max(1.0);
        prop_assert!(sol.physicality_margin >= -tol);
        prop_assert!(sol.stabilising_margin >= -tol);
        prop_assert!(physicality_check(&sol.sigma).physical);
        prop_assert!(stabilising_check(&sol.sigma, &sys.dd).unwrap().stabilising);
        let res = max_abs(&riccati_rhs(&sol.sigma, &sys.dd, &sys.measurement).unwrap());
        prop_assert!(res <= 1e-10 * max_abs(sys.dd.diffusion()).max(1.0));
        prop_assert!((res - sol.residual).abs() <= 1e-14);
        let oracle = riccati_field(&sys.dd, &sys.measurement, sol.sigma.matrix());
        prop_assert!(max_abs(&oracle) <= 1e-9);
    }

    #[test]
    fn conditioning_never_increases_the_covariance(seed in any::<u64>()) {
        let sys = random_monitored_system(&mut rng(seed));
        let sol = riccati_steady_state(&sys.dd, &sys.measurement, None).unwrap();
        let lyap = lyapunov_steady_state(&sys.dd).unwrap();
        let gap = sorted_eigenvalues(&(lyap.matrix() - sol.sigma.matrix()))[0];
        prop_assert!(gap >= -1e-8 * max_abs(lyap.matrix()).max(1.0));
    }

    #[test]
    fn integration_and_newton_agree(seed in any::<u64>()) {
        let sys = random_monitored_system(&mut rng(seed));
        let alpha = sorted_eigenvalues(&-(sys.dd.drift() + sys.dd.drift().transpose()))[0];
        prop_assume!(alpha > 0.2);
        let sol = riccati_steady_state(&sys.dd, &sys.measurement, None).unwrap();
        let start = lyapunov_steady_state(&sys.dd).unwrap();
        let t = 60.0 / alpha;
        let lib = integrate_riccati(&sys.dd, &sys.measurement, &start, t, 0.01).unwrap();
        prop_assert!(max_abs(&(&lib - sol.sigma.matrix())) <= 1e-8);
        let oracle = rk4(|s| riccati_field(&sys.dd, &sys.measurement, s), start.matrix(), t, 0.01);
        prop_assert!(max_abs(&(&oracle - sol.sigma.matrix())) <= 1e-8);
    }
}
