//! Random corpora and independent reference computations shared by the
//! integration tests.

#![allow(dead_code)]

use gaussfb::conditioning::{apply_efficiency, measurement_matrices, LossPort, MeasurementSetup, UnravellingMatrix};
use gaussfb::dynamics::{
    build_drift_diffusion, thermal_drift_diffusion, CouplingOperators, DriftDiffusion, HamiltonianMatrix,
    ThermalBathSpec,
};
use gaussfb::symplectic::{omega, Bipartition, CovarianceMatrix};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| scale * normal(rng))
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, d, d, scale);
    (&g + g.transpose()) * 0.5
}

/// `exp(ΩG)` for symmetric `G` is symplectic.
pub fn random_symplectic(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    (omega(n) * random_symmetric(rng, 2 * n, scale)).exp()
}

/// Physical CM `S diag(ν₁,ν₁,…) Sᵀ` with a random symplectic `S`; roughly
/// one mode in four is pure.
pub fn random_physical_cm(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let nus: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.25) { 1.0 } else { 1.0 + 4.0 * rng.random::<f64>() })
        .collect();
    let diag = DVector::from_iterator(2 * n, nus.iter().flat_map(|v| [*v, *v]));
    let s = random_symplectic(rng, n, 0.6);
    let m = &s * DMatrix::from_diagonal(&diag) * s.transpose();
    (&m + m.transpose()) * 0.5
}

pub fn random_bipartition(rng: &mut ChaCha8Rng, n: usize) -> Bipartition {
    loop {
        let side: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if !side.is_empty() && side.len() < n {
            return Bipartition::new(n, side).unwrap();
        }
    }
}

/// Smallest symplectic eigenvalue from `σ^{1/2} Xᵀ σ X σ^{1/2}` with `X = Ω`
/// or `X = Ω̃`, the square-root form independent of the library routine.
pub fn sqrt_form_spectrum(sigma: &DMatrix<f64>, x: &DMatrix<f64>) -> Vec<f64> {
    let eig = sigma.clone().symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| v.sqrt());
    let half = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
    let m = &half * x.transpose() * sigma * x * &half;
    let mut vals: Vec<f64> = ((&m + m.transpose()) * 0.5)
        .symmetric_eigenvalues()
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}

pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = ((m + m.transpose()) * 0.5).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn cm(m: DMatrix<f64>) -> CovarianceMatrix {
    CovarianceMatrix::new(m).unwrap()
}

pub fn diag_cm(values: &[f64]) -> CovarianceMatrix {
    cm(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
}

pub fn thermal_system(h: &HamiltonianMatrix, occ: &[f64]) -> (DriftDiffusion, CouplingOperators, ThermalBathSpec) {
    let bath = ThermalBathSpec::new(occ.to_vec()).unwrap();
    let (dd, c) = thermal_drift_diffusion(h, &bath).unwrap();
    (dd, c, bath)
}

/// Unravelling from SME coefficients `M` with spectral norm at most one,
/// degraded by a random efficiency half of the time.
pub fn random_unravelling(rng: &mut ChaCha8Rng, channels: usize) -> UnravellingMatrix {
    let re = gaussian_matrix(rng, channels, channels, 1.0);
    let im = gaussian_matrix(rng, channels, channels, 1.0);
    let m = DMatrix::from_fn(channels, channels, |i, j| Complex64::new(re[(i, j)], im[(i, j)]));
    let norm = m.singular_values().max();
    let m = m * Complex64::new(rng.random_range(0.2..1.0) / norm, 0.0);
    let u = UnravellingMatrix::from_sme_coefficients(&m).unwrap();
    if rng.random_bool(0.5) {
        let port = if rng.random_bool(0.5) { LossPort::Vacuum } else { LossPort::Noise(1.0 + 3.0 * rng.random::<f64>()) };
        apply_efficiency(&u, rng.random_range(0.3..1.0), port).unwrap()
    } else {
        u
    }
}

/// A monitored system with `n ≤ 3` modes and `A + Aᵀ < 0`.
pub struct MonitoredSystem {
    pub dd: DriftDiffusion,
    pub c_ops: CouplingOperators,
    pub unravelling: UnravellingMatrix,
    pub measurement: MeasurementSetup,
}

/// Thermal baths with a random Hamiltonian, or (one time in three) random
/// complex jump operators added on top of the thermal ones.
pub fn random_monitored_system(rng: &mut ChaCha8Rng) -> MonitoredSystem {
    loop {
        let n = rng.random_range(1..=3);
        let occ: Vec<f64> = (0..n).map(|_| 3.0 * rng.random::<f64>()).collect();
        let scale = rng.random_range(0.0..0.4);
        let h = HamiltonianMatrix::new(random_symmetric(rng, 2 * n, scale)).unwrap();
        let bath = ThermalBathSpec::new(occ).unwrap();
        let thermal = CouplingOperators::thermal(&bath);
        let c_ops = if rng.random_bool(1.0 / 3.0) {
            let extra = rng.random_range(1..=2);
            let re = gaussian_matrix(rng, extra, 2 * n, 0.3);
            let im = gaussian_matrix(rng, extra, 2 * n, 0.3);
            let mut c = DMatrix::zeros(thermal.channels() + extra, 2 * n);
            c.view_mut((0, 0), (thermal.channels(), 2 * n)).copy_from(thermal.matrix());
            for i in 0..extra {
                for j in 0..2 * n {
                    c[(thermal.channels() + i, j)] = Complex64::new(re[(i, j)], im[(i, j)]);
                }
            }
            CouplingOperators::new(c).unwrap()
        } else {
            thermal
        };
        let dd = build_drift_diffusion(&h, &c_ops).unwrap();
        let a = dd.drift();
        if sorted_eigenvalues(&-(a + a.transpose()))[0] < 1e-2 {
            continue;
        }
        let unravelling = random_unravelling(rng, c_ops.channels());
        let measurement = measurement_matrices(&c_ops, &unravelling).unwrap();
        return MonitoredSystem { dd, c_ops, unravelling, measurement };
    }
}

/// Plain RK4 integration of `dσ/dt = f(σ)` to time `t`.
pub fn rk4<F: Fn(&DMatrix<f64>) -> DMatrix<f64>>(f: F, s0: &DMatrix<f64>, t: f64, dt: f64) -> DMatrix<f64> {
    let steps = (t / dt).round() as usize;
    let mut s = s0.clone();
    for _ in 0..steps {
        let k1 = f(&s);
        let k2 = f(&(&s + &k1 * (0.5 * dt)));
        let k3 = f(&(&s + &k2 * (0.5 * dt)));
        let k4 = f(&(&s + &k3 * dt));
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    s
}

/// Riccati right-hand side written out independently of the library.
pub fn riccati_field(dd: &DriftDiffusion, m: &MeasurementSetup, s: &DMatrix<f64>) -> DMatrix<f64> {
    let k = s * m.c().transpose() + m.gamma().transpose();
    dd.drift() * s + s * dd.drift().transpose() + dd.diffusion() - &k * k.transpose()
}
