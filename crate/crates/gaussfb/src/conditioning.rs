//! Continuous general-dyne monitoring of the jump channels: unravelling
//! matrices, the measurement matrices they induce and the Riccati equation
//! for the conditional covariance.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::{CouplingOperators, DriftDiffusion, HamiltonianMatrix, ThermalBathSpec};
use crate::linalg::{self, max_abs};
use crate::symplectic::{omega, physicality_check, CovarianceMatrix};
use crate::{dynamics, feedback, Error, Result};

/// Maximum number of semi-implicit time steps in the steady-state search.
const MAX_STEPS: usize = 20_000;
/// Residual target relative to `max(1, ‖D‖_max)`.
const RESIDUAL_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 10;

/// Noise entering through the port that models detector inefficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossPort {
    /// Vacuum noise; the unravelling matrix scales as `η·U`.
    Vacuum,
    /// Gaussian noise with the given variance in vacuum units (`>= 1`).
    Noise(f64),
}

impl LossPort {
    pub fn variance(self) -> f64 {
        match self {
            LossPort::Vacuum => 1.0,
            LossPort::Noise(v) => v,
        }
    }

    /// Port carrying the largest variance of the unmonitored steady state.
    pub fn unconditional(dd: &DriftDiffusion) -> Result<Self> {
        let s = dynamics::lyapunov_steady_state(dd)?;
        let (values, _) = linalg::sym_eigen(s.matrix());
        Ok(LossPort::Noise(values[values.len() - 1].max(1.0)))
    }
}

/// Correlations `Θ = E[dz dz†]/dt`, `Υ = E[dz dzᵀ]/dt` of the complex
/// innovations of the `L` channels, plus the detection efficiency.
#[derive(Debug, Clone, PartialEq)]
pub struct UnravellingMatrix {
    theta: DMatrix<Complex64>,
    upsilon: DMatrix<Complex64>,
    efficiency: f64,
    port: LossPort,
}

impl UnravellingMatrix {
    pub fn new(theta: DMatrix<Complex64>, upsilon: DMatrix<Complex64>) -> Result<Self> {
        let l = theta.nrows();
        if l == 0 || theta.ncols() != l || upsilon.shape() != (l, l) {
            return Err(Error::Dimension(format!(
                "Θ ({}x{}) and Υ ({}x{}) must be equal square matrices",
                theta.nrows(),
                theta.ncols(),
                upsilon.nrows(),
                upsilon.ncols()
            )));
        }
        if theta.iter().chain(upsilon.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("unravelling has non-finite entries".into()));
        }
        Ok(Self { theta, upsilon, efficiency: 1.0, port: LossPort::Vacuum })
    }

    /// No monitoring at all.
    pub fn unmonitored(channels: usize) -> Self {
        Self {
            theta: DMatrix::zeros(channels, channels),
            upsilon: DMatrix::zeros(channels, channels),
            efficiency: 1.0,
            port: LossPort::Vacuum,
        }
    }

    /// Unravelling of a stochastic master equation whose measurement terms
    /// are `Σ_k Σ_j M[j][k] H[ĉ_j] dw_k` with independent real Wiener
    /// increments `dw_k`. Then `dz = M̄ dw`, `Θ = M̄Mᵀ` and `Υ = M̄M†`.
    pub fn from_sme_coefficients(m: &DMatrix<Complex64>) -> Result<Self> {
        let mc = m.map(|z| z.conj());
        Self::new(&mc * m.transpose(), &mc * m.adjoint())
    }

    /// Builds `(Θ, Υ)` from the real `2L x 2L` covariance of `(Re dz, Im dz)`.
    pub fn from_real(u: &DMatrix<f64>) -> Result<Self> {
        if u.nrows() != u.ncols() || u.nrows() == 0 || !u.nrows().is_multiple_of(2) {
            return Err(Error::Dimension(format!("real unravelling must be 2L x 2L, got {}x{}", u.nrows(), u.ncols())));
        }
        let l = u.nrows() / 2;
        let u11 = u.view((0, 0), (l, l));
        let u12 = u.view((0, l), (l, l));
        let u21 = u.view((l, 0), (l, l));
        let u22 = u.view((l, l), (l, l));
        let theta = DMatrix::from_fn(l, l, |i, j| {
            Complex64::new(u11[(i, j)] + u22[(i, j)], u21[(i, j)] - u12[(i, j)])
        });
        let upsilon = DMatrix::from_fn(l, l, |i, j| {
            Complex64::new(u11[(i, j)] - u22[(i, j)], u12[(i, j)] + u21[(i, j)])
        });
        Self::new(theta, upsilon)
    }

    pub fn channels(&self) -> usize {
        self.theta.nrows()
    }

    pub fn theta(&self) -> &DMatrix<Complex64> {
        &self.theta
    }

    pub fn upsilon(&self) -> &DMatrix<Complex64> {
        &self.upsilon
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn loss_port(&self) -> LossPort {
        self.port
    }

    /// Factor multiplying the ideal `U`: `η / (η + (1 - η)ν)` for port
    /// variance `ν`, which is `η` for a vacuum port.
    pub fn effective_efficiency(&self) -> f64 {
        let eta = self.efficiency;
        if eta <= 0.0 {
            return 0.0;
        }
        eta / (eta + (1.0 - eta) * self.port.variance())
    }

    /// `½[[ReΘ+ReΥ, ImΥ-ImΘ], [ImΥ+ImΘ, ReΘ-ReΥ]]` at unit efficiency.
    pub fn ideal_real(&self) -> DMatrix<f64> {
        let l = self.channels();
        let mut u = DMatrix::zeros(2 * l, 2 * l);
        for i in 0..l {
            for j in 0..l {
                let (t, y) = (self.theta[(i, j)], self.upsilon[(i, j)]);
                u[(i, j)] = 0.5 * (t.re + y.re);
                u[(i, l + j)] = 0.5 * (y.im - t.im);
                u[(l + i, j)] = 0.5 * (y.im + t.im);
                u[(l + i, l + j)] = 0.5 * (t.re - y.re);
            }
        }
        u
    }

    /// Real unravelling matrix including the efficiency.
    pub fn real(&self) -> DMatrix<f64> {
        self.ideal_real() * self.effective_efficiency()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnravellingDiagnostics {
    pub valid: bool,
    /// Smallest eigenvalue of `U`.
    pub psd_margin: f64,
    pub upsilon_asymmetry: f64,
    pub theta_non_hermiticity: f64,
    pub efficiency_in_range: bool,
    /// Largest eigenvalue of `Θ`; physical detection schemes keep it `<= 1`.
    pub theta_max_eigenvalue: f64,
}

pub fn validate_unravelling(u: &UnravellingMatrix) -> UnravellingDiagnostics {
    let real = u.ideal_real();
    let scale = max_abs(&real).max(1.0);
    let sym_real = linalg::symmetrize(&real);
    let psd_margin = linalg::min_eigenvalue(&sym_real);
    let upsilon_asymmetry = u
        .upsilon
        .iter()
        .zip(u.upsilon.transpose().iter())
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm()));
    let theta_non_hermiticity = u
        .theta
        .iter()
        .zip(u.theta.adjoint().iter())
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm()));
    let efficiency_in_range =
        (0.0..=1.0).contains(&u.efficiency) && u.port.variance().is_finite() && u.port.variance() >= 1.0;
    let theta_re = u.theta.map(|z| z.re);
    let theta_im = u.theta.map(|z| z.im);
    let theta_max_eigenvalue = -crate::symplectic::hermitian_min_eigenvalue(
        &linalg::symmetrize(&(-theta_re)),
        &((&theta_im.transpose() - &theta_im) * 0.5),
    );
    let tol_sym = 1e-10 * scale;
    UnravellingDiagnostics {
        valid: psd_margin >= -1e-8 * scale
            && upsilon_asymmetry <= tol_sym
            && theta_non_hermiticity <= tol_sym
            && efficiency_in_range,
        psd_margin,
        upsilon_asymmetry,
        theta_non_hermiticity,
        efficiency_in_range,
        theta_max_eigenvalue,
    }
}

/// Returns `u` with detection efficiency `eta`, with the lost signal
/// replaced by noise from `port`.
pub fn apply_efficiency(u: &UnravellingMatrix, eta: f64, port: LossPort) -> Result<UnravellingMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("efficiency must lie in [0, 1], got {eta}")));
    }
    let v = port.variance();
    if !(v.is_finite() && v >= 1.0) {
        return Err(Error::InvalidParameter(format!("loss-port variance must be >= 1, got {v}")));
    }
    Ok(UnravellingMatrix { efficiency: eta, port, ..u.clone() })
}

/// Measurement matrices `C = √(2U) C̄` and `Γ = √(2U) S C̄ Ω`, both `2L x 2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetup {
    c: DMatrix<f64>,
    gamma: DMatrix<f64>,
}

impl MeasurementSetup {
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn modes(&self) -> usize {
        self.c.ncols() / 2
    }

    /// True when nothing is learnt from the currents.
    pub fn is_trivial(&self) -> bool {
        max_abs(&self.c) == 0.0 && max_abs(&self.gamma) == 0.0
    }

    /// Gain `K = σCᵀ + Γᵀ` multiplying the innovations in the conditional
    /// mean equation.
    pub fn gain(&self, sigma: &DMatrix<f64>) -> DMatrix<f64> {
        sigma * self.c.transpose() + self.gamma.transpose()
    }
}

pub fn measurement_matrices(c_ops: &CouplingOperators, u: &UnravellingMatrix) -> Result<MeasurementSetup> {
    if c_ops.channels() != u.channels() {
        return Err(Error::Dimension(format!(
            "{} jump operators but unravelling has {} channels",
            c_ops.channels(),
            u.channels()
        )));
    }
    let diag = validate_unravelling(u);
    if !diag.valid {
        return Err(Error::InvalidUnravelling(format!(
            "psd margin {:.3e}, Υ asymmetry {:.3e}, Θ non-hermiticity {:.3e}, efficiency in range: {}",
            diag.psd_margin, diag.upsilon_asymmetry, diag.theta_non_hermiticity, diag.efficiency_in_range
        )));
    }
    let two_u = linalg::symmetrize(&u.real()) * 2.0;
    let root = linalg::psd_sqrt(&two_u, linalg::psd_tol(&two_u))?;
    let c_bar = c_ops.c_bar();
    let c = &root * &c_bar;
    let gamma = &root * c_ops.s_matrix() * &c_bar * omega(c_ops.modes());
    Ok(MeasurementSetup { c, gamma })
}

fn check_dims(dd: &DriftDiffusion, m: &MeasurementSetup) -> Result<()> {
    if dd.modes() != m.modes() {
        return Err(Error::Dimension(format!(
            "dynamics have {} modes, measurement has {}",
            dd.modes(),
            m.modes()
        )));
    }
    Ok(())
}

fn rhs(dd: &DriftDiffusion, m: &MeasurementSetup, sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.gain(sigma);
    linalg::symmetrize(&(dd.moment_rhs(sigma) - &k * k.transpose()))
}

/// `Aσ + σAᵀ + D - (σCᵀ + Γᵀ)(σCᵀ + Γᵀ)ᵀ`.
pub fn riccati_rhs(sigma: &CovarianceMatrix, dd: &DriftDiffusion, m: &MeasurementSetup) -> Result<DMatrix<f64>> {
    check_dims(dd, m)?;
    if sigma.modes() != dd.modes() {
        return Err(Error::Dimension("covariance matrix and dynamics differ in mode count".into()));
    }
    Ok(rhs(dd, m, sigma.matrix()))
}

/// RK4 solution of the Riccati equation sampled at `steps + 1` equally
/// spaced times starting from `sigma0`.
pub fn riccati_path(
    dd: &DriftDiffusion,
    m: &MeasurementSetup,
    sigma0: &CovarianceMatrix,
    dt: f64,
    steps: usize,
) -> Result<Vec<DMatrix<f64>>> {
    check_dims(dd, m)?;
    if sigma0.modes() != dd.modes() {
        return Err(Error::Dimension("initial state and dynamics differ in mode count".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let mut path = Vec::with_capacity(steps + 1);
    let mut s = sigma0.matrix().clone();
    path.push(s.clone());
    for step in 0..steps {
        let k1 = rhs(dd, m, &s);
        let k2 = rhs(dd, m, &(&s + &k1 * (0.5 * dt)));
        let k3 = rhs(dd, m, &(&s + &k2 * (0.5 * dt)));
        let k4 = rhs(dd, m, &(&s + &k3 * dt));
        s = linalg::symmetrize(&(&s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)));
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { trajectory: 0, step: step + 1 });
        }
        path.push(s.clone());
    }
    Ok(path)
}

/// Plain RK4 integration of the Riccati equation up to time `t`.
pub fn integrate_riccati(
    dd: &DriftDiffusion,
    m: &MeasurementSetup,
    sigma0: &CovarianceMatrix,
    t: f64,
    dt: f64,
) -> Result<DMatrix<f64>> {
    let steps = (t / dt).round() as usize;
    let mut path = riccati_path(dd, m, sigma0, dt, steps)?;
    Ok(path.pop().expect("path contains the initial state"))
}

/// Kleinman–Newton iteration from `start`. Returns the iterate, its
/// residual `‖rhs‖_max` and the number of accepted iterations.
pub fn riccati_newton(
    dd: &DriftDiffusion,
    m: &MeasurementSetup,
    start: &DMatrix<f64>,
    max_iter: usize,
) -> Result<(DMatrix<f64>, f64, usize)> {
    check_dims(dd, m)?;
    let mut s = start.clone();
    let mut r = rhs(dd, m, &s);
    let mut res = max_abs(&r);
    let mut accepted = 0;
    for _ in 0..max_iter {
        let f = dd.drift() - m.gain(&s) * m.c();
        let delta = linalg::lyapunov(&f, &r)?;
        let next = linalg::symmetrize(&(&s + delta));
        let r_next = rhs(dd, m, &next);
        let res_next = max_abs(&r_next);
        if !res_next.is_finite() {
            break;
        }
        let improved = res_next < res;
        if improved || res_next <= f64::EPSILON * max_abs(&next).max(1.0) {
            s = next;
            r = r_next;
            res = res_next;
            accepted += 1;
        }
        if !improved {
            break;
        }
    }
    Ok((s, res, accepted))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub sigma: CovarianceMatrix,
    /// `‖rhs(σ)‖_max` at the returned solution.
    pub residual: f64,
    /// Accepted and rejected semi-implicit time steps.
    pub steps: usize,
    /// Time covered by the semi-implicit integration.
    pub elapsed: f64,
    pub newton_iterations: usize,
    /// A second fixed point was found near the returned one.
    pub non_unique: bool,
    pub physicality_margin: f64,
    pub stabilising_margin: f64,
}

/// Steady state of the Riccati equation. Integrates the flow with
/// linearly-implicit Euler steps of adaptive size from `sigma0` (default:
/// the unconditional steady state) and polishes the result with Newton
/// iterations. Near the stability boundary the flow can stall just above
/// the tolerance; the Newton stage then decides convergence.
pub fn riccati_steady_state(
    dd: &DriftDiffusion,
    m: &MeasurementSetup,
    sigma0: Option<&CovarianceMatrix>,
) -> Result<RiccatiSolution> {
    check_dims(dd, m)?;
    let unconditional = dynamics::lyapunov_steady_state(dd)?;
    let tol = RESIDUAL_TOL * max_abs(dd.diffusion()).max(1.0);

    if m.is_trivial() {
        let residual = max_abs(&dd.moment_rhs(unconditional.matrix()));
        return finish(dd, unconditional.into_matrix(), residual, 0, 0.0, 0, false);
    }

    let mut s = match sigma0 {
        Some(s0) if s0.modes() != dd.modes() => {
            return Err(Error::Dimension("initial state and dynamics differ in mode count".into()))
        }
        Some(s0) => s0.matrix().clone(),
        None => unconditional.matrix().clone(),
    };
    let dim = s.nrows();
    let eye = DMatrix::<f64>::identity(dim, dim);
    let mut r = rhs(dd, m, &s);
    let mut res = max_abs(&r);
    let mut h = 0.1;
    let mut elapsed = 0.0;
    let mut below = 0;
    let mut steps = 0;
    while steps < MAX_STEPS {
        if res <= tol {
            below += 1;
            if below >= 3 {
                break;
            }
        } else {
            below = 0;
        }
        steps += 1;
        let f = dd.drift() - m.gain(&s) * m.c() - &eye * (0.5 / h);
        let Ok(delta) = linalg::lyapunov(&f, &r) else {
            h *= 0.5;
            continue;
        };
        let next = linalg::symmetrize(&(&s + delta));
        let r_next = rhs(dd, m, &next);
        let res_next = max_abs(&r_next);
        if res_next.is_finite() && (res_next < res || res_next <= tol || h < 1e-3) {
            s = next;
            r = r_next;
            res = res_next;
            elapsed += h;
            h = (h * 2.0).min(1e12);
        } else {
            h *= 0.5;
        }
    }
    let (s, residual, newton_iterations) = riccati_newton(dd, m, &s, MAX_NEWTON)?;
    if residual > tol {
        return Err(Error::NoConvergence { residual, steps });
    }

    let (other, other_res, _) = riccati_newton(dd, m, &(&s + &eye * 0.1), 50)?;
    let non_unique = other_res <= tol && max_abs(&(&other - &s)) > 1e-6;
    finish(dd, s, residual, steps, elapsed, newton_iterations, non_unique)
}

fn finish(
    dd: &DriftDiffusion,
    s: DMatrix<f64>,
    residual: f64,
    steps: usize,
    elapsed: f64,
    newton_iterations: usize,
    non_unique: bool,
) -> Result<RiccatiSolution> {
    let sigma = CovarianceMatrix::new(s)?;
    let phys = physicality_check(&sigma);
    if !phys.physical {
        return Err(Error::Unphysical { margin: phys.margin });
    }
    let stab = stabilising_check(&sigma, dd)?;
    Ok(RiccatiSolution {
        sigma,
        residual,
        steps,
        elapsed,
        newton_iterations,
        non_unique,
        physicality_margin: phys.margin,
        stabilising_margin: stab.margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilisingReport {
    pub stabilising: bool,
    /// Smallest eigenvalue of `Aσ + σAᵀ + D`.
    pub margin: f64,
}

/// Checks `Aσ + σAᵀ + D ≥ 0`, the condition for `σ` to be reachable as a
/// conditional steady state.
pub fn stabilising_check(sigma: &CovarianceMatrix, dd: &DriftDiffusion) -> Result<StabilisingReport> {
    if sigma.modes() != dd.modes() {
        return Err(Error::Dimension("covariance matrix and dynamics differ in mode count".into()));
    }
    let m = linalg::symmetrize(&dd.moment_rhs(sigma.matrix()));
    let margin = linalg::min_eigenvalue(&m);
    let tol = 1e-8 * max_abs(&m).max(max_abs(dd.diffusion())).max(1.0);
    Ok(StabilisingReport { stabilising: margin >= -tol, margin })
}

/// Named unravellings of the thermal channels built by
/// [`CouplingOperators::thermal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnravellingKind {
    /// Single mode: monitors both thermal channels with opposite phases.
    /// Reaches the pure state with minimal variance `1/(1+2N)`.
    OptimalSqueeze { phi: f64 },
    /// Single-mode homodyne detection of the combined output field.
    HomodyneSingle { phi: f64 },
    /// Two modes, equal baths: jointly monitors `x1 - x2` and `p1 + p2`
    /// through all four channels.
    OptimalEntangle,
    /// Two modes with possibly different baths: the unravelling whose fixed
    /// point is the pure two-mode squeezed state set by the colder bath.
    OptimalEntangleUnequal,
    /// Two modes: homodyne detection of the nonlocal combinations
    /// `x1 - x2` and `p1 + p2` of the output fields.
    HomodyneNonlocal,
}

/// Coefficients of one SME term on `â_j` and `â_j†`.
struct Term {
    mode: usize,
    wiener: usize,
    on_a: Complex64,
    on_a_dag: Complex64,
}

fn from_terms(bath: &ThermalBathSpec, wieners: usize, terms: &[Term]) -> Result<UnravellingMatrix> {
    let n = bath.modes();
    let mut m = DMatrix::<Complex64>::zeros(2 * n, wieners);
    for t in terms {
        let nj = bath.occupations()[t.mode];
        m[(2 * t.mode, t.wiener)] += t.on_a / (nj + 1.0).sqrt();
        if nj > 0.0 {
            m[(2 * t.mode + 1, t.wiener)] += t.on_a_dag / nj.sqrt();
        } else if t.on_a_dag.norm() > 0.0 {
            return Err(Error::InvalidParameter("term acts on an empty thermal channel".into()));
        }
    }
    UnravellingMatrix::from_sme_coefficients(&m)
}

fn require_modes(bath: &ThermalBathSpec, n: usize, kind: &str) -> Result<()> {
    if bath.modes() != n {
        return Err(Error::Dimension(format!("{kind} needs {n} mode(s), bath has {}", bath.modes())));
    }
    Ok(())
}

pub fn standard_unravelling(kind: UnravellingKind, bath: &ThermalBathSpec) -> Result<UnravellingMatrix> {
    let occ = bath.occupations();
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match kind {
        UnravellingKind::OptimalSqueeze { phi } => {
            require_modes(bath, 1, "optimal squeezing unravelling")?;
            let n = occ[0];
            let e = Complex64::from_polar(1.0, phi);
            from_terms(
                bath,
                2,
                &[
                    Term { mode: 0, wiener: 0, on_a: e * (n + 1.0).sqrt(), on_a_dag: zero },
                    Term { mode: 0, wiener: 1, on_a: zero, on_a_dag: e.conj() * n.sqrt() },
                ],
            )
        }
        UnravellingKind::HomodyneSingle { phi } => {
            require_modes(bath, 1, "homodyne unravelling")?;
            let n = occ[0];
            let e = Complex64::from_polar(1.0 / (2.0 * n + 1.0).sqrt(), phi);
            from_terms(bath, 1, &[Term { mode: 0, wiener: 0, on_a: e * (n + 1.0), on_a_dag: -e.conj() * n }])
        }
        UnravellingKind::OptimalEntangle => {
            require_modes(bath, 2, "optimal entangling unravelling")?;
            if (occ[0] - occ[1]).abs() > 1e-12 * occ[0].max(occ[1]).max(1.0) {
                return Err(Error::InvalidParameter(
                    "optimal entangling unravelling needs equal baths; use the unequal-bath variant".into(),
                ));
            }
            let down = ((occ[0] + 1.0) / 2.0).sqrt();
            let up = (occ[0] / 2.0).sqrt();
            let c = |v: f64| Complex64::new(v, 0.0);
            from_terms(
                bath,
                4,
                &[
                    Term { mode: 0, wiener: 0, on_a: c(down), on_a_dag: zero },
                    Term { mode: 1, wiener: 0, on_a: c(-down), on_a_dag: zero },
                    Term { mode: 0, wiener: 1, on_a: zero, on_a_dag: c(up) },
                    Term { mode: 1, wiener: 1, on_a: zero, on_a_dag: c(-up) },
                    Term { mode: 0, wiener: 2, on_a: -i * down, on_a_dag: zero },
                    Term { mode: 1, wiener: 2, on_a: -i * down, on_a_dag: zero },
                    Term { mode: 0, wiener: 3, on_a: zero, on_a_dag: i * up },
                    Term { mode: 1, wiener: 3, on_a: zero, on_a_dag: i * up },
                ],
            )
        }
        UnravellingKind::OptimalEntangleUnequal => {
            require_modes(bath, 2, "optimal entangling unravelling")?;
            let n_min = occ[0].min(occ[1]);
            let target = CovarianceMatrix::two_mode_squeezed(1.0 / (1.0 + 2.0 * n_min))?;
            let (dd, c_ops) = dynamics::thermal_drift_diffusion(&HamiltonianMatrix::zero(2), bath)?;
            Ok(feedback::optimal_unravelling_for_target(&target, &dd, &c_ops)?.unravelling)
        }
        UnravellingKind::HomodyneNonlocal => {
            require_modes(bath, 2, "nonlocal homodyne unravelling")?;
            let mut terms = Vec::with_capacity(4);
            for (mode, sign) in [(0usize, 1.0), (1usize, -1.0)] {
                let n = occ[mode];
                let norm = 1.0 / (2.0 * (2.0 * n + 1.0)).sqrt();
                let (a, ad) = ((n + 1.0) * norm, n * norm);
                terms.push(Term {
                    mode,
                    wiener: 0,
                    on_a: Complex64::new(sign * a, 0.0),
                    on_a_dag: Complex64::new(-sign * ad, 0.0),
                });
                terms.push(Term { mode, wiener: 1, on_a: -i * a, on_a_dag: -i * ad });
            }
            from_terms(bath, 2, &terms)
        }
    }
}
