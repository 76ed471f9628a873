//! Unconditional Gaussian dynamics: drift and diffusion matrices built from a
//! quadratic Hamiltonian and linear jump operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg::{self, max_abs};
use crate::symplectic::{omega, CovarianceMatrix, SYM_TOL};
use crate::{Error, Result};

/// Symmetric matrix `H` of a quadratic Hamiltonian `Ĥ = ½ R̂ᵀ H R̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    m: DMatrix<f64>,
}

impl HamiltonianMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 || !m.nrows().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "Hamiltonian matrix must be square with even dimension, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = linalg::asymmetry(&m);
        if asym > SYM_TOL * max_abs(&m).max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self { m: linalg::symmetrize(&m) })
    }

    pub fn zero(n: usize) -> Self {
        Self { m: DMatrix::zeros(2 * n, 2 * n) }
    }

    /// Two-mode parametric interaction `χ(x1 p2 + p1 x2)`.
    pub fn parametric(chi: f64) -> Self {
        let mut m = DMatrix::zeros(4, 4);
        for (i, j) in [(0, 3), (3, 0), (1, 2), (2, 1)] {
            m[(i, j)] = chi;
        }
        Self { m }
    }

    pub fn modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

/// Linear jump operators `ĉ = C̃ R̂`, one row of `C̃` per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOperators {
    c: DMatrix<Complex64>,
}

impl CouplingOperators {
    pub fn new(c: DMatrix<Complex64>) -> Result<Self> {
        if c.nrows() == 0 || c.ncols() == 0 || !c.ncols().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "coupling matrix must be L x 2n with L, n >= 1, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("coupling matrix has non-finite entries".into()));
        }
        Ok(Self { c })
    }

    /// Thermal channels `√(κ(N_j+1)) â_j` and `√(κN_j) â_j†`, in that order
    /// for each mode. A channel with zero weight is kept as a zero row.
    pub fn thermal(bath: &ThermalBathSpec) -> Self {
        let n = bath.modes();
        let mut c = DMatrix::zeros(2 * n, 2 * n);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (j, &nj) in bath.occupations().iter().enumerate() {
            let down = (bath.kappa() * (nj + 1.0)).sqrt() * s;
            let up = (bath.kappa() * nj).sqrt() * s;
            c[(2 * j, 2 * j)] = Complex64::new(down, 0.0);
            c[(2 * j, 2 * j + 1)] = Complex64::new(0.0, down);
            c[(2 * j + 1, 2 * j)] = Complex64::new(up, 0.0);
            c[(2 * j + 1, 2 * j + 1)] = Complex64::new(0.0, -up);
        }
        Self { c }
    }

    pub fn channels(&self) -> usize {
        self.c.nrows()
    }

    pub fn modes(&self) -> usize {
        self.c.ncols() / 2
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    /// Real stacking `[Re C̃; Im C̃]`.
    pub fn c_bar(&self) -> DMatrix<f64> {
        let (l, d) = self.c.shape();
        let mut out = DMatrix::zeros(2 * l, d);
        for i in 0..l {
            for j in 0..d {
                out[(i, j)] = self.c[(i, j)].re;
                out[(l + i, j)] = self.c[(i, j)].im;
            }
        }
        out
    }

    /// `S = [[0, 1], [-1, 0]]` in `L x L` blocks.
    pub fn s_matrix(&self) -> DMatrix<f64> {
        let l = self.channels();
        let mut s = DMatrix::zeros(2 * l, 2 * l);
        for i in 0..l {
            s[(i, l + i)] = 1.0;
            s[(l + i, i)] = -1.0;
        }
        s
    }
}

/// Independent thermal baths, one per mode, all with loss rate `κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalBathSpec {
    kappa: f64,
    occupations: Vec<f64>,
}

impl ThermalBathSpec {
    /// Baths with unit loss rate.
    pub fn new(occupations: Vec<f64>) -> Result<Self> {
        Self::with_kappa(1.0, occupations)
    }

    pub fn with_kappa(kappa: f64, occupations: Vec<f64>) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("loss rate must be positive, got {kappa}")));
        }
        if occupations.is_empty() {
            return Err(Error::InvalidParameter("at least one mode is required".into()));
        }
        if let Some(bad) = occupations.iter().find(|n| !(n.is_finite() && **n >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "thermal occupation must be finite and non-negative, got {bad}"
            )));
        }
        Ok(Self { kappa, occupations })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn occupations(&self) -> &[f64] {
        &self.occupations
    }

    pub fn modes(&self) -> usize {
        self.occupations.len()
    }
}

/// Drift `A` and diffusion `D` of `dσ/dt = Aσ + σAᵀ + D`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDiffusion {
    a: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl DriftDiffusion {
    pub fn new(a: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let dim = a.nrows();
        if a.ncols() != dim || d.shape() != (dim, dim) || dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "drift {}x{} and diffusion {}x{} must be matching square even matrices",
                a.nrows(),
                a.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        let asym = linalg::asymmetry(&d);
        if asym > SYM_TOL * max_abs(&d).max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        let d = linalg::symmetrize(&d);
        let min = linalg::min_eigenvalue(&d);
        if min < -linalg::psd_tol(&d) {
            return Err(Error::InvalidParameter(format!(
                "diffusion matrix is not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
        Ok(Self { a, d })
    }

    pub fn modes(&self) -> usize {
        self.a.nrows() / 2
    }

    pub fn drift(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn diffusion(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// Right-hand side `Aσ + σAᵀ + D`.
    pub fn moment_rhs(&self, sigma: &DMatrix<f64>) -> DMatrix<f64> {
        let a_s = &self.a * sigma;
        &a_s + a_s.transpose() + &self.d
    }
}

/// `A = Ω(H + Im[C̃†C̃])`, `D = 2Ω Re[C̃†C̃] Ωᵀ`.
pub fn build_drift_diffusion(h: &HamiltonianMatrix, c: &CouplingOperators) -> Result<DriftDiffusion> {
    if h.modes() != c.modes() {
        return Err(Error::Dimension(format!(
            "Hamiltonian has {} modes, coupling operators have {}",
            h.modes(),
            c.modes()
        )));
    }
    let w = omega(h.modes());
    let g = c.matrix().adjoint() * c.matrix();
    let re = g.map(|z| z.re);
    let im = g.map(|z| z.im);
    let a = &w * (h.matrix() + im);
    let d = &w * re * w.transpose() * 2.0;
    DriftDiffusion::new(a, linalg::symmetrize(&d))
}

/// Closed-form thermal model `A = ΩH - (κ/2)·1`, `D = ⊕ κ(1 + 2N_j)·1₂`,
/// together with the jump operators that generate it.
pub fn thermal_drift_diffusion(
    h: &HamiltonianMatrix,
    bath: &ThermalBathSpec,
) -> Result<(DriftDiffusion, CouplingOperators)> {
    let n = bath.modes();
    if h.modes() != n {
        return Err(Error::Dimension(format!(
            "Hamiltonian has {} modes, bath specification has {n}",
            h.modes()
        )));
    }
    let kappa = bath.kappa();
    let a = omega(n) * h.matrix() - DMatrix::identity(2 * n, 2 * n) * (0.5 * kappa);
    let diag = bath.occupations().iter().flat_map(|nj| {
        let v = kappa * (1.0 + 2.0 * nj);
        [v, v]
    });
    let d = DMatrix::from_diagonal(&DVector::from_iterator(2 * n, diag));
    Ok((DriftDiffusion::new(a, d)?, CouplingOperators::thermal(bath)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// `A + Aᵀ < 0`.
    pub stable: bool,
    /// Eigenvalues of `-(A + Aᵀ)`, ascending.
    pub alpha_up: Vec<f64>,
    /// Largest real part of the spectrum of `A`.
    pub spectral_abscissa: f64,
}

pub fn stability_check(dd: &DriftDiffusion) -> StabilityReport {
    let a = dd.drift();
    let alpha_up = linalg::sym_eigen(&(-(a + a.transpose()))).0;
    StabilityReport {
        stable: alpha_up[0] > 0.0,
        alpha_up,
        spectral_abscissa: linalg::spectral_abscissa(a),
    }
}

/// Steady state of `Aσ + σAᵀ + D = 0`. Requires `A` to be Hurwitz, which
/// holds whenever `A + Aᵀ < 0`.
pub fn lyapunov_steady_state(dd: &DriftDiffusion) -> Result<CovarianceMatrix> {
    let abscissa = linalg::spectral_abscissa(dd.drift());
    if abscissa.is_nan() || abscissa >= 0.0 {
        return Err(Error::Unstable { abscissa });
    }
    CovarianceMatrix::new(linalg::lyapunov(dd.drift(), dd.diffusion())?)
}

/// Fixed-step RK4 integration of `dσ/dt = Aσ + σAᵀ + D` up to time `t`.
pub fn evolve_covariance(dd: &DriftDiffusion, sigma0: &CovarianceMatrix, t: f64, dt: f64) -> Result<DMatrix<f64>> {
    if sigma0.modes() != dd.modes() {
        return Err(Error::Dimension("initial state and dynamics differ in mode count".into()));
    }
    if !(dt > 0.0 && t >= 0.0) {
        return Err(Error::InvalidParameter("time step must be positive and horizon non-negative".into()));
    }
    let steps = (t / dt).round() as usize;
    let mut s = sigma0.matrix().clone();
    for _ in 0..steps {
        let k1 = dd.moment_rhs(&s);
        let k2 = dd.moment_rhs(&(&s + &k1 * (0.5 * dt)));
        let k3 = dd.moment_rhs(&(&s + &k2 * (0.5 * dt)));
        let k4 = dd.moment_rhs(&(&s + &k3 * dt));
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    Ok(linalg::symmetrize(&s))
}
