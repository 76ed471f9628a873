//! Inverse unravelling problem, optimal linear feedback and the resulting
//! closed-loop dynamics.

use nalgebra::DMatrix;

use crate::conditioning::{stabilising_check, MeasurementSetup, UnravellingMatrix};
use crate::dynamics::{CouplingOperators, DriftDiffusion};
use crate::linalg::{self, max_abs};
use crate::symplectic::{omega, physicality_check, CovarianceMatrix};
use crate::{Error, Result};

/// Result of [`optimal_unravelling_for_target`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedUnravelling {
    pub unravelling: UnravellingMatrix,
    /// `‖2EᵀUE - (D + Aσ + σAᵀ)‖_max` for the returned `U`.
    pub residual: f64,
}

/// Finds a PSD unravelling whose Riccati fixed point is `sigma_c`.
///
/// With `E = C̄σ + SC̄Ω` the fixed-point condition is `2EᵀUE = D + Aσ + σAᵀ`;
/// the minimum-norm solution `U = ½ E⁺ᵀ (D + Aσ + σAᵀ) E⁺` is projected onto
/// the PSD cone and accepted if it still satisfies the condition.
pub fn optimal_unravelling_for_target(
    sigma_c: &CovarianceMatrix,
    dd: &DriftDiffusion,
    c_ops: &CouplingOperators,
) -> Result<SynthesizedUnravelling> {
    let n = dd.modes();
    if sigma_c.modes() != n || c_ops.modes() != n {
        return Err(Error::Dimension("target, dynamics and jump operators differ in mode count".into()));
    }
    let phys = physicality_check(sigma_c);
    if !phys.physical {
        return Err(Error::Unphysical { margin: phys.margin });
    }
    let stab = stabilising_check(sigma_c, dd)?;
    if !stab.stabilising {
        return Err(Error::NotStabilising { margin: stab.margin });
    }
    let s = sigma_c.matrix();
    let m = linalg::symmetrize(&dd.moment_rhs(s));
    let c_bar = c_ops.c_bar();
    let e = &c_bar * s + c_ops.s_matrix() * &c_bar * omega(n);
    let e_pinv = e
        .clone()
        .pseudo_inverse(1e-12 * e.norm().max(1.0))
        .map_err(|_| Error::Singular("pseudo-inverse"))?;
    let u = linalg::psd_project(&(e_pinv.transpose() * &m * &e_pinv * 0.5));
    let residual = max_abs(&(e.transpose() * &u * &e * 2.0 - &m));
    if residual > 1e-8 * max_abs(dd.diffusion()).max(1.0) {
        return Err(Error::NoPsdSolution { residual });
    }
    Ok(SynthesizedUnravelling { unravelling: UnravellingMatrix::from_real(&u)?, residual })
}

/// Linear feedback `dR̂ ↦ B y dt` driven by the measured currents `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackLaw {
    b: DMatrix<f64>,
}

impl FeedbackLaw {
    pub fn new(b: DMatrix<f64>) -> Self {
        Self { b }
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.b
    }
}

/// Gain `B = -(σ_c Cᵀ + Γᵀ)`, which cancels the innovation term in the
/// conditional mean and pins it at the origin.
pub fn feedback_gain(sigma_c: &CovarianceMatrix, m: &MeasurementSetup) -> Result<FeedbackLaw> {
    if sigma_c.modes() != m.modes() {
        return Err(Error::Dimension("covariance matrix and measurement differ in mode count".into()));
    }
    Ok(FeedbackLaw { b: -m.gain(sigma_c.matrix()) })
}

/// Unconditional dynamics under feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    dynamics: DriftDiffusion,
}

impl ClosedLoop {
    pub fn dynamics(&self) -> &DriftDiffusion {
        &self.dynamics
    }

    pub fn into_dynamics(self) -> DriftDiffusion {
        self.dynamics
    }
}

/// `A' = A + BC` and `D' = D + BBᵀ + BΓ + ΓᵀBᵀ`.
///
/// The diffusion follows from averaging the conditional moments: the mean
/// obeys `dr = (A + BC) r dt + (K + B) dw` with `K = σ_cCᵀ + Γᵀ`, and adding
/// the Riccati equation for `σ_c` to the equation for the covariance of `r`
/// leaves `D - ΓᵀΓ + (B + Γᵀ)(B + Γᵀ)ᵀ`.
pub fn closed_loop(dd: &DriftDiffusion, m: &MeasurementSetup, fb: &FeedbackLaw) -> Result<ClosedLoop> {
    let b = &fb.b;
    if b.shape() != (2 * dd.modes(), m.c().nrows()) || m.modes() != dd.modes() {
        return Err(Error::Dimension(format!(
            "feedback gain is {}x{}, expected {}x{}",
            b.nrows(),
            b.ncols(),
            2 * dd.modes(),
            m.c().nrows()
        )));
    }
    let a = dd.drift() + b * m.c();
    let bg = b * m.gamma();
    let d = dd.diffusion() + b * b.transpose() + &bg + bg.transpose();
    Ok(ClosedLoop { dynamics: DriftDiffusion::new(a, linalg::symmetrize(&d))? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioning::{measurement_matrices, standard_unravelling, UnravellingKind};
    use crate::conditioning::riccati_steady_state;
    use crate::dynamics::{thermal_drift_diffusion, HamiltonianMatrix, ThermalBathSpec};

    #[test]
    fn thermal_target_needs_no_measurement() {
        let bath = ThermalBathSpec::new(vec![1.0]).unwrap();
        let (dd, c) = thermal_drift_diffusion(&HamiltonianMatrix::zero(1), &bath).unwrap();
        let s = CovarianceMatrix::thermal(&[1.0]);
        let r = optimal_unravelling_for_target(&s, &dd, &c).unwrap();
        assert!(max_abs(&r.unravelling.ideal_real()) < 1e-12);
    }

    #[test]
    fn zero_gain_leaves_dynamics() {
        let bath = ThermalBathSpec::new(vec![0.5]).unwrap();
        let (dd, c) = thermal_drift_diffusion(&HamiltonianMatrix::zero(1), &bath).unwrap();
        let u = standard_unravelling(UnravellingKind::HomodyneSingle { phi: 0.0 }, &bath).unwrap();
        let m = measurement_matrices(&c, &u).unwrap();
        let cl = closed_loop(&dd, &m, &FeedbackLaw::new(DMatrix::zeros(2, 4))).unwrap();
        assert_eq!(cl.dynamics(), &dd);
    }

    #[test]
    fn vacuum_target_round_trips() {
        let bath = ThermalBathSpec::new(vec![1.0]).unwrap();
        let (dd, c) = thermal_drift_diffusion(&HamiltonianMatrix::zero(1), &bath).unwrap();
        let target = CovarianceMatrix::vacuum(1);
        let r = optimal_unravelling_for_target(&target, &dd, &c).unwrap();
        let m = measurement_matrices(&c, &r.unravelling).unwrap();
        let sol = riccati_steady_state(&dd, &m, None).unwrap();
        assert!(max_abs(&(sol.sigma.matrix() - target.matrix())) < 1e-9);
    }

    #[test]
    fn over_squeezed_target_rejected() {
        let bath = ThermalBathSpec::new(vec![1.0]).unwrap();
        let (dd, c) = thermal_drift_diffusion(&HamiltonianMatrix::zero(1), &bath).unwrap();
        let s = CovarianceMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.2, 5.0]))).unwrap();
        let err = optimal_unravelling_for_target(&s, &dd, &c).unwrap_err();
        assert!(matches!(err, Error::NotStabilising { .. }), "{err}");
    }
}
