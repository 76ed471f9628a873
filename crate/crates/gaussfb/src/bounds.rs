//! Spectral bounds on the squeezing and entanglement reachable by any
//! continuous measurement of the environment, and tests for their tightness.

use nalgebra::DMatrix;

use crate::dynamics::DriftDiffusion;
use crate::linalg::{self, max_abs};
use crate::symplectic::{omega, Bipartition};
use crate::{Error, Result};

/// Ordered spectra of `-(A + Aᵀ)` and `D` with orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Eigenvalues of `-(A + Aᵀ)`, ascending.
    pub alpha_up: Vec<f64>,
    pub alpha_vectors: DMatrix<f64>,
    /// Eigenvalues of `D`, descending.
    pub delta_down: Vec<f64>,
    pub delta_vectors: DMatrix<f64>,
}

impl SpectralData {
    pub fn new(dd: &DriftDiffusion) -> Result<Self> {
        let a = dd.drift();
        let (alpha_up, alpha_vectors) = linalg::sym_eigen(&(-(a + a.transpose())));
        if alpha_up[0].is_nan() || alpha_up[0] <= 0.0 {
            return Err(Error::Unstable { abscissa: -0.5 * alpha_up[0] });
        }
        let (mut delta_down, vecs) = linalg::sym_eigen(dd.diffusion());
        delta_down.reverse();
        let k = vecs.ncols();
        let delta_vectors = DMatrix::from_fn(vecs.nrows(), k, |i, j| vecs[(i, k - 1 - j)]);
        Ok(Self { alpha_up, alpha_vectors, delta_down, delta_vectors })
    }

    fn alpha_space(&self, idx: usize) -> DMatrix<f64> {
        let tol = linalg::degeneracy_tol(&self.alpha_up);
        linalg::eigenspace(&self.alpha_up, &self.alpha_vectors, self.alpha_up[idx], tol)
    }

    fn delta_space(&self, idx: usize) -> DMatrix<f64> {
        let tol = linalg::degeneracy_tol(&self.delta_down);
        linalg::eigenspace(&self.delta_down, &self.delta_vectors, self.delta_down[idx], tol)
    }
}

/// Lower bound `α₁↑ / δ₁↓` on the smallest eigenvalue of any reachable
/// conditional steady state.
pub fn squeezing_bound(dd: &DriftDiffusion) -> Result<f64> {
    let s = SpectralData::new(dd)?;
    Ok(s.alpha_up[0] / s.delta_down[0])
}

/// Upper bound `max(0, log2[(δ₁↓ + δ₂↓) / (2√(α₁↑α₂↑))])` on the
/// logarithmic negativity of any reachable conditional steady state.
pub fn entanglement_bound(dd: &DriftDiffusion) -> Result<f64> {
    if dd.modes() < 2 {
        return Err(Error::Dimension("entanglement bound needs at least two modes".into()));
    }
    Ok((-pt_nu_lower_bound(dd)?.log2()).max(0.0))
}

/// `(δ₁↓ + δ₂↓)² / (4α₁↑α₂↑)`, an upper bound on the product `λ₁↓λ₂↓` of
/// the two largest eigenvalues of any steady state.
pub fn eig_product_bound(dd: &DriftDiffusion) -> Result<f64> {
    let s = SpectralData::new(dd)?;
    let num = s.delta_down[0] + s.delta_down[1];
    Ok(num * num / (4.0 * s.alpha_up[0] * s.alpha_up[1]))
}

/// `2√(α₁↑α₂↑) / (δ₁↓ + δ₂↓)`, a lower bound on the smallest partially
/// transposed symplectic eigenvalue of any reachable state.
pub fn pt_nu_lower_bound(dd: &DriftDiffusion) -> Result<f64> {
    let s = SpectralData::new(dd)?;
    Ok(2.0 * (s.alpha_up[0] * s.alpha_up[1]).sqrt() / (s.delta_down[0] + s.delta_down[1]))
}

/// The squeezing bound is attainable when the `α₁↑` and `δ₁↓` eigenspaces
/// share a direction (smallest principal angle below `1e-6`).
pub fn tightness_squeezing(dd: &DriftDiffusion) -> Result<bool> {
    let s = SpectralData::new(dd)?;
    Ok(linalg::min_principal_angle_sin(&s.alpha_space(0), &s.delta_space(0)) < 1e-6)
}

/// The entanglement bound is attainable when there is a vector `x` with
/// `x` in the `α₁↑` eigenspace, `Wx` in the `α₂↑` eigenspace (`W = ΩᵀΩ̃Ω`),
/// `(x ± Wx)/√2` in the `δ₁↓`/`δ₂↓` eigenspaces and `xᵀTx = 0`.
///
/// The linear conditions carve out a subspace `V`; the quadratic one is
/// satisfiable on `V` iff the restriction of `T` to `V` is indefinite or
/// singular.
pub fn tightness_entanglement(dd: &DriftDiffusion, bip: &Bipartition) -> Result<bool> {
    let n = dd.modes();
    if bip.modes() != n {
        return Err(Error::Dimension(format!("bipartition has {} modes, dynamics {n}", bip.modes())));
    }
    let s = SpectralData::new(dd)?;
    let dim = 2 * n;
    let eye = DMatrix::<f64>::identity(dim, dim);
    let w = omega(n).transpose() * bip.omega_tilde() * omega(n);
    let t = bip.t_matrix();
    let p_a1 = linalg::projector(&s.alpha_space(0));
    let p_a2 = linalg::projector(&s.alpha_space(1));
    let p_d1 = linalg::projector(&s.delta_space(0));
    let p_d2 = linalg::projector(&s.delta_space(1));
    let scale = std::f64::consts::FRAC_1_SQRT_2;

    // Either sign assignment of δ₂ in terms of (x, Wx) describes the same
    // subspace; both are evaluated so the test does not rely on that.
    for sign in [1.0, -1.0] {
        let plus = (&eye + &w * sign) * scale;
        let minus = (&eye - &w * sign) * scale;
        let blocks = [
            &eye - &p_a1,
            (&eye - &p_a2) * &w,
            (&eye - &p_d1) * plus,
            (&eye - &p_d2) * minus,
        ];
        let mut g = DMatrix::zeros(4 * dim, dim);
        for (k, b) in blocks.iter().enumerate() {
            g.view_mut((k * dim, 0), (dim, dim)).copy_from(b);
        }
        let v = linalg::null_space(&g, 1e-6);
        if v.ncols() == 0 {
            continue;
        }
        let t_v = linalg::symmetrize(&(v.transpose() * &t * &v));
        let (values, _) = linalg::sym_eigen(&t_v);
        let tol = 1e-6 * max_abs(&t_v).max(1.0);
        if values[0] <= tol && values[values.len() - 1] >= -tol {
            return Ok(true);
        }
    }
    Ok(false)
}
