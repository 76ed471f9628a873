//! Covariance matrices, the symplectic form and the entanglement measures
//! built on symplectic spectra.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::linalg::{self, max_abs};
use crate::{Error, Result};

/// Symmetry tolerance applied when constructing validated matrices.
pub(crate) const SYM_TOL: f64 = 1e-10;

/// Symmetric covariance matrix of `n` modes in `(x1, p1, ..., xn, pn)`
/// ordering. The vacuum is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    m: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square_even(&m, "covariance matrix")?;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("covariance matrix has non-finite entries".into()));
        }
        let asym = linalg::asymmetry(&m);
        if asym > SYM_TOL * max_abs(&m).max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self { m: linalg::symmetrize(&m) })
    }

    pub fn vacuum(n: usize) -> Self {
        Self { m: DMatrix::identity(2 * n, 2 * n) }
    }

    /// Product thermal state with the given mean occupations.
    pub fn thermal(occupations: &[f64]) -> Self {
        let d = occupations.iter().flat_map(|n| [1.0 + 2.0 * n, 1.0 + 2.0 * n]);
        Self { m: DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(2 * occupations.len(), d)) }
    }

    /// Pure two-mode squeezed vacuum whose squeezed quadratures are
    /// `x1 - x2` and `p1 + p2`, with partially transposed symplectic
    /// eigenvalue `nu_tilde` in `(0, 1]`.
    pub fn two_mode_squeezed(nu_tilde: f64) -> Result<Self> {
        if !(nu_tilde > 0.0 && nu_tilde <= 1.0) {
            return Err(Error::InvalidParameter(format!("nu_tilde must lie in (0, 1], got {nu_tilde}")));
        }
        let e = 1.0 / nu_tilde;
        let c = 0.5 * (e + 1.0 / e);
        let s = 0.5 * (e - 1.0 / e);
        Ok(Self {
            m: DMatrix::from_row_slice(
                4,
                4,
                &[c, 0.0, s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, -s, 0.0, c],
            ),
        })
    }

    pub fn modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn is_positive_definite(&self) -> bool {
        self.m.clone().cholesky().is_some()
    }
}

fn check_square_even(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 || !m.nrows().is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "{what} must be square with even non-zero dimension, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]` for `n` modes.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        w[(2 * j, 2 * j + 1)] = 1.0;
        w[(2 * j + 1, 2 * j)] = -1.0;
    }
    w
}

/// Split of the modes into two parties; the listed modes are the ones
/// partially transposed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    n: usize,
    transposed: BTreeSet<usize>,
}

impl Bipartition {
    pub fn new(n: usize, transposed: impl IntoIterator<Item = usize>) -> Result<Self> {
        let transposed: BTreeSet<usize> = transposed.into_iter().collect();
        if transposed.is_empty() || transposed.len() >= n {
            return Err(Error::InvalidParameter(
                "bipartition needs at least one mode on each side".into(),
            ));
        }
        if let Some(&j) = transposed.iter().find(|&&j| j >= n) {
            return Err(Error::InvalidParameter(format!("mode index {j} out of range for {n} modes")));
        }
        Ok(Self { n, transposed })
    }

    /// Bipartition of two modes with the second one transposed.
    pub fn two_mode() -> Self {
        Self { n: 2, transposed: BTreeSet::from([1]) }
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn transposed(&self) -> impl Iterator<Item = usize> + '_ {
        self.transposed.iter().copied()
    }

    /// Diagonal matrix flipping the momenta of the transposed modes.
    pub fn t_matrix(&self) -> DMatrix<f64> {
        let mut t = DMatrix::identity(2 * self.n, 2 * self.n);
        for &j in &self.transposed {
            t[(2 * j + 1, 2 * j + 1)] = -1.0;
        }
        t
    }

    /// Partially transposed symplectic form `TΩT`.
    pub fn omega_tilde(&self) -> DMatrix<f64> {
        let t = self.t_matrix();
        &t * omega(self.n) * &t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalityReport {
    pub physical: bool,
    /// Smallest eigenvalue of `σ + iΩ`; negative values measure the violation.
    pub margin: f64,
}

/// Robertson–Schrödinger check `σ + iΩ ≥ 0`, evaluated on the real
/// embedding `[[σ, -Ω], [Ω, σ]]`.
pub fn physicality_check(sigma: &CovarianceMatrix) -> PhysicalityReport {
    let margin = hermitian_min_eigenvalue(sigma.matrix(), &omega(sigma.modes()));
    PhysicalityReport { physical: margin >= -linalg::psd_tol(sigma.matrix()), margin }
}

/// Smallest eigenvalue of the Hermitian matrix `re + i·im` with `im`
/// antisymmetric.
pub(crate) fn hermitian_min_eigenvalue(re: &DMatrix<f64>, im: &DMatrix<f64>) -> f64 {
    let d = re.nrows();
    let mut emb = DMatrix::zeros(2 * d, 2 * d);
    emb.view_mut((0, 0), (d, d)).copy_from(re);
    emb.view_mut((d, d), (d, d)).copy_from(re);
    emb.view_mut((0, d), (d, d)).copy_from(&(-im));
    emb.view_mut((d, 0), (d, d)).copy_from(im);
    linalg::min_eigenvalue(&emb)
}

/// Symplectic eigenvalues in ascending order, from the spectrum of `iΩσ`.
pub fn symplectic_eigenvalues(sigma: &CovarianceMatrix) -> Result<Vec<f64>> {
    if !sigma.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(symplectic_spectrum(sigma.matrix()))
}

fn symplectic_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows() / 2;
    let mut moduli: Vec<f64> = (omega(n) * m).complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    moduli.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Smallest symplectic eigenvalue of the partial transpose `TσT`.
pub fn pt_min_symplectic_eigenvalue(sigma: &CovarianceMatrix, bip: &Bipartition) -> Result<f64> {
    if bip.modes() != sigma.modes() {
        return Err(Error::Dimension(format!(
            "bipartition has {} modes, covariance matrix has {}",
            bip.modes(),
            sigma.modes()
        )));
    }
    if !sigma.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let t = bip.t_matrix();
    Ok(symplectic_spectrum(&(&t * sigma.matrix() * &t))[0])
}

/// Logarithmic negativity `max(0, -log2 ν̃₋)`. Values of `ν̃₋` within
/// `1e-10` below 1 are rounding on separable states and give 0.
pub fn log_negativity(sigma: &CovarianceMatrix, bip: &Bipartition) -> Result<f64> {
    let nu = pt_min_symplectic_eigenvalue(sigma, bip)?;
    if nu >= 1.0 - SYM_TOL {
        return Ok(0.0);
    }
    Ok(-nu.log2())
}

/// Unclamped `-log2 ν̃₋`; positive exactly when the state is entangled.
pub fn log_pt_gap(sigma: &CovarianceMatrix, bip: &Bipartition) -> Result<f64> {
    Ok(-pt_min_symplectic_eigenvalue(sigma, bip)?.log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_physical_and_pure() {
        let v = CovarianceMatrix::vacuum(2);
        let r = physicality_check(&v);
        assert!(r.physical);
        assert!(r.margin.abs() < 1e-12);
        for nu in symplectic_eigenvalues(&v).unwrap() {
            assert!((nu - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn half_vacuum_is_unphysical() {
        let s = CovarianceMatrix::new(DMatrix::identity(2, 2) * 0.5).unwrap();
        assert!(!physicality_check(&s).physical);
    }

    #[test]
    fn rejects_odd_and_asymmetric() {
        assert!(matches!(
            CovarianceMatrix::new(DMatrix::identity(3, 3)),
            Err(Error::Dimension(_))
        ));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(CovarianceMatrix::new(m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn thermal_symplectic_eigenvalues() {
        let s = CovarianceMatrix::thermal(&[0.5, 2.0]);
        let nu = symplectic_eigenvalues(&s).unwrap();
        assert!((nu[0] - 2.0).abs() < 1e-12);
        assert!((nu[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_has_no_negativity() {
        let s = CovarianceMatrix::thermal(&[1.0, 1.0]);
        assert_eq!(log_negativity(&s, &Bipartition::two_mode()).unwrap(), 0.0);
    }

    #[test]
    fn tmsv_negativity() {
        let s = CovarianceMatrix::two_mode_squeezed(1.0 / 3.0).unwrap();
        let en = log_negativity(&s, &Bipartition::two_mode()).unwrap();
        assert!((en - 3f64.log2()).abs() < 1e-10);
    }

    #[test]
    fn bipartition_validation() {
        assert!(Bipartition::new(2, []).is_err());
        assert!(Bipartition::new(2, [0, 1]).is_err());
        assert!(Bipartition::new(2, [2]).is_err());
        assert!(Bipartition::new(3, [1, 2]).is_ok());
    }
}
