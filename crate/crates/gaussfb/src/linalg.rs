//! Small dense linear-algebra helpers shared by the public modules.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Largest matrix size handled by the Kronecker-product Lyapunov solver.
const KRONECKER_MAX_DIM: usize = 20;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Absolute PSD tolerance relative to the entry scale of `m`.
pub fn psd_tol(m: &DMatrix<f64>) -> f64 {
    1e-8 * max_abs(m).max(1.0)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues ascending.
/// Columns of the returned matrix are the matching unit eigenvectors.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), m.ncols());
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigen(m).0[0]
}

/// Square root of a PSD matrix. Eigenvalues in `[-tol, 0)` are clipped to
/// zero; anything more negative is an error.
pub fn psd_sqrt(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = sym_eigen(m);
    if values[0] < -tol {
        return Err(Error::InvalidUnravelling(format!(
            "matrix is not positive semidefinite (min eigenvalue {:.3e})",
            values[0]
        )));
    }
    let roots = DVector::from_iterator(values.len(), values.iter().map(|v| v.max(0.0).sqrt()));
    Ok(&vectors * DMatrix::from_diagonal(&roots) * vectors.transpose())
}

/// Projection onto the PSD cone in the Frobenius norm.
pub fn psd_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen(m);
    let clipped = DVector::from_iterator(values.len(), values.iter().map(|v| v.max(0.0)));
    symmetrize(&(&vectors * DMatrix::from_diagonal(&clipped) * vectors.transpose()))
}

/// Largest real part among the eigenvalues of a square matrix.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .fold(f64::NEG_INFINITY, |acc, z| acc.max(z.re))
}

/// Solves `A X + X Aᵀ + Q = 0` for a stable `A`.
pub fn lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() <= KRONECKER_MAX_DIM {
        lyapunov_kronecker(a, q)
    } else {
        lyapunov_smith(a, q)
    }
}

pub fn lyapunov_kronecker(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    let eye = DMatrix::<f64>::identity(d, d);
    // Column-major vec: vec(AX) = (I ⊗ A) vec X, vec(XAᵀ) = (A ⊗ I) vec X.
    let op = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_iterator(d * d, q.iter().map(|v| -v));
    let x = op.lu().solve(&rhs).ok_or(Error::Singular("Lyapunov solve"))?;
    Ok(symmetrize(&DMatrix::from_column_slice(d, d, x.as_slice())))
}

/// Cayley transform followed by Smith doubling on the resulting Stein
/// equation. Used for dimensions where the Kronecker system gets large.
pub fn lyapunov_smith(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    let eye = DMatrix::<f64>::identity(d, d);
    let p = a.norm().max(1e-3);
    let inv = (a - &eye * p)
        .try_inverse()
        .ok_or(Error::Singular("Lyapunov Cayley transform"))?;
    let mut w = &inv * (a + &eye * p);
    let mut x = &inv * q * inv.transpose() * (2.0 * p);
    for _ in 0..200 {
        let dx = &w * &x * w.transpose();
        let done = max_abs(&dx) <= 1e-16 * max_abs(&x).max(1e-300);
        x += dx;
        if done {
            return Ok(symmetrize(&x));
        }
        w = &w * &w;
    }
    Err(Error::NoConvergence {
        residual: max_abs(&(a * &x + &x * a.transpose() + q)),
        steps: 200,
    })
}

/// Orthonormal basis (columns) of the eigenspace of a symmetric matrix
/// belonging to `target`, with degeneracy judged by `tol`.
pub fn eigenspace(values: &[f64], vectors: &DMatrix<f64>, target: f64, tol: f64) -> DMatrix<f64> {
    let cols: Vec<_> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| (*v - target).abs() <= tol)
        .map(|(i, _)| vectors.column(i).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}

/// Degeneracy tolerance for eigenvalue groups of a matrix with spectrum `values`.
pub fn degeneracy_tol(values: &[f64]) -> f64 {
    let scale = values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    1e-8 * scale
}

pub fn projector(basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis * basis.transpose()
}

/// Orthonormal basis of the numerical null space of `g`.
pub fn null_space(g: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let gram = g.transpose() * g;
    let (values, vectors) = sym_eigen(&gram);
    let cols: Vec<_> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v <= tol * tol)
        .map(|(i, _)| vectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(g.ncols(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Sine of the smallest principal angle between two subspaces given by
/// orthonormal column bases.
pub fn min_principal_angle_sin(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    if u.ncols() == 0 || v.ncols() == 0 {
        return 1.0;
    }
    let s = (u.transpose() * v).singular_values();
    let cos_max = s.iter().fold(0.0_f64, |acc, x| acc.max(*x)).min(1.0);
    (1.0 - cos_max * cos_max).max(0.0).sqrt()
}
