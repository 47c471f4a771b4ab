//! Small dense complex linear-algebra helpers shared by the beamforming
//! schemes and the rate metrics.
//!
//! Eigen and singular vectors are made deterministic: pairs are ordered by
//! nonincreasing value (ties broken by lowest index) and each vector's global
//! phase is fixed so that its largest-magnitude entry is real nonnegative.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// `n x n` identity scaled by a real factor.
pub fn scaled_eye(n: usize, scale: f64) -> CMat {
    CMat::from_diagonal_element(n, n, Complex64::new(scale, 0.0))
}

/// Symmetrise a numerically-Hermitian matrix: `(a + a^H) / 2`.
pub fn hermitianize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Fix the global phase of a column so its largest-magnitude entry is real
/// nonnegative. Ties are broken by lowest index. Zero columns are untouched.
pub fn fix_column_phase(col: &mut CVec) {
    let mut best = 0usize;
    let mut best_norm = 0.0f64;
    for (i, z) in col.iter().enumerate() {
        let n = z.norm_sqr();
        if n > best_norm {
            best_norm = n;
            best = i;
        }
    }
    if best_norm > 0.0 {
        let z = col[best];
        let rot = z.conj() / z.norm();
        for entry in col.iter_mut() {
            *entry *= rot;
        }
    }
}

fn fix_matrix_phases(m: &mut CMat) {
    for c in 0..m.ncols() {
        let mut col = CVec::from_column_slice(m.column(c).as_slice());
        fix_column_phase(&mut col);
        m.set_column(c, &col);
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending and
/// phase-fixed eigenvectors. The input is symmetrised first.
pub fn eig_hermitian_asc(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = hermitianize(a).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src).clone_owned());
    }
    fix_matrix_phases(&mut vectors);
    (values, vectors)
}

/// The `d` eigenvectors of a Hermitian matrix associated with its smallest
/// eigenvalues, as the columns of an `n x d` matrix with orthonormal columns.
pub fn smallest_eigenvectors(a: &CMat, d: usize) -> CMat {
    let (_, vectors) = eig_hermitian_asc(a);
    vectors.columns(0, d).into_owned()
}

/// Singular values (descending) and the matching left/right singular vectors
/// of a complex matrix, phase-fixed for determinism.
pub fn svd_sorted(g: &CMat) -> (Vec<f64>, CMat, CMat) {
    let svd = g.clone().svd(true, true);
    let u_raw = svd.u.expect("svd requested u");
    let vt_raw = svd.v_t.expect("svd requested v_t");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut u = CMat::zeros(u_raw.nrows(), k);
    let mut v = CMat::zeros(vt_raw.ncols(), k);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_raw.column(src).clone_owned());
        v.set_column(dst, &vt_raw.row(src).adjoint());
    }
    // Phase-fix the right vectors and rotate the left ones consistently so
    // that g ≈ u diag(s) v^H keeps holding.
    for c in 0..k {
        let mut col = CVec::from_column_slice(v.column(c).as_slice());
        let before = col.clone();
        fix_column_phase(&mut col);
        v.set_column(c, &col);
        // col = rot * before, with |rot| = 1, so u's column needs rot too.
        let mut rot = Complex64::new(1.0, 0.0);
        for i in 0..before.len() {
            if before[i].norm() > 1e-300 {
                rot = col[i] / before[i];
                break;
            }
        }
        let uc = u.column(c).clone_owned() * rot;
        u.set_column(c, &uc);
    }
    (values, u, v)
}

/// The `d` right singular vectors of `g` with the largest singular values.
pub fn dominant_right_singular_vectors(g: &CMat, d: usize) -> CMat {
    let (_, _, v) = svd_sorted(g);
    v.columns(0, d).into_owned()
}

/// `log2 det(I + q^{-1} a)` for Hermitian positive-definite `q` and Hermitian
/// positive-semidefinite `a`, via Cholesky whitening and a Hermitian
/// eigendecomposition of `l^{-1} a l^{-H}`.
pub fn log2_det_whitened(q: &CMat, a: &CMat) -> Result<f64> {
    let chol = hermitianize(q)
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("covariance not positive definite".into()))?;
    let l = chol.l();
    // x = l^{-1} a, then m = l^{-1} x^H = l^{-1} a l^{-H} (a Hermitian).
    let x = l
        .clone()
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
    let m = l
        .solve_lower_triangular(&x.adjoint())
        .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
    let (eigs, _) = eig_hermitian_asc(&m);
    Ok(eigs.iter().map(|&e| (1.0 + e.max(0.0)).log2()).sum())
}
