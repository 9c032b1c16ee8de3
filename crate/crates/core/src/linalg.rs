//! Dense linear-algebra helpers over LAPACK/BLAS.
//!
//! Matrices are row-major `ndarray` arrays; LAPACK calls go through
//! column-major copies.

use ndarray::{Array1, Array2, ShapeBuilder};
use num_complex::Complex64;

use crate::error::{LabError, Result};

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;
pub type RMatrix = Array2<f64>;
pub type CVector = Array1<C64>;

pub const IMAG: C64 = C64::new(0.0, 1.0);

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.mapv(|x| C64::new(x, 0.0))
}

pub fn to_complex_vec(v: &[f64]) -> CVector {
    v.iter().map(|&x| C64::new(x, 0.0)).collect()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max_jk |M_jk - conj(M_kj)|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut defect = 0.0_f64;
    for j in 0..n {
        for k in j..n {
            defect = defect.max((m[[j, k]] - m[[k, j]].conj()).norm());
        }
    }
    defect
}

/// In-place `M <- (M + M*)/2`. The result is exactly Hermitian in floating point.
pub fn symmetrize(m: &mut CMatrix) {
    let n = m.nrows();
    for j in 0..n {
        m[[j, j]] = C64::new(m[[j, j]].re, 0.0);
        for k in (j + 1)..n {
            let upper = (m[[j, k]] + m[[k, j]].conj()) * 0.5;
            m[[j, k]] = upper;
            m[[k, j]] = upper.conj();
        }
    }
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

/// `i(XY - YX)`, the matrix form of `[X, iY]`.
pub fn commutator_i(x: &CMatrix, y: &CMatrix) -> CMatrix {
    let xy = x.dot(y);
    let yx = y.dot(x);
    (xy - yx).mapv(|z| IMAG * z)
}

/// Plain `XY - YX`.
pub fn commutator_plain(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x.dot(y) - y.dot(x)
}

pub fn vnorm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<u, v>` antilinear in the first slot.
pub fn inner(u: &CVector, v: &CVector) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

fn check_square(rows: usize, cols: usize) -> Result<()> {
    if rows != cols {
        return Err(LabError::DimensionMismatch { left: rows, right: cols });
    }
    Ok(())
}

fn lapack_info(routine: &'static str, info: i32) -> Result<()> {
    if info != 0 {
        return Err(LabError::Lapack { routine, info });
    }
    Ok(())
}

fn col_major_to_standard<T: Clone>(n: usize, data: Vec<T>) -> Array2<T> {
    Array2::from_shape_vec((n, n).f(), data)
        .expect("square buffer")
        .as_standard_layout()
        .into_owned()
}

/// Eigen-decomposition of a real symmetric matrix (divide and conquer).
/// Eigenvalues ascending; eigenvectors are the columns of the returned matrix.
pub fn sym_eigen(m: &RMatrix) -> Result<(Vec<f64>, RMatrix)> {
    check_square(m.nrows(), m.ncols())?;
    let n = m.nrows();
    if n == 0 {
        return Ok((vec![], RMatrix::zeros((0, 0))));
    }
    // symmetric: row-major buffer is also the column-major buffer
    let mut a: Vec<f64> = m.iter().cloned().collect();
    let mut w = vec![0.0; n];
    let ni = n as i32;
    let mut info = 0;
    let mut work = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    unsafe {
        lapack::dsyevd(b'V', b'L', ni, &mut a, ni, &mut w, &mut work, -1, &mut iwork, -1, &mut info);
    }
    lapack_info("dsyevd", info)?;
    let lwork = work[0] as usize;
    let liwork = iwork[0] as usize;
    let mut work = vec![0.0; lwork.max(1)];
    let mut iwork = vec![0i32; liwork.max(1)];
    unsafe {
        lapack::dsyevd(
            b'V',
            b'L',
            ni,
            &mut a,
            ni,
            &mut w,
            &mut work,
            lwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    lapack_info("dsyevd", info)?;
    Ok((w, col_major_to_standard(n, a)))
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &RMatrix) -> Result<Vec<f64>> {
    check_square(m.nrows(), m.ncols())?;
    let n = m.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    let mut a: Vec<f64> = m.iter().cloned().collect();
    let mut w = vec![0.0; n];
    let ni = n as i32;
    let mut info = 0;
    let mut work = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    unsafe {
        lapack::dsyevd(b'N', b'L', ni, &mut a, ni, &mut w, &mut work, -1, &mut iwork, -1, &mut info);
    }
    lapack_info("dsyevd", info)?;
    let lwork = work[0] as usize;
    let liwork = iwork[0] as usize;
    let mut work = vec![0.0; lwork.max(1)];
    let mut iwork = vec![0i32; liwork.max(1)];
    unsafe {
        lapack::dsyevd(
            b'N',
            b'L',
            ni,
            &mut a,
            ni,
            &mut w,
            &mut work,
            lwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    lapack_info("dsyevd", info)?;
    Ok(w)
}

/// Eigen-decomposition of a complex Hermitian matrix (divide and conquer).
pub fn herm_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    herm_eigen_job(m, true).map(|(w, v)| (w, v.expect("vectors requested")))
}

/// Eigenvalues only, ascending.
pub fn herm_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    herm_eigen_job(m, false).map(|(w, _)| w)
}

fn herm_eigen_job(m: &CMatrix, vectors: bool) -> Result<(Vec<f64>, Option<CMatrix>)> {
    check_square(m.nrows(), m.ncols())?;
    let n = m.nrows();
    if n == 0 {
        return Ok((vec![], vectors.then(|| CMatrix::zeros((0, 0)))));
    }
    let mut fortran = CMatrix::zeros((n, n).f());
    fortran.assign(m);
    let mut a = fortran.into_raw_vec_and_offset().0;
    let jobz = if vectors { b'V' } else { b'N' };
    let ni = n as i32;
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut work = vec![C64::new(0.0, 0.0); 1];
    let mut rwork = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    unsafe {
        lapack::zheevd(
            jobz, b'L', ni, &mut a, ni, &mut w, &mut work, -1, &mut rwork, -1, &mut iwork, -1, &mut info,
        );
    }
    lapack_info("zheevd", info)?;
    let lwork = work[0].re as usize;
    let lrwork = rwork[0] as usize;
    let liwork = iwork[0] as usize;
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1)];
    let mut rwork = vec![0.0; lrwork.max(1)];
    let mut iwork = vec![0i32; liwork.max(1)];
    unsafe {
        lapack::zheevd(
            jobz,
            b'L',
            ni,
            &mut a,
            ni,
            &mut w,
            &mut work,
            lwork as i32,
            &mut rwork,
            lrwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    lapack_info("zheevd", info)?;
    let vecs = vectors.then(|| col_major_to_standard(n, a));
    Ok((w, vecs))
}

/// Eigen-decomposition of a real symmetric tridiagonal matrix given its
/// diagonal and sub-diagonal.
pub fn tridiag_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, RMatrix)> {
    let n = diag.len();
    if n == 0 {
        return Ok((vec![], RMatrix::zeros((0, 0))));
    }
    if off.len() + 1 != n {
        return Err(LabError::DimensionMismatch { left: off.len() + 1, right: n });
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n * n];
    let ni = n as i32;
    let mut info = 0;
    let mut work = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    unsafe {
        lapack::dstevd(b'V', ni, &mut d, &mut e, &mut z, ni, &mut work, -1, &mut iwork, -1, &mut info);
    }
    lapack_info("dstevd", info)?;
    let lwork = work[0] as usize;
    let liwork = iwork[0] as usize;
    let mut work = vec![0.0; lwork.max(1)];
    let mut iwork = vec![0i32; liwork.max(1)];
    unsafe {
        lapack::dstevd(
            b'V',
            ni,
            &mut d,
            &mut e,
            &mut z,
            ni,
            &mut work,
            lwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    lapack_info("dstevd", info)?;
    Ok((d, col_major_to_standard(n, z)))
}

/// Operator 2-norm. Hermitian and anti-Hermitian inputs go through their
/// eigenvalues directly; anything else through `X*X`.
pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    check_square(m.nrows(), m.ncols())?;
    let scale = max_abs(m);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let tol = 1e-13 * scale;
    let eig_norm = |x: &CMatrix| -> Result<f64> {
        let w = if x.iter().all(|z| z.im == 0.0) {
            sym_eigenvalues(&x.mapv(|z| z.re))?
        } else {
            herm_eigenvalues(x)?
        };
        Ok(w.iter().fold(0.0_f64, |acc, l| acc.max(l.abs())))
    };
    if hermiticity_defect(m) <= tol {
        let mut h = m.clone();
        symmetrize(&mut h);
        return eig_norm(&h);
    }
    let rotated = m.mapv(|z| IMAG * z);
    if hermiticity_defect(&rotated) <= tol {
        let mut h = rotated;
        symmetrize(&mut h);
        return eig_norm(&h);
    }
    let mut gram = adjoint(m).dot(m);
    symmetrize(&mut gram);
    let w = herm_eigenvalues(&gram)?;
    Ok(w.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn solve(a: &CMatrix, b: &CVector) -> Result<CVector> {
    check_square(a.nrows(), a.ncols())?;
    let n = a.nrows();
    if b.len() != n {
        return Err(LabError::DimensionMismatch { left: n, right: b.len() });
    }
    let mut fortran = CMatrix::zeros((n, n).f());
    fortran.assign(a);
    let mut buf = fortran.into_raw_vec_and_offset().0;
    let mut rhs: Vec<C64> = b.to_vec();
    let mut ipiv = vec![0i32; n];
    let mut info = 0;
    let ni = n as i32;
    unsafe {
        lapack::zgesv(ni, 1, &mut buf, ni, &mut ipiv, &mut rhs, ni, &mut info);
    }
    lapack_info("zgesv", info)?;
    Ok(CVector::from(rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn symmetrize_is_exact() {
        let mut m = array![
            [C64::new(1.0, 0.3), C64::new(0.1, 2.0)],
            [C64::new(0.7, -1.0), C64::new(-2.0, 0.0)]
        ];
        symmetrize(&mut m);
        assert_eq!(hermiticity_defect(&m), 0.0);
        assert_eq!(m[[0, 0]].im, 0.0);
    }

    #[test]
    fn tridiagonal_spectrum_matches_closed_form() {
        let (w, v) = tridiag_eigen(&[2.0; 4], &[-1.0; 3]).unwrap();
        for (k, l) in w.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 5.0).cos();
            assert_abs_diff_eq!(*l, exact, epsilon = 1e-14);
        }
        let gram = v.t().dot(&v);
        for j in 0..4 {
            for k in 0..4 {
                let id = if j == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[[j, k]], id, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn hermitian_eigen_of_complex_matrix() {
        // [[0, -i], [i, 0]] has eigenvalues -1, 1
        let m = array![
            [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
            [C64::new(0.0, 1.0), C64::new(0.0, 0.0)]
        ];
        let (w, v) = herm_eigen(&m).unwrap();
        assert_abs_diff_eq!(w[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 1.0, epsilon = 1e-15);
        let mv = m.dot(&v);
        for j in 0..2 {
            for k in 0..2 {
                assert!((mv[[j, k]] - v[[j, k]] * w[k]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn spectral_norm_of_non_normal_matrix() {
        // Jordan block [[0, 2], [0, 0]] has norm 2.
        let m = array![
            [C64::new(0.0, 0.0), C64::new(2.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
        ];
        assert_abs_diff_eq!(spectral_norm(&m).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn lu_solve_recovers_rhs() {
        let a = array![
            [C64::new(2.0, 1.0), C64::new(0.0, 1.0)],
            [C64::new(1.0, 0.0), C64::new(3.0, -1.0)]
        ];
        let x = array![C64::new(1.0, -1.0), C64::new(0.5, 2.0)];
        let b = a.dot(&x);
        let got = solve(&a, &b).unwrap();
        assert!(vnorm(&(&got - &x)) < 1e-14);
    }
}
