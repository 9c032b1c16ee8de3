use std::sync::OnceLock;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::operator::{HermitianOperator, Role};
use crate::error::{LabError, Result};
use crate::linalg::{herm_eigen, sym_eigen, tridiag_eigen, CMatrix, CVector, RMatrix, C64};

/// Dense spectral paths refuse anything larger.
pub const SPECTRAL_DIM_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub enum EigenBasis {
    Real(RMatrix),
    Complex(CMatrix),
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian operator.
#[derive(Debug)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    basis: EigenBasis,
    source: HermitianOperator,
    residual: OnceLock<f64>,
    orthogonality: OnceLock<f64>,
}

impl SpectralData {
    pub fn new(op: &HermitianOperator) -> Result<Self> {
        let n = op.dim();
        if n > SPECTRAL_DIM_CAP {
            return Err(LabError::DimensionCap { dim: n, cap: SPECTRAL_DIM_CAP });
        }
        let (eigenvalues, basis) = match op.as_tridiagonal() {
            Some((diag, upper)) if op.is_real() => {
                let off: Vec<f64> = upper.iter().map(|z| z.re).collect();
                let (w, v) = tridiag_eigen(diag, &off)?;
                (w, EigenBasis::Real(v))
            }
            _ => {
                let m = op.dense();
                if op.is_real() {
                    let (w, v) = sym_eigen(&m.mapv(|z| z.re))?;
                    (w, EigenBasis::Real(v))
                } else {
                    let (w, v) = herm_eigen(&m)?;
                    (w, EigenBasis::Complex(v))
                }
            }
        };
        Ok(SpectralData {
            eigenvalues,
            basis,
            source: op.clone(),
            residual: OnceLock::new(),
            orthogonality: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn source(&self) -> &HermitianOperator {
        &self.source
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.lambda_min().abs().max(self.lambda_max().abs())
    }

    /// Eigenvector `k` as a column.
    pub fn eigenvector(&self, k: usize) -> CVector {
        match &self.basis {
            EigenBasis::Real(v) => v.column(k).mapv(|x| C64::new(x, 0.0)),
            EigenBasis::Complex(v) => v.column(k).to_owned(),
        }
    }

    /// Coefficients `V* u`.
    pub fn to_eigen(&self, u: &CVector) -> CVector {
        match &self.basis {
            EigenBasis::Real(v) => {
                let (re, im) = split(u);
                let a = v.t().dot(&re);
                let b = v.t().dot(&im);
                join(&a, &b)
            }
            EigenBasis::Complex(v) => v.t().mapv(|z| z.conj()).dot(u),
        }
    }

    /// `V c`.
    pub fn from_eigen(&self, c: &CVector) -> CVector {
        match &self.basis {
            EigenBasis::Real(v) => {
                let (re, im) = split(c);
                join(&v.dot(&re), &v.dot(&im))
            }
            EigenBasis::Complex(v) => v.dot(c),
        }
    }

    /// `V* M V`.
    pub fn to_eigen_matrix(&self, m: &CMatrix) -> CMatrix {
        match &self.basis {
            EigenBasis::Real(v) => {
                let (re, im) = split_m(m);
                let vt = v.t();
                join_m(&vt.dot(&re).dot(v), &vt.dot(&im).dot(v))
            }
            EigenBasis::Complex(v) => {
                let vh = v.t().mapv(|z| z.conj());
                vh.dot(m).dot(v)
            }
        }
    }

    /// `V M V*`.
    pub fn from_eigen_matrix(&self, m: &CMatrix) -> CMatrix {
        match &self.basis {
            EigenBasis::Real(v) => {
                let (re, im) = split_m(m);
                let vt = v.t();
                join_m(&v.dot(&re).dot(&vt), &v.dot(&im).dot(&vt))
            }
            EigenBasis::Complex(v) => {
                let vh = v.t().mapv(|z| z.conj());
                v.dot(m).dot(&vh)
            }
        }
    }

    /// `f(H) u` through the eigenbasis, complex-valued `f` allowed.
    pub fn apply_fn(&self, u: &CVector, f: impl Fn(f64) -> C64) -> CVector {
        let mut c = self.to_eigen(u);
        for (ck, l) in c.iter_mut().zip(&self.eigenvalues) {
            *ck *= f(*l);
        }
        self.from_eigen(&c)
    }

    /// Dense `V f(Λ) V*` for real `f`.
    pub fn dense_real_fn(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let fl: Array1<f64> = self.eigenvalues.iter().map(|l| f(*l)).collect();
        match &self.basis {
            EigenBasis::Real(v) => {
                let scaled = v * &fl.view().insert_axis(Axis(0));
                scaled.dot(&v.t()).mapv(|x| C64::new(x, 0.0))
            }
            EigenBasis::Complex(v) => {
                let flc = fl.mapv(|x| C64::new(x, 0.0));
                let scaled = v * &flc.view().insert_axis(Axis(0));
                scaled.dot(&v.t().mapv(|z| z.conj()))
            }
        }
    }

    /// `max |H V - V Λ|`, computed on first use.
    pub fn residual(&self) -> f64 {
        *self.residual.get_or_init(|| {
            let h = self.source.dense();
            let mut worst = 0.0_f64;
            for k in 0..self.dim() {
                let v = self.eigenvector(k);
                let hv = h.dot(&v);
                for (a, b) in hv.iter().zip(v.iter()) {
                    worst = worst.max((a - b * self.eigenvalues[k]).norm());
                }
            }
            worst
        })
    }

    /// `max |V* V - I|`, computed on first use.
    pub fn orthogonality_defect(&self) -> f64 {
        *self.orthogonality.get_or_init(|| {
            let gram: CMatrix = match &self.basis {
                EigenBasis::Real(v) => v.t().dot(v).mapv(|x| C64::new(x, 0.0)),
                EigenBasis::Complex(v) => v.t().mapv(|z| z.conj()).dot(v),
            };
            let mut worst = 0.0_f64;
            for ((j, k), z) in gram.indexed_iter() {
                let id = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((z - id).norm());
            }
            worst
        })
    }
}

fn split(u: &CVector) -> (Array1<f64>, Array1<f64>) {
    (u.mapv(|z| z.re), u.mapv(|z| z.im))
}

fn join(re: &Array1<f64>, im: &Array1<f64>) -> CVector {
    re.iter().zip(im.iter()).map(|(a, b)| C64::new(*a, *b)).collect()
}

fn split_m(m: &CMatrix) -> (Array2<f64>, Array2<f64>) {
    (m.mapv(|z| z.re), m.mapv(|z| z.im))
}

fn join_m(re: &Array2<f64>, im: &Array2<f64>) -> CMatrix {
    let mut out = CMatrix::zeros(re.raw_dim());
    ndarray::Zip::from(&mut out).and(re).and(im).for_each(|o, a, b| *o = C64::new(*a, *b));
    out
}

/// `f(H)` as a Hermitian operator. Rejects `f` that is not finite at some
/// eigenvalue.
pub fn matrix_function(spectral: &SpectralData, role: Role, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    for &l in spectral.eigenvalues() {
        if !f(l).is_finite() {
            return Err(LabError::NonFiniteFunction { eigenvalue: l });
        }
    }
    let m = spectral.dense_real_fn(f);
    HermitianOperator::from_dense(role, m, spectral.source().grid_hash())
}

/// `h_s(λ) = (1 + λ^2)^{-s/2}`
pub fn cutoff_weight(s: f64) -> impl Fn(f64) -> f64 {
    move |l| (1.0 + l * l).powf(-s / 2.0)
}

/// Energy band `[lo, hi]` used for the projection surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn everything() -> Self {
        Band { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    /// `[1e-3 |H|, λ_max]`
    pub fn default_for(spectral: &SpectralData) -> Self {
        Band { lo: 1e-3 * spectral.spectral_radius(), hi: spectral.lambda_max() }
    }

    pub fn contains(&self, l: f64) -> bool {
        l >= self.lo && l <= self.hi
    }

    pub fn mask(&self, spectral: &SpectralData) -> Vec<bool> {
        spectral.eigenvalues().iter().map(|l| self.contains(*l)).collect()
    }

    pub fn rank(&self, spectral: &SpectralData) -> usize {
        self.mask(spectral).iter().filter(|b| **b).count()
    }

    pub fn is_everything(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    /// Band in the shape used by reports: infinite ends clipped to the spectrum.
    pub fn clipped(&self, spectral: &SpectralData) -> Band {
        Band { lo: self.lo.max(spectral.lambda_min()), hi: self.hi.min(spectral.lambda_max()) }
    }
}

pub fn spectral_projection(spectral: &SpectralData, band: Band) -> Result<HermitianOperator> {
    matrix_function(spectral, Role::Projection, |l| if band.contains(l) { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::grid::{build_grid, Geometry, Grid};
    use crate::forge::operator::assemble_hamiltonian;
    use crate::forge::potential::PotentialSpec;
    use crate::linalg::max_abs;

    fn free4() -> SpectralData {
        let g = Grid::with_min_points(Geometry::Line1d, 4, 2.5, 1).unwrap();
        SpectralData::new(&assemble_hamiltonian(&g, &PotentialSpec::zero(1)).unwrap()).unwrap()
    }

    #[test]
    fn identity_function_recovers_h() {
        let g = build_grid(Geometry::Line1d, 40, 5.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::critical(1.0, 1)).unwrap();
        let s = SpectralData::new(&h).unwrap();
        let back = matrix_function(&s, Role::Generic, |l| l).unwrap();
        let scale = h.max_abs();
        assert!(max_abs(&(back.dense().into_owned() - &*h.dense())) <= 1e-10 * scale);
        assert!(s.residual() <= 1e-10 * s.spectral_radius());
        assert!(s.orthogonality_defect() <= 1e-10);
    }

    #[test]
    fn zero_cutoff_is_identity() {
        let s = free4();
        let id = matrix_function(&s, Role::Cutoff, cutoff_weight(0.0)).unwrap();
        let m = id.dense();
        for j in 0..4 {
            for k in 0..4 {
                let e = if j == k { 1.0 } else { 0.0 };
                assert!((m[[j, k]] - C64::new(e, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn band_projection_rank() {
        let s = free4();
        let p = spectral_projection(&s, Band { lo: 0.5, hi: f64::INFINITY }).unwrap();
        let trace: f64 = (0..4).map(|j| p.dense()[[j, j]].re).sum();
        assert!((trace - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_function_is_rejected() {
        let g = Grid::with_min_points(Geometry::Line1d, 3, 2.0, 1).unwrap();
        let h = HermitianOperator::diagonal(Role::Hamiltonian, vec![0.0, 1.0, 2.0], Some(g.hash()));
        let s = SpectralData::new(&h).unwrap();
        match matrix_function(&s, Role::Generic, |l| l.abs().powf(-0.5)) {
            Err(LabError::NonFiniteFunction { eigenvalue }) => assert_eq!(eigenvalue, 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn complex_basis_round_trip() {
        let g = build_grid(Geometry::Line1d, 10, 2.0).unwrap();
        let a = crate::forge::operator::assemble_dilation(&g);
        let s = SpectralData::new(&a).unwrap();
        assert!(matches!(s.basis(), EigenBasis::Complex(_)));
        let u: CVector = (0..10).map(|j| C64::new(j as f64, -1.0)).collect();
        let back = s.from_eigen(&s.to_eigen(&u));
        assert!(back.iter().zip(u.iter()).all(|(a, b)| (a - b).norm() < 1e-12));
    }
}
