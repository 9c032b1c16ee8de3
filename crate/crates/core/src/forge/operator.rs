use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::potential::PotentialSpec;
use crate::error::{LabError, Result};
use crate::linalg::{hermiticity_defect, max_abs, symmetrize, CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Hamiltonian,
    Conjugate,
    Remainder,
    Projection,
    Cutoff,
    Drift,
    Modified,
    Weight,
    Generic,
}

impl Role {
    pub fn code(self) -> u32 {
        match self {
            Role::Hamiltonian => 0,
            Role::Conjugate => 1,
            Role::Remainder => 2,
            Role::Projection => 3,
            Role::Cutoff => 4,
            Role::Drift => 5,
            Role::Modified => 6,
            Role::Weight => 7,
            Role::Generic => 8,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => Role::Hamiltonian,
            1 => Role::Conjugate,
            2 => Role::Remainder,
            3 => Role::Projection,
            4 => Role::Cutoff,
            5 => Role::Drift,
            6 => Role::Modified,
            7 => Role::Weight,
            8 => Role::Generic,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub enum Storage {
    Dense(CMatrix),
    /// Real diagonal and upper off-diagonal; the lower one is its conjugate.
    Tridiagonal { diag: Vec<f64>, upper: Vec<C64> },
}

/// Hermitian matrix with a role tag. Dense inputs are symmetrized on
/// construction, so the stored matrix is exactly Hermitian.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    role: Role,
    storage: Storage,
    grid_hash: Option<u64>,
}

const PROJECTION_TOL: f64 = 1e-10;

impl HermitianOperator {
    pub fn from_dense(role: Role, mut m: CMatrix, grid_hash: Option<u64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(LabError::DimensionMismatch { left: m.nrows(), right: m.ncols() });
        }
        symmetrize(&mut m);
        if role == Role::Projection {
            let defect = max_abs(&(m.dot(&m) - &m));
            if defect > PROJECTION_TOL {
                return Err(LabError::InvalidInput(format!("projection defect |P^2 - P| = {defect:e}")));
            }
        }
        Ok(HermitianOperator { role, storage: Storage::Dense(m), grid_hash })
    }

    pub fn tridiagonal(role: Role, diag: Vec<f64>, upper: Vec<C64>, grid_hash: Option<u64>) -> Result<Self> {
        if diag.len() != upper.len() + 1 && !(diag.is_empty() && upper.is_empty()) {
            return Err(LabError::DimensionMismatch { left: diag.len(), right: upper.len() + 1 });
        }
        Ok(HermitianOperator { role, storage: Storage::Tridiagonal { diag, upper }, grid_hash })
    }

    pub fn diagonal(role: Role, diag: Vec<f64>, grid_hash: Option<u64>) -> Self {
        let upper = vec![C64::new(0.0, 0.0); diag.len().saturating_sub(1)];
        HermitianOperator { role, storage: Storage::Tridiagonal { diag, upper }, grid_hash }
    }

    pub fn zeros(role: Role, dim: usize, grid_hash: Option<u64>) -> Self {
        Self::diagonal(role, vec![0.0; dim], grid_hash)
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn grid_hash(&self) -> Option<u64> {
        self.grid_hash
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Tridiagonal { diag, .. } => diag.len(),
        }
    }

    pub fn as_tridiagonal(&self) -> Option<(&[f64], &[C64])> {
        match &self.storage {
            Storage::Tridiagonal { diag, upper } => Some((diag, upper)),
            Storage::Dense(_) => None,
        }
    }

    pub fn dense(&self) -> Cow<'_, CMatrix> {
        match &self.storage {
            Storage::Dense(m) => Cow::Borrowed(m),
            Storage::Tridiagonal { diag, upper } => {
                let n = diag.len();
                let mut m = CMatrix::zeros((n, n));
                for j in 0..n {
                    m[[j, j]] = C64::new(diag[j], 0.0);
                }
                for (j, u) in upper.iter().enumerate() {
                    m[[j, j + 1]] = *u;
                    m[[j + 1, j]] = u.conj();
                }
                Cow::Owned(m)
            }
        }
    }

    pub fn into_dense(self) -> CMatrix {
        match self.storage {
            Storage::Dense(m) => m,
            _ => self.dense().into_owned(),
        }
    }

    /// True when every entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        match &self.storage {
            Storage::Dense(m) => m.iter().all(|z| z.im == 0.0),
            Storage::Tridiagonal { upper, .. } => upper.iter().all(|z| z.im == 0.0),
        }
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        let n = self.dim();
        if v.len() != n {
            return Err(LabError::DimensionMismatch { left: n, right: v.len() });
        }
        Ok(match &self.storage {
            Storage::Dense(m) => m.dot(v),
            Storage::Tridiagonal { diag, upper } => {
                let mut out = CVector::zeros(n);
                tridiag_apply(diag, upper, v.as_slice().unwrap(), out.as_slice_mut().unwrap());
                out
            }
        })
    }

    pub fn hermiticity_defect(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => hermiticity_defect(m),
            Storage::Tridiagonal { .. } => 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => max_abs(m),
            Storage::Tridiagonal { diag, upper } => {
                let d = diag.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
                upper.iter().fold(d, |a, z| a.max(z.norm()))
            }
        }
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        match &self.storage {
            Storage::Dense(m) => {
                for j in 0..n {
                    let radius: f64 = (0..n).filter(|&k| k != j).map(|k| m[[j, k]].norm()).sum();
                    lo = lo.min(m[[j, j]].re - radius);
                    hi = hi.max(m[[j, j]].re + radius);
                }
            }
            Storage::Tridiagonal { diag, upper } => {
                for j in 0..n {
                    let mut radius = 0.0;
                    if j > 0 {
                        radius += upper[j - 1].norm();
                    }
                    if j + 1 < n {
                        radius += upper[j].norm();
                    }
                    lo = lo.min(diag[j] - radius);
                    hi = hi.max(diag[j] + radius);
                }
            }
        }
        (lo, hi)
    }

    /// `self + alpha * other`, staying tridiagonal when both are.
    pub fn add_scaled(&self, alpha: f64, other: &HermitianOperator, role: Role) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(LabError::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        if let (Some((d1, u1)), Some((d2, u2))) = (self.as_tridiagonal(), other.as_tridiagonal()) {
            let diag = d1.iter().zip(d2).map(|(a, b)| a + alpha * b).collect();
            let upper = u1.iter().zip(u2).map(|(a, b)| a + b * alpha).collect();
            return Self::tridiagonal(role, diag, upper, self.grid_hash);
        }
        let m = self.dense().into_owned() + &other.dense().mapv(|z| z * alpha);
        Self::from_dense(role, m, self.grid_hash)
    }
}

pub(crate) fn tridiag_apply(diag: &[f64], upper: &[C64], v: &[C64], out: &mut [C64]) {
    let n = diag.len();
    for j in 0..n {
        let mut acc = v[j] * diag[j];
        if j + 1 < n {
            acc += upper[j] * v[j + 1];
        }
        if j > 0 {
            acc += upper[j - 1].conj() * v[j - 1];
        }
        out[j] = acc;
    }
}

/// `H = -d^2/dx^2 + V` with the three-point stencil and Dirichlet ends.
/// In the radial geometry this is the reduced operator acting on `w = r u`.
pub fn assemble_hamiltonian(grid: &Grid, potential: &PotentialSpec) -> Result<HermitianOperator> {
    let v = potential.values(grid)?;
    let inv_h2 = 1.0 / (grid.spacing * grid.spacing);
    let diag = v.iter().map(|v| 2.0 * inv_h2 + v).collect();
    let upper = vec![C64::new(-inv_h2, 0.0); grid.n - 1];
    HermitianOperator::tridiagonal(Role::Hamiltonian, diag, upper, Some(grid.hash()))
}

/// `A = -(i/2)(X D + D X)` with `D` the centered difference.
pub fn assemble_dilation(grid: &Grid) -> HermitianOperator {
    let x = &grid.points;
    let h = grid.spacing;
    let upper = (0..grid.n - 1).map(|j| C64::new(0.0, -(x[j] + x[j + 1]) / (4.0 * h))).collect();
    HermitianOperator::tridiagonal(Role::Conjugate, vec![0.0; grid.n], upper, Some(grid.hash()))
        .expect("sizes agree by construction")
}

/// Diagonal multiplication operator, e.g. a position weight.
pub fn multiplication(grid: &Grid, role: Role, f: impl Fn(f64) -> f64) -> HermitianOperator {
    HermitianOperator::diagonal(role, grid.points.iter().map(|&x| f(x)).collect(), Some(grid.hash()))
}
