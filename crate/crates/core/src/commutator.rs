//! Commutators, extraction of the remainder `K` and assumption audits.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::forge::{
    cutoff_weight, matrix_function, AuditFlag, Geometry, Grid, HermitianOperator, PotentialSpec, Role,
    SpectralData,
};
use crate::linalg::{max_abs, solve, spectral_norm, sym_eigen, CMatrix, CVector, IMAG, C64};

/// `[X, iY] = i(XY - YX)`. Tridiagonal pairs go through a banded product.
pub fn commutator(x: &HermitianOperator, y: &HermitianOperator) -> Result<HermitianOperator> {
    if x.dim() != y.dim() {
        return Err(LabError::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    let m = match (x.as_tridiagonal(), y.as_tridiagonal()) {
        (Some(xt), Some(yt)) => banded_commutator(xt, yt),
        _ => {
            let (xd, yd) = (x.dense(), y.dense());
            (xd.dot(&*yd) - yd.dot(&*xd)).mapv(|z| IMAG * z)
        }
    };
    HermitianOperator::from_dense(Role::Generic, m, x.grid_hash())
}

fn tri_entry((diag, upper): (&[f64], &[C64]), j: usize, k: usize) -> C64 {
    if j == k {
        C64::new(diag[j], 0.0)
    } else if k == j + 1 {
        upper[j]
    } else if j == k + 1 {
        upper[k].conj()
    } else {
        C64::new(0.0, 0.0)
    }
}

fn banded_commutator(x: (&[f64], &[C64]), y: (&[f64], &[C64])) -> CMatrix {
    let n = x.0.len();
    let mut out = CMatrix::zeros((n, n));
    for j in 0..n {
        for k in j.saturating_sub(2)..(j + 3).min(n) {
            let mut acc = C64::new(0.0, 0.0);
            for l in j.saturating_sub(1)..(j + 2).min(n) {
                acc += tri_entry(x, j, l) * tri_entry(y, l, k) - tri_entry(y, j, l) * tri_entry(x, l, k);
            }
            out[[j, k]] = IMAG * acc;
        }
    }
    out
}

/// `W = [H, iA]` split as `cH + K_mat`.
#[derive(Debug, Clone)]
pub struct CommutatorDecomposition {
    pub w: HermitianOperator,
    pub c: f64,
    pub k_mat: HermitianOperator,
    pub s: f64,
    /// `|h_s K_mat h_s|_2`
    pub weighted_norm: f64,
    /// `(a, b)` with `|Q psi| <= a |H psi| + b |psi|`
    pub relative_bound: (f64, f64),
    /// `max |cH + K_mat - W|`
    pub reassembly_residual: f64,
}

/// Sandwich `h_s M h_s` with `h_s = <H>^{-s/2}`.
pub fn weighted(m: &CMatrix, spectral: &SpectralData, s: f64) -> Result<CMatrix> {
    if s == 0.0 {
        return Ok(m.clone());
    }
    let hs = matrix_function(spectral, Role::Cutoff, cutoff_weight(s))?;
    let hs = hs.dense();
    Ok(hs.dot(m).dot(&*hs))
}

pub fn extract_k(
    h: &HermitianOperator,
    a: &HermitianOperator,
    c: f64,
    s: f64,
    spectral: Option<&SpectralData>,
) -> Result<CommutatorDecomposition> {
    let w = commutator(h, a)?;
    let hd = h.dense();
    let wd = w.dense();
    let k = &*wd - &hd.mapv(|z| z * c);
    let k_mat = HermitianOperator::from_dense(Role::Remainder, k, h.grid_hash())?;
    let reassembly_residual = max_abs(&(hd.mapv(|z| z * c) + &*k_mat.dense() - &*wd));
    let weighted_norm = if s == 0.0 {
        spectral_norm(&k_mat.dense())?
    } else {
        let spectral = spectral.ok_or_else(|| LabError::InvalidInput("s > 0 needs the spectral data of H".into()))?;
        spectral_norm(&weighted(&k_mat.dense(), spectral, s)?)?
    };
    Ok(CommutatorDecomposition {
        w: w.with_role(Role::Generic),
        c,
        k_mat,
        s,
        weighted_norm,
        relative_bound: (c.abs(), 0.0),
        reassembly_residual,
    })
}

/// The potential part `[V, iA] - cV` of `K_mat` as a tridiagonal operator.
/// Unlike the full `K_mat` it carries no kinetic discretization remainder.
pub fn potential_part(grid: &Grid, potential: &PotentialSpec, c: f64) -> Result<HermitianOperator> {
    let v = potential.values(grid)?;
    let x = &grid.points;
    let h = grid.spacing;
    let diag = v.iter().map(|vj| -c * vj).collect();
    let upper = (0..grid.n.saturating_sub(1))
        .map(|j| C64::new((v[j] - v[j + 1]) * (x[j] + x[j + 1]) / (4.0 * h), 0.0))
        .collect();
    HermitianOperator::tridiagonal(Role::Remainder, diag, upper, Some(grid.hash()))
}

/// Row sums of the potential part of `K_mat`, that is of `[V, iA] - cV`.
/// On interior rows they approximate the local multiplier `-(cV + x V')`.
pub fn potential_part_multiplier(grid: &Grid, potential: &PotentialSpec, c: f64) -> Result<Vec<f64>> {
    let v = potential.values(grid)?;
    let x = &grid.points;
    let h = grid.spacing;
    let n = grid.n;
    // (i(VA - AV))_{j,j+1} = (V_j - V_{j+1}) (x_j + x_{j+1}) / (4h), symmetric in j <-> j+1
    let coupling = |j: usize| (v[j] - v[j + 1]) * (x[j] + x[j + 1]) / (4.0 * h);
    Ok((0..n)
        .map(|j| {
            let mut row = -c * v[j];
            if j + 1 < n {
                row += coupling(j);
            }
            if j > 0 {
                row += coupling(j - 1);
            }
            row
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityRung {
    pub n: usize,
    pub spacing: f64,
    /// Max over interior rows of `|rowsum(K_pot) + (2V + x V')|`.
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub rungs: Vec<FidelityRung>,
    /// `error(h) / error(h/2)` between consecutive rungs.
    pub ratios: Vec<f64>,
}

impl FidelityReport {
    pub fn second_order(&self) -> bool {
        !self.ratios.is_empty() && self.ratios.iter().all(|r| (3.5..=4.5).contains(r))
    }
}

/// Diagonal `2V + x V'` on the grid. `K_mat` carries the opposite sign:
/// `[H, iA] - 2H = -(2V + x V')` in the continuum.
pub fn continuum_k(potential: &PotentialSpec, grid: &Grid) -> Result<HermitianOperator> {
    let v = potential.values(grid)?;
    let dv = potential
        .derivative(grid)?
        .ok_or_else(|| LabError::Unsupported("continuum K needs derivative samples".into()))?;
    let diag = grid.points.iter().zip(v.iter().zip(&dv)).map(|(x, (v, d))| 2.0 * v + x * d).collect();
    Ok(HermitianOperator::diagonal(Role::Remainder, diag, Some(grid.hash())))
}

pub fn fidelity_rung(potential: &PotentialSpec, grid: &Grid) -> Result<FidelityRung> {
    let k = continuum_k(potential, grid)?;
    let (target, _) = k.as_tridiagonal().expect("diagonal storage");
    let rows = potential_part_multiplier(grid, potential, 2.0)?;
    let n = grid.n;
    let max_error = (1..n - 1).map(|j| (rows[j] + target[j]).abs()).fold(0.0_f64, f64::max);
    Ok(FidelityRung { n, spacing: grid.spacing, max_error })
}

/// Refinement ladder over point counts; each `n + 1` should double.
pub fn fidelity_ladder(
    potential: &PotentialSpec,
    geometry: Geometry,
    radius: f64,
    points: &[usize],
) -> Result<FidelityReport> {
    let rungs = points
        .iter()
        .map(|&n| fidelity_rung(potential, &Grid::new(geometry, n, radius)?))
        .collect::<Result<Vec<_>>>()?;
    let ratios = rungs.windows(2).map(|w| w[0].max_error / w[1].max_error).collect();
    Ok(FidelityReport { rungs, ratios })
}

/// `E = |K|^{1/2}`, `F = sign(K) |K|^{1/2}` with `F* E = K`.
#[derive(Debug, Clone)]
pub struct KFactorization {
    pub e: HermitianOperator,
    pub f: HermitianOperator,
    pub clamped: usize,
    /// `max |F* E - K| / max |K|`
    pub relative_residual: f64,
}

pub fn factor_k(k: &HermitianOperator) -> Result<KFactorization> {
    let kd = k.dense();
    let scale = max_abs(&kd);
    let (w, v) = if k.is_real() {
        sym_eigen(&kd.mapv(|z| z.re))?
    } else {
        // real symmetric storage covers every K built here
        return Err(LabError::Unsupported("complex K factorization".into()));
    };
    let floor = 1e-14 * scale;
    let mut clamped = 0;
    let abs_root: Vec<f64> = w
        .iter()
        .map(|l| {
            if l.abs() < floor {
                clamped += 1;
                0.0
            } else {
                l.abs().sqrt()
            }
        })
        .collect();
    let signed: Vec<f64> = w.iter().zip(&abs_root).map(|(l, r)| l.signum() * r).collect();
    let build = |d: &[f64]| {
        let mut scaled = v.clone();
        for (mut col, x) in scaled.columns_mut().into_iter().zip(d) {
            col *= *x;
        }
        scaled.dot(&v.t()).mapv(|x| C64::new(x, 0.0))
    };
    let e = HermitianOperator::from_dense(Role::Weight, build(&abs_root), k.grid_hash())?;
    let f = HermitianOperator::from_dense(Role::Weight, build(&signed), k.grid_hash())?;
    let fe = f.dense().t().mapv(|z| z.conj()).dot(&*e.dense());
    let relative_residual = if scale == 0.0 { 0.0 } else { max_abs(&(fe - &*kd)) / scale };
    Ok(KFactorization { e, f, clamped, relative_residual })
}

/// Window-limited stand-in for "(A_h + i)^{-1} u has square-integrable
/// autocorrelation"; filled in by the smoothness layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbSurrogate {
    pub resolvent_state_norm: f64,
    pub window_l2: f64,
    /// Window integral at `T` over the one at `T/2`; a bound state gives 2.
    pub growth_ratio: f64,
    pub verdict: AuditFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionAudit {
    pub symmetric: bool,
    pub symmetry_defect: f64,
    pub scale: f64,
    pub s: f64,
    pub weighted_norm_k: f64,
    /// `|h_s P [A, K] P h_s|_2`
    pub weighted_norm_k_prime: f64,
    pub factorization_ok: bool,
    pub factorization_residual: f64,
    pub clamped_eigenvalues: usize,
    pub e_norm: f64,
    pub f_norm: f64,
    /// Window smoothness constant of `E`, when measured.
    pub e_smoothness: Option<f64>,
    pub hb: Option<HbSurrogate>,
}

pub fn audit_assumptions(
    decomp: &CommutatorDecomposition,
    a: &HermitianOperator,
    p: Option<&HermitianOperator>,
    spectral: Option<&SpectralData>,
) -> Result<(AssumptionAudit, KFactorization)> {
    let k = &decomp.k_mat;
    let kd = k.dense();
    let scale = max_abs(&kd);
    let symmetry_defect = k.hermiticity_defect();
    let ad = a.dense();
    let mut kp = ad.dot(&*kd) - kd.dot(&*ad);
    if let Some(p) = p {
        let pd = p.dense();
        kp = pd.dot(&kp).dot(&*pd);
    }
    let weighted_norm_k_prime = match spectral {
        Some(sp) => spectral_norm(&weighted(&kp, sp, decomp.s)?)?,
        None if decomp.s == 0.0 => spectral_norm(&kp)?,
        None => return Err(LabError::InvalidInput("s > 0 needs the spectral data of H".into())),
    };
    let fact = factor_k(k)?;
    let e_norm = spectral_norm(&fact.e.dense())?;
    let f_norm = spectral_norm(&fact.f.dense())?;
    let audit = AssumptionAudit {
        symmetric: symmetry_defect <= 1e-12 * scale.max(f64::MIN_POSITIVE),
        symmetry_defect,
        scale,
        s: decomp.s,
        weighted_norm_k: decomp.weighted_norm,
        weighted_norm_k_prime,
        factorization_ok: fact.relative_residual <= 1e-10,
        factorization_residual: fact.relative_residual,
        clamped_eigenvalues: fact.clamped,
        e_norm,
        f_norm,
        e_smoothness: None,
        hb: None,
    };
    Ok((audit, fact))
}

/// `(A_h + i)^{-1} u`
pub fn resolvent_state(a_h: &HermitianOperator, u: &CVector) -> Result<CVector> {
    let mut m = a_h.dense().into_owned();
    for j in 0..m.nrows() {
        m[[j, j]] += IMAG;
    }
    solve(&m, u)
}
