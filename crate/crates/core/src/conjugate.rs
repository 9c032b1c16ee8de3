//! The drift `B_h`, the modified conjugate operator `Ã = A_h + B_h` and
//! matrix-level checks of the commutator identities they satisfy.
//!
//! Sign convention: `U_T = -∫_0^T e^{-isH} P K_h P e^{isH} ds`, so that
//! `[H, iU_T] = e^{-iTH} M e^{iTH} - M` with `M = P K_h P`. In the
//! eigenbasis of `H` this reads `Ũ_jk = -M̃_jk Φ_T(λ_k - λ_j)` with
//! `Φ_T(ω) = (e^{iTω} - 1)/(iω)` and `Φ_T(0) = T`.

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::forge::{cutoff_weight, matrix_function, Band, HermitianOperator, Role, SpectralData};
use crate::linalg::{max_abs, spectral_norm, CMatrix, IMAG, C64};

const SMALL_OMEGA: f64 = 1e-13;

/// `(e^{iTω} - 1)/(iω)`, continuous at `ω = 0`.
pub fn phi(t: f64, omega: f64) -> C64 {
    if omega.abs() < SMALL_OMEGA {
        return C64::new(t, 0.0);
    }
    (C64::new(0.0, t * omega).exp() - 1.0) / C64::new(0.0, omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildMethod {
    EigenbasisClosedForm,
    Quadrature,
}

/// Parameters shared by every object derived from one `(H, K, P, s)` setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftParams {
    pub s: f64,
    pub band: Band,
    pub t_b: f64,
    pub grid_hash: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyPoint {
    pub t_lo: f64,
    pub t_hi: f64,
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub struct BhBuildTrace {
    pub params: DriftParams,
    pub method: BuildMethod,
    pub u_t: HermitianOperator,
    /// `Ũ` in the eigenbasis of `H`.
    pub u_eigen: CMatrix,
    /// `M̃ = V* P K_h P V`.
    pub m_eigen: CMatrix,
    /// `|U_{T_{k+1}} - U_{T_k}|_2` at `T/8, T/4, T/2, T`.
    pub cauchy: Vec<CauchyPoint>,
    /// `max |V* U V - Ũ|` after the round trip through the grid basis.
    pub closed_form_residual: f64,
}

impl BhBuildTrace {
    pub fn cauchy_non_increasing(&self) -> bool {
        self.cauchy.windows(2).all(|w| w[1].norm <= w[0].norm * (1.0 + 1e-12) + 1e-15)
    }
}

/// `h_s(λ_j) h_s(λ_k) 1_P(λ_j) 1_P(λ_k) (V* K V)_jk`
pub fn projected_remainder_eigen(spectral: &SpectralData, k: &HermitianOperator, band: Band, s: f64) -> CMatrix {
    let mut m = spectral.to_eigen_matrix(&k.dense());
    let hs = cutoff_weight(s);
    let w: Vec<f64> =
        spectral.eigenvalues().iter().map(|l| if band.contains(*l) { hs(*l) } else { 0.0 }).collect();
    for ((j, kk), z) in m.indexed_iter_mut() {
        *z *= w[j] * w[kk];
    }
    m
}

fn ut_eigen(spectral: &SpectralData, m: &CMatrix, t: f64) -> CMatrix {
    let l = spectral.eigenvalues();
    let mut u = m.clone();
    for ((j, k), z) in u.indexed_iter_mut() {
        *z = -*z * phi(t, l[k] - l[j]);
    }
    u
}

fn herm_norm(m: &CMatrix) -> Result<f64> {
    spectral_norm(m)
}

pub fn build_ut(spectral: &SpectralData, k: &HermitianOperator, band: Band, s: f64, t: f64) -> Result<BhBuildTrace> {
    if spectral.dim() != k.dim() {
        return Err(LabError::DimensionMismatch { left: spectral.dim(), right: k.dim() });
    }
    if t < 0.0 {
        return Err(LabError::InvalidInput(format!("truncation time must be nonnegative, got {t}")));
    }
    let m_eigen = projected_remainder_eigen(spectral, k, band, s);
    let u_eigen = ut_eigen(spectral, &m_eigen, t);
    let checkpoints = [t / 8.0, t / 4.0, t / 2.0, t];
    let mut cauchy = Vec::new();
    let mut prev = ut_eigen(spectral, &m_eigen, checkpoints[0]);
    for w in checkpoints.windows(2) {
        let next = if w[1] == t { u_eigen.clone() } else { ut_eigen(spectral, &m_eigen, w[1]) };
        cauchy.push(CauchyPoint { t_lo: w[0], t_hi: w[1], norm: herm_norm(&(&next - &prev))? });
        prev = next;
    }
    let u_t = HermitianOperator::from_dense(Role::Drift, spectral.from_eigen_matrix(&u_eigen), k.grid_hash())?;
    let closed_form_residual = max_abs(&(spectral.to_eigen_matrix(&u_t.dense()) - &u_eigen));
    Ok(BhBuildTrace {
        params: DriftParams { s, band, t_b: t, grid_hash: k.grid_hash() },
        method: BuildMethod::EigenbasisClosedForm,
        u_t,
        u_eigen,
        m_eigen,
        cauchy,
        closed_form_residual,
    })
}

/// Dense `e^{itH}` from the spectral data.
pub fn exp_ith(spectral: &SpectralData, t: f64) -> CMatrix {
    let l = spectral.eigenvalues();
    let mut d = CMatrix::zeros((l.len(), l.len()));
    for (j, lj) in l.iter().enumerate() {
        d[[j, j]] = C64::new(0.0, t * lj).exp();
    }
    spectral.from_eigen_matrix(&d)
}

/// `U_T` by Gauss-Legendre quadrature of the time integral in the grid
/// basis. Independent of the closed-form filter; meant as an oracle.
pub fn build_ut_quadrature(
    spectral: &SpectralData,
    k: &HermitianOperator,
    band: Band,
    s: f64,
    t: f64,
    nodes: usize,
) -> Result<HermitianOperator> {
    let rule = GaussLegendre::new(nodes).map_err(|e| LabError::InvalidInput(e.to_string()))?;
    let hs = matrix_function(spectral, Role::Cutoff, cutoff_weight(s))?;
    let p = matrix_function(spectral, Role::Projection, |l| if band.contains(l) { 1.0 } else { 0.0 })?;
    let (hs, p) = (hs.dense(), p.dense());
    let m = p.dot(&hs.dot(&*k.dense()).dot(&*hs)).dot(&*p);
    let mut acc = CMatrix::zeros(m.raw_dim());
    for (x, w) in rule.as_node_weight_pairs() {
        let sn = 0.5 * t * (x + 1.0);
        let e = exp_ith(spectral, sn);
        let e_inv = e.t().mapv(|z| z.conj());
        acc = acc + e_inv.dot(&m).dot(&e).mapv(|z| z * (0.5 * t * w));
    }
    HermitianOperator::from_dense(Role::Drift, acc.mapv(|z| -z), k.grid_hash())
}

#[derive(Debug, Clone)]
pub struct ConjugateOperator {
    pub a_h: HermitianOperator,
    pub b_h: HermitianOperator,
    pub a_tilde: HermitianOperator,
    pub params: DriftParams,
    pub b_norm: f64,
    pub cauchy_non_increasing: bool,
}

fn check_params(a: &DriftParams, s: f64, grid_hash: Option<u64>) -> Result<()> {
    if a.s != s {
        return Err(LabError::MismatchedParameters(format!("drift built with s = {}, requested s = {s}", a.s)));
    }
    if a.grid_hash.is_some() && grid_hash.is_some() && a.grid_hash != grid_hash {
        return Err(LabError::MismatchedParameters("operators come from different grids".into()));
    }
    Ok(())
}

/// `A_h = h_s A h_s`, `Ã = A_h + B_h` with `B_h = U_{T_B}`.
pub fn build_conjugate(
    a: &HermitianOperator,
    trace: &BhBuildTrace,
    spectral: &SpectralData,
    s: f64,
) -> Result<ConjugateOperator> {
    check_params(&trace.params, s, a.grid_hash())?;
    let a_h = if s == 0.0 {
        HermitianOperator::from_dense(Role::Conjugate, a.dense().into_owned(), a.grid_hash())?
    } else {
        let hs = matrix_function(spectral, Role::Cutoff, cutoff_weight(s))?;
        let hs = hs.dense();
        HermitianOperator::from_dense(Role::Conjugate, hs.dot(&*a.dense()).dot(&*hs), a.grid_hash())?
    };
    let b_h = trace.u_t.clone();
    let a_tilde = HermitianOperator::from_dense(Role::Modified, a_h.dense().into_owned() + &*b_h.dense(), a.grid_hash())?;
    let b_norm = spectral_norm(&b_h.dense())?;
    Ok(ConjugateOperator {
        a_h,
        b_h,
        a_tilde,
        params: trace.params,
        b_norm,
        cauchy_non_increasing: trace.cauchy_non_increasing(),
    })
}

/// Everything the residual checks need from one setup.
pub struct IdentityContext<'a> {
    pub spectral: &'a SpectralData,
    /// `K_mat` of the discretization, `[H, iA] - cH`.
    pub k_true: &'a HermitianOperator,
    pub c: f64,
}

impl IdentityContext<'_> {
    fn weighted_true(&self, s: f64, band: Band) -> CMatrix {
        projected_remainder_eigen(self.spectral, self.k_true, band, s)
    }

    fn hh_p_eigen(&self, s: f64, band: Band) -> Vec<f64> {
        let hs = cutoff_weight(s);
        self.spectral
            .eigenvalues()
            .iter()
            .map(|l| if band.contains(*l) { l * hs(*l) * hs(*l) } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub t_b: f64,
    pub k_h_norm: f64,
    /// `|P[H,iU]P - P(e^{-iTH} K_h e^{iTH} - K_h)P|_2`
    pub exact_residual: f64,
    pub exact_holds: bool,
    /// `|P[H,iÃ]P - cH_h P - P e^{-iTH} K_h e^{iTH} P|_2`
    pub generator_residual: f64,
    /// `|P e^{-iTH} K_h e^{iTH} P|_2`, which the infinite-time limit removes.
    pub paper_limit_residual: f64,
}

pub fn verify_generator_identity(
    ctx: &IdentityContext,
    conj: &ConjugateOperator,
    trace: &BhBuildTrace,
) -> Result<GeneratorReport> {
    let params = conj.params;
    check_params(&trace.params, params.s, ctx.k_true.grid_hash())?;
    if trace.params != params {
        return Err(LabError::MismatchedParameters("drift trace and conjugate operator disagree".into()));
    }
    let sp = ctx.spectral;
    let (s, band, t) = (params.s, params.band, params.t_b);
    let hs = matrix_function(sp, Role::Cutoff, cutoff_weight(s))?;
    let p = matrix_function(sp, Role::Projection, |l| if band.contains(l) { 1.0 } else { 0.0 })?;
    let (hs, p) = (hs.dense(), p.dense());
    let h = sp.source().dense();
    let k_h = hs.dot(&*ctx.k_true.dense()).dot(&*hs);
    let k_h_norm = spectral_norm(&k_h)?;
    let e = exp_ith(sp, t);
    let e_inv = e.t().mapv(|z| z.conj());
    let moved = e_inv.dot(&k_h).dot(&e);
    let icomm = |x: &CMatrix, y: &CMatrix| (x.dot(y) - y.dot(x)).mapv(|z| IMAG * z);
    let sandwich = |x: &CMatrix| p.dot(x).dot(&*p);

    let lhs = sandwich(&icomm(&h, &conj.b_h.dense()));
    let rhs = sandwich(&(&moved - &k_h));
    let exact_residual = spectral_norm(&(lhs - rhs))?;

    let h_h = hs.dot(&*h).dot(&*hs);
    let gen = sandwich(&icomm(&h, &conj.a_tilde.dense())) - h_h.dot(&*p).mapv(|z| z * ctx.c) - sandwich(&moved);
    let generator_residual = spectral_norm(&gen)?;
    let paper_limit_residual = spectral_norm(&sandwich(&moved))?;
    Ok(GeneratorReport {
        t_b: t,
        k_h_norm,
        exact_residual,
        exact_holds: exact_residual <= 1e-10 * k_h_norm.max(f64::MIN_POSITIVE),
        generator_residual,
        paper_limit_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub t: f64,
    pub h_h_norm: f64,
    /// `|Δ(t)|_2` with `Δ(t) = P[e^{itH}, Ã]P - t c H_h P e^{itH}`.
    pub delta_norm: f64,
    /// `|C(t)|_2`, the exact finite-dimensional correction.
    pub predicted_norm: f64,
    /// `|Δ(t) - C(t)|_2`
    pub exact_form_residual: f64,
    /// `|Δ| <= |C| + 1e-9 |H_h|`
    pub bound_holds: bool,
    /// `|Δ| <= 1e-9 |H_h|`, the identity with no correction at all.
    pub uncorrected_holds: bool,
}

/// Group commutator check. The correction `C(t) = ∫_0^t e^{i(t-s)H} R e^{isH} ds`
/// uses `R = P K_h P - M_used + e^{-iT_B H} M_used e^{iT_B H}` where `M_used`
/// is whatever remainder went into `B_h` (zero when it was forced to vanish).
pub fn verify_group_commutator(ctx: &IdentityContext, conj: &ConjugateOperator, trace: &BhBuildTrace, t: f64) -> Result<GroupReport> {
    let params = conj.params;
    if trace.params != params {
        return Err(LabError::MismatchedParameters("drift trace and conjugate operator disagree".into()));
    }
    let sp = ctx.spectral;
    let (s, band, t_b) = (params.s, params.band, params.t_b);
    let l = sp.eigenvalues();
    let n = l.len();

    let hh = ctx.hh_p_eigen(s, band);
    let h_h_norm = {
        let hs = cutoff_weight(s);
        l.iter().map(|x| (x * hs(*x) * hs(*x)).abs()).fold(0.0, f64::max)
    };

    // grid-basis Δ(t)
    let p = matrix_function(sp, Role::Projection, |x| if band.contains(x) { 1.0 } else { 0.0 })?;
    let p = p.dense();
    let e = exp_ith(sp, t);
    let at = conj.a_tilde.dense();
    let comm = e.dot(&*at) - at.dot(&e);
    let mut hhpe = CMatrix::zeros((n, n));
    for j in 0..n {
        hhpe[[j, j]] = C64::new(0.0, t * l[j]).exp() * (hh[j] * t * ctx.c);
    }
    let delta = p.dot(&comm).dot(&*p) - sp.from_eigen_matrix(&hhpe);
    let delta_norm = spectral_norm(&delta)?;

    // eigenbasis C(t)
    let m_true = ctx.weighted_true(s, band);
    let mut c = CMatrix::zeros((n, n));
    for j in 0..n {
        for k in 0..n {
            let omega = l[k] - l[j];
            let moved = trace.m_eigen[[j, k]] * C64::new(0.0, t_b * omega).exp();
            let r = m_true[[j, k]] - trace.m_eigen[[j, k]] + moved;
            c[[j, k]] = r * C64::new(0.0, t * l[j]).exp() * phi(t, omega);
        }
    }
    let predicted_norm = spectral_norm(&c)?;
    let exact_form_residual = spectral_norm(&(delta - sp.from_eigen_matrix(&c)))?;
    let tol = 1e-9 * h_h_norm;
    Ok(GroupReport {
        t,
        h_h_norm,
        delta_norm,
        predicted_norm,
        exact_form_residual,
        bound_holds: delta_norm <= predicted_norm + tol,
        uncorrected_holds: delta_norm <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbReport {
    /// `|[Ã, B_h]|_2`
    pub commutator_norm: f64,
    /// `max |[Ã, B_h] + [B_h, Ã]|`
    pub antisymmetry_residual: f64,
}

pub fn verify_ab_boundedness(conj: &ConjugateOperator) -> Result<AbReport> {
    let a = conj.a_tilde.dense();
    let b = conj.b_h.dense();
    let ab = a.dot(&*b) - b.dot(&*a);
    let ba = b.dot(&*a) - a.dot(&*b);
    Ok(AbReport { commutator_norm: spectral_norm(&ab)?, antisymmetry_residual: max_abs(&(&ab + &ba)) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTrend {
    pub points: Vec<(usize, f64)>,
    /// Norm on the finest grid over the one before it.
    pub last_ratio: f64,
    pub stabilized: bool,
}

/// `[Ã, B_h]` norms along a refinement ladder; stable when the two finest
/// differ by at most 20%.
pub fn ab_refinement_trend(points: Vec<(usize, f64)>) -> RefinementTrend {
    let last_ratio = match points.len() {
        0 | 1 => f64::NAN,
        m => points[m - 1].1 / points[m - 2].1,
    };
    RefinementTrend { stabilized: (0.8..=1.2).contains(&last_ratio), last_ratio, points }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TbChoice {
    pub t_b: f64,
    pub capped: bool,
    /// `(T, |P e^{-iTH} K_h e^{iTH} P|_2 / |K_h|_2)` along the doubling search.
    pub history: Vec<(f64, f64)>,
}

/// Doubling search for the first `T` where the moved remainder falls to 10%
/// of `|K_h|`, capped at `cap`. Conjugation by a unitary preserves the norm,
/// so on a finite matrix the search typically ends at the cap.
pub fn choose_tb(spectral: &SpectralData, k: &HermitianOperator, band: Band, s: f64, start: f64, cap: f64) -> Result<TbChoice> {
    let m = projected_remainder_eigen(spectral, k, band, s);
    let hs = matrix_function(spectral, Role::Cutoff, cutoff_weight(s))?;
    let hs = hs.dense();
    let k_h_norm = spectral_norm(&hs.dot(&*k.dense()).dot(&*hs))?;
    let l = spectral.eigenvalues();
    let mut history = Vec::new();
    let mut t = start.max(f64::MIN_POSITIVE);
    loop {
        let t_eval = t.min(cap);
        let mut moved = m.clone();
        for ((j, kk), z) in moved.indexed_iter_mut() {
            *z *= C64::new(0.0, t_eval * (l[kk] - l[j])).exp();
        }
        let ratio = if k_h_norm == 0.0 { 0.0 } else { spectral_norm(&moved)? / k_h_norm };
        history.push((t_eval, ratio));
        if ratio <= 0.1 {
            return Ok(TbChoice { t_b: t_eval, capped: false, history });
        }
        if t_eval >= cap {
            return Ok(TbChoice { t_b: cap, capped: true, history });
        }
        t *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutator::extract_k;
    use crate::forge::{assemble_dilation, assemble_hamiltonian, build_grid, Geometry, PotentialSpec};
    use ndarray::array;
    use std::f64::consts::PI;

    #[test]
    fn two_level_closed_form() {
        let h = HermitianOperator::diagonal(Role::Hamiltonian, vec![0.0, PI], None);
        let sp = SpectralData::new(&h).unwrap();
        let k = HermitianOperator::from_dense(
            Role::Remainder,
            array![[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]],
            None,
        )
        .unwrap();
        let tr = build_ut(&sp, &k, Band::everything(), 0.0, 1.0).unwrap();
        let u = tr.u_t.dense();
        // (e^{iπ} - 1)/(iπ) = 2i/π, carried with the minus sign of U_T
        assert!((u[[0, 1]] - C64::new(0.0, -2.0 / PI)).norm() < 1e-15);
        assert!((u[[1, 0]] - C64::new(0.0, 2.0 / PI)).norm() < 1e-15);
        assert_eq!(tr.u_t.hermiticity_defect(), 0.0);
    }

    #[test]
    fn zero_remainder_gives_zero_drift() {
        let g = build_grid(Geometry::Line1d, 16, 3.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::zero(1)).unwrap();
        let sp = SpectralData::new(&h).unwrap();
        let k = HermitianOperator::zeros(Role::Remainder, 16, Some(g.hash()));
        let tr = build_ut(&sp, &k, Band::everything(), 0.5, 3.0).unwrap();
        assert_eq!(max_abs(&tr.u_t.dense()), 0.0);
        let a = assemble_dilation(&g);
        let c = build_conjugate(&a, &tr, &sp, 0.5).unwrap();
        assert_eq!(*c.a_tilde.dense(), *c.a_h.dense());
        assert_eq!(verify_ab_boundedness(&c).unwrap().commutator_norm, 0.0);
        assert!(build_conjugate(&a, &tr, &sp, 0.0).is_err());
    }

    #[test]
    fn eigen_diagonal_is_t_times_m() {
        let g = build_grid(Geometry::Line1d, 12, 2.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::critical(1.0, 1)).unwrap();
        let a = assemble_dilation(&g);
        let sp = SpectralData::new(&h).unwrap();
        let d = extract_k(&h, &a, 2.0, 0.0, None).unwrap();
        let tr = build_ut(&sp, &d.k_mat, Band::everything(), 0.0, 2.5).unwrap();
        for j in 0..12 {
            assert!((tr.u_eigen[[j, j]] + tr.m_eigen[[j, j]] * 2.5).norm() < 1e-13);
        }
        let scale = max_abs(&tr.u_t.dense());
        assert!(tr.closed_form_residual <= 1e-13 * scale);
    }

    #[test]
    fn s_zero_keeps_a() {
        let g = build_grid(Geometry::Line1d, 10, 2.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::zero(1)).unwrap();
        let a = assemble_dilation(&g);
        let sp = SpectralData::new(&h).unwrap();
        let d = extract_k(&h, &a, 2.0, 0.0, None).unwrap();
        let tr = build_ut(&sp, &d.k_mat, Band::everything(), 0.0, 1.0).unwrap();
        let c = build_conjugate(&a, &tr, &sp, 0.0).unwrap();
        assert_eq!(*c.a_h.dense(), *a.dense());
        assert!(c.a_tilde.hermiticity_defect() <= 1e-12 * c.a_tilde.max_abs());
        let ab = verify_ab_boundedness(&c).unwrap();
        assert_eq!(ab.antisymmetry_residual, 0.0);
    }

    #[test]
    fn zero_truncation_time() {
        let g = build_grid(Geometry::Line1d, 10, 2.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::critical(1.0, 1)).unwrap();
        let a = assemble_dilation(&g);
        let sp = SpectralData::new(&h).unwrap();
        let d = extract_k(&h, &a, 2.0, 0.0, None).unwrap();
        let tr = build_ut(&sp, &d.k_mat, Band::everything(), 0.0, 0.0).unwrap();
        assert_eq!(max_abs(&tr.u_t.dense()), 0.0);
        let c = build_conjugate(&a, &tr, &sp, 0.0).unwrap();
        let ctx = IdentityContext { spectral: &sp, k_true: &d.k_mat, c: 2.0 };
        let r = verify_generator_identity(&ctx, &c, &tr).unwrap();
        assert!(r.exact_residual < 1e-12 * r.k_h_norm);
    }

    #[test]
    fn group_commutator_zero_time() {
        let g = build_grid(Geometry::Line1d, 10, 2.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::critical(1.0, 1)).unwrap();
        let a = assemble_dilation(&g);
        let sp = SpectralData::new(&h).unwrap();
        let d = extract_k(&h, &a, 2.0, 0.0, None).unwrap();
        let tr = build_ut(&sp, &d.k_mat, Band::everything(), 0.0, 4.0).unwrap();
        let c = build_conjugate(&a, &tr, &sp, 0.0).unwrap();
        let ctx = IdentityContext { spectral: &sp, k_true: &d.k_mat, c: 2.0 };
        let r = verify_group_commutator(&ctx, &c, &tr, 0.0).unwrap();
        assert!(r.delta_norm <= 1e-12 * r.h_h_norm);
    }

    #[test]
    fn phi_limits() {
        assert_eq!(phi(3.0, 0.0), C64::new(3.0, 0.0));
        let small = phi(3.0, 1e-9);
        assert!((small - C64::new(3.0, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn tb_search_reports_cap() {
        let g = build_grid(Geometry::Line1d, 16, 3.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::critical(1.0, 1)).unwrap();
        let a = assemble_dilation(&g);
        let sp = SpectralData::new(&h).unwrap();
        let d = extract_k(&h, &a, 2.0, 0.0, None).unwrap();
        let choice = choose_tb(&sp, &d.k_mat, Band::everything(), 0.0, 1.0, 16.0).unwrap();
        assert!(choice.capped);
        assert_eq!(choice.t_b, 16.0);
        assert_eq!(choice.history.len(), 5);
    }

    #[test]
    fn refinement_trend_rule() {
        assert!(ab_refinement_trend(vec![(256, 1.0), (512, 1.1), (1024, 1.15)]).stabilized);
        assert!(!ab_refinement_trend(vec![(256, 1.0), (512, 2.0), (1024, 4.0)]).stabilized);
    }
}
