//! `e^{itH}` on states: Chebyshev expansion or eigenbasis synthesis.

use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::forge::{tridiag_apply, Band, Grid, HermitianOperator, SpectralData, Storage};
use crate::linalg::{inner, vnorm, CVector, C64};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Grid amplitudes with a cached norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: CVector,
    norm: f64,
}

impl StateVector {
    pub fn new(amps: CVector) -> Result<Self> {
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LabError::InvalidInput("state has non-finite entries".into()));
        }
        let norm = vnorm(&amps);
        Ok(StateVector { amps, norm })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|x| C64::new(*x, 0.0)).collect())
    }

    pub fn amps(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amps(self) -> CVector {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn scaled(&self, alpha: C64) -> StateVector {
        StateVector { amps: self.amps.mapv(|z| z * alpha), norm: self.norm * alpha.norm() }
    }
}

#[derive(Debug, Clone)]
pub enum Kernel {
    Chebyshev,
    Eigenbasis(Arc<SpectralData>),
}

#[derive(Debug, Clone)]
pub struct PropagationPlan {
    pub kernel: Kernel,
    pub tolerance: f64,
    /// Enclosure `[λ_min, λ_max]` of the spectrum.
    pub bounds: (f64, f64),
}

impl PropagationPlan {
    /// Chebyshev plan with Gershgorin bounds.
    pub fn chebyshev(h: &HermitianOperator, tolerance: f64) -> Self {
        PropagationPlan { kernel: Kernel::Chebyshev, tolerance, bounds: h.gershgorin() }
    }

    pub fn eigenbasis(spectral: Arc<SpectralData>, tolerance: f64) -> Self {
        let bounds = (spectral.lambda_min(), spectral.lambda_max());
        PropagationPlan { kernel: Kernel::Eigenbasis(spectral), tolerance, bounds }
    }

    pub fn kernel_name(&self) -> &'static str {
        match self.kernel {
            Kernel::Chebyshev => "chebyshev",
            Kernel::Eigenbasis(_) => "eigenbasis",
        }
    }

    /// Checks the bounds against known eigenvalues.
    pub fn validate(&self, spectral: &SpectralData) -> Result<()> {
        let slack = 1e-12 * spectral.spectral_radius().max(1.0);
        if spectral.lambda_min() < self.bounds.0 - slack || spectral.lambda_max() > self.bounds.1 + slack {
            return Err(LabError::SpectralBounds(format!(
                "[{}, {}] does not enclose [{}, {}]",
                self.bounds.0,
                self.bounds.1,
                spectral.lambda_min(),
                spectral.lambda_max()
            )));
        }
        Ok(())
    }

    /// Chebyshev degree used for a step of length `t`.
    pub fn degree(&self, t: f64) -> usize {
        let beta = 0.5 * (self.bounds.1 - self.bounds.0);
        bessel_series(t.abs() * beta, self.tolerance).len() - 1
    }
}

/// `J_0(z), ..., J_K(z)` by Miller's backward recurrence, truncated after
/// the last order whose tail still matters at `tol`.
pub fn bessel_series(z: f64, tol: f64) -> Vec<f64> {
    if z == 0.0 {
        return vec![1.0];
    }
    let z = z.abs();
    let start = (z + 10.0 * z.cbrt() + 40.0).ceil() as usize;
    let start = start + start % 2;
    let mut j = vec![0.0_f64; start + 2];
    j[start + 1] = 0.0;
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / z * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let mut norm = j[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * j[k];
    }
    for v in j.iter_mut() {
        *v /= norm;
    }
    // tail: 2 sum_{k > K} |J_k| < tol
    let mut tail = 0.0;
    let mut last = start;
    for k in (0..=start).rev() {
        tail += 2.0 * j[k].abs();
        if tail >= tol / 4.0 {
            last = k;
            break;
        }
    }
    j.truncate(last + 1);
    j
}

fn apply_into(h: &HermitianOperator, v: &[C64], out: &mut [C64]) {
    match h.storage() {
        Storage::Tridiagonal { diag, upper } => tridiag_apply(diag, upper, v, out),
        Storage::Dense(m) => {
            let r = m.dot(&ndarray::ArrayView1::from(v));
            out.copy_from_slice(r.as_slice().unwrap());
        }
    }
}

fn chebyshev_step(h: &HermitianOperator, u: &CVector, t: f64, plan: &PropagationPlan) -> Result<CVector> {
    let (lo, hi) = plan.bounds;
    let alpha = 0.5 * (hi + lo);
    let beta = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
    let z = t * beta;
    let mut coeffs = bessel_series(z, plan.tolerance);
    if z < 0.0 {
        // J_k(-z) = (-1)^k J_k(z)
        for (k, c) in coeffs.iter_mut().enumerate() {
            if k % 2 == 1 {
                *c = -*c;
            }
        }
    }
    let n = u.len();
    let scaled = |v: &[C64], out: &mut [C64]| {
        apply_into(h, v, out);
        for (o, x) in out.iter_mut().zip(v) {
            *o = (*o - x * alpha) / beta;
        }
    };
    let i_pow = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];
    let u0 = u.as_slice().unwrap();
    let mut acc: Vec<C64> = u0.iter().map(|x| x * coeffs[0]).collect();
    if coeffs.len() > 1 {
        let mut prev = u0.to_vec();
        let mut cur = vec![C64::new(0.0, 0.0); n];
        scaled(&prev, &mut cur);
        let mut next = vec![C64::new(0.0, 0.0); n];
        for (k, ck) in coeffs.iter().enumerate().skip(1) {
            if k > 1 {
                scaled(&cur, &mut next);
                for (nx, p) in next.iter_mut().zip(&prev) {
                    *nx = *nx * 2.0 - p;
                }
                std::mem::swap(&mut prev, &mut cur);
                std::mem::swap(&mut cur, &mut next);
            }
            let w = i_pow[k % 4] * (2.0 * ck);
            for (a, c) in acc.iter_mut().zip(&cur) {
                *a += c * w;
            }
        }
    }
    let phase = C64::new(0.0, t * alpha).exp();
    let out: CVector = acc.into_iter().map(|x| x * phase).collect();
    let (n0, n1) = (vnorm(u), vnorm(&out));
    if !n1.is_finite() || (n1 - n0).abs() > 10.0 * plan.tolerance * n0.max(1.0) {
        return Err(LabError::SpectralBounds(format!(
            "Chebyshev series did not preserve the norm ({n0} -> {n1}); bounds [{lo}, {hi}] likely miss the spectrum"
        )));
    }
    Ok(out)
}

fn eigen_step(spectral: &SpectralData, u: &CVector, t: f64) -> CVector {
    spectral.apply_fn(u, |l| C64::new(0.0, t * l).exp())
}

/// `e^{itH} u`. Pass `-t` for `e^{-itH}`.
pub fn propagate(h: &HermitianOperator, u: &StateVector, t: f64, plan: &PropagationPlan) -> Result<StateVector> {
    if u.dim() != h.dim() {
        return Err(LabError::DimensionMismatch { left: h.dim(), right: u.dim() });
    }
    if t == 0.0 {
        return Ok(u.clone());
    }
    let out = match &plan.kernel {
        Kernel::Chebyshev => chebyshev_step(h, u.amps(), t, plan)?,
        Kernel::Eigenbasis(sp) => eigen_step(sp, u.amps(), t),
    };
    StateVector::new(out)
}

#[derive(Debug, Clone)]
pub struct EvolveTrace {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub steps: usize,
    /// Accumulated error bound `steps * tolerance`.
    pub error_bound: f64,
}

/// Calls `visit(index, t, state)` along ascending `times`, stepping from the
/// previous state. Returns the number of nontrivial steps.
pub fn evolve_for_each(
    h: &HermitianOperator,
    u: &StateVector,
    times: &[f64],
    plan: &PropagationPlan,
    mut visit: impl FnMut(usize, f64, &StateVector) -> Result<()>,
) -> Result<usize> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(LabError::UnsortedTimes);
    }
    let mut state = u.clone();
    let mut t_prev = 0.0;
    let mut steps = 0;
    for (i, &t) in times.iter().enumerate() {
        let dt = t - t_prev;
        if dt != 0.0 {
            state = propagate(h, &state, dt, plan)?;
            steps += 1;
        }
        t_prev = t;
        visit(i, t, &state)?;
    }
    Ok(steps)
}

pub fn evolve_trace(h: &HermitianOperator, u: &StateVector, times: &[f64], plan: &PropagationPlan) -> Result<EvolveTrace> {
    let mut states = Vec::with_capacity(times.len());
    let steps = evolve_for_each(h, u, times, plan, |_, _, s| {
        states.push(s.clone());
        Ok(())
    })?;
    Ok(EvolveTrace { times: times.to_vec(), states, steps, error_bound: steps as f64 * plan.tolerance })
}

/// `<u, e^{itH} u>` along ascending `times`. The eigenbasis kernel sums
/// `|c_k|^2 e^{itλ_k}` directly; Chebyshev steps the state.
pub fn autocorrelation(
    h: &HermitianOperator,
    u: &StateVector,
    times: &[f64],
    plan: &PropagationPlan,
) -> Result<Vec<C64>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(LabError::UnsortedTimes);
    }
    match &plan.kernel {
        Kernel::Eigenbasis(sp) => {
            let c = sp.to_eigen(u.amps());
            let weights: Vec<(f64, f64)> =
                sp.eigenvalues().iter().zip(c.iter()).map(|(l, z)| (*l, z.norm_sqr())).collect();
            Ok(times
                .iter()
                .map(|&t| {
                    if t == 0.0 {
                        return C64::new(weights.iter().map(|w| w.1).sum(), 0.0);
                    }
                    weights.iter().map(|(l, w)| C64::new(0.0, t * l).exp() * *w).sum()
                })
                .collect())
        }
        Kernel::Chebyshev => {
            let mut out = Vec::with_capacity(times.len());
            evolve_for_each(h, u, times, plan, |_, t, s| {
                out.push(if t == 0.0 { C64::new(u.norm() * u.norm(), 0.0) } else { inner(u.amps(), s.amps()) });
                Ok(())
            })?;
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionWindow {
    pub t_max: f64,
    pub quantile_radius: f64,
    pub energy_cut: f64,
    pub warning: Option<String>,
}

/// Mass fraction that defines the localization radius.
pub const QUANTILE_MASS: f64 = 0.999;

/// Smallest `r` with `sum_{|x_j| <= r} |u_j|^2 >= 0.999 |u|^2`.
pub fn quantile_radius(grid: &Grid, u: &StateVector) -> f64 {
    let mut pairs: Vec<(f64, f64)> = grid.points.iter().zip(u.amps().iter()).map(|(x, z)| (x.abs(), z.norm_sqr())).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for (r, m) in &pairs {
        acc += m;
        if acc >= QUANTILE_MASS * total {
            return *r;
        }
    }
    pairs.last().map(|p| p.0).unwrap_or(0.0)
}

/// `T_max = (L - r_q) / (2 sqrt(E_cut))`; zero with a warning when the
/// state is not localized in the inner half of the box.
pub fn window_from_radius(radius: f64, quantile_radius: f64, energy_cut: f64) -> ReflectionWindow {
    let mut warning = None;
    let t_max = if quantile_radius > radius / 2.0 {
        let msg = format!("state not localized: quantile radius {quantile_radius} exceeds L/2 = {}", radius / 2.0);
        warn!("{msg}");
        warning = Some(msg);
        0.0
    } else if energy_cut <= 0.0 {
        f64::INFINITY
    } else {
        (radius - quantile_radius) / (2.0 * energy_cut.sqrt())
    };
    ReflectionWindow { t_max, quantile_radius, energy_cut, warning }
}

pub fn reflection_window(grid: &Grid, u: &StateVector, energy_cut: f64) -> ReflectionWindow {
    window_from_radius(grid.radius, quantile_radius(grid, u), energy_cut)
}

/// Relative spectral weight above the cut that is treated as negligible.
pub const ENERGY_TAIL: f64 = 1e-8;

/// Smallest eigenvalue with at most `1e-8 |u|^2` of spectral weight above
/// it, clipped to the band.
pub fn energy_cut(spectral: &SpectralData, u: &StateVector, band: Band) -> f64 {
    let c = spectral.to_eigen(u.amps());
    let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let mut tail = 0.0;
    let mut cut = spectral.lambda_min();
    for (k, l) in spectral.eigenvalues().iter().enumerate().rev() {
        let w = c[k].norm_sqr();
        if tail + w > ENERGY_TAIL * total {
            cut = *l;
            break;
        }
        tail += w;
    }
    cut.min(band.hi).max(band.lo.max(spectral.lambda_min())).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::{assemble_hamiltonian, build_grid, Geometry, PotentialSpec, Role};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn free(n: usize, l: f64) -> (Grid, HermitianOperator) {
        let g = build_grid(Geometry::Line1d, n, l).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::zero(1)).unwrap();
        (g, h)
    }

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
        StateVector::new((0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
            .unwrap()
    }

    #[test]
    fn bessel_values() {
        let j = bessel_series(1.0, 1e-16);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-14);
        let j = bessel_series(30.0, 1e-12);
        assert!((j[0] - (-0.086_367_983_581_040_2)).abs() < 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let (_, h) = free(16, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_state(16, &mut rng);
        let plan = PropagationPlan::chebyshev(&h, DEFAULT_TOLERANCE);
        assert_eq!(propagate(&h, &u, 0.0, &plan).unwrap(), u);
    }

    #[test]
    fn two_level_phases() {
        let h = HermitianOperator::diagonal(Role::Hamiltonian, vec![0.0, std::f64::consts::PI], None);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = StateVector::from_real(&[s, s]).unwrap();
        for plan in [
            PropagationPlan::chebyshev(&h, 1e-12),
            PropagationPlan::eigenbasis(Arc::new(SpectralData::new(&h).unwrap()), 1e-12),
        ] {
            let out = propagate(&h, &u, 1.0, &plan).unwrap();
            assert!((out.amps()[0] - C64::new(s, 0.0)).norm() < 1e-11);
            assert!((out.amps()[1] - C64::new(-s, 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn unitarity_and_reversal() {
        let (_, h) = free(512, 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_state(512, &mut rng);
        let plan = PropagationPlan::chebyshev(&h, DEFAULT_TOLERANCE);
        let v = propagate(&h, &u, 10.0, &plan).unwrap();
        assert!((v.norm() - u.norm()).abs() <= 1e-10 * u.norm());
        let back = propagate(&h, &v, -10.0, &plan).unwrap();
        assert!(vnorm(&(back.amps() - u.amps())) <= 20.0 * DEFAULT_TOLERANCE * u.norm());
    }

    #[test]
    fn degree_budget() {
        let (_, h) = free(256, 10.0);
        let plan = PropagationPlan::chebyshev(&h, DEFAULT_TOLERANCE);
        let width = plan.bounds.1 - plan.bounds.0;
        for t in [0.01, 0.3, 1.0, 5.0, 20.0] {
            let d = plan.degree(t) as f64;
            assert!(d <= 1.5 * (t * width / 2.0) + 40.0, "t = {t}: degree {d}");
        }
    }

    #[test]
    fn bad_bounds_detected() {
        let (_, h) = free(64, 4.0);
        let mut plan = PropagationPlan::chebyshev(&h, DEFAULT_TOLERANCE);
        plan.bounds.1 *= 0.3;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_state(64, &mut rng);
        assert!(matches!(propagate(&h, &u, 3.0, &plan), Err(LabError::SpectralBounds(_))));
        let sp = SpectralData::new(&h).unwrap();
        assert!(plan.validate(&sp).is_err());
    }

    #[test]
    fn trace_and_group_property() {
        let (_, h) = free(128, 8.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_state(128, &mut rng);
        let plan = PropagationPlan::chebyshev(&h, DEFAULT_TOLERANCE);
        let single = evolve_trace(&h, &u, &[0.0], &plan).unwrap();
        assert_eq!(single.states[0], u);
        let one = propagate(&h, &u, 1.3, &plan).unwrap();
        let two = evolve_trace(&h, &u, &[0.65, 1.3], &plan).unwrap();
        assert!(vnorm(&(one.amps() - two.states[1].amps())) <= 10.0 * DEFAULT_TOLERANCE * u.norm());
        let times: Vec<f64> = (1..=100).map(|k| 0.05 * k as f64).collect();
        let tr = evolve_trace(&h, &u, &times, &plan).unwrap();
        assert_eq!(tr.steps, 100);
        let drift = (tr.states.last().unwrap().norm() - u.norm()).abs();
        assert!(drift <= tr.error_bound * u.norm());
        assert!(evolve_trace(&h, &u, &[1.0, 0.5], &plan).is_err());
    }

    #[test]
    fn window_arithmetic() {
        assert_eq!(window_from_radius(100.0, 10.0, 1.0).t_max, 45.0);
        assert_eq!(window_from_radius(100.0, 10.0, 4.0).t_max, 22.5);
        let w = window_from_radius(100.0, 100.0, 1.0);
        assert_eq!(w.t_max, 0.0);
        assert!(w.warning.is_some());
    }
}
