//! Window-limited smoothing integrals `∫_0^T |E e^{-itH} P ψ|^2 dt` and
//! autocorrelation energies `∫_{-T}^{T} |ψ_u(t)|^2 dt`.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commutator::{resolvent_state, HbSurrogate};
use crate::error::{LabError, Result};
use crate::forge::{AuditFlag, Band, Geometry, Grid, HermitianOperator, SpectralData};
use crate::linalg::{vnorm, CVector, C64};
use crate::propagator::{autocorrelation, propagate, PropagationPlan, StateVector};

/// Largest admissible ratio `I(T)/I(T/2)` for a stabilized sample.
pub const STABILIZATION_LIMIT: f64 = 1.05;

#[derive(Debug, Clone)]
pub enum Weight {
    /// Multiplication by the given samples.
    Diagonal { name: String, values: Vec<f64> },
    Operator { name: String, op: HermitianOperator },
}

impl Weight {
    pub fn name(&self) -> &str {
        match self {
            Weight::Diagonal { name, .. } | Weight::Operator { name, .. } => name,
        }
    }

    /// `|x|^{-1}`; in the radial reduction this acts on `w = r u` as `1/r`.
    pub fn inverse_radius(grid: &Grid) -> Self {
        Weight::Diagonal { name: "|x|^-1".into(), values: grid.points.iter().map(|x| 1.0 / x.abs()).collect() }
    }

    /// `<x>^{-p}`
    pub fn japanese(grid: &Grid, p: f64) -> Self {
        Weight::Diagonal {
            name: format!("<x>^-{p}"),
            values: grid.points.iter().map(|x| (1.0 + x * x).powf(-p / 2.0)).collect(),
        }
    }

    fn norm_sq(&self, v: &CVector) -> Result<f64> {
        Ok(match self {
            Weight::Diagonal { values, .. } => v.iter().zip(values).map(|(z, w)| z.norm_sqr() * w * w).sum(),
            Weight::Operator { op, .. } => {
                let y = op.apply(v)?;
                y.iter().map(|z| z.norm_sqr()).sum()
            }
        })
    }
}

/// `P` realized through the spectral data of `H`.
#[derive(Clone, Copy)]
pub struct BandProjector<'a> {
    pub spectral: &'a SpectralData,
    pub band: Band,
}

impl BandProjector<'_> {
    pub fn apply(&self, u: &CVector) -> CVector {
        let band = self.band;
        self.spectral.apply_fn(u, |l| C64::new(if band.contains(l) { 1.0 } else { 0.0 }, 0.0))
    }

    /// `| |H|^{s/2} P u |^2`
    pub fn sobolev_norm_sq(&self, u: &CVector, s: f64) -> f64 {
        let c = self.spectral.to_eigen(u);
        self.spectral
            .eigenvalues()
            .iter()
            .zip(c.iter())
            .filter(|(l, _)| self.band.contains(**l))
            .map(|(l, z)| l.abs().powf(s) * z.norm_sqr())
            .sum()
    }
}

/// Step for the cumulative integral: `π / (4 λ_top)`.
pub fn phase_step(lambda_top: f64) -> f64 {
    std::f64::consts::PI / (4.0 * lambda_top.max(1e-12))
}

/// Uniform grid on `[0, t_end]` with an even number of steps no longer than `dt_max`.
pub fn time_grid(t_end: f64, dt_max: f64) -> Vec<f64> {
    if t_end <= 0.0 {
        return vec![0.0];
    }
    let mut steps = (t_end / dt_max).ceil().max(2.0) as usize;
    steps += steps % 2;
    let dt = t_end / steps as f64;
    (0..=steps).map(|k| k as f64 * dt).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub weight: String,
    pub times: Vec<f64>,
    pub integrand: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub dt: f64,
    /// Normalization `|P ψ|^2_{Ḣ^s}` used for the constant.
    pub normalization: f64,
    /// `I(T) / normalization`
    pub constant: f64,
    /// `I(T) / I(T/2)`
    pub stabilization_ratio: f64,
    pub stabilizing: bool,
    pub truncated: bool,
}

impl SmoothnessReport {
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,integrand,cumulative\n");
        for ((t, f), c) in self.times.iter().zip(&self.integrand).zip(&self.cumulative) {
            out.push_str(&format!("{t:.17e},{f:.17e},{c:.17e}\n"));
        }
        out
    }
}

fn ratio(total: f64, half: f64) -> f64 {
    if total == 0.0 {
        1.0
    } else if half == 0.0 {
        f64::INFINITY
    } else {
        total / half
    }
}

/// Single-sample smoothing integral. `t_end` beyond `t_max` is truncated
/// with a warning. Monotonicity of the cumulative sum is asserted.
#[allow(clippy::too_many_arguments)]
pub fn smoothing_integral(
    weight: &Weight,
    h: &HermitianOperator,
    p: Option<BandProjector>,
    psi: &StateVector,
    t_end: f64,
    t_max: f64,
    dt_max: f64,
    plan: &PropagationPlan,
) -> Result<SmoothnessReport> {
    let truncated = t_end > t_max;
    if truncated {
        warn!("smoothing window {t_end} exceeds T_max = {t_max}; truncating");
    }
    let t_end = t_end.min(t_max);
    let times = time_grid(t_end, dt_max);
    let dt = if times.len() > 1 { times[1] } else { 0.0 };
    let start = match p {
        Some(p) => StateVector::new(p.apply(psi.amps()))?,
        None => psi.clone(),
    };
    let mut state = start.clone();
    let mut integrand = Vec::with_capacity(times.len());
    integrand.push(weight.norm_sq(state.amps())?);
    for _ in 1..times.len() {
        state = propagate(h, &state, -dt, plan)?;
        integrand.push(weight.norm_sq(state.amps())?);
    }
    let mut cumulative = vec![0.0; times.len()];
    for k in 1..times.len() {
        let step = 0.5 * dt * (integrand[k] + integrand[k - 1]);
        cumulative[k] = cumulative[k - 1] + step;
        assert!(cumulative[k] >= cumulative[k - 1], "cumulative smoothing integral decreased");
    }
    let total = *cumulative.last().unwrap();
    let half = cumulative[(times.len() - 1) / 2];
    let stabilization_ratio = ratio(total, half);
    let normalization = start.norm().powi(2);
    Ok(SmoothnessReport {
        weight: weight.name().to_string(),
        times,
        integrand,
        cumulative,
        dt,
        normalization,
        constant: if normalization > 0.0 { total / normalization } else { 0.0 },
        stabilization_ratio,
        stabilizing: stabilization_ratio <= STABILIZATION_LIMIT,
        truncated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConstant {
    pub index: usize,
    pub constant: f64,
    pub stabilization_ratio: f64,
    pub stabilizing: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KatoReport {
    pub weight: String,
    pub s: f64,
    pub t_max: f64,
    pub samples: Vec<SampleConstant>,
    /// Samples whose normalization fell below `1e-12`.
    pub excluded: Vec<usize>,
    pub sup_constant: f64,
    pub non_stabilizing: Vec<usize>,
    pub all_stabilizing: bool,
    /// Per-sample cumulative traces, in sample order.
    #[serde(skip)]
    pub traces: Vec<SmoothnessReport>,
}

impl KatoReport {
    pub fn finite(&self) -> bool {
        self.sup_constant.is_finite()
    }
}

type SampleResult = (usize, Option<(SampleConstant, SmoothnessReport)>);

fn reduce(weight: &str, s: f64, t_max: f64, results: Vec<SampleResult>) -> KatoReport {
    let mut samples = Vec::new();
    let mut traces = Vec::new();
    let mut excluded = Vec::new();
    for (i, r) in results {
        match r {
            Some((c, t)) => {
                samples.push(c);
                traces.push(t);
            }
            None => excluded.push(i),
        }
    }
    let sup_constant = samples.iter().map(|c| c.constant).fold(0.0, f64::max);
    let non_stabilizing: Vec<usize> = samples.iter().filter(|c| !c.stabilizing).map(|c| c.index).collect();
    KatoReport {
        weight: weight.to_string(),
        s,
        t_max,
        all_stabilizing: non_stabilizing.is_empty() && !samples.is_empty(),
        samples,
        excluded,
        sup_constant,
        non_stabilizing,
        traces,
    }
}

/// Sup over samples of `∫_0^T |E e^{-itH} P ψ|^2 dt / |P ψ|^2_{Ḣ^s}`.
#[allow(clippy::too_many_arguments)]
pub fn kato_constant(
    weight: &Weight,
    h: &HermitianOperator,
    p: BandProjector,
    samples: &[StateVector],
    s: f64,
    t_max: f64,
    dt_max: f64,
    plan: &PropagationPlan,
) -> Result<KatoReport> {
    let results = samples
        .par_iter()
        .enumerate()
        .map(|(i, psi)| -> Result<SampleResult> {
            let norm = p.sobolev_norm_sq(psi.amps(), s);
            if norm < 1e-12 * 1e-12 {
                return Ok((i, None));
            }
            let r = smoothing_integral(weight, h, Some(p), psi, t_max, t_max, dt_max, plan)?;
            let c = SampleConstant {
                index: i,
                constant: r.total() / norm,
                stabilization_ratio: r.stabilization_ratio,
                stabilizing: r.stabilizing,
            };
            Ok((i, Some((c, r))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(reduce(weight.name(), s, t_max, results))
}

/// Local-decay constant for the weight `|x|^{-1}`: `C = sup I(T)^{1/2} / |f|`.
pub fn morawetz_check(
    h: &HermitianOperator,
    grid: &Grid,
    samples: &[StateVector],
    t_max: f64,
    dt_max: f64,
    plan: &PropagationPlan,
) -> Result<(KatoReport, f64)> {
    if grid.geometry == Geometry::Line1d {
        return Err(LabError::Unsupported("the |x|^-1 local-decay estimate is only run in three dimensions".into()));
    }
    let weight = Weight::inverse_radius(grid);
    let results = samples
        .par_iter()
        .enumerate()
        .map(|(i, f)| -> Result<SampleResult> {
            if f.norm() < 1e-12 {
                return Ok((i, None));
            }
            let r = smoothing_integral(&weight, h, None, f, t_max, t_max, dt_max, plan)?;
            let c = SampleConstant {
                index: i,
                constant: r.total().sqrt() / f.norm(),
                stabilization_ratio: r.stabilization_ratio,
                stabilizing: r.stabilizing,
            };
            Ok((i, Some((c, r))))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = reduce(weight.name(), 0.0, t_max, results);
    let c = report.sup_constant;
    Ok((report, c))
}

/// Seeded smooth wave packets. Line: Gaussians with random centre, width
/// and momentum. Radial: `r exp(-r^2/(2σ^2) + iβr^2)` with an outgoing chirp.
pub fn wave_packet_samples(grid: &Grid, count: usize, seed: u64) -> Result<Vec<StateVector>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let amps: CVector = match grid.geometry {
                Geometry::Line1d => {
                    let x0 = rng.gen_range(-2.0..2.0);
                    let sigma = rng.gen_range(0.8..1.5);
                    let k0 = rng.gen_range(-1.0..1.0);
                    grid.points
                        .iter()
                        .map(|x| {
                            let g = (-(x - x0).powi(2) / (2.0 * sigma * sigma)).exp();
                            C64::new(0.0, k0 * x).exp() * g
                        })
                        .collect()
                }
                Geometry::Radial3d => {
                    let sigma = rng.gen_range(0.8..1.4);
                    let beta = rng.gen_range(0.0..0.3);
                    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                    grid.points
                        .iter()
                        .map(|r| {
                            let g = r * (-r * r / (2.0 * sigma * sigma)).exp();
                            C64::new(0.0, beta * r * r + phase).exp() * g
                        })
                        .collect()
                }
            };
            StateVector::new(amps)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyMembership {
    pub t_max: f64,
    pub times: Vec<f64>,
    /// `∫_{-t}^{t} |ψ_u|^2` at each grid time.
    pub cumulative: Vec<f64>,
    /// `(∫_{-T}^{T} |ψ_u|^2)^{1/2}`
    pub window_l2: f64,
    /// Square root of `window_l2`, the other reading of the seminorm.
    pub window_sqrt: f64,
    /// Integral at `T` over the one at `T/2`.
    pub growth_ratio: f64,
    /// `|x u| |u|`, only in three dimensions.
    pub remark_bound: Option<f64>,
    pub remark_bound_holds: Option<bool>,
}

/// Energy-space surrogate over `[-T, T]`; negative times use
/// `ψ_u(-t) = conj(ψ_u(t))`.
pub fn energy_membership(
    u: &StateVector,
    h: &HermitianOperator,
    grid: &Grid,
    t_max: f64,
    dt_max: f64,
    plan: &PropagationPlan,
) -> Result<EnergyMembership> {
    let times = time_grid(t_max, dt_max);
    let psi = if u.norm() == 0.0 {
        vec![C64::new(0.0, 0.0); times.len()]
    } else {
        autocorrelation(h, u, &times, plan)?
    };
    let mut cumulative = vec![0.0; times.len()];
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        // factor 2 for the mirrored half-line
        cumulative[k] = cumulative[k - 1] + dt * (psi[k].norm_sqr() + psi[k - 1].norm_sqr());
    }
    let total = *cumulative.last().unwrap();
    let half = cumulative[(times.len() - 1) / 2];
    let window_l2 = total.sqrt();
    let remark_bound = (grid.geometry == Geometry::Radial3d).then(|| {
        let xu: f64 = grid.points.iter().zip(u.amps().iter()).map(|(r, z)| r * r * z.norm_sqr()).sum();
        xu.sqrt() * u.norm()
    });
    Ok(EnergyMembership {
        t_max,
        times,
        cumulative,
        window_l2,
        window_sqrt: window_l2.sqrt(),
        growth_ratio: ratio(total, half),
        remark_bound_holds: remark_bound.map(|b| window_l2 <= 1.05 * b),
        remark_bound,
    })
}

/// Threshold on the window growth ratio; a stationary state gives 2.
pub const HB_GROWTH_LIMIT: f64 = 1.9;

/// Feeds `(A_h + i)^{-1} u` through [`energy_membership`].
pub fn hb_surrogate(
    a_h: &HermitianOperator,
    u: &StateVector,
    h: &HermitianOperator,
    grid: &Grid,
    t_max: f64,
    dt_max: f64,
    plan: &PropagationPlan,
) -> Result<HbSurrogate> {
    let r = StateVector::new(resolvent_state(a_h, u.amps())?)?;
    let e = energy_membership(&r, h, grid, t_max, dt_max, plan)?;
    Ok(HbSurrogate {
        resolvent_state_norm: vnorm(r.amps()),
        window_l2: e.window_l2,
        growth_ratio: e.growth_ratio,
        verdict: if e.growth_ratio < HB_GROWTH_LIMIT { AuditFlag::Pass } else { AuditFlag::Fail },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::{assemble_hamiltonian, build_grid, PotentialSpec, Role};
    use crate::propagator::DEFAULT_TOLERANCE;

    #[test]
    fn zero_weight_and_identity_weight() {
        let g = build_grid(Geometry::Line1d, 64, 5.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::zero(1)).unwrap();
        let plan = PropagationPlan::chebyshev(&h, DEFAULT_TOLERANCE);
        let psi = wave_packet_samples(&g, 1, 3).unwrap().remove(0);
        let zero = Weight::Diagonal { name: "0".into(), values: vec![0.0; 64] };
        let r = smoothing_integral(&zero, &h, None, &psi, 2.0, 10.0, 0.05, &plan).unwrap();
        assert!(r.cumulative.iter().all(|c| *c == 0.0));
        let one = Weight::Operator { name: "I".into(), op: HermitianOperator::diagonal(Role::Weight, vec![1.0; 64], None) };
        let r = smoothing_integral(&one, &h, None, &psi, 2.0, 10.0, 0.05, &plan).unwrap();
        assert!((r.total() - 2.0 * psi.norm().powi(2)).abs() < 1e-8 * psi.norm().powi(2));
    }

    #[test]
    fn truncates_past_window() {
        let g = build_grid(Geometry::Line1d, 32, 5.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::zero(1)).unwrap();
        let plan = PropagationPlan::chebyshev(&h, DEFAULT_TOLERANCE);
        let psi = wave_packet_samples(&g, 1, 1).unwrap().remove(0);
        let w = Weight::japanese(&g, 1.0);
        let r = smoothing_integral(&w, &h, None, &psi, 5.0, 1.0, 0.1, &plan).unwrap();
        assert!(r.truncated);
        assert!((r.times.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn morawetz_refuses_line() {
        let g = build_grid(Geometry::Line1d, 32, 5.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::zero(1)).unwrap();
        let plan = PropagationPlan::chebyshev(&h, DEFAULT_TOLERANCE);
        assert!(matches!(morawetz_check(&h, &g, &[], 1.0, 0.1, &plan), Err(LabError::Unsupported(_))));
    }

    #[test]
    fn samples_are_seeded() {
        let g = build_grid(Geometry::Radial3d, 64, 10.0).unwrap();
        let a = wave_packet_samples(&g, 3, 11).unwrap();
        let b = wave_packet_samples(&g, 3, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, wave_packet_samples(&g, 3, 12).unwrap());
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let g = build_grid(Geometry::Line1d, 32, 5.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::zero(1)).unwrap();
        let plan = PropagationPlan::chebyshev(&h, DEFAULT_TOLERANCE);
        let zero = StateVector::new(CVector::zeros(32)).unwrap();
        let e = energy_membership(&zero, &h, &g, 3.0, 0.1, &plan).unwrap();
        assert_eq!(e.window_l2, 0.0);
    }
}
