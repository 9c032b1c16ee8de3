//! Autocorrelation traces `ψ_u(t) = <u, e^{itH} u>`, envelope fits and the
//! per-proposition decay recipes.

use std::fmt;
use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::forge::{AuditFlag, Band, Grid, HermitianOperator, SpectralData};
use crate::linalg::{inner, C64};
use crate::propagator::{autocorrelation, energy_cut, propagate, reflection_window, PropagationPlan, StateVector};
use crate::smoothness::{energy_membership, phase_step, time_grid};

/// Minimum number of envelope points accepted by [`fit_exponent`].
pub const MIN_ENVELOPE_POINTS: usize = 6;
/// Largest admissible ratio of `Ĉ` on the full and half fit windows.
pub const BOUND_STABILITY: f64 = 1.1;
/// Exponent tolerance for scenarios backed by a closed form.
pub const CLOSED_FORM_TOLERANCE: f64 = 0.05;
/// Exponent tolerance for potential scenarios.
pub const POTENTIAL_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub psi: Vec<C64>,
    pub abs: Vec<f64>,
    pub norm_sq: f64,
    /// Indices of the envelope points inside `window`.
    pub envelope: Vec<usize>,
    pub window: (f64, f64),
}

impl DecayTrace {
    /// Builds a trace from precomputed samples and marks the envelope on
    /// `window`.
    pub fn from_samples(times: Vec<f64>, psi: Vec<C64>, norm_sq: f64, window: (f64, f64)) -> Result<Self> {
        if times.len() != psi.len() {
            return Err(LabError::DimensionMismatch { left: times.len(), right: psi.len() });
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(LabError::UnsortedTimes);
        }
        let abs = psi.iter().map(|z| z.norm()).collect();
        let mut trace = DecayTrace { times, psi, abs, norm_sq, envelope: Vec::new(), window };
        trace.envelope = envelope(&trace.times, &trace.abs, window);
        Ok(trace)
    }

    pub fn with_window(mut self, window: (f64, f64)) -> Self {
        self.envelope = envelope(&self.times, &self.abs, window);
        self.window = window;
        self
    }

    pub fn to_csv(&self) -> String {
        let mut mark = vec![false; self.times.len()];
        for &i in &self.envelope {
            mark[i] = true;
        }
        let mut out = String::from("t,re_psi,im_psi,abs_psi,is_envelope\n");
        for (i, t) in self.times.iter().enumerate() {
            let z = self.psi[i];
            out.push_str(&format!("{t:.17e},{:.17e},{:.17e},{:.17e},{}\n", z.re, z.im, self.abs[i], mark[i] as u8));
        }
        out
    }
}

/// Envelope indices within `[t_lo, t_hi]`: every point when `|ψ|` is
/// non-increasing there, strict interior local maxima otherwise.
pub fn envelope(times: &[f64], abs: &[f64], window: (f64, f64)) -> Vec<usize> {
    let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= window.0 && times[i] <= window.1).collect();
    if idx.windows(2).all(|w| abs[w[1]] <= abs[w[0]]) {
        return idx;
    }
    idx.iter()
        .copied()
        .filter(|&i| i > 0 && i + 1 < abs.len() && abs[i] > abs[i - 1] && abs[i] > abs[i + 1])
        .collect()
}

/// `ψ_u` on `times`, with `ψ_u(0) = |u|^2` and `|ψ_u| <= |u|^2` asserted.
pub fn psi_trace(u: &StateVector, h: &HermitianOperator, times: &[f64], plan: &PropagationPlan) -> Result<DecayTrace> {
    if u.norm() == 0.0 {
        return Err(LabError::InvalidInput("psi_trace needs a nonzero state".into()));
    }
    let psi = autocorrelation(h, u, times, plan)?;
    let norm_sq = u.norm() * u.norm();
    for (t, z) in times.iter().zip(&psi) {
        if *t == 0.0 {
            assert!((z - norm_sq).norm() <= 1e-10 * norm_sq, "psi(0) = {z} differs from |u|^2 = {norm_sq}");
        }
        assert!(z.norm() <= norm_sq * (1.0 + 1e-9), "|psi({t})| = {} exceeds |u|^2 = {norm_sq}", z.norm());
    }
    let t_hi = times.last().copied().unwrap_or(0.0);
    DecayTrace::from_samples(times.to_vec(), psi, norm_sq, (0.0, t_hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Slope of `log|ψ|` against `log t`, rounded to `1e-10`.
    pub exponent: f64,
    pub stderr: f64,
    /// RMS of the linear-fit residual.
    pub residual: f64,
    pub points: usize,
    /// Envelope points dropped because `|ψ| = 0`.
    pub excluded_zeros: usize,
    pub window: (f64, f64),
}

pub fn fit_exponent(trace: &DecayTrace, window: (f64, f64)) -> Result<ExponentFit> {
    let env = if window == trace.window { trace.envelope.clone() } else { envelope(&trace.times, &trace.abs, window) };
    let usable: Vec<usize> = env.iter().copied().filter(|&i| trace.abs[i] > 0.0 && trace.times[i] > 0.0).collect();
    let excluded_zeros = env.len() - usable.len();
    if usable.len() < MIN_ENVELOPE_POINTS {
        return Err(LabError::TooFewEnvelopePoints {
            found: usable.len(),
            required: MIN_ENVELOPE_POINTS,
            t_lo: window.0,
            t_hi: window.1,
        });
    }
    let xs: Vec<f64> = usable.iter().map(|&i| trace.times[i].ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|&i| trace.abs[i].ln()).collect();
    let m = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    if sxx == 0.0 {
        return Err(LabError::InvalidInput("envelope points share a single time".into()));
    }
    let slope = sxy / sxx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - ym - slope * (x - xm)).powi(2)).sum();
    Ok(ExponentFit {
        exponent: (slope * 1e10).round() / 1e10 + 0.0,
        stderr: (ssr / (m - 2.0) / sxx).sqrt(),
        residual: (ssr / m).sqrt(),
        points: usable.len(),
        excluded_zeros,
        window,
    })
}

/// `max |ψ(t)| <t>^{-p}` over the samples in `window`.
pub fn envelope_constant(trace: &DecayTrace, window: (f64, f64), p: f64) -> f64 {
    trace
        .times
        .iter()
        .zip(&trace.abs)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, a)| a * (1.0 + t * t).powf(-p / 2.0))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PropId {
    P52,
    P53,
    P61,
    P63,
    P71,
}

impl PropId {
    pub const ALL: [PropId; 5] = [PropId::P52, PropId::P53, PropId::P61, PropId::P63, PropId::P71];

    pub fn predicted(self) -> f64 {
        match self {
            PropId::P52 => -1.0,
            PropId::P53 | PropId::P71 => -0.5,
            PropId::P61 => -2.0,
            PropId::P63 => -1.5,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        PropId::ALL.into_iter().find(|p| p.to_string() == s)
    }
}

impl fmt::Display for PropId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// The state whose autocorrelation each proposition bounds.
///
/// P52: `(cH)^{1/2} P u` on the positive part of the band. P53, P71: `P u`.
/// P61: `cH P u`. P63: `|H|^{1/2} P u`.
pub fn proposition_input(prop: PropId, spectral: &SpectralData, band: Band, c: f64, u: &StateVector) -> Result<StateVector> {
    let inside = move |l: f64| band.contains(l);
    let f: Box<dyn Fn(f64) -> f64> = match prop {
        PropId::P52 => Box::new(move |l| if inside(l) && l > 0.0 { (c * l).sqrt() } else { 0.0 }),
        PropId::P53 | PropId::P71 => Box::new(move |l| if inside(l) { 1.0 } else { 0.0 }),
        PropId::P61 => Box::new(move |l| if inside(l) { c * l } else { 0.0 }),
        PropId::P63 => Box::new(move |l| if inside(l) { l.abs().sqrt() } else { 0.0 }),
    };
    StateVector::new(spectral.apply_fn(u.amps(), |l| C64::new(f(l), 0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Decay checks pass while a hypothesis audit failed.
    VacuousPass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub flag: AuditFlag,
}

pub struct DecayScenario {
    pub name: String,
    pub grid: Grid,
    pub h: HermitianOperator,
    pub spectral: Arc<SpectralData>,
    pub band: Band,
    pub c: f64,
    pub u: StateVector,
    pub plan: PropagationPlan,
    /// Fit window start.
    pub t_lo: f64,
    /// Overrides the reflection window.
    pub t_max: Option<f64>,
    pub tolerance: f64,
    /// Conjugate operator for the `P A P u` energy window.
    pub a: Option<HermitianOperator>,
    pub hypotheses: Vec<HypothesisCheck>,
    /// The input is a stationary state used as a negative control.
    pub control: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Top of the low band `[λ_min, M]` in the P53 split.
    pub low_band_top: f64,
    pub split: bool,
    pub spot_checks: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { low_band_top: 1.0, split: true, spot_checks: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubReport {
    pub label: String,
    pub predicted: f64,
    pub fit: Option<ExponentFit>,
    pub exponent_pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub label: String,
    pub window_l2: f64,
    pub window_sqrt: f64,
    pub growth_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub scenario: String,
    pub prop: PropId,
    pub predicted: f64,
    pub tolerance: f64,
    pub t_max: f64,
    pub fit: ExponentFit,
    /// `p̂ <= p* + tol`
    pub exponent_pass: bool,
    /// `|p̂ - p*| <= tol`
    pub sharp: bool,
    /// `Ĉ` on the full window.
    pub c_hat: f64,
    /// `Ĉ` on the first half of the fit window.
    pub c_hat_half: f64,
    pub c_hat_ratio: f64,
    pub bound_pass: bool,
    pub conj_symmetry_defect: f64,
    pub hypotheses: Vec<HypothesisCheck>,
    pub energy_windows: Vec<EnergyWindow>,
    pub sub_reports: Vec<SubReport>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

fn sample_times(spectral: &SpectralData, band: Band, input: &StateVector, t_max: f64, t_lo: f64) -> Vec<f64> {
    let top = energy_cut(spectral, input, band).max(spectral.eigenvalues().iter().fold(0.0f64, |m, l| m.max(l.abs())) * 1e-6);
    // at least 64 samples per fit window
    let dt = phase_step(top).min((t_max - t_lo).max(t_max / 2.0) / 64.0);
    time_grid(t_max, dt)
}

fn sub_report(
    label: &str,
    predicted: f64,
    tol: f64,
    state: StateVector,
    sc: &DecayScenario,
    times: &[f64],
    window: (f64, f64),
) -> Result<SubReport> {
    if state.norm() < 1e-12 {
        return Ok(SubReport {
            label: label.into(),
            predicted,
            fit: None,
            exponent_pass: true,
            error: Some("component vanishes".into()),
        });
    }
    let trace = psi_trace(&state, &sc.h, times, &sc.plan)?.with_window(window);
    Ok(match fit_exponent(&trace, window) {
        Ok(fit) => SubReport { label: label.into(), predicted, exponent_pass: fit.exponent <= predicted + tol, fit: Some(fit), error: None },
        Err(e) => SubReport { label: label.into(), predicted, fit: None, exponent_pass: false, error: Some(e.to_string()) },
    })
}

/// Runs one proposition recipe and returns its report with the trace.
pub fn verify_proposition(prop: PropId, sc: &DecayScenario, opts: &VerifyOptions) -> Result<(DecayReport, DecayTrace)> {
    let sp = &*sc.spectral;
    let input = proposition_input(prop, sp, sc.band, sc.c, &sc.u)?;
    if input.norm() < 1e-12 {
        return Err(LabError::InvalidInput(format!("{prop} input vanishes on band [{}, {}]", sc.band.lo, sc.band.hi)));
    }
    let mut notes = Vec::new();
    let t_max = match sc.t_max {
        Some(t) => t,
        None => {
            // localization from the base state, speed from the transformed one
            let w = reflection_window(&sc.grid, &sc.u, energy_cut(sp, &input, sc.band));
            if let Some(msg) = w.warning {
                notes.push(msg);
            }
            w.t_max
        }
    };
    if !(t_max > sc.t_lo) {
        return Err(LabError::TooFewEnvelopePoints { found: 0, required: MIN_ENVELOPE_POINTS, t_lo: sc.t_lo, t_hi: t_max });
    }
    let times = sample_times(sp, sc.band, &input, t_max, sc.t_lo);
    let window = (sc.t_lo, t_max);
    let trace = psi_trace(&input, &sc.h, &times, &sc.plan)?.with_window(window);
    let fit = fit_exponent(&trace, window)?;
    let predicted = prop.predicted();
    let exponent_pass = fit.exponent <= predicted + sc.tolerance;
    let sharp = (fit.exponent - predicted).abs() <= sc.tolerance;
    if exponent_pass && !sharp {
        notes.push(format!("decay faster than the stated rate: fitted {} vs {predicted}", fit.exponent));
    }

    let c_hat = envelope_constant(&trace, window, predicted);
    // the half-length window stands in for a run at half the horizon
    let c_hat_half = envelope_constant(&trace, (sc.t_lo, 0.5 * (sc.t_lo + t_max)), predicted);
    let c_hat_ratio = if c_hat_half > 0.0 { c_hat / c_hat_half } else { f64::INFINITY };
    let bound_pass = c_hat.is_finite() && c_hat_ratio <= BOUND_STABILITY;

    let mut conj_symmetry_defect = 0.0f64;
    for k in 1..=opts.spot_checks {
        let t = sc.t_lo + (t_max - sc.t_lo) * k as f64 / (opts.spot_checks + 1) as f64;
        let fwd = autocorrelation(&sc.h, &input, &[t], &sc.plan)?[0];
        let back = inner(input.amps(), propagate(&sc.h, &input, -t, &sc.plan)?.amps());
        conj_symmetry_defect = conj_symmetry_defect.max((back - fwd.conj()).norm() / trace.norm_sq);
    }

    let mut sub_reports = Vec::new();
    let mut energy_windows = Vec::new();
    if matches!(prop, PropId::P53 | PropId::P71) {
        let push = |label: &str, v: &StateVector, out: &mut Vec<EnergyWindow>| -> Result<()> {
            let e = energy_membership(v, &sc.h, &sc.grid, t_max, phase_step(sp.spectral_radius()).max(t_max / 4096.0), &sc.plan)?;
            out.push(EnergyWindow { label: label.into(), window_l2: e.window_l2, window_sqrt: e.window_sqrt, growth_ratio: e.growth_ratio });
            Ok(())
        };
        push("Pu", &input, &mut energy_windows)?;
        if let Some(a) = &sc.a {
            let apu = StateVector::new(a.apply(input.amps())?)?;
            let papu = proposition_input(PropId::P53, sp, sc.band, sc.c, &apu)?;
            push("PAPu", &papu, &mut energy_windows)?;
        }
        notes.push("membership of Pu and PAPu in the energy space is not decidable on a finite grid; window values reported".into());
    }
    if prop == PropId::P53 && opts.split {
        let top = opts.low_band_top;
        let low = StateVector::new(sp.apply_fn(input.amps(), |l| C64::new(if l <= top { 1.0 } else { 0.0 }, 0.0)))?;
        let high = StateVector::new(input.amps() - low.amps())?;
        // no closed form backs the split components
        let tol = sc.tolerance.max(POTENTIAL_TOLERANCE);
        sub_reports.push(sub_report("u1_low_band", -0.5, tol, low, sc, &times, window)?);
        sub_reports.push(sub_report("u2_high_band", -1.0, tol, high, sc, &times, window)?);
    }

    let hypotheses_hold = sc.hypotheses.iter().all(|h| h.flag != AuditFlag::Fail);
    let decay_ok = exponent_pass && bound_pass && sub_reports.iter().all(|s| s.exponent_pass);
    let verdict = match (decay_ok, hypotheses_hold) {
        (true, true) => Verdict::Pass,
        (true, false) => Verdict::VacuousPass,
        (false, _) => Verdict::Fail,
    };
    if sc.control {
        notes.push("expected: point spectrum violates (Hb) surrogate".into());
    }
    if verdict == Verdict::Fail && !sc.control {
        warn!("{}: {prop} failed (fitted {}, predicted {predicted})", sc.name, fit.exponent);
    }
    let report = DecayReport {
        scenario: sc.name.clone(),
        prop,
        predicted,
        tolerance: sc.tolerance,
        t_max,
        fit,
        exponent_pass,
        sharp,
        c_hat,
        c_hat_half,
        c_hat_ratio,
        bound_pass,
        conj_symmetry_defect,
        hypotheses: sc.hypotheses.clone(),
        energy_windows,
        sub_reports,
        verdict,
        notes,
    };
    Ok((report, trace))
}
