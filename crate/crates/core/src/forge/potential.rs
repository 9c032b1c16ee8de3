use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialFamily {
    Zero,
    /// `c (1 + |x|^2)^{-1}`
    Critical,
    /// `c (1 + |x|^2)^{-2}`
    InverseQuartic,
    /// Values (and optionally radial derivatives) at the grid points, scaled by the coupling.
    Sampled { values: Vec<f64>, derivative: Option<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub family: PotentialFamily,
    pub coupling: f64,
    pub space_dim: usize,
}

impl PotentialSpec {
    pub fn zero(space_dim: usize) -> Self {
        PotentialSpec { family: PotentialFamily::Zero, coupling: 0.0, space_dim }
    }

    pub fn critical(coupling: f64, space_dim: usize) -> Self {
        PotentialSpec { family: PotentialFamily::Critical, coupling, space_dim }
    }

    pub fn inverse_quartic(coupling: f64, space_dim: usize) -> Self {
        PotentialSpec { family: PotentialFamily::InverseQuartic, coupling, space_dim }
    }

    /// `(n_space - 2)/2`
    pub fn lambda(&self) -> f64 {
        (self.space_dim as f64 - 2.0) / 2.0
    }

    /// `V(r)` for the symbolic families.
    pub fn value_at(&self, r: f64) -> Option<f64> {
        let c = self.coupling;
        let q = 1.0 + r * r;
        match self.family {
            PotentialFamily::Zero => Some(0.0),
            PotentialFamily::Critical => Some(c / q),
            PotentialFamily::InverseQuartic => Some(c / (q * q)),
            PotentialFamily::Sampled { .. } => None,
        }
    }

    /// `dV/dr` for the symbolic families.
    pub fn derivative_at(&self, r: f64) -> Option<f64> {
        let c = self.coupling;
        let q = 1.0 + r * r;
        match self.family {
            PotentialFamily::Zero => Some(0.0),
            PotentialFamily::Critical => Some(-2.0 * c * r / (q * q)),
            PotentialFamily::InverseQuartic => Some(-4.0 * c * r / (q * q * q)),
            PotentialFamily::Sampled { .. } => None,
        }
    }

    pub fn values(&self, grid: &Grid) -> Result<Vec<f64>> {
        let v: Vec<f64> = match &self.family {
            PotentialFamily::Sampled { values, .. } => {
                if values.len() != grid.n {
                    return Err(LabError::DimensionMismatch { left: values.len(), right: grid.n });
                }
                values.iter().map(|v| self.coupling * v).collect()
            }
            _ => grid.points.iter().map(|&x| self.value_at(x.abs()).unwrap()).collect(),
        };
        for (x, value) in grid.points.iter().zip(&v) {
            if !value.is_finite() {
                return Err(LabError::NonFinitePotential { x: *x, value: *value });
            }
        }
        Ok(v)
    }

    /// Derivative samples along the coordinate (`V'(x)` in 1D, `dV/dr` in 3D).
    pub fn derivative(&self, grid: &Grid) -> Result<Option<Vec<f64>>> {
        match &self.family {
            PotentialFamily::Sampled { derivative: None, .. } => Ok(None),
            PotentialFamily::Sampled { derivative: Some(d), .. } => {
                if d.len() != grid.n {
                    return Err(LabError::DimensionMismatch { left: d.len(), right: grid.n });
                }
                Ok(Some(d.iter().map(|v| self.coupling * v).collect()))
            }
            _ => Ok(Some(
                grid.points
                    .iter()
                    .map(|&x| x.signum() * self.derivative_at(x.abs()).unwrap())
                    .collect(),
            )),
        }
    }

    pub fn is_symbolic(&self) -> bool {
        !matches!(self.family, PotentialFamily::Sampled { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditFlag {
    Pass,
    Fail,
    Unverifiable,
}

impl AuditFlag {
    fn from_bool(ok: bool) -> Self {
        if ok {
            AuditFlag::Pass
        } else {
            AuditFlag::Fail
        }
    }
}

/// Grid-level surrogates of the critical-decay assumptions. Every supremum
/// and infimum is taken over grid points. "Finite" suprema are judged by a
/// tail test: the sup over the whole grid may exceed the sup over the inner
/// half by at most 25%.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialAudit {
    pub lambda: f64,
    pub sup_x2_v: f64,
    pub sup_x3_grad_v: Option<f64>,
    pub sup_xgrad_v_over_jv: Option<f64>,
    /// `inf_r (lambda^2 + r^2 V(r))`
    pub delta_sq: f64,
    /// `inf_r (lambda^2 + r^2 Vt(r))` with `Vt = -d(rV)/dr`
    pub delta_tilde_sq: Option<f64>,
    pub min_v: f64,
    pub a1: AuditFlag,
    pub a2: AuditFlag,
    pub a3: AuditFlag,
    pub a4: AuditFlag,
    pub a5: AuditFlag,
}

impl PotentialAudit {
    pub fn all_pass(&self) -> bool {
        [self.a1, self.a2, self.a3, self.a4, self.a5].iter().all(|f| *f == AuditFlag::Pass)
    }
}

fn tail_bounded(values: &[f64], r: &[f64], radius: f64) -> bool {
    let full = values.iter().fold(0.0_f64, |m, v| m.max(*v));
    let inner = values
        .iter()
        .zip(r)
        .filter(|(_, r)| **r <= radius / 2.0)
        .fold(0.0_f64, |m, (v, _)| m.max(*v));
    full.is_finite() && full <= 1.25 * inner + 1e-12
}

pub fn audit_potential(potential: &PotentialSpec, grid: &Grid) -> Result<PotentialAudit> {
    let v = potential.values(grid)?;
    let dv = potential.derivative(grid)?;
    let r = grid.abs_points();
    let lambda = potential.lambda();

    let x2v: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r * r * v.abs()).collect();
    let sup_x2_v = x2v.iter().fold(0.0_f64, |m, x| m.max(*x));
    let a1 = AuditFlag::from_bool(tail_bounded(&x2v, &r, grid.radius));

    let delta_sq = r
        .iter()
        .zip(&v)
        .map(|(r, v)| lambda * lambda + r * r * v)
        .fold(f64::INFINITY, f64::min);
    let a2 = AuditFlag::from_bool(delta_sq > 0.0);

    let min_v = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let a4 = AuditFlag::from_bool(min_v >= 0.0);

    let (sup_x3_grad_v, sup_xgrad_v_over_jv, delta_tilde_sq, a3, a5) = match &dv {
        None => (None, None, None, AuditFlag::Unverifiable, AuditFlag::Unverifiable),
        Some(dv) => {
            // dv is along the coordinate; |grad V| = |dV/dr| and x . grad V = r dV/dr
            let radial: Vec<f64> = grid.points.iter().zip(dv).map(|(x, d)| d * x.signum()).collect();
            let x3: Vec<f64> = r.iter().zip(&radial).map(|(r, d)| r.powi(3) * d.abs()).collect();
            let ratio: Vec<f64> = r
                .iter()
                .zip(&radial)
                .zip(&v)
                .map(|((r, d), v)| (r * d).abs() / (1.0 + v * v).sqrt())
                .collect();
            let sup3 = x3.iter().fold(0.0_f64, |m, x| m.max(*x));
            let supr = ratio.iter().fold(0.0_f64, |m, x| m.max(*x));
            let a5 = AuditFlag::from_bool(tail_bounded(&x3, &r, grid.radius) && supr.is_finite());
            let dt = r
                .iter()
                .zip(&radial)
                .zip(&v)
                .map(|((r, d), v)| lambda * lambda - r * r * (v + r * d))
                .fold(f64::INFINITY, f64::min);
            (Some(sup3), Some(supr), Some(dt), AuditFlag::from_bool(dt > 0.0), a5)
        }
    };

    Ok(PotentialAudit {
        lambda,
        sup_x2_v,
        sup_x3_grad_v,
        sup_xgrad_v_over_jv,
        delta_sq,
        delta_tilde_sq,
        min_v,
        a1,
        a2,
        a3,
        a4,
        a5,
    })
}
