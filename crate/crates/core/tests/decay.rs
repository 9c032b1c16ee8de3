use std::sync::Arc;

use decaylab_core::decay::*;
use decaylab_core::forge::{assemble_hamiltonian, build_grid, Band, Geometry, PotentialSpec};
use decaylab_core::propagator::{PropagationPlan, StateVector, DEFAULT_TOLERANCE};
use decaylab_core::{Grid, HermitianOperator, SpectralData, C64};

fn free_line(n: usize, l: f64) -> (Grid, HermitianOperator, Arc<SpectralData>) {
    let g = build_grid(Geometry::Line1d, n, l).unwrap();
    let h = assemble_hamiltonian(&g, &PotentialSpec::zero(1)).unwrap();
    let sp = Arc::new(SpectralData::new(&h).unwrap());
    (g, h, sp)
}

fn gaussian(g: &Grid) -> StateVector {
    let u = StateVector::new(g.points.iter().map(|x| C64::new((-x * x / 4.0).exp(), 0.0)).collect()).unwrap();
    u.scaled(C64::new(1.0 / u.norm(), 0.0))
}

fn scenario(g: &Grid, h: &HermitianOperator, sp: &Arc<SpectralData>, u: StateVector, band: Band) -> DecayScenario {
    DecayScenario {
        name: "free-line".into(),
        grid: g.clone(),
        h: h.clone(),
        spectral: sp.clone(),
        band,
        c: 2.0,
        u,
        plan: PropagationPlan::eigenbasis(sp.clone(), DEFAULT_TOLERANCE),
        t_lo: 8.0,
        t_max: None,
        tolerance: CLOSED_FORM_TOLERANCE,
        a: None,
        hypotheses: vec![],
        control: false,
    }
}

#[test]
fn gaussian_trace_matches_closed_form() {
    let (g, h, sp) = free_line(2048, 100.0);
    let u = gaussian(&g);
    let times = [0.0, 2.0, 5.0, 10.0];
    let tr = psi_trace(&u, &h, &times, &PropagationPlan::eigenbasis(sp, DEFAULT_TOLERANCE)).unwrap();
    for (t, z) in times.iter().zip(&tr.psi) {
        let exact = C64::new(1.0, -t / 2.0).powf(-0.5);
        assert!((z - exact).norm() <= 2e-3 * exact.norm(), "t = {t}: {z} vs {exact}");
    }
}

#[test]
fn free_line_rates() {
    let (g, h, sp) = free_line(2048, 100.0);
    let u = gaussian(&g);
    let opts = VerifyOptions::default();
    let (r, tr) = verify_proposition(PropId::P53, &scenario(&g, &h, &sp, u.clone(), Band::everything()), &opts).unwrap();
    assert!((r.fit.exponent + 0.5).abs() <= 0.05, "{r:?}");
    assert!(r.conj_symmetry_defect <= 1e-9);
    assert_eq!(r.sub_reports.len(), 2);
    assert!(tr.to_csv().lines().count() == tr.times.len() + 1);
    let (r, _) = verify_proposition(PropId::P63, &scenario(&g, &h, &sp, u.clone(), Band::everything()), &opts).unwrap();
    assert!((-1.6..=-1.4).contains(&r.fit.exponent), "{r:?}");
    let band = Band::default_for(&sp);
    let (r, _) = verify_proposition(PropId::P52, &scenario(&g, &h, &sp, u, band), &opts).unwrap();
    assert!(r.exponent_pass && r.bound_pass, "{r:?}");
}

#[test]
fn eigenvector_control_does_not_decay() {
    let (g, h, sp) = free_line(512, 20.0);
    let ev = StateVector::new(sp.eigenvector(40)).unwrap();
    let mut sc = scenario(&g, &h, &sp, ev, Band::everything());
    sc.t_max = Some(40.0);
    sc.control = true;
    let (r, _) = verify_proposition(PropId::P61, &sc, &VerifyOptions::default()).unwrap();
    assert!(r.fit.exponent.abs() <= 0.01, "{r:?}");
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.notes.iter().any(|n| n.contains("point spectrum")));
}

#[test]
fn tripled_state_gives_identical_exponents() {
    let (g, h, sp) = free_line(2048, 100.0);
    let u = gaussian(&g);
    let opts = VerifyOptions::default();
    for prop in [PropId::P53, PropId::P63, PropId::P61] {
        let (a, _) = verify_proposition(prop, &scenario(&g, &h, &sp, u.clone(), Band::everything()), &opts).unwrap();
        let (b, _) = verify_proposition(prop, &scenario(&g, &h, &sp, u.scaled(C64::new(3.0, 0.0)), Band::everything()), &opts)
            .unwrap();
        assert_eq!(a.fit.exponent.to_bits(), b.fit.exponent.to_bits(), "{prop}");
    }
}

#[test]
fn unlocalized_state_is_rejected() {
    let (g, h, sp) = free_line(256, 10.0);
    let flat = StateVector::new(g.points.iter().map(|_| C64::new(1.0, 0.0)).collect()).unwrap();
    let sc = scenario(&g, &h, &sp, flat, Band::everything());
    assert!(verify_proposition(PropId::P53, &sc, &VerifyOptions::default()).is_err());
}
