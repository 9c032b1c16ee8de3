//! One line per acceptance criterion, `criterion N: PASS|FAIL`, with the
//! measured numbers and the wall time. Runs without the libtest harness so
//! every line is printed and the criteria run one after another.

use std::process::ExitCode;
use std::time::Instant;

use decaylab_cli::config::Check;
use decaylab_cli::runner::{run_experiment, CheckResult, Outcome, Setup};
use decaylab_cli::scenarios;
use decaylab_core::commutator::{extract_k, fidelity_ladder};
use decaylab_core::conjugate::{build_conjugate, build_ut, build_ut_quadrature, verify_group_commutator, IdentityContext};
use decaylab_core::decay::{psi_trace, verify_proposition, PropId, VerifyOptions};
use decaylab_core::forge::{assemble_dilation, assemble_hamiltonian, build_grid, Band, Geometry, PotentialSpec, Role};
use decaylab_core::linalg::spectral_norm;
use decaylab_core::propagator::{propagate, PropagationPlan, StateVector};
use decaylab_core::{HermitianOperator, SpectralData, C64};
use std::sync::Arc;

fn criterion(id: u32, limit_s: f64, body: impl FnOnce() -> (bool, String)) -> bool {
    let start = Instant::now();
    let (ok, detail) = std::panic::catch_unwind(std::panic::AssertUnwindSafe(body))
        .unwrap_or_else(|e| (false, format!("panicked: {}", e.downcast_ref::<String>().map_or("?", |s| s.as_str()))));
    let secs = start.elapsed().as_secs_f64();
    let in_time = secs <= limit_s;
    let pass = ok && in_time;
    println!(
        "criterion {id}: {} {detail} runtime={secs:.1}s (limit {limit_s}s{})",
        if pass { "PASS" } else { "FAIL" },
        if in_time { "" } else { ", exceeded" }
    );
    pass
}

fn scenario(name: &str) -> Outcome {
    run_experiment(&scenarios::load(name).unwrap()).unwrap()
}

fn check(o: &Outcome, id: Check) -> &CheckResult {
    o.checks.iter().find(|c| c.id == id.to_string()).unwrap()
}

fn constant(c: &CheckResult, key: &str) -> f64 {
    *c.constants.get(key).unwrap_or_else(|| panic!("{} has no constant {key}", c.id))
}

fn flag(c: &CheckResult, key: &str) -> bool {
    *c.flags.get(key).unwrap_or_else(|| panic!("{} has no flag {key}", c.id))
}

fn criterion_01_generator_identity() -> bool {
    criterion(1, 5.0, || {
        let o = scenario("exact-algebra-p41");
        let c = check(&o, Check::P41);
        let (res, k) = (constant(c, "exact_residual"), constant(c, "k_h_norm"));
        (res <= 1e-10 * k, format!("residual={res:.3e} bound={:.3e}", 1e-10 * k))
    })
}

fn criterion_02_group_commutator_with_zero_remainder() -> bool {
    criterion(2, 5.0, || {
        // V = 0 and the remainder handed to the drift is the zero matrix.
        let g = build_grid(Geometry::Line1d, 128, 10.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::zero(1)).unwrap();
        let a = assemble_dilation(&g);
        let sp = SpectralData::new(&h).unwrap();
        let band = Band::default_for(&sp);
        let d = extract_k(&h, &a, 2.0, 0.5, Some(&sp)).unwrap();
        let zero = HermitianOperator::zeros(Role::Remainder, 128, h.grid_hash());
        let tr = build_ut(&sp, &zero, band, 0.5, 16.0).unwrap();
        let conj = build_conjugate(&a, &tr, &sp, 0.5).unwrap();
        let ctx = IdentityContext { spectral: &sp, k_true: &d.k_mat, c: 2.0 };
        let mut ok = true;
        let mut parts = Vec::new();
        for t in [0.5, 1.0, 2.0] {
            let r = verify_group_commutator(&ctx, &conj, &tr, t).unwrap();
            ok &= r.uncorrected_holds;
            parts.push(format!(
                "t={t}: |delta|/|H_h|={:.3e} (grid remainder part {:.3e}, exact-form residual {:.1e})",
                r.delta_norm / r.h_h_norm,
                r.predicted_norm / r.h_h_norm,
                r.exact_form_residual / r.h_h_norm
            ));
        }
        (ok, format!("needs <= 1e-9; {}", parts.join("; ")))
    })
}

fn criterion_03_drift_closed_form_matches_quadrature() -> bool {
    criterion(3, 10.0, || {
        let g = build_grid(Geometry::Line1d, 64, 10.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::critical(1.0, 1)).unwrap();
        let a = assemble_dilation(&g);
        let sp = SpectralData::new(&h).unwrap();
        let band = Band::default_for(&sp);
        let d = extract_k(&h, &a, 2.0, 0.5, Some(&sp)).unwrap();
        let closed = build_ut(&sp, &d.k_mat, band, 0.5, 4.0).unwrap();
        let quad = build_ut_quadrature(&sp, &d.k_mat, band, 0.5, 4.0, 1024).unwrap();
        let diff = spectral_norm(&(closed.u_t.dense().into_owned() - &*quad.dense())).unwrap();
        let rel = diff / spectral_norm(&closed.u_t.dense()).unwrap();
        (rel <= 1e-8, format!("relative difference={rel:.3e}"))
    })
}

fn criterion_04_free_line_gaussian() -> bool {
    criterion(4, 120.0, || {
        let cfg = scenarios::load("free-1d-p53").unwrap();
        let o = run_experiment(&cfg).unwrap();
        let p = constant(check(&o, Check::P53), "fitted_exponent");
        let setup = Setup::new(&cfg).unwrap();
        let times = [5.0, 10.0, 20.0];
        let tr = psi_trace(&setup.u, &setup.h, &times, &setup.decay_plan()).unwrap();
        let mut worst: f64 = 0.0;
        for (t, v) in times.iter().zip(&tr.abs) {
            let exact = (1.0 + t * t / 4.0).powf(-0.25);
            worst = worst.max((v / tr.norm_sq - exact).abs() / exact);
        }
        let ok = (p + 0.5).abs() <= 0.05 && worst <= 1e-3;
        (ok, format!("exponent={p:.4} pointwise max rel error={worst:.2e}"))
    })
}

fn criterion_05_sobolev_weighted_rate() -> bool {
    criterion(5, 120.0, || {
        let o = scenario("free-1d-p63");
        let p = constant(check(&o, Check::P63), "fitted_exponent");
        ((-1.6..=-1.4).contains(&p), format!("exponent={p:.4}"))
    })
}

fn criterion_06_bound_constant_is_stable() -> bool {
    criterion(6, 120.0, || {
        let o = scenario("free-1d-p52");
        let c = check(&o, Check::P52);
        let (c_hat, ratio) = (constant(c, "c_hat"), constant(c, "c_hat_ratio"));
        (
            c_hat.is_finite() && ratio <= 1.1,
            format!("c_hat={c_hat:.4e} stability ratio={ratio:.4} exponent={:.4}", constant(c, "fitted_exponent")),
        )
    })
}

fn criterion_07_critical_potential() -> bool {
    criterion(7, 180.0, || {
        let o = scenario("critical-3d-p71");
        let p = constant(check(&o, Check::P71), "fitted_exponent");
        let audit = check(&o, Check::Audit);
        let delta_sq = constant(audit, "delta_sq");
        let flags = ["A1", "A2", "A3", "A4", "A5"].iter().all(|f| flag(audit, f));
        (p <= -0.45 && flags && delta_sq >= 0.25, format!("exponent={p:.4} A1-A5 pass={flags} delta^2={delta_sq:.4}"))
    })
}

fn criterion_08_remainder_fidelity() -> bool {
    criterion(8, 60.0, || {
        let line = fidelity_ladder(&PotentialSpec::critical(1.0, 1), Geometry::Line1d, 10.0, &[127, 255, 511]).unwrap();
        let radial =
            fidelity_ladder(&PotentialSpec::critical(1.0, 3), Geometry::Radial3d, 10.0, &[255, 511, 1023]).unwrap();
        (
            line.second_order() && radial.second_order(),
            format!("line ratios={:.3?} radial ratios={:.3?}", line.ratios, radial.ratios),
        )
    })
}

fn criterion_09_local_decay_constants() -> bool {
    criterion(9, 180.0, || {
        let o = scenario("kato-morawetz");
        let m = check(&o, Check::Morawetz);
        let c = constant(m, "constant");
        let worst = constant(m, "max_stabilization_ratio");
        let control = constant(m, "control_stabilization_ratio");
        let ok = flag(m, "all_stabilizing") && c.is_finite() && flag(m, "control_flagged");
        (ok, format!("constant={c:.4} worst ratio={worst:.4} control ratio={control:.3} control flagged={}", flag(m, "control_flagged")))
    })
}

fn criterion_10_pipeline_controls() -> bool {
    criterion(10, 180.0, || {
        let o = scenario("control-eigenvector");
        let p_control = constant(check(&o, Check::P61), "fitted_exponent");

        let setup = Setup::new(&scenarios::load("free-1d-p53").unwrap()).unwrap();
        let base = setup.decay_scenario(setup.decay_plan(), Vec::new());
        let mut tripled = setup.decay_scenario(setup.decay_plan(), Vec::new());
        tripled.u = base.u.scaled(C64::new(3.0, 0.0));
        let opts = VerifyOptions::default();
        let mut identical = true;
        for prop in [PropId::P53, PropId::P63, PropId::P61] {
            let a = verify_proposition(prop, &base, &opts).unwrap().0.fit.exponent;
            let b = verify_proposition(prop, &tripled, &opts).unwrap().0.fit.exponent;
            identical &= a.to_bits() == b.to_bits();
        }

        let g = build_grid(Geometry::Line1d, 512, 20.0).unwrap();
        let h = assemble_hamiltonian(&g, &PotentialSpec::zero(1)).unwrap();
        let sp = Arc::new(SpectralData::new(&h).unwrap());
        let u = StateVector::from_real(&g.points.iter().map(|x| (-x * x / 2.0).exp()).collect::<Vec<_>>()).unwrap();
        let cheb = PropagationPlan::chebyshev(&h, 1e-12);
        let eig = PropagationPlan::eigenbasis(sp, 1e-12);
        let mut kernel_gap: f64 = 0.0;
        for t in [0.5, 5.0, 20.0] {
            let x = propagate(&h, &u, t, &cheb).unwrap();
            let y = propagate(&h, &u, t, &eig).unwrap();
            kernel_gap = kernel_gap.max((x.amps() - y.amps()).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }

        let ok = p_control.abs() <= 0.01 && identical && kernel_gap <= 1e-10;
        (
            ok,
            format!("eigenvector exponent={p_control:.2e} 3u bit-identical={identical} chebyshev-eigenbasis gap={kernel_gap:.2e}"),
        )
    })
}

fn main() -> ExitCode {
    let results = [
        criterion_01_generator_identity(),
        criterion_02_group_commutator_with_zero_remainder(),
        criterion_03_drift_closed_form_matches_quadrature(),
        criterion_04_free_line_gaussian(),
        criterion_05_sobolev_weighted_rate(),
        criterion_06_bound_constant_is_stable(),
        criterion_07_critical_potential(),
        criterion_08_remainder_fidelity(),
        criterion_09_local_decay_constants(),
        criterion_10_pipeline_controls(),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
