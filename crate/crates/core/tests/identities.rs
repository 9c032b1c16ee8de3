use decaylab_core::commutator::{extract_k, fidelity_ladder};
use decaylab_core::conjugate::{
    build_conjugate, build_ut, build_ut_quadrature, verify_generator_identity, verify_group_commutator,
    IdentityContext,
};
use decaylab_core::forge::{assemble_dilation, assemble_hamiltonian, build_grid, Band, Geometry, PotentialSpec, Role};
use decaylab_core::linalg::{max_abs, spectral_norm};
use decaylab_core::{HermitianOperator, SpectralData};

fn critical_line(n: usize) -> (HermitianOperator, HermitianOperator, SpectralData) {
    let g = build_grid(Geometry::Line1d, n, 10.0).unwrap();
    let h = assemble_hamiltonian(&g, &PotentialSpec::critical(1.0, 1)).unwrap();
    let a = assemble_dilation(&g);
    let sp = SpectralData::new(&h).unwrap();
    (h, a, sp)
}

#[test]
fn finite_time_generator_identity_is_exact() {
    let (h, a, sp) = critical_line(128);
    let d = extract_k(&h, &a, 2.0, 0.5, Some(&sp)).unwrap();
    let band = Band::default_for(&sp);
    let tr = build_ut(&sp, &d.k_mat, band, 0.5, 16.0).unwrap();
    let conj = build_conjugate(&a, &tr, &sp, 0.5).unwrap();
    let ctx = IdentityContext { spectral: &sp, k_true: &d.k_mat, c: 2.0 };
    let r = verify_generator_identity(&ctx, &conj, &tr).unwrap();
    assert!(r.exact_holds, "{r:?}");
    assert!(r.generator_residual <= 1e-10 * r.k_h_norm, "{r:?}");
    assert!(r.paper_limit_residual > 0.0);
}

#[test]
fn group_commutator_matches_exact_correction() {
    let (h, a, sp) = critical_line(64);
    let d = extract_k(&h, &a, 2.0, 0.5, Some(&sp)).unwrap();
    let band = Band::default_for(&sp);
    let tr = build_ut(&sp, &d.k_mat, band, 0.5, 8.0).unwrap();
    let conj = build_conjugate(&a, &tr, &sp, 0.5).unwrap();
    let ctx = IdentityContext { spectral: &sp, k_true: &d.k_mat, c: 2.0 };
    for t in [0.5, 1.0, 2.0] {
        let r = verify_group_commutator(&ctx, &conj, &tr, t).unwrap();
        assert!(r.exact_form_residual <= 1e-9 * r.h_h_norm, "{r:?}");
        assert!(r.bound_holds);
    }
}

#[test]
fn closed_form_drift_matches_quadrature() {
    let (h, a, sp) = critical_line(32);
    let d = extract_k(&h, &a, 2.0, 0.5, Some(&sp)).unwrap();
    let band = Band::default_for(&sp);
    let tr = build_ut(&sp, &d.k_mat, band, 0.5, 2.0).unwrap();
    let q = build_ut_quadrature(&sp, &d.k_mat, band, 0.5, 2.0, 256).unwrap();
    let diff = spectral_norm(&(tr.u_t.dense().into_owned() - &*q.dense())).unwrap();
    assert!(diff <= 1e-8 * spectral_norm(&tr.u_t.dense()).unwrap());
}

#[test]
fn forced_zero_drift_leaves_discretization_remainder() {
    // With B_h = 0 the commutator [H, iA_h] still carries K_mat of the grid,
    // so the uncorrected group identity cannot hold; the corrected one must.
    let (h, a, sp) = critical_line(48);
    let d = extract_k(&h, &a, 2.0, 0.5, Some(&sp)).unwrap();
    let zero = HermitianOperator::zeros(Role::Remainder, 48, h.grid_hash());
    let band = Band::default_for(&sp);
    let tr = build_ut(&sp, &zero, band, 0.5, 4.0).unwrap();
    let conj = build_conjugate(&a, &tr, &sp, 0.5).unwrap();
    assert_eq!(max_abs(&conj.b_h.dense()), 0.0);
    let ctx = IdentityContext { spectral: &sp, k_true: &d.k_mat, c: 2.0 };
    let r = verify_group_commutator(&ctx, &conj, &tr, 1.0).unwrap();
    assert!(!r.uncorrected_holds);
    assert!(r.exact_form_residual <= 1e-9 * r.h_h_norm);
}

#[test]
fn remainder_fidelity_is_second_order() {
    let report = fidelity_ladder(&PotentialSpec::critical(1.0, 1), Geometry::Line1d, 10.0, &[127, 255, 511]).unwrap();
    assert!(report.second_order(), "{report:?}");
    let report = fidelity_ladder(&PotentialSpec::critical(1.0, 3), Geometry::Radial3d, 10.0, &[255, 511, 1023]).unwrap();
    assert!(report.second_order(), "{report:?}");
}

#[test]
fn free_spectrum_converges_at_second_order() {
    let l = 5.0;
    let errs: Vec<f64> = [63usize, 127, 255]
        .iter()
        .map(|&n| {
            let g = build_grid(Geometry::Line1d, n, l).unwrap();
            let sp = SpectralData::new(&assemble_hamiltonian(&g, &PotentialSpec::zero(1)).unwrap()).unwrap();
            let exact = (3.0 * std::f64::consts::PI / (2.0 * l)).powi(2);
            (sp.eigenvalues()[2] - exact).abs()
        })
        .collect();
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((3.5..=4.5).contains(&r), "ratio {r}");
    }
}

#[test]
fn functional_calculus_is_multiplicative() {
    let (_, _, sp) = critical_line(40);
    let f = |l: f64| (1.0 + l * l).powf(-0.25);
    let g = |l: f64| l / (1.0 + l);
    let fo = decaylab_core::matrix_function(&sp, Role::Generic, f).unwrap();
    let go = decaylab_core::matrix_function(&sp, Role::Generic, g).unwrap();
    let fg = decaylab_core::matrix_function(&sp, Role::Generic, |l| f(l) * g(l)).unwrap();
    let prod = fo.dense().dot(&*go.dense());
    assert!(max_abs(&(prod - &*fg.dense())) <= 1e-9 * max_abs(&fg.dense()));
}
