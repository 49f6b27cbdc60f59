//! Basis, quadrature, transform, and norm tests against independent oracles.

mod common;

use std::sync::Arc;

use approx::assert_relative_eq;
use proptest::prelude::*;

use spde_tamed::spectral::{
    analyze, BasisId, Field, GalerkinState, ModeTable, ModelKind, Modes, PhysicalGrid,
    SpectralBasis,
};
use spde_tamed::verify::{gram_defect, gram_matrix};

fn burgers_basis() -> SpectralBasis {
    SpectralBasis::new(ModelKind::Burgers, 0.0).unwrap()
}

#[test]
fn eigenvalues_match_closed_forms() {
    let b = burgers_basis();
    assert_relative_eq!(
        b.eigenvalue(BasisId::Sine { n: 1 }).unwrap(),
        -9.869604401089358,
        max_relative = 1e-15
    );
    assert_relative_eq!(
        b.eigenvalue(BasisId::Sine { n: 3 }).unwrap(),
        -88.82643960980423,
        max_relative = 1e-15
    );
    let ks = SpectralBasis::new(ModelKind::KuramotoSivashinsky, 1.3).unwrap();
    assert_relative_eq!(
        ks.eigenvalue(BasisId::Fourier { k: 0 }).unwrap(),
        -1.3,
        max_relative = 1e-15
    );
    assert_relative_eq!(
        ks.eigenvalue(BasisId::Fourier { k: 1 }).unwrap(),
        -1520.3670389396812,
        max_relative = 1e-14
    );
    assert_relative_eq!(
        ks.eigenvalue(BasisId::Fourier { k: -2 }).unwrap(),
        -24780.113634287187,
        max_relative = 1e-14
    );
    let ns = SpectralBasis::new(ModelKind::NavierStokes2d, 0.9).unwrap();
    assert_relative_eq!(
        ns.eigenvalue(BasisId::Mode2d { k: 1, l: 0, sigma: 0 }).unwrap(),
        -40.37841760435743,
        max_relative = 1e-15
    );
    assert_relative_eq!(
        ns.eigenvalue(BasisId::Mode2d { k: 1, l: 1, sigma: 0 }).unwrap(),
        -79.85683520871487,
        max_relative = 1e-15
    );
    assert_relative_eq!(
        ns.eigenvalue(BasisId::Mode2d { k: 0, l: 0, sigma: 1 }).unwrap(),
        -0.9,
        max_relative = 1e-15
    );
}

#[test]
fn invalid_mode_ids_are_rejected() {
    let b = burgers_basis();
    assert!(b.check_id(BasisId::Sine { n: 0 }).is_err());
    assert!(b.check_id(BasisId::Fourier { k: 1 }).is_err());
    let ns = SpectralBasis::new(ModelKind::NavierStokes2d, 1.0).unwrap();
    assert!(ns.check_id(BasisId::Mode2d { k: 1, l: 0, sigma: 1 }).is_err());
    assert!(ns.check_id(BasisId::Mode2d { k: 0, l: 0, sigma: 1 }).is_ok());
    assert!(SpectralBasis::new(ModelKind::Burgers, 0.5).is_err());
    assert!(SpectralBasis::new(ModelKind::KuramotoSivashinsky, 0.0).is_err());
}

#[test]
fn canonical_order_is_ascending_eigenvalue_magnitude() {
    for dm in [common::burgers(9), common::ks(1.3, 4), common::ns(0.9, 2)] {
        let modes = dm.modes();
        let lams = modes.abs_eigenvalues();
        for pair in lams.windows(2) {
            assert!(pair[0] <= pair[1], "order violated: {pair:?}");
        }
        for (i, &id) in modes.ids().iter().enumerate() {
            assert_eq!(modes.index_of(id), Some(i));
        }
    }
    // NS constants: the second constant mode ties with the first and the
    // id order breaks the tie.
    let ns = SpectralBasis::new(ModelKind::NavierStokes2d, 0.9).unwrap();
    let modes = ns.modes_up_to(1).unwrap();
    assert_eq!(modes.ids()[0], BasisId::Mode2d { k: 0, l: 0, sigma: 0 });
    assert_eq!(modes.ids()[1], BasisId::Mode2d { k: 0, l: 0, sigma: 1 });
}

#[test]
fn mode_tables_are_orthonormal_under_grid_quadrature() {
    for (dm, label) in [
        (common::burgers(16), "burgers"),
        (common::ks(1.0, 8), "ks"),
        (common::ns(1.0, 3), "ns2d"),
    ] {
        let gram = gram_matrix(dm.table());
        let defect = gram_defect(&gram, dm.modes().len());
        assert!(defect <= 1e-10, "{label}: gram defect {defect}");
    }
}

#[test]
fn corrupted_mode_table_is_caught_by_the_orthonormality_check() {
    let dm = common::burgers(8);
    let mut gram = gram_matrix(dm.table());
    let n = dm.modes().len();
    assert!(gram_defect(&gram, n) <= 1e-10);
    // A corrupted diagonal entry (for example a wrong eigenvalue table
    // rescaling one row) must be reported, not absorbed.
    gram[3 * n + 3] = 1.07;
    assert!(gram_defect(&gram, n) > 1e-2);
}

#[test]
fn constant_field_sine_series_matches_closed_form() {
    let dm = common::burgers(6);
    let grid = dm.grid().clone();
    let mut field = Field::zeros(grid, 1, Some(0));
    field.values_mut().fill(1.0);
    let x = dm.table().analyze(&field).unwrap();
    let expected = [
        0.9003163161571062,  // 2 sqrt(2) / pi
        0.0,
        0.3001054387190354,  // 2 sqrt(2) / (3 pi)
        0.0,
        0.18006326323142124, // 2 sqrt(2) / (5 pi)
        0.0,
    ];
    for (n, want) in (1..=6).zip(expected) {
        let got = x.coeff(BasisId::Sine { n });
        assert!(
            (got - want).abs() <= 1e-10,
            "sine({n}): got {got}, want {want}"
        );
    }
}

#[test]
fn half_range_quadrature_is_positive_and_exact() {
    for band in [1u32, 2, 5, 16, 48] {
        let grid = PhysicalGrid::for_integrand_band(ModelKind::Burgers, band).unwrap();
        assert_eq!(grid.exact_freq(), band);
        assert!(grid.weights().iter().all(|w| *w > 0.0), "band {band}");
        let total: f64 = grid.weights().iter().sum();
        assert!((total - 1.0).abs() <= 1e-12, "band {band}: sum {total}");
        for q in 1..=band {
            let qf = f64::from(q);
            let sine: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|p| (qf * std::f64::consts::PI * p[0]).sin())
                .collect();
            let cosine: Vec<f64> = grid
                .nodes()
                .iter()
                .map(|p| (qf * std::f64::consts::PI * p[0]).cos())
                .collect();
            let want_sin = if q % 2 == 1 {
                2.0 / (qf * std::f64::consts::PI)
            } else {
                0.0
            };
            let got_sin = grid.integrate(&sine).unwrap();
            let got_cos = grid.integrate(&cosine).unwrap();
            assert!(
                (got_sin - want_sin).abs() <= 1e-10,
                "band {band} q {q}: sine moment {got_sin} vs {want_sin}"
            );
            assert!(
                got_cos.abs() <= 1e-10,
                "band {band} q {q}: cosine moment {got_cos}"
            );
        }
    }
}

#[test]
fn periodic_quadrature_is_exact_for_resolved_frequencies() {
    let grid = PhysicalGrid::for_integrand_band(ModelKind::KuramotoSivashinsky, 6).unwrap();
    assert_eq!(grid.axis_len(), 14);
    assert_eq!(grid.exact_freq(), 13);
    for q in 1..=13u32 {
        let vals: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|p| (2.0 * std::f64::consts::PI * f64::from(q) * p[0]).cos())
            .collect();
        let got = grid.integrate(&vals).unwrap();
        assert!(got.abs() <= 1e-13, "q {q}: {got}");
    }
}

#[test]
fn linf_embedding_factor_matches_the_burgers_closed_form() {
    let dm = common::burgers(8);
    let mut r = common::rng(11);
    for _ in 0..20 {
        let x = common::random_state(dm.modes(), &mut r, 1.5);
        let bound = x.linf_bound(0.5).unwrap();
        let hnorm = x.hnorm(0.5);
        // sup|h| tail factor: sqrt(2) * (pi^-2 zeta(2))^(1/2) = 1/sqrt(3).
        assert_relative_eq!(bound, hnorm * 0.5773502691896258, max_relative = 1e-12);
    }
}

#[test]
fn linf_bound_dominates_dense_grid_sup() {
    let mut r = common::rng(12);
    for dm in [common::burgers(8), common::ks(1.3, 4), common::ns(0.9, 2)] {
        let rho = dm.spec().gamma();
        for _ in 0..10 {
            let x = common::random_state(dm.modes(), &mut r, 2.0);
            let bound = x.linf_bound(rho).unwrap();
            let dense = common::dense_max_abs(&x);
            assert!(
                dense <= bound * (1.0 + 1e-9),
                "{}: dense {dense} > bound {bound}",
                dm.spec().kind()
            );
        }
    }
}

#[test]
fn hnorm_matches_direct_eigenvalue_sum() {
    let mut r = common::rng(13);
    for dm in [common::burgers(8), common::ks(1.3, 4), common::ns(0.9, 2)] {
        for rho in [0.0, 0.25, 0.5, 1.0] {
            let x = common::random_state(dm.modes(), &mut r, 1.0);
            assert_relative_eq!(
                x.hnorm(rho),
                common::hnorm_oracle(&x, rho),
                max_relative = 1e-12
            );
        }
    }
}

#[test]
fn parseval_identity_holds_on_the_grid() {
    let mut r = common::rng(14);
    for dm in [common::burgers(16), common::ks(1.0, 8), common::ns(1.0, 3)] {
        for _ in 0..10 {
            let x = common::random_state(dm.modes(), &mut r, 3.0);
            let f = dm.table().synthesize(&x).unwrap();
            let sq = dm.grid().integrate(&f.sq_len_per_node()).unwrap();
            let h0 = x.hnorm(0.0);
            assert_relative_eq!(sq, h0 * h0, max_relative = 1e-11, epsilon = 1e-12);
        }
    }
}

#[test]
fn semigroup_is_identity_at_zero_and_rejects_negative_times() {
    let dm = common::ks(1.3, 4);
    let mut r = common::rng(15);
    let x = common::random_state(dm.modes(), &mut r, 1.0);
    let y = x.semigroup_apply(0.0).unwrap();
    assert_eq!(x.coeffs(), y.coeffs());
    assert!(x.semigroup_apply(-1e-9).is_err());
}

#[test]
fn analyze_rejects_band_deficient_grids() {
    let basis = SpectralBasis::new(ModelKind::KuramotoSivashinsky, 1.0).unwrap();
    let modes = basis.modes_up_to(4).unwrap();
    // exact through frequency 9; products with the mode frequencies 4 fit
    // only if the field band is <= 5.
    let grid = Arc::new(PhysicalGrid::for_integrand_band(ModelKind::KuramotoSivashinsky, 4).unwrap());
    let table = ModeTable::new(modes, grid.clone()).unwrap();
    let ok = Field::zeros(grid.clone(), 1, Some(5));
    assert!(table.analyze(&ok).is_ok());
    let too_wide = Field::zeros(grid.clone(), 1, Some(6));
    assert!(table.analyze(&too_wide).is_err());
    let foreign = Arc::new(PhysicalGrid::for_integrand_band(ModelKind::KuramotoSivashinsky, 4).unwrap());
    let other = Field::zeros(foreign, 1, Some(1));
    assert!(table.analyze(&other).is_err());
}

#[test]
fn projection_truncates_and_embeds() {
    let big = common::burgers(8);
    let small = common::burgers(4);
    let mut r = common::rng(16);
    let x = common::random_state(big.modes(), &mut r, 1.0);
    let down = x.project(small.modes());
    for &id in small.modes().ids() {
        assert_eq!(down.coeff(id), x.coeff(id));
    }
    let up = down.project(big.modes());
    for &id in big.modes().ids() {
        let want = if small.modes().contains(id) { x.coeff(id) } else { 0.0 };
        assert_eq!(up.coeff(id), want);
    }
}

#[test]
fn divergence_of_velocity_modes_vanishes_pointwise() {
    let basis = SpectralBasis::new(ModelKind::NavierStokes2d, 1.0).unwrap();
    let modes = basis.modes_up_to(8).unwrap();
    let samples = 17;
    let mut worst = 0.0f64;
    for &id in modes.ids() {
        for a in 0..samples {
            for b in 0..samples {
                let p = [a as f64 / samples as f64, b as f64 / samples as f64];
                let dx = basis.eval_deriv(id, 0, p);
                let dy = basis.eval_deriv(id, 1, p);
                worst = worst.max((dx[0] + dy[1]).abs());
            }
        }
    }
    assert!(worst <= 1e-10, "divergence {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_roundtrip_recovers_coefficients(
        seed in 0u64..1_000_000,
        cutoff in 1u32..8,
        kind in prop::sample::select(vec![
            ModelKind::Burgers,
            ModelKind::KuramotoSivashinsky,
            ModelKind::NavierStokes2d,
        ]),
    ) {
        let eta = if kind == ModelKind::Burgers { 0.0 } else { 1.0 };
        let basis = SpectralBasis::new(kind, eta).unwrap();
        let cutoff = if kind == ModelKind::NavierStokes2d { 1 + cutoff % 3 } else { cutoff };
        let modes = basis.modes_up_to(cutoff).unwrap();
        let mut r = common::rng(seed);
        let x = common::random_state(&modes, &mut r, 10.0);
        let grid = Arc::new(
            PhysicalGrid::for_integrand_band(kind, 2 * modes.max_freq().max(1)).unwrap(),
        );
        let table = ModeTable::new(modes.clone(), grid).unwrap();
        let field = table.synthesize(&x).unwrap();
        let back = table.analyze(&field).unwrap();
        prop_assert!(common::max_rel_diff(back.coeffs(), x.coeffs()) <= 1e-10);
    }

    #[test]
    fn state_construction_rejects_bad_coefficients(
        len in 0usize..6,
    ) {
        let basis = SpectralBasis::new(ModelKind::Burgers, 0.0).unwrap();
        let modes = basis.modes_up_to(4).unwrap();
        let coeffs = vec![0.0; len];
        let ok = GalerkinState::from_coeffs(modes.clone(), coeffs).is_ok();
        prop_assert_eq!(ok, len == modes.len());
        let mut bad = vec![0.0; modes.len()];
        bad[0] = f64::NAN;
        prop_assert!(GalerkinState::from_coeffs(modes, bad).is_err());
    }
}

#[test]
fn one_shot_analyze_matches_table_route() {
    let dm = common::burgers(6);
    let mut r = common::rng(17);
    let x = common::random_state(dm.modes(), &mut r, 1.0);
    let field = dm.table().synthesize(&x).unwrap();
    let a = analyze(&field, dm.modes()).unwrap();
    let b = dm.table().analyze(&field).unwrap();
    assert_eq!(a.coeffs(), b.coeffs());
}

#[test]
fn mode_set_construction_sorts_and_validates() {
    let basis = burgers_basis();
    let modes = Modes::new(
        basis,
        vec![BasisId::Sine { n: 3 }, BasisId::Sine { n: 1 }],
    )
    .unwrap();
    assert_eq!(modes.ids()[0], BasisId::Sine { n: 1 });
    assert_eq!(modes.max_freq(), 3);
    let dup = Modes::new(basis, vec![BasisId::Sine { n: 2 }, BasisId::Sine { n: 2 }]);
    assert!(dup.is_err());
    assert!(Modes::new(basis, vec![BasisId::Fourier { k: 1 }]).is_err());
    assert!(Modes::new(basis, vec![]).unwrap().is_empty());
}
