use std::f64::consts::PI;

use bfamily::spectral::{
    dealias, derivative, helmholtz, helmholtz_inverse, homogeneous_hs_norm, hs_norm, multiply,
    slobodeckij_seminorm,
};
use bfamily::{Error, Field, Grid};
use proptest::prelude::*;

/// Random trigonometric polynomial with modes `1..=kmax` on `[-pi, pi)`.
fn trig_poly(g: Grid, coeffs: &[(f64, f64)]) -> Field {
    Field::from_fn(g, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let k = (k + 1) as f64;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum()
    })
}

fn coeffs(max_modes: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=max_modes)
}

fn samples(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

#[test]
fn grid_construction_examples() {
    let g = Grid::new(PI, 16).unwrap();
    assert_eq!(g.spacing(), 2.0 * PI / 16.0);
    let g = Grid::new(20.0, 1024).unwrap();
    assert_eq!(g.spacing(), 40.0 / 1024.0);
    assert_eq!(g.x(0), -20.0);
    assert!((g.x(1023) - (20.0 - g.spacing())).abs() < 1e-14);
    assert!(matches!(
        Grid::new(20.0, 1000),
        Err(Error::InvalidPointCount(1000))
    ));
    assert!(Grid::new(20.0, 8).is_err());
    assert!(Grid::new(0.0, 64).is_err());
}

#[test]
fn single_mode_norms() {
    for (l, k) in [(PI, 3.0), (20.0, 7.0 * PI / 20.0)] {
        let g = Grid::new(l, 128).unwrap();
        let f = Field::from_fn(g, |x| (k * x).sin());
        for s in [-1.0, 0.0, 0.5, 2.0] {
            let expect = (l * (1.0 + k * k).powf(s)).sqrt();
            assert!((hs_norm(&f, s) / expect - 1.0).abs() < 1e-12);
            let expect = (l * k.powf(2.0 * s)).sqrt();
            assert!((homogeneous_hs_norm(&f, s) / expect - 1.0).abs() < 1e-12);
        }
        assert_eq!(homogeneous_hs_norm(&Field::constant(g, 2.5), 0.7), 0.0);
    }
}

#[test]
fn sine_product_without_dealiasing() {
    let g = Grid::new(PI, 32).unwrap();
    let sin = Field::from_fn(g, f64::sin);
    let got = multiply(&sin, &sin, false).unwrap();
    let expect = Field::from_fn(g, |x| 0.5 * (1.0 - (2.0 * x).cos()));
    assert!((&got - &expect).max_abs() < 1e-12);
    let one = Field::constant(g, 1.0);
    assert_eq!(multiply(&one, &sin, false).unwrap(), sin);
}

#[test]
fn slobodeckij_of_constant_and_bad_order() {
    let g = Grid::new(20.0, 256).unwrap();
    assert_eq!(
        slobodeckij_seminorm(&Field::constant(g, 3.0), 0.5).unwrap(),
        0.0
    );
    assert!(slobodeckij_seminorm(&Field::zeros(g), 1.0).is_err());
    assert!(slobodeckij_seminorm(&Field::zeros(g), 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip(values in samples(64)) {
        let g = Grid::new(3.0, 64).unwrap();
        let f = Field::new(g, values).unwrap();
        let back = f.spectrum().to_field();
        prop_assert!((&back - &f).max_abs() <= 1e-12 * f.max_abs().max(1e-300));
    }

    #[test]
    fn spectrum_is_conjugate_symmetric(values in samples(32)) {
        let g = Grid::new(1.0, 32).unwrap();
        let spec = Field::new(g, values).unwrap().spectrum();
        for k in 1..16i64 {
            let (a, b) = (spec.mode(k), spec.mode(-k));
            prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
        }
        prop_assert!(spec.mode(0).im.abs() < 1e-12);
    }

    #[test]
    fn hs_norm_is_monotone_in_s(values in samples(64), s1 in -3.0..3.0f64, gap in 0.0..2.0f64) {
        let g = Grid::new(5.0, 64).unwrap();
        let f = Field::new(g, values).unwrap();
        prop_assert!(hs_norm(&f, s1) <= hs_norm(&f, s1 + gap) * (1.0 + 1e-14));
    }

    #[test]
    fn parseval(values in samples(128), l in 0.5..50.0f64) {
        let g = Grid::new(l, 128).unwrap();
        let f = Field::new(g, values).unwrap();
        let direct = (g.spacing() * f.values().iter().map(|v| v * v).sum::<f64>()).sqrt();
        prop_assert!((hs_norm(&f, 0.0) - direct).abs() <= 1e-12 * direct.max(1e-300));
        prop_assert!((f.l2_norm() - direct).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn repeated_derivatives_agree(c in coeffs(10)) {
        let g = Grid::new(PI, 64).unwrap();
        let f = trig_poly(g, &c);
        let d11 = derivative(&derivative(&f, 1).unwrap(), 1).unwrap();
        let d2 = derivative(&f, 2).unwrap();
        prop_assert!((&d11 - &d2).max_abs() <= 1e-10 * d2.max_abs().max(1.0));
        let d3 = derivative(&f, 3).unwrap();
        let d21 = derivative(&d2, 1).unwrap();
        prop_assert!((&d21 - &d3).max_abs() <= 1e-10 * d3.max_abs().max(1.0));
    }

    #[test]
    fn helmholtz_pair_inverts(values in samples(64)) {
        let g = Grid::new(4.0, 64).unwrap();
        let f = Field::new(g, values).unwrap();
        let there_and_back = helmholtz(&helmholtz_inverse(&f));
        prop_assert!((&there_and_back - &f).l2_norm() <= 1e-10 * f.l2_norm().max(1e-300));
    }

    #[test]
    fn dealias_is_a_projection(values in samples(64)) {
        let g = Grid::new(2.0, 64).unwrap();
        let f = Field::new(g, values).unwrap();
        let once = dealias(&f);
        let twice = dealias(&once);
        prop_assert!((&once - &twice).max_abs() <= 1e-12 * f.max_abs().max(1e-300));
        prop_assert!(once.l2_norm() <= f.l2_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn norms_are_absolutely_homogeneous(values in samples(64), a in -5.0..5.0f64, s in -1.0..2.0f64) {
        let g = Grid::new(6.0, 64).unwrap();
        let f = Field::new(g, values).unwrap();
        let scaled = &f * a;
        prop_assert!((hs_norm(&scaled, s) - a.abs() * hs_norm(&f, s)).abs() <= 1e-12 * hs_norm(&f, s) * (1.0 + a.abs()));
    }
}
