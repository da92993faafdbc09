//! Group laws, inversion, and the empirical Lipschitz and norm-equivalence
//! constants of composition near the identity.

use std::f64::consts::PI;

use bfamily::diagnostics::pushforward_norm_ratio;
use bfamily::spectral::hs_norm;
use bfamily::{compose_diffeo, compose_field, invert, Diffeomorphism, Field, Grid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const S: f64 = 2.0;

fn grid() -> Grid {
    Grid::new(PI, 128).unwrap()
}

/// Smooth displacement with random low modes, scaled to sup-derivative
/// `slope`.
fn random_displacement(rng: &mut ChaCha8Rng, g: Grid, modes: usize, slope: f64) -> Field {
    let c: Vec<(f64, f64)> = (0..modes)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let f = Field::from_fn(g, |x| {
        c.iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let k = (k + 1) as f64;
                (a * (k * x).cos() + b * (k * x).sin()) / (k * k)
            })
            .sum()
    });
    let fx = bfamily::spectral::derivative(&f, 1).unwrap();
    &f * (slope / fx.max_abs())
}

fn random_diffeo(rng: &mut ChaCha8Rng, g: Grid, slope: f64) -> Diffeomorphism {
    Diffeomorphism::new(random_displacement(rng, g, 4, slope)).unwrap()
}

fn diffeo_from(g: Grid, c: &[(f64, f64)]) -> Diffeomorphism {
    let f = Field::from_fn(g, |x| {
        c.iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let k = (k + 1) as f64;
                0.2 * (a * (k * x).cos() + b * (k * x).sin()) / (k * k)
            })
            .sum()
    });
    Diffeomorphism::new(f).unwrap()
}

fn small_coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn composition_is_associative(a in small_coeffs(), b in small_coeffs(), c in small_coeffs()) {
        let g = grid();
        let (p, q, r) = (diffeo_from(g, &a), diffeo_from(g, &b), diffeo_from(g, &c));
        let left = compose_diffeo(&compose_diffeo(&p, &q).unwrap(), &r).unwrap();
        let right = compose_diffeo(&p, &compose_diffeo(&q, &r).unwrap()).unwrap();
        prop_assert!((left.displacement() - right.displacement()).max_abs() <= 1e-8);
    }

    #[test]
    fn identity_is_two_sided(a in small_coeffs()) {
        let g = grid();
        let p = diffeo_from(g, &a);
        let id = Diffeomorphism::identity(g);
        prop_assert_eq!(compose_diffeo(&p, &id).unwrap(), p.clone());
        prop_assert_eq!(compose_diffeo(&id, &p).unwrap(), p);
    }

    #[test]
    fn inverse_cancels_on_both_sides(a in small_coeffs()) {
        let g = grid();
        let p = diffeo_from(g, &a);
        let inv = invert(&p).unwrap();
        let left = compose_diffeo(&p, &inv).unwrap();
        let right = compose_diffeo(&inv, &p).unwrap();
        prop_assert!(left.displacement().max_abs() <= 1e-8);
        prop_assert!(right.displacement().max_abs() <= 1e-8);
        let residual = inv
            .positions()
            .iter()
            .enumerate()
            .map(|(j, y)| (p.eval(*y) - g.x(j)).abs())
            .fold(0.0, f64::max);
        prop_assert!(residual <= 1e-10);
    }

    #[test]
    fn shifts_compose_additively(a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let g = grid();
        let ab = compose_diffeo(&Diffeomorphism::shift(g, a), &Diffeomorphism::shift(g, b)).unwrap();
        prop_assert!((ab.displacement() - &Field::constant(g, a + b)).max_abs() <= 1e-12);
    }
}

/// Max, median and min of a sample.
fn summary(mut v: Vec<f64>) -> (f64, f64, f64) {
    v.sort_by(f64::total_cmp);
    (v[v.len() - 1], v[v.len() / 2], v[0])
}

#[test]
fn composition_is_lipschitz_in_the_diffeomorphism() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ratios: Vec<f64> = (0..120)
        .map(|_| {
            let f = random_displacement(&mut rng, g, 6, 1.0);
            let p1 = random_diffeo(&mut rng, g, 0.3);
            let p2 = random_diffeo(&mut rng, g, 0.3);
            let lhs = hs_norm(
                &(&compose_field(&f, &p1).unwrap() - &compose_field(&f, &p2).unwrap()),
                S - 2.0,
            );
            let rhs =
                hs_norm(&f, S - 1.0) * hs_norm(&(p1.displacement() - p2.displacement()), S - 1.0);
            lhs / rhs
        })
        .collect();
    let (max, median, min) = summary(ratios);
    println!("composition Lipschitz ratio: max {max:.4e}, median {median:.4e}, min {min:.4e}");
    assert!(max.is_finite() && min > 0.0);
    assert!(
        max < 20.0 * median,
        "one constant should bound the whole sample"
    );
}

#[test]
fn inversion_is_lipschitz() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ratios: Vec<f64> = (0..120)
        .map(|_| {
            let p1 = random_diffeo(&mut rng, g, 0.3);
            let p2 = random_diffeo(&mut rng, g, 0.3);
            let (i1, i2) = (invert(&p1).unwrap(), invert(&p2).unwrap());
            let lhs = hs_norm(&(i1.displacement() - i2.displacement()), S - 1.0);
            lhs / hs_norm(&(p1.displacement() - p2.displacement()), S)
        })
        .collect();
    let (max, median, min) = summary(ratios);
    println!("inversion Lipschitz ratio: max {max:.4e}, median {median:.4e}, min {min:.4e}");
    assert!(max.is_finite() && min > 0.0);
    assert!(
        max < 20.0 * median,
        "one constant should bound the whole sample"
    );
}

#[test]
fn pushforward_norms_are_equivalent() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let phi = random_diffeo(&mut rng, g, 0.4);
    for b in [0.0, 2.0, 3.0] {
        let ratios: Vec<f64> = (0..100)
            .map(|_| {
                let y = random_displacement(&mut rng, g, 10, 1.0);
                pushforward_norm_ratio(&y, &phi, b, S).unwrap()
            })
            .collect();
        let (max, median, min) = summary(ratios);
        let c = max.max(1.0 / min);
        println!(
            "b = {b}: pushforward ratio in [{min:.4}, {max:.4}] (median {median:.4}), C = {c:.4}"
        );
        assert!(c.is_finite() && c < 10.0);
    }
}
