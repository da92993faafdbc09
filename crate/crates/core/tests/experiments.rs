use bfamily::experiments::{
    estimate_probe_geometry, nonuniformity_experiment, scaling_check, time_one_map,
    NonUniformityConfig,
};
use bfamily::spectral::hs_norm;
use bfamily::{BParams, Field, Grid, SolverConfig};

fn gaussian(g: Grid, amp: f64, center: f64, width: f64) -> Field {
    Field::from_fn(g, |x| amp * (-((x - center) / width).powi(2)).exp())
}

fn config(u0: Field, v: Field, n_values: Vec<usize>) -> NonUniformityConfig {
    NonUniformityConfig {
        u0,
        v,
        params: BParams::new(2.0, 2.0).unwrap(),
        radius: 6.0,
        n_values,
        solver: SolverConfig::new(1e-2, 1.0).unwrap(),
        eps_dexp: 1e-3,
    }
}

#[test]
fn probe_geometry_at_the_origin() {
    let g = Grid::new(10.0, 256).unwrap();
    let v = gaussian(g, 0.8, 1.5, 1.5);
    let cfg = config(Field::zeros(g), v.clone(), vec![1]);
    let geo = estimate_probe_geometry(&cfg).unwrap();
    // dexp at the origin is the identity, so x0 sits on the peak of v.
    assert!((geo.x0_est - 1.5).abs() <= g.spacing());
    let expect = v.max_abs() / hs_norm(&v, 2.0);
    assert!(
        (geo.m_est / expect - 1.0).abs() < 1e-3,
        "{} vs {expect}",
        geo.m_est
    );
    assert_eq!(geo.l_est, 1.5);
}

#[test]
fn probe_slope_is_stable_under_step_halving() {
    let g = Grid::new(10.0, 256).unwrap();
    let u0 = gaussian(g, 0.3, -2.0, 2.0);
    let v = gaussian(g, 0.8, 1.0, 1.5);
    let mut cfg = config(u0, v, vec![1]);
    cfg.eps_dexp = 2e-2;
    let coarse = estimate_probe_geometry(&cfg).unwrap();
    cfg.eps_dexp = 1e-2;
    let fine = estimate_probe_geometry(&cfg).unwrap();
    assert!((coarse.m_est / fine.m_est - 1.0).abs() < 0.05);
    assert_eq!(coarse.x0_index, fine.x0_index);
}

#[test]
fn small_experiment_has_the_designed_structure() {
    let g = Grid::new(10.0, 1024).unwrap();
    let mut cfg = config(
        gaussian(g, 0.2, -3.0, 2.0),
        gaussian(g, 2.5, 0.0, 2.0),
        vec![1, 2, 4, 8],
    );
    cfg.solver = SolverConfig::new(5e-3, 1.0).unwrap();
    let report = nonuniformity_experiment(&cfg).unwrap();
    let rows = &report.rows;
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[1].r_n < w[0].r_n));
    for r in rows {
        let scaled = r.r_n * r.n as f64;
        assert!((scaled / (rows[0].r_n) - 1.0).abs() < 1e-14);
    }
    assert!(rows.windows(2).all(|w| w[1].input_dist < w[0].input_dist));
    assert!(report.input_distance_exact(1e-12));
    // The coarse grid resolves the first bumps only; the rest are flagged.
    assert!(rows[0].resolved_ok && rows[1].resolved_ok);
    assert!(!rows[3].resolved_ok && rows[3].output_dist.is_nan());
    assert!(report.witness_bound_holds());
    assert!(report.disjoint_holds());
    assert!(report.separation_persists(0.1));
    assert_eq!(report.config_hash, cfg.hash());
    assert_eq!(report.config_hash.len(), 64);

    // Fully deterministic.
    let again = nonuniformity_experiment(&cfg).unwrap();
    assert_eq!(format!("{report:?}"), format!("{again:?}"));
}

#[test]
fn config_hash_tracks_inputs() {
    let g = Grid::new(10.0, 64).unwrap();
    let a = config(Field::zeros(g), gaussian(g, 1.0, 0.0, 2.0), vec![1, 2]);
    let mut b = a.clone();
    assert_eq!(a.hash(), b.hash());
    b.radius = 5.0;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn time_one_map_is_continuous() {
    let g = Grid::new(20.0, 256).unwrap();
    let p = BParams::new(2.0, 2.0).unwrap();
    let cfg = SolverConfig::new(1e-2, 1.0).unwrap();
    let u0 = gaussian(g, 0.5, 0.0, 2.0);
    let base = time_one_map(&u0, &p, &cfg).unwrap();
    let delta = gaussian(g, 1.0, 1.0, 1.0);
    let dists: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| {
            let out = time_one_map(&u0.axpy(eps, &delta), &p, &cfg).unwrap();
            hs_norm(&(&out - &base), 2.0)
        })
        .collect();
    assert!(dists.windows(2).all(|w| w[1] < 0.2 * w[0]), "{dists:?}");
    assert!(dists[3] < 1e-3);
}

#[test]
fn scaling_law_holds_on_a_coarse_grid() {
    let g = Grid::new(20.0, 256).unwrap();
    let p = BParams::new(3.0, 2.0).unwrap();
    let cfg = SolverConfig::new(1e-2, 0.5).unwrap();
    let u0 = gaussian(g, 0.5, 0.0, 2.0);
    let res = scaling_check(&u0, 2.0, 0.5, &p, &cfg).unwrap();
    assert!(res <= 1e-10, "{res}");
}
