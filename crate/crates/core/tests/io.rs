use bfamily::diagnostics::conservation_residual;
use bfamily::dynamics::{solve_eulerian, solve_geodesic};
use bfamily::io::{
    conservation_csv, parse_diffeo_csv, parse_field_csv, read_field_csv, read_manifest,
    write_eulerian, write_lagrangian, Formulation,
};
use bfamily::{BParams, Diffeomorphism, Field, Grid, SolverConfig, Termination};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_csv_round_trips_exactly(
        values in prop::collection::vec(prop_oneof![-1e300..1e300f64, -1e-300..1e-300f64, -1.0..1.0f64], 16),
        l in 1e-3..1e3f64,
    ) {
        let g = Grid::new(l, 16).unwrap();
        let f = Field::new(g, values).unwrap();
        let back = parse_field_csv(&bfamily::io::field_csv(&f)).unwrap();
        prop_assert_eq!(back.grid(), f.grid());
        prop_assert_eq!(back.values(), f.values());
    }

    #[test]
    fn diffeo_csv_round_trips_exactly(amp in -0.9..0.9f64, k in 1..4u32) {
        let g = Grid::new(std::f64::consts::PI, 32).unwrap();
        let k = f64::from(k);
        let phi = Diffeomorphism::new(Field::from_fn(g, |x| amp / k * (k * x).sin())).unwrap();
        let back = parse_diffeo_csv(&bfamily::io::diffeo_csv(&phi)).unwrap();
        prop_assert_eq!(back.displacement().values(), phi.displacement().values());
    }
}

#[test]
fn trajectories_are_stored_with_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(20.0, 64).unwrap();
    let p = BParams::new(2.0, 2.0).unwrap();
    let cfg = SolverConfig::new(0.05, 0.5).unwrap().with_stride(5);
    let u0 = Field::from_fn(g, |x| 0.5 * (-(x * x) / 4.0).exp());

    let eul = solve_eulerian(&u0, &p, &cfg).unwrap();
    let m = write_eulerian(dir.path().join("eul"), &eul, "abc").unwrap();
    assert_eq!(read_manifest(dir.path().join("eul")).unwrap(), m);
    assert_eq!(m.formulation, Formulation::Eulerian);
    assert_eq!(m.termination, Termination::Completed);
    assert_eq!(m.snapshots.len(), 3);
    for (snap, u) in m.snapshots.iter().zip(&eul.states) {
        let back = read_field_csv(dir.path().join("eul").join(&snap.files[0])).unwrap();
        assert_eq!(&back, u);
    }

    let lag = solve_geodesic(&u0, &p, &cfg).unwrap();
    let m = write_lagrangian(dir.path().join("lag"), &lag, "abc").unwrap();
    assert_eq!(m.formulation, Formulation::Lagrangian);
    let last = m.snapshots.last().unwrap();
    let text = std::fs::read_to_string(dir.path().join("lag").join(&last.files[0])).unwrap();
    assert_eq!(&parse_diffeo_csv(&text).unwrap(), &lag.final_state().phi);
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("lag/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json["config"]["T"], 0.5);
    assert_eq!(json["params"]["b"], 2.0);
    assert_eq!(json["termination"], "completed");
    assert_eq!(json["config_hash"], "abc");

    let rep = conservation_residual(&lag, &p, true).unwrap();
    let csv = conservation_csv(&rep);
    assert!(csv.starts_with("t,res_hs2,res_sup,relative\n"));
    assert_eq!(csv.lines().count(), rep.times.len() + 1);
}
