use grushin::propagators::{evolve, PropagatorSpec};
use grushin::runner::{self, BasisCheck, Experiment, Flags, NlsRun, RunConfig};
use grushin::spectral_field::{io, Geometry, SpectralField};
use grushin::nls::NlsParams;
use rand::SeedableRng;

fn run_in(dir: &std::path::Path, seed: u64, exps: Vec<Experiment>) -> runner::RunOutcome {
    let flags = Flags { seed: Some(seed), out_dir: Some(dir.to_path_buf()), threads: None };
    runner::run(&RunConfig::from_flags(&flags, exps).unwrap()).unwrap()
}

#[test]
fn saved_field_evolves_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let geom = Geometry::euclidean_box(2, 1, 20.0, 6).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let u = SpectralField::random(geom, 4, 4, 6, &mut rng);
    let p = tmp.path().join("u.field");
    io::save(&u, &p).unwrap();
    let v = io::load(&p).unwrap();
    assert_eq!(u, v);
    let spec = PropagatorSpec::new(1.5, 0.7);
    assert_eq!(evolve(&u, &spec).unwrap(), evolve(&v, &spec).unwrap());
}

#[test]
fn csv_floats_round_trip_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = Experiment::BasisCheck(BasisCheck { m_max: 12, ..Default::default() });
    let out = run_in(tmp.path(), 0, vec![exp]);
    assert!(out.failures.is_empty());
    let summary = &out.manifest.experiments[0].summary;
    assert_eq!(summary["passed"], true);
    let mut r = csv::Reader::from_path(tmp.path().join("00-basis-check/basis.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["m", "multiplicity", "eigenvalue", "orthonormality_defect", "eigen_residual"]);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 13);
    // eigenvalue 2m+1 written with 17 significant digits
    assert_eq!(&rows[3][2], "7.0000000000000000e0");
    let worst: f64 = rows.iter().map(|x| x[4].parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert_eq!(worst, summary["eigen_residual"].as_f64().unwrap());
}

#[test]
fn nls_checkpoint_matches_ledger() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = Experiment::NlsRun(NlsRun {
        geometry: Geometry::torus(1, 2, 2).unwrap(),
        params: NlsParams { kappa: 3, sigma: 1.5, horizon: 0.05, ..Default::default() },
        long_time_factor: 10,
        ..Default::default()
    });
    let out = run_in(tmp.path(), 8, vec![exp]);
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    let dir = tmp.path().join("00-nls-run");
    let last = io::load(&dir.join("final.field")).unwrap();
    let mut r = csv::Reader::from_path(dir.join("ledger.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    let mass: f64 = rows.last().unwrap()[1].parse().unwrap();
    assert_eq!(mass, last.l2_norm_sqr());
    let s = &out.manifest.experiments[0].summary;
    assert_eq!(s["regime"], "Covered");
    assert_eq!(s["long_time"]["bounded"], true);
    assert!(s["mass_drift"].as_f64().unwrap() < 1e-12);
}

#[test]
fn seed_changes_random_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = || vec![Experiment::default_of("decompose").unwrap()];
    run_in(&tmp.path().join("a"), 1, exp());
    run_in(&tmp.path().join("b"), 2, exp());
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("00-decompose/modes.csv")).unwrap();
    assert_ne!(read("a"), read("b"));
}
