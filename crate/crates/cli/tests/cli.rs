use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use quasitraj_cli::run::{self, OUTPUT_DIR_ENV, TRAJECTORY_HEADER};
use quasitraj_cli::scenario::{
    GridSpec, OracleSpec, PathintSpec, PotentialSpec, ResonanceName, SolverSpec, Term, VariantName,
};
use quasitraj_cli::{catalog, Scenario};

const BIN: &str = env!("CARGO_BIN_EXE_quasitraj");

fn harmonic_scenario() -> Scenario {
    Scenario {
        name: Some("harmonic".into()),
        note: None,
        variant: VariantName::Amplitude,
        x0: 0.0,
        seed: 0.0,
        output: None,
        potential: PotentialSpec { mass: 1.0, omega: 3.0, bias: 1.0, drive_amp: 0.0, drive_freq: 0.0, terms: vec![] },
        grid: GridSpec { t_min: 0.01, t_max: 0.45, steps: 45 },
        solver: SolverSpec::default(),
        oracle: OracleSpec::default(),
        pathint: PathintSpec::default(),
    }
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn quasitraj(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(BIN).args(args).env(OUTPUT_DIR_ENV, out).output().unwrap()
}

fn finite() -> impl Strategy<Value = f64> {
    -1e3f64..1e3
}

prop_compose! {
    fn scenarios()(
        variant in prop_oneof![Just(VariantName::Density), Just(VariantName::GeneralBvp)],
        x0 in finite(), seed in finite(),
        mass in 0.1f64..10.0, omega in 0.1f64..50.0, bias in finite(), amp in finite(), freq in 0.0f64..30.0,
        cubic in proptest::option::of(finite()),
        t_min in 1e-3f64..1.0, span in 1e-3f64..5.0, steps in 2usize..500,
        tol in 1e-14f64..1e-6, limit in any::<bool>(),
        hbar in 1e-4f64..1e-1, half_width in proptest::option::of(1.0f64..100.0),
        name in proptest::option::of("[a-z][a-z0-9-]{0,12}"),
    ) -> Scenario {
        Scenario {
            name,
            note: None,
            variant,
            x0,
            seed,
            output: None,
            potential: PotentialSpec {
                mass, omega, bias, drive_amp: amp, drive_freq: freq,
                terms: cubic.map(|c| vec![Term { degree: 3, coeff: c }]).unwrap_or_default(),
            },
            grid: GridSpec { t_min, t_max: t_min + span, steps },
            solver: SolverSpec {
                tolerance: tol,
                resonance: if limit { ResonanceName::Limit } else { ResonanceName::Reject },
                ..SolverSpec::default()
            },
            oracle: OracleSpec { hbar, half_width, ..OracleSpec::default() },
            pathint: PathintSpec::default(),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scenario_round_trips_through_a_file(s in scenarios()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        s.save(&path).unwrap();
        prop_assert_eq!(Scenario::load(&path).unwrap(), s);
    }
}

#[test]
fn every_example_round_trips() {
    for id in catalog::IDS {
        let s = catalog::example(id).unwrap();
        assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s, "{id}");
    }
}

#[test]
fn harmonic_csv_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    let report = run::run(&harmonic_scenario()).unwrap();
    let (header, rows) = run::trajectory_rows(&report);
    run::write_rows(&path, &header, &rows).unwrap();
    let (header, rows) = read_csv(&path);
    assert_eq!(header, TRAJECTORY_HEADER);
    assert_eq!(rows.len(), 45);
    for row in rows {
        let t: f64 = row[0].parse().unwrap();
        let lambda: f64 = row[1].parse().unwrap();
        let exact = (1.0 / 9.0) * (1.0 - 1.0 / (3.0 * t).cos());
        assert_eq!(row[4], "Ok");
        assert!((lambda - exact).abs() < 1e-10, "T = {t}");
    }
}

#[test]
fn example_2_1_properties() {
    let s = catalog::example("cubic-2.1").unwrap();
    assert_eq!((s.grid.t_min, s.grid.t_max), (0.01, 0.3));
    let report = run::run(&s).unwrap();
    assert!(report.counts.ok_fraction() >= 0.9);
    for smp in &report.trajectory.samples {
        if smp.status == quasitraj_core::master::Status::Ok {
            assert!((smp.omega_eff * smp.t).cos().abs() >= 1e-3);
        }
    }
}

#[test]
fn binary_runs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = quasitraj(&["example", "dens-2.5.3"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let fa = std::fs::read(a.path().join("dens-2.5.3.csv")).unwrap();
    let fb = std::fs::read(b.path().join("dens-2.5.3.csv")).unwrap();
    assert!(!fa.is_empty());
    assert_eq!(fa, fb);
}

#[test]
fn emitted_scenario_is_the_catalog_entry() {
    let dir = tempfile::tempdir().unwrap();
    let out = quasitraj(&["example", "dwell-2.2", "--emit-scenario"], dir.path());
    assert!(out.status.success());
    let parsed = Scenario::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(parsed, catalog::example("dwell-2.2").unwrap());
}

#[test]
fn solve_writes_into_override_dir_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("h.toml");
    harmonic_scenario().save(&file).unwrap();
    let out_dir = dir.path().join("out");
    let out = quasitraj(&["solve", file.to_str().unwrap()], &out_dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, _) = read_csv(&out_dir.join("harmonic.csv"));
    assert_eq!(header, TRAJECTORY_HEADER);
}

#[test]
fn config_errors_exit_one_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    let text = harmonic_scenario().to_toml().replace("omega = 3.0", "omgea = 3.0");
    std::fs::write(&file, text).unwrap();
    let out = quasitraj(&["solve", file.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("potential"));

    let out = quasitraj(&["solve", "/nonexistent/scenario.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = quasitraj(&["example", "nope"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn no_root_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = harmonic_scenario();
    s.seed = 5.0;
    s.solver.initial_half_width = 1e-3;
    s.solver.max_half_width = 1e-3;
    let file = dir.path().join("n.toml");
    s.save(&file).unwrap();
    let out = quasitraj(&["solve", file.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_appends_oracle_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = harmonic_scenario();
    s.variant = VariantName::Density;
    s.x0 = 0.5;
    s.seed = 0.5;
    s.grid = GridSpec { t_min: 0.05, t_max: 0.5, steps: 10 };
    s.oracle = OracleSpec { hbar: 1e-2, eta: 1.0, half_width: Some(2.0), points: 1024, ..OracleSpec::default() };
    let file = dir.path().join("c.toml");
    s.save(&file).unwrap();
    let out = quasitraj(&["compare", file.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("harmonic-compare.csv"));
    assert_eq!(header, ["T", "lambda", "omega_eff", "residual", "status", "oracle_avg", "deviation"]);
    for row in rows {
        let dev: f64 = row[6].parse().unwrap();
        assert!(dev < 1e-4, "{row:?}");
    }
}

#[test]
fn oracle_and_pathint_subcommands_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = harmonic_scenario();
    s.variant = VariantName::Density;
    s.grid = GridSpec { t_min: 0.1, t_max: 0.3, steps: 3 };
    s.oracle = OracleSpec { eta: 1.0, half_width: Some(2.0), points: 1024, ..OracleSpec::default() };
    s.pathint = PathintSpec { steps: 16, eps: 0.05 };
    let file = dir.path().join("o.toml");
    s.save(&file).unwrap();

    let out = quasitraj(&["oracle", file.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("harmonic-oracle.csv"));
    assert_eq!(header, ["T", "amp_avg_re", "amp_avg_im", "dens_avg"]);
    assert_eq!(rows.len(), 3);

    let out = quasitraj(&["pathint", file.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.path().join("harmonic-pathint.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[7] == "Ok"));
}
