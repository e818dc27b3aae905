//! Executes scenarios and writes their CSV tables.

use std::path::{Path, PathBuf};

use quasitraj_core::master::{continue_trajectory, MasterError, Status, Trajectory};
use quasitraj_core::model::PolynomialPotential;
use quasitraj_core::oracle::{self, AverageSeries, Grid, OracleError};
use quasitraj_core::pathint::{saddle_point_average, FlowField};
use thiserror::Error;

use crate::scenario::{ConfigError, Scenario, VariantName};

/// Overrides the directory of every output file.
pub const OUTPUT_DIR_ENV: &str = "QUASITRAJ_OUTPUT_DIR";

pub const TRAJECTORY_HEADER: [&str; 5] = ["T", "lambda", "omega_eff", "residual", "status"];
pub const ORACLE_COLUMNS: [&str; 2] = ["oracle_avg", "deviation"];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    UnknownExample(#[from] crate::catalog::UnknownExample),
    #[error(transparent)]
    Master(#[from] MasterError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StatusCounts {
    pub ok: usize,
    pub near_singular: usize,
    pub resonant: usize,
    pub no_root: usize,
    pub multi_root: usize,
}

impl StatusCounts {
    pub fn of(traj: &Trajectory) -> Self {
        let mut c = Self::default();
        for s in &traj.samples {
            match s.status {
                Status::Ok => c.ok += 1,
                Status::NearSingular => c.near_singular += 1,
                Status::Resonant => c.resonant += 1,
                Status::NoRoot => c.no_root += 1,
                Status::MultiRoot => c.multi_root += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.ok + self.near_singular + self.resonant + self.no_root + self.multi_root
    }

    pub fn ok_fraction(&self) -> f64 {
        self.ok as f64 / self.total().max(1) as f64
    }
}

impl std::fmt::Display for StatusCounts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Ok {}, NearSingular {}, Resonant {}, NoRoot {}, MultiRoot {}",
            self.ok, self.near_singular, self.resonant, self.no_root, self.multi_root
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub series: AverageSeries,
    pub half_width: f64,
    pub points: usize,
    pub dt: f64,
}

impl OracleRun {
    /// The average the master equation predicts for `variant`.
    pub fn comparable(&self, variant: VariantName) -> Vec<f64> {
        match variant {
            VariantName::Amplitude => self.series.amp_avg.iter().map(|a| a.map_or(f64::NAN, |z| z.re)).collect(),
            VariantName::Density | VariantName::GeneralBvp => self.series.dens_avg.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub trajectory: Trajectory,
    pub oracle: Option<OracleRun>,
    /// Oracle counterpart of `λ` per sample.
    pub oracle_avg: Option<Vec<f64>>,
    /// `|λ − oracle_avg|` per sample.
    pub deviation: Option<Vec<f64>>,
    pub counts: StatusCounts,
}

impl RunReport {
    pub fn max_deviation(&self) -> Option<f64> {
        self.deviation.as_ref().map(|d| d.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max))
    }

    /// 0 unless some horizon has no root, then 2.
    pub fn exit_code(&self) -> i32 {
        if self.counts.no_root > 0 {
            2
        } else {
            0
        }
    }
}

/// Solver run, plus the oracle when `scenario.oracle.enabled`.
pub fn run(scenario: &Scenario) -> Result<RunReport, RunError> {
    let spec = scenario.master_spec()?;
    let times = scenario.times();
    let trajectory = continue_trajectory(&spec, &times, scenario.seed)?;
    let counts = StatusCounts::of(&trajectory);
    let mut report = RunReport { trajectory, oracle: None, oracle_avg: None, deviation: None, counts };
    if scenario.oracle.enabled {
        let o = run_oracle(scenario)?;
        let avg = o.comparable(scenario.variant);
        let dev = report.trajectory.samples.iter().zip(&avg).map(|(s, a)| (s.lambda - a).abs()).collect();
        report.oracle = Some(o);
        report.oracle_avg = Some(avg);
        report.deviation = Some(dev);
    }
    Ok(report)
}

/// Largest `|x|` reached by the classical trajectory on the scenario grid.
fn classical_amplitude(pot: &PolynomialPotential, scenario: &Scenario) -> f64 {
    oracle::ehrenfest(pot, scenario.x0, 0.0, &scenario.times())
        .into_iter()
        .map(f64::abs)
        .fold(scenario.x0.abs(), f64::max)
}

/// Split-step propagation from a Gaussian at `x0` through the scenario grid.
pub fn run_oracle(scenario: &Scenario) -> Result<OracleRun, RunError> {
    let o = &scenario.oracle;
    let pot = scenario.potential()?;
    let width = (o.hbar / (2.0 * o.eta)).sqrt();
    let half_width = o.half_width.unwrap_or_else(|| {
        let fit = 1.05 * (scenario.x0.abs() + 10.0 * width) / 0.9;
        (8.0 * classical_amplitude(&pot, scenario)).max(fit)
    });
    let grid = Grid::new(half_width, o.points)?;
    let dt = o.dt.unwrap_or_else(|| {
        let default = 1e-4 / pot.harmonic_freq().abs().max(1e-12);
        default.min(0.9 * oracle::max_time_step(&grid, &pot, o.hbar))
    });
    let mut state = oracle::init_gaussian(scenario.x0, o.eta, o.hbar, pot.mass(), grid)?;
    state.absorb = o.absorb;
    let series = oracle::evolve_averages(&mut state, &pot, &scenario.times(), dt)?;
    Ok(OracleRun { series, half_width, points: o.points, dt })
}

/// Where a run writes its table. `suffix` distinguishes subcommands.
pub fn output_path(scenario: &Scenario, suffix: &str, dir_override: Option<&Path>) -> PathBuf {
    let base = scenario.output.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", scenario.label())));
    let file = if suffix.is_empty() {
        base
    } else {
        let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let ext = base.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
        base.with_file_name(format!("{stem}-{suffix}.{ext}"))
    };
    match dir_override {
        Some(dir) => dir.join(file.file_name().expect("output path names a file")),
        None => file,
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, RunError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| RunError::Io { path: parent.to_owned(), source })?;
    }
    csv::Writer::from_path(path).map_err(|source| RunError::Csv { path: path.to_owned(), source })
}

fn finish(w: csv::Writer<std::fs::File>, path: &Path) -> Result<(), RunError> {
    w.into_inner()
        .map_err(|e| RunError::Io { path: path.to_owned(), source: e.into_error() })?
        .sync_all()
        .map_err(|source| RunError::Io { path: path.to_owned(), source })
}

pub fn trajectory_rows(report: &RunReport) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = TRAJECTORY_HEADER.iter().map(|s| s.to_string()).collect();
    if report.oracle_avg.is_some() {
        header.extend(ORACLE_COLUMNS.iter().map(|s| s.to_string()));
    }
    let rows = report
        .trajectory
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut row = vec![fmt(s.t), fmt(s.lambda), fmt(s.omega_eff), fmt(s.residual), s.status.to_string()];
            if let (Some(avg), Some(dev)) = (&report.oracle_avg, &report.deviation) {
                row.push(fmt(avg[i]));
                row.push(fmt(dev[i]));
            }
            row
        })
        .collect();
    (header, rows)
}

pub fn oracle_rows(o: &OracleRun) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["T", "amp_avg_re", "amp_avg_im", "dens_avg"].map(String::from).to_vec();
    let s = &o.series;
    let rows = s
        .times
        .iter()
        .zip(&s.amp_avg)
        .zip(&s.dens_avg)
        .map(|((&t, amp), &d)| {
            let (re, im) = amp.map_or((f64::NAN, f64::NAN), |z| (z.re, z.im));
            vec![fmt(t), fmt(re), fmt(im), fmt(d)]
        })
        .collect();
    (header, rows)
}

/// Stationary points of the discretized path integral at every horizon.
pub fn pathint_rows(scenario: &Scenario) -> Result<(Vec<String>, Vec<Vec<String>>), RunError> {
    let header = ["T", "index", "endpoint", "action", "prefactor", "contribution_re", "contribution_im", "status"]
        .map(String::from)
        .to_vec();
    let field = FlowField::from_potential(&scenario.potential()?);
    let p = &scenario.pathint;
    let mut rows = Vec::new();
    for t in scenario.times() {
        match saddle_point_average(&field, scenario.x0, 0.0, t, p.steps, p.eps) {
            Ok(sum) => {
                for (k, cp) in sum.points.iter().enumerate() {
                    rows.push(vec![
                        fmt(t),
                        k.to_string(),
                        fmt(cp.path.end()),
                        fmt(cp.action),
                        fmt(cp.prefactor),
                        fmt(cp.contribution.re),
                        fmt(cp.contribution.im),
                        "Ok".into(),
                    ]);
                }
            }
            Err(e) => {
                let nan = fmt(f64::NAN);
                rows.push(vec![
                    fmt(t),
                    "0".into(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan,
                    e.to_string(),
                ]);
            }
        }
    }
    Ok((header, rows))
}

pub fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<(), RunError> {
    let mut w = writer(path)?;
    let csv_err = |source| RunError::Csv { path: path.to_owned(), source };
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    finish(w, path)
}
