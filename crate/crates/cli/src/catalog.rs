//! Built-in example scenarios.
//!
//! `hosc-*` are harmonic, `cubic-*` carry an `a x³` term, `dwell-*` the
//! double well `−a x⁴ + b x³`, and `dens-*` are density-variant runs of the
//! cubic potential.

use thiserror::Error;

use crate::scenario::{GridSpec, OracleSpec, PathintSpec, PotentialSpec, Scenario, SolverSpec, Term, VariantName};

#[derive(Debug, Error, PartialEq)]
#[error("unknown example {0:?}; known ids: {ids}", ids = IDS.join(", "))]
pub struct UnknownExample(pub String);

pub const IDS: &[&str] = &[
    "hosc-1.1",
    "hosc-1.2",
    "hosc-1.3",
    "cubic-2.1",
    "cubic-2.2",
    "cubic-2.3",
    "cubic-2.4",
    "cubic-2.5",
    "dwell-2.1",
    "dwell-2.2",
    "dwell-2.3",
    "dens-2.5.1",
    "dens-2.5.2",
    "dens-2.5.3",
    "dens-2.5.4",
    "dens-2.5.5",
    "dens-2.5.6",
];

struct Entry {
    variant: VariantName,
    m: f64,
    big_omega: f64,
    omega: f64,
    terms: Vec<Term>,
    bias: f64,
    amp: f64,
    x0: f64,
    t: (f64, f64),
    note: Option<&'static str>,
}

fn harmonic(m: f64, big_omega: f64, omega: f64, b: f64, amp: f64, t: (f64, f64)) -> Entry {
    Entry { variant: VariantName::Amplitude, m, big_omega, omega, terms: vec![], bias: b, amp, x0: 0.0, t, note: None }
}

#[allow(clippy::too_many_arguments)]
fn cubic(variant: VariantName, m: f64, big_omega: f64, omega: f64, a: f64, b: f64, amp: f64, t: (f64, f64)) -> Entry {
    let terms = if a == 0.0 { vec![] } else { vec![Term { degree: 3, coeff: a }] };
    Entry { variant, m, big_omega, omega, terms, bias: b, amp, x0: 0.0, t, note: None }
}

// V = mω²x²/2 − a x⁴ + b x³ − A sin(Ωt) x
fn double_well(m: f64, big_omega: f64, omega: f64, a: f64, b: f64, amp: f64, t: (f64, f64)) -> Entry {
    let terms = vec![Term { degree: 3, coeff: b }, Term { degree: 4, coeff: -a }];
    Entry { variant: VariantName::Amplitude, m, big_omega, omega, terms, bias: 0.0, amp, x0: 0.0, t, note: None }
}

fn entry(id: &str) -> Option<Entry> {
    use VariantName::{Amplitude, Density};
    let e = match id {
        "hosc-1.1" => harmonic(1.0, 10.0, 3.0, 1.0, 0.0, (0.01, 1.0)),
        "hosc-1.2" => harmonic(1.0, 10.0, 3.0, 1.0, 10.0, (0.01, 1.0)),
        "hosc-1.3" => harmonic(1.0, 20.0, 5.0, 1.0, 10.0, (0.01, 0.6)),
        "cubic-2.1" => cubic(Amplitude, 10.0, 10.0, 30.0, -200.0, 1.0, 1.0, (0.01, 0.3)),
        "cubic-2.2" => cubic(Amplitude, 10.0, 10.0, 30.0, -200.0, 1.0, 10.0, (0.01, 0.3)),
        "cubic-2.3" => cubic(Amplitude, 10.0, 10.0, 40.0, -200.0, 1.0, 10.0, (0.01, 0.3)),
        "cubic-2.4" => cubic(Amplitude, 10.0, 20.0, 40.0, -200.0, 1.0, 10.0, (0.01, 0.3)),
        "cubic-2.5" => cubic(Amplitude, 10.0, 25.0, 40.0, -200.0, 1.0, 10.0, (0.01, 0.3)),
        "dwell-2.1" => double_well(10.0, 20.0, 10.0, -20.0, 10.0, 10.0, (0.01, 0.5)),
        "dwell-2.2" => double_well(100.0, 20.0, 10.0, -20.0, 50.0, 10.0, (0.01, 0.5)),
        "dwell-2.3" => double_well(100.0, 20.0, 10.0, 20.0, 50.0, 100.0, (0.01, 0.5)),
        "dens-2.5.1" => {
            Entry { note: Some("No quantum jumps"), ..cubic(Density, 1.0, 0.0, 9.0, 0.0, 10.0, 0.0, (0.01, 2.0)) }
        }
        "dens-2.5.2" => cubic(Density, 1.0, 0.0, 9.0, 3.0, 10.0, 0.0, (0.01, 2.0)),
        "dens-2.5.3" => cubic(Density, 1.0, 3.0, 9.0, 3.0, 10.0, 1.0, (0.01, 2.0)),
        "dens-2.5.4" => cubic(Density, 1.0, 3.0, 15.0, 3.0, 10.0, 1.0, (0.01, 2.0)),
        "dens-2.5.5" => cubic(Density, 1.0, 3.0, 10.0, 3.0, 10.0, 3.0, (0.01, 2.0)),
        "dens-2.5.6" => cubic(Density, 1.0, 12.0, 9.0, 1.0, 15.0, 2.0, (0.01, 2.0)),
        _ => return None,
    };
    Some(e)
}

/// Samples per example trajectory.
pub const STEPS: usize = 200;

pub fn example(id: &str) -> Result<Scenario, UnknownExample> {
    let e = entry(id).ok_or_else(|| UnknownExample(id.to_owned()))?;
    Ok(Scenario {
        name: Some(id.to_owned()),
        note: e.note.map(str::to_owned),
        variant: e.variant,
        x0: e.x0,
        seed: e.x0,
        output: Some(format!("{id}.csv").into()),
        potential: PotentialSpec {
            mass: e.m,
            omega: e.omega,
            bias: e.bias,
            drive_amp: e.amp,
            drive_freq: e.big_omega,
            terms: e.terms,
        },
        grid: GridSpec { t_min: e.t.0, t_max: e.t.1, steps: STEPS },
        solver: SolverSpec::default(),
        oracle: OracleSpec::default(),
        pathint: PathintSpec::default(),
    })
}
