//! Scenario files: a TOML document describing one run.

use std::path::{Path, PathBuf};

use quasitraj_core::master::{MasterResidualSpec, SolverSettings, Variant};
use quasitraj_core::model::PolynomialPotential;
use quasitraj_core::oscillator::ResonancePolicy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error("{0}")]
    Syntax(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn field(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { path: path.to_owned(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantName {
    Amplitude,
    Density,
    GeneralBvp,
}

impl From<VariantName> for Variant {
    fn from(v: VariantName) -> Self {
        match v {
            VariantName::Amplitude => Variant::Amplitude,
            VariantName::Density => Variant::Density,
            VariantName::GeneralBvp => Variant::GeneralBVP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResonanceName {
    #[default]
    Reject,
    Limit,
}

impl From<ResonanceName> for ResonancePolicy {
    fn from(r: ResonanceName) -> Self {
        match r {
            ResonanceName::Reject => ResonancePolicy::Reject,
            ResonanceName::Limit => ResonancePolicy::Limit,
        }
    }
}

/// One anharmonic monomial `coeff·x^degree`, degree 3..=8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub degree: u32,
    pub coeff: f64,
}

/// `V = mω²x²/2 + Σ coeff·x^degree − b·x − A sin(Ωt)·x`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub mass: f64,
    pub omega: f64,
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub drive_amp: f64,
    #[serde(default)]
    pub drive_freq: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    /// Number of samples, endpoints included.
    pub steps: usize,
}

impl GridSpec {
    pub fn times(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.t_min];
        }
        let h = (self.t_max - self.t_min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.t_max } else { self.t_min + h * i as f64 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub initial_half_width: f64,
    pub max_half_width: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub scan_points: usize,
    pub bvp_steps: usize,
    pub resonance: ResonanceName,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            initial_half_width: s.initial_half_width,
            max_half_width: s.max_half_width,
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            scan_points: s.scan_points,
            bvp_steps: s.bvp_steps,
            resonance: ResonanceName::Reject,
        }
    }
}

impl From<SolverSpec> for SolverSettings {
    fn from(s: SolverSpec) -> Self {
        Self {
            initial_half_width: s.initial_half_width,
            max_half_width: s.max_half_width,
            tolerance: s.tolerance,
            max_iterations: s.max_iterations,
            scan_points: s.scan_points,
            bvp_steps: s.bvp_steps,
            resonance: s.resonance.into(),
        }
    }
}

/// Split-step reference run. Unset grid fields are derived at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSpec {
    pub enabled: bool,
    pub hbar: f64,
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Soft absorbing layer at the grid edges.
    pub absorb: bool,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self { enabled: false, hbar: 1e-3, eta: 0.1, half_width: None, points: 4096, dt: None, absorb: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathintSpec {
    pub steps: usize,
    pub eps: f64,
}

impl Default for PathintSpec {
    fn default() -> Self {
        Self { steps: 64, eps: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub variant: VariantName,
    /// Packet centre.
    #[serde(default)]
    pub x0: f64,
    /// Initial root guess.
    #[serde(default)]
    pub seed: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub potential: PotentialSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub pathint: PathintSpec,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            field(&path, e.into_inner().message().to_owned())
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario fields are all representable")
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_toml()).map_err(|source| ConfigError::Io { path: path.to_owned(), source })
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or("scenario")
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    pub fn potential(&self) -> Result<PolynomialPotential, ConfigError> {
        let p = &self.potential;
        let mut pot = PolynomialPotential::new(p.mass, p.omega)
            .and_then(|v| v.with_bias(p.bias))
            .and_then(|v| v.with_drive(p.drive_amp, p.drive_freq))
            .map_err(|e| field("potential", e.to_string()))?;
        for (i, t) in p.terms.iter().enumerate() {
            if !(3..=quasitraj_core::model::MAX_DEGREE).contains(&t.degree) {
                return Err(field(&format!("potential.terms[{i}].degree"), "must be between 3 and 8"));
            }
            if p.terms[..i].iter().any(|o| o.degree == t.degree) {
                return Err(field(&format!("potential.terms[{i}].degree"), "duplicate degree"));
            }
            pot = pot
                .with_coeff(t.degree, t.coeff)
                .map_err(|e| field(&format!("potential.terms[{i}]"), e.to_string()))?;
        }
        Ok(pot)
    }

    pub fn master_spec(&self) -> Result<MasterResidualSpec, ConfigError> {
        MasterResidualSpec::new(self.variant.into(), self.potential()?, self.x0, self.solver.into())
            .map_err(|e| field("solver", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if g.steps == 0 {
            return Err(field("grid.steps", "time grid is empty"));
        }
        if !(g.t_min > 0.0 && g.t_min.is_finite()) {
            return Err(field("grid.t_min", "must be positive"));
        }
        if !(g.t_max.is_finite() && (g.t_max > g.t_min || (g.steps == 1 && g.t_max == g.t_min))) {
            return Err(field("grid.t_max", "must exceed t_min"));
        }
        if !self.x0.is_finite() || !self.seed.is_finite() {
            return Err(field("x0", "x0 and seed must be finite"));
        }
        if self.variant == VariantName::Amplitude && self.x0 != 0.0 {
            return Err(field("x0", "the amplitude variant needs x0 = 0"));
        }
        self.master_spec()?;
        let o = &self.oracle;
        if !(o.hbar > 0.0 && o.eta > 0.0) {
            return Err(field("oracle", "hbar and eta must be positive"));
        }
        if o.half_width.is_some_and(|l| !(l > 0.0)) || o.dt.is_some_and(|dt| !(dt > 0.0)) {
            return Err(field("oracle", "half_width and dt must be positive"));
        }
        if o.points < 16 {
            return Err(field("oracle.points", "need at least 16 points"));
        }
        if self.pathint.steps < 2 || !(self.pathint.eps > 0.0) {
            return Err(field("pathint", "need steps >= 2 and eps > 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
variant = "density"
x0 = 0.5

[potential]
mass = 1.0
omega = 2.0
bias = 1.0

[grid]
t_min = 0.1
t_max = 1.0
steps = 10
"#;

    #[test]
    fn minimal_file_takes_defaults() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        assert_eq!(s.solver, SolverSpec::default());
        assert_eq!(s.oracle, OracleSpec::default());
        assert_eq!(s.times().len(), 10);
        assert_eq!(*s.times().last().unwrap(), 1.0);
    }

    #[test]
    fn unknown_key_reports_path() {
        let text = MINIMAL.replace("bias = 1.0", "bais = 1.0");
        let err = Scenario::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("potential") && err.contains("bais"), "{err}");
    }

    #[test]
    fn wrong_type_reports_path() {
        let text = MINIMAL.replace("steps = 10", "steps = \"ten\"");
        let err = Scenario::from_toml(&text).unwrap_err().to_string();
        assert!(err.starts_with("grid.steps"), "{err}");
    }

    #[test]
    fn empty_grid_rejected() {
        let text = MINIMAL.replace("steps = 10", "steps = 0");
        assert!(Scenario::from_toml(&text).unwrap_err().to_string().starts_with("grid.steps"));
    }

    #[test]
    fn amplitude_needs_centred_packet() {
        let text = MINIMAL.replace("\"density\"", "\"amplitude\"");
        assert!(Scenario::from_toml(&text).unwrap_err().to_string().starts_with("x0"));
    }

    #[test]
    fn bad_term_degree() {
        let text = format!("{MINIMAL}\n[[potential.terms]]\ndegree = 2\ncoeff = 1.0\n");
        assert!(Scenario::from_toml(&text).is_err());
    }

    #[test]
    fn single_sample_grid() {
        let g = GridSpec { t_min: 0.3, t_max: 0.3, steps: 1 };
        assert_eq!(g.times(), vec![0.3]);
    }
}
