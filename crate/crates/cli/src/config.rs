//! Configuration ingestion: TOML file plus flag overrides, validated
//! against the solver preconditions before anything runs.
//!
//! Precedence, lowest to highest: built-in defaults, config file, CLI
//! flags. Initial case counts of at least 1 are read as absolute numbers
//! and divided by the population; values below 1 are taken as fractions
//! directly. The removed compartment absorbs the remainder when an explicit
//! susceptible fraction is given.

use crate::error::CliError;
use lockdown_opt_core::{EpidemicParams, EpidemicState};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Which solution route a scenario uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    /// Root of the switching condition (dispatches to the total-lockdown
    /// branch automatically when `alpha = 0`).
    PsiRoot,
    Trisection,
    Gradient,
    AlphaZero,
}

impl SolverChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::PsiRoot => "psi-root",
            SolverChoice::Trisection => "trisection",
            SolverChoice::Gradient => "gradient",
            SolverChoice::AlphaZero => "alpha-zero",
        }
    }
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "psi-root" => Ok(SolverChoice::PsiRoot),
            "trisection" => Ok(SolverChoice::Trisection),
            "gradient" => Ok(SolverChoice::Gradient),
            "alpha-zero" => Ok(SolverChoice::AlphaZero),
            other => Err(format!(
                "unknown solver {other:?} (expected psi-root, trisection, gradient or alpha-zero)"
            )),
        }
    }
}

/// Raw scenario fields as they appear in a config file; everything is
/// optional so files and flags can each fill in part of the picture.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub beta: Option<f64>,
    pub nu: Option<f64>,
    pub population: Option<f64>,
    /// Absolute count (>= 1) or fraction (< 1).
    pub initial_infected: Option<f64>,
    /// Absolute count (>= 1) or fraction (< 1).
    pub initial_removed: Option<f64>,
    /// Optional explicit susceptible fraction; the removed compartment then
    /// takes the remainder.
    pub initial_susceptible: Option<f64>,
    pub alpha: Option<f64>,
    pub horizon_t: Option<f64>,
    pub dt: Option<f64>,
    pub tol_t: Option<f64>,
    pub solver: Option<String>,
    pub trisection_k: Option<usize>,
    pub gradient_tol: Option<f64>,
    pub gradient_max_iters: Option<usize>,
    pub outputs: Option<OutputsFile>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsFile {
    pub trajectory: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// Sweep description: an axis, its values, and the fixed scenario.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub axis: String,
    pub values: Vec<f64>,
    #[serde(default)]
    pub fixed: ScenarioFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Horizon,
    Alpha,
    R0,
    SwitchTime,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Horizon => "T",
            SweepAxis::Alpha => "alpha",
            SweepAxis::R0 => "R0",
            SweepAxis::SwitchTime => "t0",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "T" => Ok(SweepAxis::Horizon),
            "alpha" => Ok(SweepAxis::Alpha),
            "R0" => Ok(SweepAxis::R0),
            "t0" => Ok(SweepAxis::SwitchTime),
            other => Err(format!(
                "unknown sweep axis {other:?} (expected T, alpha, R0 or t0)"
            )),
        }
    }
}

/// Fully resolved and validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub params: EpidemicParams,
    pub init: EpidemicState,
    pub alpha: f64,
    pub horizon: f64,
    pub dt: f64,
    pub tol_t: f64,
    pub solver: SolverChoice,
    pub trisection_k: usize,
    pub gradient_tol: f64,
    pub gradient_max_iters: usize,
    pub trajectory_path: Option<PathBuf>,
    pub summary_path: Option<PathBuf>,
}

/// Fully resolved sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub fixed: ScenarioConfig,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| CliError::config("config", e.to_string()))
    }

    /// Overlay `other` (higher precedence) on top of `self`.
    pub fn overlaid(mut self, other: &ScenarioFile) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field.clone(); })*
            };
        }
        take!(
            beta,
            nu,
            population,
            initial_infected,
            initial_removed,
            initial_susceptible,
            alpha,
            horizon_t,
            dt,
            tol_t,
            solver,
            trisection_k,
            gradient_tol,
            gradient_max_iters,
            outputs
        );
        self
    }

    /// Validate everything and produce a runnable scenario. Errors carry
    /// one message per offending field.
    pub fn resolve(&self) -> Result<ScenarioConfig, CliError> {
        let mut errors = Vec::new();

        let beta = self.beta.unwrap_or(0.29);
        let nu = self.nu.unwrap_or(0.1);
        if !beta.is_finite() || beta <= 0.0 {
            errors.push(format!("beta: must be a positive rate, got {beta}"));
        }
        if !nu.is_finite() || nu <= 0.0 {
            errors.push(format!("nu: must be a positive rate, got {nu}"));
        }
        if beta > 0.0 && nu > 0.0 && beta / nu <= 1.0 {
            errors.push(format!(
                "beta/nu: reproduction number {} must exceed 1",
                beta / nu
            ));
        }

        let population = self.population.unwrap_or(6.7e7);
        if !population.is_finite() || population <= 0.0 {
            errors.push(format!("population: must be positive, got {population}"));
        }
        let as_fraction = |raw: f64, field: &str, errors: &mut Vec<String>| -> f64 {
            if !(0.0..=population.max(1.0)).contains(&raw) {
                errors.push(format!("{field}: {raw} is not a count or fraction"));
                return 0.0;
            }
            if raw >= 1.0 {
                raw / population
            } else {
                raw
            }
        };
        let i0 = as_fraction(
            self.initial_infected.unwrap_or(1e3),
            "initial_infected",
            &mut errors,
        );
        let r0_frac = as_fraction(
            self.initial_removed.unwrap_or(0.0),
            "initial_removed",
            &mut errors,
        );
        let (s0, r0_frac) = match self.initial_susceptible {
            Some(s) => (s, 1.0 - s - i0), // remainder goes to the removed
            None => (1.0 - i0 - r0_frac, r0_frac),
        };
        if i0 <= 0.0 {
            errors.push("initial_infected: optimization needs a positive infected fraction".into());
        }

        let alpha = self.alpha.unwrap_or(0.231);
        if !alpha.is_finite() || !(0.0..1.0).contains(&alpha) {
            errors.push(format!("alpha: must lie in [0, 1), got {alpha}"));
        }
        let horizon = self.horizon_t.unwrap_or(100.0);
        if !horizon.is_finite() || horizon <= 0.0 {
            errors.push(format!("horizon_t: must be positive, got {horizon}"));
        }
        let dt = self.dt.unwrap_or(0.01);
        if !dt.is_finite() || dt <= 0.0 || dt > horizon.max(1.0) {
            errors.push(format!(
                "dt: must be a positive step below the horizon, got {dt}"
            ));
        }
        let tol_t = self.tol_t.unwrap_or(1e-3);
        if !tol_t.is_finite() || tol_t <= 0.0 {
            errors.push(format!("tol_t: must be positive, got {tol_t}"));
        }

        let solver = match self.solver.as_deref() {
            None => {
                if alpha == 0.0 {
                    SolverChoice::AlphaZero
                } else {
                    SolverChoice::PsiRoot
                }
            }
            Some(name) => match name.parse::<SolverChoice>() {
                Ok(s) => s,
                Err(msg) => {
                    errors.push(format!("solver: {msg}"));
                    SolverChoice::PsiRoot
                }
            },
        };
        if solver == SolverChoice::AlphaZero && alpha != 0.0 {
            errors.push(format!(
                "solver: alpha-zero requires alpha = 0, got alpha = {alpha}"
            ));
        }

        let trisection_k = self.trisection_k.unwrap_or(60);
        let gradient_tol = self.gradient_tol.unwrap_or(1e-9);
        if !gradient_tol.is_finite() || gradient_tol <= 0.0 {
            errors.push(format!(
                "gradient_tol: must be positive, got {gradient_tol}"
            ));
        }
        let gradient_max_iters = self.gradient_max_iters.unwrap_or(5000);

        let params = match EpidemicParams::new(beta, nu) {
            Ok(p) => Some(p),
            Err(e) => {
                if errors.is_empty() {
                    errors.push(format!("beta/nu: {e}"));
                }
                None
            }
        };
        let init = match EpidemicState::new(s0, i0, r0_frac.max(0.0), 0.0) {
            Ok(s) => Some(s),
            Err(e) => {
                errors.push(format!("initial state: {e}"));
                None
            }
        };

        if !errors.is_empty() {
            return Err(CliError::Config(errors));
        }
        let outputs = self.outputs.clone().unwrap_or_default();
        Ok(ScenarioConfig {
            params: params.unwrap(),
            init: init.unwrap(),
            alpha,
            horizon,
            dt,
            tol_t,
            solver,
            trisection_k,
            gradient_tol,
            gradient_max_iters,
            trajectory_path: outputs.trajectory,
            summary_path: outputs.summary,
        })
    }
}

impl SweepFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| CliError::config("sweep config", e.to_string()))
    }

    pub fn resolve(&self, overrides: &ScenarioFile) -> Result<SweepConfig, CliError> {
        let axis = self
            .axis
            .parse::<SweepAxis>()
            .map_err(|msg| CliError::config("axis", msg))?;
        if self.values.is_empty() {
            return Err(CliError::config("values", "sweep needs at least one value"));
        }
        let fixed = self.fixed.clone().overlaid(overrides).resolve()?;
        for &v in &self.values {
            let ok = match axis {
                SweepAxis::Horizon => v.is_finite() && v > 0.0,
                SweepAxis::Alpha => v.is_finite() && (0.0..1.0).contains(&v),
                SweepAxis::R0 => v.is_finite() && v > 1.0,
                SweepAxis::SwitchTime => v.is_finite() && v >= 0.0 && v <= fixed.horizon,
            };
            if !ok {
                return Err(CliError::config(
                    "values",
                    format!(
                        "{v} is outside the admissible range for axis {}",
                        axis.name()
                    ),
                ));
            }
        }
        Ok(SweepConfig {
            axis,
            values: self.values.clone(),
            fixed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_to_a_runnable_scenario() {
        let cfg = ScenarioFile::default().resolve().unwrap();
        assert!((cfg.params.beta() - 0.29).abs() < 1e-15);
        assert!((cfg.init.i - 1e3 / 6.7e7).abs() < 1e-18);
        assert!((cfg.init.s + cfg.init.i - 1.0).abs() < 1e-12);
        assert_eq!(cfg.solver, SolverChoice::PsiRoot);
    }

    #[test]
    fn absolute_counts_are_scaled_by_population() {
        let file = ScenarioFile {
            population: Some(1e6),
            initial_infected: Some(500.0),
            ..Default::default()
        };
        let cfg = file.resolve().unwrap();
        assert!((cfg.init.i - 5e-4).abs() < 1e-15);
    }

    #[test]
    fn fractions_pass_through_unchanged() {
        let file = ScenarioFile {
            initial_infected: Some(0.25),
            ..Default::default()
        };
        let cfg = file.resolve().unwrap();
        assert!((cfg.init.i - 0.25).abs() < 1e-15);
    }

    #[test]
    fn field_errors_are_reported_together() {
        let file = ScenarioFile {
            beta: Some(-1.0),
            alpha: Some(1.5),
            dt: Some(0.0),
            ..Default::default()
        };
        let err = file.resolve().unwrap_err();
        match err {
            CliError::Config(msgs) => {
                assert!(msgs.iter().any(|m| m.starts_with("beta:")));
                assert!(msgs.iter().any(|m| m.starts_with("alpha:")));
                assert!(msgs.iter().any(|m| m.starts_with("dt:")));
            }
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn alpha_zero_defaults_to_its_own_branch() {
        let file = ScenarioFile {
            alpha: Some(0.0),
            ..Default::default()
        };
        assert_eq!(file.resolve().unwrap().solver, SolverChoice::AlphaZero);
    }

    #[test]
    fn overlay_prefers_the_overriding_side() {
        let base = ScenarioFile {
            alpha: Some(0.231),
            horizon_t: Some(100.0),
            ..Default::default()
        };
        let over = ScenarioFile {
            alpha: Some(0.5),
            ..Default::default()
        };
        let merged = base.overlaid(&over);
        assert_eq!(merged.alpha, Some(0.5));
        assert_eq!(merged.horizon_t, Some(100.0));
    }
}
