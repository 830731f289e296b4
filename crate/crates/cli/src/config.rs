//! Flat run configuration shared by all subcommands.
//!
//! A config file may omit any key; missing keys take the defaults of the
//! command named in it. Every output file embeds the complete config.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use willmore_core::{DecomposeConfig, FlowConfig, ParamGrid, Scheme};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Energy,
    Spectrum,
    Flow,
    Decompose,
    Export,
    Gapscan,
    Invariance,
    Roundtrip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub command: Command,
    /// Samples per direction of the parameter grid.
    pub n: usize,
    pub major: f64,
    pub minor: f64,
    pub seed: u64,
    pub samples: usize,
    /// Möbius perturbation size for `random_mobius`.
    pub epsilon: f64,
    /// `C²` norm of the normal graph of a perturbed start.
    pub amplitude: f64,
    pub direction: usize,
    pub cutoff: usize,
    pub amplitudes: Vec<f64>,
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Write an OBJ snapshot every this many accepted steps; 0 disables.
    pub snapshot_every: usize,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub safety: f64,
    pub grad_tol: f64,
    pub energy_tol: f64,
    pub plateau_window: usize,
    pub max_steps: usize,
    pub regraph_every: usize,
    pub gauge_fixing: bool,
    pub scheme: Scheme,
    pub decompose_tol: f64,
    pub decompose_delta: f64,
    pub decompose_max_iterations: usize,
}

impl RunConfig {
    pub fn for_command(command: Command) -> Self {
        let flow = FlowConfig::default();
        let n = match command {
            Command::Energy => 48,
            Command::Spectrum | Command::Invariance => 64,
            _ => 32,
        };
        let (samples, epsilon) = match command {
            Command::Roundtrip => (20, 0.05),
            Command::Export => (1, 0.0),
            _ => (5, 0.2),
        };
        Self {
            format_version: FORMAT_VERSION,
            command,
            n,
            major: std::f64::consts::SQRT_2,
            minor: 1.0,
            seed: 0,
            samples,
            epsilon,
            amplitude: 0.05,
            direction: 0,
            cutoff: 16,
            amplitudes: vec![0.02, 0.01, 0.005],
            input: None,
            output_dir: PathBuf::from("willmore-out"),
            snapshot_every: 0,
            dt_init: flow.dt_init,
            dt_min: flow.dt_min,
            dt_max: flow.dt_max,
            safety: flow.safety,
            grad_tol: flow.grad_tol,
            energy_tol: flow.energy_tol,
            plateau_window: flow.plateau_window,
            max_steps: flow.max_steps,
            regraph_every: flow.regraph_every,
            gauge_fixing: flow.gauge_fixing,
            scheme: flow.scheme,
            decompose_tol: flow.decompose.tol,
            decompose_delta: flow.decompose.delta,
            decompose_max_iterations: flow.decompose.max_iterations,
        }
    }

    /// Parses a JSON object, filling absent keys from the defaults of its `command`.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let Value::Object(given) = value else {
            return Err(CliError::Config("config must be a JSON object".into()));
        };
        let command = given
            .get("command")
            .ok_or_else(|| CliError::Config("config lacks a `command` key".into()))?;
        let command: Command =
            serde_json::from_value(command.clone()).map_err(|e| CliError::Config(format!("command: {e}")))?;
        let Value::Object(mut merged) =
            serde_json::to_value(Self::for_command(command)).expect("config serializes")
        else {
            unreachable!("config is an object")
        };
        merged.extend(given);
        let config: Self = serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(e.to_string()))?;
        if config.format_version != FORMAT_VERSION {
            return Err(CliError::Config(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                config.format_version
            )));
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            dt_init: self.dt_init,
            dt_min: self.dt_min,
            dt_max: self.dt_max,
            safety: self.safety,
            grad_tol: self.grad_tol,
            energy_tol: self.energy_tol,
            plateau_window: self.plateau_window,
            max_steps: self.max_steps,
            regraph_every: self.regraph_every,
            gauge_fixing: self.gauge_fixing,
            scheme: self.scheme,
            decompose: self.decompose_config(),
        }
    }

    pub fn decompose_config(&self) -> DecomposeConfig {
        DecomposeConfig {
            tol: self.decompose_tol,
            delta: self.decompose_delta,
            max_iterations: self.decompose_max_iterations,
        }
    }

    pub fn grid(&self) -> Result<ParamGrid, CliError> {
        Ok(ParamGrid::torus(self.n)?)
    }

    /// Checks every parameter the command will use before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        ParamGrid::torus(self.n)?;
        match self.command {
            Command::Energy if self.input.is_none() => {
                if !(self.minor > 0.0 && self.major > self.minor && self.major.is_finite()) {
                    return bad(format!("torus radii need R > r > 0, got R = {}, r = {}", self.major, self.minor));
                }
            }
            Command::Decompose if self.input.is_none() => return bad("decompose needs an input mesh".into()),
            Command::Spectrum if self.cutoff < 3 => return bad(format!("mode cutoff {} < 3", self.cutoff)),
            Command::Gapscan => {
                if self.amplitudes.len() < 2 || self.amplitudes.iter().any(|&t| !(t > 0.0 && t < 0.5)) {
                    return bad("gapscan needs at least two amplitudes in (0, 0.5)".into());
                }
            }
            Command::Invariance | Command::Roundtrip | Command::Export => {
                if !(0.0..=0.5).contains(&self.epsilon) {
                    return bad(format!("epsilon {} outside [0, 0.5]", self.epsilon));
                }
                if self.samples == 0 {
                    return bad("samples must be positive".into());
                }
            }
            _ => {}
        }
        if matches!(self.command, Command::Flow | Command::Export | Command::Roundtrip)
            && !(self.amplitude >= 0.0 && self.amplitude < 1.0)
        {
            return bad(format!("amplitude {} outside [0, 1)", self.amplitude));
        }
        self.flow_config().validate()?;
        if !(self.decompose_tol > 0.0 && self.decompose_delta > 0.0) {
            return bad("decompose tolerances must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_takes_command_defaults() {
        let c = RunConfig::from_json(r#"{"command": "flow", "direction": 2}"#).unwrap();
        assert_eq!(c.n, 32);
        assert_eq!(c.direction, 2);
        assert_eq!(c.scheme, Scheme::Stabilized);
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        assert!(RunConfig::from_json(r#"{"command": "flow", "nn": 2}"#).is_err());
        assert!(RunConfig::from_json(r#"{"command": "flow", "format_version": 7}"#).is_err());
        assert!(RunConfig::from_json(r#"{"n": 32}"#).is_err());
        assert!(RunConfig::from_json("[1]").is_err());
    }

    #[test]
    fn degenerate_torus_fails_validation() {
        let mut c = RunConfig::for_command(Command::Energy);
        (c.major, c.minor) = (1.0, 2.0);
        assert!(matches!(c.validate(), Err(CliError::Validation(_))));
        c.n = 9;
        assert!(c.validate().unwrap_err().exit_code() == 2);
    }

    #[test]
    fn defaults_validate() {
        use Command::*;
        for cmd in [Energy, Spectrum, Flow, Export, Gapscan, Invariance, Roundtrip] {
            RunConfig::for_command(cmd).validate().unwrap();
        }
    }
}
