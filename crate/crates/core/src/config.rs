//! JSON scenario files.
//!
//! ```json
//! {
//!   "R": 0.4,
//!   "agents": [
//!     {"prior": {"lo": 0, "hi": 1, "pieces": [[0, 1, [1, 0, 0, 0]]]}, "c": 0.08,
//!      "signal": {"lo": 0.5, "hi": 0.5, "atoms": [[0.5, 1]]}}
//!   ],
//!   "options": {"tie_rule": "equal", "mc_samples": 100000, "mc_seed": 1, "grid_n": 200}
//! }
//! ```
//!
//! `signal` is optional and defaults to the prior. Unknown keys are rejected
//! and every error names the offending field.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::{Distribution, MPC_TOL};
use crate::multi::{Agent, Scenario, TieRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "R")]
    pub reserve: f64,
    pub agents: Vec<AgentConfig>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub prior: Distribution,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<Distribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    pub tie_rule: TieRule,
    pub mc_samples: u64,
    pub mc_seed: u64,
    pub grid_n: usize,
    pub tolerances: Tolerances,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tie_rule: TieRule::EqualSplit,
            mc_samples: 100_000,
            mc_seed: 0,
            grid_n: 200,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Slack of the mean-preserving-contraction test.
    pub mpc: f64,
    /// Allowed deviation of analytic results from their reference values.
    pub analytic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mpc: MPC_TOL,
            analytic: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn field_error(field: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.to_string(),
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            field_error(if path == "." { String::new() } else { path }, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| field_error("", format!("cannot read {}: {e}", path.display())))?;
        ScenarioConfig::parse(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !self.reserve.is_finite() {
            return Err(field_error("R", "must be finite"));
        }
        if self.agents.is_empty() {
            return Err(field_error("agents", "at least one agent is required"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            if !(a.c >= 0.0 && a.c.is_finite()) {
                return Err(field_error(
                    format!("agents[{i}].c"),
                    format!("checking cost {} must be >= 0", a.c),
                ));
            }
            if let Some(g) = &a.signal {
                match g.is_mpc_of(&a.prior, self.options.tolerances.mpc) {
                    Ok(true) => {}
                    Ok(false) => {
                        return Err(field_error(
                            format!("agents[{i}].signal"),
                            "not a mean-preserving contraction of the prior",
                        ))
                    }
                    Err(e) => return Err(field_error(format!("agents[{i}].signal"), e)),
                }
            }
        }
        if self.options.grid_n < 2 {
            return Err(field_error("options.grid_n", "must be at least 2"));
        }
        if self.options.mc_samples == 0 {
            return Err(field_error("options.mc_samples", "must be at least 1"));
        }
        Ok(())
    }

    pub fn scenario(&self) -> Scenario {
        let agents = self
            .agents
            .iter()
            .map(|a| Agent {
                prior: a.prior.clone(),
                cost: a.c,
            })
            .collect();
        Scenario::new(self.reserve, agents).expect("validated config")
    }

    /// Signal distributions, falling back to the priors.
    pub fn profile(&self) -> Vec<Distribution> {
        self.agents
            .iter()
            .map(|a| a.signal.clone().unwrap_or_else(|| a.prior.clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIFORM: &str = r#"{"lo": 0, "hi": 1, "pieces": [[0, 1, [1, 0, 0, 0]]]}"#;

    #[test]
    fn parses_with_defaults() {
        let text = format!(r#"{{"R": 0.4, "agents": [{{"prior": {UNIFORM}, "c": 0.08}}]}}"#);
        let cfg = ScenarioConfig::parse(&text).unwrap();
        assert_eq!(cfg.options, Options::default());
        assert_eq!(cfg.profile()[0], Distribution::uniform(0.0, 1.0).unwrap());
        assert_eq!(cfg.scenario().reserve(), 0.4);
    }

    #[test]
    fn errors_name_the_field() {
        let bad_cost = format!(r#"{{"R": 0.4, "agents": [{{"prior": {UNIFORM}, "c": "x"}}]}}"#);
        assert_eq!(ScenarioConfig::parse(&bad_cost).unwrap_err().field, "agents[0].c");
        let unknown = format!(r#"{{"R": 0.4, "agents": [{{"prior": {UNIFORM}, "c": 0.1}}], "extra": 1}}"#);
        assert!(ScenarioConfig::parse(&unknown).unwrap_err().message.contains("extra"));
        let bad_prior = r#"{"R": 0.4, "agents": [{"prior": {"lo": 0, "hi": 1, "atoms": [[0.5, 0.5]]}, "c": 0.1}]}"#;
        assert_eq!(ScenarioConfig::parse(bad_prior).unwrap_err().field, "agents[0].prior");
        let negative = format!(r#"{{"R": 0.4, "agents": [{{"prior": {UNIFORM}, "c": -1}}]}}"#);
        assert_eq!(ScenarioConfig::parse(&negative).unwrap_err().field, "agents[0].c");
        let spread = format!(
            r#"{{"R": 0.4, "agents": [{{"prior": {UNIFORM}, "c": 0.1, "signal": {{"lo": 0, "hi": 1, "atoms": [[0, 0.5], [1, 0.5]]}}}}]}}"#
        );
        assert_eq!(ScenarioConfig::parse(&spread).unwrap_err().field, "agents[0].signal");
        let opt = format!(r#"{{"R": 0.4, "agents": [{{"prior": {UNIFORM}, "c": 0.1}}], "options": {{"tie": 1}}}}"#);
        assert_eq!(ScenarioConfig::parse(&opt).unwrap_err().field, "options.tie");
    }
}
