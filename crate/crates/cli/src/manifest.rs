//! The settings of an optimization run, stored next to its log so a resumed
//! run can be checked against the one that was interrupted.

use std::path::{Path, PathBuf};

use civmini::evaluator::Matchup;
use civmini::optimizer::Method;
use civmini::rule_space::Design;
use serde::{Deserialize, Serialize};

/// Bumped whenever the rule space changes shape or ranges.
pub const RULE_SPACE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSpec {
    SelfPlay { agents: Matchup },
    Synthetic { a: f64, b: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Budget {
    Fixed { n_games: u32 },
    Adaptive { n_min: u32, n_max: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub method: Method,
    pub objective: ObjectiveSpec,
    pub rule_space_version: u32,
    pub design: Design,
    pub seed: u64,
    pub iterations: u32,
    pub budget: Budget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_sigma: Option<f64>,
    pub log: PathBuf,
}

impl RunManifest {
    /// Checks that the budget matches the method.
    pub fn validate(&self) -> Result<(), String> {
        match (self.method, &self.budget) {
            (Method::BoAdaptive, Budget::Adaptive { n_min, n_max }) => {
                if *n_min == 0 || n_min > n_max {
                    return Err(format!("need 1 <= n-min <= n-max, got {n_min} and {n_max}"));
                }
            }
            (Method::BoAdaptive, Budget::Fixed { .. }) => {
                return Err("bo-adaptive needs --n-min and --n-max".into());
            }
            (_, Budget::Fixed { n_games: 0 }) => return Err("--games must be at least 1".into()),
            (m, Budget::Adaptive { .. }) => return Err(format!("{m} uses a fixed --games budget")),
            (_, Budget::Fixed { .. }) => {}
        }
        if self.iterations == 0 {
            return Err("--iterations must be at least 1".into());
        }
        match (self.method, self.step_sigma) {
            (Method::Es, Some(s)) if !(s > 0.0 && s.is_finite()) => {
                Err(format!("--step-sigma must be positive, got {s}"))
            }
            (Method::Es, None) => Err("es needs a step size".into()),
            _ => Ok(()),
        }
    }

    /// Where the manifest of the run logged at `log` lives.
    pub fn path_for(log: &Path) -> PathBuf {
        let mut name = log.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        log.with_file_name(name)
    }

    pub fn save(&self) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(Self::path_for(&self.log), text + "\n")
    }

    pub fn load(log: &Path) -> Result<Self, String> {
        let path = Self::path_for(log);
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
