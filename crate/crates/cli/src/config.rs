//! Optional run configuration file (TOML). Every section is optional and
//! command-line flags win over it.
//!
//! ```toml
//! [fusion]          # any scenario fusion key, e.g.
//! resolution = 0.25
//! p_det_rel = 0.49
//!
//! [alloc]
//! w = 0.6
//! exclusive_machines = false
//! time_budget = 30.0   # seconds
//!
//! [eval]
//! score_cutoff = 0.3
//! max_dets = [1, 10, 100]
//! class_id = 1
//! ```

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub fusion: toml::Table,
    #[serde(default)]
    pub alloc: AllocConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocConfig {
    pub w: Option<f64>,
    pub exclusive_machines: Option<bool>,
    pub time_budget: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub score_cutoff: Option<f64>,
    pub max_dets: Option<Vec<usize>>,
    pub class_id: Option<u32>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Fusion overrides as `key=value` strings, in key order.
    pub fn fusion_overrides(&self) -> Vec<(String, String)> {
        self.fusion
            .iter()
            .map(|(k, v)| {
                let s = match v {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                (k.clone(), s)
            })
            .collect()
    }
}
