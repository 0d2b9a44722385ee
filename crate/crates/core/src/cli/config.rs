// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! JSON configuration for `budget` and `simulate`.
//!
//! Every section and field is optional. A complete file with the defaults:
//!
//! ```json
//! {
//!   "max_nodes": 4200,
//!   "mux": {
//!     "channel_count": 40,
//!     "insertion_loss_db": 5.0,
//!     "adjacent_crosstalk_db": -25.0,
//!     "nonadjacent_crosstalk_db": -30.0
//!   },
//!   "network": {
//!     "fiber_attenuation_db_per_km": 0.2,
//!     "users": { "count": 40, "length_km": 25.0 }
//!   },
//!   "policy": { "max_loss_budget_db": 20.0, "max_crosstalk_ratio": 0.001 },
//!   "sim": { "trials": 1000000, "seed": 42, "passes": 2 }
//! }
//! ```
//!
//! `network.users` may instead list each node:
//! `[{"node": "A", "length_km": 12.5}, {"node": "B", "length_km": 30}]`.
//! Crosstalk `null` means perfect isolation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{FeasibilityPolicy, StarNetwork};
use crate::photonics::MuxSpec;
use crate::transport::SimConfig;
use crate::wiring::{demux_port_count, NodeId};

/// Built-in physical defaults.
pub mod defaults {
    /// Largest router the tools accept; about the largest channel count
    /// demonstrated for a laboratory WDM device.
    pub const MAX_NODES: usize = 4200;
    /// Common dense-WDM product channel count.
    pub const CHANNEL_COUNT: usize = 40;
    /// Typical commercial multiplexer insertion loss.
    pub const INSERTION_LOSS_DB: f64 = 5.0;
    /// Typical commercial adjacent-channel isolation.
    pub const ADJACENT_CROSSTALK_DB: f64 = -25.0;
    /// Typical commercial non-adjacent-channel isolation.
    pub const NONADJACENT_CROSSTALK_DB: f64 = -30.0;
    /// Assumed: standard single-mode fiber near 1550 nm.
    pub const FIBER_ATTENUATION_DB_PER_KM: f64 = 0.2;
    /// Assumed: loss a point-to-point QKD link tolerates.
    pub const MAX_LOSS_BUDGET_DB: f64 = 20.0;
    /// Assumed: crosstalk low enough to ignore next to other error sources.
    pub const MAX_CROSSTALK_RATIO: f64 = 1e-3;
    /// Assumed: one user per multiplexer port.
    pub const USERS: usize = 40;
    /// Assumed: arm length giving a 50 km end-to-end link.
    pub const ARM_LENGTH_KM: f64 = 25.0;
    pub const TRIALS: u64 = 1_000_000;
    pub const SEED: u64 = 42;
    /// A router transit crosses two multiplexers.
    pub const PASSES: u32 = 2;
}

#[derive(Debug, Error)]
pub enum ConfigError {
    /// Syntax and type errors, with serde's line and column.
    #[error("{0}")]
    Parse(#[from] serde_json::Error),
    /// A value that parses but breaks an invariant.
    #[error("{}{path}: {message}", .line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        path: String,
        line: Option<usize>,
        message: String,
    },
}

/// Line of the key at `path` (e.g. `["mux", "insertion_loss_db"]`), found by
/// scanning for each key in turn. `None` when a key is absent.
fn locate(text: &str, path: &[&str]) -> Option<usize> {
    let mut pos = 0;
    for key in path {
        let needle = format!("\"{key}\"");
        pos += text[pos..].find(&needle)?;
    }
    Some(text[..pos].matches('\n').count() + 1)
}

fn default_max_nodes() -> usize {
    defaults::MAX_NODES
}
fn default_channel_count() -> usize {
    defaults::CHANNEL_COUNT
}
fn default_il() -> f64 {
    defaults::INSERTION_LOSS_DB
}
fn default_adj() -> Option<f64> {
    Some(defaults::ADJACENT_CROSSTALK_DB)
}
fn default_nonadj() -> Option<f64> {
    Some(defaults::NONADJACENT_CROSSTALK_DB)
}
fn default_alpha() -> f64 {
    defaults::FIBER_ATTENUATION_DB_PER_KM
}
fn default_budget() -> f64 {
    defaults::MAX_LOSS_BUDGET_DB
}
fn default_xt() -> f64 {
    defaults::MAX_CROSSTALK_RATIO
}
fn default_trials() -> u64 {
    defaults::TRIALS
}
fn default_seed() -> u64 {
    defaults::SEED
}
fn default_passes() -> u32 {
    defaults::PASSES
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MuxSection {
    #[serde(default = "default_channel_count")]
    channel_count: usize,
    #[serde(default = "default_il")]
    insertion_loss_db: f64,
    #[serde(default = "default_adj")]
    adjacent_crosstalk_db: Option<f64>,
    #[serde(default = "default_nonadj")]
    nonadjacent_crosstalk_db: Option<f64>,
    #[serde(default)]
    crosstalk_matrix_db: Option<Vec<Vec<Option<f64>>>>,
}

impl Default for MuxSection {
    fn default() -> Self {
        MuxSection {
            channel_count: default_channel_count(),
            insertion_loss_db: default_il(),
            adjacent_crosstalk_db: default_adj(),
            nonadjacent_crosstalk_db: default_nonadj(),
            crosstalk_matrix_db: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UserEntry {
    node: String,
    length_km: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum UsersSection {
    Uniform { count: usize, length_km: f64 },
    List(Vec<UserEntry>),
}

impl Default for UsersSection {
    fn default() -> Self {
        UsersSection::Uniform {
            count: defaults::USERS,
            length_km: defaults::ARM_LENGTH_KM,
        }
    }
}

impl UsersSection {
    fn arms_km(self) -> Result<Vec<f64>, String> {
        match self {
            UsersSection::Uniform { count, length_km } => Ok(vec![length_km; count]),
            UsersSection::List(entries) => {
                let n = entries.len();
                let mut arms = vec![None; n];
                for e in entries {
                    let node = NodeId::from_label(&e.node)
                        .ok_or_else(|| format!("'{}' is not a node label", e.node))?;
                    let slot = arms.get_mut(node.index()).ok_or_else(|| {
                        format!("node {node} does not exist in a {n}-user network")
                    })?;
                    if slot.is_some() {
                        return Err(format!("node {node} is listed twice"));
                    }
                    *slot = Some(e.length_km);
                }
                Ok(arms.into_iter().map(|a| a.expect("every slot filled")).collect())
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkSection {
    #[serde(default = "default_alpha")]
    fiber_attenuation_db_per_km: f64,
    #[serde(default)]
    users: UsersSection,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            fiber_attenuation_db_per_km: default_alpha(),
            users: UsersSection::default(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicySection {
    #[serde(default = "default_budget")]
    max_loss_budget_db: f64,
    #[serde(default = "default_xt")]
    max_crosstalk_ratio: f64,
}

impl Default for PolicySection {
    fn default() -> Self {
        PolicySection {
            max_loss_budget_db: default_budget(),
            max_crosstalk_ratio: default_xt(),
        }
    }
}

/// Simulation settings from the `sim` section.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_passes")]
    pub passes: u32,
    #[serde(default)]
    pub signal_channel: Option<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            trials: default_trials(),
            seed: default_seed(),
            passes: default_passes(),
            signal_channel: None,
            workers: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_max_nodes")]
    max_nodes: usize,
    #[serde(default)]
    mux: MuxSection,
    #[serde(default)]
    network: NetworkSection,
    #[serde(default)]
    policy: PolicySection,
    #[serde(default)]
    sim: SimSection,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct Config {
    pub max_nodes: usize,
    pub mux: MuxSpec,
    pub fiber_attenuation_db_per_km: f64,
    pub arms_km: Vec<f64>,
    pub policy: FeasibilityPolicy,
    pub sim: SimSection,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let invalid = |path: &[&str], message: String| ConfigError::Invalid {
            path: path.join("."),
            line: locate(text, path),
            message,
        };

        let m = &raw.mux;
        if m.channel_count < 2 {
            return Err(invalid(&["mux", "channel_count"], format!("must be at least 2, got {}", m.channel_count)));
        }
        if !m.insertion_loss_db.is_finite() || m.insertion_loss_db < 0.0 {
            return Err(invalid(
                &["mux", "insertion_loss_db"],
                format!("must be finite and >= 0 dB, got {}", m.insertion_loss_db),
            ));
        }
        for (key, value) in [
            ("adjacent_crosstalk_db", m.adjacent_crosstalk_db),
            ("nonadjacent_crosstalk_db", m.nonadjacent_crosstalk_db),
        ] {
            if let Some(v) = value.filter(|v| v.is_nan() || *v >= 0.0) {
                return Err(invalid(&["mux", key], format!("must be strictly negative dB or null, got {v}")));
            }
        }
        let isolated = |v: Option<f64>| v.unwrap_or(f64::NEG_INFINITY);
        let mut mux = MuxSpec::new(
            m.channel_count,
            m.insertion_loss_db,
            isolated(m.adjacent_crosstalk_db),
            isolated(m.nonadjacent_crosstalk_db),
        )
        .map_err(|e| invalid(&["mux", "adjacent_crosstalk_db"], e.to_string()))?;
        if let Some(matrix) = &raw.mux.crosstalk_matrix_db {
            let matrix = matrix
                .iter()
                .map(|row| row.iter().map(|&v| isolated(v)).collect())
                .collect();
            mux = mux
                .with_crosstalk_matrix(matrix)
                .map_err(|e| invalid(&["mux", "crosstalk_matrix_db"], e.to_string()))?;
        }

        let alpha = raw.network.fiber_attenuation_db_per_km;
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(invalid(
                &["network", "fiber_attenuation_db_per_km"],
                format!("must be finite and >= 0 dB/km, got {alpha}"),
            ));
        }
        let users = ["network", "users"];
        let arms_km = raw.network.users.arms_km().map_err(|e| invalid(&users, e))?;
        if arms_km.len() < 2 {
            return Err(invalid(&users, format!("a router needs at least 2 users, got {}", arms_km.len())));
        }
        if arms_km.len() > raw.max_nodes {
            return Err(invalid(
                &users,
                format!(
                    "{} users exceed the router size limit of {} (raise max_nodes to allow more)",
                    arms_km.len(),
                    raw.max_nodes
                ),
            ));
        }
        if let Some((i, len)) = arms_km.iter().enumerate().find(|(_, l)| !l.is_finite() || **l < 0.0) {
            return Err(invalid(&users, format!("length for {} must be finite and >= 0 km, got {len}", NodeId::new(i))));
        }
        let needed = demux_port_count(arms_km.len()).expect("at least 2 users");
        if needed > mux.channel_count() {
            return Err(invalid(
                &["mux", "channel_count"],
                format!(
                    "{} users need {needed} wavelengths but the multiplexer has {} channels",
                    arms_km.len(),
                    mux.channel_count()
                ),
            ));
        }

        let p = &raw.policy;
        let policy = FeasibilityPolicy::new(p.max_loss_budget_db, p.max_crosstalk_ratio).map_err(|e| {
            let key = if !(p.max_loss_budget_db > 0.0 && p.max_loss_budget_db.is_finite()) {
                "max_loss_budget_db"
            } else {
                "max_crosstalk_ratio"
            };
            invalid(&["policy", key], e.to_string())
        })?;

        if raw.sim.trials == 0 {
            return Err(invalid(&["sim", "trials"], "must be at least 1".into()));
        }
        if let Some(ch) = raw.sim.signal_channel {
            if ch < 1 || ch > mux.channel_count() {
                return Err(invalid(
                    &["sim", "signal_channel"],
                    format!("{ch} is outside 1..={}", mux.channel_count()),
                ));
            }
        }
        if raw.sim.workers == Some(0) {
            return Err(invalid(&["sim", "workers"], "must be at least 1".into()));
        }

        let config = Config {
            max_nodes: raw.max_nodes,
            mux,
            fiber_attenuation_db_per_km: alpha,
            arms_km,
            policy,
            sim: raw.sim,
        };
        config.star_network()?;
        Ok(config)
    }

    pub fn star_network(&self) -> Result<StarNetwork, ConfigError> {
        StarNetwork::new(
            self.mux.clone(),
            self.arms_km.clone(),
            self.fiber_attenuation_db_per_km,
        )
        .map_err(|e| ConfigError::Invalid {
            path: "network".into(),
            line: None,
            message: e.to_string(),
        })
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            trials: self.sim.trials,
            seed: self.sim.seed,
            passes: self.sim.passes,
            signal_channel: self.sim.signal_channel,
            workers: self.sim.workers,
            spec: self.mux.clone(),
        }
    }
}
