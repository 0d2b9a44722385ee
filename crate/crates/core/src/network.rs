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

//! Star networks: a router at the center, one arterial fiber per user.

use serde::Serialize;
use thiserror::Error;

use crate::photonics::{
    router_insertion_loss_db, worst_case_crosstalk_sum, MuxSpec, PhotonicsError,
};
use crate::wiring::{build_plan, demux_port_count, NodeId, WavelengthId, WiringError, WiringPlan};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Wiring(#[from] WiringError),
    #[error(transparent)]
    Photonics(#[from] PhotonicsError),
    #[error("expected one arterial fiber per node ({expected}), got {got}")]
    UserCount { expected: usize, got: usize },
    #[error("arterial length for {node} must be finite and >= 0, got {value}")]
    BadLength { node: NodeId, value: f64 },
    #[error("fiber attenuation must be finite and >= 0 dB/km, got {0}")]
    BadAttenuation(f64),
    #[error("router needs {needed} wavelengths but the multiplexer has {available} channels")]
    NotEnoughChannels { needed: usize, available: usize },
    #[error("policy thresholds must be positive: {0}")]
    BadPolicy(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FeasibilityPolicy {
    pub max_loss_budget_db: f64,
    pub max_crosstalk_ratio: f64,
}

impl FeasibilityPolicy {
    pub fn new(max_loss_budget_db: f64, max_crosstalk_ratio: f64) -> Result<Self, NetworkError> {
        if !(max_loss_budget_db > 0.0 && max_loss_budget_db.is_finite()) {
            return Err(NetworkError::BadPolicy(format!(
                "max_loss_budget_db = {max_loss_budget_db}"
            )));
        }
        if !(max_crosstalk_ratio > 0.0 && max_crosstalk_ratio.is_finite()) {
            return Err(NetworkError::BadPolicy(format!(
                "max_crosstalk_ratio = {max_crosstalk_ratio}"
            )));
        }
        Ok(FeasibilityPolicy {
            max_loss_budget_db,
            max_crosstalk_ratio,
        })
    }
}

/// The router plan, its multiplexers and the arterial fibers.
#[derive(Clone, Debug)]
pub struct StarNetwork {
    plan: WiringPlan,
    mux: MuxSpec,
    /// Arterial length in km, indexed by node.
    arms_km: Vec<f64>,
    attenuation_db_per_km: f64,
}

impl StarNetwork {
    /// Builds the canonical router for `arms_km.len()` users.
    pub fn new(mux: MuxSpec, arms_km: Vec<f64>, attenuation_db_per_km: f64) -> Result<Self, NetworkError> {
        let plan = build_plan(arms_km.len())?;
        Self::with_plan(plan, mux, arms_km, attenuation_db_per_km)
    }

    pub fn with_plan(
        plan: WiringPlan,
        mux: MuxSpec,
        arms_km: Vec<f64>,
        attenuation_db_per_km: f64,
    ) -> Result<Self, NetworkError> {
        if arms_km.len() != plan.n_nodes() {
            return Err(NetworkError::UserCount {
                expected: plan.n_nodes(),
                got: arms_km.len(),
            });
        }
        for (i, &len) in arms_km.iter().enumerate() {
            if !len.is_finite() || len < 0.0 {
                return Err(NetworkError::BadLength {
                    node: NodeId::new(i),
                    value: len,
                });
            }
        }
        if !attenuation_db_per_km.is_finite() || attenuation_db_per_km < 0.0 {
            return Err(NetworkError::BadAttenuation(attenuation_db_per_km));
        }
        let needed = demux_port_count(plan.n_nodes())?.max(plan.color_count());
        if needed > mux.channel_count() {
            return Err(NetworkError::NotEnoughChannels {
                needed,
                available: mux.channel_count(),
            });
        }
        Ok(StarNetwork {
            plan,
            mux,
            arms_km,
            attenuation_db_per_km,
        })
    }

    pub fn plan(&self) -> &WiringPlan {
        &self.plan
    }

    pub fn mux(&self) -> &MuxSpec {
        &self.mux
    }

    pub fn attenuation_db_per_km(&self) -> f64 {
        self.attenuation_db_per_km
    }

    pub fn arm_km(&self, node: NodeId) -> f64 {
        self.arms_km[node.index()]
    }

    pub fn arm_loss_db(&self, node: NodeId) -> f64 {
        self.arms_km[node.index()] * self.attenuation_db_per_km
    }

    /// Returns a copy with one arterial length replaced.
    pub fn with_arm(&self, node: NodeId, km: f64) -> Result<Self, NetworkError> {
        let mut arms = self.arms_km.clone();
        arms[node.index()] = km;
        Self::with_plan(self.plan.clone(), self.mux.clone(), arms, self.attenuation_db_per_km)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkBudget {
    #[serde(serialize_with = "serialize_node")]
    pub sender: NodeId,
    #[serde(serialize_with = "serialize_node")]
    pub receiver: NodeId,
    #[serde(serialize_with = "serialize_wavelength")]
    pub wavelength: WavelengthId,
    pub sender_fiber_db: f64,
    pub router_db: f64,
    pub receiver_fiber_db: f64,
    pub total_loss_db: f64,
    /// Worst-case crosstalk with the sender's arterial loss as the pre-router loss.
    pub crosstalk_sum: f64,
    pub loss_ok: bool,
    pub crosstalk_ok: bool,
    pub feasible: bool,
}

fn serialize_node<S: serde::Serializer>(n: &NodeId, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&n.label())
}

fn serialize_wavelength<S: serde::Serializer>(w: &WavelengthId, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u32(w.channel())
}

/// Loss and crosstalk for photons sent from `u` to `v`.
pub fn link_budget(
    net: &StarNetwork,
    u: NodeId,
    v: NodeId,
    policy: &FeasibilityPolicy,
) -> Result<LinkBudget, NetworkError> {
    let wavelength = net.plan.wavelength_for(u, v)?;
    let sender_fiber_db = net.arm_loss_db(u);
    let receiver_fiber_db = net.arm_loss_db(v);
    let router_db = router_insertion_loss_db(&net.mux);
    let total_loss_db = sender_fiber_db + router_db + receiver_fiber_db;
    let crosstalk = worst_case_crosstalk_sum(&net.mux, sender_fiber_db, wavelength.channel() as usize)?;
    let loss_ok = total_loss_db <= policy.max_loss_budget_db;
    let crosstalk_ok = crosstalk.worst_case_sum <= policy.max_crosstalk_ratio;
    Ok(LinkBudget {
        sender: u,
        receiver: v,
        wavelength,
        sender_fiber_db,
        router_db,
        receiver_fiber_db,
        total_loss_db,
        crosstalk_sum: crosstalk.worst_case_sum,
        loss_ok,
        crosstalk_ok,
        feasible: loss_ok && crosstalk_ok,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reach {
    /// Longest symmetric arm, and the matching end-to-end distance.
    Bounded { per_arm_km: f64, end_to_end_km: f64 },
    /// Lossless fiber: distance never limits the budget.
    Unbounded,
}

impl Reach {
    pub fn per_arm_km(self) -> Option<f64> {
        match self {
            Reach::Bounded { per_arm_km, .. } => Some(per_arm_km),
            Reach::Unbounded => None,
        }
    }
}

/// Largest symmetric arm length `L` with `2 L alpha + 2 IL <= budget`.
pub fn max_reach_km(net: &StarNetwork, policy: &FeasibilityPolicy) -> Reach {
    let alpha = net.attenuation_db_per_km;
    if alpha == 0.0 {
        return Reach::Unbounded;
    }
    let per_arm_km =
        ((policy.max_loss_budget_db - router_insertion_loss_db(&net.mux)) / (2.0 * alpha)).max(0.0);
    Reach::Bounded {
        per_arm_km,
        end_to_end_km: 2.0 * per_arm_km,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportSummary {
    pub users: usize,
    pub wavelengths: usize,
    pub total_pairs: usize,
    pub feasible_pairs: usize,
    pub worst_pair: Option<LinkBudget>,
    pub max_crosstalk_sum: f64,
    pub fiber_attenuation_db_per_km: f64,
    pub router_insertion_loss_db: f64,
    pub policy: FeasibilityPolicy,
    pub reach: Reach,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkReport {
    pub summary: ReportSummary,
    pub links: Vec<LinkBudget>,
}

impl NetworkReport {
    pub fn all_feasible(&self) -> bool {
        self.summary.feasible_pairs == self.summary.total_pairs
    }
}

/// One budget per unordered pair, worst loss first.
///
/// Crosstalk depends on who sends, so each pair is evaluated in the direction
/// with the larger crosstalk sum.
pub fn network_report(net: &StarNetwork, policy: &FeasibilityPolicy) -> Result<NetworkReport, NetworkError> {
    let mut links = Vec::with_capacity(net.plan.n_nodes() * (net.plan.n_nodes() - 1) / 2);
    for (u, v) in net.plan.pairs() {
        let forward = link_budget(net, u, v, policy)?;
        let backward = link_budget(net, v, u, policy)?;
        links.push(if backward.crosstalk_sum > forward.crosstalk_sum {
            backward
        } else {
            forward
        });
    }
    links.sort_by(|a, b| {
        b.total_loss_db
            .total_cmp(&a.total_loss_db)
            .then_with(|| a.sender.min(a.receiver).cmp(&b.sender.min(b.receiver)))
            .then_with(|| a.sender.max(a.receiver).cmp(&b.sender.max(b.receiver)))
    });
    let feasible_pairs = links.iter().filter(|l| l.feasible).count();
    let summary = ReportSummary {
        users: net.plan.n_nodes(),
        wavelengths: net.plan.color_count(),
        total_pairs: links.len(),
        feasible_pairs,
        worst_pair: links.first().cloned(),
        max_crosstalk_sum: links.iter().map(|l| l.crosstalk_sum).fold(0.0, f64::max),
        fiber_attenuation_db_per_km: net.attenuation_db_per_km,
        router_insertion_loss_db: router_insertion_loss_db(&net.mux),
        policy: *policy,
        reach: max_reach_km(net, policy),
    };
    Ok(NetworkReport { summary, links })
}
