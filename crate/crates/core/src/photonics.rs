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

//! dB and photon-probability arithmetic for multiplexer passes.
//!
//! All quantities are ratios of single-photon output probabilities, never
//! absolute photon numbers:
//!
//! ```text
//!   IL          = 10 log10(P_in / P_out)
//!   FC_j(l_i)   = 10 log10(P_j(l_i) / P_i(l_i))       P_i(l_i) = P_out
//!   P_out / P_in      = 10^(-IL / 10)
//!   P_j(l_i) / P_in   = 10^((FC_j(l_i) - IL) / 10)
//! ```
//!
//! A router transit crosses two multiplexers. A photon that reaches the wrong
//! user must leak at both, so leak-to-signal after the transit is
//! `10^(2 FC / 10)` and the insertion loss cancels.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhotonicsError {
    #[error("invalid multiplexer spec: {0}")]
    InvalidSpec(String),
    #[error("offset 0 is the signal path, not a leak")]
    NotALeak,
    #[error("channel {channel} is outside 1..={count}")]
    ChannelOutOfRange { channel: i64, count: usize },
    #[error("pre-router loss must be a finite non-negative dB value, got {0}")]
    BadPreRouterLoss(f64),
}

/// Converts a loss in dB to the surviving fraction, `10^(-db / 10)`.
///
/// Negative inputs (gain) are accepted and return values above 1.
pub fn db_to_ratio(db: f64) -> TransmissionRatio {
    TransmissionRatio(10f64.powf(-db / 10.0))
}

/// Dimensionless probability ratio such as `P_out / P_in`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct TransmissionRatio(f64);

impl TransmissionRatio {
    pub fn value(self) -> f64 {
        self.0
    }

    /// The ratio expressed as a loss in dB (`+inf` for zero).
    pub fn loss_db(self) -> f64 {
        -10.0 * self.0.log10()
    }
}

/// Optical parameters of one wavelength multiplexer.
///
/// Crosstalk is given by two figures: one for the channels adjacent to the
/// signal and one for all others. An optional full matrix overrides both,
/// where `matrix[i - 1][j - 1]` is the crosstalk of channel `i` into port `j`.
/// `f64::NEG_INFINITY` means perfect isolation.
#[derive(Clone, Debug, PartialEq)]
pub struct MuxSpec {
    channel_count: usize,
    insertion_loss_db: f64,
    adjacent_crosstalk_db: f64,
    nonadjacent_crosstalk_db: f64,
    crosstalk_matrix_db: Option<Vec<Vec<f64>>>,
}

fn check_crosstalk(name: &str, value: f64) -> Result<(), PhotonicsError> {
    if value.is_nan() || value >= 0.0 {
        return Err(PhotonicsError::InvalidSpec(format!(
            "{name} must be strictly negative dB, got {value}"
        )));
    }
    Ok(())
}

impl MuxSpec {
    pub fn new(
        channel_count: usize,
        insertion_loss_db: f64,
        adjacent_crosstalk_db: f64,
        nonadjacent_crosstalk_db: f64,
    ) -> Result<Self, PhotonicsError> {
        if channel_count < 2 {
            return Err(PhotonicsError::InvalidSpec(format!(
                "channel_count must be at least 2, got {channel_count}"
            )));
        }
        if !insertion_loss_db.is_finite() || insertion_loss_db < 0.0 {
            return Err(PhotonicsError::InvalidSpec(format!(
                "insertion_loss_db must be finite and >= 0, got {insertion_loss_db}"
            )));
        }
        check_crosstalk("adjacent_crosstalk_db", adjacent_crosstalk_db)?;
        check_crosstalk("nonadjacent_crosstalk_db", nonadjacent_crosstalk_db)?;
        if adjacent_crosstalk_db < nonadjacent_crosstalk_db {
            return Err(PhotonicsError::InvalidSpec(format!(
                "adjacent crosstalk ({adjacent_crosstalk_db} dB) must not be weaker than \
                 non-adjacent crosstalk ({nonadjacent_crosstalk_db} dB)"
            )));
        }
        Ok(MuxSpec {
            channel_count,
            insertion_loss_db,
            adjacent_crosstalk_db,
            nonadjacent_crosstalk_db,
            crosstalk_matrix_db: None,
        })
    }

    /// A multiplexer whose channels do not leak into each other.
    pub fn isolated(channel_count: usize, insertion_loss_db: f64) -> Result<Self, PhotonicsError> {
        Self::new(
            channel_count,
            insertion_loss_db,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        )
    }

    /// Replaces the two-valued crosstalk model with measured per-pair data.
    pub fn with_crosstalk_matrix(mut self, matrix: Vec<Vec<f64>>) -> Result<Self, PhotonicsError> {
        let n = self.channel_count;
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(PhotonicsError::InvalidSpec(format!(
                "crosstalk matrix must be {n}x{n}"
            )));
        }
        for (i, row) in matrix.iter().enumerate() {
            for (j, &value) in row.iter().enumerate() {
                if i != j {
                    check_crosstalk(&format!("crosstalk_matrix_db[{i}][{j}]"), value)?;
                }
            }
        }
        self.crosstalk_matrix_db = Some(matrix);
        Ok(self)
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    pub fn insertion_loss_db(&self) -> f64 {
        self.insertion_loss_db
    }

    pub fn adjacent_crosstalk_db(&self) -> f64 {
        self.adjacent_crosstalk_db
    }

    pub fn nonadjacent_crosstalk_db(&self) -> f64 {
        self.nonadjacent_crosstalk_db
    }

    pub fn crosstalk_matrix_db(&self) -> Option<&[Vec<f64>]> {
        self.crosstalk_matrix_db.as_deref()
    }

    /// The channel with two adjacent neighbors used for default worst cases.
    pub fn mid_band_channel(&self) -> usize {
        (self.channel_count / 2).max(1)
    }

    /// Two-valued crosstalk figure for a port `offset` channels from the signal.
    pub fn crosstalk_db(&self, offset: i64) -> Result<f64, PhotonicsError> {
        match offset.unsigned_abs() {
            0 => Err(PhotonicsError::NotALeak),
            1 => Ok(self.adjacent_crosstalk_db),
            _ => Ok(self.nonadjacent_crosstalk_db),
        }
    }

    /// Crosstalk of channel `signal` into port `port`, both 1-based.
    pub fn crosstalk_between(&self, signal: usize, port: usize) -> Result<f64, PhotonicsError> {
        self.check_channel(signal as i64)?;
        self.check_channel(port as i64)?;
        match &self.crosstalk_matrix_db {
            Some(m) if signal != port => Ok(m[signal - 1][port - 1]),
            _ => self.crosstalk_db(port as i64 - signal as i64),
        }
    }

    pub(crate) fn check_channel(&self, channel: i64) -> Result<(), PhotonicsError> {
        if channel < 1 || channel as usize > self.channel_count {
            return Err(PhotonicsError::ChannelOutOfRange {
                channel,
                count: self.channel_count,
            });
        }
        Ok(())
    }
}

/// Probability that a photon on `signal` leaves a single multiplexer pass on
/// port `port`. Equal ports give the signal transmission `10^(-IL/10)`.
pub fn port_transmission(
    spec: &MuxSpec,
    signal: usize,
    port: usize,
) -> Result<TransmissionRatio, PhotonicsError> {
    if signal == port {
        spec.check_channel(signal as i64)?;
        return Ok(db_to_ratio(spec.insertion_loss_db));
    }
    let fc = spec.crosstalk_between(signal, port)?;
    Ok(db_to_ratio(spec.insertion_loss_db - fc))
}

/// `P_j(l_i) / P_in = 10^((FC - IL) / 10)` for a port `offset = j - i` away.
pub fn leak_ratio_per_pass(spec: &MuxSpec, offset: i64) -> Result<TransmissionRatio, PhotonicsError> {
    let fc = spec.crosstalk_db(offset)?;
    Ok(db_to_ratio(spec.insertion_loss_db - fc))
}

/// Both multiplexer passes of a router transit.
pub fn router_insertion_loss_db(spec: &MuxSpec) -> f64 {
    2.0 * spec.insertion_loss_db
}

/// Leak-to-signal ratio after a router transit, `10^(2 FC / 10)`.
pub fn two_pass_crosstalk_ratio(spec: &MuxSpec, offset: i64) -> Result<f64, PhotonicsError> {
    let fc = spec.crosstalk_db(offset)?;
    Ok(10f64.powf(2.0 * fc / 10.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosstalkTerm {
    pub channel: usize,
    pub crosstalk_db: Option<f64>,
    pub ratio: f64,
}

/// Worst-case crosstalk seen by one signal channel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosstalkAssessment {
    pub signal_channel: usize,
    pub pre_router_loss_db: f64,
    /// Largest single-interferer term.
    pub per_channel_ratio: f64,
    pub worst_case_sum: f64,
    pub worst_case_sum_db: f64,
    pub contributions: Vec<CrosstalkTerm>,
}

/// Sums `10^((X + 2 FC_j) / 10)` over every other channel `j` of the
/// multiplexer, where `X` is loss suffered by the signal before the router
/// but not by the interferers.
///
/// Band-edge channels have a single adjacent neighbor.
pub fn worst_case_crosstalk_sum(
    spec: &MuxSpec,
    pre_router_loss_db: f64,
    signal_channel: usize,
) -> Result<CrosstalkAssessment, PhotonicsError> {
    if !pre_router_loss_db.is_finite() || pre_router_loss_db < 0.0 {
        return Err(PhotonicsError::BadPreRouterLoss(pre_router_loss_db));
    }
    spec.check_channel(signal_channel as i64)?;
    let mut contributions = Vec::with_capacity(spec.channel_count - 1);
    for channel in (1..=spec.channel_count).filter(|&j| j != signal_channel) {
        let fc = spec.crosstalk_between(signal_channel, channel)?;
        let ratio = 10f64.powf((pre_router_loss_db + 2.0 * fc) / 10.0);
        contributions.push(CrosstalkTerm {
            channel,
            crosstalk_db: fc.is_finite().then_some(fc),
            ratio,
        });
    }
    let worst_case_sum: f64 = contributions.iter().map(|t| t.ratio).sum();
    let per_channel_ratio = contributions.iter().map(|t| t.ratio).fold(0.0, f64::max);
    Ok(CrosstalkAssessment {
        signal_channel,
        pre_router_loss_db,
        per_channel_ratio,
        worst_case_sum,
        worst_case_sum_db: 10.0 * worst_case_sum.log10(),
        contributions,
    })
}

// Serde form of MuxSpec: crosstalk `null` stands for perfect isolation.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MuxSpecRepr {
    channel_count: usize,
    insertion_loss_db: f64,
    adjacent_crosstalk_db: Option<f64>,
    nonadjacent_crosstalk_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    crosstalk_matrix_db: Option<Vec<Vec<Option<f64>>>>,
}

fn finite_or_isolated(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NEG_INFINITY)
}

fn isolated_as_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Serialize for MuxSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MuxSpecRepr {
            channel_count: self.channel_count,
            insertion_loss_db: self.insertion_loss_db,
            adjacent_crosstalk_db: isolated_as_none(self.adjacent_crosstalk_db),
            nonadjacent_crosstalk_db: isolated_as_none(self.nonadjacent_crosstalk_db),
            crosstalk_matrix_db: self.crosstalk_matrix_db.as_ref().map(|m| {
                m.iter()
                    .map(|row| row.iter().map(|&v| isolated_as_none(v)).collect())
                    .collect()
            }),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MuxSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = MuxSpecRepr::deserialize(d)?;
        let spec = MuxSpec::new(
            repr.channel_count,
            repr.insertion_loss_db,
            finite_or_isolated(repr.adjacent_crosstalk_db),
            finite_or_isolated(repr.nonadjacent_crosstalk_db),
        )
        .map_err(serde::de::Error::custom)?;
        match repr.crosstalk_matrix_db {
            None => Ok(spec),
            Some(m) => {
                let m = m
                    .into_iter()
                    .map(|row| row.into_iter().map(finite_or_isolated).collect())
                    .collect();
                spec.with_crosstalk_matrix(m).map_err(serde::de::Error::custom)
            }
        }
    }
}
