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

//! Wavelength assignment inside an N-port passive router.
//!
//! The router is built from N multiplexers. Every pair of multiplexers is
//! joined by exactly one fiber between two of their demultiplexing ports, and
//! that fiber carries a single wavelength. Treating multiplexers as vertices
//! and wavelengths as colors, a valid wiring is a proper edge coloring of the
//! complete graph K_N.
//!
//! [`build_plan`] produces the canonical coloring:
//!
//! ```text
//!   odd n:   table(u, v)     = ((u + v) mod n) + 1
//!   even n:  table(u, v)     = ((u + v) mod (n - 1)) + 1     for u, v < n - 1
//!            table(u, n - 1) = ((2u) mod (n - 1)) + 1
//! ```
//!
//! The even case fills the odd (n - 1) table first and then copies the value
//! each row would have had on its own diagonal into the last row and column.
//! This uses the minimum number of colors: n - 1 for even n, n for odd n.

mod verify;

pub use verify::{verify_plan, VerificationReport, Violation, ViolationKind};

use std::fmt;

use thiserror::Error;

/// Errors raised when building or querying a wiring plan.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WiringError {
    #[error("invalid router size {0}: at least 2 nodes are required")]
    InvalidSize(usize),
    #[error("node {node} is out of range for a {n}-node plan")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("node {0} has no link to itself")]
    NoSelfLink(NodeId),
    #[error("no wavelength is assigned between {0} and {1}")]
    MissingPair(NodeId, NodeId),
    #[error("table is {rows}x{cols}, expected {n}x{n}")]
    Shape { n: usize, rows: usize, cols: usize },
}

/// A multiplexer (and the user port behind it), 0-based.
///
/// Displays as a spreadsheet-style letter: 0 is `A`, 25 is `Z`, 26 is `AA`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub const fn new(index: usize) -> Self {
        NodeId(index)
    }

    pub const fn index(self) -> usize {
        self.0
    }

    pub fn label(self) -> String {
        let mut n = self.0 + 1;
        let mut out = Vec::new();
        while n > 0 {
            let rem = (n - 1) % 26;
            out.push(b'A' + rem as u8);
            n = (n - 1) / 26;
        }
        out.reverse();
        String::from_utf8(out).expect("ascii letters")
    }

    /// Parses a letter label (`"A"`, `"AB"`), case-insensitive.
    pub fn from_label(label: &str) -> Option<Self> {
        if label.is_empty() {
            return None;
        }
        let mut acc: usize = 0;
        for ch in label.chars() {
            if !ch.is_ascii_alphabetic() {
                return None;
            }
            let digit = (ch.to_ascii_uppercase() as u8 - b'A') as usize + 1;
            acc = acc.checked_mul(26)?.checked_add(digit)?;
        }
        Some(NodeId(acc - 1))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// An abstract wavelength channel label, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WavelengthId(u32);

impl WavelengthId {
    pub const fn new(channel: u32) -> Self {
        WavelengthId(channel)
    }

    pub const fn channel(self) -> u32 {
        self.0
    }
}

impl fmt::Display for WavelengthId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Minimum number of colors for a proper edge coloring of K_n.
pub fn chromatic_index(n: usize) -> usize {
    if n.is_multiple_of(2) {
        n - 1
    } else {
        n
    }
}

/// Demultiplexing ports each multiplexer needs to realize the wiring.
///
/// For odd `n` one port per multiplexer stays idle.
pub fn demux_port_count(n: usize) -> Result<usize, WiringError> {
    if n < 2 {
        return Err(WiringError::InvalidSize(n));
    }
    Ok(chromatic_index(n))
}

/// Builds the canonical wiring plan for an `n`-port router.
pub fn build_plan(n: usize) -> Result<WiringPlan, WiringError> {
    if n < 2 {
        return Err(WiringError::InvalidSize(n));
    }
    Ok(WiringPlan {
        n,
        colors: chromatic_index(n),
        assignment: Assignment::Canonical,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Assignment {
    /// Entries follow the closed form; nothing is stored.
    Canonical,
    /// Row-major n*n table, 0 meaning "no wavelength".
    Table(Vec<u32>),
}

/// Wavelength assignment table for an N-port router.
///
/// Plans from [`build_plan`] always satisfy the coloring invariants. Plans
/// loaded through [`WiringPlan::from_table`] or
/// [`WiringPlan::from_upper_triangle`] are taken as-is and should be checked
/// with [`verify_plan`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WiringPlan {
    n: usize,
    colors: usize,
    assignment: Assignment,
}

fn canonical_entry(n: usize, u: usize, v: usize) -> Option<u32> {
    if u == v {
        return None;
    }
    let value = if n % 2 == 1 {
        (u + v) % n
    } else {
        let m = n - 1;
        if v == m {
            (2 * u) % m
        } else if u == m {
            (2 * v) % m
        } else {
            (u + v) % m
        }
    };
    Some(value as u32 + 1)
}

impl WiringPlan {
    /// Wraps an arbitrary full table without validating its contents.
    ///
    /// `rows[u][v]` is the wavelength on the link u-v, `None` for no link.
    pub fn from_table(colors: usize, rows: &[Vec<Option<u32>>]) -> Result<Self, WiringError> {
        let n = rows.len();
        if n < 2 {
            return Err(WiringError::InvalidSize(n));
        }
        let mut table = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(WiringError::Shape {
                    n,
                    rows: n,
                    cols: row.len(),
                });
            }
            table.extend(row.iter().map(|e| e.unwrap_or(0)));
        }
        Ok(WiringPlan {
            n,
            colors,
            assignment: Assignment::Table(table),
        })
    }

    /// Builds a symmetric plan from its upper triangle.
    ///
    /// `rows[u][k]` is the wavelength between `u` and `u + 1 + k`. Short rows
    /// or `None` cells leave the pair unassigned; extra cells are ignored.
    pub fn from_upper_triangle(
        n: usize,
        colors: usize,
        rows: &[Vec<Option<u32>>],
    ) -> Result<Self, WiringError> {
        if n < 2 {
            return Err(WiringError::InvalidSize(n));
        }
        let mut table = vec![0u32; n * n];
        for (u, row) in rows.iter().enumerate().take(n) {
            for (k, cell) in row.iter().enumerate() {
                let v = u + 1 + k;
                if v >= n {
                    break;
                }
                let value = cell.unwrap_or(0);
                table[u * n + v] = value;
                table[v * n + u] = value;
            }
        }
        Ok(WiringPlan {
            n,
            colors,
            assignment: Assignment::Table(table),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn color_count(&self) -> usize {
        self.colors
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n).map(NodeId)
    }

    /// Unordered node pairs `(u, v)` with `u < v`, in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> {
        let n = self.n;
        (0..n).flat_map(move |u| (u + 1..n).map(move |v| (NodeId(u), NodeId(v))))
    }

    /// Whether the plan was produced by [`build_plan`].
    pub fn is_canonical(&self) -> bool {
        matches!(self.assignment, Assignment::Canonical)
    }

    /// Raw table cell; `None` for the diagonal of canonical plans and for
    /// unassigned cells of loaded plans.
    pub(crate) fn entry(&self, u: usize, v: usize) -> Option<u32> {
        match &self.assignment {
            Assignment::Canonical => canonical_entry(self.n, u, v),
            Assignment::Table(t) => match t[u * self.n + v] {
                0 => None,
                w => Some(w),
            },
        }
    }

    fn check_node(&self, node: NodeId) -> Result<(), WiringError> {
        if node.0 < self.n {
            Ok(())
        } else {
            Err(WiringError::NodeOutOfRange { node, n: self.n })
        }
    }

    /// Wavelength carried on the link between `u` and `v`.
    pub fn wavelength_for(&self, u: NodeId, v: NodeId) -> Result<WavelengthId, WiringError> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Err(WiringError::NoSelfLink(u));
        }
        self.entry(u.0, v.0)
            .map(WavelengthId)
            .ok_or(WiringError::MissingPair(u, v))
    }

    /// The node a photon entering at `ingress` on `wavelength` is delivered to.
    ///
    /// Returns `None` for a wavelength that has no link at `ingress`: the idle
    /// color of each vertex when `n` is odd, or anything outside `1..=colors`.
    pub fn route(
        &self,
        ingress: NodeId,
        wavelength: WavelengthId,
    ) -> Result<Option<NodeId>, WiringError> {
        self.check_node(ingress)?;
        let w = wavelength.0;
        if w == 0 || w as usize > self.colors {
            return Ok(None);
        }
        match &self.assignment {
            Assignment::Canonical => Ok(self.canonical_route(ingress.0, w as usize - 1)),
            Assignment::Table(_) => Ok((0..self.n)
                .find(|&v| v != ingress.0 && self.entry(ingress.0, v) == Some(w))
                .map(NodeId)),
        }
    }

    // Inverse of the closed form; `c` is the 0-based color.
    fn canonical_route(&self, u: usize, c: usize) -> Option<NodeId> {
        let n = self.n;
        if n % 2 == 1 {
            let v = (c + n - u) % n;
            return (v != u).then_some(NodeId(v));
        }
        let m = n - 1;
        if u == m {
            // 2 * (n / 2) = n = 1 (mod m), so n / 2 inverts the doubling.
            return Some(NodeId(c * (n / 2) % m));
        }
        let v = (c + m - u) % m;
        Some(NodeId(if v == u { m } else { v }))
    }

    /// The table's upper triangle, row `u` listing pairs `(u, v)` for `v > u`.
    pub fn upper_triangle(&self) -> Vec<Vec<Option<u32>>> {
        (0..self.n.saturating_sub(1))
            .map(|u| (u + 1..self.n).map(|v| self.entry(u, v)).collect())
            .collect()
    }
}
