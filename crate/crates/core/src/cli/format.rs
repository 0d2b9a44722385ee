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

//! Plan file formats.
//!
//! JSON plans store the upper triangle of the table: row `u` lists the
//! wavelengths toward `u + 1, u + 2, ...`, so an `n`-node plan has `n - 1`
//! rows of decreasing length. `null` marks an unassigned pair.
//!
//! ```json
//! {"n":4,"colors":3,"table":[[2,3,1],[1,3],[2]]}
//! ```

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::NetworkReport;
use crate::wiring::{NodeId, WiringError, WiringPlan};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed plan: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed plan: {0}")]
    Shape(String),
    #[error("{0}")]
    Wiring(#[from] WiringError),
    #[error("plan has {0} nodes, above the limit of {1} (use --max-nodes to raise it)")]
    TooLarge(usize, usize),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    n: usize,
    colors: usize,
    table: Vec<Vec<Option<u32>>>,
}

pub fn plan_to_json(plan: &WiringPlan) -> String {
    let file = PlanFile {
        n: plan.n_nodes(),
        colors: plan.color_count(),
        table: plan.upper_triangle(),
    };
    serde_json::to_string(&file).expect("plan serializes")
}

/// Parses a JSON plan. Short rows and `null` cells load as unassigned pairs
/// for the verifier to report; rows or cells past the triangle are errors.
pub fn plan_from_json(text: &str, max_nodes: usize) -> Result<WiringPlan, FormatError> {
    let file: PlanFile = serde_json::from_str(text)?;
    if file.n > max_nodes {
        return Err(FormatError::TooLarge(file.n, max_nodes));
    }
    if file.table.len() > file.n.saturating_sub(1) {
        return Err(FormatError::Shape(format!(
            "{} rows for {} nodes, expected at most {}",
            file.table.len(),
            file.n,
            file.n.saturating_sub(1)
        )));
    }
    for (u, row) in file.table.iter().enumerate() {
        let width = file.n - 1 - u;
        if row.len() > width {
            return Err(FormatError::Shape(format!(
                "row {} has {} entries, expected at most {width}",
                NodeId::new(u),
                row.len()
            )));
        }
    }
    Ok(WiringPlan::from_upper_triangle(file.n, file.colors, &file.table)?)
}

const PALETTE: [&str; 8] = [
    "lightblue",
    "palegreen",
    "lightsalmon",
    "khaki",
    "plum",
    "lightcyan",
    "mistyrose",
    "wheat",
];

/// Graphviz rendering: one undirected edge per pair, labeled with its wavelength.
pub fn plan_to_dot(plan: &WiringPlan) -> String {
    let mut out = String::new();
    out.push_str("graph router {\n");
    out.push_str("  node [shape=circle, style=filled];\n");
    for node in plan.nodes() {
        let _ = writeln!(
            out,
            "  {} [fillcolor=\"{}\"];",
            node,
            PALETTE[node.index() % PALETTE.len()]
        );
    }
    for (u, v) in plan.pairs() {
        match plan.wavelength_for(u, v) {
            Ok(w) => {
                let _ = writeln!(out, "  {u} -- {v} [label=\"{w}\"];");
            }
            Err(_) => {
                let _ = writeln!(out, "  {u} -- {v} [label=\"?\", style=dashed];");
            }
        }
    }
    out.push_str("}\n");
    out
}

/// Triangular table with letter headers: row `u`, column `v > u` holds the
/// wavelength joining them.
pub fn plan_to_table(plan: &WiringPlan) -> String {
    let n = plan.n_nodes();
    let labels: Vec<String> = plan.nodes().map(|n| n.label()).collect();
    let width = labels
        .iter()
        .map(String::len)
        .chain(std::iter::once(plan.color_count().to_string().len()))
        .max()
        .unwrap_or(1);
    let mut out = String::new();
    let _ = write!(out, "{:>width$}", "");
    for label in &labels {
        let _ = write!(out, " {label:>width$}");
    }
    out.push('\n');
    for u in 0..n {
        let _ = write!(out, "{:>width$}", labels[u]);
        for v in 0..n {
            let cell = if v <= u {
                String::new()
            } else {
                match plan.wavelength_for(NodeId::new(u), NodeId::new(v)) {
                    Ok(w) => w.to_string(),
                    Err(_) => "?".to_string(),
                }
            };
            let _ = write!(out, " {cell:>width$}");
        }
        let trimmed = out.trim_end_matches(' ').len();
        out.truncate(trimmed);
        out.push('\n');
    }
    out
}

/// Reads a cell back from [`plan_to_table`] output.
pub fn table_cell(table: &str, row: &str, col: &str) -> Option<String> {
    let mut lines = table.lines();
    let header: Vec<&str> = lines.next()?.split_whitespace().collect();
    let col_idx = header.iter().position(|h| *h == col)?;
    for line in lines {
        let mut fields = line.split_whitespace();
        if fields.next()? != row {
            continue;
        }
        // Blank cells left of the diagonal are not tokens; count from the right.
        let cells: Vec<&str> = fields.collect();
        let blanks = header.len() - cells.len();
        return col_idx.checked_sub(blanks).and_then(|i| cells.get(i)).map(|s| s.to_string());
    }
    None
}

pub fn report_to_csv(report: &NetworkReport) -> String {
    let mut out = String::from("u,v,wavelength,loss_db,crosstalk,feasible\n");
    for l in &report.links {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            l.sender, l.receiver, l.wavelength, l.total_loss_db, l.crosstalk_sum, l.feasible
        );
    }
    out
}
