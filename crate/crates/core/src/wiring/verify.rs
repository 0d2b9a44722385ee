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

use std::fmt;

use serde::Serialize;

use super::{chromatic_index, NodeId, WiringPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Two links at one vertex share a wavelength.
    DuplicateAtVertex,
    /// `table(u, v) != table(v, u)`.
    Asymmetry,
    /// A pair has no wavelength in one or both directions.
    MissingPair,
    /// A wavelength outside `1..=colors`.
    BadColorRange,
    /// A wavelength on the diagonal.
    SelfLink,
    /// The declared color count differs from the chromatic index of K_n.
    ColorCount,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::DuplicateAtVertex => "duplicate-at-vertex",
            ViolationKind::Asymmetry => "asymmetry",
            ViolationKind::MissingPair => "missing-pair",
            ViolationKind::BadColorRange => "bad-color-range",
            ViolationKind::SelfLink => "self-link",
            ViolationKind::ColorCount => "color-count",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Offending nodes. For a duplicate this is the vertex followed by the
    /// two neighbors sharing the color.
    #[serde(serialize_with = "serialize_labels")]
    pub nodes: Vec<NodeId>,
    pub detail: String,
}

fn serialize_labels<S: serde::Serializer>(nodes: &[NodeId], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(nodes.iter().map(|n| n.label()))
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.nodes.iter().map(|n| n.label()).collect();
        write!(f, "{} [{}]: {}", self.kind.as_str(), labels.join(","), self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Exhaustively checks every cell of the plan's table.
pub fn verify_plan(plan: &WiringPlan) -> VerificationReport {
    let n = plan.n_nodes();
    let colors = plan.color_count();
    let mut violations = Vec::new();

    let expected = chromatic_index(n);
    if colors != expected {
        violations.push(Violation {
            kind: ViolationKind::ColorCount,
            nodes: Vec::new(),
            detail: format!("declares {colors} wavelengths, K_{n} needs exactly {expected}"),
        });
    }

    for u in 0..n {
        if let Some(w) = plan.entry(u, u) {
            violations.push(Violation {
                kind: ViolationKind::SelfLink,
                nodes: vec![NodeId(u)],
                detail: format!("wavelength {w} on the diagonal"),
            });
        }
    }

    for u in 0..n {
        for v in u + 1..n {
            let (a, b) = (plan.entry(u, v), plan.entry(v, u));
            let pair = vec![NodeId(u), NodeId(v)];
            match (a, b) {
                (Some(a), Some(b)) if a != b => violations.push(Violation {
                    kind: ViolationKind::Asymmetry,
                    nodes: pair.clone(),
                    detail: format!("{}->{} is {a} but {}->{} is {b}", pair[0], pair[1], pair[1], pair[0]),
                }),
                (Some(_), Some(_)) => {}
                _ => violations.push(Violation {
                    kind: ViolationKind::MissingPair,
                    nodes: pair.clone(),
                    detail: "no wavelength assigned".to_string(),
                }),
            }
            // A symmetric bad value is reported once.
            let b_distinct = if b != a { b } else { None };
            for w in [a, b_distinct].into_iter().flatten() {
                if w as usize > colors {
                    violations.push(Violation {
                        kind: ViolationKind::BadColorRange,
                        nodes: pair.clone(),
                        detail: format!("wavelength {w} outside 1..={colors}"),
                    });
                }
            }
        }
    }

    // Slot c holds the first neighbor seen with color c + 1.
    let mut first = vec![usize::MAX; colors.max(1)];
    for u in 0..n {
        first.iter_mut().for_each(|s| *s = usize::MAX);
        let mut overflow: Vec<(u32, usize)> = Vec::new();
        for v in 0..n {
            if v == u {
                continue;
            }
            let Some(w) = plan.entry(u, v) else { continue };
            let prior = if (w as usize) <= colors {
                let slot = &mut first[w as usize - 1];
                let prior = *slot;
                if prior == usize::MAX {
                    *slot = v;
                }
                prior
            } else {
                // Out-of-range colors are already reported; still check for
                // clashes among them.
                match overflow.iter().find(|(c, _)| *c == w) {
                    Some(&(_, p)) => p,
                    None => {
                        overflow.push((w, v));
                        usize::MAX
                    }
                }
            };
            if prior != usize::MAX {
                violations.push(Violation {
                    kind: ViolationKind::DuplicateAtVertex,
                    nodes: vec![NodeId(u), NodeId(prior), NodeId(v)],
                    detail: format!(
                        "{} uses wavelength {w} toward both {} and {}",
                        NodeId(u),
                        NodeId(prior),
                        NodeId(v)
                    ),
                });
            }
        }
    }

    VerificationReport {
        valid: violations.is_empty(),
        violations,
    }
}
