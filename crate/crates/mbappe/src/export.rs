//! Serialized search trees and their DOT rendering.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use mbappe_core::{ActionGrid, GridIndex, NodeId, RewardBreakdown, SearchTree};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One tree node. `q`, `n` and `p` are the statistics of the edge leading
/// into the node; the root reports its visit-weighted mean Q, its total
/// visits and `p = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeNodeRecord {
    pub id: u32,
    pub parent: Option<u32>,
    pub depth: u32,
    pub action: Option<GridIndex>,
    pub accel: Option<f64>,
    pub steer: Option<f64>,
    pub q: f64,
    pub n: u32,
    pub p: f64,
    pub reward: Option<RewardBreakdown>,
    pub terminal: bool,
    pub children: Vec<u32>,
    /// True when the node lies on the extracted plan (the root always does).
    pub on_plan: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeExport {
    pub nodes: Vec<TreeNodeRecord>,
    pub plan: Vec<GridIndex>,
}

impl TreeExport {
    pub fn from_tree(tree: &SearchTree, plan: &[GridIndex]) -> Self {
        let grid = ActionGrid::default();
        let mut on_plan = BTreeSet::from([NodeId::ROOT]);
        let mut cur = NodeId::ROOT;
        for a in plan {
            match tree.node(cur).edges.iter().find(|e| e.action == *a) {
                Some(e) => {
                    cur = e.child;
                    on_plan.insert(cur);
                }
                None => break,
            }
        }

        let mut nodes = Vec::with_capacity(tree.len());
        for id in tree.preorder() {
            let node = tree.node(id);
            let (q, n, p) = match node.parent {
                None => {
                    let visits = node.visits();
                    let q = if visits == 0 {
                        0.0
                    } else {
                        node.edges.iter().map(|e| e.stats.q * e.stats.n as f64).sum::<f64>() / visits as f64
                    };
                    (q, visits, 1.0)
                }
                Some(parent) => {
                    let edge = tree.node(parent).edges.iter().find(|e| e.child == id).expect("child edge exists");
                    (edge.stats.q, edge.stats.n, edge.stats.p)
                }
            };
            let action = node.incoming_action;
            nodes.push(TreeNodeRecord {
                id: id.0,
                parent: node.parent.map(|p| p.0),
                depth: node.depth,
                action,
                accel: action.map(|a| grid.action(a).accel),
                steer: action.map(|a| grid.action(a).steer),
                q,
                n,
                p,
                reward: node.reward,
                terminal: node.terminal,
                children: node.edges.iter().map(|e| e.child.0).collect(),
                on_plan: on_plan.contains(&id),
            });
        }
        Self {
            nodes,
            plan: plan.to_vec(),
        }
    }

    /// Checks ids, parent/child agreement, a single root and acyclicity.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Input(format!("tree export: {m}")));
        let index = |id: u32| self.nodes.iter().position(|n| n.id == id);
        let roots: Vec<_> = self.nodes.iter().filter(|n| n.parent.is_none()).collect();
        if roots.len() != 1 {
            return bad(format!("expected exactly one root, found {}", roots.len()));
        }
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return bad(format!("duplicate node id {}", n.id));
            }
        }
        for n in &self.nodes {
            for &c in &n.children {
                let Some(ci) = index(c) else {
                    return bad(format!("node {} lists unknown child {c}", n.id));
                };
                if self.nodes[ci].parent != Some(n.id) {
                    return bad(format!("child {c} does not point back to parent {}", n.id));
                }
            }
            if let Some(p) = n.parent {
                match index(p) {
                    Some(pi) if self.nodes[pi].children.contains(&n.id) => {}
                    _ => return bad(format!("node {} has a dangling parent {p}", n.id)),
                }
            }
        }
        // every node reachable from the root exactly once
        let mut seen = BTreeSet::new();
        let mut stack = vec![roots[0].id];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                return bad(format!("cycle through node {id}"));
            }
            let node = &self.nodes[index(id).unwrap()];
            stack.extend(node.children.iter().copied());
        }
        if seen.len() != self.nodes.len() {
            return bad("some nodes are unreachable from the root".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: TreeExport = serde_json::from_str(text).map_err(|e| Error::Input(format!("tree export: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_dot(&self) -> String {
        let (lo, hi) = q_range(self.nodes.iter().map(|n| n.q));
        let mut out = String::new();
        out.push_str("digraph mcts {\n");
        out.push_str("  node [shape=box, style=filled, fontname=\"Helvetica\"];\n");
        for n in &self.nodes {
            let fmt_opt = |v: Option<f64>, prec: usize| v.map_or_else(|| "-".to_owned(), |v| format!("{v:.prec$}"));
            let label = format!(
                "a={}, δ={}, Q={:.3}, N={}",
                fmt_opt(n.accel, 2),
                fmt_opt(n.steer, 3),
                n.q,
                n.n
            );
            let _ = writeln!(
                out,
                "  n{} [label=\"{}\", fillcolor=\"{}\"];",
                n.id,
                label,
                q_color(n.q, lo, hi)
            );
        }
        for n in &self.nodes {
            for &c in &n.children {
                let child_on_plan = self.nodes.iter().any(|m| m.id == c && m.on_plan);
                let style = if n.on_plan && child_on_plan { " [style=bold, penwidth=3]" } else { "" };
                let _ = writeln!(out, "  n{} -> n{c}{style};", n.id);
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Min and max of the finite values; `(0, 0)` when there are none.
pub fn q_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|q| q.is_finite())
        .fold(None, |acc: Option<(f64, f64)>, q| match acc {
            None => Some((q, q)),
            Some((lo, hi)) => Some((lo.min(q), hi.max(q))),
        })
        .unwrap_or((0.0, 0.0))
}

const RED: [f64; 3] = [215.0, 48.0, 39.0];
const GREEN: [f64; 3] = [26.0, 152.0, 80.0];

/// Hex color on the red (low Q) to green (high Q) ramp. A degenerate range
/// maps everything to the midpoint.
pub fn q_color(q: f64, lo: f64, hi: f64) -> String {
    let f = if hi > lo { ((q - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    let c: Vec<u8> = (0..3).map(|i| (RED[i] + f * (GREEN[i] - RED[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}
