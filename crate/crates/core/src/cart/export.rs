use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Direction, SplitRule, Tree};
use crate::dataset::Scale;
use crate::error::{Error, Result};

pub const TREE_FORMAT: &str = "mlcart-tree";
pub const TREE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Text,
    Dot,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ExportFormat::Text),
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::invalid(format!(
                "unknown tree format `{other}` (expected text, dot or json)"
            ))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    tree: Tree,
}

pub fn export_tree(tree: &Tree, format: ExportFormat) -> String {
    match format {
        ExportFormat::Text => to_text(tree),
        ExportFormat::Dot => to_dot(tree),
        ExportFormat::Json => {
            let env = Envelope {
                format: TREE_FORMAT.to_string(),
                version: TREE_FORMAT_VERSION,
                tree: tree.clone(),
            };
            let mut s = serde_json::to_string_pretty(&env).expect("trees always serialize");
            s.push('\n');
            s
        }
    }
}

/// Parse a JSON tree document and check its structure.
pub fn import_tree_json(text: &str) -> Result<Tree> {
    let env: Envelope = serde_json::from_str(text)?;
    if env.format != TREE_FORMAT {
        return Err(Error::Serde(format!("not a tree document: format `{}`", env.format)));
    }
    if env.version != TREE_FORMAT_VERSION {
        return Err(Error::Serde(format!("unsupported tree version {}", env.version)));
    }
    check_structure(&env.tree)?;
    Ok(env.tree)
}

fn check_structure(tree: &Tree) -> Result<()> {
    let bad = |m: String| Err(Error::Serde(format!("malformed tree: {m}")));
    let n = tree.nodes.len();
    if n == 0 {
        return bad("no nodes".into());
    }
    let mut parent_seen = vec![false; n];
    for (i, node) in tree.nodes.iter().enumerate() {
        if node.split.is_some() != node.children.is_some() {
            return bad(format!("node {i} has a split without children or vice versa"));
        }
        if let Some(s) = &node.split {
            if s.variable >= tree.variables.len() {
                return bad(format!("node {i} splits on unknown variable {}", s.variable));
            }
        }
        for s in &node.surrogates {
            if s.split.variable >= tree.variables.len() {
                return bad(format!("node {i} has a surrogate on unknown variable"));
            }
        }
        if let Some((l, r)) = node.children {
            for c in [l, r] {
                if c == 0 || c >= n || parent_seen[c] {
                    return bad(format!("node {i} has invalid child {c}"));
                }
                parent_seen[c] = true;
            }
            let (a, b) = (&tree.nodes[l], &tree.nodes[r]);
            if a.counts[0] + b.counts[0] > node.counts[0] || a.counts[1] + b.counts[1] > node.counts[1] {
                return bad(format!("children of node {i} hold more observations than it"));
            }
        }
    }
    if parent_seen.iter().skip(1).any(|s| !s) {
        return bad("unreachable nodes".into());
    }
    Ok(())
}

/// Human-readable condition for the child in direction `dir`.
fn condition(tree: &Tree, rule: &SplitRule, variable: usize, dir: Direction) -> String {
    let var = &tree.variables[variable];
    match rule {
        SplitRule::Threshold {
            threshold,
            less_goes_left,
        } => {
            let below = (dir == Direction::Left) == *less_goes_left;
            let op = if below { "< " } else { ">=" };
            format!("{}{}{}", var.name, op, fmt_num(*threshold))
        }
        SplitRule::Levels { left, right } => {
            let codes = if dir == Direction::Left { left } else { right };
            let labels: Vec<String> = match &var.scale {
                Scale::Nominal(levels) | Scale::Ordinal(levels) => codes
                    .iter()
                    .map(|&c| levels.get(c as usize).cloned().unwrap_or_else(|| c.to_string()))
                    .collect(),
                _ => codes.iter().map(|c| c.to_string()).collect(),
            };
            format!("{} in {{{}}}", var.name, labels.join(","))
        }
    }
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// (node index, external id, label) in preorder; ids follow the heap
/// numbering 1, 2k, 2k+1.
fn labelled(tree: &Tree) -> Vec<(usize, u64, String)> {
    let mut out = Vec::with_capacity(tree.nodes.len());
    let mut stack = vec![(0usize, 1u64, "root".to_string())];
    while let Some((i, id, label)) = stack.pop() {
        let node = &tree.nodes[i];
        if let (Some(split), Some((l, r))) = (&node.split, node.children) {
            stack.push((
                r,
                id.saturating_mul(2).saturating_add(1),
                condition(tree, &split.rule, split.variable, Direction::Right),
            ));
            stack.push((
                l,
                id.saturating_mul(2),
                condition(tree, &split.rule, split.variable, Direction::Left),
            ));
        }
        out.push((i, id, label));
    }
    out
}

fn to_text(tree: &Tree) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "n= {}", tree.root().n());
    let _ = writeln!(s);
    let _ = writeln!(s, "node), split, n, (n0/n1), class, prob1");
    let _ = writeln!(s, "      * denotes terminal node");
    let _ = writeln!(s);
    for (i, id, label) in labelled(tree) {
        let node = &tree.nodes[i];
        let _ = writeln!(
            s,
            "{:indent$}{}) {} {} ({}/{}) {} {:.4}{}",
            "",
            id,
            label,
            node.n(),
            node.counts[0],
            node.counts[1],
            node.predicted_class(),
            node.predicted_prob(),
            if node.is_leaf() { " *" } else { "" },
            indent = 2 * node.depth
        );
    }
    s
}

fn to_dot(tree: &Tree) -> String {
    let mut s = String::from("digraph tree {\n  node [shape=box, fontname=\"Helvetica\"];\n");
    let ids = labelled(tree);
    let id_of = |i: usize| ids.iter().find(|e| e.0 == i).map_or(0, |e| e.1);
    for (i, id, _) in &ids {
        let node = &tree.nodes[*i];
        let mut label = format!(
            "n={} ({}/{})\\nclass {}  p1={:.4}",
            node.n(),
            node.counts[0],
            node.counts[1],
            node.predicted_class(),
            node.predicted_prob()
        );
        if let Some(split) = &node.split {
            label = format!(
                "{}\\n{}",
                condition(tree, &split.rule, split.variable, Direction::Left).replace('"', "\\\""),
                label
            );
        }
        let shape = if node.is_leaf() { ", style=rounded" } else { "" };
        let _ = writeln!(s, "  n{id} [label=\"{label}\"{shape}];");
    }
    for (i, id, _) in &ids {
        if let Some((l, r)) = tree.nodes[*i].children {
            let _ = writeln!(s, "  n{id} -> n{} [label=\"yes\"];", id_of(l));
            let _ = writeln!(s, "  n{id} -> n{} [label=\"no\"];", id_of(r));
        }
    }
    s.push_str("}\n");
    s
}
