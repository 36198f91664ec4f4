use serde::{Deserialize, Serialize};

use super::Tree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableUse {
    pub variable: String,
    pub split_count: usize,
    /// Depth of every primary split on this variable, ascending.
    pub depths: Vec<usize>,
    /// Which of the first three split positions (see [`SplitProfile`]) the
    /// variable occupies.
    pub positions: [bool; 3],
}

/// Primary-split usage of a tree. The first, second and third split are the
/// first three internal nodes in breadth-first order, left before right:
/// the root, then its left child if internal, and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitProfile {
    /// Variables in order of first appearance (breadth-first).
    pub variables: Vec<VariableUse>,
    /// Variable names of the first three splits.
    pub leading: Vec<String>,
}

pub fn split_variable_profile(tree: &Tree) -> SplitProfile {
    let mut variables: Vec<VariableUse> = Vec::new();
    let mut leading = Vec::new();
    for i in tree.breadth_first() {
        let node = &tree.nodes[i];
        let Some(split) = &node.split else { continue };
        let name = tree.variable_name(split);
        let pos = leading.len();
        if pos < 3 {
            leading.push(name.to_string());
        }
        let entry = match variables.iter_mut().position(|v| v.variable == name) {
            Some(k) => &mut variables[k],
            None => {
                variables.push(VariableUse {
                    variable: name.to_string(),
                    split_count: 0,
                    depths: Vec::new(),
                    positions: [false; 3],
                });
                variables.last_mut().unwrap()
            }
        };
        entry.split_count += 1;
        entry.depths.push(node.depth);
        if pos < 3 {
            entry.positions[pos] = true;
        }
    }
    for v in &mut variables {
        v.depths.sort_unstable();
    }
    SplitProfile { variables, leading }
}

impl SplitProfile {
    /// Distinct depths at which `variable` splits.
    pub fn distinct_depths(&self, variable: &str) -> Vec<usize> {
        let mut d: Vec<usize> = self
            .variables
            .iter()
            .find(|v| v.variable == variable)
            .map(|v| v.depths.clone())
            .unwrap_or_default();
        d.dedup();
        d
    }
}
