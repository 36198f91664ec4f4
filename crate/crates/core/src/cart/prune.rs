use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{CpRow, Tree, TreeNode, CP_CAP};

/// One subtree of the weakest-link sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtreeMember {
    /// The member is optimal for cp in `[alpha_low, alpha_high)`.
    pub alpha_low: f64,
    pub alpha_high: f64,
    /// Internal nodes kept, as sorted arena indices of the source tree.
    pub internal: Vec<usize>,
    pub n_splits: usize,
    /// Misclassification risk relative to the root.
    pub rel_error: f64,
}

impl SubtreeMember {
    /// The member as a standalone tree cut from `tree`.
    pub fn subtree(&self, tree: &Tree, seq: &CostComplexitySequence) -> Tree {
        let mut keep = vec![false; tree.nodes.len()];
        for &i in &self.internal {
            keep[i] = true;
        }
        let mut out = rebuild(tree, &keep, &seq.node_alpha);
        out.cp_table = cp_table_for(&out);
        carry_cv_columns(tree, &mut out);
        out
    }
}

/// Weakest-link pruning sequence, from the full tree (first member) down to
/// the root alone (last member).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostComplexitySequence {
    pub members: Vec<SubtreeMember>,
    /// Per source node: relative complexity at which it is collapsed (0 for
    /// leaves).
    pub node_alpha: Vec<f64>,
}

impl CostComplexitySequence {
    pub fn member_for(&self, cp: f64) -> &SubtreeMember {
        self.members
            .iter()
            .find(|m| cp < m.alpha_high)
            .unwrap_or_else(|| self.members.last().expect("sequence is never empty"))
    }
}

/// Complexity `(R(t) − R(T_t)) / (|T_t| − 1)` kept as an exact fraction of
/// integer risks.
#[derive(Clone, Copy)]
struct Ratio {
    num: i128,
    den: i128,
}

impl Ratio {
    fn cmp(self, other: Ratio) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

pub fn cost_complexity_sequence(tree: &Tree) -> CostComplexitySequence {
    let n = tree.nodes.len();
    let root_risk = tree.root().risk() as f64;
    let rel = |risk: f64| if root_risk > 0.0 { risk / root_risk } else { 1.0 };
    let order = tree.preorder();
    let mut alive: Vec<bool> = tree.nodes.iter().map(|t| !t.is_leaf()).collect();
    let mut node_alpha = vec![0.0; n];
    let mut members: Vec<SubtreeMember> = Vec::new();
    let mut leaves = vec![0i128; n];
    let mut branch_risk = vec![0i128; n];
    let mut prev: Option<Ratio> = None;

    while alive[0] {
        for &i in order.iter().rev() {
            if alive[i] {
                let (l, r) = tree.nodes[i].children.expect("alive nodes are internal");
                leaves[i] = leaves[l] + leaves[r];
                branch_risk[i] = branch_risk[l] + branch_risk[r];
            } else {
                leaves[i] = 1;
                branch_risk[i] = tree.nodes[i].risk() as i128;
            }
        }
        let g = |i: usize| Ratio {
            num: tree.nodes[i].risk() as i128 - branch_risk[i],
            den: leaves[i] - 1,
        };
        let mut alpha = (0..n)
            .filter(|&i| alive[i])
            .map(g)
            .min_by(|a, b| a.cmp(*b))
            .expect("root is alive");
        // a link no weaker than the last one collapses together with it
        let merged = prev.is_some_and(|p| alpha.cmp(p) != Ordering::Greater);
        if merged {
            alpha = prev.unwrap();
        } else {
            let internal: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
            members.push(SubtreeMember {
                alpha_low: members.last().map_or(0.0, |m: &SubtreeMember| m.alpha_high),
                alpha_high: rel(alpha.value()),
                n_splits: internal.len(),
                internal,
                rel_error: rel(branch_risk[0] as f64),
            });
        }
        let weakest: Vec<usize> = (0..n)
            .filter(|&i| alive[i] && g(i).cmp(alpha) != Ordering::Greater)
            .collect();
        for i in weakest {
            collapse_below(tree, i, &mut alive, &mut node_alpha, rel(alpha.value()));
        }
        prev = Some(alpha);
    }
    members.push(SubtreeMember {
        alpha_low: members.last().map_or(0.0, |m| m.alpha_high),
        alpha_high: CP_CAP,
        internal: Vec::new(),
        n_splits: 0,
        rel_error: 1.0,
    });
    CostComplexitySequence {
        members,
        node_alpha,
    }
}

fn collapse_below(tree: &Tree, i: usize, alive: &mut [bool], node_alpha: &mut [f64], alpha: f64) {
    let mut stack = vec![i];
    while let Some(j) = stack.pop() {
        if !alive[j] {
            continue;
        }
        alive[j] = false;
        node_alpha[j] = alpha;
        if let Some((l, r)) = tree.nodes[j].children {
            stack.push(l);
            stack.push(r);
        }
    }
}

/// cp table rows, root-only first.
pub(crate) fn cp_table_for(tree: &Tree) -> Vec<CpRow> {
    let seq = cost_complexity_sequence(tree);
    seq.members
        .iter()
        .rev()
        .map(|m| CpRow {
            cp: m.alpha_high,
            n_splits: m.n_splits,
            rel_error: m.rel_error,
            x_error: None,
            x_std: None,
        })
        .collect()
}

/// Copy of `tree` with internal nodes of complexity `≤ cp` collapsed and
/// complexities recomputed. The cp table is left empty.
pub(crate) fn collapse_at(tree: &Tree, cp: f64) -> Tree {
    let seq = cost_complexity_sequence(tree);
    let keep: Vec<bool> = tree
        .nodes
        .iter()
        .zip(&seq.node_alpha)
        .map(|(node, &a)| !node.is_leaf() && a > cp)
        .collect();
    rebuild(tree, &keep, &seq.node_alpha)
}

/// The member of the cost-complexity sequence whose interval contains `cp`
/// (negative values act as 0). Cross-validated columns of the cp table are
/// kept for the surviving rows.
pub fn prune(tree: &Tree, cp: f64) -> Tree {
    let mut out = collapse_at(tree, cp.max(0.0));
    out.cp_table = cp_table_for(&out);
    carry_cv_columns(tree, &mut out);
    out
}

fn carry_cv_columns(from: &Tree, to: &mut Tree) {
    for row in &mut to.cp_table {
        if let Some(src) = from.cp_table.iter().find(|r| r.n_splits == row.n_splits) {
            row.x_error = src.x_error;
            row.x_std = src.x_std;
        }
    }
}

/// Preorder copy keeping the children only of nodes with `keep[i]`.
fn rebuild(tree: &Tree, keep: &[bool], node_alpha: &[f64]) -> Tree {
    fn visit(tree: &Tree, i: usize, keep: &[bool], alpha: &[f64], out: &mut Vec<TreeNode>) -> usize {
        let src = &tree.nodes[i];
        let idx = out.len();
        let internal = keep[i] && !src.is_leaf();
        out.push(TreeNode {
            counts: src.counts,
            depth: src.depth,
            split: if internal { src.split.clone() } else { None },
            surrogates: if internal { src.surrogates.clone() } else { Vec::new() },
            children: None,
            complexity: if internal { alpha[i] } else { 0.0 },
        });
        if internal {
            let (l, r) = src.children.expect("internal");
            let nl = visit(tree, l, keep, alpha, out);
            let nr = visit(tree, r, keep, alpha, out);
            out[idx].children = Some((nl, nr));
        }
        idx
    }
    let mut nodes = Vec::with_capacity(tree.nodes.len());
    visit(tree, 0, keep, node_alpha, &mut nodes);
    Tree {
        variables: tree.variables.clone(),
        response: tree.response.clone(),
        nodes,
        controls: tree.controls.clone(),
        cp_table: Vec::new(),
    }
}
