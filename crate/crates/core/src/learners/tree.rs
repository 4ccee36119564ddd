//! Weighted-Gini classification trees over sparse features.
//!
//! Splits test `x[feature] <= threshold` with thresholds at midpoints
//! between consecutive distinct observed values (absent entries count as 0).
//! An impure node is split whenever it is above the depth limit and some
//! feature takes at least two values in it, even if no split lowers the
//! impurity; parity-style targets need such splits.

use serde::{Deserialize, Serialize};

use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Leaf {
        label: usize,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &SparseVector) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { label } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x.get(*feature as usize) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + go(nodes, *left as usize).max(go(nodes, *right as usize))
                }
            }
        }
        go(&self.nodes, 0)
    }
}

/// Column-major view of the training matrix, built once per ensemble.
pub(crate) struct Columns {
    /// Per feature: (example, value) for non-zero entries.
    cols: Vec<Vec<(u32, f64)>>,
}

impl Columns {
    pub(crate) fn new(xs: &[SparseVector], dim: usize) -> Self {
        let mut cols = vec![Vec::new(); dim];
        for (e, x) in xs.iter().enumerate() {
            for (f, v) in x.pairs() {
                cols[f].push((e as u32, v));
            }
        }
        Columns { cols }
    }
}

fn gini_mass(class_w: &[f64]) -> f64 {
    let total: f64 = class_w.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let sq: f64 = class_w.iter().map(|w| w * w).sum();
    total - sq / total
}

fn majority(class_w: &[f64]) -> usize {
    super::argmax(class_w)
}

struct Best {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

pub(crate) struct TreeBuilder<'a> {
    cols: &'a Columns,
    y: &'a [usize],
    weights: &'a [f64],
    n_labels: usize,
    max_depth: usize,
    /// Node currently holding each example; `u32::MAX` when inactive.
    node_of: Vec<u32>,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    pub(crate) fn fit(
        cols: &'a Columns,
        y: &'a [usize],
        weights: &'a [f64],
        n_labels: usize,
        max_depth: usize,
    ) -> Tree {
        let mut b = TreeBuilder {
            cols,
            y,
            weights,
            n_labels,
            max_depth,
            node_of: vec![0; y.len()],
            nodes: vec![Node::Leaf { label: 0 }],
        };
        let members: Vec<u32> = (0..y.len() as u32).collect();
        b.grow(0, members, 0);
        Tree { nodes: b.nodes }
    }

    fn class_weights(&self, members: &[u32]) -> Vec<f64> {
        let mut w = vec![0.0; self.n_labels];
        for &e in members {
            w[self.y[e as usize]] += self.weights[e as usize];
        }
        w
    }

    fn grow(&mut self, id: usize, members: Vec<u32>, depth: usize) {
        let class_w = self.class_weights(&members);
        let label = majority(&class_w);
        let first = self.y[members[0] as usize];
        let pure = members.iter().all(|&e| self.y[e as usize] == first);
        self.nodes[id] = Node::Leaf { label };
        if pure || depth >= self.max_depth {
            return;
        }
        for &e in &members {
            self.node_of[e as usize] = id as u32;
        }
        let Some(best) = self.best_split(id as u32, members.len(), &class_w) else {
            return;
        };
        let (left, right): (Vec<u32>, Vec<u32>) = members.into_iter().partition(|&e| {
            self.value(best.feature, e) <= best.threshold
        });
        let left_id = self.nodes.len();
        self.nodes.push(Node::Leaf { label });
        let right_id = self.nodes.len();
        self.nodes.push(Node::Leaf { label });
        self.nodes[id] = Node::Split {
            feature: best.feature as u32,
            threshold: best.threshold,
            left: left_id as u32,
            right: right_id as u32,
        };
        self.grow(left_id, left, depth + 1);
        self.grow(right_id, right, depth + 1);
    }

    fn value(&self, feature: usize, example: u32) -> f64 {
        let col = &self.cols.cols[feature];
        match col.binary_search_by_key(&example, |&(e, _)| e) {
            Ok(pos) => col[pos].1,
            Err(_) => 0.0,
        }
    }

    fn best_split(&self, node: u32, n_members: usize, class_w: &[f64]) -> Option<Best> {
        let mut best: Option<Best> = None;
        let mut entries: Vec<(f64, usize, f64)> = Vec::new();
        for (f, col) in self.cols.cols.iter().enumerate() {
            entries.clear();
            entries.extend(
                col.iter()
                    .filter(|(e, _)| self.node_of[*e as usize] == node)
                    .map(|&(e, v)| (v, self.y[e as usize], self.weights[e as usize])),
            );
            if entries.is_empty() {
                continue;
            }
            let n_zero = n_members - entries.len();
            if n_zero > 0 {
                // Absent entries as one aggregated group at value 0.
                let mut zero_w = class_w.to_vec();
                for &(_, c, w) in entries.iter() {
                    zero_w[c] -= w;
                }
                for (c, w) in zero_w.into_iter().enumerate() {
                    entries.push((0.0, c, w.max(0.0)));
                }
            }
            entries.sort_by(|a, b| a.0.total_cmp(&b.0));
            if entries.first().unwrap().0 == entries.last().unwrap().0 {
                continue;
            }

            let mut left = vec![0.0; self.n_labels];
            let mut right = class_w.to_vec();
            let mut i = 0;
            while i < entries.len() {
                let v = entries[i].0;
                while i < entries.len() && entries[i].0 == v {
                    let (_, c, w) = entries[i];
                    left[c] += w;
                    right[c] -= w;
                    i += 1;
                }
                if i == entries.len() {
                    break;
                }
                let impurity = gini_mass(&left) + gini_mass(&right);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(Best {
                        feature: f,
                        threshold: 0.5 * (v + entries[i].0),
                        impurity,
                    });
                }
            }
        }
        best
    }
}
