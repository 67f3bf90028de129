use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::gain::{leaf_weight, GradStats};
use super::histogram::{find_best_split, Histogram, SplitInfo};
use super::{BinnedMatrix, GrowthPolicy, HyperParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: u16,
        default_left: bool,
        missing_bin: u16,
        gain: f64,
        left: usize,
        right: usize,
    },
}

/// One regression tree over bin codes. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn split_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    /// Value of the leaf reached by a row, given its codes per feature.
    pub fn predict_codes(&self, code: impl Fn(usize) -> u16) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    missing_bin,
                    left,
                    right,
                    ..
                } => {
                    let c = code(*feature);
                    let go_left = if c == *missing_bin {
                        *default_left
                    } else {
                        c <= *threshold
                    };
                    i = if go_left { *left } else { *right };
                }
            }
        }
    }

    pub fn predict_row(&self, binned: &BinnedMatrix, row: usize) -> f64 {
        self.predict_codes(|f| binned.code(row, f))
    }
}

struct Frontier {
    node: usize,
    rows: Vec<u32>,
    hist: Histogram,
    total: GradStats,
    depth: usize,
    best: Option<SplitInfo>,
}

pub(crate) struct TreeGrower<'a> {
    pub binned: &'a BinnedMatrix,
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    pub features: &'a [usize],
    pub params: &'a HyperParams,
}

impl TreeGrower<'_> {
    fn best_split(&self, hist: &Histogram, total: GradStats, depth: usize) -> Option<SplitInfo> {
        if self.params.max_depth.is_some_and(|d| depth >= d) {
            return None;
        }
        find_best_split(hist, self.features, total, self.params)
    }

    fn frontier(&self, node: usize, rows: Vec<u32>, hist: Histogram, total: GradStats, depth: usize) -> Frontier {
        let best = self.best_split(&hist, total, depth);
        Frontier {
            node,
            rows,
            hist,
            total,
            depth,
            best,
        }
    }

    fn split(&self, tree: &mut Tree, leaf: Frontier) -> (Frontier, Frontier) {
        let split = leaf.best.expect("only split leaves with a split");
        let codes = self.binned.feature_codes(split.feature);
        let missing_bin = self.binned.mappers[split.feature].missing_bin();
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = leaf.rows.iter().partition(|&&r| {
            let c = codes[r as usize];
            if c == missing_bin {
                split.default_left
            } else {
                c <= split.threshold
            }
        });
        let build = |rows: &[u32]| Histogram::build(self.binned, self.grad, self.hess, rows, self.features);
        let (left_hist, right_hist) = if left_rows.len() <= right_rows.len() {
            let l = build(&left_rows);
            let r = leaf.hist.subtract(&l);
            (l, r)
        } else {
            let r = build(&right_rows);
            let l = leaf.hist.subtract(&r);
            (l, r)
        };
        let left_id = tree.nodes.len();
        let right_id = left_id + 1;
        tree.nodes.push(Node::Leaf { value: 0.0 });
        tree.nodes.push(Node::Leaf { value: 0.0 });
        tree.nodes[leaf.node] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            default_left: split.default_left,
            missing_bin,
            gain: split.gain,
            left: left_id,
            right: right_id,
        };
        let depth = leaf.depth + 1;
        (
            self.frontier(left_id, left_rows, left_hist, split.left, depth),
            self.frontier(right_id, right_rows, right_hist, split.right, depth),
        )
    }

    /// Grows a tree on `rows`; leaf values include the learning rate.
    pub fn grow(&self, rows: Vec<u32>) -> Tree {
        let mut tree = Tree {
            nodes: vec![Node::Leaf { value: 0.0 }],
        };
        let total = rows.iter().fold(GradStats::default(), |acc, &r| {
            acc + GradStats::new(self.grad[r as usize], self.hess[r as usize], 1)
        });
        let hist = Histogram::build(self.binned, self.grad, self.hess, &rows, self.features);
        let root = self.frontier(0, rows, hist, total, 0);
        let budget = self.params.num_leaves;
        let mut done: Vec<Frontier> = Vec::new();

        match self.params.growth {
            GrowthPolicy::LeafWise => {
                let mut open = vec![root];
                while done.len() + open.len() < budget {
                    let pick = open
                        .iter()
                        .enumerate()
                        .filter_map(|(i, f)| f.best.map(|b| (i, b.gain)))
                        .fold(None, |best: Option<(usize, f64)>, (i, g)| match best {
                            Some((_, bg)) if g <= bg => best,
                            _ => Some((i, g)),
                        });
                    let Some((i, _)) = pick else { break };
                    let leaf = open.remove(i);
                    let (l, r) = self.split(&mut tree, leaf);
                    open.insert(i, r);
                    open.insert(i, l);
                }
                done.extend(open);
            }
            GrowthPolicy::LevelWise => {
                let mut level = vec![root];
                let mut leaves = 1;
                while !level.is_empty() {
                    let mut next = Vec::new();
                    for leaf in level {
                        if leaves < budget && leaf.best.is_some() {
                            let (l, r) = self.split(&mut tree, leaf);
                            leaves += 1;
                            next.push(l);
                            next.push(r);
                        } else {
                            done.push(leaf);
                        }
                    }
                    level = next;
                }
            }
        }

        for leaf in done {
            tree.nodes[leaf.node] = Node::Leaf {
                value: leaf_weight(leaf.total, self.params) * self.params.learning_rate,
            };
        }
        tree
    }
}
