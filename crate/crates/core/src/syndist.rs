//! Syntactic distance between adjacent tokens.
//!
//! The tree is first normalized (unary chains collapsed, wide nodes turned
//! into right-branching binary cascades). The distance of token `i` is then
//! the height of the lowest common ancestor of tokens `i - 1` and `i`; the
//! first token always scores 0.

use serde::{Deserialize, Serialize};

use crate::treebank::ParseTree;

/// Suffix appended to the parent label on nodes introduced by binarization.
pub const SYNTHETIC_SUFFIX: &str = "*";

/// One non-negative integer per token; `values[0] == 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistanceVector(Vec<u32>);

impl DistanceVector {
    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| f64::from(v)).collect()
    }

    /// Wraps raw values without checking them against any tree.
    pub fn from_raw(values: Vec<u32>) -> Self {
        DistanceVector(values)
    }
}

impl From<DistanceVector> for Vec<u32> {
    fn from(d: DistanceVector) -> Self {
        d.0
    }
}

/// Merges every single-child node with its child, keeping the outer label.
pub fn collapse_unary(tree: &ParseTree) -> ParseTree {
    match tree {
        ParseTree::Leaf { .. } => tree.clone(),
        ParseTree::Node { label, .. } => {
            let mut inner = tree;
            while let [only] = inner.children() {
                inner = only;
            }
            match inner {
                ParseTree::Leaf { token, .. } => ParseTree::Leaf {
                    label: label.clone(),
                    token: token.clone(),
                },
                ParseTree::Node { children, .. } => ParseTree::Node {
                    label: label.clone(),
                    children: children.iter().map(collapse_unary).collect(),
                },
            }
        }
    }
}

/// Replaces every node with more than two children by a right-branching
/// cascade `(X c1 (X* c2 (X* ... ck)))`.
pub fn binarize_right(tree: &ParseTree) -> ParseTree {
    match tree {
        ParseTree::Leaf { .. } => tree.clone(),
        ParseTree::Node { label, children } => {
            let mut kids: Vec<ParseTree> = children.iter().map(binarize_right).collect();
            if kids.len() <= 2 {
                return ParseTree::Node {
                    label: label.clone(),
                    children: kids,
                };
            }
            let synthetic = format!("{label}{SYNTHETIC_SUFFIX}");
            let last = kids.pop().expect("len > 2");
            let penultimate = kids.pop().expect("len > 2");
            let mut acc = ParseTree::Node {
                label: synthetic.clone(),
                children: vec![penultimate, last],
            };
            while kids.len() > 1 {
                let next = kids.pop().expect("len > 1");
                acc = ParseTree::Node {
                    label: synthetic.clone(),
                    children: vec![next, acc],
                };
            }
            let first = kids.pop().expect("one child left");
            ParseTree::Node {
                label: label.clone(),
                children: vec![first, acc],
            }
        }
    }
}

/// Collapse, then binarize.
pub fn normalize(tree: &ParseTree) -> ParseTree {
    binarize_right(&collapse_unary(tree))
}

/// Syntactic distance vector of `tree`.
pub fn distance_vector(tree: &ParseTree) -> DistanceVector {
    let normalized = normalize(tree);
    let mut values = vec![0u32; normalized.leaf_count()];
    fill(&normalized, 0, &mut values);
    DistanceVector(values)
}

/// Writes LCA heights for the gaps inside `node` whose first leaf sits at
/// `start`. Returns (height, leaf count).
fn fill(node: &ParseTree, start: usize, out: &mut [u32]) -> (u32, usize) {
    match node {
        ParseTree::Leaf { .. } => (0, 1),
        ParseTree::Node { children, .. } => {
            let mut boundaries = Vec::with_capacity(children.len());
            let mut pos = start;
            let mut max_child = 0;
            for c in children {
                boundaries.push(pos);
                let (h, n) = fill(c, pos, out);
                max_child = max_child.max(h);
                pos += n;
            }
            let h = max_child + 1;
            for &b in &boundaries[1..] {
                out[b] = h;
            }
            (h, pos - start)
        }
    }
}
