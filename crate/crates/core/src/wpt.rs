//! Discrete wavelet packet transform with periodic boundaries.
//!
//! Packet indices are sequency ordered: node `(j, p)` carries the frequency
//! band `[p / 2^(j+1), (p + 1) / 2^(j+1)]`. The filter bank realises this by
//! swapping the low/high child assignment under odd parents, which is the
//! same as indexing natural (Paley) order through a Gray code.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::filters::{squared_gain, Branch, QmfPair};

/// A node `(j, p)` of the packet tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WpNode {
    pub j: u32,
    pub p: u64,
}

impl WpNode {
    pub const ROOT: WpNode = WpNode { j: 0, p: 0 };

    pub fn new(j: u32, p: u64) -> Result<Self> {
        if j >= 63 || p >= 1u64 << j {
            return Err(Error::InvalidTree(format!("node ({j}, {p}) is out of range")));
        }
        Ok(WpNode { j, p })
    }

    /// Nominal frequency band `[p / 2^(j+1), (p + 1) / 2^(j+1)]`.
    pub fn band(&self) -> (f64, f64) {
        let w = 0.5 / (1u64 << self.j) as f64;
        (self.p as f64 * w, (self.p + 1) as f64 * w)
    }

    pub fn children(&self) -> [WpNode; 2] {
        [
            WpNode { j: self.j + 1, p: 2 * self.p },
            WpNode { j: self.j + 1, p: 2 * self.p + 1 },
        ]
    }

    pub fn parent(&self) -> Option<WpNode> {
        (self.j > 0).then(|| WpNode { j: self.j - 1, p: self.p / 2 })
    }

    /// Ancestor at depth `depth <= j`.
    pub fn ancestor(&self, depth: u32) -> WpNode {
        debug_assert!(depth <= self.j);
        WpNode { j: depth, p: self.p >> (self.j - depth) }
    }

    /// True when `other` lies strictly below `self`.
    pub fn is_strict_ancestor_of(&self, other: &WpNode) -> bool {
        other.j > self.j && other.ancestor(self.j) == *self
    }

    /// Whether the child `self` is reached from its parent through the
    /// low-pass filter. Under sequency ordering the assignment flips below
    /// odd parents.
    pub fn is_lowpass_child(&self) -> bool {
        let parent_odd = (self.p >> 1) & 1 == 1;
        (self.p & 1 == 0) != parent_odd
    }

    /// Cell range `[start, end)` in units of depth-`depth` cells.
    fn cells(&self, depth: u32) -> (u64, u64) {
        let w = 1u64 << (depth - self.j);
        (self.p * w, (self.p + 1) * w)
    }
}

impl fmt::Display for WpNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.j, self.p)
    }
}

/// Maps a sequency index `p` at depth `j` to its natural filter-bank index.
pub fn gray_permutation(j: u32) -> Vec<u64> {
    (0..1u64 << j).map(|p| p ^ (p >> 1)).collect()
}

/// A wavelet packet basis, given by the leaves of a binary tree whose bands
/// tile `[0, 1/2]`. Leaves are kept sorted by band lower edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WpTree {
    depth: u32,
    leaves: Vec<WpNode>,
}

impl WpTree {
    /// Validates disjointness and completeness of `leaves` for series length
    /// `2^depth`.
    pub fn new(depth: u32, mut leaves: Vec<WpNode>) -> Result<Self> {
        if depth > 30 {
            return Err(Error::InvalidTree(format!("depth {depth} exceeds 30")));
        }
        for leaf in &leaves {
            if leaf.j > depth {
                return Err(Error::InvalidTree(format!("leaf {leaf} is deeper than J = {depth}")));
            }
            if leaf.p >= 1u64 << leaf.j {
                return Err(Error::InvalidTree(format!("leaf {leaf} has p >= 2^j")));
            }
        }
        leaves.sort_by_key(|l| l.cells(depth).0);
        let mut next = 0u64;
        for leaf in &leaves {
            let (start, end) = leaf.cells(depth);
            if start < next {
                return Err(Error::InvalidTree(format!("leaf {leaf} overlaps another leaf")));
            }
            if start > next {
                return Err(Error::InvalidTree(format!(
                    "band gap before leaf {leaf}: leaves do not tile [0, 1/2]"
                )));
            }
            next = end;
        }
        if next != 1u64 << depth {
            return Err(Error::InvalidTree("leaves do not reach 1/2".into()));
        }
        Ok(WpTree { depth, leaves })
    }

    pub fn root(depth: u32) -> Self {
        WpTree { depth, leaves: vec![WpNode::ROOT] }
    }

    /// All `2^depth` leaves at the finest level.
    pub fn full(depth: u32) -> Self {
        WpTree {
            depth,
            leaves: (0..1u64 << depth).map(|p| WpNode { j: depth, p }).collect(),
        }
    }

    /// Dyadic wavelet tree `{(J,0), (J,1), (J-1,1), ..., (1,1)}`.
    pub fn wavelet(depth: u32) -> Self {
        if depth == 0 {
            return Self::root(0);
        }
        let mut leaves = vec![WpNode { j: depth, p: 0 }];
        leaves.extend((1..=depth).rev().map(|j| WpNode { j, p: 1 }));
        WpTree { depth, leaves }
    }

    /// Maximum depth `J`; the series length is `2^J`.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        1usize << self.depth
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn leaves(&self) -> &[WpNode] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn contains_leaf(&self, node: &WpNode) -> bool {
        self.leaves.binary_search_by_key(&node.cells(self.depth).0, |l| l.cells(self.depth).0)
            .map(|i| self.leaves[i] == *node)
            .unwrap_or(false)
    }

    /// Offset of each leaf's block in the flattened coefficient vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.leaves
            .iter()
            .map(|l| {
                let o = acc;
                acc += 1usize << (self.depth - l.j);
                o
            })
            .collect()
    }

    fn leaf_index(&self) -> HashMap<WpNode, usize> {
        self.leaves.iter().enumerate().map(|(i, &l)| (l, i)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serialisation cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidTree(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    #[serde(rename = "J")]
    depth: u32,
    leaves: Vec<[u64; 2]>,
}

impl Serialize for WpTree {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TreeJson {
            depth: self.depth,
            leaves: self.leaves.iter().map(|l| [l.j as u64, l.p]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WpTree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TreeJson::deserialize(d)?;
        let leaves = raw
            .leaves
            .iter()
            .map(|&[j, p]| {
                u32::try_from(j)
                    .map_err(|_| Error::InvalidTree(format!("depth {j} out of range")))
                    .and_then(|j| WpNode::new(j, p))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        WpTree::new(raw.depth, leaves).map_err(serde::de::Error::custom)
    }
}

/// Per-leaf coefficient vectors `W_j^p(n)`, aligned with `tree.leaves()`.
#[derive(Debug, Clone, PartialEq)]
pub struct WpCoefficients {
    tree: WpTree,
    blocks: Vec<Vec<f64>>,
}

impl WpCoefficients {
    pub fn new(tree: WpTree, blocks: Vec<Vec<f64>>) -> Result<Self> {
        if blocks.len() != tree.leaf_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks for {} leaves",
                blocks.len(),
                tree.leaf_count()
            )));
        }
        for (leaf, block) in tree.leaves().iter().zip(&blocks) {
            let want = 1usize << (tree.depth() - leaf.j);
            if block.len() != want {
                return Err(Error::DimensionMismatch(format!(
                    "leaf {leaf} holds {} coefficients, expected {want}",
                    block.len()
                )));
            }
        }
        Ok(WpCoefficients { tree, blocks })
    }

    pub fn zeros(tree: WpTree) -> Self {
        let blocks = tree
            .leaves()
            .iter()
            .map(|l| vec![0.0; 1usize << (tree.depth() - l.j)])
            .collect();
        WpCoefficients { tree, blocks }
    }

    /// Splits a flat vector (leaf order, positions ascending) into blocks.
    pub fn from_flat(tree: WpTree, flat: &[f64]) -> Result<Self> {
        if flat.len() != tree.len() {
            return Err(Error::LengthMismatch {
                depth: tree.depth(),
                expected: tree.len(),
                got: flat.len(),
            });
        }
        let mut blocks = Vec::with_capacity(tree.leaf_count());
        let mut at = 0;
        for leaf in tree.leaves() {
            let n = 1usize << (tree.depth() - leaf.j);
            blocks.push(flat[at..at + n].to_vec());
            at += n;
        }
        Ok(WpCoefficients { tree, blocks })
    }

    pub fn tree(&self) -> &WpTree {
        &self.tree
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.blocks
    }

    pub fn block(&self, node: &WpNode) -> Option<&[f64]> {
        self.tree.leaves().iter().position(|l| l == node).map(|i| self.blocks[i].as_slice())
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.concat()
    }

    pub fn energy(&self) -> f64 {
        self.blocks.iter().flatten().map(|c| c * c).sum()
    }
}

/// One periodic filter-and-decimate step: `out[k] = sum_i c_i x[(2k + n_i) mod n]`.
fn decimate(x: &[f64], coeffs: &[f64], start: i64) -> Vec<f64> {
    let n = x.len() as i64;
    (0..x.len() / 2)
        .map(|k| {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c * x[(2 * k as i64 + start + i as i64).rem_euclid(n) as usize])
                .sum()
        })
        .collect()
}

/// Adjoint of [`decimate`], accumulated into `out` (length `2 * y.len()`).
fn expand_into(y: &[f64], coeffs: &[f64], start: i64, out: &mut [f64]) {
    let n = out.len() as i64;
    for (k, &v) in y.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        for (i, &c) in coeffs.iter().enumerate() {
            out[(2 * k as i64 + start + i as i64).rem_euclid(n) as usize] += c * v;
        }
    }
}

fn child_branch(child: &WpNode) -> Branch {
    if child.is_lowpass_child() {
        Branch::Low
    } else {
        Branch::High
    }
}

fn analyze_node(
    node: WpNode,
    x: Vec<f64>,
    filter: &QmfPair,
    index: &HashMap<WpNode, usize>,
    out: &mut [Vec<f64>],
) {
    if let Some(&i) = index.get(&node) {
        out[i] = x;
        return;
    }
    for child in node.children() {
        let (c, s) = filter.branch(child_branch(&child));
        let y = decimate(&x, c, s);
        analyze_node(child, y, filter, index, out);
    }
}

fn synthesize_node(
    node: WpNode,
    len: usize,
    filter: &QmfPair,
    index: &HashMap<WpNode, usize>,
    blocks: &[Vec<f64>],
) -> Vec<f64> {
    if let Some(&i) = index.get(&node) {
        return blocks[i].clone();
    }
    let mut x = vec![0.0; len];
    for child in node.children() {
        let y = synthesize_node(child, len / 2, filter, index, blocks);
        let (c, s) = filter.branch(child_branch(&child));
        expand_into(&y, c, s, &mut x);
    }
    x
}

/// Forward transform of a length-`2^J` signal onto the leaves of `tree`.
pub fn analyze(signal: &[f64], tree: &WpTree, filter: &QmfPair) -> Result<WpCoefficients> {
    if signal.len() != tree.len() {
        return Err(Error::LengthMismatch {
            depth: tree.depth(),
            expected: tree.len(),
            got: signal.len(),
        });
    }
    let index = tree.leaf_index();
    let mut blocks = vec![Vec::new(); tree.leaf_count()];
    analyze_node(WpNode::ROOT, signal.to_vec(), filter, &index, &mut blocks);
    Ok(WpCoefficients { tree: tree.clone(), blocks })
}

fn adjoint(coeffs: &WpCoefficients, filter: &QmfPair) -> Vec<f64> {
    let tree = coeffs.tree();
    synthesize_node(WpNode::ROOT, tree.len(), filter, &tree.leaf_index(), coeffs.blocks())
}

/// Inverse transform. For exactly orthonormal filters this is the adjoint
/// filter bank; for truncated filters the adjoint is refined iteratively
/// until `analyze` reproduces the coefficients.
pub fn synthesize(coeffs: &WpCoefficients, filter: &QmfPair) -> Vec<f64> {
    let mut x = adjoint(coeffs, filter);
    if !filter.is_truncated() {
        return x;
    }
    let scale = coeffs.energy().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..50 {
        let back = analyze(&x, coeffs.tree(), filter).expect("length fixed by tree");
        let mut residual = coeffs.clone();
        let mut worst: f64 = 0.0;
        for (r, b) in residual.blocks.iter_mut().zip(back.blocks()) {
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= bi;
                worst = worst.max(ri.abs());
            }
        }
        if worst <= 1e-15 * scale {
            break;
        }
        for (xi, di) in x.iter_mut().zip(adjoint(&residual, filter)) {
            *xi += di;
        }
    }
    x
}

/// The `N x N` synthesis matrix whose columns are the basis vectors of
/// `tree`, ordered by leaf (band lower edge) then position.
pub fn transform_matrix(tree: &WpTree, filter: &QmfPair) -> nalgebra::DMatrix<f64> {
    let n = tree.len();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut unit = vec![0.0; n];
            unit[k] = 1.0;
            let coeffs = WpCoefficients::from_flat(tree.clone(), &unit).expect("length fixed by tree");
            synthesize(&coeffs, filter)
        })
        .collect();
    nalgebra::DMatrix::from_fn(n, n, |r, c| columns[c][r])
}

/// Squared gain of the filter cascade leading from the root to `node`,
/// evaluated at frequency `lambda`. With `normalized` each stage is divided
/// by 2 so that the gains of the `2^j` nodes at a level sum to one.
pub fn cascade_squared_gain(filter: &QmfPair, node: &WpNode, lambda: f64, normalized: bool) -> f64 {
    let mut gain = 1.0;
    let mut scale = lambda;
    for depth in 1..=node.j {
        let child = node.ancestor(depth);
        let g = squared_gain(filter, child_branch(&child), scale);
        gain *= if normalized { g / 2.0 } else { g };
        scale *= 2.0;
    }
    gain
}
