//! Best-ortho-basis construction for Gegenbauer processes.
//!
//! [`best_basis_1factor`] and [`best_basis_kfactor`] place leaves purely from
//! the singular frequencies: along the refinement path towards each `ν` the
//! sibling away from `ν` becomes a leaf, down to the depth-`J` cell(s) that
//! contain `ν`. [`cw_best_basis`] reaches the same trees (indicator cost) or
//! threshold/variance variants through a bottom-up search over band-pass
//! variances, and [`whitcher_basis`] is the filter-gain thresholding baseline.

mod frequency;

pub use frequency::{Frequency, GridPosition, EDGE_TOL};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{Family, QmfPair};
use crate::gegenbauer::{band_pass_variance, GegenbauerModel};
use crate::wpt::{cascade_squared_gain, WpNode, WpTree};

/// Marks `Tree(j, p)` for `j = 0..=J`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeIndicator {
    depth: u32,
    flags: Vec<Vec<bool>>,
}

impl TreeIndicator {
    pub fn new(depth: u32) -> Self {
        TreeIndicator { depth, flags: (0..=depth).map(|j| vec![false; 1 << j]).collect() }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn mark(&mut self, j: u32, p: u64) {
        self.flags[j as usize][p as usize] = true;
    }

    pub fn unmark(&mut self, j: u32, p: u64) {
        self.flags[j as usize][p as usize] = false;
    }

    pub fn is_marked(&self, j: u32, p: u64) -> bool {
        self.flags[j as usize][p as usize]
    }

    pub fn marked(&self) -> Vec<WpNode> {
        self.flags
            .iter()
            .enumerate()
            .flat_map(|(j, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &m)| m)
                    .map(move |(p, _)| WpNode { j: j as u32, p: p as u64 })
            })
            .collect()
    }

    /// Logical OR with another indicator of the same depth.
    pub fn union(&mut self, other: &TreeIndicator) {
        assert_eq!(self.depth, other.depth, "indicator depths differ");
        for (a, b) in self.flags.iter_mut().zip(&other.flags) {
            for (x, y) in a.iter_mut().zip(b) {
                *x |= *y;
            }
        }
    }

    /// Unmarks every marked node that has a marked strict descendant.
    pub fn prune(&mut self) {
        // below[j][p]: some strict descendant of (j, p) is marked.
        let mut below = vec![false; 1 << self.depth];
        for j in (0..self.depth as usize).rev() {
            let next: Vec<bool> = (0..1usize << j)
                .map(|p| {
                    let kids = [2 * p, 2 * p + 1];
                    kids.iter().any(|&c| below[c] || self.flags[j + 1][c])
                })
                .collect();
            for (p, &b) in next.iter().enumerate() {
                if b {
                    self.flags[j][p] = false;
                }
            }
            below = next;
        }
    }

    /// The marked nodes as a tree; fails if they do not tile `[0, 1/2]`.
    pub fn to_tree(&self) -> Result<WpTree> {
        WpTree::new(self.depth, self.marked())
    }
}

/// The main loop of the single-frequency construction plus the depth-`J`
/// completion, before pruning.
pub fn indicator_1factor(nu: &Frequency, depth: u32) -> TreeIndicator {
    let mut tree = TreeIndicator::new(depth);
    if depth == 0 {
        tree.mark(0, 0);
        return tree;
    }
    for j in 1..=depth {
        let level = j + 1;
        for p in (0..1u64 << j).step_by(2) {
            if nu.in_closed(p, p + 1, level) {
                tree.mark(j, p + 1);
            }
            if nu.in_closed(p + 1, p + 2, level) {
                tree.mark(j, p);
            }
        }
    }
    for p in 0..1u64 << depth {
        if nu.in_closed(p, p + 1, depth + 1) {
            tree.mark(depth, p);
        }
    }
    tree
}

/// Best basis for a 1-factor process with Gegenbauer frequency `nu`.
pub fn best_basis_1factor(nu: &Frequency, depth: u32) -> Result<WpTree> {
    let mut ind = indicator_1factor(nu, depth);
    ind.prune();
    ind.to_tree()
}

fn check_distinct(nus: &[Frequency]) -> Result<()> {
    for (i, a) in nus.iter().enumerate() {
        if nus[..i].iter().any(|b| a.same_as(b)) {
            return Err(Error::DuplicateFrequency(a.value()));
        }
    }
    Ok(())
}

/// Union of the per-frequency indicators, unpruned.
pub fn union_indicator(nus: &[Frequency], depth: u32) -> Result<TreeIndicator> {
    check_distinct(nus)?;
    let parts: Vec<TreeIndicator> = nus.par_iter().map(|nu| indicator_1factor(nu, depth)).collect();
    let mut all = TreeIndicator::new(depth);
    if parts.is_empty() {
        all.mark(0, 0);
    }
    for part in &parts {
        all.union(part);
    }
    Ok(all)
}

/// Best basis for a k-factor process: union of the 1-factor indicators,
/// pruned so that nested pairs keep only the deeper node.
pub fn best_basis_kfactor(nus: &[Frequency], depth: u32) -> Result<WpTree> {
    let mut all = union_indicator(nus, depth)?;
    all.prune();
    all.to_tree()
}

/// Cost functionals for [`cw_best_basis`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CostSpec {
    /// Split a node iff one child's variance is at most `a0` times the
    /// other's (`0 < a0 < 1`).
    VarianceComparison { a0: f64 },
    /// `β² · 1(β² ≥ δ)`.
    ThresholdFunctional { delta: f64 },
    /// `β² · 1(some ν_l ∈ I_j^p)`, closed intervals.
    SingularityIndicator,
}

impl CostSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CostSpec::VarianceComparison { a0 } if !(a0 > 0.0 && a0 < 1.0) => {
                Err(Error::InvalidArgument(format!("a0 = {a0} must lie in (0, 1)")))
            }
            CostSpec::ThresholdFunctional { delta } if !(delta > 0.0) => {
                Err(Error::InvalidArgument(format!("threshold delta = {delta} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Relative slack when comparing the children's cost with the parent's, so
/// that the rounding in `β²_parent = β²_left + β²_right` does not decide.
pub const CW_SLACK: f64 = 1e-9;

/// Band-pass variances for every node, aggregated upwards from depth `J`.
pub fn band_variance_table(model: &GegenbauerModel, depth: u32, tol: f64) -> Result<Vec<Vec<f64>>> {
    let finest: Vec<f64> = (0..1u64 << depth)
        .into_par_iter()
        .map(|p| band_pass_variance(model, depth, p, tol))
        .collect::<Result<_>>()?;
    let mut table = vec![finest];
    for _ in 0..depth {
        let last = table.last().expect("table starts non-empty");
        let up: Vec<f64> = last.chunks(2).map(|c| c[0] + c[1]).collect();
        table.push(up);
    }
    table.reverse();
    Ok(table)
}

/// Coifman-Wickerhauser style search over `model`'s band-pass variances.
pub fn cw_best_basis(model: &GegenbauerModel, depth: u32, cost: CostSpec, tol: f64) -> Result<WpTree> {
    cost.validate()?;
    let beta = band_variance_table(model, depth, tol)?;
    let nus: Vec<Frequency> = model.frequencies().into_iter().map(Frequency::new).collect::<Result<_>>()?;

    if let CostSpec::VarianceComparison { a0 } = cost {
        let mut leaves = Vec::new();
        let mut stack = vec![WpNode::ROOT];
        while let Some(node) = stack.pop() {
            let [l, r] = node.children();
            let split = node.j < depth && {
                let (vl, vr) = (beta[l.j as usize][l.p as usize], beta[r.j as usize][r.p as usize]);
                vl <= a0 * vr || vr <= a0 * vl
            };
            if split {
                stack.extend([r, l]);
            } else {
                leaves.push(node);
            }
        }
        return WpTree::new(depth, leaves);
    }

    let node_cost = |j: u32, p: u64| -> f64 {
        let b = beta[j as usize][p as usize];
        let on = match cost {
            CostSpec::ThresholdFunctional { delta } => b >= delta,
            CostSpec::SingularityIndicator => nus.iter().any(|nu| nu.in_closed(p, p + 1, j + 1)),
            CostSpec::VarianceComparison { .. } => unreachable!(),
        };
        if on {
            b
        } else {
            0.0
        }
    };

    // best[p] and split[j][p] computed bottom-up.
    let mut best: Vec<f64> = (0..1u64 << depth).map(|p| node_cost(depth, p)).collect();
    let mut split = vec![Vec::new(); depth as usize + 1];
    for j in (0..depth).rev() {
        let mut next = Vec::with_capacity(1 << j);
        let mut row = Vec::with_capacity(1 << j);
        for p in 0..1u64 << j {
            let own = node_cost(j, p);
            let kids = best[2 * p as usize] + best[2 * p as usize + 1];
            let s = own > 0.0 && kids <= own * (1.0 + CW_SLACK);
            row.push(s);
            next.push(if s { kids } else { own });
        }
        split[j as usize] = row;
        best = next;
    }
    let mut leaves = Vec::new();
    let mut stack = vec![WpNode::ROOT];
    while let Some(node) = stack.pop() {
        if node.j < depth && split[node.j as usize][node.p as usize] {
            let [l, r] = node.children();
            stack.extend([r, l]);
        } else {
            leaves.push(node);
        }
    }
    WpTree::new(depth, leaves)
}

/// Default gain threshold of the filter-gain baseline.
pub const WHITCHER_THRESHOLD: f64 = 0.01;

/// Filter-gain thresholding baseline. Starting at the root, a node becomes a
/// leaf once the normalized squared gain of its filter cascade (gains of all
/// nodes at a level sum to one) is at most `threshold` at every `ν`;
/// otherwise it is split. Depth-`J` nodes are always leaves.
///
/// The rule is only defined for compactly supported filters: with the
/// truncated spline (Battle-Lemarié) family it returns `BasisNotFound`.
pub fn whitcher_basis(nus: &[Frequency], filter: &QmfPair, depth: u32, threshold: f64) -> Result<WpTree> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} must be positive")));
    }
    check_distinct(nus)?;
    if filter.family == Family::BattleLemarie {
        return Err(Error::BasisNotFound(format!(
            "gain thresholding needs a compactly supported filter, {} is truncated from an infinite response",
            filter.label()
        )));
    }
    // Mark every node of the full tree, then keep the shallowest marked cover.
    let marked: Vec<Vec<bool>> = (0..=depth)
        .map(|j| {
            (0..1u64 << j)
                .map(|p| {
                    let node = WpNode { j, p };
                    nus.iter()
                        .all(|nu| cascade_squared_gain(filter, &node, nu.value(), true) <= threshold)
                })
                .collect()
        })
        .collect();
    let mut leaves = Vec::new();
    let mut stack = vec![WpNode::ROOT];
    while let Some(node) = stack.pop() {
        if marked[node.j as usize][node.p as usize] || node.j == depth {
            leaves.push(node);
        } else {
            let [l, r] = node.children();
            stack.extend([r, l]);
        }
    }
    WpTree::new(depth, leaves)
}

pub fn leaf_count(tree: &WpTree) -> usize {
    tree.leaf_count()
}

/// ASCII band-partition picture: one row per depth, `#` where a leaf of that
/// depth covers the band, `.` elsewhere. At most `width` columns.
pub fn render_ascii(tree: &WpTree, width: usize) -> String {
    let depth = tree.depth();
    let cols = (1usize << depth).min(width.max(1));
    let mut rows = vec![vec!['.'; cols]; depth as usize + 1];
    let cells = 1u64 << depth;
    for leaf in tree.leaves() {
        let span = 1u64 << (depth - leaf.j);
        let (lo, hi) = (leaf.p * span, (leaf.p + 1) * span);
        for (c, slot) in rows[leaf.j as usize].iter_mut().enumerate() {
            let c_lo = c as u64 * cells / cols as u64;
            let c_hi = (c as u64 + 1) * cells / cols as u64;
            if c_lo < hi && lo < c_hi {
                *slot = '#';
            }
        }
    }
    let mut out = String::new();
    out.push_str(&format!("      0{}1/2\n", " ".repeat(cols.saturating_sub(2))));
    for (j, row) in rows.iter().enumerate() {
        out.push_str(&format!("j={j:<3} {}\n", row.iter().collect::<String>()));
    }
    out
}
