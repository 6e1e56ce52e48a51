#![allow(dead_code)]

use rand::Rng;
use wpgegen::wpt::{WpNode, WpTree};

/// Random valid tree: each node stops with probability `stop` (always at `depth`).
pub fn random_tree(depth: u32, stop: f64, rng: &mut impl Rng) -> WpTree {
    fn grow(node: WpNode, depth: u32, stop: f64, rng: &mut impl Rng, out: &mut Vec<WpNode>) {
        if node.j == depth || (node.j > 0 && rng.gen_bool(stop)) {
            out.push(node);
        } else {
            for c in node.children() {
                grow(c, depth, stop, rng, out);
            }
        }
    }
    let mut leaves = Vec::new();
    grow(WpNode::ROOT, depth, stop, rng, &mut leaves);
    WpTree::new(depth, leaves).unwrap()
}

pub fn node(j: u32, p: u64) -> WpNode {
    WpNode::new(j, p).unwrap()
}
