//! Path-dependent TreeSHAP (Lundberg, Erion & Lee), polynomial in tree
//! depth. Conditional expectations use child-cover fractions.

use crate::gbdt::{NodeKind, Tree};

const ROOT_FEATURE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, Default)]
struct PathElement {
    feature: usize,
    zero_fraction: f64,
    one_fraction: f64,
    pweight: f64,
}

fn extend_path(path: &mut [PathElement], depth: usize, zero_fraction: f64, one_fraction: f64, feature: usize, recip: &[f64]) {
    path[depth] = PathElement { feature, zero_fraction, one_fraction, pweight: if depth == 0 { 1.0 } else { 0.0 } };
    let inv_d1 = recip[depth + 1];
    for i in (0..depth).rev() {
        path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) as f64 * inv_d1;
        path[i].pweight = zero_fraction * path[i].pweight * (depth - i) as f64 * inv_d1;
    }
}

fn unwind_path(path: &mut [PathElement], depth: usize, index: usize) {
    let PathElement { one_fraction, zero_fraction, .. } = path[index];
    let d1 = (depth + 1) as f64;
    let mut next_one = path[depth].pweight;
    for i in (0..depth).rev() {
        if one_fraction != 0.0 {
            let tmp = path[i].pweight;
            path[i].pweight = next_one * d1 / ((i + 1) as f64 * one_fraction);
            next_one = tmp - path[i].pweight * zero_fraction * (depth - i) as f64 / d1;
        } else {
            path[i].pweight = path[i].pweight * d1 / (zero_fraction * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

/// Total permutation weight the path would have with element `index`
/// removed.
fn unwound_path_sum(path: &[PathElement], depth: usize, index: usize, recip: &[f64]) -> f64 {
    let PathElement { one_fraction, zero_fraction, .. } = path[index];
    let d1 = (depth + 1) as f64;
    let inv_d1 = recip[depth + 1];
    let mut total = 0.0;
    if one_fraction != 0.0 {
        let scale = d1 / one_fraction;
        let mut next_one = path[depth].pweight;
        for i in (0..depth).rev() {
            let tmp = next_one * scale * recip[i + 1];
            total += tmp;
            next_one = path[i].pweight - tmp * zero_fraction * (depth - i) as f64 * inv_d1;
        }
    } else {
        let scale = d1 / zero_fraction;
        for i in (0..depth).rev() {
            total += path[i].pweight * scale * recip[depth - i];
        }
    }
    total
}

/// Scratch space sized for trees up to a given depth.
pub(crate) struct ShapWorkspace {
    buf: Vec<PathElement>,
    /// `recip[k] = 1/k`
    recip: Vec<f64>,
}

impl ShapWorkspace {
    pub(crate) fn new(max_tree_depth: usize) -> Self {
        let max_d = max_tree_depth + 2;
        let recip = (0..=max_d + 1).map(|k| if k == 0 { 0.0 } else { 1.0 / k as f64 }).collect();
        Self { buf: vec![PathElement::default(); max_d * (max_d + 1) / 2 + 1], recip }
    }
}

struct Walk<'a> {
    tree: &'a Tree,
    x: &'a [f64],
    phi: &'a mut [f64],
    recip: &'a [f64],
}

impl Walk<'_> {
    /// `buf` starts at the parent's path segment, which holds `depth + 1`
    /// slots; the node's own segment follows it.
    fn recurse(&mut self, node: usize, buf: &mut [PathElement], depth: usize, zero: f64, one: f64, feature: usize) {
        let (parent, rest) = buf.split_at_mut(depth + 1);
        rest[..depth].copy_from_slice(&parent[..depth]);
        let path = rest;
        extend_path(path, depth, zero, one, feature, self.recip);

        let n = self.tree.node(node);
        match n.kind {
            NodeKind::Leaf { value } => {
                for i in 1..=depth {
                    let w = unwound_path_sum(path, depth, i, self.recip);
                    let el = path[i];
                    self.phi[el.feature] += w * (el.one_fraction - el.zero_fraction) * value;
                }
            }
            NodeKind::Split { feature: split, threshold, left, right } => {
                let (hot, cold) = if self.x[split] < threshold { (left, right) } else { (right, left) };
                let total = self.tree.node(left).cover + self.tree.node(right).cover;
                let hot_zero = self.tree.node(hot).cover / total;
                let cold_zero = self.tree.node(cold).cover / total;

                let mut depth = depth;
                let (mut in_zero, mut in_one) = (1.0, 1.0);
                if let Some(k) = (1..=depth).find(|&k| path[k].feature == split) {
                    in_zero = path[k].zero_fraction;
                    in_one = path[k].one_fraction;
                    unwind_path(path, depth, k);
                    depth -= 1;
                }
                self.recurse(hot, path, depth + 1, hot_zero * in_zero, in_one, split);
                self.recurse(cold, path, depth + 1, cold_zero * in_zero, 0.0, split);
            }
        }
    }
}

/// Adds the tree's SHAP values for `x` into `phi`. Covers must be positive
/// and the workspace must fit the tree's depth.
pub(crate) fn tree_shap_into(ws: &mut ShapWorkspace, tree: &Tree, x: &[f64], phi: &mut [f64]) {
    let mut walk = Walk { tree, x, phi, recip: &ws.recip };
    walk.recurse(0, &mut ws.buf, 0, 1.0, 1.0, ROOT_FEATURE);
}
