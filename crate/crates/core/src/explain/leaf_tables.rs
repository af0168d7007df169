//! Leaf-wise precomputation of path-dependent TreeSHAP.
//!
//! For a leaf with value `v` whose path uses the distinct features `F`
//! (`|F| = D`), let `z_j` be the product of child-cover fractions along the
//! splits on `j`, and `o_j ∈ {0, 1}` whether `x` satisfies every split on `j`.
//! The leaf adds to feature `i`
//!
//! ```text
//! v (o_i − z_i) Σ_{A ⊆ S∖{i}} |A|!(D−|A|−1)!/D! Π_{j ∈ F∖{i}∖A} z_j
//! ```
//!
//! where `S = {j : o_j = 1}`. The sum only depends on `S∖{i}`, so it is
//! tabulated once per leaf and feature; explaining a row is then a lookup
//! per leaf and path feature.

use crate::gbdt::{NodeKind, Tree};

/// Deeper trees fall back to the recursive algorithm.
pub(crate) const MAX_TABLE_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy)]
struct Condition {
    position: u8,
    feature: usize,
    threshold: f64,
    goes_left: bool,
}

#[derive(Debug, Clone)]
struct LeafTable {
    value: f64,
    features: Vec<usize>,
    zero: Vec<f64>,
    conditions: Vec<Condition>,
    /// `psi[p << (D − 1) | m]` for path position `p` and a mask `m` over the
    /// other `D − 1` positions in order.
    psi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct TreeTables {
    leaves: Vec<LeafTable>,
}

fn shapley_weights(d: usize) -> Vec<f64> {
    // w[k] = k!(d−k−1)!/d!, built as 1/(d·C(d−1, k)).
    (0..d)
        .map(|k| {
            let mut binom = 1.0;
            for t in 0..k {
                binom = binom * (d - 1 - t) as f64 / (t + 1) as f64;
            }
            1.0 / (d as f64 * binom)
        })
        .collect()
}

impl LeafTable {
    fn build(value: f64, path: &[(usize, f64, bool, f64)]) -> Self {
        let mut features: Vec<usize> = Vec::new();
        let mut zero: Vec<f64> = Vec::new();
        let mut conditions = Vec::with_capacity(path.len());
        for &(feature, threshold, goes_left, fraction) in path {
            let position = match features.iter().position(|&f| f == feature) {
                Some(p) => {
                    zero[p] *= fraction;
                    p
                }
                None => {
                    features.push(feature);
                    zero.push(fraction);
                    features.len() - 1
                }
            };
            conditions.push(Condition { position: position as u8, feature, threshold, goes_left });
        }

        let d = features.len();
        let mut psi = Vec::new();
        if d > 0 {
            let w = shapley_weights(d);
            let half = 1usize << (d - 1);
            psi = vec![0.0; d * half];
            let mut others = Vec::with_capacity(d - 1);
            let mut prod_absent = vec![0.0; half];
            for p in 0..d {
                others.clear();
                others.extend((0..d).filter(|&q| q != p).map(|q| zero[q]));
                for (a, slot) in prod_absent.iter_mut().enumerate() {
                    *slot = others.iter().enumerate().filter(|(b, _)| a >> b & 1 == 0).map(|(_, z)| z).product();
                }
                for m in 0..half {
                    // every submask a of m, including 0
                    let mut acc = 0.0;
                    let mut a = m;
                    loop {
                        acc += w[a.count_ones() as usize] * prod_absent[a];
                        if a == 0 {
                            break;
                        }
                        a = (a - 1) & m;
                    }
                    psi[p * half + m] = acc;
                }
            }
        }
        Self { value, features, zero, conditions, psi }
    }
}

/// Split on the way to a leaf: feature, threshold, went left, cover fraction.
type PathStep = (usize, f64, bool, f64);

impl TreeTables {
    /// `None` when the tree is deeper than [`MAX_TABLE_DEPTH`].
    pub(crate) fn build(tree: &Tree) -> Option<Self> {
        if tree.depth() > MAX_TABLE_DEPTH {
            return None;
        }
        let mut leaves = Vec::new();
        let mut stack: Vec<(usize, Vec<PathStep>)> = vec![(0, Vec::new())];
        while let Some((node, path)) = stack.pop() {
            match tree.node(node).kind {
                NodeKind::Leaf { value } => leaves.push(LeafTable::build(value, &path)),
                NodeKind::Split { feature, threshold, left, right } => {
                    let (cl, cr) = (tree.node(left).cover, tree.node(right).cover);
                    let mut lp = path.clone();
                    lp.push((feature, threshold, true, cl / (cl + cr)));
                    let mut rp = path;
                    rp.push((feature, threshold, false, cr / (cl + cr)));
                    stack.push((right, rp));
                    stack.push((left, lp));
                }
            }
        }
        Some(Self { leaves })
    }

    pub(crate) fn shap_into(&self, x: &[f64], phi: &mut [f64]) {
        for leaf in &self.leaves {
            let d = leaf.features.len();
            if d == 0 {
                continue;
            }
            let mut agree: usize = (1 << d) - 1;
            for c in &leaf.conditions {
                if (x[c.feature] < c.threshold) != c.goes_left {
                    agree &= !(1 << c.position);
                }
            }
            let half_shift = d - 1;
            for p in 0..d {
                let o = (agree >> p & 1) as f64;
                let low = agree & ((1 << p) - 1);
                let high = (agree >> (p + 1)) << p;
                let w = leaf.psi[(p << half_shift) | low | high];
                phi[leaf.features[p]] += leaf.value * (o - leaf.zero[p]) * w;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::treeshap::{tree_shap_into, ShapWorkspace};
    use crate::gbdt::Node;

    #[test]
    fn weights_sum_over_subsets_to_one() {
        // Σ_k C(d−1, k) w[k] = 1
        for d in 1..=8 {
            let w = shapley_weights(d);
            let mut binom = 1.0;
            let mut total = 0.0;
            for (k, wk) in w.iter().enumerate().take(d) {
                total += binom * wk;
                binom = binom * (d - 1 - k) as f64 / (k + 1) as f64;
            }
            assert!((total - 1.0).abs() < 1e-14, "d={d}: {total}");
        }
    }

    #[test]
    fn agrees_with_recursion_on_repeated_features() {
        let t = Tree::from_nodes(vec![
            Node { kind: NodeKind::Split { feature: 0, threshold: 0.0, left: 1, right: 4 }, cover: 6.0, parent: None },
            Node { kind: NodeKind::Split { feature: 1, threshold: 2.0, left: 2, right: 3 }, cover: 4.0, parent: Some(0) },
            Node { kind: NodeKind::Leaf { value: 1.0 }, cover: 1.0, parent: Some(1) },
            Node { kind: NodeKind::Split { feature: 0, threshold: -1.0, left: 5, right: 6 }, cover: 3.0, parent: Some(1) },
            Node { kind: NodeKind::Leaf { value: -2.0 }, cover: 2.0, parent: Some(0) },
            Node { kind: NodeKind::Leaf { value: 0.5 }, cover: 1.0, parent: Some(3) },
            Node { kind: NodeKind::Leaf { value: 4.0 }, cover: 2.0, parent: Some(3) },
        ])
        .unwrap();
        let tables = TreeTables::build(&t).unwrap();
        for x in [[-2.0, 3.0], [-0.5, 3.0], [-0.5, 1.0], [1.0, 5.0]] {
            let mut a = [0.0; 2];
            let mut b = [0.0; 2];
            tables.shap_into(&x, &mut a);
            tree_shap_into(&mut ShapWorkspace::new(t.depth()), &t, &x, &mut b);
            for j in 0..2 {
                assert!((a[j] - b[j]).abs() < 1e-14, "{x:?}: {a:?} vs {b:?}");
            }
        }
    }
}
