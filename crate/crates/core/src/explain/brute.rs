//! Shapley values by explicit subset enumeration. Exponential in the number
//! of features the tree uses; meant for checking the fast path.

use super::ExplainError;
use crate::gbdt::{NodeKind, Tree};

pub const MAX_BRUTE_FORCE_FEATURES: usize = 20;

/// Tree expectation with the features in `known` fixed to `x` and the rest
/// marginalized by descending both children weighted by cover.
fn coalition_value(tree: &Tree, node: usize, x: &[f64], known: &[bool]) -> f64 {
    match tree.node(node).kind {
        NodeKind::Leaf { value } => value,
        NodeKind::Split { feature, threshold, left, right } => {
            if known[feature] {
                coalition_value(tree, if x[feature] < threshold { left } else { right }, x, known)
            } else {
                let (cl, cr) = (tree.node(left).cover, tree.node(right).cover);
                (cl * coalition_value(tree, left, x, known) + cr * coalition_value(tree, right, x, known)) / (cl + cr)
            }
        }
    }
}

/// Classic Shapley values of one tree at `x`, one entry per input column.
pub fn brute_force_shap(tree: &Tree, x: &[f64]) -> Result<Vec<f64>, ExplainError> {
    let mut used: Vec<usize> = tree
        .nodes()
        .iter()
        .filter_map(|n| match n.kind {
            NodeKind::Split { feature, .. } => Some(feature),
            NodeKind::Leaf { .. } => None,
        })
        .collect();
    used.sort_unstable();
    used.dedup();
    if used.len() > MAX_BRUTE_FORCE_FEATURES {
        return Err(ExplainError::TooManyFeatures(used.len()));
    }
    if let Some(&f) = used.last() {
        if f >= x.len() {
            return Err(ExplainError::SchemaMismatch(format!("tree uses feature {f}, input has {}", x.len())));
        }
    }

    let m = used.len();
    // weight[s] = s!(m−s−1)!/m!
    let weight: Vec<f64> = (0..m)
        .map(|s| {
            let mut binom = 1.0;
            for k in 0..s {
                binom = binom * (m - 1 - k) as f64 / (k + 1) as f64;
            }
            1.0 / (m as f64 * binom)
        })
        .collect();

    let n_subsets = 1usize << m;
    let mut known = vec![false; x.len()];
    let mut values = Vec::with_capacity(n_subsets);
    for mask in 0..n_subsets {
        for (b, &f) in used.iter().enumerate() {
            known[f] = mask >> b & 1 == 1;
        }
        values.push(coalition_value(tree, 0, x, &known));
    }

    let mut phi = vec![0.0; x.len()];
    for (b, &f) in used.iter().enumerate() {
        let bit = 1usize << b;
        let mut acc = 0.0;
        for mask in (0..n_subsets).filter(|mask| mask & bit == 0) {
            let size = mask.count_ones() as usize;
            acc += weight[size] * (values[mask | bit] - values[mask]);
        }
        phi[f] = acc;
    }
    Ok(phi)
}
