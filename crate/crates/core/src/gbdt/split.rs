//! Exact greedy split search over one feature.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub reg_lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    /// Rows with `x < threshold` go left.
    pub threshold: f64,
    pub gain: f64,
    pub left_grad: f64,
    pub left_hess: f64,
}

/// Second-order loss reduction of splitting a node into (left, right):
/// `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − (G_L+G_R)²/(H_L+H_R+λ)] − γ`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, p: &SplitParams) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + p.reg_lambda);
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - p.gamma
}

/// A threshold strictly above `lo` and at most `hi`, so `lo` routes left
/// and `hi` routes right.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) * 0.5;
    if lo < mid && mid <= hi {
        mid
    } else {
        hi
    }
}

/// Running state of an ascending scan over one node's rows.
#[derive(Debug, Clone)]
pub(crate) struct NodeScan {
    total_grad: f64,
    total_hess: f64,
    grad_left: f64,
    hess_left: f64,
    last_value: Option<f64>,
    pub(crate) best: Option<SplitCandidate>,
}

impl NodeScan {
    pub(crate) fn new(total_grad: f64, total_hess: f64) -> Self {
        Self { total_grad, total_hess, grad_left: 0.0, hess_left: 0.0, last_value: None, best: None }
    }

    /// Feeds the next row in ascending feature order. A candidate is
    /// evaluated at every boundary between distinct values; the first
    /// (smallest-threshold) maximum is kept.
    #[inline]
    pub(crate) fn push(&mut self, value: f64, g: f64, h: f64, p: &SplitParams) {
        if let Some(last) = self.last_value {
            if value > last {
                self.consider(last, value, p);
            }
        }
        self.grad_left += g;
        self.hess_left += h;
        self.last_value = Some(value);
    }

    fn consider(&mut self, lo: f64, hi: f64, p: &SplitParams) {
        let (gl, hl) = (self.grad_left, self.hess_left);
        let (gr, hr) = (self.total_grad - gl, self.total_hess - hl);
        if hl < p.min_child_weight || hr < p.min_child_weight {
            return;
        }
        if !(hl + p.reg_lambda > 0.0) || !(hr + p.reg_lambda > 0.0) {
            return;
        }
        let gain = split_gain(gl, hl, gr, hr, p);
        if !(gain > 0.0) {
            return;
        }
        if self.best.is_none_or(|b| gain > b.gain) {
            self.best = Some(SplitCandidate { threshold: midpoint(lo, hi), gain, left_grad: gl, left_hess: hl });
        }
    }
}

/// Best split of one feature by exhaustive scan of the midpoints between
/// consecutive distinct sorted values. Returns `None` when no candidate
/// has positive gain with both child hessian sums at least
/// `min_child_weight`. Ties go to the smallest threshold.
///
/// # Panics
///
/// If the three slices differ in length.
pub fn find_best_split(values: &[f64], grad: &[f64], hess: &[f64], params: &SplitParams) -> Option<SplitCandidate> {
    assert!(values.len() == grad.len() && grad.len() == hess.len(), "slice lengths differ");
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut scan = NodeScan::new(grad.iter().sum(), hess.iter().sum());
    for i in order {
        scan.push(values[i], grad[i], hess[i], params);
    }
    scan.best
}

#[cfg(test)]
mod tests {
    use super::*;

    const NO_REG: SplitParams = SplitParams { reg_lambda: 0.0, gamma: 0.0, min_child_weight: 0.0 };

    #[test]
    fn two_point_example() {
        let s = find_best_split(&[0.0, 1.0], &[-1.0, 1.0], &[1.0, 1.0], &NO_REG).unwrap();
        assert_eq!(s.threshold, 0.5);
        assert_eq!(s.gain, 1.0);
    }

    #[test]
    fn identical_values_give_no_split() {
        assert!(find_best_split(&[2.0; 5], &[-1.0, 1.0, -1.0, 1.0, 3.0], &[1.0; 5], &NO_REG).is_none());
    }

    #[test]
    fn zero_gradients_give_no_split() {
        let p = SplitParams { reg_lambda: 1.0, ..NO_REG };
        assert!(find_best_split(&[0.0, 1.0, 2.0], &[0.0; 3], &[1.0; 3], &p).is_none());
    }

    #[test]
    fn min_child_weight_blocks_thin_children() {
        let p = SplitParams { min_child_weight: 1.5, ..NO_REG };
        assert!(find_best_split(&[0.0, 1.0], &[-1.0, 1.0], &[1.0, 1.0], &p).is_none());
    }

    #[test]
    fn gamma_is_subtracted() {
        let p = SplitParams { gamma: 0.25, ..NO_REG };
        let s = find_best_split(&[0.0, 1.0], &[-1.0, 1.0], &[1.0, 1.0], &p).unwrap();
        assert_eq!(s.gain, 0.75);
        let p = SplitParams { gamma: 1.0, ..NO_REG };
        assert!(find_best_split(&[0.0, 1.0], &[-1.0, 1.0], &[1.0, 1.0], &p).is_none());
    }

    #[test]
    fn ties_prefer_smallest_threshold() {
        // Splitting at 0.5 or 2.5 separates a symmetric pattern equally well.
        let s = find_best_split(&[0.0, 1.0, 2.0, 3.0], &[-1.0, 0.0, 0.0, 1.0], &[1.0; 4], &NO_REG).unwrap();
        assert_eq!(s.threshold, 0.5);
    }

    #[test]
    fn midpoint_between_adjacent_floats() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let m = midpoint(lo, hi);
        assert!(lo < m && m <= hi);
    }
}
