//! Boosting loop and level-wise tree growth.
//!
//! Every feature column is sorted once up front. Growing one tree level
//! then takes a single pass per sampled feature over that order, feeding
//! each row into the running scan of the node it currently sits in. Per
//! node the scan visits rows in ascending value order, which is exactly the
//! order [`find_best_split`](super::find_best_split) uses, so both paths
//! produce identical candidates.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::split::{NodeScan, SplitCandidate, SplitParams};
use super::tree::{Node, NodeKind, Tree};
use super::{compute_scale_pos_weight, sigmoid, GbdtError, GbdtModel, Hyperparams, ModelMetadata};
use crate::features::{FeatureDataset, FeatureRow, FOG_VISIBILITY_KM, NUM_FEATURES};

const OUT_OF_BAG: u32 = u32::MAX;

/// Per-row gradient and hessian of the class-weighted logistic loss:
/// `g = w(p − y)`, `h = w·p(1 − p)` with `w = scale_pos_weight` for
/// positives and 1 otherwise.
pub fn gradients(labels: &[u8], margins: &[f64], scale_pos_weight: f64) -> (Vec<f64>, Vec<f64>) {
    labels
        .iter()
        .zip(margins)
        .map(|(&y, &m)| {
            let p = sigmoid(m);
            let w = if y == 1 { scale_pos_weight } else { 1.0 };
            (w * (p - y as f64), w * p * (1.0 - p))
        })
        .unzip()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mean class-weighted logistic loss at the given margins.
pub fn weighted_log_loss(labels: &[u8], margins: &[f64], scale_pos_weight: f64) -> f64 {
    let total: f64 = labels
        .iter()
        .zip(margins)
        .map(|(&y, &m)| if y == 1 { scale_pos_weight * softplus(-m) } else { softplus(m) })
        .sum();
    total / labels.len() as f64
}

/// Trains a model on a (scaled) feature dataset.
pub fn train_gbdt(ds: &FeatureDataset, hp: &Hyperparams) -> Result<GbdtModel, GbdtError> {
    train_gbdt_traced(ds, hp).map(|(m, _)| m)
}

/// Like [`train_gbdt`], also returning the mean weighted training loss
/// before the first round and after every round.
pub fn train_gbdt_traced(ds: &FeatureDataset, hp: &Hyperparams) -> Result<(GbdtModel, Vec<f64>), GbdtError> {
    hp.validate()?;
    if ds.is_empty() {
        return Err(GbdtError::EmptyDataset);
    }
    let labels = ds.labels();
    let derived = compute_scale_pos_weight(labels)?;
    let spw = hp.scale_pos_weight.unwrap_or(derived);
    let (trees, losses) = Booster::new(ds.rows(), labels, hp, spw).run();
    let ts = ds.timestamps();
    let metadata = ModelMetadata {
        trained_on: ds.site.icao.clone(),
        train_start: ts.first().copied(),
        train_end: ts.last().copied(),
        train_rows: ds.len(),
        label_definition: format!(
            "visibility < {FOG_VISIBILITY_KM} km at t+{}h; hours without a report are 0",
            ds.horizon_h
        ),
        horizon_h: ds.horizon_h,
        scale_pos_weight: spw,
    };
    let model = GbdtModel::new(0.0, trees, hp.clone(), metadata);
    Ok((model, losses))
}

struct Booster<'a> {
    rows: &'a [FeatureRow],
    labels: &'a [u8],
    hp: &'a Hyperparams,
    spw: f64,
    params: SplitParams,
    columns: Vec<Vec<f64>>,
    sorted: Vec<Vec<u32>>,
    /// `sorted_values[f][k] = columns[f][sorted[f][k]]`
    sorted_values: Vec<Vec<f64>>,
}

/// Gradient statistics of a row and the frontier slot of its node for the
/// level being grown, packed so a scan touches one record per row.
#[derive(Clone, Copy)]
struct RowState {
    grad: f64,
    hess: f64,
    slot: u32,
}

impl<'a> Booster<'a> {
    fn new(rows: &'a [FeatureRow], labels: &'a [u8], hp: &'a Hyperparams, spw: f64) -> Self {
        let columns: Vec<Vec<f64>> = (0..NUM_FEATURES).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let sorted = columns
            .par_iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..col.len() as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect::<Vec<Vec<u32>>>();
        let sorted_values = sorted
            .iter()
            .zip(&columns)
            .map(|(idx, col)| idx.iter().map(|&i| col[i as usize]).collect())
            .collect();
        let params = SplitParams { reg_lambda: hp.reg_lambda, gamma: hp.gamma, min_child_weight: hp.min_child_weight };
        Self { rows, labels, hp, spw, params, columns, sorted, sorted_values }
    }

    fn run(&self) -> (Vec<Tree>, Vec<f64>) {
        let n = self.rows.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.hp.seed);
        let mut margins = vec![0.0; n];
        let mut losses = Vec::with_capacity(self.hp.n_estimators + 1);
        losses.push(weighted_log_loss(self.labels, &margins, self.spw));
        let mut trees = Vec::with_capacity(self.hp.n_estimators);

        let n_rows = ((n as f64 * self.hp.subsample).round() as usize).clamp(1, n);
        let n_cols = ((NUM_FEATURES as f64 * self.hp.colsample_bytree).ceil() as usize).clamp(1, NUM_FEATURES);
        for _ in 0..self.hp.n_estimators {
            let (grad, hess) = gradients(self.labels, &margins, self.spw);
            let mut node_of = vec![OUT_OF_BAG; n];
            if n_rows == n {
                node_of.fill(0);
            } else {
                for i in sample(&mut rng, n, n_rows).iter() {
                    node_of[i] = 0;
                }
            }
            let mut features: Vec<usize> = if n_cols == NUM_FEATURES {
                (0..NUM_FEATURES).collect()
            } else {
                sample(&mut rng, NUM_FEATURES, n_cols).into_vec()
            };
            features.sort_unstable();

            let tree = self.grow(&grad, &hess, &mut node_of, &features);
            margins.par_iter_mut().zip(self.rows.par_iter()).for_each(|(m, x)| *m += tree.predict(x));
            losses.push(weighted_log_loss(self.labels, &margins, self.spw));
            trees.push(tree);
        }
        (trees, losses)
    }

    fn grow(&self, grad: &[f64], hess: &[f64], node_of: &mut [u32], features: &[usize]) -> Tree {
        struct Building {
            split: Option<(usize, f64, usize, usize)>,
            grad: f64,
            hess: f64,
            parent: Option<usize>,
        }
        let (g0, h0) = node_of
            .iter()
            .enumerate()
            .filter(|(_, &nid)| nid != OUT_OF_BAG)
            .fold((0.0, 0.0), |(g, h), (i, _)| (g + grad[i], h + hess[i]));
        let mut nodes = vec![Building { split: None, grad: g0, hess: h0, parent: None }];
        let mut frontier = vec![0usize];

        for _depth in 0..self.hp.max_depth {
            if frontier.is_empty() {
                break;
            }
            let mut slot_of = vec![u32::MAX; nodes.len()];
            for (slot, &nid) in frontier.iter().enumerate() {
                slot_of[nid] = slot as u32;
            }
            let state: Vec<RowState> = node_of
                .iter()
                .enumerate()
                .map(|(i, &nid)| RowState {
                    grad: grad[i],
                    hess: hess[i],
                    slot: if nid == OUT_OF_BAG { u32::MAX } else { slot_of[nid as usize] },
                })
                .collect();
            let per_feature: Vec<Vec<Option<SplitCandidate>>> = features
                .par_iter()
                .map(|&f| {
                    let mut scans: Vec<NodeScan> =
                        frontier.iter().map(|&nid| NodeScan::new(nodes[nid].grad, nodes[nid].hess)).collect();
                    for (&i, &value) in self.sorted[f].iter().zip(&self.sorted_values[f]) {
                        let r = state[i as usize];
                        if r.slot != u32::MAX {
                            scans[r.slot as usize].push(value, r.grad, r.hess, &self.params);
                        }
                    }
                    scans.into_iter().map(|s| s.best).collect()
                })
                .collect();

            // Lowest feature index wins gain ties.
            let mut next_frontier = Vec::new();
            let mut chosen: Vec<Option<(usize, f64)>> = vec![None; nodes.len()];
            for (slot, &nid) in frontier.iter().enumerate() {
                let mut best: Option<(usize, SplitCandidate)> = None;
                for (k, &f) in features.iter().enumerate() {
                    if let Some(c) = per_feature[k][slot] {
                        if best.is_none_or(|(_, b)| c.gain > b.gain) {
                            best = Some((f, c));
                        }
                    }
                }
                if let Some((f, c)) = best {
                    let left = nodes.len();
                    let right = left + 1;
                    for _ in 0..2 {
                        nodes.push(Building { split: None, grad: 0.0, hess: 0.0, parent: Some(nid) });
                    }
                    nodes[nid].split = Some((f, c.threshold, left, right));
                    chosen.resize(nodes.len(), None);
                    chosen[nid] = Some((f, c.threshold));
                    next_frontier.extend([left, right]);
                }
            }
            if next_frontier.is_empty() {
                break;
            }
            for (i, nid) in node_of.iter_mut().enumerate() {
                if *nid == OUT_OF_BAG {
                    continue;
                }
                if let Some((f, threshold)) = chosen[*nid as usize] {
                    let (_, _, left, right) = nodes[*nid as usize].split.expect("chosen node has a split");
                    let child = if self.columns[f][i] < threshold { left } else { right };
                    nodes[child].grad += grad[i];
                    nodes[child].hess += hess[i];
                    *nid = child as u32;
                }
            }
            frontier = next_frontier;
        }

        let lambda = self.hp.reg_lambda;
        let lr = self.hp.learning_rate;
        let nodes = nodes
            .into_iter()
            .map(|b| {
                let kind = match b.split {
                    Some((feature, threshold, left, right)) => NodeKind::Split { feature, threshold, left, right },
                    None => {
                        let denom = b.hess + lambda;
                        let value = if denom > 0.0 { -b.grad / denom * lr } else { 0.0 };
                        NodeKind::Leaf { value }
                    }
                };
                Node { kind, cover: b.hess, parent: b.parent }
            })
            .collect();
        Tree::from_nodes(nodes).expect("grown tree is well formed")
    }
}
