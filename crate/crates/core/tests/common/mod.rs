//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.
#![allow(dead_code)]

use chrono::{DateTime, Utc};
use fogcast::gbdt::{Node, NodeKind, SplitCandidate, SplitParams, Tree};
use rand::Rng;

// ---------------------------------------------------------------- solar

/// Low-precision solar coordinates after Meeus, "Astronomical Algorithms"
/// ch. 25 and 12, with apparent longitude and the nutation-corrected
/// obliquity. Accurate to about 0.01° in elevation for 1950–2050, far
/// tighter than the closed-form approximation under test.
pub fn reference_solar_elevation(lat_deg: f64, lon_deg: f64, t: DateTime<Utc>) -> f64 {
    let jd = t.timestamp() as f64 / 86_400.0 + t.timestamp_subsec_nanos() as f64 / 86.4e12 + 2_440_587.5;
    let d = jd - 2_451_545.0;
    let tc = d / 36_525.0;

    let l0 = 280.46646 + tc * (36000.76983 + tc * 0.0003032);
    let m = (357.52911 + tc * (35999.05029 - 0.0001537 * tc)).to_radians();
    let c = m.sin() * (1.914_602 - tc * (0.004_817 + 0.000_014 * tc))
        + (2.0 * m).sin() * (0.019_993 - 0.000_101 * tc)
        + (3.0 * m).sin() * 0.000_289;
    let omega = (125.04 - 1_934.136 * tc).to_radians();
    let lambda = (l0 + c - 0.005_69 - 0.004_78 * omega.sin()).to_radians();

    let eps0 = 23.0 + (26.0 + (21.448 - tc * (46.815 + tc * (0.000_59 - tc * 0.001_813))) / 60.0) / 60.0;
    let eps = (eps0 + 0.002_56 * omega.cos()).to_radians();

    let decl = (eps.sin() * lambda.sin()).asin();
    let ra = (eps.cos() * lambda.sin()).atan2(lambda.cos());

    let gmst = 280.460_618_37 + 360.985_647_366_29 * d + 0.000_387_933 * tc * tc - tc * tc * tc / 38_710_000.0;
    let h = (gmst + lon_deg).to_radians() - ra;

    let phi = lat_deg.to_radians();
    let s = phi.sin() * decl.sin() + phi.cos() * decl.cos() * h.cos();
    s.clamp(-1.0, 1.0).asin().to_degrees()
}

// ---------------------------------------------------------------- trees

/// Random tree over `n_features` columns with the given maximum depth.
/// Leaf covers are drawn positive; internal covers are the child sums.
/// Thresholds come from a small grid so inputs can land exactly on them.
pub fn random_tree<R: Rng>(rng: &mut R, n_features: usize, max_depth: usize) -> Tree {
    fn grow<R: Rng>(
        rng: &mut R,
        nodes: &mut Vec<Node>,
        parent: Option<usize>,
        depth: usize,
        n_features: usize,
        max_depth: usize,
    ) -> usize {
        let id = nodes.len();
        nodes.push(Node { kind: NodeKind::Leaf { value: 0.0 }, cover: 0.0, parent });
        let split = depth < max_depth && (depth == 0 || rng.gen_bool(0.75));
        if !split {
            nodes[id].kind = NodeKind::Leaf { value: rng.gen_range(-2.0..2.0) };
            nodes[id].cover = rng.gen_range(0.05..10.0);
            return id;
        }
        let feature = rng.gen_range(0..n_features);
        let threshold = rng.gen_range(-4..=4) as f64 * 0.5;
        let left = grow(rng, nodes, Some(id), depth + 1, n_features, max_depth);
        let right = grow(rng, nodes, Some(id), depth + 1, n_features, max_depth);
        nodes[id].kind = NodeKind::Split { feature, threshold, left, right };
        nodes[id].cover = nodes[left].cover + nodes[right].cover;
        id
    }
    let mut nodes = Vec::new();
    grow(rng, &mut nodes, None, 0, n_features, max_depth);
    Tree::from_nodes(nodes).expect("generated tree is well formed")
}

/// Input whose entries sometimes sit exactly on the threshold grid.
pub fn random_input<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.gen_bool(0.3) { rng.gen_range(-4..=4) as f64 * 0.5 } else { rng.gen_range(-2.5..2.5) })
        .collect()
}

/// Expected tree output with the features in `known` (bitmask) fixed to
/// `x` and the others integrated out by cover-weighted descent.
fn conditional_expectation(tree: &Tree, node: usize, x: &[f64], known: usize) -> f64 {
    let n = tree.node(node);
    match n.kind {
        NodeKind::Leaf { value } => value,
        NodeKind::Split { feature, threshold, left, right } => {
            if known >> feature & 1 == 1 {
                let next = if x[feature] < threshold { left } else { right };
                conditional_expectation(tree, next, x, known)
            } else {
                let (cl, cr) = (tree.node(left).cover, tree.node(right).cover);
                (cl * conditional_expectation(tree, left, x, known) + cr * conditional_expectation(tree, right, x, known))
                    / (cl + cr)
            }
        }
    }
}

/// Shapley values by enumerating every coalition of the first
/// `n_features` columns.
pub fn shapley_by_enumeration(tree: &Tree, x: &[f64], n_features: usize) -> Vec<f64> {
    let n = n_features;
    let mut fact = vec![1.0f64; n + 1];
    for k in 1..=n {
        fact[k] = fact[k - 1] * k as f64;
    }
    let v: Vec<f64> = (0..1usize << n).map(|s| conditional_expectation(tree, 0, x, s)).collect();
    (0..n)
        .map(|i| {
            let mut phi = 0.0;
            for s in 0..1usize << n {
                if s >> i & 1 == 1 {
                    continue;
                }
                let k = s.count_ones() as usize;
                let w = fact[k] * fact[n - k - 1] / fact[n];
                phi += w * (v[s | 1 << i] - v[s]);
            }
            phi
        })
        .collect()
}

// ---------------------------------------------------------------- splits

/// Best split by trying every boundary between distinct values and
/// summing each side from scratch. Ties keep the smaller threshold.
pub fn split_by_enumeration(values: &[f64], grad: &[f64], hess: &[f64], p: &SplitParams) -> Option<SplitCandidate> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let (gt, ht): (f64, f64) = (grad.iter().sum(), hess.iter().sum());
    let mut best: Option<SplitCandidate> = None;
    for pair in distinct.windows(2) {
        let t = (pair[0] + pair[1]) / 2.0;
        let (mut gl, mut hl) = (0.0, 0.0);
        for k in 0..values.len() {
            if values[k] < t {
                gl += grad[k];
                hl += hess[k];
            }
        }
        let (gr, hr) = (gt - gl, ht - hl);
        if hl < p.min_child_weight || hr < p.min_child_weight {
            continue;
        }
        if hl + p.reg_lambda <= 0.0 || hr + p.reg_lambda <= 0.0 {
            continue;
        }
        let gain = 0.5
            * (gl * gl / (hl + p.reg_lambda) + gr * gr / (hr + p.reg_lambda)
                - (gl + gr) * (gl + gr) / (hl + hr + p.reg_lambda))
            - p.gamma;
        if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
            best = Some(SplitCandidate { threshold: t, gain, left_grad: gl, left_hess: hl });
        }
    }
    best
}

// ---------------------------------------------------------------- metrics

/// ROC AUC by counting every positive/negative pair.
pub fn auc_by_pairs(scores: &[f64], labels: &[u8]) -> f64 {
    let mut twice_wins: u64 = 0;
    let (mut pos, mut neg) = (0u64, 0u64);
    for (i, &yi) in labels.iter().enumerate() {
        if yi == 1 {
            pos += 1;
        } else {
            neg += 1;
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj == 0 {
                twice_wins += if scores[i] > scores[j] {
                    2
                } else if scores[i] == scores[j] {
                    1
                } else {
                    0
                };
            }
        }
    }
    twice_wins as f64 / (2.0 * pos as f64 * neg as f64)
}

// ---------------------------------------------------------------- data

/// Random unscaled dataset over the full schema. Fog is likelier when
/// column 0 is low and column 5 is small, with label noise.
pub fn random_dataset(n: usize, seed: u64) -> fogcast::features::FeatureDataset {
    use chrono::TimeZone;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: fogcast::features::FeatureRow = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
        let p = if row[0] < -1.0 && row[5] < 0.5 { 0.85 } else { 0.05 };
        labels.push(u8::from(rng.gen_bool(p)));
        rows.push(row);
    }
    let t0 = Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap();
    let ts = (0..n).map(|i| t0 + chrono::TimeDelta::hours(i as i64)).collect();
    let site = fogcast::ingest::SiteMeta { icao: "TEST".into(), lat_deg: 0.0, lon_deg: 0.0, elevation_m: 0.0 };
    fogcast::features::FeatureDataset::new(site, 2, false, ts, rows, labels).expect("valid dataset")
}
