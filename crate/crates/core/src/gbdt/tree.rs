use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    /// `x[feature] < threshold` routes to `left`.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// Margin contribution with the learning rate already applied.
    Leaf { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    /// Sum of training hessians routed through this node.
    pub cover: f64,
    pub parent: Option<usize>,
}

/// Regression tree stored as a flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Builds a tree from nodes, checking that child links form a tree
    /// rooted at node 0 with consistent parent links.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self, String> {
        if nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        if nodes[0].parent.is_some() {
            return Err("root has a parent".into());
        }
        let mut seen = vec![false; nodes.len()];
        seen[0] = true;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if let NodeKind::Split { left, right, threshold, .. } = nodes[i].kind {
                if threshold.is_nan() {
                    return Err(format!("node {i} has a NaN threshold"));
                }
                for child in [left, right] {
                    if child >= nodes.len() || seen[child] {
                        return Err(format!("node {i} has invalid child {child}"));
                    }
                    if nodes[child].parent != Some(i) {
                        return Err(format!("node {child} parent link does not point to {i}"));
                    }
                    seen[child] = true;
                    stack.push(child);
                }
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(format!("node {orphan} is unreachable"));
        }
        Ok(Self { nodes })
    }

    pub fn leaf(value: f64, cover: f64) -> Self {
        Self { nodes: vec![Node { kind: NodeKind::Leaf { value }, cover, parent: None }] }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    /// Index of the leaf `x` lands in.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i].kind {
                NodeKind::Leaf { .. } => return i,
                NodeKind::Split { feature, threshold, left, right } => {
                    i = if x[feature] < threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)].kind {
            NodeKind::Leaf { value } => value,
            NodeKind::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i].kind {
                NodeKind::Leaf { .. } => 0,
                NodeKind::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    /// Largest feature index referenced by a split, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Split { feature, .. } => Some(feature),
                NodeKind::Leaf { .. } => None,
            })
            .max()
    }

    /// Cover-weighted mean leaf value.
    pub fn expected_value(&self) -> f64 {
        fn go(t: &Tree, i: usize) -> f64 {
            let n = &t.nodes[i];
            match n.kind {
                NodeKind::Leaf { value } => value,
                NodeKind::Split { left, right, .. } => {
                    let (l, r) = (&t.nodes[left], &t.nodes[right]);
                    (l.cover * go(t, left) + r.cover * go(t, right)) / (l.cover + r.cover)
                }
            }
        }
        go(self, 0)
    }
}

/// Serialized node: `{id, parent, left, right, feature, threshold,
/// leaf_value, cover}` with nulls for fields that do not apply.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub feature: Option<usize>,
    pub threshold: Option<f64>,
    pub leaf_value: Option<f64>,
    pub cover: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct TreeRecord {
    pub nodes: Vec<NodeRecord>,
}

impl From<&Tree> for TreeRecord {
    fn from(t: &Tree) -> Self {
        let nodes = t
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| match n.kind {
                NodeKind::Split { feature, threshold, left, right } => NodeRecord {
                    id,
                    parent: n.parent,
                    left: Some(left),
                    right: Some(right),
                    feature: Some(feature),
                    threshold: Some(threshold),
                    leaf_value: None,
                    cover: n.cover,
                },
                NodeKind::Leaf { value } => NodeRecord {
                    id,
                    parent: n.parent,
                    left: None,
                    right: None,
                    feature: None,
                    threshold: None,
                    leaf_value: Some(value),
                    cover: n.cover,
                },
            })
            .collect();
        Self { nodes }
    }
}

impl TryFrom<TreeRecord> for Tree {
    type Error = String;

    fn try_from(rec: TreeRecord) -> Result<Self, String> {
        let mut nodes = Vec::with_capacity(rec.nodes.len());
        for (i, n) in rec.nodes.into_iter().enumerate() {
            if n.id != i {
                return Err(format!("node id {} at position {i}", n.id));
            }
            let kind = match (n.left, n.right, n.feature, n.threshold, n.leaf_value) {
                (Some(left), Some(right), Some(feature), Some(threshold), None) => {
                    NodeKind::Split { feature, threshold, left, right }
                }
                (None, None, None, None, Some(value)) => NodeKind::Leaf { value },
                _ => return Err(format!("node {i} is neither a complete split nor a leaf")),
            };
            nodes.push(Node { kind, cover: n.cover, parent: n.parent });
        }
        Tree::from_nodes(nodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(feature: usize, threshold: f64, a: f64, b: f64, ca: f64, cb: f64) -> Tree {
        Tree::from_nodes(vec![
            Node { kind: NodeKind::Split { feature, threshold, left: 1, right: 2 }, cover: ca + cb, parent: None },
            Node { kind: NodeKind::Leaf { value: a }, cover: ca, parent: Some(0) },
            Node { kind: NodeKind::Leaf { value: b }, cover: cb, parent: Some(0) },
        ])
        .unwrap()
    }

    #[test]
    fn routing_is_strictly_less_than() {
        let t = stump(2, 0.5, -1.0, 1.0, 1.0, 1.0);
        let mut x = [0.0; 19];
        assert_eq!(t.predict(&x), -1.0);
        x[2] = 0.5;
        assert_eq!(t.predict(&x), 1.0);
        assert_eq!(t.depth(), 1);
        assert_eq!(t.expected_value(), 0.0);
    }

    #[test]
    fn rejects_broken_links() {
        let bad = vec![
            Node { kind: NodeKind::Split { feature: 0, threshold: 0.0, left: 1, right: 5 }, cover: 2.0, parent: None },
            Node { kind: NodeKind::Leaf { value: 0.0 }, cover: 1.0, parent: Some(0) },
        ];
        assert!(Tree::from_nodes(bad).is_err());
        let cyclic = vec![
            Node { kind: NodeKind::Split { feature: 0, threshold: 0.0, left: 1, right: 1 }, cover: 2.0, parent: None },
            Node { kind: NodeKind::Leaf { value: 0.0 }, cover: 1.0, parent: Some(0) },
        ];
        assert!(Tree::from_nodes(cyclic).is_err());
    }

    #[test]
    fn record_round_trip() {
        let t = stump(4, 1.25, 0.1, -0.2, 3.0, 4.0);
        let back = Tree::try_from(TreeRecord::from(&t)).unwrap();
        assert_eq!(back, t);
    }
}
