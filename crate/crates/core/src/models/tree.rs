use serde::{Deserialize, Serialize};

/// How a split node routes a row. Rows matching the rule go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRule {
    /// `x <= threshold`.
    Threshold(f64),
    /// `x` is one of the listed category codes.
    Categories(Vec<u32>),
}

impl SplitRule {
    #[inline]
    pub fn goes_left(&self, x: f64) -> bool {
        match self {
            SplitRule::Threshold(t) => x <= *t,
            SplitRule::Categories(set) => {
                x >= 0.0 && x.fract() == 0.0 && set.binary_search(&(x as u32)).is_ok()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        rule: SplitRule,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Regression tree stored as a flat node list; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    rule,
                    left,
                    right,
                } => i = if rule.goes_left(row[*feature]) { *left } else { *right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Feature indices referenced by any split.
    pub fn used_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }

    /// Checks child links and leaf values; returns a description of the first
    /// problem found.
    pub(crate) fn check(&self, n_features: usize) -> std::result::Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Leaf { value } if !value.is_finite() => {
                    return Err(format!("node {i}: non-finite leaf value"))
                }
                Node::Split {
                    feature,
                    left,
                    right,
                    ..
                } => {
                    if *feature >= n_features {
                        return Err(format!("node {i}: unknown feature index {feature}"));
                    }
                    // Children come after their parent, so traversal terminates.
                    if *left <= i || *right <= i || *left >= self.nodes.len() || *right >= self.nodes.len() {
                        return Err(format!("node {i}: invalid child link"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stump_routes_by_threshold() {
        let t = Tree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    rule: SplitRule::Threshold(4.5),
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: 0.0 },
                Node::Leaf { value: 10.0 },
            ],
        };
        assert_eq!(t.predict_row(&[4.0]), 0.0);
        assert_eq!(t.predict_row(&[4.5]), 0.0);
        assert_eq!(t.predict_row(&[5.0]), 10.0);
        assert!(t.check(1).is_ok());
        assert!(t.check(0).is_err());
    }

    #[test]
    fn category_rule() {
        let r = SplitRule::Categories(vec![1, 3]);
        assert!(r.goes_left(3.0));
        assert!(!r.goes_left(2.0));
        assert!(!r.goes_left(1.5));
    }
}
