//! Histogram-based, leaf-wise regression-tree growth.

use rand::seq::index::sample;
use rand::Rng;

use super::tree::{Node, SplitRule, Tree};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

enum BinKind {
    /// Cut points; bin `b` holds values in `(cuts[b-1], cuts[b]]`.
    Numeric(Vec<f64>),
    Categorical,
}

struct BinnedFeature {
    kind: BinKind,
    n_bins: usize,
    bins: Vec<u16>,
}

pub(crate) struct BinnedMatrix {
    features: Vec<BinnedFeature>,
}

impl BinnedMatrix {
    pub fn n_features(&self) -> usize {
        self.features.len()
    }
}

/// Equal-frequency cut points placed midway between distinct values.
fn quantile_cuts(values: &[f64], n_bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for v in sorted {
        match distinct.last_mut() {
            Some((d, c)) if *d == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    if distinct.len() <= n_bins {
        return distinct
            .windows(2)
            .map(|w| w[0].0 + (w[1].0 - w[0].0) / 2.0)
            .collect();
    }
    let n = values.len() as f64;
    let mut cuts = Vec::with_capacity(n_bins - 1);
    let mut seen = 0usize;
    let mut next_edge = 1usize;
    for w in distinct.windows(2) {
        seen += w[0].1;
        if seen as f64 >= next_edge as f64 * n / n_bins as f64 {
            cuts.push(w[0].0 + (w[1].0 - w[0].0) / 2.0);
            while next_edge < n_bins && seen as f64 >= next_edge as f64 * n / n_bins as f64 {
                next_edge += 1;
            }
            if cuts.len() == n_bins - 1 {
                break;
            }
        }
    }
    cuts
}

pub(crate) fn bin_matrix(matrix: &FeatureMatrix, n_bins: usize) -> Result<BinnedMatrix> {
    let mut features = Vec::with_capacity(matrix.n_cols());
    for (j, col) in matrix.columns.iter().enumerate() {
        let values = matrix.column_values(j);
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value in column {} at row {bad}",
                col.name
            )));
        }
        let feature = match col.categories {
            Some(k) => {
                let mut bins = Vec::with_capacity(values.len());
                for v in &values {
                    if *v < 0.0 || v.fract() != 0.0 || *v >= k as f64 || *v > u16::MAX as f64 {
                        return Err(Error::Data(format!(
                            "column {} holds {v}, not a category code below {k}",
                            col.name
                        )));
                    }
                    bins.push(*v as u16);
                }
                BinnedFeature {
                    kind: BinKind::Categorical,
                    n_bins: k as usize,
                    bins,
                }
            }
            None => {
                let cuts = quantile_cuts(&values, n_bins);
                let bins = values
                    .iter()
                    .map(|v| cuts.partition_point(|c| c < v) as u16)
                    .collect();
                BinnedFeature {
                    n_bins: cuts.len() + 1,
                    kind: BinKind::Numeric(cuts),
                    bins,
                }
            }
        };
        features.push(feature);
    }
    Ok(BinnedMatrix { features })
}

pub(crate) struct GrowConfig {
    pub max_leaves: usize,
    pub min_weight_leaf: f64,
    pub l2: f64,
    pub min_category_weight: f64,
    /// Fraction of allowed features drawn at every node; `None` uses all.
    pub per_split_fraction: Option<f64>,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    /// Numeric: last bin going left. Categorical: unused.
    bin: usize,
}

struct OpenLeaf {
    node: usize,
    rows: Vec<u32>,
    split: Option<(Candidate, Option<Vec<u32>>)>,
}

/// Pseudo-count added to category weights when ordering, and the extra L2
/// penalty on subset splits.
const CAT_SMOOTH: f64 = 10.0;
const CAT_L2: f64 = 10.0;

#[inline]
fn score(g: f64, w: f64, l2: f64) -> f64 {
    g * g / (w + l2)
}

/// Grows one tree on `rows`, fitting `grad` (weighted by `weights`).
/// Leaf values are `sum(w * g) / (sum(w) + l2)`.
pub(crate) fn grow_tree<R: Rng>(
    binned: &BinnedMatrix,
    grad: &[f64],
    weights: &[f64],
    rows: Vec<u32>,
    allowed: &[usize],
    cfg: &GrowConfig,
    rng: &mut R,
) -> Tree {
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut node_rows: Vec<Option<Vec<u32>>> = vec![None];
    let mut open = vec![OpenLeaf {
        node: 0,
        split: best_split(binned, grad, weights, &rows, allowed, cfg, rng),
        rows,
    }];
    let mut n_leaves = 1;
    while n_leaves < cfg.max_leaves {
        // Highest gain; ties go to the lowest node id.
        let pick = open
            .iter()
            .enumerate()
            .filter_map(|(k, l)| l.split.as_ref().map(|(c, _)| (k, c.gain, l.node)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
        let Some((k, _, _)) = pick else { break };
        let leaf = open.swap_remove(k);
        let (cand, cats) = leaf.split.expect("picked leaf has a split");
        let feat = &binned.features[cand.feature];
        let rule = match (&feat.kind, cats) {
            (BinKind::Numeric(cuts), _) => SplitRule::Threshold(cuts[cand.bin]),
            (BinKind::Categorical, Some(set)) => SplitRule::Categories(set),
            (BinKind::Categorical, None) => unreachable!("categorical split without set"),
        };
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = leaf.rows.iter().partition(|&&r| {
            let b = feat.bins[r as usize];
            match &rule {
                SplitRule::Threshold(_) => (b as usize) <= cand.bin,
                SplitRule::Categories(set) => set.binary_search(&(b as u32)).is_ok(),
            }
        });
        let (l, r) = (nodes.len(), nodes.len() + 1);
        nodes[leaf.node] = Node::Split {
            feature: cand.feature,
            rule,
            left: l,
            right: r,
        };
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        node_rows.push(None);
        node_rows.push(None);
        n_leaves += 1;
        for (node, rows) in [(l, left_rows), (r, right_rows)] {
            let split = if n_leaves < cfg.max_leaves {
                best_split(binned, grad, weights, &rows, allowed, cfg, rng)
            } else {
                None
            };
            open.push(OpenLeaf { node, rows, split });
        }
    }
    for leaf in open {
        node_rows[leaf.node] = Some(leaf.rows);
    }
    for (i, rows) in node_rows.into_iter().enumerate() {
        if let Some(rows) = rows {
            let (g, w) = rows.iter().fold((0.0, 0.0), |(g, w), &r| {
                let wr = weights[r as usize];
                (g + wr * grad[r as usize], w + wr)
            });
            let value = if w + cfg.l2 > 0.0 { g / (w + cfg.l2) } else { 0.0 };
            nodes[i] = Node::Leaf { value };
        }
    }
    Tree { nodes }
}

fn best_split<R: Rng>(
    binned: &BinnedMatrix,
    grad: &[f64],
    weights: &[f64],
    rows: &[u32],
    allowed: &[usize],
    cfg: &GrowConfig,
    rng: &mut R,
) -> Option<(Candidate, Option<Vec<u32>>)> {
    let (g_total, w_total) = rows.iter().fold((0.0, 0.0), |(g, w), &r| {
        let wr = weights[r as usize];
        (g + wr * grad[r as usize], w + wr)
    });
    if w_total < 2.0 * cfg.min_weight_leaf {
        return None;
    }
    let parent = score(g_total, w_total, cfg.l2);
    let features: Vec<usize> = match cfg.per_split_fraction {
        Some(f) if f < 1.0 => {
            let k = ((allowed.len() as f64 * f).ceil() as usize).clamp(1, allowed.len());
            let mut picked: Vec<usize> = sample(rng, allowed.len(), k)
                .into_iter()
                .map(|i| allowed[i])
                .collect();
            picked.sort_unstable();
            picked
        }
        _ => allowed.to_vec(),
    };
    let mut best: Option<(Candidate, Option<Vec<u32>>)> = None;
    let mut hist_g: Vec<f64> = Vec::new();
    let mut hist_w: Vec<f64> = Vec::new();
    for &f in &features {
        let feat = &binned.features[f];
        if feat.n_bins < 2 {
            continue;
        }
        hist_g.clear();
        hist_g.resize(feat.n_bins, 0.0);
        hist_w.clear();
        hist_w.resize(feat.n_bins, 0.0);
        for &r in rows {
            let r = r as usize;
            let b = feat.bins[r] as usize;
            let w = weights[r];
            hist_g[b] += w * grad[r];
            hist_w[b] += w;
        }
        let better = |gain: f64, best: &Option<(Candidate, Option<Vec<u32>>)>| {
            gain > 1e-12 && best.as_ref().is_none_or(|(c, _)| gain > c.gain)
        };
        match feat.kind {
            BinKind::Numeric(_) => {
                let (mut gl, mut wl) = (0.0, 0.0);
                for b in 0..feat.n_bins - 1 {
                    gl += hist_g[b];
                    wl += hist_w[b];
                    let wr = w_total - wl;
                    if wl < cfg.min_weight_leaf {
                        continue;
                    }
                    if wr < cfg.min_weight_leaf {
                        break;
                    }
                    let gain = score(gl, wl, cfg.l2) + score(g_total - gl, wr, cfg.l2) - parent;
                    if better(gain, &best) {
                        best = Some((
                            Candidate {
                                gain,
                                feature: f,
                                bin: b,
                            },
                            None,
                        ));
                    }
                }
            }
            BinKind::Categorical => {
                // One category against the rest, as a one-hot column would
                // split; codes unseen in training fall on the rest side.
                for c in 0..feat.n_bins {
                    let (gl, wl) = (hist_g[c], hist_w[c]);
                    let wr = w_total - wl;
                    if wl < cfg.min_weight_leaf || wr < cfg.min_weight_leaf {
                        continue;
                    }
                    let gain = score(gl, wl, cfg.l2) + score(g_total - gl, wr, cfg.l2) - parent;
                    if better(gain, &best) {
                        best = Some((
                            Candidate {
                                gain,
                                feature: f,
                                bin: c,
                            },
                            Some(vec![c as u32]),
                        ));
                    }
                }
                if feat.n_bins <= 2 {
                    continue;
                }
                // Subsets: categories ordered by smoothed mean gradient, with
                // an extra penalty and a minimum weight per listed category.
                let l2 = cfg.l2 + CAT_L2;
                let mut cats: Vec<usize> = (0..feat.n_bins)
                    .filter(|&c| hist_w[c] > 0.0 && hist_w[c] >= cfg.min_category_weight)
                    .collect();
                cats.sort_by(|&a, &b| {
                    (hist_g[a] / (hist_w[a] + CAT_SMOOTH))
                        .total_cmp(&(hist_g[b] / (hist_w[b] + CAT_SMOOTH)))
                        .then(a.cmp(&b))
                });
                let parent_cat = score(g_total, w_total, l2);
                let (g_seen, w_seen) = cats.iter().fold((0.0, 0.0), |(g, w), &c| (g + hist_g[c], w + hist_w[c]));
                let (mut gp, mut wp) = (0.0, 0.0);
                for k in 0..cats.len().saturating_sub(1) {
                    gp += hist_g[cats[k]];
                    wp += hist_w[cats[k]];
                    let (gs, ws) = (g_seen - gp, w_seen - wp);
                    // Rare and unseen codes follow the heavier side, which is
                    // left unlisted.
                    let prefix_listed = wp <= ws;
                    let (gl, wl) = if prefix_listed { (gp, wp) } else { (gs, ws) };
                    let (gr, wr) = (g_total - gl, w_total - wl);
                    if k == 0 || wl < cfg.min_weight_leaf || wr < cfg.min_weight_leaf {
                        continue;
                    }
                    let gain = score(gl, wl, l2) + score(gr, wr, l2) - parent_cat;
                    if better(gain, &best) {
                        let listed = if prefix_listed { &cats[..=k] } else { &cats[k + 1..] };
                        let mut set: Vec<u32> = listed.iter().map(|&c| c as u32).collect();
                        set.sort_unstable();
                        best = Some((
                            Candidate {
                                gain,
                                feature: f,
                                bin: k,
                            },
                            Some(set),
                        ));
                    }
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cuts_separate_few_distinct_values() {
        let cuts = quantile_cuts(&[1.0, 1.0, 2.0, 4.0], 64);
        assert_eq!(cuts, vec![1.5, 3.0]);
    }

    #[test]
    fn equal_frequency_cut_count() {
        let values: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let cuts = quantile_cuts(&values, 10);
        assert_eq!(cuts.len(), 9);
        assert!(cuts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(cuts[0], 99.5);
    }

    #[test]
    fn constant_column_has_one_bin() {
        assert!(quantile_cuts(&[3.0; 20], 8).is_empty());
    }
}
