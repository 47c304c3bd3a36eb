//! CART with gini impurity, and random forests built from it.

use ndarray::{Array1, ArrayView2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Decrease in gini impurity, weighted by child proportions.
    pub gain: f64,
}

pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// `Σ c²/n` for both children as an exact fraction `(num, den)`; larger
/// means purer children.
fn purity(left: &[usize], nl: usize, right: &[usize], nr: usize) -> (u128, u128) {
    let sq = |c: &[usize]| c.iter().map(|&v| (v as u128) * (v as u128)).sum::<u128>();
    (sq(left) * nr as u128 + sq(right) * nl as u128, nl as u128 * nr as u128)
}

fn greater(a: (u128, u128), b: (u128, u128)) -> bool {
    a.0 * b.1 > b.0 * a.1
}

/// Midpoint that keeps `lo` on the left and `hi` on the right.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Best gini split of `rows` over `features`, `x[r, f] <= threshold` going
/// left. Ties go to the lowest feature index, then the lowest threshold.
/// `None` when no feature has two distinct values among `rows`.
pub fn cart_best_split(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    rows: &[usize],
    features: &[usize],
) -> Option<Split> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let mut total = vec![0usize; n_classes];
    for &r in rows {
        total[y[r]] += 1;
    }
    let mut feats = features.to_vec();
    feats.sort_unstable();
    let mut best: Option<((u128, u128), usize, f64)> = None;
    let mut order = rows.to_vec();
    let mut left = vec![0usize; n_classes];
    for &f in &feats {
        order.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]).then(a.cmp(&b)));
        left.fill(0);
        for k in 0..n - 1 {
            left[y[order[k]]] += 1;
            let (lo, hi) = (x[[order[k], f]], x[[order[k + 1], f]]);
            if lo == hi {
                continue;
            }
            let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
            let p = purity(&left, k + 1, &right, n - k - 1);
            if best.map_or(true, |(bp, _, _)| greater(p, bp)) {
                best = Some((p, f, midpoint(lo, hi)));
            }
        }
    }
    best.map(|(p, feature, threshold)| {
        let nf = n as f64;
        let child = (nf - p.0 as f64 / p.1 as f64) / nf;
        Split {
            feature,
            threshold,
            gain: gini(&total) - child,
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        /// Class fractions among the training rows that reached the leaf.
        proba: Vec<f64>,
    },
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Features considered per split; `None` means all.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_classes: usize,
}

impl DecisionTree {
    pub fn fit(
        x: ArrayView2<f64>,
        y: &[usize],
        n_classes: usize,
        rows: &[usize],
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut tree = DecisionTree {
            nodes: Vec::new(),
            n_classes,
        };
        let all: Vec<usize> = (0..x.ncols()).collect();
        tree.grow(x, y, rows.to_vec(), 0, params, &all, rng);
        tree
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        &mut self,
        x: ArrayView2<f64>,
        y: &[usize],
        rows: Vec<usize>,
        depth: usize,
        params: &TreeParams,
        all: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> usize {
        let mut counts = vec![0usize; self.n_classes];
        for &r in &rows {
            counts[y[r]] += 1;
        }
        let id = self.nodes.len();
        let n = rows.len() as f64;
        self.nodes.push(Node::Leaf {
            proba: counts.iter().map(|&c| c as f64 / n).collect(),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || params.max_depth.is_some_and(|d| depth >= d) {
            return id;
        }
        let split = match params.max_features {
            Some(m) if m < all.len() => {
                let feats: Vec<usize> = sample(rng, all.len(), m).into_iter().collect();
                cart_best_split(x, y, self.n_classes, &rows, &feats)
                    .or_else(|| cart_best_split(x, y, self.n_classes, &rows, all))
            }
            _ => cart_best_split(x, y, self.n_classes, &rows, all),
        };
        let Some(split) = split else { return id };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[[i, split.feature]] <= split.threshold);
        let left = self.grow(x, y, l, depth + 1, params, all, rng);
        let right = self.grow(x, y, r, depth + 1, params, all, rng);
        self.nodes[id] = Node::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    pub fn leaf_proba(&self, row: ndarray::ArrayView1<f64>) -> &[f64] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { proba } => return proba,
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<usize> {
        x.rows()
            .into_iter()
            .map(|r| super::argmax_first(self.leaf_proba(r).iter().copied()))
            .collect()
    }

    pub fn depth(&self) -> usize {
        fn d(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Internal { left, right, .. } => 1 + d(nodes, *left).max(d(nodes, *right)),
            }
        }
        d(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub tree: TreeParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
}

/// Tree `t` draws from stream `t` of the ChaCha generator keyed by `seed`,
/// so results do not depend on how trees are scheduled.
pub fn tree_rng(seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

impl RandomForest {
    pub fn fit(x: ArrayView2<f64>, y: &[usize], n_classes: usize, params: &ForestParams, seed: u64) -> Self {
        let n = x.nrows();
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = tree_rng(seed, t);
                let rows: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::fit(x, y, n_classes, &rows, &params.tree, &mut rng)
            })
            .collect();
        Self { trees, n_classes }
    }

    /// Mean of the per-tree leaf distributions.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> ndarray::Array2<f64> {
        let mut out = ndarray::Array2::zeros((x.nrows(), self.n_classes));
        for (r, row) in x.rows().into_iter().enumerate() {
            let mut acc = Array1::zeros(self.n_classes);
            for t in &self.trees {
                acc += &ndarray::ArrayView1::from(t.leaf_proba(row));
            }
            acc /= self.trees.len() as f64;
            out.row_mut(r).assign(&acc);
        }
        out
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<usize> {
        self.predict_proba(x)
            .rows()
            .into_iter()
            .map(|r| super::argmax_first(r.iter().copied()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    /// Exhaustive reference: every (feature, midpoint) pair, counts
    /// recomputed from scratch, float gains compared with a tolerance.
    fn brute_force(x: &Array2<f64>, y: &[usize], k: usize) -> Option<(usize, f64, f64)> {
        let n = x.nrows();
        let mut parent = vec![0; k];
        y.iter().for_each(|&c| parent[c] += 1);
        let mut best: Option<(usize, f64, f64)> = None;
        for f in 0..x.ncols() {
            let mut vals: Vec<f64> = x.column(f).to_vec();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let (mut l, mut r) = (vec![0; k], vec![0; k]);
                for i in 0..n {
                    if x[[i, f]] <= t {
                        l[y[i]] += 1
                    } else {
                        r[y[i]] += 1
                    }
                }
                let nl: usize = l.iter().sum();
                let nr: usize = r.iter().sum();
                let g = gini(&parent) - (nl as f64 * gini(&l) + nr as f64 * gini(&r)) / n as f64;
                if best.map_or(true, |(_, _, bg)| g > bg + 1e-12) {
                    best = Some((f, t, g));
                }
            }
        }
        best
    }

    #[test]
    fn pure_split_on_feature_zero() {
        let x = array![[0.0, 5.0], [0.2, 1.0], [0.8, 5.0], [1.0, 1.0]];
        let y = [0, 0, 1, 1];
        let s = cart_best_split(x.view(), &y, 2, &[0, 1, 2, 3], &[0, 1]).unwrap();
        assert_eq!(s.feature, 0);
        assert!((s.threshold - 0.5).abs() < 1e-12);
        assert!((s.gain - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_features_do_not_split() {
        let x = Array2::from_elem((5, 3), 2.0);
        assert_eq!(cart_best_split(x.view(), &[0, 1, 0, 1, 1], 2, &[0, 1, 2, 3, 4], &[0, 1, 2]), None);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for case in 0..50 {
            let k = rng.gen_range(2..4);
            // coarse values force duplicate thresholds and gain ties
            let x = Array2::from_shape_simple_fn((20, 3), || rng.gen_range(0..6) as f64 * 0.5);
            let y: Vec<usize> = (0..20).map(|_| rng.gen_range(0..k)).collect();
            let rows: Vec<usize> = (0..20).collect();
            let got = cart_best_split(x.view(), &y, k, &rows, &[0, 1, 2]);
            let want = brute_force(&x, &y, k);
            match (got, want) {
                (Some(g), Some((f, t, gain))) => {
                    assert_eq!(g.feature, f, "case {case}");
                    assert!((g.threshold - t).abs() < 1e-12, "case {case}");
                    assert!((g.gain - gain).abs() < 1e-12, "case {case}");
                }
                (None, None) => {}
                other => panic!("case {case}: {other:?}"),
            }
        }
    }

    #[test]
    fn unrestricted_tree_fits_training_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_simple_fn((60, 4), || rng.gen::<f64>());
        let y: Vec<usize> = (0..60).map(|_| rng.gen_range(0..3)).collect();
        let rows: Vec<usize> = (0..60).collect();
        let params = TreeParams {
            max_depth: None,
            max_features: None,
        };
        let t = DecisionTree::fit(x.view(), &y, 3, &rows, &params, &mut rng);
        assert_eq!(t.predict(x.view()), y);
    }

    #[test]
    fn single_tree_forest_equals_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_simple_fn((40, 3), || rng.gen::<f64>());
        let y: Vec<usize> = (0..40).map(|i| usize::from(x[[i, 0]] + x[[i, 2]] > 1.0)).collect();
        let tp = TreeParams {
            max_depth: None,
            max_features: None,
        };
        let forest = RandomForest::fit(
            x.view(),
            &y,
            2,
            &ForestParams {
                n_trees: 1,
                bootstrap: false,
                tree: tp,
            },
            5,
        );
        let rows: Vec<usize> = (0..40).collect();
        let tree = DecisionTree::fit(x.view(), &y, 2, &rows, &tp, &mut tree_rng(5, 0));
        assert_eq!(forest.trees[0], tree);
        let probe = Array2::from_shape_simple_fn((30, 3), || rng.gen::<f64>());
        assert_eq!(forest.predict(probe.view()), tree.predict(probe.view()));
    }
}
