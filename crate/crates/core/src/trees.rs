//! Newton regression trees fitted to per-row gradient/hessian pairs.
//!
//! Every learner in [`crate::boost`] reduces to one of four growth
//! procedures here, all scoring candidates with the same second-order gain
//! and producing leaves `-G / (H + lambda)`:
//!
//! * [`fit_tree_exact`]: every midpoint between consecutive distinct values
//!   of a node is a candidate.
//! * [`fit_tree_hist`]: candidates are restricted to the edges of
//!   [`HistogramBins`] computed once from the training data. With one bin per
//!   distinct value it reproduces the exact tree, bit for bit.
//! * [`fit_tree_oblivious`]: one (feature, threshold) test per depth level,
//!   shared by every node of that level.
//! * [`fit_tree_extra`]: a few random (feature, uniform threshold) candidates
//!   per node.
//!
//! Growth is depth-wise. A node splits only when its best candidate has
//! positive gain and both children carry at least `min_child_weight` hessian.
//! Rows go left when `x < threshold`; ties between candidates of equal gain
//! go to the lower feature index, then the lower threshold.
//!
//! Training rows must not contain missing values. At prediction time a
//! missing value follows the node's `missing_left` flag.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// Second-order gain of splitting a node with gradient/hessian sums
/// `(gl + gr, hl + hr)` into the given halves.
pub fn newton_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64) -> f64 {
    0.5 * (score_term(gl, hl, lambda) + score_term(gr, hr, lambda) - score_term(gl + gr, hl + hr, lambda))
}

#[inline]
fn score_term(g: f64, h: f64, lambda: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        g * g / d
    } else {
        0.0
    }
}

pub fn leaf_value(g: f64, h: f64, lambda: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        -g / d
    } else {
        0.0
    }
}

#[inline]
fn midpoint(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    if m > a && m <= b {
        m
    } else {
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        #[serde(default = "default_true")]
        missing_left: bool,
    },
    Leaf {
        value: f64,
    },
}

fn default_true() -> bool {
    true
}

/// A binary tree stored as a node arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(value: f64) -> Self {
        DecisionTree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.nodes[0], Node::Leaf { .. })
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Number of internal nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// The distinct features tested anywhere in the tree, ascending.
    pub fn features_used(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    missing_left,
                } => {
                    let v = row[feature];
                    let go_left = if v.is_nan() { missing_left } else { v < threshold };
                    i = if go_left { left } else { right };
                }
            }
        }
    }
}

pub fn predict_tree(tree: &DecisionTree, row: &[f64]) -> f64 {
    tree.predict(row)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub lambda: f64,
    /// Fraction of features drawn once per tree.
    pub colsample: f64,
    /// When set, each node draws this many features from the tree's set.
    pub features_per_node: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 5,
            min_child_weight: 1.0,
            lambda: 1.0,
            colsample: 1.0,
            features_per_node: None,
        }
    }
}

/// Gradient statistics for a subset of training rows.
#[derive(Debug, Clone, Copy)]
pub struct TreeInput<'a> {
    pub x: &'a Matrix,
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    /// Rows taking part in the fit, ascending and without duplicates.
    pub rows: &'a [usize],
}

/// Row order of every column sorted by `(value, row index)`, computed once
/// per training matrix and reused by every tree fitted on it.
#[derive(Debug, Clone)]
pub struct Presorted {
    order: Vec<Vec<u32>>,
    values: Vec<Vec<f64>>,
}

fn column_values(x: &Matrix) -> Vec<Vec<f64>> {
    (0..x.n_cols()).map(|f| x.column(f)).collect()
}

impl Presorted {
    pub fn new(x: &Matrix) -> Self {
        let values = column_values(x);
        let order = values
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..x.n_rows() as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Presorted { order, values }
    }

    pub fn column(&self, f: usize) -> &[u32] {
        &self.order[f]
    }

    /// Column `f` in row order.
    pub fn values(&self, f: usize) -> &[f64] {
        &self.values[f]
    }
}

fn colsample_features<R: Rng>(n_features: usize, fraction: f64, rng: &mut R) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..n_features).collect();
    }
    let k = ((fraction * n_features as f64).round() as usize).clamp(1, n_features.max(1));
    sample_sorted(n_features, k, rng)
}

fn sample_sorted<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut v = index::sample(rng, n, k).into_vec();
    v.sort_unstable();
    v
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn better(new: &Candidate, best: &Option<Candidate>) -> bool {
    match best {
        None => true,
        Some(b) => new.gain > b.gain || (new.gain == b.gain && (new.feature, new.threshold) < (b.feature, b.threshold)),
    }
}

/// Bin boundaries per feature. Each bin covers a run of consecutive
/// distinct training values; `edges[b]` separates bin `b` from `b + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBins {
    pub edges: Vec<Vec<f64>>,
    pub bin_min: Vec<Vec<f64>>,
    pub bin_max: Vec<Vec<f64>>,
}

pub const MAX_BINS: usize = 255;

impl HistogramBins {
    /// Quantile bins of the training values, at most `max_bins` per feature.
    /// Features with at most `max_bins` distinct values get one bin per value.
    pub fn fit(x: &Matrix, max_bins: usize) -> Self {
        let max_bins = max_bins.clamp(1, MAX_BINS);
        let mut edges = Vec::with_capacity(x.n_cols());
        let mut bin_min = Vec::with_capacity(x.n_cols());
        let mut bin_max = Vec::with_capacity(x.n_cols());
        for f in 0..x.n_cols() {
            let mut values: Vec<f64> = x.column(f).into_iter().filter(|v| !v.is_nan()).collect();
            values.sort_by(f64::total_cmp);
            let mut distinct: Vec<(f64, usize)> = Vec::new();
            for v in values.iter().copied() {
                match distinct.last_mut() {
                    Some((d, c)) if *d == v => *c += 1,
                    _ => distinct.push((v, 1)),
                }
            }
            // groups[b] = index range into `distinct`
            let mut groups: Vec<(usize, usize)> = Vec::new();
            if distinct.len() <= max_bins {
                groups.extend((0..distinct.len()).map(|i| (i, i)));
            } else {
                let n = values.len();
                let mut start = 0;
                let mut seen = 0;
                for (i, &(_, c)) in distinct.iter().enumerate() {
                    seen += c;
                    let reached_quantile = seen * max_bins >= (groups.len() + 1) * n;
                    if reached_quantile && groups.len() + 1 < max_bins && i + 1 < distinct.len() {
                        groups.push((start, i));
                        start = i + 1;
                    }
                }
                groups.push((start, distinct.len() - 1));
            }
            let lo: Vec<f64> = groups.iter().map(|&(a, _)| distinct[a].0).collect();
            let hi: Vec<f64> = groups.iter().map(|&(_, b)| distinct[b].0).collect();
            let e: Vec<f64> = (1..groups.len()).map(|b| midpoint(hi[b - 1], lo[b])).collect();
            edges.push(e);
            bin_min.push(lo);
            bin_max.push(hi);
        }
        HistogramBins {
            edges,
            bin_min,
            bin_max,
        }
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.edges[feature].len() + 1
    }

    pub fn bin(&self, feature: usize, v: f64) -> u8 {
        self.edges[feature].partition_point(|&e| e <= v) as u8
    }

    pub fn bin_matrix(&self, x: &Matrix) -> BinnedMatrix {
        let mut data = vec![0u8; x.n_rows() * x.n_cols()];
        for f in 0..x.n_cols() {
            for i in 0..x.n_rows() {
                data[f * x.n_rows() + i] = self.bin(f, x.get(i, f));
            }
        }
        BinnedMatrix {
            n_rows: x.n_rows(),
            n_cols: x.n_cols(),
            data,
        }
    }
}

/// Column-major bin indices.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<u8>,
}

impl BinnedMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.data[col * self.n_rows + row]
    }

    fn column(&self, col: usize) -> &[u8] {
        &self.data[col * self.n_rows..(col + 1) * self.n_rows]
    }
}

#[derive(Clone, Copy)]
enum Search<'a> {
    Exact {
        cols: &'a [Vec<f64>],
    },
    Hist {
        binned: &'a BinnedMatrix,
        bins: &'a HistogramBins,
    },
}

struct NodeWork {
    rows: Vec<u32>,
    /// Per tree feature, the node's rows sorted by `(value, row)`.
    sorted: Option<Vec<Vec<u32>>>,
}

struct Grower<'a, R> {
    search: Search<'a>,
    grad: &'a [f64],
    hess: &'a [f64],
    params: TreeParams,
    tree_features: Vec<usize>,
    rng: &'a mut R,
    nodes: Vec<Node>,
    go_left: Vec<bool>,
    hist: Vec<(f64, f64, u32)>,
}

impl<'a, R: Rng> Grower<'a, R> {
    fn totals(&self, rows: &[u32]) -> (f64, f64) {
        let mut g = 0.0;
        let mut h = 0.0;
        for &r in rows {
            g += self.grad[r as usize];
            h += self.hess[r as usize];
        }
        (g, h)
    }

    fn grow(&mut self, work: NodeWork, depth: usize) -> usize {
        let id = self.nodes.len();
        let (g, h) = self.totals(&work.rows);
        self.nodes.push(Node::Leaf {
            value: leaf_value(g, h, self.params.lambda),
        });
        if depth >= self.params.max_depth || work.rows.len() < 2 {
            return id;
        }

        // positions into tree_features
        let candidates: Vec<usize> = match self.params.features_per_node {
            Some(k) => sample_sorted(self.tree_features.len(), k.max(1), &mut *self.rng),
            None => (0..self.tree_features.len()).collect(),
        };

        let mut best: Option<Candidate> = None;
        for &pos in &candidates {
            let feature = self.tree_features[pos];
            let found = match self.search {
                Search::Exact { cols } => {
                    let col = &cols[feature];
                    let local;
                    let order: &[u32] = match &work.sorted {
                        Some(lists) => &lists[pos],
                        None => {
                            let mut v = work.rows.clone();
                            v.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                            local = v;
                            &local
                        }
                    };
                    self.best_exact(col, feature, order, g, h)
                }
                Search::Hist { binned, bins } => self.best_hist(binned, bins, feature, &work.rows, g, h),
            };
            if let Some(c) = found {
                if better(&c, &best) {
                    best = Some(c);
                }
            }
        }

        let Some(best) = best.filter(|c| c.gain > 0.0) else {
            return id;
        };

        let search = self.search;
        let x_value = |r: u32| -> f64 {
            match search {
                Search::Exact { cols } => cols[best.feature][r as usize],
                Search::Hist { binned, bins } => {
                    // binned rows are routed by bin; use a representative value
                    bins.bin_min[best.feature][binned.get(r as usize, best.feature) as usize]
                }
            }
        };
        let mut left_rows = Vec::new();
        let mut right_rows = Vec::new();
        for &r in &work.rows {
            let left = x_value(r) < best.threshold;
            self.go_left[r as usize] = left;
            if left {
                left_rows.push(r);
            } else {
                right_rows.push(r);
            }
        }
        let (left_sorted, right_sorted) = match work.sorted {
            Some(lists) => {
                let mut ls = Vec::with_capacity(lists.len());
                let mut rs = Vec::with_capacity(lists.len());
                for list in lists {
                    let mut l = Vec::with_capacity(left_rows.len());
                    let mut r = Vec::with_capacity(right_rows.len());
                    for row in list {
                        if self.go_left[row as usize] {
                            l.push(row);
                        } else {
                            r.push(row);
                        }
                    }
                    ls.push(l);
                    rs.push(r);
                }
                (Some(ls), Some(rs))
            }
            None => (None, None),
        };

        let left = self.grow(
            NodeWork {
                rows: left_rows,
                sorted: left_sorted,
            },
            depth + 1,
        );
        let right = self.grow(
            NodeWork {
                rows: right_rows,
                sorted: right_sorted,
            },
            depth + 1,
        );
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            missing_left: true,
        };
        id
    }

    fn best_exact(&self, col: &[f64], feature: usize, order: &[u32], g: f64, h: f64) -> Option<Candidate> {
        let mcw = self.params.min_child_weight;
        let lambda = self.params.lambda;
        let mut best: Option<Candidate> = None;
        let mut gl = 0.0;
        let mut hl = 0.0;
        let mut i = 0;
        while i < order.len() {
            let v = col[order[i] as usize];
            let mut gg = 0.0;
            let mut hh = 0.0;
            while i < order.len() && col[order[i] as usize] == v {
                gg += self.grad[order[i] as usize];
                hh += self.hess[order[i] as usize];
                i += 1;
            }
            gl += gg;
            hl += hh;
            if i == order.len() {
                break;
            }
            let next = col[order[i] as usize];
            let hr = h - hl;
            if hl >= mcw && hr >= mcw {
                let c = Candidate {
                    feature,
                    threshold: midpoint(v, next),
                    gain: newton_gain(gl, hl, g - gl, hr, lambda),
                };
                if better(&c, &best) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn best_hist(
        &mut self,
        binned: &BinnedMatrix,
        bins: &HistogramBins,
        feature: usize,
        rows: &[u32],
        g: f64,
        h: f64,
    ) -> Option<Candidate> {
        let n_bins = bins.n_bins(feature);
        self.hist.clear();
        self.hist.resize(n_bins, (0.0, 0.0, 0));
        let col = binned.column(feature);
        let mut lo = usize::MAX;
        let mut hi = 0;
        for &r in rows {
            let b = col[r as usize] as usize;
            let slot = &mut self.hist[b];
            slot.0 += self.grad[r as usize];
            slot.1 += self.hess[r as usize];
            slot.2 += 1;
            lo = lo.min(b);
            hi = hi.max(b);
        }
        if lo >= hi {
            return None;
        }
        let mcw = self.params.min_child_weight;
        let lambda = self.params.lambda;
        let mut best: Option<Candidate> = None;
        let mut gl = 0.0;
        let mut hl = 0.0;
        let mut prev: Option<usize> = None;
        for b in lo..=hi {
            let (gg, hh, count) = self.hist[b];
            if count == 0 {
                continue;
            }
            if let Some(p) = prev {
                let hr = h - hl;
                if hl >= mcw && hr >= mcw {
                    let c = Candidate {
                        feature,
                        threshold: midpoint(bins.bin_max[feature][p], bins.bin_min[feature][b]),
                        gain: newton_gain(gl, hl, g - gl, hr, lambda),
                    };
                    if better(&c, &best) {
                        best = Some(c);
                    }
                }
            }
            gl += gg;
            hl += hh;
            prev = Some(b);
        }
        best
    }
}

fn all_rows(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Exact greedy tree on every row of `x`.
pub fn fit_tree_exact<R: Rng>(
    x: &Matrix,
    grad: &[f64],
    hess: &[f64],
    params: &TreeParams,
    rng: &mut R,
) -> DecisionTree {
    let rows = all_rows(x.n_rows());
    let presorted = Presorted::new(x);
    fit_tree_exact_on(
        &TreeInput {
            x,
            grad,
            hess,
            rows: &rows,
        },
        Some(&presorted),
        params,
        rng,
    )
}

/// Exact greedy tree on `input.rows`. With `presorted` (built on the same
/// matrix) and no per-node feature sampling, nodes partition presorted
/// column orders instead of sorting.
pub fn fit_tree_exact_on<R: Rng>(
    input: &TreeInput<'_>,
    presorted: Option<&Presorted>,
    params: &TreeParams,
    rng: &mut R,
) -> DecisionTree {
    let x = input.x;
    let tree_features = colsample_features(x.n_cols(), params.colsample, rng);
    let rows: Vec<u32> = input.rows.iter().map(|&r| r as u32).collect();
    let owned;
    let cols: &[Vec<f64>] = match presorted {
        Some(p) => &p.values,
        None => {
            owned = column_values(x);
            &owned
        }
    };
    let presorted = presorted.filter(|_| params.features_per_node.is_none());
    let sorted = presorted.map(|p| {
        let mut member = vec![false; x.n_rows()];
        for &r in input.rows {
            member[r] = true;
        }
        tree_features
            .iter()
            .map(|&f| p.column(f).iter().copied().filter(|&r| member[r as usize]).collect())
            .collect()
    });
    let mut grower = Grower {
        search: Search::Exact { cols },
        grad: input.grad,
        hess: input.hess,
        params: *params,
        tree_features,
        rng,
        nodes: Vec::new(),
        go_left: vec![false; x.n_rows()],
        hist: Vec::new(),
    };
    grower.grow(NodeWork { rows, sorted }, 0);
    DecisionTree { nodes: grower.nodes }
}

/// Histogram tree on every row of the binned matrix.
pub fn fit_tree_hist<R: Rng>(
    binned: &BinnedMatrix,
    grad: &[f64],
    hess: &[f64],
    bins: &HistogramBins,
    params: &TreeParams,
    rng: &mut R,
) -> DecisionTree {
    let rows = all_rows(binned.n_rows());
    fit_tree_hist_on(binned, grad, hess, &rows, bins, params, rng)
}

pub fn fit_tree_hist_on<R: Rng>(
    binned: &BinnedMatrix,
    grad: &[f64],
    hess: &[f64],
    rows: &[usize],
    bins: &HistogramBins,
    params: &TreeParams,
    rng: &mut R,
) -> DecisionTree {
    let tree_features = colsample_features(binned.n_cols(), params.colsample, rng);
    let mut grower = Grower {
        search: Search::Hist { binned, bins },
        grad,
        hess,
        params: *params,
        tree_features,
        rng,
        nodes: Vec::new(),
        go_left: vec![false; binned.n_rows()],
        hist: Vec::new(),
    };
    grower.grow(
        NodeWork {
            rows: rows.iter().map(|&r| r as u32).collect(),
            sorted: None,
        },
        0,
    );
    DecisionTree { nodes: grower.nodes }
}

/// Symmetric tree on every row of `x`.
pub fn fit_tree_oblivious<R: Rng>(
    x: &Matrix,
    grad: &[f64],
    hess: &[f64],
    params: &TreeParams,
    rng: &mut R,
) -> DecisionTree {
    let rows = all_rows(x.n_rows());
    let presorted = Presorted::new(x);
    fit_tree_oblivious_on(
        &TreeInput {
            x,
            grad,
            hess,
            rows: &rows,
        },
        &presorted,
        params,
        rng,
    )
}

/// Grows one level at a time. Each level picks the single test that
/// maximizes the summed gain over all current leaves; a leaf whose halves
/// would violate `min_child_weight` contributes no gain but is still split.
pub fn fit_tree_oblivious_on<R: Rng>(
    input: &TreeInput<'_>,
    presorted: &Presorted,
    params: &TreeParams,
    rng: &mut R,
) -> DecisionTree {
    let x = input.x;
    let tree_features = colsample_features(x.n_cols(), params.colsample, rng);
    let lambda = params.lambda;
    let mcw = params.min_child_weight;

    const INACTIVE: u32 = u32::MAX;
    let mut leaf_of = vec![INACTIVE; x.n_rows()];
    for &r in input.rows {
        leaf_of[r] = 0;
    }
    let mut levels: Vec<(usize, f64)> = Vec::new();

    let leaf_totals = |leaf_of: &[u32], n_leaves: usize| {
        let mut g = vec![0.0; n_leaves];
        let mut h = vec![0.0; n_leaves];
        for &r in input.rows {
            let l = leaf_of[r] as usize;
            g[l] += input.grad[r];
            h[l] += input.hess[r];
        }
        (g, h)
    };

    let leaf_gain = |gl: f64, hl: f64, g: f64, h: f64| -> f64 {
        let hr = h - hl;
        if hl >= mcw && hr >= mcw {
            newton_gain(gl, hl, g - gl, hr, lambda)
        } else {
            0.0
        }
    };

    while levels.len() < params.max_depth {
        let n_leaves = 1usize << levels.len();
        let (tot_g, tot_h) = leaf_totals(&leaf_of, n_leaves);
        let mut best: Option<Candidate> = None;
        let mut gl = vec![0.0; n_leaves];
        let mut hl = vec![0.0; n_leaves];
        let mut gains = vec![0.0; n_leaves];
        let mut gg = vec![0.0; n_leaves];
        let mut hh = vec![0.0; n_leaves];
        let mut touched: Vec<usize> = Vec::new();
        let mut is_touched = vec![false; n_leaves];

        for &feature in &tree_features {
            gl.iter_mut().for_each(|v| *v = 0.0);
            hl.iter_mut().for_each(|v| *v = 0.0);
            gains.iter_mut().for_each(|v| *v = 0.0);
            let mut total = 0.0;
            let order: Vec<u32> = presorted
                .column(feature)
                .iter()
                .copied()
                .filter(|&r| leaf_of[r as usize] != INACTIVE)
                .collect();
            let col = presorted.values(feature);
            let mut i = 0;
            while i < order.len() {
                let v = col[order[i] as usize];
                touched.clear();
                while i < order.len() && col[order[i] as usize] == v {
                    let r = order[i] as usize;
                    let l = leaf_of[r] as usize;
                    if !is_touched[l] {
                        is_touched[l] = true;
                        touched.push(l);
                    }
                    gg[l] += input.grad[r];
                    hh[l] += input.hess[r];
                    i += 1;
                }
                for &l in &touched {
                    is_touched[l] = false;
                    gl[l] += gg[l];
                    hl[l] += hh[l];
                    gg[l] = 0.0;
                    hh[l] = 0.0;
                    let new_gain = leaf_gain(gl[l], hl[l], tot_g[l], tot_h[l]);
                    total += new_gain - gains[l];
                    gains[l] = new_gain;
                }
                if n_leaves == 1 {
                    total = gains[0];
                }
                if i == order.len() {
                    break;
                }
                let next = col[order[i] as usize];
                let c = Candidate {
                    feature,
                    threshold: midpoint(v, next),
                    gain: total,
                };
                if better(&c, &best) {
                    best = Some(c);
                }
            }
        }

        let Some(best) = best.filter(|c| c.gain > 0.0) else {
            break;
        };
        for &r in input.rows {
            let right = x.get(r, best.feature) >= best.threshold;
            leaf_of[r] = 2 * leaf_of[r] + u32::from(right);
        }
        levels.push((best.feature, best.threshold));
    }

    let (g, h) = leaf_totals(&leaf_of, 1 << levels.len());
    let leaves: Vec<f64> = g.iter().zip(&h).map(|(&g, &h)| leaf_value(g, h, lambda)).collect();
    symmetric_tree(&levels, &leaves)
}

/// Expands per-level tests into an explicit node arena. Leaf `k` is reached
/// by the outcomes encoded in the bits of `k`, first level most significant.
fn symmetric_tree(levels: &[(usize, f64)], leaves: &[f64]) -> DecisionTree {
    fn build(levels: &[(usize, f64)], leaves: &[f64], depth: usize, prefix: usize, nodes: &mut Vec<Node>) -> usize {
        let id = nodes.len();
        if depth == levels.len() {
            nodes.push(Node::Leaf { value: leaves[prefix] });
            return id;
        }
        nodes.push(Node::Leaf { value: 0.0 });
        let left = build(levels, leaves, depth + 1, prefix * 2, nodes);
        let right = build(levels, leaves, depth + 1, prefix * 2 + 1, nodes);
        let (feature, threshold) = levels[depth];
        nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
            missing_left: true,
        };
        id
    }
    let mut nodes = Vec::new();
    build(levels, leaves, 0, 0, &mut nodes);
    DecisionTree { nodes }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtraTreeParams {
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub lambda: f64,
    /// Number of non-constant random features tried per node.
    pub candidates_per_node: usize,
}

/// Extremely randomized tree: each node tries `candidates_per_node` random
/// non-constant features, each with one threshold drawn uniformly from the
/// node's observed range, and keeps the best.
pub fn fit_tree_extra<R: Rng>(input: &TreeInput<'_>, params: &ExtraTreeParams, rng: &mut R) -> DecisionTree {
    fn grow<R: Rng>(
        input: &TreeInput<'_>,
        params: &ExtraTreeParams,
        rows: Vec<usize>,
        depth: usize,
        rng: &mut R,
        nodes: &mut Vec<Node>,
    ) -> usize {
        let id = nodes.len();
        let g: f64 = rows.iter().map(|&r| input.grad[r]).sum();
        let h: f64 = rows.iter().map(|&r| input.hess[r]).sum();
        nodes.push(Node::Leaf {
            value: leaf_value(g, h, params.lambda),
        });
        if depth >= params.max_depth || rows.len() < 2 {
            return id;
        }
        let x = input.x;
        let mut features: Vec<usize> = (0..x.n_cols()).collect();
        let mut best: Option<Candidate> = None;
        let mut tried = 0;
        let mut remaining = features.len();
        while remaining > 0 && tried < params.candidates_per_node {
            let pick = rng.random_range(0..remaining);
            let feature = features[pick];
            features.swap(pick, remaining - 1);
            remaining -= 1;

            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &r in &rows {
                let v = x.get(r, feature);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !(hi > lo) {
                continue;
            }
            tried += 1;
            let threshold = rng.random_range(lo..hi);
            let (mut gl, mut hl) = (0.0, 0.0);
            for &r in &rows {
                if x.get(r, feature) < threshold {
                    gl += input.grad[r];
                    hl += input.hess[r];
                }
            }
            let hr = h - hl;
            if hl < params.min_child_weight || hr < params.min_child_weight {
                continue;
            }
            let c = Candidate {
                feature,
                threshold,
                gain: newton_gain(gl, hl, g - gl, hr, params.lambda),
            };
            if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                best = Some(c);
            }
        }
        let Some(best) = best.filter(|c| c.gain > 0.0) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| x.get(r, best.feature) < best.threshold);
        let left = grow(input, params, left_rows, depth + 1, rng, nodes);
        let right = grow(input, params, right_rows, depth + 1, rng, nodes);
        nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            missing_left: true,
        };
        id
    }
    let mut nodes = Vec::new();
    grow(input, params, input.rows.to_vec(), 0, rng, &mut nodes);
    DecisionTree { nodes }
}
