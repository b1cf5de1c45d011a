//! The learner zoo: boosted and bagged Newton-tree ensembles plus the
//! linear SVM, behind one [`TrainedModel`] type.
//!
//! | kind         | objective        | trees                   |
//! |--------------|------------------|-------------------------|
//! | `xgb_binary` | logistic         | exact                   |
//! | `xgb_rank`   | pairwise         | exact                   |
//! | `lgb_gbdt`   | logistic         | histogram               |
//! | `lgb_rf`     | class mean, bagged | histogram, √d per node |
//! | `cat`        | logistic         | oblivious               |
//! | `sk_gbt`     | logistic         | exact                   |
//! | `sk_rf`      | class mean, bagged | exact, √d per node    |
//! | `sk_et`      | class mean       | extra trees             |
//! | `svc`        | hinge            | (linear, see [`crate::linsvm`]) |

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{FeatureMatrix, Imputer};
use crate::error::{Error, Result};
use crate::featex::is_missing;
use crate::linsvm::{self, SvmModel, SvmParams};
use crate::matrix::Matrix;
use crate::trajdata::Label;
use crate::trees::{self, DecisionTree, ExtraTreeParams, HistogramBins, Presorted, TreeInput, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    XgbBinary,
    XgbRank,
    LgbGbdt,
    LgbRf,
    Cat,
    SkGbt,
    SkRf,
    SkEt,
    Svc,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 9] = [
        LearnerKind::XgbRank,
        LearnerKind::XgbBinary,
        LearnerKind::LgbGbdt,
        LearnerKind::LgbRf,
        LearnerKind::Cat,
        LearnerKind::SkGbt,
        LearnerKind::SkRf,
        LearnerKind::SkEt,
        LearnerKind::Svc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::XgbBinary => "xgb_binary",
            LearnerKind::XgbRank => "xgb_rank",
            LearnerKind::LgbGbdt => "lgb_gbdt",
            LearnerKind::LgbRf => "lgb_rf",
            LearnerKind::Cat => "cat",
            LearnerKind::SkGbt => "sk_gbt",
            LearnerKind::SkRf => "sk_rf",
            LearnerKind::SkEt => "sk_et",
            LearnerKind::Svc => "svc",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        LearnerKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeBackend {
    Exact,
    Histogram,
    Oblivious,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub min_child_weight: f64,
    /// Row fraction sampled without replacement each round.
    pub subsample: f64,
    /// Feature fraction sampled once per tree.
    pub colsample: f64,
    pub seed: u64,
    pub max_bins: usize,
    /// Pairwise objective only: at most `pair_cap_factor * n` pairs per round.
    pub pair_cap_factor: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_rounds: 300,
            learning_rate: 0.05,
            max_depth: 5,
            lambda: 1.0,
            min_child_weight: 1.0,
            subsample: 0.8,
            colsample: 0.8,
            seed: 0,
            max_bins: trees::MAX_BINS,
            pair_cap_factor: 100,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if !frac(self.learning_rate) {
            return Err(Error::Config("learning_rate must lie in (0, 1]".into()));
        }
        if !frac(self.subsample) || !frac(self.colsample) {
            return Err(Error::Config("subsample and colsample must lie in (0, 1]".into()));
        }
        if self.n_rounds == 0 {
            return Err(Error::Config("n_rounds must be at least 1".into()));
        }
        if !(self.lambda >= 0.0) || !(self.min_child_weight >= 0.0) {
            return Err(Error::Config("lambda and min_child_weight must be >= 0".into()));
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_child_weight: self.min_child_weight,
            lambda: self.lambda,
            colsample: self.colsample,
            features_per_node: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestKind {
    /// Bootstrap rows, √d candidate features per node, exact splits.
    RandomForest,
    /// Same policy on histogram bins.
    HistRandomForest,
    /// No bootstrap, random (feature, threshold) candidates.
    ExtraTrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_child_weight: f64,
    /// Candidate features per node; `None` means `round(sqrt(d))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
    pub max_bins: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 500,
            max_depth: 10,
            min_child_weight: 1.0,
            max_features: None,
            bootstrap: true,
            seed: 0,
            max_bins: trees::MAX_BINS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Logistic,
    Pairwise,
}

/// Additive tree model. Its margin is `base_score + learning_rate * Σ tree(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Booster {
    pub objective: Objective,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<DecisionTree>,
}

impl Booster {
    pub fn margin(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        self.base_score + self.learning_rate * sum
    }

    /// Probability for the logistic objective, raw margin for pairwise.
    pub fn score(&self, row: &[f64]) -> f64 {
        match self.objective {
            Objective::Logistic => sigmoid(self.margin(row)),
            Objective::Pairwise => self.margin(row),
        }
    }
}

/// Averaged class-mean trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
}

impl Forest {
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut outs: Vec<f64> = self.trees.iter().map(|t| t.predict(row)).collect();
        // summing in sorted order makes the mean independent of tree order
        outs.sort_by(f64::total_cmp);
        outs.iter().sum::<f64>() / outs.len().max(1) as f64
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn targets(y: &[Label]) -> Vec<f64> {
    y.iter().map(|l| f64::from(l.as_u8())).collect()
}

pub const BASE_RATE_CLAMP: f64 = 1e-6;

/// Log-odds of the clamped positive rate.
pub fn logistic_base_score(y: &[Label]) -> f64 {
    let p = targets(y).iter().sum::<f64>() / y.len() as f64;
    let p = p.clamp(BASE_RATE_CLAMP, 1.0 - BASE_RATE_CLAMP);
    (p / (1.0 - p)).ln()
}

/// Mean binary log loss of margins.
pub fn logistic_loss(margins: &[f64], y: &[Label]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(y)
        .map(|(&f, l)| if l.is_positive() { softplus(-f) } else { softplus(f) })
        .sum();
    total / margins.len() as f64
}

/// Per-row derivatives of the (summed) log loss with respect to the margin.
pub fn logistic_grad_hess(margins: &[f64], y: &[Label]) -> (Vec<f64>, Vec<f64>) {
    margins
        .iter()
        .zip(y)
        .map(|(&f, l)| {
            let p = sigmoid(f);
            (p - f64::from(l.as_u8()), p * (1.0 - p))
        })
        .unzip()
}

/// `Σ log(1 + exp(-(s_i - s_j)))` over `(positive i, negative j)` pairs.
pub fn pairwise_loss(scores: &[f64], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(i, j)| softplus(scores[j] - scores[i])).sum()
}

/// Per-instance gradient and hessian of [`pairwise_loss`], each pair
/// contributing `∓σ(s_j - s_i)` to its two members.
pub fn pairwise_grad_hess(scores: &[f64], pairs: &[(usize, usize)]) -> (Vec<f64>, Vec<f64>) {
    let mut g = vec![0.0; scores.len()];
    let mut h = vec![0.0; scores.len()];
    for &(i, j) in pairs {
        let rho = sigmoid(scores[j] - scores[i]);
        g[i] -= rho;
        g[j] += rho;
        let w = rho * (1.0 - rho);
        h[i] += w;
        h[j] += w;
    }
    (g, h)
}

/// All (positive, negative) pairs, or `cap` pairs drawn uniformly with
/// replacement when there are more than `cap`.
pub fn sample_pairs<R: Rng>(y: &[Label], cap: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i].is_positive()).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| !y[i].is_positive()).collect();
    if pos.len() * neg.len() <= cap {
        return pos.iter().flat_map(|&i| neg.iter().map(move |&j| (i, j))).collect();
    }
    (0..cap)
        .map(|_| (pos[rng.random_range(0..pos.len())], neg[rng.random_range(0..neg.len())]))
        .collect()
}

enum Prepared {
    Sorted(Presorted),
    Binned(HistogramBins, trees::BinnedMatrix),
}

fn prepare(x: &Matrix, backend: TreeBackend, max_bins: usize) -> Prepared {
    match backend {
        TreeBackend::Exact | TreeBackend::Oblivious => Prepared::Sorted(Presorted::new(x)),
        TreeBackend::Histogram => {
            let bins = HistogramBins::fit(x, max_bins);
            let binned = bins.bin_matrix(x);
            Prepared::Binned(bins, binned)
        }
    }
}

fn round_rows<R: Rng>(n: usize, fraction: f64, rng: &mut R) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..n).collect();
    }
    let k = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut rows = index::sample(rng, n, k).into_vec();
    rows.sort_unstable();
    rows
}

fn boost<F>(
    x: &Matrix,
    params: &GbdtParams,
    backend: TreeBackend,
    objective: Objective,
    base_score: f64,
    mut grad_hess: F,
    mut on_round: impl FnMut(&[f64]),
) -> Booster
where
    F: FnMut(&[f64], &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>),
{
    let n = x.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let prepared = prepare(x, backend, params.max_bins);
    let tree_params = params.tree_params();
    let mut margins = vec![base_score; n];
    let mut fitted = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        let (g, h) = grad_hess(&margins, &mut rng);
        let rows = round_rows(n, params.subsample, &mut rng);
        let input = TreeInput {
            x,
            grad: &g,
            hess: &h,
            rows: &rows,
        };
        let tree = match (&prepared, backend) {
            (Prepared::Sorted(p), TreeBackend::Oblivious) => {
                trees::fit_tree_oblivious_on(&input, p, &tree_params, &mut rng)
            }
            (Prepared::Sorted(p), _) => trees::fit_tree_exact_on(&input, Some(p), &tree_params, &mut rng),
            (Prepared::Binned(bins, binned), _) => {
                trees::fit_tree_hist_on(binned, &g, &h, &rows, bins, &tree_params, &mut rng)
            }
        };
        for (i, m) in margins.iter_mut().enumerate() {
            *m += params.learning_rate * tree.predict(x.row(i));
        }
        on_round(&margins);
        fitted.push(tree);
    }
    Booster {
        objective,
        base_score,
        learning_rate: params.learning_rate,
        trees: fitted,
    }
}

fn check_rows(x: &Matrix, y: &[Label]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch(x.n_rows(), y.len()));
    }
    if y.is_empty() {
        return Err(Error::DegenerateLabels("no training rows".into()));
    }
    Ok(())
}

/// Logistic-loss gradient boosting. `on_round` sees the training margins
/// after every round.
pub fn fit_gbdt_logistic_traced(
    x: &Matrix,
    y: &[Label],
    params: &GbdtParams,
    backend: TreeBackend,
    on_round: impl FnMut(&[f64]),
) -> Result<Booster> {
    check_rows(x, y)?;
    params.validate()?;
    let base = logistic_base_score(y);
    Ok(boost(
        x,
        params,
        backend,
        Objective::Logistic,
        base,
        |m, _| logistic_grad_hess(m, y),
        on_round,
    ))
}

pub fn fit_gbdt_logistic(x: &Matrix, y: &[Label], params: &GbdtParams, backend: TreeBackend) -> Result<Booster> {
    fit_gbdt_logistic_traced(x, y, params, backend, |_| {})
}

/// Pairwise (RankNet-style) boosting over positive/negative pairs, starting
/// from a zero margin.
pub fn fit_gbdt_pairwise(x: &Matrix, y: &[Label], params: &GbdtParams, backend: TreeBackend) -> Result<Booster> {
    check_rows(x, y)?;
    params.validate()?;
    if y.iter().all(|l| l.is_positive()) || !y.iter().any(|l| l.is_positive()) {
        return Err(Error::SingleClass);
    }
    let cap = params.pair_cap_factor.max(1) * y.len();
    Ok(boost(
        x,
        params,
        backend,
        Objective::Pairwise,
        0.0,
        |m, rng| {
            let pairs = sample_pairs(y, cap, rng);
            pairwise_grad_hess(m, &pairs)
        },
        |_| {},
    ))
}

/// Bagged class-mean trees. Each tree regresses `y` with unit hessians and
/// no regularization, so its leaves hold (bootstrap-weighted) class means.
pub fn fit_forest(x: &Matrix, y: &[Label], params: &ForestParams, kind: ForestKind) -> Result<Forest> {
    check_rows(x, y)?;
    if params.n_trees == 0 {
        return Err(Error::Config("n_trees must be at least 1".into()));
    }
    let n = x.n_rows();
    let d = x.n_cols();
    let k = params
        .max_features
        .unwrap_or_else(|| ((d as f64).sqrt().round() as usize).max(1))
        .clamp(1, d.max(1));
    let target = targets(y);
    let bins = (kind == ForestKind::HistRandomForest).then(|| {
        let b = HistogramBins::fit(x, params.max_bins);
        let m = b.bin_matrix(x);
        (b, m)
    });
    let presorted = (kind == ForestKind::RandomForest).then(|| Presorted::new(x));
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_child_weight: params.min_child_weight,
        lambda: 0.0,
        colsample: 1.0,
        features_per_node: Some(k),
    };

    let fitted: Vec<DecisionTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64 + 1);
            let mut weight = vec![0.0; n];
            if params.bootstrap {
                for _ in 0..n {
                    weight[rng.random_range(0..n)] += 1.0;
                }
            } else {
                weight.iter_mut().for_each(|w| *w = 1.0);
            }
            let rows: Vec<usize> = (0..n).filter(|&i| weight[i] > 0.0).collect();
            let g: Vec<f64> = target.iter().zip(&weight).map(|(t, w)| -t * w).collect();
            let h = weight;
            let input = TreeInput {
                x,
                grad: &g,
                hess: &h,
                rows: &rows,
            };
            match (kind, &bins) {
                (ForestKind::RandomForest, _) => {
                    trees::fit_tree_exact_on(&input, presorted.as_ref(), &tree_params, &mut rng)
                }
                (ForestKind::HistRandomForest, Some((b, m))) => {
                    trees::fit_tree_hist_on(m, &g, &h, &rows, b, &tree_params, &mut rng)
                }
                (ForestKind::ExtraTrees, _) => trees::fit_tree_extra(
                    &input,
                    &ExtraTreeParams {
                        max_depth: params.max_depth,
                        min_child_weight: params.min_child_weight,
                        lambda: 0.0,
                        candidates_per_node: k,
                    },
                    &mut rng,
                ),
                (ForestKind::HistRandomForest, None) => unreachable!("bins are built for histogram forests"),
            }
        })
        .collect();
    Ok(Forest { trees: fitted })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LearnerParams {
    Gbdt(GbdtParams),
    Forest(ForestParams),
    Svm(SvmParams),
}

impl LearnerParams {
    pub fn with_seed(&self, seed: u64) -> LearnerParams {
        match *self {
            LearnerParams::Gbdt(p) => LearnerParams::Gbdt(GbdtParams { seed, ..p }),
            LearnerParams::Forest(p) => LearnerParams::Forest(ForestParams { seed, ..p }),
            LearnerParams::Svm(p) => LearnerParams::Svm(SvmParams { seed, ..p }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelBody {
    Booster(Booster),
    Forest(Forest),
    Linear(SvmModel),
}

/// A fitted learner together with the column schema it expects and the
/// decision threshold used for hard labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: LearnerKind,
    pub params: LearnerParams,
    pub features: Vec<String>,
    pub body: ModelBody,
    pub threshold: Option<f64>,
    /// Training-split medians used to fill missing entries before scoring.
    #[serde(default)]
    pub imputer: Option<Imputer>,
}

/// Fits `kind` on `(x, y)`.
pub fn fit_learner(
    kind: LearnerKind,
    params: &LearnerParams,
    x: &Matrix,
    y: &[Label],
    features: &[String],
) -> Result<TrainedModel> {
    if features.len() != x.n_cols() {
        return Err(Error::SchemaMismatch(format!(
            "{} feature names for {} columns",
            features.len(),
            x.n_cols()
        )));
    }
    let mismatch = || Error::Config(format!("{kind} received parameters of the wrong family"));
    let body = match (kind, params) {
        (LearnerKind::XgbBinary | LearnerKind::SkGbt, LearnerParams::Gbdt(p)) => {
            ModelBody::Booster(fit_gbdt_logistic(x, y, p, TreeBackend::Exact)?)
        }
        (LearnerKind::LgbGbdt, LearnerParams::Gbdt(p)) => {
            ModelBody::Booster(fit_gbdt_logistic(x, y, p, TreeBackend::Histogram)?)
        }
        (LearnerKind::Cat, LearnerParams::Gbdt(p)) => {
            ModelBody::Booster(fit_gbdt_logistic(x, y, p, TreeBackend::Oblivious)?)
        }
        (LearnerKind::XgbRank, LearnerParams::Gbdt(p)) => {
            ModelBody::Booster(fit_gbdt_pairwise(x, y, p, TreeBackend::Exact)?)
        }
        (LearnerKind::SkRf, LearnerParams::Forest(p)) => {
            ModelBody::Forest(fit_forest(x, y, p, ForestKind::RandomForest)?)
        }
        (LearnerKind::LgbRf, LearnerParams::Forest(p)) => {
            ModelBody::Forest(fit_forest(x, y, p, ForestKind::HistRandomForest)?)
        }
        (LearnerKind::SkEt, LearnerParams::Forest(p)) => {
            ModelBody::Forest(fit_forest(x, y, p, ForestKind::ExtraTrees)?)
        }
        (LearnerKind::Svc, LearnerParams::Svm(p)) => ModelBody::Linear(linsvm::fit_pegasos(x, y, p)?),
        _ => return Err(mismatch()),
    };
    Ok(TrainedModel {
        kind,
        params: params.clone(),
        features: features.to_vec(),
        body,
        threshold: None,
        imputer: None,
    })
}

impl TrainedModel {
    pub fn score_row(&self, row: &[f64]) -> f64 {
        match &self.body {
            ModelBody::Booster(b) => b.score(row),
            ModelBody::Forest(f) => f.score(row),
            ModelBody::Linear(s) => s.score(row),
        }
    }

    /// Scores on the probability scale for logistic and forest learners,
    /// margins for the pairwise and SVM learners.
    pub fn predict_scores(&self, x: &Matrix, columns: &[String]) -> Result<Vec<f64>> {
        if columns != self.features.as_slice() || x.n_cols() != self.features.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} model expects {} columns, matrix has {}",
                self.kind,
                self.features.len(),
                x.n_cols()
            )));
        }
        if self.imputer.is_none() && x.as_slice().iter().any(|v| is_missing(*v)) {
            if let ModelBody::Linear(_) = self.body {
                return Err(Error::Config("svc cannot score rows with missing values".into()));
            }
        }
        Ok(x.rows().map(|r| self.score_row(r)).collect())
    }

    /// Scores a feature matrix, filling its missing entries with the stored
    /// imputer first.
    pub fn score_matrix(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        match &self.imputer {
            Some(imp) if m.has_missing() => {
                let filled = imp.apply(m)?;
                self.predict_scores(&filled.values, &filled.columns)
            }
            _ => self.predict_scores(&m.values, &m.columns),
        }
    }

    /// Hard labels at the stored threshold (`score >= threshold` is male).
    pub fn predict_labels(&self, x: &Matrix, columns: &[String]) -> Result<Vec<Label>> {
        let tau = self
            .threshold
            .ok_or_else(|| Error::Config(format!("{} model has no decision threshold", self.kind)))?;
        Ok(self
            .predict_scores(x, columns)?
            .into_iter()
            .map(|s| Label::from_bool(s >= tau))
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn predict_scores(model: &TrainedModel, x: &Matrix, columns: &[String]) -> Result<Vec<f64>> {
    model.predict_scores(x, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("f{i}")).collect()
    }

    fn line_data(n: usize) -> (Matrix, Vec<Label>) {
        let rows: Vec<[f64; 1]> = (0..n).map(|i| [i as f64 - (n / 2) as f64 + 0.5]).collect();
        let y = rows.iter().map(|r| Label::from_bool(r[0] >= 0.0)).collect();
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn base_scores() {
        let balanced = [Label::Male, Label::Female];
        assert_eq!(logistic_base_score(&balanced), 0.0);
        let ones = [Label::Male; 4];
        assert!((logistic_base_score(&ones) - 13.815_509_557_963_773).abs() < 1e-9);
    }

    #[test]
    fn separable_line_is_learned() {
        let (x, y) = line_data(40);
        let params = GbdtParams {
            n_rounds: 50,
            learning_rate: 0.3,
            max_depth: 1,
            subsample: 1.0,
            colsample: 1.0,
            ..GbdtParams::default()
        };
        let b = fit_gbdt_logistic(&x, &y, &params, TreeBackend::Exact).unwrap();
        for (row, l) in x.rows().zip(&y) {
            assert_eq!(b.score(row) >= 0.5, l.is_positive());
            assert!(b.score(row) > 0.0 && b.score(row) < 1.0);
        }
    }

    #[test]
    fn pair_gradient_at_equal_scores() {
        let (g, h) = pairwise_grad_hess(&[0.3, 0.3], &[(0, 1)]);
        assert_eq!(g, vec![-0.5, 0.5]);
        assert_eq!(h, vec![0.25, 0.25]);
        assert!(pairwise_loss(&[1e3, -1e3], &[(0, 1)]) < 1e-300);
    }

    #[test]
    fn pairwise_needs_both_classes() {
        let (x, _) = line_data(6);
        let y = vec![Label::Male; 6];
        assert!(matches!(
            fit_gbdt_pairwise(&x, &y, &GbdtParams::default(), TreeBackend::Exact),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn pair_sampling_respects_cap() {
        let y: Vec<Label> = (0..10).map(|i| Label::from_bool(i % 2 == 0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_pairs(&y, 100, &mut rng).len(), 25);
        let capped = sample_pairs(&y, 7, &mut rng);
        assert_eq!(capped.len(), 7);
        assert!(capped.iter().all(|&(i, j)| y[i].is_positive() && !y[j].is_positive()));
    }

    #[test]
    fn stump_forest_predicts_prevalence() {
        let (x, _) = line_data(10);
        let y: Vec<Label> = (0..10).map(|i| Label::from_bool(i < 3)).collect();
        for kind in [ForestKind::ExtraTrees, ForestKind::RandomForest] {
            let params = ForestParams {
                n_trees: 1,
                max_depth: 0,
                bootstrap: false,
                ..ForestParams::default()
            };
            let f = fit_forest(&x, &y, &params, kind).unwrap();
            assert!((f.score(&[100.0]) - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn pure_class_forest_is_constant() {
        let (x, _) = line_data(12);
        let y = vec![Label::Male; 12];
        for kind in [
            ForestKind::RandomForest,
            ForestKind::HistRandomForest,
            ForestKind::ExtraTrees,
        ] {
            let f = fit_forest(
                &x,
                &y,
                &ForestParams {
                    n_trees: 5,
                    ..ForestParams::default()
                },
                kind,
            )
            .unwrap();
            for r in x.rows() {
                assert_eq!(f.score(r), 1.0);
            }
        }
    }

    #[test]
    fn forest_score_ignores_tree_order() {
        let (x, y) = line_data(30);
        let y: Vec<Label> = y
            .iter()
            .enumerate()
            .map(|(i, l)| if i % 7 == 0 { Label::Male } else { *l })
            .collect();
        let f = fit_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 25,
                ..ForestParams::default()
            },
            ForestKind::RandomForest,
        )
        .unwrap();
        let mut rev = f.clone();
        rev.trees.reverse();
        for r in x.rows() {
            assert_eq!(f.score(r).to_bits(), rev.score(r).to_bits());
        }
    }

    #[test]
    fn model_json_round_trip_and_schema_check() {
        let (x, y) = line_data(20);
        let params = LearnerParams::Gbdt(GbdtParams {
            n_rounds: 5,
            ..GbdtParams::default()
        });
        let mut m = fit_learner(LearnerKind::Cat, &params, &x, &y, &names(1)).unwrap();
        m.threshold = Some(0.5);
        let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            back.predict_scores(&x, &names(1)).unwrap(),
            m.predict_scores(&x, &names(1)).unwrap()
        );
        assert!(matches!(
            m.predict_scores(&x, &["other".to_string()]),
            Err(Error::SchemaMismatch(_))
        ));
        assert!(matches!(
            fit_learner(LearnerKind::Svc, &params, &x, &y, &names(1)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let (x, y) = line_data(8);
        let p = GbdtParams {
            learning_rate: 0.0,
            ..GbdtParams::default()
        };
        assert!(fit_gbdt_logistic(&x, &y, &p, TreeBackend::Exact).is_err());
        let p = GbdtParams {
            n_rounds: 0,
            ..GbdtParams::default()
        };
        assert!(fit_gbdt_logistic(&x, &y, &p, TreeBackend::Exact).is_err());
    }

    #[test]
    fn single_leaf_rounds_give_constant_score() {
        let (x, y) = line_data(10);
        let p = GbdtParams {
            n_rounds: 3,
            max_depth: 0,
            subsample: 1.0,
            ..GbdtParams::default()
        };
        let b = fit_gbdt_logistic(&x, &y, &p, TreeBackend::Exact).unwrap();
        let leaves: f64 = b.trees.iter().map(|t| t.predict(&[0.0])).sum();
        let expected = sigmoid(b.base_score + p.learning_rate * leaves);
        for r in x.rows() {
            assert_eq!(b.score(r), expected);
        }
    }
}
