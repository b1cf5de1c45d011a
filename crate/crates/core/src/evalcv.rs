//! Shared stratified folds, F1 and accuracy, decision-threshold tuning, the
//! cross-validation driver and majority voting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boost::{fit_learner, LearnerKind, LearnerParams};
use crate::datasets::{FeatureMatrix, Imputer};
use crate::error::{Error, Result};
use crate::io;
use crate::trajdata::Label;

/// Bird → fold index, shared by every setting and dataset mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub folds: BTreeMap<String, usize>,
}

/// Stratified folds: each class's sorted ids are shuffled with the seeded
/// generator and dealt round-robin, the deal continuing from class 0 into
/// class 1 so total fold sizes also differ by at most one.
pub fn make_folds(labels: &BTreeMap<String, Label>, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Config("k must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = BTreeMap::new();
    let mut next = 0usize;
    for class in [Label::Female, Label::Male] {
        // BTreeMap iteration is already sorted by bird id
        let mut ids: Vec<&String> = labels.iter().filter(|(_, &l)| l == class).map(|(b, _)| b).collect();
        if ids.len() < k {
            return Err(Error::TooFewPerClass {
                class: class.as_u8(),
                count: ids.len(),
                k,
            });
        }
        ids.shuffle(&mut rng);
        for id in ids {
            folds.insert(id.clone(), next % k);
            next += 1;
        }
    }
    Ok(FoldAssignment { k, seed, folds })
}

impl FoldAssignment {
    pub fn fold_of(&self, bird_id: &str) -> Option<usize> {
        self.folds.get(bird_id).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.folds.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// Fold index per row of `bird_ids`.
    pub fn assign(&self, bird_ids: &[String]) -> Result<Vec<usize>> {
        if bird_ids.len() != self.folds.len() {
            return Err(Error::BirdSetMismatch);
        }
        bird_ids
            .iter()
            .map(|b| self.fold_of(b).ok_or(Error::BirdSetMismatch))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bird_id,fold\n");
        for (b, f) in &self.folds {
            let _ = writeln!(out, "{b},{f}");
        }
        out
    }

    /// Parses `bird_id,fold`. `k` is taken as one more than the largest fold.
    pub fn from_csv(text: &str, seed: u64) -> Result<FoldAssignment> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut folds = BTreeMap::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let bad = |reason: &str| Error::MalformedRow {
                line,
                reason: reason.to_string(),
            };
            if rec.len() != 2 {
                return Err(bad("expected bird_id,fold"));
            }
            let f: usize = rec[1].trim().parse().map_err(|_| bad("fold is not an integer"))?;
            if folds.insert(rec[0].to_string(), f).is_some() {
                return Err(Error::DuplicateBird(rec[0].to_string()));
            }
        }
        let k = folds.values().max().map_or(0, |m| m + 1);
        Ok(FoldAssignment { k, seed, folds })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn read(path: &Path, seed: u64) -> Result<FoldAssignment> {
        FoldAssignment::from_csv(&io::read_to_string(path)?, seed).map_err(|e| e.in_file(path))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

pub fn confusion(pred: &[Label], truth: &[Label]) -> Result<Confusion> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    let mut c = Confusion::default();
    for (p, t) in pred.iter().zip(truth) {
        match (p.is_positive(), t.is_positive()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

impl Confusion {
    /// `2TP / (2TP + FP + FN)`, 0 when there are no true positives.
    pub fn f1(&self) -> f64 {
        if self.tp == 0 {
            return 0.0;
        }
        let tp2 = 2.0 * self.tp as f64;
        tp2 / (tp2 + self.fp as f64 + self.fn_ as f64)
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.tp + self.fp + self.tn + self.fn_;
        (self.tp + self.tn) as f64 / total as f64
    }
}

pub fn f1_score(pred: &[Label], truth: &[Label]) -> Result<f64> {
    Ok(confusion(pred, truth)?.f1())
}

pub fn accuracy(pred: &[Label], truth: &[Label]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::LengthMismatch(0, truth.len()));
    }
    Ok(confusion(pred, truth)?.accuracy())
}

/// `score >= tau` is the positive (male) class.
pub fn apply_threshold(scores: &[f64], tau: f64) -> Vec<Label> {
    scores.iter().map(|&s| Label::from_bool(s >= tau)).collect()
}

/// F1-maximizing threshold among `min - 1`, the midpoints of consecutive
/// distinct scores, and `max + 1`. Ties go to the smallest threshold.
pub fn tune_threshold(scores: &[f64], truth: &[Label]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::LengthMismatch(scores.len(), truth.len()));
    }
    let n_pos = truth.iter().filter(|l| l.is_positive()).count();
    if n_pos == 0 || n_pos == truth.len() {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sweep candidates upward. Below every score all rows are predicted
    // positive; passing a group of equal scores turns that group negative.
    let mut tp = n_pos;
    let mut fp = truth.len() - n_pos;
    let f1 = |tp: usize, fp: usize| {
        if tp == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + (n_pos - tp) as f64)
        }
    };
    let mut best_tau = scores[order[0]] - 1.0;
    let mut best = f1(tp, fp);
    let mut i = 0;
    while i < order.len() {
        let v = scores[order[i]];
        while i < order.len() && scores[order[i]] == v {
            if truth[order[i]].is_positive() {
                tp -= 1;
            } else {
                fp -= 1;
            }
            i += 1;
        }
        let tau = if i < order.len() {
            v + (scores[order[i]] - v) / 2.0
        } else {
            v + 1.0
        };
        let f = f1(tp, fp);
        if f > best {
            best = f;
            best_tau = tau;
        }
    }
    Ok(best_tau)
}

/// Result of cross-validating one setting.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// F1 of each fold's in-fold rows at the pooled threshold.
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
    /// Out-of-fold score per matrix row.
    pub oof_scores: Vec<f64>,
    /// Fold index per matrix row.
    pub fold_of_row: Vec<usize>,
    pub threshold: f64,
}

impl CvResult {
    pub fn oof_labels(&self) -> Vec<Label> {
        apply_threshold(&self.oof_scores, self.threshold)
    }
}

/// Per-fold F1 of hard labels.
pub fn fold_f1(pred: &[Label], truth: &[Label], fold_of_row: &[usize], k: usize) -> Result<Vec<f64>> {
    if pred.len() != fold_of_row.len() {
        return Err(Error::LengthMismatch(pred.len(), fold_of_row.len()));
    }
    let mut cells = vec![Confusion::default(); k];
    for ((p, t), &f) in pred.iter().zip(truth).zip(fold_of_row) {
        let c = confusion(&[*p], &[*t])?;
        let cell = &mut cells[f];
        cell.tp += c.tp;
        cell.fp += c.fp;
        cell.tn += c.tn;
        cell.fn_ += c.fn_;
    }
    Ok(cells.iter().map(Confusion::f1).collect())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// K-fold cross validation of one learner on a labeled matrix. Every fold
/// refits the median imputer on its training rows.
pub fn cross_validate(
    kind: LearnerKind,
    params: &LearnerParams,
    matrix: &FeatureMatrix,
    folds: &FoldAssignment,
) -> Result<CvResult> {
    let labels = matrix
        .labels
        .as_ref()
        .ok_or_else(|| Error::DegenerateLabels("cross validation needs a labeled matrix".into()))?;
    let fold_of_row = folds.assign(&matrix.bird_ids)?;
    let mut oof = vec![f64::NAN; matrix.n_rows()];
    for f in 0..folds.k {
        let train: Vec<usize> = (0..matrix.n_rows()).filter(|&i| fold_of_row[i] != f).collect();
        let held: Vec<usize> = (0..matrix.n_rows()).filter(|&i| fold_of_row[i] == f).collect();
        if held.is_empty() {
            continue;
        }
        let train_m = matrix.select_rows(&train);
        let imputer = Imputer::fit(&train_m);
        let train_m = imputer.apply(&train_m)?;
        let held_m = imputer.apply(&matrix.select_rows(&held))?;
        let y = train_m.labels.as_deref().expect("labels carried by select_rows");
        let model = fit_learner(kind, params, &train_m.values, y, &matrix.columns)?;
        let scores = model.predict_scores(&held_m.values, &held_m.columns)?;
        for (&row, s) in held.iter().zip(scores) {
            oof[row] = s;
        }
    }
    let threshold = tune_threshold(&oof, labels)?;
    let fold_f1 = fold_f1(&apply_threshold(&oof, threshold), labels, &fold_of_row, folds.k)?;
    Ok(CvResult {
        mean_f1: mean(&fold_f1),
        fold_f1,
        oof_scores: oof,
        fold_of_row,
        threshold,
    })
}

/// Hard labels for a set of birds from one producer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSet {
    pub source: String,
    pub bird_ids: Vec<String>,
    pub labels: Vec<Label>,
}

impl PredictionSet {
    pub fn new(source: impl Into<String>, bird_ids: Vec<String>, labels: Vec<Label>) -> Result<Self> {
        if bird_ids.len() != labels.len() {
            return Err(Error::LengthMismatch(bird_ids.len(), labels.len()));
        }
        Ok(PredictionSet {
            source: source.into(),
            bird_ids,
            labels,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bird_id,label\n");
        for (b, l) in self.bird_ids.iter().zip(&self.labels) {
            let _ = writeln!(out, "{b},{}", l.as_u8());
        }
        out
    }

    pub fn from_csv(source: impl Into<String>, text: &str) -> Result<Self> {
        let map = crate::trajdata::parse_labels(text)?;
        let (bird_ids, labels) = map.into_iter().unzip();
        PredictionSet::new(source, bird_ids, labels)
    }

    pub fn as_map(&self) -> BTreeMap<String, Label> {
        self.bird_ids.iter().cloned().zip(self.labels.iter().copied()).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let source = path
            .file_stem()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        PredictionSet::from_csv(source, &io::read_to_string(path)?).map_err(|e| e.in_file(path))
    }
}

/// Class that wins an exactly tied vote: the more frequent training class,
/// or male when both are equally frequent.
pub fn tie_break_class(train_labels: &[Label]) -> Label {
    let pos = train_labels.iter().filter(|l| l.is_positive()).count();
    Label::from_bool(2 * pos >= train_labels.len())
}

/// Per-bird majority over prediction sets. Output follows the bird order of
/// the first set; the other sets may list the same birds in any order.
pub fn majority_vote(sets: &[PredictionSet], tie_break: Label) -> Result<PredictionSet> {
    let first = sets.first().ok_or(Error::BirdSetMismatch)?;
    if sets.len() == 1 {
        return Ok(first.clone());
    }
    let index: BTreeMap<&str, usize> = first
        .bird_ids
        .iter()
        .enumerate()
        .map(|(i, b)| (b.as_str(), i))
        .collect();
    if index.len() != first.bird_ids.len() {
        return Err(Error::BirdSetMismatch);
    }
    let mut votes = vec![0usize; first.bird_ids.len()];
    for set in sets {
        if set.bird_ids.len() != first.bird_ids.len() {
            return Err(Error::BirdSetMismatch);
        }
        let mut seen = vec![false; votes.len()];
        for (b, l) in set.bird_ids.iter().zip(&set.labels) {
            let i = *index.get(b.as_str()).ok_or(Error::BirdSetMismatch)?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::BirdSetMismatch);
            }
            votes[i] += usize::from(l.is_positive());
        }
    }
    let n = sets.len();
    let labels = votes
        .into_iter()
        .map(|v| match (2 * v).cmp(&n) {
            std::cmp::Ordering::Greater => Label::Male,
            std::cmp::Ordering::Less => Label::Female,
            std::cmp::Ordering::Equal => tie_break,
        })
        .collect();
    PredictionSet::new("majority_vote", first.bird_ids.clone(), labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(bits: &[u8]) -> Vec<Label> {
        bits.iter().map(|&b| Label::from_bool(b == 1)).collect()
    }

    fn corpus_labels(n_pos: usize, n_neg: usize) -> BTreeMap<String, Label> {
        (0..n_pos + n_neg)
            .map(|i| (format!("bird{i:04}"), Label::from_bool(i < n_pos)))
            .collect()
    }

    #[test]
    fn folds_of_326_females_and_305_males() {
        let f = make_folds(&corpus_labels(326, 305), 5, 7).unwrap();
        let mut sizes = f.fold_sizes();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![127, 126, 126, 126, 126]);
        let labels = corpus_labels(326, 305);
        let mut males = vec![0; 5];
        for (b, &fold) in &f.folds {
            if labels[b].is_positive() {
                males[fold] += 1;
            }
        }
        males.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(males, vec![66, 65, 65, 65, 65]);
        assert_eq!(make_folds(&labels, 5, 7).unwrap(), f);
    }

    #[test]
    fn too_few_per_class() {
        assert!(matches!(
            make_folds(&corpus_labels(3, 10), 5, 0),
            Err(Error::TooFewPerClass {
                class: 1,
                count: 3,
                k: 5
            })
        ));
    }

    #[test]
    fn folds_csv_round_trip() {
        let f = make_folds(&corpus_labels(12, 9), 5, 3).unwrap();
        assert_eq!(FoldAssignment::from_csv(&f.to_csv(), 3).unwrap(), f);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_score(&labels(&[1, 0, 1]), &labels(&[1, 0, 1])).unwrap(), 1.0);
        assert_eq!(accuracy(&labels(&[1, 0, 1]), &labels(&[1, 0, 1])).unwrap(), 1.0);
        // TP=2, FP=1, FN=1
        let f = f1_score(&labels(&[1, 1, 1, 0, 0]), &labels(&[1, 1, 0, 1, 0])).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_score(&labels(&[0, 0]), &labels(&[1, 0])).unwrap(), 0.0);
        assert!(matches!(
            f1_score(&labels(&[0]), &labels(&[1, 0])),
            Err(Error::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(tune_threshold(&[0.1, 0.9], &labels(&[0, 1])).unwrap(), 0.5);
        // all positives are found only by predicting everything positive
        let t = tune_threshold(&[0.3, 0.5, 0.7], &labels(&[1, 0, 1])).unwrap();
        assert_eq!(t, 0.3 - 1.0);
        assert!(matches!(
            tune_threshold(&[0.1, 0.2], &labels(&[1, 1])),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn vote_examples() {
        let ids: Vec<String> = vec!["a".into()];
        let set = |l: u8| PredictionSet::new("s", ids.clone(), labels(&[l])).unwrap();
        let v = majority_vote(&[set(1), set(1), set(0)], Label::Female).unwrap();
        assert_eq!(v.labels, labels(&[1]));

        let mut sets: Vec<PredictionSet> = (0..90).map(|_| set(1)).collect();
        sets.extend((0..90).map(|_| set(0)));
        let prevalent = tie_break_class(&labels(&[vec![1; 326], vec![0; 305]].concat()));
        assert_eq!(prevalent, Label::Male);
        assert_eq!(majority_vote(&sets, prevalent).unwrap().labels, labels(&[1]));
        assert_eq!(tie_break_class(&labels(&[1, 0])), Label::Male);

        let one = PredictionSet::new("only", vec!["x".into(), "y".into()], labels(&[0, 1])).unwrap();
        assert_eq!(majority_vote(std::slice::from_ref(&one), Label::Male).unwrap(), one);

        let other = PredictionSet::new("o", vec!["x".into(), "z".into()], labels(&[0, 1])).unwrap();
        assert!(matches!(
            majority_vote(&[one, other], Label::Male),
            Err(Error::BirdSetMismatch)
        ));
    }

    #[test]
    fn prediction_csv_round_trip() {
        let p = PredictionSet::new("p", vec!["a".into(), "b".into()], labels(&[1, 0])).unwrap();
        assert_eq!(PredictionSet::from_csv("p", &p.to_csv()).unwrap(), p);
    }

    proptest! {
        #[test]
        fn f1_matches_brute_force(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..=20)) {
            let pred: Vec<Label> = pairs.iter().map(|p| Label::from_bool(p.0 == 1)).collect();
            let truth: Vec<Label> = pairs.iter().map(|p| Label::from_bool(p.1 == 1)).collect();
            let mut tp = 0.0; let mut fp = 0.0; let mut fneg = 0.0;
            for (p, t) in pairs.iter() {
                match (p, t) { (1, 1) => tp += 1.0, (1, 0) => fp += 1.0, (0, 1) => fneg += 1.0, _ => {} }
            }
            let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            let recall = if tp + fneg > 0.0 { tp / (tp + fneg) } else { 0.0 };
            let oracle = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            prop_assert!((f1_score(&pred, &truth).unwrap() - oracle).abs() < 1e-12);
        }

        #[test]
        fn tuned_threshold_dominates_half(data in prop::collection::vec((0.0f64..1.0, 0u8..2), 2..40)) {
            let scores: Vec<f64> = data.iter().map(|d| d.0).collect();
            let truth: Vec<Label> = data.iter().map(|d| Label::from_bool(d.1 == 1)).collect();
            prop_assume!(truth.iter().any(|l| l.is_positive()) && truth.iter().any(|l| !l.is_positive()));
            let tau = tune_threshold(&scores, &truth).unwrap();
            let best = f1_score(&apply_threshold(&scores, tau), &truth).unwrap();
            prop_assert!(best >= f1_score(&apply_threshold(&scores, 0.5), &truth).unwrap());
            // brute force over every candidate
            let mut sorted = scores.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            for w in sorted.windows(2) {
                let t = w[0] + (w[1] - w[0]) / 2.0;
                prop_assert!(f1_score(&apply_threshold(&scores, t), &truth).unwrap() <= best);
            }
        }

        #[test]
        fn stratification_bound(bits in prop::collection::vec(0u8..2, 10..120), seed in any::<u64>()) {
            let lab: BTreeMap<String, Label> = bits.iter().enumerate()
                .map(|(i, &b)| (format!("b{i}"), Label::from_bool(b == 1))).collect();
            let pos = bits.iter().filter(|&&b| b == 1).count();
            prop_assume!(pos >= 5 && bits.len() - pos >= 5);
            let f = make_folds(&lab, 5, seed).unwrap();
            for class in [Label::Female, Label::Male] {
                let mut counts = [0usize; 5];
                for (b, &fold) in &f.folds {
                    if lab[b] == class { counts[fold] += 1; }
                }
                prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            }
        }

        #[test]
        fn vote_is_permutation_invariant_and_unanimous(
            votes in prop::collection::vec(prop::collection::vec(0u8..2, 4), 1..8),
            rot in 0usize..8,
        ) {
            let ids: Vec<String> = (0..4).map(|i| format!("b{i}")).collect();
            let sets: Vec<PredictionSet> = votes.iter()
                .map(|v| PredictionSet::new("s", ids.clone(), labels(v)).unwrap()).collect();
            let mut rotated = sets.clone();
            rotated.rotate_left(rot % sets.len());
            prop_assert_eq!(
                majority_vote(&sets, Label::Male).unwrap().labels,
                majority_vote(&rotated, Label::Male).unwrap().labels
            );
            let same = vec![sets[0].clone(); 3];
            prop_assert_eq!(&majority_vote(&same, Label::Female).unwrap().labels, &sets[0].labels);
        }
    }
}
