//! Every tree learner on a noisy two-feature problem, with training loss
//! traced over boosting rounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shearwater::boost::{self, fit_learner, ForestParams, GbdtParams, LearnerKind, LearnerParams, TreeBackend};
use shearwater::matrix::Matrix;
use shearwater::trajdata::Label;

fn main() -> shearwater::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<[f64; 2]> = (0..300)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let y: Vec<Label> = rows
        .iter()
        .map(|r| Label::from_bool(r[0] * r[0] + r[1] * r[1] + rng.random_range(-0.15..0.15) < 0.5))
        .collect();
    let x = Matrix::from_rows(&rows);
    let names = vec!["x0".to_string(), "x1".to_string()];

    let gbdt = GbdtParams {
        n_rounds: 60,
        learning_rate: 0.2,
        max_depth: 3,
        subsample: 1.0,
        colsample: 1.0,
        ..GbdtParams::default()
    };
    let mut losses = Vec::new();
    boost::fit_gbdt_logistic_traced(&x, &y, &gbdt, TreeBackend::Exact, |m| {
        losses.push(boost::logistic_loss(m, &y))
    })?;
    println!("logistic loss: round 1 {:.4}, round 60 {:.4}", losses[0], losses[59]);

    let forest = ForestParams {
        n_trees: 100,
        ..ForestParams::default()
    };
    for kind in LearnerKind::ALL.into_iter().filter(|k| *k != LearnerKind::Svc) {
        let params = match kind {
            LearnerKind::LgbRf | LearnerKind::SkRf => LearnerParams::Forest(forest),
            LearnerKind::SkEt => LearnerParams::Forest(ForestParams {
                bootstrap: false,
                ..forest
            }),
            _ => LearnerParams::Gbdt(gbdt),
        };
        let model = fit_learner(kind, &params, &x, &y, &names)?;
        let scores = model.predict_scores(&x, &names)?;
        let cut = if kind == LearnerKind::XgbRank { 0.0 } else { 0.5 };
        let acc = scores
            .iter()
            .zip(&y)
            .filter(|(s, l)| (**s >= cut) == l.is_positive())
            .count();
        println!("{kind:>10}: training accuracy {:.3}", acc as f64 / y.len() as f64);
    }
    Ok(())
}
