//! Shared folds and cross validation of two settings on a synthetic corpus.

use shearwater::boost::{ForestParams, LearnerKind, LearnerParams};
use shearwater::datasets::{build_dataset, DatasetMode};
use shearwater::evalcv::{cross_validate, make_folds};
use shearwater::linsvm::SvmParams;
use shearwater::synthgen::{generate_corpus, SynthParams};

fn main() -> shearwater::Result<()> {
    let corpus = generate_corpus(&SynthParams {
        n_birds: 200,
        ..SynthParams::default()
    })?;
    let labels = corpus.labels().expect("synthetic corpora are labeled");
    let folds = make_folds(labels, 5, 0)?;
    println!("fold sizes {:?}", folds.fold_sizes());

    let matrix = build_dataset(&corpus, DatasetMode::Together)?;
    let settings = [
        (LearnerKind::Svc, LearnerParams::Svm(SvmParams::default())),
        (
            LearnerKind::SkEt,
            LearnerParams::Forest(ForestParams {
                n_trees: 100,
                bootstrap: false,
                ..ForestParams::default()
            }),
        ),
    ];
    for (kind, params) in settings {
        let r = cross_validate(kind, &params, &matrix, &folds)?;
        let folds: Vec<String> = r.fold_f1.iter().map(|f| format!("{f:.3}")).collect();
        println!(
            "{kind:>6}: folds [{}], mean F1 {:.4}, threshold {:.4}",
            folds.join(", "),
            r.mean_f1,
            r.threshold
        );
    }
    Ok(())
}
