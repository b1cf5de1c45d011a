//! The whole batch pipeline on a reduced synthetic corpus: synth, extract,
//! folds, cv, train, predict, ensemble and evaluate.
//!
//! Pass a directory to keep the artifacts; the default is a temp dir.

use shearwater::boost::LearnerKind;
use shearwater::cli::{self, Options, RunConfig};
use shearwater::synthgen::SynthParams;

fn main() -> shearwater::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("shearwater_pipeline"), Into::into);
    let mut cfg = RunConfig {
        n_seeds: 2,
        learners: vec![LearnerKind::LgbGbdt, LearnerKind::SkEt, LearnerKind::Svc],
        synth: SynthParams {
            n_birds: 200,
            ..SynthParams::default()
        },
        n_test_birds: 60,
        ..RunConfig::default()
    };
    cfg.hyperparameters.lgb_gbdt.n_rounds = 100;
    cfg.hyperparameters.sk_et.n_trees = 100;
    cfg.resolve_paths(&root);

    let s = cli::cmd_synth(&cfg)?;
    println!(
        "synthesized {} training and {} test birds under {}",
        s.n_train,
        s.n_test,
        root.display()
    );
    let summary = cli::cmd_run(&cfg, Options::default())?;
    for st in &summary.cv.settings {
        println!("{:>20}: CV F1 {:.4}", st.setting.name(), st.mean_f1);
    }
    println!("{:>20}: CV F1 {:.4}", "ensemble", summary.cv.ensemble_mean_f1);
    if let Some(e) = summary.evaluation {
        println!("test: accuracy {:.4}, F1 {:.4} on {} birds", e.accuracy, e.f1, e.n);
    }
    Ok(())
}
