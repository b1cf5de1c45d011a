//! Majority voting over hard prediction sets, including the tie rule.

use shearwater::evalcv::{accuracy, f1_score, majority_vote, tie_break_class, PredictionSet};
use shearwater::trajdata::Label;

fn set(name: &str, bits: &[u8]) -> PredictionSet {
    let ids = (0..bits.len()).map(|i| format!("bird{i}")).collect();
    let labels = bits.iter().map(|&b| Label::from_bool(b == 1)).collect();
    PredictionSet::new(name, ids, labels).expect("aligned")
}

fn main() -> shearwater::Result<()> {
    let truth = set("truth", &[1, 1, 0, 0, 1, 0]);
    let sets = [
        set("xgb_binary_together__seed0", &[1, 1, 0, 1, 1, 0]),
        set("sk_rf_split__seed0", &[1, 0, 0, 0, 1, 1]),
        set("svc_together__seed0", &[0, 1, 0, 0, 1, 0]),
        set("cat_split__seed0", &[1, 1, 1, 0, 0, 0]),
    ];
    let training = [Label::Male, Label::Male, Label::Female];
    let voted = majority_vote(&sets, tie_break_class(&training))?;
    for s in sets.iter().chain(std::iter::once(&voted)) {
        println!(
            "{:>28}: accuracy {:.3}  F1 {:.3}",
            s.source,
            accuracy(&s.labels, &truth.labels)?,
            f1_score(&s.labels, &truth.labels)?
        );
    }
    print!("{}", voted.to_csv());
    Ok(())
}
