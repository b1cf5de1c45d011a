//! `together` and `split` matrices, CSV round trip and median imputation.

use shearwater::datasets::{build_dataset, impute, DatasetMode, FeatureMatrix};
use shearwater::synthgen::{generate_corpus, SynthParams};

fn main() -> shearwater::Result<()> {
    let corpus = generate_corpus(&SynthParams {
        n_birds: 30,
        ..SynthParams::default()
    })?;
    for mode in DatasetMode::ALL {
        let m = build_dataset(&corpus, mode)?;
        let missing = m.values.as_slice().iter().filter(|v| v.is_nan()).count();
        println!(
            "{mode}: {} birds x {} columns, {missing} missing",
            m.n_rows(),
            m.columns.len()
        );

        let back = FeatureMatrix::from_csv(&m.to_csv())?;
        assert_eq!(back.columns, m.columns);

        let filled = impute(&m, &m)?;
        println!("  after imputation: has missing = {}", filled.has_missing());
    }
    let split = build_dataset(&corpus, DatasetMode::Split)?;
    println!("first split columns: {:?}", &split.columns[..3]);
    Ok(())
}
