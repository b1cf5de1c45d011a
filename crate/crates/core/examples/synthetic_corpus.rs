//! Writes a small synthetic corpus to disk and reloads it.

use shearwater::synthgen::{generate_corpus, SynthParams};
use shearwater::trajdata::{labels_to_csv, load_corpus, write_corpus};

fn main() -> shearwater::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("shearwater_synth"), Into::into);
    let params = SynthParams {
        n_birds: 20,
        seed: 7,
        ..SynthParams::default()
    };
    let corpus = generate_corpus(&params)?;
    let tracks = dir.join("train");
    write_corpus(&tracks, &corpus)?;
    let labels_path = dir.join("train_labels.csv");
    std::fs::write(&labels_path, labels_to_csv(corpus.labels().expect("labeled")))?;

    let back = load_corpus(&tracks, Some(&labels_path))?;
    assert_eq!(back, corpus);
    let males = back
        .labels()
        .expect("labeled")
        .values()
        .filter(|l| l.is_positive())
        .count();
    println!("{} birds ({males} male) written to {}", back.len(), dir.display());
    for t in back.trajectories().take(3) {
        let night = t.points().iter().filter(|p| !p.daytime).count();
        println!(
            "  {}: {} fixes, {night} at night, {:.0} s",
            t.bird_id(),
            t.len(),
            t.points()[t.len() - 1].elapsed
        );
    }
    Ok(())
}
