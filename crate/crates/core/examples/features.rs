//! The 248-value feature vector of one bird, with a few named entries.

use shearwater::featex::{self, VelocityThresholds};
use shearwater::geokin;
use shearwater::synthgen::{generate_corpus, SynthParams};

fn main() -> shearwater::Result<()> {
    let corpus = generate_corpus(&SynthParams {
        n_birds: 40,
        ..SynthParams::default()
    })?;
    let pool: Vec<f64> = corpus
        .trajectories()
        .flat_map(|t| geokin::velocities(t.points()).values)
        .collect();
    let th = VelocityThresholds::from_pool(&pool);
    println!("pooled velocity thresholds: {:?}", th.map(|t| t.0));

    let trip = corpus.trajectories().next().expect("corpus is not empty");
    let f = featex::bird_features(trip.points(), th.as_ref());
    println!("{} features for {}", f.values.len(), trip.bird_id());
    for name in [
        "velocity_mean",
        "velocity_q050",
        "velocity_max",
        "velocity_exceed_mean",
        "delta_azimuth_q050",
        "first_lat_1",
        "pca_ratio_1",
        "pca_axis1_longitude",
    ] {
        println!("{name:>22} = {:.6}", f.get(name).unwrap_or(f64::NAN));
    }
    Ok(())
}
