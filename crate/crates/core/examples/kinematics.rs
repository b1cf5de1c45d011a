//! Distances, speeds and accelerations along a short synthetic trip.

use shearwater::geokin::{self, DeltaMode, LatLon};
use shearwater::synthgen::{generate_corpus, SynthParams};

fn main() -> shearwater::Result<()> {
    let colony = LatLon::new(38.57, 139.25);
    let sado = LatLon::new(38.05, 138.37);
    println!("colony to Sado: {:.1} km", geokin::haversine(colony, sado) / 1000.0);

    let corpus = generate_corpus(&SynthParams {
        n_birds: 1,
        min_points: 12,
        max_points: 12,
        ..SynthParams::default()
    })?;
    let trip = corpus.trajectories().next().expect("one bird");
    let v = geokin::velocities(trip.points());
    let a = geokin::accelerations(trip.points());
    let az = geokin::column(trip.points(), "azimuth", |p| p.sun_azimuth);
    let daz = geokin::delta_series(&az, DeltaMode::Angular);

    println!(
        "{} ({:?}), {} fixes",
        trip.bird_id(),
        corpus.label(trip.bird_id()),
        trip.len()
    );
    println!("step  velocity m/s  accel m/s^2  delta_azimuth");
    for i in 0..v.len() {
        let acc = a.values.get(i).map_or("-".to_string(), |x| format!("{x:.5}"));
        let d = daz.values.get(i).map_or("-".to_string(), |x| format!("{x:.2}"));
        println!("{i:>4}  {:>12.3}  {acc:>11}  {d:>13}", v.values[i]);
    }
    Ok(())
}
