//! Pegasos linear SVM: objective by epoch count and scale invariance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use shearwater::linsvm::{fit_pegasos, objective, SvmParams};
use shearwater::matrix::Matrix;
use shearwater::trajdata::Label;

fn main() -> shearwater::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..400 {
        let male = i % 2 == 0;
        let shift = if male { 0.8 } else { -0.8 };
        // second column in kilometers-per-hour scale, third pure noise
        rows.push([
            shift + noise.sample(&mut rng),
            3.6 * (shift + noise.sample(&mut rng)),
            noise.sample(&mut rng),
        ]);
        y.push(Label::from_bool(male));
    }
    let x = Matrix::from_rows(&rows);
    for epochs in [1, 5, 20, 50] {
        let p = SvmParams {
            epochs,
            ..SvmParams::default()
        };
        let m = fit_pegasos(&x, &y, &p)?;
        let acc = x
            .rows()
            .zip(&y)
            .filter(|(r, l)| (m.score(r) >= 0.0) == l.is_positive())
            .count();
        println!(
            "epochs {epochs:>2}: objective {:.4}, accuracy {:.3}, weights {:?}",
            objective(&m, &x, &y, p.lambda),
            acc as f64 / y.len() as f64,
            m.weights
                .iter()
                .map(|w| (w * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        );
    }
    Ok(())
}
