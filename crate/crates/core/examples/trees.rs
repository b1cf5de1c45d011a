//! One Newton tree per backend on the same gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shearwater::matrix::Matrix;
use shearwater::trees::{self, HistogramBins, TreeParams};

fn main() {
    // y = 1 when x0 + 0.5 x1 > 1, logistic gradients at margin 0
    let rows: Vec<[f64; 2]> = (0..64).map(|i| [(i % 8) as f64 / 4.0, (i / 8) as f64 / 4.0]).collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| f64::from(u8::from(r[0] + 0.5 * r[1] > 1.0)))
        .collect();
    let grad: Vec<f64> = y.iter().map(|t| 0.5 - t).collect();
    let hess = vec![0.25; y.len()];
    let x = Matrix::from_rows(&rows);
    let params = TreeParams {
        max_depth: 2,
        colsample: 1.0,
        ..TreeParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let exact = trees::fit_tree_exact(&x, &grad, &hess, &params, &mut rng);
    let bins = HistogramBins::fit(&x, trees::MAX_BINS);
    let hist = trees::fit_tree_hist(&bins.bin_matrix(&x), &grad, &hess, &bins, &params, &mut rng);
    let oblivious = trees::fit_tree_oblivious(&x, &grad, &hess, &params, &mut rng);

    for (name, t) in [("exact", &exact), ("histogram", &hist), ("oblivious", &oblivious)] {
        println!(
            "{name:>9}: {} leaves, depth {}, features {:?}",
            t.n_leaves(),
            t.depth(),
            t.features_used()
        );
    }
    assert_eq!(exact, hist, "lossless bins reproduce the exact tree");
    println!("{}", serde_json::to_string_pretty(&exact).expect("tree serializes"));
}
