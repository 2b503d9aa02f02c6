//! Digits 0 and 1 from the MNIST IDX files.
//!
//! cargo run --release --example mnist_digits -- /path/to/mnist

use nbwalk::ingest::load_mnist;
use nbwalk::model::{draw_revealed_set, stream_rng, streams};
use nbwalk::{match_labels, run_multiclass, subsample_and_weight, LabeledDataset, Metric};

fn main() -> nbwalk::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/mnist".into());
    let (points, labels) = load_mnist(&dir, &[0, 1])?;
    let n = points.len();
    println!("{n} images of dimension {}", points.dim());
    for alpha in [2.0, 4.0, 8.0, 16.0] {
        let revealed = draw_revealed_set(n, 0.01, &mut stream_rng(0, streams::REVEALED));
        let data = LabeledDataset::new(labels.clone(), revealed, 2)?;
        let sub = subsample_and_weight(&points, alpha, Metric::Euclidean, &mut stream_rng(0, streams::PAIRS))?;
        let out = run_multiclass(&sub.graph, &data, 2, 30, &mut stream_rng(0, streams::ALGORITHM))?;
        let (acc, _) = match_labels(&out.assignments, &data.truth)?;
        println!("alpha {alpha:>4}: {} distances, accuracy {acc:.4}", sub.evaluations);
    }
    Ok(())
}
