//! Three Gaussian blobs, clustered from a few thousand sampled distances.
//!
//! cargo run --release --example multiclass_blobs

use nbwalk::harness::blob_centers;
use nbwalk::model::{draw_revealed_set, gaussian_blobs, stream_rng, streams};
use nbwalk::{match_labels, run_multiclass, subsample_and_weight, LabeledDataset, Metric};

fn main() -> nbwalk::Result<()> {
    let (n, q, alpha, eta) = (9_000, 3, 12.0, 0.05);
    let centers = blob_centers(q, 3, 4.0)?;
    let (points, truth) = gaussian_blobs(n, &centers, 1.0, &mut stream_rng(5, streams::LABELS))?;
    let revealed = draw_revealed_set(n, eta, &mut stream_rng(5, streams::REVEALED));
    let data = LabeledDataset::new(truth, revealed, q)?;

    let sub = subsample_and_weight(&points, alpha, Metric::Euclidean, &mut stream_rng(5, streams::PAIRS))?;
    println!("compared {} of {} pairs (sigma^2 = {:.3})", sub.evaluations, n * (n - 1) / 2, sub.sigma2);

    let out = run_multiclass(&sub.graph, &data, q, 20, &mut stream_rng(5, streams::ALGORITHM))?;
    let (acc, perm) = match_labels(&out.assignments, &data.truth)?;
    println!("embedding dimension {}, k-means wcss {:.3e}", out.embedding.d, out.kmeans.wcss);
    println!("stage Rayleigh quotients {:?}", out.rayleigh);
    println!("accuracy {acc:.4} (best matching {perm:?})");
    Ok(())
}
