//! The walk against harmonic label propagation on the same sampled pairs.
//!
//! cargo run --release --example label_propagation

use nbwalk::harness::{class_accuracy, load_points, Config, DatasetKind};
use nbwalk::lp::{LP_MAX_ITER, LP_TOL};
use nbwalk::model::{draw_revealed_set, stream_rng, streams};
use nbwalk::{label_propagation, run_multiclass, sparsify_knn, subsample_and_weight, KnnRule, LabeledDataset};

fn main() -> nbwalk::Result<()> {
    let config = Config {
        dataset: DatasetKind::Blobs,
        n: 10_000,
        ..Config::default()
    };
    let src = load_points(&config, config.n)?;
    let eta = 0.02;
    for alpha in [4.0, 8.0, 16.0] {
        let revealed = draw_revealed_set(src.points.len(), eta, &mut stream_rng(1, streams::REVEALED));
        let data = LabeledDataset::new(src.labels.clone(), revealed, src.q)?;
        let sub = subsample_and_weight(&src.points, alpha, config.metric, &mut stream_rng(1, streams::PAIRS))?;

        let walk = run_multiclass(&sub.graph, &data, src.q, 30, &mut stream_rng(1, streams::ALGORITHM))?;
        let pruned = sparsify_knn(&sub.raw_graph()?, config.knn, KnnRule::Union)?;
        let lp = label_propagation(&pruned, &data, LP_TOL, LP_MAX_ITER)?;
        println!(
            "alpha {alpha:>4}: walk {:.3}  lp {:.3} ({} sweeps)",
            class_accuracy(&walk.assignments, &data, true)?,
            class_accuracy(&lp.assignments, &data, true)?,
            lp.iterations
        );
    }
    Ok(())
}
