//! Clustering vectors read from a CSV file whose last column is the label.
//!
//! cargo run --release --example csv_vectors -- points.csv [alpha]
//!
//! Without arguments a small three-cluster file is written to a temporary
//! location first.

use std::io::Write;

use nbwalk::ingest::read_csv_vectors;
use nbwalk::model::{draw_revealed_set, gaussian_blobs, stream_rng, streams};
use nbwalk::{run_multiclass, subsample_and_weight, Error, LabeledDataset, Metric};

fn demo_file() -> nbwalk::Result<std::path::PathBuf> {
    let centers = vec![vec![0.0, 4.0, 0.0], vec![4.0, 0.0, 0.0], vec![0.0, 0.0, 4.0]];
    let (pts, labels) = gaussian_blobs(3_000, &centers, 1.0, &mut stream_rng(8, 0))?;
    let path = std::env::temp_dir().join("nbwalk_demo.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(f, "x,y,z,label")?;
    for (i, label) in labels.iter().enumerate() {
        let r = pts.row(i);
        writeln!(f, "{},{},{},{label}", r[0], r[1], r[2])?;
    }
    Ok(path)
}

fn main() -> nbwalk::Result<()> {
    let mut args = std::env::args().skip(1);
    let (path, header) = match args.next() {
        Some(p) => (p.into(), false),
        None => (demo_file()?, true),
    };
    let alpha: f64 = args.next().map_or(Ok(10.0), |a| a.parse()).map_err(|_| Error::InvalidParameter("alpha".into()))?;
    let (points, labels) = read_csv_vectors(&path, header, true)?;
    let labels = labels.ok_or_else(|| Error::InvalidParameter("no label column".into()))?;
    let q = labels.iter().max().map_or(1, |m| m + 1);

    let revealed = draw_revealed_set(points.len(), 0.05, &mut stream_rng(0, streams::REVEALED));
    let data = LabeledDataset::new(labels, revealed, q)?;
    let sub = subsample_and_weight(&points, alpha, Metric::Cosine, &mut stream_rng(0, streams::PAIRS))?;
    let out = run_multiclass(&sub.graph, &data, q, 20, &mut stream_rng(0, streams::ALGORITHM))?;
    let right = (0..points.len()).filter(|&i| !data.revealed[i] && out.assignments[i] == data.truth[i]).count();
    let total = points.len() - data.revealed_count();
    println!("{} points, {q} classes: {right}/{total} unlabeled points correct", points.len());
    Ok(())
}
