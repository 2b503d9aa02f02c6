//! Dataset loading and subsampled similarity graphs.
//!
//! Only the similarities of the randomly sampled pairs are ever computed:
//! pairs are drawn first, the kernel bandwidth is calibrated on their squared
//! distances, and then the kernel is evaluated on the same pairs.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{center_weights, WeightedGraph};
use crate::model::draw_er_pairs;

/// Dense row-major matrix of `n` points in `dim` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    data: Vec<f32>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "{} values do not form rows of length {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Rows whose index passes `keep`, in order.
    pub fn select(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let mut data = Vec::new();
        for i in 0..self.len() {
            if keep(i) {
                data.extend_from_slice(self.row(i));
            }
        }
        Self {
            dim: self.dim,
            data,
        }
    }

    /// Concatenates rows of two matrices with the same dimension.
    pub fn concat(mut self, other: &Points) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        self.data.extend_from_slice(&other.data);
        Ok(self)
    }

    /// FNV-1a over the dimension and raw values; identifies a dataset in
    /// output rows.
    pub fn fingerprint(&self) -> u64 {
        let mut h = fnv1a(FNV_OFFSET, &(self.dim as u64).to_le_bytes());
        for x in &self.data {
            h = fnv1a(h, &x.to_le_bytes());
        }
        h
    }
}

pub(crate) const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

pub(crate) fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;

/// Images from an IDX3 file.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// Pixels scaled to `[0, 1]`, one image after another.
    pub pixels: Vec<f32>,
}

impl IdxImages {
    pub fn into_points(self) -> Result<Points> {
        Points::new(self.rows * self.cols, self.pixels)
    }
}

fn read_header(bytes: &[u8], magic: u32, dims: usize) -> Result<Vec<usize>> {
    let word = |k: usize| -> Result<u32> {
        bytes
            .get(4 * k..4 * k + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| Error::Format("truncated IDX header".into()))
    };
    let found = word(0)?;
    if found != magic {
        return Err(Error::Format(format!(
            "bad IDX magic {found:#010x}, expected {magic:#010x}"
        )));
    }
    (1..=dims).map(|k| word(k).map(|d| d as usize)).collect()
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::DatasetMissing(path.to_path_buf()),
        _ => e.into(),
    })?;
    let mut bytes = Vec::new();
    BufReader::new(file).read_to_end(&mut bytes)?;
    Ok(bytes)
}

/// Parses IDX image bytes: magic `0x00000803`, three big-endian sizes, then
/// one unsigned byte per pixel.
pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let dims = read_header(bytes, IDX_IMAGES, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let payload = &bytes[16..];
    let needed = count * rows * cols;
    if payload.len() < needed {
        return Err(Error::Format(format!(
            "truncated IDX payload: {} of {needed} bytes",
            payload.len()
        )));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: payload[..needed].iter().map(|&b| b as f32 / 255.0).collect(),
    })
}

/// Parses IDX label bytes: magic `0x00000801`, one size, one byte per label.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let count = read_header(bytes, IDX_LABELS, 1)?[0];
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(Error::Format(format!(
            "truncated IDX payload: {} of {count} bytes",
            payload.len()
        )));
    }
    Ok(payload[..count].to_vec())
}

pub fn read_idx(path: impl AsRef<Path>) -> Result<IdxImages> {
    parse_idx_images(&read_file(path.as_ref())?)
}

pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    parse_idx_labels(&read_file(path.as_ref())?)
}

/// Loads the MNIST digits in `digits` from the training and test files in
/// `dir` (uncompressed IDX, standard file names). Missing test files are
/// tolerated; missing training files are an error. Labels are the position
/// of each digit in `digits`.
pub fn load_mnist(dir: impl AsRef<Path>, digits: &[u8]) -> Result<(Points, Vec<usize>)> {
    let dir = dir.as_ref();
    let mut points: Option<Points> = None;
    let mut labels = Vec::new();
    for (prefix, required) in [("train", true), ("t10k", false)] {
        let images = dir.join(format!("{prefix}-images-idx3-ubyte"));
        let label_file = dir.join(format!("{prefix}-labels-idx1-ubyte"));
        if !required && !(images.exists() && label_file.exists()) {
            continue;
        }
        let raw_labels = read_idx_labels(&label_file)?;
        let imgs = read_idx(&images)?;
        if imgs.count != raw_labels.len() {
            return Err(Error::LengthMismatch {
                expected: imgs.count,
                found: raw_labels.len(),
            });
        }
        let pts = imgs.into_points()?;
        let subset = pts.select(|i| digits.contains(&raw_labels[i]));
        labels.extend(
            raw_labels
                .iter()
                .filter_map(|d| digits.iter().position(|x| x == d)),
        );
        points = Some(match points {
            None => subset,
            Some(p) => p.concat(&subset)?,
        });
    }
    Ok((points.expect("training split is required"), labels))
}

/// Reads numeric rows from a CSV file. With `labeled`, the last column holds
/// integer class labels, renumbered densely in increasing order.
pub fn read_csv_vectors(
    path: impl AsRef<Path>,
    has_header: bool,
    labeled: bool,
) -> Result<(Points, Option<Vec<usize>>)> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::DatasetMissing(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut data = Vec::new();
    let mut raw_labels = Vec::new();
    let mut width = None;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let fields = record.len();
        if *width.get_or_insert(fields) != fields {
            return Err(Error::Format(format!(
                "row {row} has {fields} fields, expected {}",
                width.unwrap()
            )));
        }
        let numeric = if labeled { fields - 1 } else { fields };
        if numeric == 0 {
            return Err(Error::Format(format!("row {row} has no numeric fields")));
        }
        for (col, cell) in record.iter().take(numeric).enumerate() {
            let x: f32 = cell
                .parse()
                .map_err(|_| Error::Format(format!("row {row}, column {col}: `{cell}` is not a number")))?;
            data.push(x);
        }
        if labeled {
            let cell = &record[numeric];
            let label: i64 = cell
                .parse()
                .map_err(|_| Error::Format(format!("row {row}: label `{cell}` is not an integer")))?;
            raw_labels.push(label);
        }
    }
    let Some(width) = width else {
        return Err(Error::EmptyInput("csv file"));
    };
    let dim = if labeled { width - 1 } else { width };
    let labels = labeled.then(|| {
        let mut classes = raw_labels.clone();
        classes.sort_unstable();
        classes.dedup();
        raw_labels
            .iter()
            .map(|l| classes.binary_search(l).unwrap())
            .collect()
    });
    Ok((Points::new(dim, data)?, labels))
}

/// Distance used inside the Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    /// `1 − cos(x, y)`, taken as 1 when either vector is zero.
    Cosine,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Self::Euclidean),
            "cosine" => Ok(Self::Cosine),
            _ => Err(Error::InvalidParameter(format!("unknown metric `{s}`"))),
        }
    }
}

/// Squared distance `d(x, y)²` under `metric`.
pub fn squared_distance(x: &[f32], y: &[f32], metric: Metric) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(match metric {
        Metric::Euclidean => x
            .iter()
            .zip(y)
            .map(|(&a, &b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum(),
        Metric::Cosine => {
            let (mut dot, mut xx, mut yy) = (0.0f64, 0.0f64, 0.0f64);
            for (&a, &b) in x.iter().zip(y) {
                let (a, b) = (a as f64, b as f64);
                dot += a * b;
                xx += a * a;
                yy += b * b;
            }
            let d = if xx == 0.0 || yy == 0.0 {
                1.0
            } else {
                1.0 - dot / (xx.sqrt() * yy.sqrt())
            };
            d * d
        }
    })
}

/// `s = exp(−d(x, y)² / σ²)`.
pub fn pair_similarity(x: &[f32], y: &[f32], metric: Metric, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma2 = {sigma2}")));
    }
    Ok((-squared_distance(x, y, metric)? / sigma2).exp())
}

/// Bandwidth `σ²`: the mean of the observed squared distances.
pub fn calibrate_sigma(squared_distances: &[f64]) -> Result<f64> {
    if squared_distances.is_empty() {
        return Err(Error::EmptyInput("squared distances"));
    }
    Ok(squared_distances.iter().sum::<f64>() / squared_distances.len() as f64)
}

/// Subsampled similarity graph of a point set.
#[derive(Debug, Clone)]
pub struct Subsample {
    pub pairs: Vec<(usize, usize)>,
    /// Kernel values, one per pair.
    pub similarities: Vec<f64>,
    /// Graph weighted by the centered kernel values.
    pub graph: WeightedGraph,
    pub sigma2: f64,
    /// Number of distance evaluations performed.
    pub evaluations: usize,
}

impl Subsample {
    /// Same pairs weighted by the raw kernel values.
    pub fn raw_graph(&self) -> Result<WeightedGraph> {
        WeightedGraph::build(self.graph.n(), &self.pairs, &self.similarities)
    }
}

/// Draws Erdős–Rényi pairs with mean degree `alpha`, evaluates the kernel on
/// exactly those pairs and returns the centered-weight graph. `σ²` is NaN
/// when no pair is drawn.
pub fn subsample_and_weight<R: Rng + ?Sized>(
    points: &Points,
    alpha: f64,
    metric: Metric,
    rng: &mut R,
) -> Result<Subsample> {
    let n = points.len();
    let pairs = draw_er_pairs(n, alpha, rng);
    if pairs.is_empty() {
        return Ok(Subsample {
            pairs,
            similarities: Vec::new(),
            graph: WeightedGraph::empty(n),
            sigma2: f64::NAN,
            evaluations: 0,
        });
    }
    let mut evaluations = 0;
    let d2 = pairs
        .iter()
        .map(|&(i, j)| {
            evaluations += 1;
            squared_distance(points.row(i), points.row(j), metric)
        })
        .collect::<Result<Vec<f64>>>()?;
    let sigma2 = calibrate_sigma(&d2)?;
    let similarities: Vec<f64> = if sigma2 > 0.0 {
        d2.iter().map(|d| (-d / sigma2).exp()).collect()
    } else {
        vec![1.0; d2.len()]
    };
    let graph = WeightedGraph::build(n, &pairs, &center_weights(&similarities)?)?;
    Ok(Subsample {
        pairs,
        similarities,
        graph,
        sigma2,
        evaluations,
    })
}
