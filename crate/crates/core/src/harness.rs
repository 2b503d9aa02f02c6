//! Experiment driver behind the command-line tool: parameter grids,
//! repetitions, timing and CSV/JSON output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binary::{decide, init_messages};
use crate::error::{Error, Result};
use crate::graph::{apply_nb, pool, WeightedGraph};
use crate::ingest::{fnv1a, load_mnist, read_csv_vectors, subsample_and_weight, Metric, Points, FNV_OFFSET};
use crate::lp::{label_propagation, sparsify_knn, KnnRule, LP_MAX_ITER, LP_TOL};
use crate::model::{
    derive_seed, draw_revealed_set, gaussian_blobs, make_instance, spin_to_class,
    stream_rng, streams, LabeledDataset, ModelSpec, Similarity, Weighting,
};
use crate::multi::{cluster_embedding, deflated_embedding, match_labels};
use crate::theory::{
    cantelli_bound_check, density_evolution_mc, optimal_weight, weight_stats, DeConfig, TheoryReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Nblw,
    Lp,
    Both,
}

impl Method {
    fn runs(self) -> &'static [Method] {
        match self {
            Method::Nblw => &[Method::Nblw],
            Method::Lp => &[Method::Lp],
            Method::Both => &[Method::Nblw, Method::Lp],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Method::Nblw => "nblw",
            Method::Lp => "lp",
            Method::Both => "both",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nblw" => Ok(Method::Nblw),
            "lp" => Ok(Method::Lp),
            "both" => Ok(Method::Both),
            _ => Err(Error::InvalidParameter(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    /// Labeled block model with `p_in` / `p_out` similarities.
    #[default]
    Model,
    /// Gaussian blobs generated from the master seed.
    Blobs,
    /// MNIST IDX files under `path`.
    Mnist,
    /// Numeric CSV with a trailing label column.
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingKind {
    #[default]
    Centered,
    Identity,
    Optimal,
}

/// Flat experiment configuration. Every field has a default, so a JSON file
/// only needs the keys it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub alpha: Vec<f64>,
    pub eta: Vec<f64>,
    pub kmax: usize,
    pub reps: usize,
    pub method: Method,
    pub metric: Metric,
    pub q: usize,
    pub dataset: DatasetKind,
    /// Node count for generated data.
    pub n: usize,
    /// Extra node counts swept by `bench`.
    pub bench_n: Vec<usize>,
    /// Similarity laws, e.g. `normal:0.5,1`.
    pub p_in: String,
    pub p_out: String,
    pub weighting: WeightingKind,
    pub path: Option<PathBuf>,
    pub digits: Vec<u8>,
    pub csv_header: bool,
    pub blob_dim: usize,
    /// Distance between any two blob centers.
    pub blob_separation: f64,
    pub blob_sigma: f64,
    /// Neighbors kept per node before label propagation; 0 keeps all.
    pub knn: usize,
    pub knn_rule: KnnRule,
    /// Population for the density-evolution check in `theory`; 0 skips it.
    pub de_population: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            alpha: vec![6.0],
            eta: vec![0.01],
            kmax: crate::binary::DEFAULT_KMAX,
            reps: 1,
            method: Method::Nblw,
            metric: Metric::Euclidean,
            q: 2,
            dataset: DatasetKind::Model,
            n: 10_000,
            bench_n: Vec::new(),
            p_in: "normal:0.5,1".into(),
            p_out: "normal:-0.5,1".into(),
            weighting: WeightingKind::Centered,
            path: None,
            digits: vec![0, 1],
            csv_header: false,
            blob_dim: 2,
            blob_separation: 3.0,
            blob_sigma: 1.0,
            knn: 3,
            knn_rule: KnnRule::Union,
            de_population: 0,
        }
    }
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::DatasetMissing(path.to_path_buf()),
            _ => e.into(),
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.alpha.is_empty() || self.eta.is_empty() {
            return bad("empty alpha or eta grid".into());
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return bad(format!("alpha = {a} must be positive"));
        }
        if let Some(e) = self.eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return bad(format!("eta = {e} must lie in [0, 1]"));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.q < 2 {
            return bad(format!("q = {} must be at least 2", self.q));
        }
        self.laws()?;
        Ok(())
    }

    pub fn laws(&self) -> Result<(Similarity, Similarity)> {
        Ok((self.p_in.parse()?, self.p_out.parse()?))
    }

    /// Seed of repetition `rep`.
    pub fn rep_seed(&self, rep: usize) -> u64 {
        derive_seed(self.seed, rep as u64)
    }

    fn weighting(&self, p_in: &Similarity, p_out: &Similarity) -> Result<Weighting> {
        Ok(match self.weighting {
            WeightingKind::Centered => Weighting::centered(p_in, p_out),
            WeightingKind::Identity => Weighting::identity(),
            WeightingKind::Optimal => optimal_weight(p_in, p_out)?,
        })
    }
}

/// One output record. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// `name@fingerprint`.
    pub dataset: String,
    pub method: String,
    pub n: usize,
    pub q: usize,
    pub alpha: f64,
    pub eta: f64,
    pub kmax: usize,
    pub seed: u64,
    pub acc_all: f64,
    pub acc_unlabeled: f64,
    /// Standard error of `acc_unlabeled` over repetitions, when aggregated.
    pub se: Option<f64>,
    pub phase_sample_s: f64,
    pub phase_iter_s: f64,
    pub phase_decide_s: f64,
}

pub const CSV_HEADER: &str = "dataset,method,n,q,alpha,eta,kmax,seed,acc_all,acc_unlabeled,se,phase_sample_s,phase_iter_s,phase_decide_s";

/// A labeled point set standing in for a dataset.
#[derive(Debug, Clone)]
pub struct PointSource {
    pub name: String,
    pub points: Points,
    pub labels: Vec<usize>,
    pub q: usize,
}

impl PointSource {
    pub fn tag(&self) -> String {
        format!("{}@{:016x}", self.name, self.points.fingerprint())
    }
}

/// `q` blob centers pairwise `separation` apart, on scaled coordinate axes.
pub fn blob_centers(q: usize, dim: usize, separation: f64) -> Result<Vec<Vec<f64>>> {
    if dim < q {
        return Err(Error::InvalidParameter(format!("blob_dim = {dim} is below q = {q}")));
    }
    let r = separation / std::f64::consts::SQRT_2;
    Ok((0..q)
        .map(|c| (0..dim).map(|k| if k == c { r } else { 0.0 }).collect())
        .collect())
}

/// Loads or generates the point set named by `config.dataset`.
pub fn load_points(config: &Config, n: usize) -> Result<PointSource> {
    let path = || {
        config
            .path
            .clone()
            .ok_or_else(|| Error::InvalidParameter("dataset needs a path".into()))
    };
    match config.dataset {
        DatasetKind::Model => Err(Error::InvalidParameter("the model dataset has no points".into())),
        DatasetKind::Blobs => {
            let centers = blob_centers(config.q, config.blob_dim, config.blob_separation)?;
            let (points, labels) = gaussian_blobs(
                n,
                &centers,
                config.blob_sigma,
                &mut stream_rng(config.seed, streams::LABELS),
            )?;
            Ok(PointSource {
                name: "blobs".into(),
                points,
                labels,
                q: config.q,
            })
        }
        DatasetKind::Mnist => {
            let (points, labels) = load_mnist(path()?, &config.digits)?;
            let digits: Vec<String> = config.digits.iter().map(u8::to_string).collect();
            Ok(PointSource {
                name: format!("mnist{}", digits.join("")),
                points,
                labels,
                q: config.digits.len(),
            })
        }
        DatasetKind::Csv => {
            let path = path()?;
            let (points, labels) = read_csv_vectors(&path, config.csv_header, true)?;
            let labels = labels.expect("labeled read returns labels");
            let q = labels.iter().max().map_or(0, |m| m + 1);
            let name = path
                .file_stem()
                .map_or_else(|| "csv".into(), |s| s.to_string_lossy().into_owned());
            Ok(PointSource {
                name,
                points,
                labels,
                q,
            })
        }
    }
}

/// Fraction of nodes in scope assigned their true class. With no revealed
/// labels, cluster names are arbitrary and the best relabeling is used.
pub fn class_accuracy(est: &[usize], data: &LabeledDataset, unlabeled_only: bool) -> Result<f64> {
    let (e, t): (Vec<usize>, Vec<usize>) = (0..data.n())
        .filter(|&i| !(unlabeled_only && data.revealed[i]))
        .map(|i| (est[i], data.truth[i]))
        .unzip();
    if e.is_empty() {
        return Err(Error::EmptyInput("no nodes in accuracy scope"));
    }
    if data.revealed_count() > 0 {
        Ok(e.iter().zip(&t).filter(|(a, b)| a == b).count() as f64 / e.len() as f64)
    } else {
        Ok(match_labels(&e, &t)?.0)
    }
}

struct Timed {
    assignments: Vec<usize>,
    iter_s: f64,
    decide_s: f64,
}

fn run_nblw(g: &WeightedGraph, data: &LabeledDataset, kmax: usize, seed: u64) -> Result<Timed> {
    let mut rng = stream_rng(seed, streams::ALGORITHM);
    let t = Instant::now();
    if data.q == 2 {
        let mut v = init_messages(g, data, &mut rng)?;
        for _ in 0..kmax {
            v = apply_nb(g, &v)?;
        }
        let iter_s = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let pooled = pool(g, &v)?;
        let assignments = decide(g, data, &pooled).into_iter().map(spin_to_class).collect();
        Ok(Timed {
            assignments,
            iter_s,
            decide_s: t.elapsed().as_secs_f64(),
        })
    } else {
        let (embedding, _) = deflated_embedding(g, data, data.q, kmax, &mut rng)?;
        let iter_s = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let (assignments, _) = cluster_embedding(&embedding, data, data.q, &mut rng)?;
        Ok(Timed {
            assignments,
            iter_s,
            decide_s: t.elapsed().as_secs_f64(),
        })
    }
}

/// Label propagation on the raw similarities, shifted to be nonnegative when
/// the similarity law has negative support, after nearest-neighbor pruning.
fn run_lp(raw: &WeightedGraph, data: &LabeledDataset, config: &Config) -> Result<Timed> {
    let t = Instant::now();
    let low = raw.weights().iter().copied().fold(0.0f64, f64::min);
    let shifted;
    let g = if low < 0.0 {
        shifted = raw.map_weights(|w| w - low);
        &shifted
    } else {
        raw
    };
    let pruned;
    let g = if config.knn > 0 {
        pruned = sparsify_knn(g, config.knn, config.knn_rule)?;
        &pruned
    } else {
        g
    };
    let out = label_propagation(g, data, LP_TOL, LP_MAX_ITER)?;
    Ok(Timed {
        assignments: out.assignments,
        iter_s: t.elapsed().as_secs_f64(),
        decide_s: 0.0,
    })
}

struct Sampled {
    dataset: String,
    data: LabeledDataset,
    centered: WeightedGraph,
    raw: WeightedGraph,
    sample_s: f64,
}

fn finish(config: &Config, s: &Sampled, alpha: f64, eta: f64, seed: u64) -> Result<Vec<ResultRow>> {
    config
        .method
        .runs()
        .iter()
        .map(|&method| {
            let timed = match method {
                Method::Lp => run_lp(&s.raw, &s.data, config)?,
                _ => run_nblw(&s.centered, &s.data, config.kmax, seed)?,
            };
            let acc_unlabeled = if s.data.revealed_count() < s.data.n() {
                class_accuracy(&timed.assignments, &s.data, true)?
            } else {
                f64::NAN
            };
            Ok(ResultRow {
                dataset: s.dataset.clone(),
                method: method.name().into(),
                n: s.data.n(),
                q: s.data.q,
                alpha,
                eta,
                kmax: config.kmax,
                seed,
                acc_all: class_accuracy(&timed.assignments, &s.data, false)?,
                acc_unlabeled,
                se: None,
                phase_sample_s: s.sample_s,
                phase_iter_s: timed.iter_s,
                phase_decide_s: timed.decide_s,
            })
        })
        .collect()
}

fn model_tag(config: &Config) -> String {
    let h = fnv1a(FNV_OFFSET, format!("{}|{}", config.p_in, config.p_out).as_bytes());
    format!("model@{h:016x}")
}

/// One synthetic repetition; a pure function of `(config laws, n, q, α, η,
/// seed)` apart from the timings.
pub fn synth_run(config: &Config, n: usize, alpha: f64, eta: f64, seed: u64) -> Result<Vec<ResultRow>> {
    let (p_in, p_out) = config.laws()?;
    let spec = ModelSpec {
        n,
        q: config.q,
        alpha,
        eta,
        p_in,
        p_out,
        seed,
    };
    let t = Instant::now();
    let inst = make_instance(&spec)?;
    let centered = inst.centered_graph()?;
    let raw = if config.method == Method::Nblw {
        WeightedGraph::empty(n)
    } else {
        inst.raw_graph()?
    };
    let sampled = Sampled {
        dataset: model_tag(config),
        data: inst.data,
        centered,
        raw,
        sample_s: t.elapsed().as_secs_f64(),
    };
    finish(config, &sampled, alpha, eta, seed)
}

/// One repetition on a point set: revealed labels and pairs drawn from
/// `seed`, then the configured methods.
pub fn cluster_run(config: &Config, src: &PointSource, alpha: f64, eta: f64, seed: u64) -> Result<Vec<ResultRow>> {
    let n = src.points.len();
    let t = Instant::now();
    let revealed = draw_revealed_set(n, eta, &mut stream_rng(seed, streams::REVEALED));
    let data = LabeledDataset::new(src.labels.clone(), revealed, src.q)?;
    let sub = subsample_and_weight(&src.points, alpha, config.metric, &mut stream_rng(seed, streams::PAIRS))?;
    let raw = if config.method == Method::Nblw || sub.pairs.is_empty() {
        WeightedGraph::empty(n)
    } else {
        sub.raw_graph()?
    };
    let sampled = Sampled {
        dataset: src.tag(),
        data,
        centered: sub.graph,
        raw,
        sample_s: t.elapsed().as_secs_f64(),
    };
    finish(config, &sampled, alpha, eta, seed)
}

fn grid(config: &Config) -> Vec<(usize, f64, f64, u64)> {
    let mut tasks = Vec::new();
    for &alpha in &config.alpha {
        for &eta in &config.eta {
            let point = tasks.len() / config.reps.max(1);
            let mut seeds: Vec<u64> = (0..config.reps).map(|r| config.rep_seed(r)).collect();
            seeds.sort_unstable();
            tasks.extend(seeds.into_iter().map(|s| (point, alpha, eta, s)));
        }
    }
    tasks
}

fn run_grid(
    config: &Config,
    run: impl Fn(f64, f64, u64) -> Result<Vec<ResultRow>> + Sync,
) -> Result<Vec<ResultRow>> {
    let results: Vec<Result<Vec<ResultRow>>> = grid(config)
        .par_iter()
        .map(|&(_, alpha, eta, seed)| run(alpha, eta, seed))
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Synthetic sweep: one row per `(α, η, seed, method)`, grid order, seeds
/// ascending within a grid point.
pub fn cmd_synth(config: &Config) -> Result<Vec<ResultRow>> {
    config.validate()?;
    if config.dataset != DatasetKind::Model {
        return Err(Error::InvalidParameter("synth runs on the model dataset".into()));
    }
    run_grid(config, |alpha, eta, seed| synth_run(config, config.n, alpha, eta, seed))
}

/// Per-repetition rows of a dataset sweep.
pub fn cluster_runs(config: &Config) -> Result<Vec<ResultRow>> {
    config.validate()?;
    match config.dataset {
        DatasetKind::Model => {
            run_grid(config, |alpha, eta, seed| synth_run(config, config.n, alpha, eta, seed))
        }
        _ => {
            let src = load_points(config, config.n)?;
            run_grid(config, |alpha, eta, seed| cluster_run(config, &src, alpha, eta, seed))
        }
    }
}

/// Dataset sweep: mean accuracy per `(α, η, method)` with its standard error
/// over repetitions (absent for a single repetition). The seed column holds
/// the master seed and the phase columns mean times.
pub fn cmd_cluster(config: &Config) -> Result<Vec<ResultRow>> {
    Ok(aggregate(&cluster_runs(config)?, config.seed))
}

/// Averages rows sharing `(dataset, method, α, η)`, keeping first-seen order.
pub fn aggregate(rows: &[ResultRow], master_seed: u64) -> Vec<ResultRow> {
    let key = |r: &ResultRow| (r.dataset.clone(), r.method.clone(), r.alpha.to_bits(), r.eta.to_bits());
    let mut keys = Vec::new();
    for r in rows {
        if !keys.contains(&key(r)) {
            keys.push(key(r));
        }
    }
    keys.into_iter()
        .map(|k| {
            let group: Vec<&ResultRow> = rows.iter().filter(|r| key(r) == k).collect();
            let m = group.len() as f64;
            let mean = |f: &dyn Fn(&ResultRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / m;
            let acc = mean(&|r| r.acc_unlabeled);
            let se = (group.len() > 1).then(|| {
                let var = group
                    .iter()
                    .map(|r| (r.acc_unlabeled - acc).powi(2))
                    .sum::<f64>()
                    / (m - 1.0);
                (var / m).sqrt()
            });
            ResultRow {
                seed: master_seed,
                acc_all: mean(&|r| r.acc_all),
                acc_unlabeled: acc,
                se,
                phase_sample_s: mean(&|r| r.phase_sample_s),
                phase_iter_s: mean(&|r| r.phase_iter_s),
                phase_decide_s: mean(&|r| r.phase_decide_s),
                ..group[0].clone()
            }
        })
        .collect()
}

/// Timing sweep over node counts (`n` plus `bench_n`), α and η, run
/// sequentially so phases are not contended. NBLW only unless the method
/// says otherwise.
pub fn cmd_bench(config: &Config) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut sizes = vec![config.n];
    sizes.extend(&config.bench_n);
    sizes.dedup();
    let mut rows = Vec::new();
    let fixed_data = matches!(config.dataset, DatasetKind::Mnist | DatasetKind::Csv);
    let loaded = if fixed_data {
        Some(load_points(config, 0)?)
    } else {
        None
    };
    for (si, &n) in sizes.iter().enumerate() {
        if fixed_data && si > 0 {
            break;
        }
        let generated = match config.dataset {
            DatasetKind::Blobs => Some(load_points(config, n)?),
            _ => None,
        };
        let src = loaded.as_ref().or(generated.as_ref());
        for &(_, alpha, eta, seed) in &grid(config) {
            rows.extend(match src {
                Some(src) => cluster_run(config, src, alpha, eta, seed)?,
                None => synth_run(config, n, alpha, eta, seed)?,
            });
        }
    }
    Ok(rows)
}

/// Least-squares line `y = a + b x`; returns `(b, a, R²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Flat theory record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub p_in: String,
    pub p_out: String,
    pub weighting: WeightingKind,
    pub alpha: f64,
    pub eta: f64,
    pub kmax: usize,
    pub delta: f64,
    pub sigma2: f64,
    pub tau: f64,
    pub mean_w: f64,
    pub r_final: f64,
    pub q_final: f64,
    pub variance_bound: f64,
    pub tail_bound: Option<f64>,
    pub tail_informative: bool,
    pub tail_hypotheses: bool,
    pub r_fixed_point: f64,
    pub q_fixed_point: f64,
    pub sufficient_alpha: Option<f64>,
    pub random_guess_error: f64,
    pub de_error: Option<f64>,
    pub de_se: Option<f64>,
    pub variance_pass: Option<bool>,
    pub tail_pass: Option<bool>,
    /// `;`-separated `r_0 … r_{k+1}`.
    pub r_traj: String,
    pub q_traj: String,
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";")
}

/// Bound quantities per `(α, η)`, with a density-evolution run and bound
/// check when `de_population > 0`.
pub fn cmd_theory(config: &Config) -> Result<Vec<TheoryRow>> {
    config.validate()?;
    let (p_in, p_out) = config.laws()?;
    let w = config.weighting(&p_in, &p_out)?;
    let mut rng = stream_rng(config.seed, streams::ALGORITHM);
    let base = weight_stats(&p_in, &p_out, &w, config.alpha[0], &mut rng)?;
    let mut rows = Vec::new();
    for &alpha in &config.alpha {
        let stats = base.with_alpha(alpha);
        for &eta in &config.eta {
            let report = TheoryReport::new(&stats, eta, config.kmax);
            let de = if config.de_population > 0 {
                let spec = ModelSpec {
                    n: config.n,
                    q: 2,
                    alpha,
                    eta,
                    p_in: p_in.clone(),
                    p_out: p_out.clone(),
                    seed: config.seed,
                };
                let cfg = DeConfig::new(config.kmax, config.de_population);
                Some(density_evolution_mc(&spec, &w, &cfg, &mut rng)?)
            } else {
                None
            };
            let check = de
                .as_ref()
                .map(|d| cantelli_bound_check(&report, d.error, d.error_se));
            rows.push(TheoryRow {
                p_in: config.p_in.clone(),
                p_out: config.p_out.clone(),
                weighting: config.weighting,
                alpha,
                eta,
                kmax: config.kmax,
                delta: stats.delta,
                sigma2: stats.sigma2,
                tau: stats.tau,
                mean_w: stats.mean_w,
                r_final: *report.r_traj.last().unwrap(),
                q_final: *report.q_traj.last().unwrap(),
                variance_bound: report.variance_bound,
                tail_bound: report.tail_bound,
                tail_informative: report.tail_informative,
                tail_hypotheses: report.tail_applies(),
                r_fixed_point: report.r_fixed_point,
                q_fixed_point: report.q_fixed_point,
                sufficient_alpha: report.sufficient_alpha,
                random_guess_error: report.random_guess_error,
                de_error: de.as_ref().map(|d| d.error),
                de_se: de.as_ref().map(|d| d.error_se),
                variance_pass: check.as_ref().map(|c| c.variance_pass),
                tail_pass: check.and_then(|c| c.tail_pass),
                r_traj: join(&report.r_traj),
                q_traj: join(&report.q_traj),
            });
        }
    }
    Ok(rows)
}

/// Writes rows as CSV, or as a JSON array when `out` ends in `.json`;
/// standard output when `out` is `None`.
pub fn write_rows<T: Serialize>(rows: &[T], out: Option<&Path>) -> Result<()> {
    let json = out.is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    if json {
        let mut sink = sink;
        serde_json::to_writer_pretty(&mut sink, rows)?;
        writeln!(sink)?;
        sink.flush()?;
    } else {
        let mut w = csv::Writer::from_writer(sink);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(())
}
