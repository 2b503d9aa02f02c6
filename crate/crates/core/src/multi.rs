//! Non-backtracking local walk for `q` clusters: deflated power iteration
//! followed by k-means on the pooled embedding.

use rand::Rng;

use crate::binary::{check_nodes, rademacher};
use crate::error::{Error, Result};
use crate::graph::{max_abs, MessageState, WeightedGraph};
use crate::model::{LabeledDataset, SimRng};

/// Relative guard on deflation denominators.
pub const DEFLATION_GUARD: f64 = 1e-12;
/// A stage is also rejected when `‖B_c v‖` is this small relative to the
/// terms it was computed from, i.e. when it is rounding residue.
pub const CANCELLATION_GUARD: f64 = 1e-10;

/// One extracted direction `v` with `z = B_c v`, `u = B_cᵀ v` and
/// `denom = v·z`, so that `B_{c+1} x = B_c x − z (u·x) / denom`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeflationStage {
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub denom: f64,
}

/// Sequence of rank-one corrections of the non-backtracking operator.
#[derive(Debug, Clone)]
pub struct DeflationStack<'g> {
    graph: &'g WeightedGraph,
    stages: Vec<DeflationStage>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl<'g> DeflationStack<'g> {
    pub fn new(graph: &'g WeightedGraph) -> Self {
        Self {
            graph,
            stages: Vec::new(),
        }
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn stages(&self) -> &[DeflationStage] {
        &self.stages
    }

    fn check(&self, depth: usize, len: usize) -> Result<()> {
        if depth > self.stages.len() {
            return Err(Error::InvalidParameter(format!(
                "depth {depth} exceeds {} stored stages",
                self.stages.len()
            )));
        }
        if len != self.graph.num_half_edges() {
            return Err(Error::LengthMismatch {
                expected: self.graph.num_half_edges(),
                found: len,
            });
        }
        Ok(())
    }

    /// `B_{depth+1} x`; depth 0 is the plain operator.
    ///
    /// Unrolling the recursion gives `B x − Σ_{c<depth} z_c (u_c·x) / denom_c`
    /// since every level is applied to the same `x`.
    pub fn apply(&self, depth: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check(depth, x.len())?;
        let mut out = vec![0.0; x.len()];
        self.graph.nb_mul(x, &mut out);
        for stage in &self.stages[..depth] {
            let coef = dot(&stage.u, x) / stage.denom;
            for (o, z) in out.iter_mut().zip(&stage.z) {
                *o -= coef * z;
            }
        }
        Ok(out)
    }

    /// `B_{depth+1}ᵀ x`.
    pub fn apply_transpose(&self, depth: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check(depth, x.len())?;
        let mut out = vec![0.0; x.len()];
        self.graph.nb_mul_transpose(x, &mut out);
        for stage in &self.stages[..depth] {
            let coef = dot(&stage.z, x) / stage.denom;
            for (o, u) in out.iter_mut().zip(&stage.u) {
                *o -= coef * u;
            }
        }
        Ok(out)
    }

    /// Deflates the current top operator along `v`.
    pub fn push(&mut self, v: Vec<f64>) -> Result<()> {
        let depth = self.depth();
        let z = self.apply(depth, &v)?;
        let u = self.apply_transpose(depth, &v)?;
        let denom = dot(&v, &z);
        let mut plain = vec![0.0; v.len()];
        self.graph.nb_mul(&v, &mut plain);
        let scale = norm(&plain)
            + self
                .stages
                .iter()
                .map(|s| (dot(&s.u, &v) / s.denom).abs() * norm(&s.z))
                .sum::<f64>();
        let residue = !(norm(&z) > CANCELLATION_GUARD * scale);
        if residue || !(denom.abs() > DEFLATION_GUARD * norm(&v) * norm(&z)) {
            return Err(Error::DegenerateDeflation {
                stage: depth,
                denom,
            });
        }
        self.stages.push(DeflationStage { v, z, u, denom });
        Ok(())
    }
}

/// Free-function form of [`DeflationStack::apply`].
pub fn apply_deflated(stack: &DeflationStack<'_>, depth: usize, x: &[f64]) -> Result<Vec<f64>> {
    stack.apply(depth, x)
}

/// One-vs-rest initialization for class `c`: `+1` out of revealed members of
/// `c`, `−1` out of other revealed nodes, uniform `±1` elsewhere.
pub fn init_messages_class<R: Rng + ?Sized>(
    g: &WeightedGraph,
    data: &LabeledDataset,
    c: usize,
    rng: &mut R,
) -> Result<MessageState> {
    if c >= data.q {
        return Err(Error::ClassOutOfRange { class: c, q: data.q });
    }
    check_nodes(g, data)?;
    let mut values = Vec::with_capacity(g.num_half_edges());
    for i in 0..g.n() {
        for _ in g.out_edges(i) {
            values.push(match (data.revealed[i], data.truth[i] == c) {
                (true, true) => 1.0,
                (true, false) => -1.0,
                (false, _) => rademacher(rng),
            });
        }
    }
    Ok(MessageState::new(values))
}

/// Row-major `n × d` embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub n: usize,
    pub d: usize,
    pub data: Vec<f64>,
}

impl Embedding {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            data: vec![0.0; n * d],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter("ragged embedding rows".into()));
        }
        Ok(Self {
            n: rows.len(),
            d,
            data: rows.concat(),
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.d + c]).collect()
    }

    fn set_column(&mut self, c: usize, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self.data[i * self.d + c] = *v;
        }
    }
}

/// Result of a `q`-cluster run.
#[derive(Debug, Clone)]
pub struct MultiOutcome {
    /// Cluster index in `0..q` per node. When labels were revealed, clusters
    /// are renamed to the classes they best agree with on revealed nodes.
    pub assignments: Vec<usize>,
    /// Column `c` holds the pooled messages of stage `c`.
    pub embedding: Embedding,
    /// `vᵀ B_c v / vᵀv` of each stage's final messages under the operator
    /// that stage iterated.
    pub rayleigh: Vec<f64>,
    pub kmeans: KMeansResult,
}

/// Runs `q − 1` deflated power iterations from one-vs-rest initial messages,
/// pools each into an embedding column and clusters the rows with k-means.
pub fn run_multiclass(
    g: &WeightedGraph,
    data: &LabeledDataset,
    q: usize,
    k_max: usize,
    rng: &mut SimRng,
) -> Result<MultiOutcome> {
    let (embedding, rayleigh) = deflated_embedding(g, data, q, k_max, rng)?;
    let (assignments, kmeans) = cluster_embedding(&embedding, data, q, rng)?;
    Ok(MultiOutcome {
        assignments,
        embedding,
        rayleigh,
        kmeans,
    })
}

/// The iteration half of [`run_multiclass`]: the `n × (q − 1)` embedding and
/// each stage's Rayleigh quotient.
pub fn deflated_embedding(
    g: &WeightedGraph,
    data: &LabeledDataset,
    q: usize,
    k_max: usize,
    rng: &mut SimRng,
) -> Result<(Embedding, Vec<f64>)> {
    if q < 2 || data.q != q {
        return Err(Error::InvalidParameter(format!(
            "q = {q} does not match labels with q = {}",
            data.q
        )));
    }
    check_nodes(g, data)?;
    let mut stack = DeflationStack::new(g);
    let mut embedding = Embedding::zeros(g.n(), q - 1);
    let mut rayleigh = Vec::with_capacity(q - 1);
    let mut pooled = vec![0.0; g.n()];
    for c in 0..q - 1 {
        let depth = stack.depth();
        let mut v = init_messages_class(g, data, c, rng)?.values;
        for _ in 0..k_max {
            v = stack.apply(depth, &v)?;
            let peak = max_abs(&v);
            if peak > 0.0 {
                v.iter_mut().for_each(|x| *x /= peak);
            }
        }
        g.pool_into(&v, &mut pooled);
        embedding.set_column(c, &pooled);
        let vv = dot(&v, &v);
        rayleigh.push(if vv > 0.0 {
            dot(&v, &stack.apply(depth, &v)?) / vv
        } else {
            0.0
        });
        if c + 2 < q {
            stack.push(v)?;
        }
    }
    Ok((embedding, rayleigh))
}

/// The decision half of [`run_multiclass`]: k-means on the rows, then
/// clusters renamed after the revealed labels.
pub fn cluster_embedding(
    embedding: &Embedding,
    data: &LabeledDataset,
    q: usize,
    rng: &mut SimRng,
) -> Result<(Vec<usize>, KMeansResult)> {
    let km = kmeans(embedding, q, rng)?;
    if km.empty_clusters > 0 {
        return Err(Error::EmptyClusters {
            empty: km.empty_clusters,
            q,
        });
    }
    Ok((name_clusters(&km.assignments, data), km))
}

/// Renames clusters to classes by maximizing agreement on revealed nodes.
fn name_clusters(clusters: &[usize], data: &LabeledDataset) -> Vec<usize> {
    if data.revealed_count() == 0 {
        return clusters.to_vec();
    }
    let (est, truth): (Vec<usize>, Vec<usize>) = clusters
        .iter()
        .zip(&data.truth)
        .zip(&data.revealed)
        .filter(|(_, &r)| r)
        .map(|((&c, &t), _)| (c, t))
        .unzip();
    let (_, perm) = best_permutation(&est, &truth, data.q);
    clusters.iter().map(|&c| perm[c]).collect()
}

/// Lloyd iterations per restart.
pub const KMEANS_MAX_ITER: usize = 100;
pub const KMEANS_RESTARTS: usize = 10;
/// Stop when the within-cluster sum of squares improves by less than this
/// fraction.
pub const KMEANS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squares.
    pub wcss: f64,
    pub empty_clusters: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(k, c)| (k, sq_dist(x, c)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn plus_plus_seeds<R: Rng + ?Sized>(points: &Embedding, q: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.n;
    let mut centers = vec![points.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), &centers[0])).collect();
    while centers.len() < q {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), &c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd(points: &Embedding, mut centers: Vec<Vec<f64>>) -> KMeansResult {
    let (n, d, q) = (points.n, points.d, centers.len());
    let mut assignments = vec![0usize; n];
    let mut previous = f64::INFINITY;
    let mut wcss = f64::INFINITY;
    for _ in 0..KMEANS_MAX_ITER {
        wcss = 0.0;
        for (i, slot) in assignments.iter_mut().enumerate() {
            let (k, dist) = nearest(points.row(i), &centers);
            *slot = k;
            wcss += dist;
        }
        if previous.is_finite() && previous - wcss <= KMEANS_TOL * previous {
            break;
        }
        previous = wcss;

        let mut sums = vec![vec![0.0; d]; q];
        let mut counts = vec![0usize; q];
        for (i, &k) in assignments.iter().enumerate() {
            counts[k] += 1;
            for (s, x) in sums[k].iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        for k in 0..q {
            if counts[k] > 0 {
                centers[k] = sums[k].iter().map(|s| s / counts[k] as f64).collect();
            } else {
                // move an empty center onto the worst-served point, if any is off-center
                let (far, dist) = (0..n)
                    .map(|i| (i, sq_dist(points.row(i), &centers[assignments[i]])))
                    .fold((0, 0.0), |b, c| if c.1 > b.1 { c } else { b });
                if dist > 0.0 {
                    centers[k] = points.row(far).to_vec();
                    assignments[far] = k;
                }
            }
        }
    }
    let mut counts = vec![0usize; q];
    for &k in &assignments {
        counts[k] += 1;
    }
    KMeansResult {
        assignments,
        centers,
        wcss,
        empty_clusters: counts.iter().filter(|&&c| c == 0).count(),
    }
}

/// k-means++ seeding followed by Lloyd iterations, best of
/// [`KMEANS_RESTARTS`] restarts by within-cluster sum of squares. Empty
/// clusters that cannot be repaired are reported in the result.
pub fn kmeans<R: Rng + ?Sized>(points: &Embedding, q: usize, rng: &mut R) -> Result<KMeansResult> {
    if points.n == 0 || points.d == 0 {
        return Err(Error::EmptyInput("k-means points"));
    }
    if q == 0 || q > points.n {
        return Err(Error::InvalidParameter(format!(
            "cannot form {q} clusters from {} points",
            points.n
        )));
    }
    let mut best: Option<KMeansResult> = None;
    for _ in 0..KMEANS_RESTARTS {
        let run = lloyd(points, plus_plus_seeds(points, q, rng));
        let better = match &best {
            None => true,
            Some(b) => (run.empty_clusters, run.wcss) < (b.empty_clusters, b.wcss),
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Largest agreement between `est` and `truth` over relabelings of `est`.
/// Returns the accuracy and the permutation (`perm[est_label] = truth_label`).
pub fn match_labels(est: &[usize], truth: &[usize]) -> Result<(f64, Vec<usize>)> {
    if est.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: est.len(),
            found: truth.len(),
        });
    }
    if est.is_empty() {
        return Err(Error::EmptyInput("labels"));
    }
    let q = est.iter().chain(truth).max().unwrap() + 1;
    let (agree, perm) = best_permutation(est, truth, q);
    Ok((agree as f64 / est.len() as f64, perm))
}

/// Exhaustive search up to six labels, Hungarian algorithm above.
fn best_permutation(est: &[usize], truth: &[usize], q: usize) -> (usize, Vec<usize>) {
    let mut confusion = vec![vec![0usize; q]; q];
    for (&e, &t) in est.iter().zip(truth) {
        confusion[e][t] += 1;
    }
    if q <= 6 {
        let mut perm: Vec<usize> = (0..q).collect();
        let mut best = (0usize, perm.clone());
        permute(&mut perm, 0, &confusion, &mut best);
        best
    } else {
        let perm = hungarian_max(&confusion);
        let agree = perm.iter().enumerate().map(|(e, &t)| confusion[e][t]).sum();
        (agree, perm)
    }
}

fn permute(perm: &mut Vec<usize>, k: usize, confusion: &[Vec<usize>], best: &mut (usize, Vec<usize>)) {
    if k == perm.len() {
        let score = perm.iter().enumerate().map(|(e, &t)| confusion[e][t]).sum();
        if score > best.0 {
            *best = (score, perm.clone());
        }
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, confusion, best);
        perm.swap(k, i);
    }
}

/// Maximum-weight perfect matching on a square matrix (shortest augmenting
/// path form of the Hungarian algorithm, on negated costs).
fn hungarian_max(weights: &[Vec<usize>]) -> Vec<usize> {
    let n = weights.len();
    let cost = |i: usize, j: usize| -(weights[i][j] as i64);
    let inf = i64::MAX / 4;
    let (mut u, mut v) = (vec![0i64; n + 1], vec![0i64; n + 1]);
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}
