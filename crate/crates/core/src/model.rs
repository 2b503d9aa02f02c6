//! Generators for the semi-supervised labeled stochastic block model and for
//! Gaussian blob datasets.
//!
//! All generators are deterministic functions of a 64-bit seed. An instance
//! draws its four ingredients from independent ChaCha streams of the same
//! seed (see [`streams`]), and repetitions derive their seeds from a master
//! seed with [`derive_seed`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{center_weights, WeightedGraph};
use crate::ingest::Points;

/// Random generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Stream identifiers used by [`make_instance`].
pub mod streams {
    pub const LABELS: u64 = 0;
    pub const REVEALED: u64 = 1;
    pub const PAIRS: u64 = 2;
    pub const SIMILARITIES: u64 = 3;
    /// Free for the caller, e.g. message initialization.
    pub const ALGORITHM: u64 = 4;
}

/// Generator on stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of repetition `index` under master seed `master` (splitmix64 of the
/// pair). Distinct indices give unrelated seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Tail mass left outside [`Similarity::support`] is below 1e-8.
const GAUSSIAN_WINDOW: f64 = 6.0;

/// Law of a pairwise similarity, `p_in` or `p_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Similarity {
    Gaussian {
        mean: f64,
        std: f64,
    },
    PointMass {
        value: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// `weight · first + (1 − weight) · second`.
    Mixture {
        weight: f64,
        first: Box<Similarity>,
        second: Box<Similarity>,
    },
}

impl Similarity {
    pub fn gaussian(mean: f64, std: f64) -> Self {
        Self::Gaussian { mean, std }
    }

    pub fn point(value: f64) -> Self {
        Self::PointMass { value }
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        Self::Uniform { low, high }
    }

    pub fn mixture(weight: f64, first: Similarity, second: Similarity) -> Self {
        Self::Mixture {
            weight,
            first: Box::new(first),
            second: Box::new(second),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            Self::Gaussian { mean, std } => {
                if !mean.is_finite() || !(std.is_finite() && *std > 0.0) {
                    return bad(format!("gaussian({mean}, {std})"));
                }
            }
            Self::PointMass { value } => {
                if !value.is_finite() {
                    return bad(format!("point({value})"));
                }
            }
            Self::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return bad(format!("uniform({low}, {high})"));
                }
            }
            Self::Mixture {
                weight,
                first,
                second,
            } => {
                if !(0.0..=1.0).contains(weight) {
                    return bad(format!("mixture weight {weight}"));
                }
                first.validate()?;
                second.validate()?;
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian { mean, std } => mean + std * rng.sample::<f64, _>(rand_distr::StandardNormal),
            Self::PointMass { value } => *value,
            Self::Uniform { low, high } => rng.random_range(*low..*high),
            Self::Mixture {
                weight,
                first,
                second,
            } => {
                if rng.random::<f64>() < *weight {
                    first.sample(rng)
                } else {
                    second.sample(rng)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Gaussian { mean, .. } => *mean,
            Self::PointMass { value } => *value,
            Self::Uniform { low, high } => 0.5 * (low + high),
            Self::Mixture {
                weight,
                first,
                second,
            } => weight * first.mean() + (1.0 - weight) * second.mean(),
        }
    }

    /// `E[s²]`.
    pub fn second_moment(&self) -> f64 {
        match self {
            Self::Gaussian { mean, std } => mean * mean + std * std,
            Self::PointMass { value } => value * value,
            Self::Uniform { low, high } => (low * low + low * high + high * high) / 3.0,
            Self::Mixture {
                weight,
                first,
                second,
            } => weight * first.second_moment() + (1.0 - weight) * second.second_moment(),
        }
    }

    /// Density at `s`, or `None` when the law has an atom.
    pub fn density(&self, s: f64) -> Option<f64> {
        match self {
            Self::Gaussian { mean, std } => {
                let z = (s - mean) / std;
                Some((-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt()))
            }
            Self::PointMass { .. } => None,
            Self::Uniform { low, high } => Some(if s >= *low && s <= *high {
                1.0 / (high - low)
            } else {
                0.0
            }),
            Self::Mixture {
                weight,
                first,
                second,
            } => Some(weight * first.density(s)? + (1.0 - weight) * second.density(s)?),
        }
    }

    pub fn has_density(&self) -> bool {
        match self {
            Self::PointMass { .. } => false,
            Self::Mixture { first, second, .. } => first.has_density() && second.has_density(),
            _ => true,
        }
    }

    /// Interval holding all but at most 1e-8 of the mass.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Gaussian { mean, std } => {
                (mean - GAUSSIAN_WINDOW * std, mean + GAUSSIAN_WINDOW * std)
            }
            Self::PointMass { value } => (*value, *value),
            Self::Uniform { low, high } => (*low, *high),
            Self::Mixture { first, second, .. } => {
                let (a, b) = first.support();
                let (c, d) = second.support();
                (a.min(c), b.max(d))
            }
        }
    }

    /// Points where the density may be discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Uniform { low, high } => vec![*low, *high],
            Self::PointMass { value } => vec![*value],
            Self::Mixture { first, second, .. } => {
                let mut b = first.breakpoints();
                b.extend(second.breakpoints());
                b
            }
            Self::Gaussian { .. } => Vec::new(),
        }
    }
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { mean, std } => write!(f, "normal:{mean},{std}"),
            Self::PointMass { value } => write!(f, "point:{value}"),
            Self::Uniform { low, high } => write!(f, "uniform:{low},{high}"),
            Self::Mixture {
                weight,
                first,
                second,
            } => write!(f, "mix:{weight}/{first}/{second}"),
        }
    }
}

/// Parses `normal:MEAN,STD`, `point:VALUE`, `uniform:LOW,HIGH` and
/// `mix:WEIGHT/FIRST/SECOND` (components must not themselves be mixtures).
impl FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse distribution `{s}`"));
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let nums = |rest: &str| -> Result<Vec<f64>> {
            rest.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
                .collect()
        };
        let dist = match kind {
            "normal" | "gaussian" => match nums(rest)?[..] {
                [mean, std] => Self::gaussian(mean, std),
                _ => return Err(bad()),
            },
            "point" => match nums(rest)?[..] {
                [value] => Self::point(value),
                _ => return Err(bad()),
            },
            "uniform" => match nums(rest)?[..] {
                [low, high] => Self::uniform(low, high),
                _ => return Err(bad()),
            },
            "mix" => {
                let parts: Vec<&str> = rest.split('/').collect();
                if parts.len() != 3 {
                    return Err(bad());
                }
                let weight = parts[0].trim().parse().map_err(|_| bad())?;
                Self::mixture(weight, parts[1].parse()?, parts[2].parse()?)
            }
            _ => return Err(bad()),
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// Map from raw similarity to edge weight.
#[derive(Clone)]
pub enum Weighting {
    /// `w(s) = scale · s + shift`.
    Affine { scale: f64, shift: f64 },
    /// `w*(s) = (p_in(s) − p_out(s)) / (p_in(s) + p_out(s))`, zero where both
    /// densities vanish.
    Optimal {
        p_in: Similarity,
        p_out: Similarity,
    },
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Affine { scale, shift } => write!(f, "Affine({scale}·s + {shift})"),
            Self::Optimal { p_in, p_out } => write!(f, "Optimal({p_in} vs {p_out})"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Weighting {
    pub fn identity() -> Self {
        Self::Affine {
            scale: 1.0,
            shift: 0.0,
        }
    }

    /// `w(s) = s − E[s]` with `E[s]` taken under equal-size clusters.
    pub fn centered(p_in: &Similarity, p_out: &Similarity) -> Self {
        Self::Affine {
            scale: 1.0,
            shift: -0.5 * (p_in.mean() + p_out.mean()),
        }
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn apply(&self, s: f64) -> f64 {
        match self {
            Self::Affine { scale, shift } => scale * s + shift,
            Self::Optimal { p_in, p_out } => {
                let a = p_in.density(s).unwrap_or(0.0);
                let b = p_out.density(s).unwrap_or(0.0);
                if a + b > 0.0 {
                    (a - b) / (a + b)
                } else {
                    0.0
                }
            }
            Self::Custom { f, .. } => f(s),
        }
    }

    /// `(scale, shift)` when the weighting is affine.
    pub fn affine(&self) -> Option<(f64, f64)> {
        match self {
            Self::Affine { scale, shift } => Some((*scale, *shift)),
            _ => None,
        }
    }
}

/// Parameters of the semi-supervised labeled block model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n: usize,
    pub q: usize,
    /// Mean degree of the measurement graph.
    pub alpha: f64,
    /// Fraction of revealed labels.
    pub eta: f64,
    pub p_in: Similarity,
    pub p_out: Similarity,
    pub seed: u64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if self.q < 2 {
            return Err(Error::InvalidParameter(format!("q = {} < 2", self.q)));
        }
        if !(self.alpha > 0.0) || self.alpha >= self.n as f64 {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} outside (0, n)",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidParameter(format!("eta = {} outside [0, 1]", self.eta)));
        }
        self.p_in.validate()?;
        self.p_out.validate()
    }
}

/// Ground truth plus the revealed subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    /// Class index in `0..q` per item.
    pub truth: Vec<usize>,
    pub revealed: Vec<bool>,
    pub q: usize,
}

impl LabeledDataset {
    pub fn new(truth: Vec<usize>, revealed: Vec<bool>, q: usize) -> Result<Self> {
        if truth.len() != revealed.len() {
            return Err(Error::LengthMismatch {
                expected: truth.len(),
                found: revealed.len(),
            });
        }
        if let Some(&class) = truth.iter().find(|&&c| c >= q) {
            return Err(Error::ClassOutOfRange { class, q });
        }
        Ok(Self { truth, revealed, q })
    }

    pub fn n(&self) -> usize {
        self.truth.len()
    }

    pub fn revealed_count(&self) -> usize {
        self.revealed.iter().filter(|&&r| r).count()
    }

    /// `+1` for class 0 and `−1` for class 1.
    pub fn spin(&self, i: usize) -> i8 {
        class_to_spin(self.truth[i])
    }

    pub fn spins(&self) -> Vec<i8> {
        self.truth.iter().map(|&c| class_to_spin(c)).collect()
    }
}

pub fn class_to_spin(class: usize) -> i8 {
    if class == 0 {
        1
    } else {
        -1
    }
}

pub fn spin_to_class(spin: i8) -> usize {
    if spin >= 0 {
        0
    } else {
        1
    }
}

/// I.i.d. uniform class labels.
pub fn draw_labels<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Vec<usize> {
    (0..spec.n).map(|_| rng.random_range(0..spec.q)).collect()
}

/// Number of revealed items, `⌊ηn⌋`. A 1e-9 slack absorbs representation
/// error in products like `0.29 · 100`.
pub fn revealed_count(n: usize, eta: f64) -> usize {
    ((eta * n as f64 + 1e-9).floor() as usize).min(n)
}

/// Mask with exactly `⌊ηn⌋` entries set, chosen without replacement.
pub fn draw_revealed_set<R: Rng + ?Sized>(n: usize, eta: f64, rng: &mut R) -> Vec<bool> {
    let mut mask = vec![false; n];
    for i in index::sample(rng, n, revealed_count(n, eta)) {
        mask[i] = true;
    }
    mask
}

/// Erdős–Rényi pairs `i < j`, each present independently with probability
/// `α/n`. Walks the lexicographic pair order with geometric jumps, so the
/// expected cost is proportional to the number of pairs drawn.
pub fn draw_er_pairs<R: Rng + ?Sized>(n: usize, alpha: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let p = alpha / n as f64;
    if n < 2 || !(p >= 1e-12) {
        return Vec::new();
    }
    let p = p.min(1.0);
    let mut pairs = Vec::with_capacity((0.5 * alpha * n as f64 * 1.1) as usize + 16);
    let geometric = Geometric::new(p).expect("probability in (0, 1]");
    let n64 = n as u64;
    // (i, j) is the position just before the next candidate.
    let mut i = 0u64;
    let mut j = 0u64;
    loop {
        let skip = geometric.sample(rng);
        let Some(mut next) = j.checked_add(skip).and_then(|x| x.checked_add(1)) else {
            break;
        };
        while next >= n64 {
            let overflow = next - n64;
            i += 1;
            if i + 1 >= n64 {
                return pairs;
            }
            next = i + 1 + overflow;
        }
        j = next;
        pairs.push((i as usize, j as usize));
    }
    pairs
}

/// One similarity per pair from `p_in` (same class) or `p_out`.
pub fn draw_similarities<R: Rng + ?Sized>(
    pairs: &[(usize, usize)],
    truth: &[usize],
    p_in: &Similarity,
    p_out: &Similarity,
    rng: &mut R,
) -> Result<Vec<f64>> {
    p_in.validate()?;
    p_out.validate()?;
    pairs
        .iter()
        .map(|&(i, j)| {
            let (a, b) = (
                truth.get(i).ok_or(Error::EndpointOutOfRange { node: i, n: truth.len() })?,
                truth.get(j).ok_or(Error::EndpointOutOfRange { node: j, n: truth.len() })?,
            );
            Ok(if a == b { p_in.sample(rng) } else { p_out.sample(rng) })
        })
        .collect()
}

/// A sampled model instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub spec: ModelSpec,
    pub pairs: Vec<(usize, usize)>,
    pub similarities: Vec<f64>,
    pub data: LabeledDataset,
}

impl Instance {
    /// Graph weighted by centered similarities, `w = s − s̄`.
    pub fn centered_graph(&self) -> Result<WeightedGraph> {
        if self.pairs.is_empty() {
            return Ok(WeightedGraph::empty(self.spec.n));
        }
        WeightedGraph::build(self.spec.n, &self.pairs, &center_weights(&self.similarities)?)
    }

    /// Graph weighted by the raw similarities.
    pub fn raw_graph(&self) -> Result<WeightedGraph> {
        WeightedGraph::build(self.spec.n, &self.pairs, &self.similarities)
    }

    /// Graph weighted by `w(s)`.
    pub fn weighted_graph(&self, w: &Weighting) -> Result<WeightedGraph> {
        let weights: Vec<f64> = self.similarities.iter().map(|&s| w.apply(s)).collect();
        WeightedGraph::build(self.spec.n, &self.pairs, &weights)
    }

    /// Generator for the algorithm's own randomness, independent of the
    /// instance streams.
    pub fn algorithm_rng(&self) -> SimRng {
        stream_rng(self.spec.seed, streams::ALGORITHM)
    }
}

/// Samples an instance; a pure function of `spec` (including its seed).
pub fn make_instance(spec: &ModelSpec) -> Result<Instance> {
    spec.validate()?;
    let seed = spec.seed;
    let truth = draw_labels(spec, &mut stream_rng(seed, streams::LABELS));
    let revealed = draw_revealed_set(spec.n, spec.eta, &mut stream_rng(seed, streams::REVEALED));
    let pairs = draw_er_pairs(spec.n, spec.alpha, &mut stream_rng(seed, streams::PAIRS));
    let similarities = draw_similarities(
        &pairs,
        &truth,
        &spec.p_in,
        &spec.p_out,
        &mut stream_rng(seed, streams::SIMILARITIES),
    )?;
    Ok(Instance {
        spec: spec.clone(),
        pairs,
        similarities,
        data: LabeledDataset::new(truth, revealed, spec.q)?,
    })
}

/// Isotropic Gaussian blobs: each point picks a center uniformly at random
/// and adds `N(0, σ²)` noise per coordinate.
pub fn gaussian_blobs<R: Rng + ?Sized>(
    n: usize,
    centers: &[Vec<f64>],
    sigma: f64,
    rng: &mut R,
) -> Result<(Points, Vec<usize>)> {
    if centers.len() < 2 {
        return Err(Error::InvalidParameter("need at least two centers".into()));
    }
    let dim = centers[0].len();
    if dim == 0 || centers.iter().any(|c| c.len() != dim) {
        return Err(Error::InvalidParameter("centers must share a positive dimension".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma}")));
    }
    let noise = Normal::new(0.0, sigma).expect("finite non-negative sigma");
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.random_range(0..centers.len());
        labels.push(c);
        data.extend(centers[c].iter().map(|&x| (x + noise.sample(rng)) as f32));
    }
    Ok((Points::new(dim, data)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, alpha: f64, eta: f64) -> ModelSpec {
        ModelSpec {
            n,
            q: 2,
            alpha,
            eta,
            p_in: Similarity::gaussian(0.5, 1.0),
            p_out: Similarity::gaussian(-0.5, 1.0),
            seed: 7,
        }
    }

    #[test]
    fn labels_are_balanced() {
        let s = spec(1_000_000, 5.0, 0.0);
        let labels = draw_labels(&s, &mut stream_rng(1, 0));
        let ones = labels.iter().filter(|&&c| c == 1).count() as f64 / s.n as f64;
        assert!((ones - 0.5).abs() < 0.002, "{ones}");
    }

    #[test]
    fn single_label() {
        let s = spec(1, 0.5, 0.0);
        let labels = draw_labels(&s, &mut stream_rng(3, 0));
        assert_eq!(labels.len(), 1);
        assert!(labels[0] < 2);
    }

    #[test]
    fn revealed_cardinality() {
        let mut rng = stream_rng(0, 1);
        assert_eq!(draw_revealed_set(100, 0.1, &mut rng).iter().filter(|&&b| b).count(), 10);
        assert_eq!(draw_revealed_set(100, 0.29, &mut rng).iter().filter(|&&b| b).count(), 29);
        assert!(!draw_revealed_set(100, 0.0, &mut rng).contains(&true));
        assert!(!draw_revealed_set(100, 1.0, &mut rng).contains(&false));
    }

    #[test]
    fn er_pairs_are_ordered_and_distinct() {
        let pairs = draw_er_pairs(500, 20.0, &mut stream_rng(5, 2));
        assert!(pairs.iter().all(|&(i, j)| i < j && j < 500));
        assert!(pairs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn er_pair_count() {
        let (n, alpha) = (100_000, 5.0);
        let pairs = draw_er_pairs(n, alpha, &mut stream_rng(11, 2));
        let expected = alpha * (n - 1) as f64 / 2.0;
        let rel = (pairs.len() as f64 - expected).abs() / expected;
        assert!(rel < 0.02, "{} vs {expected}", pairs.len());
    }

    #[test]
    fn er_vanishing_rate() {
        assert!(draw_er_pairs(1000, 1e-10, &mut stream_rng(0, 2)).is_empty());
    }

    #[test]
    fn er_full_rate() {
        let pairs = draw_er_pairs(6, 6.0, &mut stream_rng(0, 2));
        assert_eq!(pairs.len(), 15);
    }

    #[test]
    fn degenerate_similarities() {
        let truth = vec![0, 0, 1];
        let pairs = vec![(0, 1), (1, 2), (0, 2)];
        let s = draw_similarities(
            &pairs,
            &truth,
            &Similarity::point(1.0),
            &Similarity::point(-1.0),
            &mut stream_rng(0, 3),
        )
        .unwrap();
        assert_eq!(s, [1.0, -1.0, -1.0]);
    }

    #[test]
    fn invalid_distribution_cannot_sample() {
        let r = draw_similarities(
            &[(0, 1)],
            &[0, 0],
            &Similarity::gaussian(0.0, -1.0),
            &Similarity::point(0.0),
            &mut stream_rng(0, 3),
        );
        assert!(r.is_err());
    }

    #[test]
    fn within_cluster_sample_mean() {
        let truth = vec![0; 2];
        let pairs = vec![(0, 1); 1_000_000];
        let s = draw_similarities(
            &pairs,
            &truth,
            &Similarity::gaussian(0.5, 1.0),
            &Similarity::gaussian(-0.5, 1.0),
            &mut stream_rng(9, 3),
        )
        .unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 0.5).abs() < 0.003, "{mean}");
    }

    #[test]
    fn instance_is_deterministic() {
        let s = spec(2000, 4.0, 0.1);
        assert_eq!(make_instance(&s).unwrap(), make_instance(&s).unwrap());
        let mut other = s.clone();
        other.seed = 8;
        assert_ne!(make_instance(&s).unwrap().pairs, make_instance(&other).unwrap().pairs);
    }

    #[test]
    fn eta_one_reveals_everything() {
        let inst = make_instance(&spec(500, 3.0, 1.0)).unwrap();
        assert_eq!(inst.data.revealed_count(), 500);
    }

    #[test]
    fn mean_degree() {
        let inst = make_instance(&spec(10_000, 10.0, 0.0)).unwrap();
        let mean = 2.0 * inst.pairs.len() as f64 / 10_000.0;
        assert!((mean - 10.0).abs() < 0.3, "{mean}");
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(100, 0.0, 0.1);
        assert!(s.validate().is_err());
        s.alpha = 3.0;
        s.eta = 1.5;
        assert!(s.validate().is_err());
        s.eta = 0.5;
        s.q = 1;
        assert!(s.validate().is_err());
    }

    #[test]
    fn parse_distributions() {
        for text in ["normal:0.5,1", "point:-1", "uniform:0,2", "mix:0.25/normal:0,1/point:1"] {
            let d: Similarity = text.parse().unwrap();
            assert_eq!(d.to_string().parse::<Similarity>().unwrap(), d);
        }
        assert!("normal:1".parse::<Similarity>().is_err());
        assert!("cauchy:0,1".parse::<Similarity>().is_err());
        assert!("uniform:2,1".parse::<Similarity>().is_err());
    }

    #[test]
    fn mixture_moments() {
        let m = Similarity::mixture(0.25, Similarity::point(2.0), Similarity::uniform(0.0, 1.0));
        assert!((m.mean() - (0.5 + 0.375)).abs() < 1e-15);
        assert!((m.second_moment() - (1.0 + 0.25)).abs() < 1e-15);
        assert!(m.density(0.5).is_none());
    }

    #[test]
    fn blobs_without_noise_sit_on_centers() {
        let centers = vec![vec![1.0, 2.0], vec![-3.0, 0.5]];
        let (pts, labels) = gaussian_blobs(100, &centers, 0.0, &mut stream_rng(1, 0)).unwrap();
        for (i, &c) in labels.iter().enumerate() {
            let want: Vec<f32> = centers[c].iter().map(|&x| x as f32).collect();
            assert_eq!(pts.row(i), &want[..]);
        }
        assert!(gaussian_blobs(10, &centers[..1], 1.0, &mut stream_rng(1, 0)).is_err());
    }

    #[test]
    fn separated_blobs() {
        let centers = vec![vec![5.0, 0.0], vec![-5.0, 0.0]];
        let (pts, labels) = gaussian_blobs(10_000, &centers, 1.0, &mut stream_rng(2, 0)).unwrap();
        let wrong = labels
            .iter()
            .enumerate()
            .filter(|&(i, &c)| (pts.row(i)[0] > 0.0) != (c == 0))
            .count();
        assert!((wrong as f64) / 10_000.0 < 1e-4);
        let again = gaussian_blobs(10_000, &centers, 1.0, &mut stream_rng(2, 0)).unwrap();
        assert_eq!(again.1, labels);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(derive_seed(42, 3), derive_seed(42, 3));
    }
}
