//! Error bounds for the two-cluster walk and a population-dynamics estimate
//! of its large-`n` error.
//!
//! Everything here is stated for the symmetric two-cluster model with
//! equal-size clusters. Bounds are the `n → ∞` leading terms; finite-size
//! corrections are not modelled.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, SimRng, Similarity, Weighting};

/// Monte Carlo sample size for weighting moments without a closed form.
pub const MC_SAMPLES: usize = 1_000_000;

/// Signal and noise of a weighting under a similarity model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightStats {
    /// Half the gap between mean within-cluster and between-cluster weight.
    pub delta: f64,
    /// Second moment of the weight.
    pub sigma2: f64,
    /// `α Δ² / Σ²`.
    pub tau: f64,
    pub alpha: f64,
    /// Mean weight.
    pub mean_w: f64,
    /// Standard errors; zero for closed-form moments.
    pub delta_se: f64,
    pub sigma2_se: f64,
    pub analytic: bool,
}

impl WeightStats {
    fn from_moments(alpha: f64, m_in: f64, m_out: f64, s_in: f64, s_out: f64) -> Result<Self> {
        let delta = 0.5 * (m_in - m_out);
        let sigma2 = 0.5 * (s_in + s_out);
        if !(sigma2 > 0.0) {
            return Err(Error::DegenerateWeighting);
        }
        Ok(Self {
            delta,
            sigma2,
            tau: alpha * delta * delta / sigma2,
            alpha,
            mean_w: 0.5 * (m_in + m_out),
            delta_se: 0.0,
            sigma2_se: 0.0,
            analytic: true,
        })
    }

    /// Same moments at a different mean degree.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            tau: alpha * self.delta * self.delta / self.sigma2,
            ..self.clone()
        }
    }

    /// Monte Carlo moments from `samples` draws per cluster relation.
    pub fn monte_carlo<R: Rng + ?Sized>(
        p_in: &Similarity,
        p_out: &Similarity,
        w: &Weighting,
        alpha: f64,
        samples: usize,
        rng: &mut R,
    ) -> Result<Self> {
        p_in.validate()?;
        p_out.validate()?;
        if samples < 2 {
            return Err(Error::InvalidParameter("need at least two samples".into()));
        }
        let mut moments = |p: &Similarity| {
            let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
            for _ in 0..samples {
                let x = w.apply(p.sample(rng));
                let x2 = x * x;
                s1 += x;
                s2 += x2;
                s3 += x2 * x;
                s4 += x2 * x2;
            }
            let n = samples as f64;
            let (m1, m2) = (s1 / n, s2 / n);
            let var_w = (m2 - m1 * m1).max(0.0);
            let var_w2 = (s4 / n - m2 * m2).max(0.0);
            let _ = s3;
            (m1, m2, var_w / n, var_w2 / n)
        };
        let (m_in, s_in, vm_in, vs_in) = moments(p_in);
        let (m_out, s_out, vm_out, vs_out) = moments(p_out);
        let mut stats = Self::from_moments(alpha, m_in, m_out, s_in, s_out)?;
        stats.delta_se = 0.5 * (vm_in + vm_out).sqrt();
        stats.sigma2_se = 0.5 * (vs_in + vs_out).sqrt();
        stats.analytic = false;
        Ok(stats)
    }
}

/// `Δ(w)`, `Σ(w)²` and `τ(α, w)`: closed form for affine weightings, Monte
/// Carlo with [`MC_SAMPLES`] draws otherwise.
pub fn weight_stats<R: Rng + ?Sized>(
    p_in: &Similarity,
    p_out: &Similarity,
    w: &Weighting,
    alpha: f64,
    rng: &mut R,
) -> Result<WeightStats> {
    p_in.validate()?;
    p_out.validate()?;
    match w.affine() {
        Some((a, b)) => {
            let mean = |p: &Similarity| a * p.mean() + b;
            let second =
                |p: &Similarity| a * a * p.second_moment() + 2.0 * a * b * p.mean() + b * b;
            WeightStats::from_moments(alpha, mean(p_in), mean(p_out), second(p_in), second(p_out))
        }
        None => WeightStats::monte_carlo(p_in, p_out, w, alpha, MC_SAMPLES, rng),
    }
}

/// Cantelli-type bound: `r_0 = η²`, `r_{l+1} = τ r_l / (1 + τ r_l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceBound {
    /// `r_0 ..= r_{k+1}`.
    pub r: Vec<f64>,
    /// `1 − r_{k+1}`.
    pub bound: f64,
}

pub fn variance_recursion(tau: f64, eta: f64, k: usize) -> VarianceBound {
    let mut r = Vec::with_capacity(k + 2);
    r.push(eta * eta);
    for l in 0..=k {
        let x = tau * r[l];
        r.push(x / (1.0 + x));
    }
    let bound = 1.0 - r[k + 1];
    VarianceBound { r, bound }
}

/// Limit of the first recursion as `k → ∞` from a positive start.
pub fn variance_fixed_point(tau: f64) -> f64 {
    if tau > 1.0 {
        (tau - 1.0) / tau
    } else {
        0.0
    }
}

/// `τ` above which the second recursion has a positive limit.
pub const TAIL_THRESHOLD: f64 = 2.5;

/// Chernoff-type bound: `q_0 = 2η²`,
/// `q_{l+1} = τ q_l / (1 + 3/2 · max(1, q_l))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    /// `q_0 ..= q_{k+1}`.
    pub q: Vec<f64>,
    /// `exp(−q_{k+1}/4 · min(1, Σ²/Δ))`.
    pub bound: f64,
    /// `τ > 5/2`; below it `q_k → 0` and the bound tends to 1.
    pub informative: bool,
}

pub fn tail_recursion(tau: f64, eta: f64, k: usize, delta: f64, sigma2: f64) -> Result<TailBound> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
    }
    let mut q = Vec::with_capacity(k + 2);
    q.push(2.0 * eta * eta);
    for l in 0..=k {
        q.push(tau * q[l] / (1.0 + 1.5 * q[l].max(1.0)));
    }
    let bound = (-q[k + 1] / 4.0 * (sigma2 / delta).min(1.0)).exp();
    Ok(TailBound {
        q,
        bound,
        informative: tau > TAIL_THRESHOLD,
    })
}

/// Limit of the second recursion as `k → ∞` from a positive start.
pub fn tail_fixed_point(tau: f64) -> f64 {
    if tau > TAIL_THRESHOLD {
        2.0 / 3.0 * (tau - 1.0)
    } else {
        0.0
    }
}

/// Sub-exponential parameters: `a_0 = η`, `b_0 = 1/2`,
/// `a_{l+1} = αΔ a_l`, `b_{l+1} = αΣ² (b_l + 3/2 · max(a_l², b_l))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbSequences {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `a_l² / b_l`; equals the second recursion's `q_l`.
    pub q: Vec<f64>,
}

pub fn ab_sequences(alpha: f64, delta: f64, sigma2: f64, eta: f64, k: usize) -> Result<AbSequences> {
    if !(alpha * delta > 1.0) {
        return Err(Error::Hypothesis(format!("alpha·delta = {} ≤ 1", alpha * delta)));
    }
    if !(alpha * sigma2 > 1.0) {
        return Err(Error::Hypothesis(format!("alpha·sigma² = {} ≤ 1", alpha * sigma2)));
    }
    let mut a = vec![eta];
    let mut b = vec![0.5];
    for l in 0..=k {
        a.push(alpha * delta * a[l]);
        b.push(alpha * sigma2 * (b[l] + 1.5 * (a[l] * a[l]).max(b[l])));
    }
    let q = a.iter().zip(&b).map(|(a, b)| a * a / b).collect();
    Ok(AbSequences { a, b, q })
}

/// Sampling rate at which `τ(α, w) = 2 / (1 − η)`, beyond which the walk is
/// guaranteed to improve on the revealed labels alone.
pub fn sufficient_alpha(eta: f64, delta: f64, sigma2: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta = {eta} must lie in [0, 1)")));
    }
    if delta == 0.0 {
        return Err(Error::InvalidParameter("delta = 0".into()));
    }
    Ok(2.0 * sigma2 / ((1.0 - eta) * delta * delta))
}

/// Asymptotic error of guessing every unrevealed label at random.
pub fn random_guess_error(eta: f64) -> f64 {
    0.5 * (1.0 - eta)
}

/// `w* = (p_in − p_out) / (p_in + p_out)`.
pub fn optimal_weight(p_in: &Similarity, p_out: &Similarity) -> Result<Weighting> {
    for p in [p_in, p_out] {
        p.validate()?;
        if !p.has_density() {
            return Err(Error::NoDensity(p.to_string()));
        }
    }
    Ok(Weighting::Optimal {
        p_in: p_in.clone(),
        p_out: p_out.clone(),
    })
}

/// Absolute tolerance of the `τ(α, w*)` quadrature.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// `τ(α, w*) = α/2 · ∫ (p_in − p_out)² / (p_in + p_out) ds`, by adaptive
/// Simpson over a window holding all but 1e-8 of both laws' mass, split at
/// density discontinuities.
pub fn tau_optimal(alpha: f64, p_in: &Similarity, p_out: &Similarity) -> Result<f64> {
    optimal_weight(p_in, p_out)?;
    let integrand = |s: f64| {
        let a = p_in.density(s).unwrap_or(0.0);
        let b = p_out.density(s).unwrap_or(0.0);
        if a + b > 0.0 {
            (a - b) * (a - b) / (a + b)
        } else {
            0.0
        }
    };
    let (l1, h1) = p_in.support();
    let (l2, h2) = p_out.support();
    let (lo, hi) = (l1.min(l2), h1.max(h2));
    let mut cuts: Vec<f64> = p_in
        .breakpoints()
        .into_iter()
        .chain(p_out.breakpoints())
        .filter(|&x| x > lo && x < hi)
        .collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let pieces = cuts.len() as f64 - 1.0;
    let integral: f64 = cuts
        .windows(2)
        .map(|w| adaptive_simpson(&integrand, w[0], w[1], QUADRATURE_TOL / pieces))
        .sum();
    Ok(0.5 * alpha * integral)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a >= b {
        return 0.0;
    }
    // A fixed first split keeps narrow features away from the initial nodes.
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|p| {
            let (x0, x1) = (a + p as f64 * h, a + (p + 1) as f64 * h);
            let (fa, fm, fb) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            recurse(f, x0, x1, fa, fm, fb, simpson(fa, fm, fb, x0, x1), tol / pieces as f64, 48)
        })
        .sum()
}

/// Population-dynamics settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    /// Iterations `k` of the walk; the pooled variable needs `k + 1` sweeps.
    pub iterations: usize,
    /// Total population per class.
    pub population: usize,
    /// Independent sub-populations used for standard errors.
    pub batches: usize,
}

impl DeConfig {
    pub fn new(iterations: usize, population: usize) -> Self {
        Self {
            iterations,
            population,
            batches: 20,
        }
    }
}

/// Population-dynamics estimate of the error and of the message moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEvolution {
    /// `½ P(v̂_+ ≤ 0) + ½ P(v̂_− ≥ 0)`.
    pub error: f64,
    pub error_se: f64,
    /// `E[v_+^(l)]` for `l = 0 ..= k+1`.
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    /// `E[(v_+^(l))²]`.
    pub second: Vec<f64>,
    pub second_se: Vec<f64>,
    /// `E[v_−^(l)]` and `E[(v_−^(l))²]`.
    pub minus_mean: Vec<f64>,
    pub minus_second: Vec<f64>,
}

struct BatchStats {
    error: f64,
    mean: Vec<f64>,
    second: Vec<f64>,
    minus_mean: Vec<f64>,
    minus_second: Vec<f64>,
}

fn moments(values: &[f64], log_scale: f64) -> (f64, f64) {
    let n = values.len() as f64;
    let m1 = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| v * v).sum::<f64>() / n;
    (m1 * log_scale.exp(), m2 * (2.0 * log_scale).exp())
}

fn run_batch(
    spec: &ModelSpec,
    w: &Weighting,
    sweeps: usize,
    size: usize,
    rng: &mut SimRng,
) -> BatchStats {
    let poisson = Poisson::new(spec.alpha / 2.0).expect("positive rate");
    let init = |sigma: f64, rng: &mut SimRng| -> Vec<f64> {
        (0..size)
            .map(|_| {
                if rng.random::<f64>() < spec.eta || rng.random::<bool>() {
                    sigma
                } else {
                    -sigma
                }
            })
            .collect()
    };
    let mut plus = init(1.0, rng);
    let mut minus = init(-1.0, rng);
    let mut log_scale = 0.0;
    let mut stats = BatchStats {
        error: 0.0,
        mean: Vec::with_capacity(sweeps + 1),
        second: Vec::with_capacity(sweeps + 1),
        minus_mean: Vec::with_capacity(sweeps + 1),
        minus_second: Vec::with_capacity(sweeps + 1),
    };
    let record = |stats: &mut BatchStats, plus: &[f64], minus: &[f64], ls: f64| {
        let (m, s) = moments(plus, ls);
        stats.mean.push(m);
        stats.second.push(s);
        let (m, s) = moments(minus, ls);
        stats.minus_mean.push(m);
        stats.minus_second.push(s);
    };
    record(&mut stats, &plus, &minus, log_scale);

    let mut next_plus = vec![0.0; size];
    let mut next_minus = vec![0.0; size];
    for _ in 0..sweeps {
        for (own, other, out) in [
            (&plus, &minus, &mut next_plus),
            (&minus, &plus, &mut next_minus),
        ] {
            for slot in out.iter_mut() {
                let same = poisson.sample(rng) as usize;
                let cross = poisson.sample(rng) as usize;
                let mut acc = 0.0;
                for _ in 0..same {
                    acc += w.apply(spec.p_in.sample(rng)) * own[rng.random_range(0..size)];
                }
                for _ in 0..cross {
                    acc += w.apply(spec.p_out.sample(rng)) * other[rng.random_range(0..size)];
                }
                *slot = acc;
            }
        }
        std::mem::swap(&mut plus, &mut next_plus);
        std::mem::swap(&mut minus, &mut next_minus);
        let peak = plus
            .iter()
            .chain(minus.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 && peak.is_finite() {
            plus.iter_mut().chain(minus.iter_mut()).for_each(|v| *v /= peak);
            log_scale += peak.ln();
        }
        record(&mut stats, &plus, &minus, log_scale);
    }
    let wrong_plus = plus.iter().filter(|&&v| v <= 0.0).count();
    let wrong_minus = minus.iter().filter(|&&v| v >= 0.0).count();
    stats.error = 0.5 * (wrong_plus + wrong_minus) as f64 / size as f64;
    stats
}

fn mean_and_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, f64::NAN);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Population dynamics for the message distributions of the two-cluster
/// walk on the block model `spec` with weighting `w`.
///
/// Each class keeps a population of messages; a sweep replaces every member
/// by `Σ_{i≤d1} w_in,i v_same,i + Σ_{i≤d2} w_out,i v_other,i` with
/// `d1, d2 ~ Poisson(α/2)` and the `v` resampled with replacement from the
/// previous generation. The initial law gives the correct label with
/// probability `η + (1 − η)/2`. After `k + 1` sweeps the population follows
/// the pooled variable `v̂`. Standard errors come from `batches` independent
/// sub-populations.
pub fn density_evolution_mc<R: Rng + ?Sized>(
    spec: &ModelSpec,
    w: &Weighting,
    config: &DeConfig,
    rng: &mut R,
) -> Result<DensityEvolution> {
    spec.p_in.validate()?;
    spec.p_out.validate()?;
    if !(spec.alpha > 0.0) || !(0.0..=1.0).contains(&spec.eta) {
        return Err(Error::InvalidParameter("alpha must be positive and eta in [0, 1]".into()));
    }
    let batches = config.batches.max(1);
    let size = config.population / batches;
    if size == 0 {
        return Err(Error::InvalidParameter("population smaller than batch count".into()));
    }
    let sweeps = config.iterations + 1;
    let seeds: Vec<u64> = (0..batches).map(|_| rng.random()).collect();
    let runs: Vec<BatchStats> = seeds
        .par_iter()
        .map(|&seed| run_batch(spec, w, sweeps, size, &mut SimRng::seed_from_u64(seed)))
        .collect();

    let column = |get: &dyn Fn(&BatchStats) -> &Vec<f64>| -> (Vec<f64>, Vec<f64>) {
        (0..=sweeps)
            .map(|l| mean_and_se(runs.iter().map(|b| get(b)[l])))
            .unzip()
    };
    let (mean, mean_se) = column(&|b| &b.mean);
    let (second, second_se) = column(&|b| &b.second);
    let (minus_mean, _) = column(&|b| &b.minus_mean);
    let (minus_second, _) = column(&|b| &b.minus_second);
    let (error, error_se) = mean_and_se(runs.iter().map(|b| b.error));
    Ok(DensityEvolution {
        error,
        error_se,
        mean,
        mean_se,
        second,
        second_se,
        minus_mean,
        minus_second,
    })
}

/// Closed-form first and second moments of `v_+^(l)` for `l = 0 ..= steps`:
/// `m_{l+1} = αΔ m_l` and `s_{l+1} = α²Δ² m_l² + αΣ² s_l` from `m_0 = η`,
/// `s_0 = 1`.
pub fn moment_recursion(stats: &WeightStats, eta: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let ad = stats.alpha * stats.delta;
    let as2 = stats.alpha * stats.sigma2;
    let mut m = vec![eta];
    let mut s = vec![1.0];
    for l in 0..steps {
        m.push(ad * m[l]);
        s.push(ad * ad * m[l] * m[l] + as2 * s[l]);
    }
    (m, s)
}

/// All bound quantities for one `(model, weighting, α, η, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub stats: WeightStats,
    pub eta: f64,
    pub k: usize,
    pub r_traj: Vec<f64>,
    pub q_traj: Vec<f64>,
    /// Present when `αΔ > 1` and `αΣ² > 1`.
    pub a_traj: Option<Vec<f64>>,
    pub b_traj: Option<Vec<f64>>,
    pub variance_bound: f64,
    /// Absent when `Δ ≤ 0`.
    pub tail_bound: Option<f64>,
    pub tail_informative: bool,
    pub r_fixed_point: f64,
    pub q_fixed_point: f64,
    pub sufficient_alpha: Option<f64>,
    pub random_guess_error: f64,
}

impl TheoryReport {
    pub fn new(stats: &WeightStats, eta: f64, k: usize) -> Self {
        let t1 = variance_recursion(stats.tau, eta, k);
        let t2 = tail_recursion(stats.tau, eta, k, stats.delta, stats.sigma2).ok();
        let ab = ab_sequences(stats.alpha, stats.delta, stats.sigma2, eta, k).ok();
        let q_traj = match &t2 {
            Some(t) => t.q.clone(),
            None => {
                let mut q = vec![2.0 * eta * eta];
                for l in 0..=k {
                    q.push(stats.tau * q[l] / (1.0 + 1.5 * q[l].max(1.0)));
                }
                q
            }
        };
        Self {
            stats: stats.clone(),
            eta,
            k,
            r_traj: t1.r,
            q_traj,
            a_traj: ab.as_ref().map(|s| s.a.clone()),
            b_traj: ab.map(|s| s.b),
            variance_bound: t1.bound,
            tail_bound: t2.map(|t| t.bound),
            tail_informative: stats.tau > TAIL_THRESHOLD,
            r_fixed_point: variance_fixed_point(stats.tau),
            q_fixed_point: tail_fixed_point(stats.tau),
            sufficient_alpha: sufficient_alpha(eta, stats.delta, stats.sigma2).ok(),
            random_guess_error: random_guess_error(eta),
        }
    }

    /// Whether the exponential bound's hypotheses `αΔ > 1`, `αΣ² > 1` hold.
    pub fn tail_applies(&self) -> bool {
        self.a_traj.is_some() && self.tail_bound.is_some()
    }
}

/// Outcome of comparing a Monte Carlo error against the bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub variance_pass: bool,
    /// `bound + 3·SE − error`.
    pub variance_margin: f64,
    /// `None` when the exponential bound does not apply.
    pub tail_pass: Option<bool>,
    pub tail_margin: Option<f64>,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.variance_pass && self.tail_pass.unwrap_or(true)
    }
}

/// Checks `error ≤ bound + 3·se` for both bounds.
pub fn cantelli_bound_check(report: &TheoryReport, mc_error: f64, mc_se: f64) -> BoundCheck {
    let slack = 3.0 * mc_se.max(0.0);
    let variance_margin = report.variance_bound + slack - mc_error;
    let tail_margin = report
        .tail_applies()
        .then(|| report.tail_bound.unwrap() + slack - mc_error);
    BoundCheck {
        variance_pass: variance_margin >= 0.0,
        variance_margin,
        tail_pass: tail_margin.map(|m| m >= 0.0),
        tail_margin,
    }
}
