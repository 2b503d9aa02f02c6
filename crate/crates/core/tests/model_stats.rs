//! Distributional checks of the synthetic generators.

use nbwalk::model::{
    draw_er_pairs, draw_labels, draw_revealed_set, draw_similarities, gaussian_blobs, make_instance, stream_rng,
    ModelSpec, Similarity,
};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete, Normal};

fn spec(n: usize, alpha: f64, p_in: Similarity, p_out: Similarity) -> ModelSpec {
    ModelSpec {
        n,
        q: 2,
        alpha,
        eta: 0.1,
        p_in,
        p_out,
        seed: 11,
    }
}

#[test]
fn class_frequencies() {
    let s = spec(1_000_000, 5.0, Similarity::point(1.0), Similarity::point(0.0));
    let labels = draw_labels(&s, &mut stream_rng(1, 0));
    let ones = labels.iter().filter(|&&c| c == 1).count() as f64 / labels.len() as f64;
    assert!((ones - 0.5).abs() < 0.002, "{ones}");
}

#[test]
fn revealed_set_is_uniform() {
    let (n, seeds) = (100_000, 10_000u64);
    let probe = [0, 4_321, 99_999];
    let mut hits = [0usize; 3];
    for seed in 0..seeds {
        let r = draw_revealed_set(n, 0.5, &mut stream_rng(seed, 1));
        for (h, &i) in hits.iter_mut().zip(&probe) {
            *h += usize::from(r[i]);
        }
    }
    for h in hits {
        let f = h as f64 / seeds as f64;
        assert!((f - 0.5).abs() < 0.01, "{f}");
    }
}

#[test]
fn pair_count_concentrates() {
    let (n, alpha) = (100_000, 5.0);
    let pairs = draw_er_pairs(n, alpha, &mut stream_rng(2, 2));
    let want = alpha * n as f64 / 2.0;
    assert!((pairs.len() as f64 / want - 1.0).abs() < 0.02, "{}", pairs.len());
}

#[test]
fn degree_distribution_chi_square() {
    let (n, alpha) = (20_000usize, 10.0);
    let pairs = draw_er_pairs(n, alpha, &mut stream_rng(3, 2));
    let mut degree = vec![0usize; n];
    for &(i, j) in &pairs {
        degree[i] += 1;
        degree[j] += 1;
    }
    let mean = degree.iter().sum::<usize>() as f64 / n as f64;
    assert!((mean - alpha).abs() < 0.3, "{mean}");

    let law = Binomial::new(alpha / n as f64, (n - 1) as u64).unwrap();
    // Bins 3..=18 plus both tails, each with expected count well above 5.
    let (lo, hi) = (3u64, 18u64);
    let mut observed = vec![0.0; (hi - lo + 3) as usize];
    for &d in &degree {
        let d = d as u64;
        let bin = if d < lo { 0 } else if d > hi { observed.len() - 1 } else { (d - lo + 1) as usize };
        observed[bin] += 1.0;
    }
    let mut expected = vec![0.0; observed.len()];
    expected[0] = (0..lo).map(|k| law.pmf(k)).sum::<f64>() * n as f64;
    for k in lo..=hi {
        expected[(k - lo + 1) as usize] = law.pmf(k) * n as f64;
    }
    let last = expected.len() - 1;
    expected[last] = n as f64 - expected[..last].iter().sum::<f64>();
    let stat: f64 = observed.iter().zip(&expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = (observed.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(dof).unwrap().cdf(stat);
    assert!(p > 1e-3, "chi2 = {stat}, p = {p}");
}

#[test]
fn within_cluster_similarities_follow_their_law() {
    let truth = vec![0usize; 2];
    let pairs = vec![(0, 1); 1_000_000];
    let p_in = Similarity::gaussian(0.5, 1.0);
    let s = draw_similarities(&pairs, &truth, &p_in, &Similarity::gaussian(-0.5, 1.0), &mut stream_rng(4, 3)).unwrap();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    assert!((mean - 0.5).abs() < 0.003, "{mean}");

    // Kolmogorov–Smirnov on a subsample; 1.95 is the 0.1% critical value.
    let mut xs: Vec<f64> = s[..20_000].to_vec();
    xs.sort_by(f64::total_cmp);
    let law = Normal::new(0.5, 1.0).unwrap();
    let m = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = law.cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d * m.sqrt() < 1.95, "KS statistic {}", d * m.sqrt());
}

#[test]
fn zero_signal_similarities_ignore_labels() {
    let p = Similarity::uniform(0.0, 1.0);
    let inst = make_instance(&spec(20_000, 10.0, p.clone(), p)).unwrap();
    let same: Vec<f64> = inst
        .pairs
        .iter()
        .map(|&(i, j)| if inst.data.truth[i] == inst.data.truth[j] { 1.0 } else { -1.0 })
        .collect();
    let m = same.len() as f64;
    let (ma, mb) = (same.iter().sum::<f64>() / m, inst.similarities.iter().sum::<f64>() / m);
    let cov: f64 = same.iter().zip(&inst.similarities).map(|(a, b)| (a - ma) * (b - mb)).sum::<f64>() / m;
    let sa = (same.iter().map(|a| (a - ma).powi(2)).sum::<f64>() / m).sqrt();
    let sb = (inst.similarities.iter().map(|b| (b - mb).powi(2)).sum::<f64>() / m).sqrt();
    let corr = cov / (sa * sb);
    assert!(corr.abs() < 3.0 / m.sqrt(), "{corr}");
}

#[test]
fn signal_similarities_track_labels() {
    let inst = make_instance(&spec(5_000, 10.0, Similarity::point(1.0), Similarity::point(-1.0))).unwrap();
    for (&(i, j), &s) in inst.pairs.iter().zip(&inst.similarities) {
        assert_eq!(s == 1.0, inst.data.truth[i] == inst.data.truth[j]);
    }
}

#[test]
fn far_blobs_are_linearly_separable() {
    let centers = vec![vec![5.0, 0.0], vec![-5.0, 0.0]];
    let (pts, labels) = gaussian_blobs(10_000, &centers, 1.0, &mut stream_rng(5, 0)).unwrap();
    let wrong = (0..pts.len())
        .filter(|&i| (pts.row(i)[0] > 0.0) != (labels[i] == 0))
        .count();
    assert!((wrong as f64) / (pts.len() as f64) < 1e-4, "{wrong}");
}

#[test]
fn streams_are_independent_of_each_other() {
    // Changing only the similarity law must not move pairs, labels or the
    // revealed set.
    let a = make_instance(&spec(3_000, 6.0, Similarity::gaussian(0.5, 1.0), Similarity::gaussian(-0.5, 1.0))).unwrap();
    let b = make_instance(&spec(3_000, 6.0, Similarity::uniform(0.0, 1.0), Similarity::uniform(0.0, 2.0))).unwrap();
    assert_eq!(a.pairs, b.pairs);
    assert_eq!(a.data, b.data);
    assert_ne!(a.similarities, b.similarities);
}
