//! Label propagation baseline and the nearest-neighbor pruning used with it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binary::check_nodes;
use crate::error::{Error, Result};
use crate::graph::{build_graph, WeightedGraph};
use crate::model::LabeledDataset;

pub const LP_TOL: f64 = 1e-6;
pub const LP_MAX_ITER: usize = 1000;

/// How per-node top-k choices combine into an undirected graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnRule {
    /// Keep `(i, j)` if either endpoint ranks the other in its top k.
    #[default]
    Union,
    /// Keep `(i, j)` only if both do.
    Mutual,
}

/// Prunes `g` to nearest neighbors. The weights of `g` must be the raw
/// similarities: each node ranks its neighbors by decreasing weight, ties
/// going to the lower node index.
pub fn sparsify_knn(g: &WeightedGraph, k: usize, rule: KnnRule) -> Result<WeightedGraph> {
    let mut chosen = vec![false; g.num_half_edges()];
    let mut order = Vec::new();
    for i in 0..g.n() {
        order.clear();
        order.extend(g.out_edges(i));
        order.sort_by(|&a, &b| {
            g.weight(b)
                .total_cmp(&g.weight(a))
                .then(g.dst(a).cmp(&g.dst(b)))
        });
        for &e in order.iter().take(k) {
            chosen[e] = true;
        }
    }
    let mut pairs = Vec::new();
    let mut weights = Vec::new();
    for e in 0..g.num_half_edges() {
        let (i, j) = (g.src(e), g.dst(e));
        if i > j {
            continue;
        }
        let keep = match rule {
            KnnRule::Union => chosen[e] || chosen[g.twin(e)],
            KnnRule::Mutual => chosen[e] && chosen[g.twin(e)],
        };
        if keep {
            pairs.push((i, j));
            weights.push(g.weight(e));
        }
    }
    build_graph(g.n(), &pairs, &weights)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    /// Class per node.
    pub assignments: Vec<usize>,
    /// Row-major `n × q` class scores.
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Max absolute change per sweep.
    pub residuals: Vec<f64>,
}

/// Harmonic label propagation with hard clamping.
///
/// Revealed nodes hold their one-hot label; every other node is repeatedly
/// replaced by the weighted mean of its neighbors' scores (Jacobi sweeps)
/// until the largest change is below `tol` or `max_iter` sweeps have run.
/// Score ties go to the lowest class; nodes no label reaches get the most
/// frequent revealed class.
pub fn label_propagation(
    g: &WeightedGraph,
    data: &LabeledDataset,
    tol: f64,
    max_iter: usize,
) -> Result<LpOutcome> {
    check_nodes(g, data)?;
    if let Some(e) = g.weights().iter().position(|&w| w < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "label propagation needs nonnegative weights, half-edge {e} has {}",
            g.weight(e)
        )));
    }
    let q = data.q;
    let n = g.n();
    let mut counts = vec![0usize; q];
    for i in (0..n).filter(|&i| data.revealed[i]) {
        counts[data.truth[i]] += 1;
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::NoRevealedLabels);
    }
    let fallback = argmax(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());

    let mut f = vec![0.0; n * q];
    for i in (0..n).filter(|&i| data.revealed[i]) {
        f[i * q + data.truth[i]] = 1.0;
    }
    let mut next = f.clone();
    let mut residuals = Vec::new();
    let mut converged = false;
    while residuals.len() < max_iter {
        let change = next
            .par_chunks_mut(q)
            .enumerate()
            .map(|(i, row)| {
                if data.revealed[i] {
                    return 0.0;
                }
                let mut total = 0.0;
                row.iter_mut().for_each(|x| *x = 0.0);
                for (j, w) in g.neighbors(i) {
                    total += w;
                    for c in 0..q {
                        row[c] += w * f[j * q + c];
                    }
                }
                let mut change: f64 = 0.0;
                for c in 0..q {
                    if total > 0.0 {
                        row[c] /= total;
                    }
                    change = change.max((row[c] - f[i * q + c]).abs());
                }
                change
            })
            .reduce(|| 0.0, f64::max);
        std::mem::swap(&mut f, &mut next);
        residuals.push(change);
        if change < tol {
            converged = true;
            break;
        }
    }
    let assignments = (0..n)
        .map(|i| {
            let row = &f[i * q..(i + 1) * q];
            if row.iter().all(|&x| x == 0.0) {
                fallback
            } else {
                argmax(row)
            }
        })
        .collect();
    Ok(LpOutcome {
        assignments,
        scores: f,
        iterations: residuals.len(),
        converged,
        residuals,
    })
}

/// First index of the maximum.
fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (c, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = c;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_nodes_keep_everything() {
        let g = build_graph(4, &[(0, 1), (1, 2), (2, 3)], &[0.1, 0.2, 0.3]).unwrap();
        let p = sparsify_knn(&g, 3, KnnRule::Union).unwrap();
        assert_eq!(p.num_edges(), 3);
    }

    #[test]
    fn star_union_keeps_leaf_edges() {
        let g = build_graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], &[0.4, 0.9, 0.1, 0.5]).unwrap();
        assert_eq!(sparsify_knn(&g, 1, KnnRule::Union).unwrap().num_edges(), 4);
        let m = sparsify_knn(&g, 1, KnnRule::Mutual).unwrap();
        assert_eq!(m.edges().map(|(i, j, _)| (i, j)).collect::<Vec<_>>(), [(0, 2)]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let g = build_graph(4, &[(0, 3), (0, 1), (0, 2)], &[0.5, 0.5, 0.5]).unwrap();
        let m = sparsify_knn(&g, 1, KnnRule::Mutual).unwrap();
        assert_eq!(m.edges().map(|(i, j, _)| (i, j)).collect::<Vec<_>>(), [(0, 1)]);
    }

    #[test]
    fn clamping_with_all_revealed() {
        let g = build_graph(3, &[(0, 1), (1, 2)], &[1.0, 1.0]).unwrap();
        let data = LabeledDataset::new(vec![1, 0, 1], vec![true; 3], 2).unwrap();
        let out = label_propagation(&g, &data, LP_TOL, LP_MAX_ITER).unwrap();
        assert_eq!(out.assignments, [1, 0, 1]);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn symmetric_path_ties_to_lowest_class() {
        let g = build_graph(3, &[(0, 1), (1, 2)], &[1.0, 1.0]).unwrap();
        let data = LabeledDataset::new(vec![1, 0, 0], vec![true, false, true], 2).unwrap();
        let out = label_propagation(&g, &data, LP_TOL, LP_MAX_ITER).unwrap();
        assert_eq!(&out.scores[2..4], [0.5, 0.5]);
        assert_eq!(out.assignments[1], 0);
    }

    #[test]
    fn harmonic_solution_on_a_path() {
        let pairs: Vec<_> = (0..4).map(|i| (i, i + 1)).collect();
        let g = build_graph(5, &pairs, &[1.0; 4]).unwrap();
        let data = LabeledDataset::new(vec![0, 0, 0, 0, 1], vec![true, false, false, false, true], 2).unwrap();
        let out = label_propagation(&g, &data, 1e-12, 10_000).unwrap();
        assert!(out.converged);
        for i in 0..5 {
            assert!((out.scores[2 * i + 1] - i as f64 / 4.0).abs() < 1e-9);
        }
        assert_eq!(out.assignments, [0, 0, 0, 1, 1]);
        assert!(out.residuals.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn isolated_nodes_take_majority() {
        let g = build_graph(5, &[(0, 1)], &[1.0]).unwrap();
        let data = LabeledDataset::new(vec![0, 0, 1, 1, 0], vec![true, false, true, true, false], 2).unwrap();
        let out = label_propagation(&g, &data, LP_TOL, LP_MAX_ITER).unwrap();
        assert_eq!(out.assignments, [0, 0, 1, 1, 1]);
    }

    #[test]
    fn errors() {
        let g = build_graph(2, &[(0, 1)], &[1.0]).unwrap();
        let none = LabeledDataset::new(vec![0, 1], vec![false; 2], 2).unwrap();
        assert!(matches!(
            label_propagation(&g, &none, LP_TOL, LP_MAX_ITER),
            Err(Error::NoRevealedLabels)
        ));
        let neg = build_graph(2, &[(0, 1)], &[-1.0]).unwrap();
        let some = LabeledDataset::new(vec![0, 1], vec![true, false], 2).unwrap();
        assert!(label_propagation(&neg, &some, LP_TOL, LP_MAX_ITER).is_err());
    }
}
