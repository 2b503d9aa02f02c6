//! Non-backtracking local walk for two clusters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{apply_nb, pool, sign, MessageState, PooledVector, WeightedGraph};
use crate::model::LabeledDataset;

/// Iteration count used when the caller does not choose one.
pub const DEFAULT_KMAX: usize = 30;

/// Revealed nodes send their own label on every outgoing half-edge; every
/// other half-edge gets an independent uniform `±1`.
pub fn init_messages<R: Rng + ?Sized>(
    g: &WeightedGraph,
    data: &LabeledDataset,
    rng: &mut R,
) -> Result<MessageState> {
    if data.q != 2 {
        return Err(Error::NotBinary(data.q));
    }
    check_nodes(g, data)?;
    let mut values = Vec::with_capacity(g.num_half_edges());
    for i in 0..g.n() {
        let revealed = data.revealed[i];
        let spin = data.spin(i) as f64;
        for _ in g.out_edges(i) {
            values.push(if revealed { spin } else { rademacher(rng) });
        }
    }
    Ok(MessageState::new(values))
}

pub(crate) fn rademacher<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn check_nodes(g: &WeightedGraph, data: &LabeledDataset) -> Result<()> {
    if g.n() != data.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            found: data.n(),
        });
    }
    Ok(())
}

/// Result of a two-cluster run.
#[derive(Debug, Clone)]
pub struct BinaryOutcome {
    /// `±1` per node.
    pub assignments: Vec<i8>,
    pub pooled: PooledVector,
    /// Final message state (rescaled).
    pub messages: MessageState,
}

/// Initializes from the partial labels, applies the operator `k_max` times,
/// pools and takes signs.
pub fn run_binary<R: Rng + ?Sized>(
    g: &WeightedGraph,
    data: &LabeledDataset,
    k_max: usize,
    rng: &mut R,
) -> Result<BinaryOutcome> {
    let init = init_messages(g, data, rng)?;
    run_from(g, data, init, k_max)
}

/// Same as [`run_binary`] from a caller-supplied initial state.
pub fn run_from(
    g: &WeightedGraph,
    data: &LabeledDataset,
    init: MessageState,
    k_max: usize,
) -> Result<BinaryOutcome> {
    check_nodes(g, data)?;
    let mut messages = init;
    for _ in 0..k_max {
        messages = apply_nb(g, &messages)?;
    }
    let pooled = pool(g, &messages)?;
    let assignments = decide(g, data, &pooled);
    Ok(BinaryOutcome {
        assignments,
        pooled,
        messages,
    })
}

/// `sign(v̂_i)` with ties to `+1`; isolated revealed nodes keep their label.
pub fn decide(g: &WeightedGraph, data: &LabeledDataset, pooled: &PooledVector) -> Vec<i8> {
    pooled
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if g.degree(i) == 0 && data.revealed[i] {
                data.spin(i)
            } else {
                sign(v)
            }
        })
        .collect()
}

/// Which nodes an accuracy is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    All,
    Unlabeled,
}

/// Fraction of nodes in `scope` whose estimate matches the truth.
///
/// With no revealed labels the two clusters are interchangeable and the
/// better of the two global sign choices is reported.
pub fn accuracy(est: &[i8], truth: &[i8], scope: Scope, revealed: &[bool]) -> Result<f64> {
    for len in [truth.len(), revealed.len()] {
        if len != est.len() {
            return Err(Error::LengthMismatch {
                expected: est.len(),
                found: len,
            });
        }
    }
    let mut total = 0usize;
    let mut agree = 0usize;
    for i in 0..est.len() {
        if scope == Scope::Unlabeled && revealed[i] {
            continue;
        }
        total += 1;
        agree += usize::from(est[i] == truth[i]);
    }
    if total == 0 {
        return Err(Error::EmptyInput("no nodes in accuracy scope"));
    }
    let frac = agree as f64 / total as f64;
    Ok(if revealed.contains(&true) {
        frac
    } else {
        frac.max(1.0 - frac)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::model::stream_rng;

    fn star() -> WeightedGraph {
        build_graph(5, &[(0, 1), (0, 2), (0, 3), (3, 4)], &[1.0, 0.5, -1.0, 2.0]).unwrap()
    }

    #[test]
    fn all_revealed_initialization() {
        let g = star();
        let data = LabeledDataset::new(vec![0, 1, 0, 1, 1], vec![true; 5], 2).unwrap();
        let v = init_messages(&g, &data, &mut stream_rng(0, 4)).unwrap();
        for e in 0..g.num_half_edges() {
            assert_eq!(v.values[e], data.spin(g.src(e)) as f64);
        }
    }

    #[test]
    fn unrevealed_initialization_is_balanced() {
        let pairs: Vec<_> = (0..20_000).map(|i| (i, i + 1)).collect();
        let g = build_graph(20_001, &pairs, &vec![1.0; pairs.len()]).unwrap();
        let data = LabeledDataset::new(vec![0; 20_001], vec![false; 20_001], 2).unwrap();
        let v = init_messages(&g, &data, &mut stream_rng(1, 4)).unwrap();
        let m2 = g.num_half_edges() as f64;
        let mean = v.values.iter().sum::<f64>() / m2;
        assert!(mean.abs() < 3.0 / m2.sqrt());
        assert!(v.values.iter().all(|&x| x == 1.0 || x == -1.0));
        let again = init_messages(&g, &data, &mut stream_rng(1, 4)).unwrap();
        assert_eq!(again, v);
    }

    #[test]
    fn rejects_multiclass_labels() {
        let g = star();
        let data = LabeledDataset::new(vec![0, 1, 2, 0, 1], vec![false; 5], 3).unwrap();
        assert!(matches!(
            init_messages(&g, &data, &mut stream_rng(0, 4)),
            Err(Error::NotBinary(3))
        ));
    }

    #[test]
    fn zero_iterations_pool_initial_messages() {
        let g = star();
        let data = LabeledDataset::new(vec![0, 1, 0, 1, 1], vec![false, true, true, true, false], 2).unwrap();
        let init = init_messages(&g, &data, &mut stream_rng(2, 4)).unwrap();
        let out = run_from(&g, &data, init.clone(), 0).unwrap();
        for i in 0..5 {
            let v: f64 = g
                .out_edges(i)
                .map(|e| g.weight(e) * init.values[g.twin(e)])
                .sum();
            assert_eq!(out.assignments[i], sign(v));
        }
    }

    #[test]
    fn isolated_nodes() {
        let g = build_graph(4, &[(0, 1)], &[1.0]).unwrap();
        let data = LabeledDataset::new(vec![1, 1, 1, 1], vec![true, true, true, false], 2).unwrap();
        let out = run_binary(&g, &data, 3, &mut stream_rng(0, 4)).unwrap();
        assert_eq!(out.pooled.values[2], 0.0);
        assert_eq!(out.assignments[2], -1);
        assert_eq!(out.assignments[3], 1);
    }

    #[test]
    fn accuracy_conventions() {
        let truth = [1i8, -1, 1, 1];
        let flipped: Vec<i8> = truth.iter().map(|s| -s).collect();
        let none = [false; 4];
        let some = [true, false, false, false];
        assert_eq!(accuracy(&truth, &truth, Scope::All, &none).unwrap(), 1.0);
        assert_eq!(accuracy(&flipped, &truth, Scope::All, &none).unwrap(), 1.0);
        assert_eq!(accuracy(&flipped, &truth, Scope::All, &some).unwrap(), 0.0);
        assert_eq!(
            accuracy(&[1, 1, 1, -1], &truth, Scope::Unlabeled, &some).unwrap(),
            1.0 / 3.0
        );
        assert!(accuracy(&truth, &truth[..3], Scope::All, &none).is_err());
        assert!(accuracy(&truth, &truth, Scope::Unlabeled, &[true; 4]).is_err());
    }

    #[test]
    fn random_guess_accuracy() {
        let mut rng = stream_rng(3, 0);
        let n = 10_000;
        let truth: Vec<i8> = (0..n).map(|_| if rng.random() { 1 } else { -1 }).collect();
        let est: Vec<i8> = (0..n).map(|_| if rng.random() { 1 } else { -1 }).collect();
        let mut revealed = vec![false; n];
        revealed[0] = true;
        let acc = accuracy(&est, &truth, Scope::All, &revealed).unwrap();
        assert!((acc - 0.5).abs() < 0.02, "{acc}");
    }
}
