//! Sparse weighted similarity graph stored as directed half-edges.
//!
//! Every sampled undirected pair `{i, j}` becomes two half-edges `i→j` and
//! `j→i` that share one weight. Half-edges are grouped by source node, and
//! each one knows the index of its reverse (its twin). Messages of the
//! non-backtracking walk live on half-edges, so one application of the
//! operator is a pair of contiguous scans over the half-edge arrays.

use std::collections::HashSet;
use std::ops::Range;

use crate::error::{Error, Result};

/// Largest number of half-edges accepted by [`dense_nb_matrix`].
pub const DENSE_LIMIT: usize = 4000;

/// Undirected weighted graph in half-edge form.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    offsets: Vec<usize>,
    src: Vec<u32>,
    dst: Vec<u32>,
    weight: Vec<f64>,
    twin: Vec<usize>,
    duplicates: usize,
}

impl WeightedGraph {
    /// Builds a graph on `n` nodes from undirected `pairs` with one weight each.
    ///
    /// Self-loops and out-of-range endpoints are rejected. Repeated pairs
    /// (in either orientation) are dropped, keeping the first occurrence; the
    /// number dropped is available from [`WeightedGraph::duplicates_dropped`].
    pub fn build(n: usize, pairs: &[(usize, usize)], weights: &[f64]) -> Result<Self> {
        if pairs.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: pairs.len(),
                found: weights.len(),
            });
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("too many nodes: {n}")));
        }

        let mut seen = HashSet::with_capacity(pairs.len());
        let mut kept = Vec::with_capacity(pairs.len());
        let mut degree = vec![0usize; n];
        for (idx, (&(a, b), &w)) in pairs.iter().zip(weights).enumerate() {
            for node in [a, b] {
                if node >= n {
                    return Err(Error::EndpointOutOfRange { node, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight(idx));
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if seen.insert(lo as u64 * n as u64 + hi as u64) {
                kept.push((a, b, w));
                degree[a] += 1;
                degree[b] += 1;
            }
        }

        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = 2 * kept.len();
        let mut src = vec![0u32; total];
        let mut dst = vec![0u32; total];
        let mut weight = vec![0.0; total];
        let mut twin = vec![0usize; total];
        let mut cursor = offsets[..n].to_vec();
        for &(a, b, w) in &kept {
            let ab = cursor[a];
            cursor[a] += 1;
            let ba = cursor[b];
            cursor[b] += 1;
            src[ab] = a as u32;
            dst[ab] = b as u32;
            src[ba] = b as u32;
            dst[ba] = a as u32;
            weight[ab] = w;
            weight[ba] = w;
            twin[ab] = ba;
            twin[ba] = ab;
        }

        Ok(Self {
            n,
            offsets,
            src,
            dst,
            weight,
            twin,
            duplicates: pairs.len() - kept.len(),
        })
    }

    /// A graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            offsets: vec![0; n + 1],
            src: Vec::new(),
            dst: Vec::new(),
            weight: Vec::new(),
            twin: Vec::new(),
            duplicates: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_half_edges(&self) -> usize {
        self.src.len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.src.len() / 2
    }

    pub fn duplicates_dropped(&self) -> usize {
        self.duplicates
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    /// Half-edges leaving `node`.
    pub fn out_edges(&self, node: usize) -> Range<usize> {
        self.offsets[node]..self.offsets[node + 1]
    }

    pub fn src(&self, e: usize) -> usize {
        self.src[e] as usize
    }

    pub fn dst(&self, e: usize) -> usize {
        self.dst[e] as usize
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.weight[e]
    }

    pub fn twin(&self, e: usize) -> usize {
        self.twin[e]
    }

    /// Per-half-edge weights.
    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// Neighbors of `node` with the connecting weight.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.out_edges(node)
            .map(move |e| (self.dst[e] as usize, self.weight[e]))
    }

    /// Undirected edges `(i, j, w)` with `i < j`, in half-edge order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_half_edges())
            .filter(move |&e| self.src[e] < self.dst[e])
            .map(move |e| (self.src[e] as usize, self.dst[e] as usize, self.weight[e]))
    }

    /// Same topology with every weight replaced by `f(weight)`.
    pub fn map_weights(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for w in &mut out.weight {
            *w = f(*w);
        }
        out
    }

    /// Same topology keeping only the undirected edges accepted by `keep`.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize, f64) -> bool) -> Self {
        let (pairs, weights): (Vec<_>, Vec<_>) = self
            .edges()
            .filter(|&(i, j, w)| keep(i, j, w))
            .map(|(i, j, w)| ((i, j), w))
            .unzip();
        Self::build(self.n, &pairs, &weights).expect("subgraph of a valid graph is valid")
    }

    /// `out = B x`, where `B[(i→j),(k→l)] = w_kl·1(i = l)·1(k ≠ j)`.
    ///
    /// Each node computes `S_i = Σ_{l∈∂i} w_il x(l→i)` once and every
    /// outgoing message is `S_i − w_ij x(j→i)`.
    pub fn nb_mul(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.num_half_edges());
        debug_assert_eq!(out.len(), self.num_half_edges());
        for i in 0..self.n {
            let range = self.out_edges(i);
            let mut total = 0.0;
            for e in range.clone() {
                let incoming = self.weight[e] * x[self.twin[e]];
                out[e] = incoming;
                total += incoming;
            }
            for e in range {
                out[e] = total - out[e];
            }
        }
    }

    /// `out = Bᵀ x`.
    ///
    /// `(Bᵀx)(k→l) = w_kl (T_l − x(l→k))` with `T_l = Σ_{j∈∂l} x(l→j)`.
    pub fn nb_mul_transpose(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.num_half_edges());
        debug_assert_eq!(out.len(), self.num_half_edges());
        for l in 0..self.n {
            let range = self.out_edges(l);
            let total: f64 = x[range.clone()].iter().sum();
            for f in range {
                out[self.twin[f]] = self.weight[f] * (total - x[f]);
            }
        }
    }

    /// `out[i] = Σ_{l∈∂i} w_il x(l→i)`.
    pub fn pool_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.num_half_edges());
        debug_assert_eq!(out.len(), self.n);
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self
                .out_edges(i)
                .map(|e| self.weight[e] * x[self.twin[e]])
                .sum();
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_half_edges() {
            return Err(Error::LengthMismatch {
                expected: self.num_half_edges(),
                found: len,
            });
        }
        Ok(())
    }
}

/// Materializes a graph; free-function form of [`WeightedGraph::build`].
pub fn build_graph(n: usize, pairs: &[(usize, usize)], weights: &[f64]) -> Result<WeightedGraph> {
    WeightedGraph::build(n, pairs, weights)
}

/// Subtracts the empirical mean: `w(s) = s − s̄`.
pub fn center_weights(similarities: &[f64]) -> Result<Vec<f64>> {
    if similarities.is_empty() {
        return Err(Error::EmptyInput("similarities"));
    }
    let mean = similarities.iter().sum::<f64>() / similarities.len() as f64;
    Ok(similarities.iter().map(|s| s - mean).collect())
}

/// Messages on half-edges, together with the logarithm of the total positive
/// factor they have been divided by.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    pub values: Vec<f64>,
    pub iteration: usize,
    pub log_scale: f64,
}

impl MessageState {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            iteration: 0,
            log_scale: 0.0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![0.0; len])
    }

    /// Divides by the largest absolute value and records the factor.
    /// An all-zero state is left untouched.
    pub fn rescale(&mut self) {
        let peak = max_abs(&self.values);
        if peak > 0.0 && peak.is_finite() {
            for v in &mut self.values {
                *v /= peak;
            }
            self.log_scale += peak.ln();
        }
    }

    /// Values with the accumulated scaling folded back in.
    pub fn unscaled(&self) -> Vec<f64> {
        let factor = self.log_scale.exp();
        self.values.iter().map(|v| v * factor).collect()
    }
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// One non-backtracking step followed by max-abs rescaling.
pub fn apply_nb(g: &WeightedGraph, v: &MessageState) -> Result<MessageState> {
    g.check_len(v.values.len())?;
    let mut out = vec![0.0; v.values.len()];
    g.nb_mul(&v.values, &mut out);
    let mut next = MessageState {
        values: out,
        iteration: v.iteration + 1,
        log_scale: v.log_scale,
    };
    next.rescale();
    Ok(next)
}

/// One step of the transposed operator followed by max-abs rescaling.
pub fn apply_nb_transpose(g: &WeightedGraph, v: &MessageState) -> Result<MessageState> {
    g.check_len(v.values.len())?;
    let mut out = vec![0.0; v.values.len()];
    g.nb_mul_transpose(&v.values, &mut out);
    let mut next = MessageState {
        values: out,
        iteration: v.iteration + 1,
        log_scale: v.log_scale,
    };
    next.rescale();
    Ok(next)
}

/// Per-node pooled messages.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledVector {
    pub values: Vec<f64>,
}

impl PooledVector {
    /// `sign(v̂_i)` with `sign(0) = +1`.
    pub fn signs(&self) -> Vec<i8> {
        self.values.iter().map(|&v| sign(v)).collect()
    }
}

/// Sign with ties resolved to `+1`.
pub fn sign(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// Pools incoming messages at every node. The result is expressed in the
/// scale of `v.values` (rescaling does not change signs).
pub fn pool(g: &WeightedGraph, v: &MessageState) -> Result<PooledVector> {
    g.check_len(v.values.len())?;
    let mut values = vec![0.0; g.n()];
    g.pool_into(&v.values, &mut values);
    Ok(PooledVector { values })
}

/// Row-major square matrix, used as a reference for the sparse operators.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// `self += scale · x yᵀ`.
    pub fn add_outer(&mut self, scale: f64, x: &[f64], y: &[f64]) {
        for (row, &xr) in self.data.chunks_mut(self.dim).zip(x) {
            for (cell, &yc) in row.iter_mut().zip(y) {
                *cell += scale * xr * yc;
            }
        }
    }
}

/// Dense non-backtracking matrix. Only for small graphs.
pub fn dense_nb_matrix(g: &WeightedGraph) -> Result<DenseMatrix> {
    let m2 = g.num_half_edges();
    if m2 > DENSE_LIMIT {
        return Err(Error::GraphTooLarge {
            half_edges: m2,
            limit: DENSE_LIMIT,
        });
    }
    let mut b = DenseMatrix::zeros(m2);
    for row in 0..m2 {
        let (i, j) = (g.src(row), g.dst(row));
        for col in 0..m2 {
            let (k, l) = (g.src(col), g.dst(col));
            if i == l && k != j {
                b.set(row, col, g.weight(col));
            }
        }
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3(w: [f64; 2]) -> WeightedGraph {
        build_graph(3, &[(0, 1), (1, 2)], &w).unwrap()
    }

    fn triangle() -> WeightedGraph {
        build_graph(3, &[(0, 1), (1, 2), (0, 2)], &[1.0; 3]).unwrap()
    }

    fn edge_index(g: &WeightedGraph, a: usize, b: usize) -> usize {
        g.out_edges(a).find(|&e| g.dst(e) == b).unwrap()
    }

    #[test]
    fn smallest_graph() {
        let g = build_graph(2, &[(0, 1)], &[0.5]).unwrap();
        assert_eq!(g.num_half_edges(), 2);
        assert_eq!(g.twin(0), 1);
        assert_eq!(g.twin(1), 0);
        assert_eq!(g.weight(0), 0.5);
        assert_eq!(g.weight(1), 0.5);
    }

    #[test]
    fn path_degrees() {
        let g = path3([1.0, -1.0]);
        assert_eq!(g.num_half_edges(), 4);
        assert_eq!((0..3).map(|i| g.degree(i)).collect::<Vec<_>>(), [1, 2, 1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            build_graph(3, &[(0, 0)], &[1.0]),
            Err(Error::SelfLoop(0))
        ));
        assert!(matches!(
            build_graph(3, &[(0, 3)], &[1.0]),
            Err(Error::EndpointOutOfRange { node: 3, n: 3 })
        ));
        assert!(matches!(
            build_graph(3, &[(0, 1)], &[f64::NAN]),
            Err(Error::NonFiniteWeight(0))
        ));
        assert!(build_graph(3, &[(0, 1)], &[]).is_err());
    }

    #[test]
    fn duplicates_keep_first() {
        let g = build_graph(3, &[(0, 1), (1, 0), (0, 1), (1, 2)], &[2.0, 3.0, 4.0, 1.0]).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.duplicates_dropped(), 2);
        assert_eq!(g.weight(edge_index(&g, 1, 0)), 2.0);
    }

    #[test]
    fn centering() {
        assert_eq!(center_weights(&[1.0, 3.0]).unwrap(), [-1.0, 1.0]);
        assert_eq!(center_weights(&[5.0; 3]).unwrap(), [0.0; 3]);
        let c = center_weights(&[0.2, 0.4, 0.9]).unwrap();
        for (got, want) in c.iter().zip([-0.3, -0.1, 0.4]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(center_weights(&[]).is_err());
    }

    #[test]
    fn path_leaf_edges_receive_nothing() {
        let g = path3([1.0, 1.0]);
        let mut out = vec![0.0; 4];
        g.nb_mul(&[1.0; 4], &mut out);
        assert_eq!(out[edge_index(&g, 0, 1)], 0.0);
        assert_eq!(out[edge_index(&g, 1, 2)], 1.0);
        assert_eq!(out[edge_index(&g, 1, 0)], 1.0);
        assert_eq!(out[edge_index(&g, 2, 1)], 0.0);
    }

    #[test]
    fn triangle_has_one_predecessor_per_edge() {
        let g = triangle();
        let mut out = vec![0.0; 6];
        g.nb_mul(&[1.0; 6], &mut out);
        assert_eq!(out, [1.0; 6]);

        let b = dense_nb_matrix(&g).unwrap();
        for r in 0..6 {
            let nz: Vec<f64> = b.row(r).iter().copied().filter(|&x| x != 0.0).collect();
            assert_eq!(nz, [1.0]);
        }
    }

    #[test]
    fn single_edge_dense_matrix_is_zero() {
        let g = build_graph(2, &[(0, 1)], &[0.7]).unwrap();
        assert_eq!(dense_nb_matrix(&g).unwrap(), DenseMatrix::zeros(2));
    }

    #[test]
    fn zero_messages_stay_zero() {
        let g = triangle();
        let v = apply_nb(&g, &MessageState::zeros(6)).unwrap();
        assert_eq!(v.values, [0.0; 6]);
        assert_eq!(v.log_scale, 0.0);
        let t = apply_nb_transpose(&g, &MessageState::zeros(6)).unwrap();
        assert_eq!(t.values, [0.0; 6]);
    }

    #[test]
    fn rescale_bounds_messages() {
        let g = path3([3.0, 5.0]);
        let v = apply_nb(&g, &MessageState::new(vec![2.0; 4])).unwrap();
        assert!(max_abs(&v.values) <= 1.0);
        assert_eq!(v.iteration, 1);
        let mut raw = vec![0.0; 4];
        g.nb_mul(&[2.0; 4], &mut raw);
        for (a, b) in v.unscaled().iter().zip(&raw) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn size_mismatch() {
        let g = triangle();
        let v = MessageState::zeros(5);
        assert!(apply_nb(&g, &v).is_err());
        assert!(apply_nb_transpose(&g, &v).is_err());
        assert!(pool(&g, &v).is_err());
    }

    #[test]
    fn pooling() {
        let g = build_graph(2, &[(0, 1)], &[2.0]).unwrap();
        let p = pool(&g, &MessageState::new(vec![1.0, 1.0])).unwrap();
        assert_eq!(p.values, [2.0, 2.0]);

        let g = build_graph(3, &[(0, 1)], &[1.0]).unwrap();
        let p = pool(&g, &MessageState::new(vec![1.0, 1.0])).unwrap();
        assert_eq!(p.values[2], 0.0);
    }

    #[test]
    fn sign_ties_positive() {
        assert_eq!(sign(0.0), 1);
        assert_eq!(sign(-0.0), 1);
        assert_eq!(sign(-1e-300), -1);
    }

    #[test]
    fn dense_limit() {
        let pairs: Vec<_> = (0..2001).map(|i| (i, i + 1)).collect();
        let g = build_graph(2002, &pairs, &vec![1.0; 2001]).unwrap();
        assert!(matches!(
            dense_nb_matrix(&g),
            Err(Error::GraphTooLarge { .. })
        ));
    }
}
