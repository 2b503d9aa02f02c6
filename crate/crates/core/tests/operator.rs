//! Sparse operator against the dense reference matrix, on random graphs.

use nbwalk::graph::{apply_nb, apply_nb_transpose, dense_nb_matrix, pool, MessageState};
use nbwalk::multi::DeflationStack;
use nbwalk::{build_graph, sign, WeightedGraph};
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n)
        .prop_flat_map(|n| {
            let edge = (0..n, 1..n, -3.0f64..3.0);
            (Just(n), prop::collection::vec(edge, 1..3 * n))
        })
        .prop_map(|(n, edges)| {
            let pairs: Vec<(usize, usize)> = edges.iter().map(|&(i, off, _)| (i, (i + off) % n)).collect();
            let weights: Vec<f64> = edges.iter().map(|e| e.2).collect();
            build_graph(n, &pairs, &weights).unwrap()
        })
}

fn with_vector(max_n: usize) -> impl Strategy<Value = (WeightedGraph, Vec<f64>)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let m = g.num_half_edges();
        (Just(g), prop::collection::vec(-1.0f64..1.0, m))
    })
}

fn close(a: &[f64], b: &[f64], rel: f64) -> bool {
    let scale = b.iter().fold(1e-300f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= rel * scale)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn forward_matches_dense((g, v) in with_vector(12), k in 1usize..6) {
        let b = dense_nb_matrix(&g).unwrap();
        let mut state = MessageState::new(v.clone());
        let mut want = v;
        for _ in 0..k {
            state = apply_nb(&g, &state).unwrap();
            want = b.mul_vec(&want);
        }
        prop_assert!(close(&state.unscaled(), &want, 1e-9));
        prop_assert_eq!(state.iteration, k);
    }

    #[test]
    fn single_step_entrywise((g, v) in with_vector(12)) {
        let out = apply_nb(&g, &MessageState::new(v.clone())).unwrap();
        let want = dense_nb_matrix(&g).unwrap().mul_vec(&v);
        prop_assert!(close(&out.unscaled(), &want, 1e-12));
    }

    #[test]
    fn transpose_is_adjoint((g, u) in with_vector(12), seed in any::<u64>()) {
        let m = g.num_half_edges();
        let v: Vec<f64> = (0..m).map(|e| ((seed.wrapping_mul(e as u64 + 1) >> 20) % 1000) as f64 / 500.0 - 1.0).collect();
        let bu = apply_nb(&g, &MessageState::new(u.clone())).unwrap().unscaled();
        let btv = apply_nb_transpose(&g, &MessageState::new(v.clone())).unwrap().unscaled();
        let (lhs, rhs) = (dot(&bu, &v), dot(&u, &btv));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        let dense_t = dense_nb_matrix(&g).unwrap().transpose().mul_vec(&v);
        prop_assert!(close(&btv, &dense_t, 1e-12));
    }

    #[test]
    fn dense_rows_follow_the_predecessor_rule(g in graph_strategy(8)) {
        let b = dense_nb_matrix(&g).unwrap();
        for e in 0..g.num_half_edges() {
            for f in 0..g.num_half_edges() {
                let predecessor = g.dst(f) == g.src(e) && f != g.twin(e);
                prop_assert_eq!(b.get(e, f) != 0.0, predecessor && g.weight(f) != 0.0);
                if predecessor {
                    prop_assert_eq!(b.get(e, f), g.weight(f));
                }
            }
        }
    }

    #[test]
    fn pool_is_weighted_incoming_sum((g, v) in with_vector(10)) {
        let p = pool(&g, &MessageState::new(v.clone())).unwrap();
        for i in 0..g.n() {
            let want: f64 = (0..g.num_half_edges())
                .filter(|&e| g.dst(e) == i)
                .map(|e| g.weight(e) * v[e])
                .sum();
            prop_assert!((p.values[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn structure_invariants(g in graph_strategy(12)) {
        let mut degree_sum = 0;
        for e in 0..g.num_half_edges() {
            let t = g.twin(e);
            prop_assert_eq!(g.twin(t), e);
            prop_assert_eq!((g.src(t), g.dst(t)), (g.dst(e), g.src(e)));
            prop_assert_eq!(g.weight(t), g.weight(e));
            prop_assert!(g.src(e) != g.dst(e));
        }
        for i in 0..g.n() {
            degree_sum += g.degree(i);
            prop_assert!(g.out_edges(i).all(|e| g.src(e) == i));
        }
        prop_assert_eq!(degree_sum, g.num_half_edges());
        prop_assert_eq!(g.num_half_edges(), 2 * g.num_edges());
    }

    #[test]
    fn rescaling_keeps_pooled_signs((g, v) in with_vector(12), k in 1usize..8) {
        let mut scaled = MessageState::new(v.clone());
        let mut raw = v;
        let mut tmp = vec![0.0; raw.len()];
        for _ in 0..k {
            scaled = apply_nb(&g, &scaled).unwrap();
            g.nb_mul(&raw, &mut tmp);
            std::mem::swap(&mut raw, &mut tmp);
        }
        let a = pool(&g, &scaled).unwrap();
        let b = pool(&g, &MessageState::new(raw)).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            // Exact zeros can differ by rounding; compare only clear signs.
            if y.abs() > 1e-9 * b.values.iter().fold(0.0f64, |m, z| m.max(z.abs())) {
                prop_assert_eq!(sign(*x), sign(*y));
            }
        }
    }

    #[test]
    fn deflation_matches_dense((g, x) in with_vector(10), k in 1usize..4) {
        let m = g.num_half_edges();
        let mut stack = DeflationStack::new(&g);
        let mut dense = vec![dense_nb_matrix(&g).unwrap()];
        for c in 0..2 {
            let v: Vec<f64> = x.iter().enumerate().map(|(e, xe)| xe + ((e * 7 + c * 3) % 5) as f64 - 2.0).collect();
            if stack.push(v.clone()).is_err() {
                break;
            }
            let last = dense.last().unwrap();
            let z = last.mul_vec(&v);
            let u = last.transpose().mul_vec(&v);
            let mut next = last.clone();
            next.add_outer(-1.0 / dot(&v, &z), &z, &u);
            // The deflated operator annihilates the vector it was built from.
            let killed = stack.apply(c + 1, &v).unwrap();
            prop_assert!(killed.iter().all(|k| k.abs() <= 1e-9 * (1.0 + z.iter().fold(0.0f64, |a, b| a.max(b.abs())))));
            dense.push(next);
        }
        for (depth, mat) in dense.iter().enumerate() {
            let (mut got, mut want) = (x.clone(), x.clone());
            for _ in 0..k {
                got = stack.apply(depth, &got).unwrap();
                want = mat.mul_vec(&want);
            }
            // Deflation can cancel to exactly zero; measure error against
            // the size of the terms being summed instead of the result.
            let row_sum = |mat: &nbwalk::graph::DenseMatrix| {
                (0..m)
                    .map(|r| mat.row(r).iter().map(|a| a.abs()).sum::<f64>())
                    .fold(0.0f64, f64::max)
            };
            let terms = row_sum(&dense[0])
                + stack.stages()[..depth]
                    .iter()
                    .map(|s| {
                        let z = s.z.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                        let u: f64 = s.u.iter().map(|a| a.abs()).sum();
                        z * u / s.denom.abs()
                    })
                    .sum::<f64>();
            let x_max = x.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let bound = x_max * terms.powi(k as i32);
            prop_assert!(
                got.iter().zip(&want).all(|(a, b)| (a - b).abs() <= 1e-9 * bound.max(1e-300)),
                "depth {} m {}", depth, m
            );
        }
    }

    #[test]
    fn zero_state_stays_zero(g in graph_strategy(12)) {
        let z = MessageState::zeros(g.num_half_edges());
        let out = apply_nb(&g, &z).unwrap();
        prop_assert!(out.values.iter().all(|&x| x == 0.0));
        let out = apply_nb_transpose(&g, &z).unwrap();
        prop_assert!(out.values.iter().all(|&x| x == 0.0));
    }
}

#[test]
fn symmetric_path_transpose() {
    let g = build_graph(4, &[(0, 1), (1, 2), (2, 3)], &[1.0, 2.0, 0.5]).unwrap();
    let v: Vec<f64> = (0..g.num_half_edges()).map(|e| e as f64 - 2.5).collect();
    let got = apply_nb_transpose(&g, &MessageState::new(v.clone())).unwrap().unscaled();
    let want = dense_nb_matrix(&g).unwrap().transpose().mul_vec(&v);
    assert!(close(&got, &want, 1e-12));
}
