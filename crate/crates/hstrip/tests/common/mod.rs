#![allow(dead_code)]

use hstrip::graph::{build_strip, BaseGraph, StripGraph, Weights};
use nalgebra::DMatrix;

pub fn strip(base: &BaseGraph, lo: i32, hi: i32, beta: f64, eps: f64) -> StripGraph {
    build_strip(base, lo, hi, &Weights::uniform(base, beta, eps)).unwrap()
}

pub fn ladder(lo: i32, hi: i32) -> StripGraph {
    strip(&BaseGraph::k2(), lo, hi, 1.0, 1.0)
}

pub fn chain(lo: i32, hi: i32) -> StripGraph {
    strip(&BaseGraph::single_vertex(), lo, hi, 1.0, 1.0)
}

/// Number of spanning trees from the unweighted Laplacian with one row and
/// column removed.
pub fn matrix_tree_count(s: &StripGraph) -> f64 {
    let n = s.n_vertices();
    if n == 1 {
        return 1.0;
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    for e in 0..s.n_edges() {
        let ed = s.edge(e);
        l[(ed.tail, ed.tail)] += 1.0;
        l[(ed.head, ed.head)] += 1.0;
        l[(ed.tail, ed.head)] -= 1.0;
        l[(ed.head, ed.tail)] -= 1.0;
    }
    l.remove_row(0).remove_column(0).determinant()
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Weights with every entry drawn from `[0.5, 2]`.
pub fn random_weights(base: &BaseGraph, r: &mut ChaCha8Rng) -> Weights {
    Weights {
        vertical: (0..base.n_edges()).map(|_| r.random_range(0.5..2.0)).collect(),
        horizontal: (0..base.n_vertices()).map(|_| r.random_range(0.5..2.0)).collect(),
        epsilon: r.random_range(0.5..2.0),
    }
}

pub fn random_vec(n: usize, scale: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-scale..scale)).collect()
}

/// A selection of small strips over several base graphs, all with at most
/// 12 vertices, and random weights.
pub fn small_strips(seed: u64) -> Vec<StripGraph> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    let shapes: Vec<(BaseGraph, Vec<(i32, i32)>)> = vec![
        (BaseGraph::single_vertex(), vec![(0, 0), (0, 1), (-1, 1), (-3, 4)]),
        (BaseGraph::k2(), vec![(0, 0), (0, 1), (-1, 1), (-2, 2), (-1, 4)]),
        (BaseGraph::cycle(3).unwrap(), vec![(0, 0), (0, 1), (-1, 1), (-2, 1)]),
        (BaseGraph::cycle(4).unwrap(), vec![(0, 0), (0, 1), (-1, 1)]),
        (
            BaseGraph::new(3, vec![(0, 1), (1, 2)], 1, vec![(0, 1), (1, 2)]).unwrap(),
            vec![(0, 2), (-1, 1)],
        ),
    ];
    for (base, ranges) in shapes {
        for (lo, hi) in ranges {
            let w = random_weights(&base, &mut r);
            out.push(build_strip(&base, lo, hi, &w).unwrap());
        }
    }
    out
}
