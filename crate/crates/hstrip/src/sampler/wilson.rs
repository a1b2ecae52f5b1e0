//! Random spanning trees with probability proportional to `Π_{e∈T} w_e`.

use rand::Rng;

use crate::graph::{SpanningTree, StripGraph};

/// Wilson's algorithm rooted at the pin vertex, with edge weights
/// `w_e = β_e e^{tᵢ+tⱼ}`. This is the conditional law of `T` given `t`
/// under `μ⁰_L`.
pub fn sample_tree<R: Rng>(strip: &StripGraph, t: &[f64], rng: &mut R) -> SpanningTree {
    let n = strip.n_vertices();
    let weight: Vec<f64> = (0..strip.n_edges())
        .map(|e| {
            let ed = strip.edge(e);
            strip.beta(e) * (t[ed.tail] + t[ed.head]).exp()
        })
        .collect();
    let mut in_tree = vec![false; n];
    in_tree[strip.pin_vertex()] = true;
    let mut next: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX); n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for start in 0..n {
        let mut u = start;
        while !in_tree[u] {
            let nb = strip.neighbors(u);
            let total: f64 = nb.iter().map(|&(_, e)| weight[e]).sum();
            let mut x = rng.random::<f64>() * total;
            let mut pick = nb[nb.len() - 1];
            for &(v, e) in nb {
                x -= weight[e];
                if x < 0.0 {
                    pick = (v, e);
                    break;
                }
            }
            next[u] = pick;
            u = pick.0;
        }
        let mut u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            edges.push(next[u].1);
            u = next[u].0;
        }
    }
    edges.sort_unstable();
    SpanningTree::from_sorted_unchecked(edges)
}
