mod common;

use std::sync::OnceLock;

use common::{random_vec, random_weights, rng};
use hstrip::graph::{build_strip, check_spanning_tree, reflect_tree, tree_path, BaseGraph, StripGraph, Weights};
use hstrip::measure::local::LocalEnergy;
use hstrip::measure::{
    deform, deform_inverse, from_gradient, interpolated_hamiltonian, log_det_pinned, matrix_tree_check, to_gradient,
    weight_matrix, DeformationParams, FieldConfig, GradientConfig,
};
use hstrip::par::Execution;
use hstrip::sampler::{log_marginal, mcmc_t, sample_tree, SamplerConfig};
use hstrip::transfer::{GridSpec, KernelKind, TransferSystem};
use hstrip::tree_codec::{decode, encode, Alphabet};
use hstrip::vrjp::{paths_from_rho, rwre_path_prob, EnvWeights, PinnedGraph};
use proptest::prelude::*;
use rand::Rng;

fn k2_alphabet() -> &'static Alphabet {
    static A: OnceLock<Alphabet> = OnceLock::new();
    A.get_or_init(|| serde_json::from_str(include_str!("fixtures/k2_alphabet.json")).unwrap())
}

fn base(k: usize) -> BaseGraph {
    match k {
        0 => BaseGraph::single_vertex(),
        1 => BaseGraph::k2(),
        2 => BaseGraph::cycle(3).unwrap(),
        _ => BaseGraph::new(3, vec![(0, 1), (1, 2)], 1, vec![(0, 1), (1, 2)]).unwrap(),
    }
}

/// A strip with random weights and at most `max_vertices` vertices.
fn small_strip(k: usize, lo: i32, hi: i32, seed: u64, max_vertices: usize) -> StripGraph {
    let b = base(k);
    let mut r = rng(seed);
    let w = random_weights(&b, &mut r);
    let (mut lo, mut hi) = (lo, hi);
    while ((hi - lo + 1) as usize) * b.n_vertices() > max_vertices {
        if hi > -lo {
            hi -= 1;
        } else {
            lo += 1;
        }
    }
    build_strip(&b, lo, hi, &w).unwrap()
}

fn strip_strategy(max_vertices: usize) -> impl Strategy<Value = StripGraph> {
    (0usize..4, -3i32..=0, 0i32..=3, any::<u64>()).prop_map(move |(k, lo, hi, seed)| small_strip(k, lo, hi, seed, max_vertices))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_trees_are_spanning_and_paths_reverse(s in strip_strategy(40), seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_vec(s.n_vertices(), 2.0, &mut r);
        let tree = sample_tree(&s, &t, &mut r);
        prop_assert_eq!(tree.len(), s.n_vertices() - 1);
        prop_assert!(check_spanning_tree(&s, tree.edges()).is_ok());
        let (i, j) = (r.random_range(0..s.n_vertices()), r.random_range(0..s.n_vertices()));
        let forward = tree_path(&s, &tree, i, j).unwrap();
        let back: Vec<_> = tree_path(&s, &tree, j, i).unwrap().into_iter().rev().map(|e| e.reversed()).collect();
        prop_assert_eq!(forward, back);
    }

    #[test]
    fn reflection_is_an_involution(k in 0usize..4, h in 0i32..=3, seed in any::<u64>()) {
        let s = small_strip(k, -h, h, seed, 60);
        let mut r = rng(seed);
        let tree = sample_tree(&s, &random_vec(s.n_vertices(), 1.0, &mut r), &mut r);
        let once = reflect_tree(&s, &tree).unwrap();
        prop_assert!(check_spanning_tree(&s, once.edges()).is_ok());
        prop_assert_eq!(reflect_tree(&s, &once).unwrap(), tree);
    }

    #[test]
    fn laplacian_rows_vanish_and_pinned_det_is_positive(s in strip_strategy(30), seed in any::<u64>()) {
        let t = random_vec(s.n_vertices(), 3.0, &mut rng(seed));
        let a = weight_matrix(&s, &t);
        let scale = a.amax();
        for row in a.row_iter() {
            prop_assert!(row.sum().abs() <= 1e-12 * scale);
        }
        prop_assert!(log_det_pinned(&s, &t).unwrap().is_finite());
        prop_assert!(log_marginal(&s, &t).unwrap().is_finite());
    }

    #[test]
    fn matrix_tree_identity_on_small_strips(s in strip_strategy(9), seed in any::<u64>()) {
        let t = random_vec(s.n_vertices(), 2.0, &mut rng(seed));
        let (det, sum) = matrix_tree_check(&s, &t).unwrap();
        prop_assert!(det > 0.0);
        prop_assert!((det - sum).abs() <= 1e-10 * det);
    }

    #[test]
    fn gradient_map_round_trips(s in strip_strategy(40), seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = FieldConfig { t: random_vec(s.n_vertices(), 3.0, &mut r), s: random_vec(s.n_vertices(), 3.0, &mut r) };
        let back = from_gradient(&s, &to_gradient(&s, &f).unwrap()).unwrap();
        for (a, b) in f.t.iter().zip(&back.t).chain(f.s.iter().zip(&back.s)) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn deformation_inverts(hi in 1i32..=4, l in 1i32..=4, frac in -1.0f64..=1.0, seed in any::<u64>()) {
        let l = l.min(hi);
        let s = common::ladder(-1, hi);
        let params = DeformationParams { alpha: 0.1 * frac, eta: 1.0, c9: 0.1 };
        let mut r = rng(seed);
        let m = s.backbone().len();
        let g = GradientConfig { t0: 0.2, s0: -0.1, grad_t: random_vec(m, 1.5, &mut r), grad_y: random_vec(m, 1.5, &mut r) };
        let back = deform_inverse(&s, &deform(&s, &g, &params, l).unwrap(), &params, l).unwrap();
        for (a, b) in g.grad_t.iter().zip(&back.grad_t).chain(g.grad_y.iter().zip(&back.grad_y)) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn codec_round_trips_sampled_trees(lo in -6i32..=0, hi in 0i32..=6, seed in any::<u64>()) {
        let a = k2_alphabet();
        let s = common::ladder(lo, hi);
        let mut r = rng(seed);
        let tree = sample_tree(&s, &random_vec(s.n_vertices(), 2.0, &mut r), &mut r);
        let decoded = decode(&encode(&s, &tree).unwrap(), &s, a).unwrap();
        prop_assert!(check_spanning_tree(&s, decoded.edges()).is_ok());
        prop_assert_eq!(decoded, tree);
    }

    #[test]
    fn local_blocks_match_global_hamiltonian(lo in -4i32..=0, hi in 0i32..=4, seed in any::<u64>()) {
        let a = k2_alphabet();
        let mut r = rng(seed);
        let w = random_weights(a.base(), &mut r);
        let s = build_strip(a.base(), lo, hi, &w).unwrap();
        let tree = sample_tree(&s, &random_vec(s.n_vertices(), 1.0, &mut r), &mut r);
        let ids = a.encode_ids(&s, &tree).unwrap();
        let m = s.backbone().len();
        let g = GradientConfig { t0: r.random_range(-1.0..1.0), s0: 0.4, grad_t: random_vec(m, 1.5, &mut r), grad_y: random_vec(m, 1.5, &mut r) };
        let l = r.random_range(lo..=hi);
        let global = interpolated_hamiltonian(&s, &g, &tree, l).unwrap();
        let blocks = LocalEnergy::new(a, &w).unwrap().interpolated(&s, &g, &ids, l).unwrap().value();
        prop_assert!((global - blocks).abs() <= 1e-10 * (1.0 + global.abs()));
    }

    #[test]
    fn environment_chain_is_reversible_and_stochastic(s in strip_strategy(12), seed in any::<u64>()) {
        let pg = PinnedGraph::new(s);
        let t = random_vec(pg.strip().n_vertices(), 3.0, &mut rng(seed));
        let w = EnvWeights::from_t(&pg, &t).unwrap();
        prop_assert!(w.reversibility_defect(&pg) <= 4.0 * f64::EPSILON);
        let paths = paths_from_rho(&pg, 3);
        for len in 1..=3 {
            let total: f64 = paths.iter().filter(|p| p.len() == len + 1).map(|p| rwre_path_prob(&pg, &w, p).unwrap()).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sampler_is_deterministic_under_seed(seed in any::<u64>(), lo in -2i32..=0, hi in 0i32..=2) {
        let s = common::ladder(lo, hi);
        let c = SamplerConfig { seed, burn_in: 50, samples: 200, chains: 2, ..Default::default() };
        let obs = |t: &[f64], _: &[f64]| t.iter().sum::<f64>().tanh();
        let a = mcmc_t(&s, &c, obs);
        let b = mcmc_t(&s, &SamplerConfig { execution: Execution::Sequential, ..c }, obs);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn kernel_is_nonnegative_and_matvec_matches_dense(h in 0.3f64..2.0, seed in any::<u64>()) {
        let a = k2_alphabet();
        let w = Weights::uniform(a.base(), h, 1.0);
        let grid = GridSpec { points_per_dim: 3, hor_points: 8, ..GridSpec::default_for(&w, 1.0) };
        let sys = TransferSystem::new(a, &w, grid, 1.0, Execution::Sequential).unwrap();
        let x = random_vec(sys.dim(), 1.0, &mut rng(seed));
        for kind in [KernelKind::K, KernelKind::KPlus, KernelKind::KMinus] {
            let k = sys.kernel(kind);
            let dense = k.to_dense();
            prop_assert!(dense.iter().all(|&v| v >= 0.0));
            let y = k.matvec(&x);
            let z = &dense * nalgebra::DVector::from_column_slice(&x);
            for (a, b) in y.iter().zip(z.iter()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}
