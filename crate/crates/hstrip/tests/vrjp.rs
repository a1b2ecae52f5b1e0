mod common;

use common::{random_vec, rng};
use hstrip::graph::{build_strip, BaseGraph, Weights};
use hstrip::par::Execution;
use hstrip::sampler::SamplerConfig;
use hstrip::vrjp::*;
use hstrip::Error;

fn pinned(base: &BaseGraph, lo: i32, hi: i32, beta: f64, eps: f64) -> PinnedGraph {
    PinnedGraph::new(build_strip(base, lo, hi, &Weights::uniform(base, beta, eps)).unwrap())
}

fn two_vertex(eps: f64) -> PinnedGraph {
    pinned(&BaseGraph::single_vertex(), 0, 0, 1.0, eps)
}

fn three_vertex() -> PinnedGraph {
    pinned(&BaseGraph::k2(), 0, 0, 1.0, 1.0)
}

fn env_config(seed: u64, samples: usize) -> SamplerConfig {
    SamplerConfig { seed, burn_in: 500, samples, ..Default::default() }
}

#[test]
fn pinned_graph_shape() {
    let pg = three_vertex();
    let rho = pg.rho();
    assert_eq!(pg.n_vertices(), 3);
    assert_eq!(pg.neighbors(rho), &[(pg.strip().pin_vertex(), 1.0)]);
    assert_eq!(pg.label(rho), "rho");
    assert_eq!(pg.label(1), "(0,1)");
    let pg = two_vertex(2.5);
    assert_eq!(pg.neighbors(pg.rho()), &[(0, 2.5)]);
    assert_eq!(pg.neighbors(0), &[(1, 2.5)]);
}

#[test]
fn first_holding_time_is_exponential() {
    let eps = 2.0;
    let pg = two_vertex(eps);
    let mut r = rng(1);
    let n = 100_000;
    let h: Vec<f64> = (0..n).map(|_| simulate_vrjp(&pg, 50.0, &mut r).unwrap().jump_times[0]).collect();
    let mean = h.iter().sum::<f64>() / n as f64;
    let sd = (h.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    assert!((mean - 1.0 / eps).abs() <= 3.0 * sd / (n as f64).sqrt(), "{mean}");
}

/// Kolmogorov–Smirnov statistic against `Exp(rate)`.
fn ks_exponential(mut xs: Vec<f64>, rate: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-rate * x).exp();
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn holding_times_and_targets_follow_current_rates() {
    let pg = pinned(&BaseGraph::k2(), -1, 1, 1.5, 0.7);
    let pin = pg.strip().pin_vertex();
    let mut state = VrjpState::start(&pg);
    state.position = pin;
    for (v, lt) in state.local_time.iter_mut().enumerate() {
        *lt = 0.3 * v as f64;
    }
    let rates: Vec<(usize, f64)> = pg.neighbors(pin).iter().map(|&(j, b)| (j, b * (1.0 + state.local_time[j]))).collect();
    let total: f64 = rates.iter().map(|r| r.1).sum();
    assert!((state.total_rate(&pg) - total).abs() < 1e-14);
    let mut r = rng(2);
    let n = 20_000;
    let mut holds = Vec::with_capacity(n);
    let mut targets = vec![0usize; pg.n_vertices()];
    for _ in 0..n {
        let mut s = state.clone();
        let h = s.step(&pg, &mut r);
        assert_eq!(s.local_time[pin], state.local_time[pin] + h);
        assert_eq!(s.clock, h);
        holds.push(h);
        targets[s.position] += 1;
    }
    let d = ks_exponential(holds, total);
    assert!(d < 1.628 / (n as f64).sqrt(), "KS {d}");
    for (j, rate) in rates {
        let p = rate / total;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((targets[j] as f64 / n as f64 - p).abs() < 4.0 * sd);
    }
}

#[test]
fn skeleton_basics() {
    let pg = two_vertex(1.0);
    let mut r = rng(3);
    let traj = simulate_vrjp(&pg, 20.0, &mut r).unwrap();
    let sk = skeleton(&traj);
    assert!(traj.n_jumps() >= 1);
    assert_eq!(sk.len(), traj.n_jumps() + 1);
    for (k, &v) in sk.iter().enumerate() {
        assert_eq!(v, if k % 2 == 0 { pg.rho() } else { 0 });
    }
    let total: f64 = traj.local_time.iter().sum();
    assert!((total - traj.horizon).abs() < 1e-12);
    assert!(traj.jump_times.windows(2).all(|w| w[0] <= w[1]));
    assert!(simulate_vrjp(&pg, 0.0, &mut r).is_err());
    assert_eq!(simulate_skeleton(&pg, 4, &mut r), vec![1, 0, 1, 0, 1]);
}

#[test]
fn rwre_path_probabilities() {
    let pg = two_vertex(1.0);
    let w = EnvWeights::from_t(&pg, &[0.7]).unwrap();
    assert_eq!(rwre_path_prob(&pg, &w, &[1, 0, 1, 0, 1]).unwrap(), 1.0);

    let pg = three_vertex();
    let (rho, o, x) = (pg.rho(), pg.strip().pin_vertex(), 1);
    let t = [0.4, -0.9];
    let w = EnvWeights::from_t(&pg, &t).unwrap();
    let w_ro = (t[0]).exp();
    let w_ox = (t[0] + t[1]).exp();
    assert!((rwre_path_prob(&pg, &w, &[rho, o, rho]).unwrap() - w_ro / (w_ro + w_ox)).abs() < 1e-15);
    assert_eq!(rwre_path_prob(&pg, &w, &[rho, x]).unwrap(), 0.0);
    assert!(rwre_path_prob(&pg, &w, &[o, rho]).is_err());
    assert!(matches!(rwre_path_prob(&pg, &w, &[rho, 9]), Err(Error::VertexOutOfRange(9))));
    let paths = paths_from_rho(&pg, 3);
    assert_eq!(paths.len(), 5);
    for len in 1..=3 {
        let s: f64 = paths.iter().filter(|p| p.len() == len + 1).map(|p| rwre_path_prob(&pg, &w, p).unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }
}

#[test]
fn environment_chain_is_reversible() {
    let mut r = rng(4);
    let pg = pinned(&BaseGraph::cycle(3).unwrap(), -2, 2, 1.3, 0.6);
    for _ in 0..50 {
        let t = random_vec(pg.strip().n_vertices(), 3.0, &mut r);
        let w = EnvWeights::from_t(&pg, &t).unwrap();
        assert!(w.reversibility_defect(&pg) <= 4.0 * f64::EPSILON);
        for i in 0..pg.n_vertices() {
            for &(j, _) in pg.neighbors(i) {
                assert_eq!(w.weight(&pg, i, j), w.weight(&pg, j, i));
            }
            let s: f64 = pg.neighbors(i).iter().map(|&(j, _)| w.transition(&pg, i, j)).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
    assert!(EnvWeights::from_t(&pg, &[0.0]).is_err());
}

#[test]
fn mixing_on_two_smallest_pinned_graphs() {
    for (pg, n_vrjp) in [(two_vertex(1.0), 10_000), (three_vertex(), 100_000)] {
        let rep = mixing_check(&pg, 3, n_vrjp, &env_config(5, 2500)).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.n_env, 10_000);
        assert_eq!(rep.paths[0].vrjp, 1.0);
        assert_eq!(rep.paths[0].mixture, 1.0);
        for &(_, a, b) in &rep.totals {
            assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn fixed_environment_is_distinguishable() {
    // The uniform environment t ≡ 0 gives P(ρ, 0̄, x) = 1/2; the VRJP does not.
    let pg = three_vertex();
    let w = EnvWeights::from_t(&pg, &[0.0, 0.0]).unwrap();
    let fixed = rwre_path_prob(&pg, &w, &[pg.rho(), 0, 1]).unwrap();
    let rep = mixing_check(&pg, 2, 100_000, &env_config(6, 2500)).unwrap();
    let direct = rep.paths.iter().find(|p| p.path == ["rho", "(0,0)", "(0,1)"]).unwrap();
    assert!((direct.vrjp - fixed).abs() > 10.0 * direct.vrjp_stderr);
}

#[test]
fn mixing_check_is_deterministic() {
    let pg = three_vertex();
    let a = mixing_check(&pg, 2, 2000, &env_config(7, 500)).unwrap();
    let b = mixing_check(&pg, 2, 2000, &SamplerConfig { execution: Execution::Sequential, ..env_config(7, 500) }).unwrap();
    assert_eq!(a, b);
    assert!(mixing_check(&pg, 0, 10, &env_config(7, 500)).is_err());
}

#[test]
fn localization_on_short_runs() {
    let pg = pinned(&BaseGraph::k2(), -16, 16, 1.0, 1.0);
    let cfg = LocalizationConfig::for_steps(8, 10_000);
    assert_eq!(cfg.range_times, vec![1000, 10_000]);
    let rep = localization_stats(&pg, 10_000, 200, &cfg).unwrap();
    assert_eq!(rep.occupation[0].max_occupation, 1.0);
    assert!(rep.occupation[0].max_occupation > rep.occupation[10].max_occupation);
    assert!(rep.slope_upper_95() < 0.0, "{} ± {}", rep.slope, rep.slope_stderr);
    assert!(rep.range.iter().all(|r| r.mean > 0.0 && r.max as f64 >= r.mean));
    assert_eq!(rep.range_increments.len(), 1);
    let seq = LocalizationConfig { execution: Execution::Sequential, ..cfg.clone() };
    assert_eq!(localization_stats(&pg, 10_000, 200, &seq).unwrap(), rep);

    let short = pinned(&BaseGraph::k2(), -5, 5, 1.0, 1.0);
    assert!(matches!(localization_stats(&short, 100, 100, &cfg), Err(Error::InvalidParameter { .. })));
}
