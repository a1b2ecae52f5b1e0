mod common;

use hstrip::graph::{build_strip, BaseGraph, Weights};
use hstrip::measure::local::{horizontal_gradients, level_gauge, Block, LocalEnergy};
use hstrip::measure::{chi_tilde, interpolated_hamiltonian, DeformationParams, GradientConfig};
use hstrip::par::Execution;
use hstrip::transfer::*;
use hstrip::tree_codec::{alphabet, Alphabet};
use hstrip::Error;

fn system(base: &BaseGraph, weights: &Weights, eta: f64, edit: impl Fn(&mut GridSpec)) -> (Alphabet, TransferSystem) {
    let a = alphabet(base).unwrap();
    let mut g = GridSpec::default_for(weights, eta);
    edit(&mut g);
    let sys = TransferSystem::new(&a, weights, g, eta, Execution::Parallel).unwrap();
    (a, sys)
}


/// Composite Simpson weights on `[a, b]` with `n` (even) intervals.
fn simpson(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|k| {
            let c = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            (a + k as f64 * h, c * h / 3.0)
        })
        .collect()
}

/// `∫∫_{[−R,R]²} f(u, y) e^{−H_mitte} du dy` with the mitte energy from the
/// local-energy evaluator and a plain Simpson rule.
fn mitte_integral(
    local: &LocalEnergy,
    b: &Block,
    b2: &Block,
    r_u: (f64, f64),
    r_y: f64,
    n: (usize, usize),
    shift: f64,
    f: impl Fn(f64, f64) -> f64,
) -> f64 {
    let (us, ys) = (simpson(r_u.0, r_u.1, n.0), simpson(-r_y, r_y, n.1));
    let mut acc = 0.0;
    for &(u, wu) in &us {
        for &(y, wy) in &ys {
            let e = local.mitte_pm(b, (u, y), b2, shift).unwrap().boltzmann();
            acc += wu * wy * f(u, y) * e;
        }
    }
    acc
}

fn block_of(sys: &TransferSystem, row: usize) -> Block {
    let (tau, i) = sys.state(row);
    let (t, y) = sys.node(i);
    Block { grad_t: t.to_vec(), grad_y: y.to_vec(), tau }
}

#[test]
fn single_vertex_kernels_match_quadrature() {
    let base = BaseGraph::single_vertex();
    for beta in [0.5, 1.0, 2.5] {
        let w = Weights::uniform(&base, beta, 1.0);
        let (a, sys) = system(&base, &w, 1.0, |_| {});
        assert_eq!(sys.dim(), 1);
        let local = LocalEnergy::new(&a, &w).unwrap();
        let b = Block { grad_t: vec![], grad_y: vec![], tau: 0 };
        let r = sys.grid().radius;
        for (kind, shift) in [(KernelKind::K, 0.0), (KernelKind::KPlus, 1.0), (KernelKind::KMinus, -1.0)] {
            let want = mitte_integral(&local, &b, &b, (-r, r), 10.0 / beta.sqrt(), (1000, 1000), shift, |_, _| 1.0);
            let got = sys.kernel(kind).entry(0, 0);
            assert!(got > 0.0);
            assert!((got - want).abs() < 1e-9 * want, "{kind:?} beta={beta}: {got} vs {want}");
        }
        let odd = sys.kernel(KernelKind::KTilde(0.0)).entry(0, 0);
        assert!(odd.abs() < 1e-12, "{odd}");
        let eta = sys.eta();
        let want = mitte_integral(&local, &b, &b, (-eta, eta), eta, (1000, 1000), 0.0, |u, y| chi_tilde((u * u + y * y) / (eta * eta)));
        let got = sys.kernel(KernelKind::Cutoff).entry(0, 0);
        assert!((got - want).abs() < 1e-6 * want, "cutoff {got} vs {want}");

        let sp = perron(&sys.kernel(KernelKind::K)).unwrap();
        assert_eq!(sp.lambda, sys.kernel(KernelKind::K).entry(0, 0));
        assert_eq!(sp.phi_right, vec![1.0]);
        assert!((sp.phi_left[0] - 1.0).abs() < 1e-15);
        assert_eq!(sp.gap_ratio, 0.0);
    }
}

#[test]
fn k2_kernel_entries_match_local_energy() {
    let base = BaseGraph::k2();
    let w = Weights { vertical: vec![1.3], horizontal: vec![0.8, 1.1], epsilon: 1.0 };
    let eta = 1.5;
    let (a, sys) = system(&base, &w, eta, |g| {
        g.points_per_dim = 7;
        g.asymmetry = 0.2;
    });
    let local = LocalEnergy::new(&a, &w).unwrap();
    let r = sys.grid().radius;
    let u_range = (-r * 0.8, r);
    let mut rng = common::rng(7);
    use rand::Rng;
    let mut checked = 0;
    while checked < 4 {
        let (row, col) = (rng.random_range(0..sys.dim()), rng.random_range(0..sys.dim()));
        let (b, b2) = (block_of(&sys, row), block_of(&sys, col));
        // The Simpson oracle resolves the y_hor Gaussian only for moderate φ;
        // the analytic rule integrates y_hor over the whole line.
        if b.grad_t[0].abs() > 2.0 || b2.grad_t[0].abs() > 2.0 {
            continue;
        }
        if !a.follows(b.tau, b2.tau) {
            assert_eq!(sys.kernel(KernelKind::K).entry(row, col), 0.0);
            continue;
        }
        checked += 1;
        let cut = |blk: &Block| chi_tilde((blk.grad_t[0].powi(2) + blk.grad_y[0].powi(2)) / (eta * eta));
        let c = cut(&b) * cut(&b2);
        for (kind, shift) in [(KernelKind::K, 0.0), (KernelKind::KPlus, 1.0), (KernelKind::KMinus, -1.0)] {
            let want = mitte_integral(&local, &b, &b2, u_range, 5.0 * r, (400, 2000), shift, |_, _| 1.0);
            let got = sys.kernel(kind).kernel_value(row, col);
            assert!((got - want).abs() <= 1e-6 * want + 1e-300, "{kind:?}: {got} vs {want}");
        }
        let alpha = 0.3;
        let want = mitte_integral(&local, &b, &b2, u_range, 5.0 * r, (400, 2000), 0.0, |u, y| u + alpha * c * chi_tilde((u * u + y * y) / (eta * eta)));
        let scale = mitte_integral(&local, &b, &b2, u_range, 5.0 * r, (400, 2000), 0.0, |u, _| u.abs());
        let got = sys.kernel(KernelKind::KTilde(alpha)).kernel_value(row, col);
        assert!((got - want).abs() <= 1e-5 * scale + 1e-300, "KTilde: {got} vs {want} (scale {scale})");
    }
}

#[test]
fn analytic_and_tensor_rules_agree() {
    let base = BaseGraph::k2();
    let w = Weights::uniform(&base, 1.0, 1.0);
    let (_, analytic) = system(&base, &w, 1.0, |g| g.points_per_dim = 5);
    let (_, tensor) = system(&base, &w, 1.0, |g| {
        g.points_per_dim = 5;
        g.hor_rule = HorRule::Tensor;
        g.hor_points = 240;
    });
    // Errors are measured against the largest entry of K.
    let scale = analytic.kernel(KernelKind::K).to_dense().max();
    for kind in [KernelKind::K, KernelKind::KPlus, KernelKind::KTilde(0.2)] {
        let (da, dt) = (analytic.kernel(kind).to_dense(), tensor.kernel(kind).to_dense());
        let err = (da - dt).abs().max();
        assert!(err < 1e-5 * scale, "{kind:?}: {err:e} vs scale {scale:e}");
    }
}

#[test]
fn matrix_free_products_match_dense() {
    let base = BaseGraph::k2();
    let w = Weights { vertical: vec![0.7], horizontal: vec![1.2, 0.9], epsilon: 1.0 };
    let (a, sys) = system(&base, &w, 1.0, |g| g.points_per_dim = 3);
    assert_eq!(sys.dim(), 9 * a.len());
    let mut rng = common::rng(11);
    let x = common::random_vec(sys.dim(), 1.0, &mut rng);
    for kind in [KernelKind::K, KernelKind::KPlus, KernelKind::KMinus, KernelKind::KTilde(0.1), KernelKind::Cutoff] {
        let k = sys.kernel(kind);
        let m = k.to_dense();
        let xv = nalgebra::DVector::from_vec(x.clone());
        let (y, yt) = (k.matvec(&x), k.rmatvec(&x));
        let (dy, dyt) = (&m * &xv, m.transpose() * &xv);
        for r in 0..sys.dim() {
            assert!((y[r] - dy[r]).abs() < 1e-12 * (1.0 + dy[r].abs()), "{kind:?} matvec row {r}");
            assert!((yt[r] - dyt[r]).abs() < 1e-12 * (1.0 + dyt[r].abs()), "{kind:?} rmatvec row {r}");
        }
        if matches!(kind, KernelKind::K | KernelKind::KPlus | KernelKind::KMinus) {
            assert!(m.iter().all(|&v| v >= 0.0));
        }
        for r in 0..sys.dim() {
            for c in 0..sys.dim() {
                if !a.follows(sys.state(r).0, sys.state(c).0) {
                    assert_eq!(m[(r, c)], 0.0);
                }
            }
        }
    }
}

#[test]
fn kernel_reflection_symmetry() {
    let base = BaseGraph::k2();
    let w = Weights { vertical: vec![0.9], horizontal: vec![1.4, 0.6], epsilon: 1.0 };
    let (a, sys) = system(&base, &w, 1.0, |g| g.points_per_dim = 5);
    let k = sys.kernel(KernelKind::K);
    let nx = sys.n_nodes();
    let reflect = |r: usize| {
        let (tau, i) = sys.state(r);
        a.reflect_id(tau) * nx + i
    };
    let mut worst: f64 = 0.0;
    for r in 0..sys.dim() {
        for c in 0..sys.dim() {
            let (x, y) = (k.kernel_value(r, c), k.kernel_value(reflect(c), reflect(r)));
            worst = worst.max((x - y).abs() / (x.abs() + y.abs() + 1e-300));
        }
    }
    assert!(worst < 1e-12, "{worst}");
    // K̃₀ is odd under the same map.
    let kt = sys.kernel(KernelKind::KTilde(0.0));
    for r in (0..sys.dim()).step_by(7) {
        for c in (0..sys.dim()).step_by(5) {
            let (x, y) = (kt.kernel_value(r, c), kt.kernel_value(reflect(c), reflect(r)));
            assert!((x + y).abs() <= 1e-12 * (k.kernel_value(r, c) + 1e-300), "{x} {y}");
        }
    }
}

#[test]
fn perron_matches_dense_eigensolver() {
    let base = BaseGraph::k2();
    for (ppd, w) in [
        (3, Weights::uniform(&base, 1.0, 1.0)),
        (5, Weights { vertical: vec![1.7], horizontal: vec![0.6, 1.0], epsilon: 1.0 }),
    ] {
        let (_, sys) = system(&base, &w, 1.0, |g| g.points_per_dim = ppd);
        let k = sys.kernel(KernelKind::K);
        let sp = perron(&k).unwrap();
        let mut mods: Vec<f64> = k.to_dense().complex_eigenvalues().iter().map(|z| z.norm()).collect();
        mods.sort_by(|a, b| b.total_cmp(a));
        assert!((sp.lambda - mods[0]).abs() < 1e-9 * mods[0], "{} vs {}", sp.lambda, mods[0]);
        assert!(mods[1] < mods[0]);
        assert!(sp.residual_right <= 1e-10 && sp.residual_left <= 1e-10);
        assert!(sp.phi_right.iter().all(|&v| v > 0.0) && sp.phi_left.iter().all(|&v| v > 0.0));
        let ws = sys.state_weights();
        let pairing: f64 = sp.phi_left.iter().zip(&sp.phi_right).zip(&ws).map(|((l, r), w)| l * r * w).sum();
        assert!((pairing - 1.0).abs() < 1e-12);
        // The fitted rate tracks the dense second eigenvalue. That eigenvalue
        // is doubly degenerate here, so the norm carries a factor n and the
        // fit over n = 5..20 reads slightly high.
        let ratio = mods[1] / mods[0];
        assert!(sp.gap_ratio < 1.0 && sp.gap_ratio > 0.99 * ratio && sp.gap_ratio < 1.2 * ratio, "{} vs {ratio}", sp.gap_ratio);
    }
}

#[test]
fn refinement_stability_at_default_sizes() {
    let base = BaseGraph::k2();
    let w = Weights::uniform(&base, 1.0, 1.0);
    let lambda = |edit: &dyn Fn(&mut GridSpec)| {
        let (_, sys) = system(&base, &w, 1.0, edit);
        perron(&sys.kernel(KernelKind::K)).unwrap().lambda
    };
    let default = GridSpec::default_for(&w, 1.0);
    let reference = lambda(&|_| {});
    let half = lambda(&|g| g.points_per_dim = default.points_per_dim / 2 + 1);
    let wide = lambda(&|g| g.radius = 1.5 * default.radius);
    println!("lambda: default {reference:.8}, half ppd {half:.8}, R x1.5 {wide:.8}");
    assert!((half - reference).abs() < 0.01 * reference);
    assert!((wide - reference).abs() < 0.01 * reference);
}

#[test]
fn symmetry_defect_and_negative_control() {
    let sv = BaseGraph::single_vertex();
    let w = Weights::uniform(&sv, 1.0, 1.0);
    let (_, sys) = system(&sv, &w, 1.0, |_| {});
    let sp = perron(&sys.kernel(KernelKind::K)).unwrap();
    assert!(symmetry_defect(&sys, &sp) <= 1e-10);

    let k2 = BaseGraph::k2();
    let w = Weights { vertical: vec![1.2], horizontal: vec![0.7, 1.5], epsilon: 1.0 };
    let (_, sys) = system(&k2, &w, 1.0, |g| g.points_per_dim = 13);
    let sp = perron(&sys.kernel(KernelKind::K)).unwrap();
    assert!(symmetry_defect(&sys, &sp) <= 1e-6);
    let (_, bad) = system(&k2, &w, 1.0, |g| {
        g.points_per_dim = 13;
        g.asymmetry = 0.5;
    });
    let sp = perron(&bad.kernel(KernelKind::K)).unwrap();
    assert!(symmetry_defect(&bad, &sp) > 1e-4);
}

#[test]
fn c4_is_positive_linear_and_grows_with_eta() {
    let base = BaseGraph::k2();
    let w = Weights::uniform(&base, 1.0, 1.0);
    let mut last = 0.0;
    for eta in [0.5, 1.0, 1.5, 2.0, 2.5] {
        let (_, sys) = system(&base, &w, eta, |g| {
            g.points_per_dim = 25;
            g.radius = 6.0;
        });
        let sp = perron(&sys.kernel(KernelKind::K)).unwrap();
        let c4 = c4_estimate(&sys, &sp).unwrap();
        let (a, b) = (c4_at_alpha(&sys, &sp, 0.01).unwrap(), c4_at_alpha(&sys, &sp, 0.02).unwrap());
        assert!((a - b).abs() < 1e-8 * c4 && (a - c4).abs() < 1e-8 * c4);
        assert!(c4 > last, "eta {eta}: {c4} <= {last}");
        last = c4;
    }
}

/// `(a, b)` with `½ Σ_n E^{0ℓ}[∇t_hor,n + αχ] = a + αb` on a single-vertex strip by Simpson
/// quadrature of the global interpolated Hamiltonian. The Hamiltonian is
/// first checked to be additive over the horizontal edges, so the integral
/// over all edges is the product of per-edge integrals.
fn single_vertex_energy_oracle(lo: i32, hi: i32, l: i32, eta: f64, beta: f64, r: f64) -> (f64, f64) {
    use rand::Rng;
    let base = BaseGraph::single_vertex();
    let strip = build_strip(&base, lo, hi, &Weights::uniform(&base, beta, 1.0)).unwrap();
    let tree = strip.backbone().clone();
    let m = (hi - lo) as usize;
    let h_at = |g: &GradientConfig| interpolated_hamiltonian(&strip, g, &tree, l).unwrap();
    let zero = GradientConfig::zeros(&strip);
    let h0 = h_at(&zero);
    let partial = |k: usize, u: f64, y: f64| {
        let mut g = zero.clone();
        g.grad_t[k] = u;
        g.grad_y[k] = y;
        h_at(&g) - h0
    };
    let mut rng = common::rng(3);
    for _ in 0..50 {
        let mut g = zero.clone();
        let mut sum = h0;
        for k in 0..m {
            let (u, y) = (rng.random_range(-r..r), rng.random_range(-r..r));
            g.grad_t[k] = u;
            g.grad_y[k] = y;
            sum += partial(k, u, y);
        }
        assert!((h_at(&g) - sum).abs() < 1e-10 * (1.0 + sum.abs()));
    }
    // ∇t_hor is truncated to [−R, R] like the kernel; y_hor is not.
    let moments = |k: usize, n: usize| {
        let (us, ys) = (simpson(-r, r, n), simpson(-3.0 * r, 3.0 * r, 3 * n));
        let (mut z, mut mu, mut mc) = (0.0, 0.0, 0.0);
        for &(u, wu) in &us {
            for &(y, wy) in &ys {
                let p = wu * wy * (-partial(k, u, y)).exp();
                z += p;
                mu += p * u;
                mc += p * chi_tilde((u * u + y * y) / (eta * eta));
            }
        }
        (mu / z, mc / z)
    };
    let (mut a, mut b) = (0.0, 0.0);
    for n in 0..l {
        let k = (n - lo) as usize;
        let (mu, fine) = moments(k, 600);
        // The cutoff has a kink in its second derivative, so Simpson
        // converges at second order there; extrapolate.
        let (_, coarse) = moments(k, 300);
        a += 0.5 * mu;
        b += 0.5 * (4.0 * fine - coarse) / 3.0;
    }
    (a, b)
}

#[test]
fn single_vertex_energy_matches_nested_quadrature() {
    let base = BaseGraph::single_vertex();
    let beta = 1.3;
    let w = Weights::uniform(&base, beta, 1.0);
    let eta = 1.2;
    let (_, sys) = system(&base, &w, eta, |g| g.hor_points = 120);
    let sp = perron(&sys.kernel(KernelKind::K)).unwrap();
    let r = sys.grid().radius;
    for (lo, hi, l) in [(0, 1, 1), (-1, 1, 1), (0, 2, 1), (0, 2, 2), (-1, 2, 2)] {
        let (a, b) = single_vertex_energy_oracle(lo, hi, l, eta, beta, r);
        for alpha in [0.0, -0.1, 0.07] {
            let got = energy_transfer(&sys, &sp, lo, hi, l, alpha).unwrap();
            let want = a + alpha * b;
            assert!((got.value - want).abs() < 1e-6, "({lo},{hi},{l},{alpha}): {} vs {want}", got.value);
            assert!((got.rest - (got.value - alpha * l as f64 * got.c4)).abs() < 1e-15);
        }
    }
}

#[test]
fn energy_slope_in_l_matches_c4() {
    let base = BaseGraph::k2();
    let w = Weights::uniform(&base, 1.0, 1.0);
    let (_, sys) = system(&base, &w, 1.5, |g| g.points_per_dim = 13);
    let sp = perron(&sys.kernel(KernelKind::K)).unwrap();
    let c4 = c4_estimate(&sys, &sp).unwrap();
    let alpha = -0.05;
    let (lo, margin) = (-8, 8);
    let per_alpha = |l: i32| {
        let a = energy_transfer(&sys, &sp, lo, l + margin, l, alpha).unwrap();
        let b = energy_transfer(&sys, &sp, lo, l + margin, l, 0.0).unwrap();
        (a.value - b.value) / alpha
    };
    let pts: Vec<(f64, f64)> = (3..=8).map(|l| (l as f64, per_alpha(l))).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - c4).abs() < 0.1 * c4, "slope {slope} vs c4 {c4}");
}

#[test]
fn energy_vanishes_on_mirrored_windows() {
    let base = BaseGraph::k2();
    let w = Weights { vertical: vec![1.1], horizontal: vec![0.9, 1.3], epsilon: 1.0 };
    let (_, sys) = system(&base, &w, 1.0, |g| g.points_per_dim = 9);
    let sp = perron(&sys.kernel(KernelKind::K)).unwrap();
    // ū = ō − l: the reflection maps the expression to minus itself.
    for (lo, hi, l) in [(-2, 4, 2), (-1, 4, 3), (0, 1, 1)] {
        let e = energy_transfer(&sys, &sp, lo, hi, l, 0.0).unwrap();
        assert!(e.value.abs() < 1e-12, "({lo},{hi},{l}): {}", e.value);
    }
    // lo = −hi is not mirrored for l > 0; frozen regression value.
    let e = energy_transfer(&sys, &sp, -3, 3, 2, 0.0).unwrap();
    println!("E(0) on [-3, 3], l = 2: {:.15e}", e.value);
    assert!((e.value - E0_FIXTURE).abs() < 1e-9, "{}", e.value);
}

const E0_FIXTURE: f64 = 4.411891872937723e-4;

#[test]
fn energy_guards() {
    let base = BaseGraph::single_vertex();
    let w = Weights::uniform(&base, 1.0, 1.0);
    let (_, sys) = system(&base, &w, 1.0, |_| {});
    let sp = perron(&sys.kernel(KernelKind::K)).unwrap();
    for (lo, hi, l) in [(1, 3, 2), (0, 3, 0), (0, 3, 4)] {
        assert!(matches!(energy_transfer(&sys, &sp, lo, hi, l, 0.0), Err(Error::InvalidParameter { .. })));
    }
}

#[test]
fn grid_guards() {
    let a = alphabet(&BaseGraph::k2()).unwrap();
    let w = Weights::uniform(a.base(), 1.0, 1.0);
    let ok = GridSpec::default_for(&w, 1.0);
    for bad in [
        GridSpec { points_per_dim: 4, ..ok },
        GridSpec { points_per_dim: 1, ..ok },
        GridSpec { radius: 0.9, ..ok },
        GridSpec { asymmetry: 1.0, ..ok },
    ] {
        assert!(matches!(TransferSystem::new(&a, &w, bad, 1.0, Execution::Sequential), Err(Error::InvalidParameter { .. })));
    }
    assert!(matches!(
        TransferSystem::new(&a, &w, GridSpec { points_per_dim: 29, ..ok }, 1.0, Execution::Sequential),
        Err(Error::GuardExceeded { .. })
    ));
    // Larger bases already stop at the alphabet stage.
    assert!(matches!(alphabet(&BaseGraph::cycle(3).unwrap()), Err(Error::GuardExceeded { .. })));
}

#[test]
fn parallel_and_sequential_agree() {
    let base = BaseGraph::k2();
    let w = Weights::uniform(&base, 1.0, 1.0);
    let a = alphabet(&base).unwrap();
    let g = GridSpec { points_per_dim: 7, ..GridSpec::default_for(&w, 1.0) };
    let p = TransferSystem::new(&a, &w, g, 1.0, Execution::Parallel).unwrap();
    let s = TransferSystem::new(&a, &w, g, 1.0, Execution::Sequential).unwrap();
    assert_eq!(p.kernel(KernelKind::KTilde(0.3)).to_dense(), s.kernel(KernelKind::KTilde(0.3)).to_dense());
    let (sp, ss) = (perron(&p.kernel(KernelKind::K)).unwrap(), perron(&s.kernel(KernelKind::K)).unwrap());
    assert_eq!(sp, ss);
}

#[test]
fn predicted_decay_cases() {
    let wide = DeformationParams { alpha: 0.0, eta: 100.0, c9: 0.1 };
    let (a, c11) = predicted_decay(2.0, 1.0, &wide).unwrap();
    assert!((a + 1.0).abs() < 1e-15 && (c11 - 1.0).abs() < 1e-15);
    let tight = DeformationParams { alpha: 0.0, eta: 0.5, c9: 0.1 };
    let (a, c11) = predicted_decay(2.0, 1.0, &tight).unwrap();
    assert!((a + 0.05 * (1.0 - 1e-9)).abs() < 1e-15);
    assert!(c11 > 0.0);
    for c4 in [1e-6, 0.3, 5.0] {
        for c5 in [1e-3, 1.0, 1e4] {
            assert!(predicted_decay(c4, c5, &tight).unwrap().1 > 0.0);
        }
    }
    assert!(matches!(predicted_decay(0.0, 1.0, &wide), Err(Error::NonPositiveC4(_))));
}

#[test]
fn backbone_and_psi_vectors() {
    let base = BaseGraph::k2();
    let w = Weights::uniform(&base, 1.0, 1.0);
    let (a, sys) = system(&base, &w, 1.0, |g| g.points_per_dim = 3);
    let local = LocalEnergy::new(&a, &w).unwrap();
    let (pl, pr) = (sys.psi_left(), sys.psi_right());
    for r in 0..sys.dim() {
        let b = block_of(&sys, r);
        assert!((pl[r] - local.left(&b).unwrap().boltzmann()).abs() < 1e-14);
        assert!((pr[r] - local.right(&b).unwrap().boltzmann()).abs() < 1e-14);
    }
    // Level gauge sanity on a grid node.
    let (t, y) = sys.node(sys.n_nodes() - 1);
    let (phi, sigma) = level_gauge(&base, t, y);
    let hg = horizontal_gradients(&phi, &sigma, &phi, &sigma, 0.0, 0.0);
    assert!(hg.iter().all(|&(dt, _)| dt == 0.0));
}
