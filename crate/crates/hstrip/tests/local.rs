mod common;

use std::f64::consts::PI;

use common::{random_vec, random_weights, rng};
use hstrip::graph::{build_strip, BaseGraph, Weights};
use hstrip::measure::local::{Block, Energy, LocalEnergy};
use hstrip::measure::{interpolated_hamiltonian, GradientConfig};
use hstrip::tree_codec::{alphabet, enumerate_spanning_trees, Alphabet};
use rand::Rng;

fn k2_alphabet() -> Alphabet {
    serde_json::from_str(include_str!("fixtures/k2_alphabet.json")).unwrap()
}

fn random_block(a: &Alphabet, r: &mut rand_chacha::ChaCha8Rng) -> Block {
    let s = a.base().tree_len();
    Block { grad_t: random_vec(s, 1.5, r), grad_y: random_vec(s, 1.5, r), tau: r.random_range(0..a.len()) }
}

#[test]
fn block_sum_matches_global_hamiltonian() {
    let mut r = rng(31);
    let cases = [(BaseGraph::single_vertex(), alphabet(&BaseGraph::single_vertex()).unwrap()), (BaseGraph::k2(), k2_alphabet())];
    for (base, a) in &cases {
        for (lo, hi) in [(0, 0), (0, 1), (-1, 1), (-1, 2), (-2, 1), (0, 3)] {
            let w = random_weights(base, &mut r);
            let s = build_strip(base, lo, hi, &w).unwrap();
            let local = LocalEnergy::new(a, &w).unwrap();
            let m = s.backbone().len();
            for tree in enumerate_spanning_trees(&s).unwrap() {
                let ids = a.encode_ids(&s, &tree).unwrap();
                let g = GradientConfig { t0: r.random_range(-1.0..1.0), s0: 0.3, grad_t: random_vec(m, 1.0, &mut r), grad_y: random_vec(m, 1.0, &mut r) };
                for l in lo..=hi {
                    let global = interpolated_hamiltonian(&s, &g, &tree, l).unwrap();
                    let blocks = local.interpolated(&s, &g, &ids, l).unwrap().value();
                    assert!((global - blocks).abs() <= 1e-10 * (1.0 + global.abs()), "{global} vs {blocks}");
                }
            }
        }
    }
}

#[test]
fn broken_words_have_infinite_energy() {
    let a = k2_alphabet();
    let w = Weights::uniform(a.base(), 1.0, 1.0);
    let local = LocalEnergy::new(&a, &w).unwrap();
    let mut r = rng(32);
    let mut seen = 0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            let mut b = random_block(&a, &mut r);
            let mut b2 = random_block(&a, &mut r);
            b.tau = i;
            b2.tau = j;
            let h = local.hor(&b, (0.2, -0.1), &b2).unwrap();
            assert_eq!(h.is_finite(), a.follows(i, j));
            if !a.follows(i, j) {
                assert_eq!(h, Energy::Infinite);
                assert_eq!(local.mitte(&b, (0.2, -0.1), &b2).unwrap().boltzmann(), 0.0);
                seen += 1;
            }
        }
        let mut b = random_block(&a, &mut r);
        b.tau = i;
        assert_eq!(local.left(&b).unwrap().is_finite(), a.follows(a.backbone_id(), i));
        assert_eq!(local.right(&b).unwrap().is_finite(), a.follows(i, a.backbone_id()));
    }
    assert!(seen > 0);
}

#[test]
fn zero_gradient_backbone_block() {
    let mut r = rng(33);
    let a = k2_alphabet();
    let w = random_weights(a.base(), &mut r);
    let local = LocalEnergy::new(&a, &w).unwrap();
    let bb = Block { grad_t: vec![0.0], grad_y: vec![0.0], tau: a.backbone_id() };
    let all = local.all(&bb, (0.0, 0.0), &bb).unwrap();
    let p = a.base().pin();
    let lv = -(w.vertical[0] / (2.0 * PI)).ln();
    assert!((all.vertical - lv).abs() < 1e-14);
    let expect = lv - (w.horizontal[p] / (2.0 * PI)).ln();
    assert!((all.mitte.value() - expect).abs() < 1e-14);
    assert_eq!(all.mitte_plus, all.mitte);
    assert_eq!(all.left, Energy::Finite(0.5 * lv));
    assert_eq!(all.right, Energy::Finite(0.5 * lv));
}

#[test]
fn middle_block_reflection_symmetry() {
    let mut r = rng(34);
    for a in [k2_alphabet(), alphabet(&BaseGraph::single_vertex()).unwrap()] {
        let w = random_weights(a.base(), &mut r);
        let local = LocalEnergy::new(&a, &w).unwrap();
        for _ in 0..2000 {
            let b = random_block(&a, &mut r);
            let b2 = random_block(&a, &mut r);
            let hor = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            let h = local.mitte(&b, hor, &b2).unwrap();
            let hr = local.mitte(&b2.reflected(&a), (-hor.0, -hor.1), &b.reflected(&a)).unwrap();
            match (h, hr) {
                (Energy::Finite(x), Energy::Finite(y)) => assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()), "{x} vs {y}"),
                (x, y) => assert_eq!(x, y),
            }
            let v = local.vertical(&b).unwrap();
            assert!((v - local.vertical(&b.reflected(&a)).unwrap()).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }
}
