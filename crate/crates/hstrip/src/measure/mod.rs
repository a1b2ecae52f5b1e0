//! The pinned measure `μ⁰_L` on a strip, its spanning-tree expansion and the
//! change of variables to backbone-tree gradients.
//!
//! Fields are plain slices indexed by strip vertex id. Gradient coordinates
//! are indexed by [`StripGraph::bb_index`], which is level-major: the `|S|`
//! vertical edges of level `n` (in base-tree order) followed by the pin
//! horizontal edge `p_{n+1/2}`.

mod deform;
pub mod local;

pub use deform::{chi_tilde, chi_tilde_prime, deform, deform_inverse, deform_log_jacobian, entropy_constant, DeformationParams, CHI_TILDE_PRIME_SUP};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::graph::{OrientedEdge, RootedTree, SpanningTree, StripGraph};
use crate::tree_codec::enumerate_limited;
use crate::{Error, Result};

/// Vertex count above which [`matrix_tree_check`] refuses to enumerate.
pub const MATRIX_TREE_MAX_VERTICES: usize = 12;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Vertex fields `(t, s)` on a strip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
}

impl FieldConfig {
    pub fn zeros(strip: &StripGraph) -> Self {
        let n = strip.n_vertices();
        FieldConfig { t: vec![0.0; n], s: vec![0.0; n] }
    }

    fn check(&self, strip: &StripGraph) -> Result<()> {
        let n = strip.n_vertices();
        if self.t.len() != n || self.s.len() != n {
            return Err(crate::error::invalid_param(
                "field",
                format!("expected {n} entries, got t: {}, s: {}", self.t.len(), self.s.len()),
            ));
        }
        Ok(())
    }
}

/// Pinned values and backbone-tree gradients `(t₀, s₀, ∇t_bb, y_bb)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientConfig {
    pub t0: f64,
    pub s0: f64,
    pub grad_t: Vec<f64>,
    pub grad_y: Vec<f64>,
}

impl GradientConfig {
    pub fn zeros(strip: &StripGraph) -> Self {
        let m = strip.backbone().len();
        GradientConfig { t0: 0.0, s0: 0.0, grad_t: vec![0.0; m], grad_y: vec![0.0; m] }
    }

    fn check(&self, strip: &StripGraph) -> Result<()> {
        let m = strip.backbone().len();
        if self.grad_t.len() != m || self.grad_y.len() != m {
            return Err(crate::error::invalid_param(
                "gradient",
                format!("expected {m} backbone entries, got {} and {}", self.grad_t.len(), self.grad_y.len()),
            ));
        }
        Ok(())
    }

    /// Position of the vertical block `ω_n` in the coordinate vectors.
    pub fn vertical_offset(strip: &StripGraph, n: i32) -> usize {
        (n - strip.lo()) as usize * (strip.base().tree_len() + 1)
    }

    /// Position of the pin horizontal coordinate `ω_{n+1/2}`.
    pub fn horizontal_index(strip: &StripGraph, n: i32) -> usize {
        Self::vertical_offset(strip, n) + strip.base().tree_len()
    }

    /// `ω_n = (∇t, y)` on the copy of `S` at level `n`.
    pub fn vertical_block(&self, strip: &StripGraph, n: i32) -> (&[f64], &[f64]) {
        let a = Self::vertical_offset(strip, n);
        let b = a + strip.base().tree_len();
        (&self.grad_t[a..b], &self.grad_y[a..b])
    }

    /// `ω_{n+1/2} = (∇t, y)` on `p_{n+1/2}`.
    pub fn horizontal(&self, strip: &StripGraph, n: i32) -> (f64, f64) {
        let i = Self::horizontal_index(strip, n);
        (self.grad_t[i], self.grad_y[i])
    }
}

/// `A_L(t)`: off-diagonal `−β e^{tᵢ+tⱼ}` on edges, zero row sums.
pub fn weight_matrix(strip: &StripGraph, t: &[f64]) -> DMatrix<f64> {
    let n = strip.n_vertices();
    let mut a = DMatrix::zeros(n, n);
    for e in 0..strip.n_edges() {
        let ed = strip.edge(e);
        let w = strip.beta(e) * (t[ed.tail] + t[ed.head]).exp();
        a[(ed.tail, ed.head)] -= w;
        a[(ed.head, ed.tail)] -= w;
        a[(ed.tail, ed.tail)] += w;
        a[(ed.head, ed.head)] += w;
    }
    a
}

/// `A_L(t) + ε̂` with `ε̂ = ε e^{t₀}` on the pin diagonal.
pub fn pinned_matrix(strip: &StripGraph, t: &[f64]) -> DMatrix<f64> {
    let mut a = weight_matrix(strip, t);
    let pin = strip.pin_vertex();
    a[(pin, pin)] += strip.weights().epsilon * t[pin].exp();
    a
}

/// `ln det[A_L(t) + ε̂]` from a partially pivoted LU factorization.
pub fn log_det_pinned(strip: &StripGraph, t: &[f64]) -> Result<f64> {
    let lu = pinned_matrix(strip, t).lu();
    let mut sign: f64 = lu.p().determinant();
    let mut acc = 0.0;
    let u = lu.u();
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::NonPositiveDeterminant);
        }
        sign *= d.signum();
        acc += d.abs().ln();
    }
    if sign <= 0.0 {
        return Err(Error::NonPositiveDeterminant);
    }
    Ok(acc)
}

/// `F_L(∇t) = Σ_e β_e (cosh ∇t_e − 1)`.
pub fn f_energy(strip: &StripGraph, t: &[f64]) -> f64 {
    (0..strip.n_edges())
        .map(|e| {
            let ed = strip.edge(e);
            strip.beta(e) * (t[ed.head] - t[ed.tail]).cosh_m1()
        })
        .sum()
}

/// `[s, A_L(t) s] = Σ_e β_e (sᵢ − sⱼ)² e^{tᵢ+tⱼ}`.
pub fn s_form(strip: &StripGraph, t: &[f64], s: &[f64]) -> f64 {
    (0..strip.n_edges())
        .map(|e| {
            let ed = strip.edge(e);
            let ds = s[ed.head] - s[ed.tail];
            strip.beta(e) * ds * ds * (t[ed.tail] + t[ed.head]).exp()
        })
        .sum()
}

/// `M(t₀, s₀) = ε[cosh t₀ − 1 + s₀² e^{t₀}/2]`.
pub fn pin_energy(epsilon: f64, t0: f64, s0: f64) -> f64 {
    epsilon * (t0.cosh_m1() + 0.5 * s0 * s0 * t0.exp())
}

/// `H^pin = M(t₀, s₀) − ln(ε/2π)`.
pub fn pin_hamiltonian(epsilon: f64, t0: f64, s0: f64) -> f64 {
    pin_energy(epsilon, t0, s0) - (epsilon.ln() - LN_2PI)
}

/// Log of the density of `μ⁰_L` with respect to Lebesgue measure on `(t, s)`.
pub fn log_density(strip: &StripGraph, field: &FieldConfig) -> Result<f64> {
    field.check(strip)?;
    let (t, s) = (&field.t[..], &field.s[..]);
    let pin = strip.pin_vertex();
    let reference: f64 = -t.iter().sum::<f64>() - strip.n_vertices() as f64 * LN_2PI;
    Ok(reference - f_energy(strip, t) - 0.5 * s_form(strip, t, s) + log_det_pinned(strip, t)?
        - pin_energy(strip.weights().epsilon, t[pin], s[pin]))
}

/// Contribution of one spanning tree to the density: summing `exp` of this
/// over all trees gives `exp(log_density)`.
pub fn tree_log_density(strip: &StripGraph, field: &FieldConfig, tree: &SpanningTree) -> Result<f64> {
    field.check(strip)?;
    let (t, s) = (&field.t[..], &field.s[..]);
    let pin = strip.pin_vertex();
    let eps = strip.weights().epsilon;
    let reference: f64 = -t.iter().sum::<f64>() - strip.n_vertices() as f64 * LN_2PI;
    let tree_term: f64 = tree
        .edges()
        .iter()
        .map(|&e| {
            let ed = strip.edge(e);
            strip.beta(e).ln() + t[ed.tail] + t[ed.head]
        })
        .sum();
    Ok(reference - f_energy(strip, t) - 0.5 * s_form(strip, t, s) + eps.ln() + t[pin] + tree_term
        - pin_energy(eps, t[pin], s[pin]))
}

/// `(det[A_L(t) + ε̂], ε e^{t₀} Σ_T Π_{e∈T} β_e e^{tᵢ+tⱼ})` for strips of at
/// most [`MATRIX_TREE_MAX_VERTICES`] vertices.
pub fn matrix_tree_check(strip: &StripGraph, t: &[f64]) -> Result<(f64, f64)> {
    MatrixTreeChecker::new(strip)?.check(t)
}

/// [`matrix_tree_check`] with the tree enumeration done once per strip.
pub struct MatrixTreeChecker<'a> {
    strip: &'a StripGraph,
    trees: Vec<SpanningTree>,
}

impl<'a> MatrixTreeChecker<'a> {
    pub fn new(strip: &'a StripGraph) -> Result<Self> {
        Ok(MatrixTreeChecker { strip, trees: enumerate_limited(strip, MATRIX_TREE_MAX_VERTICES)? })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn check(&self, t: &[f64]) -> Result<(f64, f64)> {
        let strip = self.strip;
        if t.len() != strip.n_vertices() {
            return Err(crate::error::invalid_param("t", format!("expected {} entries", strip.n_vertices())));
        }
        let det = pinned_matrix(strip, t).lu().determinant();
        let pin = strip.pin_vertex();
        let edge_weight: Vec<f64> = (0..strip.n_edges())
            .map(|e| {
                let ed = strip.edge(e);
                strip.beta(e) * (t[ed.tail] + t[ed.head]).exp()
            })
            .collect();
        let sum: f64 = self.trees.iter().map(|tree| tree.edges().iter().map(|&e| edge_weight[e]).product::<f64>()).sum();
        Ok((det, strip.weights().epsilon * t[pin].exp() * sum))
    }
}

/// `ln J = −Σ_{(i∼j)∈T^bb} (tᵢ + tⱼ)/2`, the Jacobian of the gradient map.
pub fn log_jacobian(strip: &StripGraph, t: &[f64]) -> f64 {
    -0.5 * strip
        .backbone()
        .edges()
        .iter()
        .map(|&e| {
            let ed = strip.edge(e);
            t[ed.tail] + t[ed.head]
        })
        .sum::<f64>()
}

/// Backbone-tree gradients with every edge oriented away from `r = (lo, p)`.
pub fn to_gradient(strip: &StripGraph, field: &FieldConfig) -> Result<GradientConfig> {
    field.check(strip)?;
    let (t, s) = (&field.t[..], &field.s[..]);
    let rooted = strip.backbone_rooted();
    let mut g = GradientConfig::zeros(strip);
    let pin = strip.pin_vertex();
    g.t0 = t[pin];
    g.s0 = s[pin];
    for &e in strip.backbone().edges() {
        let o = rooted.oriented(e).expect("backbone edge");
        let k = strip.bb_index(e).expect("backbone edge");
        g.grad_t[k] = t[o.head] - t[o.tail];
        g.grad_y[k] = (s[o.head] - s[o.tail]) * (0.5 * (t[o.tail] + t[o.head])).exp();
    }
    Ok(g)
}

/// Inverse of [`to_gradient`].
pub fn from_gradient(strip: &StripGraph, g: &GradientConfig) -> Result<FieldConfig> {
    g.check(strip)?;
    let rooted = strip.backbone_rooted();
    let n = strip.n_vertices();
    let pin = strip.pin_vertex();
    let mut t = vec![0.0; n];
    for &v in &rooted.order()[1..] {
        let (e, p) = rooted.parent(v).expect("non-root");
        t[v] = t[p] + g.grad_t[strip.bb_index(e).expect("backbone edge")];
    }
    let shift = g.t0 - t[pin];
    t.iter_mut().for_each(|x| *x += shift);
    let mut s = vec![0.0; n];
    for &v in &rooted.order()[1..] {
        let (e, p) = rooted.parent(v).expect("non-root");
        s[v] = s[p] + g.grad_y[strip.bb_index(e).expect("backbone edge")] * (-0.5 * (t[p] + t[v])).exp();
    }
    let shift = g.s0 - s[pin];
    s.iter_mut().for_each(|x| *x += shift);
    Ok(FieldConfig { t, s })
}

/// `t_j − t_i` as a signed sum of backbone gradients along the path from `i`
/// to `j` in `T^bb`.
pub fn t_difference(strip: &StripGraph, g: &GradientConfig, i: usize, j: usize) -> Result<f64> {
    g.check(strip)?;
    check_vertex(strip, i)?;
    check_vertex(strip, j)?;
    let rooted = strip.backbone_rooted();
    Ok(rooted
        .path(i, j)
        .iter()
        .map(|o| g.grad_t[strip.bb_index(o.edge).expect("backbone edge")] * path_sign(rooted, o.edge, i, j))
        .sum())
}

/// `y_{ij} = (s_j − s_i) e^{(tᵢ+tⱼ)/2}` for the oriented edge `i → j`, as a
/// function of the backbone gradients on the path from `i` to `j`.
pub fn y_edge(strip: &StripGraph, g: &GradientConfig, e: OrientedEdge) -> Result<f64> {
    g.check(strip)?;
    check_vertex(strip, e.tail)?;
    check_vertex(strip, e.head)?;
    let (i, j) = (e.tail, e.head);
    let rooted = strip.backbone_rooted();
    let path = rooted.path(i, j);
    let idx = |edge: usize| strip.bb_index(edge).expect("backbone edge");
    let mut y = 0.0;
    for a in &path {
        // i_{e'}: the endpoint of e' nearer the root.
        let ie = rooted.oriented(a.edge).expect("backbone edge").tail;
        let exponent: f64 = path
            .iter()
            .filter(|b| b.edge != a.edge)
            .map(|b| {
                let w = if rooted.on_root_path(b.edge, ie) { -1.0 } else { 1.0 };
                g.grad_t[idx(b.edge)] * w
            })
            .sum();
        y += g.grad_y[idx(a.edge)] * path_sign(rooted, a.edge, i, j) * (0.5 * exponent).exp();
    }
    Ok(y)
}

fn path_sign(rooted: &RootedTree, e: usize, i: usize, j: usize) -> f64 {
    (rooted.on_root_path(e, j) as i32 - rooted.on_root_path(e, i) as i32) as f64
}

fn check_vertex(strip: &StripGraph, v: usize) -> Result<()> {
    if v >= strip.n_vertices() {
        return Err(Error::VertexOutOfRange(v));
    }
    Ok(())
}

/// Per-edge oriented gradients `(∇t_e, y_e)` in bookkeeping orientation.
pub fn edge_gradients(strip: &StripGraph, field: &FieldConfig) -> (Vec<f64>, Vec<f64>) {
    let (t, s) = (&field.t, &field.s);
    (0..strip.n_edges())
        .map(|e| {
            let ed = strip.edge(e);
            let dt = t[ed.head] - t[ed.tail];
            let y = (s[ed.head] - s[ed.tail]) * (0.5 * (t[ed.tail] + t[ed.head])).exp();
            (dt, y)
        })
        .unzip()
}

fn check_tree(strip: &StripGraph, tree: &SpanningTree) -> Result<()> {
    if tree.len() + 1 != strip.n_vertices() || tree.edges().last().is_some_and(|&e| e >= strip.n_edges()) {
        return Err(Error::NotSpanningTree("tree does not belong to this strip".into()));
    }
    Ok(())
}

/// `H^{grad,0}_L(ω, T)`.
pub fn grad_hamiltonian(strip: &StripGraph, g: &GradientConfig, tree: &SpanningTree) -> Result<f64> {
    check_tree(strip, tree)?;
    let field = from_gradient(strip, g)?;
    let (dt, y) = edge_gradients(strip, &field);
    let rooted = RootedTree::new(strip, tree, strip.root());
    let t = &field.t;
    let mut h = 0.0;
    for e in 0..strip.n_edges() {
        h += strip.beta(e) * (dt[e].cosh_m1() + 0.5 * y[e] * y[e]);
    }
    for &e in tree.edges() {
        let o = rooted.oriented(e).expect("tree edge");
        h += t[o.head] - t[o.tail] - (strip.beta(e) / (2.0 * PI)).ln();
    }
    h -= 0.5 * g.grad_t.iter().sum::<f64>();
    h += t[strip.root()] - g.t0;
    Ok(h)
}

/// `H^{0ℓ}_L(ω, T)`, the Hamiltonian of the measure interpolating towards the
/// observable `e^{(t_ℓ − t₀)/2}`.
pub fn interpolated_hamiltonian(strip: &StripGraph, g: &GradientConfig, tree: &SpanningTree, l: i32) -> Result<f64> {
    if !strip.contains_level(l) {
        return Err(Error::LevelOutOfRange { level: l as i64, lo: strip.lo(), hi: strip.hi() });
    }
    check_tree(strip, tree)?;
    let field = from_gradient(strip, g)?;
    let (dt, y) = edge_gradients(strip, &field);
    let rooted = RootedTree::new(strip, tree, strip.root());
    let spine: Vec<usize> = rooted.path(strip.root(), strip.right_end()).iter().map(|o| o.edge).collect();
    let p = strip.base().pin();
    let t = &field.t;
    let mut h = 0.0;
    for e in 0..strip.n_edges() {
        h += strip.beta(e) * (dt[e].cosh_m1() + 0.5 * y[e] * y[e]);
        if tree.contains(e) {
            h -= (strip.beta(e) / (2.0 * PI)).ln();
            if !spine.contains(&e) {
                let o = rooted.oriented(e).expect("tree edge");
                h += t[o.head] - t[o.tail];
            }
        }
        if let Some(k) = strip.bb_index(e) {
            if !matches!(strip.edge(e).kind, crate::graph::EdgeKind::Horizontal(v) if v == p) {
                h -= 0.5 * g.grad_t[k];
            }
        }
    }
    for n in strip.lo()..strip.hi() {
        let u = g.horizontal(strip, n).0;
        if n < 0 {
            h -= 0.5 * u;
        }
        if n >= l {
            h += 0.5 * u;
        }
    }
    Ok(h)
}

pub(crate) trait CoshM1 {
    fn cosh_m1(self) -> f64;
}

impl CoshM1 for f64 {
    /// `cosh x − 1`, accurate for small `x`.
    #[inline]
    fn cosh_m1(self) -> f64 {
        let h = (0.5 * self).sinh();
        2.0 * h * h
    }
}
