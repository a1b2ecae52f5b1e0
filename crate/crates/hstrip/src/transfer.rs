//! Nyström discretization of the transfer operators `𝒦, 𝒦±, 𝒦̃_α` on
//! `Ω̄_vertical = ℝ^S × ℝ^S × Θ`, their Perron data and the energy
//! representation.
//!
//! A discretized operator acts on vectors of function values at the grid
//! nodes `(i, τ)` (row index `τ·X + i` with `X` vertical nodes) as
//! `(M x)(i,τ) = Σ_{j,τ′} k(i,τ; j,τ′) w_j x(j,τ′)`, so the plain dot product
//! `u·v` of a row vector `u = w∘f` with `v = g` is the `L²` pairing `⟨f, g⟩`.
//!
//! The kernel factorizes as
//! `k = 1{τ⊢τ′} e^{−½h(i,τ) + L_τ(i) − c_τ} J_{d_τ}(i,j) e^{−½h(j,τ′) − L_τ(j)}`
//! where `h` is the vertical Hamiltonian, `L_τ` and `d_τ` collect the linear
//! branch terms of the horizontal edges and `J_d` is the `ω_hor` integral of
//! the remaining coupling. Only the `X × X` tables `J_d` are stored.

use std::collections::HashMap;
use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::graph::Weights;
use crate::measure::local::{level_gauge, Block, LocalEnergy};
use crate::measure::{chi_tilde, CoshM1};
use crate::par::{self, Execution};
use crate::tree_codec::{Alphabet, LocalEdge};
use crate::{Error, Result};

/// Cap on `X·|Θ|`, the number of discrete states.
pub const MAX_ROWS: usize = 20_000;

const PERRON_TOL: f64 = 1e-12;
const PERRON_MAX_ITER: usize = 50_000;
const GAP_PROBES: usize = 4;
const GAP_SEED: u64 = 0x5_eed0_f9a9;
const GAP_FIT: std::ops::RangeInclusive<usize> = 5..=20;
/// Relative norm below which `‖Bⁿh‖` is rounding noise.
const GAP_FLOOR: f64 = 1e-13;

/// How the horizontal variables `ω_hor = (∇t_hor, y_hor)` are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorRule {
    /// Gauss–Legendre in `∇t_hor`; the Gaussian `y_hor` integral in closed form.
    Analytic,
    /// Tensor Gauss–Legendre in both variables on `[−R, R]²`.
    Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Truncation `R` of each vertical coordinate and of `∇t_hor`.
    pub radius: f64,
    /// Gauss–Legendre nodes per vertical coordinate (odd, so 0 is a node).
    pub points_per_dim: usize,
    /// Gauss–Legendre nodes for `∇t_hor` (and `y_hor` under [`HorRule::Tensor`]).
    pub hor_points: usize,
    pub hor_rule: HorRule,
    /// Shrinks the negative `∇t_hor` range to `[−R(1−a), R]`. Zero gives the
    /// reflection-symmetric grid; positive values are a deliberate defect.
    #[serde(default)]
    pub asymmetry: f64,
    /// Radial nodes per segment for the cutoff integral over the disc `‖ω_hor‖ ≤ η`.
    pub chi_radial: usize,
    /// Angular nodes (even) for the cutoff integral.
    pub chi_angular: usize,
}

impl GridSpec {
    /// Defaults with `R = max(4/√β_min, 2η)`.
    pub fn default_for(weights: &Weights, eta: f64) -> Self {
        GridSpec {
            radius: (4.0 / weights.beta_min().sqrt()).max(2.0 * eta),
            points_per_dim: 25,
            hor_points: 48,
            hor_rule: HorRule::Analytic,
            asymmetry: 0.0,
            chi_radial: 16,
            chi_angular: 64,
        }
    }

    pub fn validate(&self, eta: f64) -> Result<()> {
        let bad = |f: &str, r: String| Err(crate::error::invalid_param(f, r));
        if self.points_per_dim < 3 || self.points_per_dim.is_multiple_of(2) {
            return bad("points_per_dim", format!("need an odd number >= 3, got {}", self.points_per_dim));
        }
        if !(self.radius > eta && self.radius.is_finite()) {
            return bad("radius", format!("need R > eta = {eta}, got {}", self.radius));
        }
        if self.hor_points < 3 {
            return bad("hor_points", format!("need >= 3, got {}", self.hor_points));
        }
        if !(0.0..1.0).contains(&self.asymmetry) {
            return bad("asymmetry", format!("need 0 <= a < 1, got {}", self.asymmetry));
        }
        if self.chi_radial < 2 || self.chi_angular < 4 || self.chi_angular % 2 == 1 {
            return bad("chi_angular", "need chi_radial >= 2 and an even chi_angular >= 4".into());
        }
        Ok(())
    }
}

/// Gauss–Legendre rule on `[a, b]`.
fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(n).expect("degree >= 2");
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule.as_node_weight_pairs().iter().map(|&(x, w)| (mid + half * x, half * w)).collect()
}

/// Gauss–Legendre rule on `[−r, r]` made exactly mirror-symmetric.
fn symmetric_gauss_legendre(n: usize, r: f64) -> Vec<(f64, f64)> {
    let mut rule = gauss_legendre(n, -r, r);
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    for k in 0..n / 2 {
        let x = 0.5 * (rule[n - 1 - k].0 - rule[k].0);
        let w = 0.5 * (rule[n - 1 - k].1 + rule[k].1);
        rule[k] = (-x, w);
        rule[n - 1 - k] = (x, w);
    }
    if n % 2 == 1 {
        rule[n / 2].0 = 0.0;
    }
    rule
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Table {
    /// `∫ e^{−G − (k/2) u}`.
    Plain(i32),
    /// `∫ u e^{−G − d u}`.
    Drift(i32),
    /// `∫ χ e^{−G − d u}`, vertical cutoffs included.
    Cutoff(i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "alpha")]
pub enum KernelKind {
    K,
    KPlus,
    KMinus,
    /// `k̃_α`, integrating `[∇t_hor + αχ] e^{−H_mitte}`.
    KTilde(f64),
    /// `k̃_α − k̃_0` per unit `α`: the cutoff part alone.
    Cutoff,
}

impl KernelKind {
    fn terms(self, d: i32) -> Vec<(f64, Table)> {
        match self {
            KernelKind::K => vec![(1.0, Table::Plain(2 * d))],
            KernelKind::KPlus => vec![(1.0, Table::Plain(2 * d + 1))],
            KernelKind::KMinus => vec![(1.0, Table::Plain(2 * d - 1))],
            KernelKind::KTilde(0.0) => vec![(1.0, Table::Drift(d))],
            KernelKind::KTilde(alpha) => vec![(1.0, Table::Drift(d)), (alpha, Table::Cutoff(d))],
            KernelKind::Cutoff => vec![(1.0, Table::Cutoff(d))],
        }
    }
}

/// Precomputed grid, vertical energies and `ω_hor` tables for one base
/// graph, weight set and cutoff scale.
pub struct TransferSystem {
    alphabet: Alphabet,
    grid: GridSpec,
    eta: f64,
    exec: Execution,
    n_nodes: usize,
    coords: Vec<(Vec<f64>, Vec<f64>)>,
    node_weight: Vec<f64>,
    /// `H_vertical(i, τ)` at `τ·X + i`.
    hv: Vec<f64>,
    /// `L_τ(i)` at `τ·X + i`.
    lin: Vec<f64>,
    c_tau: Vec<f64>,
    d_tau: Vec<i32>,
    succ: Vec<Vec<usize>>,
    tables: HashMap<Table, Vec<f64>>,
}

impl TransferSystem {
    pub fn new(alphabet: &Alphabet, weights: &Weights, grid: GridSpec, eta: f64, exec: Execution) -> Result<Self> {
        let base = alphabet.base();
        weights.validate(base)?;
        grid.validate(eta)?;
        let s = base.tree_len();
        let ppd = grid.points_per_dim;
        let n_nodes = ppd.checked_pow(2 * s as u32).unwrap_or(usize::MAX);
        let rows = n_nodes.saturating_mul(alphabet.len());
        if rows > MAX_ROWS {
            return Err(Error::GuardExceeded { what: "transfer grid rows", limit: MAX_ROWS, actual: rows });
        }
        let rule = symmetric_gauss_legendre(ppd, grid.radius);
        let mut coords = Vec::with_capacity(n_nodes);
        let mut node_weight = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            let mut rest = i;
            let mut c = Vec::with_capacity(2 * s);
            let mut w = 1.0;
            for _ in 0..2 * s {
                let (x, wx) = rule[rest % ppd];
                rest /= ppd;
                c.push(x);
                w *= wx;
            }
            let y = c.split_off(s);
            coords.push((c, y));
            node_weight.push(w);
        }
        let gauge: Vec<(Vec<f64>, Vec<f64>)> = coords.iter().map(|(t, y)| level_gauge(base, t, y)).collect();

        let local = LocalEnergy::new(alphabet, weights)?;
        let n_tau = alphabet.len();
        let mut hv = vec![0.0; n_tau * n_nodes];
        let mut lin = vec![0.0; n_tau * n_nodes];
        let mut c_tau = vec![0.0; n_tau];
        let mut d_tau = vec![0; n_tau];
        let mut right_sign = vec![vec![0.0; base.n_vertices()]; n_tau];
        for tau in 0..n_tau {
            let info = alphabet.info(tau);
            for v in 0..base.n_vertices() {
                let st = info.get(LocalEdge::Right(v));
                if st.in_tree {
                    c_tau[tau] -= (weights.horizontal[v] / (2.0 * PI)).ln();
                }
                if st.is_branch() {
                    right_sign[tau][v] = st.sign();
                    d_tau[tau] += st.sign() as i32;
                }
            }
            for i in 0..n_nodes {
                let (grad_t, grad_y) = &coords[i];
                let h = local.vertical(&Block { grad_t: grad_t.clone(), grad_y: grad_y.clone(), tau })?;
                let phi = &gauge[i].0;
                hv[tau * n_nodes + i] = h;
                lin[tau * n_nodes + i] = right_sign[tau].iter().zip(phi).map(|(s, p)| s * p).sum();
            }
        }
        let succ = (0..n_tau).map(|a| (0..n_tau).filter(|&b| alphabet.follows(a, b)).collect()).collect();

        let mut keys: Vec<Table> = Vec::new();
        for &d in &d_tau {
            for key in [Table::Plain(2 * d), Table::Plain(2 * d + 1), Table::Plain(2 * d - 1), Table::Drift(d), Table::Cutoff(d)] {
                if !keys.contains(&key) {
                    keys.push(key);
                }
            }
        }
        let tables = build_tables(&keys, &gauge, &coords, weights, &grid, eta, exec);

        let sys = TransferSystem {
            alphabet: alphabet.clone(),
            grid,
            eta,
            exec,
            n_nodes,
            coords,
            node_weight,
            hv,
            lin,
            c_tau,
            d_tau,
            succ,
            tables,
        };
        sys.check_backbone_rows()?;
        Ok(sys)
    }

    /// The backbone row at the central node must carry mass; a vanishing
    /// row there means the `ω_hor` window misses the kernel.
    fn check_backbone_rows(&self) -> Result<()> {
        let k = self.kernel(KernelKind::K);
        let ones = vec![1.0; self.dim()];
        let y = k.matvec(&ones);
        if let Some(r) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Underflow(format!("non-finite kernel row at state {r}")));
        }
        let centre = self.n_nodes / 2;
        let row = self.alphabet.backbone_id() * self.n_nodes + centre;
        if !(y[row] > 0.0) {
            return Err(Error::Underflow("kernel row for the backbone letter at the central node vanishes".into()));
        }
        Ok(())
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    /// Number of vertical grid nodes `X`.
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of discrete states `X·|Θ|`.
    pub fn dim(&self) -> usize {
        self.n_nodes * self.alphabet.len()
    }

    /// `(τ, vertical node)` of a state index.
    pub fn state(&self, r: usize) -> (usize, usize) {
        (r / self.n_nodes, r % self.n_nodes)
    }

    /// Vertical coordinates `(∇t, y)` of node `i`.
    pub fn node(&self, i: usize) -> (&[f64], &[f64]) {
        (&self.coords[i].0, &self.coords[i].1)
    }

    /// Quadrature weight of every state (the weight of its vertical node).
    pub fn state_weights(&self) -> Vec<f64> {
        (0..self.dim()).map(|r| self.node_weight[r % self.n_nodes]).collect()
    }

    pub fn kernel(&self, kind: KernelKind) -> KernelMatrix<'_> {
        KernelMatrix { sys: self, kind }
    }

    /// `Ψ_links = e^{−H_links}` at every state.
    pub fn psi_left(&self) -> Vec<f64> {
        let bb = self.alphabet.backbone_id();
        (0..self.dim())
            .map(|r| {
                let tau = r / self.n_nodes;
                if self.alphabet.follows(bb, tau) {
                    (-0.5 * self.hv[r]).exp()
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// `Ψ_rechts = e^{−H_rechts}` at every state.
    pub fn psi_right(&self) -> Vec<f64> {
        let bb = self.alphabet.backbone_id();
        (0..self.dim())
            .map(|r| {
                let tau = r / self.n_nodes;
                if self.alphabet.follows(tau, bb) {
                    (-0.5 * self.hv[r]).exp()
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn left_factor(&self, tau: usize, i: usize) -> f64 {
        let r = tau * self.n_nodes + i;
        (-0.5 * self.hv[r] + self.lin[r] - self.c_tau[tau]).exp()
    }

    fn right_factor(&self, tau: usize, tau2: usize, j: usize) -> f64 {
        (-0.5 * self.hv[tau2 * self.n_nodes + j] - self.lin[tau * self.n_nodes + j]).exp()
    }

    fn table_value(&self, kind: KernelKind, tau: usize, i: usize, j: usize) -> f64 {
        kind.terms(self.d_tau[tau]).iter().map(|&(c, t)| c * self.tables[&t][i * self.n_nodes + j]).sum()
    }
}

/// Assemble the `ω_hor` integral tables, one row of every table per task.
fn build_tables(
    keys: &[Table],
    gauge: &[(Vec<f64>, Vec<f64>)],
    coords: &[(Vec<f64>, Vec<f64>)],
    weights: &Weights,
    grid: &GridSpec,
    eta: f64,
    exec: Execution,
) -> HashMap<Table, Vec<f64>> {
    let x = gauge.len();
    let r = grid.radius;
    let u_rule = gauss_legendre(grid.hor_points, -r * (1.0 - grid.asymmetry), r);
    let y_rule = symmetric_gauss_legendre(grid.hor_points, r);
    let inv_eta2 = 1.0 / (eta * eta);
    let cut: Vec<f64> = coords
        .iter()
        .map(|(t, y)| t.iter().zip(y).map(|(a, b)| chi_tilde(inv_eta2 * (a * a + b * b))).product())
        .collect();
    // Polar rule on the disc of radius η: χ̃ = 1 inside η/√2, smoothstep outside.
    let mut disc = Vec::new();
    let r0 = eta / 2f64.sqrt();
    for (a, b) in [(0.0, r0), (r0, eta)] {
        for (rho, wr) in gauss_legendre(grid.chi_radial, a, b) {
            for k in 0..grid.chi_angular {
                let th = 2.0 * PI * (k as f64 + 0.5) / grid.chi_angular as f64;
                let w = wr * rho * 2.0 * PI / grid.chi_angular as f64 * chi_tilde(inv_eta2 * rho * rho);
                disc.push((rho * th.cos(), rho * th.sin(), w));
            }
        }
    }
    let beta = &weights.horizontal;
    let nv = beta.len();

    let rows: Vec<Vec<Vec<f64>>> = par::map_range(exec, x, |i| {
        let mut out = vec![vec![0.0; x]; keys.len()];
        let (phi, sigma) = &gauge[i];
        let mut b_coef = vec![0.0; nv];
        for j in 0..x {
            let (phi2, sigma2) = &gauge[j];
            for v in 0..nv {
                b_coef[v] = (0.5 * (phi[v] + phi2[v])).exp();
            }
            // A_v(u) = σ′_v e^{(φ+φ′−u)/2} − σ_v e^{(φ+φ′+u)/2}
            let a_coef = |v: usize, u: f64| sigma2[v] * b_coef[v] * (-0.5 * u).exp() - sigma[v] * b_coef[v] * (0.5 * u).exp();
            let g0 = |u: f64| (0..nv).map(|v| beta[v] * (phi2[v] - phi[v] + u).cosh_m1()).sum::<f64>();
            let mut acc = vec![0.0; keys.len()];
            let add = |u: f64, base: f64, acc: &mut Vec<f64>, cutoff: bool| {
                for (k, key) in keys.iter().enumerate() {
                    match (*key, cutoff) {
                        (Table::Plain(h), false) => acc[k] += base * (-0.5 * h as f64 * u).exp(),
                        (Table::Drift(d), false) => acc[k] += base * u * (-(d as f64) * u).exp(),
                        (Table::Cutoff(d), true) => acc[k] += base * (-(d as f64) * u).exp(),
                        _ => {}
                    }
                }
            };
            match grid.hor_rule {
                HorRule::Analytic => {
                    for &(u, wu) in &u_rule {
                        let (mut qa, mut qb, mut qc) = (0.0, 0.0, 0.0);
                        for v in 0..nv {
                            let (a, b) = (a_coef(v, u), b_coef[v]);
                            qa += beta[v] * b * b;
                            qb += beta[v] * a * b;
                            qc += beta[v] * a * a;
                        }
                        let base = wu * (2.0 * PI / qa).sqrt() * (-g0(u) - 0.5 * (qc - qb * qb / qa)).exp();
                        add(u, base, &mut acc, false);
                    }
                }
                HorRule::Tensor => {
                    for &(u, wu) in &u_rule {
                        let g = g0(u);
                        let a: Vec<f64> = (0..nv).map(|v| a_coef(v, u)).collect();
                        for &(y, wy) in &y_rule {
                            let q: f64 = (0..nv).map(|v| beta[v] * (b_coef[v] * y + a[v]).powi(2)).sum();
                            add(u, wu * wy * (-g - 0.5 * q).exp(), &mut acc, false);
                        }
                    }
                }
            }
            let cc = cut[i] * cut[j];
            if cc > 0.0 {
                for &(u, y, w) in &disc {
                    let q: f64 = (0..nv).map(|v| beta[v] * (b_coef[v] * y + a_coef(v, u)).powi(2)).sum();
                    add(u, cc * w * (-g0(u) - 0.5 * q).exp(), &mut acc, true);
                }
            }
            for k in 0..keys.len() {
                out[k][j] = acc[k];
            }
        }
        out
    });
    let mut tables: HashMap<Table, Vec<f64>> = keys.iter().map(|&k| (k, vec![0.0; x * x])).collect();
    for (i, row) in rows.into_iter().enumerate() {
        for (k, key) in keys.iter().enumerate() {
            tables.get_mut(key).expect("key")[i * x..(i + 1) * x].copy_from_slice(&row[k]);
        }
    }
    tables
}

/// A discretized operator, applied matrix-free.
#[derive(Clone, Copy)]
pub struct KernelMatrix<'a> {
    sys: &'a TransferSystem,
    kind: KernelKind,
}

impl KernelMatrix<'_> {
    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.sys.dim()
    }

    /// Kernel value `k((ω_i, τ), (ω_j, τ′))` between two states.
    pub fn kernel_value(&self, row: usize, col: usize) -> f64 {
        let s = self.sys;
        let ((tau, i), (tau2, j)) = (s.state(row), s.state(col));
        if !s.alphabet.follows(tau, tau2) {
            return 0.0;
        }
        s.left_factor(tau, i) * s.table_value(self.kind, tau, i, j) * s.right_factor(tau, tau2, j)
    }

    /// Matrix entry: kernel value times the quadrature weight of the column.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.kernel_value(row, col) * self.sys.node_weight[col % self.sys.n_nodes]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |r, c| self.entry(r, c))
    }

    /// `M x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let s = self.sys;
        let nx = s.n_nodes;
        let blocks: Vec<Vec<f64>> = par::map_range(s.exec, s.alphabet.len(), |tau| {
            let mut q = vec![0.0; nx];
            for &tau2 in &s.succ[tau] {
                for j in 0..nx {
                    let xv = x[tau2 * nx + j];
                    if xv != 0.0 {
                        q[j] += s.right_factor(tau, tau2, j) * xv;
                    }
                }
            }
            for j in 0..nx {
                q[j] *= s.node_weight[j];
            }
            let terms = self.kind.terms(s.d_tau[tau]);
            (0..nx)
                .map(|i| {
                    let mut acc = 0.0;
                    for &(c, t) in &terms {
                        let row = &s.tables[&t][i * nx..(i + 1) * nx];
                        acc += c * row.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
                    }
                    s.left_factor(tau, i) * acc
                })
                .collect()
        });
        blocks.concat()
    }

    /// `xᵀ M` as a vector.
    pub fn rmatvec(&self, x: &[f64]) -> Vec<f64> {
        let s = self.sys;
        let nx = s.n_nodes;
        let n_tau = s.alphabet.len();
        // p_τ(j) = Σ_i J_τ(i, j) e^{…}(i) x(i, τ)
        let p: Vec<Vec<f64>> = par::map_range(s.exec, n_tau, |tau| {
            let mut out = vec![0.0; nx];
            let terms = self.kind.terms(s.d_tau[tau]);
            for i in 0..nx {
                let xi = x[tau * nx + i];
                if xi == 0.0 {
                    continue;
                }
                let f = s.left_factor(tau, i) * xi;
                for &(c, t) in &terms {
                    let row = &s.tables[&t][i * nx..(i + 1) * nx];
                    for j in 0..nx {
                        out[j] += c * f * row[j];
                    }
                }
            }
            out
        });
        let mut y = vec![0.0; s.dim()];
        for tau in 0..n_tau {
            for &tau2 in &s.succ[tau] {
                for j in 0..nx {
                    y[tau2 * nx + j] += s.right_factor(tau, tau2, j) * p[tau][j];
                }
            }
        }
        for (r, v) in y.iter_mut().enumerate() {
            *v *= s.node_weight[r % nx];
        }
        y
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &mut [f64], c: f64) {
    a.iter_mut().for_each(|x| *x *= c);
}

/// Perron data of a discretized operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub lambda: f64,
    /// Right eigenfunction values at the states.
    pub phi_right: Vec<f64>,
    /// Left eigenfunction values, normalized so `⟨Φ_l, Φ_r⟩ = 1`.
    pub phi_left: Vec<f64>,
    /// Estimated `a` in `‖λ^{−n}Kⁿ − P‖ = O(aⁿ)`.
    pub gap_ratio: f64,
    /// Coefficient of determination of the log-linear fit behind `gap_ratio`.
    pub gap_fit_r2: f64,
    /// `(n, ‖λ^{−n}Kⁿ − P‖)` estimates used for the fit.
    pub gap_norms: Vec<(usize, f64)>,
    pub residual_right: f64,
    pub residual_left: f64,
    pub iterations: usize,
}

impl SpectralData {
    /// Row vector `w∘Φ_l`, so that `left_row·v = ⟨Φ_l, v⟩`.
    pub fn left_row(&self, sys: &TransferSystem) -> Vec<f64> {
        self.phi_left.iter().zip(sys.state_weights()).map(|(a, w)| a * w).collect()
    }
}

/// Power iteration `v ← A v / ‖A v‖` until the eigen-residual is below
/// tolerance. Returns `(λ, v, residual, iterations)`.
fn power_iteration(apply: impl Fn(&[f64]) -> Vec<f64>, n: usize) -> Result<(f64, Vec<f64>, f64, usize)> {
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for it in 1..=PERRON_MAX_ITER {
        let w = apply(&v);
        let nw = norm2(&w);
        if !(nw > 0.0) || !nw.is_finite() {
            return Err(Error::Underflow("power iteration collapsed to zero".into()));
        }
        let new_lambda = nw;
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let res = w.iter().zip(&v).map(|(a, b)| (a - new_lambda * b).abs()).fold(0.0, f64::max) / (new_lambda * vmax);
        let settled = (new_lambda - lambda).abs() <= PERRON_TOL * new_lambda;
        lambda = new_lambda;
        v = w;
        scale(&mut v, 1.0 / nw);
        if res <= PERRON_TOL || (settled && res <= 1e-11) {
            let w = apply(&v);
            let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let res = w.iter().zip(&v).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max) / (lambda * vmax);
            return Ok((lambda, v, res, it));
        }
    }
    Err(Error::NonConvergence(PERRON_MAX_ITER))
}

/// Perron eigenvalue, left/right eigenfunctions and the spectral gap ratio.
pub fn perron(k: &KernelMatrix) -> Result<SpectralData> {
    let sys = k.sys;
    let n = k.dim();
    let (lambda, mut r, residual_right, it_r) = power_iteration(|x| k.matvec(x), n)?;
    let (lambda_l, mut l, residual_left, it_l) = power_iteration(|x| k.rmatvec(x), n)?;
    if (lambda - lambda_l).abs() > 1e-9 * lambda {
        return Err(Error::NonConvergence(it_r.max(it_l)));
    }
    let rmax = r.iter().cloned().fold(f64::MIN, f64::max);
    scale(&mut r, 1.0 / rmax);
    let lr = dot(&l, &r);
    scale(&mut l, 1.0 / lr);
    for (index, &value) in r.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositiveEigenvector { index, value });
        }
    }
    for (index, &value) in l.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositiveEigenvector { index, value });
        }
    }
    let w = sys.state_weights();
    let (gap_ratio, gap_fit_r2, gap_norms) = gap_estimate(k, lambda, &r, &l, &w);
    let phi_left = l.iter().zip(&w).map(|(a, b)| a / b).collect();
    Ok(SpectralData {
        lambda,
        phi_right: r,
        phi_left,
        gap_ratio,
        gap_fit_r2,
        gap_norms,
        residual_right,
        residual_left,
        iterations: it_r.max(it_l),
    })
}

/// Fit `log ‖Bⁿ‖ ≈ n log a + c` for `B = M/λ − r ℓᵀ`, with the norm estimated
/// from seeded Gaussian probes in the weighted `L²` norm.
fn gap_estimate(k: &KernelMatrix, lambda: f64, r: &[f64], l: &[f64], w: &[f64]) -> (f64, f64, Vec<(usize, f64)>) {
    let n = r.len();
    let wnorm = |x: &[f64]| x.iter().zip(w).map(|(a, b)| a * a * b).sum::<f64>().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(GAP_SEED);
    let n_max = *GAP_FIT.end();
    let mut norms = vec![0.0f64; n_max + 1];
    for _ in 0..GAP_PROBES {
        let mut h: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let h0 = wnorm(&h);
        for norm in norms.iter_mut().skip(1) {
            let mut next = k.matvec(&h);
            let c = dot(l, &h);
            for (x, ri) in next.iter_mut().zip(r) {
                *x = *x / lambda - c * ri;
            }
            h = next;
            *norm = norm.max(wnorm(&h) / h0);
        }
    }
    let pts: Vec<(usize, f64)> = (1..=n_max).map(|i| (i, norms[i])).collect();
    let fit: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(i, v)| GAP_FIT.contains(i) && *v > GAP_FLOOR)
        .map(|&(i, v)| (i as f64, v.ln()))
        .collect();
    if fit.len() < 3 {
        // Already at rounding level: the decay is faster than we can resolve.
        let last = pts.iter().rev().find(|(_, v)| *v > GAP_FLOOR);
        let a = match last {
            Some(&(i, v)) => v.powf(1.0 / i as f64).min(GAP_FLOOR.powf(1.0 / *GAP_FIT.start() as f64)),
            None => 0.0,
        };
        return (a, 1.0, pts);
    }
    let (slope, r2) = linear_fit(&fit);
    (slope.exp().min(1.0), r2, pts)
}

/// Least-squares slope and `R²`.
pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// `|⟨Φ_l, 𝒦̃₀ Φ_r⟩| / λ`, zero for an exactly reflection-symmetric discretization.
pub fn symmetry_defect(sys: &TransferSystem, spectral: &SpectralData) -> f64 {
    let v = sys.kernel(KernelKind::KTilde(0.0)).matvec(&spectral.phi_right);
    dot(&spectral.left_row(sys), &v).abs() / spectral.lambda
}

/// `c4 = ⟨Φ_l, (𝒦̃_α − 𝒦̃₀) Φ_r⟩ / (2αλ)`, computed from the cutoff kernel.
pub fn c4_estimate(sys: &TransferSystem, spectral: &SpectralData) -> Result<f64> {
    let v = sys.kernel(KernelKind::Cutoff).matvec(&spectral.phi_right);
    let c4 = dot(&spectral.left_row(sys), &v) / (2.0 * spectral.lambda);
    if !(c4 > 0.0) {
        return Err(Error::NonPositiveC4(c4));
    }
    Ok(c4)
}

/// The same quantity from the difference quotient at a given `α ≠ 0`.
pub fn c4_at_alpha(sys: &TransferSystem, spectral: &SpectralData, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Err(crate::error::invalid_param("alpha", "must be non-zero"));
    }
    let left = spectral.left_row(sys);
    let a = dot(&left, &sys.kernel(KernelKind::KTilde(alpha)).matvec(&spectral.phi_right));
    let b = dot(&left, &sys.kernel(KernelKind::KTilde(0.0)).matvec(&spectral.phi_right));
    Ok((a - b) / (2.0 * alpha * spectral.lambda))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub lo: i32,
    pub hi: i32,
    pub l: i32,
    pub alpha: f64,
    /// `E(α)`.
    pub value: f64,
    /// The `l` summands `½⟨…𝒦̃_α…⟩/⟨…𝒦…⟩`.
    pub terms: Vec<f64>,
    pub c4: f64,
    /// `c3 = E(α) − α l c4`.
    pub rest: f64,
}

/// `E(α)` from the transfer-operator representation on the strip `[lo, hi]`.
pub fn energy_transfer(sys: &TransferSystem, spectral: &SpectralData, lo: i32, hi: i32, l: i32, alpha: f64) -> Result<EnergyEstimate> {
    if !(lo <= 0 && 0 < l && l <= hi) {
        return Err(crate::error::invalid_param("l", format!("need lo <= 0 < l <= hi, got lo={lo}, l={l}, hi={hi}")));
    }
    let w = sys.state_weights();
    let k = sys.kernel(KernelKind::K);
    let kt = sys.kernel(KernelKind::KTilde(alpha));
    let normalized = |mut v: Vec<f64>| -> Result<Vec<f64>> {
        let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Underflow("boundary vector vanished during propagation".into()));
        }
        scale(&mut v, 1.0 / m);
        Ok(v)
    };
    let mut left = normalized(sys.psi_left().iter().zip(&w).map(|(a, b)| a * b).collect())?;
    let km = sys.kernel(KernelKind::KMinus);
    for _ in 0..(-lo) {
        left = normalized(km.rmatvec(&left))?;
    }
    let mut right = normalized(sys.psi_right())?;
    let kp = sys.kernel(KernelKind::KPlus);
    for _ in 0..(hi - l) {
        right = normalized(kp.matvec(&right))?;
    }
    let l_us = l as usize;
    let mut lefts = vec![left];
    let mut rights = vec![right];
    for _ in 1..l_us {
        let a = normalized(k.rmatvec(lefts.last().expect("nonempty")))?;
        lefts.push(a);
        let b = normalized(k.matvec(rights.last().expect("nonempty")))?;
        rights.push(b);
    }
    let mut terms = Vec::with_capacity(l_us);
    for n in 0..l_us {
        let rv = &rights[l_us - 1 - n];
        let num = dot(&lefts[n], &kt.matvec(rv));
        let den = dot(&lefts[n], &k.matvec(rv));
        if !(den > 0.0) {
            return Err(Error::Underflow("energy denominator".into()));
        }
        terms.push(0.5 * num / den);
    }
    let value: f64 = terms.iter().sum();
    let c4 = c4_estimate(sys, spectral)?;
    Ok(EnergyEstimate { lo, hi, l, alpha, value, terms, c4, rest: value - alpha * l as f64 * c4 })
}

/// `α* = −min{c4/(2c5), c9η(1 − 10⁻⁹)}` and `c11 = −α*(c5α* + c4)`.
pub fn predicted_decay(c4: f64, c5: f64, params: &crate::measure::DeformationParams) -> Result<(f64, f64)> {
    params.validate_scales()?;
    if !(c4 > 0.0) {
        return Err(Error::NonPositiveC4(c4));
    }
    if !(c5 > 0.0) {
        return Err(crate::error::invalid_param("c5", format!("must be positive, got {c5}")));
    }
    let alpha = -(c4 / (2.0 * c5)).min(params.c9 * params.eta * (1.0 - 1e-9));
    Ok((alpha, -alpha * (c5 * alpha + c4)))
}
