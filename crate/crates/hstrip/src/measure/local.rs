//! Local form of the interpolated Hamiltonian: per-level blocks
//! `ϖ = (ω, τ)` coupled through the horizontal pin gradient `ω_hor`.
//!
//! Within a level the fields are gauged to `t = s = 0` at the pin copy, so
//! every local energy depends on gradients only.

use std::f64::consts::PI;
use std::ops::Add;

use super::{CoshM1, GradientConfig};
use crate::graph::{StripGraph, Weights};
use crate::tree_codec::{Alphabet, LocalEdge};
use crate::{Error, Result};

/// A Hamiltonian value where `+∞` encodes a violated matching constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Energy {
    Finite(f64),
    Infinite,
}

impl Energy {
    pub fn is_finite(self) -> bool {
        matches!(self, Energy::Finite(_))
    }

    /// `e^{−H}`, zero for the infinite sentinel.
    pub fn boltzmann(self) -> f64 {
        match self {
            Energy::Finite(h) => (-h).exp(),
            Energy::Infinite => 0.0,
        }
    }

    /// The value as `f64`, with `+∞` for the sentinel.
    pub fn value(self) -> f64 {
        match self {
            Energy::Finite(h) => h,
            Energy::Infinite => f64::INFINITY,
        }
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        match (self, rhs) {
            (Energy::Finite(a), Energy::Finite(b)) => Energy::Finite(a + b),
            _ => Energy::Infinite,
        }
    }
}

impl Add<f64> for Energy {
    type Output = Energy;
    fn add(self, rhs: f64) -> Energy {
        self + Energy::Finite(rhs)
    }
}

/// Vertical block `ϖ = (ω, τ)`: gradients on the copy of `S` in base-tree
/// order and the id of the local tree variable in the alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub grad_t: Vec<f64>,
    pub grad_y: Vec<f64>,
    pub tau: usize,
}

impl Block {
    /// `ϖ^R = (ω, τ^R)`.
    pub fn reflected(&self, alphabet: &Alphabet) -> Block {
        Block { tau: alphabet.reflect_id(self.tau), ..self.clone() }
    }
}

/// Gauge-fixed fields `(φ, σ)` on one level from its `S` gradients, with
/// `φ_p = σ_p = 0` at the pin.
pub fn level_gauge(base: &crate::graph::BaseGraph, grad_t: &[f64], grad_y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = base.n_vertices();
    let mut phi = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    for &v in &base.tree_order()[1..] {
        let (k, p) = base.tree_parent(v).expect("non-pin vertex has a parent");
        phi[v] = phi[p] + grad_t[k];
        sigma[v] = sigma[p] + grad_y[k] * (-0.5 * (phi[v] + phi[p])).exp();
    }
    (phi, sigma)
}

/// Oriented gradients `(∇t_v, y_v)` of every horizontal edge between two
/// gauged levels joined by `ω_hor = (u, y_hor)`.
pub fn horizontal_gradients(phi: &[f64], sigma: &[f64], phi2: &[f64], sigma2: &[f64], u: f64, y_hor: f64) -> Vec<(f64, f64)> {
    (0..phi.len())
        .map(|v| {
            let b = (0.5 * (phi[v] + phi2[v])).exp();
            let a = sigma2[v] * (0.5 * (phi[v] + phi2[v] - u)).exp() - sigma[v] * (0.5 * (phi[v] + phi2[v] + u)).exp();
            (phi2[v] - phi[v] + u, b * y_hor + a)
        })
        .collect()
}

/// Evaluator for the local Hamiltonians of one base graph and weight set.
pub struct LocalEnergy<'a> {
    alphabet: &'a Alphabet,
    weights: &'a Weights,
}

/// All local Hamiltonians of a middle block `(ϖ, ω_hor, ϖ′)`; `left` is
/// evaluated on `ϖ` and `right` on `ϖ′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalHamiltonians {
    pub vertical: f64,
    pub vertical_prime: f64,
    pub hor: Energy,
    pub mitte: Energy,
    pub mitte_plus: Energy,
    pub mitte_minus: Energy,
    pub left: Energy,
    pub right: Energy,
}

impl<'a> LocalEnergy<'a> {
    pub fn new(alphabet: &'a Alphabet, weights: &'a Weights) -> Result<Self> {
        weights.validate(alphabet.base())?;
        Ok(LocalEnergy { alphabet, weights })
    }

    fn check(&self, b: &Block) -> Result<()> {
        let s = self.alphabet.base().tree_len();
        if b.grad_t.len() != s || b.grad_y.len() != s {
            return Err(crate::error::invalid_param("block", format!("expected {s} gradients per level")));
        }
        if b.tau >= self.alphabet.len() {
            return Err(Error::NotInAlphabet);
        }
        Ok(())
    }

    /// `H_vertical(ϖ) = Σ_{e∈E₀} h_e^vertical(ϖ)`.
    pub fn vertical(&self, b: &Block) -> Result<f64> {
        self.check(b)?;
        let base = self.alphabet.base();
        let info = self.alphabet.info(b.tau);
        let (phi, sigma) = level_gauge(base, &b.grad_t, &b.grad_y);
        let mut h = -0.5 * b.grad_t.iter().sum::<f64>();
        for (k, &(a, c)) in base.edges().iter().enumerate() {
            let beta = self.weights.vertical[k];
            let dt = phi[c] - phi[a];
            let y = (sigma[c] - sigma[a]) * (0.5 * (phi[a] + phi[c])).exp();
            h += beta * (dt.cosh_m1() + 0.5 * y * y);
            let st = info.get(LocalEdge::Vertical(k));
            if st.in_tree {
                h -= (beta / (2.0 * PI)).ln();
            }
            if st.is_branch() {
                h += st.sign() * dt;
            }
        }
        Ok(h)
    }

    /// `H_hor(ϖ, ω_hor, ϖ′)`, infinite unless `τ ⊢ τ′`.
    pub fn hor(&self, b: &Block, omega_hor: (f64, f64), b2: &Block) -> Result<Energy> {
        self.check(b)?;
        self.check(b2)?;
        if !self.alphabet.follows(b.tau, b2.tau) {
            return Ok(Energy::Infinite);
        }
        let base = self.alphabet.base();
        let info = self.alphabet.info(b.tau);
        let (phi, sigma) = level_gauge(base, &b.grad_t, &b.grad_y);
        let (phi2, sigma2) = level_gauge(base, &b2.grad_t, &b2.grad_y);
        let mut h = 0.0;
        for (v, (dt, y)) in horizontal_gradients(&phi, &sigma, &phi2, &sigma2, omega_hor.0, omega_hor.1).into_iter().enumerate() {
            let beta = self.weights.horizontal[v];
            h += beta * (dt.cosh_m1() + 0.5 * y * y);
            let st = info.get(LocalEdge::Right(v));
            if st.in_tree {
                h -= (beta / (2.0 * PI)).ln();
            }
            if st.is_branch() {
                h += st.sign() * dt;
            }
        }
        Ok(Energy::Finite(h))
    }

    /// `H_mitte = ½H_vertical(ϖ) + H_hor + ½H_vertical(ϖ′)`.
    pub fn mitte(&self, b: &Block, omega_hor: (f64, f64), b2: &Block) -> Result<Energy> {
        Ok(self.hor(b, omega_hor, b2)? + 0.5 * (self.vertical(b)? + self.vertical(b2)?))
    }

    /// `H_mitte^± = H_mitte ± ½∇t_hor`.
    pub fn mitte_pm(&self, b: &Block, omega_hor: (f64, f64), b2: &Block, sign: f64) -> Result<Energy> {
        Ok(self.mitte(b, omega_hor, b2)? + sign * 0.5 * omega_hor.0)
    }

    /// `H_links(ϖ) = ½H_vertical(ϖ)`, infinite unless `τ_bb ⊢ τ`.
    pub fn left(&self, b: &Block) -> Result<Energy> {
        let h = 0.5 * self.vertical(b)?;
        Ok(if self.alphabet.follows(self.alphabet.backbone_id(), b.tau) { Energy::Finite(h) } else { Energy::Infinite })
    }

    /// `H_rechts(ϖ) = ½H_vertical(ϖ)`, infinite unless `τ ⊢ τ_bb`.
    pub fn right(&self, b: &Block) -> Result<Energy> {
        let h = 0.5 * self.vertical(b)?;
        Ok(if self.alphabet.follows(b.tau, self.alphabet.backbone_id()) { Energy::Finite(h) } else { Energy::Infinite })
    }

    pub fn all(&self, b: &Block, omega_hor: (f64, f64), b2: &Block) -> Result<LocalHamiltonians> {
        let vertical = self.vertical(b)?;
        let vertical_prime = self.vertical(b2)?;
        let hor = self.hor(b, omega_hor, b2)?;
        let mitte = hor + 0.5 * (vertical + vertical_prime);
        Ok(LocalHamiltonians {
            vertical,
            vertical_prime,
            hor,
            mitte,
            mitte_plus: mitte + 0.5 * omega_hor.0,
            mitte_minus: mitte + (-0.5 * omega_hor.0),
            left: self.left(b)?,
            right: self.right(b2)?,
        })
    }

    /// Split a global configuration into per-level blocks using the word ids
    /// of its tree.
    pub fn blocks(&self, strip: &StripGraph, g: &GradientConfig, ids: &[usize]) -> Vec<Block> {
        (strip.lo()..=strip.hi())
            .zip(ids)
            .map(|(n, &tau)| {
                let (t, y) = g.vertical_block(strip, n);
                Block { grad_t: t.to_vec(), grad_y: y.to_vec(), tau }
            })
            .collect()
    }

    /// `H^{0ℓ}_L` assembled from boundary and middle blocks.
    pub fn interpolated(&self, strip: &StripGraph, g: &GradientConfig, ids: &[usize], l: i32) -> Result<Energy> {
        if !strip.contains_level(l) {
            return Err(Error::LevelOutOfRange { level: l as i64, lo: strip.lo(), hi: strip.hi() });
        }
        if ids.len() != strip.n_levels() {
            return Err(crate::error::invalid_param("word", format!("expected {} letters", strip.n_levels())));
        }
        let blocks = self.blocks(strip, g, ids);
        let mut h = self.left(&blocks[0])? + self.right(&blocks[blocks.len() - 1])?;
        for n in strip.lo()..strip.hi() {
            let i = (n - strip.lo()) as usize;
            let sign = (n >= l) as i32 as f64 - (n < 0) as i32 as f64;
            h = h + self.mitte_pm(&blocks[i], g.horizontal(strip, n), &blocks[i + 1], sign)?;
        }
        Ok(h)
    }
}
