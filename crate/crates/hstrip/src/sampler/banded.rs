//! Symmetric positive definite band matrices and their Cholesky factors.
//!
//! Strip vertices are numbered level by level, so `A_L(t) + ε̂` has
//! half-bandwidth `|V₀|` and factorizes in `O(n|V₀|²)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::graph::StripGraph;
use crate::{Error, Result};

/// Lower band of a symmetric matrix, `data[i(b+1) + (i−j)] = a_ij` for `0 ≤ i−j ≤ b`.
#[derive(Debug, Clone)]
pub struct Band {
    n: usize,
    b: usize,
    data: Vec<f64>,
}

impl Band {
    pub fn zeros(n: usize, b: usize) -> Self {
        Band { n, b, data: vec![0.0; n * (b + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.b
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.b {
            0.0
        } else {
            self.data[i * (self.b + 1) + (i - j)]
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[i * (self.b + 1) + (i - j)] += v;
    }

    /// Half-bandwidth of the strip's vertex numbering.
    pub fn strip_bandwidth(strip: &StripGraph) -> usize {
        (0..strip.n_edges())
            .map(|e| {
                let ed = strip.edge(e);
                ed.tail.abs_diff(ed.head)
            })
            .max()
            .unwrap_or(0)
    }

    /// Overwrite with `A_L(t) + ε̂`.
    pub fn fill_pinned(&mut self, strip: &StripGraph, t: &[f64]) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
        for e in 0..strip.n_edges() {
            let ed = strip.edge(e);
            let w = strip.beta(e) * (t[ed.tail] + t[ed.head]).exp();
            self.add(ed.tail, ed.tail, w);
            self.add(ed.head, ed.head, w);
            self.add(ed.tail, ed.head, -w);
        }
        let pin = strip.pin_vertex();
        self.add(pin, pin, strip.weights().epsilon * t[pin].exp());
    }

    /// Cholesky factor `L` with `A = LLᵀ`, stored in the same band layout.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let (n, b) = (self.n, self.b);
        let w = b + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(b);
            for j in j0..=i {
                let mut sum = self.data[i * w + (i - j)];
                for k in j0.max(j.saturating_sub(b))..j {
                    sum -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::Factorization(i));
                    }
                    l[i * w] = sum.sqrt();
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        Ok(Cholesky { n, b, data: l })
    }
}

#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    b: usize,
    data: Vec<f64>,
}

impl Cholesky {
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.data[i * (self.b + 1)].ln()).sum::<f64>()
    }

    /// Solve `Lᵀ x = z` in place.
    pub fn solve_upper(&self, z: &mut [f64]) {
        let w = self.b + 1;
        for i in (0..self.n).rev() {
            let mut sum = z[i];
            for k in i + 1..(i + w).min(self.n) {
                sum -= self.data[k * w + (k - i)] * z[k];
            }
            z[i] = sum / self.data[i * w];
        }
    }

    /// Draw from the centred Gaussian with precision `LLᵀ`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut z: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
        self.solve_upper(&mut z);
        z
    }
}
