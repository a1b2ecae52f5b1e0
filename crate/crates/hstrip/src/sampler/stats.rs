//! Pooled batch-means error bars over independent chains.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Minimum number of pooled batches behind a reported standard error.
pub const MIN_BATCHES: usize = 20;
/// Estimates with fewer effective samples are refused.
pub const MIN_EFFECTIVE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub mean: f64,
    pub stderr: f64,
    pub n_effective: f64,
}

impl EstimateWithError {
    /// `|mean − target| ≤ k·stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }

    pub fn require_effective(self, what: &'static str) -> Result<Self> {
        if self.n_effective < MIN_EFFECTIVE {
            return Err(Error::InsufficientSamples { what, value: self.n_effective, required: MIN_EFFECTIVE });
        }
        Ok(self)
    }
}

/// Retained observable values, row-major per chain: `values[c][k·n_obs + j]`
/// is observable `j` of draw `k` in chain `c`.
#[derive(Debug, Clone)]
pub struct Samples {
    pub n_obs: usize,
    pub chains: Vec<Vec<f64>>,
    pub batches_per_chain: usize,
}

impl Samples {
    pub fn n_draws(&self) -> usize {
        self.chains.iter().map(|c| c.len() / self.n_obs.max(1)).sum()
    }

    /// Observable `j` of every draw, chains concatenated.
    pub fn series(&self, j: usize) -> Vec<f64> {
        self.chains.iter().flat_map(|c| c.iter().skip(j).step_by(self.n_obs).copied()).collect()
    }

    /// Per-batch sums of each observable, `out[b][j]`, plus the batch size.
    /// A chain's trailing draws that do not fill a batch are dropped.
    pub fn batch_sums(&self) -> Result<(Vec<Vec<f64>>, usize)> {
        let per_chain = self.chains.iter().map(|c| c.len() / self.n_obs).min().unwrap_or(0);
        let size = per_chain / self.batches_per_chain.max(1);
        let total = self.batches_per_chain * self.chains.len();
        if size == 0 || total < MIN_BATCHES {
            return Err(Error::InsufficientSamples { what: "batches", value: total.min(per_chain) as f64, required: MIN_BATCHES as f64 });
        }
        let mut out = Vec::with_capacity(total);
        for c in &self.chains {
            for b in 0..self.batches_per_chain {
                let mut s = vec![0.0; self.n_obs];
                for k in b * size..(b + 1) * size {
                    for (j, x) in s.iter_mut().enumerate() {
                        *x += c[k * self.n_obs + j];
                    }
                }
                out.push(s);
            }
        }
        Ok((out, size))
    }

    /// Mean of observable `j` with a batch-means error bar.
    pub fn estimate(&self, j: usize) -> Result<EstimateWithError> {
        let (sums, size) = self.batch_sums()?;
        let means: Vec<f64> = sums.iter().map(|s| s[j] / size as f64).collect();
        let used: Vec<f64> = self
            .chains
            .iter()
            .flat_map(|c| c.iter().skip(j).step_by(self.n_obs).take(size * self.batches_per_chain).copied())
            .collect();
        Ok(finish(&means, &used))
    }

    /// Self-normalized ratio `Σ num / Σ den` with per-batch ratios for the
    /// error bar.
    pub fn ratio(&self, num: usize, den: usize) -> Result<EstimateWithError> {
        let (sums, _) = self.batch_sums()?;
        let (tn, td) = sums.iter().fold((0.0, 0.0), |(a, b), s| (a + s[num], b + s[den]));
        let mean = tn / td;
        let ratios: Vec<f64> = sums.iter().map(|s| s[num] / s[den]).collect();
        let nb = ratios.len() as f64;
        let var_b = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (nb - 1.0);
        let stderr = (var_b / nb).sqrt();
        // Per-draw spread of the reweighted observable, f = num/den.
        let (n_ser, d_ser) = (self.series(num), self.series(den));
        let wsum: f64 = d_ser.iter().sum();
        let var = n_ser
            .iter()
            .zip(&d_ser)
            .filter(|(_, &w)| w != 0.0)
            .map(|(&x, &w)| w * (x / w - mean).powi(2))
            .sum::<f64>()
            / wsum;
        Ok(EstimateWithError { mean, stderr, n_effective: effective(var, stderr, n_ser.len()) })
    }
}

fn finish(batch_means: &[f64], values: &[f64]) -> EstimateWithError {
    let nb = batch_means.len() as f64;
    let mean = batch_means.iter().sum::<f64>() / nb;
    let var_b = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (nb - 1.0);
    let stderr = (var_b / nb).sqrt();
    let n = values.len() as f64;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    EstimateWithError { mean, stderr, n_effective: effective(var, stderr, values.len()) }
}

/// `var/stderr²`, or the raw count when the error bar vanishes.
fn effective(var: f64, stderr: f64, n: usize) -> f64 {
    if stderr > 0.0 {
        var / (stderr * stderr)
    } else {
        n as f64
    }
}

/// Kish effective sample size `(Σw)²/Σw²`.
pub fn kish_ess(w: &[f64]) -> f64 {
    let s: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

/// Pearson correlation of two equal-length series.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Weighted least squares `y ≈ a + b x`; returns `(b, a)`.
pub fn wls(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for ((xi, yi), wi) in x.iter().zip(y).zip(w) {
        sxy += wi * (xi - mx) * (yi - my);
        sxx += wi * (xi - mx) * (xi - mx);
    }
    let b = sxy / sxx;
    (b, my - b * mx)
}
