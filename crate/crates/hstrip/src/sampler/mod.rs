//! Monte Carlo for `μ⁰_L` and the interpolated measure `P^{0ℓ}`.
//!
//! The chain state is `t` alone. Integrating the Gaussian `s`-form out of
//! the density leaves the marginal
//!
//! ```text
//! π(t) = (2π)^{−n/2} Π e^{−tⱼ} e^{−F_L(∇t)} det[A_L(t) + ε̂]^{1/2} e^{−ε(cosh t₀ − 1)},
//! ```
//!
//! since `∫ e^{−½[s,(A+ε̂)s]} ds = (2π)^{n/2} det^{−1/2}` absorbs half of the
//! determinant and half of the `(2π)^{−n}` prefactor. Given `t`, `s` is an
//! exact Gaussian draw and the spanning tree an exact Wilson draw, so every
//! retained sample is a draw of `(t, s, T)`.
//!
//! Expectations under `P^{0ℓ}` are importance-reweighted by `e^{(t_ℓ−t₀)/2}`.

mod banded;
mod stats;
mod wilson;

pub use banded::{Band, Cholesky};
pub use stats::{correlation, kish_ess, wls, EstimateWithError, Samples, MIN_BATCHES, MIN_EFFECTIVE};
pub use wilson::sample_tree;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::graph::{SpanningTree, StripGraph};
use crate::measure::{
    deform, deform_log_jacobian, entropy_constant, f_energy, interpolated_hamiltonian, to_gradient, CoshM1,
    DeformationParams, FieldConfig, GradientConfig,
};
use crate::par::{self, Execution};
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Sweeps per step-size adaptation window during burn-in.
const ADAPT_WINDOW: usize = 50;
const TARGET_ACCEPTANCE: f64 = 0.4;
const ACCEPTANCE_WARN: (f64, f64) = (0.05, 0.95);
/// Minimum Kish effective sample size of the importance weights.
pub const MIN_ESS: f64 = 50.0;
const INDEPENDENCE_COORDS: usize = 10;

/// Which Metropolis moves make up a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moves {
    /// One random-walk update per vertex.
    Site,
    /// Shift every vertex beyond a level cut, away from the pin, and shift
    /// the whole strip. These change `∇t` on one horizontal layer only.
    Cut,
    #[default]
    Both,
}

fn default_chains() -> usize {
    4
}
fn default_batches() -> usize {
    20
}
fn default_thin() -> usize {
    1
}

/// `samples` is per chain; `burn_in` and `thin` count sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub burn_in: usize,
    pub samples: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    pub t_step: f64,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default)]
    pub moves: Moves,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            burn_in: 1000,
            samples: 10_000,
            thin: 1,
            t_step: 0.5,
            chains: default_chains(),
            batches: default_batches(),
            moves: Moves::Both,
            execution: Execution::Parallel,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        use crate::error::invalid_param;
        if self.samples == 0 {
            return Err(invalid_param("samples", "must be at least 1"));
        }
        if !(self.t_step > 0.0 && self.t_step.is_finite()) {
            return Err(invalid_param("t_step", format!("must be positive, got {}", self.t_step)));
        }
        if self.thin == 0 || self.chains == 0 || self.batches == 0 {
            return Err(invalid_param("thin/chains/batches", "must be at least 1"));
        }
        if self.samples < self.batches {
            return Err(invalid_param("samples", format!("need at least one draw per batch ({})", self.batches)));
        }
        Ok(())
    }
}

/// `ln π(t)`, the density of the `t`-marginal of `μ⁰_L`.
pub fn log_marginal(strip: &StripGraph, t: &[f64]) -> Result<f64> {
    let mut band = Band::zeros(strip.n_vertices(), Band::strip_bandwidth(strip));
    log_marginal_with(strip, t, &mut band)
}

fn log_marginal_with(strip: &StripGraph, t: &[f64], band: &mut Band) -> Result<f64> {
    check_len(strip, t)?;
    band.fill_pinned(strip, t);
    let ld = band.cholesky()?.log_det();
    let n = strip.n_vertices() as f64;
    let eps = strip.weights().epsilon;
    Ok(-t.iter().sum::<f64>() - 0.5 * n * LN_2PI - f_energy(strip, t) + 0.5 * ld - eps * t[strip.pin_vertex()].cosh_m1())
}

fn check_len(strip: &StripGraph, t: &[f64]) -> Result<()> {
    if t.len() != strip.n_vertices() {
        return Err(crate::error::invalid_param("t", format!("expected {} entries, got {}", strip.n_vertices(), t.len())));
    }
    Ok(())
}

/// Exact draw of `s` from the centred Gaussian with precision `A_L(t) + ε̂`.
pub fn sample_s_given_t<R: Rng>(strip: &StripGraph, t: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_len(strip, t)?;
    let mut band = Band::zeros(strip.n_vertices(), Band::strip_bandwidth(strip));
    band.fill_pinned(strip, t);
    Ok(band.cholesky()?.sample(rng))
}

/// What a retained sample carries besides `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Needs {
    pub s: bool,
    pub tree: bool,
}

/// One retained sample.
pub struct Draw<'a> {
    pub t: &'a [f64],
    pub s: Option<&'a [f64]>,
    pub tree: Option<&'a SpanningTree>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub site_acceptance: f64,
    pub cut_acceptance: f64,
    pub site_step: f64,
    pub cut_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub chains: Vec<ChainDiagnostics>,
    /// Acceptance rates outside `[0.05, 0.95]` after tuning.
    pub warnings: Vec<String>,
}

/// A random-walk move shifting `t` on the id range `[a, b)`.
#[derive(Debug, Clone, Copy)]
struct Move {
    a: usize,
    b: usize,
    site: bool,
}

fn sweep_moves(strip: &StripGraph, moves: Moves) -> Vec<Move> {
    let n = strip.n_vertices();
    let nv = strip.base().n_vertices();
    let mut out = Vec::new();
    if moves != Moves::Cut {
        out.extend((0..n).map(|i| Move { a: i, b: i + 1, site: true }));
    }
    if moves != Moves::Site {
        for c in strip.lo()..strip.hi() {
            let split = (c + 1 - strip.lo()) as usize * nv;
            out.push(if c < 0 { Move { a: 0, b: split, site: false } } else { Move { a: split, b: n, site: false } });
        }
        out.push(Move { a: 0, b: n, site: false });
    }
    out
}

struct Chain<'a> {
    strip: &'a StripGraph,
    band: Band,
    t: Vec<f64>,
    trial: Vec<f64>,
    logp: f64,
    rng: ChaCha8Rng,
    step: [f64; 2],
    tried: [u64; 2],
    accepted: [u64; 2],
}

impl<'a> Chain<'a> {
    fn new(strip: &'a StripGraph, config: &SamplerConfig, stream: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        let n = strip.n_vertices();
        let mut band = Band::zeros(n, Band::strip_bandwidth(strip));
        let t = vec![0.0; n];
        let logp = log_marginal_with(strip, &t, &mut band)?;
        Ok(Chain { strip, band, trial: t.clone(), t, logp, rng, step: [config.t_step; 2], tried: [0; 2], accepted: [0; 2] })
    }

    fn propose(&mut self, m: Move) {
        let k = (!m.site) as usize;
        let delta = self.step[k] * self.rng.sample::<f64, _>(StandardNormal);
        self.trial.copy_from_slice(&self.t);
        self.trial[m.a..m.b].iter_mut().for_each(|x| *x += delta);
        self.tried[k] += 1;
        let Ok(lp) = log_marginal_with(self.strip, &self.trial, &mut self.band) else {
            return;
        };
        if lp.is_finite() && (lp >= self.logp || self.rng.random::<f64>() < (lp - self.logp).exp()) {
            std::mem::swap(&mut self.t, &mut self.trial);
            self.logp = lp;
            self.accepted[k] += 1;
        }
    }

    fn sweep(&mut self, moves: &[Move]) {
        for &m in moves {
            self.propose(m);
        }
    }

    fn reset_counts(&mut self) {
        self.tried = [0; 2];
        self.accepted = [0; 2];
    }

    fn rate(&self, k: usize) -> f64 {
        if self.tried[k] == 0 {
            f64::NAN
        } else {
            self.accepted[k] as f64 / self.tried[k] as f64
        }
    }

    fn adapt(&mut self) {
        for k in 0..2 {
            if self.tried[k] > 0 {
                let r = self.rate(k);
                self.step[k] = (self.step[k] * (2.0 * (r - TARGET_ACCEPTANCE)).exp()).clamp(1e-4, 50.0);
            }
        }
        self.reset_counts();
    }
}

/// Run `config.chains` independent chains, evaluating `f` on every retained
/// sample into a row of `n_obs` values.
pub fn run_chains<F>(strip: &StripGraph, config: &SamplerConfig, needs: Needs, n_obs: usize, f: F) -> Result<(Samples, Diagnostics)>
where
    F: Fn(&Draw, &mut [f64]) -> Result<()> + Sync,
{
    config.validate()?;
    let moves = sweep_moves(strip, config.moves);
    let results = par::map_range(config.execution, config.chains, |c| -> Result<(Vec<f64>, ChainDiagnostics)> {
        let mut chain = Chain::new(strip, config, c as u64)?;
        for i in 0..config.burn_in {
            chain.sweep(&moves);
            if (i + 1) % ADAPT_WINDOW == 0 {
                chain.adapt();
            }
        }
        chain.reset_counts();
        let mut values = vec![0.0; config.samples * n_obs];
        let mut fill = Band::zeros(strip.n_vertices(), Band::strip_bandwidth(strip));
        for k in 0..config.samples {
            for _ in 0..config.thin {
                chain.sweep(&moves);
            }
            let s = if needs.s {
                fill.fill_pinned(strip, &chain.t);
                Some(fill.cholesky()?.sample(&mut chain.rng))
            } else {
                None
            };
            let tree = needs.tree.then(|| sample_tree(strip, &chain.t, &mut chain.rng));
            let draw = Draw { t: &chain.t, s: s.as_deref(), tree: tree.as_ref() };
            f(&draw, &mut values[k * n_obs..(k + 1) * n_obs])?;
        }
        let diag = ChainDiagnostics {
            site_acceptance: chain.rate(0),
            cut_acceptance: chain.rate(1),
            site_step: chain.step[0],
            cut_step: chain.step[1],
        };
        Ok((values, diag))
    });
    let mut chains = Vec::with_capacity(config.chains);
    let mut diags = Vec::with_capacity(config.chains);
    for r in results {
        let (v, d) = r?;
        chains.push(v);
        diags.push(d);
    }
    let mut warnings = Vec::new();
    for (c, d) in diags.iter().enumerate() {
        for (name, r) in [("site", d.site_acceptance), ("cut", d.cut_acceptance)] {
            if r.is_finite() && !(ACCEPTANCE_WARN.0..=ACCEPTANCE_WARN.1).contains(&r) {
                warnings.push(format!("chain {c}: {name} acceptance {r:.3} outside [0.05, 0.95]"));
            }
        }
    }
    Ok((Samples { n_obs, chains, batches_per_chain: config.batches }, Diagnostics { chains: diags, warnings }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcEstimate {
    pub estimate: EstimateWithError,
    pub diagnostics: Diagnostics,
}

/// `E_{μ⁰_L}[f]` for an observable of `(t, s)`.
pub fn mcmc_t<F>(strip: &StripGraph, config: &SamplerConfig, observable: F) -> Result<McmcEstimate>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let needs = Needs { s: true, tree: false };
    let (samples, diagnostics) = run_chains(strip, config, needs, 1, |d, out| {
        out[0] = observable(d.t, d.s.expect("s requested"));
        Ok(())
    })?;
    let estimate = samples.estimate(0)?.require_effective("mcmc estimate")?;
    Ok(McmcEstimate { estimate, diagnostics })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub l: i32,
    pub estimate: f64,
    pub stderr: f64,
    pub n_effective: f64,
}

/// `E[e^{(t_ℓ−t₀)/2}]` against `ℓ` with a weighted fit of the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub points: Vec<DecayPoint>,
    /// Slope of `ln E` against `ℓ`; the decay rate is its negative.
    pub slope: f64,
    pub intercept: f64,
    /// Delete-one-batch jackknife error of the slope.
    pub slope_stderr: f64,
    pub diagnostics: Diagnostics,
}

impl DecayCurve {
    pub fn decay_rate(&self) -> f64 {
        -self.slope
    }

    /// One-sided 95% upper confidence bound on the slope.
    pub fn slope_upper_95(&self) -> f64 {
        self.slope + 1.645 * self.slope_stderr
    }

    /// Consecutive pairs that fail to decrease, with the increase in units
    /// of the combined standard error.
    pub fn increases(&self) -> Vec<(i32, f64)> {
        self.points
            .windows(2)
            .filter(|w| w[1].estimate >= w[0].estimate)
            .map(|w| (w[1].l, (w[1].estimate - w[0].estimate) / w[0].stderr.hypot(w[1].stderr)))
            .collect()
    }

    /// `|slope − other.slope| / |other.slope|`.
    pub fn relative_slope_change(&self, other: &DecayCurve) -> f64 {
        (self.slope - other.slope).abs() / other.slope.abs()
    }
}

/// Points with zero error (`ℓ = 0`) carry no information on the slope and
/// are left out of the fit.
fn fit_log(ls: &[i32], means: &[f64], weights: &[f64]) -> (f64, f64) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    for i in 0..ls.len() {
        if weights[i].is_finite() && weights[i] > 0.0 && means[i] > 0.0 {
            x.push(ls[i] as f64);
            y.push(means[i].ln());
            w.push(weights[i]);
        }
    }
    if x.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    wls(&x, &y, &w)
}

pub fn decay_curve(strip: &StripGraph, ls: &[i32], config: &SamplerConfig) -> Result<DecayCurve> {
    let p = strip.base().pin();
    let ids = ls.iter().map(|&l| strip.vertex(l, p)).collect::<Result<Vec<_>>>()?;
    let pin = strip.pin_vertex();
    let (samples, diagnostics) = run_chains(strip, config, Needs::default(), ls.len(), |d, out| {
        for (o, &i) in out.iter_mut().zip(&ids) {
            *o = (0.5 * (d.t[i] - d.t[pin])).exp();
        }
        Ok(())
    })?;
    let mut points = Vec::with_capacity(ls.len());
    for (j, &l) in ls.iter().enumerate() {
        let e = samples.estimate(j)?;
        if e.mean - 2.0 * e.stderr <= 0.0 {
            return Err(Error::InsufficientSamples { what: "decay estimate above zero", value: e.mean / e.stderr, required: 2.0 });
        }
        let e = e.require_effective("decay estimate")?;
        points.push(DecayPoint { l, estimate: e.mean, stderr: e.stderr, n_effective: e.n_effective });
    }
    let weights: Vec<f64> = points.iter().map(|q| (q.estimate / q.stderr).powi(2)).collect();
    let means: Vec<f64> = points.iter().map(|q| q.estimate).collect();
    let (slope, intercept) = fit_log(ls, &means, &weights);

    let (sums, _) = samples.batch_sums()?;
    let total: Vec<f64> = (0..ls.len()).map(|j| sums.iter().map(|s| s[j]).sum()).collect();
    let nb = sums.len() as f64;
    let jack: Vec<f64> = sums
        .iter()
        .map(|s| {
            let m: Vec<f64> = (0..ls.len()).map(|j| (total[j] - s[j]) / (nb - 1.0)).collect();
            fit_log(ls, &m, &weights).0
        })
        .collect();
    let jm = jack.iter().sum::<f64>() / nb;
    let slope_stderr = ((nb - 1.0) / nb * jack.iter().map(|x| (x - jm).powi(2)).sum::<f64>()).sqrt();
    Ok(DecayCurve { points, slope, intercept, slope_stderr, diagnostics })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    /// `"t0"` or `"s0"`.
    pub pin: String,
    /// `"grad_t[k]"` or `"grad_y[k]"` in backbone-gradient order.
    pub coordinate: String,
    pub correlation: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub entries: Vec<CorrelationEntry>,
    /// Correlation of `t₀` with itself; must be 1.
    pub self_correlation: f64,
    pub passed: bool,
}

/// Correlations between the pin block `(t₀, s₀)` and randomly chosen
/// backbone-gradient coordinates, against `3/√n_eff`.
pub fn independence_check(strip: &StripGraph, config: &SamplerConfig) -> Result<IndependenceReport> {
    let m = strip.backbone().len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x1d3e_9a4f);
    let coords = rand::seq::index::sample(&mut rng, 2 * m, INDEPENDENCE_COORDS.min(2 * m)).into_vec();
    let needs = Needs { s: true, tree: false };
    let (samples, _) = run_chains(strip, config, needs, 2 + coords.len(), |d, out| {
        let field = FieldConfig { t: d.t.to_vec(), s: d.s.expect("s requested").to_vec() };
        let g = to_gradient(strip, &field)?;
        out[0] = g.t0;
        out[1] = g.s0;
        for (o, &k) in out[2..].iter_mut().zip(&coords) {
            *o = if k < m { g.grad_t[k] } else { g.grad_y[k - m] };
        }
        Ok(())
    })?;
    let n_eff: Vec<f64> = (0..samples.n_obs).map(|j| samples.estimate(j).map(|e| e.n_effective)).collect::<Result<_>>()?;
    let series: Vec<Vec<f64>> = (0..samples.n_obs).map(|j| samples.series(j)).collect();
    let mut entries = Vec::new();
    for (pi, name) in [(0, "t0"), (1, "s0")] {
        for (ci, &k) in coords.iter().enumerate() {
            let j = 2 + ci;
            let corr = correlation(&series[pi], &series[j]);
            let threshold = 3.0 / n_eff[pi].min(n_eff[j]).sqrt();
            let coordinate = if k < m { format!("grad_t[{k}]") } else { format!("grad_y[{}]", k - m) };
            entries.push(CorrelationEntry { pin: name.into(), coordinate, correlation: corr, threshold, passed: corr.abs() <= threshold });
        }
    }
    let passed = entries.iter().all(|e| e.passed);
    Ok(IndependenceReport { entries, self_correlation: correlation(&series[0], &series[0]), passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    /// Importance-sampling estimate of `∫ π(t) dt`.
    pub estimate: EstimateWithError,
    pub ess: f64,
}

/// `E_q[π/q] = 1` with `q` a Gaussian fitted to a short run of the chain and
/// widened by `inflation`. Draws are independent, so the error bar is the
/// plain standard error.
pub fn normalization_check(strip: &StripGraph, config: &SamplerConfig, inflation: f64) -> Result<NormalizationReport> {
    use nalgebra::{DMatrix, DVector};
    if !(inflation >= 1.0) {
        return Err(crate::error::invalid_param("inflation", format!("must be at least 1, got {inflation}")));
    }
    let n = strip.n_vertices();
    let (samples, _) = run_chains(strip, config, Needs::default(), n, |d, out| {
        out.copy_from_slice(d.t);
        Ok(())
    })?;
    let rows: Vec<&[f64]> = samples.chains.iter().flat_map(|c| c.chunks(n)).collect();
    let k = rows.len() as f64;
    let mut mean = DVector::zeros(n);
    for r in &rows {
        mean += DVector::from_column_slice(r);
    }
    mean /= k;
    let mut cov = DMatrix::zeros(n, n);
    for r in &rows {
        let d = DVector::from_column_slice(r) - &mean;
        cov += &d * d.transpose();
    }
    cov *= inflation * inflation / (k - 1.0);
    let chol = nalgebra::Cholesky::new(cov).ok_or(Error::Factorization(0))?;
    let l = chol.l();
    let log_norm = -0.5 * n as f64 * LN_2PI - l.diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let per = config.samples;
    let weights = par::map_range(config.execution, config.chains, |c| -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream((1 << 32) + c as u64);
        let mut band = Band::zeros(n, Band::strip_bandwidth(strip));
        let mut out = Vec::with_capacity(per);
        for _ in 0..per {
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let t = &mean + &l * &z;
            let log_q = log_norm - 0.5 * z.norm_squared();
            let w = match log_marginal_with(strip, t.as_slice(), &mut band) {
                Ok(lp) => (lp - log_q).exp(),
                Err(Error::Factorization(_)) => 0.0,
                Err(e) => return Err(e),
            };
            out.push(w);
        }
        Ok(out)
    });
    let w: Vec<f64> = weights.into_iter().collect::<Result<Vec<_>>>()?.concat();
    let m = w.len() as f64;
    let mean_w = w.iter().sum::<f64>() / m;
    let var = w.iter().map(|x| (x - mean_w).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(NormalizationReport { estimate: EstimateWithError { mean: mean_w, stderr: (var / m).sqrt(), n_effective: m }, ess: kish_ess(&w) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyEntropy {
    pub l: i32,
    pub alpha: f64,
    /// `E_mc = ½ Σ_{0≤n<ℓ} E_P[∇t^bb_{p_{n+1/2}} + αχ_{n+1/2}]`.
    pub energy: EstimateWithError,
    /// `S_mc = E_P[H^{0ℓ}∘ξ_α − H^{0ℓ} − ln det Dξ_α]`.
    pub entropy: EstimateWithError,
    /// `Z^{0ℓ} = E_{μ⁰}[e^{(t_ℓ−t₀)/2}]`.
    pub z: EstimateWithError,
    /// Kish effective sample size of the importance weights.
    pub ess: f64,
    pub c5: f64,
    /// `c5 α² ℓ`.
    pub entropy_bound: f64,
    /// `S_mc ≥ −3σ`.
    pub lower_ok: bool,
    /// `S_mc ≤ c5α²ℓ + 3σ`.
    pub upper_ok: bool,
    /// `ln Z ≤ E_mc + S_mc` within three combined standard errors.
    pub free_energy_ok: bool,
}

/// Energy and entropy of the deformed interpolated measure `Π_α`,
/// reweighted from draws of `μ⁰_L`.
pub fn mc_energy_entropy(strip: &StripGraph, l: i32, params: &DeformationParams, config: &SamplerConfig) -> Result<EnergyEntropy> {
    params.validate()?;
    if l < 0 || l > strip.hi() || strip.lo() > 0 {
        return Err(Error::LevelOutOfRange { level: l as i64, lo: 0, hi: strip.hi() });
    }
    let c5 = entropy_constant(params, strip.weights(), strip.base())?;
    let pin = strip.pin_vertex();
    let target = strip.vertex(l, strip.base().pin())?;
    let needs = Needs { s: true, tree: true };
    let (samples, _) = run_chains(strip, config, needs, 3, |d, out| {
        let field = FieldConfig { t: d.t.to_vec(), s: d.s.expect("s requested").to_vec() };
        let tree = d.tree.expect("tree requested");
        let g = to_gradient(strip, &field)?;
        let xi = deform(strip, &g, params, l)?;
        let w = (0.5 * (d.t[target] - d.t[pin])).exp();
        let energy = 0.5 * (0..l).map(|n| xi.grad_t[GradientConfig::horizontal_index(strip, n)]).sum::<f64>();
        let entropy = interpolated_hamiltonian(strip, &xi, tree, l)? - interpolated_hamiltonian(strip, &g, tree, l)?
            - deform_log_jacobian(strip, &g, params, l)?;
        out[0] = w;
        out[1] = w * energy;
        out[2] = w * entropy;
        Ok(())
    })?;
    let ess = kish_ess(&samples.series(0));
    if ess < MIN_ESS {
        return Err(Error::InsufficientSamples { what: "importance-weight ESS", value: ess, required: MIN_ESS });
    }
    let z = samples.estimate(0)?;
    let energy = samples.ratio(1, 0)?;
    let entropy = samples.ratio(2, 0)?;
    let entropy_bound = c5 * params.alpha * params.alpha * l as f64;
    let lower_ok = entropy.mean >= -3.0 * entropy.stderr;
    let upper_ok = entropy.mean <= entropy_bound + 3.0 * entropy.stderr;
    let ln_z_err = z.stderr / z.mean;
    let combined = (ln_z_err.powi(2) + energy.stderr.powi(2) + entropy.stderr.powi(2)).sqrt();
    let free_energy_ok = z.mean.ln() <= energy.mean + entropy.mean + 3.0 * combined;
    Ok(EnergyEntropy { l, alpha: params.alpha, energy, entropy, z, ess, c5, entropy_bound, lower_ok, upper_ok, free_energy_ok })
}
