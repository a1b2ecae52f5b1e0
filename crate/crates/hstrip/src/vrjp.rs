//! The vertex-reinforced jump process on the pinned graph `𝒢_ρ`, its
//! discrete skeleton, and the random-walk-in-random-environment laws it
//! mixes over.
//!
//! While the walker sits at `i` only `L_i` grows, so every rate
//! `β_ij(1 + L_j)` is constant until the next jump. Holding times are
//! therefore exactly exponential and targets categorical; no time
//! discretization is involved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::graph::StripGraph;
use crate::par::{self, Execution};
use crate::sampler::{run_chains, wls, Needs, SamplerConfig};
use crate::{Error, Result};

/// Independent RNG streams used for VRJP runs; each covers a contiguous
/// slice of run indices so results do not depend on the thread count.
const RUN_BLOCKS: usize = 64;
const STREAM_OFFSET: u64 = 2 << 32;

/// A strip plus the root `ρ` joined to the pin `0̄` with weight `ε`.
#[derive(Debug, Clone)]
pub struct PinnedGraph {
    strip: StripGraph,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PinnedGraph {
    pub fn new(strip: StripGraph) -> Self {
        let n = strip.n_vertices();
        let mut adjacency = vec![Vec::new(); n + 1];
        for e in 0..strip.n_edges() {
            let ed = strip.edge(e);
            adjacency[ed.tail].push((ed.head, strip.beta(e)));
            adjacency[ed.head].push((ed.tail, strip.beta(e)));
        }
        let pin = strip.pin_vertex();
        let eps = strip.weights().epsilon;
        adjacency[pin].push((n, eps));
        adjacency[n].push((pin, eps));
        PinnedGraph { strip, adjacency }
    }

    pub fn strip(&self) -> &StripGraph {
        &self.strip
    }

    /// Id of `ρ`; strip vertices keep their ids.
    pub fn rho(&self) -> usize {
        self.strip.n_vertices()
    }

    pub fn n_vertices(&self) -> usize {
        self.adjacency.len()
    }

    /// `(neighbor, β)` pairs.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    /// Level of a strip vertex; `ρ` counts as level 0.
    pub fn level(&self, v: usize) -> i32 {
        if v == self.rho() {
            0
        } else {
            self.strip.level(v)
        }
    }

    /// `"rho"` or `"(n,v)"`.
    pub fn label(&self, v: usize) -> String {
        if v == self.rho() {
            "rho".into()
        } else {
            let (n, b) = self.strip.coords(v);
            format!("({n},{b})")
        }
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n_vertices() {
            return Err(Error::VertexOutOfRange(v));
        }
        Ok(())
    }
}

/// Position, per-vertex local times and clock of a running VRJP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrjpState {
    pub position: usize,
    pub local_time: Vec<f64>,
    pub clock: f64,
}

impl VrjpState {
    /// At `ρ` with zero local times.
    pub fn start(pg: &PinnedGraph) -> Self {
        VrjpState { position: pg.rho(), local_time: vec![0.0; pg.n_vertices()], clock: 0.0 }
    }

    /// Total jump rate out of the current position.
    pub fn total_rate(&self, pg: &PinnedGraph) -> f64 {
        pg.neighbors(self.position).iter().map(|&(j, b)| b * (1.0 + self.local_time[j])).sum()
    }

    /// Draw the holding time and target of the next jump without moving.
    fn next_jump<R: Rng>(&self, pg: &PinnedGraph, rng: &mut R) -> (f64, usize) {
        let nb = pg.neighbors(self.position);
        let total = self.total_rate(pg);
        let hold = rng.sample::<f64, _>(Exp1) / total;
        let mut x = rng.random::<f64>() * total;
        for &(j, b) in nb {
            x -= b * (1.0 + self.local_time[j]);
            if x < 0.0 {
                return (hold, j);
            }
        }
        (hold, nb[nb.len() - 1].0)
    }

    fn advance(&mut self, hold: f64, to: usize) {
        self.local_time[self.position] += hold;
        self.clock += hold;
        self.position = to;
    }

    /// Perform one jump and return its holding time.
    pub fn step<R: Rng>(&mut self, pg: &PinnedGraph, rng: &mut R) -> f64 {
        let (hold, to) = self.next_jump(pg, rng);
        self.advance(hold, to);
        hold
    }
}

/// Jump times and positions: `positions[k]` is occupied on
/// `[jump_times[k−1], jump_times[k])`, with `jump_times[−1] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub positions: Vec<usize>,
    pub jump_times: Vec<f64>,
    pub horizon: f64,
    pub local_time: Vec<f64>,
}

impl Trajectory {
    pub fn n_jumps(&self) -> usize {
        self.jump_times.len()
    }
}

/// Run from `ρ` until the clock reaches `horizon`.
pub fn simulate_vrjp<R: Rng>(pg: &PinnedGraph, horizon: f64, rng: &mut R) -> Result<Trajectory> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(crate::error::invalid_param("horizon", format!("must be positive, got {horizon}")));
    }
    let mut state = VrjpState::start(pg);
    let mut positions = vec![state.position];
    let mut jump_times = Vec::new();
    loop {
        let (hold, to) = state.next_jump(pg, rng);
        if state.clock + hold > horizon {
            state.local_time[state.position] += horizon - state.clock;
            state.clock = horizon;
            break;
        }
        state.advance(hold, to);
        jump_times.push(state.clock);
        positions.push(to);
    }
    Ok(Trajectory { positions, jump_times, horizon, local_time: state.local_time })
}

/// The discrete-time process `Ỹ`: positions in visiting order.
pub fn skeleton(traj: &Trajectory) -> Vec<usize> {
    traj.positions.clone()
}

/// First `n_jumps + 1` skeleton positions, without storing times.
pub fn simulate_skeleton<R: Rng>(pg: &PinnedGraph, n_jumps: usize, rng: &mut R) -> Vec<usize> {
    let mut state = VrjpState::start(pg);
    let mut out = Vec::with_capacity(n_jumps + 1);
    out.push(state.position);
    for _ in 0..n_jumps {
        state.step(pg, rng);
        out.push(state.position);
    }
    out
}

/// Conductances `W_ij = β_ij e^{tᵢ+tⱼ}` on `𝒢_ρ`, with `t_ρ = 0`, stored
/// along the adjacency lists of the pinned graph.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvWeights {
    w: Vec<Vec<f64>>,
}

impl EnvWeights {
    pub fn from_t(pg: &PinnedGraph, t: &[f64]) -> Result<Self> {
        let n = pg.strip().n_vertices();
        if t.len() != n {
            return Err(crate::error::invalid_param("t", format!("expected {n} entries, got {}", t.len())));
        }
        let tv = |v: usize| if v == n { 0.0 } else { t[v] };
        let w = (0..pg.n_vertices())
            .map(|i| pg.neighbors(i).iter().map(|&(j, b)| b * (tv(i) + tv(j)).exp()).collect())
            .collect();
        Ok(EnvWeights { w })
    }

    /// `W_ij`, or `None` when `i ≁ j`.
    pub fn weight(&self, pg: &PinnedGraph, i: usize, j: usize) -> Option<f64> {
        pg.neighbors(i).iter().position(|&(k, _)| k == j).map(|k| self.w[i][k])
    }

    /// `π^W_i = Σ_{j∼i} W_ij`.
    pub fn stationary(&self, i: usize) -> f64 {
        self.w[i].iter().sum()
    }

    /// `W_ij / π^W_i`, zero for non-neighbors.
    pub fn transition(&self, pg: &PinnedGraph, i: usize, j: usize) -> f64 {
        self.weight(pg, i, j).map_or(0.0, |w| w / self.stationary(i))
    }

    /// `max |π_i P(i→j) − π_j P(j→i)| / W_ij` over edges.
    pub fn reversibility_defect(&self, pg: &PinnedGraph) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..pg.n_vertices() {
            for (k, &(j, _)) in pg.neighbors(i).iter().enumerate() {
                let a = self.stationary(i) * self.transition(pg, i, j);
                let b = self.stationary(j) * self.transition(pg, j, i);
                worst = worst.max((a - b).abs() / self.w[i][k]);
            }
        }
        worst
    }
}

/// Probability that the walk in environment `W` started at `ρ` follows `path`.
pub fn rwre_path_prob(pg: &PinnedGraph, w: &EnvWeights, path: &[usize]) -> Result<f64> {
    for &v in path {
        pg.check_vertex(v)?;
    }
    if path.first() != Some(&pg.rho()) {
        return Err(crate::error::invalid_param("path", "must start at rho"));
    }
    Ok(path.windows(2).map(|s| w.transition(pg, s[0], s[1])).product())
}

/// All nearest-neighbor paths from `ρ` with `1..=t_max` jumps, shortest first.
pub fn paths_from_rho(pg: &PinnedGraph, t_max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut layer = vec![vec![pg.rho()]];
    for _ in 0..t_max {
        let mut next = Vec::new();
        for p in &layer {
            for &(j, _) in pg.neighbors(*p.last().expect("nonempty")) {
                let mut q = p.clone();
                q.push(j);
                next.push(q);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathComparison {
    pub path: Vec<String>,
    pub vrjp: f64,
    pub vrjp_stderr: f64,
    pub mixture: f64,
    pub mixture_stderr: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub t_max: usize,
    pub n_vrjp: usize,
    pub n_env: usize,
    pub paths: Vec<PathComparison>,
    /// `(length, Σ vrjp, Σ mixture)` over all paths of that length.
    pub totals: Vec<(usize, f64, f64)>,
    /// Largest reversibility defect over sampled environments.
    pub max_reversibility_defect: f64,
    pub passed: bool,
}

/// Split `n` runs into fixed blocks with their own RNG streams.
fn run_blocks<T, F>(exec: Execution, seed: u64, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, std::ops::Range<usize>) -> T + Sync + Send,
{
    let blocks = RUN_BLOCKS.min(n.max(1));
    par::map_range(exec, blocks, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(STREAM_OFFSET + b as u64);
        f(&mut rng, b * n / blocks..(b + 1) * n / blocks)
    })
}

/// Compare skeleton path frequencies of `n_vrjp` direct runs with the mean
/// of `rwre_path_prob` over environments `W(t)` with `t` drawn from `μ⁰_L`.
/// `config.samples · config.chains` environments are used.
pub fn mixing_check(pg: &PinnedGraph, t_max: usize, n_vrjp: usize, config: &SamplerConfig) -> Result<MixingReport> {
    if t_max == 0 {
        return Err(crate::error::invalid_param("t_max", "must be at least 1"));
    }
    let paths = paths_from_rho(pg, t_max);
    let index: std::collections::HashMap<&[usize], usize> = paths.iter().enumerate().map(|(k, p)| (p.as_slice(), k)).collect();
    let counts = run_blocks(config.execution, config.seed, n_vrjp, |rng, runs| {
        let mut c = vec![0u64; paths.len()];
        for _ in runs {
            let sk = simulate_skeleton(pg, t_max, rng);
            for len in 2..=sk.len() {
                c[index[&sk[..len]]] += 1;
            }
        }
        c
    });
    let mut total = vec![0u64; paths.len()];
    for c in counts {
        total.iter_mut().zip(c).for_each(|(a, b)| *a += b);
    }

    let np = paths.len();
    let (samples, _) = run_chains(pg.strip(), config, Needs::default(), np + 1, |d, out| {
        let w = EnvWeights::from_t(pg, d.t)?;
        for (o, p) in out.iter_mut().zip(&paths) {
            *o = rwre_path_prob(pg, &w, p)?;
        }
        out[np] = w.reversibility_defect(pg);
        Ok(())
    })?;
    let n_env = samples.n_draws();
    let max_reversibility_defect = samples.series(np).into_iter().fold(0.0, f64::max);

    let mut out = Vec::with_capacity(np);
    let mut totals = vec![(0usize, 0.0, 0.0); t_max];
    for (k, p) in paths.iter().enumerate() {
        let m = samples.estimate(k)?;
        if m.stderr > 0.0 {
            m.require_effective("environment path probability")?;
        }
        let q = total[k] as f64 / n_vrjp as f64;
        let qe = (q * (1.0 - q) / n_vrjp as f64).sqrt();
        let tol = 3.0 * qe.hypot(m.stderr);
        let passed = (q - m.mean).abs() <= tol.max(1e-12);
        let len = p.len() - 1;
        totals[len - 1] = (len, totals[len - 1].1 + q, totals[len - 1].2 + m.mean);
        out.push(PathComparison {
            path: p.iter().map(|&v| pg.label(v)).collect(),
            vrjp: q,
            vrjp_stderr: qe,
            mixture: m.mean,
            mixture_stderr: m.stderr,
            passed,
        });
    }
    let passed = out.iter().all(|c| c.passed) && max_reversibility_defect <= 4.0 * f64::EPSILON;
    Ok(MixingReport { t_max, n_vrjp, n_env, paths: out, totals, max_reversibility_defect, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationConfig {
    pub seed: u64,
    /// Skeleton times at which occupation is recorded, both `n` and `n + 1`
    /// (the strip is bipartite for some bases).
    pub occupation_times: Vec<usize>,
    /// Skeleton times at which the range `max_{k≤n}|Ỹ_k|` is recorded.
    pub range_times: Vec<usize>,
    /// Run groups for jackknife error bars.
    pub groups: usize,
    /// Minimum pooled hit count for a level to enter the decay fit.
    pub min_count: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl LocalizationConfig {
    /// Decades `10³ … n_steps` for the range and a geometric grid for the
    /// occupation.
    pub fn for_steps(seed: u64, n_steps: usize) -> Self {
        let mut range_times = Vec::new();
        let mut n = 1000;
        while n <= n_steps {
            range_times.push(n);
            n *= 10;
        }
        let mut occupation_times = Vec::new();
        let mut n = 1usize;
        while n < n_steps {
            occupation_times.push(n);
            n = (n * 2).max(n + 1);
        }
        LocalizationConfig { seed, occupation_times, range_times, groups: 20, min_count: 20, execution: Execution::Parallel }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationPoint {
    /// `|v|`, the absolute level.
    pub distance: i32,
    /// Max over recorded times and vertices at this distance of the
    /// empirical `P(Ỹ_n = v)`: a lower estimate of the supremum over `n`.
    pub max_occupation: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangePoint {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub max: i32,
    /// `mean / ln n`.
    pub ratio: f64,
    pub ratio_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeIncrement {
    pub from: usize,
    pub to: usize,
    /// Mean of `(R(to) − R(from)) / ln(to/from)` over runs.
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub n_steps: usize,
    pub n_runs: usize,
    pub occupation: Vec<OccupationPoint>,
    /// Slope of `ln max_occupation` against `|v|`, i.e. the empirical `−c7`.
    pub slope: f64,
    pub slope_stderr: f64,
    pub range: Vec<RangePoint>,
    /// Slope of the mean range against `ln n`.
    pub range_log_slope: f64,
    /// Growth of the range per unit of `ln n` between consecutive recorded
    /// times, from per-run differences.
    pub range_increments: Vec<RangeIncrement>,
    /// Runs that reached the last level of the strip.
    pub boundary_hits: usize,
}

impl LocalizationReport {
    pub fn slope_upper_95(&self) -> f64 {
        self.slope + 1.645 * self.slope_stderr
    }

    /// The range grows at most linearly in `ln n`: no later increment per
    /// unit of `ln n` exceeds the first by more than three combined standard
    /// errors. Power-law growth `n^γ` multiplies the increments by `e^{γΔ}`
    /// per interval and fails this.
    pub fn range_log_bounded(&self) -> bool {
        match self.range_increments.split_first() {
            Some((a, rest)) if !rest.is_empty() => rest.iter().all(|b| b.mean <= a.mean + 3.0 * a.stderr.hypot(b.stderr)),
            _ => false,
        }
    }

    /// Largest `mean R(n)/ln n` over the recorded times, an empirical `c8`.
    pub fn range_constant(&self) -> f64 {
        self.range.iter().map(|r| r.ratio).fold(f64::NAN, f64::max)
    }
}

struct RunStats {
    /// `hits[k·|V| + v]`: runs at `v` at the `k`-th recorded time.
    hits: Vec<u32>,
    ranges: Vec<Vec<i32>>,
    boundary: usize,
}

/// Occupation maxima by distance and range growth of the skeleton.
pub fn localization_stats(pg: &PinnedGraph, n_steps: usize, n_runs: usize, config: &LocalizationConfig) -> Result<LocalizationReport> {
    let strip = pg.strip();
    if strip.hi() - strip.lo() < 30 {
        return Err(crate::error::invalid_param("strip", format!("need hi - lo >= 30, got {}", strip.hi() - strip.lo())));
    }
    if n_runs < config.groups || config.groups < 2 {
        return Err(crate::error::invalid_param("n_runs", format!("need at least {} runs and 2 groups", config.groups)));
    }
    let mut times: Vec<usize> = config.occupation_times.iter().flat_map(|&n| [n, n + 1]).filter(|&n| n <= n_steps).collect();
    times.sort_unstable();
    times.dedup();
    let range_times: Vec<usize> = config.range_times.iter().copied().filter(|&n| n <= n_steps).collect();
    let nv = pg.n_vertices();
    let edge = strip.hi().min(-strip.lo());
    let groups = config.groups;

    // Each group is one RNG stream so the result is thread-count independent.
    let stats = par::map_range(config.execution, groups, |g| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(STREAM_OFFSET + g as u64);
        let runs = g * n_runs / groups..(g + 1) * n_runs / groups;
        let mut hits = vec![0u32; times.len() * nv];
        let mut ranges = vec![Vec::with_capacity(runs.len()); range_times.len()];
        let mut boundary = 0;
        for _ in runs {
            let mut state = VrjpState::start(pg);
            let (mut ti, mut ri) = (0, 0);
            let mut reach = 0i32;
            let mut hit_edge = false;
            for n in 0..=n_steps {
                if n > 0 {
                    state.step(pg, &mut rng);
                }
                let lv = pg.level(state.position).abs();
                reach = reach.max(lv);
                hit_edge |= lv >= edge;
                if ti < times.len() && times[ti] == n {
                    hits[ti * nv + state.position] += 1;
                    ti += 1;
                }
                if ri < range_times.len() && range_times[ri] == n {
                    ranges[ri].push(reach);
                    ri += 1;
                }
            }
            boundary += hit_edge as usize;
        }
        RunStats { hits, ranges, boundary }
    });

    let max_d = edge.max(0) as usize;
    // Per group and pooled: max over times and vertices at each distance.
    let occupation_of = |hits: &[u64], runs: f64| -> (Vec<f64>, Vec<u64>) {
        let mut best = vec![0.0f64; max_d + 1];
        let mut cnt = vec![0u64; max_d + 1];
        for k in 0..times.len() {
            for v in 0..nv {
                if v == pg.rho() {
                    continue;
                }
                let d = pg.level(v).unsigned_abs() as usize;
                let h = hits[k * nv + v];
                if d <= max_d && h as f64 / runs > best[d] {
                    best[d] = h as f64 / runs;
                    cnt[d] = h;
                }
            }
        }
        (best, cnt)
    };
    let mut pooled = vec![0u64; times.len() * nv];
    for s in &stats {
        pooled.iter_mut().zip(&s.hits).for_each(|(a, &b)| *a += b as u64);
    }
    let (best, cnt) = occupation_of(&pooled, n_runs as f64);
    let fit_d: Vec<usize> = (0..=max_d).filter(|&d| cnt[d] >= config.min_count).collect();
    let fit = |occ: &[f64]| -> f64 {
        let x: Vec<f64> = fit_d.iter().map(|&d| d as f64).collect();
        let y: Vec<f64> = fit_d.iter().map(|&d| occ[d].max(f64::MIN_POSITIVE).ln()).collect();
        let w: Vec<f64> = fit_d.iter().map(|&d| cnt[d] as f64).collect();
        wls(&x, &y, &w).0
    };
    if fit_d.len() < 3 {
        return Err(Error::InsufficientSamples { what: "levels with occupation data", value: fit_d.len() as f64, required: 3.0 });
    }
    let slope = fit(&best);
    let jack: Vec<f64> = (0..groups)
        .map(|g| {
            let runs = n_runs - ((g + 1) * n_runs / groups - g * n_runs / groups);
            let mut h = pooled.clone();
            h.iter_mut().zip(&stats[g].hits).for_each(|(a, &b)| *a -= b as u64);
            fit(&occupation_of(&h, runs as f64).0)
        })
        .collect();
    let gm = jack.iter().sum::<f64>() / groups as f64;
    let slope_stderr = ((groups as f64 - 1.0) / groups as f64 * jack.iter().map(|x| (x - gm).powi(2)).sum::<f64>()).sqrt();

    let range: Vec<RangePoint> = range_times
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let all: Vec<f64> = stats.iter().flat_map(|s| s.ranges[i].iter().map(|&r| r as f64)).collect();
            let m = all.len() as f64;
            let mean = all.iter().sum::<f64>() / m;
            let sd = (all.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
            let stderr = sd / m.sqrt();
            let ln = (n as f64).ln();
            let max = all.iter().fold(0.0f64, |a, &b| a.max(b)) as i32;
            RangePoint { n, mean, stderr, max, ratio: mean / ln, ratio_stderr: stderr / ln }
        })
        .collect();
    let range_log_slope = if range.len() >= 2 {
        let x: Vec<f64> = range.iter().map(|r| (r.n as f64).ln()).collect();
        let y: Vec<f64> = range.iter().map(|r| r.mean).collect();
        wls(&x, &y, &vec![1.0; x.len()]).0
    } else {
        f64::NAN
    };
    let per_run: Vec<Vec<f64>> = (0..range_times.len())
        .map(|i| stats.iter().flat_map(|s| s.ranges[i].iter().map(|&r| r as f64)).collect())
        .collect();
    let range_increments = range_times
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let span = (w[1] as f64 / w[0] as f64).ln();
            let d: Vec<f64> = per_run[i].iter().zip(&per_run[i + 1]).map(|(a, b)| (b - a) / span).collect();
            let m = d.len() as f64;
            let mean = d.iter().sum::<f64>() / m;
            let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
            RangeIncrement { from: w[0], to: w[1], mean, stderr: sd / m.sqrt() }
        })
        .collect();
    let occupation = (0..=max_d).map(|d| OccupationPoint { distance: d as i32, max_occupation: best[d], count: cnt[d] }).collect();
    Ok(LocalizationReport {
        n_steps,
        n_runs,
        occupation,
        slope,
        slope_stderr,
        range,
        range_log_slope,
        range_increments,
        boundary_hits: stats.iter().map(|s| s.boundary).sum(),
    })
}
