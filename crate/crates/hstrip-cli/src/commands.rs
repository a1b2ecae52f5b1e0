//! The `decay`, `spectrum`, `codec` and `vrjp` subcommands.

use hstrip::measure::entropy_constant;
use hstrip::par;
use hstrip::sampler::decay_curve;
use hstrip::transfer::{c4_estimate, energy_transfer, perron, predicted_decay, symmetry_defect, KernelKind, TransferSystem};
use hstrip::tree_codec::{alphabet, enumerate_spanning_trees};
use hstrip::vrjp::{localization_stats, mixing_check, simulate_vrjp, LocalizationConfig, PinnedGraph};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{load, Loaded};
use crate::output::Output;
use crate::{CliError, Common};

/// Largest strip for which `codec` enumerates spanning trees.
const CODEC_ENUMERATION_VERTICES: usize = 12;
/// RNG stream family of the recorded trajectories.
const TRAJECTORY_STREAM: u64 = 3 << 32;

#[derive(Serialize)]
struct DecayRow {
    l: i32,
    estimate: f64,
    stderr: f64,
    n_eff: f64,
}

pub fn decay(common: &Common) -> Result<(), CliError> {
    let loaded = load(&common.config, common.seed)?;
    let mut out = Output::create(common, &loaded, "decay")?;
    let strip = loaded.strip()?;
    let ls = &loaded.config.decay.ls;
    let curve = decay_curve(&strip, ls, &loaded.sampler())?;
    out.csv("decay.csv", curve.points.iter().map(|p| DecayRow { l: p.l, estimate: p.estimate, stderr: p.stderr, n_eff: p.n_effective }))?;
    let comparison = match loaded.config.decay.compare_hi {
        Some(hi) => {
            let other = decay_curve(&loaded.strip_with(loaded.config.lo, hi)?, ls, &loaded.sampler())?;
            out.csv(
                "decay_compare.csv",
                other.points.iter().map(|p| DecayRow { l: p.l, estimate: p.estimate, stderr: p.stderr, n_eff: p.n_effective }),
            )?;
            Some(json!({
                "hi": hi,
                "slope": other.slope,
                "slope_stderr": other.slope_stderr,
                "relative_slope_change": curve.relative_slope_change(&other),
            }))
        }
        None => None,
    };
    out.json(
        "decay.json",
        &json!({
            "lo": loaded.config.lo,
            "hi": loaded.config.hi,
            "slope": curve.slope,
            "intercept": curve.intercept,
            "slope_stderr": curve.slope_stderr,
            "slope_upper_95": curve.slope_upper_95(),
            "decay_rate": curve.decay_rate(),
            "increases": curve.increases(),
            "comparison": comparison,
            "diagnostics": curve.diagnostics,
        }),
    )?;
    out.finish(&loaded)?;
    Ok(())
}

#[derive(Serialize)]
struct GapRow {
    n: usize,
    norm: f64,
}

#[derive(Serialize)]
struct EigenRow {
    state: usize,
    letter: usize,
    node: usize,
    phi_right: f64,
    phi_left: f64,
}

#[derive(Serialize)]
struct EnergyRow {
    l: i32,
    alpha: f64,
    energy: f64,
    c4: f64,
    rest: f64,
}

pub fn spectrum(common: &Common) -> Result<(), CliError> {
    let loaded = load(&common.config, common.seed)?;
    let mut out = Output::create(common, &loaded, "spectrum")?;
    let params = loaded.config.deformation;
    let a = alphabet(&loaded.base)?;
    let grid = loaded.grid();
    let sys = TransferSystem::new(&a, &loaded.weights, grid, params.eta, loaded.config.execution)?;
    let sd = perron(&sys.kernel(KernelKind::K))?;
    let defect = symmetry_defect(&sys, &sd);
    let c4 = c4_estimate(&sys, &sd)?;
    let c5 = entropy_constant(&params, &loaded.weights, &loaded.base)?;
    let (alpha_star, c11) = predicted_decay(c4, c5, &params)?;
    out.csv("gap.csv", sd.gap_norms.iter().map(|&(n, norm)| GapRow { n, norm }))?;
    out.csv(
        "eigenvectors.csv",
        (0..sys.dim()).map(|r| {
            let (letter, node) = sys.state(r);
            EigenRow { state: r, letter, node, phi_right: sd.phi_right[r], phi_left: sd.phi_left[r] }
        }),
    )?;
    let (lo, hi) = (loaded.config.lo, loaded.config.hi);
    let mut rows = Vec::new();
    for &l in &loaded.config.spectrum.energy_ls {
        for alpha in [0.0, alpha_star] {
            let e = energy_transfer(&sys, &sd, lo, hi, l, alpha)?;
            rows.push(EnergyRow { l, alpha, energy: e.value, c4: e.c4, rest: e.rest });
        }
    }
    out.csv("energy.csv", rows)?;
    out.json(
        "spectrum.json",
        &json!({
            "grid": grid,
            "alphabet_size": a.len(),
            "dim": sys.dim(),
            "lambda": sd.lambda,
            "gap_ratio": sd.gap_ratio,
            "gap_fit_r2": sd.gap_fit_r2,
            "residual_right": sd.residual_right,
            "residual_left": sd.residual_left,
            "iterations": sd.iterations,
            "min_phi_right": sd.phi_right.iter().cloned().fold(f64::INFINITY, f64::min),
            "min_phi_left": sd.phi_left.iter().cloned().fold(f64::INFINITY, f64::min),
            "symmetry_defect": defect,
            "c4": c4,
            "c5": c5,
            "alpha_star": alpha_star,
            "c11": c11,
        }),
    )?;
    out.finish(&loaded)?;
    Ok(())
}

#[derive(Serialize)]
struct LetterRow {
    id: usize,
    backbone: bool,
    reflection: usize,
    successors: usize,
    predecessors: usize,
    forest_edges: usize,
}

#[derive(Serialize)]
struct CountRow {
    levels: usize,
    words: String,
    trees: Option<usize>,
}

pub fn codec(common: &Common) -> Result<(), CliError> {
    let loaded = load(&common.config, common.seed)?;
    let mut out = Output::create(common, &loaded, "codec")?;
    let a = alphabet(&loaded.base)?;
    let n = a.len();
    out.csv(
        "letters.csv",
        (0..n).map(|i| LetterRow {
            id: i,
            backbone: i == a.backbone_id(),
            reflection: a.reflect_id(i),
            successors: (0..n).filter(|&j| a.follows(i, j)).count(),
            predecessors: (0..n).filter(|&j| a.follows(j, i)).count(),
            forest_edges: a.letter(i).forest().len(),
        }),
    )?;
    let (lo, hi) = (loaded.config.lo, loaded.config.hi);
    let mut rows = Vec::new();
    for top in 0..=hi {
        let strip = loaded.strip_with(lo, top)?;
        let levels = (top - lo + 1) as usize;
        let trees = if strip.n_vertices() <= CODEC_ENUMERATION_VERTICES {
            Some(enumerate_spanning_trees(&strip)?.len())
        } else {
            None
        };
        rows.push(CountRow { levels, words: a.count_words(levels).to_string(), trees });
    }
    let consistent = rows.iter().all(|r| r.trees.is_none_or(|t| t.to_string() == r.words));
    out.csv("word_counts.csv", &rows)?;
    out.json("alphabet.json", &a)?;
    out.json(
        "codec.json",
        &json!({
            "letters": n,
            "follows": a.follows_count(),
            "diameter": a.diameter(),
            "half_width": a.half_width(),
            "counts_match_enumeration": consistent,
        }),
    )?;
    out.finish(&loaded)?;
    if !consistent {
        return Err(CliError::Failed("word counts disagree with enumerated spanning trees".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct TrajectoryRow {
    run: usize,
    n_jumps: usize,
    final_vertex: String,
    final_level: i32,
    max_abs_level: i32,
    local_time_rho: f64,
    local_time_pin: f64,
}

#[derive(Serialize)]
struct PathRow {
    path: String,
    vrjp: f64,
    vrjp_stderr: f64,
    mixture: f64,
    mixture_stderr: f64,
    passed: bool,
}

#[derive(Serialize)]
struct OccupationRow {
    distance: i32,
    max_occupation: f64,
    count: u64,
}

#[derive(Serialize)]
struct RangeRow {
    n: usize,
    mean: f64,
    stderr: f64,
    max: i32,
    ratio: f64,
    ratio_stderr: f64,
}

fn trajectories(loaded: &Loaded, pg: &PinnedGraph, horizon: f64, runs: usize) -> Result<Vec<TrajectoryRow>, CliError> {
    let seed = loaded.config.seed;
    let pin = pg.strip().pin_vertex();
    par::map_range(loaded.config.execution, runs, |run| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(TRAJECTORY_STREAM + run as u64);
        let traj = simulate_vrjp(pg, horizon, &mut rng)?;
        let last = *traj.positions.last().unwrap_or(&pg.rho());
        Ok(TrajectoryRow {
            run,
            n_jumps: traj.n_jumps(),
            final_vertex: pg.label(last),
            final_level: pg.level(last),
            max_abs_level: traj.positions.iter().map(|&v| pg.level(v).abs()).max().unwrap_or(0),
            local_time_rho: traj.local_time[pg.rho()],
            local_time_pin: traj.local_time[pin],
        })
    })
    .into_iter()
    .collect()
}

pub fn vrjp(common: &Common, horizon: Option<f64>, runs: Option<usize>, tmax: Option<usize>) -> Result<(), CliError> {
    let mut loaded = load(&common.config, common.seed)?;
    let v = &mut loaded.config.vrjp;
    v.horizon = horizon.unwrap_or(v.horizon);
    v.runs = runs.unwrap_or(v.runs);
    v.tmax = tmax.unwrap_or(v.tmax);
    let v = loaded.config.vrjp.clone();
    if !(v.horizon > 0.0) {
        return Err(CliError::Config(format!("vrjp.horizon must be positive, got {}", v.horizon)));
    }
    let mut out = Output::create(common, &loaded, "vrjp")?;

    let long = PinnedGraph::new(loaded.strip_with(v.localization_lo, v.localization_hi)?);
    out.csv("trajectories.csv", trajectories(&loaded, &long, v.horizon, v.runs)?)?;

    let small = PinnedGraph::new(loaded.strip_with(v.mixing_lo, v.mixing_hi)?);
    let mixing = mixing_check(&small, v.tmax, v.mixing_runs, &loaded.sampler())?;
    out.csv(
        "mixing_paths.csv",
        mixing.paths.iter().map(|p| PathRow {
            path: p.path.join(" "),
            vrjp: p.vrjp,
            vrjp_stderr: p.vrjp_stderr,
            mixture: p.mixture,
            mixture_stderr: p.mixture_stderr,
            passed: p.passed,
        }),
    )?;
    out.json("mixing.json", &mixing)?;

    let cfg = LocalizationConfig {
        execution: loaded.config.execution,
        ..LocalizationConfig::for_steps(loaded.config.seed, v.localization_steps)
    };
    let loc = localization_stats(&long, v.localization_steps, v.localization_runs, &cfg)?;
    out.csv(
        "occupation.csv",
        loc.occupation.iter().map(|o| OccupationRow { distance: o.distance, max_occupation: o.max_occupation, count: o.count }),
    )?;
    out.csv(
        "range.csv",
        loc.range.iter().map(|r| RangeRow { n: r.n, mean: r.mean, stderr: r.stderr, max: r.max, ratio: r.ratio, ratio_stderr: r.ratio_stderr }),
    )?;
    out.json(
        "localization.json",
        &json!({
            "n_steps": loc.n_steps,
            "n_runs": loc.n_runs,
            "slope": loc.slope,
            "slope_stderr": loc.slope_stderr,
            "slope_upper_95": loc.slope_upper_95(),
            "range_log_slope": loc.range_log_slope,
            "range_increments": loc.range_increments,
            "range_log_bounded": loc.range_log_bounded(),
            "range_constant": loc.range_constant(),
            "boundary_hits": loc.boundary_hits,
        }),
    )?;
    out.finish(&loaded)?;
    if !mixing.passed {
        return Err(CliError::Failed("mixing check failed".into()));
    }
    Ok(())
}
