//! `verify`: the invariant suite on the configured base graph.

use hstrip::graph::{BaseGraph, StripGraph, Weights};
use hstrip::measure::{
    grad_hamiltonian, interpolated_hamiltonian, log_jacobian, pin_hamiltonian, to_gradient, tree_log_density, FieldConfig,
    GradientConfig, MatrixTreeChecker, MATRIX_TREE_MAX_VERTICES,
};
use hstrip::measure::local::LocalEnergy;
use hstrip::par::Execution;
use hstrip::sampler::{independence_check, log_marginal, mcmc_t, SamplerConfig};
use hstrip::transfer::{c4_estimate, perron, symmetry_defect, KernelKind, TransferSystem};
use hstrip::tree_codec::{alphabet, decode, encode, enumerate_spanning_trees, Alphabet};
use hstrip::vrjp::{mixing_check, PinnedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{load, Loaded};
use crate::output::Output;
use crate::{CliError, Common};

const RANDOM_DRAWS: usize = 20;
const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    /// Measured quantity; `bound` is the limit it is compared with.
    value: f64,
    bound: f64,
    detail: String,
}

impl Check {
    fn at_most(name: &'static str, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Check { name, passed: value <= bound, value, bound, detail: detail.into() }
    }

    fn at_least(name: &'static str, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Check { name, passed: value >= bound, value, bound, detail: detail.into() }
    }

    fn skipped(name: &'static str, why: impl Into<String>) -> Self {
        Check { name, passed: true, value: f64::NAN, bound: f64::NAN, detail: format!("skipped: {}", why.into()) }
    }
}

/// Largest of `[-1, 1]`, `[0, 1]`, `[0, 0]` small enough to enumerate.
fn small_strip(loaded: &Loaded) -> Result<Option<StripGraph>, CliError> {
    for (lo, hi) in [(-1, 1), (0, 1), (0, 0)] {
        let s = loaded.strip_with(lo, hi)?;
        if s.n_vertices() <= MATRIX_TREE_MAX_VERTICES {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

fn random_vec(n: usize, scale: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-scale..scale)).collect()
}

fn matrix_tree(s: &StripGraph, r: &mut ChaCha8Rng) -> Result<Check, CliError> {
    let checker = MatrixTreeChecker::new(s)?;
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_DRAWS {
        let (det, sum) = checker.check(&random_vec(s.n_vertices(), 2.0, r))?;
        worst = worst.max((det - sum).abs() / det.abs());
    }
    Ok(Check::at_most("matrix_tree", worst, IDENTITY_TOL, format!("{} trees, {RANDOM_DRAWS} draws", checker.n_trees())))
}

/// Trapezoid rule for the `t₀` marginal of the single-vertex strip; the
/// integrand decays doubly exponentially on both sides.
fn normalization(weights: &Weights) -> Result<Check, CliError> {
    let base = BaseGraph::single_vertex();
    let w = Weights { vertical: vec![], horizontal: vec![weights.horizontal[0]], epsilon: weights.epsilon };
    let s = StripGraph::new(base, 0, 0, w)?;
    let (a, b, n) = (-60.0, 60.0, 24_000);
    let h = (b - a) / n as f64;
    let mut sum = 0.0;
    for k in 0..=n {
        let f = log_marginal(&s, &[a + k as f64 * h])?.exp();
        sum += if k == 0 || k == n { 0.5 * f } else { f };
    }
    let mass = sum * h;
    Ok(Check::at_most("normalization", (mass - 1.0).abs(), 1e-6, format!("single-vertex mass {mass}")))
}

fn random_field(s: &StripGraph, r: &mut ChaCha8Rng) -> FieldConfig {
    FieldConfig { t: random_vec(s.n_vertices(), 1.0, r), s: random_vec(s.n_vertices(), 1.0, r) }
}

fn change_of_variables(s: &StripGraph, trees: &[hstrip::graph::SpanningTree], r: &mut ChaCha8Rng) -> Result<Check, CliError> {
    let eps = s.weights().epsilon;
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_DRAWS {
        let f = random_field(s, r);
        let g = to_gradient(s, &f)?;
        let lj = log_jacobian(s, &f.t);
        let hp = pin_hamiltonian(eps, g.t0, g.s0);
        for tree in trees {
            let lhs = tree_log_density(s, &f, tree)? + lj;
            let hg = grad_hamiltonian(s, &g, tree)?;
            worst = worst.max((lhs + hp + hg).abs() / (1.0 + lhs.abs()));
        }
    }
    Ok(Check::at_most("change_of_variables", worst, IDENTITY_TOL, format!("{} trees, {RANDOM_DRAWS} fields", trees.len())))
}

fn codec_roundtrip(s: &StripGraph, a: &Alphabet, trees: &[hstrip::graph::SpanningTree]) -> Result<Vec<Check>, CliError> {
    let mut failures = 0usize;
    for tree in trees {
        let word = encode(s, tree)?;
        if decode(&word, s, a)? != *tree {
            failures += 1;
        }
    }
    let levels = (s.hi() - s.lo() + 1) as usize;
    let words = a.count_words(levels);
    Ok(vec![
        Check::at_most("codec_roundtrip", failures as f64, 0.0, format!("{} trees", trees.len())),
        Check {
            name: "codec_word_count",
            passed: words == trees.len() as u128,
            value: words as f64,
            bound: trees.len() as f64,
            detail: format!("{levels} levels"),
        },
    ])
}

fn local_decomposition(s: &StripGraph, a: &Alphabet, trees: &[hstrip::graph::SpanningTree], r: &mut ChaCha8Rng) -> Result<Check, CliError> {
    let local = LocalEnergy::new(a, s.weights())?;
    let m = s.backbone().len();
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for tree in trees {
        let ids = a.encode_ids(s, tree)?;
        let g = GradientConfig { t0: r.random_range(-1.0..1.0), s0: r.random_range(-1.0..1.0), grad_t: random_vec(m, 1.0, r), grad_y: random_vec(m, 1.0, r) };
        for l in 0..=s.hi() {
            let global = interpolated_hamiltonian(s, &g, tree, l)?;
            let blocks = local.interpolated(s, &g, &ids, l)?.value();
            worst = worst.max((global - blocks).abs() / (1.0 + global.abs()));
            count += 1;
        }
    }
    Ok(Check::at_most("local_decomposition", worst, IDENTITY_TOL, format!("{count} (tree, l) pairs")))
}

fn spectral(loaded: &Loaded, a: &Alphabet) -> Result<Vec<Check>, CliError> {
    let grid = loaded.grid();
    let eta = loaded.config.deformation.eta;
    let sys = TransferSystem::new(a, &loaded.weights, grid, eta, loaded.config.execution)?;
    let sd = perron(&sys.kernel(KernelKind::K))?;
    let min_r = sd.phi_right.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_l = sd.phi_left.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut out = vec![
        Check::at_most("perron_residual", sd.residual_right.max(sd.residual_left), 1e-10, format!("lambda {}", sd.lambda)),
        Check { name: "perron_positive", passed: min_r > 0.0 && min_l > 0.0, value: min_r.min(min_l), bound: 0.0, detail: String::new() },
        Check { name: "spectral_gap", passed: sd.gap_ratio < 1.0, value: sd.gap_ratio, bound: 1.0, detail: "second eigenvalue over lambda".into() },
        Check::at_least("gap_fit_r2", sd.gap_fit_r2, 0.99, String::new()),
    ];
    if grid.asymmetry == 0.0 {
        out.push(Check::at_most("symmetry_defect", symmetry_defect(&sys, &sd), 1e-6, String::new()));
    } else {
        out.push(Check::skipped("symmetry_defect", "asymmetric grid"));
    }
    let c4 = c4_estimate(&sys, &sd)?;
    out.push(Check { name: "c4_positive", passed: c4 > 0.0, value: c4, bound: 0.0, detail: String::new() });
    Ok(out)
}

fn sampler_checks(loaded: &Loaded) -> Result<Vec<Check>, CliError> {
    let strip = loaded.strip()?;
    let short = SamplerConfig { burn_in: 200, samples: 1000, ..loaded.sampler() };
    let obs = |t: &[f64], _: &[f64]| (t[t.len() - 1] - t[0]).tanh();
    let a = mcmc_t(&strip, &short, obs)?;
    let b = mcmc_t(&strip, &SamplerConfig { execution: Execution::Sequential, ..short }, obs)?;
    let same = a.estimate.mean.to_bits() == b.estimate.mean.to_bits() && a.estimate.stderr.to_bits() == b.estimate.stderr.to_bits();
    let ind = independence_check(&strip, &SamplerConfig { burn_in: 500, samples: 2000, ..loaded.sampler() })?;
    let worst = ind.entries.iter().map(|e| e.correlation.abs() - e.threshold).fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![
        Check { name: "sampler_determinism", passed: same, value: a.estimate.mean, bound: b.estimate.mean, detail: "parallel vs sequential".into() },
        Check { name: "independence", passed: ind.passed, value: worst, bound: 0.0, detail: format!("{} correlations", ind.entries.len()) },
    ])
}

fn vrjp_checks(loaded: &Loaded) -> Result<Vec<Check>, CliError> {
    let v = &loaded.config.vrjp;
    let pg = PinnedGraph::new(loaded.strip_with(v.mixing_lo, v.mixing_hi)?);
    let cfg = SamplerConfig { burn_in: 500, samples: 1000, ..loaded.sampler() };
    let rep = mixing_check(&pg, v.tmax.min(3), 20_000, &cfg)?;
    let failed = rep.paths.iter().filter(|p| !p.passed).count();
    Ok(vec![
        Check::at_most("vrjp_mixing", failed as f64, 0.0, format!("{} paths, {} runs, {} environments", rep.paths.len(), rep.n_vrjp, rep.n_env)),
        Check::at_most("reversibility", rep.max_reversibility_defect, 4.0 * f64::EPSILON, String::new()),
    ])
}

pub fn run(common: &Common) -> Result<(), CliError> {
    let loaded = load(&common.config, common.seed)?;
    let mut out = Output::create(common, &loaded, "verify")?;
    let mut r = ChaCha8Rng::seed_from_u64(loaded.config.seed);
    let a = alphabet(&loaded.base)?;
    let mut checks = Vec::new();
    match small_strip(&loaded)? {
        Some(s) => {
            let trees = enumerate_spanning_trees(&s)?;
            checks.push(matrix_tree(&s, &mut r)?);
            checks.push(change_of_variables(&s, &trees, &mut r)?);
            checks.extend(codec_roundtrip(&s, &a, &trees)?);
            if s.lo() <= 0 {
                checks.push(local_decomposition(&s, &a, &trees, &mut r)?);
            }
        }
        None => {
            for name in ["matrix_tree", "change_of_variables", "codec_roundtrip", "local_decomposition"] {
                checks.push(Check::skipped(name, "base graph too large to enumerate trees"));
            }
        }
    }
    checks.push(normalization(&loaded.weights)?);
    checks.extend(spectral(&loaded, &a)?);
    checks.extend(sampler_checks(&loaded)?);
    checks.extend(vrjp_checks(&loaded)?);
    for c in &checks {
        eprintln!("{:<22} {}  {} (bound {}) {}", c.name, if c.passed { "ok  " } else { "FAIL" }, c.value, c.bound, c.detail);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    out.json("verify.json", &serde_json::json!({ "passed": failed.is_empty(), "checks": checks }))?;
    out.finish(&loaded)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("checks failed: {}", failed.join(", "))))
    }
}
