//! Mode execution: grid assembly, per-point evaluation, and table output.

use std::collections::BTreeMap;

use aggnet_core::consensus::consensus_closed_form;
use aggnet_core::dynamics::{iterate_global, sample_two_island, GlobalAggregatorSpec};
use aggnet_core::local::{self, LocalAggregatorSpec};
use aggnet_core::robust::{self, RobustQuery};
use aggnet_core::two_island::{self, TwoIslandEnv};

use crate::config::{ParamValue, RawConfig};
use crate::table::ResultTable;

/// CLI subcommand, mapped onto one library operation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Consensus,
    Gap,
    Regime,
    RobustSet,
    RhoStar,
    LocalCompare,
    Simulate,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Consensus => "consensus",
            Mode::Gap => "gap",
            Mode::Regime => "regime",
            Mode::RobustSet => "robust-set",
            Mode::RhoStar => "rho-star",
            Mode::LocalCompare => "local-compare",
            Mode::Simulate => "simulate",
        }
    }
}

/// Failures split by exit code: configuration problems (exit 2) versus
/// numerical failures from the library (exit 3).
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(aggnet_core::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(msg) => write!(f, "config error: {msg}"),
            RunError::Numerical(e) => write!(f, "{}: {e}", e.name()),
        }
    }
}

type RunResult<T> = Result<T, RunError>;

fn config_err<T>(msg: impl Into<String>) -> RunResult<T> {
    Err(RunError::Config(msg.into()))
}

// ---------------------------------------------------------------------------
// Symbol domains
// ---------------------------------------------------------------------------

struct Domain {
    lo: f64,
    hi: f64,
    lo_open: bool,
    hi_open: bool,
    integer: bool,
}

fn domain_for(symbol: &str) -> Domain {
    let d = |lo, hi, lo_open, hi_open| Domain { lo, hi, lo_open, hi_open, integer: false };
    match symbol {
        "h" => d(1.0, f64::INFINITY, false, true),
        "pi" => d(1.0, f64::INFINITY, true, true),
        "rho" => d(0.0, 1.0, true, true),
        "alpha" => d(0.0, 1.0, false, false),
        "beta" | "beta1" | "beta2" => d(0.0, 1.0, true, true),
        "b11" | "b12" | "b21" | "b22" => d(0.0, 1.0, false, true),
        "p_s" | "p_d" => d(0.0, 1.0, true, false),
        "n1" | "n2" => Domain { lo: 1.0, hi: f64::INFINITY, lo_open: false, hi_open: true, integer: true },
        "max_steps" => Domain { lo: 1.0, hi: f64::INFINITY, lo_open: false, hi_open: true, integer: true },
        "tol" => d(0.0, 1.0, true, true),
        _ => d(f64::NEG_INFINITY, f64::INFINITY, true, true),
    }
}

fn check_domain(symbol: &str, v: f64) -> RunResult<()> {
    let dom = domain_for(symbol);
    if !v.is_finite() {
        return config_err(format!("symbol {symbol}: value {v} is not finite"));
    }
    let lo_ok = if dom.lo_open { v > dom.lo } else { v >= dom.lo };
    let hi_ok = if dom.hi_open { v < dom.hi } else { v <= dom.hi };
    if !lo_ok || !hi_ok {
        let lo_b = if dom.lo_open { "(" } else { "[" };
        let hi_b = if dom.hi_open { ")" } else { "]" };
        return config_err(format!(
            "symbol {symbol}: value {v} outside {lo_b}{}, {}{hi_b}",
            dom.lo, dom.hi
        ));
    }
    if dom.integer && v.fract() != 0.0 {
        return config_err(format!("symbol {symbol}: value {v} must be an integer"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Grid assembly
// ---------------------------------------------------------------------------

struct Axis {
    name: String,
    values: Vec<f64>,
}

/// Resolves the axes for `symbols` in order. The `beta` shorthand expands
/// to `beta1` and `beta2` moving in lockstep (one axis feeding both).
fn build_axes(cfg: &RawConfig, symbols: &[&str]) -> RunResult<Vec<Axis>> {
    let mut axes = Vec::new();
    let beta_shorthand = cfg.entries.contains_key("beta")
        && symbols.contains(&"beta1")
        && symbols.contains(&"beta2");
    if beta_shorthand
        && (cfg.entries.contains_key("beta1") || cfg.entries.contains_key("beta2"))
    {
        return config_err("give either beta or beta1/beta2, not both");
    }
    let mut skip_beta2 = false;
    for &symbol in symbols {
        if beta_shorthand && symbol == "beta1" {
            let param = cfg.entries["beta"];
            let values = validated_values("beta", &param)?;
            axes.push(Axis { name: "beta".to_string(), values });
            skip_beta2 = true;
            continue;
        }
        if beta_shorthand && symbol == "beta2" && skip_beta2 {
            continue;
        }
        let param = cfg
            .entries
            .get(symbol)
            .copied()
            .ok_or_else(|| RunError::Config(format!("missing symbol {symbol}")))?;
        let values = validated_values(symbol, &param)?;
        axes.push(Axis { name: symbol.to_string(), values });
    }
    Ok(axes)
}

fn validated_values(symbol: &str, param: &ParamValue) -> RunResult<Vec<f64>> {
    let values = param.values();
    for &v in &values {
        check_domain(symbol, v)?;
    }
    Ok(values)
}

/// Iterates the cartesian product of the axes in row-major order and
/// evaluates each point into a row.
fn sweep(
    axes: &[Axis],
    mut eval: impl FnMut(usize, &BTreeMap<&str, f64>) -> RunResult<Vec<f64>>,
) -> RunResult<Vec<Vec<f64>>> {
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut rows = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for point in 0..total {
        let mut assignment = BTreeMap::new();
        for (axis, &i) in axes.iter().zip(&idx) {
            assignment.insert(axis.name.as_str(), axis.values[i]);
        }
        rows.push(eval(point, &assignment)?);
        for k in (0..axes.len()).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].values.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(rows)
}

fn get(assignment: &BTreeMap<&str, f64>, key: &str) -> f64 {
    assignment[key]
}

fn get_beta_pair(assignment: &BTreeMap<&str, f64>) -> (f64, f64) {
    if let Some(&b) = assignment.get("beta") {
        (b, b)
    } else {
        (assignment["beta1"], assignment["beta2"])
    }
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Runs one mode over the configured grid and returns the sorted table.
pub fn run(mode: Mode, cfg: &RawConfig) -> RunResult<ResultTable> {
    let (columns, key_cols, rows) = match mode {
        Mode::Consensus => run_consensus(cfg)?,
        Mode::Gap => run_gap(cfg)?,
        Mode::Regime => run_regime(cfg)?,
        Mode::RobustSet => run_robust_set(cfg)?,
        Mode::RhoStar => run_rho_star(cfg)?,
        Mode::LocalCompare => run_local_compare(cfg)?,
        Mode::Simulate => run_simulate(cfg)?,
    };
    let mut metadata = BTreeMap::new();
    metadata.insert("mode".to_string(), mode.name().to_string());
    metadata.insert("seed".to_string(), cfg.seed.to_string());
    metadata.insert("tool_version".to_string(), env!("CARGO_PKG_VERSION").to_string());
    metadata.insert("config".to_string(), cfg.echo());
    let mut table = ResultTable {
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
        metadata,
    };
    table.sort_by_leading(key_cols);
    Ok(table)
}

type ModeOutput = (Vec<&'static str>, usize, Vec<Vec<f64>>);

const ENV_SYMBOLS: [&str; 6] = ["h", "pi", "rho", "alpha", "beta1", "beta2"];

fn env_from(assignment: &BTreeMap<&str, f64>) -> RunResult<TwoIslandEnv> {
    let (beta1, beta2) = get_beta_pair(assignment);
    TwoIslandEnv::new(
        get(assignment, "h"),
        get(assignment, "pi"),
        get(assignment, "rho"),
        get(assignment, "alpha"),
        beta1,
        beta2,
    )
    .map_err(RunError::Numerical)
}

fn run_gap(cfg: &RawConfig) -> RunResult<ModeOutput> {
    let axes = build_axes(cfg, &ENV_SYMBOLS)?;
    let rows = sweep(&axes, |_, assignment| {
        let env = env_from(assignment)?;
        let d0 = two_island::delta0(env.h, env.pi).map_err(RunError::Numerical)?;
        let p = two_island::consensus(&env);
        let d1 = two_island::delta1(&env);
        Ok(vec![env.h, env.pi, env.rho, env.alpha, env.beta1, env.beta2, d0, d1, d1 - d0, p])
    })?;
    Ok((
        vec!["h", "pi", "rho", "alpha", "beta1", "beta2", "delta0", "delta1", "delta_star", "p_star_star"],
        6,
        rows,
    ))
}

fn run_consensus(cfg: &RawConfig) -> RunResult<ModeOutput> {
    let axes = build_axes(cfg, &ENV_SYMBOLS)?;
    let rows = sweep(&axes, |_, assignment| {
        let env = env_from(assignment)?;
        let f = two_island::expected_matrix(env.h, env.pi).map_err(RunError::Numerical)?;
        let spec = GlobalAggregatorSpec::new(
            env.rho,
            vec![env.alpha, 1.0 - env.alpha],
            vec![env.beta1, env.beta2],
        )
        .map_err(RunError::Numerical)?;
        let result = consensus_closed_form(&f, &spec, &[1.0, 0.0]).map_err(RunError::Numerical)?;
        Ok(vec![
            env.h,
            env.pi,
            env.rho,
            env.alpha,
            env.beta1,
            env.beta2,
            result.value,
            two_island::no_ai_consensus(env.h, env.pi),
            two_island::benchmark(env.pi),
            result.influence_weights[0],
            result.influence_weights[1],
        ])
    })?;
    Ok((
        vec![
            "h", "pi", "rho", "alpha", "beta1", "beta2", "p_star_star", "p_star", "benchmark",
            "influence_1", "influence_2",
        ],
        6,
        rows,
    ))
}

fn run_regime(cfg: &RawConfig) -> RunResult<ModeOutput> {
    let axes = build_axes(cfg, &["h", "pi", "rho", "alpha", "beta"])?;
    let rows = sweep(&axes, |_, assignment| {
        let beta = get(assignment, "beta");
        let env = TwoIslandEnv::with_equal_beta(
            get(assignment, "h"),
            get(assignment, "pi"),
            get(assignment, "rho"),
            get(assignment, "alpha"),
            beta,
        )
        .map_err(RunError::Numerical)?;
        let classification = two_island::classify_regime(&env).map_err(RunError::Numerical)?;
        let threshold = |key: &str| {
            classification.thresholds.get(key).copied().unwrap_or(f64::NAN)
        };
        let d_star = two_island::delta_star(&env).map_err(RunError::Numerical)?;
        Ok(vec![
            env.h,
            env.pi,
            env.rho,
            env.alpha,
            beta,
            classification.regime.code() as f64,
            threshold("h_lower"),
            threshold("h_upper"),
            threshold("h0"),
            threshold("beta_star"),
            d_star,
        ])
    })?;
    Ok((
        vec![
            "h", "pi", "rho", "alpha", "beta", "regime_code", "h_lower", "h_upper", "h0",
            "beta_star", "delta_star",
        ],
        5,
        rows,
    ))
}

/// The `h` symbol must be a range in the robustness modes: its endpoints
/// are the homophily bounds and its step count is the inner grid size.
fn h_range_query(cfg: &RawConfig) -> RunResult<(f64, f64, usize)> {
    match cfg.entries.get("h") {
        Some(ParamValue::Range { lo, hi, steps, .. }) => Ok((*lo, *hi, (*steps).max(2))),
        Some(ParamValue::Fixed(_)) => {
            config_err("symbol h: robustness modes need a range (lo:hi:steps:scale)")
        }
        None => config_err("missing symbol h"),
    }
}

fn run_robust_set(cfg: &RawConfig) -> RunResult<ModeOutput> {
    let (h_lo, h_hi, grid) = h_range_query(cfg)?;
    let axes = build_axes(cfg, &["pi", "rho"])?;
    let rows = sweep(&axes, |_, assignment| {
        let query = RobustQuery::new(
            get(assignment, "pi"),
            h_lo,
            h_hi,
            get(assignment, "rho"),
            grid,
        )
        .map_err(|e| RunError::Config(e.to_string()))?;
        let set = robust::robust_set(&query).map_err(RunError::Numerical)?;
        Ok(vec![
            query.pi,
            query.rho,
            h_lo,
            h_hi,
            set.lower,
            set.upper,
            set.measure,
            f64::from(set.empty),
        ])
    })?;
    Ok((
        vec!["pi", "rho", "h_lo", "h_hi", "alpha_lower", "alpha_upper", "measure", "empty"],
        2,
        rows,
    ))
}

fn run_rho_star(cfg: &RawConfig) -> RunResult<ModeOutput> {
    let (h_lo, h_hi, grid) = h_range_query(cfg)?;
    let axes = build_axes(cfg, &["pi"])?;
    let rows = sweep(&axes, |_, assignment| {
        let pi = get(assignment, "pi");
        RobustQuery::new(pi, h_lo, h_hi, 0.5, grid)
            .map_err(|e| RunError::Config(e.to_string()))?;
        let star = robust::rho_star(pi, h_lo, h_hi, grid).map_err(RunError::Numerical)?;
        Ok(vec![pi, h_lo, h_hi, star])
    })?;
    Ok((vec!["pi", "h_lo", "h_hi", "rho_star"], 1, rows))
}

fn run_local_compare(cfg: &RawConfig) -> RunResult<ModeOutput> {
    let symbols = [
        "h", "pi", "rho", "alpha", "beta1", "beta2", "b11", "b12", "b21", "b22",
    ];
    let axes = build_axes(cfg, &symbols)?;
    let rows = sweep(&axes, |_, assignment| {
        let env = env_from(assignment)?;
        let spec = LocalAggregatorSpec::new(
            env.rho,
            get(assignment, "b11"),
            get(assignment, "b12"),
            get(assignment, "b21"),
            get(assignment, "b22"),
        )
        .map_err(RunError::Numerical)?;
        if !spec.is_dominant() {
            return config_err(format!(
                "local reliance must satisfy b11 > b12 and b22 > b21, got ({}, {}, {}, {})",
                get(assignment, "b11"),
                get(assignment, "b12"),
                get(assignment, "b21"),
                get(assignment, "b22"),
            ));
        }
        let against_none =
            local::check_local_beats_none(&spec, env.h, env.pi).map_err(RunError::Numerical)?;
        let against_global =
            local::check_global_vs_local(&env, &spec).map_err(RunError::Numerical)?;
        Ok(vec![
            env.h,
            env.pi,
            env.rho,
            env.alpha,
            env.beta1,
            env.beta2,
            get(assignment, "b11"),
            get(assignment, "b12"),
            get(assignment, "b21"),
            get(assignment, "b22"),
            against_none.local.consensus1,
            against_none.local.consensus2,
            against_none.local.gap1,
            against_none.local.gap2,
            against_none.none.0,
            against_none.none.1,
            against_global.global.0,
            against_global.global.1,
            f64::from(against_global.worse_topic),
        ])
    })?;
    Ok((
        vec![
            "h", "pi", "rho", "alpha", "beta1", "beta2", "b11", "b12", "b21", "b22", "p1_local",
            "p2_local", "gap1_local", "gap2_local", "gap1_none", "gap2_none", "gap1_global",
            "gap2_global", "worse_topic",
        ],
        10,
        rows,
    ))
}

fn run_simulate(cfg: &RawConfig) -> RunResult<ModeOutput> {
    let symbols = ["n1", "n2", "p_s", "p_d", "rho", "alpha", "beta1", "beta2"];
    let axes = build_axes(cfg, &symbols)?;
    let max_steps = match cfg.entries.get("max_steps") {
        Some(ParamValue::Fixed(v)) => {
            check_domain("max_steps", *v)?;
            *v as usize
        }
        Some(ParamValue::Range { .. }) => return config_err("max_steps cannot be swept"),
        None => aggnet_core::dynamics::DEFAULT_MAX_STEPS,
    };
    let tol = match cfg.entries.get("tol") {
        Some(ParamValue::Fixed(v)) => {
            check_domain("tol", *v)?;
            *v
        }
        Some(ParamValue::Range { .. }) => return config_err("tol cannot be swept"),
        None => aggnet_core::dynamics::DEFAULT_TOL,
    };
    let base_seed = cfg.seed;
    let rows = sweep(&axes, |point, assignment| {
        let n1 = get(assignment, "n1") as usize;
        let n2 = get(assignment, "n2") as usize;
        let (p_s, p_d) = (get(assignment, "p_s"), get(assignment, "p_d"));
        let (rho, alpha) = (get(assignment, "rho"), get(assignment, "alpha"));
        let (beta1, beta2) = get_beta_pair(assignment);
        if n1 < n2 {
            return config_err(format!("island sizes need n1 >= n2, got ({n1}, {n2})"));
        }
        if p_d > p_s {
            return config_err(format!(
                "link probabilities need p_d <= p_s, got ({p_s}, {p_d})"
            ));
        }
        // every grid point gets its own deterministic sub-seed
        let seed_used = base_seed.wrapping_add(point as u64);
        let sample =
            sample_two_island(n1, n2, p_s, p_d, seed_used).map_err(RunError::Numerical)?;
        let spec = sample
            .global_spec(rho, alpha, beta1, beta2)
            .map_err(RunError::Numerical)?;
        let traj = iterate_global(&sample.matrix, &spec, &sample.unit_beliefs(), max_steps, tol)
            .map_err(RunError::Numerical)?;
        let h = p_s / p_d;
        let pi = n1 as f64 / n2 as f64;
        let predicted = two_island::consensus(
            &TwoIslandEnv::new(h.max(1.0), pi.max(1.0), rho, alpha, beta1, beta2)
                .map_err(RunError::Numerical)?,
        );
        let sim = traj
            .consensus
            .as_ref()
            .and_then(|c| c.scalar())
            .unwrap_or(f64::NAN);
        Ok(vec![
            n1 as f64,
            n2 as f64,
            p_s,
            p_d,
            rho,
            alpha,
            beta1,
            beta2,
            seed_used as f64,
            h,
            pi,
            sim,
            predicted,
            (sim - predicted).abs(),
            traj.final_step().t as f64,
            f64::from(traj.converged),
        ])
    })?;
    Ok((
        vec![
            "n1", "n2", "p_s", "p_d", "rho", "alpha", "beta1", "beta2", "seed_used", "h", "pi",
            "consensus_sim", "consensus_predicted", "abs_error", "steps", "converged",
        ],
        8,
        rows,
    ))
}

/// Runs a single-point simulate config and returns the trajectory CSV
/// (columns `t, p_1..p_n, a`).
pub fn simulate_trajectory(cfg: &RawConfig) -> RunResult<String> {
    let symbols = ["n1", "n2", "p_s", "p_d", "rho", "alpha", "beta1", "beta2"];
    let axes = build_axes(cfg, &symbols)?;
    let points: usize = axes.iter().map(|a| a.values.len()).product();
    if points != 1 {
        return config_err(format!(
            "trajectory export needs a single-point config, the grid has {points} points"
        ));
    }
    let assignment: BTreeMap<&str, f64> = axes
        .iter()
        .map(|a| (a.name.as_str(), a.values[0]))
        .collect();
    let (beta1, beta2) = get_beta_pair(&assignment);
    let sample = sample_two_island(
        get(&assignment, "n1") as usize,
        get(&assignment, "n2") as usize,
        get(&assignment, "p_s"),
        get(&assignment, "p_d"),
        cfg.seed,
    )
    .map_err(RunError::Numerical)?;
    let spec = sample
        .global_spec(get(&assignment, "rho"), get(&assignment, "alpha"), beta1, beta2)
        .map_err(RunError::Numerical)?;
    let traj = iterate_global(
        &sample.matrix,
        &spec,
        &sample.unit_beliefs(),
        aggnet_core::dynamics::DEFAULT_MAX_STEPS,
        aggnet_core::dynamics::DEFAULT_TOL,
    )
    .map_err(RunError::Numerical)?;
    Ok(traj.to_csv())
}
