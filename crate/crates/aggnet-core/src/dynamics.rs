//! Brute-force iterative simulators and the two-island network sampler.
//!
//! Three update architectures are simulated step by step: plain averaging,
//! a single global aggregator with an uninformed seed, and two topic-local
//! aggregators. Every closed form elsewhere in the crate is tested against
//! these iterations, so this module deliberately contains no closed-form
//! shortcuts.

use rand::Rng;
use rand::SeedableRng;
use rand_pcg::Pcg64;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, RowStochasticMatrix, ROW_SUM_TOL};
use crate::local::LocalAggregatorSpec;

/// Default iteration cap.
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

/// Default convergence tolerance on the belief spread.
pub const DEFAULT_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Global aggregator spec
// ---------------------------------------------------------------------------

/// Persistence, training weights, and adoption weights of a global
/// aggregator on an `n`-agent network.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalAggregatorSpec {
    rho: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl GlobalAggregatorSpec {
    /// Validates `rho` in (0,1), `alpha >= 0` summing to 1 (within 1e-12),
    /// every `beta_i` in [0,1), and `sum(beta) > 0`.
    pub fn new(rho: f64, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidSpec(format!("rho = {rho} outside (0, 1)")));
        }
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch { expected: alpha.len(), got: beta.len() });
        }
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidSpec("training weights must be nonnegative".into()));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "training weights sum to {sum}, expected 1"
            )));
        }
        if beta.iter().any(|b| !b.is_finite() || *b < 0.0 || *b >= 1.0) {
            return Err(Error::InvalidSpec("adoption weights must lie in [0, 1)".into()));
        }
        if beta.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidSpec("at least one adoption weight must be positive".into()));
        }
        Ok(GlobalAggregatorSpec { rho, alpha, beta })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// The augmented `(n+1) x (n+1)` transition matrix with the aggregator
    /// as state 0.
    pub fn augmented_chain(&self, t: &RowStochasticMatrix) -> Result<RowStochasticMatrix> {
        let n = self.n();
        if t.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: t.n() });
        }
        let m = Matrix::from_fn(n + 1, |i, j| match (i, j) {
            (0, 0) => self.rho,
            (0, j) => (1.0 - self.rho) * self.alpha[j - 1],
            (i, 0) => self.beta[i - 1],
            (i, j) => (1.0 - self.beta[i - 1]) * t.get(i - 1, j - 1),
        });
        RowStochasticMatrix::validate(m, ROW_SUM_TOL)
    }
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// One recorded step of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub t: usize,
    /// Agent beliefs; for two-topic runs the four entries are
    /// `(p1_1, p1_2, p2_1, p2_2)`.
    pub beliefs: Vec<f64>,
    /// Aggregator outputs at this step: empty before seeding, one entry for
    /// a global aggregator, two for local aggregators.
    pub aggregators: Vec<f64>,
}

/// Long-run outcome of a convergent run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConsensusOutcome {
    Scalar(f64),
    PerTopic(f64, f64),
}

impl ConsensusOutcome {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            ConsensusOutcome::Scalar(v) => Some(*v),
            ConsensusOutcome::PerTopic(..) => None,
        }
    }

    pub fn pair(&self) -> Option<(f64, f64)> {
        match self {
            ConsensusOutcome::Scalar(_) => None,
            ConsensusOutcome::PerTopic(a, b) => Some((*a, *b)),
        }
    }
}

/// Full record of a simulation run.
#[derive(Debug, Clone)]
pub struct BeliefTrajectory {
    pub steps: Vec<TrajectoryStep>,
    pub converged: bool,
    pub consensus: Option<ConsensusOutcome>,
    /// Second-largest eigenvalue modulus estimate, reported when the run
    /// hits the step cap so callers can see how slow the mixing is.
    pub gap_estimate: Option<f64>,
}

impl BeliefTrajectory {
    pub fn final_step(&self) -> &TrajectoryStep {
        self.steps.last().expect("trajectory has at least the initial state")
    }

    /// CSV export with columns `t, p_1..p_n, a` (or `a_1, a_2`).
    /// Aggregator columns are empty before the aggregator is seeded.
    pub fn to_csv(&self) -> String {
        let n = self.steps.first().map_or(0, |s| s.beliefs.len());
        let n_agg = self.steps.iter().map(|s| s.aggregators.len()).max().unwrap_or(0);
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",p_{i}"));
        }
        if n_agg == 1 {
            out.push_str(",a");
        } else {
            for k in 1..=n_agg {
                out.push_str(&format!(",a_{k}"));
            }
        }
        out.push('\n');
        for step in &self.steps {
            out.push_str(&format!("{}", step.t));
            for v in &step.beliefs {
                out.push_str(&format!(",{v:.16e}"));
            }
            for k in 0..n_agg {
                match step.aggregators.get(k) {
                    Some(v) => out.push_str(&format!(",{v:.16e}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

// ---------------------------------------------------------------------------
// Iterations
// ---------------------------------------------------------------------------

/// Plain averaging `p(t+1) = T p(t)` until the belief spread drops below
/// `tol` or `max_steps` is hit (in which case `converged` is false).
pub fn iterate_degroot(
    t: &RowStochasticMatrix,
    p0: &[f64],
    max_steps: usize,
    tol: f64,
) -> Result<BeliefTrajectory> {
    check_primitive(t)?;
    if p0.len() != t.n() {
        return Err(Error::DimensionMismatch { expected: t.n(), got: p0.len() });
    }
    let mut steps = vec![TrajectoryStep { t: 0, beliefs: p0.to_vec(), aggregators: vec![] }];
    let mut p = p0.to_vec();
    for step in 0..=max_steps {
        if spread(p.iter().copied()) < tol {
            return Ok(BeliefTrajectory {
                steps,
                converged: true,
                consensus: Some(ConsensusOutcome::Scalar(mean(&p))),
                gap_estimate: None,
            });
        }
        if step == max_steps {
            break;
        }
        p = t.apply(&p);
        steps.push(TrajectoryStep { t: step + 1, beliefs: p.clone(), aggregators: vec![] });
    }
    Ok(BeliefTrajectory {
        steps,
        converged: false,
        consensus: None,
        gap_estimate: gap_diagnostic(t),
    })
}

/// Global-aggregator dynamics with the uninformed seed:
/// `a(1) = alpha . p(0)`, `p(1) = T p(0)`, then for `t >= 1`
/// `a(t+1) = rho a(t) + (1-rho) alpha . p(t)` and
/// `p_i(t+1) = (1-beta_i)(T p(t))_i + beta_i a(t)`.
pub fn iterate_global(
    t: &RowStochasticMatrix,
    spec: &GlobalAggregatorSpec,
    p0: &[f64],
    max_steps: usize,
    tol: f64,
) -> Result<BeliefTrajectory> {
    check_primitive(t)?;
    let n = t.n();
    if spec.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: spec.n() });
    }
    if p0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p0.len() });
    }
    let mut steps = vec![TrajectoryStep { t: 0, beliefs: p0.to_vec(), aggregators: vec![] }];
    if spread(p0.iter().copied()) < tol {
        return Ok(BeliefTrajectory {
            steps,
            converged: true,
            consensus: Some(ConsensusOutcome::Scalar(mean(p0))),
            gap_estimate: None,
        });
    }
    // uninformed seed
    let mut a: f64 = spec.alpha.iter().zip(p0).map(|(w, p)| w * p).sum();
    let mut p = t.apply(p0);
    steps.push(TrajectoryStep { t: 1, beliefs: p.clone(), aggregators: vec![a] });
    for step in 1..=max_steps {
        if spread(p.iter().copied().chain(std::iter::once(a))) < tol {
            return Ok(BeliefTrajectory {
                steps,
                converged: true,
                consensus: Some(ConsensusOutcome::Scalar(mean(&p))),
                gap_estimate: None,
            });
        }
        if step == max_steps {
            break;
        }
        let m: f64 = spec.alpha.iter().zip(&p).map(|(w, p)| w * p).sum();
        let tp = t.apply(&p);
        for i in 0..n {
            p[i] = (1.0 - spec.beta[i]) * tp[i] + spec.beta[i] * a;
        }
        a = spec.rho * a + (1.0 - spec.rho) * m;
        steps.push(TrajectoryStep { t: step + 1, beliefs: p.clone(), aggregators: vec![a] });
    }
    Ok(BeliefTrajectory {
        steps,
        converged: false,
        consensus: None,
        gap_estimate: gap_diagnostic(t),
    })
}

/// Two-topic dynamics with one local aggregator per topic, seeded per topic
/// like the global case: `a_k(1) = A_k p_k(0)`, `p_k(1) = F p_k(0)`, then
/// `p_k(t+1) = (I - Diag(B_k)) F p_k(t) + B_k a_k(t)` and
/// `a_k(t+1) = rho a_k(t) + (1-rho) A_k p_k(t)`.
pub fn iterate_local(
    f: &RowStochasticMatrix,
    spec: &LocalAggregatorSpec,
    p1_0: [f64; 2],
    p2_0: [f64; 2],
    max_steps: usize,
    tol: f64,
) -> Result<BeliefTrajectory> {
    check_primitive(f)?;
    if f.n() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.n() });
    }
    let rho = spec.rho();
    let b = [spec.b1(), spec.b2()]; // B_k = (beta_k1, beta_k2)
    let selectors = [[1.0, 0.0], [0.0, 1.0]]; // A_1, A_2
    let mut p = [p1_0, p2_0];
    let mut steps = vec![TrajectoryStep {
        t: 0,
        beliefs: vec![p[0][0], p[0][1], p[1][0], p[1][1]],
        aggregators: vec![],
    }];
    // per-topic uninformed seed
    let mut a = [0.0; 2];
    for k in 0..2 {
        a[k] = selectors[k][0] * p[k][0] + selectors[k][1] * p[k][1];
        let fp = f.apply(&p[k]);
        p[k] = [fp[0], fp[1]];
    }
    steps.push(TrajectoryStep {
        t: 1,
        beliefs: vec![p[0][0], p[0][1], p[1][0], p[1][1]],
        aggregators: a.to_vec(),
    });
    for step in 1..=max_steps {
        let done = (0..2).all(|k| {
            spread([p[k][0], p[k][1], a[k]]) < tol
        });
        if done {
            return Ok(BeliefTrajectory {
                steps,
                converged: true,
                consensus: Some(ConsensusOutcome::PerTopic(
                    (p[0][0] + p[0][1]) / 2.0,
                    (p[1][0] + p[1][1]) / 2.0,
                )),
                gap_estimate: None,
            });
        }
        if step == max_steps {
            break;
        }
        for k in 0..2 {
            let m = selectors[k][0] * p[k][0] + selectors[k][1] * p[k][1];
            let fp = f.apply(&p[k]);
            p[k] = [
                (1.0 - b[k][0]) * fp[0] + b[k][0] * a[k],
                (1.0 - b[k][1]) * fp[1] + b[k][1] * a[k],
            ];
            a[k] = rho * a[k] + (1.0 - rho) * m;
        }
        steps.push(TrajectoryStep {
            t: step + 1,
            beliefs: vec![p[0][0], p[0][1], p[1][0], p[1][1]],
            aggregators: a.to_vec(),
        });
    }
    Ok(BeliefTrajectory {
        steps,
        converged: false,
        consensus: None,
        gap_estimate: gap_diagnostic(f),
    })
}

fn check_primitive(t: &RowStochasticMatrix) -> Result<()> {
    if !t.is_strongly_connected() {
        return Err(Error::NotStronglyConnected);
    }
    if !t.is_aperiodic()? {
        return Err(Error::NotPrimitive);
    }
    Ok(())
}

fn gap_diagnostic(t: &RowStochasticMatrix) -> Option<f64> {
    let s = t.stationary_distribution().ok()?;
    Some(t.slem_estimate(&s))
}

// ---------------------------------------------------------------------------
// Two-island sampler
// ---------------------------------------------------------------------------

/// A realized two-island network.
#[derive(Debug, Clone)]
pub struct TwoIslandSample {
    pub n1: usize,
    pub n2: usize,
    pub matrix: RowStochasticMatrix,
    /// Island label (1 or 2) per agent; island-1 agents come first.
    pub memberships: Vec<u8>,
}

/// Samples a directed two-island network: same-island links with
/// probability `p_s`, cross-island links with probability `p_d`,
/// independently per ordered pair. Self-links are always included, which
/// guarantees aperiodicity and rules out empty rows. Rows are uniformly
/// normalized over realized out-links. Deterministic given `seed`.
pub fn sample_two_island(
    n1: usize,
    n2: usize,
    p_s: f64,
    p_d: f64,
    seed: u64,
) -> Result<TwoIslandSample> {
    if n2 < 1 || n1 < n2 {
        return Err(Error::DomainError(format!(
            "island sizes must satisfy n1 >= n2 >= 1, got ({n1}, {n2})"
        )));
    }
    if !(p_d > 0.0 && p_d <= p_s && p_s <= 1.0) {
        return Err(Error::DomainError(format!(
            "link probabilities must satisfy 0 < p_d <= p_s <= 1, got ({p_s}, {p_d})"
        )));
    }
    let n = n1 + n2;
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut adjacency = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                adjacency[i * n + j] = true;
                continue;
            }
            let same = (i < n1) == (j < n1);
            let p = if same { p_s } else { p_d };
            adjacency[i * n + j] = rng.gen::<f64>() < p;
        }
    }
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        let degree = (0..n).filter(|&j| adjacency[i * n + j]).count();
        if degree == 0 {
            return Err(Error::DegenerateSample(i));
        }
        let w = 1.0 / degree as f64;
        for j in 0..n {
            if adjacency[i * n + j] {
                m.set(i, j, w);
            }
        }
    }
    let matrix = RowStochasticMatrix::validate_renormalizing(m, ROW_SUM_TOL)?;
    let memberships = (0..n).map(|i| if i < n1 { 1 } else { 2 }).collect();
    Ok(TwoIslandSample { n1, n2, matrix, memberships })
}

impl TwoIslandSample {
    /// Expands island-level parameters to per-agent vectors and runs the
    /// global-aggregator simulation with the unit normalization
    /// `p(0) = (1, ..., 1, 0, ..., 0)`.
    pub fn global_spec(&self, rho: f64, alpha: f64, beta1: f64, beta2: f64) -> Result<GlobalAggregatorSpec> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidSpec(format!("alpha = {alpha} outside [0, 1]")));
        }
        let alpha_vec: Vec<f64> = self
            .memberships
            .iter()
            .map(|&g| if g == 1 { alpha / self.n1 as f64 } else { (1.0 - alpha) / self.n2 as f64 })
            .collect();
        let beta_vec: Vec<f64> = self
            .memberships
            .iter()
            .map(|&g| if g == 1 { beta1 } else { beta2 })
            .collect();
        GlobalAggregatorSpec::new(rho, alpha_vec, beta_vec)
    }

    /// Unit-normalized initial beliefs: island 1 informed at 1, island 2 at 0.
    pub fn unit_beliefs(&self) -> Vec<f64> {
        self.memberships.iter().map(|&g| if g == 1 { 1.0 } else { 0.0 }).collect()
    }
}
