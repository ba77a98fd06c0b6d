//! Closed-form consensus with a global aggregator, computed two
//! independent ways.
//!
//! The direct route resolves the geometric feedback sum through one linear
//! solve; the perturbation route treats the aggregator as a rank-structured
//! update of the baseline chain and goes through the fundamental matrix.
//! The two must agree to 1e-9, and both must agree with brute-force
//! iteration; the cross-checks live in the test suites.

use crate::dynamics::GlobalAggregatorSpec;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, RowStochasticMatrix};

/// Condition numbers above this get attached to results as a diagnostic.
pub const CONDITION_REPORT_THRESHOLD: f64 = 1e12;

/// How a consensus value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ZFormula,
    Schweitzer,
    Simulation,
}

/// A consensus value together with the influence weights that generate it.
///
/// The consensus is the weighted average `influence_weights . p(0)`; the
/// weights form a probability vector and expose how the aggregator
/// redistributes the impact of each agent's initial information.
#[derive(Debug, Clone)]
pub struct ConsensusResult {
    pub value: f64,
    pub influence_weights: Vec<f64>,
    pub method: Method,
    /// 1-norm condition number of the linear system behind the result,
    /// reported when it exceeds [`CONDITION_REPORT_THRESHOLD`].
    pub condition: Option<f64>,
}

fn require_theorem_hypotheses(spec: &GlobalAggregatorSpec) -> Result<()> {
    if let Some(b) = spec.beta().iter().find(|b| **b <= 0.0) {
        return Err(Error::HypothesisViolation(format!(
            "closed form requires every adoption weight in (0, 1), got {b}"
        )));
    }
    Ok(())
}

fn condition_diagnostic(a: &Matrix) -> Option<f64> {
    a.condition_1().filter(|c| *c > CONDITION_REPORT_THRESHOLD)
}

/// Consensus via the direct formula
/// `p** = (alpha + z T) p(0) / (1 + z 1)` with
/// `z = (1 - rho) alpha (I - (I - Diag(beta)) T)^{-1}`.
///
/// The system matrix is invertible whenever every adoption weight is
/// strictly positive: its row-wise contraction factor is
/// `max_i (1 - beta_i) < 1`.
pub fn consensus_closed_form(
    t: &RowStochasticMatrix,
    spec: &GlobalAggregatorSpec,
    p0: &[f64],
) -> Result<ConsensusResult> {
    require_theorem_hypotheses(spec)?;
    let n = check_dims(t, spec, p0)?;
    let omega = Matrix::from_fn(n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - (1.0 - spec.beta()[i]) * t.get(i, j)
    });
    // z Omega = (1 - rho) alpha  =>  Omega^T z^T = (1 - rho) alpha^T
    let rhs: Vec<f64> = spec.alpha().iter().map(|a| (1.0 - spec.rho()) * a).collect();
    let z = omega.transpose().lu()?.solve(&rhs);
    let z_sum: f64 = z.iter().sum();
    let zt = t.left_apply(&z);
    let weights: Vec<f64> = spec
        .alpha()
        .iter()
        .zip(&zt)
        .map(|(a, w)| (a + w) / (1.0 + z_sum))
        .collect();
    Ok(ConsensusResult {
        value: dot(&weights, p0),
        influence_weights: weights,
        method: Method::ZFormula,
        condition: condition_diagnostic(&omega),
    })
}

/// Consensus via the stationary-distribution perturbation route:
/// `D = beta alpha - Diag(beta) T`, `v = s (I - D Y)^{-1}`,
/// `w = v beta / (1 - rho)`, consensus `(w alpha + v T) p(0) / (1 + w)`.
pub fn consensus_schweitzer(
    t: &RowStochasticMatrix,
    spec: &GlobalAggregatorSpec,
    p0: &[f64],
) -> Result<ConsensusResult> {
    require_theorem_hypotheses(spec)?;
    let n = check_dims(t, spec, p0)?;
    let s = t.stationary_distribution()?;
    let fundamental = t.fundamental_matrix(&s)?;
    let d = Matrix::from_fn(n, |i, j| {
        spec.beta()[i] * spec.alpha()[j] - spec.beta()[i] * t.get(i, j)
    });
    let dy = d.mul(&fundamental.y);
    let a = Matrix::from_fn(n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - dy.get(j, i)
    });
    let lu = a.lu().map_err(|_| Error::SingularPerturbation)?;
    let v = lu.solve(s.weights());
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularPerturbation);
    }
    let w: f64 = dot(&v, spec.beta()) / (1.0 - spec.rho());
    let vt = t.left_apply(&v);
    let weights: Vec<f64> = spec
        .alpha()
        .iter()
        .zip(&vt)
        .map(|(a, x)| (w * a + x) / (1.0 + w))
        .collect();
    Ok(ConsensusResult {
        value: dot(&weights, p0),
        influence_weights: weights,
        method: Method::Schweitzer,
        condition: condition_diagnostic(&a),
    })
}

/// The frictionless benchmark: the simple average of the initial signals.
pub fn efficient_benchmark(p0: &[f64]) -> f64 {
    p0.iter().sum::<f64>() / p0.len() as f64
}

/// Learning gaps with and without the aggregator, against the benchmark.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub consensus_no_ai: f64,
    pub consensus_ai: f64,
    pub benchmark: f64,
    pub delta0: f64,
    pub delta1: f64,
    /// `delta1 - delta0`; negative means the aggregator improves learning.
    pub delta_star: f64,
}

/// Assembles the no-aggregator consensus (stationary weights), the
/// aggregator consensus (closed form), and the benchmark into a report.
pub fn gap_report(
    t: &RowStochasticMatrix,
    spec: &GlobalAggregatorSpec,
    p0: &[f64],
) -> Result<GapReport> {
    let s = t.stationary_distribution()?;
    let consensus_no_ai = s.dot(p0);
    let consensus_ai = consensus_closed_form(t, spec, p0)?.value;
    let benchmark = efficient_benchmark(p0);
    let delta0 = (consensus_no_ai - benchmark).abs();
    let delta1 = (consensus_ai - benchmark).abs();
    Ok(GapReport {
        consensus_no_ai,
        consensus_ai,
        benchmark,
        delta0,
        delta1,
        delta_star: delta1 - delta0,
    })
}

fn check_dims(t: &RowStochasticMatrix, spec: &GlobalAggregatorSpec, p0: &[f64]) -> Result<usize> {
    let n = t.n();
    if spec.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: spec.n() });
    }
    if p0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p0.len() });
    }
    Ok(n)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
