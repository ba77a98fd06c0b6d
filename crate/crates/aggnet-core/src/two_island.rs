//! Closed forms on the expected two-island environment.
//!
//! Everything here is a rational function of the homophily ratio `h`, the
//! size ratio `pi`, the updating speed `rho`, the majority training share
//! `alpha`, and the island adoption weights. The signed gap is the primary
//! internal quantity; absolute values are applied at the boundary because
//! the absolute gap is not differentiable where the signed gap vanishes.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, RowStochasticMatrix, ROW_SUM_TOL};

/// Signed gaps smaller than this are treated as zero when converting
/// derivatives of the signed gap into derivatives of the absolute gap.
pub const KINK_TOL: f64 = 1e-12;

/// Scalar parameters of the expected two-island environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoIslandEnv {
    pub h: f64,
    pub pi: f64,
    pub rho: f64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl TwoIslandEnv {
    /// Validates ranges: `h >= 1`, `pi >= 1`, `rho` in (0,1), `alpha` in
    /// [0,1], betas in (0,1). The boundary values `h = 1` and `pi = 1` are
    /// accepted for limit checks even though the model proper assumes
    /// strict inequalities.
    pub fn new(h: f64, pi: f64, rho: f64, alpha: f64, beta1: f64, beta2: f64) -> Result<Self> {
        if !(h.is_finite() && h >= 1.0) {
            return Err(Error::DomainError(format!("h = {h} must be >= 1")));
        }
        if !(pi.is_finite() && pi >= 1.0) {
            return Err(Error::DomainError(format!("pi = {pi} must be >= 1")));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::DomainError(format!("rho = {rho} outside (0, 1)")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::DomainError(format!("alpha = {alpha} outside [0, 1]")));
        }
        for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::DomainError(format!("{name} = {b} outside (0, 1)")));
            }
        }
        Ok(TwoIslandEnv { h, pi, rho, alpha, beta1, beta2 })
    }

    /// Environment with a common adoption weight on both islands.
    pub fn with_equal_beta(h: f64, pi: f64, rho: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(h, pi, rho, alpha, beta, beta)
    }

    /// The common adoption weight, if the two islands share one.
    pub fn equal_beta(&self) -> Option<f64> {
        (self.beta1 == self.beta2).then_some(self.beta1)
    }

    /// True when the environment sits on the `h = 1` or `pi = 1` boundary,
    /// which is accepted for limit checks only; the model proper assumes
    /// strict inequalities.
    pub fn is_boundary(&self) -> bool {
        self.h == 1.0 || self.pi == 1.0
    }

    fn require_equal_beta(&self) -> Result<f64> {
        self.equal_beta().ok_or_else(|| {
            Error::DomainError(format!(
                "operation requires beta1 == beta2, got ({}, {})",
                self.beta1, self.beta2
            ))
        })
    }
}

/// Efficient benchmark under the two-island unit normalization.
pub fn benchmark(pi: f64) -> f64 {
    pi / (pi + 1.0)
}

/// Expected 2x2 interaction matrix
/// `[[h pi/(h pi + 1), 1/(h pi + 1)], [pi/(h + pi), h/(h + pi)]]`.
///
/// Rows are assembled from the minor entry and its complement so each row
/// sums to exactly 1.0 in floating point.
pub fn expected_matrix(h: f64, pi: f64) -> Result<RowStochasticMatrix> {
    if !(h.is_finite() && h >= 1.0 && pi.is_finite() && pi >= 1.0) {
        return Err(Error::DomainError(format!(
            "expected_matrix needs h >= 1 and pi >= 1, got ({h}, {pi})"
        )));
    }
    let mut m = Matrix::zeros(2);
    // h*pi > 1, so row 1's minor entry is always the off-diagonal one
    let f12 = 1.0 / (h * pi + 1.0);
    m.set(0, 0, 1.0 - f12);
    m.set(0, 1, f12);
    if h >= pi {
        let f21 = pi / (h + pi);
        m.set(1, 0, f21);
        m.set(1, 1, 1.0 - f21);
    } else {
        let f22 = h / (h + pi);
        m.set(1, 0, 1.0 - f22);
        m.set(1, 1, f22);
    }
    RowStochasticMatrix::validate(m, ROW_SUM_TOL)
}

/// Majority stationary share of the expected matrix:
/// `(h pi^2 + pi) / (h pi^2 + h + 2 pi)`. This is the no-aggregator
/// consensus under the unit normalization `p(0) = (1, 0)`.
pub fn no_ai_consensus(h: f64, pi: f64) -> f64 {
    (h * pi * pi + pi) / (h * pi * pi + h + 2.0 * pi)
}

/// Agent-level expansion of the expected two-island network: `n1 + n2`
/// agents where each island-`a` row splits the island-level weight
/// uniformly over the agents of each island. Beliefs that start uniform
/// within islands stay uniform, so dynamics on this matrix reduce exactly
/// to the 2x2 island-level dynamics with `pi = n1/n2`.
pub fn agent_level_matrix(n1: usize, n2: usize, h: f64) -> Result<RowStochasticMatrix> {
    if n2 < 1 || n1 < n2 {
        return Err(Error::DomainError(format!(
            "island sizes must satisfy n1 >= n2 >= 1, got ({n1}, {n2})"
        )));
    }
    let pi = n1 as f64 / n2 as f64;
    let f = expected_matrix(h, pi)?;
    let n = n1 + n2;
    let island = |i: usize| usize::from(i >= n1);
    let size = [n1 as f64, n2 as f64];
    let m = Matrix::from_fn(n, |i, j| {
        let (a, b) = (island(i), island(j));
        f.get(a, b) / size[b]
    });
    RowStochasticMatrix::validate(m, 1e-9).or_else(|_| {
        RowStochasticMatrix::validate_renormalizing(
            Matrix::from_fn(n, |i, j| {
                let (a, b) = (island(i), island(j));
                f.get(a, b) / size[b]
            }),
            ROW_SUM_TOL,
        )
    })
}

/// Learning gap without an aggregator,
/// `|(h pi^2 + pi)/(h pi^2 + h + 2 pi) - pi/(pi + 1)|`.
pub fn delta0(h: f64, pi: f64) -> Result<f64> {
    if !(h.is_finite() && h >= 1.0 && pi.is_finite() && pi > 1.0) {
        return Err(Error::DomainError(format!(
            "delta0 needs h >= 1 and pi > 1, got ({h}, {pi})"
        )));
    }
    Ok((no_ai_consensus(h, pi) - benchmark(pi)).abs())
}

/// Consensus with a global aggregator under the unit normalization
/// `p(0) = (1, 0)`, as a rational function of the environment.
pub fn consensus(env: &TwoIslandEnv) -> f64 {
    let TwoIslandEnv { h, pi, rho, alpha: al, beta1: b1, beta2: b2 } = *env;
    let r = 1.0 - rho;
    let num = (al * b1 * b2 + r * al * b2) * h * h * pi
        + (al * b1 + r * (1.0 + (1.0 - al) * (b1 - b2))) * h * pi * pi
        + al * b2 * h
        + (al * (b1 + b2 - b1 * b2) + r * (1.0 - al * b1)) * pi;
    let den = (b1 * b2 + r * (b1 - al * (b1 - b2))) * h * h * pi
        + (b1 + r * (1.0 + (1.0 - al) * (b1 - b2))) * h * pi * pi
        + (b2 + r * (1.0 - al * (b1 - b2))) * h
        + (b1 + b2 - b1 * b2 + r * (2.0 - b2 - al * (b1 - b2))) * pi;
    num / den
}

/// Signed learning gap `consensus - benchmark`.
pub fn signed_gap(env: &TwoIslandEnv) -> f64 {
    consensus(env) - benchmark(env.pi)
}

/// Learning gap with a global aggregator, `|consensus - benchmark|`.
pub fn delta1(env: &TwoIslandEnv) -> f64 {
    signed_gap(env).abs()
}

/// Change in the learning gap caused by the aggregator,
/// `delta1 - delta0`. Negative means the aggregator improves learning.
pub fn delta_star(env: &TwoIslandEnv) -> Result<f64> {
    Ok(delta1(env) - delta0(env.h, env.pi)?)
}

// ---------------------------------------------------------------------------
// Analytic derivatives of the signed gap (equal adoption weights)
// ---------------------------------------------------------------------------

/// d(signed gap)/dh for an equal-beta environment.
pub fn d_signed_gap_dh(env: &TwoIslandEnv) -> Result<f64> {
    let b = env.require_equal_beta()?;
    let TwoIslandEnv { h, pi, rho, alpha: al, .. } = *env;
    let [qa, qb, qc] = gap_h_quadratic_coeffs(al, b, pi);
    let q = qa * h * h + qb * h + qc;
    let den = (1.0 + b - rho) * (b * h * h * pi + h * pi * pi + h + (2.0 - b) * pi).powi(2);
    Ok(pi * (1.0 - rho) * q / den)
}

/// d(signed gap)/dbeta for an equal-beta environment.
pub fn d_signed_gap_dbeta(env: &TwoIslandEnv) -> Result<f64> {
    let b = env.require_equal_beta()?;
    let TwoIslandEnv { h, pi, rho, alpha: al, .. } = *env;
    let num = (1.0 - rho)
        * (h * pi * pi + pi - al * (h * pi * pi + 2.0 * pi + h))
        * ((1.0 + 2.0 * b - rho) * h * h * pi + h * pi * pi + h + (1.0 - 2.0 * b + rho) * pi);
    let den = (1.0 + b - rho).powi(2)
        * (b * h * h * pi + h * pi * pi + h + (2.0 - b) * pi).powi(2);
    Ok(-num / den)
}

/// d(signed gap)/dalpha for an equal-beta environment. Always positive.
pub fn d_signed_gap_dalpha(env: &TwoIslandEnv) -> Result<f64> {
    let b = env.require_equal_beta()?;
    let TwoIslandEnv { h, pi, rho, .. } = *env;
    let num = b * (1.0 + b - rho) * h * h * pi + b * h * pi * pi + b * h
        + b * (1.0 - b + rho) * pi;
    let den = (1.0 + b - rho) * (b * h * h * pi + h * pi * pi + h + (2.0 - b) * pi);
    Ok(num / den)
}

fn signed_to_abs(env: &TwoIslandEnv, d_signed: f64) -> Result<f64> {
    let gap = signed_gap(env);
    if gap.abs() < KINK_TOL {
        return Err(Error::NonDifferentiable(KINK_TOL));
    }
    Ok(gap.signum() * d_signed)
}

/// d(delta1)/dh, i.e. the sign of the gap applied to [`d_signed_gap_dh`].
/// Fails at the kink where the signed gap vanishes.
pub fn d_gap_dh(env: &TwoIslandEnv) -> Result<f64> {
    signed_to_abs(env, d_signed_gap_dh(env)?)
}

/// d(delta1)/dbeta. Fails at the kink.
pub fn d_gap_dbeta(env: &TwoIslandEnv) -> Result<f64> {
    signed_to_abs(env, d_signed_gap_dbeta(env)?)
}

/// d(delta1)/dalpha. Fails at the kink.
pub fn d_gap_dalpha(env: &TwoIslandEnv) -> Result<f64> {
    signed_to_abs(env, d_signed_gap_dalpha(env)?)
}

/// Coefficients `[a, b, c]` of the quadratic in `h` whose sign equals the
/// sign of d(signed gap)/dh:
/// `a = beta (alpha (pi^2+1) - pi^2)`, `b = 2 beta pi (2 alpha - 1)`,
/// `c = beta (alpha (pi^2+1) - pi^2) + pi^2 - 1`.
pub fn gap_h_quadratic_coeffs(alpha: f64, beta: f64, pi: f64) -> [f64; 3] {
    let lead = beta * (alpha * (pi * pi + 1.0) - pi * pi);
    [lead, 2.0 * beta * pi * (2.0 * alpha - 1.0), lead + pi * pi - 1.0]
}

// ---------------------------------------------------------------------------
// Regime classification
// ---------------------------------------------------------------------------

/// Qualitative dependence of the learning gap on homophily.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `alpha > pi^2/(pi^2+1)`: the aggregator always worsens learning and
    /// the gap grows with homophily.
    MajorityAmplifying,
    /// Minority-weighted training with `h` below the lower threshold.
    MinorityLowH,
    /// Minority-weighted training with `h` between the thresholds; the
    /// aggregator improves learning here.
    MinorityMidH,
    /// Minority-weighted training with `h` above the upper threshold.
    MinorityHighH,
    /// Parameters outside both characterized regions.
    Unclassified,
}

impl Regime {
    /// Stable numeric code used in tabular output.
    pub fn code(&self) -> i64 {
        match self {
            Regime::MajorityAmplifying => 0,
            Regime::MinorityLowH => 1,
            Regime::MinorityMidH => 2,
            Regime::MinorityHighH => 3,
            Regime::Unclassified => 4,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::MajorityAmplifying => "majority-amplifying",
            Regime::MinorityLowH => "minority-low-h",
            Regime::MinorityMidH => "minority-mid-h",
            Regime::MinorityHighH => "minority-high-h",
            Regime::Unclassified => "unclassified",
        }
    }
}

/// Classification outcome plus every numeric threshold that was located.
#[derive(Debug, Clone)]
pub struct RegimeClassification {
    pub regime: Regime,
    /// Named thresholds, present only when the regime defines them:
    /// `h_lower`/`h_upper` (sign changes of delta_star in `h`), `h0` (root
    /// of the derivative quadratic), `h_lower_composed`/`h_upper_composed`
    /// (min/max composition with `h0`), `beta_star`, `beta1_star`,
    /// `beta2_star`, `beta_cap`.
    pub thresholds: BTreeMap<&'static str, f64>,
}

const H_SCAN_MAX: f64 = 1e6;
const H_SCAN_POINTS: usize = 2000;
const BISECT_TOL: f64 = 1e-10;

/// Classifies the homophily dependence of the learning gap for an
/// equal-beta environment.
///
/// Majority-amplifying when `alpha > pi^2/(pi^2+1)`. For
/// `alpha < 1/2` with the adoption weight below the numerically determined
/// cap, the two sign changes of `delta_star` in `h` are located by a log
/// grid scan over `(1, 1e6]` followed by bisection, and the root of the
/// derivative quadratic gives the turning point `h0`.
pub fn classify_regime(env: &TwoIslandEnv) -> Result<RegimeClassification> {
    let beta = env.require_equal_beta()?;
    let TwoIslandEnv { pi, rho, alpha, .. } = *env;
    if pi <= 1.0 {
        return Err(Error::DomainError("regime classification needs pi > 1".into()));
    }
    let mut thresholds = BTreeMap::new();
    if alpha > pi * pi / (pi * pi + 1.0) {
        return Ok(RegimeClassification { regime: Regime::MajorityAmplifying, thresholds });
    }
    if alpha >= 0.5 {
        return Ok(RegimeClassification { regime: Regime::Unclassified, thresholds });
    }
    let beta_cap = (pi - 1.0) / (2.0 * pi - 2.0 * alpha * (pi + 1.0));
    let beta1_star = sup_over_h(|h| beta1_star_at(rho, alpha, pi, h));
    let beta2_star = sup_over_h(|h| beta2_star_at(rho, alpha, pi, h));
    let beta_star = beta_cap.min(beta1_star).min(beta2_star);
    thresholds.insert("beta_cap", beta_cap);
    thresholds.insert("beta1_star", beta1_star);
    thresholds.insert("beta2_star", beta2_star);
    thresholds.insert("beta_star", beta_star);
    if beta >= beta_star {
        return Ok(RegimeClassification { regime: Regime::Unclassified, thresholds });
    }

    let star = |h: f64| {
        let e = TwoIslandEnv { h, ..*env };
        delta1(&e) - (no_ai_consensus(h, pi) - benchmark(pi)).abs()
    };
    let roots = sign_change_roots(&star);
    if roots.len() != 2 {
        return Ok(RegimeClassification { regime: Regime::Unclassified, thresholds });
    }
    let (h_lower, h_upper) = (roots[0], roots[1]);
    thresholds.insert("h_lower", h_lower);
    thresholds.insert("h_upper", h_upper);
    if let Some(h0) = turning_point(alpha, beta, pi) {
        thresholds.insert("h0", h0);
        thresholds.insert("h_lower_composed", h_lower.min(h0));
        thresholds.insert("h_upper_composed", h_upper.max(h0));
    }
    let regime = if env.h < h_lower {
        Regime::MinorityLowH
    } else if env.h < h_upper {
        Regime::MinorityMidH
    } else {
        Regime::MinorityHighH
    };
    Ok(RegimeClassification { regime, thresholds })
}

/// Largest root (> 1 when it exists) of the derivative quadratic; `None`
/// when the quadratic has no real root beyond the well-mixed boundary.
pub fn turning_point(alpha: f64, beta: f64, pi: f64) -> Option<f64> {
    let [a, b, c] = gap_h_quadratic_coeffs(alpha, beta, pi);
    if a >= 0.0 {
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let root = (-b - disc.sqrt()) / (2.0 * a);
    (root > 1.0).then_some(root)
}

fn log_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(move |i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
}

fn sign_change_roots(f: &impl Fn(f64) -> f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for h in log_grid(1.0 + 1e-9, H_SCAN_MAX, H_SCAN_POINTS) {
        let v = f(h);
        if let Some((ph, pv)) = prev {
            if pv.signum() != v.signum() && pv != 0.0 && v != 0.0 {
                roots.push(bisect_root(f, ph, h));
            }
        }
        prev = Some((h, v));
    }
    roots
}

fn bisect_root(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn sup_over_h(per_h: impl Fn(f64) -> f64) -> f64 {
    // suprema over h approximated on the same log grid used for the sign
    // scan, with a golden-section refinement around the incumbent
    let hs: Vec<f64> = log_grid(1.0 + 1e-9, H_SCAN_MAX, H_SCAN_POINTS).collect();
    let mut best_idx = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &h) in hs.iter().enumerate() {
        let v = per_h(h);
        if v > best {
            best = v;
            best_idx = i;
        }
    }
    let lo = hs[best_idx.saturating_sub(1)];
    let hi = hs[(best_idx + 1).min(hs.len() - 1)];
    best.max(golden_max(&per_h, lo, hi))
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// Per-h adoption threshold above which the aggregator-worsened gap
/// `-signed_gap` exceeds `delta0`; the map is increasing in beta, so the
/// root is bisected on (0, 1).
fn beta1_star_at(rho: f64, alpha: f64, pi: f64, h: f64) -> f64 {
    let f = |beta: f64| {
        let env = TwoIslandEnv { h, pi, rho, alpha, beta1: beta, beta2: beta };
        -signed_gap(&env) - (no_ai_consensus(h, pi) - benchmark(pi)).abs()
    };
    bisect_unit_root(&f)
}

/// Per-h adoption threshold at which the signed gap crosses zero; the map
/// is decreasing in beta.
fn beta2_star_at(rho: f64, alpha: f64, pi: f64, h: f64) -> f64 {
    let f = |beta: f64| {
        let env = TwoIslandEnv { h, pi, rho, alpha, beta1: beta, beta2: beta };
        signed_gap(&env)
    };
    bisect_unit_root(&f)
}

fn bisect_unit_root(f: &impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    let flo = f(lo);
    if flo.signum() == f(hi).signum() {
        // no crossing on (0, 1); the threshold saturates at the top
        return 1.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_mixed_limit_has_identical_rows() {
        let f = expected_matrix(1.0, 2.0).unwrap();
        for j in 0..2 {
            assert!((f.get(0, j) - f.get(1, j)).abs() < 1e-15);
        }
        assert!((f.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn worked_matrix_h2_pi2() {
        let f = expected_matrix(2.0, 2.0).unwrap();
        assert!((f.get(0, 0) - 0.8).abs() < 1e-15);
        assert!((f.get(0, 1) - 0.2).abs() < 1e-15);
        assert!((f.get(1, 0) - 0.5).abs() < 1e-15);
        assert!((f.get(1, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rows_sum_exactly_to_one() {
        for &(h, pi) in &[(1.5, 2.0), (7.0, 1.25), (2.0, 9.0), (1.0 + 1e-9, 1.5), (1e5, 3.0)] {
            let f = expected_matrix(h, pi).unwrap();
            for i in 0..2 {
                let sum: f64 = (0..2).map(|j| f.get(i, j)).sum();
                assert_eq!(sum.to_bits(), 1.0f64.to_bits(), "row {i} of F({h}, {pi})");
            }
        }
    }

    #[test]
    fn delta0_vanishes_when_well_mixed() {
        assert!(delta0(1.0, 3.0).unwrap() < 1e-15);
    }

    #[test]
    fn delta0_worked_value() {
        assert!((delta0(2.0, 2.0).unwrap() - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn delta0_high_homophily_limit() {
        // as h grows the consensus tends to pi^2/(pi^2+1)
        let pi = 2.0;
        let limit = pi * pi / (pi * pi + 1.0) - benchmark(pi);
        assert!((delta0(1e8, pi).unwrap() - limit).abs() < 1e-7);
    }

    #[test]
    fn consensus_worked_value() {
        let env = TwoIslandEnv::with_equal_beta(2.0, 2.0, 0.5, 0.5, 0.5).unwrap();
        assert!((consensus(&env) - 10.0 / 17.0).abs() < 1e-15);
        assert!((delta1(&env) - 4.0 / 51.0).abs() < 1e-15);
    }

    #[test]
    fn delta_star_worked_value() {
        let env = TwoIslandEnv::with_equal_beta(2.0, 2.0, 0.5, 0.5, 0.5).unwrap();
        let expected = 4.0 / 51.0 - 1.0 / 21.0;
        assert!((delta_star(&env).unwrap() - expected).abs() < 1e-15);
        assert!(expected > 0.0);
    }

    #[test]
    fn delta_star_vanishes_in_the_symmetric_degenerate_limit() {
        let env = TwoIslandEnv::with_equal_beta(2.0, 1.0 + 1e-9, 0.5, 0.5, 0.5).unwrap();
        assert!(delta_star(&env).unwrap().abs() < 1e-8);
    }

    #[test]
    fn alpha_derivative_is_positive() {
        for &(rho, al, b, h, pi) in &[
            (0.3, 0.1, 0.2, 1.5, 2.0),
            (0.7, 0.9, 0.8, 12.0, 1.3),
            (0.5, 0.5, 0.5, 2.0, 2.0),
        ] {
            let env = TwoIslandEnv::with_equal_beta(h, pi, rho, al, b).unwrap();
            assert!(d_signed_gap_dalpha(&env).unwrap() > 0.0);
        }
    }

    #[test]
    fn beta_derivative_negative_below_alpha_bound() {
        let (h, pi) = (3.0, 2.0);
        let bound = (h * pi * pi + pi) / (h * pi * pi + 2.0 * pi + h);
        let env = TwoIslandEnv::with_equal_beta(h, pi, 0.4, bound - 0.1, 0.3).unwrap();
        assert!(d_signed_gap_dbeta(&env).unwrap() < 0.0);
        let env_hi = TwoIslandEnv::with_equal_beta(h, pi, 0.4, bound + 0.05, 0.3).unwrap();
        assert!(d_signed_gap_dbeta(&env_hi).unwrap() > 0.0);
    }

    #[test]
    fn derivatives_require_equal_betas() {
        let env = TwoIslandEnv::new(2.0, 2.0, 0.5, 0.5, 0.4, 0.6).unwrap();
        assert!(d_signed_gap_dh(&env).is_err());
    }

    #[test]
    fn abs_gap_derivative_fails_at_kink() {
        // pi -> 1 with symmetric training makes the signed gap vanish
        let env = TwoIslandEnv::with_equal_beta(2.0, 1.0, 0.5, 0.5, 0.5).unwrap();
        assert!(matches!(d_gap_dh(&env), Err(Error::NonDifferentiable(_))));
    }

    #[test]
    fn majority_regime_detected() {
        let env = TwoIslandEnv::with_equal_beta(3.0, 2.0, 0.5, 0.9, 0.3).unwrap();
        let c = classify_regime(&env).unwrap();
        assert_eq!(c.regime, Regime::MajorityAmplifying);
    }

    #[test]
    fn minority_regime_thresholds_bracket_sign_changes() {
        let env = TwoIslandEnv::with_equal_beta(5.0, 2.0, 0.5, 0.3, 0.05).unwrap();
        let c = classify_regime(&env).unwrap();
        assert_eq!(c.regime, Regime::MinorityMidH);
        let h_lower = c.thresholds["h_lower"];
        let h_upper = c.thresholds["h_upper"];
        assert!(1.0 < h_lower && h_lower < h_upper);
        let star = |h: f64| {
            delta_star(&TwoIslandEnv { h, ..env }).unwrap()
        };
        assert!(star(h_lower - 1e-4) > 0.0);
        assert!(star(h_lower + 1e-4) < 0.0);
        assert!(star(h_upper - 1e-4) < 0.0);
        assert!(star(h_upper + 1e-4) > 0.0);
        // the turning point sits inside the improvement window here
        let h0 = c.thresholds["h0"];
        assert!(h_lower < h0 && h0 < h_upper);
    }

    #[test]
    fn quadratic_positive_at_one_under_beta_cap() {
        let (alpha, pi) = (0.3, 2.0);
        let cap = (pi - 1.0) / (2.0 * pi - 2.0 * alpha * (pi + 1.0));
        for &beta in &[0.01, cap / 2.0, cap - 1e-6] {
            let [a, b, c] = gap_h_quadratic_coeffs(alpha, beta, pi);
            let q1 = a + b + c;
            let closed = (pi + 1.0) * (2.0 * beta * (alpha * (pi + 1.0) - pi) + pi - 1.0);
            assert!((q1 - closed).abs() < 1e-12);
            assert!(q1 > 0.0);
        }
    }

    #[test]
    fn env_validation_rejects_out_of_range() {
        assert!(TwoIslandEnv::new(0.5, 2.0, 0.5, 0.5, 0.5, 0.5).is_err());
        assert!(TwoIslandEnv::new(2.0, 2.0, 1.0, 0.5, 0.5, 0.5).is_err());
        assert!(TwoIslandEnv::new(2.0, 2.0, 0.5, 1.5, 0.5, 0.5).is_err());
        assert!(TwoIslandEnv::new(2.0, 2.0, 0.5, 0.5, 0.0, 0.5).is_err());
    }
}
