//! Robust-improvement machinery: admissible training-weight intervals,
//! their extremal reductions over the adoption weights, the robust set
//! over a homophily range, and the speed threshold that separates empty
//! from positive-measure robust sets.

use crate::error::{Error, Result};
use crate::two_island::TwoIslandEnv;

/// A homophily range and updating speed to probe for robust improvement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustQuery {
    pub pi: f64,
    pub h_lo: f64,
    pub h_hi: f64,
    pub rho: f64,
    pub h_grid_size: usize,
}

/// Default number of log-spaced grid points over `[h_lo, h_hi]`.
pub const DEFAULT_H_GRID: usize = 2000;

impl RobustQuery {
    /// Validates the segregation bounds `h_lo > 2 pi`, `h_hi > 20 pi`,
    /// `h_hi > h_lo`, and `rho` in (0, 1).
    pub fn new(pi: f64, h_lo: f64, h_hi: f64, rho: f64, h_grid_size: usize) -> Result<Self> {
        if !(pi.is_finite() && pi > 1.0) {
            return Err(Error::DomainError(format!("pi = {pi} must exceed 1")));
        }
        if !h_lo.is_finite() || h_lo <= 2.0 * pi {
            return Err(Error::DomainError(format!(
                "h_lo = {h_lo} must exceed 2 pi = {}",
                2.0 * pi
            )));
        }
        if !h_hi.is_finite() || h_hi <= 20.0 * pi {
            return Err(Error::DomainError(format!(
                "h_hi = {h_hi} must exceed 20 pi = {}",
                20.0 * pi
            )));
        }
        if h_hi <= h_lo {
            return Err(Error::DomainError(format!("h_hi = {h_hi} must exceed h_lo = {h_lo}")));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::DomainError(format!("rho = {rho} outside (0, 1)")));
        }
        if h_grid_size < 2 {
            return Err(Error::DomainError("h_grid_size must be at least 2".into()));
        }
        Ok(RobustQuery { pi, h_lo, h_hi, rho, h_grid_size })
    }
}

/// An interval of training weights, clipped to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaInterval {
    /// Raw lower endpoint before clipping.
    pub lower: f64,
    /// Raw upper endpoint before clipping.
    pub upper: f64,
    pub empty: bool,
    /// Length of the clipped interval.
    pub measure: f64,
}

impl AlphaInterval {
    pub fn new(lower: f64, upper: f64) -> Self {
        let lo = lower.max(0.0);
        let hi = upper.min(1.0);
        let empty = lo >= hi;
        AlphaInterval { lower, upper, empty, measure: (hi - lo).max(0.0) }
    }

    /// True when `alpha` lies strictly inside the clipped interval.
    pub fn contains(&self, alpha: f64) -> bool {
        !self.empty && alpha > self.lower.max(0.0) && alpha < self.upper.min(1.0)
    }
}

// ---------------------------------------------------------------------------
// Per-environment admissible bounds
// ---------------------------------------------------------------------------

struct BoundPieces {
    m1: f64,
    m2: f64,
    d1: f64,
    d2: f64,
    d3: f64,
    d4: f64,
}

fn bound_pieces(env: &TwoIslandEnv) -> BoundPieces {
    let TwoIslandEnv { h, pi, rho, beta1: b1, beta2: b2, .. } = *env;
    let r = 1.0 - rho;
    let m1 = (h * pi * pi + pi) / (h * pi * pi + h + 2.0 * pi);
    let m2 = 2.0 * pi / (pi + 1.0) - m1;
    let d1 = b1 * (b2 + r) * h * h * pi
        + (b1 + r * (1.0 + b1 - b2)) * h * pi * pi
        + (b2 + r) * h
        + (b1 + b2 - b1 * b2 + r * (2.0 - b2)) * pi;
    let d2 = r * ((b1 - b2 + 1.0) * h * pi * pi + pi);
    let d3 = r * (b1 - b2) * (h * h * pi + h * pi * pi + h + pi);
    let d4 = b2 * (b1 + r) * h * h * pi
        + (rho * b1 + r * b2) * h * pi * pi
        + b2 * h
        + (b2 * (1.0 - b1) + rho * b1) * pi;
    BoundPieces { m1, m2, d1, d2, d3, d4 }
}

/// The admissible training-weight window `(alpha_under, alpha_bar)` for a
/// single environment: the aggregator strictly improves learning exactly
/// when `alpha` lies strictly between the two bounds. Guarantees
/// `alpha_under < alpha_bar` and `alpha_bar` in (0, 1).
pub fn alpha_bounds(env: &TwoIslandEnv) -> Result<(f64, f64)> {
    if env.h <= 1.0 || env.pi <= 1.0 {
        return Err(Error::DomainError(format!(
            "alpha_bounds needs h > 1 and pi > 1, got ({}, {})",
            env.h, env.pi
        )));
    }
    let p = bound_pieces(env);
    let upper = (p.m1 * p.d1 - p.d2) / (p.m1 * p.d3 + p.d4);
    let lower = (p.m2 * p.d1 - p.d2) / (p.m2 * p.d3 + p.d4);
    Ok((lower, upper))
}

/// Improvement window for a fixed, fully known environment: the interval
/// `[max(0, alpha_under), alpha_bar]`, which is always nonempty.
pub fn pointwise_interval(env: &TwoIslandEnv) -> Result<AlphaInterval> {
    let (lower, upper) = alpha_bounds(env)?;
    Ok(AlphaInterval::new(lower, upper))
}

// ---------------------------------------------------------------------------
// Extremal reductions over the adoption weights
// ---------------------------------------------------------------------------

/// Limit of the upper bound as the majority adoption weight vanishes;
/// independent of the minority adoption weight. This is the binding upper
/// envelope when minimizing over all adoption profiles.
pub fn g_bar(rho: f64, h: f64, pi: f64) -> Result<f64> {
    check_g_domain(rho, h, pi, 1.0)?;
    let num = pi * (rho * (h * h * pi - pi) - (2.0 * h * h * pi + h * pi * pi + h));
    let den = (h + pi) * (rho * (h * h * pi - pi) - (h * h * pi + h * pi * pi + h + pi));
    Ok(num / den)
}

/// Lower bound evaluated at the extremal adoption profile (majority fully
/// reliant, minority not at all); valid on `h > 2 pi`, where it is the
/// binding lower envelope when maximizing over adoption profiles.
pub fn g_under(rho: f64, h: f64, pi: f64) -> Result<f64> {
    check_g_domain(rho, h, pi, 2.0 * pi)?;
    let r = 1.0 - rho;
    let m2 = 2.0 * pi / (pi + 1.0) - (h * pi * pi + pi) / (h * pi * pi + h + 2.0 * pi);
    let num = m2 * (r * h * h * pi + (3.0 - 2.0 * rho) * h * pi * pi + r * h + (3.0 - 2.0 * rho) * pi)
        - r * (2.0 * h * pi * pi + pi);
    let den = r * (h * h * pi + h * pi * pi + h + pi) * m2 + rho * h * pi * pi + rho * pi;
    Ok(num / den)
}

/// Closed-form speed derivative of [`g_bar`]; strictly positive.
pub fn g_bar_drho(rho: f64, h: f64, pi: f64) -> Result<f64> {
    check_g_domain(rho, h, pi, 1.0)?;
    let num = pi.powi(3) * (h - 1.0).powi(2) * (h + 1.0).powi(2);
    let den = (h + pi)
        * (rho * (h * h * pi - pi) - (h * h * pi + h * pi * pi + h + pi)).powi(2);
    Ok(num / den)
}

/// Closed-form speed derivative of [`g_under`]; strictly negative on
/// `h > 2 pi`.
pub fn g_under_drho(rho: f64, h: f64, pi: f64) -> Result<f64> {
    check_g_domain(rho, h, pi, 2.0 * pi)?;
    let r_poly = h.powi(3)
        * (2.0 * pi.powi(5) - 3.0 * pi.powi(4) + 6.0 * pi.powi(3) - 3.0 * pi * pi + 2.0 * pi)
        - h * h
            * (2.0 * pi.powi(6) + 4.0 * pi.powi(5) - 11.0 * pi.powi(4) + 14.0 * pi.powi(3)
                - 15.0 * pi * pi
                + 4.0 * pi
                - 2.0)
        - h * (6.0 * pi.powi(5) + 13.0 * pi.powi(4) - 18.0 * pi.powi(3) + 13.0 * pi * pi
            - 10.0 * pi)
        - (5.0 * pi.powi(4) + 10.0 * pi.powi(3) - 11.0 * pi * pi);
    let a = (h - 1.0) * (h * pi * pi - h * pi + 2.0 * h - pi * pi + 3.0 * pi);
    let b = (h + pi) * (h * pi * pi - h * pi + 2.0 * h + 3.0 * pi - 1.0);
    Ok(-(h - 1.0) * r_poly / ((h * pi + 1.0) * (rho * a - b).powi(2)))
}

fn check_g_domain(rho: f64, h: f64, pi: f64, h_floor: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::DomainError(format!("rho = {rho} outside (0, 1)")));
    }
    if !(pi.is_finite() && pi > 1.0) {
        return Err(Error::DomainError(format!("pi = {pi} must exceed 1")));
    }
    if !(h.is_finite() && h > h_floor) {
        return Err(Error::DomainError(format!("h = {h} must exceed {h_floor}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Robust set and speed threshold
// ---------------------------------------------------------------------------

/// The robust improvement set: training weights that strictly improve
/// learning for every homophily level in the query range and every
/// adoption profile. Computed as
/// `[0, 1] ∩ (sup_h g_under, inf_h g_bar)` over a log grid with
/// golden-section refinement around the incumbent extremizers.
pub fn robust_set(query: &RobustQuery) -> Result<AlphaInterval> {
    let RobustQuery { pi, h_lo, h_hi, rho, h_grid_size } = *query;
    let hs = log_grid(h_lo, h_hi, h_grid_size);
    let mut sup_under = f64::NEG_INFINITY;
    let mut inf_bar = f64::INFINITY;
    let mut arg_under = 0;
    let mut arg_bar = 0;
    for (i, &h) in hs.iter().enumerate() {
        let gu = g_under(rho, h, pi)?;
        if gu > sup_under {
            sup_under = gu;
            arg_under = i;
        }
        let gb = g_bar(rho, h, pi)?;
        if gb < inf_bar {
            inf_bar = gb;
            arg_bar = i;
        }
    }
    sup_under = sup_under.max(refine_extremum(
        |h| g_under(rho, h, pi).unwrap_or(f64::NEG_INFINITY),
        &hs,
        arg_under,
        true,
    ));
    inf_bar = inf_bar.min(refine_extremum(
        |h| g_bar(rho, h, pi).unwrap_or(f64::INFINITY),
        &hs,
        arg_bar,
        false,
    ));
    Ok(AlphaInterval::new(sup_under, inf_bar))
}

/// The speed threshold: the supremum of speeds whose robust set has zero
/// measure, bisected to width 1e-8 on the measure predicate. A coarse
/// scan first confirms that the measure is nondecreasing in `rho`;
/// non-monotone observations abort with `BracketFailure` since they would
/// contradict the proven envelope monotonicity.
pub fn rho_star(pi: f64, h_lo: f64, h_hi: f64, h_grid_size: usize) -> Result<f64> {
    const RHO_EPS: f64 = 1e-9;
    let measure_at = |rho: f64| -> Result<f64> {
        let q = RobustQuery::new(pi, h_lo, h_hi, rho, h_grid_size)?;
        Ok(robust_set(&q)?.measure)
    };
    // guard scan: measure must be nondecreasing along a coarse grid
    let mut prev = 0.0;
    let mut any_positive = false;
    for k in 0..=40 {
        let rho = (k as f64 + 0.5) / 41.0;
        let m = measure_at(rho)?;
        if m + 1e-12 < prev {
            return Err(Error::BracketFailure(format!(
                "measure decreased from {prev} to {m} at rho = {rho}"
            )));
        }
        prev = prev.max(m);
        any_positive |= m > 0.0;
    }
    if !any_positive && measure_at(1.0 - RHO_EPS)? == 0.0 {
        return Err(Error::BracketFailure(
            "robust set stays empty on the whole speed range".into(),
        ));
    }
    let (mut lo, mut hi) = (0.5, 1.0 - RHO_EPS);
    if measure_at(lo)? > 0.0 {
        return Err(Error::BracketFailure(
            "robust set unexpectedly nonempty at rho = 1/2".into(),
        ));
    }
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if measure_at(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Golden-section pass between the grid neighbors of the incumbent
/// extremizer. `maximize` flips the objective sign.
fn refine_extremum(f: impl Fn(f64) -> f64, hs: &[f64], idx: usize, maximize: bool) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut lo = hs[idx.saturating_sub(1)];
    let mut hi = hs[(idx + 1).min(hs.len() - 1)];
    let sign = if maximize { 1.0 } else { -1.0 };
    let g = |x: f64| sign * f(x);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1);
        }
    }
    sign * f1.max(f2)
}
