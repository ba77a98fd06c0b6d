//! Two-topic architecture with one local aggregator per topic.
//!
//! Topic `k` is the topic island `k` is informed about; aggregator `k`
//! trains only on beliefs about topic `k`. Unit normalizations
//! `p1(0) = (1, 0)` and `p2(0) = (0, 1)` are hard-coded here, so the
//! per-topic benchmark is 1 and the gap for topic `k` is `|p_k** - 1|`.
//! General initial beliefs are handled by the simulator only.

use crate::error::{Error, Result};
use crate::two_island::{self, TwoIslandEnv};

/// Reliance weights `beta_kj` of island `j` on local aggregator `k`,
/// together with the common updating speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalAggregatorSpec {
    rho: f64,
    b11: f64,
    b12: f64,
    b21: f64,
    b22: f64,
}

impl LocalAggregatorSpec {
    /// Validates `rho` in (0,1) and every weight in [0,1). Dominance
    /// (`b11 > b12`, `b22 > b21`) is not required here; it is a checked
    /// precondition of the comparison operations only.
    pub fn new(rho: f64, b11: f64, b12: f64, b21: f64, b22: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidSpec(format!("rho = {rho} outside (0, 1)")));
        }
        for (name, b) in [("b11", b11), ("b12", b12), ("b21", b21), ("b22", b22)] {
            if !(b.is_finite() && (0.0..1.0).contains(&b)) {
                return Err(Error::InvalidSpec(format!("{name} = {b} outside [0, 1)")));
            }
        }
        Ok(LocalAggregatorSpec { rho, b11, b12, b21, b22 })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `B_1 = (beta_11, beta_12)`.
    pub fn b1(&self) -> [f64; 2] {
        [self.b11, self.b12]
    }

    /// `B_2 = (beta_21, beta_22)`.
    pub fn b2(&self) -> [f64; 2] {
        [self.b21, self.b22]
    }

    /// Each island relies more on its own topic's aggregator.
    pub fn is_dominant(&self) -> bool {
        self.b11 > self.b12 && self.b22 > self.b21
    }

    fn require_dominance(&self) -> Result<()> {
        if self.is_dominant() {
            Ok(())
        } else {
            Err(Error::DominanceViolated(format!(
                "need b11 > b12 and b22 > b21, got ({}, {}, {}, {})",
                self.b11, self.b12, self.b21, self.b22
            )))
        }
    }
}

/// Topicwise gaps and the consensus values behind them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopicGapVector {
    pub gap1: f64,
    pub gap2: f64,
    pub consensus1: f64,
    pub consensus2: f64,
}

/// Closed-form per-topic consensus pair `(p1**, p2**)` under the unit
/// normalizations, each a rational function of `(rho, B_k, h, pi)`.
pub fn local_consensus(spec: &LocalAggregatorSpec, h: f64, pi: f64) -> Result<(f64, f64)> {
    check_domain(h, pi)?;
    let LocalAggregatorSpec { rho, b11, b12, b21, b22 } = *spec;
    let r = 1.0 - rho;
    let p1 = {
        let num = (r + b11) * b12 * h * h * pi
            + (r + b11) * h * pi * pi
            + b12 * h
            + (r + rho * b11 + b12 - b11 * b12) * pi;
        let den = (r + b11) * b12 * h * h * pi
            + (r + b11) * h * pi * pi
            + (b12 + r * (1.0 - b11 + b12)) * h
            + (2.0 * r + rho * b11 + b12 - b11 * b12) * pi;
        num / den
    };
    let p2 = {
        let num = (r + b22) * b21 * h * h * pi
            + b21 * h * pi * pi
            + (r + b22) * h
            + (r + b21 + rho * b22 - b21 * b22) * pi;
        let den = (r + b22) * b21 * h * h * pi
            + (b21 + r * (1.0 + b21 - b22)) * h * pi * pi
            + (r + b22) * h
            + (2.0 * r + b21 + rho * b22 - b21 * b22) * pi;
        num / den
    };
    Ok((p1, p2))
}

/// Local-aggregation learning gap vector `(|p1** - 1|, |p2** - 1|)`.
pub fn delta2(spec: &LocalAggregatorSpec, h: f64, pi: f64) -> Result<TopicGapVector> {
    let (p1, p2) = local_consensus(spec, h, pi)?;
    Ok(TopicGapVector {
        gap1: (p1 - 1.0).abs(),
        gap2: (p2 - 1.0).abs(),
        consensus1: p1,
        consensus2: p2,
    })
}

/// No-aggregator topicwise gap vector
/// `((h + pi)/(h pi^2 + h + 2 pi), (h pi^2 + pi)/(h pi^2 + h + 2 pi))`.
pub fn delta0_topics(h: f64, pi: f64) -> Result<(f64, f64)> {
    check_domain(h, pi)?;
    let den = h * pi * pi + h + 2.0 * pi;
    Ok(((h + pi) / den, (h * pi * pi + pi) / den))
}

/// Outcome of the local-versus-none comparison.
#[derive(Debug, Clone, Copy)]
pub struct LocalVsNone {
    /// Componentwise strict improvement over no aggregation.
    pub improves_all_topics: bool,
    pub local: TopicGapVector,
    pub none: (f64, f64),
}

/// Checks that local aggregators beat the no-aggregator benchmark on every
/// topic. Requires dominance; without it the inequality can fail and no
/// improvement claim is made.
pub fn check_local_beats_none(
    spec: &LocalAggregatorSpec,
    h: f64,
    pi: f64,
) -> Result<LocalVsNone> {
    spec.require_dominance()?;
    let local = delta2(spec, h, pi)?;
    let none = delta0_topics(h, pi)?;
    Ok(LocalVsNone {
        improves_all_topics: local.gap1 < none.0 && local.gap2 < none.1,
        local,
        none,
    })
}

/// Outcome of the global-versus-local comparison.
#[derive(Debug, Clone, Copy)]
pub struct GlobalVsLocal {
    /// A topic on which the global design does strictly worse (1 or 2).
    pub worse_topic: u8,
    /// Topicwise gaps of the shared global design; these sum to 1 exactly.
    pub global: (f64, f64),
    /// Topicwise gaps under the local aggregators.
    pub local: (f64, f64),
}

/// Compares one global design applied to both topics against the local
/// aggregators. The global topicwise consensus pair is `(p**, 1 - p**)`
/// because the topic initializations are complementary, so the global gaps
/// sum to 1 while dominant local gaps sum to less than 1; a worse topic
/// for the global design always exists.
pub fn check_global_vs_local(
    env: &TwoIslandEnv,
    spec: &LocalAggregatorSpec,
) -> Result<GlobalVsLocal> {
    spec.require_dominance()?;
    let p_global = two_island::consensus(env);
    let global = (1.0 - p_global, p_global);
    let local = delta2(spec, env.h, env.pi)?;
    let d1 = global.0 - local.gap1;
    let d2 = global.1 - local.gap2;
    if d1 <= 0.0 && d2 <= 0.0 {
        return Err(Error::HypothesisViolation(
            "no topic is worse under the global design; shared-design \
             complementarity violated"
                .into(),
        ));
    }
    Ok(GlobalVsLocal {
        worse_topic: if d1 >= d2 { 1 } else { 2 },
        global,
        local: (local.gap1, local.gap2),
    })
}

fn check_domain(h: f64, pi: f64) -> Result<()> {
    if !(h.is_finite() && h >= 1.0 && pi.is_finite() && pi >= 1.0) {
        return Err(Error::DomainError(format!(
            "need h >= 1 and pi >= 1, got ({h}, {pi})"
        )));
    }
    Ok(())
}
