use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Consistency, SimTrace, CONSISTENCY_TOL, STATE_RESOLUTION};
use crate::dos::DoSStats;
use crate::error::{Error, Result};
use crate::synthesis::DesignReport;

/// `‖δ(end)‖/‖δ(0)‖`, or `"degenerate"` when the run starts in consensus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorRatio {
    Value(f64),
    Degenerate,
}

impl ErrorRatio {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Value(v) => Some(v),
            Self::Degenerate => None,
        }
    }
}

impl Serialize for ErrorRatio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Value(v) => s.serialize_f64(*v),
            Self::Degenerate => s.serialize_str("degenerate"),
        }
    }
}

impl<'de> Deserialize<'de> for ErrorRatio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Self::Value(v)),
            Repr::Tag(t) if t == "degenerate" => Ok(Self::Degenerate),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!("unexpected ratio {t:?}"))),
        }
    }
}

/// The checkable claims of the design, evaluated over one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub steps: usize,
    pub successes: usize,
    pub overflow_count: usize,
    pub first_overflow: Option<usize>,
    /// Largest quantizer argument at a successful transmission.
    pub max_qarg_inf: f64,
    pub max_leader_qarg_inf: Option<f64>,
    pub quantizer_range: f64,
    pub envelope_violations: usize,
    pub first_envelope_violation: Option<usize>,
    /// Largest `‖δ(k)‖_inf / envelope(k)`, the envelope widened by the
    /// rounding floor of the states.
    pub max_envelope_ratio: f64,
    pub theta_rule_violations: usize,
    /// First step whose quantizer reach `θ(k)(2R+1)σ` falls below the
    /// rounding floor `STATE_RESOLUTION·‖x(k)‖_inf`. From there on the
    /// arithmetic, not the design, decides whether the quantizer overflows.
    pub resolution_floor_step: Option<usize>,
    pub initial_error: f64,
    pub final_error: f64,
    pub error_ratio: ErrorRatio,
    pub consistency: Consistency,
    pub dos_stats: DoSStats,
    pub dos_summary: String,
}

impl AuditReport {
    /// No overflow, envelope respected, recursions consistent.
    pub fn clean(&self) -> bool {
        self.overflow_count == 0
            && self.envelope_violations == 0
            && self.theta_rule_violations == 0
            && self.consistency.passed()
    }
}

pub fn audit(t: &SimTrace, d: &DesignReport) -> Result<AuditReport> {
    let (agents, n, leader) = match d {
        DesignReport::Leaderless(x) => (x.agents, x.state_dim, false),
        DesignReport::LeaderFollower(x) => (x.agents, x.state_dim, true),
    };
    if agents != t.agents || n != t.state_dim || leader != t.has_leader {
        return Err(Error::Dimension(format!(
            "design for {agents} agents of order {n} (leader: {leader}) does not match the trace ({} agents of order {}, leader: {})",
            t.agents, t.state_dim, t.has_leader
        )));
    }
    let (g1, g2) = (d.gamma1(), d.gamma2());

    let mut envelope_violations = 0;
    let mut first_envelope_violation = None;
    let mut max_envelope_ratio: f64 = 0.0;
    let mut theta_rule_violations = 0;
    for (idx, s) in t.steps.iter().enumerate() {
        let bound = d.envelope(s.k, t.theta0, t.sigma) * (1.0 + CONSISTENCY_TOL) + STATE_RESOLUTION * s.state_inf;
        max_envelope_ratio = max_envelope_ratio.max(s.delta_inf / bound);
        if s.delta_inf > bound {
            envelope_violations += 1;
            first_envelope_violation.get_or_insert(s.k);
        }
        if idx > 0 {
            let prev = t.steps[idx - 1].theta;
            let expect = if s.dos { g2 * prev } else { g1 * prev };
            if s.theta != expect {
                theta_rule_violations += 1;
            }
        }
    }

    let initial_error = t.steps.first().map_or(0.0, |s| s.delta_inf);
    let final_error = t.steps.last().map_or(0.0, |s| s.delta_inf);
    let error_ratio = if initial_error > 0.0 {
        ErrorRatio::Value(final_error / initial_error)
    } else {
        ErrorRatio::Degenerate
    };
    let flags = t.success_flags();
    let dos_stats = DoSStats::from_outcomes(&flags, t.delta);
    let sent = || t.steps.iter().skip(1).filter(|s| !s.dos);

    Ok(AuditReport {
        steps: t.steps.len() - 1,
        successes: flags.iter().filter(|s| **s).count(),
        overflow_count: t.overflow_count(),
        first_overflow: t.steps.iter().find(|s| s.overflow).map(|s| s.k),
        max_qarg_inf: sent().map(|s| s.max_qarg_inf).fold(0.0, f64::max),
        max_leader_qarg_inf: t
            .has_leader
            .then(|| sent().filter_map(|s| s.leader_qarg_inf).fold(0.0, f64::max)),
        quantizer_range: t.range,
        envelope_violations,
        first_envelope_violation,
        max_envelope_ratio,
        theta_rule_violations,
        resolution_floor_step: t
            .steps
            .iter()
            .find(|s| s.theta * t.range < STATE_RESOLUTION * s.state_inf)
            .map(|s| s.k),
        initial_error,
        final_error,
        error_ratio,
        consistency: t.consistency.clone(),
        dos_summary: dos_stats.to_string(),
        dos_stats,
    })
}
