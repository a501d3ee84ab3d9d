//! Deterministic Denial-of-Service model: attack budgets, interval signals,
//! their verification, sampled transmission outcomes and a seeded generator.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency `(η, τ_D)` and duration `(κ, T)` bounds on an attacker.
///
/// `tau_d` and `t` may be infinite (no attack); JSON encodes that as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BudgetRepr", into = "BudgetRepr")]
pub struct DoSBudget {
    pub eta: f64,
    pub tau_d: f64,
    pub kappa: f64,
    pub t: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetRepr {
    eta: f64,
    #[serde(with = "inf_as_null")]
    tau_d: f64,
    kappa: f64,
    #[serde(rename = "T", with = "inf_as_null")]
    t: f64,
}

impl TryFrom<BudgetRepr> for DoSBudget {
    type Error = Error;
    fn try_from(r: BudgetRepr) -> Result<Self> {
        Self::new(r.eta, r.tau_d, r.kappa, r.t)
    }
}

impl From<DoSBudget> for BudgetRepr {
    fn from(b: DoSBudget) -> Self {
        Self {
            eta: b.eta,
            tau_d: b.tau_d,
            kappa: b.kappa,
            t: b.t,
        }
    }
}

impl DoSBudget {
    pub fn new(eta: f64, tau_d: f64, kappa: f64, t: f64) -> Result<Self> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(eta) {
            return Err(Error::Parameter(format!("eta must be finite and >= 0, got {eta}")));
        }
        if !finite_nonneg(kappa) {
            return Err(Error::Parameter(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        if !(tau_d > 0.0) {
            return Err(Error::Parameter(format!("tau_D must be > 0, got {tau_d}")));
        }
        if !(t > 1.0) {
            return Err(Error::Parameter(format!("T must be > 1, got {t}")));
        }
        Ok(Self { eta, tau_d, kappa, t })
    }

    /// No attacks at all: `η = κ = 0`, `τ_D = T = ∞`.
    pub fn free() -> Self {
        Self {
            eta: 0.0,
            tau_d: f64::INFINITY,
            kappa: 0.0,
            t: f64::INFINITY,
        }
    }

    /// `1/T + Δ/τ_D`, the share of the timeline the attacker may claim.
    pub fn load(&self, delta: f64) -> f64 {
        1.0 / self.t + delta / self.tau_d
    }

    pub fn is_feasible(&self, delta: f64) -> bool {
        self.load(delta) < 1.0
    }

    fn check(&self, delta: f64) -> Result<f64> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Parameter(format!("sampling period must be > 0, got {delta}")));
        }
        let load = self.load(delta);
        if load >= 1.0 {
            return Err(Error::InfeasibleBudget { load });
        }
        Ok(load)
    }
}

/// Worst-case number of consecutive failed transmissions.
pub fn max_consecutive_losses(b: &DoSBudget, delta: f64) -> Result<u64> {
    let load = b.check(delta)?;
    let raw = (b.kappa + b.eta * delta) / (1.0 - load) / delta;
    // round up through representation error so the bound stays conservative
    Ok((raw + 1e-9 * raw.max(1.0)).floor() as u64)
}

/// Real-valued lower bound on successes among the attempts at `Δ, 2Δ, …, kΔ`.
pub fn min_successes_raw(b: &DoSBudget, delta: f64, k: u64) -> Result<f64> {
    let load = b.check(delta)?;
    Ok((1.0 - load) * k as f64 - (b.kappa + b.eta * delta) / delta)
}

/// Guaranteed success count, clamped at zero.
pub fn min_successes(b: &DoSBudget, delta: f64, k: u64) -> Result<u64> {
    let raw = min_successes_raw(b, delta, k)?;
    let v = (raw - 1e-9 * raw.abs().max(1.0)).ceil();
    Ok(if v > 0.0 { v as u64 } else { 0 })
}

/// Ordered, disjoint attack intervals `{h} ∪ [h, h + τ)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "SignalRepr", into = "SignalRepr")]
pub struct DoSSignal {
    intervals: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalRepr {
    intervals: Vec<(f64, f64)>,
}

impl TryFrom<SignalRepr> for DoSSignal {
    type Error = Error;
    fn try_from(r: SignalRepr) -> Result<Self> {
        Self::new(r.intervals)
    }
}

impl From<DoSSignal> for SignalRepr {
    fn from(s: DoSSignal) -> Self {
        Self { intervals: s.intervals }
    }
}

impl DoSSignal {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for (q, &(h, tau)) in intervals.iter().enumerate() {
            if !(h.is_finite() && h >= 0.0 && tau.is_finite() && tau >= 0.0) {
                return Err(Error::Parameter(format!("interval {q} = [{h}, {tau}] must be finite and nonnegative")));
            }
            if q > 0 {
                let (ph, pt) = intervals[q - 1];
                if !(ph + pt < h) {
                    return Err(Error::Parameter(format!(
                        "interval {q} starting at {h} overlaps or precedes the previous one ending at {}",
                        ph + pt
                    )));
                }
            }
        }
        Ok(Self { intervals })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Whether the network is under attack at time `t`.
    pub fn contains(&self, t: f64) -> bool {
        let idx = self.intervals.partition_point(|&(h, _)| h <= t);
        idx > 0 && {
            let (h, tau) = self.intervals[idx - 1];
            t == h || t < h + tau
        }
    }

    /// Total attacked time `|Ξ(0, horizon)|`.
    pub fn total_duration(&self, horizon: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(h, tau)| ((h + tau).min(horizon) - h).max(0.0))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assumption {
    Frequency,
    Duration,
}

/// A concrete window `[tau, t]` on which the budget is exceeded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub assumption: Assumption,
    pub tau: f64,
    pub t: f64,
    pub observed: f64,
    pub allowed: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.assumption {
            Assumption::Frequency => write!(
                f,
                "n({}, {}) = {} > eta + (t - tau)/tau_D = {}",
                self.tau, self.t, self.observed, self.allowed
            ),
            Assumption::Duration => write!(
                f,
                "|Xi({}, {})| = {} > kappa + (t - tau)/T = {}",
                self.tau, self.t, self.observed, self.allowed
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail(Violation),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Checks both budget assumptions on `(0, horizon]`.
///
/// The attack count only jumps at interval starts and the attacked measure
/// only grows inside intervals, so windows from a start `h_i` to a start
/// `h_j` (frequency) or an end `h_j + τ_j` (duration) are the only ones
/// that can be tight.
pub fn verify_signal(s: &DoSSignal, b: &DoSBudget, horizon: f64) -> Verdict {
    for j in 0..s.intervals.len() {
        if let Some(v) = violation_ending_at(&s.intervals, j, b, horizon) {
            return Verdict::Fail(v);
        }
    }
    Verdict::Pass
}

fn violation_ending_at(iv: &[(f64, f64)], j: usize, b: &DoSBudget, horizon: f64) -> Option<Violation> {
    let (hj, tj) = iv[j];
    let end = (hj + tj).min(horizon);
    let mut measure = 0.0;
    for i in (0..=j).rev() {
        let (hi, ti) = iv[i];
        measure += if i == j { end - hj } else { ti };
        let count = (j - i + 1) as f64;
        let allowed = b.eta + (hj - hi) / b.tau_d;
        if count > allowed {
            return Some(Violation {
                assumption: Assumption::Frequency,
                tau: hi,
                t: hj,
                observed: count,
                allowed,
            });
        }
        let allowed = b.kappa + (end - hi) / b.t;
        if measure > allowed {
            return Some(Violation {
                assumption: Assumption::Duration,
                tau: hi,
                t: end,
                observed: measure,
                allowed,
            });
        }
    }
    None
}

/// Transmission outcomes at `kΔ` for `k = 1..=k_max`; `true` means success.
pub fn outcomes(s: &DoSSignal, delta: f64, k_max: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(k_max);
    let mut q = 0;
    for k in 1..=k_max {
        let t = k as f64 * delta;
        while q < s.intervals.len() && {
            let (h, tau) = s.intervals[q];
            t >= h + tau && t != h
        } {
            q += 1;
        }
        let hit = q < s.intervals.len() && {
            let (h, tau) = s.intervals[q];
            t == h || (t >= h && t < h + tau)
        };
        out.push(!hit);
    }
    out
}

/// Random signal on `[0, horizon]` that satisfies `b`, fully determined by
/// `seed`.
///
/// Gaps between attacks are exponential with mean `τ_D`; durations are
/// exponential with mean `1.5·τ_D/T`. A candidate that breaks the budget
/// is halved until it fits, reduced to a pulse, or dropped.
pub fn generate(b: &DoSBudget, horizon: f64, seed: u64) -> DoSSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    if !(horizon > 0.0) || (b.eta < 1.0 && b.tau_d.is_infinite()) {
        return DoSSignal { intervals };
    }
    let mean_gap = if b.tau_d.is_finite() { b.tau_d } else { horizon };
    let mean_dur = if b.t.is_finite() { 1.5 * mean_gap / b.t } else { b.kappa.max(mean_gap / 4.0) };
    let gap = Exp::new(1.0 / mean_gap).expect("positive rate");
    let dur = Exp::new(1.0 / mean_dur).expect("positive rate");

    let mut cursor = 0.0;
    loop {
        let h = cursor + gap.sample(&mut rng);
        if h > horizon {
            break;
        }
        if h <= cursor {
            continue;
        }
        let mut tau = dur.sample(&mut rng).min(horizon - h);
        cursor = h;
        for _ in 0..64 {
            intervals.push((h, tau));
            if violation_ending_at(&intervals, intervals.len() - 1, b, horizon).is_none() {
                cursor = h + tau;
                break;
            }
            intervals.pop();
            if tau == 0.0 {
                break;
            }
            tau = if tau < 1e-12 { 0.0 } else { tau / 2.0 };
        }
        if cursor >= horizon {
            break;
        }
    }
    DoSSignal { intervals }
}

/// Empirical attack statistics over `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoSStats {
    pub horizon: f64,
    /// `|Ξ(0, horizon)|` in seconds.
    pub duration: f64,
    /// `n(0, horizon)`.
    pub transitions: u64,
    /// `horizon / n`; `null` when there are no attacks.
    #[serde(with = "inf_as_null")]
    pub implied_tau_d: f64,
    /// `horizon / |Ξ|`; `null` when there are no attacks.
    #[serde(with = "inf_as_null")]
    pub implied_t: f64,
}

impl DoSStats {
    fn build(horizon: f64, duration: f64, transitions: u64) -> Self {
        let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::INFINITY };
        Self {
            horizon,
            duration,
            transitions,
            implied_tau_d: ratio(horizon, transitions as f64),
            implied_t: ratio(horizon, duration),
        }
    }

    pub fn from_signal(s: &DoSSignal, horizon: f64) -> Self {
        let n = s.intervals.iter().filter(|&&(h, _)| h <= horizon).count() as u64;
        Self::build(horizon, s.total_duration(horizon), n)
    }

    /// Counts from sampled outcomes: each failed attempt stands for `Δ`
    /// seconds of attack and each run of failures for one transition.
    pub fn from_outcomes(success: &[bool], delta: f64) -> Self {
        let failures = success.iter().filter(|s| !**s).count();
        let runs = success
            .iter()
            .enumerate()
            .filter(|&(k, s)| !*s && (k == 0 || success[k - 1]))
            .count() as u64;
        Self::build(success.len() as f64 * delta, failures as f64 * delta, runs)
    }
}

impl fmt::Display for DoSStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = fmt_num(self.horizon);
        write!(
            f,
            "|Ξ(0,{h})| = {} s and n(0,{h}) = {}",
            fmt_num(self.duration),
            self.transitions
        )?;
        if self.transitions > 0 {
            write!(
                f,
                ", i.e. τ_D ≈ {:.2} and T ≈ {:.2}",
                self.implied_tau_d, self.implied_t
            )?;
        }
        Ok(())
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Serializes infinite floats as JSON `null` and back.
pub(crate) mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
