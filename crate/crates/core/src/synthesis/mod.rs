//! Parameter synthesis: zoom factors, quantizer resolution and DoS
//! tolerance for leaderless and leader-follower quantized consensus.

mod leader_follower;
mod leaderless;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{spectral_norm, Matrix, DEFAULT_P_CHECK};

pub use leader_follower::{lf_design, lf_matrices, lf_modal_p, LeaderFollowerDesign, LfMatrices};
pub use leaderless::{choose_gamma2, closed_loop_matrices, leaderless_design, modal_j, LeaderlessDesign};

/// Agent dynamics `x(k+1) = A x(k) + B u(k)` with gain `K`, sampling
/// period, initial-state bound and quantizer cell half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlantRepr", into = "PlantRepr")]
pub struct Plant {
    pub a: Matrix,
    pub b: Matrix,
    pub k: Matrix,
    pub delta: f64,
    pub c_x0: f64,
    pub sigma: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantRepr {
    #[serde(rename = "A")]
    a: Matrix,
    #[serde(rename = "B")]
    b: Matrix,
    #[serde(rename = "K")]
    k: Matrix,
    delta: f64,
    c_x0: f64,
    sigma: f64,
}

impl TryFrom<PlantRepr> for Plant {
    type Error = Error;
    fn try_from(r: PlantRepr) -> Result<Self> {
        Plant::new(r.a, r.b, r.k, r.delta, r.c_x0, r.sigma)
    }
}

impl From<Plant> for PlantRepr {
    fn from(p: Plant) -> Self {
        Self {
            a: p.a,
            b: p.b,
            k: p.k,
            delta: p.delta,
            c_x0: p.c_x0,
            sigma: p.sigma,
        }
    }
}

impl Plant {
    pub fn new(a: Matrix, b: Matrix, k: Matrix, delta: f64, c_x0: f64, sigma: f64) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() {
            return Err(Error::Dimension(format!("A must be square, got {}x{}", a.rows(), a.cols())));
        }
        if b.rows() != n {
            return Err(Error::Dimension(format!("B has {} rows, A is {n}x{n}", b.rows())));
        }
        if k.rows() != b.cols() || k.cols() != n {
            return Err(Error::Dimension(format!(
                "K must be {}x{n}, got {}x{}",
                b.cols(),
                k.rows(),
                k.cols()
            )));
        }
        for (name, v) in [("delta", delta), ("c_x0", c_x0), ("sigma", sigma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { a, b, k, delta, c_x0, sigma })
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn bk(&self) -> Matrix {
        &self.b * &self.k
    }
}

/// Knobs for a synthesis run. `None` selects the deterministic defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignOptions {
    #[serde(default)]
    pub gamma1: Option<f64>,
    #[serde(default)]
    pub d0: Option<f64>,
    /// Replaces the consecutive-loss bound derived from the budget.
    #[serde(default, rename = "M")]
    pub m: Option<u64>,
    /// Replaces the certificate constant (`C2` or `C̃4`) by a given value.
    #[serde(default, rename = "C2")]
    pub c2: Option<f64>,
    #[serde(default = "default_p_check")]
    pub p_check: usize,
}

fn default_p_check() -> usize {
    DEFAULT_P_CHECK
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            gamma1: None,
            d0: None,
            m: None,
            c2: None,
            p_check: DEFAULT_P_CHECK,
        }
    }
}

impl DesignOptions {
    pub fn with_gamma1(mut self, g: f64) -> Self {
        self.gamma1 = Some(g);
        self
    }

    pub fn with_d0(mut self, d0: f64) -> Self {
        self.d0 = Some(d0);
        self
    }

    pub fn with_m(mut self, m: u64) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_c2(mut self, c: f64) -> Self {
        self.c2 = Some(c);
        self
    }
}

/// One machine-checked inequality of a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Either design, tagged by `kind` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignReport {
    Leaderless(LeaderlessDesign),
    LeaderFollower(LeaderFollowerDesign),
}

impl DesignReport {
    pub fn gamma1(&self) -> f64 {
        match self {
            Self::Leaderless(d) => d.gamma1,
            Self::LeaderFollower(d) => d.gamma1,
        }
    }

    pub fn gamma2(&self) -> f64 {
        match self {
            Self::Leaderless(d) => d.gamma2,
            Self::LeaderFollower(d) => d.gamma2,
        }
    }

    pub fn r_min(&self) -> u64 {
        match self {
            Self::Leaderless(d) => d.r_min,
            Self::LeaderFollower(d) => d.r_min,
        }
    }

    pub fn theta0_min(&self) -> f64 {
        match self {
            Self::Leaderless(d) => d.theta0_min,
            Self::LeaderFollower(d) => d.theta0_min,
        }
    }

    pub fn dos_tolerance(&self) -> f64 {
        match self {
            Self::Leaderless(d) => d.dos_tolerance,
            Self::LeaderFollower(d) => d.dos_tolerance,
        }
    }

    pub fn checks(&self) -> &[Check] {
        match self {
            Self::Leaderless(d) => &d.checks,
            Self::LeaderFollower(d) => &d.checks,
        }
    }

    /// Certified bound on the consensus error at step `k`.
    pub fn envelope(&self, k: usize, theta0: f64, sigma: f64) -> f64 {
        match self {
            Self::Leaderless(d) => d.envelope(k, theta0, sigma),
            Self::LeaderFollower(d) => d.envelope(k, theta0, sigma),
        }
    }
}

/// Largest `1/T + Δ/τ_D` for which the zoom factors still contract:
/// `−ln γ1 / (ln γ2 − ln γ1)`.
pub fn dos_tolerance(gamma1: f64, gamma2: f64) -> f64 {
    -gamma1.ln() / (gamma2.ln() - gamma1.ln())
}

/// Average per-step contraction `γ1^(1−f) γ2^f` of `θ` under attack load `f`.
pub fn gamma_rate(gamma1: f64, gamma2: f64, load: f64) -> f64 {
    gamma1.powf(1.0 - load) * gamma2.powf(load)
}

/// `(γ2/γ1)^((κ+ηΔ)/Δ)`, the transient allowance of the attack budget.
pub fn transient_gain(gamma1: f64, gamma2: f64, kappa: f64, eta: f64, delta: f64) -> f64 {
    (gamma2 / gamma1).powf((kappa + eta * delta) / delta)
}

/// Smallest `R ≥ 1` with `2R + 1 ≥ bound`.
pub fn r_min_for(bound: f64) -> u64 {
    let r = ((bound - 1.0) / 2.0).ceil();
    if r >= 1.0 {
        r as u64
    } else {
        1
    }
}

fn auto_margin(lower: f64) -> f64 {
    lower + 0.02 * (1.0 - lower)
}

/// Maximum over `m = 0..=mmax` of `‖X^m‖` for `X = a/γ2`, returning the
/// powers `a^m` as well for reuse.
fn scaled_powers(a: &Matrix, gamma2: f64, mmax: usize) -> (Vec<Matrix>, f64) {
    let mut powers = Vec::with_capacity(mmax + 1);
    powers.push(Matrix::identity(a.rows()));
    for m in 1..=mmax {
        let next = &powers[m - 1] * a;
        powers.push(next);
    }
    let zeta = powers
        .iter()
        .enumerate()
        .map(|(m, p)| spectral_norm(p) / gamma2.powi(m as i32))
        .fold(0.0, f64::max);
    (powers, zeta)
}

fn validate_gamma1(gamma1: f64, d0: f64) -> Result<()> {
    if !(gamma1 > d0 && gamma1 < 1.0) {
        return Err(Error::Precondition(format!("gamma1 = {gamma1} must lie in (d0 = {d0}, 1)")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_examples() {
        assert!((dos_tolerance(0.8, 6.7244) - 0.1048).abs() < 1e-3);
        assert!((dos_tolerance(0.965, 7.96) - 0.0169).abs() < 5e-4);
        assert!((dos_tolerance(0.5, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn r_min_rounding() {
        assert_eq!(r_min_for(10222.0), 5111);
        assert_eq!(r_min_for(10223.0), 5111);
        assert_eq!(r_min_for(10223.5), 5112);
        assert_eq!(r_min_for(0.2), 1);
    }

    #[test]
    fn rate_contracts_iff_within_tolerance() {
        for g1 in [0.3, 0.6, 0.9, 0.99] {
            for g2 in [1.01, 1.5, 4.0, 20.0] {
                let tol = dos_tolerance(g1, g2);
                assert!(tol > 0.0 && tol < 1.0);
                for i in 0..200 {
                    let load = i as f64 / 200.0;
                    if (load - tol).abs() < 1e-9 {
                        continue;
                    }
                    assert_eq!(gamma_rate(g1, g2, load) < 1.0, load < tol, "g1={g1} g2={g2} load={load}");
                }
            }
        }
    }

    #[test]
    fn tolerance_monotonicity() {
        let g1s = [0.5, 0.6, 0.7, 0.8, 0.9];
        let g2s = [1.1, 2.0, 3.0, 7.0];
        for &g2 in &g2s {
            // a larger gamma1 leaves less room for outages
            for w in g1s.windows(2) {
                assert!(dos_tolerance(w[0], g2) > dos_tolerance(w[1], g2));
            }
        }
        for &g1 in &g1s {
            for w in g2s.windows(2) {
                assert!(dos_tolerance(g1, w[0]) > dos_tolerance(g1, w[1]));
            }
        }
    }

    #[test]
    fn plant_dimension_checks() {
        let a = Matrix::identity(2);
        let b = Matrix::zeros(2, 1);
        assert!(Plant::new(a.clone(), b.clone(), Matrix::zeros(1, 2), 0.1, 1.0, 1.0).is_ok());
        assert!(Plant::new(a.clone(), b.clone(), Matrix::zeros(2, 2), 0.1, 1.0, 1.0).is_err());
        assert!(Plant::new(a.clone(), Matrix::zeros(3, 1), Matrix::zeros(1, 2), 0.1, 1.0, 1.0).is_err());
        assert!(Plant::new(a, b, Matrix::zeros(1, 2), 0.1, 0.0, 1.0).is_err());
    }
}
