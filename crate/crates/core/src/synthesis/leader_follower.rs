use serde::{Deserialize, Serialize};

use super::{
    auto_margin, dos_tolerance, gamma_rate, r_min_for, scaled_powers, transient_gain, validate_gamma1, Check,
    DesignOptions, Plant,
};
use crate::dos::{max_consecutive_losses, DoSBudget};
use crate::error::{Error, Result};
use crate::matops::{induced_inf_norm, kron, power_decay_certificate, spectral_norm, spectral_radius, Matrix};
use crate::quantizer::bits_required;
use crate::topology::{grounded_basis, laplacian, Graph, LeaderLinks};

/// Certified parameters for leader-follower consensus. Tilde constants
/// carry a `t` suffix in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderFollowerDesign {
    pub gamma1: f64,
    pub gamma2: f64,
    pub theta0_min: f64,
    pub d0t: f64,
    #[serde(rename = "C4t")]
    pub c4t: f64,
    #[serde(rename = "C0t")]
    pub c0t: f64,
    #[serde(rename = "C1t")]
    pub c1t: f64,
    #[serde(rename = "C2t")]
    pub c2t: f64,
    #[serde(rename = "C3t")]
    pub c3t: f64,
    /// `max(ζ̃1, ζ̃2)`.
    pub zeta_t: f64,
    pub zeta1_t: f64,
    pub zeta2_t: f64,
    /// Transient allowance `(γ2/γ1)^((κ+ηΔ)/Δ)` of the envelope.
    #[serde(rename = "C3")]
    pub c3: f64,
    pub gamma_rate: f64,
    #[serde(rename = "R_min")]
    pub r_min: u64,
    pub levels: u64,
    pub bits: u32,
    pub dos_tolerance: f64,
    #[serde(rename = "M_used")]
    pub m_used: u64,
    /// `ρ(P̃(1))`.
    pub rho_p1: f64,
    pub certificate_sup: f64,
    pub p_star: usize,
    pub load: f64,
    pub r_bound: f64,
    pub agents: usize,
    pub state_dim: usize,
    pub checks: Vec<Check>,
}

impl LeaderFollowerDesign {
    /// `C3 γ^k θ0 ζ̃1 √(C̃3² + 2Nn) σ / γ1`.
    pub fn envelope(&self, k: usize, theta0: f64, sigma: f64) -> f64 {
        let nn = (self.agents * self.state_dim) as f64;
        self.c3 * self.gamma_rate.powi(k as i32) * theta0 * self.zeta1_t * (self.c3t * self.c3t + 2.0 * nn).sqrt()
            * sigma
            / self.gamma1
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `(Π, Σ, Φ, Ω)` of the follower error dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct LfMatrices {
    pub pi: Matrix,
    pub sigma: Matrix,
    pub phi: Matrix,
    pub omega: Matrix,
}

fn lf_from_pinning(p: &Plant, g: &Graph, d: &Matrix) -> LfMatrices {
    let n_agents = g.n_agents();
    let bk = p.bk();
    let ia = kron(&Matrix::identity(n_agents), &p.a);
    let sigma = kron(&(&laplacian(g) + d), &bk);
    LfMatrices {
        pi: &ia - &sigma,
        omega: &ia + &sigma,
        phi: kron(d, &bk),
        sigma,
    }
}

pub fn lf_matrices(p: &Plant, g: &Graph, d: &LeaderLinks) -> Result<LfMatrices> {
    if d.len() != g.n_agents() {
        return Err(Error::Dimension(format!("{} leader gains for {} agents", d.len(), g.n_agents())));
    }
    Ok(lf_from_pinning(p, g, &d.matrix()))
}

struct Model {
    n: usize,
    agents: usize,
    mats: LfMatrices,
    a: Matrix,
    atilde: Matrix,
    psik: Matrix,
    p1_blocks: Vec<Matrix>,
}

impl Model {
    fn new(p: &Plant, g: &Graph, d: &LeaderLinks) -> Result<Self> {
        let mats = lf_matrices(p, g, d)?;
        let basis = grounded_basis(g, d)?;
        let top = basis.eigenvalues.last().map_or(1.0, |v| v.abs().max(1.0));
        if basis.eigenvalues[0] <= 1e-9 * top {
            return Err(Error::Graph(format!(
                "the leader does not reach every follower (smallest eigenvalue of L_G + D is {:e})",
                basis.eigenvalues[0]
            )));
        }
        let nn = p.state_dim() * g.n_agents();
        let zero = Matrix::zeros(nn, nn);
        let ia = kron(&Matrix::identity(g.n_agents()), &p.a);
        let atilde = Matrix::from_blocks(&[
            vec![mats.pi.clone(), mats.sigma.clone(), -&mats.phi],
            vec![-&mats.sigma, mats.omega.clone(), -&mats.phi],
            vec![zero.clone(), zero, ia],
        ])?;
        let bk = p.bk();
        Ok(Self {
            n: p.state_dim(),
            agents: g.n_agents(),
            a: p.a.clone(),
            psik: kron(&basis.basis, &Matrix::identity(p.state_dim())),
            p1_blocks: basis.eigenvalues.iter().map(|&lam| &p.a - &bk.scale(lam)).collect(),
            mats,
            atilde,
        })
    }

    fn nn(&self) -> usize {
        self.n * self.agents
    }

    fn rho_p1(&self) -> Result<f64> {
        let mut rho: f64 = 0.0;
        for b in &self.p1_blocks {
            rho = rho.max(spectral_radius(b)?);
        }
        Ok(rho)
    }

    fn head(&self, at_m: &Matrix, col: usize) -> Matrix {
        let nn = self.nn();
        &(&self.mats.pi * &at_m.block(0, col * nn, nn, nn)) + &(&self.mats.sigma * &at_m.block(nn, col * nn, nn, nn))
    }

    /// `P̃(m+1)` before division by `γ2^m`.
    fn p_raw(&self, at_m: &Matrix) -> Matrix {
        &(&self.psik.transpose() * &self.head(at_m, 0)) * &self.psik
    }

    fn s_raw(&self, at_m: &Matrix) -> Matrix {
        self.head(at_m, 1)
    }

    fn z_raw(&self, at_m: &Matrix, a_m: &Matrix) -> Matrix {
        let lead = kron(&Matrix::identity(self.agents), a_m);
        &self.head(at_m, 2) - &(&self.mats.phi * &lead)
    }
}

/// `P̃(m+1) = (Ψ̃⊗I)ᵀ P(m+1) (Ψ̃⊗I)`, where `Ψ̃` diagonalizes `L_G + D`.
pub fn lf_modal_p(p: &Plant, g: &Graph, d: &LeaderLinks, m: usize, gamma2: f64) -> Result<Matrix> {
    if !(gamma2 > 0.0) {
        return Err(Error::Parameter(format!("gamma2 must be positive, got {gamma2}")));
    }
    let model = Model::new(p, g, d)?;
    let at_m = model.atilde.pow(m)?;
    Ok(model.p_raw(&at_m).scale(1.0 / gamma2.powi(m as i32)))
}

/// Full leader-follower pipeline.
pub fn lf_design(
    p: &Plant,
    graph: &Graph,
    leader: &LeaderLinks,
    budget: &DoSBudget,
    opts: &DesignOptions,
) -> Result<LeaderFollowerDesign> {
    let model = Model::new(p, graph, leader)?;
    let rho = model.rho_p1()?;
    if rho >= 1.0 {
        return Err(Error::Precondition(format!(
            "rho(P~(1)) = {rho:.6} >= 1: the gain K does not stabilize the follower modes"
        )));
    }
    if rho == 0.0 {
        return Err(Error::Precondition("rho(P~(1)) = 0 leaves the gamma2 condition undefined".into()));
    }
    let load = budget.load(p.delta);
    let m_used = match opts.m {
        Some(m) => m,
        None => max_consecutive_losses(budget, p.delta)?,
    };
    let mmax = m_used as usize;

    let d0 = opts.d0.unwrap_or_else(|| auto_margin(rho));
    if !(d0 > rho && d0 < 1.0) {
        return Err(Error::Precondition(format!("d0 = {d0} must lie in (rho(P~(1)) = {rho}, 1)")));
    }
    let gamma1 = opts.gamma1.unwrap_or_else(|| auto_margin(d0));
    validate_gamma1(gamma1, d0)?;

    let mut checks = Vec::new();
    let cert = power_decay_certificate(&Matrix::block_diag(&model.p1_blocks), d0, opts.p_check);
    let (c4, sup, p_star) = match (&cert, opts.c2) {
        (Ok(c), None) => (c.c, c.c, c.p_star),
        (Ok(c), Some(user)) => (user, c.c, c.p_star),
        (Err(e), Some(user)) => {
            checks.push(Check::new("certificate", false, format!("could not certify: {e}")));
            (user, f64::NAN, 0)
        }
        (Err(_), None) => return Err(cert.unwrap_err()),
    };
    if c4 < 1.0 {
        return Err(Error::Parameter(format!("C4 must be >= 1, got {c4}")));
    }
    if sup.is_finite() {
        checks.push(Check::new(
            "certificate",
            c4 >= sup,
            format!("C4 = {c4} vs sup_p ‖P~(1)^p‖/d0^p = {sup} (attained before p = {p_star})"),
        ));
    }
    checks.push(Check::new(
        "zoom-in range",
        rho < d0 && d0 < gamma1 && gamma1 < 1.0,
        format!("rho(P~(1)) = {rho} < d0 = {d0} < gamma1 = {gamma1} < 1"),
    ));

    let mut at_powers = vec![Matrix::identity(model.atilde.rows())];
    for m in 1..=mmax {
        let next = &at_powers[m - 1] * &model.atilde;
        at_powers.push(next);
    }
    let raw_p: Vec<f64> = at_powers[1..].iter().map(|a| spectral_norm(&model.p_raw(a))).collect();
    let gamma2 = raw_p
        .iter()
        .enumerate()
        .map(|(i, &nrm)| (c4 * nrm / rho).powf(1.0 / (i + 1) as f64))
        .fold(1.0, f64::max);
    let worst = raw_p
        .iter()
        .enumerate()
        .map(|(i, &nrm)| nrm / gamma2.powi(i as i32 + 1))
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "gamma2 condition",
        worst <= rho / c4 + 1e-9,
        format!("max_m ‖P~(m+1)‖ = {worst} vs rho(P~(1))/C4 = {}", rho / c4),
    ));

    let (a_powers, zeta2) = scaled_powers(&model.a, gamma2, mmax);
    let mut c0: f64 = 0.0;
    let mut c1: f64 = 0.0;
    for (m, (at, a)) in at_powers.iter().zip(&a_powers).enumerate() {
        let scale = gamma2.powi(m as i32);
        c0 = c0.max(spectral_norm(&model.s_raw(at)) / scale);
        c1 = c1.max(spectral_norm(&model.z_raw(at, a)) / scale);
    }
    let c2 = c0 + c1;
    let nn = model.nn() as f64;
    let d = d0 / gamma1;
    let c3t = (2.0 * c4 * nn.sqrt()).max(c2 * c4 * nn.sqrt() / ((1.0 - d) * gamma1));
    let (_, zeta1) = scaled_powers(&model.atilde, gamma2, mmax);
    let zeta = zeta1.max(zeta2);

    let row = Matrix::from_blocks(&[vec![-&model.mats.sigma, model.mats.omega.clone(), -&model.mats.phi]])?;
    let r_bound = zeta * induced_inf_norm(&row) * (c3t * c3t + 2.0 * nn).sqrt() / gamma1;
    let r_min = r_min_for(r_bound);
    let levels = 2 * r_min + 1;
    checks.push(Check::new(
        "quantizer levels",
        levels as f64 >= r_bound && (r_min == 1 || ((levels - 2) as f64) < r_bound),
        format!("2R+1 = {levels} vs bound {r_bound}"),
    ));
    let leader_bound = zeta2 * induced_inf_norm(&model.a) / gamma1;
    checks.push(Check::new(
        "leader quantizer range",
        leader_bound <= levels as f64,
        format!("zeta2 ‖A‖_inf / gamma1 = {leader_bound} vs 2R+1 = {levels}"),
    ));

    let tolerance = dos_tolerance(gamma1, gamma2);
    let rate = gamma_rate(gamma1, gamma2, load);
    checks.push(Check::new(
        "DoS tolerance",
        load < tolerance,
        format!("1/T + Delta/tau_D = {load} vs tolerance {tolerance}"),
    ));
    checks.push(Check::new(
        "contraction",
        (rate < 1.0) == (load < tolerance),
        format!("gamma = {rate}"),
    ));

    Ok(LeaderFollowerDesign {
        gamma1,
        gamma2,
        theta0_min: p.c_x0 * gamma1 / p.sigma,
        d0t: d0,
        c4t: c4,
        c0t: c0,
        c1t: c1,
        c2t: c2,
        c3t,
        zeta_t: zeta,
        zeta1_t: zeta1,
        zeta2_t: zeta2,
        c3: transient_gain(gamma1, gamma2, budget.kappa, budget.eta, p.delta),
        gamma_rate: rate,
        r_min,
        levels,
        bits: bits_required(levels),
        dos_tolerance: tolerance,
        m_used,
        rho_p1: rho,
        certificate_sup: sup,
        p_star,
        load,
        r_bound,
        agents: model.agents,
        state_dim: model.n,
        checks,
    })
}
