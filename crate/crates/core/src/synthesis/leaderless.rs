use serde::{Deserialize, Serialize};

use super::{
    auto_margin, dos_tolerance, gamma_rate, r_min_for, scaled_powers, transient_gain, validate_gamma1, Check,
    DesignOptions, Plant,
};
use crate::dos::{max_consecutive_losses, DoSBudget};
use crate::error::{Error, Result};
use crate::matops::{
    induced_inf_norm, kron, power_decay_certificate, spectral_norm, spectral_radius, Matrix,
};
use crate::quantizer::bits_required;
use crate::topology::{consensus_basis, laplacian, Graph};

/// Certified parameters for leaderless consensus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderlessDesign {
    pub gamma1: f64,
    pub gamma2: f64,
    pub theta0_min: f64,
    pub d0: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub zeta: f64,
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
    /// `ρ(J(1))`.
    pub rho_j1: f64,
    /// Exact `sup_p ‖J(1)^p‖/d0^p`.
    pub certificate_sup: f64,
    pub p_star: usize,
    /// `1/T + Δ/τ_D` of the budget the design was made for.
    pub load: f64,
    /// Right-hand side that `2R + 1` must reach.
    pub r_bound: f64,
    pub agents: usize,
    pub state_dim: usize,
    pub checks: Vec<Check>,
}

impl LeaderlessDesign {
    /// `C3 γ^k θ0 ζ √(C1² + Nn) σ / γ1`.
    pub fn envelope(&self, k: usize, theta0: f64, sigma: f64) -> f64 {
        let nn = (self.agents * self.state_dim) as f64;
        self.c3 * self.gamma_rate.powi(k as i32) * theta0 * self.zeta * (self.c1 * self.c1 + nn).sqrt() * sigma
            / self.gamma1
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `(G, L, H)` with `G = I⊗A − L_G⊗BK`, `L = L_G⊗BK`, `H = I⊗A + L_G⊗BK`.
pub fn closed_loop_matrices(p: &Plant, g: &Graph) -> Result<(Matrix, Matrix, Matrix)> {
    let n_agents = g.n_agents();
    let ia = kron(&Matrix::identity(n_agents), &p.a);
    let l = kron(&laplacian(g), &p.bk());
    Ok((&ia - &l, l.clone(), &ia + &l))
}

struct Model {
    n: usize,
    agents: usize,
    g: Matrix,
    l: Matrix,
    h: Matrix,
    abar: Matrix,
    uk: Matrix,
    j1_blocks: Vec<Matrix>,
}

impl Model {
    fn new(p: &Plant, graph: &Graph) -> Result<Self> {
        let basis = consensus_basis(graph)?;
        let (g, l, h) = closed_loop_matrices(p, graph)?;
        let abar = Matrix::from_blocks(&[vec![g.clone(), l.clone()], vec![-&l, h.clone()]])?;
        let bk = p.bk();
        let j1_blocks = basis.eigenvalues[1..]
            .iter()
            .map(|&lam| &p.a - &bk.scale(lam))
            .collect();
        Ok(Self {
            n: p.state_dim(),
            agents: graph.n_agents(),
            uk: kron(&basis.basis, &Matrix::identity(p.state_dim())),
            g,
            l,
            h,
            abar,
            j1_blocks,
        })
    }

    fn nn(&self) -> usize {
        self.n * self.agents
    }

    fn j1(&self) -> Matrix {
        Matrix::block_diag(&self.j1_blocks)
    }

    fn rho_j1(&self) -> Result<f64> {
        let mut rho: f64 = 0.0;
        for b in &self.j1_blocks {
            rho = rho.max(spectral_radius(b)?);
        }
        Ok(rho)
    }

    /// `J(m+1)` before division by `γ2^m`.
    fn j_raw(&self, abar_m: &Matrix) -> Matrix {
        let nn = self.nn();
        let gm = &(&self.g * &abar_m.block(0, 0, nn, nn)) + &(&self.l * &abar_m.block(nn, 0, nn, nn));
        let bar = &(&self.uk.transpose() * &gm) * &self.uk;
        bar.block(self.n, self.n, nn - self.n, nn - self.n)
    }

    /// `L(m+1)` before division by `γ2^m`.
    fn l_raw(&self, abar_m: &Matrix) -> Matrix {
        let nn = self.nn();
        &(&self.g * &abar_m.block(0, nn, nn, nn)) + &(&self.l * &abar_m.block(nn, nn, nn, nn))
    }
}

fn abar_powers(model: &Model, mmax: usize) -> Vec<Matrix> {
    let mut out = vec![Matrix::identity(model.abar.rows())];
    for m in 1..=mmax {
        let next = &out[m - 1] * &model.abar;
        out.push(next);
    }
    out
}

/// `J(m+1)`: the disagreement block of `(U⊗I)ᵀ G(m+1) (U⊗I)`.
pub fn modal_j(p: &Plant, g: &Graph, m: usize, gamma2: f64) -> Result<Matrix> {
    if !(gamma2 > 0.0) {
        return Err(Error::Parameter(format!("gamma2 must be positive, got {gamma2}")));
    }
    let model = Model::new(p, g)?;
    let abar_m = model.abar.pow(m)?;
    Ok(model.j_raw(&abar_m).scale(1.0 / gamma2.powi(m as i32)))
}

fn gamma2_from_norms(raw_norms: &[f64], c2: f64, rho: f64) -> f64 {
    raw_norms
        .iter()
        .enumerate()
        .map(|(i, &nrm)| (c2 * nrm / rho).powf(1.0 / (i + 1) as f64))
        .fold(1.0, f64::max)
}

/// Smallest `γ2 ≥ 1` with `‖J(m+1)‖ ≤ ρ(J(1))/C2` for `m = 1..=M`.
pub fn choose_gamma2(p: &Plant, g: &Graph, d0: f64, c2: f64, m_max: u64) -> Result<f64> {
    let model = Model::new(p, g)?;
    let rho = model.rho_j1()?;
    if rho == 0.0 {
        return Err(Error::Precondition("rho(J(1)) = 0 leaves the gamma2 condition undefined".into()));
    }
    if !(d0 > rho && d0 < 1.0) {
        return Err(Error::Precondition(format!("d0 = {d0} must lie in (rho(J(1)) = {rho}, 1)")));
    }
    let powers = abar_powers(&model, m_max as usize);
    let raw: Vec<f64> = powers[1..].iter().map(|a| spectral_norm(&model.j_raw(a))).collect();
    Ok(gamma2_from_norms(&raw, c2, rho))
}

/// Full leaderless pipeline.
pub fn leaderless_design(p: &Plant, graph: &Graph, budget: &DoSBudget, opts: &DesignOptions) -> Result<LeaderlessDesign> {
    let model = Model::new(p, graph)?;
    let rho = model.rho_j1()?;
    if rho >= 1.0 {
        return Err(Error::Precondition(format!(
            "rho(J(1)) = {rho:.6} >= 1: the gain K does not stabilize the disagreement modes"
        )));
    }
    if rho == 0.0 {
        return Err(Error::Precondition("rho(J(1)) = 0 leaves the gamma2 condition undefined".into()));
    }
    let load = budget.load(p.delta);
    let m_used = match opts.m {
        Some(m) => m,
        None => max_consecutive_losses(budget, p.delta)?,
    };
    let mmax = m_used as usize;

    let d0 = opts.d0.unwrap_or_else(|| auto_margin(rho));
    if !(d0 > rho && d0 < 1.0) {
        return Err(Error::Precondition(format!("d0 = {d0} must lie in (rho(J(1)) = {rho}, 1)")));
    }
    let gamma1 = opts.gamma1.unwrap_or_else(|| auto_margin(d0));
    validate_gamma1(gamma1, d0)?;

    let mut checks = Vec::new();
    let cert = power_decay_certificate(&model.j1(), d0, opts.p_check);
    let (c2, sup, p_star) = match (&cert, opts.c2) {
        (Ok(c), None) => (c.c, c.c, c.p_star),
        (Ok(c), Some(user)) => (user, c.c, c.p_star),
        (Err(e), Some(user)) => {
            checks.push(Check::new("certificate", false, format!("could not certify: {e}")));
            (user, f64::NAN, 0)
        }
        (Err(_), None) => return Err(cert.unwrap_err()),
    };
    if c2 < 1.0 {
        return Err(Error::Parameter(format!("C2 must be >= 1, got {c2}")));
    }
    if sup.is_finite() {
        checks.push(Check::new(
            "certificate",
            c2 >= sup,
            format!("C2 = {c2} vs sup_p ‖J(1)^p‖/d0^p = {sup} (attained before p = {p_star})"),
        ));
    }
    checks.push(Check::new(
        "zoom-in range",
        rho < d0 && d0 < gamma1 && gamma1 < 1.0,
        format!("rho(J(1)) = {rho} < d0 = {d0} < gamma1 = {gamma1} < 1"),
    ));

    let powers = abar_powers(&model, mmax);
    let raw_j: Vec<f64> = powers[1..].iter().map(|a| spectral_norm(&model.j_raw(a))).collect();
    let gamma2 = gamma2_from_norms(&raw_j, c2, rho);
    let worst = raw_j
        .iter()
        .enumerate()
        .map(|(i, &nrm)| nrm / gamma2.powi(i as i32 + 1))
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "gamma2 condition",
        worst <= rho / c2 + 1e-9,
        format!("max_m ‖J(m+1)‖ = {worst} vs rho(J(1))/C2 = {}", rho / c2),
    ));

    let c0 = powers
        .iter()
        .enumerate()
        .map(|(m, a)| spectral_norm(&model.l_raw(a)) / gamma2.powi(m as i32))
        .fold(0.0, f64::max);
    let nn = model.nn() as f64;
    let d = d0 / gamma1;
    let c1 = (2.0 * c2 * nn.sqrt()).max(c0 * c2 * nn.sqrt() / ((1.0 - d) * gamma1));
    let (_, zeta) = scaled_powers(&model.abar, gamma2, mmax);

    let neg_l_h = Matrix::from_blocks(&[vec![-&model.l, model.h.clone()]])?;
    let r_bound = induced_inf_norm(&neg_l_h) * zeta * (c1 * c1 + nn).sqrt() / gamma1;
    let r_min = r_min_for(r_bound);
    let levels = 2 * r_min + 1;
    checks.push(Check::new(
        "quantizer levels",
        levels as f64 >= r_bound && (r_min == 1 || ((levels - 2) as f64) < r_bound),
        format!("2R+1 = {levels} vs bound {r_bound}"),
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

    Ok(LeaderlessDesign {
        gamma1,
        gamma2,
        theta0_min: p.c_x0 * gamma1 / p.sigma,
        d0,
        c2,
        c0,
        c1,
        zeta,
        c3: transient_gain(gamma1, gamma2, budget.kappa, budget.eta, p.delta),
        gamma_rate: rate,
        r_min,
        levels,
        bits: bits_required(levels),
        dos_tolerance: tolerance,
        m_used,
        rho_j1: rho,
        certificate_sup: sup,
        p_star,
        load,
        r_bound,
        agents: model.agents,
        state_dim: model.n,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_plant(a: f64, k: f64) -> Plant {
        Plant::new(
            Matrix::diag(&[a]),
            Matrix::diag(&[1.0]),
            Matrix::diag(&[k]),
            0.1,
            1.0,
            1.0,
        )
        .unwrap()
    }

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn zero_gain_reduces_to_block_copies() {
        let p = Plant::new(
            Matrix::from_rows(&[[1.1, 0.2], [0.0, 0.9]]).unwrap(),
            Matrix::identity(2),
            Matrix::zeros(2, 2),
            0.1,
            1.0,
            1.0,
        )
        .unwrap();
        let g = path3();
        let (gm, l, h) = closed_loop_matrices(&p, &g).unwrap();
        let ia = kron(&Matrix::identity(3), &p.a);
        assert_eq!(gm, ia);
        assert_eq!(h, ia);
        assert_eq!(l.max_abs(), 0.0);
        let j1 = modal_j(&p, &g, 0, 1.0).unwrap();
        assert!(j1.max_abs_diff(&kron(&Matrix::identity(2), &p.a)) < 1e-12);
    }

    #[test]
    fn single_agent_has_no_coupling() {
        let p = scalar_plant(1.2, 0.5);
        let g = Graph::from_edges(1, &[]).unwrap();
        let (gm, l, h) = closed_loop_matrices(&p, &g).unwrap();
        assert_eq!(gm, p.a);
        assert_eq!(h, p.a);
        assert_eq!(l.max_abs(), 0.0);
    }

    #[test]
    fn modal_j_at_zero_is_diag_of_modes() {
        let p = scalar_plant(1.05, 0.4);
        let g = path3();
        // Laplacian eigenvalues of P3: 0, 1, 3
        let j1 = modal_j(&p, &g, 0, 5.0).unwrap();
        let expect = Matrix::diag(&[1.05 - 0.4, 1.05 - 1.2]);
        assert!(j1.max_abs_diff(&expect) < 1e-12, "{j1:?}");
    }

    #[test]
    fn modal_j_scales_with_gamma2() {
        let p = scalar_plant(1.05, 0.4);
        let g = path3();
        for m in 1..4 {
            let raw = modal_j(&p, &g, m, 1.0).unwrap();
            let scaled = modal_j(&p, &g, m, 3.0).unwrap();
            assert!(scaled.max_abs_diff(&raw.scale(1.0 / 3f64.powi(m as i32))) < 1e-12);
        }
    }

    #[test]
    fn gamma2_choice() {
        let p = scalar_plant(1.05, 0.4);
        let g = path3();
        let rho = 0.65f64.max((1.05f64 - 1.2).abs());
        let d0 = 0.7;
        assert_eq!(choose_gamma2(&p, &g, d0, 1.0, 0).unwrap(), 1.0);
        let mut prev = 1.0;
        for m in 1..6u64 {
            let g2 = choose_gamma2(&p, &g, d0, 1.2, m).unwrap();
            assert!(g2 >= prev);
            prev = g2;
            for k in 1..=m as usize {
                let nrm = spectral_norm(&modal_j(&p, &g, k, g2).unwrap());
                assert!(nrm <= rho / 1.2 + 1e-9);
            }
        }
    }

    #[test]
    fn unstable_modes_rejected() {
        let p = scalar_plant(1.2, 0.0);
        let err = leaderless_design(&p, &path3(), &DoSBudget::free(), &DesignOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(err.to_string().contains("rho(J(1))"));
    }

    #[test]
    fn gamma1_outside_range_rejected() {
        let p = scalar_plant(1.05, 0.4);
        let opts = DesignOptions::default().with_d0(0.7).with_gamma1(0.6);
        assert!(matches!(
            leaderless_design(&p, &path3(), &DoSBudget::free(), &opts),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn design_meets_its_own_checks() {
        let p = scalar_plant(1.05, 0.4);
        let b = DoSBudget::new(1.0, 2.0, 0.1, 40.0).unwrap();
        let d = leaderless_design(&p, &path3(), &b, &DesignOptions::default()).unwrap();
        assert!(d.all_checks_pass(), "{:#?}", d.checks);
        assert_eq!(d.levels, 2 * d.r_min + 1);
        assert!(d.levels as f64 >= d.r_bound && ((d.levels - 2) as f64) < d.r_bound);
        assert!((d.theta0_min - d.gamma1).abs() < 1e-15);
        let json = serde_json::to_value(&d).unwrap();
        for key in ["gamma1", "gamma2", "theta0_min", "d0", "C2", "C0", "C1", "zeta", "C3", "gamma_rate", "R_min", "levels", "bits", "dos_tolerance", "M_used"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn r_min_monotone_in_m_and_gamma1() {
        let p = scalar_plant(1.05, 0.4);
        let b = DoSBudget::free();
        let base = DesignOptions::default().with_d0(0.7);
        let mut prev = 0;
        for m in 0..6 {
            let d = leaderless_design(&p, &path3(), &b, &base.clone().with_gamma1(0.8).with_m(m)).unwrap();
            assert!(d.r_min >= prev);
            prev = d.r_min;
        }
        let mut prev = u64::MAX;
        for g1 in [0.72, 0.78, 0.84, 0.9, 0.96] {
            let d = leaderless_design(&p, &path3(), &b, &base.clone().with_gamma1(g1).with_m(3)).unwrap();
            assert!(d.r_min <= prev);
            prev = d.r_min;
        }
    }
}
