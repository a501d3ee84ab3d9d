//! Replays each simulated step through the compact error recursions and
//! compares the prediction with the directly simulated quantities.
//!
//! Leaderless runs use the leader-follower form with `Π = G`, `Σ = L`,
//! `Ω = H` and no `Φ` terms.

use super::{apply_blockwise, Consistency, SimConfig, CONSISTENCY_TOL};
use crate::error::Result;
use crate::matops::{induced_inf_norm, norm_inf, Matrix};
use crate::synthesis::{closed_loop_matrices, lf_matrices};

pub(super) struct Snapshot<'a> {
    pub delta: &'a [f64],
    pub e: &'a [f64],
    pub e0: Option<&'a [f64]>,
    pub theta: f64,
}

pub(super) struct Transmission<'a> {
    pub success: bool,
    pub overflow: bool,
    pub qarg: &'a [f64],
    pub qarg0: Option<&'a [f64]>,
    pub qout: Option<&'a [f64]>,
    pub qout0: Option<&'a [f64]>,
    /// Magnitude of the raw states the direct quantities were formed from.
    pub x_scale: f64,
}

struct Op {
    m: Matrix,
    norm: f64,
}

impl Op {
    fn new(m: Matrix) -> Self {
        Self {
            norm: induced_inf_norm(&m),
            m,
        }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.m.mul_vec(v)
    }

    fn bound(&self, v: &[f64]) -> f64 {
        self.norm * norm_inf(v)
    }
}

pub(super) struct Recursions {
    pi: Op,
    sigma: Op,
    omega: Op,
    phi: Option<Op>,
    a: Matrix,
    a_norm: f64,
    gamma1: f64,
    gamma2: f64,
    sigma_q: f64,
}

fn lincomb(terms: &[(f64, &[f64])]) -> Vec<f64> {
    let len = terms[0].1.len();
    (0..len).map(|i| terms.iter().map(|(c, v)| c * v[i]).sum()).collect()
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

fn tile(v: &[f64], times: usize) -> Vec<f64> {
    v.repeat(times)
}

impl Recursions {
    pub fn new(c: &SimConfig) -> Result<Self> {
        let p = &c.plant;
        let (pi, sigma, omega, phi) = match &c.leader {
            Some(l) => {
                let m = lf_matrices(p, &c.graph, &l.links)?;
                (m.pi, m.sigma, m.omega, Some(Op::new(m.phi)))
            }
            None => {
                let (g, l, h) = closed_loop_matrices(p, &c.graph)?;
                (g, l, h, None)
            }
        };
        Ok(Self {
            pi: Op::new(pi),
            sigma: Op::new(sigma),
            omega: Op::new(omega),
            phi,
            a_norm: induced_inf_norm(&p.a),
            a: p.a.clone(),
            gamma1: c.design.gamma1(),
            gamma2: c.design.gamma2(),
            sigma_q: p.sigma,
        })
    }

    fn record(cons: &mut Consistency, k: usize, pred: &[f64], direct: &[f64], scale: f64) {
        let diff = pred.iter().zip(direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = scale.max(norm_inf(pred)).max(norm_inf(direct));
        let rel = if diff == 0.0 {
            0.0
        } else if scale > 0.0 {
            diff / scale
        } else {
            f64::INFINITY
        };
        if rel.is_nan() || rel > CONSISTENCY_TOL {
            cons.failures += 1;
            cons.first_failure.get_or_insert(k);
        }
        if rel > cons.max_rel_error || rel.is_nan() {
            cons.max_rel_error = rel;
        }
    }

    pub fn step(&self, cons: &mut Consistency, k: usize, prev: &Snapshot, cur: &Snapshot, tx: &Transmission) {
        cons.steps_checked += 1;
        let agents = prev.e.len() / self.a.rows();
        let gamma = if tx.success { self.gamma1 } else { self.gamma2 };
        let zeros = vec![0.0; prev.e.len()];
        let e0p_stack = prev.e0.map(|v| tile(v, agents)).unwrap_or_else(|| zeros.clone());
        let e0c_stack = cur.e0.map(|v| tile(v, agents)).unwrap_or_else(|| zeros.clone());
        let phi_e0 = self.phi.as_ref().map_or(zeros.clone(), |f| f.apply(&e0p_stack));
        let phi_bound = self.phi.as_ref().map_or(0.0, |f| f.bound(&e0p_stack));

        // δ(k) = Π δ(k−1) + Σ e(k−1) − Φ (1 ⊗ e0(k−1))
        let d_pred = lincomb(&[
            (1.0, &self.pi.apply(prev.delta)),
            (1.0, &self.sigma.apply(prev.e)),
            (-1.0, &phi_e0),
        ]);
        let d_scale = self.pi.bound(prev.delta) + self.sigma.bound(prev.e) + phi_bound + tx.x_scale;
        Self::record(cons, k, &d_pred, cur.delta, d_scale);

        let tp = prev.theta;
        let alpha_p = scaled(prev.delta, 1.0 / tp);
        let xi_p = scaled(prev.e, 1.0 / tp);
        let eps0_p = scaled(&e0p_stack, 1.0 / tp);
        let phi_eps0 = scaled(&phi_e0, 1.0 / tp);
        let phi_eps0_bound = phi_bound / tp;
        let raw_p = tx.x_scale / tp;

        // encoder argument Ω ξ − Σ α − Φ ε0
        let arg = lincomb(&[
            (1.0, &self.omega.apply(&xi_p)),
            (-1.0, &self.sigma.apply(&alpha_p)),
            (-1.0, &phi_eps0),
        ]);
        let arg_scale = self.omega.bound(&xi_p) + self.sigma.bound(&alpha_p) + phi_eps0_bound + raw_p;
        Self::record(cons, k, &arg, tx.qarg, arg_scale);

        let tc = cur.theta;
        let raw_c = tx.x_scale / tc;
        let alpha_pred = scaled(
            &lincomb(&[
                (1.0, &self.pi.apply(&alpha_p)),
                (1.0, &self.sigma.apply(&xi_p)),
                (-1.0, &phi_eps0),
            ]),
            1.0 / gamma,
        );
        let alpha_scale = (self.pi.bound(&alpha_p) + self.sigma.bound(&xi_p) + phi_eps0_bound) / gamma + raw_c;
        Self::record(cons, k, &alpha_pred, &scaled(cur.delta, 1.0 / tc), alpha_scale);

        let xi_direct = scaled(cur.e, 1.0 / tc);
        let (xi_pred, xi_scale) = match tx.qout {
            Some(qo) => (
                scaled(&lincomb(&[(1.0, &arg), (-1.0, qo)]), 1.0 / gamma),
                (arg_scale + norm_inf(qo)) / gamma + raw_c,
            ),
            None => (scaled(&arg, 1.0 / gamma), arg_scale / gamma + raw_c),
        };
        Self::record(cons, k, &xi_pred, &xi_direct, xi_scale);

        let mut reset_terms = vec![(norm_inf(&xi_direct), raw_c)];

        if let (Some(e0p), Some(qarg0)) = (prev.e0, tx.qarg0) {
            let arg0 = scaled(&self.a.mul_vec(e0p), 1.0 / tp);
            let arg0_scale = self.a_norm * norm_inf(e0p) / tp + raw_p;
            Self::record(cons, k, &arg0, qarg0, arg0_scale);

            let a_eps0 = apply_blockwise(&self.a, &eps0_p);
            let (eps0_pred, eps0_scale) = match tx.qout0 {
                Some(q0) => (
                    scaled(&lincomb(&[(1.0, &a_eps0), (-1.0, &tile(q0, agents))]), 1.0 / gamma),
                    (self.a_norm * norm_inf(&eps0_p) + norm_inf(q0)) / gamma + raw_c,
                ),
                None => (scaled(&a_eps0, 1.0 / gamma), self.a_norm * norm_inf(&eps0_p) / gamma + raw_c),
            };
            let eps0_direct = scaled(&e0c_stack, 1.0 / tc);
            Self::record(cons, k, &eps0_pred, &eps0_direct, eps0_scale);
            reset_terms.push((norm_inf(&eps0_direct), raw_c));
        }

        if tx.success && !tx.overflow {
            let cap = self.sigma_q / self.gamma1;
            for (v, raw) in reset_terms {
                cons.reset_checks += 1;
                let allowed = cap + CONSISTENCY_TOL * (raw + cap);
                cons.max_reset_ratio = cons.max_reset_ratio.max(v / allowed);
                if v > allowed {
                    cons.reset_violations += 1;
                }
            }
        }
    }
}
