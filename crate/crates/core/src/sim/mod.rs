//! Closed-loop simulation of the zooming quantized protocol under a DoS
//! signal, with per-step consistency checks against the error recursions.

mod audit;
mod check;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dos::{outcomes, DoSSignal};
use crate::error::{Error, Result};
use crate::matops::{norm_inf, Matrix};
use crate::quantizer::UniformQuantizer;
use crate::synthesis::{DesignReport, Plant};
use crate::topology::{Graph, LeaderLinks};

pub use audit::{audit, AuditReport, ErrorRatio};
use check::Recursions;

/// Relative tolerance of the recursion consistency checks.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Consensus errors below `STATE_RESOLUTION·‖x(k)‖_inf` are rounding noise
/// of the states they are formed from.
pub const STATE_RESOLUTION: f64 = 1e-12;

/// Leader pinning gains and the leader's initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderSetup {
    pub links: LeaderLinks,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub plant: Plant,
    pub graph: Graph,
    pub leader: Option<LeaderSetup>,
    pub design: DesignReport,
    pub quantizer: UniformQuantizer,
    pub initial_states: Vec<Vec<f64>>,
    pub theta0: f64,
    pub horizon_steps: usize,
    pub dos: DoSSignal,
}

impl SimConfig {
    /// Config with the design's minimal quantizer (`R_min`, plant `σ`) and
    /// `θ0 = θ0_min`.
    pub fn new(
        plant: Plant,
        graph: Graph,
        leader: Option<LeaderSetup>,
        design: DesignReport,
        initial_states: Vec<Vec<f64>>,
        horizon_steps: usize,
        dos: DoSSignal,
    ) -> Result<Self> {
        let c = Self {
            quantizer: UniformQuantizer::new(design.r_min(), plant.sigma)?,
            theta0: design.theta0_min(),
            plant,
            graph,
            leader,
            design,
            initial_states,
            horizon_steps,
            dos,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.plant.state_dim();
        let agents = self.graph.n_agents();
        if self.initial_states.len() != agents {
            return Err(Error::Dimension(format!(
                "{} initial states for {agents} agents",
                self.initial_states.len()
            )));
        }
        let cx0 = self.plant.c_x0;
        for (i, x) in self.initial_states.iter().enumerate() {
            if x.len() != n {
                return Err(Error::Dimension(format!("initial state {} has length {}, expected {n}", i + 1, x.len())));
            }
            if !(norm_inf(x) <= cx0) {
                return Err(Error::Parameter(format!(
                    "‖x_{}(0)‖_inf = {} exceeds C_x0 = {cx0}",
                    i + 1,
                    norm_inf(x)
                )));
            }
        }
        match (&self.leader, &self.design) {
            (None, DesignReport::Leaderless(_)) => {}
            (Some(l), DesignReport::LeaderFollower(_)) => {
                if l.links.len() != agents {
                    return Err(Error::Dimension(format!("{} leader gains for {agents} agents", l.links.len())));
                }
                if l.x0.len() != n {
                    return Err(Error::Dimension(format!("leader state has length {}, expected {n}", l.x0.len())));
                }
                if !(norm_inf(&l.x0) <= cx0) {
                    return Err(Error::Parameter(format!("‖x_0(0)‖_inf = {} exceeds C_x0 = {cx0}", norm_inf(&l.x0))));
                }
            }
            (None, _) => return Err(Error::Config("a leader-follower design needs a leader".into())),
            (Some(_), _) => return Err(Error::Config("a leaderless design cannot drive a leader".into())),
        }
        if self.quantizer.sigma() != self.plant.sigma {
            return Err(Error::Parameter(format!(
                "quantizer sigma {} differs from the plant's {}",
                self.quantizer.sigma(),
                self.plant.sigma
            )));
        }
        let min = self.design.theta0_min();
        if !(self.theta0.is_finite() && self.theta0 >= min) {
            return Err(Error::Parameter(format!("theta0 = {} is below theta0_min = {min}", self.theta0)));
        }
        if self.horizon_steps == 0 {
            return Err(Error::Parameter("horizon must be at least one step".into()));
        }
        Ok(())
    }
}

/// One sampling instant. `dos` is true when the transmission at `kΔ` failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub t: f64,
    pub dos: bool,
    pub theta: f64,
    /// `‖(x_j − A x̂_j)/θ(k−1)‖_inf` over followers (and the leader).
    pub max_qarg_inf: f64,
    /// The leader's share of `max_qarg_inf`.
    pub leader_qarg_inf: Option<f64>,
    pub overflow: bool,
    /// `‖δ(k)‖_inf` or `‖δ̃(k)‖_inf`.
    pub delta_inf: f64,
    /// `‖x(k)‖_inf` over followers and leader.
    pub state_inf: f64,
}

/// Outcome of the recursion checks over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub steps_checked: usize,
    pub max_rel_error: f64,
    pub failures: usize,
    pub first_failure: Option<usize>,
    pub reset_checks: usize,
    pub reset_violations: usize,
    /// Largest `‖ξ(k)‖_inf γ1/σ` seen at a success step.
    pub max_reset_ratio: f64,
}

impl Consistency {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.reset_violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub delta: f64,
    pub agents: usize,
    pub state_dim: usize,
    pub sigma: f64,
    pub range: f64,
    pub theta0: f64,
    pub has_leader: bool,
    pub steps: Vec<StepRecord>,
    /// Stacked follower states per step.
    pub states: Vec<Vec<f64>>,
    pub estimates: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    /// Leader state per step; empty without a leader.
    pub leader_states: Vec<Vec<f64>>,
    pub consistency: Consistency,
}

impl SimTrace {
    /// Indices `k ≥ 1` of successful transmissions.
    pub fn successes(&self) -> Vec<usize> {
        self.steps.iter().skip(1).filter(|s| !s.dos).map(|s| s.k).collect()
    }

    pub fn overflow_count(&self) -> usize {
        self.steps.iter().filter(|s| s.overflow).count()
    }

    pub fn success_flags(&self) -> Vec<bool> {
        self.steps.iter().skip(1).map(|s| !s.dos).collect()
    }

    /// Writes the per-step CSV; `full_state` appends `x_i_j` columns
    /// (agent `0` is the leader).
    pub fn write_csv<W: Write>(&self, out: W, full_state: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["k", "t", "dos_flag", "theta", "max_qarg_inf", "overflow", "delta_inf"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if full_state {
            if self.has_leader {
                header.extend((1..=self.state_dim).map(|j| format!("x_0_{j}")));
            }
            for i in 1..=self.agents {
                header.extend((1..=self.state_dim).map(|j| format!("x_{i}_{j}")));
            }
        }
        w.write_record(&header)?;
        let f = |v: f64| format!("{v:.16e}");
        for (idx, s) in self.steps.iter().enumerate() {
            let mut row = vec![
                s.k.to_string(),
                f(s.t),
                u8::from(s.dos).to_string(),
                f(s.theta),
                f(s.max_qarg_inf),
                u8::from(s.overflow).to_string(),
                f(s.delta_inf),
            ];
            if full_state {
                if self.has_leader {
                    row.extend(self.leader_states[idx].iter().map(|&v| f(v)));
                }
                row.extend(self.states[idx].iter().map(|&v| f(v)));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn run_leaderless(c: &SimConfig) -> Result<SimTrace> {
    if c.leader.is_some() {
        return Err(Error::Config("run_leaderless called with a leader".into()));
    }
    simulate(c)
}

pub fn run_leader_follower(c: &SimConfig) -> Result<SimTrace> {
    if c.leader.is_none() {
        return Err(Error::Config("run_leader_follower called without a leader".into()));
    }
    simulate(c)
}

/// Dispatches on the presence of a leader.
pub fn run(c: &SimConfig) -> Result<SimTrace> {
    simulate(c)
}

fn blocks(v: &[f64], n: usize) -> impl Iterator<Item = &[f64]> {
    v.chunks(n)
}

/// `(I ⊗ M) v` for a stacked vector `v`.
fn apply_blockwise(m: &Matrix, v: &[f64]) -> Vec<f64> {
    blocks(v, m.cols()).flat_map(|b| m.mul_vec(b)).collect()
}

fn consensus_error(x: &[f64], leader: Option<&[f64]>, n: usize) -> Vec<f64> {
    let agents = x.len() / n;
    let reference: Vec<f64> = match leader {
        Some(x0) => x0.to_vec(),
        None => (0..n)
            .map(|j| (0..agents).map(|i| x[i * n + j]).sum::<f64>() / agents as f64)
            .collect(),
    };
    x.iter().enumerate().map(|(idx, v)| v - reference[idx % n]).collect()
}

fn simulate(c: &SimConfig) -> Result<SimTrace> {
    c.validate()?;
    let p = &c.plant;
    let n = p.state_dim();
    let w = p.b.cols();
    let agents = c.graph.n_agents();
    let (gamma1, gamma2) = (c.design.gamma1(), c.design.gamma2());
    let q = &c.quantizer;
    let success = outcomes(&c.dos, p.delta, c.horizon_steps);
    let checks = Recursions::new(c)?;
    let pin: Vec<f64> = match &c.leader {
        Some(l) => l.links.gains().to_vec(),
        None => vec![0.0; agents],
    };

    let mut x: Vec<f64> = c.initial_states.concat();
    let mut xh = vec![0.0; n * agents];
    let mut u = vec![0.0; w * agents];
    let mut x0 = c.leader.as_ref().map(|l| l.x0.clone());
    let mut xh0 = vec![0.0; n];
    let mut theta = c.theta0;

    let cap = c.horizon_steps + 1;
    let mut steps = Vec::with_capacity(cap);
    let mut states = Vec::with_capacity(cap);
    let mut estimates = Vec::with_capacity(cap);
    let mut controls = Vec::with_capacity(cap);
    let mut leader_states = Vec::new();
    let mut consistency = Consistency::default();

    let mut delta_vec = consensus_error(&x, x0.as_deref(), n);
    steps.push(StepRecord {
        k: 0,
        t: 0.0,
        dos: false,
        theta,
        max_qarg_inf: 0.0,
        leader_qarg_inf: x0.as_ref().map(|_| 0.0),
        overflow: false,
        delta_inf: norm_inf(&delta_vec),
        state_inf: norm_inf(&x).max(x0.as_deref().map_or(0.0, norm_inf)),
    });
    states.push(x.clone());
    estimates.push(xh.clone());
    controls.push(u.clone());
    if let Some(l) = &x0 {
        leader_states.push(l.clone());
    }

    for k in 1..=c.horizon_steps {
        let theta_prev = theta;
        let e_prev: Vec<f64> = x.iter().zip(&xh).map(|(a, b)| a - b).collect();
        let e0_prev: Option<Vec<f64>> = x0.as_ref().map(|l| l.iter().zip(&xh0).map(|(a, b)| a - b).collect());
        let delta_prev = delta_vec;
        let x_scale_prev = norm_inf(&x).max(x0.as_deref().map_or(0.0, norm_inf));

        // plant
        let ax = apply_blockwise(&p.a, &x);
        let bu = apply_blockwise(&p.b, &u);
        x = ax.iter().zip(&bu).map(|(a, b)| a + b).collect();
        if let Some(l) = x0.as_mut() {
            *l = p.a.mul_vec(l);
        }

        let ok = success[k - 1];

        // encoders
        let axh = apply_blockwise(&p.a, &xh);
        let qarg: Vec<f64> = x.iter().zip(&axh).map(|(a, b)| (a - b) / theta_prev).collect();
        let axh0 = p.a.mul_vec(&xh0);
        let qarg0: Option<Vec<f64>> = x0
            .as_ref()
            .map(|l| l.iter().zip(&axh0).map(|(a, b)| (a - b) / theta_prev).collect());

        // decoders and zoom
        let (qout, qout0) = if ok {
            let qo = q.quantize_vector(&qarg);
            let qo0 = qarg0.as_ref().map(|v| q.quantize_vector(v));
            xh = axh.iter().zip(&qo).map(|(a, b)| a + theta_prev * b).collect();
            if let Some(v) = &qo0 {
                xh0 = axh0.iter().zip(v).map(|(a, b)| a + theta_prev * b).collect();
            }
            theta = gamma1 * theta_prev;
            (Some(qo), qo0)
        } else {
            xh = axh;
            if x0.is_some() {
                xh0 = axh0;
            }
            theta = gamma2 * theta_prev;
            (None, None)
        };

        // controllers
        let bk_k = &p.k;
        for i in 0..agents {
            let mut agg = vec![0.0; n];
            for j in 0..agents {
                let a = c.graph.weight(i, j);
                if a != 0.0 {
                    for s in 0..n {
                        agg[s] += a * (xh[j * n + s] - xh[i * n + s]);
                    }
                }
            }
            if pin[i] != 0.0 {
                for s in 0..n {
                    agg[s] += pin[i] * (xh0[s] - xh[i * n + s]);
                }
            }
            let ui = bk_k.mul_vec(&agg);
            u[i * w..(i + 1) * w].copy_from_slice(&ui);
        }

        delta_vec = consensus_error(&x, x0.as_deref(), n);
        let follower_max = norm_inf(&qarg);
        let leader_max = qarg0.as_deref().map(norm_inf);
        let overflow = ok && (!q.in_range(&qarg) || qarg0.as_deref().is_some_and(|v| !q.in_range(v)));

        let e: Vec<f64> = x.iter().zip(&xh).map(|(a, b)| a - b).collect();
        let e0: Option<Vec<f64>> = x0.as_ref().map(|l| l.iter().zip(&xh0).map(|(a, b)| a - b).collect());
        let x_scale = norm_inf(&x).max(x0.as_deref().map_or(0.0, norm_inf)).max(x_scale_prev);
        checks.step(
            &mut consistency,
            k,
            &check::Snapshot {
                delta: &delta_prev,
                e: &e_prev,
                e0: e0_prev.as_deref(),
                theta: theta_prev,
            },
            &check::Snapshot {
                delta: &delta_vec,
                e: &e,
                e0: e0.as_deref(),
                theta,
            },
            &check::Transmission {
                success: ok,
                overflow,
                qarg: &qarg,
                qarg0: qarg0.as_deref(),
                qout: qout.as_deref(),
                qout0: qout0.as_deref(),
                x_scale,
            },
        );

        steps.push(StepRecord {
            k,
            t: k as f64 * p.delta,
            dos: !ok,
            theta,
            max_qarg_inf: leader_max.map_or(follower_max, |l| l.max(follower_max)),
            leader_qarg_inf: leader_max,
            overflow,
            delta_inf: norm_inf(&delta_vec),
            state_inf: norm_inf(&x).max(x0.as_deref().map_or(0.0, norm_inf)),
        });
        states.push(x.clone());
        estimates.push(xh.clone());
        controls.push(u.clone());
        if let Some(l) = &x0 {
            leader_states.push(l.clone());
        }
    }

    Ok(SimTrace {
        delta: p.delta,
        agents,
        state_dim: n,
        sigma: q.sigma(),
        range: q.range(),
        theta0: c.theta0,
        has_leader: c.leader.is_some(),
        steps,
        states,
        estimates,
        controls,
        leader_states,
        consistency,
    })
}
