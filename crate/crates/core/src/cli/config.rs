use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dos::{generate, DoSBudget, DoSSignal};
use crate::error::{Error, Result};
use crate::quantizer::UniformQuantizer;
use crate::sim::{LeaderSetup, SimConfig};
use crate::synthesis::{leaderless_design, lf_design, DesignOptions, DesignReport, Plant};
use crate::topology::GraphSpec;

/// One experiment, read from a single JSON document. Unknown keys are
/// rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: Plant,
    pub graph: GraphSpec,
    #[serde(default = "DoSBudget::free")]
    pub budget: DoSBudget,
    /// Explicit attack signal; generated from `budget` and the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dos: Option<DoSSignal>,
    #[serde(default)]
    pub design: DesignOptions,
    /// A precomputed design to simulate instead of synthesizing one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<DesignReport>,
    #[serde(default)]
    pub sim: SimOptions,
    #[serde(default)]
    pub output: OutputPaths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    #[serde(default = "default_horizon")]
    pub horizon_steps: usize,
    /// Defaults to `θ0_min`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    /// Drawn uniformly from `[−C_x0, C_x0]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_states: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader_state: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    /// Quantizer resolution; defaults to the design's `R_min`.
    #[serde(default, rename = "R", skip_serializing_if = "Option::is_none")]
    pub r: Option<u64>,
}

fn default_horizon() -> usize {
    120
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            horizon_steps: default_horizon(),
            theta0: None,
            initial_states: None,
            leader_state: None,
            seed: 0,
            r: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn has_leader(&self) -> bool {
        self.graph.leader_gains.is_some()
    }

    /// Leaderless or leader-follower synthesis, chosen by the presence of
    /// leader gains.
    pub fn synthesize(&self) -> Result<DesignReport> {
        let g = self.graph.graph()?;
        match self.graph.leader()? {
            Some(l) => Ok(DesignReport::LeaderFollower(lf_design(&self.plant, &g, &l, &self.budget, &self.design)?)),
            None => Ok(DesignReport::Leaderless(leaderless_design(&self.plant, &g, &self.budget, &self.design)?)),
        }
    }

    /// The design to simulate: `given`, else the embedded report, else a
    /// fresh synthesis.
    pub fn resolve_design(&self, given: Option<DesignReport>) -> Result<DesignReport> {
        let d = match given.or_else(|| self.report.clone()) {
            Some(d) => d,
            None => self.synthesize()?,
        };
        let lf = matches!(d, DesignReport::LeaderFollower(_));
        if lf != self.has_leader() {
            return Err(Error::Config(format!(
                "design is {} but the graph {} leader gains",
                if lf { "leader-follower" } else { "leaderless" },
                if self.has_leader() { "has" } else { "has no" }
            )));
        }
        Ok(d)
    }

    /// Attack signal over the horizon for `seed`.
    pub fn signal(&self, seed: u64) -> DoSSignal {
        match &self.dos {
            Some(s) => s.clone(),
            None => generate(&self.budget, self.horizon_seconds(), seed),
        }
    }

    pub fn horizon_seconds(&self) -> f64 {
        self.sim.horizon_steps as f64 * self.plant.delta
    }

    /// Simulation setup for one run; random initial states come from their
    /// own stream so they do not shift with the attack draw.
    pub fn sim_config(&self, design: &DesignReport, seed: u64) -> Result<SimConfig> {
        let n = self.plant.state_dim();
        let c = self.plant.c_x0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.random_range(-c..=c)).collect() };
        let initial_states = match &self.sim.initial_states {
            Some(x) => x.clone(),
            None => (0..self.graph.n).map(|_| draw(&mut rng)).collect(),
        };
        let leader = match self.graph.leader()? {
            Some(links) => Some(LeaderSetup {
                links,
                x0: match &self.sim.leader_state {
                    Some(x) => x.clone(),
                    None => draw(&mut rng),
                },
            }),
            None => None,
        };
        let cfg = SimConfig {
            plant: self.plant.clone(),
            graph: self.graph.graph()?,
            leader,
            quantizer: UniformQuantizer::new(self.sim.r.unwrap_or(design.r_min()), self.plant.sigma)?,
            theta0: self.sim.theta0.unwrap_or(design.theta0_min()),
            design: design.clone(),
            initial_states,
            horizon_steps: self.sim.horizon_steps,
            dos: self.signal(seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{self, AReading};

    fn sample() -> ExperimentConfig {
        ExperimentConfig {
            plant: benchmark::leaderless_plant(AReading::Reconciled),
            graph: GraphSpec::from_graph(&benchmark::graph(), None),
            budget: DoSBudget::new(1.0, 20.0, 0.1, 100.0).unwrap(),
            dos: None,
            design: DesignOptions::default().with_gamma1(0.8).with_d0(0.785),
            report: None,
            sim: SimOptions::default(),
            output: OutputPaths::default(),
        }
    }

    #[test]
    fn round_trip() {
        let c = sample();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v = serde_json::to_value(sample()).unwrap();
        v["sim"]["horizon"] = 10.into();
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("unknown field `horizon`"), "{err}");
        let mut v = serde_json::to_value(sample()).unwrap();
        v["extra"] = 1.into();
        assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn seeded_setup_is_deterministic() {
        let c = sample();
        let d = c.synthesize().unwrap();
        let a = c.sim_config(&d, 9).unwrap();
        assert_eq!(a, c.sim_config(&d, 9).unwrap());
        assert_ne!(a.initial_states, c.sim_config(&d, 10).unwrap().initial_states);
        assert!(a.initial_states.iter().flatten().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn design_kind_must_match_graph() {
        let c = sample();
        let mut lf = c.clone();
        lf.plant = benchmark::leader_follower_plant(AReading::Reconciled);
        lf.graph.leader_gains = Some(benchmark::LEADER_GAINS.to_vec());
        lf.design = DesignOptions::default();
        let d = lf.synthesize().unwrap();
        assert!(matches!(d, DesignReport::LeaderFollower(_)));
        assert!(matches!(c.resolve_design(Some(d)), Err(Error::Config(_))));
    }
}
