//! The eight-agent, four-state benchmark: plant, gains, graph and leader
//! pinning, together with the published reference values.
//!
//! The plant matrix exists in two readings. [`AReading::Printed`] has
//! `a22 = 1.1052` as typeset; [`AReading::Reconciled`] swaps the last two
//! digits to `1.1025`, which is the reading consistent with the reported
//! spectral radii.

use crate::matops::Matrix;
use crate::synthesis::Plant;
use crate::topology::{Graph, LeaderLinks};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AReading {
    Printed,
    Reconciled,
}

impl AReading {
    pub const ALL: [AReading; 2] = [AReading::Printed, AReading::Reconciled];

    pub fn label(self) -> &'static str {
        match self {
            Self::Printed => "printed",
            Self::Reconciled => "reconciled",
        }
    }
}

pub const DELTA: f64 = 0.1;
pub const AGENTS: usize = 8;

/// 1-based undirected edges, unit weight.
pub const EDGES: [(usize, usize); 13] = [
    (1, 2),
    (1, 3),
    (1, 8),
    (2, 3),
    (2, 4),
    (2, 5),
    (3, 4),
    (4, 5),
    (5, 6),
    (5, 7),
    (6, 7),
    (6, 8),
    (7, 8),
];

pub const LEADER_GAINS: [f64; 8] = [1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0];

/// Published reference values.
pub mod reference {
    pub const RHO_A: f64 = 1.1025;
    pub const RHO_J1: f64 = 0.77;
    pub const RHO_P1: f64 = 0.9485;
    pub const D0: f64 = 0.785;
    pub const C2: f64 = 1.7977;
    pub const GAMMA1: f64 = 0.8;
    pub const GAMMA2: f64 = 6.7244;
    pub const TOLERANCE: f64 = 0.1048;
    pub const LEVELS: u64 = 10222;
    pub const D0_LF: f64 = 0.96;
    pub const C4_LF: f64 = 2.2247;
    pub const GAMMA1_LF: f64 = 0.965;
    pub const GAMMA2_LF: f64 = 7.96;
    pub const TOLERANCE_LF: f64 = 0.0169;
    pub const LEVELS_LF: u64 = 15150;
    pub const BITS: u32 = 14;
}

pub fn a_matrix(reading: AReading) -> Matrix {
    let a22 = match reading {
        AReading::Printed => 1.1052,
        AReading::Reconciled => 1.1025,
    };
    Matrix::from_rows(&[
        [1.1052, 0.1105, -0.1, 0.0],
        [0.0, a22, 0.0, 0.0],
        [0.1, 0.0, 0.25, 0.1],
        [0.1, 0.3, 0.0, 0.2],
    ])
    .expect("4x4")
}

pub fn b_matrix() -> Matrix {
    Matrix::from_rows(&[[0.1052, 0.0053], [0.0, 0.1052], [0.0, 0.0], [0.0, 0.0]]).expect("4x2")
}

fn gain(k: f64) -> Matrix {
    Matrix::from_rows(&[[k, 0.0, 0.0, 0.0], [0.0, k, 0.0, 0.0]]).expect("2x4")
}

/// Leaderless gain.
pub fn k1() -> Matrix {
    gain(3.0)
}

/// Leader-follower gain.
pub fn k2() -> Matrix {
    gain(2.9)
}

/// Plant with the leaderless gain, `C_x0 = σ = 1`.
pub fn leaderless_plant(reading: AReading) -> Plant {
    Plant::new(a_matrix(reading), b_matrix(), k1(), DELTA, 1.0, 1.0).expect("consistent dimensions")
}

/// Plant with the leader-follower gain, `C_x0 = σ = 1`.
pub fn leader_follower_plant(reading: AReading) -> Plant {
    Plant::new(a_matrix(reading), b_matrix(), k2(), DELTA, 1.0, 1.0).expect("consistent dimensions")
}

pub fn graph() -> Graph {
    let edges: Vec<_> = EDGES.iter().map(|&(i, j)| (i - 1, j - 1, 1.0)).collect();
    Graph::from_edges(AGENTS, &edges).expect("valid benchmark graph")
}

pub fn leader() -> LeaderLinks {
    LeaderLinks::new(LEADER_GAINS.to_vec()).expect("valid leader gains")
}
