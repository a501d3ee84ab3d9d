//! Recomputes the benchmark's reported quantities under both readings of
//! the plant matrix and searches the unreported loss bound `M`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::benchmark::{self, reference as r, AReading};
use crate::dos::DoSBudget;
use crate::error::Result;
use crate::matops::{decay_ratios, spectral_radius};
use crate::quantizer::bits_required;
use crate::synthesis::{dos_tolerance, leaderless_design, lf_design, lf_modal_p, modal_j, DesignOptions};

/// Powers scanned when measuring the hand-picked certificates.
pub const CERT_POWERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub quantity: String,
    pub reading: Option<String>,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Row {
    fn new(quantity: &str, reading: Option<AReading>, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            quantity: quantity.to_string(),
            reading: reading.map(|a| a.label().to_string()),
            value,
            target,
            tolerance,
            pass: (value - target).abs() <= tolerance,
        }
    }
}

/// Design outcome for one assumed `M` with the hand-picked constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MRow {
    #[serde(rename = "M")]
    pub m: u64,
    pub gamma2: f64,
    pub levels: u64,
    pub bits: u32,
    pub gamma2_lf: f64,
    pub levels_lf: u64,
    pub bits_lf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSearch {
    pub reading: String,
    pub rows: Vec<MRow>,
    /// `M` whose `γ2` lies closest to the reported value.
    pub closest_m: u64,
    pub closest_m_lf: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<Row>,
    pub m_search: Vec<MSearch>,
}

impl Summary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<34} {:<11} {:>14} {:>10} {:>9}  result", "quantity", "reading", "value", "target", "tol");
        for row in &self.rows {
            let _ = writeln!(
                s,
                "{:<34} {:<11} {:>14.6} {:>10} {:>9}  {}",
                row.quantity,
                row.reading.as_deref().unwrap_or("-"),
                row.value,
                row.target,
                row.tolerance,
                if row.pass { "pass" } else { "FAIL" }
            );
        }
        for ms in &self.m_search {
            let _ = writeln!(
                s,
                "\nM search ({} A): gamma1/d0/C2 = {}/{}/{}, leader-follower {}/{}/{}",
                ms.reading,
                r::GAMMA1,
                r::D0,
                r::C2,
                r::GAMMA1_LF,
                r::D0_LF,
                r::C4_LF
            );
            let _ = writeln!(s, "{:>3} {:>12} {:>12} {:>5} {:>12} {:>12} {:>5}", "M", "gamma2", "2R+1", "bits", "gamma2~", "2R+1~", "bits");
            for m in &ms.rows {
                let _ = writeln!(
                    s,
                    "{:>3} {:>12.4} {:>12} {:>5} {:>12.4} {:>12} {:>5}",
                    m.m, m.gamma2, m.levels, m.bits, m.gamma2_lf, m.levels_lf, m.bits_lf
                );
            }
            let _ = writeln!(
                s,
                "closest to gamma2 = {}: M = {}; to gamma2~ = {}: M = {}",
                r::GAMMA2,
                ms.closest_m,
                r::GAMMA2_LF,
                ms.closest_m_lf
            );
        }
        s
    }
}

fn max_ratio(m: &crate::matops::Matrix, d0: f64) -> Result<f64> {
    Ok(decay_ratios(m, d0, CERT_POWERS)?.into_iter().fold(0.0, f64::max))
}

pub fn summary() -> Result<Summary> {
    let g = benchmark::graph();
    let lead = benchmark::leader();
    let mut rows = Vec::new();
    for a in AReading::ALL {
        rows.push(Row::new("rho(A)", Some(a), spectral_radius(&benchmark::a_matrix(a))?, r::RHO_A, 5e-4));
    }
    for a in AReading::ALL {
        let j1 = modal_j(&benchmark::leaderless_plant(a), &g, 0, 1.0)?;
        rows.push(Row::new("rho(J(1))", Some(a), spectral_radius(&j1)?, r::RHO_J1, 5e-3));
    }
    for a in AReading::ALL {
        let p1 = lf_modal_p(&benchmark::leader_follower_plant(a), &g, &lead, 0, 1.0)?;
        rows.push(Row::new("rho(P~(1))", Some(a), spectral_radius(&p1)?, r::RHO_P1, 5e-4));
    }
    rows.push(Row::new("dos_tolerance(0.8, 6.7244)", None, dos_tolerance(r::GAMMA1, r::GAMMA2), r::TOLERANCE, 1e-3));
    rows.push(Row::new(
        "dos_tolerance(0.965, 7.96)",
        None,
        dos_tolerance(r::GAMMA1_LF, r::GAMMA2_LF),
        r::TOLERANCE_LF,
        5e-4,
    ));
    rows.push(Row::new("bits(10223)", None, bits_required(r::LEVELS + 1) as f64, r::BITS as f64, 0.0));
    rows.push(Row::new("bits(15150)", None, bits_required(r::LEVELS_LF) as f64, r::BITS as f64, 0.0));
    // A certificate holds iff the largest ‖M^p‖/d0^p stays below C; the
    // rows report that maximum against the hand-picked C.
    for a in AReading::ALL {
        let j1 = modal_j(&benchmark::leaderless_plant(a), &g, 0, 1.0)?;
        let v = max_ratio(&j1, r::D0)?;
        let mut row = Row::new("max_p ‖J(1)^p‖/0.785^p <= C2", Some(a), v, r::C2, 0.0);
        row.pass = v <= r::C2;
        rows.push(row);
    }
    for a in AReading::ALL {
        let p1 = lf_modal_p(&benchmark::leader_follower_plant(a), &g, &lead, 0, 1.0)?;
        let v = max_ratio(&p1, r::D0_LF)?;
        let mut row = Row::new("max_p ‖P~(1)^p‖/0.96^p <= C4~", Some(a), v, r::C4_LF, 0.0);
        row.pass = v <= r::C4_LF;
        rows.push(row);
    }

    let mut m_search = Vec::new();
    for a in AReading::ALL {
        let p = benchmark::leaderless_plant(a);
        let plf = benchmark::leader_follower_plant(a);
        let mut out = Vec::new();
        for m in 1..=12 {
            let opts = DesignOptions::default().with_gamma1(r::GAMMA1).with_d0(r::D0).with_c2(r::C2).with_m(m);
            let d = leaderless_design(&p, &g, &DoSBudget::free(), &opts)?;
            let opts = DesignOptions::default()
                .with_gamma1(r::GAMMA1_LF)
                .with_d0(r::D0_LF)
                .with_c2(r::C4_LF)
                .with_m(m);
            let dl = lf_design(&plf, &g, &lead, &DoSBudget::free(), &opts)?;
            out.push(MRow {
                m,
                gamma2: d.gamma2,
                levels: d.levels,
                bits: d.bits,
                gamma2_lf: dl.gamma2,
                levels_lf: dl.levels,
                bits_lf: dl.bits,
            });
        }
        let closest = |f: &dyn Fn(&MRow) -> f64, target: f64| {
            out.iter()
                .min_by(|x, y| (f(x) - target).abs().total_cmp(&(f(y) - target).abs()))
                .map_or(0, |row| row.m)
        };
        m_search.push(MSearch {
            reading: a.label().to_string(),
            closest_m: closest(&|row| row.gamma2, r::GAMMA2),
            closest_m_lf: closest(&|row| row.gamma2_lf, r::GAMMA2_LF),
            rows: out,
        });
    }
    Ok(Summary { rows, m_search })
}
