// Four followers on a ring track an open-loop leader that only agents 1
// and 3 can hear, through a 0.3 s outage. The trace is written as CSV
// with one column per state component.

use dos_consensus::dos::{DoSBudget, DoSSignal};
use dos_consensus::matops::Matrix;
use dos_consensus::sim::{audit, run, LeaderSetup, SimConfig};
use dos_consensus::synthesis::{lf_design, DesignOptions, DesignReport, Plant};
use dos_consensus::topology::{Graph, LeaderLinks};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let plant = Plant::new(
        Matrix::from_rows(&[[1.02, 0.1], [0.0, 0.97]])?,
        Matrix::identity(2),
        Matrix::diag(&[0.3, 0.3]),
        0.1,
        1.0,
        0.5,
    )?;
    let ring = Graph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)])?;
    let links = LeaderLinks::new(vec![1.0, 0.0, 0.5, 0.0])?;
    let budget = DoSBudget::new(1.0, 25.0, 0.3, 150.0)?;
    let d = lf_design(&plant, &ring, &links, &budget, &DesignOptions::default())?;
    println!("gamma1 = {:.4}, gamma2 = {:.4}, R_min = {}", d.gamma1, d.gamma2, d.r_min);

    let x0 = vec![vec![1.0, -0.5], vec![-0.8, 0.2], vec![0.3, 0.9], vec![-0.1, -1.0]];
    let leader = LeaderSetup { links, x0: vec![0.5, -0.5] };
    let dos = DoSSignal::new(vec![(1.0, 0.3)])?;
    let cfg = SimConfig::new(plant, ring, Some(leader), DesignReport::LeaderFollower(d), x0, 200, dos)?;
    let trace = run(&cfg)?;
    let a = audit(&trace, &cfg.design)?;
    println!("{}", a.dos_summary);
    println!(
        "followers' largest argument {:.2}, leader's {:.2}, range {:.1}",
        a.max_qarg_inf,
        a.max_leader_qarg_inf.unwrap_or(0.0),
        a.quantizer_range
    );
    println!("tracking error {:.3} -> {:.3e}", a.initial_error, a.final_error);

    let mut csv = Vec::new();
    trace.write_csv(&mut csv, true)?;
    let text = String::from_utf8(csv)?;
    for line in text.lines().take(3) {
        println!("{line}");
    }
    assert!(a.clean());
    Ok(())
}

fn main() {
    run_example().unwrap();
}
