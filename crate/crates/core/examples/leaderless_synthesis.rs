// Certified parameters for the eight-agent benchmark without a leader:
// zoom factors, quantizer resolution and the DoS load the design absorbs.

use dos_consensus::benchmark::{self, AReading};
use dos_consensus::dos::DoSBudget;
use dos_consensus::synthesis::leaderless_design;
use dos_consensus::synthesis::DesignOptions;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let plant = benchmark::leaderless_plant(AReading::Reconciled);
    let graph = benchmark::graph();
    let budget = DoSBudget::new(1.0, 20.0, 0.1, 200.0)?;
    let opts = DesignOptions::default().with_gamma1(0.8).with_d0(0.785);
    let d = leaderless_design(&plant, &graph, &budget, &opts)?;

    println!("rho(J(1)) = {:.4}, C2 = {:.4} (first contracting power {})", d.rho_j1, d.c2, d.p_star);
    println!("gamma1 = {}, gamma2 = {:.4}, M = {}", d.gamma1, d.gamma2, d.m_used);
    println!("R_min = {}: {} levels, {} bits", d.r_min, d.levels, d.bits);
    println!("tolerated load {:.4}, budget load {:.4}", d.dos_tolerance, d.load);
    for c in &d.checks {
        println!("  [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
    assert!(d.all_checks_pass());
    Ok(())
}

fn main() {
    run_example().unwrap();
}
