// Leader-follower design on the benchmark graph, where agents 1, 2, 5 and
// 8 hear the leader directly.

use dos_consensus::benchmark::{self, AReading};
use dos_consensus::dos::DoSBudget;
use dos_consensus::synthesis::{lf_design, DesignOptions};
use dos_consensus::topology::grounded_basis;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let plant = benchmark::leader_follower_plant(AReading::Reconciled);
    let graph = benchmark::graph();
    let leader = benchmark::leader();
    let grounded = grounded_basis(&graph, &leader)?;
    println!("smallest eigenvalue of L + D: {:.4}", grounded.eigenvalues[0]);

    let budget = DoSBudget::new(1.0, 50.0, 0.05, 500.0)?;
    let d = lf_design(&plant, &graph, &leader, &budget, &DesignOptions::default().with_gamma1(0.965).with_d0(0.96))?;
    println!("rho(P~(1)) = {:.4}, C4~ = {:.4}", d.rho_p1, d.c4t);
    println!("gamma2 = {:.4}, R_min = {} ({} bits)", d.gamma2, d.r_min, d.bits);
    println!("tolerated load {:.4}, budget load {:.4}", d.dos_tolerance, d.load);
    let failed: Vec<_> = d.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    println!("failed checks: {failed:?}");
    Ok(())
}

fn main() {
    run_example().unwrap();
}
