// Closed-loop run of the benchmark under a seeded attack, followed by the
// audit of overflow, the convergence envelope and the error recursions.

use dos_consensus::benchmark::{self, AReading};
use dos_consensus::dos::{generate, DoSBudget};
use dos_consensus::sim::{audit, run, SimConfig};
use dos_consensus::synthesis::{leaderless_design, DesignOptions, DesignReport};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let plant = benchmark::leaderless_plant(AReading::Reconciled);
    let graph = benchmark::graph();
    let budget = DoSBudget::new(1.0, 3.0, 0.1, 30.0)?;
    let opts = DesignOptions::default().with_gamma1(0.8).with_d0(0.785);
    let design = DesignReport::Leaderless(leaderless_design(&plant, &graph, &budget, &opts)?);

    let x0: Vec<Vec<f64>> = (0..benchmark::AGENTS)
        .map(|i| {
            let s = i as f64 / 7.0;
            vec![1.0 - 2.0 * s, 0.5 * s, -0.3, 0.9 - s]
        })
        .collect();
    let steps = 120;
    let dos = generate(&budget, steps as f64 * plant.delta, 3);
    let cfg = SimConfig::new(plant, graph, None, design, x0, steps, dos)?;
    let trace = run(&cfg)?;
    let a = audit(&trace, &cfg.design)?;

    println!("{}", a.dos_summary);
    println!("{} of {} transmissions got through", a.successes, a.steps);
    println!("overflows: {}, envelope violations: {}", a.overflow_count, a.envelope_violations);
    println!("largest quantizer argument {:.2} within range {:.0}", a.max_qarg_inf, a.quantizer_range);
    println!("‖δ‖ went from {:.3} to {:.3e}", a.initial_error, a.final_error);
    println!("recursions checked on {} steps, worst relative mismatch {:.1e}", a.consistency.steps_checked, a.consistency.max_rel_error);
    for s in trace.steps.iter().step_by(20) {
        println!("  k = {:>3}  dos = {:<5}  theta = {:.3e}  ‖δ‖ = {:.3e}", s.k, s.dos, s.theta, s.delta_inf);
    }
    assert!(a.clean());
    Ok(())
}

fn main() {
    run_example().unwrap();
}
