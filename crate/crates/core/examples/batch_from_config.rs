// An experiment described as JSON, synthesized once and simulated over a
// range of seeds in parallel.

use dos_consensus::cli::ExperimentConfig;
use rayon::prelude::*;

const CONFIG: &str = r#"{
  "plant": {
    "A": {"rows": 2, "cols": 2, "data": [[1.02, 0.1], [0.0, 0.97]]},
    "B": {"rows": 2, "cols": 2, "data": [[1.0, 0.0], [0.0, 1.0]]},
    "K": {"rows": 2, "cols": 2, "data": [[0.3, 0.0], [0.0, 0.3]]},
    "delta": 0.1,
    "c_x0": 1.0,
    "sigma": 0.5
  },
  "graph": {"n": 4, "edges": [[1, 2, 1.0], [2, 3, 1.0], [3, 4, 1.0], [4, 1, 1.0]]},
  "budget": {"eta": 1.0, "tau_d": 25.0, "kappa": 0.1, "T": 150.0},
  "design": {"gamma1": 0.9},
  "sim": {"horizon_steps": 250}
}"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_json(CONFIG)?;
    let design = cfg.synthesize()?;
    println!("gamma2 = {:.4}, R_min = {}", design.gamma2(), design.r_min());

    let rows: Vec<_> = (0..8u64)
        .into_par_iter()
        .map(|seed| -> dos_consensus::Result<_> {
            let sc = cfg.sim_config(&design, seed)?;
            let t = dos_consensus::sim::run(&sc)?;
            let a = dos_consensus::sim::audit(&t, &design)?;
            Ok((seed, a))
        })
        .collect::<dos_consensus::Result<_>>()?;
    for (seed, a) in &rows {
        println!(
            "seed {seed}: {} attacked steps, overflow {}, precision floor {:?}, final/initial error {:.2e}",
            a.steps - a.successes,
            a.overflow_count,
            a.resolution_floor_step,
            a.error_ratio.value().unwrap_or(0.0)
        );
    }
    assert!(rows.iter().all(|(_, a)| a.clean()));
    Ok(())
}

fn main() {
    run_example().unwrap();
}
