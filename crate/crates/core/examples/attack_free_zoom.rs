// Without attacks every transmission succeeds, the loss bound is zero and
// the quantizer scale shrinks by exactly gamma1 each step.

use dos_consensus::dos::{max_consecutive_losses, min_successes, DoSBudget, DoSSignal};
use dos_consensus::matops::Matrix;
use dos_consensus::sim::{run, SimConfig};
use dos_consensus::synthesis::{leaderless_design, DesignOptions, DesignReport, Plant};
use dos_consensus::topology::Graph;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let free = DoSBudget::free();
    println!("M = {}, successes after 50 attempts >= {}", max_consecutive_losses(&free, 0.1)?, min_successes(&free, 0.1, 50)?);

    let plant = Plant::new(
        Matrix::from_rows(&[[1.01, 0.05], [0.0, 0.98]])?,
        Matrix::identity(2),
        Matrix::diag(&[0.3, 0.3]),
        0.1,
        1.0,
        0.5,
    )?;
    let path = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)])?;
    let d = leaderless_design(&plant, &path, &free, &DesignOptions::default())?;
    let x0 = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -0.5]];
    let cfg = SimConfig::new(plant, path, None, DesignReport::Leaderless(d), x0, 50, DoSSignal::empty())?;
    let t = run(&cfg)?;

    let g1 = cfg.design.gamma1();
    let mut expect = cfg.theta0;
    for s in &t.steps[1..] {
        expect *= g1;
        assert_eq!(s.theta, expect);
    }
    println!("theta(50) = {:.6e} = gamma1^50 theta0 with gamma1 = {g1:.4}", t.steps[50].theta);
    println!("successes: {}", t.successes().len());
    Ok(())
}

fn main() {
    run_example().unwrap();
}
