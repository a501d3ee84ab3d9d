// A DoS budget, a seeded attack signal that respects it, and the two
// counting bounds it implies for periodic transmissions.

use dos_consensus::dos::{
    generate, max_consecutive_losses, min_successes, outcomes, verify_signal, DoSBudget, DoSStats,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let delta = 0.1;
    let budget = DoSBudget::new(1.0, 1.5, 0.1, 13.33)?;
    println!("load 1/T + Δ/τ_D = {:.4}", budget.load(delta));

    let horizon = 12.0;
    let signal = generate(&budget, horizon, 7);
    println!("verdict: {:?}", verify_signal(&signal, &budget, horizon));
    println!("{}", DoSStats::from_signal(&signal, horizon));

    let steps = (horizon / delta).round() as usize;
    let ok = outcomes(&signal, delta, steps);
    let longest = ok.split(|s| *s).map(|run| run.len()).max().unwrap_or(0);
    let m = max_consecutive_losses(&budget, delta)?;
    println!("longest outage {longest} steps, bound M = {m}");
    assert!(longest as u64 <= m);

    let k = steps as u64;
    let got = ok.iter().filter(|s| **s).count() as u64;
    let floor = min_successes(&budget, delta, k)?;
    println!("{got} successes in {k} attempts, guaranteed at least {floor}");
    Ok(())
}

fn main() {
    run_example().unwrap();
}
