// Recomputes the benchmark's spectral radii, tolerances and bit counts
// under both readings of the plant matrix.

use dos_consensus::benchmark::{a_matrix, AReading};
use dos_consensus::cli::reproduce::summary;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let printed = a_matrix(AReading::Printed);
    let reconciled = a_matrix(AReading::Reconciled);
    println!("the readings differ by {:.2} in one entry", printed.max_abs_diff(&reconciled));

    let s = summary()?;
    print!("{}", s.render());
    let failing: Vec<String> = s
        .rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} ({})", r.quantity, r.reading.as_deref().unwrap_or("-")))
        .collect();
    println!("\nrows off target: {}", failing.join(", "));
    Ok(())
}

fn main() {
    run_example().unwrap();
}
