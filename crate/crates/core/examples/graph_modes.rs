// Laplacian spectrum of a ring, its consensus basis, and the grounded
// matrix once a leader pins two of the agents.

use dos_consensus::topology::{consensus_basis, grounded_basis, laplacian, Graph, LeaderLinks};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let ring = Graph::from_edges(5, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 0, 1.0)])?;
    let l = laplacian(&ring);
    let modes = consensus_basis(&ring)?;
    println!("Laplacian eigenvalues: {:.4?}", modes.eigenvalues);
    println!("first basis column: {:.4?}", (0..5).map(|i| modes.basis[(i, 0)]).collect::<Vec<_>>());

    // Uᵀ L U is diagonal.
    let u = &modes.basis;
    let d = &(&u.transpose() * &l) * u;
    let off = (0..5)
        .flat_map(|i| (0..5).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| d[(i, j)].abs())
        .fold(0.0, f64::max);
    println!("largest off-diagonal of Uᵀ L U: {off:.1e}");

    let pins = LeaderLinks::new(vec![1.0, 0.0, 0.0, 0.5, 0.0])?;
    let grounded = grounded_basis(&ring, &pins)?;
    println!("L + D eigenvalues: {:.4?}", grounded.eigenvalues);
    assert!(grounded.eigenvalues[0] > 0.0);

    let split = Graph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)])?;
    println!("two components: {}", consensus_basis(&split).unwrap_err());
    Ok(())
}

fn main() {
    run_example().unwrap();
}
