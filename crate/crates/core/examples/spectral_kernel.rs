// Spectral radius, induced norms, Kronecker products and a power-decay
// certificate on a small non-normal matrix.

use dos_consensus::matops::{
    induced_inf_norm, kron, power_decay_certificate, spectral_norm, spectral_radius, Matrix,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // Non-normal: powers grow before they decay.
    let m = Matrix::from_rows(&[[0.6, 2.0], [0.0, 0.7]])?;
    let rho = spectral_radius(&m)?;
    println!("rho = {rho:.4}, ‖M‖_2 = {:.4}, ‖M‖_inf = {:.4}", spectral_norm(&m), induced_inf_norm(&m));
    assert!(spectral_norm(&m) >= rho);

    let cert = power_decay_certificate(&m, 0.8, 1000)?;
    println!("‖M^p‖ <= {:.4}·0.8^p for all p (first contracting power {})", cert.c, cert.p_star);
    for p in [1, 5, 20] {
        let np = spectral_norm(&m.pow(p)?);
        assert!(np <= cert.bound(p) * (1.0 + 1e-12));
        println!("  p = {p:>2}: ‖M^p‖ = {np:.5} <= {:.5}", cert.bound(p));
    }

    let i2 = Matrix::identity(2);
    let k = kron(&i2, &m);
    println!("I ⊗ M is {}x{} with the same spectral radius {:.4}", k.rows(), k.cols(), spectral_radius(&k)?);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
