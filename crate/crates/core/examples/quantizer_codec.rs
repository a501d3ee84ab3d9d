// The mid-tread quantizer: levels, saturation, the index codec and the
// number of bits a given resolution costs.

use dos_consensus::quantizer::{bits_required, UniformQuantizer};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q = UniformQuantizer::new(2, 1.0)?;
    println!("R = 2, sigma = 1: {} levels, range {}", q.levels(), q.range());
    for chi in [0.3, 1.5, 2.9, 4.99, 7.0, -1.5] {
        let level = q.quantize_scalar(chi);
        let z = q.encode(level)?;
        println!("  q({chi:>5}) = {level:>3}  index {z:>2}  decoded {}", q.decode(z)?);
    }
    // Only levels have an index.
    println!("encode(3.0): {}", q.encode(3.0).unwrap_err());
    println!("in range: {} / {}", q.in_range(&[4.9, -3.0]), q.in_range(&[5.1]));

    for levels in [3, 10223, 15150, 16385] {
        println!("{levels:>6} levels need {} bits", bits_required(levels));
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
