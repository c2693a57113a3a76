//! Builds the standard constellations and a product alphabet, and prints
//! their power, entropy and the JSON form used by `--alphabet-file`.
//!
//! cargo run --example constellations

use mimo_mmse::alphabet::{make_scalar, product_alphabet, Constellation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for kind in [
        Constellation::Bpsk,
        Constellation::Qpsk,
        Constellation::Psk(8),
        Constellation::Qam(16),
        Constellation::Qam(64),
    ] {
        let a = make_scalar(kind)?;
        let power: f64 = a.points().zip(a.probs()).map(|(x, p)| p * x[0].norm_sqr()).sum();
        println!(
            "{kind:?}: M = {:2}, power {power:.12}, entropy {:.6} nats, |mean| {:.1e}",
            a.len(),
            a.entropy(),
            a.mean()[0].norm()
        );
    }

    let qpsk2 = product_alphabet(&make_scalar(Constellation::Qpsk)?, 2)?;
    let r = qpsk2.second_moment();
    println!("\nQPSK x 2 antennas: M = {}", qpsk2.len());
    println!("  E{{xx†}} = [[{:.3}, {:.3}], [{:.3}, {:.3}]]", r[0], r[1], r[2], r[3]);

    println!("\nBPSK as JSON:\n{}", make_scalar(Constellation::Bpsk)?.to_json());
    Ok(())
}
