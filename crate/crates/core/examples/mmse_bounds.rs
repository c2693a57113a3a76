//! Monte Carlo MMSE of a seeded 2x2 Rayleigh link with BPSK on each antenna,
//! between its closed-form lower and upper bounds.
//!
//! cargo run --release --example mmse_bounds [samples]

use mimo_mmse::alphabet::{make_scalar, product_alphabet, Constellation};
use mimo_mmse::bounds::mmse_bounds;
use mimo_mmse::channel::{received_constellation, sample_rayleigh};
use mimo_mmse::mi::db_range;
use mimo_mmse::mmse::{mmse_mimo_mc, McConfig, DEFAULT_CHUNK};
use mimo_mmse::numerics::{QuadratureRule, RngStream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let samples = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(100_000);
    let a = product_alphabet(&make_scalar(Constellation::Bpsk)?, 2)?;
    let h = sample_rayleigh(&RngStream::new(5, 0), 2, 2)?;
    let rc = received_constellation(&h, &a)?;
    let rule = QuadratureRule::default();
    let cfg = McConfig::new(5, samples, DEFAULT_CHUNK.min(samples))?;

    println!("min d² = {:.4}", rc.min_d2().unwrap_or(0.0));
    println!("{:>6} {:>12} {:>12} {:>10} {:>12}  inside", "dB", "lower", "mmse", "se", "upper");
    for s in db_range(-5.0, 5.0, 25.0)? {
        let b = mmse_bounds(&rc, &a, s, &rule)?;
        let e = mmse_mimo_mc(&h, &a, s, &cfg)?;
        let inside = b.lower - 3.0 * e.std_error <= e.mean && e.mean <= b.upper + 3.0 * e.std_error;
        println!(
            "{:>6.1} {:>12.4e} {:>12.4e} {:>10.1e} {:>12.4e}  {inside}",
            s.db(),
            b.lower,
            e.mean,
            e.std_error,
            b.upper
        );
    }
    Ok(())
}
