//! Small-distance behaviour of a pairwise received distance over Rayleigh
//! SIMO channels: P(d² < ε) scales like ε^N, which drives diversity order N.
//!
//! cargo run --release --example distance_density [trials]

use mimo_mmse::alphabet::{make_scalar, Constellation};
use mimo_mmse::estimators::GeniePair;
use mimo_mmse::fading::distance_density_probe;
use mimo_mmse::numerics::RngStream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2_000_000);
    let bpsk = make_scalar(Constellation::Bpsk)?;
    let pair = GeniePair::new(0, 1, bpsk.len())?;
    let eps = [3.2, 1.6, 0.8, 0.4, 0.2];
    for n in [1, 2, 3] {
        let d = distance_density_probe(n, &bpsk, pair, trials, &RngStream::new(99, n as u64))?;
        println!("N = {n}");
        for w in eps.windows(2) {
            let (hi, lo) = (d.fraction_below(w[0]), d.fraction_below(w[1]));
            println!("  P(d² < {:<3}) = {lo:.3e}   local exponent {:.2}", w[1], (hi / lo).log2());
        }
        for (lo, hi, count) in d.histogram(8, 8.0) {
            println!("  [{lo:3.1}, {hi:3.1}) {}", "#".repeat(count * 60 / trials.max(1)));
        }
    }
    Ok(())
}
