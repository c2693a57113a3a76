//! Average MI over Rayleigh SIMO channels and the slope of the MI gap,
//! for N = 1 and N = 2 receive antennas.
//!
//! cargo run --release --example diversity_order [trials] [noise_draws]

use mimo_mmse::alphabet::{make_scalar, Constellation};
use mimo_mmse::fading::{average_mi, diversity_slope, DEFAULT_NOISE_DRAWS, DEFAULT_TRIALS, DEFAULT_WINDOW_DB};
use mimo_mmse::mi::{mi_asymptote, SnrGrid};
use mimo_mmse::mmse::McConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().map(|s| s.parse()).transpose()?.unwrap_or(DEFAULT_TRIALS);
    let draws = args.next().map(|s| s.parse()).transpose()?.unwrap_or(DEFAULT_NOISE_DRAWS);

    let bpsk = make_scalar(Constellation::Bpsk)?;
    let grid = SnrGrid::from_db_range(DEFAULT_WINDOW_DB.0, 1.0, DEFAULT_WINDOW_DB.1)?;
    let cfg = McConfig::new(2024, draws, draws)?;
    for n in [1, 2] {
        let result = average_mi(n, &bpsk, &grid, trials, &cfg)?;
        let fit = diversity_slope(&result, mi_asymptote(&bpsk), DEFAULT_WINDOW_DB)?;
        println!("N = {n}");
        for ((db, mi), se) in result.snr_db.iter().zip(&result.avg_mi).zip(&result.std_error) {
            println!("  {db:5.1} dB  gap {:.4e}  (se {se:.1e})", mi_asymptote(&bpsk) - mi);
        }
        println!("  slope {:.3} (expected {}), r² {:.4}", fit.slope, -(n as f64), fit.r_squared);
    }
    Ok(())
}
