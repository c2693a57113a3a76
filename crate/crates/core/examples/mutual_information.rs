//! Mutual information of scalar BPSK three ways (Monte Carlo, integrated
//! MMSE, and the closed-form bounds), plus the derivative identity dI/dsnr = mmse.
//!
//! cargo run --release --example mutual_information

use mimo_mmse::alphabet::{make_scalar, Constellation};
use mimo_mmse::channel::{received_constellation, ChannelMatrix};
use mimo_mmse::mi::{default_tail_cap, mi_bounds, mi_from_mmse, mi_mc_derivative, mi_mc_sweep, SnrGrid};
use mimo_mmse::mmse::{mmse_complex_bpsk, McConfig};
use mimo_mmse::numerics::{QuadratureRule, Snr};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bpsk = make_scalar(Constellation::Bpsk)?;
    let h = ChannelMatrix::scalar(Complex64::new(1.0, 0.0))?;
    let rc = received_constellation(&h, &bpsk)?;
    let rule = QuadratureRule::default();
    let cfg = McConfig::new(1, 100_000, 10_000)?;
    let cap = default_tail_cap(&rc, &bpsk)?;
    let fine = SnrGrid::log_spaced(Snr::new(1e-3)?, Snr::new(1e3)?, 400)?;
    let curve = |s: Snr| mmse_complex_bpsk(s, &rule);

    let snrs: Vec<Snr> = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0].iter().map(|&d| Snr::from_db(d)).collect::<Result<_, _>>()?;
    let mc = mi_mc_sweep(&h, &bpsk, &snrs, &cfg)?;
    println!("{:>6} {:>10} {:>9} {:>10} {:>10} {:>10}", "dB", "mc", "se", "integral", "lower", "upper");
    for (s, e) in snrs.iter().zip(&mc) {
        let b = mi_bounds(&rc, &bpsk, *s, cap)?;
        println!(
            "{:>6.1} {:>10.6} {:>9.1e} {:>10.6} {:>10.6} {:>10.6}",
            s.db(),
            e.mean,
            e.std_error,
            mi_from_mmse(curve, *s, &fine)?,
            b.lower,
            b.upper
        );
    }

    println!("\nderivative identity (1% central difference vs mmse):");
    for s in [1.0, 4.0, 10.0] {
        let s = Snr::new(s)?;
        let d = mi_mc_derivative(&h, &bpsk, s, 0.01, &cfg)?;
        println!("  snr {:>4}: dI/dsnr {:.5} ± {:.1e}, mmse {:.5}", s.linear(), d.mean, d.std_error, curve(s));
    }
    Ok(())
}
