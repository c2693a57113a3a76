//! Scalar MMSE curves: real and complex BPSK from the 1-D kernel, and QPSK and
//! 16-QAM by 2-D quadrature. QPSK matches complex BPSK at half the snr.
//!
//! cargo run --example scalar_mmse

use mimo_mmse::alphabet::{make_scalar, Constellation};
use mimo_mmse::mmse::{mmse_complex_bpsk, mmse_real_bpsk, mmse_siso_general};
use mimo_mmse::numerics::{QuadratureRule, Snr};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rule = QuadratureRule::default();
    let qpsk = make_scalar(Constellation::Qpsk)?;
    let qam16 = make_scalar(Constellation::Qam(16))?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>12}", "dB", "real bpsk", "cplx bpsk", "qpsk", "bpsk(s/2)", "16qam");
    for db in (-10..=20).step_by(5) {
        let s = Snr::from_db(db as f64)?;
        println!(
            "{db:>6} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e}",
            mmse_real_bpsk(s, &rule),
            mmse_complex_bpsk(s, &rule),
            mmse_siso_general(&qpsk, s, &rule)?,
            mmse_complex_bpsk(s.scaled(0.5)?, &rule),
            mmse_siso_general(&qam16, s, &rule)?,
        );
    }
    Ok(())
}
