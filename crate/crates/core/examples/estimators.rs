//! Conditional-mean, ML and genie estimates on one noisy observation of a
//! 2x2 link, and their empirical squared errors over many draws.
//!
//! cargo run --release --example estimators

use mimo_mmse::alphabet::{make_scalar, product_alphabet, Constellation};
use mimo_mmse::channel::sample_rayleigh;
use mimo_mmse::estimators::{conditional_mean, genie_estimate, ml_estimate, GeniePair, Observation};
use mimo_mmse::numerics::{complex_gaussian, RngStream, Snr};
use num_complex::Complex64;
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = product_alphabet(&make_scalar(Constellation::Bpsk)?, 2)?;
    let h = sample_rayleigh(&RngStream::new(11, 0), 2, 2)?;
    let snr = Snr::from_db(5.0)?;
    let mut rng = RngStream::new(11, 1).rng();

    let observe = |rng: &mut rand_chacha::ChaCha8Rng, i: usize| {
        let hx = h.apply(a.point(i));
        let y: Vec<Complex64> = hx.iter().map(|v| snr.sqrt() * v + complex_gaussian(rng)).collect();
        Observation::new(y)
    };
    let err = |est: &[Complex64], i: usize| -> f64 {
        let diff: Vec<Complex64> = a.point(i).iter().zip(est).map(|(p, q)| p - q).collect();
        h.apply(&diff).iter().map(|v| v.norm_sqr()).sum()
    };

    let show = |v: &[Complex64]| v.iter().map(|z| format!("{:+.4}{:+.4}i", z.re, z.im)).collect::<Vec<_>>().join(", ");
    let y = observe(&mut rng, 0);
    println!("sent x_0          [{}]", show(a.point(0)));
    println!("conditional mean  [{}]", show(&conditional_mean(&y, &h, &a, snr)?));
    println!("ML                [{}]", show(a.point(ml_estimate(&y, &h, &a, snr)?)));
    println!("genie {{x_0, x_1}}  [{}]", show(&genie_estimate(&y, GeniePair::new(0, 1, a.len())?, &h, &a, snr)?));

    let trials = 20_000;
    let (mut cm, mut ml, mut genie) = (0.0, 0.0, 0.0);
    for _ in 0..trials {
        let i = rng.random_range(0..a.len());
        let j = (i + rng.random_range(1..a.len())) % a.len();
        let y = observe(&mut rng, i);
        cm += err(&conditional_mean(&y, &h, &a, snr)?, i);
        ml += err(a.point(ml_estimate(&y, &h, &a, snr)?), i);
        genie += err(&genie_estimate(&y, GeniePair::new(i, j, a.len())?, &h, &a, snr)?, i);
    }
    let n = trials as f64;
    println!("\nempirical E‖H(x − x̂)‖² over {trials} draws at 5 dB:");
    println!("  genie {:.4e} <= conditional mean {:.4e} <= ML {:.4e}", genie / n, cm / n, ml / n);
    Ok(())
}
