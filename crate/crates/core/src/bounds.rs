//! Closed-form lower (genie-aided) and upper (ML union) bounds on the MIMO
//! MMSE, built from the pairwise distances of the received constellation.

use crate::alphabet::Alphabet;
use crate::channel::ReceivedConstellation;
use crate::error::{Error, Result};
use crate::numerics::{binary_kernel, default_rule, q_function, QuadratureRule, Snr};

/// `lower ≤ mmse ≤ upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
}

/// Genie kernel `¼[1 − ∫ tanh(√x·a) e^{−(a−√x/2)²}/√π da]`.
pub fn f_lower(x: f64) -> f64 {
    f_lower_with(x, default_rule())
}

pub fn f_lower_with(x: f64, rule: &QuadratureRule) -> f64 {
    0.25 * binary_kernel(0.5 * x.max(0.0).sqrt(), rule)
}

/// Pairwise-error kernel `Q(√(x/2))`.
pub fn f_upper(x: f64) -> f64 {
    q_function((x.max(0.0) / 2.0).sqrt())
}

fn check_inputs(rc: &ReceivedConstellation, a: &Alphabet) -> Result<()> {
    if rc.len() != a.len() {
        return Err(Error::DimensionMismatch(format!(
            "received constellation has {} points, alphabet {}",
            rc.len(),
            a.len()
        )));
    }
    if !a.is_equiprobable() {
        return Err(Error::NonUniformPrior);
    }
    Ok(())
}

/// `(1/(M(M−1))) Σ_{i≠j} d_ij²·f_lower(snr·d_ij²)`.
pub fn mmse_lower_bound(
    rc: &ReceivedConstellation,
    a: &Alphabet,
    snr: Snr,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_inputs(rc, a)?;
    let m = a.len() as f64;
    let s = snr.linear();
    let sum: f64 = rc
        .pairs()
        .filter(|&(_, _, d2)| d2 > 0.0)
        .map(|(_, _, d2)| d2 * f_lower_with(s * d2, rule))
        .sum();
    Ok(2.0 * sum / (m * (m - 1.0)))
}

/// `(1/M) Σ_{i≠j} d_ij²·Q(√(snr·d_ij²/2))`.
pub fn mmse_upper_bound(rc: &ReceivedConstellation, a: &Alphabet, snr: Snr) -> Result<f64> {
    check_inputs(rc, a)?;
    let m = a.len() as f64;
    let s = snr.linear();
    let sum: f64 = rc
        .pairs()
        .filter(|&(_, _, d2)| d2 > 0.0)
        .map(|(_, _, d2)| d2 * f_upper(s * d2))
        .sum();
    Ok(2.0 * sum / m)
}

pub fn mmse_bounds(
    rc: &ReceivedConstellation,
    a: &Alphabet,
    snr: Snr,
    rule: &QuadratureRule,
) -> Result<BoundPair> {
    Ok(BoundPair {
        lower: mmse_lower_bound(rc, a, snr, rule)?,
        upper: mmse_upper_bound(rc, a, snr)?,
    })
}
