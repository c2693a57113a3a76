//! Conditional-mean, maximum-likelihood and genie-aided pairwise estimators.

use num_complex::Complex64;

use crate::alphabet::Alphabet;
use crate::channel::{received_constellation, ChannelMatrix, ReceivedConstellation};
use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp_values, Snr};

/// A received vector `y = √snr·H x + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(Vec<Complex64>);

impl Observation {
    pub fn new(y: Vec<Complex64>) -> Self {
        Self(y)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The candidate pair `{x_i, x_j}` revealed by the genie.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeniePair {
    pub i: usize,
    pub j: usize,
}

impl GeniePair {
    pub fn new(i: usize, j: usize, m: usize) -> Result<Self> {
        if i == j || i >= m || j >= m {
            return Err(Error::InvalidAlphabet(format!(
                "genie pair ({i}, {j}) invalid for {m} points"
            )));
        }
        Ok(Self { i, j })
    }
}

/// Gaussian-mixture likelihood of `y` over the received constellation at a
/// fixed SNR. Shared by the estimators and the Monte Carlo loops.
pub(crate) struct Likelihood<'a> {
    rc: &'a ReceivedConstellation,
    log_p: Vec<f64>,
    sqrt_snr: f64,
}

impl<'a> Likelihood<'a> {
    pub(crate) fn new(rc: &'a ReceivedConstellation, a: &Alphabet, snr: Snr) -> Self {
        Self {
            rc,
            log_p: a.probs().iter().map(|p| p.ln()).collect(),
            sqrt_snr: snr.sqrt(),
        }
    }

    /// `‖y − √snr·H x_i‖²`.
    #[inline]
    pub(crate) fn distance_sq(&self, y: &[Complex64], i: usize) -> f64 {
        y.iter()
            .zip(self.rc.image(i))
            .map(|(yk, hk)| (yk - self.sqrt_snr * hk).norm_sqr())
            .sum()
    }

    /// Normalized posterior weights `w_i ∝ p_i exp(−‖y − √snr·H x_i‖²)`.
    pub(crate) fn posterior(&self, y: &[Complex64], out: &mut [f64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.log_p[i] - self.distance_sq(y, i);
        }
        let lse = log_sum_exp_values(out.iter().copied());
        out.iter_mut().for_each(|v| *v = (*v - lse).exp());
    }

    pub(crate) fn ml_index(&self, y: &[Complex64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for i in 0..self.rc.len() {
            let d = self.distance_sq(y, i);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

fn check_observation(y: &Observation, h: &ChannelMatrix) -> Result<()> {
    if y.len() != h.n_rx() {
        return Err(Error::DimensionMismatch(format!(
            "observation has {} entries, channel has {} receive antennas",
            y.len(),
            h.n_rx()
        )));
    }
    Ok(())
}

/// `E{x | y}` as a posterior-weighted average of the alphabet points.
pub fn conditional_mean(
    y: &Observation,
    h: &ChannelMatrix,
    a: &Alphabet,
    snr: Snr,
) -> Result<Vec<Complex64>> {
    check_observation(y, h)?;
    let rc = received_constellation(h, a)?;
    let lik = Likelihood::new(&rc, a, snr);
    let mut w = vec![0.0; a.len()];
    lik.posterior(y.as_slice(), &mut w);
    let mut est = vec![Complex64::new(0.0, 0.0); a.n_t()];
    for (x, &wi) in a.points().zip(&w) {
        for (e, v) in est.iter_mut().zip(x) {
            *e += wi * v;
        }
    }
    Ok(est)
}

/// Index of the alphabet point minimizing `‖y − √snr·H x‖²`; ties go to the
/// lowest index.
pub fn ml_estimate(y: &Observation, h: &ChannelMatrix, a: &Alphabet, snr: Snr) -> Result<usize> {
    check_observation(y, h)?;
    let rc = received_constellation(h, a)?;
    Ok(Likelihood::new(&rc, a, snr).ml_index(y.as_slice()))
}

/// The scalar `S = tanh(2√snr·Re⟨H(x_i−x_j)/2, ỹ⟩)` with `ỹ = y − √snr·H(x_i+x_j)/2`.
pub fn genie_scalar(
    y: &Observation,
    pair: GeniePair,
    h: &ChannelMatrix,
    a: &Alphabet,
    snr: Snr,
) -> Result<f64> {
    check_observation(y, h)?;
    if a.n_t() != h.n_tx() || pair.i.max(pair.j) >= a.len() {
        return Err(Error::DimensionMismatch("genie pair or alphabet does not fit channel".into()));
    }
    let (xi, xj) = (a.point(pair.i), a.point(pair.j));
    let half_sum: Vec<Complex64> = xi.iter().zip(xj).map(|(p, q)| (p + q) * 0.5).collect();
    let half_diff: Vec<Complex64> = xi.iter().zip(xj).map(|(p, q)| (p - q) * 0.5).collect();
    let centre = h.apply(&half_sum);
    let direction = h.apply(&half_diff);
    let s = snr.sqrt();
    let proj: f64 = y
        .as_slice()
        .iter()
        .zip(&centre)
        .zip(&direction)
        .map(|((yk, ck), dk)| ((yk - s * ck).conj() * dk).re)
        .sum();
    Ok((2.0 * s * proj).tanh())
}

/// Conditional mean restricted to the equiprobable pair `{x_i, x_j}`.
pub fn genie_estimate(
    y: &Observation,
    pair: GeniePair,
    h: &ChannelMatrix,
    a: &Alphabet,
    snr: Snr,
) -> Result<Vec<Complex64>> {
    let s = genie_scalar(y, pair, h, a, snr)?;
    let (xi, xj) = (a.point(pair.i), a.point(pair.j));
    Ok(xi
        .iter()
        .zip(xj)
        .map(|(p, q)| s * (p - q) * 0.5 + (p + q) * 0.5)
        .collect())
}
