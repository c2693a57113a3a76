//! Exact MMSE: Gauss–Hermite quadrature for SISO and SIMO links, Monte
//! Carlo for general MIMO channels.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::alphabet::Alphabet;
use crate::channel::{received_constellation, ChannelMatrix};
use crate::error::{Error, Result};
use crate::estimators::Likelihood;
use crate::numerics::{
    binary_kernel, complex_gaussian, log_sum_exp_values, QuadratureRule, RngStream, Snr,
};

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_CHUNK: usize = 10_000;
const MIN_SAMPLES: usize = 1_000;

/// Largest alphabet handled by the 2-D quadrature.
pub const MAX_QUADRATURE_ALPHABET: usize = 64;

/// How the noise is drawn in [`mmse_mimo_mc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseSampling {
    /// `n ~ CN(0, I)` as in the model.
    Plain,
    /// Half the draws shifted to a pairwise decision midpoint, reweighted by
    /// the density ratio. Unbiased, with weights bounded by 2, and keeps the
    /// estimate and its standard error honest when decision errors are rare.
    #[default]
    MidpointMixture,
}

/// Seed and sample schedule for a Monte Carlo run. Chunk `c` draws from
/// the substream `(seed, c)`, so results do not depend on the worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub seed: u64,
    pub samples: usize,
    pub chunk: usize,
    pub sampling: NoiseSampling,
}

impl McConfig {
    pub fn new(seed: u64, samples: usize, chunk: usize) -> Result<Self> {
        if samples < MIN_SAMPLES {
            return Err(Error::InvalidConfig(format!(
                "samples must be at least {MIN_SAMPLES}, got {samples}"
            )));
        }
        if chunk == 0 {
            return Err(Error::InvalidConfig("chunk must be positive".into()));
        }
        Ok(Self {
            seed,
            samples,
            chunk,
            sampling: NoiseSampling::default(),
        })
    }

    /// Default schedule (10⁶ samples in chunks of 10⁴).
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            samples: DEFAULT_SAMPLES,
            chunk: DEFAULT_CHUNK,
            sampling: NoiseSampling::default(),
        }
    }

    pub fn sampling(self, sampling: NoiseSampling) -> Self {
        Self { sampling, ..self }
    }

    pub fn chunks(&self) -> usize {
        self.samples.div_ceil(self.chunk)
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Running mean and centered second moment (Welford), mergeable.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    pub(crate) fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub(crate) fn estimate(&self) -> McEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.n as f64).sqrt(),
            samples: self.n,
        }
    }
}

/// Runs `body(rng, count, moments)` once per chunk in parallel and merges
/// the per-chunk moments in chunk order.
pub(crate) fn run_chunks<F>(cfg: &McConfig, outputs: usize, body: F) -> Vec<Moments>
where
    F: Fn(&mut ChaCha8Rng, usize, &mut [Moments]) + Sync,
{
    let partials: Vec<Vec<Moments>> = (0..cfg.chunks())
        .into_par_iter()
        .map(|c| {
            let mut rng = RngStream::new(cfg.seed, c as u64).rng();
            let count = cfg.chunk.min(cfg.samples - c * cfg.chunk);
            let mut acc = vec![Moments::default(); outputs];
            body(&mut rng, count, &mut acc);
            acc
        })
        .collect();
    let mut total = vec![Moments::default(); outputs];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
}

/// MMSE of real BPSK over real AWGN: `1 − ∫ tanh(√snr·y) φ(y − √snr) dy`.
pub fn mmse_real_bpsk(snr: Snr, rule: &QuadratureRule) -> f64 {
    binary_kernel((snr.linear() / 2.0).sqrt(), rule)
}

/// MMSE of BPSK over the complex AWGN channel:
/// `1 − ∫ tanh(2√snr·a) e^{−(a−√snr)²}/√π da`.
pub fn mmse_complex_bpsk(snr: Snr, rule: &QuadratureRule) -> f64 {
    binary_kernel(snr.sqrt(), rule)
}

/// MMSE of an arbitrary scalar alphabet over complex AWGN, by tensor
/// quadrature over Re/Im recentered on each `√snr·x_k`.
pub fn mmse_siso_general(a: &Alphabet, snr: Snr, rule: &QuadratureRule) -> Result<f64> {
    if a.n_t() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "SISO MMSE needs a scalar alphabet, got n_t = {}",
            a.n_t()
        )));
    }
    if a.len() > MAX_QUADRATURE_ALPHABET {
        return Err(Error::QuadratureAlphabetTooLarge(a.len()));
    }
    let h = ChannelMatrix::scalar(Complex64::new(1.0, 0.0))?;
    let rc = received_constellation(&h, a)?;
    let lik = Likelihood::new(&rc, a, snr);
    let nodes: Vec<(f64, f64)> = rule.normalized().collect();
    let s = snr.sqrt();
    let per_component: Vec<f64> = (0..a.len())
        .into_par_iter()
        .map(|k| {
            let xk = a.point(k)[0];
            let centre = s * xk;
            let mut w = vec![0.0; a.len()];
            let mut acc = 0.0;
            for &(tr, wr) in &nodes {
                for &(ti, wi) in &nodes {
                    let y = [centre + Complex64::new(tr, ti)];
                    lik.posterior(&y, &mut w);
                    let est: Complex64 = a.points().zip(&w).map(|(x, &p)| p * x[0]).sum();
                    acc += wr * wi * (xk - est).norm_sqr();
                }
            }
            a.probs()[k] * acc
        })
        .collect();
    Ok(per_component.iter().sum::<f64>().clamp(0.0, 1.0))
}

/// SIMO MMSE through the matched-filter reduction `‖h‖²·mmse_siso(snr‖h‖²)`.
pub fn mmse_simo(h: &ChannelMatrix, a: &Alphabet, snr: Snr, rule: &QuadratureRule) -> Result<f64> {
    if h.n_tx() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "SIMO MMSE needs a single transmit antenna, got {}",
            h.n_tx()
        )));
    }
    let gain = h.frobenius_sq();
    Ok(gain * mmse_siso_general(a, snr.scaled(gain)?, rule)?)
}

/// Monte Carlo estimate of `E‖H x − H·E{x|y}‖²`.
pub fn mmse_mimo_mc(h: &ChannelMatrix, a: &Alphabet, snr: Snr, cfg: &McConfig) -> Result<McEstimate> {
    let rc = received_constellation(h, a)?;
    let lik = Likelihood::new(&rc, a, snr);
    let n_rx = h.n_rx();
    let m = a.len();
    let cumulative: Vec<f64> = a
        .probs()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let s = snr.sqrt();
    let mixture = cfg.sampling == NoiseSampling::MidpointMixture && s > 0.0;
    let log_shift_mass = (0.5 / (m - 1) as f64).ln();
    let moments = run_chunks(cfg, 1, |rng, count, acc| {
        let zero = Complex64::new(0.0, 0.0);
        let mut n = vec![zero; n_rx];
        let mut y = vec![zero; n_rx];
        let mut w = vec![0.0; m];
        let mut resid = vec![zero; n_rx];
        let mut log_ratio = Vec::with_capacity(m);
        for _ in 0..count {
            let u: f64 = rng.random();
            let i = cumulative.partition_point(|&c| c <= u).min(m - 1);
            let img = rc.image(i);
            n.iter_mut().for_each(|nk| *nk = complex_gaussian(rng));
            let mut weight = 1.0;
            if mixture {
                // shift toward the midpoint with x_j: μ = √snr·H(x_j − x_i)/2
                if rng.random::<bool>() {
                    let mut j = rng.random_range(0..m - 1);
                    if j >= i {
                        j += 1;
                    }
                    for ((nk, p), q) in n.iter_mut().zip(img).zip(rc.image(j)) {
                        *nk += 0.5 * s * (q - p);
                    }
                }
                log_ratio.clear();
                log_ratio.push(0.5f64.ln());
                for j in (0..m).filter(|&j| j != i) {
                    let dot: f64 = n
                        .iter()
                        .zip(img)
                        .zip(rc.image(j))
                        .map(|((nk, p), q)| (nk.conj() * (0.5 * s * (q - p))).re)
                        .sum();
                    let mu2 = 0.25 * snr.linear() * rc.d2(i, j);
                    log_ratio.push(log_shift_mass + 2.0 * dot - mu2);
                }
                weight = (-log_sum_exp_values(log_ratio.iter().copied())).exp();
            }
            for ((yk, hk), nk) in y.iter_mut().zip(img).zip(&n) {
                *yk = s * hk + nk;
            }
            lik.posterior(&y, &mut w);
            resid.iter_mut().for_each(|r| *r = zero);
            for (j, &wj) in w.iter().enumerate() {
                if wj == 0.0 || j == i {
                    continue;
                }
                for ((r, p), q) in resid.iter_mut().zip(img).zip(rc.image(j)) {
                    *r += wj * (p - q);
                }
            }
            let err: f64 = resid.iter().map(|r| r.norm_sqr()).sum();
            acc[0].push(weight * err);
        }
    });
    Ok(moments[0].estimate())
}
