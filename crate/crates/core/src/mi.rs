//! Mutual information of a fixed channel: Monte Carlo evaluation, the
//! integral of the MMSE over snr, and bounds from the MMSE bounds.

use num_complex::Complex64;
use rand::Rng;

use crate::alphabet::Alphabet;
use crate::bounds::{f_lower, f_upper, BoundPair};
use crate::channel::{received_constellation, ChannelMatrix, ReceivedConstellation};
use crate::error::{Error, Result};
use crate::mmse::{run_chunks, McConfig, McEstimate, NoiseSampling};
use crate::numerics::{complex_gaussian, gauss_legendre, log_sum_exp_values, Snr};

/// Monte Carlo MI estimate in nats.
pub type MiEstimate = McEstimate;

/// Upper-bound integrand level that the tail cap must reach.
pub const TAIL_THRESHOLD: f64 = 1e-10;

/// Integrand level targeted by [`default_tail_cap`].
pub const AUTO_TAIL_LEVEL: f64 = 1e-40;

/// Below this snr the tail integral switches from log to linear spacing.
const LINEAR_FLOOR: f64 = 1e-6;

/// Strictly increasing list of positive snr values.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrGrid {
    points: Vec<Snr>,
}

impl SnrGrid {
    pub fn new(points: Vec<Snr>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points[0].linear() <= 0.0 {
            return Err(Error::InvalidGrid("points must be positive".into()));
        }
        if points.windows(2).any(|w| w[1].linear() <= w[0].linear()) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `start, start + step, …` up to and including `stop` (in dB).
    pub fn from_db_range(start: f64, step: f64, stop: f64) -> Result<Self> {
        Self::new(db_range(start, step, stop)?)
    }

    /// `n` points evenly spaced in dB between `lo` and `hi`.
    pub fn log_spaced(lo: Snr, hi: Snr, n: usize) -> Result<Self> {
        if n < 2 || lo.linear() <= 0.0 || hi.linear() <= lo.linear() {
            return Err(Error::InvalidGrid(format!(
                "cannot space {n} points between {} and {}",
                lo.linear(),
                hi.linear()
            )));
        }
        let (a, b) = (lo.linear().ln(), hi.linear().ln());
        let points = (0..n)
            .map(|k| Snr::new((a + (b - a) * k as f64 / (n - 1) as f64).exp()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn points(&self) -> &[Snr] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max(&self) -> Snr {
        self.points[self.points.len() - 1]
    }
}

/// Inclusive dB range as linear snr values; a single point when
/// `start == stop`.
pub fn db_range(start: f64, step: f64, stop: f64) -> Result<Vec<Snr>> {
    if !(start.is_finite() && step.is_finite() && stop.is_finite()) {
        return Err(Error::InvalidGrid("range values must be finite".into()));
    }
    if stop < start {
        return Err(Error::InvalidGrid(format!("stop {stop} is below start {start}")));
    }
    if stop > start && step <= 0.0 {
        return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
    }
    let count = if stop > start {
        ((stop - start) / step + 1e-9).floor() as usize + 1
    } else {
        1
    };
    if count > 100_000 {
        return Err(Error::InvalidGrid(format!("{count} points is too many")));
    }
    (0..count)
        .map(|k| Snr::from_db(start + k as f64 * step))
        .collect()
}

/// Evaluates one noise draw of the MI closed form for every outer index.
///
/// For outer index `i` the inner exponent is
/// `log p_j − ‖n + √snr·H(x_i − x_j)‖² + ‖n‖²`; adding `‖n‖²` per draw
/// instead of the constant `−N` leaves the expectation unchanged, makes
/// every draw at `snr = 0` give zero and removes most of the variance. With midpoint
/// sampling, half the draws for index `i` are shifted to the decision
/// midpoint toward a random `j ≠ i` and reweighted by the density ratio.
struct MiSampler<'a> {
    rc: &'a ReceivedConstellation,
    m: usize,
    log_p: Vec<f64>,
    p: Vec<f64>,
    d2: Vec<f64>,
    gram: Vec<f64>,
    mixture: bool,
}

impl<'a> MiSampler<'a> {
    fn new(rc: &'a ReceivedConstellation, a: &Alphabet, sampling: NoiseSampling) -> Self {
        let m = a.len();
        let mut d2 = vec![0.0; m * m];
        let mut gram = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                d2[i * m + j] = rc.d2(i, j);
                gram[i * m + j] = rc
                    .image(i)
                    .iter()
                    .zip(rc.image(j))
                    .map(|(u, v)| (u.conj() * v).re)
                    .sum();
            }
        }
        Self {
            rc,
            m,
            log_p: a.probs().iter().map(|p| p.ln()).collect(),
            p: a.probs().to_vec(),
            d2,
            gram,
            mixture: sampling == NoiseSampling::MidpointMixture && m > 1,
        }
    }

    /// One draw: base noise `z` and, per outer index, an optional midpoint
    /// target. Consumes the same random numbers whatever the snr points.
    fn draw<R: Rng>(&self, rng: &mut R, z: &mut [Complex64], z_proj: &mut [f64], targets: &mut [Option<usize>]) {
        z.iter_mut().for_each(|zk| *zk = complex_gaussian(rng));
        for (j, zp) in z_proj.iter_mut().enumerate() {
            *zp = z.iter().zip(self.rc.image(j)).map(|(a, b)| (a.conj() * b).re).sum();
        }
        for (i, t) in targets.iter_mut().enumerate() {
            *t = None;
            if self.mixture && rng.random::<bool>() {
                let mut j = rng.random_range(0..self.m - 1);
                if j >= i {
                    j += 1;
                }
                *t = Some(j);
            }
        }
    }

    /// Adds the deficit `Σ_i p_i w_i L_i(snr)` for each `snr` in `evals` to
    /// `out`, with the shift and weight built at `proposal`.
    fn evaluate(
        &self,
        z_proj: &[f64],
        targets: &[Option<usize>],
        proposal: f64,
        evals: &[f64],
        proj: &mut [f64],
        out: &mut [f64],
    ) {
        let m = self.m;
        let root = proposal.sqrt();
        let use_mixture = self.mixture && proposal > 0.0;
        let log_half = 0.5f64.ln();
        let log_shift_mass = (0.5 / (m.max(2) - 1) as f64).ln();
        for i in 0..m {
            let row = i * m;
            // proj[j] = Re⟨n, H x_j⟩ for n = z + shift
            match targets[i].filter(|_| use_mixture) {
                Some(t) => {
                    let c = 0.5 * root;
                    for j in 0..m {
                        proj[j] = z_proj[j] + c * (self.gram[t * m + j] - self.gram[row + j]);
                    }
                }
                None => proj.copy_from_slice(z_proj),
            }
            let weight = if use_mixture {
                let term = |j: usize| log_shift_mass + root * (proj[j] - proj[i]) - 0.25 * proposal * self.d2[row + j];
                let q: f64 = 0.5 + (0..m).filter(|&j| j != i).map(|j| term(j).exp()).sum::<f64>();
                if q.is_finite() {
                    1.0 / q
                } else {
                    let log_q = log_sum_exp_values(std::iter::once(log_half).chain((0..m).filter(|&j| j != i).map(term)));
                    (-log_q).exp()
                }
            } else {
                1.0
            };
            for (slot, &s) in out.iter_mut().zip(evals) {
                *slot += self.p[i] * weight * self.excess(i, s, proj);
            }
        }
    }

    /// `L_i = log Σ_j p_j e^{…} − log p_i ≥ 0`, kept accurate when tiny.
    fn excess(&self, i: usize, s: f64, proj: &[f64]) -> f64 {
        let m = self.m;
        let row = i * m;
        let rs = s.sqrt();
        let own = self.log_p[i];
        let rel = |j: usize| self.log_p[j] - own - s * self.d2[row + j] - 2.0 * rs * (proj[i] - proj[j]);
        let rest: f64 = (0..m).filter(|&j| j != i).map(|j| rel(j).exp()).sum();
        if rest.is_finite() {
            return rest.ln_1p();
        }
        // overflow: rescale by the largest relative exponent
        let top = (0..m).filter(|&j| j != i).map(rel).fold(0.0, f64::max);
        let scaled: f64 = (0..m).filter(|&j| j != i).map(|j| (rel(j) - top).exp()).sum();
        top + ((-top).exp() + scaled).ln()
    }
}

/// Monte Carlo MI (nats) at each snr. All points reuse the same base noise
/// draws, so differences between points are low-variance. The sampled
/// quantity is the deficit `H(x) − I`, which keeps full relative precision
/// near saturation.
pub fn mi_mc_sweep(h: &ChannelMatrix, a: &Alphabet, snrs: &[Snr], cfg: &McConfig) -> Result<Vec<MiEstimate>> {
    let rc = received_constellation(h, a)?;
    let sampler = MiSampler::new(&rc, a, cfg.sampling);
    let (m, n_rx) = (a.len(), h.n_rx());
    let moments = run_chunks(cfg, snrs.len(), |rng, count, acc| {
        let mut z = vec![Complex64::new(0.0, 0.0); n_rx];
        let mut z_proj = vec![0.0; m];
        let mut targets = vec![None; m];
        let mut proj = vec![0.0; m];
        let mut value = [0.0];
        for _ in 0..count {
            sampler.draw(rng, &mut z, &mut z_proj, &mut targets);
            for (slot, s) in acc.iter_mut().zip(snrs) {
                value[0] = 0.0;
                let s = s.linear();
                sampler.evaluate(&z_proj, &targets, s, &[s], &mut proj, &mut value);
                slot.push(value[0]);
            }
        }
    });
    let entropy = a.entropy();
    Ok(moments
        .iter()
        .map(|m| {
            let deficit = m.estimate();
            MiEstimate {
                mean: entropy - deficit.mean,
                ..deficit
            }
        })
        .collect())
}

pub fn mi_mc(h: &ChannelMatrix, a: &Alphabet, snr: Snr, cfg: &McConfig) -> Result<MiEstimate> {
    Ok(mi_mc_sweep(h, a, &[snr], cfg)?[0])
}

/// Central difference `(I(s(1+δ)) − I(s(1−δ)))/(2δs)` of the Monte Carlo
/// MI, both ends evaluated on the same draws.
pub fn mi_mc_derivative(
    h: &ChannelMatrix,
    a: &Alphabet,
    snr: Snr,
    rel_step: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    if !(rel_step > 0.0 && rel_step < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "relative step must be in (0, 1), got {rel_step}"
        )));
    }
    if snr.linear() <= 0.0 {
        return Err(Error::InvalidSnr(snr.linear()));
    }
    let rc = received_constellation(h, a)?;
    let sampler = MiSampler::new(&rc, a, cfg.sampling);
    let s = snr.linear();
    let ends = [s * (1.0 - rel_step), s * (1.0 + rel_step)];
    let width = ends[1] - ends[0];
    let (m, n_rx) = (a.len(), h.n_rx());
    let moments = run_chunks(cfg, 1, |rng, count, acc| {
        let mut z = vec![Complex64::new(0.0, 0.0); n_rx];
        let mut z_proj = vec![0.0; m];
        let mut targets = vec![None; m];
        let mut proj = vec![0.0; m];
        for _ in 0..count {
            sampler.draw(rng, &mut z, &mut z_proj, &mut targets);
            let mut value = [0.0, 0.0];
            sampler.evaluate(&z_proj, &targets, s, &ends, &mut proj, &mut value);
            acc[0].push((value[0] - value[1]) / width);
        }
    });
    Ok(moments[0].estimate())
}

/// `∫₀^snr mmse(x) dx` by Gauss–Legendre panels whose breakpoints are the
/// grid points below `snr`.
pub fn mi_from_mmse<F>(mmse_curve: F, snr: Snr, grid: &SnrGrid) -> Result<f64>
where
    F: Fn(Snr) -> f64,
{
    if grid.max().linear() < snr.linear() {
        return Err(Error::InvalidGrid(format!(
            "grid ends at {} but the integral runs to {}",
            grid.max().linear(),
            snr.linear()
        )));
    }
    let top = snr.linear();
    if top == 0.0 {
        return Ok(0.0);
    }
    let mut breaks = vec![0.0];
    breaks.extend(grid.points().iter().map(|s| s.linear()).filter(|&x| x < top));
    breaks.push(top);
    let (gx, gw) = gauss_legendre(16);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, wt) in gx.iter().zip(&gw) {
            total += half * wt * mmse_curve(Snr::new(mid + half * x)?);
        }
    }
    Ok(total)
}

/// `I(∞; H) = H(x)` in nats.
pub fn mi_asymptote(a: &Alphabet) -> f64 {
    a.entropy()
}

/// Distinct received squared distances (over ordered pairs) with their
/// multiplicities, so the kernels run once per distance.
fn distance_classes(rc: &ReceivedConstellation) -> Vec<(f64, f64)> {
    let mut d: Vec<f64> = rc.pairs().map(|(_, _, d2)| d2).filter(|&d2| d2 > 0.0).collect();
    d.sort_by(f64::total_cmp);
    let mut classes: Vec<(f64, f64)> = Vec::new();
    for v in d {
        match classes.last_mut() {
            Some((u, count)) if (v - *u).abs() <= 1e-13 * v => *count += 2.0,
            _ => classes.push((v, 2.0)),
        }
    }
    classes
}

fn upper_integrand(classes: &[(f64, f64)], m: f64, x: f64) -> f64 {
    classes.iter().map(|&(d2, c)| c * d2 * f_upper(x * d2)).sum::<f64>() / m
}

fn lower_integrand(classes: &[(f64, f64)], m: f64, x: f64) -> f64 {
    classes.iter().map(|&(d2, c)| c * d2 * f_lower(x * d2)).sum::<f64>() / (m * (m - 1.0))
}

/// `∫_from^cap g(x) dx`: linear panel below the floor, then panels of width
/// 1/8 in `ln x`.
fn tail_integral<G: Fn(f64) -> f64>(g: G, from: f64, cap: f64) -> f64 {
    if from >= cap {
        return 0.0;
    }
    let (gx, gw) = gauss_legendre(10);
    let mut total = 0.0;
    let mut start = from;
    if start < LINEAR_FLOOR {
        let end = LINEAR_FLOOR.min(cap);
        let half = 0.5 * (end - start);
        let mid = 0.5 * (end + start);
        total += gx.iter().zip(&gw).map(|(x, w)| half * w * g(mid + half * x)).sum::<f64>();
        start = end;
    }
    if start >= cap {
        return total;
    }
    let (a, b) = (start.ln(), cap.ln());
    let panels = ((b - a) * 8.0).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        for (x, w) in gx.iter().zip(&gw) {
            let t = mid + 0.5 * width * x;
            let e = t.exp();
            total += 0.5 * width * w * e * g(e);
        }
    }
    total
}

/// Entropy of the received images, merging points the channel maps to the
/// same image. Equals `H(x)` unless `H` collapses constellation points.
fn received_entropy(rc: &ReceivedConstellation, a: &Alphabet) -> f64 {
    let m = a.len();
    let scale = rc.pairs().map(|(_, _, d2)| d2).fold(0.0, f64::max);
    let mut class: Vec<usize> = (0..m).collect();
    for i in 0..m {
        if class[i] != i {
            continue;
        }
        for (j, cj) in class.iter_mut().enumerate().skip(i + 1) {
            if *cj == j && rc.d2(i, j) <= 1e-24 * scale {
                *cj = i;
            }
        }
    }
    let mut mass = vec![0.0; m];
    for (k, &c) in class.iter().enumerate() {
        mass[c] += a.probs()[k];
    }
    mass.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
}

/// Smallest power-of-two multiple of `1/min d²` at which the upper MMSE
/// bound drops below [`AUTO_TAIL_LEVEL`], far past where it matters.
pub fn default_tail_cap(rc: &ReceivedConstellation, a: &Alphabet) -> Result<Snr> {
    let Some(min_d2) = rc.min_d2() else {
        return Snr::new(1.0);
    };
    let classes = distance_classes(rc);
    let m = a.len() as f64;
    let mut cap = 1.0 / min_d2;
    while upper_integrand(&classes, m, cap) >= AUTO_TAIL_LEVEL {
        cap *= 2.0;
    }
    Snr::new(cap)
}

/// `H − ∫_snr^cap mmse_upper ≤ I(snr) ≤ H − ∫_snr^cap mmse_lower` in nats.
pub fn mi_bounds(rc: &ReceivedConstellation, a: &Alphabet, snr: Snr, tail_cap: Snr) -> Result<BoundPair> {
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
    let classes = distance_classes(rc);
    let m = a.len() as f64;
    let cap = tail_cap.linear();
    let at_cap = upper_integrand(&classes, m, cap);
    if at_cap >= TAIL_THRESHOLD {
        return Err(Error::TailCapTooSmall {
            cap,
            integrand: at_cap,
            threshold: TAIL_THRESHOLD,
        });
    }
    let top = received_entropy(rc, a);
    let upper_tail = tail_integral(|x| upper_integrand(&classes, m, x), snr.linear(), cap);
    let lower_tail = tail_integral(|x| lower_integrand(&classes, m, x), snr.linear(), cap);
    Ok(BoundPair {
        lower: top - upper_tail,
        upper: top - lower_tail,
    })
}
