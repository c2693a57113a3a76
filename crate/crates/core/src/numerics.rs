//! Scalar special functions, Gauss–Hermite quadrature, stable log-sum-exp
//! and the counter-based Gaussian sampler shared by every other module.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Node count of [`QuadratureRule::gauss_hermite`] used in tests and examples.
pub const DEFAULT_HERMITE_ORDER: usize = 96;

/// Half-width, panel count and per-panel order of the default composite rule.
pub const DEFAULT_COMPOSITE: (f64, usize, usize) = (10.0, 40, 10);

/// Linear-scale signal-to-noise ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Snr(f64);

impl Snr {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidSnr(value))
        }
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(db_to_linear(db))
    }

    pub fn zero() -> Self {
        Self(0.0)
    }

    #[inline]
    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }

    #[inline]
    pub fn sqrt(self) -> f64 {
        self.0.sqrt()
    }

    /// `self · gain`, e.g. the effective SNR of a SIMO channel after matched filtering.
    pub fn scaled(self, gain: f64) -> Result<Self> {
        Self::new(self.0 * gain)
    }
}

/// `10^(db/10)`, exact at integer multiples of 10 dB.
pub fn db_to_linear(db: f64) -> f64 {
    if db == 0.0 {
        return 1.0;
    }
    let tenths = db / 10.0;
    if tenths.fract() == 0.0 && tenths.abs() < 300.0 {
        return 10f64.powi(tenths as i32);
    }
    10f64.powf(tenths)
}

/// Standard normal tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `log Σ exp(log_weight + exponent)` over `(log_weight, exponent)` pairs.
pub fn log_sum_exp(terms: &[(f64, f64)]) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::EmptyMixture);
    }
    Ok(log_sum_exp_values(terms.iter().map(|&(w, e)| w + e)))
}

/// Max-shifted log-sum-exp over already combined exponents. Returns `-inf`
/// for an empty iterator.
#[inline]
pub fn log_sum_exp_values<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = values.into_iter();
    let max = iter.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    let sum: f64 = iter.map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Quadrature rule for the weight `exp(-x²)` on the real line:
/// `∫ g(x) e^{-x²} dx ≈ Σ w_k g(x_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    weight_sum: f64,
}

impl QuadratureRule {
    /// Nodes are found by Newton iteration on the orthonormal Hermite
    /// recurrence and mirrored, so the rule is exactly symmetric.
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::QuadratureOrder(order));
        }
        let n = order;
        let nf = n as f64;
        let pim4 = PI.powf(-0.25);
        let half = n.div_ceil(2);
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut z = 0.0f64;
        for i in 0..half {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..200 {
                let (p1, p2) = hermite_orthonormal(n, z, pim4);
                pp = (2.0 * nf).sqrt() * p2;
                let step = p1 / pp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, p2) = hermite_orthonormal(n, z, pim4);
            pp = if pp == 0.0 { 1.0 } else { (2.0 * nf).sqrt() * p2 };
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        if n % 2 == 1 {
            x[half - 1] = 0.0;
        }
        x.reverse();
        w.reverse();
        Ok(Self::from_parts(x, w))
    }

    /// Composite Gauss–Legendre on `[-half_width, half_width]` with the
    /// Gaussian weight folded into the weights. Converges quickly for steep
    /// tanh integrands where Gauss–Hermite stalls.
    pub fn composite(half_width: f64, panels: usize, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::QuadratureOrder(order));
        }
        if panels == 0 || panels % 2 == 1 || !half_width.is_finite() || half_width <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "composite rule needs an even panel count and positive width, got {panels} panels over ±{half_width}"
            )));
        }
        let (gx, gw) = gauss_legendre(order);
        let h = half_width / panels as f64;
        let mut pos: Vec<(f64, f64)> = Vec::with_capacity(panels * order / 2);
        for p in 0..panels / 2 {
            let mid = (2 * p + 1) as f64 * h;
            for (x, w) in gx.iter().zip(&gw) {
                let t = mid + h * x;
                pos.push((t, h * w * (-t * t).exp()));
            }
        }
        pos.sort_by(|a, b| a.0.total_cmp(&b.0));
        let nodes = pos.iter().rev().map(|p| -p.0).chain(pos.iter().map(|p| p.0)).collect();
        let weights = pos.iter().rev().map(|p| p.1).chain(pos.iter().map(|p| p.1)).collect();
        Ok(Self::from_parts(nodes, weights))
    }

    fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        let weight_sum = weights.iter().sum();
        Self {
            nodes,
            weights,
            weight_sum,
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Iterate `(node, weight / Σweights)`, a probability rule for the
    /// density `e^{-x²}/√π`.
    pub fn normalized(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let inv = 1.0 / self.weight_sum;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (x, w * inv))
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        let (width, panels, order) = DEFAULT_COMPOSITE;
        Self::composite(width, panels, order).expect("default rule is valid")
    }
}

fn hermite_orthonormal(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

/// `∫ f(a) exp(-(a - center)²) / √π da`, normalized so `f ≡ 1` gives 1.
pub fn gauss_weighted_integral<F>(f: F, center: f64, rule: &QuadratureRule) -> f64
where
    F: Fn(f64) -> f64,
{
    let raw: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * f(x + center))
        .sum();
    raw / rule.weight_sum
}

/// Shared default rule.
pub(crate) fn default_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(QuadratureRule::default)
}

/// `∫ (1 − tanh(2c·a)) e^{−(a−c)²}/√π da`, the binary-antipodal MMSE with
/// amplitude `c`. Rewritten as `e^{−c²} ∫ sech(2c·a) e^{−a²}/√π da` so no
/// mass sits far from the origin; when the sech is narrower than the
/// Gaussian the integral is taken in `u = 2c·a` on fixed Legendre panels.
pub(crate) fn binary_kernel(c: f64, rule: &QuadratureRule) -> f64 {
    let k = 2.0 * c.abs();
    if k == 0.0 {
        return 1.0;
    }
    let sech = |z: f64| 1.0 / z.cosh();
    let integral = if k <= 2.0 {
        gauss_weighted_integral(|a| sech(k * a), 0.0, rule)
    } else {
        static PANEL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
        let (gx, gw) = PANEL.get_or_init(|| gauss_legendre(12));
        let mut sum = 0.0;
        // sech(u) < 1e-34 beyond u = 80
        for p in 0..80 {
            let mid = p as f64 + 0.5;
            for (x, w) in gx.iter().zip(gw) {
                let u = mid + 0.5 * x;
                sum += 0.5 * w * sech(u) * (-(u / k) * (u / k)).exp();
            }
        }
        2.0 * sum / (k * SQRT_PI)
    };
    ((-c * c).exp() * integral).clamp(0.0, 1.0)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / pp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Counter-based random substream: `(seed, stream_index)` fully determines
/// the sample sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// SplitMix64 finalizer; used to derive independent seeds for separate
/// random domains (channels, noise, per-trial streams).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One CN(0, 1) draw: independent real and imaginary parts with variance ½.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// `n` vectors of `dim` i.i.d. CN(0, 1) entries drawn from `stream`.
pub fn sample_standard_complex_gaussian(
    stream: &RngStream,
    n: usize,
    dim: usize,
) -> Vec<Vec<Complex64>> {
    let mut rng = stream.rng();
    (0..n)
        .map(|_| (0..dim).map(|_| complex_gaussian(&mut rng)).collect())
        .collect()
}

pub(crate) const SQRT_PI: f64 = 1.772_453_850_905_516;

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let n = if n % 2 == 1 { n + 1 } else { n };
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            let x = a + k as f64 * h;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn q_function_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert!(q_function(40.0) < 1e-300);
        assert_eq!(q_function(f64::INFINITY), 0.0);
        let oracle = simpson(
            |t| (-t * t / 2.0).exp() / (2.0 * PI).sqrt(),
            1.96,
            40.0,
            2_000_000,
        );
        assert!((oracle - 0.0249979).abs() < 1e-7);
        assert!((q_function(1.96) - oracle).abs() < 1e-12);
    }

    #[test]
    fn q_function_symmetry_and_monotonicity() {
        for k in -800..=800 {
            let x = k as f64 * 0.01;
            assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-12);
        }
        // strict where consecutive values are distinguishable in f64
        let mut prev = f64::INFINITY;
        for k in -500..=3700 {
            let q = q_function(k as f64 * 0.01);
            assert!(q < prev, "{k}");
            prev = q;
        }
    }

    #[test]
    fn log_sum_exp_examples() {
        assert_eq!(log_sum_exp(&[(0.0, 0.0)]).unwrap(), 0.0);
        let h = 0.5f64.ln();
        assert!(log_sum_exp(&[(h, 0.0), (h, 0.0)]).unwrap().abs() < 1e-15);
        let v = log_sum_exp(&[(0.0, -1000.0), (0.0, -1001.0)]).unwrap();
        let expected = -1000.0 + (1.0 + (-1.0f64).exp()).ln();
        assert!((v - expected).abs() < 1e-12);
        assert!((v + 999.686_738_6).abs() < 1e-6);
        assert!(matches!(log_sum_exp(&[]), Err(Error::EmptyMixture)));
    }

    #[test]
    fn log_sum_exp_shift_invariance() {
        let terms = [(0.1, -3.0), (-2.0, 4.5), (0.7, 1.25), (-0.3, -7.0)];
        let base = log_sum_exp(&terms).unwrap();
        for c in [-500.0, -3.3, 0.0, 12.0, 700.0] {
            let shifted: Vec<_> = terms.iter().map(|&(w, e)| (w, e + c)).collect();
            assert!((log_sum_exp(&shifted).unwrap() - c - base).abs() < 1e-12);
        }
    }

    #[test]
    fn hermite_rule_shape() {
        let rule = QuadratureRule::gauss_hermite(DEFAULT_HERMITE_ORDER).unwrap();
        assert_eq!(rule.order(), 96);
        assert!(rule.nodes().windows(2).all(|p| p[0] < p[1]));
        assert!(rule.weights().iter().all(|&w| w > 0.0));
        let sum: f64 = rule.weights().iter().sum();
        assert!((sum - SQRT_PI).abs() / SQRT_PI < 1e-12);
        for n in [2, 3, 5, 20, 41] {
            let r = QuadratureRule::gauss_hermite(n).unwrap();
            let s: f64 = r.weights().iter().sum();
            assert!((s - SQRT_PI).abs() < 1e-12, "order {n}");
            // second moment ∫ x² e^{-x²} = √π / 2
            let m2: f64 = r.normalized().map(|(x, w)| w * x * x).sum();
            assert!((m2 - 0.5).abs() < 1e-12, "order {n}");
        }
        assert!(matches!(
            QuadratureRule::gauss_hermite(1),
            Err(Error::QuadratureOrder(1))
        ));
    }

    #[test]
    fn composite_rule_shape() {
        let rule = QuadratureRule::default();
        assert_eq!(rule.order(), 400);
        assert!(rule.nodes().windows(2).all(|p| p[0] < p[1]));
        assert!(rule.weights().iter().all(|&w| w > 0.0));
        let sum: f64 = rule.weights().iter().sum();
        assert!((sum - SQRT_PI).abs() / SQRT_PI < 1e-12);
        let n = rule.order();
        for k in 0..n / 2 {
            assert_eq!(rule.nodes()[k], -rule.nodes()[n - 1 - k]);
            assert_eq!(rule.weights()[k], rule.weights()[n - 1 - k]);
        }
        assert!(QuadratureRule::composite(10.0, 3, 10).is_err());
        assert!(QuadratureRule::composite(10.0, 4, 1).is_err());
    }

    #[test]
    fn gauss_weighted_moments() {
        for rule in [QuadratureRule::default(), QuadratureRule::gauss_hermite(96).unwrap()] {
            for c in [-3.0, 0.0, 0.4, 7.5] {
                assert!((gauss_weighted_integral(|_| 1.0, c, &rule) - 1.0).abs() < 1e-12);
                assert!((gauss_weighted_integral(|a| a, c, &rule) - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gauss_weighted_tanh_matches_trapezoid() {
        for rule in [QuadratureRule::default(), QuadratureRule::gauss_hermite(96).unwrap()] {
            check_tanh_against_trapezoid(&rule);
        }
    }

    fn check_tanh_against_trapezoid(rule: &QuadratureRule) {
        let q = gauss_weighted_integral(|a| (2.0 * a).tanh(), 1.0, rule);
        let n = 1_000_000;
        let (lo, hi) = (-10.0, 10.0);
        let h = (hi - lo) / n as f64;
        let g = |a: f64| (2.0 * a).tanh() * (-(a - 1.0) * (a - 1.0)).exp() / SQRT_PI;
        let mut trap = 0.5 * (g(lo) + g(hi));
        for k in 1..n {
            trap += g(lo + k as f64 * h);
        }
        trap *= h;
        assert!((q - trap).abs() < 1e-9, "{q} vs {trap}");
    }

    #[test]
    fn odd_integrand_cancels() {
        for rule in [QuadratureRule::default(), QuadratureRule::gauss_hermite(96).unwrap()] {
            for k in [0.1, 1.0, 3.0, 25.0, 400.0] {
                let v = gauss_weighted_integral(|a| (k * a).tanh(), 0.0, &rule);
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((m - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn complex_gaussian_determinism_and_moments() {
        let s = RngStream::new(42, 3);
        let a = sample_standard_complex_gaussian(&s, 100, 2);
        let b = sample_standard_complex_gaussian(&s, 100, 2);
        assert_eq!(a, b);

        let n = 1_000_000;
        let v = sample_standard_complex_gaussian(&RngStream::new(7, 0), n, 1);
        let mean: Complex64 = v.iter().map(|z| z[0]).sum::<Complex64>() / n as f64;
        let bound = 4.0 / (n as f64).sqrt();
        assert!(mean.re.abs() < bound && mean.im.abs() < bound);
        let power: f64 = v.iter().map(|z| z[0].norm_sqr()).sum::<f64>() / n as f64;
        assert!((power - 1.0).abs() < 0.005);
    }

    #[test]
    fn substreams_uncorrelated() {
        let n = 100_000;
        let a = sample_standard_complex_gaussian(&RngStream::new(9, 0), n, 1);
        let b = sample_standard_complex_gaussian(&RngStream::new(9, 1), n, 1);
        let corr: f64 = a.iter().zip(&b).map(|(x, y)| x[0].re * y[0].re).sum::<f64>()
            / (n as f64 * 0.5);
        assert!(corr.abs() < 5.0 / (n as f64).sqrt());
    }

    #[test]
    fn db_conversion_exact() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert_eq!(db_to_linear(10.0), 10.0);
        assert_eq!(db_to_linear(20.0), 100.0);
        assert_eq!(db_to_linear(-10.0), 0.1);
        assert!((db_to_linear(3.0) - 1.995_262_314_968_88).abs() < 1e-12);
    }

    #[test]
    fn snr_rejects_invalid() {
        assert!(Snr::new(-1.0).is_err());
        assert!(Snr::new(f64::NAN).is_err());
        assert!(Snr::new(f64::INFINITY).is_err());
        assert_eq!(Snr::from_db(10.0).unwrap().linear(), 10.0);
    }

    #[test]
    fn binary_kernel_matches_trapezoid_at_all_amplitudes() {
        let rule = QuadratureRule::default();
        for c in [0.0, 0.3, 0.99, 1.01, 3.0, 7.0, 12.0, 20.0] {
            // trapezoid on the tanh form, centred where the mass is
            let n = 2_000_000;
            let (lo, hi) = (-8.0, c + 8.0);
            let h = (hi - lo) / n as f64;
            let g = |a: f64| {
                let z = 2.0 * c * a;
                let omt = if z > 0.0 { 2.0 * (-2.0 * z).exp() / (1.0 + (-2.0 * z).exp()) } else { 1.0 - z.tanh() };
                omt * (-(a - c) * (a - c)).exp() / SQRT_PI
            };
            let mut sum = 0.5 * (g(lo) + g(hi));
            for k in 1..n {
                sum += g(lo + k as f64 * h);
            }
            let oracle = sum * h;
            let v = binary_kernel(c, &rule);
            assert!((v - oracle).abs() <= 1e-9 * oracle, "c = {c}: {v} vs {oracle}");
        }
    }
}
