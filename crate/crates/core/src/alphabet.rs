//! Finite input alphabets: scalar constellations and per-antenna products.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest alphabet built by [`product_alphabet`] unless a cap is given.
pub const DEFAULT_ALPHABET_CAP: usize = 4096;

const PROB_TOL: f64 = 1e-12;
const POWER_TOL: f64 = 1e-9;

/// A scalar constellation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    Bpsk,
    Qpsk,
    Psk(usize),
    Qam(usize),
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let parse_order = |digits: &str| {
            digits
                .parse::<usize>()
                .map_err(|_| Error::UnsupportedConstellation(s.to_string()))
        };
        match lower.as_str() {
            "bpsk" => Ok(Self::Bpsk),
            "qpsk" => Ok(Self::Qpsk),
            _ if lower.starts_with("psk") => Ok(Self::Psk(parse_order(&lower[3..])?)),
            _ if lower.starts_with("qam") => Ok(Self::Qam(parse_order(&lower[3..])?)),
            _ if lower.ends_with("psk") => Ok(Self::Psk(parse_order(&lower[..lower.len() - 3])?)),
            _ if lower.ends_with("qam") => Ok(Self::Qam(parse_order(&lower[..lower.len() - 3])?)),
            _ => Err(Error::UnsupportedConstellation(s.to_string())),
        }
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bpsk => write!(f, "bpsk"),
            Self::Qpsk => write!(f, "qpsk"),
            Self::Psk(m) => write!(f, "psk{m}"),
            Self::Qam(m) => write!(f, "qam{m}"),
        }
    }
}

/// `M` complex input vectors of dimension `n_t` with their probabilities.
///
/// Construction enforces the probability simplex and the power
/// normalization `Σ p_i x_i x_iᴴ = I / n_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    points: Vec<Complex64>,
    probs: Vec<f64>,
    n_t: usize,
}

impl Alphabet {
    /// Validates and builds an alphabet from explicit vectors.
    pub fn new(points: Vec<Vec<Complex64>>, probs: Vec<f64>) -> Result<Self> {
        let n_t = points.first().map_or(0, Vec::len);
        if n_t == 0 {
            return Err(Error::InvalidAlphabet("points must be non-empty vectors".into()));
        }
        if points.iter().any(|p| p.len() != n_t) {
            return Err(Error::InvalidAlphabet(
                "all points must share one dimension".into(),
            ));
        }
        let flat = points.into_iter().flatten().collect();
        Self::from_flat(flat, probs, n_t)
    }

    fn from_flat(points: Vec<Complex64>, probs: Vec<f64>, n_t: usize) -> Result<Self> {
        let m = probs.len();
        if m < 2 {
            return Err(Error::InvalidAlphabet(format!("need at least 2 points, got {m}")));
        }
        if points.len() != m * n_t {
            return Err(Error::InvalidAlphabet(format!(
                "{} probabilities for {} points",
                m,
                points.len() / n_t
            )));
        }
        if points.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidAlphabet("non-finite point".into()));
        }
        if probs.iter().any(|&p| !p.is_finite() || p <= 0.0) {
            return Err(Error::InvalidAlphabet("probabilities must be positive".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidAlphabet(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let alphabet = Self { points, probs, n_t };
        let dev = alphabet.second_moment_deviation();
        if dev > POWER_TOL {
            return Err(Error::InvalidAlphabet(format!(
                "second moment deviates from I/{n_t} by {dev:e}"
            )));
        }
        Ok(alphabet)
    }

    /// Number of points `M`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn point(&self, i: usize) -> &[Complex64] {
        &self.points[i * self.n_t..(i + 1) * self.n_t]
    }

    pub fn points(&self) -> impl Iterator<Item = &[Complex64]> {
        self.points.chunks_exact(self.n_t)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// True when every probability equals `1/M` (to 1e-12).
    pub fn is_equiprobable(&self) -> bool {
        let u = 1.0 / self.len() as f64;
        self.probs.iter().all(|&p| (p - u).abs() <= PROB_TOL)
    }

    /// `Σ p_i x_i x_iᴴ`, row-major `n_t × n_t`.
    pub fn second_moment(&self) -> Vec<Complex64> {
        let n = self.n_t;
        let mut acc = vec![Complex64::new(0.0, 0.0); n * n];
        for (x, &p) in self.points().zip(&self.probs) {
            for r in 0..n {
                for c in 0..n {
                    acc[r * n + c] += p * x[r] * x[c].conj();
                }
            }
        }
        acc
    }

    fn second_moment_deviation(&self) -> f64 {
        let n = self.n_t;
        let target = 1.0 / n as f64;
        self.second_moment()
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let expect = if k / n == k % n { target } else { 0.0 };
                (z - expect).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `Σ p_i x_i`.
    pub fn mean(&self) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.n_t];
        for (x, &p) in self.points().zip(&self.probs) {
            for (a, v) in acc.iter_mut().zip(x) {
                *a += p * v;
            }
        }
        acc
    }

    /// Input entropy `Σ p_i log(1/p_i)` in nats.
    pub fn entropy(&self) -> f64 {
        self.probs.iter().map(|&p| -p * p.ln()).sum()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: AlphabetFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            field: "alphabet".into(),
            message: e.to_string(),
        })?;
        file.into_alphabet()
    }

    pub fn to_json(&self) -> String {
        let file = AlphabetFile {
            nt: self.n_t,
            points: self
                .points()
                .map(|x| PointJson {
                    re: x.iter().map(|z| z.re).collect(),
                    im: x.iter().map(|z| z.im).collect(),
                })
                .collect(),
            probs: self.probs.clone(),
        };
        serde_json::to_string(&file).expect("alphabet serializes")
    }
}

/// Builds a unit-power equiprobable scalar constellation.
pub fn make_scalar(kind: Constellation) -> Result<Alphabet> {
    let points: Vec<Complex64> = match kind {
        Constellation::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        Constellation::Qpsk => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            vec![
                Complex64::new(s, s),
                Complex64::new(-s, s),
                Complex64::new(-s, -s),
                Complex64::new(s, -s),
            ]
        }
        Constellation::Psk(m) if m >= 2 => (0..m)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64))
            .collect(),
        Constellation::Qam(m) if matches!(m, 4 | 16 | 64) => {
            let side = (m as f64).sqrt() as i32;
            let scale = (2.0 * (m as f64 - 1.0) / 3.0).sqrt();
            let levels: Vec<f64> = (0..side).map(|k| (2 * k - side + 1) as f64).collect();
            let mut pts = Vec::with_capacity(m);
            for &im in levels.iter().rev() {
                for &re in &levels {
                    pts.push(Complex64::new(re / scale, im / scale));
                }
            }
            pts
        }
        other => return Err(Error::UnsupportedConstellation(other.to_string())),
    };
    let m = points.len();
    Alphabet::from_flat(points, vec![1.0 / m as f64; m], 1)
}

/// Per-antenna product of a scalar alphabet, scaled by `1/√n_t`.
pub fn product_alphabet(scalar: &Alphabet, n_t: usize) -> Result<Alphabet> {
    product_alphabet_with_cap(scalar, n_t, DEFAULT_ALPHABET_CAP)
}

pub fn product_alphabet_with_cap(scalar: &Alphabet, n_t: usize, cap: usize) -> Result<Alphabet> {
    if scalar.n_t() != 1 {
        return Err(Error::InvalidAlphabet(
            "product alphabet needs a scalar (n_t = 1) input".into(),
        ));
    }
    if n_t == 0 {
        return Err(Error::InvalidAlphabet("n_t must be at least 1".into()));
    }
    let m = scalar.len();
    let size = u32::try_from(n_t)
        .ok()
        .and_then(|e| m.checked_pow(e))
        .filter(|&s| s <= cap)
        .ok_or(Error::AlphabetTooLarge {
            size: m.saturating_pow(n_t.min(u32::MAX as usize) as u32),
            cap,
        })?;
    if n_t == 1 {
        return Ok(scalar.clone());
    }
    let scale = 1.0 / (n_t as f64).sqrt();
    let mut points = Vec::with_capacity(size * n_t);
    let mut probs = Vec::with_capacity(size);
    let mut digits = vec![0usize; n_t];
    for _ in 0..size {
        let mut p = 1.0;
        for &d in &digits {
            points.push(scalar.point(d)[0] * scale);
            p *= scalar.probs()[d];
        }
        probs.push(p);
        for slot in digits.iter_mut().rev() {
            *slot += 1;
            if *slot < m {
                break;
            }
            *slot = 0;
        }
    }
    // products of probabilities drift from the simplex by a few ulps
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Alphabet::from_flat(points, probs, n_t)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointJson {
    re: Vec<f64>,
    im: Vec<f64>,
}

/// On-disk alphabet: `{"nt":K,"points":[{"re":[...],"im":[...]},...],"probs":[...]}`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphabetFile {
    nt: usize,
    points: Vec<PointJson>,
    probs: Vec<f64>,
}

impl AlphabetFile {
    fn into_alphabet(self) -> Result<Alphabet> {
        let field_err = |field: &str, message: String| Error::Parse {
            field: field.into(),
            message,
        };
        if self.nt == 0 {
            return Err(field_err("nt", "must be at least 1".into()));
        }
        if self.points.len() != self.probs.len() {
            return Err(field_err(
                "probs",
                format!("{} entries for {} points", self.probs.len(), self.points.len()),
            ));
        }
        let mut flat = Vec::with_capacity(self.points.len() * self.nt);
        for (k, p) in self.points.iter().enumerate() {
            if p.re.len() != self.nt {
                return Err(field_err(
                    &format!("points[{k}].re"),
                    format!("expected {} entries, got {}", self.nt, p.re.len()),
                ));
            }
            if p.im.len() != self.nt {
                return Err(field_err(
                    &format!("points[{k}].im"),
                    format!("expected {} entries, got {}", self.nt, p.im.len()),
                ));
            }
            flat.extend(p.re.iter().zip(&p.im).map(|(&r, &i)| Complex64::new(r, i)));
        }
        Alphabet::from_flat(flat, self.probs, self.nt)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bpsk_points() {
        let a = make_scalar(Constellation::Bpsk).unwrap();
        assert_eq!(a.point(0), &[c(1.0, 0.0)]);
        assert_eq!(a.point(1), &[c(-1.0, 0.0)]);
        assert_eq!(a.probs(), &[0.5, 0.5]);
        assert!((a.entropy() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn qpsk_unit_power() {
        let a = make_scalar(Constellation::Qpsk).unwrap();
        assert_eq!(a.len(), 4);
        let power: f64 = a.points().map(|x| x[0].norm_sqr()).sum::<f64>() / 4.0;
        assert!((power - 1.0).abs() < 1e-15);
        for x in a.points() {
            assert!((x[0].re.abs() - 0.5f64.sqrt()).abs() < 1e-15);
            assert!((x[0].im.abs() - 0.5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn qam16_grid() {
        let a = make_scalar(Constellation::Qam(16)).unwrap();
        assert_eq!(a.len(), 16);
        // unscaled {±1,±3}² grid has mean power 10
        let raw: f64 = a
            .points()
            .map(|x| (x[0] * 10f64.sqrt()).norm_sqr())
            .sum::<f64>()
            / 16.0;
        assert!((raw - 10.0).abs() < 1e-12);
        for x in a.points() {
            let re = x[0].re * 10f64.sqrt();
            assert!([-3.0, -1.0, 1.0, 3.0].iter().any(|l| (re - l).abs() < 1e-12));
        }
    }

    #[test]
    fn unsupported_sizes() {
        assert!(make_scalar(Constellation::Qam(8)).is_err());
        assert!(make_scalar(Constellation::Qam(32)).is_err());
        assert!(make_scalar(Constellation::Psk(1)).is_err());
        assert!(make_scalar(Constellation::Psk(8)).is_ok());
        assert!("qam256x".parse::<Constellation>().is_err());
        assert!("foo".parse::<Constellation>().is_err());
        assert_eq!("PSK8".parse::<Constellation>().unwrap(), Constellation::Psk(8));
        assert_eq!("qam64".parse::<Constellation>().unwrap(), Constellation::Qam(64));
        assert_eq!("16QAM".parse::<Constellation>().unwrap(), Constellation::Qam(16));
        assert_eq!("8psk".parse::<Constellation>().unwrap(), Constellation::Psk(8));
        assert!("xpsk".parse::<Constellation>().is_err());
    }

    #[test]
    fn standard_constellations_zero_mean() {
        for kind in [
            Constellation::Bpsk,
            Constellation::Qpsk,
            Constellation::Psk(3),
            Constellation::Psk(8),
            Constellation::Qam(4),
            Constellation::Qam(16),
            Constellation::Qam(64),
        ] {
            let a = make_scalar(kind).unwrap();
            let m = a.mean();
            assert!(m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < 1e-12, "{kind}");
        }
    }

    #[test]
    fn bpsk_product_two_antennas() {
        let a = product_alphabet(&make_scalar(Constellation::Bpsk).unwrap(), 2).unwrap();
        assert_eq!(a.len(), 4);
        let s = 0.5f64.sqrt();
        for (x, &p) in a.points().zip(a.probs()) {
            assert!((p - 0.25).abs() < 1e-15);
            assert!(x.iter().all(|z| (z.re.abs() - s).abs() < 1e-15 && z.im == 0.0));
        }
    }

    #[test]
    fn product_order_one_is_identity() {
        let b = make_scalar(Constellation::Bpsk).unwrap();
        assert_eq!(product_alphabet(&b, 1).unwrap(), b);
    }

    #[test]
    fn qpsk_product_second_moment() {
        let a = product_alphabet(&make_scalar(Constellation::Qpsk).unwrap(), 2).unwrap();
        assert_eq!(a.len(), 16);
        let mut acc = [[c(0.0, 0.0); 2]; 2];
        for (x, &p) in a.points().zip(a.probs()) {
            for r in 0..2 {
                for k in 0..2 {
                    acc[r][k] += p * x[r] * x[k].conj();
                }
            }
        }
        assert!((acc[0][0] - 0.5).norm() < 1e-12);
        assert!((acc[1][1] - 0.5).norm() < 1e-12);
        assert!(acc[0][1].norm() < 1e-12 && acc[1][0].norm() < 1e-12);
    }

    #[test]
    fn product_cap() {
        let q = make_scalar(Constellation::Qam(64)).unwrap();
        assert!(matches!(
            product_alphabet(&q, 3),
            Err(Error::AlphabetTooLarge { size: 262_144, cap: 4096 })
        ));
        assert_eq!(product_alphabet(&q, 2).unwrap().len(), 4096);
        assert!(product_alphabet_with_cap(&q, 2, 100).is_err());
    }

    #[test]
    fn product_nesting_matches_direct() {
        let q = make_scalar(Constellation::Qpsk).unwrap();
        let direct = product_alphabet(&q, 3).unwrap();
        let (pa, pb) = (product_alphabet(&q, 1).unwrap(), product_alphabet(&q, 2).unwrap());
        let (ra, rb) = ((1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt());
        let mut nested = Vec::new();
        for x in pa.points() {
            for y in pb.points() {
                let v: Vec<Complex64> = x
                    .iter()
                    .map(|z| z * ra)
                    .chain(y.iter().map(|z| z * rb))
                    .collect();
                nested.push(v);
            }
        }
        let key = |v: &[Complex64]| -> Vec<i64> {
            v.iter()
                .flat_map(|z| [(z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64])
                .collect()
        };
        let mut d: Vec<_> = direct.points().map(key).collect();
        let mut n: Vec<_> = nested.iter().map(|v| key(v)).collect();
        d.sort();
        n.sort();
        assert_eq!(d, n);
    }

    /// Zero-mean unit-power binary alphabet with probabilities {0.9, 0.1}.
    pub(crate) fn skewed_binary() -> Alphabet {
        Alphabet::new(vec![vec![c(1.0 / 3.0, 0.0)], vec![c(-3.0, 0.0)]], vec![0.9, 0.1]).unwrap()
    }

    #[test]
    fn entropy_values() {
        let skew = skewed_binary();
        let expect = 0.9 * (1.0f64 / 0.9).ln() + 0.1 * 10f64.ln();
        assert!((skew.entropy() - expect).abs() < 1e-15);
        assert!((expect - 0.325_083).abs() < 1e-6);
        assert!(!skew.is_equiprobable());
        assert!(skew.mean()[0].norm() < 1e-15);
        let q16 = make_scalar(Constellation::Qam(16)).unwrap();
        assert!((q16.entropy() - 16f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_alphabets() {
        assert!(Alphabet::new(vec![vec![c(1.0, 0.0)]], vec![1.0]).is_err());
        assert!(Alphabet::new(vec![vec![c(1.0, 0.0)], vec![c(-1.0, 0.0)]], vec![0.6, 0.6]).is_err());
        assert!(Alphabet::new(vec![vec![c(2.0, 0.0)], vec![c(-2.0, 0.0)]], vec![0.5, 0.5]).is_err());
        assert!(Alphabet::new(vec![vec![c(1.0, 0.0)], vec![c(-1.0, 0.0)]], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let a = product_alphabet(&make_scalar(Constellation::Qpsk).unwrap(), 2).unwrap();
        let back = Alphabet::from_json_str(&a.to_json()).unwrap();
        assert_eq!(a, back);

        let text = r#"{"nt":1,"points":[{"re":[1],"im":[0]},{"re":[-1],"im":[0]}],"probs":[0.5,0.5]}"#;
        assert_eq!(Alphabet::from_json_str(text).unwrap().len(), 2);

        let missing = r#"{"nt":1,"points":[{"re":[1],"im":[0]}]}"#;
        let e = Alphabet::from_json_str(missing).unwrap_err().to_string();
        assert!(e.contains("probs"), "{e}");

        let short = r#"{"nt":2,"points":[{"re":[1],"im":[0,0]},{"re":[-1,0],"im":[0,0]}],"probs":[0.5,0.5]}"#;
        let e = Alphabet::from_json_str(short).unwrap_err().to_string();
        assert!(e.contains("points[0].re"), "{e}");
    }
}
