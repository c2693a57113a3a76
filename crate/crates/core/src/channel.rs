//! Channel matrices, received constellations and Rayleigh sampling.

use num_complex::Complex64;
use serde::Serialize;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::numerics::{complex_gaussian, RngStream};

/// Complex `n_rx × n_tx` channel matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: Vec<Complex64>,
    n_rx: usize,
    n_tx: usize,
}

impl ChannelMatrix {
    pub fn new(n_rx: usize, n_tx: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n_rx == 0 || n_tx == 0 {
            return Err(Error::InvalidChannel("dimensions must be at least 1".into()));
        }
        if entries.len() != n_rx * n_tx {
            return Err(Error::InvalidChannel(format!(
                "{} entries for a {n_rx}x{n_tx} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidChannel("non-finite entry".into()));
        }
        Ok(Self { entries, n_rx, n_tx })
    }

    /// A 1×1 channel.
    pub fn scalar(h: Complex64) -> Result<Self> {
        Self::new(1, 1, vec![h])
    }

    /// An `N × 1` SIMO channel vector.
    pub fn column(h: Vec<Complex64>) -> Result<Self> {
        Self::new(h.len(), 1, h)
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.n_tx + c]
    }

    /// `H x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.n_tx);
        self.entries
            .chunks_exact(self.n_tx)
            .map(|row| row.iter().zip(x).map(|(h, v)| h * v).sum())
            .collect()
    }

    /// `tr(H Hᴴ) = ‖H‖_F²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            entries: self.entries.iter().map(|h| h * c).collect(),
            ..*self
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        ChannelFile::parse(text)?.into_matrix()
    }

    pub fn to_json(&self) -> String {
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            self.entries
                .chunks_exact(self.n_tx)
                .map(|r| r.iter().map(f).collect())
                .collect()
        };
        let file = ChannelFile {
            rows: self.n_rx,
            cols: self.n_tx,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        };
        serde_json::to_string(&file).expect("channel serializes")
    }
}

/// On-disk channel: `{"rows":N,"cols":Nt,"re":[[...],...],"im":[[...],...]}`,
/// one inner array per matrix row.
#[derive(Debug, Serialize)]
struct ChannelFile {
    rows: usize,
    cols: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl ChannelFile {
    const FIELDS: [&'static str; 4] = ["rows", "cols", "re", "im"];

    /// Decodes field by field so that type errors name the offending field.
    fn parse(text: &str) -> Result<Self> {
        let err = |field: &str, message: String| Error::Parse { field: field.into(), message };
        let mut map: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| err("channel", e.to_string()))?;
        if let Some(extra) = map.keys().find(|k| !Self::FIELDS.contains(&k.as_str())) {
            return Err(err(extra, "unknown field".into()));
        }
        fn take<T: serde::de::DeserializeOwned>(
            map: &mut serde_json::Map<String, serde_json::Value>,
            field: &str,
        ) -> Result<T> {
            let value = map.remove(field).ok_or_else(|| Error::Parse {
                field: field.into(),
                message: "missing field".into(),
            })?;
            serde_json::from_value(value).map_err(|e| Error::Parse { field: field.into(), message: e.to_string() })
        }
        Ok(Self {
            rows: take(&mut map, "rows")?,
            cols: take(&mut map, "cols")?,
            re: take(&mut map, "re")?,
            im: take(&mut map, "im")?,
        })
    }

    fn into_matrix(self) -> Result<ChannelMatrix> {
        let err = |field: String, message: String| Error::Parse { field, message };
        if self.rows == 0 {
            return Err(err("rows".into(), "must be at least 1".into()));
        }
        if self.cols == 0 {
            return Err(err("cols".into(), "must be at least 1".into()));
        }
        for (name, part) in [("re", &self.re), ("im", &self.im)] {
            if part.len() != self.rows {
                return Err(err(
                    name.into(),
                    format!("expected {} rows, got {}", self.rows, part.len()),
                ));
            }
            for (r, row) in part.iter().enumerate() {
                if row.len() != self.cols {
                    return Err(err(
                        format!("{name}[{r}]"),
                        format!("expected {} columns, got {}", self.cols, row.len()),
                    ));
                }
            }
        }
        let entries = self
            .re
            .iter()
            .flatten()
            .zip(self.im.iter().flatten())
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        ChannelMatrix::new(self.rows, self.cols, entries)
    }
}

/// I.i.d. CN(0, 1) channel entries drawn from `stream`.
pub fn sample_rayleigh(stream: &RngStream, n_rx: usize, n_tx: usize) -> Result<ChannelMatrix> {
    let mut rng = stream.rng();
    let entries = (0..n_rx * n_tx).map(|_| complex_gaussian(&mut rng)).collect();
    ChannelMatrix::new(n_rx, n_tx, entries)
}

/// The noiseless images `H x_i` and the squared pairwise distances
/// `d_ij² = ‖H x_i − H x_j‖²`.
#[derive(Debug, Clone)]
pub struct ReceivedConstellation {
    images: Vec<Complex64>,
    pair_d2: Vec<f64>,
    n_rx: usize,
    m: usize,
}

impl ReceivedConstellation {
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn image(&self, i: usize) -> &[Complex64] {
        &self.images[i * self.n_rx..(i + 1) * self.n_rx]
    }

    pub fn images(&self) -> &[Complex64] {
        &self.images
    }

    #[inline]
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        self.pair_d2[i * self.m + j]
    }

    /// Smallest non-zero pairwise squared distance, if any.
    pub fn min_d2(&self) -> Option<f64> {
        self.pair_d2
            .iter()
            .copied()
            .filter(|&d| d > 0.0)
            .min_by(f64::total_cmp)
    }

    /// Unordered pairs `i < j` with their squared distance.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.m).flat_map(move |i| ((i + 1)..self.m).map(move |j| (i, j, self.d2(i, j))))
    }
}

pub fn received_constellation(h: &ChannelMatrix, a: &Alphabet) -> Result<ReceivedConstellation> {
    if a.n_t() != h.n_tx() {
        return Err(Error::DimensionMismatch(format!(
            "alphabet has {} transmit dimensions, channel has {}",
            a.n_t(),
            h.n_tx()
        )));
    }
    let m = a.len();
    let n_rx = h.n_rx();
    let images: Vec<Complex64> = a.points().flat_map(|x| h.apply(x)).collect();
    let mut pair_d2 = vec![0.0; m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            let xi = &images[i * n_rx..(i + 1) * n_rx];
            let xj = &images[j * n_rx..(j + 1) * n_rx];
            let d: f64 = xi.iter().zip(xj).map(|(p, q)| (p - q).norm_sqr()).sum();
            pair_d2[i * m + j] = d;
            pair_d2[j * m + i] = d;
        }
    }
    Ok(ReceivedConstellation {
        images,
        pair_d2,
        n_rx,
        m,
    })
}
