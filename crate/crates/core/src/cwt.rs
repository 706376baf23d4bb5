//! Discrete logistic CWT: Riemann sums of a sampled signal against
//! `psi2` children over a grid of scales and shifts, extremum search on
//! the resulting scalogram, and saturation-level recovery.
//!
//! The signal is expected to be the first difference of the series under
//! study. Sums run over the available samples only; nothing is padded.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;
use crate::wavelet::{psi2, WaveletParams, EDGE_HALF_WIDTH, PSI2_NORM, PSI2_SUPPORT};

/// Index range of samples whose time lies in `[lo, hi]`.
fn sample_range(signal: &TimeSeries, lo: f64, hi: f64) -> std::ops::Range<usize> {
    let n = signal.len();
    let first = ((lo - signal.start()).ceil().max(0.0)) as usize;
    let last = (hi - signal.start()).floor();
    if last < 0.0 {
        return 0..0;
    }
    let end = ((last as usize) + 1).min(n);
    first.min(end)..end
}

/// `Σ_n signal[n] · psi2((t_n - β) / α)` with unit spacing.
pub fn cwt_point(signal: &TimeSeries, p: WaveletParams) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::EmptySeries);
    }
    let reach = PSI2_SUPPORT * p.alpha();
    let range = sample_range(signal, p.beta() - reach, p.beta() + reach);
    let values = signal.values();
    Ok(range
        .map(|k| values[k] * psi2((signal.time(k) - p.beta()) / p.alpha()))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    alphas: Vec<f64>,
    betas: Vec<f64>,
    values: Vec<f64>,
    span: (f64, f64),
}

impl Scalogram {
    /// Wraps a row-major matrix (rows follow `alphas`). `span` is the time
    /// range of the signal, used for edge flags.
    pub fn from_parts(
        alphas: Vec<f64>,
        betas: Vec<f64>,
        values: Vec<f64>,
        span: (f64, f64),
    ) -> Result<Self> {
        validate_grid(&alphas, &betas)?;
        if values.len() != alphas.len() * betas.len() {
            return Err(Error::LengthMismatch {
                left: alphas.len() * betas.len(),
                right: values.len(),
            });
        }
        Ok(Scalogram {
            alphas,
            betas,
            values,
            span,
        })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    /// (rows, columns) = (number of scales, number of shifts).
    pub fn shape(&self) -> (usize, usize) {
        (self.alphas.len(), self.betas.len())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.betas.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.betas.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Median of `|value|` over the whole matrix.
    pub fn median_abs(&self) -> f64 {
        let mut abs: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        abs.sort_by(f64::total_cmp);
        let n = abs.len();
        if n % 2 == 1 {
            abs[n / 2]
        } else {
            0.5 * (abs[n / 2 - 1] + abs[n / 2])
        }
    }

    /// True when `[β - 5α, β + 5α]` leaves the signal's time range.
    pub fn is_edge(&self, alpha: f64, beta: f64) -> bool {
        is_edge(alpha, beta, self.span)
    }

    /// CSV matrix: first row holds the shifts, first column the scales.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["alpha\\beta".to_string()];
        header.extend(self.betas.iter().map(|b| b.to_string()));
        w.write_record(&header)?;
        for (i, a) in self.alphas.iter().enumerate() {
            let mut rec = vec![a.to_string()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

pub(crate) fn is_edge(alpha: f64, beta: f64, span: (f64, f64)) -> bool {
    beta - EDGE_HALF_WIDTH * alpha < span.0 || beta + EDGE_HALF_WIDTH * alpha > span.1
}

fn validate_grid(alphas: &[f64], betas: &[f64]) -> Result<()> {
    if alphas.is_empty() || betas.is_empty() {
        return Err(Error::InvalidGrid("scale and shift grids must be nonempty".into()));
    }
    if alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidGrid("scales must be positive and finite".into()));
    }
    if betas.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidGrid("shifts must be finite".into()));
    }
    if alphas.windows(2).any(|w| w[1] <= w[0]) || betas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grids must be strictly increasing".into()));
    }
    Ok(())
}

/// `min, min + step, ...` up to `max` inclusive (with a small tolerance).
pub fn alpha_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && step > 0.0) || ![min, max, step].iter().all(|v| v.is_finite())
    {
        return Err(Error::InvalidGrid(format!(
            "need 0 < min <= max and step > 0, got min={min} max={max} step={step}"
        )));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| min + k as f64 * step).collect())
}

/// Detail-pass scales 1, 1.5, ..., 30.
pub fn detail_alphas() -> Vec<f64> {
    alpha_grid(1.0, 30.0, 0.5).expect("static grid")
}

/// Carrier-pass scales 1, 2, ..., 120.
pub fn carrier_alphas() -> Vec<f64> {
    alpha_grid(1.0, 120.0, 1.0).expect("static grid")
}

/// Integer shifts `ceil(start) ..= ceil(end)`. For a first difference
/// (samples at half steps) these are the indices `n` at which
/// `x_n - x_(n-1)` is defined.
pub fn default_betas(signal: &TimeSeries) -> Vec<f64> {
    let lo = signal.start().ceil() as i64;
    let hi = signal.end().ceil() as i64;
    (lo..=hi).map(|b| b as f64).collect()
}

/// Shift grid offset from the sample grid by a common fraction, which lets
/// every row reuse one sampled kernel.
fn common_offset(signal: &TimeSeries, betas: &[f64]) -> Option<f64> {
    let frac = |b: f64| {
        let x = b - signal.start();
        x - x.floor()
    };
    let delta = frac(betas[0]);
    betas
        .iter()
        .all(|&b| {
            let d = (frac(b) - delta).abs();
            d < 1e-9 || (1.0 - d) < 1e-9
        })
        .then_some(delta)
}

fn scalogram_row(signal: &TimeSeries, alpha: f64, betas: &[f64], offset: Option<f64>) -> Vec<f64> {
    let x = signal.values();
    let n = x.len() as isize;
    match offset {
        Some(delta) => {
            // t_k - β_j = (k - m_j) - δ with m_j the integer part of β_j - start
            let reach = (PSI2_SUPPORT * alpha).ceil() as isize + 1;
            let kernel: Vec<f64> = (-reach..=reach)
                .map(|d| psi2((d as f64 - delta) / alpha))
                .collect();
            betas
                .iter()
                .map(|&b| {
                    let m = (b - signal.start() - delta).round() as isize;
                    let lo = (m - reach).max(0);
                    let hi = (m + reach).min(n - 1);
                    (lo..=hi)
                        .map(|k| x[k as usize] * kernel[(k - m + reach) as usize])
                        .sum()
                })
                .collect()
        }
        None => betas
            .iter()
            .map(|&b| {
                let p = WaveletParams::new(alpha, b).expect("validated grid");
                cwt_point(signal, p).expect("nonempty signal")
            })
            .collect(),
    }
}

/// CWT values over the `alphas × betas` grid; rows are evaluated in
/// parallel and assembled in grid order.
pub fn scalogram(signal: &TimeSeries, alphas: &[f64], betas: &[f64]) -> Result<Scalogram> {
    validate_grid(alphas, betas)?;
    if signal.is_empty() {
        return Err(Error::EmptySeries);
    }
    let offset = common_offset(signal, betas);
    let rows: Vec<Vec<f64>> = alphas
        .par_iter()
        .map(|&a| scalogram_row(signal, a, betas, offset))
        .collect();
    Ok(Scalogram {
        alphas: alphas.to_vec(),
        betas: betas.to_vec(),
        values: rows.concat(),
        span: (signal.start(), signal.end()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalogramExtremum {
    pub alpha: f64,
    pub beta: f64,
    pub cwt_value: f64,
    pub kind: ExtremumKind,
    pub edge: bool,
}

/// Greedy pruning box: two extrema closer than this in both coordinates
/// are treated as the same blob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusionRadius {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ExclusionRadius {
    fn default() -> Self {
        ExclusionRadius {
            alpha: 2.0,
            beta: 6.0,
        }
    }
}

/// Local extrema of the scalogram, pruned and sorted by descending
/// `|cwt_value|`.
///
/// Extremality is judged on the scale-normalized map `W(α, β) / sqrt(α)`:
/// against a single logistic step that map peaks exactly at `(a, b)`,
/// whereas the raw values keep growing past `α = a` (to about `1.6 a`).
/// A cell qualifies when it strictly beats its existing 8-neighbors and
/// its raw `|value| >= min_abs`. Survivors are taken greedily by raw
/// magnitude, dropping any that fall inside the exclusion box of one
/// already kept.
pub fn find_extrema(
    s: &Scalogram,
    min_abs: f64,
    exclusion: ExclusionRadius,
) -> Vec<ScalogramExtremum> {
    let (rows, cols) = s.shape();
    let norm: Vec<f64> = s.alphas.iter().map(|a| a.sqrt().recip()).collect();
    let z = |i: usize, j: usize| s.get(i, j) * norm[i];
    let mut found = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let v = s.get(i, j);
            if v.abs() < min_abs || v == 0.0 {
                continue;
            }
            let zv = z(i, j);
            let mut is_max = true;
            let mut is_min = true;
            for di in -1isize..=1 {
                for dj in -1isize..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as isize + di, j as isize + dj);
                    if ii < 0 || jj < 0 || ii >= rows as isize || jj >= cols as isize {
                        continue;
                    }
                    let u = z(ii as usize, jj as usize);
                    is_max &= zv > u;
                    is_min &= zv < u;
                }
            }
            let kind = match (is_max, is_min) {
                (true, false) => ExtremumKind::Maximum,
                (false, true) => ExtremumKind::Minimum,
                _ => continue,
            };
            let (alpha, beta) = (s.alphas[i], s.betas[j]);
            found.push(ScalogramExtremum {
                alpha,
                beta,
                cwt_value: v,
                kind,
                edge: s.is_edge(alpha, beta),
            });
        }
    }
    found.sort_by(|a, b| {
        b.cwt_value
            .abs()
            .total_cmp(&a.cwt_value.abs())
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.beta.total_cmp(&b.beta))
    });
    let mut kept: Vec<ScalogramExtremum> = Vec::new();
    for e in found {
        let clash = kept.iter().any(|k| {
            (k.alpha - e.alpha).abs() <= exclusion.alpha && (k.beta - e.beta).abs() <= exclusion.beta
        });
        if !clash {
            kept.push(e);
        }
    }
    kept
}

/// Saturation level implied by an extremum: `sqrt(30) · α · CWT`.
pub fn ysat_from_cwt(e: &ScalogramExtremum) -> f64 {
    PSI2_NORM * e.alpha * e.cwt_value
}
