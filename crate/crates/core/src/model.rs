//! Multilogistic model: affine drift plus a sum of logistic steps, in
//! cumulative space (`y`) and derivative space (`y' = x`).

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;
use crate::wavelet::{logistic, EDGE_HALF_WIDTH};

/// One logistic component. `a` is the slope coefficient (time scale), `b`
/// the center, `y_sat` the signed total rise it adds to the cumulative
/// series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticWave {
    pub id: String,
    pub a: f64,
    pub b: f64,
    pub y_sat: f64,
    #[serde(default)]
    pub edge: bool,
}

impl LogisticWave {
    pub fn new(id: impl Into<String>, a: f64, b: f64, y_sat: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("wave scale a must be positive, got {a}")));
        }
        if !b.is_finite() || !y_sat.is_finite() {
            return Err(Error::InvalidParameter("wave shift and level must be finite".into()));
        }
        Ok(LogisticWave {
            id: id.into(),
            a,
            b,
            y_sat,
            edge: false,
        })
    }

    /// Cumulative-space contribution `y_sat · x((t - b)/a)`.
    pub fn value(&self, t: f64) -> f64 {
        self.y_sat * logistic((t - self.b) / self.a)
    }

    /// Derivative-space contribution `y_sat/(4a) · cosh⁻²((t - b)/(2a))`.
    pub fn rate(&self, t: f64) -> f64 {
        let c = ((t - self.b) / (2.0 * self.a)).cosh();
        self.amplitude() / (c * c)
    }

    /// Peak of [`rate`](Self::rate), reached at `t = b`.
    pub fn amplitude(&self) -> f64 {
        self.y_sat / (4.0 * self.a)
    }

    /// Whether `[b - 5a, b + 5a]` leaves `[first, last]`.
    pub fn touches_edge(&self, first: f64, last: f64) -> bool {
        self.b - EDGE_HALF_WIDTH * self.a < first || self.b + EDGE_HALF_WIDTH * self.a > last
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilogisticModel {
    #[serde(default)]
    pub c: f64,
    pub d: f64,
    pub waves: Vec<LogisticWave>,
}

impl MultilogisticModel {
    pub fn affine(c: f64, d: f64) -> Self {
        MultilogisticModel {
            c,
            d,
            waves: Vec::new(),
        }
    }

    /// Derivative-space values at the series' sample times.
    pub fn rates_on(&self, series: &TimeSeries) -> Vec<f64> {
        series
            .times()
            .map(|t| eval_multilogistic_derivative(self, t))
            .collect()
    }

    pub fn rate_series(&self, like: &TimeSeries) -> TimeSeries {
        TimeSeries::new(self.rates_on(like))
            .expect("finite model")
            .with_start(like.start())
    }
}

/// `c + d·t + Σ y_sat,i · x((t - b_i)/a_i)`.
pub fn eval_multilogistic(m: &MultilogisticModel, t: f64) -> f64 {
    m.c + m.d * t + m.waves.iter().map(|w| w.value(t)).sum::<f64>()
}

/// `d + Σ y_sat,i/(4a_i) · cosh⁻²((t - b_i)/(2a_i))`; independent of `c`.
pub fn eval_multilogistic_derivative(m: &MultilogisticModel, t: f64) -> f64 {
    m.d + m.waves.iter().map(|w| w.rate(t)).sum::<f64>()
}

/// The same derivative written with exponentials,
/// `d + Σ y_sat,i e^{-u}/(a_i (1 + e^{-u})^2)` with `u = (t - b_i)/a_i`.
pub fn eval_multilogistic_derivative_exp(m: &MultilogisticModel, t: f64) -> f64 {
    m.d + m
        .waves
        .iter()
        .map(|w| {
            // e^{-|u|} keeps the ratio finite; the expression is even in u
            let e = (-((t - w.b) / w.a).abs()).exp();
            w.y_sat * e / (w.a * (1.0 + e) * (1.0 + e))
        })
        .sum::<f64>()
}

/// Which representation a series is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// Totals `y_n` (Eq. 12 style).
    Cumulative,
    /// Monthly values `x_n` (derivative of the totals).
    Derivative,
}

/// Removes one wave's contribution from a series in the given space.
pub fn subtract_wave(series: &TimeSeries, w: &LogisticWave, space: Space) -> TimeSeries {
    let values = series
        .values()
        .iter()
        .zip(series.times())
        .map(|(v, t)| match space {
            Space::Cumulative => v - w.value(t),
            Space::Derivative => v - w.rate(t),
        })
        .collect();
    TimeSeries::new(values)
        .expect("finite series")
        .with_start(series.start())
}

/// Wave table with fit summary, as written to `waves.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveTable {
    #[serde(default)]
    pub c: f64,
    pub d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_squared: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    pub waves: Vec<LogisticWave>,
}

impl WaveTable {
    pub fn from_model(m: &MultilogisticModel, fit: Option<(f64, f64)>) -> Self {
        WaveTable {
            c: m.c,
            d: m.d,
            r_squared: fit.map(|f| f.0),
            rmse: fit.map(|f| f.1),
            waves: m.waves.clone(),
        }
    }

    pub fn model(&self) -> Result<MultilogisticModel> {
        for w in &self.waves {
            LogisticWave::new(w.id.clone(), w.a, w.b, w.y_sat)?;
        }
        if !self.d.is_finite() || !self.c.is_finite() {
            return Err(Error::InvalidParameter("c and d must be finite".into()));
        }
        Ok(MultilogisticModel {
            c: self.c,
            d: self.d,
            waves: self.waves.clone(),
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// CSV mirror: one row per wave, `id,a,b,y_sat,edge`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "a", "b", "y_sat", "edge"])?;
        for wave in &self.waves {
            w.write_record([
                wave.id.clone(),
                wave.a.to_string(),
                wave.b.to_string(),
                wave.y_sat.to_string(),
                wave.edge.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Samples the derivative-space model at `t = 1..=n` and adds Gaussian
/// noise of the given standard deviation. The same seed always gives the
/// same series.
pub fn synthesize(m: &MultilogisticModel, n: usize, noise_sigma: f64, seed: u64) -> Result<TimeSeries> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples, got {n}")));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be nonnegative, got {noise_sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let values = (1..=n)
        .map(|k| {
            let clean = eval_multilogistic_derivative(m, k as f64);
            if noise_sigma > 0.0 {
                clean + normal.sample(&mut rng)
            } else {
                clean
            }
        })
        .collect();
    TimeSeries::new(values)
}
