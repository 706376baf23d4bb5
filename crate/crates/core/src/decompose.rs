//! Detect-subtract-rescan decomposition of a monthly series into drift
//! plus logistic-derivative waves, with bounded local refinement.

use serde::{Deserialize, Serialize};

use crate::cwt::{
    carrier_alphas, default_betas, detail_alphas, find_extrema, scalogram, ysat_from_cwt,
    ExclusionRadius, ScalogramExtremum,
};
use crate::error::{Error, Result};
use crate::model::{LogisticWave, MultilogisticModel};
use crate::refine::{refine_parameters, RefineOptions};
use crate::timeseries::{first_difference, fit_metrics, FitReport, TimeSeries};

/// Scales and detection threshold for one scalogram pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PassConfig {
    pub alphas: Vec<f64>,
    /// Shift grid; `None` uses the integer indices of the signal.
    pub betas: Option<Vec<f64>>,
    /// Minimum `|CWT|`; `None` means 3× the median `|CWT|` of the pass.
    pub min_abs_cwt: Option<f64>,
    pub exclusion: ExclusionRadius,
}

impl PassConfig {
    /// Scales 1..=120. Carriers are ranked by magnitude, so no floor.
    pub fn carrier() -> Self {
        PassConfig {
            alphas: carrier_alphas(),
            betas: None,
            min_abs_cwt: Some(0.0),
            exclusion: ExclusionRadius::default(),
        }
    }

    /// Scales 1..=30 step 0.5 with the 3×median noise floor.
    pub fn detail() -> Self {
        PassConfig {
            alphas: detail_alphas(),
            betas: None,
            min_abs_cwt: None,
            exclusion: ExclusionRadius::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionConfig {
    /// Total number of waves, carriers included.
    pub max_waves: usize,
    /// At most this many carriers are taken from the carrier pass.
    pub max_carriers: usize,
    pub carrier: PassConfig,
    pub detail: PassConfig,
    pub refine: bool,
    /// Stop adding waves once the fit reaches this R².
    pub stop_r2: f64,
    pub refine_options: RefineOptions,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        DecompositionConfig {
            max_waves: 22,
            max_carriers: 2,
            carrier: PassConfig::carrier(),
            detail: PassConfig::detail(),
            refine: true,
            stop_r2: 0.9939,
            refine_options: RefineOptions::default(),
        }
    }
}

impl DecompositionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_waves < 1 {
            return Err(Error::InvalidParameter("max_waves must be at least 1".into()));
        }
        if !(self.stop_r2 > 0.0 && self.stop_r2 <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "stop_r2 must lie in (0, 1], got {}",
                self.stop_r2
            )));
        }
        for pass in [&self.carrier, &self.detail] {
            if pass.alphas.is_empty() {
                return Err(Error::InvalidGrid("empty scale grid".into()));
            }
            if let Some(m) = pass.min_abs_cwt {
                if !(m >= 0.0) {
                    return Err(Error::InvalidParameter(format!("min_abs_cwt must be >= 0, got {m}")));
                }
            }
        }
        Ok(())
    }
}

/// A wave read off a scalogram extremum.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub wave: LogisticWave,
    pub extremum: ScalogramExtremum,
}

/// Scans `signal_diff` (first difference of the modelled series) and turns
/// every accepted extremum into a wave `(a, b, y_sat) = (α, β, sqrt(30)·α·W)`,
/// strongest derivative-space peak first.
pub fn detect_waves(signal_diff: &TimeSeries, pass: &PassConfig) -> Result<Vec<Detection>> {
    let betas = pass
        .betas
        .clone()
        .unwrap_or_else(|| default_betas(signal_diff));
    let s = scalogram(signal_diff, &pass.alphas, &betas)?;
    let threshold = pass.min_abs_cwt.unwrap_or_else(|| 3.0 * s.median_abs());
    let mut found: Vec<Detection> = find_extrema(&s, threshold, pass.exclusion)
        .into_iter()
        .map(|e| Detection {
            wave: LogisticWave {
                id: String::new(),
                a: e.alpha,
                b: e.beta,
                y_sat: ysat_from_cwt(&e),
                edge: e.edge,
            },
            extremum: e,
        })
        .collect();
    found.sort_by(|x, y| {
        y.wave
            .amplitude()
            .abs()
            .total_cmp(&x.wave.amplitude().abs())
            .then(x.wave.b.total_cmp(&y.wave.b))
            .then(x.wave.a.total_cmp(&y.wave.a))
    });
    for (k, d) in found.iter_mut().enumerate() {
        d.wave.id = (k + 1).to_string();
    }
    Ok(found)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub model: MultilogisticModel,
    pub fit: FitReport,
}

fn score(series: &TimeSeries, m: &MultilogisticModel) -> Result<FitReport> {
    let pred = m.rates_on(series);
    match fit_metrics(series.values(), &pred) {
        // a constant series reproduced exactly is a perfect fit
        Err(Error::ConstantSeries) => {
            let residuals: Vec<f64> = series.values().iter().zip(&pred).map(|(o, p)| o - p).collect();
            let rmse = (sse(&residuals) / residuals.len() as f64).sqrt();
            let scale = series.values()[0].abs().max(1.0);
            Ok(FitReport {
                r_squared: if rmse <= 1e-9 * scale { 1.0 } else { 0.0 },
                rmse,
                residuals,
            })
        }
        other => other,
    }
}

fn sse(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn residual_series(series: &TimeSeries, m: &MultilogisticModel) -> TimeSeries {
    let values = series
        .values()
        .iter()
        .zip(m.rates_on(series))
        .map(|(x, p)| x - p)
        .collect();
    TimeSeries::new(values)
        .expect("finite residual")
        .with_start(series.start())
}

const JOINT_ITERATION_FACTOR: usize = 5;

/// Scale multipliers tried for each carrier. Carriers sit near the ends of
/// the record, where the truncated scalogram underestimates their width.
const CARRIER_SCALE_STARTS: [f64; 4] = [1.0, 1.5, 2.0, 3.0];
const MAX_INDEPENDENT_CARRIERS: usize = 3;

/// Fits the carriers with the drift from every combination of starting
/// widths and keeps the lowest error. Without refinement the detections are
/// used as found.
fn fit_carriers(
    series: &TimeSeries,
    base: &MultilogisticModel,
    carriers: &[Detection],
    cfg: &DecompositionConfig,
) -> Result<MultilogisticModel> {
    let mut plain = base.clone();
    plain.waves.extend(carriers.iter().map(|c| c.wave.clone()));
    if !cfg.refine {
        return Ok(plain);
    }
    let which: Vec<usize> = (base.waves.len()..plain.waves.len()).collect();
    let n = CARRIER_SCALE_STARTS.len();
    // past a few carriers all of them share one multiplier
    let shared = carriers.len() > MAX_INDEPENDENT_CARRIERS;
    let combos = if shared { n } else { n.pow(carriers.len() as u32) };
    let mut best: Option<(f64, MultilogisticModel)> = None;
    for mut code in 0..combos {
        let mut start = plain.clone();
        for &i in &which {
            let s = CARRIER_SCALE_STARTS[code % n];
            if !shared {
                code /= n;
            }
            let w = &mut start.waves[i];
            w.a *= s;
            w.y_sat *= s;
        }
        let r = refine_parameters(series, &start, &which, cfg.refine_options)?;
        if best.as_ref().is_none_or(|(e, _)| r.sse_after < *e) {
            best = Some((r.sse_after, r.model));
        }
    }
    let base_sse = sse(&score(series, base)?.residuals);
    match best {
        Some((e, m)) if e < base_sse => Ok(m),
        _ => Ok(base.clone()),
    }
}

/// Minimum series length accepted by [`decompose`].
pub const MIN_DECOMPOSE_LEN: usize = 20;

/// Full pipeline on a monthly series `x_n`:
///
/// 1. carrier pass on `Δx` over large scales; keep up to `max_carriers`
///    extrema wider than the detail range and fit them with the drift from
///    several starting widths;
/// 2. repeatedly rescan the first difference of the residual over detail
///    scales and try the strongest new extremum as a wave, refined with the
///    drift; keep it only if the error drops;
/// 3. stop at `stop_r2`, at `max_waves`, or when no candidate is left;
/// 4. refine all waves jointly and score the fit.
pub fn decompose(series: &TimeSeries, cfg: &DecompositionConfig) -> Result<Decomposition> {
    cfg.validate()?;
    if series.len() < MIN_DECOMPOSE_LEN {
        return Err(Error::TooShort {
            needed: MIN_DECOMPOSE_LEN,
            got: series.len(),
        });
    }
    let (first, last) = (series.start(), series.end());
    let mean = series.values().iter().sum::<f64>() / series.len() as f64;
    let mut model = MultilogisticModel::affine(0.0, mean);
    let opts = cfg.refine_options;

    let refine = |m: &MultilogisticModel, which: &[usize]| -> Result<MultilogisticModel> {
        if cfg.refine {
            Ok(refine_parameters(series, m, which, opts)?.model)
        } else {
            Ok(m.clone())
        }
    };

    // carriers
    let detail_max = cfg.detail.alphas.iter().cloned().fold(0.0, f64::max);
    let diff = first_difference(series)?;
    let carriers: Vec<Detection> = detect_waves(&diff, &cfg.carrier)?
        .into_iter()
        .filter(|d| d.wave.a > detail_max)
        .take(cfg.max_carriers.min(cfg.max_waves))
        .collect();
    if !carriers.is_empty() {
        model = fit_carriers(series, &model, &carriers, cfg)?;
    }
    let mut rejected: Vec<(f64, f64)> = Vec::new();
    let mut fit = score(series, &model)?;
    while model.waves.len() < cfg.max_waves && fit.r_squared < cfg.stop_r2 {
        let resid = residual_series(series, &model);
        let rdiff = first_difference(&resid)?;
        let candidates = detect_waves(&rdiff, &cfg.detail)?;
        let excl = cfg.detail.exclusion;
        let next = candidates.into_iter().find(|c| {
            !rejected
                .iter()
                .any(|&(a, b)| (a - c.wave.a).abs() <= excl.alpha && (b - c.wave.b).abs() <= excl.beta)
        });
        let Some(next) = next else { break };

        let before = sse(&fit.residuals);
        let mut trial = model.clone();
        trial.waves.push(next.wave.clone());
        let new_idx = trial.waves.len() - 1;
        trial = refine(&trial, &[new_idx])?;
        let trial_fit = score(series, &trial)?;
        if sse(&trial_fit.residuals) < before {
            model = trial;
            fit = trial_fit;
        } else {
            rejected.push((next.wave.a, next.wave.b));
        }
    }

    if cfg.refine && !model.waves.is_empty() {
        let all: Vec<usize> = (0..model.waves.len()).collect();
        let joint = RefineOptions {
            max_iterations: opts.max_iterations * JOINT_ITERATION_FACTOR,
            ..opts
        };
        model = refine_parameters(series, &model, &all, joint)?.model;
    }
    for (k, w) in model.waves.iter_mut().enumerate() {
        w.id = (k + 1).to_string();
        w.edge = w.touches_edge(first, last);
    }
    let fit = score(series, &model)?;
    Ok(Decomposition { model, fit })
}
