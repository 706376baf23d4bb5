//! Logistic function, its derivatives and the second-order normalized
//! logistic mother wavelet `psi2 = sqrt(30) * x''`.
//!
//! Children are `psi2((t - beta) / alpha)` with no `1/sqrt(alpha)`
//! prefactor. Against the second derivative of `y_sat * x((t - b) / a)`
//! such a child at `(a, b)` yields exactly `y_sat / (sqrt(30) * a)`.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// sqrt(30): makes the L2 norm of `psi2` equal to one.
pub const PSI2_NORM: f64 = 5.477_225_575_051_661;

/// Half-width (in units of alpha) beyond which `|psi2|` is below 1e-16.
pub const PSI2_SUPPORT: f64 = 40.0;

/// Half-width (in units of alpha) used to decide whether a child wavelet
/// overlaps a series boundary.
pub const EDGE_HALF_WIDTH: f64 = 5.0;

/// Default quadrature support for mother-wavelet integrals.
pub const DEFAULT_SUPPORT: (f64, f64) = (-PSI2_SUPPORT, PSI2_SUPPORT);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletParams {
    alpha: f64,
    beta: f64,
}

impl WaveletParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "wavelet scale must be positive, got {alpha}"
            )));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("wavelet shift {beta} is not finite")));
        }
        Ok(WaveletParams { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Standard logistic `1 / (1 + e^-t)`, evaluated without overflow.
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `x'(t) = x (1 - x)`, the logistic density.
pub fn logistic_d1(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// `x''(t) = x' (1 - 2x) = -x' tanh(t / 2)`.
pub fn logistic_d2(t: f64) -> f64 {
    -logistic_d1(t) * (0.5 * t).tanh()
}

/// Second-order normalized logistic mother wavelet.
pub fn psi2(t: f64) -> f64 {
    PSI2_NORM * logistic_d2(t)
}

pub fn psi2_child(t: f64, p: WaveletParams) -> f64 {
    psi2((t - p.beta) / p.alpha)
}

fn check_quadrature(support: (f64, f64), step: f64) -> Result<usize> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "quadrature step must be positive, got {step}"
        )));
    }
    let (lo, hi) = support;
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "empty quadrature support [{lo}, {hi}]"
        )));
    }
    Ok(((hi - lo) / step).round().max(1.0) as usize)
}

/// Composite trapezoid rule for `f` on `support` with (approximately) the
/// given step. For smooth functions that vanish at both ends this is
/// spectrally accurate.
pub fn integrate<F: Fn(f64) -> f64>(f: F, support: (f64, f64), step: f64) -> Result<f64> {
    let n = check_quadrature(support, step)?;
    let (lo, hi) = support;
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n).map(|k| f(lo + k as f64 * h)).sum();
    Ok(h * (0.5 * (f(lo) + f(hi)) + inner))
}

/// Quadrature estimate of `∫ f(t)^2 dt` over `support`.
pub fn l2_norm_squared<F: Fn(f64) -> f64>(f: F, support: (f64, f64), step: f64) -> Result<f64> {
    integrate(|t| f(t).powi(2), support, step)
}

const XI_MIN: f64 = 1e-8;
const XI_MAX: f64 = 40.0;
const LOG_XI_POINTS: usize = 1200;

/// Estimates the admissibility constant `2π ∫ |ξ|^-1 |ψ̂(ξ)|^2 dξ` of a
/// real function.
///
/// The Fourier transform is computed by trapezoid quadrature on `support`
/// and the frequency integral is taken in `ln ξ` over `[1e-8, 40]`. In that
/// variable the integrand is `|ψ̂|^2` itself, so a function with nonzero
/// mean leaves a plateau at `ξ → 0` and the integral grows without bound as
/// the lower limit shrinks; that case returns [`Error::NotAdmissible`].
pub fn admissibility_check<F>(f: F, step: f64, support: (f64, f64)) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let n = check_quadrature(support, step)?;
    let (lo, hi) = support;
    let h = (hi - lo) / n as f64;
    let samples: Vec<(f64, f64)> = (0..=n)
        .map(|k| {
            let t = lo + k as f64 * h;
            let w = if k == 0 || k == n { 0.5 * h } else { h };
            (t, w * f(t))
        })
        .collect();

    let s_lo = XI_MIN.ln();
    let ds = (XI_MAX.ln() - s_lo) / (LOG_XI_POINTS - 1) as f64;
    // |ψ̂(ξ)|^2 * 2π = (∫ f cos ξt)^2 + (∫ f sin ξt)^2
    let power: Vec<f64> = (0..LOG_XI_POINTS)
        .into_par_iter()
        .map(|j| {
            let xi = (s_lo + j as f64 * ds).exp();
            let (c, s) = samples.iter().fold((0.0, 0.0), |(c, s), &(t, wf)| {
                let (sin, cos) = (xi * t).sin_cos();
                (c + wf * cos, s + wf * sin)
            });
            c * c + s * s
        })
        .collect();

    let peak = power.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    if power[0] > 1e-10 * peak {
        return Err(Error::NotAdmissible);
    }
    let inner: f64 = power[1..LOG_XI_POINTS - 1].iter().sum();
    let trapezoid = ds * (0.5 * (power[0] + power[LOG_XI_POINTS - 1]) + inner);
    // 2π ∫_{-∞}^{∞} |ξ|^-1 |ψ̂|^2 dξ = 2 ∫_0^∞ (c² + s²) d(ln ξ)
    Ok(2.0 * trapezoid)
}
