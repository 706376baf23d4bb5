//! Bounded local least-squares refinement of selected waves and the drift.
//!
//! Each selected wave is searched in `(a, b, peak)` with `peak = y_sat/(4a)`,
//! inside a box built from its starting values. Two engines share the
//! same contract: a projected Levenberg–Marquardt iteration (default) and a
//! derivative-free coordinate search with shrinking steps. Both accept a
//! move only if it lowers the squared error.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{eval_multilogistic_derivative, LogisticWave, MultilogisticModel};
use crate::timeseries::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineMethod {
    LevenbergMarquardt,
    CoordinateDescent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub method: RefineMethod,
    /// Iteration cap (LM steps or coordinate sweeps).
    pub max_iterations: usize,
    /// Relative tolerance: LM stops when an accepted step improves the error
    /// by less than this fraction; the coordinate search stops when every
    /// step has shrunk below this fraction of its initial size.
    pub tol: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            method: RefineMethod::LevenbergMarquardt,
            max_iterations: 200,
            tol: 1e-10,
        }
    }
}

impl RefineOptions {
    pub fn coordinate() -> Self {
        RefineOptions {
            method: RefineMethod::CoordinateDescent,
            max_iterations: 2000,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub model: MultilogisticModel,
    pub sse_before: f64,
    pub sse_after: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit first; the model is then the
    /// best point found so far.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Bounds {
    a: (f64, f64),
    b: (f64, f64),
    sign: f64,
}

impl Bounds {
    /// `a ∈ [a0/2, 2a0]`, `b ∈ [b0 - 3a0, b0 + 3a0] ∩ [first, last]`,
    /// sign of `y_sat` fixed.
    fn around(w: &LogisticWave, first: f64, last: f64) -> Self {
        let lo = (w.b - 3.0 * w.a).max(first);
        let hi = (w.b + 3.0 * w.a).min(last);
        let b = if lo <= hi { (lo, hi) } else { (w.b, w.b) };
        Bounds {
            a: (0.5 * w.a, 2.0 * w.a),
            b,
            sign: if w.y_sat < 0.0 { -1.0 } else { 1.0 },
        }
    }

    fn project(&self, c: &mut Coords) {
        c.a = c.a.clamp(self.a.0, self.a.1);
        c.b = c.b.clamp(self.b.0, self.b.1);
        if c.peak * self.sign <= 0.0 {
            c.peak = self.sign * MIN_PEAK;
        }
    }
}

const MIN_PEAK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Coords {
    a: f64,
    b: f64,
    peak: f64,
}

impl Coords {
    fn of(w: &LogisticWave) -> Self {
        Coords {
            a: w.a,
            b: w.b,
            peak: w.amplitude(),
        }
    }
}

fn rates(c: Coords, times: &[f64], out: &mut [f64]) {
    let inv = 1.0 / (2.0 * c.a);
    for (o, &t) in out.iter_mut().zip(times) {
        let ch = ((t - c.b) * inv).cosh();
        *o = c.peak / (ch * ch);
    }
}

fn sse(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Problem state shared by both engines: data, the fixed part of the
/// model, and the free coordinates.
struct Problem<'a> {
    times: Vec<f64>,
    x: &'a [f64],
    /// Contribution of the waves that are not being refined.
    fixed: Vec<f64>,
    bounds: Vec<Bounds>,
}

impl Problem<'_> {
    fn residual(&self, coords: &[Coords], d: f64, buf: &mut [f64], out: &mut [f64]) {
        for ((o, x), f) in out.iter_mut().zip(self.x).zip(&self.fixed) {
            *o = x - f - d;
        }
        for &c in coords {
            rates(c, &self.times, buf);
            for (o, v) in out.iter_mut().zip(buf.iter()) {
                *o -= v;
            }
        }
    }
}

/// Minimizes the squared error of the derivative-space model against
/// `series` over `(a, b, y_sat)` of the waves listed in `which` and over
/// the drift `d`. The error never increases.
pub fn refine_parameters(
    series: &TimeSeries,
    m: &MultilogisticModel,
    which: &[usize],
    opts: RefineOptions,
) -> Result<Refinement> {
    if let Some(&bad) = which.iter().find(|&&i| i >= m.waves.len()) {
        return Err(Error::InvalidParameter(format!(
            "wave index {bad} out of range for {} waves",
            m.waves.len()
        )));
    }
    let mut which = which.to_vec();
    which.sort_unstable();
    which.dedup();

    let times: Vec<f64> = series.times().collect();
    let mut rest = m.clone();
    rest.d = 0.0;
    for &i in &which {
        rest.waves[i].y_sat = 0.0;
    }
    let fixed: Vec<f64> = times
        .iter()
        .map(|&t| eval_multilogistic_derivative(&rest, t))
        .collect();
    let problem = Problem {
        times,
        x: series.values(),
        fixed,
        bounds: which
            .iter()
            .map(|&i| Bounds::around(&m.waves[i], series.start(), series.end()))
            .collect(),
    };
    let start: Vec<Coords> = which.iter().map(|&i| Coords::of(&m.waves[i])).collect();

    let n = series.len();
    let mut buf = vec![0.0; n];
    let mut r = vec![0.0; n];
    problem.residual(&start, m.d, &mut buf, &mut r);
    let sse_before = sse(&r);

    let out = match opts.method {
        RefineMethod::LevenbergMarquardt => levenberg_marquardt(&problem, start, m.d, opts),
        RefineMethod::CoordinateDescent => coordinate_descent(&problem, start, m.d, opts),
    };

    let mut model = m.clone();
    model.d = out.d;
    for (k, &i) in which.iter().enumerate() {
        let c = out.coords[k];
        let w = &mut model.waves[i];
        w.a = c.a;
        w.b = c.b;
        w.y_sat = 4.0 * c.a * c.peak;
    }
    Ok(Refinement {
        model,
        sse_before,
        sse_after: out.sse.min(sse_before),
        iterations: out.iterations,
        converged: out.converged,
    })
}

struct EngineOutput {
    coords: Vec<Coords>,
    d: f64,
    sse: f64,
    iterations: usize,
    converged: bool,
}

fn levenberg_marquardt(
    p: &Problem<'_>,
    mut coords: Vec<Coords>,
    mut d: f64,
    opts: RefineOptions,
) -> EngineOutput {
    let n = p.times.len();
    let k = coords.len();
    let dim = 3 * k + 1;
    let mut buf = vec![0.0; n];
    let mut r = vec![0.0; n];
    p.residual(&coords, d, &mut buf, &mut r);
    let mut best = sse(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    let mut jac = DMatrix::<f64>::zeros(n, dim);
    let mut trial = coords.clone();
    let mut r_trial = vec![0.0; n];

    while iterations < opts.max_iterations {
        iterations += 1;
        // Jacobian of the model (not the residual) in (a, b, peak) per wave, then d
        for (w, c) in coords.iter().enumerate() {
            let inv = 1.0 / (2.0 * c.a);
            for (row, &t) in p.times.iter().enumerate() {
                let u = (t - c.b) * inv;
                let ch = u.cosh();
                let sech2 = 1.0 / (ch * ch);
                let th = u.tanh();
                jac[(row, 3 * w)] = 2.0 * c.peak * sech2 * th * u / c.a;
                jac[(row, 3 * w + 1)] = c.peak * sech2 * th / c.a;
                jac[(row, 3 * w + 2)] = sech2;
            }
        }
        for row in 0..n {
            jac[(row, dim - 1)] = 1.0;
        }
        let jtj = jac.tr_mul(&jac);
        let jtr = jac.tr_mul(&DVector::from_column_slice(&r));
        let diag_floor = jtj.diagonal().max() * 1e-12 + f64::MIN_POSITIVE;

        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..dim {
                a[(i, i)] += lambda * jtj[(i, i)].max(diag_floor);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 4.0;
                continue;
            };
            let delta = chol.solve(&jtr);
            for (w, c) in trial.iter_mut().enumerate() {
                *c = coords[w];
                c.a += delta[3 * w];
                c.b += delta[3 * w + 1];
                c.peak += delta[3 * w + 2];
                p.bounds[w].project(c);
            }
            let d_trial = d + delta[dim - 1];
            p.residual(&trial, d_trial, &mut buf, &mut r_trial);
            let cand = sse(&r_trial);
            if cand < best {
                let gain = best - cand;
                coords.copy_from_slice(&trial);
                d = d_trial;
                std::mem::swap(&mut r, &mut r_trial);
                best = cand;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if gain <= opts.tol * cand {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no descent direction left inside the box
            converged = true;
        }
        if converged {
            break;
        }
    }
    EngineOutput {
        coords,
        d,
        sse: best,
        iterations,
        converged,
    }
}

fn coordinate_descent(
    p: &Problem<'_>,
    mut coords: Vec<Coords>,
    mut d: f64,
    opts: RefineOptions,
) -> EngineOutput {
    let n = p.times.len();
    let mut buf = vec![0.0; n];
    let mut resid = vec![0.0; n];
    p.residual(&coords, d, &mut buf, &mut resid);
    let mut best = sse(&resid);
    let scale = (best / n.max(1) as f64).sqrt().max(1e-12);

    let mut contrib: Vec<Vec<f64>> = coords
        .iter()
        .map(|&c| {
            let mut v = vec![0.0; n];
            rates(c, &p.times, &mut v);
            v
        })
        .collect();
    let mut steps: Vec<[f64; 3]> = coords
        .iter()
        .map(|c| [0.1 * c.a, 0.25 * c.a, 0.1 * c.peak.abs().max(scale)])
        .collect();
    let initial = steps.clone();
    let mut d_step = 0.1 * scale;
    let d_step0 = d_step;
    let mut trial = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        iterations += 1;
        for (k, bound) in p.bounds.iter().enumerate() {
            for coord in 0..3 {
                let step = steps[k][coord];
                let mut moved = false;
                for dir in [1.0, -1.0] {
                    let mut c = coords[k];
                    match coord {
                        0 => c.a += dir * step,
                        1 => c.b += dir * step,
                        _ => c.peak += dir * step,
                    }
                    bound.project(&mut c);
                    if c == coords[k] {
                        continue;
                    }
                    rates(c, &p.times, &mut trial);
                    let cand: f64 = resid
                        .iter()
                        .zip(&contrib[k])
                        .zip(&trial)
                        .map(|((r, old), new)| {
                            let v = r + old - new;
                            v * v
                        })
                        .sum();
                    if cand < best {
                        for ((r, old), new) in resid.iter_mut().zip(&contrib[k]).zip(&trial) {
                            *r += old - new;
                        }
                        contrib[k].copy_from_slice(&trial);
                        coords[k] = c;
                        best = cand;
                        moved = true;
                        break;
                    }
                }
                steps[k][coord] *= if moved { 1.5 } else { 0.5 };
            }
        }
        let mut moved = false;
        for dir in [1.0, -1.0] {
            let delta = dir * d_step;
            let cand: f64 = resid.iter().map(|r| (r - delta) * (r - delta)).sum();
            if cand < best {
                resid.iter_mut().for_each(|r| *r -= delta);
                d += delta;
                best = cand;
                moved = true;
                break;
            }
        }
        d_step *= if moved { 1.5 } else { 0.5 };

        let small = steps
            .iter()
            .zip(&initial)
            .all(|(s, s0)| (0..3).all(|i| s[i] <= opts.tol * s0[i]))
            && d_step <= opts.tol * d_step0;
        if small {
            converged = true;
            break;
        }
    }
    EngineOutput {
        coords,
        d,
        sse: best,
        iterations,
        converged,
    }
}
