//! Finite-difference residual checks for the KdV soliton and for the
//! generalized equation `4R_T - 2αRR_X + R_XXX + C1 = 0`.
//!
//! If `u` solves `u_T - 6uu_X + u_XXX = 0`, then
//! `R(X, T) = (3/α)·u(X - αC1·T²/16, T/4) - C1·T/4` solves the generalized
//! form; [`generalized_soliton`] samples that map.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative tolerance on grid spacing uniformity.
const SPACING_TOL: f64 = 1e-9;

/// `u(x, t)` sampled on uniform grids; `values[i][j]` is at `(xs[j], ts[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    xs: Vec<f64>,
    ts: Vec<f64>,
    values: Vec<Vec<f64>>,
}

fn uniform_step(v: &[f64], what: &str) -> Result<f64> {
    if v.len() < 2 {
        return Err(Error::InvalidGrid(format!("{what} grid needs at least 2 points")));
    }
    let h = v[1] - v[0];
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidGrid(format!("{what} grid must increase")));
    }
    for (k, w) in v.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > SPACING_TOL * h.max(w[1].abs()) {
            return Err(Error::InvalidGrid(format!(
                "{what} grid is not uniform at index {}",
                k + 1
            )));
        }
    }
    Ok(h)
}

/// `n` points `start, start + step, ...`.
pub fn uniform_grid(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| start + step * k as f64).collect()
}

impl GridFunction {
    pub fn new(xs: Vec<f64>, ts: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        uniform_step(&xs, "x")?;
        uniform_step(&ts, "t")?;
        if values.len() != ts.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: ts.len(),
            });
        }
        for row in &values {
            if row.len() != xs.len() {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: xs.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGrid("non-finite value".into()));
            }
        }
        Ok(GridFunction { xs, ts, values })
    }

    pub fn sample(xs: Vec<f64>, ts: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = ts.iter().map(|&t| xs.iter().map(|&x| f(x, t)).collect()).collect();
        Self::new(xs, ts, values)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn h(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    pub fn tau(&self) -> f64 {
        self.ts[1] - self.ts[0]
    }

    /// Same values with every time stamp multiplied by `factor`.
    pub fn with_time_scale(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.xs.clone(),
            self.ts.iter().map(|t| t * factor).collect(),
            self.values.clone(),
        )
    }

    /// First row `t\x, x_0, x_1, ...`; then one row per time level.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut head = vec!["t\\x".to_string()];
        head.extend(self.xs.iter().map(|x| format!("{x:.17e}")));
        wr.write_record(&head)?;
        for (t, row) in self.ts.iter().zip(&self.values) {
            let mut rec = vec![format!("{t:.17e}")];
            rec.extend(row.iter().map(|v| format!("{v:.17e}")));
            wr.write_record(&rec)?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn from_csv_reader<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(r);
        let mut rows = rdr.records();
        let head = rows
            .next()
            .ok_or_else(|| Error::InvalidGrid("empty grid file".into()))??;
        let parse = |s: &str, row: usize| {
            s.parse::<f64>().map_err(|_| Error::Row {
                row,
                message: format!("cannot parse number {s:?}"),
            })
        };
        let xs = head.iter().skip(1).map(|s| parse(s, 1)).collect::<Result<Vec<_>>>()?;
        let mut ts = Vec::new();
        let mut values = Vec::new();
        for (k, rec) in rows.enumerate() {
            let row = k + 2;
            let rec = rec.map_err(|e| Error::Row {
                row,
                message: e.to_string(),
            })?;
            let mut it = rec.iter();
            ts.push(parse(it.next().unwrap_or(""), row)?);
            values.push(it.map(|s| parse(s, row)).collect::<Result<Vec<_>>>()?);
        }
        Self::new(xs, ts, values)
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(std::io::BufReader::new(f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdvParams {
    pub k: f64,
    pub alpha_scale: f64,
    pub c1: f64,
}

impl KdvParams {
    pub fn new(k: f64, alpha_scale: f64, c1: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
        }
        if !(alpha_scale.is_finite() && alpha_scale != 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_scale must be finite and nonzero, got {alpha_scale}"
            )));
        }
        if !c1.is_finite() {
            return Err(Error::InvalidParameter(format!("c1 must be finite, got {c1}")));
        }
        Ok(KdvParams { k, alpha_scale, c1 })
    }
}

/// `-2k²·sech²(kx - 4k³t)`.
pub fn soliton(k: f64, x: f64, t: f64) -> f64 {
    let c = (k * x - 4.0 * k * k * k * t).cosh();
    -2.0 * k * k / (c * c)
}

/// Exact solution of the generalized equation obtained from [`soliton`].
pub fn generalized_soliton(p: KdvParams, x: f64, t: f64) -> f64 {
    let a = p.alpha_scale;
    3.0 / a * soliton(p.k, x - a * p.c1 * t * t / 16.0, t / 4.0) - p.c1 * t / 4.0
}

/// Max over interior points of `|c_t·u_T + c_n·u·u_X + u_XXX + c_0|`, with
/// two-point central `u_T` and central 3- and 5-point stencils in `x`.
fn max_operator(g: &GridFunction, c_t: f64, c_n: f64, c_0: f64) -> Result<f64> {
    let (nx, nt) = (g.xs.len(), g.ts.len());
    if nx < 5 || nt < 3 {
        return Err(Error::InvalidGrid(format!(
            "need at least 5 x points and 3 time levels, got {nx} x {nt}"
        )));
    }
    let h = g.h();
    let tau = g.tau();
    let u = &g.values;
    let worst = (1..nt - 1)
        .into_par_iter()
        .map(|i| {
            let mut m: f64 = 0.0;
            for j in 2..nx - 2 {
                let ut = (u[i + 1][j] - u[i - 1][j]) / (2.0 * tau);
                let row = &u[i];
                let ux = (row[j + 1] - row[j - 1]) / (2.0 * h);
                let uxxx = (row[j + 2] - 2.0 * row[j + 1] + 2.0 * row[j - 1] - row[j - 2])
                    / (2.0 * h * h * h);
                let r = c_t * ut + c_n * row[j] * ux + uxxx + c_0;
                m = m.max(r.abs());
            }
            m
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Max-norm residual of `u_T - 6uu_X + u_XXX` on the interior.
pub fn kdv_residual(g: &GridFunction) -> Result<f64> {
    max_operator(g, 1.0, -6.0, 0.0)
}

/// Max-norm residual of `4R_T - 2αRR_X + R_XXX + C1` on the interior.
/// `p.k` is not used.
pub fn generalized_residual(g: &GridFunction, p: KdvParams) -> Result<f64> {
    max_operator(g, 4.0, -2.0 * p.alpha_scale, p.c1)
}

/// Mean of `A_i/T_i` and the largest relative deviation from it.
pub fn amplitude_shift_ratio(chain: &[(f64, f64)]) -> Result<(f64, f64)> {
    if chain.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "chain too short: {} entr(y/ies), need at least 2",
            chain.len()
        )));
    }
    if let Some(k) = chain.iter().position(|&(_, t)| t == 0.0) {
        return Err(Error::InvalidParameter(format!("entry {} has T = 0", k + 1)));
    }
    let ratios: Vec<f64> = chain.iter().map(|&(a, t)| a / t).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = ratios
        .iter()
        .map(|r| (r - mean).abs())
        .fold(0.0, f64::max)
        / mean.abs();
    Ok((mean, spread))
}
