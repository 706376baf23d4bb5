//! Uniformly spaced univariate series, differencing and fit scoring.
//!
//! The time axis is the observation index: the first value sits at
//! `start` (1.0 for ingested data) and each following value one unit
//! later. Calendar labels travel along as metadata only.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which CSV column holds the values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Name(String),
    Index(usize),
}

impl From<&str> for Column {
    fn from(s: &str) -> Self {
        Column::Name(s.to_string())
    }
}

impl From<usize> for Column {
    fn from(i: usize) -> Self {
        Column::Index(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    start: f64,
    labels: Vec<String>,
}

impl TimeSeries {
    /// Builds a series whose first value sits at index 1.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Row {
                row: k + 1,
                message: "value is not a finite number".into(),
            });
        }
        Ok(TimeSeries {
            values,
            start: 1.0,
            labels: Vec::new(),
        })
    }

    /// Moves the time origin; the first value is placed at `start`.
    pub fn with_start(mut self, start: f64) -> Self {
        self.start = start;
        self
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if !labels.is_empty() && labels.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                left: self.values.len(),
                right: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Calendar tag of the first observation, if any.
    pub fn start_label(&self) -> Option<&str> {
        self.labels.first().map(String::as_str)
    }

    /// Time index of the k-th value (0-based position).
    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.time(k))
    }

    pub fn end(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    /// Keeps the first `n` observations.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate a series of length {} to {n}",
                self.len()
            )));
        }
        let labels = if self.labels.is_empty() {
            Vec::new()
        } else {
            self.labels[..n].to_vec()
        };
        Ok(TimeSeries {
            values: self.values[..n].to_vec(),
            start: self.start,
            labels,
        })
    }

    /// Reads a headed CSV file. Rows must be chronological; blank or
    /// non-numeric cells are rejected with the offending row number
    /// (1-based, header excluded).
    pub fn from_csv_path(path: impl AsRef<Path>, column: impl Into<Column>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, column)
    }

    pub fn from_csv_reader<R: Read>(reader: R, column: impl Into<Column>) -> Result<Self> {
        let column = column.into();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.is_empty() {
            return Err(Error::EmptySeries);
        }
        let value_col = match &column {
            Column::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))?,
            Column::Index(i) if *i < headers.len() => *i,
            Column::Index(i) => return Err(Error::MissingColumn(format!("#{i}"))),
        };
        let label_col = (headers.len() > 1).then_some(if value_col == 0 { 1 } else { 0 });

        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (k, record) in rdr.records().enumerate() {
            let row = k + 1;
            let record = record?;
            let cell = record.get(value_col).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::Row {
                    row,
                    message: "missing value".into(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Row {
                row,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Row {
                    row,
                    message: format!("{cell:?} is not finite"),
                });
            }
            values.push(v);
            if let Some(lc) = label_col {
                labels.push(record.get(lc).unwrap_or("").to_string());
            }
        }
        match values.len() {
            0 => Err(Error::EmptySeries),
            1 => Err(Error::TooShort { needed: 2, got: 1 }),
            _ => TimeSeries::new(values)?.with_labels(labels),
        }
    }

    /// Writes `label,value` rows with 17 significant digits, which
    /// reproduces every f64 exactly on re-ingestion.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["label", "value"])?;
        for (k, v) in self.values.iter().enumerate() {
            let label = match self.labels.get(k) {
                Some(l) => l.clone(),
                None => format_index(self.time(k)),
            };
            w.write_record([label, format!("{v:.16e}")])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }
}

fn format_index(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{}", t as i64)
    } else {
        format!("{t}")
    }
}

/// Element k is `x[k+1] - x[k]`. The result is stamped half a step
/// after the input origin: each difference estimates the derivative at
/// the midpoint of its two samples.
pub fn first_difference(s: &TimeSeries) -> Result<TimeSeries> {
    if s.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: s.len(),
        });
    }
    let values = s.values.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(TimeSeries {
        values,
        start: s.start + 0.5,
        labels: Vec::new(),
    })
}

/// Running sum `y_n = x_1 + ... + x_n`.
pub fn cumulative(s: &TimeSeries) -> TimeSeries {
    let values = s
        .values
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    TimeSeries {
        values,
        start: s.start,
        labels: s.labels.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub r_squared: f64,
    pub rmse: f64,
    pub residuals: Vec<f64>,
}

/// Coefficient of determination about the sample mean, and RMSE.
pub fn fit_metrics(observed: &[f64], predicted: &[f64]) -> Result<FitReport> {
    if observed.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: observed.len(),
            right: predicted.len(),
        });
    }
    if observed.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: observed.len(),
        });
    }
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let ss_tot: f64 = observed.iter().map(|o| (o - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantSeries);
    }
    let residuals: Vec<f64> = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| o - p)
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(FitReport {
        r_squared: 1.0 - ss_res / ss_tot,
        rmse: (ss_res / n).sqrt(),
        residuals,
    })
}

/// [`fit_metrics`] on two series of equal length.
pub fn fit_series(observed: &TimeSeries, predicted: &TimeSeries) -> Result<FitReport> {
    fit_metrics(observed.values(), predicted.values())
}
