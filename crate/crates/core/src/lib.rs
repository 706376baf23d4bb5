//! Logistic-wavelet decomposition of time series into a linear drift plus
//! a sum of solitary waves, with companion entropy and KdV utilities.

pub mod cwt;
pub mod decompose;
pub mod error;
pub mod info;
pub mod kdv;
pub mod model;
pub mod reference;
pub mod refine;
pub mod timeseries;
pub mod trend;
pub mod wavelet;

pub use error::{Error, ErrorKind, Result};
