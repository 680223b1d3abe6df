//! Filtering, spectral decomposition and envelope primitives.

mod filter;
mod spectral;

pub use filter::{design_butterworth, envelope_power, filter_forward, FilterKind, FilterSpec, Sos, Section};
pub use spectral::{band_mean, stft_power, zscore_in_place, zscore_per_channel_frequency, Spectrogram};

use crate::error::{Error, Result};

/// A single-channel signal in µV with its sample rate.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Empty("time series needs at least 2 samples"));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidSpec(format!("sample rate {sample_rate}")));
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(TimeSeries {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}
