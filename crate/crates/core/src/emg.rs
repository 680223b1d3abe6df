//! Simulated EMG: band-limited Gaussian noise gated by movement-locked
//! trapezoidal bursts.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::signal::{design_butterworth, FilterSpec, TimeSeries};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmgSpec {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// Butterworth order of the shaping bandpass.
    pub filter_order: usize,
    /// Onset/offset ramp duration of each burst.
    pub ramp_ms: f64,
    /// RMS over the active (nonzero-envelope) samples, µV.
    pub amplitude_scale: f64,
    pub n_sources: usize,
    pub seed: u64,
}

impl Default for EmgSpec {
    fn default() -> Self {
        EmgSpec {
            band_low_hz: 20.0,
            band_high_hz: 200.0,
            filter_order: 6,
            ramp_ms: 100.0,
            amplitude_scale: 10.0,
            n_sources: 8,
            seed: 0,
        }
    }
}

impl EmgSpec {
    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        if !(self.amplitude_scale > 0.0 && self.amplitude_scale.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "EMG amplitude {} must be positive",
                self.amplitude_scale
            )));
        }
        if self.ramp_ms < 0.0 {
            return Err(Error::InvalidSpec("negative EMG ramp".into()));
        }
        self.band().validate(sample_rate)
    }

    pub fn band(&self) -> FilterSpec {
        FilterSpec::bandpass(self.filter_order, self.band_low_hz, self.band_high_hz)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Burst {
    pub onset: usize,
    pub len: usize,
    pub gain: f64,
}

/// Movement-locked burst schedule; ramps sit inside each burst.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BurstSchedule {
    pub bursts: Vec<Burst>,
}

impl BurstSchedule {
    /// Trapezoid per burst: linear rise over `ramp` samples, plateau at
    /// `gain`, linear fall. Overlapping bursts add.
    pub fn envelope(&self, n_samples: usize, ramp: usize) -> Vec<f64> {
        let mut env = vec![0.0; n_samples];
        for b in &self.bursts {
            let r = ramp.min(b.len / 2);
            for i in 0..b.len {
                let t = b.onset + i;
                if t >= n_samples {
                    break;
                }
                let edge = i.min(b.len - 1 - i);
                let shape = if r == 0 || edge >= r {
                    1.0
                } else {
                    (edge as f64 + 0.5) / r as f64
                };
                env[t] += b.gain * shape;
            }
        }
        env
    }
}

pub fn simulate_emg(
    spec: &EmgSpec,
    schedule: &BurstSchedule,
    n_samples: usize,
    sample_rate: f64,
) -> Result<Vec<TimeSeries>> {
    spec.validate(sample_rate)?;
    let sos = design_butterworth(&spec.band(), sample_rate)?;
    let ramp = (spec.ramp_ms * sample_rate / 1000.0).round() as usize;
    let env = schedule.envelope(n_samples, ramp);
    let active: Vec<usize> = (0..n_samples).filter(|&t| env[t] != 0.0).collect();

    (0..spec.n_sources)
        .map(|k| {
            let mut rng = seed::rng(spec.seed, k as u64);
            let mut x: Vec<f64> = (0..n_samples).map(|_| rng.sample(StandardNormal)).collect();
            sos.apply_in_place(&mut x);
            x.iter_mut().zip(&env).for_each(|(v, e)| *v *= e);
            if !active.is_empty() {
                let ms = active.iter().map(|&t| x[t] * x[t]).sum::<f64>() / active.len() as f64;
                let scale = spec.amplitude_scale / ms.sqrt();
                x.iter_mut().for_each(|v| *v *= scale);
            }
            TimeSeries::new(x, sample_rate)
        })
        .collect()
}
