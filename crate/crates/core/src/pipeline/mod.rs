//! Trial handling and the two ICA cleaning conditions.

mod erase;
mod trials;

pub use erase::{
    augment_with_virtual_channels, band_power_fraction, burst_schedule, classify_artifact_ics, run_conventional_ica,
    run_erase, ConventionalConfig, EraseConfig, EraseResult,
};
pub use trials::{concatenate, segment_trials, TrialSet};

use crate::error::Result;
use crate::recording::{ChannelKind, Recording};
use crate::signal::{design_butterworth, FilterSpec};

/// Filter every scalp channel of a continuous recording (force and
/// virtual channels are left alone).
pub fn preprocess(rec: &Recording, spec: &FilterSpec, zero_phase: bool) -> Result<Recording> {
    let sos = design_butterworth(spec, rec.sample_rate)?;
    let mut out = rec.clone();
    let mut buf = vec![0.0f64; rec.n_samples()];
    for c in rec.indices_of(ChannelKind::Scalp) {
        buf.iter_mut().zip(rec.data.row(c)).for_each(|(b, &v)| *b = v as f64);
        if zero_phase {
            sos.apply_zero_phase_in_place(&mut buf);
        } else {
            sos.apply_in_place(&mut buf);
        }
        out.data.row_mut(c).iter_mut().zip(&buf).for_each(|(o, &v)| *o = v as f32);
    }
    Ok(out)
}
