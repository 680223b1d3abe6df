use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::trials::{concatenate, TrialSet};
use crate::emg::{simulate_emg, Burst, BurstSchedule, EmgSpec};
use crate::error::{Error, Result};
use crate::ica::{fit_fastica, IcaConfig, IcaModel};
use crate::recording::{Channel, ChannelKind, Recording};
use crate::signal::{design_butterworth, stft_power, FilterSpec, TimeSeries};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EraseConfig {
    pub emg: EmgSpec,
    pub ica: IcaConfig,
    /// Loading-ratio threshold: components with score above it are rejected.
    pub theta: f64,
    /// Scale each trial's virtual burst by its mean force (relative to the
    /// strongest trial). With `false` every burst has unit gain.
    pub force_weighted: bool,
    /// Applied to the virtual channels so they share the EEG's shaping.
    pub preprocess: FilterSpec,
}

impl Default for EraseConfig {
    fn default() -> Self {
        EraseConfig {
            emg: EmgSpec::default(),
            ica: IcaConfig::default(),
            theta: 1.0,
            force_weighted: true,
            preprocess: FilterSpec::bandpass(3, 3.0, 200.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConventionalConfig {
    pub ica: IcaConfig,
    /// Reject components whose high-γ share of power exceeds this.
    pub max_gamma_fraction: f64,
    pub gamma_low_hz: f64,
    pub gamma_high_hz: f64,
}

impl Default for ConventionalConfig {
    fn default() -> Self {
        ConventionalConfig {
            ica: IcaConfig::default(),
            max_gamma_fraction: 0.5,
            gamma_low_hz: 80.0,
            gamma_high_hz: 160.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EraseResult {
    /// Scalp channels only, same order as the input.
    pub cleaned: Recording,
    pub model: IcaModel,
    pub rejected: Vec<usize>,
    /// ERASE: loading ratio; conventional: high-γ power fraction.
    pub scores: Vec<f64>,
    /// Channels of the ICA input flagged virtual.
    pub virtual_mask: Vec<bool>,
    /// Virtual rows as fed to ICA (ERASE only).
    pub virtual_channels: Option<Array2<f32>>,
}

pub fn augment_with_virtual_channels(eeg: &Recording, sources: &[TimeSeries]) -> Result<Recording> {
    let n = eeg.n_samples();
    for (k, s) in sources.iter().enumerate() {
        if s.len() != n {
            return Err(Error::Shape(format!("virtual source {k} has {} samples, EEG {n}", s.len())));
        }
        if s.sample_rate != eeg.sample_rate {
            return Err(Error::Shape(format!(
                "virtual source {k} at {} Hz, EEG at {} Hz",
                s.sample_rate, eeg.sample_rate
            )));
        }
    }
    let c = eeg.n_channels();
    let mut data = Array2::<f32>::zeros((c + sources.len(), n));
    data.slice_mut(ndarray::s![..c, ..]).assign(&eeg.data);
    for (k, s) in sources.iter().enumerate() {
        data.row_mut(c + k).iter_mut().zip(&s.samples).for_each(|(d, v)| *d = *v as f32);
    }
    let mut channels = eeg.channels.clone();
    channels.extend((0..sources.len()).map(|k| Channel::new(format!("EMG{}", k + 1), ChannelKind::Virtual)));
    Recording::new(channels, eeg.sample_rate, data)
}

/// Loading ratio per component on unit-norm mixing columns:
/// `mean_{i∈virtual}|A_ij| / mean_{i}|A_ij|`. Rejected iff `> theta`.
pub fn classify_artifact_ics(model: &IcaModel, virtual_mask: &[bool], theta: f64) -> Result<(Vec<usize>, Vec<f64>)> {
    let a = &model.mixing;
    if virtual_mask.len() != a.nrows() {
        return Err(Error::Shape(format!(
            "virtual mask has {} entries for {} channels",
            virtual_mask.len(),
            a.nrows()
        )));
    }
    let n_virtual = virtual_mask.iter().filter(|&&v| v).count();
    if n_virtual == 0 {
        return Err(Error::Shape("no virtual channels".into()));
    }
    let mut scores = Vec::with_capacity(a.ncols());
    for (j, col) in a.axis_iter(Axis(1)).enumerate() {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        let all = col.iter().map(|v| v.abs()).sum::<f64>() / norm / a.nrows() as f64;
        let virt = col
            .iter()
            .zip(virtual_mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| v.abs())
            .sum::<f64>()
            / norm
            / n_virtual as f64;
        scores.push(virt / all);
    }
    let rejected = (0..scores.len()).filter(|&j| scores[j] > theta).collect();
    Ok((rejected, scores))
}

fn to_f64(rec: &Recording) -> Array2<f64> {
    rec.data.mapv(|v| v as f64)
}

/// Reconstruct with `rejected` zeroed and keep the first `keep` channels.
fn reconstruct(model: &IcaModel, x: &Array2<f64>, rejected: &[usize], template: &Recording, keep: usize) -> Result<Recording> {
    let s = model.transform(x.view())?;
    let back = model.inverse_transform(s.view(), rejected)?;
    let data = back.slice(ndarray::s![..keep, ..]).mapv(|v| v as f32);
    Recording::new(template.channels[..keep].to_vec(), template.sample_rate, data)
}

/// Virtual burst schedule: one burst per move epoch of the concatenated
/// trials.
pub fn burst_schedule(trials: &TrialSet, force_weighted: bool) -> BurstSchedule {
    let max_force = trials.mean_force.iter().copied().fold(0.0, f64::max);
    BurstSchedule {
        bursts: (0..trials.n_trials())
            .map(|k| {
                let gain = if force_weighted && max_force > 0.0 {
                    trials.mean_force[k].max(0.0) / max_force
                } else {
                    1.0
                };
                Burst {
                    onset: trials.bounds(k).0 + trials.idle_len,
                    len: trials.move_len,
                    gain,
                }
            })
            .collect(),
    }
}

/// ICA on EEG + simulated-EMG virtual channels, rejecting components that
/// load on the virtual channels. `trials` must already be preprocessed.
pub fn run_erase(trials: &TrialSet, cfg: &EraseConfig) -> Result<EraseResult> {
    let eeg = concatenate(&trials.scalp())?;
    let schedule = burst_schedule(trials, cfg.force_weighted);
    let mut sources = simulate_emg(&cfg.emg, &schedule, eeg.n_samples(), eeg.sample_rate)?;
    let pre = design_butterworth(&cfg.preprocess, eeg.sample_rate)?;
    for s in &mut sources {
        pre.apply_in_place(&mut s.samples);
    }
    let aug = augment_with_virtual_channels(&eeg, &sources)?;
    drop(sources);
    let virtual_mask: Vec<bool> = aug.channels.iter().map(|c| c.kind == ChannelKind::Virtual).collect();
    let x = to_f64(&aug);
    let model = fit_fastica(x.view(), &cfg.ica)?;
    let (rejected, scores) = classify_artifact_ics(&model, &virtual_mask, cfg.theta)?;
    log::info!("ERASE rejected {} of {} components", rejected.len(), model.n_components);
    let cleaned = reconstruct(&model, &x, &rejected, &aug, eeg.n_channels())?;
    let virtual_channels = Some(aug.data.slice(ndarray::s![eeg.n_channels().., ..]).to_owned());
    Ok(EraseResult {
        cleaned,
        model,
        rejected,
        scores,
        virtual_mask,
        virtual_channels,
    })
}

/// Fraction of each row's power inside `[lo, hi]` Hz (Hann periodogram
/// averaged over non-overlapping 512-sample frames).
pub fn band_power_fraction(rows: &Array2<f64>, sample_rate: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    rows.outer_iter()
        .map(|row| {
            let ts = TimeSeries::new(row.to_vec(), sample_rate)?;
            let win = 512.min(ts.len());
            let spec = stft_power(&ts, win, win)?;
            let (mut inb, mut tot) = (0.0, 0.0);
            for f in 0..spec.n_frames() {
                for (k, p) in spec.frame(f).iter().enumerate() {
                    tot += p;
                    let hz = spec.freqs_hz[k];
                    if hz >= lo && hz <= hi {
                        inb += p;
                    }
                }
            }
            Ok(if tot > 0.0 { inb / tot } else { 0.0 })
        })
        .collect()
}

/// ICA on EEG alone; components dominated by high-γ power are rejected.
pub fn run_conventional_ica(trials: &TrialSet, cfg: &ConventionalConfig) -> Result<EraseResult> {
    let eeg = concatenate(&trials.scalp())?;
    let x = to_f64(&eeg);
    let model = fit_fastica(x.view(), &cfg.ica)?;
    let s = model.transform(x.view())?;
    let scores = band_power_fraction(&s, eeg.sample_rate, cfg.gamma_low_hz, cfg.gamma_high_hz)?;
    let rejected: Vec<usize> = (0..scores.len()).filter(|&j| scores[j] > cfg.max_gamma_fraction).collect();
    log::info!("conventional ICA rejected {} of {} components", rejected.len(), model.n_components);
    let back = model.inverse_transform(s.view(), &rejected)?;
    let cleaned = Recording::new(eeg.channels.clone(), eeg.sample_rate, back.mapv(|v| v as f32))?;
    Ok(EraseResult {
        cleaned,
        model,
        rejected,
        scores,
        virtual_mask: vec![false; eeg.n_channels()],
        virtual_channels: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn model_with_mixing(a: Array2<f64>) -> IcaModel {
        let (c, k) = a.dim();
        IcaModel {
            channel_means: ndarray::Array1::zeros(c),
            whitening: Array2::zeros((k, c)),
            unmixing: Array2::eye(k),
            mixing: a,
            n_components: k,
            seed: 0,
            iterations: 0,
        }
    }

    #[test]
    fn extreme_loadings() {
        // 3 scalp + 2 virtual channels.
        let a = array![
            [0.0, 1.0, 0.5],
            [0.0, 2.0, 0.5],
            [0.0, 1.0, 0.5],
            [1.0, 0.0, 0.5],
            [3.0, 0.0, 0.5]
        ];
        let mask = [false, false, false, true, true];
        let (rej, scores) = classify_artifact_ics(&model_with_mixing(a), &mask, 1.0).unwrap();
        assert!((scores[0] - 5.0 / 2.0).abs() < 1e-12);
        assert_eq!(scores[1], 0.0);
        assert!((scores[2] - 1.0).abs() < 1e-12);
        assert_eq!(rej, vec![0]);
    }

    #[test]
    fn lowering_theta_never_shrinks_rejection() {
        let a = array![[0.3, 1.0, 0.2], [0.1, 0.4, 0.9], [0.8, 0.2, 0.1], [0.5, 0.05, 0.6]];
        let model = model_with_mixing(a);
        let mask = [false, false, true, true];
        let mut prev: Vec<usize> = Vec::new();
        for i in (0..40).rev() {
            let theta = 0.05 * i as f64;
            let (rej, _) = classify_artifact_ics(&model, &mask, theta).unwrap();
            assert!(prev.iter().all(|j| rej.contains(j)));
            prev = rej;
        }
    }

    #[test]
    fn zero_column_named() {
        let a = array![[1.0, 0.0], [0.5, 0.0]];
        let err = classify_artifact_ics(&model_with_mixing(a), &[false, true], 1.0).unwrap_err();
        assert!(matches!(err, Error::ZeroColumn(1)));
    }

    #[test]
    fn augment_appends_virtual_rows() {
        let eeg = Recording::new(
            vec![Channel::new("C3", ChannelKind::Scalp), Channel::new("C4", ChannelKind::Scalp)],
            100.0,
            array![[1.5, -2.25, 3.0], [0.0, 7.0, 1e-3]],
        )
        .unwrap();
        let src = vec![TimeSeries::new(vec![1.0, 2.0, 3.0], 100.0).unwrap()];
        let aug = augment_with_virtual_channels(&eeg, &src).unwrap();
        assert_eq!(aug.n_channels(), 3);
        assert_eq!(aug.channels[2].kind, ChannelKind::Virtual);
        assert_eq!(aug.data.slice(ndarray::s![..2, ..]), eeg.data);
        let bad = vec![TimeSeries::new(vec![1.0, 2.0], 100.0).unwrap()];
        assert!(augment_with_virtual_channels(&eeg, &bad).is_err());
    }
}
