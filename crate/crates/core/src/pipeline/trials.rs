use ndarray::{s, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::recording::{Channel, ChannelKind, Recording};

/// Extracted trials stored back to back: each trial is `idle_len` samples
/// preceding the movement onset followed by `move_len` samples from it.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSet {
    pub channels: Vec<Channel>,
    pub sample_rate: f64,
    pub idle_len: usize,
    pub move_len: usize,
    /// channels × (n_trials · trial_len)
    pub data: Array2<f32>,
    /// Per-trial mean of the force channel over the move epoch (0 when the
    /// recording has no force channel).
    pub mean_force: Vec<f64>,
    /// Onset sample of each trial in the source recording.
    pub onsets: Vec<usize>,
    /// Events dropped for lack of surrounding data.
    pub skipped: usize,
}

impl TrialSet {
    pub fn trial_len(&self) -> usize {
        self.idle_len + self.move_len
    }

    pub fn n_trials(&self) -> usize {
        self.onsets.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Sample range of trial `k` in the concatenated timeline.
    pub fn bounds(&self, k: usize) -> (usize, usize) {
        (k * self.trial_len(), (k + 1) * self.trial_len())
    }

    pub fn idle(&self, channel: usize, k: usize) -> ArrayView1<'_, f32> {
        let (a, _) = self.bounds(k);
        self.data.slice(s![channel, a..a + self.idle_len])
    }

    pub fn movement(&self, channel: usize, k: usize) -> ArrayView1<'_, f32> {
        let (a, b) = self.bounds(k);
        self.data.slice(s![channel, a + self.idle_len..b])
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.label == label)
    }

    pub fn indices_of(&self, kind: ChannelKind) -> Vec<usize> {
        self.channels
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    /// Same trials restricted to (and reordered as) `idx`.
    pub fn select(&self, idx: &[usize]) -> TrialSet {
        TrialSet {
            channels: idx.iter().map(|&i| self.channels[i].clone()).collect(),
            data: self.data.select(Axis(0), idx),
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> TrialSet {
        TrialSet {
            channels: Vec::new(),
            sample_rate: self.sample_rate,
            idle_len: self.idle_len,
            move_len: self.move_len,
            data: Array2::zeros((0, 0)),
            mean_force: self.mean_force.clone(),
            onsets: self.onsets.clone(),
            skipped: self.skipped,
        }
    }

    pub fn scalp(&self) -> TrialSet {
        self.select(&self.indices_of(ChannelKind::Scalp))
    }

    /// Replace the channels of this set with the rows of `rec`, matched by
    /// label; used to swap in cleaned scalp data.
    pub fn with_channels_from(&self, rec: &Recording) -> Result<TrialSet> {
        if rec.n_samples() != self.data.ncols() {
            return Err(Error::Shape(format!(
                "recording has {} samples, trials {}",
                rec.n_samples(),
                self.data.ncols()
            )));
        }
        let mut out = self.clone();
        for (i, ch) in rec.channels.iter().enumerate() {
            let j = self
                .channel_index(&ch.label)
                .ok_or_else(|| Error::UnknownElectrode(ch.label.clone()))?;
            out.data.row_mut(j).assign(&rec.data.row(i));
        }
        Ok(out)
    }
}

/// Cut one trial per movement onset. Events without `idle_len_s` of data
/// before or `move_len_s` after are skipped and counted.
pub fn segment_trials(rec: &Recording, onsets_s: &[f64], idle_len_s: f64, move_len_s: f64) -> Result<TrialSet> {
    let fs = rec.sample_rate;
    let idle_len = (idle_len_s * fs).round() as usize;
    let move_len = (move_len_s * fs).round() as usize;
    if idle_len == 0 || move_len == 0 {
        return Err(Error::InvalidSpec("epoch lengths must be positive".into()));
    }
    let mut events: Vec<f64> = onsets_s.to_vec();
    events.sort_by(f64::total_cmp);

    let mut keep = Vec::new();
    let mut skipped = 0;
    for &t in &events {
        let onset = (t * fs).round();
        if !(onset >= idle_len as f64) || onset as usize + move_len > rec.n_samples() {
            skipped += 1;
            continue;
        }
        keep.push(onset as usize);
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} events too close to the recording edges");
    }

    let trial_len = idle_len + move_len;
    let mut data = Array2::<f32>::zeros((rec.n_channels(), keep.len() * trial_len));
    for (k, &onset) in keep.iter().enumerate() {
        let src = rec.data.slice(s![.., onset - idle_len..onset + move_len]);
        data.slice_mut(s![.., k * trial_len..(k + 1) * trial_len]).assign(&src);
    }
    let force_row = rec.indices_of(ChannelKind::Force).first().copied();
    let mean_force = keep
        .iter()
        .map(|&onset| match force_row {
            Some(r) => {
                let seg = rec.data.slice(s![r, onset..onset + move_len]);
                seg.iter().map(|&v| v as f64).sum::<f64>() / move_len as f64
            }
            None => 0.0,
        })
        .collect();

    Ok(TrialSet {
        channels: rec.channels.clone(),
        sample_rate: fs,
        idle_len,
        move_len,
        data,
        mean_force,
        onsets: keep,
        skipped,
    })
}

/// Channelwise concatenation of all trials; trial `k` occupies
/// `[k·trial_len, (k+1)·trial_len)`.
pub fn concatenate(trials: &TrialSet) -> Result<Recording> {
    if trials.n_trials() == 0 {
        return Err(Error::Empty("no trials to concatenate"));
    }
    Recording::new(trials.channels.clone(), trials.sample_rate, trials.data.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_recording(n: usize, force: f32) -> Recording {
        let mut data = Array2::<f32>::zeros((2, n));
        for t in 0..n {
            data[[0, t]] = t as f32;
            data[[1, t]] = force;
        }
        Recording::new(
            vec![Channel::new("C3", ChannelKind::Scalp), Channel::new("force", ChannelKind::Force)],
            2000.0,
            data,
        )
        .unwrap()
    }

    #[test]
    fn trial_at_ten_seconds() {
        let rec = ramp_recording(60000, 0.7);
        let ts = segment_trials(&rec, &[10.0], 1.0, 2.0).unwrap();
        assert_eq!(ts.n_trials(), 1);
        assert_eq!(ts.idle(0, 0)[0], 18000.0);
        assert_eq!(ts.idle(0, 0).len(), 2000);
        assert_eq!(ts.movement(0, 0)[0], 20000.0);
        assert_eq!(ts.movement(0, 0)[3999], 23999.0);
        assert!((ts.mean_force[0] - 0.7).abs() < 1e-7);
    }

    #[test]
    fn edge_events_skipped() {
        let rec = ramp_recording(30000, 1.0);
        let ts = segment_trials(&rec, &[0.5, 5.0, 14.5], 1.0, 2.0).unwrap();
        assert_eq!(ts.n_trials(), 1);
        assert_eq!(ts.skipped, 2);
    }

    #[test]
    fn concatenation_preserves_samples() {
        let rec = ramp_recording(60000, 0.0);
        let ts = segment_trials(&rec, &[20.0, 3.0, 11.0], 1.0, 2.0).unwrap();
        let cat = concatenate(&ts).unwrap();
        assert_eq!(cat.n_samples(), 18000);
        for (k, onset) in [3.0f64, 11.0, 20.0].iter().enumerate() {
            let (a, b) = ts.bounds(k);
            assert_eq!((a, b), (6000 * k, 6000 * (k + 1)));
            let start = (onset * 2000.0) as usize - 2000;
            for i in 0..6000 {
                assert_eq!(cat.data[[0, a + i]], rec.data[[0, start + i]]);
            }
        }
        assert!(concatenate(&segment_trials(&rec, &[], 1.0, 2.0).unwrap()).is_err());
    }
}
