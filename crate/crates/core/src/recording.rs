use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Scalp,
    Virtual,
    Force,
}

impl ChannelKind {
    pub fn code(self) -> u8 {
        match self {
            ChannelKind::Scalp => 0,
            ChannelKind::Virtual => 1,
            ChannelKind::Force => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ChannelKind::Scalp),
            1 => Some(ChannelKind::Virtual),
            2 => Some(ChannelKind::Force),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Scalp => "scalp",
            ChannelKind::Virtual => "virtual",
            ChannelKind::Force => "force",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "scalp" => Some(ChannelKind::Scalp),
            "virtual" => Some(ChannelKind::Virtual),
            "force" => Some(ChannelKind::Force),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub label: String,
    pub kind: ChannelKind,
}

impl Channel {
    pub fn new(label: impl Into<String>, kind: ChannelKind) -> Self {
        Channel {
            label: label.into(),
            kind,
        }
    }
}

/// Multichannel recording, one row per channel, samples in µV (force
/// channels in sensor units).
#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    pub channels: Vec<Channel>,
    pub sample_rate: f64,
    pub data: Array2<f32>,
}

impl Recording {
    pub fn new(channels: Vec<Channel>, sample_rate: f64, data: Array2<f32>) -> Result<Self> {
        if data.nrows() != channels.len() {
            return Err(Error::Shape(format!(
                "{} channels but {} data rows",
                channels.len(),
                data.nrows()
            )));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidSpec(format!("sample rate {sample_rate}")));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Recording {
            channels,
            sample_rate,
            data,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.label == label)
    }

    pub fn channel(&self, i: usize) -> ArrayView1<'_, f32> {
        self.data.row(i)
    }

    pub fn indices_of(&self, kind: ChannelKind) -> Vec<usize> {
        self.channels
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    /// New recording with only the listed channels, in the given order.
    pub fn select(&self, idx: &[usize]) -> Recording {
        let channels = idx.iter().map(|&i| self.channels[i].clone()).collect();
        let data = self.data.select(ndarray::Axis(0), idx);
        Recording {
            channels,
            sample_rate: self.sample_rate,
            data,
        }
    }

    pub fn scalp(&self) -> Recording {
        self.select(&self.indices_of(ChannelKind::Scalp))
    }

    pub fn force(&self) -> Option<ArrayView1<'_, f32>> {
        self.indices_of(ChannelKind::Force)
            .first()
            .map(|&i| self.data.row(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_row_mismatch() {
        let ch = vec![Channel::new("C3", ChannelKind::Scalp)];
        assert!(Recording::new(ch, 2000.0, Array2::zeros((2, 4))).is_err());
    }

    #[test]
    fn rejects_nan() {
        let ch = vec![Channel::new("C3", ChannelKind::Scalp)];
        let err = Recording::new(ch, 2000.0, array![[0.0, f32::NAN]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1 }));
    }

    #[test]
    fn select_by_kind() {
        let ch = vec![
            Channel::new("C3", ChannelKind::Scalp),
            Channel::new("V1", ChannelKind::Virtual),
            Channel::new("F", ChannelKind::Force),
        ];
        let rec = Recording::new(ch, 100.0, array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let s = rec.scalp();
        assert_eq!(s.n_channels(), 1);
        assert_eq!(s.data, array![[1.0, 2.0]]);
        assert_eq!(rec.force().unwrap().to_vec(), vec![5.0, 6.0]);
    }
}
