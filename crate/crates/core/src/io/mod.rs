//! File formats: recordings, montages, event lists and ICA bundles.

mod montage;
mod recording;

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

pub use montage::{mirror, read_montage, write_montage, Electrode, Montage, Region, Side, LEFT_HAND_MOTOR, RIGHT_HAND_MOTOR};
pub use recording::{
    decode_recording, encode_recording, parse_recording_csv, read_recording, recording_to_csv, write_recording,
    write_recording_csv,
};

use crate::error::{Error, Result};
use crate::ica::IcaModel;

/// One movement onset per line, in seconds. Blank lines and `#` comments
/// are ignored.
pub fn parse_events(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            let v: f64 = t.parse().map_err(|_| Error::Parse {
                offset,
                msg: format!("bad event time {t:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    offset,
                    msg: "non-finite event time".into(),
                });
            }
            out.push(v);
        }
        offset += line.len() as u64;
    }
    Ok(out)
}

pub fn events_to_string(onsets: &[f64]) -> String {
    let mut s = String::new();
    for t in onsets {
        let _ = writeln!(s, "{t}");
    }
    s
}

pub fn read_events(path: &Path) -> Result<Vec<f64>> {
    parse_events(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_events(path: &Path, onsets: &[f64]) -> Result<()> {
    std::fs::write(path, events_to_string(onsets)).map_err(|e| Error::io(path, e))
}

const ICA_MAGIC: &[u8; 8] = b"ERASEICA";

/// ICA bundle: magic, u32 channels, u32 components, u64 seed, u32
/// iterations, then means, whitening, unmixing and mixing as row-major
/// little-endian f64.
pub fn encode_ica(model: &IcaModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(ICA_MAGIC);
    out.extend_from_slice(&(model.n_channels() as u32).to_le_bytes());
    out.extend_from_slice(&(model.n_components as u32).to_le_bytes());
    out.extend_from_slice(&model.seed.to_le_bytes());
    out.extend_from_slice(&(model.iterations as u32).to_le_bytes());
    let mats = [
        model.channel_means.iter().copied().collect::<Vec<_>>(),
        model.whitening.iter().copied().collect(),
        model.unmixing.iter().copied().collect(),
        model.mixing.iter().copied().collect(),
    ];
    for m in &mats {
        for v in m {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_ica(buf: &[u8]) -> Result<IcaModel> {
    let perr = |offset: usize, msg: &str| Error::Parse {
        offset: offset as u64,
        msg: msg.to_string(),
    };
    if buf.len() < 28 || &buf[..8] != ICA_MAGIC {
        return Err(perr(0, "bad ICA bundle header"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(buf[i..i + 4].try_into().unwrap()) as usize;
    let (c, k) = (u32_at(8), u32_at(12));
    let seed = u64::from_le_bytes(buf[16..24].try_into().unwrap());
    let iterations = u32_at(24);
    let need = 28 + 8 * (c + k * c + k * k + c * k);
    if buf.len() != need {
        return Err(perr(buf.len().min(need), "ICA bundle size mismatch"));
    }
    let mut vals = buf[28..].chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()));
    let mut take = |n: usize| -> Vec<f64> { vals.by_ref().take(n).collect() };
    let means = Array1::from(take(c));
    let whitening = Array2::from_shape_vec((k, c), take(k * c)).unwrap();
    let unmixing = Array2::from_shape_vec((k, k), take(k * k)).unwrap();
    let mixing = Array2::from_shape_vec((c, k), take(c * k)).unwrap();
    Ok(IcaModel {
        channel_means: means,
        whitening,
        unmixing,
        mixing,
        n_components: k,
        seed,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_round_trip() {
        let ev = vec![2.0, 7.25, 13.125];
        assert_eq!(parse_events(&events_to_string(&ev)).unwrap(), ev);
        assert_eq!(parse_events("# onsets\n1.5\n\n3\n").unwrap(), vec![1.5, 3.0]);
        assert!(matches!(parse_events("1\nx\n"), Err(Error::Parse { offset: 2, .. })));
    }

    #[test]
    fn ica_bundle_round_trip() {
        let model = IcaModel {
            channel_means: Array1::from(vec![0.5, -1.0, 2.0]),
            whitening: Array2::from_shape_fn((2, 3), |(i, j)| (i * 3 + j) as f64 * 0.1),
            unmixing: Array2::from_shape_fn((2, 2), |(i, j)| if i == j { 1.0 } else { 0.0 }),
            mixing: Array2::from_shape_fn((3, 2), |(i, j)| i as f64 - j as f64),
            n_components: 2,
            seed: 42,
            iterations: 17,
        };
        assert_eq!(decode_ica(&encode_ica(&model)).unwrap(), model);
        let bytes = encode_ica(&model);
        assert!(decode_ica(&bytes[..bytes.len() - 1]).is_err());
    }
}
