//! Recording files.
//!
//! Binary layout, all little-endian:
//!
//! | field          | type            |
//! |----------------|-----------------|
//! | magic          | `b"ERASEREC"`   |
//! | version        | u16 (= 1)       |
//! | reserved       | u16 (= 0)       |
//! | sample rate    | f64             |
//! | channels       | u32             |
//! | samples        | u64             |
//! | per channel    | kind u8, label length u16, label UTF-8 |
//! | data           | f32, channel-major |
//!
//! The CSV form has a header row `kind:label,...` and one row per sample,
//! preceded by a `# sample_rate=<hz>` line.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::recording::{Channel, ChannelKind, Recording};

pub const MAGIC: &[u8; 8] = b"ERASEREC";
pub const VERSION: u16 = 1;

pub fn encode_recording(rec: &Recording) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + rec.data.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&rec.sample_rate.to_le_bytes());
    out.extend_from_slice(&(rec.n_channels() as u32).to_le_bytes());
    out.extend_from_slice(&(rec.n_samples() as u64).to_le_bytes());
    for ch in &rec.channels {
        out.push(ch.kind.code());
        out.extend_from_slice(&(ch.label.len() as u16).to_le_bytes());
        out.extend_from_slice(ch.label.as_bytes());
    }
    for v in rec.data.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Parse {
                offset: self.buf.len() as u64,
                msg: format!("truncated while reading {what} (need {n} bytes at {})", self.pos),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }

    fn err(&self, at: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            offset: at as u64,
            msg: msg.into(),
        }
    }
}

pub fn decode_recording(buf: &[u8]) -> Result<Recording> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(r.err(0, "bad magic"));
    }
    let version = u16::from_le_bytes(r.array("version")?);
    if version != VERSION {
        return Err(r.err(8, format!("unsupported version {version}")));
    }
    r.take(2, "reserved")?;
    let sample_rate = f64::from_le_bytes(r.array("sample rate")?);
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(r.err(12, format!("invalid sample rate {sample_rate}")));
    }
    let n_ch = u32::from_le_bytes(r.array("channel count")?) as usize;
    let n_samp = u64::from_le_bytes(r.array("sample count")?) as usize;
    let mut channels = Vec::with_capacity(n_ch.min(4096));
    for _ in 0..n_ch {
        let at = r.pos;
        let code = r.array::<1>("channel kind")?[0];
        let kind = ChannelKind::from_code(code).ok_or_else(|| r.err(at, format!("unknown channel kind {code}")))?;
        let len = u16::from_le_bytes(r.array("label length")?) as usize;
        let at = r.pos;
        let label = std::str::from_utf8(r.take(len, "label")?).map_err(|_| r.err(at, "label is not UTF-8"))?;
        channels.push(Channel::new(label, kind));
    }
    let total = n_ch
        .checked_mul(n_samp)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| r.err(r.pos, "sample table size overflows"))?;
    let start = r.pos;
    let bytes = r.take(total, "samples")?;
    let mut values = Vec::with_capacity(n_ch * n_samp);
    for (i, c) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(c.try_into().expect("chunk of 4"));
        if !v.is_finite() {
            return Err(r.err(start + 4 * i, "non-finite sample"));
        }
        values.push(v);
    }
    if r.pos != buf.len() {
        return Err(r.err(r.pos, format!("{} trailing bytes", buf.len() - r.pos)));
    }
    let data = Array2::from_shape_vec((n_ch, n_samp), values).expect("shape matches");
    Recording::new(channels, sample_rate, data)
}

pub fn write_recording(path: &Path, rec: &Recording) -> Result<()> {
    std::fs::write(path, encode_recording(rec)).map_err(|e| Error::io(path, e))
}

/// Reads either format; files starting with the binary magic are binary.
pub fn read_recording(path: &Path) -> Result<Recording> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if buf.starts_with(b"#") {
        let text = String::from_utf8(buf).map_err(|e| Error::Parse {
            offset: e.utf8_error().valid_up_to() as u64,
            msg: "CSV recording is not UTF-8".into(),
        })?;
        parse_recording_csv(&text)
    } else {
        decode_recording(&buf)
    }
}

pub fn recording_to_csv(rec: &Recording) -> String {
    let mut s = format!("# sample_rate={}\n", rec.sample_rate);
    let header: Vec<String> = rec.channels.iter().map(|c| format!("{}:{}", c.kind.name(), c.label)).collect();
    s.push_str(&header.join(","));
    s.push('\n');
    for t in 0..rec.n_samples() {
        for c in 0..rec.n_channels() {
            if c > 0 {
                s.push(',');
            }
            // `{}` on f32 prints the shortest string that round-trips.
            let _ = write!(s, "{}", rec.data[[c, t]]);
        }
        s.push('\n');
    }
    s
}

pub fn parse_recording_csv(text: &str) -> Result<Recording> {
    let mut offset = 0u64;
    let mut lines = text.split_inclusive('\n');
    let mut next = |offset: &mut u64| {
        lines.next().map(|l| {
            let at = *offset;
            *offset += l.len() as u64;
            (at, l.trim_end_matches(['\n', '\r']))
        })
    };
    let perr = |at: u64, msg: String| Error::Parse { offset: at, msg };

    let (at, first) = next(&mut offset).ok_or_else(|| perr(0, "empty file".into()))?;
    let sample_rate: f64 = first
        .strip_prefix("# sample_rate=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr(at, "expected '# sample_rate=<hz>'".into()))?;
    let (at, header) = next(&mut offset).ok_or_else(|| perr(offset, "missing header".into()))?;
    let channels = header
        .split(',')
        .map(|h| {
            let (kind, label) = h.split_once(':').ok_or_else(|| perr(at, format!("bad column {h:?}")))?;
            let kind = ChannelKind::parse(kind).ok_or_else(|| perr(at, format!("unknown kind {kind:?}")))?;
            Ok(Channel::new(label, kind))
        })
        .collect::<Result<Vec<_>>>()?;
    let nc = channels.len();
    let mut cols: Vec<Vec<f32>> = vec![Vec::new(); nc];
    while let Some((at, line)) = next(&mut offset) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != nc {
            return Err(perr(at, format!("expected {nc} fields, found {}", fields.len())));
        }
        for (c, f) in fields.iter().enumerate() {
            let v: f32 = f.trim().parse().map_err(|_| perr(at, format!("bad number {f:?}")))?;
            if !v.is_finite() {
                return Err(perr(at, "non-finite sample".into()));
            }
            cols[c].push(v);
        }
    }
    let n = cols.first().map_or(0, Vec::len);
    let data = Array2::from_shape_vec((nc, n), cols.concat()).expect("rectangular");
    Recording::new(channels, sample_rate, data)
}

pub fn write_recording_csv(path: &Path, rec: &Recording) -> Result<()> {
    std::fs::write(path, recording_to_csv(rec)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Recording {
        let data = Array2::from_shape_fn((3, 50), |(c, t)| (c as f32 + 1.0) * (t as f32 * 0.37).sin() * 12.5);
        Recording::new(
            vec![
                Channel::new("C3", ChannelKind::Scalp),
                Channel::new("FCC5h", ChannelKind::Scalp),
                Channel::new("force", ChannelKind::Force),
            ],
            2000.0,
            data,
        )
        .unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let rec = sample();
        assert_eq!(decode_recording(&encode_recording(&rec)).unwrap(), rec);
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode_recording(&sample());
        let cut = &bytes[..bytes.len() - 3];
        match decode_recording(cut) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, cut.len() as u64),
            other => panic!("{other:?}"),
        }
        match decode_recording(&bytes[..20]) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 20),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = encode_recording(&sample());
        bytes[0] = b'X';
        assert!(matches!(decode_recording(&bytes), Err(Error::Parse { offset: 0, .. })));
        let mut bytes = encode_recording(&sample());
        bytes[8] = 9;
        assert!(matches!(decode_recording(&bytes), Err(Error::Parse { offset: 8, .. })));
    }

    #[test]
    fn nan_sample_rejected() {
        let mut bytes = encode_recording(&sample());
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_recording(&bytes), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_matches_binary() {
        let rec = sample();
        let back = parse_recording_csv(&recording_to_csv(&rec)).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rec = sample();
        let bin = dir.path().join("r.bin");
        let csv = dir.path().join("r.csv");
        write_recording(&bin, &rec).unwrap();
        write_recording_csv(&csv, &rec).unwrap();
        assert_eq!(read_recording(&bin).unwrap(), rec);
        assert_eq!(read_recording(&csv).unwrap(), rec);
    }
}
