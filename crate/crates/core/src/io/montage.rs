//! Electrode layout, hemicraniectomy-area mask and hand-motor sets.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LEFT_HAND_MOTOR: [&str; 7] = ["C3", "C5", "C1", "FCC5h", "FCC3h", "CCP5h", "CCP3h"];
pub const RIGHT_HAND_MOTOR: [&str; 7] = ["C4", "C2", "C6", "FCC6h", "FCC4h", "CCP4h", "CCP6h"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "HA")]
    Ha,
    #[serde(rename = "NHA")]
    Nha,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Ha => "HA",
            Region::Nha => "NHA",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Electrode {
    pub label: String,
    /// Unit-disk position, +x right, +y anterior.
    pub x: f64,
    pub y: f64,
    pub region: Region,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Montage {
    pub electrodes: Vec<Electrode>,
    /// Side of the hemicraniectomy.
    pub side: Side,
}

/// Homologous electrode on the other hemisphere: odd numbers (left) map to
/// the next even number and back; midline labels map to themselves.
pub fn mirror(label: &str) -> String {
    let (body, h) = match label.strip_suffix('h') {
        Some(b) => (b, "h"),
        None => (label, ""),
    };
    let split = body.find(|c: char| c.is_ascii_digit()).unwrap_or(body.len());
    let (prefix, digits) = body.split_at(split);
    match digits.parse::<u32>() {
        Ok(n) if n % 2 == 1 => format!("{prefix}{}{h}", n + 1),
        Ok(n) if n > 0 => format!("{prefix}{}{h}", n - 1),
        _ => label.to_string(),
    }
}

/// Lateral column index: odd number n → −(n+1)/2, even n → n/2, a trailing
/// "h" moves half a column toward the midline.
fn column(label: &str) -> Option<f64> {
    let (body, half) = match label.strip_suffix('h') {
        Some(b) => (b, true),
        None => (label, false),
    };
    if body.ends_with('z') {
        return Some(0.0);
    }
    let split = body.find(|c: char| c.is_ascii_digit())?;
    let n: u32 = body[split..].parse().ok()?;
    let base = if n % 2 == 1 { -((n + 1) as f64) / 2.0 } else { n as f64 / 2.0 };
    Some(if half { base - base.signum() * 0.5 } else { base })
}

/// Rows of the bundled layout, anterior to posterior, with their
/// anterior-posterior index.
const LAYOUT: &[(f64, &[&str])] = &[
    (4.0, &["Fp1", "Fp2"]),
    (3.5, &["AFp1", "AFp2"]),
    (3.0, &["AF7", "AF3", "AFz", "AF4", "AF8"]),
    (2.5, &["AFF7h", "AFF5h", "AFF1h", "AFF2h", "AFF6h", "AFF8h"]),
    (2.0, &["F9", "F7", "F5", "F3", "F1", "Fz", "F2", "F4", "F6", "F8", "F10"]),
    (1.5, &["FFT9h", "FFT7h", "FFC5h", "FFC3h", "FFC1h", "FFC2h", "FFC4h", "FFC6h", "FFT8h", "FFT10h"]),
    (1.0, &["FT9", "FT7", "FC5", "FC3", "FC1", "FCz", "FC2", "FC4", "FC6", "FT8", "FT10"]),
    (0.5, &["FTT9h", "FTT7h", "FCC5h", "FCC3h", "FCC1h", "FCC2h", "FCC4h", "FCC6h", "FTT8h", "FTT10h"]),
    (0.0, &["T9", "T7", "C5", "C3", "C1", "Cz", "C2", "C4", "C6", "T8", "T10"]),
    (-0.5, &["TTP7h", "CCP5h", "CCP3h", "CCP1h", "CCP2h", "CCP4h", "CCP6h", "TTP8h"]),
    (-1.0, &["TP9", "TP7", "CP5", "CP3", "CP1", "CPz", "CP2", "CP4", "CP6", "TP8", "TP10"]),
    (-1.5, &["TPP9h", "TPP7h", "CPP5h", "CPP3h", "CPP1h", "CPP2h", "CPP4h", "CPP6h", "TPP8h", "TPP10h"]),
    (-2.0, &["P9", "P7", "P5", "P3", "P1", "Pz", "P2", "P4", "P6", "P8", "P10"]),
    (-2.5, &["PPO9h", "PPO5h", "PPO1h", "PPO2h", "PPO6h", "PPO10h"]),
    (-3.0, &["PO7", "PO3", "POz", "PO4", "PO8"]),
    (-3.5, &["POO1", "POO2"]),
    (-4.0, &["O1", "Oz", "O2"]),
    (-4.5, &["OI1h", "OI2h"]),
    (-5.0, &["I1", "I2"]),
];

const GRID: f64 = 5.5;

impl Montage {
    /// The bundled 128-electrode 10-10/10-5 layout. The HA is the lateral
    /// central strip of the operated hemisphere, from the F row to the P row.
    pub fn default_128(side: Side) -> Montage {
        let mut electrodes = Vec::with_capacity(128);
        for &(row, labels) in LAYOUT {
            for &label in labels {
                let col = column(label).expect("layout labels are well formed");
                let (mut x, mut y) = (col / GRID, row / GRID);
                let r = x.hypot(y);
                if r > 0.95 {
                    x *= 0.95 / r;
                    y *= 0.95 / r;
                }
                let lateral = match side {
                    Side::Left => col <= -0.5,
                    Side::Right => col >= 0.5,
                };
                let region = if lateral && (-2.0..=2.0).contains(&row) { Region::Ha } else { Region::Nha };
                electrodes.push(Electrode {
                    label: label.to_string(),
                    x,
                    y,
                    region,
                });
            }
        }
        Montage { electrodes, side }
    }

    pub fn new(electrodes: Vec<Electrode>, side: Side) -> Result<Montage> {
        let mut seen = HashSet::new();
        for e in &electrodes {
            if !seen.insert(e.label.as_str()) {
                return Err(Error::Montage(format!("duplicate electrode {:?}", e.label)));
            }
            if !(e.x.is_finite() && e.y.is_finite()) {
                return Err(Error::Montage(format!("non-finite position for {:?}", e.label)));
            }
        }
        let m = Montage { electrodes, side };
        for label in m.hand_motor_labels() {
            if m.index(label).is_none() {
                return Err(Error::Montage(format!(
                    "hand-motor electrode {label} missing for {}-sided HA",
                    side.name()
                )));
            }
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.electrodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.electrodes.is_empty()
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.electrodes.iter().position(|e| e.label == label)
    }

    pub fn get(&self, label: &str) -> Result<&Electrode> {
        self.index(label)
            .map(|i| &self.electrodes[i])
            .ok_or_else(|| Error::UnknownElectrode(label.to_string()))
    }

    pub fn labels(&self) -> Vec<&str> {
        self.electrodes.iter().map(|e| e.label.as_str()).collect()
    }

    pub fn hand_motor_labels(&self) -> [&'static str; 7] {
        match self.side {
            Side::Left => LEFT_HAND_MOTOR,
            Side::Right => RIGHT_HAND_MOTOR,
        }
    }

    pub fn contralesional_labels(&self) -> Vec<String> {
        self.hand_motor_labels().iter().map(|l| mirror(l)).collect()
    }

    pub fn ha_labels(&self) -> Vec<&str> {
        self.electrodes
            .iter()
            .filter(|e| e.region == Region::Ha)
            .map(|e| e.label.as_str())
            .collect()
    }

    /// Sub-montage with `labels` in the given order; must keep the
    /// hand-motor set.
    pub fn subset(&self, labels: &[&str]) -> Result<Montage> {
        let electrodes = labels
            .iter()
            .map(|l| self.get(l).cloned())
            .collect::<Result<Vec<_>>>()?;
        Montage::new(electrodes, self.side)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("side,{}\nlabel,x,y,region\n", self.side.name());
        for e in &self.electrodes {
            let _ = writeln!(s, "{},{},{},{}", e.label, e.x, e.y, e.region.name());
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Montage> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let side = match lines.next().map(|(_, l)| l.trim()) {
            Some("side,left") => Side::Left,
            Some("side,right") => Side::Right,
            other => return Err(Error::Montage(format!("expected side line, found {other:?}"))),
        };
        match lines.next() {
            Some((_, l)) if l.trim() == "label,x,y,region" => {}
            other => return Err(Error::Montage(format!("expected header, found {other:?}"))),
        }
        let mut electrodes = Vec::new();
        for (no, line) in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Montage(format!("line {}: {line:?}", no + 1));
            if f.len() != 4 {
                return Err(bad());
            }
            let region = match f[3] {
                "HA" => Region::Ha,
                "NHA" => Region::Nha,
                _ => return Err(bad()),
            };
            electrodes.push(Electrode {
                label: f[0].to_string(),
                x: f[1].parse().map_err(|_| bad())?,
                y: f[2].parse().map_err(|_| bad())?,
                region,
            });
        }
        Montage::new(electrodes, side)
    }
}

pub fn read_montage(path: &Path) -> Result<Montage> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Montage::parse_csv(&text)
}

pub fn write_montage(path: &Path, montage: &Montage) -> Result<()> {
    std::fs::write(path, montage.to_csv()).map_err(|e| Error::io(path, e))
}
