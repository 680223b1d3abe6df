use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Bandpass,
    Lowpass,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_hz: Option<f64>,
    pub high_hz: f64,
}

impl FilterSpec {
    pub fn bandpass(order: usize, low_hz: f64, high_hz: f64) -> Self {
        FilterSpec {
            kind: FilterKind::Bandpass,
            order,
            low_hz: Some(low_hz),
            high_hz,
        }
    }

    pub fn lowpass(order: usize, high_hz: f64) -> Self {
        FilterSpec {
            kind: FilterKind::Lowpass,
            order,
            low_hz: None,
            high_hz,
        }
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        let nyq = sample_rate / 2.0;
        if self.order == 0 {
            return Err(Error::InvalidSpec("order must be positive".into()));
        }
        if !(self.high_hz > 0.0 && self.high_hz < nyq) {
            return Err(Error::InvalidSpec(format!(
                "cutoff {} Hz outside (0, {nyq}) Hz",
                self.high_hz
            )));
        }
        match (self.kind, self.low_hz) {
            (FilterKind::Lowpass, None) => Ok(()),
            (FilterKind::Lowpass, Some(_)) => {
                Err(Error::InvalidSpec("lowpass takes no low cutoff".into()))
            }
            (FilterKind::Bandpass, Some(lo)) if lo > 0.0 && lo < self.high_hz => Ok(()),
            (FilterKind::Bandpass, lo) => Err(Error::InvalidSpec(format!(
                "bandpass needs 0 < low < high, got low {lo:?}, high {}",
                self.high_hz
            ))),
        }
    }
}

/// One biquad, `b0 + b1 z^-1 + b2 z^-2` over `1 + a1 z^-1 + a2 z^-2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

/// Cascade of second-order sections.
#[derive(Clone, Debug, PartialEq)]
pub struct Sos {
    pub sections: Vec<Section>,
}

/// Butterworth design: analog prototype, frequency transform, bilinear
/// transform with prewarping, then pairing into biquads.
pub fn design_butterworth(spec: &FilterSpec, sample_rate: f64) -> Result<Sos> {
    spec.validate(sample_rate)?;
    let n = spec.order;
    let fs2 = 2.0 * sample_rate;
    let warp = |f: f64| fs2 * (PI * f / sample_rate).tan();

    let proto: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect();

    // Analog zeros, poles and gain after the lowpass/bandpass transform.
    let (zeros, poles, gain) = match spec.kind {
        FilterKind::Lowpass => {
            let wc = warp(spec.high_hz);
            let poles: Vec<_> = proto.iter().map(|p| p * wc).collect();
            (Vec::new(), poles, wc.powi(n as i32))
        }
        FilterKind::Bandpass => {
            let w1 = warp(spec.low_hz.unwrap_or_default());
            let w2 = warp(spec.high_hz);
            let bw = w2 - w1;
            let w0sq = w1 * w2;
            let mut poles = Vec::with_capacity(2 * n);
            for p in &proto {
                let half = p * (bw / 2.0);
                let disc = (half * half - w0sq).sqrt();
                poles.push(half + disc);
                poles.push(half - disc);
            }
            (vec![Complex64::new(0.0, 0.0); n], poles, bw.powi(n as i32))
        }
    };

    let bilinear = |s: &Complex64| (fs2 + s) / (fs2 - s);
    let mut zd: Vec<Complex64> = zeros.iter().map(bilinear).collect();
    let pd: Vec<Complex64> = poles.iter().map(bilinear).collect();
    // Zeros at infinity map to Nyquist.
    zd.extend(std::iter::repeat(Complex64::new(-1.0, 0.0)).take(poles.len() - zeros.len()));
    let num: Complex64 = zeros.iter().map(|z| fs2 - z).product();
    let den: Complex64 = poles.iter().map(|p| fs2 - p).product();
    let kd = gain * (num / den).re;

    Ok(zpk_to_sos(zd, pd, kd))
}

fn zpk_to_sos(zeros: Vec<Complex64>, poles: Vec<Complex64>, gain: f64) -> Sos {
    const IM_TOL: f64 = 1e-10;

    // Conjugate pairs first (upper half-plane representative), then reals.
    let mut pole_groups: Vec<[Option<Complex64>; 2]> = Vec::new();
    let mut reals = Vec::new();
    for p in &poles {
        if p.im > IM_TOL {
            pole_groups.push([Some(*p), Some(p.conj())]);
        } else if p.im.abs() <= IM_TOL {
            reals.push(p.re);
        }
    }
    reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for pair in reals.chunks(2) {
        let second = pair.get(1).map(|&r| Complex64::new(r, 0.0));
        pole_groups.push([Some(Complex64::new(pair[0], 0.0)), second]);
    }

    // All zeros here are real (±1); alternate signs so each bandpass
    // section gets one zero at DC and one at Nyquist.
    let mut pos: Vec<f64> = zeros.iter().filter(|z| z.re > 0.0).map(|z| z.re).collect();
    let mut neg: Vec<f64> = zeros.iter().filter(|z| z.re <= 0.0).map(|z| z.re).collect();
    let mut zero_list = Vec::with_capacity(zeros.len());
    while !pos.is_empty() || !neg.is_empty() {
        if let Some(z) = pos.pop() {
            zero_list.push(z);
        }
        if let Some(z) = neg.pop() {
            zero_list.push(z);
        }
    }

    let mut zi = zero_list.into_iter();
    let mut sections = Vec::with_capacity(pole_groups.len());
    for (k, group) in pole_groups.iter().enumerate() {
        let a = match group {
            [Some(p), Some(q)] => [1.0, -(p + q).re, (p * q).re],
            [Some(p), None] => [1.0, -p.re, 0.0],
            _ => unreachable!(),
        };
        let order = if group[1].is_some() { 2 } else { 1 };
        let mut b = [1.0, 0.0, 0.0];
        for _ in 0..order {
            if let Some(z) = zi.next() {
                // multiply polynomial b by (1 - z x)
                b = [b[0], b[1] - z * b[0], b[2] - z * b[1]];
            }
        }
        if k == 0 {
            b.iter_mut().for_each(|v| *v *= gain);
        }
        sections.push(Section { b, a });
    }
    Sos { sections }
}

impl Sos {
    /// Complex response at `freq_hz`.
    pub fn response(&self, freq_hz: f64, sample_rate: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / sample_rate);
        let z2 = z1 * z1;
        self.sections
            .iter()
            .map(|s| (s.b[0] + z1 * s.b[1] + z2 * s.b[2]) / (s.a[0] + z1 * s.a[1] + z2 * s.a[2]))
            .product()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        let mut out = Vec::new();
        for s in &self.sections {
            let (a1, a2) = (s.a[1], s.a[2]);
            if a2 == 0.0 {
                out.push(Complex64::new(-a1, 0.0));
                continue;
            }
            let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
            out.push((-a1 + disc) / 2.0);
            out.push((-a1 - disc) / 2.0);
        }
        out
    }

    /// Causal filtering (transposed direct form II per section), in place.
    pub fn apply_in_place(&self, x: &mut [f64]) {
        for s in &self.sections {
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in x.iter_mut() {
                let xi = *v;
                let y = b0 * xi + z1;
                z1 = b1 * xi - a1 * y + z2;
                z2 = b2 * xi - a2 * y;
                *v = y;
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.apply_in_place(&mut y);
        y
    }

    /// Forward then backward pass (zero phase, squared magnitude).
    pub fn apply_zero_phase_in_place(&self, x: &mut [f64]) {
        self.apply_in_place(x);
        x.reverse();
        self.apply_in_place(x);
        x.reverse();
    }
}

pub fn filter_forward(ts: &TimeSeries, sos: &Sos) -> Result<TimeSeries> {
    if let Some(index) = ts.samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(TimeSeries {
        samples: sos.apply(&ts.samples),
        sample_rate: ts.sample_rate,
    })
}

/// Instantaneous band power, smoothed: `lowpass(bandpass(x)^2)`.
pub fn envelope_power(ts: &TimeSeries, band: &FilterSpec, smooth: &FilterSpec) -> Result<TimeSeries> {
    if band.kind != FilterKind::Bandpass {
        return Err(Error::InvalidSpec("envelope band must be a bandpass".into()));
    }
    if smooth.kind != FilterKind::Lowpass {
        return Err(Error::InvalidSpec("envelope smoother must be a lowpass".into()));
    }
    let bp = design_butterworth(band, ts.sample_rate)?;
    let lp = design_butterworth(smooth, ts.sample_rate)?;
    let mut y = filter_forward(ts, &bp)?.samples;
    y.iter_mut().for_each(|v| *v *= *v);
    lp.apply_in_place(&mut y);
    Ok(TimeSeries {
        samples: y,
        sample_rate: ts.sample_rate,
    })
}
