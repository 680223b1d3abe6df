//! Katz-style fractal dimension of an epoch's data-vector path.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdParams {
    pub sample_rate: f64,
    /// Time quantization; one data vector spans this many milliseconds.
    pub time_unit_ms: f64,
    /// Amplitude quantization, µV.
    pub amp_unit_uv: f64,
}

impl FdParams {
    pub fn new(sample_rate: f64) -> Self {
        FdParams {
            sample_rate,
            time_unit_ms: 1.0,
            amp_unit_uv: 1.0,
        }
    }

    /// Samples per data vector.
    pub fn vector_len(&self) -> usize {
        ((self.time_unit_ms * self.sample_rate / 1000.0).round() as usize).max(1)
    }
}

/// `FD = ln(N−1) / (ln(N−1) + ln(d/L))` with N the number of time points,
/// L the summed Euclidean step between consecutive non-overlapping data
/// vectors and d the largest distance from the first vector.
pub fn fractal_dimension(epoch: &[f64], params: &FdParams) -> Result<f64> {
    let n = epoch.len();
    if n < 4 {
        return Err(Error::DegenerateEpoch("fewer than 4 samples"));
    }
    let m = params.vector_len();
    if n / m < 2 {
        return Err(Error::DegenerateEpoch("fewer than 2 data vectors"));
    }
    let scale = 1.0 / params.amp_unit_uv;
    let vectors: Vec<&[f64]> = epoch.chunks_exact(m).collect();
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| ((x - y) * scale).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut len = 0.0;
    let mut diam = 0.0f64;
    for k in 1..vectors.len() {
        len += dist(vectors[k], vectors[k - 1]);
        diam = diam.max(dist(vectors[k], vectors[0]));
    }
    if len == 0.0 || diam == 0.0 {
        return Err(Error::DegenerateEpoch("constant signal"));
    }
    let ln_n = ((n - 1) as f64).ln();
    Ok(ln_n / (ln_n + (diam / len).ln()))
}

/// FD(move) − FD(idle).
pub fn relative_fd(idle: &[f64], movement: &[f64], params: &FdParams) -> Result<f64> {
    Ok(fractal_dimension(movement, params)? - fractal_dimension(idle, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn p() -> FdParams {
        FdParams::new(2000.0)
    }

    #[test]
    fn ramp_is_one() {
        let ramp: Vec<f64> = (0..4000).map(|i| 0.37 * i as f64 - 5.0).collect();
        assert!((fractal_dimension(&ramp, &p()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_is_degenerate() {
        assert!(matches!(fractal_dimension(&[2.0; 100], &p()), Err(Error::DegenerateEpoch(_))));
    }

    #[test]
    fn noise_more_complex_than_sine() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let noise: Vec<f64> = (0..4000).map(|_| 10.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let amp = 10.0 * 2f64.sqrt();
        let sine: Vec<f64> = (0..4000)
            .map(|i| amp * (2.0 * std::f64::consts::PI * 10.0 * i as f64 / 2000.0).sin())
            .collect();
        assert!(fractal_dimension(&noise, &p()).unwrap() > fractal_dimension(&sine, &p()).unwrap());
    }

    #[test]
    fn sign_flip_invariant_and_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..2000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<f64> = (0..4000).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(fractal_dimension(&x, &p()).unwrap(), fractal_dimension(&neg, &p()).unwrap());
        let ab = relative_fd(&x, &y, &p()).unwrap();
        let ba = relative_fd(&y, &x, &p()).unwrap();
        assert_eq!(ab, -ba);
    }

    #[test]
    fn amplitude_unit_cancels() {
        let x: Vec<f64> = (0..400).map(|i| ((i * 37) % 17) as f64).collect();
        let a = fractal_dimension(&x, &p()).unwrap();
        let b = fractal_dimension(&x, &FdParams { amp_unit_uv: 0.1, ..p() }).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
