//! FastICA with eigen-whitening and symmetric decorrelation.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{linalg::general_mat_mul, s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;
const BLOCK: usize = 8192;
/// Smallest damped step of the stabilized iteration.
const MIN_STEP: f64 = 1.0 / 64.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    Tanh,
    Cube,
}

impl Nonlinearity {
    /// Applies g in place and returns the sum of g'.
    fn apply(self, y: &mut [f64]) -> f64 {
        let mut dsum = 0.0;
        match self {
            Nonlinearity::Tanh => {
                for v in y.iter_mut() {
                    let t = v.tanh();
                    dsum += 1.0 - t * t;
                    *v = t;
                }
            }
            Nonlinearity::Cube => {
                for v in y.iter_mut() {
                    let u = *v;
                    dsum += 3.0 * u * u;
                    *v = u * u * u;
                }
            }
        }
        dsum
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcaConfig {
    /// Defaults to the covariance rank (square ICA on full-rank input).
    pub n_components: Option<usize>,
    pub nonlinearity: Nonlinearity,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    /// Extra fits with seed + attempt after a non-convergence.
    pub retries: usize,
    /// Switch to a damped Newton step when the iteration oscillates.
    pub stabilize: bool,
}

impl Default for IcaConfig {
    fn default() -> Self {
        IcaConfig {
            n_components: None,
            nonlinearity: Nonlinearity::Tanh,
            max_iter: 500,
            tol: 1e-5,
            seed: 0,
            retries: 2,
            stabilize: true,
        }
    }
}

/// Result of whitening: `z = whitening · (x − means)` has identity covariance.
#[derive(Clone, Debug)]
pub struct Whitening {
    pub matrix: Array2<f64>,
    /// Pseudo-inverse of `matrix` (channels × components).
    pub dewhitening: Array2<f64>,
    pub means: Array1<f64>,
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    pub whitened: Array2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcaModel {
    pub channel_means: Array1<f64>,
    /// components × channels
    pub whitening: Array2<f64>,
    /// components × components, rows orthonormal
    pub unmixing: Array2<f64>,
    /// channels × components
    pub mixing: Array2<f64>,
    pub n_components: usize,
    pub seed: u64,
    pub iterations: usize,
}

fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Symmetric eigendecomposition sorted by descending eigenvalue.
fn eigh_desc(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let eig = SymmetricEigen::new(to_na(a));
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = Array2::from_shape_fn((n, n), |(r, c)| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

pub fn covariance_rank(eigenvalues: &[f64]) -> usize {
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    eigenvalues.iter().filter(|&&v| v > RANK_TOL * top).count()
}

/// Centers and whitens `data` (channels × samples). With `n_components`
/// unset, the covariance rank is used.
pub fn whiten(data: ArrayView2<'_, f64>, n_components: Option<usize>) -> Result<Whitening> {
    let (c, n) = data.dim();
    if n <= c {
        return Err(Error::Shape(format!("{n} samples for {c} channels")));
    }
    if let Some(index) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let means = data.mean_axis(Axis(1)).expect("n > 0");
    let mut centered = data.to_owned();
    for (mut row, m) in centered.outer_iter_mut().zip(means.iter()) {
        row.mapv_inplace(|v| v - m);
    }
    let cov = centered.dot(&centered.t()) / n as f64;
    let (vals, vecs) = eigh_desc(&cov);
    let rank = covariance_rank(&vals);
    let k = n_components.unwrap_or(rank);
    if k > rank || k == 0 {
        return Err(Error::RankDeficient { rank, requested: k });
    }
    let matrix = Array2::from_shape_fn((k, c), |(i, j)| vecs[[j, i]] / vals[i].sqrt());
    let dewhitening = Array2::from_shape_fn((c, k), |(j, i)| vecs[[j, i]] * vals[i].sqrt());
    let whitened = matrix.dot(&centered);
    Ok(Whitening {
        matrix,
        dewhitening,
        means,
        eigenvalues: vals,
        rank,
        whitened,
    })
}

/// W ← (W Wᵀ)^(-1/2) W
fn sym_decorrelate(w: &Array2<f64>) -> Array2<f64> {
    let (vals, vecs) = eigh_desc(&w.dot(&w.t()));
    let k = w.nrows();
    let mut scaled = vecs.clone();
    for j in 0..k {
        let s = 1.0 / vals[j].max(f64::MIN_POSITIVE).sqrt();
        scaled.column_mut(j).mapv_inplace(|v| v * s);
    }
    scaled.dot(&vecs.t()).dot(w)
}

/// One update on whitened data `z` (components × samples). With `mu == 1`
/// this is the plain fixed point `E[z g(wᵀz)] − E[g'(wᵀz)] w`; otherwise the
/// damped Newton step `w + mu (E[z g] − βw) / (β − E[g'])`, β = E[wᵀz g].
fn fixed_point_step(w: &Array2<f64>, z: &Array2<f64>, g: Nonlinearity, mu: f64) -> Array2<f64> {
    let (k, n) = z.dim();
    let mut acc = Array2::<f64>::zeros((k, k));
    let mut dsum = Array1::<f64>::zeros(k);
    let mut y = Array2::<f64>::zeros((k, BLOCK));
    let mut start = 0;
    while start < n {
        let end = (start + BLOCK).min(n);
        let zb = z.slice(s![.., start..end]);
        let mut yb = y.slice_mut(s![.., ..end - start]);
        general_mat_mul(1.0, w, &zb, 0.0, &mut yb);
        for (i, mut row) in yb.outer_iter_mut().enumerate() {
            dsum[i] += g.apply(row.as_slice_mut().expect("row-major block"));
        }
        general_mat_mul(1.0, &yb, &zb.t(), 1.0, &mut acc);
        start = end;
    }
    let inv_n = 1.0 / n as f64;
    let mut w_new = acc * inv_n;
    for i in 0..k {
        let d = dsum[i] * inv_n;
        if mu == 1.0 {
            for j in 0..k {
                w_new[[i, j]] -= d * w[[i, j]];
            }
        } else {
            let beta = w_new.row(i).dot(&w.row(i));
            let scale = mu / (beta - d);
            for j in 0..k {
                w_new[[i, j]] = w[[i, j]] + scale * (w_new[[i, j]] - beta * w[[i, j]]);
            }
        }
    }
    w_new
}

/// max over rows of |1 − |⟨a_i, b_i⟩||.
fn row_delta(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.outer_iter()
        .zip(b.outer_iter())
        .map(|(x, y)| (1.0 - x.dot(&y).abs()).abs())
        .fold(0.0, f64::max)
}

fn random_init(k: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Array2::from_shape_simple_fn((k, k), || rng.sample::<f64, _>(StandardNormal));
    sym_decorrelate(&w)
}

/// Symmetric FastICA on already-whitened data.
pub fn fastica_whitened(
    z: &Array2<f64>,
    g: Nonlinearity,
    max_iter: usize,
    tol: f64,
    seed: u64,
    stabilize: bool,
) -> Result<(Array2<f64>, usize)> {
    let k = z.nrows();
    let mut w = random_init(k, seed);
    let mut w_prev = w.clone();
    let mut delta = f64::INFINITY;
    let mut mu = 1.0;
    let stage = (max_iter / 10).max(10);
    for it in 1..=max_iter {
        let w_new = sym_decorrelate(&fixed_point_step(&w, z, g, mu));
        delta = row_delta(&w_new, &w);
        log::trace!("fastica iteration {it}: delta {delta:.3e} mu {mu}");
        if delta < tol {
            return Ok((w_new, it));
        }
        if stabilize {
            // A 2-cycle returns to the matrix of two steps ago; slower
            // wandering gets the step halved once per stage.
            let cycling = mu == 1.0 && it > 1 && row_delta(&w_new, &w_prev) < tol;
            if (cycling || it % stage == 0) && mu > MIN_STEP {
                mu *= 0.5;
                log::debug!("fastica not settling at iteration {it}; step {mu}");
            }
        }
        w_prev = std::mem::replace(&mut w, w_new);
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        delta,
    })
}

pub fn fit_fastica(data: ArrayView2<'_, f64>, cfg: &IcaConfig) -> Result<IcaModel> {
    let (c, n) = data.dim();
    if n < 10 * c {
        log::warn!("FastICA on {n} samples for {c} channels; at least {} recommended", 10 * c);
    }
    let wh = whiten(data, cfg.n_components)?;
    let k = wh.matrix.nrows();
    let mut last = None;
    for attempt in 0..=cfg.retries {
        let seed = cfg.seed.wrapping_add(attempt as u64);
        match fastica_whitened(&wh.whitened, cfg.nonlinearity, cfg.max_iter, cfg.tol, seed, cfg.stabilize) {
            Ok((w, iterations)) => {
                log::debug!("FastICA converged in {iterations} iterations (seed {seed})");
                return Ok(IcaModel {
                    channel_means: wh.means,
                    mixing: wh.dewhitening.dot(&w.t()),
                    whitening: wh.matrix,
                    unmixing: w,
                    n_components: k,
                    seed,
                    iterations,
                });
            }
            Err(e) => {
                log::warn!("FastICA attempt {attempt} with seed {seed}: {e}");
                last = Some(e);
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

impl IcaModel {
    pub fn n_channels(&self) -> usize {
        self.mixing.nrows()
    }

    /// Full unmixing from centered channels to components.
    pub fn unmixing_full(&self) -> Array2<f64> {
        self.unmixing.dot(&self.whitening)
    }

    pub fn transform(&self, data: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if data.nrows() != self.n_channels() {
            return Err(Error::Shape(format!(
                "model has {} channels, data {}",
                self.n_channels(),
                data.nrows()
            )));
        }
        let mut centered = data.to_owned();
        for (mut row, m) in centered.outer_iter_mut().zip(self.channel_means.iter()) {
            row.mapv_inplace(|v| v - m);
        }
        Ok(self.unmixing_full().dot(&centered))
    }

    pub fn inverse_transform(&self, components: ArrayView2<'_, f64>, rejected: &[usize]) -> Result<Array2<f64>> {
        let k = self.n_components;
        if components.nrows() != k {
            return Err(Error::Shape(format!(
                "model has {k} components, got {}",
                components.nrows()
            )));
        }
        if let Some(&index) = rejected.iter().find(|&&i| i >= k) {
            return Err(Error::ComponentOutOfRange { index, n: k });
        }
        let mut a = self.mixing.clone();
        for &j in rejected {
            a.column_mut(j).fill(0.0);
        }
        let mut out = a.dot(&components);
        for (mut row, m) in out.outer_iter_mut().zip(self.channel_means.iter()) {
            row.mapv_inplace(|v| v + m);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;

    fn laplace_pair(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_simple_fn((2, n), || {
            let u: f64 = rng.random::<f64>() - 0.5;
            -u.signum() * (1.0 - 2.0 * u.abs()).ln()
        })
    }

    fn cov(x: &Array2<f64>) -> Array2<f64> {
        let n = x.ncols() as f64;
        let m = x.mean_axis(Axis(1)).unwrap();
        let c = x - &m.insert_axis(Axis(1));
        c.dot(&c.t()) / n
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma).powi(2);
            sbb += (y - mb).powi(2);
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn whitening_gives_identity_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let src = Array2::from_shape_simple_fn((4, 5000), || rng.sample::<f64, _>(StandardNormal));
        let mix = Array2::from_shape_simple_fn((4, 4), || rng.random::<f64>() * 2.0 - 1.0);
        let x = mix.dot(&src);
        let wh = whiten(x.view(), None).unwrap();
        let c = cov(&wh.whitened);
        for ((i, j), v) in c.indexed_iter() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-6);
        }
        assert!(wh.eigenvalues.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn white_input_whitening_is_rotation() {
        // Exactly white by construction: ±1 patterns balanced over 4 states.
        let mut x = Array2::<f64>::zeros((2, 4000));
        for t in 0..4000 {
            x[[0, t]] = if t % 2 == 0 { 1.0 } else { -1.0 };
            x[[1, t]] = if (t / 2) % 2 == 0 { 1.0 } else { -1.0 };
        }
        let wh = whiten(x.view(), None).unwrap();
        let g = wh.matrix.dot(&wh.matrix.t());
        for ((i, j), v) in g.indexed_iter() {
            assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-6);
        }
    }

    #[test]
    fn linear_dependence_reports_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut x = Array2::from_shape_simple_fn((3, 2000), || rng.sample::<f64, _>(StandardNormal));
        let sum = &x.row(0) + &x.row(1);
        x.row_mut(2).assign(&sum);
        assert!(matches!(
            whiten(x.view(), Some(3)),
            Err(Error::RankDeficient { rank: 2, requested: 3 })
        ));
        assert_eq!(whiten(x.view(), None).unwrap().matrix.nrows(), 2);
    }

    #[test]
    fn recovers_sine_sawtooth_uniform() {
        let n = 20000;
        let fs = 2000.0;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut src = Array2::<f64>::zeros((3, n));
        for t in 0..n {
            let tt = t as f64 / fs;
            src[[0, t]] = (2.0 * std::f64::consts::PI * 7.0 * tt).sin();
            src[[1, t]] = 2.0 * ((13.0 * tt) % 1.0) - 1.0;
            src[[2, t]] = rng.random::<f64>() * 2.0 - 1.0;
        }
        let mix = Array2::from_shape_simple_fn((3, 3), || rng.random::<f64>() * 2.0 - 1.0);
        let x = mix.dot(&src);
        let model = fit_fastica(x.view(), &IcaConfig::default()).unwrap();
        let s = model.transform(x.view()).unwrap();
        for i in 0..3 {
            let best = (0..3)
                .map(|j| corr(src.row(i).as_slice().unwrap(), s.row(j).as_slice().unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(best > 0.95, "source {i}: {best}");
        }
    }

    #[test]
    fn independent_laplacians_identity_mixing() {
        let x = laplace_pair(20000, 3);
        let model = fit_fastica(x.view(), &IcaConfig::default()).unwrap();
        // Each mixing column dominated by a single channel.
        for j in 0..2 {
            let col = model.mixing.column(j);
            let (big, small) = if col[0].abs() > col[1].abs() { (col[0], col[1]) } else { (col[1], col[0]) };
            assert!(small.abs() < 0.05 * big.abs(), "{col:?}");
        }
        let s = model.transform(x.view()).unwrap();
        let c = corr(s.row(0).as_slice().unwrap(), s.row(1).as_slice().unwrap());
        assert!(c.abs() < 0.05);
    }

    #[test]
    fn gaussian_sources_do_not_claim_recovery() {
        // Gaussian sources are unidentifiable: either the fit fails, or it
        // returns some rotation. Only the structural invariants are checked.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Array2::from_shape_simple_fn((2, 5000), || rng.sample::<f64, _>(StandardNormal));
        let cfg = IcaConfig { max_iter: 50, retries: 0, ..IcaConfig::default() };
        match fit_fastica(x.view(), &cfg) {
            Err(Error::NotConverged { iterations, .. }) => assert_eq!(iterations, 50),
            Err(e) => panic!("unexpected error {e}"),
            Ok(m) => {
                let g = m.unmixing.dot(&m.unmixing.t());
                assert!((g[[0, 1]]).abs() < 1e-8);
            }
        }
    }

    fn fitted() -> (Array2<f64>, IcaModel) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src = laplace_pair(10000, 6);
        let mix = Array::from_shape_simple_fn((2, 2), || rng.random::<f64>() + 0.2);
        let mut x = mix.dot(&src);
        x.row_mut(0).mapv_inplace(|v| v + 3.0);
        let model = fit_fastica(x.view(), &IcaConfig::default()).unwrap();
        (x, model)
    }

    #[test]
    fn unmixing_rows_orthonormal_and_unit_variance() {
        let (x, model) = fitted();
        let g = model.unmixing.dot(&model.unmixing.t());
        for ((i, j), v) in g.indexed_iter() {
            assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
        }
        let c = cov(&model.transform(x.view()).unwrap());
        for ((i, j), v) in c.indexed_iter() {
            assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-3);
        }
    }

    #[test]
    fn round_trip_and_rejection() {
        let (x, model) = fitted();
        let s = model.transform(x.view()).unwrap();
        let back = model.inverse_transform(s.view(), &[]).unwrap();
        let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = (&back - &x).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err <= 1e-6 * scale);

        let none = model.inverse_transform(s.view(), &[0, 1]).unwrap();
        for (row, m) in none.outer_iter().zip(model.channel_means.iter()) {
            assert!(row.iter().all(|v| (v - m).abs() < 1e-9));
        }

        // Total variance drops by exactly the rejected column's energy.
        let total = |y: &Array2<f64>| cov(y).diag().sum();
        let one = model.inverse_transform(s.view(), &[1]).unwrap();
        let explained = model.mixing.column(1).iter().map(|v| v * v).sum::<f64>();
        assert!((total(&back) - total(&one) - explained).abs() <= 1e-6 * total(&back));

        assert!(matches!(
            model.inverse_transform(s.view(), &[2]),
            Err(Error::ComponentOutOfRange { index: 2, n: 2 })
        ));
        assert!(model.transform(x.slice(s![..1, ..])).is_err());
    }

    #[test]
    fn transform_is_linear() {
        let (x, model) = fitted();
        let y = x.mapv(|v| v.sin());
        let lhs = model.transform((&x * 2.0 + &y).view()).unwrap();
        let zero = Array2::<f64>::zeros(x.dim());
        let s0 = model.transform(zero.view()).unwrap();
        let rhs = (&model.transform(x.view()).unwrap() - &s0) * 2.0 + &model.transform(y.view()).unwrap();
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn damped_step_keeps_the_separating_fixed_point() {
        // Unit-variance independent sources are already white; W = I separates.
        let mut z = laplace_pair(50_000, 3);
        for mut row in z.outer_iter_mut() {
            let m = row.mean().unwrap();
            let sd = row.mapv(|v| (v - m).powi(2)).mean().unwrap().sqrt();
            row.mapv_inplace(|v| (v - m) / sd);
        }
        let eye = Array2::<f64>::eye(2);
        for mu in [1.0, 0.5, 0.125] {
            let w = sym_decorrelate(&fixed_point_step(&eye, &z, Nonlinearity::Tanh, mu));
            assert!(row_delta(&w, &eye) < 1e-3, "mu {mu}: {w}");
        }
    }

    #[test]
    fn stabilized_and_plain_iterations_agree_on_easy_data() {
        let x = laplace_pair(40_000, 4);
        let a = fit_fastica(x.view(), &IcaConfig::default()).unwrap();
        let b = fit_fastica(x.view(), &IcaConfig { stabilize: false, ..IcaConfig::default() }).unwrap();
        assert!(row_delta(&a.unmixing, &b.unmixing) < 1e-6);
    }

    #[test]
    fn seeded_determinism() {
        let x = laplace_pair(5000, 8);
        let a = fit_fastica(x.view(), &IcaConfig::default()).unwrap();
        let b = fit_fastica(x.view(), &IcaConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
