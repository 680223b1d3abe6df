//! Evaluation: z-scored band power, percent reduction, SNR, fractal
//! dimension versus force, and the rank-sum / Pearson statistics.

mod fd;
mod force;
mod stats;

pub use fd::{fractal_dimension, relative_fd, FdParams};
pub use force::{force_levels, ForceLevels};
pub use stats::{
    mean_sd, midranks, pearson_r, pearson_significance, ranksum_exact, ranksum_normal, t_statistic, t_two_sided_p,
    wilcoxon_ranksum, PMethod, PearsonResult, RankSum, TScale, EXACT_MAX,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{Montage, Region};
use crate::pipeline::TrialSet;
use crate::recording::ChannelKind;
use crate::signal::{band_mean, design_butterworth, envelope_power, stft_power, zscore_in_place, FilterSpec, TimeSeries};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low_hz: f64,
    pub high_hz: f64,
}

pub const MU: Band = Band { low_hz: 8.0, high_hz: 12.0 };
pub const HIGH_GAMMA: Band = Band { low_hz: 80.0, high_hz: 160.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StftParams {
    pub window_len: usize,
    pub hop: usize,
}

impl Default for StftParams {
    fn default() -> Self {
        // 256 ms Hann windows with 75% overlap at 2 kHz.
        StftParams { window_len: 512, hop: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeBandPower {
    pub label: String,
    /// Mean over trials of the per-trial mean z-scored band power.
    pub move_mean: f64,
    pub idle_mean: f64,
    /// Rank-sum P, move vs idle per-trial means.
    pub p: f64,
}

impl ElectrodeBandPower {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p < alpha
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandPowerSummary {
    pub band: Band,
    pub electrodes: Vec<ElectrodeBandPower>,
}

impl BandPowerSummary {
    pub fn get(&self, label: &str) -> Option<&ElectrodeBandPower> {
        self.electrodes.iter().find(|e| e.label == label)
    }
}

/// Per-trial (idle, move) means of a per-frame series, frames assigned to
/// the epoch containing their center sample.
fn epoch_means(frame_values: &[f64], centers: impl Iterator<Item = usize>, trials: &TrialSet) -> (Vec<f64>, Vec<f64>) {
    let n = trials.n_trials();
    let tl = trials.trial_len();
    let (mut idle_sum, mut idle_n) = (vec![0.0; n], vec![0usize; n]);
    let (mut mv_sum, mut mv_n) = (vec![0.0; n], vec![0usize; n]);
    for (v, c) in frame_values.iter().zip(centers) {
        let k = c / tl;
        if k >= n {
            break;
        }
        if c % tl < trials.idle_len {
            idle_sum[k] += v;
            idle_n[k] += 1;
        } else {
            mv_sum[k] += v;
            mv_n[k] += 1;
        }
    }
    let mut idle = Vec::with_capacity(n);
    let mut mv = Vec::with_capacity(n);
    for k in 0..n {
        if idle_n[k] > 0 && mv_n[k] > 0 {
            idle.push(idle_sum[k] / idle_n[k] as f64);
            mv.push(mv_sum[k] / mv_n[k] as f64);
        }
    }
    (idle, mv)
}

/// STFT of each scalp channel of the concatenated trials, z-scored per
/// frequency, averaged within each band, then summarized per epoch.
pub fn band_power_z(trials: &TrialSet, bands: &[Band], params: &StftParams) -> Result<Vec<BandPowerSummary>> {
    if trials.n_trials() == 0 {
        return Err(Error::Empty("no trials"));
    }
    let mut out: Vec<BandPowerSummary> = bands
        .iter()
        .map(|&band| BandPowerSummary {
            band,
            electrodes: Vec::new(),
        })
        .collect();
    for c in trials.indices_of(ChannelKind::Scalp) {
        let ts = TimeSeries::new(trials.data.row(c).iter().map(|&v| v as f64).collect(), trials.sample_rate)?;
        let mut spec = stft_power(&ts, params.window_len, params.hop)?;
        zscore_in_place(&mut spec, c)?;
        for (band, summary) in bands.iter().zip(out.iter_mut()) {
            let series = band_mean(&spec, band.low_hz, band.high_hz);
            let centers = (0..spec.n_frames()).map(|t| spec.center_sample(t));
            let (idle, mv) = epoch_means(&series, centers, trials);
            if idle.is_empty() {
                return Err(Error::Degenerate("no trial has frames in both epochs".into()));
            }
            let p = wilcoxon_ranksum(&mv, &idle)?.p;
            summary.electrodes.push(ElectrodeBandPower {
                label: trials.channels[c].label.clone(),
                move_mean: mv.iter().sum::<f64>() / mv.len() as f64,
                idle_mean: idle.iter().sum::<f64>() / idle.len() as f64,
                p,
            });
        }
    }
    Ok(out)
}

/// `100 · (Z_before − Z_after) / Z_before`, Z the mean move-epoch z-scored
/// power over `electrodes`.
pub fn percent_reduction(before: &BandPowerSummary, after: &BandPowerSummary, electrodes: &[&str]) -> Result<f64> {
    let mean = |s: &BandPowerSummary| -> Result<f64> {
        let mut acc = 0.0;
        for l in electrodes {
            acc += s.get(l).ok_or_else(|| Error::UnknownElectrode(l.to_string()))?.move_mean;
        }
        Ok(acc / electrodes.len() as f64)
    };
    if electrodes.is_empty() {
        return Err(Error::Empty("electrode set"));
    }
    let (zb, za) = (mean(before)?, mean(after)?);
    percent_reduction_values(zb, za)
}

pub fn percent_reduction_values(before: f64, after: f64) -> Result<f64> {
    if !(before > 0.0) {
        return Err(Error::Degenerate(format!("baseline power {before} is not positive")));
    }
    Ok(100.0 * (before - after) / before)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnrParams {
    pub band_order: usize,
    pub smooth_hz: f64,
    pub smooth_order: usize,
    /// Leading samples of each trial's envelope left out of the means.
    pub transient: usize,
}

impl Default for SnrParams {
    fn default() -> Self {
        SnrParams {
            band_order: 4,
            smooth_hz: 4.0,
            smooth_order: 4,
            transient: 512,
        }
    }
}

/// Per-trial `10·log10(mean move envelope / mean idle envelope)`. Each
/// trial is filtered on its own so trial seams never leak into a mean.
pub fn snr_db(trials: &TrialSet, channel: usize, band: Band, params: &SnrParams) -> Result<Vec<f64>> {
    let bp = FilterSpec::bandpass(params.band_order, band.low_hz, band.high_hz);
    let lp = FilterSpec::lowpass(params.smooth_order, params.smooth_hz);
    let skip = params.transient.min(trials.idle_len.saturating_sub(1));
    (0..trials.n_trials())
        .map(|k| {
            let (a, b) = trials.bounds(k);
            let seg: Vec<f64> = trials.data.row(channel).slice(ndarray::s![a..b]).iter().map(|&v| v as f64).collect();
            let env = envelope_power(&TimeSeries::new(seg, trials.sample_rate)?, &bp, &lp)?.samples;
            let idle = &env[skip..trials.idle_len];
            let mv = &env[trials.idle_len..];
            let mi = idle.iter().sum::<f64>() / idle.len() as f64;
            let mm = mv.iter().sum::<f64>() / mv.len() as f64;
            if !(mi > 0.0 && mm > 0.0) {
                return Err(Error::Degenerate(format!("trial {k}: non-positive mean envelope")));
            }
            Ok(10.0 * (mm / mi).log10())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeCorrelation {
    pub label: String,
    pub r: f64,
    pub t: f64,
    pub p: f64,
    pub significant_r: f64,
    /// Mean relative FD per populated force level.
    pub level_means: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdCorrelation {
    pub level_centers: Vec<f64>,
    pub electrodes: Vec<ElectrodeCorrelation>,
}

impl FdCorrelation {
    pub fn get(&self, label: &str) -> Option<&ElectrodeCorrelation> {
        self.electrodes.iter().find(|e| e.label == label)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FdCorrParams {
    /// Band the concatenated trials are filtered to before FD (order
    /// `band_order` Butterworth); None keeps the broadband signal.
    pub band: Option<Band>,
    pub band_order: usize,
    pub n_levels: usize,
    pub time_unit_ms: f64,
    pub amp_unit_uv: f64,
    pub t_scale: TScale,
    pub alpha: f64,
}

impl Default for FdCorrParams {
    fn default() -> Self {
        FdCorrParams {
            band: Some(HIGH_GAMMA),
            band_order: 4,
            n_levels: 10,
            time_unit_ms: 1.0,
            amp_unit_uv: 1.0,
            t_scale: TScale::NMinus1,
            alpha: 0.05,
        }
    }
}

/// Relative FD per trial of the band-filtered concatenated trials,
/// averaged within force levels, correlated with the level centers for
/// every scalp electrode.
pub fn fd_force_correlation(trials: &TrialSet, params: &FdCorrParams) -> Result<FdCorrelation> {
    let levels = force_levels(&trials.mean_force, params.n_levels)?;
    let fdp = FdParams {
        sample_rate: trials.sample_rate,
        time_unit_ms: params.time_unit_ms,
        amp_unit_uv: params.amp_unit_uv,
    };
    let sos = params
        .band
        .map(|b| design_butterworth(&FilterSpec::bandpass(params.band_order, b.low_hz, b.high_hz), trials.sample_rate))
        .transpose()?;
    let (tl, il) = (trials.trial_len(), trials.idle_len);
    let mut electrodes = Vec::new();
    let mut centers = Vec::new();
    for c in trials.indices_of(ChannelKind::Scalp) {
        let mut x: Vec<f64> = trials.data.row(c).iter().map(|&v| v as f64).collect();
        if let Some(sos) = &sos {
            sos.apply_in_place(&mut x);
        }
        let rel = (0..trials.n_trials())
            .map(|k| relative_fd(&x[k * tl..k * tl + il], &x[k * tl + il..(k + 1) * tl], &fdp))
            .collect::<Result<Vec<f64>>>()?;
        let (cs, means) = levels.level_means(&rel);
        let res = pearson_significance(&cs, &means, params.t_scale, params.alpha)?;
        centers = cs;
        electrodes.push(ElectrodeCorrelation {
            label: trials.channels[c].label.clone(),
            r: res.r,
            t: res.t,
            p: res.p,
            significant_r: res.significant_r,
            level_means: means,
        });
    }
    Ok(FdCorrelation {
        level_centers: centers,
        electrodes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub ha_mean: f64,
    pub nha_mean: f64,
    /// Rank-sum P of HA vs NHA electrode values.
    pub p_ha_vs_nha: f64,
    pub sce_ha: usize,
    pub sce_nha: usize,
    /// Percent of significant-correlation electrodes inside the HA; absent
    /// when there are none.
    pub sce_in_ha_percent: Option<f64>,
    /// Mean |significant R| over the set's significant electrodes (0 when
    /// none is significant).
    pub hand_motor_mean_sig_abs_r: f64,
    pub contralesional_mean_sig_abs_r: f64,
    /// Same, averaging zeros for non-significant electrodes.
    pub hand_motor_mean_abs_r_zero_filled: f64,
    pub contralesional_mean_abs_r_zero_filled: f64,
}

fn set_means(labels: &[String], corr: &FdCorrelation) -> Result<(f64, f64)> {
    let mut vals = Vec::new();
    for l in labels {
        let e = corr.get(l).ok_or_else(|| Error::UnknownElectrode(l.clone()))?;
        vals.push(e.significant_r.abs());
    }
    let sig: Vec<f64> = vals.iter().copied().filter(|&v| v > 0.0).collect();
    let over_sig = if sig.is_empty() { 0.0 } else { sig.iter().sum::<f64>() / sig.len() as f64 };
    Ok((over_sig, vals.iter().sum::<f64>() / vals.len().max(1) as f64))
}

/// HA/NHA aggregates of per-electrode high-γ values and of the FD–force
/// correlation map. Every electrode must be in the montage.
pub fn region_summary(values: &BandPowerSummary, corr: &FdCorrelation, montage: &Montage) -> Result<RegionSummary> {
    let (mut ha, mut nha) = (Vec::new(), Vec::new());
    for e in &values.electrodes {
        match montage.get(&e.label)?.region {
            Region::Ha => ha.push(e.move_mean),
            Region::Nha => nha.push(e.move_mean),
        }
    }
    let (mut sce_ha, mut sce_nha) = (0, 0);
    for e in &corr.electrodes {
        if e.significant_r != 0.0 {
            match montage.get(&e.label)?.region {
                Region::Ha => sce_ha += 1,
                Region::Nha => sce_nha += 1,
            }
        }
    }
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let p = if ha.is_empty() || nha.is_empty() { f64::NAN } else { wilcoxon_ranksum(&ha, &nha)?.p };
    let total = sce_ha + sce_nha;
    let hm: Vec<String> = montage.hand_motor_labels().iter().map(|s| s.to_string()).collect();
    let (hm_sig, hm_zero) = set_means(&hm, corr)?;
    let (cl_sig, cl_zero) = set_means(&montage.contralesional_labels(), corr)?;
    Ok(RegionSummary {
        ha_mean: mean(&ha),
        nha_mean: mean(&nha),
        p_ha_vs_nha: p,
        sce_ha,
        sce_nha,
        sce_in_ha_percent: (total > 0).then(|| 100.0 * sce_ha as f64 / total as f64),
        hand_motor_mean_sig_abs_r: hm_sig,
        contralesional_mean_sig_abs_r: cl_sig,
        hand_motor_mean_abs_r_zero_filled: hm_zero,
        contralesional_mean_abs_r_zero_filled: cl_zero,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrRow {
    pub label: String,
    pub band: Band,
    pub trial: usize,
    pub snr_db: f64,
}

/// Everything computed for one condition of one recording.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub condition: String,
    pub alpha: f64,
    /// µ then high-γ.
    pub band_power: Vec<BandPowerSummary>,
    pub snr: Vec<SnrRow>,
    pub fd: FdCorrelation,
    /// High-γ move power and FD correlations by region.
    pub region: RegionSummary,
    /// Virtual channels used by the cleaning step (empty unless ERASE).
    pub virtual_labels: Vec<String>,
}

impl MetricsReport {
    pub fn band(&self, band: Band) -> Option<&BandPowerSummary> {
        self.band_power.iter().find(|b| b.band == band)
    }
}

pub fn compute_report(
    condition: &str,
    trials: &TrialSet,
    montage: &Montage,
    stft: &StftParams,
    snr: &SnrParams,
    fd: &FdCorrParams,
) -> Result<MetricsReport> {
    let band_power = band_power_z(trials, &[MU, HIGH_GAMMA], stft)?;
    let mut rows = Vec::new();
    for c in trials.indices_of(ChannelKind::Scalp) {
        for band in [MU, HIGH_GAMMA] {
            for (trial, v) in snr_db(trials, c, band, snr)?.into_iter().enumerate() {
                rows.push(SnrRow {
                    label: trials.channels[c].label.clone(),
                    band,
                    trial,
                    snr_db: v,
                });
            }
        }
    }
    let corr = fd_force_correlation(trials, fd)?;
    let region = region_summary(&band_power[1], &corr, montage)?;
    Ok(MetricsReport {
        condition: condition.to_string(),
        alpha: fd.alpha,
        band_power,
        snr: rows,
        fd: corr,
        region,
        virtual_labels: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recording::Channel;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    const FS: f64 = 2000.0;

    /// Trials of white noise; `shape(channel, in_move, t)` scales samples.
    fn trials_from(n_ch: usize, n_trials: usize, seed: u64, shape: impl Fn(usize, bool, usize) -> f64) -> TrialSet {
        let (idle, mv) = (2000, 4000);
        let tl = idle + mv;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Array2::<f32>::zeros((n_ch, n_trials * tl));
        for c in 0..n_ch {
            for k in 0..n_trials {
                for i in 0..tl {
                    let g: f64 = rng.sample(StandardNormal);
                    data[[c, k * tl + i]] = (g * shape(c, i >= idle, i)) as f32;
                }
            }
        }
        TrialSet {
            channels: (0..n_ch).map(|c| Channel::new(format!("E{c}"), ChannelKind::Scalp)).collect(),
            sample_rate: FS,
            idle_len: idle,
            move_len: mv,
            data,
            mean_force: (0..n_trials).map(|k| k as f64 / n_trials as f64).collect(),
            onsets: (0..n_trials).map(|k| 10_000 + k * 14_000).collect(),
            skipped: 0,
        }
    }

    fn sine(f: f64, i: usize) -> f64 {
        (2.0 * std::f64::consts::PI * f * i as f64 / FS).sin()
    }

    #[test]
    fn gamma_burst_and_mu_suppression_are_significant() {
        // Channel 0: extra 120 Hz power in move; channel 1: 10 Hz rhythm
        // that drops in move; channel 2: nothing.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let phases: Vec<f64> = (0..40).map(|_| rng.random::<f64>() * 6.0).collect();
        let mut t = trials_from(3, 40, 1, |_, _, _| 1.0);
        for k in 0..40 {
            let (a, _) = t.bounds(k);
            for i in 0..6000 {
                let mv = i >= 2000;
                let hg = if mv { 3.0 * sine(120.0, i + (phases[k] * 100.0) as usize) } else { 0.0 };
                let mu = if mv { 0.5 } else { 4.0 } * sine(10.0, i + (phases[k] * 100.0) as usize);
                t.data[[0, a + i]] += hg as f32;
                t.data[[1, a + i]] += mu as f32;
            }
        }
        let out = band_power_z(&t, &[MU, HIGH_GAMMA], &StftParams::default()).unwrap();
        let (mu, hg) = (&out[0], &out[1]);
        assert!(hg.electrodes[0].p < 0.05 && hg.electrodes[0].move_mean > hg.electrodes[0].idle_mean);
        assert!(mu.electrodes[1].p < 0.05 && mu.electrodes[1].move_mean < mu.electrodes[1].idle_mean);
    }

    #[test]
    fn percent_reduction_examples() {
        assert!((percent_reduction_values(0.15, 0.04).unwrap() - 73.333_333).abs() < 1e-4);
        assert_eq!(percent_reduction_values(0.3, 0.3).unwrap(), 0.0);
        assert!(percent_reduction_values(0.0, 0.1).is_err());
        assert!(percent_reduction_values(-0.1, 0.1).is_err());
    }

    #[test]
    fn snr_of_equal_and_scaled_epochs() {
        let same = trials_from(1, 100, 2, |_, _, _| 1.0);
        let s = snr_db(&same, 0, HIGH_GAMMA, &SnrParams::default()).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!(mean.abs() < 0.5, "{mean}");

        let loud = trials_from(1, 100, 3, |_, mv, _| if mv { 10f64.sqrt() } else { 1.0 });
        let s = snr_db(&loud, 0, HIGH_GAMMA, &SnrParams::default()).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        assert!((mean - 10.0).abs() < 1.0, "{mean}");

        let mut scaled = loud.clone();
        scaled.data.mapv_inplace(|v| v * 7.0);
        let s2 = snr_db(&scaled, 0, HIGH_GAMMA, &SnrParams::default()).unwrap();
        for (a, b) in s.iter().zip(&s2) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn mu_suppression_gives_negative_snr() {
        let t = trials_from(1, 30, 4, |_, mv, i| 0.2 + if mv { 0.5 } else { 3.0 } * sine(10.0, i).abs());
        let mut t = t;
        let (idle, tl) = (t.idle_len, t.trial_len());
        for k in 0..30 {
            for i in 0..tl {
                let a = if i >= idle { 0.5 } else { 4.0 };
                t.data[[0, k * tl + i]] += (a * sine(10.0, i)) as f32;
            }
        }
        let s = snr_db(&t, 0, MU, &SnrParams::default()).unwrap();
        assert!(s.iter().sum::<f64>() / 30.0 < -3.0);
    }

    #[test]
    fn relative_fd_tracks_added_complexity() {
        // Move epochs get broadband noise on top of a slow sine.
        let mut t = trials_from(1, 20, 5, |_, mv, _| if mv { 5.0 } else { 0.2 });
        let tl = t.trial_len();
        for k in 0..20 {
            for i in 0..tl {
                t.data[[0, k * tl + i]] += (20.0 * sine(3.0, i)) as f32;
            }
        }
        let p = FdParams::new(FS);
        for k in 0..20 {
            let idle: Vec<f64> = t.idle(0, k).iter().map(|&v| v as f64).collect();
            let mv: Vec<f64> = t.movement(0, k).iter().map(|&v| v as f64).collect();
            assert!(relative_fd(&idle, &mv, &p).unwrap() > 0.0);
        }
    }

    #[test]
    fn fd_correlation_sees_only_the_chosen_band() {
        // Force-scaled 120 Hz on channel 0 and 10 Hz on channel 1, over noise.
        let n = 40;
        let mut t = trials_from(2, n, 6, |_, _, _| 1.0);
        let (idle, tl) = (t.idle_len, t.trial_len());
        for k in 0..n {
            let f = t.mean_force[k];
            for i in idle..tl {
                t.data[[0, k * tl + i]] += (3.0 * f * sine(120.0, i)) as f32;
                t.data[[1, k * tl + i]] += (20.0 * f * sine(10.0, i)) as f32;
            }
        }
        let hg = fd_force_correlation(&t, &FdCorrParams::default()).unwrap();
        assert!(hg.electrodes[0].significant_r != 0.0, "{:?}", hg.electrodes[0]);
        assert_eq!(hg.electrodes[1].significant_r, 0.0, "{:?}", hg.electrodes[1]);
        let broad = fd_force_correlation(&t, &FdCorrParams { band: None, ..FdCorrParams::default() }).unwrap();
        assert!(broad.electrodes[1].significant_r != 0.0, "{:?}", broad.electrodes[1]);
        assert_eq!(hg.level_centers.len(), 10);
    }

    fn corr_with(labels: &[(&str, f64)]) -> FdCorrelation {
        FdCorrelation {
            level_centers: vec![],
            electrodes: labels
                .iter()
                .map(|(l, r)| ElectrodeCorrelation {
                    label: l.to_string(),
                    r: *r,
                    t: 0.0,
                    p: if *r != 0.0 { 0.01 } else { 0.5 },
                    significant_r: *r,
                    level_means: vec![],
                })
                .collect(),
        }
    }

    #[test]
    fn region_proportions() {
        let m = Montage::default_128(crate::io::Side::Left);
        let all: Vec<(&str, f64)> = m.labels().into_iter().map(|l| (l, 0.0)).collect();
        let values = BandPowerSummary {
            band: HIGH_GAMMA,
            electrodes: m
                .electrodes
                .iter()
                .map(|e| ElectrodeBandPower {
                    label: e.label.clone(),
                    move_mean: if e.region == Region::Ha { 0.3 } else { 0.1 },
                    idle_mean: 0.0,
                    p: 1.0,
                })
                .collect(),
        };
        let s = region_summary(&values, &corr_with(&all), &m).unwrap();
        assert_eq!(s.sce_in_ha_percent, None);
        assert!(s.ha_mean > s.nha_mean && s.p_ha_vs_nha < 0.05);

        let mut sig = all.clone();
        for e in sig.iter_mut() {
            if e.0 == "C3" || e.0 == "CCP3h" {
                e.1 = 0.8;
            }
        }
        let s = region_summary(&values, &corr_with(&sig), &m).unwrap();
        assert_eq!(s.sce_in_ha_percent, Some(100.0));
        assert!((s.hand_motor_mean_sig_abs_r - 0.8).abs() < 1e-12);
        assert!((s.hand_motor_mean_abs_r_zero_filled - 1.6 / 7.0).abs() < 1e-12);
        assert_eq!(s.contralesional_mean_sig_abs_r, 0.0);
    }

    #[test]
    fn region_summary_names_unknown_electrode() {
        let m = Montage::default_128(crate::io::Side::Left);
        let values = BandPowerSummary {
            band: HIGH_GAMMA,
            electrodes: vec![ElectrodeBandPower { label: "XX9".into(), move_mean: 0.0, idle_mean: 0.0, p: 1.0 }],
        };
        let err = region_summary(&values, &corr_with(&[]), &m).unwrap_err();
        assert!(matches!(err, Error::UnknownElectrode(l) if l == "XX9"));
    }
}
