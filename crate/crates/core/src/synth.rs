//! Ground-truth scene generator: movement-locked high-γ and µ sources with
//! force coupling, amplitude-modulated background rhythms, force-driven EMG
//! projected onto the scalp, and sensor noise — each kept separately so
//! every downstream estimate can be scored against the truth.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::emg::{simulate_emg, Burst, BurstSchedule, EmgSpec};
use crate::error::{Error, Result};
use crate::io::{Montage, Side};
use crate::metrics::HIGH_GAMMA;
use crate::pipeline::{concatenate, preprocess, segment_trials, EraseResult, TrialSet};
use crate::recording::{Channel, ChannelKind, Recording};
use crate::seed;
use crate::signal::{design_butterworth, envelope_power, FilterSpec, TimeSeries};

/// Stored samples are rounded to this grid (µV) so component sums are
/// exact in f32.
pub const QUANTUM: f64 = 1.0 / 256.0;

pub const FORCE_LABEL: &str = "FORCE";

/// Default electrode subset: the left hand-motor cluster and its HA
/// neighbours, the contralesional cluster, and frontal/occipital sites.
pub const DEFAULT_ELECTRODES: [&str; 24] = [
    "C3", "C5", "C1", "FCC5h", "FCC3h", "CCP5h", "CCP3h", "FC3", "CP3", "FC5", "CP5", // HA
    "C4", "C2", "C6", "FCC6h", "FCC4h", "CCP4h", "CCP6h", "Fp1", "Fp2", "AF7", "AF8", "O1", "O2",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuralSource {
    pub name: String,
    /// Electrode at the center of the spatial pattern.
    pub center: String,
    /// Gaussian falloff width on the unit disk.
    pub width: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// Peak amplitude, µV, at unit gain.
    pub amplitude: f64,
    pub idle_gain: f64,
    pub move_gain: f64,
    /// Added to the move gain per unit of trial target force.
    pub force_coupling: f64,
    /// Mean rate of transient bursts; 0 keeps the source continuous.
    #[serde(default)]
    pub burst_rate_hz: f64,
    /// Full width at half maximum of one burst.
    #[serde(default)]
    pub burst_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundSpec {
    /// Defaults to channels − neural sources − EMG sources, which keeps the
    /// scene square (as many sources as channels).
    pub count: Option<usize>,
    pub amplitude: f64,
    pub width: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// Amplitude share of a broadband (band_low..broadband_high_hz) part
    /// mixed into each carrier; gives every electrode a high-γ floor.
    pub broadband: f64,
    pub broadband_high_hz: f64,
    /// Std of the log-amplitude modulation.
    pub modulation: f64,
    pub modulation_hz: f64,
    /// Random offset of each source center from its electrode.
    pub jitter: f64,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        BackgroundSpec {
            count: None,
            amplitude: 5.0,
            width: 0.19,
            band_low_hz: 2.0,
            band_high_hz: 40.0,
            broadband: 0.3,
            broadband_high_hz: 200.0,
            modulation: 0.8,
            modulation_hz: 0.5,
            jitter: 0.04,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmgContamination {
    /// Source recipe; `n_sources` is taken from `centers`.
    pub spec: EmgSpec,
    pub centers: Vec<String>,
    pub width: f64,
    /// Projection weight multiplier on HA electrodes.
    pub ha_attenuation: f64,
    /// Overall multiplier; 0 gives an EMG-free scene.
    pub gain: f64,
}

impl Default for EmgContamination {
    fn default() -> Self {
        EmgContamination {
            spec: EmgSpec {
                amplitude_scale: 2.6,
                ..EmgSpec::default()
            },
            centers: ["FCC6h", "AF8", "CCP4h", "Fp1"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            width: 0.26,
            ha_attenuation: 0.25,
            gain: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub n_trials: usize,
    pub sample_rate: f64,
    pub side: Side,
    /// Scalp electrodes taken from the bundled montage, in channel order.
    pub electrodes: Vec<String>,
    pub lead_in_s: f64,
    pub move_s: f64,
    pub iti_min_s: f64,
    pub iti_max_s: f64,
    pub force_min: f64,
    pub force_max: f64,
    pub force_noise: f64,
    pub ramp_ms: f64,
    pub neural: Vec<NeuralSource>,
    pub background: BackgroundSpec,
    pub emg: EmgContamination,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            n_trials: 200,
            sample_rate: 2000.0,
            side: Side::Left,
            electrodes: DEFAULT_ELECTRODES.iter().map(|s| s.to_string()).collect(),
            lead_in_s: 2.0,
            move_s: 2.0,
            iti_min_s: 3.0,
            iti_max_s: 5.0,
            force_min: 0.2,
            force_max: 1.0,
            force_noise: 0.01,
            ramp_ms: 100.0,
            neural: vec![
                NeuralSource {
                    name: "high-gamma".into(),
                    center: "C3".into(),
                    width: 0.33,
                    band_low_hz: 80.0,
                    band_high_hz: 160.0,
                    amplitude: 2.0,
                    idle_gain: 0.3,
                    move_gain: 0.3,
                    force_coupling: 2.0,
                    burst_rate_hz: 4.0,
                    burst_ms: 40.0,
                },
                NeuralSource {
                    name: "mu".into(),
                    center: "C3".into(),
                    width: 0.3,
                    band_low_hz: 8.0,
                    band_high_hz: 12.0,
                    amplitude: 4.0,
                    idle_gain: 1.0,
                    move_gain: 0.4,
                    force_coupling: 0.0,
                    burst_rate_hz: 0.0,
                    burst_ms: 0.0,
                },
            ],
            background: BackgroundSpec::default(),
            emg: EmgContamination::default(),
            noise_sigma: 0.3,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n_trials == 0 {
            return bad("n_trials must be positive".into());
        }
        if !(self.sample_rate > 0.0) {
            return bad(format!("sample rate {}", self.sample_rate));
        }
        if !(self.move_s > 0.0 && self.iti_min_s > 0.0 && self.iti_max_s >= self.iti_min_s && self.lead_in_s >= 0.0) {
            return bad("timing must satisfy move > 0, 0 < iti_min ≤ iti_max, lead_in ≥ 0".into());
        }
        if !(self.force_max > self.force_min && self.force_min >= 0.0) {
            return bad("force range must satisfy 0 ≤ min < max".into());
        }
        for s in &self.neural {
            if s.idle_gain < 0.0 || s.move_gain < 0.0 || s.amplitude < 0.0 {
                return bad(format!("source {:?}: gains and amplitude must be ≥ 0", s.name));
            }
            if !(s.burst_rate_hz >= 0.0) || (s.burst_rate_hz > 0.0 && !(s.burst_ms > 0.0)) {
                return bad(format!("source {:?}: bursts need rate ≥ 0 and width > 0", s.name));
            }
        }
        if !(0.0..=1.0).contains(&self.background.broadband) {
            return bad("background broadband share must lie in [0, 1]".into());
        }
        if !(self.noise_sigma >= 0.0 && self.emg.gain >= 0.0 && self.emg.ha_attenuation.is_finite()) {
            return bad("noise sigma and EMG gains must be finite and ≥ 0".into());
        }
        Ok(())
    }

    pub fn montage(&self) -> Result<Montage> {
        let full = Montage::default_128(self.side);
        let labels: Vec<&str> = self.electrodes.iter().map(String::as_str).collect();
        full.subset(&labels)
    }
}

/// A generated scene. `recording = clean + emg + noise` exactly on the
/// scalp rows; the last recording row is the force channel.
#[derive(Clone, Debug)]
pub struct Scene {
    pub recording: Recording,
    pub clean: Array2<f32>,
    pub emg: Array2<f32>,
    pub noise: Array2<f32>,
    pub onsets_s: Vec<f64>,
    pub target_force: Vec<f64>,
    pub montage: Montage,
}

fn quantize(v: f64) -> f32 {
    ((v / QUANTUM).round() * QUANTUM) as f32
}

/// Unit-variance Gaussian noise shaped by an order-4 Butterworth filter.
fn shaped_noise(rng: &mut impl Rng, n: usize, spec: &FilterSpec, fs: f64) -> Result<Vec<f64>> {
    let sos = design_butterworth(spec, fs)?;
    let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    sos.apply_in_place(&mut x);
    let sd = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if sd > 0.0 {
        x.iter_mut().for_each(|v| *v /= sd);
    }
    Ok(x)
}

fn pattern(montage: &Montage, cx: f64, cy: f64, width: f64) -> Vec<f64> {
    montage
        .electrodes
        .iter()
        .map(|e| (-((e.x - cx).powi(2) + (e.y - cy).powi(2)) / (width * width)).exp())
        .collect()
}

fn add_outer(acc: &mut Array2<f64>, weights: &[f64], series: &[f64], scale: f64) {
    for (mut row, &w) in acc.outer_iter_mut().zip(weights) {
        let k = w * scale;
        if k == 0.0 {
            continue;
        }
        row.iter_mut().zip(series).for_each(|(a, s)| *a += k * s);
    }
}

/// Poisson train of Gaussian bumps, scaled to unit RMS.
fn burst_train<R: Rng>(rng: &mut R, n: usize, fs: f64, rate_hz: f64, fwhm_ms: f64) -> Vec<f64> {
    let sigma = fwhm_ms * fs / 1000.0 / (8.0 * 2f64.ln()).sqrt();
    let reach = (4.0 * sigma).ceil() as isize;
    let mut env = vec![0.0; n];
    let mut t = 0.0;
    loop {
        t += -(1.0 - rng.random::<f64>()).ln() / rate_hz * fs;
        if t >= n as f64 {
            break;
        }
        let c = t as isize;
        for k in (c - reach).max(0)..(c + reach + 1).min(n as isize) {
            env[k as usize] += (-0.5 * ((k as f64 - t) / sigma).powi(2)).exp();
        }
    }
    let rms = (env.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt();
    if rms > 0.0 {
        env.iter_mut().for_each(|v| *v /= rms);
    }
    env
}

/// Farthest-point choice of `k` electrodes (first electrode first), so
/// background sources cover the whole montage.
fn spread_centers(montage: &Montage, k: usize) -> Vec<usize> {
    let pos: Vec<(f64, f64)> = montage.electrodes.iter().map(|e| (e.x, e.y)).collect();
    let mut chosen = vec![0];
    let mut gap: Vec<f64> = pos.iter().map(|p| (p.0 - pos[0].0).hypot(p.1 - pos[0].1)).collect();
    while chosen.len() < k.min(pos.len()) {
        let next = (0..pos.len())
            .max_by(|&a, &b| gap[a].total_cmp(&gap[b]).then(b.cmp(&a)))
            .expect("nonempty montage");
        chosen.push(next);
        for (g, p) in gap.iter_mut().zip(&pos) {
            *g = g.min((p.0 - pos[next].0).hypot(p.1 - pos[next].1));
        }
    }
    chosen
}

pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let montage = spec.montage()?;
    let fs = spec.sample_rate;
    let c = montage.len();

    // Timing and forces.
    let mut rng = seed::rng(spec.seed, 1);
    let move_len = (spec.move_s * fs).round() as usize;
    let mut onsets = Vec::with_capacity(spec.n_trials);
    let mut forces = Vec::with_capacity(spec.n_trials);
    let mut t = (spec.lead_in_s * fs).round() as usize;
    for _ in 0..spec.n_trials {
        onsets.push(t);
        forces.push(rng.random_range(spec.force_min..=spec.force_max));
        let iti = rng.random_range(spec.iti_min_s..=spec.iti_max_s);
        t += move_len + (iti * fs).round() as usize;
    }
    let n = t;
    let ramp = (spec.ramp_ms * fs / 1000.0).round() as usize;
    let schedule = BurstSchedule {
        bursts: onsets
            .iter()
            .zip(&forces)
            .map(|(&onset, &gain)| Burst { onset, len: move_len, gain })
            .collect(),
    };
    // Unit trapezoid during moves, and the target force of the current trial.
    let unit = BurstSchedule {
        bursts: schedule.bursts.iter().map(|b| Burst { gain: 1.0, ..*b }).collect(),
    }
    .envelope(n, ramp);
    let force_env = schedule.envelope(n, ramp);

    // Neural sources.
    let mut clean = Array2::<f64>::zeros((c, n));
    for (i, src) in spec.neural.iter().enumerate() {
        let e = montage.get(&src.center)?;
        let w = pattern(&montage, e.x, e.y, src.width);
        let mut rng = seed::rng(spec.seed, 300 + i as u64);
        let band = FilterSpec::bandpass(4, src.band_low_hz, src.band_high_hz);
        let mut x = shaped_noise(&mut rng, n, &band, fs)?;
        if src.burst_rate_hz > 0.0 {
            let env = burst_train(&mut rng, n, fs, src.burst_rate_hz, src.burst_ms);
            x.iter_mut().zip(&env).for_each(|(v, e)| *v *= e);
        }
        for t in 0..n {
            let gain = src.idle_gain + (src.move_gain - src.idle_gain) * unit[t] + src.force_coupling * force_env[t];
            x[t] *= gain;
        }
        add_outer(&mut clean, &w, &x, src.amplitude);
    }

    // Background rhythms, one per spare electrode.
    let n_emg = spec.emg.centers.len();
    let n_bg = spec.background.count.unwrap_or_else(|| c.saturating_sub(spec.neural.len() + n_emg));
    let bg = &spec.background;
    let bg_band = FilterSpec::bandpass(4, bg.band_low_hz, bg.band_high_hz);
    let mod_band = FilterSpec::lowpass(4, bg.modulation_hz);
    let broad_band = FilterSpec::bandpass(4, bg.band_low_hz, bg.broadband_high_hz);
    let centers = spread_centers(&montage, n_bg);
    for i in 0..n_bg {
        let e = &montage.electrodes[centers[i % centers.len()]];
        let mut rng = seed::rng(spec.seed, 100 + i as u64);
        let cx = e.x + bg.jitter * rng.sample::<f64, _>(StandardNormal);
        let cy = e.y + bg.jitter * rng.sample::<f64, _>(StandardNormal);
        let mut carrier = shaped_noise(&mut rng, n, &bg_band, fs)?;
        if bg.broadband > 0.0 {
            let broad = shaped_noise(&mut rng, n, &broad_band, fs)?;
            let keep = (1.0 - bg.broadband.powi(2)).max(0.0).sqrt();
            carrier.iter_mut().zip(&broad).for_each(|(v, b)| *v = keep * *v + bg.broadband * b);
        }
        let mut rng = seed::rng(spec.seed, 200 + i as u64);
        let mut env: Vec<f64> = shaped_noise(&mut rng, n, &mod_band, fs)?
            .into_iter()
            .map(|v| (bg.modulation * v).exp())
            .collect();
        let rms = (env.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        env.iter_mut().zip(&carrier).for_each(|(v, s)| *v = *v / rms * s);
        add_outer(&mut clean, &pattern(&montage, cx, cy, bg.width), &env, bg.amplitude);
    }
    let clean = clean.mapv(quantize);

    // EMG: independent carriers sharing the force-driven burst process.
    let mut emg = Array2::<f64>::zeros((c, n));
    if n_emg > 0 && spec.emg.gain > 0.0 {
        let emg_spec = EmgSpec {
            n_sources: n_emg,
            seed: seed::derive(spec.seed, 400),
            ..spec.emg.spec.clone()
        };
        let sources = simulate_emg(&emg_spec, &schedule, n, fs)?;
        for (src, center) in sources.iter().zip(&spec.emg.centers) {
            let e = montage.get(center)?;
            let mut w = pattern(&montage, e.x, e.y, spec.emg.width);
            for (wi, el) in w.iter_mut().zip(&montage.electrodes) {
                if el.region == crate::io::Region::Ha {
                    *wi *= spec.emg.ha_attenuation;
                }
            }
            add_outer(&mut emg, &w, &src.samples, spec.emg.gain);
        }
    }
    let emg = emg.mapv(quantize);

    let noise = {
        let mut out = Array2::<f32>::zeros((c, n));
        for (ch, mut row) in out.outer_iter_mut().enumerate() {
            let mut rng = seed::rng(spec.seed, 500 + ch as u64);
            row.iter_mut()
                .for_each(|v| *v = quantize(spec.noise_sigma * rng.sample::<f64, _>(StandardNormal)));
        }
        out
    };

    let mut data = Array2::<f32>::zeros((c + 1, n));
    {
        let mut scalp = data.slice_mut(ndarray::s![..c, ..]);
        scalp.assign(&clean);
        scalp += &emg;
        scalp += &noise;
    }
    let mut rng = seed::rng(spec.seed, 700);
    for (t, v) in data.row_mut(c).iter_mut().enumerate() {
        *v = quantize(force_env[t] + spec.force_noise * rng.sample::<f64, _>(StandardNormal));
    }
    let mut channels: Vec<Channel> = montage
        .electrodes
        .iter()
        .map(|e| Channel::new(e.label.clone(), ChannelKind::Scalp))
        .collect();
    channels.push(Channel::new(FORCE_LABEL, ChannelKind::Force));

    Ok(Scene {
        recording: Recording::new(channels, fs, data)?,
        clean,
        emg,
        noise,
        onsets_s: onsets.iter().map(|&o| o as f64 / fs).collect(),
        target_force: forces,
        montage,
    })
}

/// Segmented, preprocessed ground-truth parts, aligned with the trials the
/// pipeline sees.
#[derive(Clone, Debug)]
pub struct TruthTrials {
    pub clean: TrialSet,
    pub emg: TrialSet,
    pub noise: TrialSet,
}

impl Scene {
    fn part(&self, data: &Array2<f32>) -> Recording {
        let channels = self.recording.channels[..self.montage.len()].to_vec();
        Recording {
            channels,
            sample_rate: self.recording.sample_rate,
            data: data.clone(),
        }
    }

    pub fn clean_recording(&self) -> Recording {
        self.part(&self.clean)
    }

    pub fn emg_recording(&self) -> Recording {
        self.part(&self.emg)
    }

    pub fn noise_recording(&self) -> Recording {
        self.part(&self.noise)
    }

    pub fn truth_trials(&self, pre: &FilterSpec, zero_phase: bool, idle_s: f64, move_s: f64) -> Result<TruthTrials> {
        let force = segment_trials(&self.recording.select(&self.recording.indices_of(ChannelKind::Force)), &self.onsets_s, idle_s, move_s)?;
        let cut = |rec: Recording| -> Result<TrialSet> {
            let rec = preprocess(&rec, pre, zero_phase)?;
            let mut ts = segment_trials(&rec, &self.onsets_s, idle_s, move_s)?;
            ts.mean_force.clone_from(&force.mean_force);
            Ok(ts)
        };
        Ok(TruthTrials {
            clean: cut(self.clean_recording())?,
            emg: cut(self.emg_recording())?,
            noise: cut(self.noise_recording())?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scorecard {
    pub labels: Vec<String>,
    /// High-γ power of (cleaned − clean − noise) over injected EMG high-γ
    /// power, per channel (0 where no EMG was injected).
    pub residual_emg_fraction: Vec<f64>,
    /// 1 − Σ residual / Σ injected over NHA channels.
    pub nha_emg_reduction: f64,
    /// High-γ envelope correlation of cleaned vs clean at hand-motor
    /// electrodes.
    pub motor_envelope_corr: Vec<f64>,
    pub mean_motor_envelope_corr: f64,
    /// Components whose activity is mostly EMG (scalp EMG + virtual).
    pub planted: Vec<usize>,
    pub rejected: Vec<usize>,
    pub recall: f64,
    pub precision: f64,
    /// Per component, artifact share of its variance.
    pub artifact_share: Vec<f64>,
}

fn rows_f64(ts: &TrialSet) -> Array2<f64> {
    ts.data.mapv(|v| v as f64)
}

fn hg_power(x: &[f64], fs: f64) -> Result<f64> {
    let sos = design_butterworth(&FilterSpec::bandpass(4, HIGH_GAMMA.low_hz, HIGH_GAMMA.high_hz), fs)?;
    let y = sos.apply(x);
    Ok(y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64)
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return if saa == sbb { 1.0 } else { 0.0 };
    }
    sab / (saa * sbb).sqrt()
}

/// Score a cleaning result against the scene truth.
pub fn oracle_scores(result: &EraseResult, truth: &TruthTrials, montage: &Montage) -> Result<Scorecard> {
    let cleaned = &result.cleaned;
    let fs = cleaned.sample_rate;
    let clean = concatenate(&truth.clean)?;
    if cleaned.data.dim() != clean.data.dim() {
        return Err(Error::Shape(format!(
            "cleaned {:?} vs truth {:?}",
            cleaned.data.dim(),
            clean.data.dim()
        )));
    }
    let emg = rows_f64(&truth.emg);
    let noise = rows_f64(&truth.noise);
    let clean64 = rows_f64(&truth.clean);

    let mut residual = Vec::with_capacity(cleaned.n_channels());
    let (mut res_nha, mut emg_nha) = (0.0, 0.0);
    for (i, ch) in cleaned.channels.iter().enumerate() {
        let r: Vec<f64> = (0..cleaned.n_samples())
            .map(|t| cleaned.data[[i, t]] as f64 - clean64[[i, t]] - noise[[i, t]])
            .collect();
        let pr = hg_power(&r, fs)?;
        let pe = hg_power(emg.row(i).as_slice().expect("contiguous"), fs)?;
        residual.push(if pe > 0.0 { pr / pe } else { 0.0 });
        if montage.get(&ch.label)?.region == crate::io::Region::Nha {
            res_nha += pr;
            emg_nha += pe;
        }
    }
    let nha_emg_reduction = if emg_nha > 0.0 { 1.0 - res_nha / emg_nha } else { 0.0 };

    let band = FilterSpec::bandpass(4, HIGH_GAMMA.low_hz, HIGH_GAMMA.high_hz);
    let smooth = FilterSpec::lowpass(4, 4.0);
    let skip = 512;
    let mut motor_corr = Vec::new();
    for l in montage.hand_motor_labels() {
        let Some(i) = cleaned.channel_index(l) else { continue };
        let a = envelope_power(&TimeSeries::new(cleaned.data.row(i).iter().map(|&v| v as f64).collect(), fs)?, &band, &smooth)?;
        let b = envelope_power(&TimeSeries::new(clean64.row(i).to_vec(), fs)?, &band, &smooth)?;
        motor_corr.push(corr(&a.samples[skip..], &b.samples[skip..]));
    }
    let mean_motor = motor_corr.iter().sum::<f64>() / motor_corr.len().max(1) as f64;

    // Split each component's activity into neural and artifact parts.
    let u = result.model.unmixing_full();
    let nc = cleaned.n_channels();
    let u_scalp = u.slice(ndarray::s![.., ..nc]);
    let neural = u_scalp.dot(&(&clean64 + &noise));
    let mut artifact = u_scalp.dot(&emg);
    if let Some(v) = &result.virtual_channels {
        let u_virt = u.slice(ndarray::s![.., nc..]);
        artifact += &u_virt.dot(&v.mapv(|x| x as f64));
    }
    let var = |m: &Array2<f64>| -> Array1<f64> {
        let mean = m.mean_axis(Axis(1)).expect("samples");
        let mut out = Array1::zeros(m.nrows());
        for (i, row) in m.outer_iter().enumerate() {
            out[i] = row.iter().map(|v| (v - mean[i]).powi(2)).sum::<f64>() / row.len() as f64;
        }
        out
    };
    let (vn, va) = (var(&neural), var(&artifact));
    let share: Vec<f64> = (0..u.nrows())
        .map(|j| {
            let tot = vn[j] + va[j];
            if tot > 0.0 { va[j] / tot } else { 0.0 }
        })
        .collect();
    let planted: Vec<usize> = (0..share.len()).filter(|&j| share[j] > 0.5).collect();
    let hits = planted.iter().filter(|j| result.rejected.contains(j)).count();
    let recall = if planted.is_empty() { 1.0 } else { hits as f64 / planted.len() as f64 };
    let precision = if result.rejected.is_empty() { 1.0 } else { hits as f64 / result.rejected.len() as f64 };

    Ok(Scorecard {
        labels: cleaned.channels.iter().map(|c| c.label.clone()).collect(),
        residual_emg_fraction: residual,
        nha_emg_reduction,
        motor_envelope_corr: motor_corr,
        mean_motor_envelope_corr: mean_motor,
        planted,
        rejected: result.rejected.clone(),
        recall,
        precision,
        artifact_share: share,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SceneSpec {
        SceneSpec {
            n_trials: 6,
            seed: 3,
            ..SceneSpec::default()
        }
    }

    #[test]
    fn decomposition_is_exact() {
        let s = generate_scene(&small()).unwrap();
        let c = s.montage.len();
        for ch in 0..c {
            for t in 0..s.recording.n_samples() {
                let v = s.recording.data[[ch, t]];
                assert_eq!(v - s.clean[[ch, t]] - s.emg[[ch, t]] - s.noise[[ch, t]], 0.0);
            }
        }
    }

    #[test]
    fn same_seed_same_scene() {
        let a = generate_scene(&small()).unwrap();
        let b = generate_scene(&small()).unwrap();
        assert_eq!(a.recording, b.recording);
        let c = generate_scene(&SceneSpec { seed: 4, ..small() }).unwrap();
        assert_ne!(a.recording, c.recording);
    }

    #[test]
    fn zero_emg_gain_gives_clean_plus_noise() {
        let mut spec = small();
        spec.emg.gain = 0.0;
        let s = generate_scene(&spec).unwrap();
        assert!(s.emg.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn timing_and_force_channel() {
        let s = generate_scene(&small()).unwrap();
        assert_eq!(s.onsets_s[0], 2.0);
        for w in s.onsets_s.windows(2) {
            let gap = w[1] - w[0];
            assert!((5.0..=7.0 + 1e-9).contains(&gap), "{gap}");
        }
        let trials = segment_trials(&s.recording, &s.onsets_s, 1.0, 2.0).unwrap();
        for (m, f) in trials.mean_force.iter().zip(&s.target_force) {
            // Ramps shave 100 ms off each end of the 2 s plateau.
            assert!((m / f - 0.95).abs() < 0.03, "{m} vs {f}");
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(generate_scene(&SceneSpec { n_trials: 0, ..small() }).is_err());
        let mut spec = small();
        spec.electrodes.push("NOPE".into());
        assert!(matches!(generate_scene(&spec), Err(Error::UnknownElectrode(_))));
        let mut spec = small();
        spec.neural[0].move_gain = -1.0;
        assert!(generate_scene(&spec).is_err());
        let mut spec = small();
        spec.neural[0].burst_ms = 0.0;
        assert!(generate_scene(&spec).is_err());
    }

    #[test]
    fn burst_train_is_unit_rms_and_sparse() {
        let mut rng = seed::rng(9, 0);
        let env = burst_train(&mut rng, 200_000, 2000.0, 4.0, 40.0);
        let rms = (env.iter().map(|v| v * v).sum::<f64>() / env.len() as f64).sqrt();
        assert!((rms - 1.0).abs() < 1e-12);
        let mean = env.iter().sum::<f64>() / env.len() as f64;
        // A constant envelope would have mean = rms.
        assert!(mean < 0.7, "{mean}");
    }

    #[test]
    fn spread_centers_cover_the_montage() {
        let m = SceneSpec::default().montage().unwrap();
        let centers = spread_centers(&m, 12);
        assert_eq!(centers[0], 0);
        let mut sorted = centers.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 12);
        // Every electrode is closer to some center than the first pick's
        // distance to the farthest electrode.
        let d = |a: usize, b: usize| (m.electrodes[a].x - m.electrodes[b].x).hypot(m.electrodes[a].y - m.electrodes[b].y);
        let far = (0..m.len()).map(|i| d(0, i)).fold(0.0, f64::max);
        for i in 0..m.len() {
            let near = centers.iter().map(|&c| d(c, i)).fold(f64::INFINITY, f64::min);
            assert!(near < far / 2.0, "{}", m.electrodes[i].label);
        }
    }
}
