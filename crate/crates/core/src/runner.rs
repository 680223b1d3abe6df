//! Command orchestration shared by the CLI and the end-to-end tests:
//! simulate a scene, run one condition on a recording, render a report.
//! Every command writes a manifest with the resolved config, seeds and
//! SHA-256 digests of inputs and outputs.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{read_events, read_montage, read_recording, write_events, write_montage, write_recording, Montage};
use crate::metrics::{compute_report, MetricsReport};
use crate::pipeline::{preprocess, run_conventional_ica, run_erase, segment_trials, EraseResult};
use crate::recording::{ChannelKind, Recording};
use crate::report;
use crate::synth::generate_scene;

pub const MANIFEST: &str = "manifest.json";
pub const METRICS: &str = "metrics.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Baseline,
    Erase,
    Conventional,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::Erase => "erase",
            Condition::Conventional => "conventional",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Condition::Baseline),
            "erase" => Ok(Condition::Erase),
            "conventional" => Ok(Condition::Conventional),
            _ => Err(Error::Config(format!("unknown condition {s:?} (baseline, erase, conventional)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub condition: Option<Condition>,
    pub seeds: BTreeMap<String, u64>,
    pub config: RunConfig,
    /// File name → SHA-256 (hex). Names only, so manifests do not depend
    /// on where a run happened.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    fn new(command: &str, condition: Option<Condition>, config: &RunConfig) -> Manifest {
        let seeds = BTreeMap::from([
            ("scene".to_string(), config.scene.seed),
            ("virtual_emg".to_string(), config.erase.emg.seed),
            ("erase_ica".to_string(), config.erase.ica.seed),
            ("conventional_ica".to_string(), config.conventional.ica.seed),
        ]);
        Manifest {
            tool: "erase".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            condition,
            seeds,
            config: config.clone(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            offset: 0,
            msg: format!("{}: {e}", path.display()),
        })
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Collects written files for the manifest.
struct Outputs<'a> {
    dir: &'a Path,
    digests: BTreeMap<String, String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir,
            digests: BTreeMap::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        self.record(name)
    }

    fn record(&mut self, name: &str) -> Result<()> {
        let d = sha256_file(&self.path(name))?;
        self.digests.insert(name.to_string(), d);
        Ok(())
    }

    fn finish(self, mut manifest: Manifest) -> Result<Manifest> {
        manifest.outputs = self.digests;
        let p = self.dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        Ok(manifest)
    }
}

/// Generate the configured scene: `recording.bin` (scalp + force),
/// `events.txt`, `montage.csv`, and ground truth under `truth/`.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    let scene = generate_scene(&cfg.scene)?;
    let mut files = Outputs::new(out)?;
    fs::create_dir_all(out.join("truth")).map_err(|e| Error::io(out, e))?;
    write_recording(&files.path("recording.bin"), &scene.recording)?;
    files.record("recording.bin")?;
    write_events(&files.path("events.txt"), &scene.onsets_s)?;
    files.record("events.txt")?;
    write_montage(&files.path("montage.csv"), &scene.montage)?;
    files.record("montage.csv")?;
    for (name, rec) in [
        ("truth/clean.bin", scene.clean_recording()),
        ("truth/emg.bin", scene.emg_recording()),
        ("truth/noise.bin", scene.noise_recording()),
    ] {
        write_recording(&files.path(name), &rec)?;
        files.record(name)?;
    }
    let mut forces = String::from("trial,onset_s,target_force\n");
    for (k, (t, f)) in scene.onsets_s.iter().zip(&scene.target_force).enumerate() {
        forces.push_str(&format!("{k},{t},{f}\n"));
    }
    files.text("truth/forces.csv", &forces)?;
    files.finish(Manifest::new("simulate", None, cfg))
}

pub struct RunInputs<'a> {
    pub recording: &'a Path,
    pub events: &'a Path,
    /// Defaults to the bundled layout (side from the config) restricted to
    /// the recording's scalp channels.
    pub montage: Option<&'a Path>,
}

/// Outcome of [`run`]; `cleaning` is None for the baseline condition.
pub struct RunOutput {
    pub manifest: Manifest,
    pub metrics: MetricsReport,
    pub cleaning: Option<EraseResult>,
}

fn resolve_montage(path: Option<&Path>, rec: &Recording, cfg: &RunConfig) -> Result<Montage> {
    let full = match path {
        Some(p) => read_montage(p)?,
        None => Montage::default_128(cfg.scene.side),
    };
    let labels: Vec<&str> = rec
        .channels
        .iter()
        .filter(|c| c.kind == ChannelKind::Scalp)
        .map(|c| c.label.as_str())
        .collect();
    full.subset(&labels)
}

/// Preprocess, segment, clean (per condition) and evaluate one recording.
pub fn run(inputs: &RunInputs, condition: Condition, cfg: &RunConfig, out: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    let rec = read_recording(inputs.recording)?;
    let onsets = read_events(inputs.events)?;
    let montage = resolve_montage(inputs.montage, &rec, cfg)?;
    let mut manifest = Manifest::new("run", Some(condition), cfg);
    manifest.inputs.insert(file_name(inputs.recording), sha256_file(inputs.recording)?);
    manifest.inputs.insert(file_name(inputs.events), sha256_file(inputs.events)?);
    if let Some(m) = inputs.montage {
        manifest.inputs.insert(file_name(m), sha256_file(m)?);
    }

    let pre = preprocess(&rec, &cfg.erase.preprocess, cfg.trials.zero_phase)?;
    drop(rec);
    let trials = segment_trials(&pre, &onsets, cfg.trials.idle_s, cfg.trials.move_s)?;
    drop(pre);
    log::info!("{} trials ({} skipped), condition {condition}", trials.n_trials(), trials.skipped);

    let mut files = Outputs::new(out)?;
    let (evaluated, cleaning) = match condition {
        Condition::Baseline => (trials.scalp(), None),
        Condition::Erase | Condition::Conventional => {
            let res = match condition {
                Condition::Erase => run_erase(&trials, &cfg.erase)?,
                _ => run_conventional_ica(&trials, &cfg.conventional)?,
            };
            write_recording(&files.path("cleaned.bin"), &res.cleaned)?;
            files.record("cleaned.bin")?;
            let mut comps = String::from("component,score,rejected\n");
            for (j, s) in res.scores.iter().enumerate() {
                comps.push_str(&format!("{j},{s},{}\n", res.rejected.contains(&j)));
            }
            files.text("components.csv", &comps)?;
            (trials.with_channels_from(&res.cleaned)?, Some(res))
        }
    };
    let mut metrics = compute_report(
        condition.name(),
        &evaluated,
        &montage,
        &cfg.metrics.stft,
        &cfg.metrics.snr,
        &cfg.metrics.fd,
    )?;
    if let Some(res) = &cleaning {
        let n_virtual = res.virtual_mask.iter().filter(|&&v| v).count();
        metrics.virtual_labels = (1..=n_virtual).map(|k| format!("EMG{k}"))
            .collect();
    }
    files.text("band_power.csv", &report::band_power_csv(&metrics.band_power, &montage, metrics.alpha)?)?;
    files.text("snr.csv", &report::snr_csv(&metrics.snr))?;
    files.text("fd_correlation.csv", &report::fd_correlation_csv(&metrics.fd, &montage)?)?;
    files.text("region_summary.csv", &report::region_summary_csv(&metrics.region))?;
    files.text(METRICS, &(serde_json::to_string_pretty(&metrics).expect("metrics serialize") + "\n"))?;
    files.text("montage.csv", &montage.to_csv())?;
    manifest = files.finish(manifest)?;
    Ok(RunOutput {
        manifest,
        metrics,
        cleaning,
    })
}

/// Render figures from a run directory's `metrics.json`. The montage
/// defaults to the run directory's `montage.csv`.
pub fn render(metrics_dir: &Path, montage: Option<&Path>, out: &Path) -> Result<Vec<PathBuf>> {
    let mpath = metrics_dir.join(METRICS);
    if !mpath.exists() {
        return Err(Error::Config(format!("no {METRICS} in {}", metrics_dir.display())));
    }
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let metrics: MetricsReport = serde_json::from_str(&text).map_err(|e| Error::Parse {
        offset: 0,
        msg: format!("{}: {e}", mpath.display()),
    })?;
    let montage_path = montage.map(Path::to_path_buf).unwrap_or_else(|| metrics_dir.join("montage.csv"));
    let montage = read_montage(&montage_path)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut written = Vec::new();
    for (name, svg) in report::render_figures(&metrics, &montage)? {
        let p = out.join(name);
        fs::write(&p, svg).map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    Ok(written)
}
