//! ICA-based EMG artifact removal for EEG with simulated-EMG reference
//! channels, plus the evaluation stack and a ground-truth scene generator.

pub mod config;
pub mod emg;
pub mod error;
pub mod ica;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod recording;
pub mod report;
pub mod runner;
pub mod seed;
pub mod signal;
pub mod synth;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use ica::{IcaConfig, IcaModel};
pub use io::{Montage, Region, Side};
pub use metrics::MetricsReport;
pub use pipeline::{EraseConfig, EraseResult, TrialSet};
pub use recording::{Channel, ChannelKind, Recording};
pub use signal::{FilterSpec, TimeSeries};
