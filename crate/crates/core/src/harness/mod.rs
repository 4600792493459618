//! Scenario orchestration: seeded experiment runners that reproduce the
//! bundled scenario families at desk scale and emit CSV/JSON reports.
//!
//! Reports are deterministic: the same config and seed produce byte-identical
//! output. Every report embeds the fully resolved config, so a run can be
//! reproduced from its report alone.

mod config;
mod runners;

pub use config::{
    load_config, preset, preset_names, AdaptiveSection, DitherMapId, EqualizerKind,
    PlaybackSection, ScenarioConfig, Structure,
};
pub use runners::{
    run_ber_sweep, run_constellation_scatter, run_divergence_table, run_learning_curves,
    run_playback_demo, BerPoint, BerReport, DivergenceReport, DivergenceRow,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Invalid configuration or input files; CLI exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Numeric or algorithmic failure; CLI exit code 3.
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(String),
}

impl HarnessError {
    /// CLI exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numeric(_) | HarnessError::Io(_) => 3,
        }
    }
}

impl From<crate::channel::ChannelError> for HarnessError {
    fn from(e: crate::channel::ChannelError) -> Self {
        match e {
            crate::channel::ChannelError::ParamError(m) => HarnessError::Config(m),
            other => HarnessError::Numeric(other.to_string()),
        }
    }
}

impl From<crate::equalize::EqualizeError> for HarnessError {
    fn from(e: crate::equalize::EqualizeError) -> Self {
        match e {
            crate::equalize::EqualizeError::ParamError(m) => HarnessError::Config(m),
            other => HarnessError::Numeric(other.to_string()),
        }
    }
}

impl From<crate::modem::ModemError> for HarnessError {
    fn from(e: crate::modem::ModemError) -> Self {
        HarnessError::Numeric(e.to_string())
    }
}

impl From<crate::divergence::DivergenceError> for HarnessError {
    fn from(e: crate::divergence::DivergenceError) -> Self {
        HarnessError::Numeric(e.to_string())
    }
}

impl From<crate::playback::PlaybackError> for HarnessError {
    fn from(e: crate::playback::PlaybackError) -> Self {
        HarnessError::Numeric(e.to_string())
    }
}

impl From<crate::bitlayer::BitError> for HarnessError {
    fn from(e: crate::bitlayer::BitError) -> Self {
        HarnessError::Numeric(e.to_string())
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
