//! Scenario configuration, validation, and named presets.

use super::HarnessError;
use crate::bitlayer::CodecSpec;
use crate::channel::ChannelSpec;
use crate::equalize::PllConfig;
use crate::playback::EstimatorWindow;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Which dither map relates the transmitted and virtual constellations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DitherMapId {
    /// Minimal-l2 down-map (transmitted order above virtual).
    M1Down,
    /// Worst-case down-map.
    M2Down,
    /// Random nearest up-map (transmitted order below virtual).
    M1Up,
    /// Random antipodal up-map.
    M2Up,
    /// Zero dither (control; orders must match).
    None,
}

impl DitherMapId {
    pub fn as_str(&self) -> &'static str {
        match self {
            DitherMapId::M1Down => "m1_down",
            DitherMapId::M2Down => "m2_down",
            DitherMapId::M1Up => "m1_up",
            DitherMapId::M2Up => "m2_up",
            DitherMapId::None => "none",
        }
    }

    pub fn is_down(&self) -> bool {
        matches!(self, DitherMapId::M1Down | DitherMapId::M2Down)
    }

    pub fn is_worst(&self) -> bool {
        matches!(self, DitherMapId::M2Down | DitherMapId::M2Up)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualizerKind {
    Zf,
    Mmse,
}

impl EqualizerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EqualizerKind::Zf => "zf",
            EqualizerKind::Mmse => "mmse",
        }
    }
}

/// DFE dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Structure {
    pub l_f: usize,
    pub l_b: usize,
    pub n0: usize,
}

/// Adaptive-equalizer scenario section (learning curves).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveSection {
    /// LMS step sizes, one learning-curve pair per entry.
    #[serde(default)]
    pub lms_step_sizes: Vec<f64>,
    /// RLS forgetting factor; enables the RLS/playback arms when set.
    #[serde(default)]
    pub rls_lambda: Option<f64>,
    pub training_len: usize,
    #[serde(default)]
    pub pll: PllConfig,
    /// Emit every `stride`-th sample of the MSE curves.
    #[serde(default = "default_stride")]
    pub curve_stride: usize,
    /// Estimator window for the conventional-playback arm.
    #[serde(default = "default_estimator")]
    pub playback_estimator: EstimatorWindow,
}

fn default_stride() -> usize {
    10
}

fn default_estimator() -> EstimatorWindow {
    EstimatorWindow::Exponential { lambda: 0.999 }
}

/// Playback-demo scenario section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaybackSection {
    /// Probe length in symbols.
    pub probe_len: usize,
    /// Test-signal length in symbols.
    pub test_len: usize,
    pub estimator: EstimatorWindow,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    /// Power-trace window in symbols.
    #[serde(default = "default_power_window")]
    pub power_window: usize,
    /// Soft-decision SNR window in symbols.
    #[serde(default = "default_snr_window")]
    pub snr_window: usize,
    /// Equalizer forgetting factor for the SNR arms.
    #[serde(default = "default_lambda")]
    pub rls_lambda: f64,
    pub training_len: usize,
}

fn default_max_lag() -> usize {
    8
}

fn default_power_window() -> usize {
    500
}

fn default_snr_window() -> usize {
    1000
}

fn default_lambda() -> f64 {
    0.995
}

/// One scenario: everything a runner needs, fully serializable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_channel")]
    pub channel: ChannelSpec,
    /// Transmitted-constellation order exponent.
    #[serde(default = "default_map_g")]
    pub map_g: u32,
    /// Virtual-constellation order exponent.
    #[serde(default = "default_map_f")]
    pub map_f: u32,
    /// Dither maps exercised by the sweep runners.
    #[serde(default = "default_dithers")]
    pub dithers: Vec<DitherMapId>,
    #[serde(default = "default_equalizers")]
    pub equalizers: Vec<EqualizerKind>,
    #[serde(default = "default_structure")]
    pub structure: Structure,
    #[serde(default = "default_snr_list")]
    pub snr_list_db: Vec<f64>,
    /// Payload symbols per point.
    #[serde(default = "default_n_symbols")]
    pub n_symbols: usize,
    /// Optional FEC wrapping of the payload bits in the BER sweep.
    #[serde(default)]
    pub codec: Option<CodecSpec>,
    /// Optional raw payload file (one bit per byte) for the BER sweep.
    #[serde(default)]
    pub payload_file: Option<String>,
    #[serde(default)]
    pub adaptive: Option<AdaptiveSection>,
    #[serde(default)]
    pub playback: Option<PlaybackSection>,
    /// Minimum conditional sample count for empirical divergence fits.
    #[serde(default = "default_min_samples")]
    pub min_samples_per_symbol: usize,
}

fn default_seed() -> u64 {
    1
}

fn default_channel() -> ChannelSpec {
    ChannelSpec::Static {
        taps: vec![[1.0, 0.9472, 0.4586, 0.4315, 0.1497]
            .iter()
            .map(|&r| Complex64::new(r, 0.0))
            .collect()],
    }
}

fn default_map_g() -> u32 {
    4
}

fn default_map_f() -> u32 {
    2
}

fn default_dithers() -> Vec<DitherMapId> {
    vec![DitherMapId::M1Down]
}

fn default_equalizers() -> Vec<EqualizerKind> {
    vec![EqualizerKind::Zf, EqualizerKind::Mmse]
}

fn default_structure() -> Structure {
    Structure {
        l_f: 20,
        l_b: 4,
        n0: 19,
    }
}

fn default_snr_list() -> Vec<f64> {
    (5..=20).map(|s| s as f64).collect()
}

fn default_n_symbols() -> usize {
    50_000
}

fn default_min_samples() -> usize {
    crate::divergence::DEFAULT_MIN_SAMPLES_PER_SYMBOL
}

impl ScenarioConfig {
    /// A fully defaulted scenario with the given id.
    pub fn named(id: &str) -> Self {
        serde_json::from_str(&format!("{{\"scenario\": \"{id}\"}}")).expect("defaults")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.snr_list_db.is_empty() {
            return Err(HarnessError::Config("snr_list_db must be nonempty".into()));
        }
        if self.n_symbols == 0 {
            return Err(HarnessError::Config("n_symbols must be positive".into()));
        }
        for k in [self.map_g, self.map_f] {
            if k == 0 || k > 8 || (k != 1 && k % 2 != 0) {
                return Err(HarnessError::Config(format!(
                    "constellation exponent {k} unsupported"
                )));
            }
        }
        for d in &self.dithers {
            // Runners resolve the transmitted/virtual roles from the higher
            // and lower order, so any unequal pair supports both directions.
            let ok = match d {
                DitherMapId::None => self.map_g == self.map_f,
                _ => self.map_g != self.map_f,
            };
            if !ok {
                return Err(HarnessError::Config(format!(
                    "dither {} inconsistent with map_g=2^{} map_f=2^{}",
                    d.as_str(),
                    self.map_g,
                    self.map_f
                )));
            }
        }
        if self.structure.l_f == 0 {
            return Err(HarnessError::Config("l_f must be positive".into()));
        }
        if let Some(a) = &self.adaptive {
            if self.n_symbols < a.training_len {
                return Err(HarnessError::Config(format!(
                    "n_symbols {} below training length {}",
                    self.n_symbols, a.training_len
                )));
            }
            if a.curve_stride == 0 {
                return Err(HarnessError::Config("curve_stride must be positive".into()));
            }
        }
        if let Some(p) = &self.playback {
            if p.probe_len == 0 || p.test_len == 0 {
                return Err(HarnessError::Config(
                    "playback probe and test lengths must be positive".into(),
                ));
            }
            if p.test_len < p.training_len {
                return Err(HarnessError::Config(format!(
                    "test length {} below training length {}",
                    p.test_len, p.training_len
                )));
            }
        }
        Ok(())
    }

    /// The resolved config as a single JSON line for report embedding.
    pub fn echo_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Parse a config from JSON text, rejecting unknown keys and echoing line
/// and column on failure.
pub fn load_config(text: &str) -> Result<ScenarioConfig, HarnessError> {
    let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| {
        HarnessError::Config(format!(
            "parse error at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Names of the bundled scenario presets.
pub fn preset_names() -> Vec<&'static str> {
    vec![
        "fig7",
        "fig8",
        "fig9",
        "table2",
        "fig12-analog",
        "fig14-15-analog",
    ]
}

/// A bundled scenario preset.
pub fn preset(name: &str) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = ScenarioConfig::named(name);
    match name {
        // BER sweep, 16QAM transmitted re-read as QPSK, optimal and worst
        // down-maps, ZF and MMSE.
        "fig7" => {
            cfg.dithers = vec![DitherMapId::M1Down, DitherMapId::M2Down];
        }
        // BER sweep in the other direction: QPSK transmitted re-read as
        // 16QAM via the random nearest / antipodal maps.
        "fig8" => {
            cfg.map_g = 2;
            cfg.map_f = 4;
            cfg.dithers = vec![DitherMapId::M1Up, DitherMapId::M2Up];
            // 1e5 payload bits per point at 4 bits per virtual symbol.
            cfg.n_symbols = 25_000;
        }
        // LMS learning curves at 20 dB: 16QAM data re-read as QPSK.
        "fig9" => {
            cfg.dithers = vec![DitherMapId::M1Down];
            cfg.snr_list_db = vec![20.0];
            cfg.n_symbols = 20_000;
            cfg.adaptive = Some(AdaptiveSection {
                lms_step_sizes: vec![0.001, 0.005],
                rls_lambda: None,
                training_len: 3000,
                pll: PllConfig::Off,
                curve_stride: 10,
                playback_estimator: default_estimator(),
            });
        }
        // Closed-form and empirical distances at 18 dB for all four maps.
        // L_b = 3 leaves one uncancelled postcursor so the ZF deviation is
        // finite (with full cancellation every distance would be zero).
        "table2" => {
            cfg.dithers = vec![
                DitherMapId::M1Down,
                DitherMapId::M2Down,
                DitherMapId::M1Up,
                DitherMapId::M2Up,
            ];
            cfg.snr_list_db = vec![18.0];
            cfg.n_symbols = 1_000_000;
            cfg.structure = Structure {
                l_f: 20,
                l_b: 3,
                n0: 19,
            };
        }
        // RLS learning curves on a fast SIMO channel: true run, dithered
        // replay of the same recording, and conventional playback from an
        // estimated channel.
        "fig12-analog" => {
            cfg.snr_list_db = vec![20.0];
            cfg.n_symbols = 24_000;
            cfg.dithers = vec![DitherMapId::M1Down];
            cfg.structure = Structure {
                l_f: 12,
                l_b: 2,
                n0: 8,
            };
            cfg.channel = fast_simo_channel(cfg.n_symbols + 64, 2);
            cfg.adaptive = Some(AdaptiveSection {
                lms_step_sizes: vec![],
                rls_lambda: Some(0.997),
                training_len: 4000,
                pll: PllConfig::Off,
                curve_stride: 10,
                playback_estimator: EstimatorWindow::Exponential { lambda: 0.995 },
            });
        }
        // Power traces and soft-decision SNR for replay with and without the
        // residual-prediction-error term, on a channel whose fast component
        // defeats the estimator.
        "fig14-15-analog" => {
            cfg.map_g = 1;
            cfg.map_f = 1;
            cfg.dithers = vec![DitherMapId::None];
            cfg.snr_list_db = vec![30.0];
            cfg.n_symbols = 24_000;
            cfg.structure = Structure {
                l_f: 8,
                l_b: 2,
                n0: 4,
            };
            cfg.channel = fast_fading_channel(2 * cfg.n_symbols + 64);
            cfg.playback = Some(PlaybackSection {
                probe_len: 24_000,
                test_len: 20_000,
                estimator: EstimatorWindow::Exponential { lambda: 0.998 },
                max_lag: 4,
                power_window: 500,
                snr_window: 1000,
                rls_lambda: 0.995,
                training_len: 3000,
            });
        }
        other => {
            return Err(HarnessError::Config(format!(
                "unknown preset '{other}' (available: {})",
                preset_names().join(", ")
            )))
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Two-receiver channel with a strong slow component and a weak component
/// rotating too fast for channel estimators to track.
fn fast_simo_channel(span: usize, _n_rx: usize) -> ChannelSpec {
    let _ = span;
    ChannelSpec::SinusoidalFade {
        base: vec![
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.45, 0.15),
                Complex64::new(0.0, 0.0),
            ],
            vec![
                Complex64::new(0.85, -0.2),
                Complex64::new(0.4, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        ],
        amplitude: vec![vec![0.0, 0.0, 0.28], vec![0.0, 0.0, 0.26]],
        period: vec![vec![1.0, 1.0, 47.0], vec![1.0, 1.0, 53.0]],
        phase: vec![vec![0.0, 0.0, 0.4], vec![0.0, 0.0, 2.1]],
    }
}

/// Single-receiver channel with a static main tap and a strong fast rotating
/// echo.
fn fast_fading_channel(span: usize) -> ChannelSpec {
    let _ = span;
    ChannelSpec::SinusoidalFade {
        base: vec![vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]],
        amplitude: vec![vec![0.0, 1.3]],
        period: vec![vec![1.0, 41.0]],
        phase: vec![vec![0.0, 0.7]],
    }
}
