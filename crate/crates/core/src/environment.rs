//! Wind-speed estimation from ambient-noise spectral level.
//!
//! The estimate follows the WOTAN recipe: measure the sound spectral level
//! SSL at frequency f (kHz), refer it to the 8 kHz reference with the
//! -19 dB/decade spectrum slope plus an attenuation allowance, convert to
//! linear pressure, and map through the empirical wind line
//! `U10 = (p0 + 80.94) / 52.8`. The constants are used verbatim; sample
//! values are unitless in simulation, so a calibration offset in dB maps
//! them to the microPascal reference.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnvironmentError {
    #[error("frequency error: {0}")]
    FrequencyError(String),
    #[error("range error: {0}")]
    RangeError(String),
}

/// A measured sound spectral level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralObservation {
    /// dB re the calibration reference, per Hz.
    pub ssl_db: f64,
    /// Frequency in kHz.
    pub freq_khz: f64,
    /// Averaging duration in seconds.
    pub averaging_duration_s: f64,
}

/// WOTAN parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WotanParams {
    /// Noise spectrum slope, dB per decade.
    pub q_db_per_decade: f64,
    /// Attenuation/refraction allowance in dB (nominal range 0-1).
    pub beta_db: f64,
    /// Reference frequency in kHz.
    pub f0_khz: f64,
}

impl Default for WotanParams {
    fn default() -> Self {
        Self {
            q_db_per_decade: -19.0,
            beta_db: 0.0,
            f0_khz: 8.0,
        }
    }
}

/// Result of the wind-speed estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WotanEstimate {
    pub ssl_db: f64,
    pub ssl0_db: f64,
    pub p0: f64,
    pub u10_ms: f64,
    /// The empirical line is rated to O(1) m/s only below 16 m/s.
    pub valid: bool,
}

/// Floor for empty spectra, dB.
const SSL_FLOOR_DB: f64 = -300.0;

/// Welch-averaged spectral density at the bin nearest `f_target_khz`,
/// in dB plus the calibration offset. Rectangular segments of
/// `segment_len` samples; `window_s` seconds of data are consumed.
pub fn average_ssl(
    samples: &[Complex64],
    fs_hz: f64,
    f_target_khz: f64,
    window_s: f64,
    cal_db: f64,
    segment_len: usize,
) -> Result<SpectralObservation, EnvironmentError> {
    if f_target_khz <= 0.0 || fs_hz <= 2.0 * f_target_khz * 1000.0 {
        return Err(EnvironmentError::FrequencyError(format!(
            "target {f_target_khz} kHz not below Nyquist of fs = {fs_hz} Hz"
        )));
    }
    if segment_len < 8 {
        return Err(EnvironmentError::RangeError(format!(
            "segment length {segment_len} too short"
        )));
    }
    let needed = (window_s * fs_hz) as usize;
    if needed > samples.len() {
        return Err(EnvironmentError::RangeError(format!(
            "window of {needed} samples exceeds recording of {}",
            samples.len()
        )));
    }
    let n_seg = needed / segment_len;
    if n_seg == 0 {
        return Err(EnvironmentError::RangeError(
            "window shorter than one segment".into(),
        ));
    }
    let bin = ((f_target_khz * 1000.0 * segment_len as f64 / fs_hz).round() as usize)
        .min(segment_len / 2);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(segment_len);
    let mut acc = 0.0;
    for s in 0..n_seg {
        let mut buf = samples[s * segment_len..(s + 1) * segment_len].to_vec();
        fft.process(&mut buf);
        acc += buf[bin].norm_sqr();
    }
    let density = acc / (n_seg as f64 * segment_len as f64 * fs_hz);
    let ssl_db = if density > 0.0 {
        (10.0 * density.log10() + cal_db).max(SSL_FLOOR_DB)
    } else {
        SSL_FLOOR_DB
    };
    Ok(SpectralObservation {
        ssl_db,
        freq_khz: f_target_khz,
        averaging_duration_s: n_seg as f64 * segment_len as f64 / fs_hz,
    })
}

/// Wind speed at 10 m height from a spectral observation.
pub fn wotan_u10(
    obs: &SpectralObservation,
    params: &WotanParams,
) -> Result<WotanEstimate, EnvironmentError> {
    if obs.freq_khz <= 0.0 || obs.freq_khz > 25.0 {
        return Err(EnvironmentError::FrequencyError(format!(
            "{} kHz outside the validated band (0, 25]",
            obs.freq_khz
        )));
    }
    if params.f0_khz <= 0.0 {
        return Err(EnvironmentError::RangeError(
            "reference frequency must be positive".into(),
        ));
    }
    let ssl0_db = obs.ssl_db
        + params.q_db_per_decade * (params.f0_khz / obs.freq_khz).log10()
        + params.beta_db;
    let p0 = 10f64.powf(ssl0_db / 20.0);
    let u10_ms = (p0 + 80.94) / 52.8;
    Ok(WotanEstimate {
        ssl_db: obs.ssl_db,
        ssl0_db,
        p0,
        u10_ms,
        valid: u10_ms <= 16.0,
    })
}

/// Contamination screening hook: the caller supplies the predicate deciding
/// whether an observation is free of shipping/rain/biologic interference;
/// rejected observations yield no estimate.
pub fn wotan_u10_screened(
    obs: &SpectralObservation,
    params: &WotanParams,
    is_clean: impl Fn(&SpectralObservation) -> bool,
) -> Result<Option<WotanEstimate>, EnvironmentError> {
    if !is_clean(obs) {
        return Ok(None);
    }
    wotan_u10(obs, params).map(Some)
}
