//! OFDM with unitary DFT scaling and cyclic prefix.

use super::ModemError;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// OFDM block layout. Symbols land on `active_carriers`; the rest are zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub n_carriers: usize,
    pub cp_length: usize,
    pub active_carriers: Vec<usize>,
}

impl OfdmConfig {
    pub fn new(
        n_carriers: usize,
        cp_length: usize,
        active_carriers: Vec<usize>,
    ) -> Result<Self, ModemError> {
        if n_carriers == 0 || cp_length >= n_carriers {
            return Err(ModemError::FramingError(format!(
                "cyclic prefix {cp_length} must be shorter than the block {n_carriers}"
            )));
        }
        if active_carriers.is_empty() || active_carriers.iter().any(|&c| c >= n_carriers) {
            return Err(ModemError::FramingError(
                "active carriers must be nonempty and within the block".into(),
            ));
        }
        Ok(Self {
            n_carriers,
            cp_length,
            active_carriers,
        })
    }

    /// All carriers active, no guard band.
    pub fn full(n_carriers: usize, cp_length: usize) -> Result<Self, ModemError> {
        Self::new(n_carriers, cp_length, (0..n_carriers).collect())
    }

    pub fn block_len(&self) -> usize {
        self.n_carriers + self.cp_length
    }
}

/// Place symbols on the active carriers, inverse-DFT each block with unitary
/// scaling, and prepend the cyclic prefix.
pub fn ofdm_modulate(symbols: &[Complex64], cfg: &OfdmConfig) -> Result<Vec<Complex64>, ModemError> {
    let per_block = cfg.active_carriers.len();
    if !symbols.len().is_multiple_of(per_block) {
        return Err(ModemError::FramingError(format!(
            "{} symbols do not fill blocks of {per_block} active carriers",
            symbols.len()
        )));
    }
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(cfg.n_carriers);
    let scale = 1.0 / (cfg.n_carriers as f64).sqrt();
    let mut out = Vec::with_capacity(symbols.len() / per_block * cfg.block_len());
    for block in symbols.chunks(per_block) {
        let mut spectrum = vec![Complex64::new(0.0, 0.0); cfg.n_carriers];
        for (&carrier, &s) in cfg.active_carriers.iter().zip(block) {
            spectrum[carrier] = s;
        }
        ifft.process(&mut spectrum);
        for s in spectrum.iter_mut() {
            *s *= scale;
        }
        out.extend_from_slice(&spectrum[cfg.n_carriers - cfg.cp_length..]);
        out.extend_from_slice(&spectrum);
    }
    Ok(out)
}

/// Strip the cyclic prefix, forward-DFT with unitary scaling, optionally
/// divide by per-carrier gains, and extract the active carriers.
pub fn ofdm_demodulate(
    samples: &[Complex64],
    cfg: &OfdmConfig,
    per_carrier_gains: Option<&[Complex64]>,
) -> Result<Vec<Complex64>, ModemError> {
    let block_len = cfg.block_len();
    if !samples.len().is_multiple_of(block_len) {
        return Err(ModemError::FramingError(format!(
            "{} samples do not frame into blocks of {block_len}",
            samples.len()
        )));
    }
    if let Some(g) = per_carrier_gains {
        if g.len() != cfg.active_carriers.len() {
            return Err(ModemError::LengthError {
                expected: cfg.active_carriers.len(),
                got: g.len(),
            });
        }
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(cfg.n_carriers);
    let scale = 1.0 / (cfg.n_carriers as f64).sqrt();
    let mut out = Vec::with_capacity(samples.len() / block_len * cfg.active_carriers.len());
    for block in samples.chunks(block_len) {
        let mut spectrum = block[cfg.cp_length..].to_vec();
        fft.process(&mut spectrum);
        for (i, &carrier) in cfg.active_carriers.iter().enumerate() {
            let mut s = spectrum[carrier] * scale;
            if let Some(g) = per_carrier_gains {
                s /= g[i];
            }
            out.push(s);
        }
    }
    Ok(out)
}
