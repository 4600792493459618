//! Constellations, bit/symbol mapping, OFDM, and dither-sequence design.
//!
//! Dither convention used everywhere in this crate: `m[n] = g[n] - f[n]`,
//! where `g` is the physically transmitted sequence and `f` the virtual one
//! being emulated. Consequently `f = g - m` at the receiver and the g-domain
//! feedback symbol for a decision `f~` is `f~ + m`.

mod constellation;
mod dither;
mod ofdm;

pub use constellation::{
    build_qam, map_symbols, slice, slice_index, Constellation, SymbolSequence,
};
pub use dither::{
    dither_downmap, dither_map_table, dither_random_nearest, dither_random_opposite,
    dither_upmap, dither_upmap_grouped, dither_worst_downmap, dither_worst_upmap, DitherMap,
    DitherSequence,
};
pub use ofdm::{ofdm_demodulate, ofdm_modulate, OfdmConfig};

use thiserror::Error;

/// Errors from mapping, dithering, and OFDM framing.
#[derive(Debug, Error, PartialEq)]
pub enum ModemError {
    #[error("unsupported constellation order: {0}")]
    UnsupportedOrder(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthError { expected: usize, got: usize },
    #[error("framing error: {0}")]
    FramingError(String),
    #[error("numeric error: {0}")]
    NumericError(String),
}
