//! Core library for reusing recorded acoustic-link experiment data.
//!
//! The toolkit covers the full post-experiment workflow:
//!
//! - [`bitlayer`]: FEC, interleaving, and XOR/XNOR whitening so a fixed
//!   transmitted bit stream can be re-read as the output of a different
//!   encoder.
//! - [`modem`]: Gray-labeled QAM constellations, bit/symbol mapping, OFDM,
//!   and the additive dither maps that re-interpret a transmitted symbol
//!   stream under a different constellation.
//! - [`channel`]: time-varying FIR propagation, channel matrices, noise
//!   models, and a tanh amplifier nonlinearity.
//! - [`equalize`]: closed-form ZF/MMSE decision feedback equalizers plus
//!   adaptive LMS/RLS variants with dither incorporation and an optional
//!   per-channel phase tracker.
//! - [`divergence`]: closed-form and empirical analysis of how far a
//!   dither-reproduced equalizer output deviates from a direct transmission
//!   (mean squared deviation and per-symbol Gaussian KL divergence).
//! - [`playback`]: direct channel playback simulation augmented with the
//!   residual prediction error of the channel estimator.
//! - [`environment`]: wind-speed estimation from ambient-noise spectral
//!   level.
//! - [`harness`]: scenario configs, seeded experiment runners, and CSV/JSON
//!   reports.

pub mod bitlayer;
pub mod channel;
pub mod divergence;
pub mod environment;
pub mod equalize;
pub mod harness;
pub mod modem;
pub mod playback;
pub mod seeds;

pub use num_complex::Complex64;
