//! Closed-form and empirical analysis of the deviation between a
//! dither-reproduced equalizer output and the direct-transmission reference.
//!
//! With the crate's dither convention (`m = g - f`, receiver forms
//! `f_hat = g_out - m`), the correct-decision deviation at the output is
//!
//! ```text
//! D[t] = q_f^* H m_vec - q_b^* m_fb - m[t]
//! ```
//!
//! whose per-symbol coefficients give the mean squared deviation
//! `E|D|^2 = E|m|^2 * C` with
//!
//! ```text
//! C = q_f^* H H^* q_f + q_b^* q_b + 1 - 2 Re{ (q_f^* H)_pc q_b + (q_f^* H)_{n0} }
//! ```
//!
//! where `pc` spans the feedback-cancelled postcursor columns. The same
//! coefficients yield the conditional output moments given a virtual symbol
//! `f = k`:
//!
//! ```text
//! mu2_k     = a k                      a = (q_f^* H)_{n0}, the cursor gain
//! mu1_k     = mu2_k + (a - 1) E[m|k]
//! sigma2^2  = sw^2 ||q_f||^2 + sf^2 (C - |a-1|^2)
//! sigma1_k^2 = sw^2 ||q_f||^2 + sg^2 C - |a-1|^2 (sg^2 - Var[m|k])
//! ```
//!
//! The bias factor `(a - 1)` multiplying the conditional dither mean is what
//! makes biased (MMSE) structures sensitive to unbalanced dithers while
//! unbiased (ZF) structures are immune. Per-symbol KL divergences use the
//! scalar Gaussian form with the total complex variance and `|mu1 - mu2|^2`;
//! this is half of the circularly-symmetric complex KL, a constant factor
//! that leaves every ordering and comparison unchanged.

use crate::channel::ChannelMatrix;
use crate::equalize::{equalized_row, DfeWeights, EqualizerTrace};
use crate::modem::{DitherMap, SymbolSequence};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DivergenceError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthError { expected: usize, got: usize },
    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),
    #[error("insufficient samples: needed {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("parameter error: {0}")]
    ParamError(String),
    #[error("equalizer error: {0}")]
    Equalizer(String),
}

impl From<crate::equalize::EqualizeError> for DivergenceError {
    fn from(e: crate::equalize::EqualizeError) -> Self {
        DivergenceError::Equalizer(e.to_string())
    }
}

/// The pieces of the deviation multiplier, kept for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationFactors {
    /// q_f^* H H^* q_f
    pub feedforward_energy: f64,
    /// q_b^* q_b
    pub feedback_energy: f64,
    /// Re{(q_f^* H)_pc q_b + (q_f^* H)_{n0}}
    pub cross: f64,
    /// Cursor gain a = (q_f^* H)_{n0}.
    pub cursor_gain: Complex64,
    /// ||q_f||^2
    pub qf_norm_sq: f64,
}

impl DeviationFactors {
    /// The deviation multiplier C.
    pub fn multiplier(&self) -> f64 {
        self.feedforward_energy + self.feedback_energy + 1.0 - 2.0 * self.cross
    }

    /// Multiplier with the quadratic terms damped by the amplifier factor
    /// (1 - 1/alpha^4).
    pub fn multiplier_nonlinear(&self, alpha: f64) -> f64 {
        let damp = 1.0 - 1.0 / alpha.powi(4);
        (self.feedforward_energy + self.feedback_energy) * damp + 1.0 - 2.0 * self.cross
    }
}

/// Decompose the deviation terms for a scalar equalizer over `h`.
pub fn deviation_factors(
    w: &DfeWeights,
    h: &ChannelMatrix,
) -> Result<DeviationFactors, DivergenceError> {
    let row = equalized_row(w, h)?;
    if w.n0 >= row.len() {
        return Err(DivergenceError::ParamError(format!(
            "decision delay {} outside response of {}",
            w.n0,
            row.len()
        )));
    }
    let feedforward_energy: f64 = row.iter().map(|r| r.norm_sqr()).sum();
    let feedback_energy: f64 = w.feedback.iter().map(|b| b.norm_sqr()).sum();
    let mut cross_c = row[w.n0];
    for (i, &fb) in w.feedback.iter().enumerate() {
        if let Some(&r) = row.get(w.n0 + 1 + i) {
            cross_c += r * fb;
        }
    }
    let qf_norm_sq: f64 = w.feedforward.iter().map(|q| q.norm_sqr()).sum();
    Ok(DeviationFactors {
        feedforward_energy,
        feedback_energy,
        cross: cross_c.re,
        cursor_gain: row[w.n0],
        qf_norm_sq,
    })
}

/// Closed-form mean squared deviation for a white dither of power
/// `dither_power`.
pub fn msd_closed_form(
    w: &DfeWeights,
    h: &ChannelMatrix,
    dither_power: f64,
) -> Result<f64, DivergenceError> {
    Ok(dither_power * deviation_factors(w, h)?.multiplier())
}

/// Closed-form deviation with the tanh amplifier in the loop; converges to
/// [`msd_closed_form`] as `alpha` grows.
pub fn msd_nonlinear(
    w: &DfeWeights,
    h: &ChannelMatrix,
    dither_power: f64,
    alpha: f64,
) -> Result<f64, DivergenceError> {
    if alpha <= 1.0 {
        return Err(DivergenceError::ParamError(format!(
            "alpha must exceed 1, got {alpha}"
        )));
    }
    Ok(dither_power * deviation_factors(w, h)?.multiplier_nonlinear(alpha))
}

/// Conditional Gaussian moments of the two outputs given each virtual symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolMoments {
    pub label: usize,
    pub symbol: Complex64,
    pub probability: f64,
    pub mu1: Complex64,
    pub mu2: Complex64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub e_mk: Complex64,
    pub e_gk: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMoments {
    pub per_symbol: Vec<SymbolMoments>,
    /// Deviation multiplier C (residual interference constant).
    pub c: f64,
    /// Equalizer bias a - 1.
    pub bias: Complex64,
    pub noise_variance: f64,
    pub qf_norm_sq: f64,
}

/// Conditional moments from raw per-symbol dither tables. `e_m2k` holds
/// E(|m|^2 | f = k).
#[allow(clippy::too_many_arguments)]
pub fn conditional_moments_raw(
    w: &DfeWeights,
    h: &ChannelMatrix,
    noise_variance: f64,
    f_points: &[Complex64],
    p_f: &[f64],
    e_mk: &[Complex64],
    e_m2k: &[f64],
) -> Result<ConditionalMoments, DivergenceError> {
    if p_f.len() != f_points.len() || e_mk.len() != f_points.len() || e_m2k.len() != f_points.len()
    {
        return Err(DivergenceError::LengthError {
            expected: f_points.len(),
            got: p_f.len().min(e_mk.len()).min(e_m2k.len()),
        });
    }
    let factors = deviation_factors(w, h)?;
    let c = factors.multiplier();
    let a = factors.cursor_gain;
    let bias = a - Complex64::new(1.0, 0.0);
    let bias_sq = bias.norm_sqr();

    let sigma_f_sq: f64 = f_points
        .iter()
        .zip(p_f)
        .map(|(k, &p)| p * k.norm_sqr())
        .sum();
    // E|g|^2 = sum_k p_k (|k|^2 + 2 Re{k* E_mk} + E[|m|^2 | k]).
    let sigma_g_sq: f64 = f_points
        .iter()
        .zip(p_f)
        .zip(e_mk.iter().zip(e_m2k))
        .map(|((k, &p), (em, &em2))| p * (k.norm_sqr() + 2.0 * (k.conj() * em).re + em2))
        .sum();

    let noise_term = noise_variance * factors.qf_norm_sq;
    let sigma2_sq = noise_term + sigma_f_sq * (c - bias_sq);
    let per_symbol = f_points
        .iter()
        .enumerate()
        .map(|(label, &k)| {
            let em = e_mk[label];
            let var_mk = (e_m2k[label] - em.norm_sqr()).max(0.0);
            let mu2 = a * k;
            SymbolMoments {
                label,
                symbol: k,
                probability: p_f[label],
                mu1: mu2 + bias * em,
                mu2,
                sigma1_sq: noise_term + sigma_g_sq * c - bias_sq * (sigma_g_sq - var_mk),
                sigma2_sq,
                e_mk: em,
                e_gk: k + em,
            }
        })
        .collect();
    Ok(ConditionalMoments {
        per_symbol,
        c,
        bias,
        noise_variance,
        qf_norm_sq: factors.qf_norm_sq,
    })
}

/// Conditional moments of the dithered and reference outputs under a dither
/// map, for a scalar equalizer with correct decisions.
pub fn conditional_moments(
    w: &DfeWeights,
    h: &ChannelMatrix,
    noise_variance: f64,
    map: &DitherMap,
) -> Result<ConditionalMoments, DivergenceError> {
    let n = map.f_constellation.order();
    let e_mk: Vec<Complex64> = (0..n).map(|k| map.cond_mean(k)).collect();
    let e_m2k: Vec<f64> = (0..n).map(|k| map.cond_abs2(k)).collect();
    conditional_moments_raw(
        w,
        h,
        noise_variance,
        map.f_constellation.points(),
        &map.p_f,
        &e_mk,
        &e_m2k,
    )
}

/// KL divergence between two scalar Gaussians N(mu1, s1^2) and N(mu2, s2^2)
/// parameterized by the total complex variance; `|mu1 - mu2|^2` enters the
/// mean term.
pub fn kl_gaussian(
    mu1: Complex64,
    sigma1_sq: f64,
    mu2: Complex64,
    sigma2_sq: f64,
) -> Result<f64, DivergenceError> {
    if sigma2_sq <= 0.0 || sigma1_sq <= 0.0 {
        return Err(DivergenceError::DegenerateDistribution(format!(
            "nonpositive variance ({sigma1_sq}, {sigma2_sq})"
        )));
    }
    Ok(0.5 * (sigma2_sq / sigma1_sq).ln()
        + (sigma1_sq + (mu1 - mu2).norm_sqr()) / (2.0 * sigma2_sq)
        - 0.5)
}

/// Prior-weighted KL objective over the conditional moments.
pub fn kl_objective(moms: &ConditionalMoments) -> Result<f64, DivergenceError> {
    let mut acc = 0.0;
    for sm in &moms.per_symbol {
        if sm.probability <= 0.0 {
            continue;
        }
        if sm.sigma2_sq <= 0.0 {
            return Err(DivergenceError::DegenerateDistribution(format!(
                "sigma2^2 = {} at supported symbol {}",
                sm.sigma2_sq, sm.label
            )));
        }
        acc += sm.probability * kl_gaussian(sm.mu1, sm.sigma1_sq, sm.mu2, sm.sigma2_sq)?;
    }
    Ok(acc)
}

/// Empirical deviation measurements between two aligned traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDivergence {
    pub msd: f64,
    pub kl: f64,
}

pub const DEFAULT_MIN_SAMPLES_PER_SYMBOL: usize = 50;

/// Empirical MSD and per-symbol Gaussian-fit KL between a dithered trace and
/// its reference, conditioned on the virtual transmitted symbols.
pub fn empirical_divergence(
    trace_dith: &EqualizerTrace,
    trace_ref: &EqualizerTrace,
    f_truth: &SymbolSequence,
    min_samples: usize,
) -> Result<EmpiricalDivergence, DivergenceError> {
    let n = trace_dith.soft.len();
    if trace_ref.soft.len() != n {
        return Err(DivergenceError::LengthError {
            expected: n,
            got: trace_ref.soft.len(),
        });
    }
    if f_truth.len() < n {
        return Err(DivergenceError::LengthError {
            expected: n,
            got: f_truth.len(),
        });
    }
    let msd = trace_dith
        .soft
        .iter()
        .zip(&trace_ref.soft)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        / n as f64;

    let order = f_truth.constellation.order();
    let labels = f_truth.labels();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); order];
    for t in 0..n {
        buckets[labels[t]].push(t);
    }
    let fit = |idx: &[usize], soft: &[Complex64]| -> (Complex64, f64) {
        let nk = idx.len() as f64;
        let mean = idx.iter().map(|&t| soft[t]).sum::<Complex64>() / nk;
        let var = idx
            .iter()
            .map(|&t| (soft[t] - mean).norm_sqr())
            .sum::<f64>()
            / (nk - 1.0);
        (mean, var)
    };
    let mut kl = 0.0;
    for bucket in buckets.iter() {
        if bucket.is_empty() {
            continue;
        }
        if bucket.len() < min_samples {
            return Err(DivergenceError::InsufficientSamples {
                needed: min_samples,
                got: bucket.len(),
            });
        }
        let (mu1, s1) = fit(bucket, &trace_dith.soft);
        let (mu2, s2) = fit(bucket, &trace_ref.soft);
        kl += (bucket.len() as f64 / n as f64) * kl_gaussian(mu1, s1, mu2, s2)?;
    }
    Ok(EmpiricalDivergence { msd, kl })
}

/// Kolmogorov-Smirnov distance of the standardized conditional outputs from
/// a standard normal; real and imaginary parts tested separately and the
/// larger distance returned.
pub fn gaussian_approx_diagnostic(
    trace: &EqualizerTrace,
    f_truth: &SymbolSequence,
    label: usize,
) -> Result<f64, DivergenceError> {
    const MIN_SAMPLES: usize = 200;
    let labels = f_truth.labels();
    let samples: Vec<Complex64> = trace
        .soft
        .iter()
        .zip(&labels)
        .filter(|&(_, &l)| l == label)
        .map(|(&s, _)| s)
        .collect();
    if samples.len() < MIN_SAMPLES {
        return Err(DivergenceError::InsufficientSamples {
            needed: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let ks_re = ks_standardized(samples.iter().map(|s| s.re).collect())?;
    let ks_im = ks_standardized(samples.iter().map(|s| s.im).collect())?;
    Ok(ks_re.max(ks_im))
}

fn ks_standardized(mut xs: Vec<f64>) -> Result<f64, DivergenceError> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 {
        return Err(DivergenceError::DegenerateDistribution(
            "zero variance in conditional samples".into(),
        ));
    }
    let std = var.sqrt();
    for x in xs.iter_mut() {
        *x = (*x - mean) / std;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let phi = normal.cdf(x);
        let hi = (i + 1) as f64 / n - phi;
        let lo = phi - i as f64 / n;
        d = d.max(hi.max(lo));
    }
    Ok(d)
}
