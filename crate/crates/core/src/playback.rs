//! Direct channel playback with residual-prediction-error augmentation.
//!
//! A probe transmission `g` through the real channel yields `y`; a recursive
//! or sliding least-squares estimator tracks the time-varying impulse
//! response. The residual prediction error `e[n|n-1] = y[n] - y_hat[n|n-1]`
//! (prediction from the estimate one step behind) captures exactly what the
//! estimator misses: at high SNR it is dominated by channel estimation error
//! rather than observation noise. Fitting its spatial-temporal correlation
//! and re-injecting matched Gaussian noise into replayed test signals keeps
//! playback predictions honest on channels that vary too fast to estimate.
//!
//! Tap convention: predictions use `y_hat[n] = sum_l h_hat[n-1][l] g[n-l]`,
//! the same orientation as [`crate::channel::propagate`], so estimates can be
//! compared and exported interchangeably with true tap trajectories.

use crate::channel::{NoiseModel, TimeVaryingChannel};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlaybackError {
    #[error("singular fit: {0}")]
    SingularFit(String),
    #[error("insufficient samples: needed {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("range error: {0}")]
    RangeError(String),
    #[error("model error: {0}")]
    ModelError(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthError { expected: usize, got: usize },
}

/// Estimator window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorWindow {
    /// Plain least squares over the trailing `len` samples.
    Sliding { len: usize },
    /// Exponentially weighted recursive least squares.
    Exponential { lambda: f64 },
}

/// Estimated tap trajectories, one vector per receiver per time index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvirEstimate {
    /// taps[k][n][l]: estimate after processing sample n.
    pub taps: Vec<Vec<Vec<Complex64>>>,
    pub delay_spread: usize,
    /// First time index with a trustworthy estimate.
    pub warmup: usize,
    pub window: EstimatorWindow,
}

impl TvirEstimate {
    pub fn n_receivers(&self) -> usize {
        self.taps.len()
    }

    pub fn span(&self) -> usize {
        self.taps.first().map(|t| t.len()).unwrap_or(0)
    }

    /// Wrap true channel taps as an exact estimate (diagnostics and
    /// controlled replay experiments).
    pub fn from_channel(
        ch: &TimeVaryingChannel,
        span: usize,
    ) -> Result<Self, PlaybackError> {
        let mut taps = Vec::with_capacity(ch.n_receivers());
        for k in 0..ch.n_receivers() {
            let mut rx = Vec::with_capacity(span);
            for n in 0..span {
                rx.push(
                    ch.taps_at(k, n)
                        .map_err(|e| PlaybackError::RangeError(e.to_string()))?
                        .to_vec(),
                );
            }
            taps.push(rx);
        }
        Ok(Self {
            taps,
            delay_spread: ch.delay_spread(),
            warmup: 0,
            window: EstimatorWindow::Sliding { len: 0 },
        })
    }

    /// Export in the channel CSV tap format (n,k,l,re,im).
    pub fn export_csv(&self) -> String {
        let mut out = String::from("n,k,l,re,im\n");
        for (k, rx) in self.taps.iter().enumerate() {
            for (n, taps) in rx.iter().enumerate() {
                for (l, h) in taps.iter().enumerate() {
                    out.push_str(&format!("{n},{k},{l},{},{}\n", h.re, h.im));
                }
            }
        }
        out
    }
}

fn regressor(g: &[Complex64], n: usize, l: usize) -> DVector<Complex64> {
    DVector::from_fn(l, |i, _| {
        if n >= i {
            g[n - i]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Least-squares TVIR estimation from a known probe.
pub fn estimate_tvir(
    y: &[Vec<Complex64>],
    g: &[Complex64],
    delay_spread: usize,
    window: EstimatorWindow,
) -> Result<TvirEstimate, PlaybackError> {
    if delay_spread == 0 {
        return Err(PlaybackError::RangeError("zero delay spread".into()));
    }
    let n_rx = y.len();
    if n_rx == 0 {
        return Err(PlaybackError::RangeError("no receivers".into()));
    }
    let n = y[0].len().min(g.len());
    let warmup = match window {
        EstimatorWindow::Sliding { len } => {
            if len < delay_spread {
                return Err(PlaybackError::RangeError(format!(
                    "window {len} shorter than delay spread {delay_spread}"
                )));
            }
            len
        }
        EstimatorWindow::Exponential { lambda } => {
            if lambda.is_nan() || lambda <= 0.0 || lambda > 1.0 {
                return Err(PlaybackError::RangeError(format!(
                    "forgetting factor {lambda} outside (0, 1]"
                )));
            }
            10 * delay_spread + 20
        }
    };
    if n <= warmup + 1 {
        return Err(PlaybackError::InsufficientSamples {
            needed: warmup + 2,
            got: n,
        });
    }

    let l = delay_spread;
    let mut taps = Vec::with_capacity(n_rx);
    match window {
        EstimatorWindow::Exponential { lambda } => {
            for yk in y.iter() {
                // RLS on w with model y = w^H u; stored taps are conj(w) so
                // that y_hat = sum_l h[l] g[n-l].
                let mut w = DVector::from_element(l, Complex64::new(0.0, 0.0));
                let mut p = DMatrix::from_diagonal_element(l, l, Complex64::new(100.0, 0.0));
                let mut rx = Vec::with_capacity(n);
                for t in 0..n {
                    let u = regressor(g, t, l);
                    let pu = &p * &u;
                    let denom = lambda + (u.adjoint() * &pu)[(0, 0)].re;
                    if !(denom.is_finite() && denom > 0.0) {
                        return Err(PlaybackError::SingularFit(format!(
                            "covariance blow-up at sample {t}"
                        )));
                    }
                    let gain = pu.map(|x| x / denom);
                    let err = yk[t] - (w.adjoint() * &u)[(0, 0)];
                    for i in 0..l {
                        w[i] += gain[i] * err.conj();
                    }
                    // P <- (P - k k^H denom) / lambda keeps P Hermitian.
                    let outer = &gain * gain.adjoint() * Complex64::new(denom, 0.0);
                    p -= outer;
                    p /= Complex64::new(lambda, 0.0);
                    rx.push(w.iter().map(|x| x.conj()).collect::<Vec<_>>());
                }
                taps.push(rx);
            }
        }
        EstimatorWindow::Sliding { len } => {
            for yk in y.iter() {
                let mut gram = DMatrix::from_element(l, l, Complex64::new(0.0, 0.0));
                let mut rhs = DVector::from_element(l, Complex64::new(0.0, 0.0));
                let mut rx: Vec<Vec<Complex64>> = Vec::with_capacity(n);
                for t in 0..n {
                    let u = regressor(g, t, l);
                    let uc = u.map(|x| x.conj());
                    gram += &uc * u.transpose();
                    rhs += &uc * yk[t];
                    if t >= len {
                        let old = regressor(g, t - len, l);
                        let oldc = old.map(|x| x.conj());
                        gram -= &oldc * old.transpose();
                        rhs -= &oldc * yk[t - len];
                    }
                    if t + 1 >= len {
                        let chol = nalgebra::Cholesky::new(gram.clone()).ok_or_else(|| {
                            PlaybackError::SingularFit(format!(
                                "rank-deficient regressor window ending at sample {t}"
                            ))
                        })?;
                        // A zero pivot slips through as an exact 0.0; treat a
                        // collapsed pivot ratio as rank deficiency too.
                        let diag: Vec<f64> = (0..l).map(|i| chol.l_dirty()[(i, i)].re).collect();
                        let dmax = diag.iter().cloned().fold(0.0f64, f64::max);
                        let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
                        if !(dmin > 1e-7 * dmax) {
                            return Err(PlaybackError::SingularFit(format!(
                                "rank-deficient regressor window ending at sample {t}"
                            )));
                        }
                        rx.push(chol.solve(&rhs).iter().copied().collect());
                    } else {
                        rx.push(vec![Complex64::new(0.0, 0.0); l]);
                    }
                }
                taps.push(rx);
            }
        }
    }
    Ok(TvirEstimate {
        taps,
        delay_spread: l,
        warmup,
        window,
    })
}

/// Residual prediction error series with its a-priori predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpeSeries {
    /// First absolute time index covered.
    pub start: usize,
    /// e[k][i] = y_k[start+i] - y_hat_k[start+i | start+i-1].
    pub e: Vec<Vec<Complex64>>,
    /// The a-priori predictions aligned with `e`.
    pub y_hat: Vec<Vec<Complex64>>,
}

impl RpeSeries {
    pub fn len(&self) -> usize {
        self.e.first().map(|e| e.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mean power per receiver.
    pub fn mean_power(&self) -> Vec<f64> {
        self.e
            .iter()
            .map(|ek| ek.iter().map(|x| x.norm_sqr()).sum::<f64>() / ek.len().max(1) as f64)
            .collect()
    }

    /// CSV export (n,k,re,im).
    pub fn export_csv(&self) -> String {
        let mut out = String::from("n,k,re,im\n");
        for (k, ek) in self.e.iter().enumerate() {
            for (i, v) in ek.iter().enumerate() {
                out.push_str(&format!("{},{k},{},{}\n", self.start + i, v.re, v.im));
            }
        }
        out
    }
}

/// Split `value` into (part, rest) with part + rest == value exactly in f64
/// and part within one ulp of `raw`.
fn ulp_step(x: f64, up: bool) -> f64 {
    if x == 0.0 {
        return if up { f64::MIN_POSITIVE } else { -f64::MIN_POSITIVE };
    }
    let bits = x.to_bits();
    let next = if (x > 0.0) == up { bits + 1 } else { bits - 1 };
    f64::from_bits(next)
}

fn exact_split(value: f64, raw: f64) -> (f64, f64) {
    // e = fl(value - part) puts part + e within half an ulp of value; only a
    // rounding tie can land on the neighbor, and a one-ulp nudge of either
    // term resolves it.
    let mut part = raw;
    for _ in 0..4 {
        let e = value - part;
        if part + e == value {
            return (part, e);
        }
        for cand in [ulp_step(e, true), ulp_step(e, false)] {
            if part + cand == value {
                return (part, cand);
            }
        }
        part = value - e;
        if part + e == value {
            return (part, e);
        }
        part = ulp_step(part, e > 0.0);
    }
    (value, 0.0)
}

/// Residual prediction error: the received signal minus its prediction from
/// the one-step-behind estimate. The stored prediction is the exact f64
/// complement of the residual (at most one ulp from the raw linear
/// prediction per component), so `y = y_hat + e` holds bit-exactly.
pub fn compute_rpe(
    y: &[Vec<Complex64>],
    g: &[Complex64],
    tvir: &TvirEstimate,
) -> Result<RpeSeries, PlaybackError> {
    let n_rx = y.len();
    if n_rx != tvir.n_receivers() {
        return Err(PlaybackError::LengthError {
            expected: tvir.n_receivers(),
            got: n_rx,
        });
    }
    let n = y[0].len().min(g.len()).min(tvir.span());
    let start = tvir.warmup + 1;
    if start >= n {
        return Err(PlaybackError::RangeError(format!(
            "warm-up {start} leaves no samples of {n}"
        )));
    }
    let l = tvir.delay_spread;
    let mut e = vec![Vec::with_capacity(n - start); n_rx];
    let mut y_hat = vec![Vec::with_capacity(n - start); n_rx];
    for k in 0..n_rx {
        for t in start..n {
            let h = &tvir.taps[k][t - 1];
            let mut pred = Complex64::new(0.0, 0.0);
            for (li, &hl) in h.iter().enumerate().take(l) {
                if t >= li {
                    pred += hl * g[t - li];
                }
            }
            let (pred_re, e_re) = exact_split(y[k][t].re, pred.re);
            let (pred_im, e_im) = exact_split(y[k][t].im, pred.im);
            y_hat[k].push(Complex64::new(pred_re, pred_im));
            e[k].push(Complex64::new(e_re, e_im));
        }
    }
    Ok(RpeSeries { start, e, y_hat })
}

/// Spatial-temporal second-order model of the residual prediction error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpeModel {
    /// r[m][i][j] = E[e_i[n] e_j[n-m]^*] for lags m = 0..=max_lag.
    pub r: Vec<Vec<Vec<Complex64>>>,
    /// Probe symbol variance during estimation.
    pub sigma_g_sq: f64,
    pub n_samples: usize,
}

impl RpeModel {
    pub fn n_receivers(&self) -> usize {
        self.r.first().map(|m| m.len()).unwrap_or(0)
    }

    pub fn max_lag(&self) -> usize {
        self.r.len().saturating_sub(1)
    }

    pub fn r_mat(&self, lag: usize) -> DMatrix<Complex64> {
        let k = self.n_receivers();
        DMatrix::from_fn(k, k, |i, j| self.r[lag][i][j])
    }

    /// tr R[0]: total RPE power across receivers.
    pub fn total_power(&self) -> f64 {
        (0..self.n_receivers()).map(|i| self.r[0][i][i].re).sum()
    }
}

/// Fit lagged spatial-temporal correlation matrices to an RPE series. Biased
/// (1/N) normalization keeps the stacked block-Toeplitz covariance positive
/// semidefinite; R[0] is Hermitian-symmetrized.
pub fn fit_rpe_model(
    rpe: &RpeSeries,
    max_lag: usize,
    sigma_g_sq: f64,
) -> Result<RpeModel, PlaybackError> {
    let k = rpe.e.len();
    let n = rpe.len();
    if n < 8 * (max_lag + 1) {
        return Err(PlaybackError::InsufficientSamples {
            needed: 8 * (max_lag + 1),
            got: n,
        });
    }
    let mut r = Vec::with_capacity(max_lag + 1);
    for m in 0..=max_lag {
        let mut rm = vec![vec![Complex64::new(0.0, 0.0); k]; k];
        for (i, row) in rm.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in m..n {
                    acc += rpe.e[i][t] * rpe.e[j][t - m].conj();
                }
                *v = acc / n as f64;
            }
        }
        if m == 0 {
            // Hermitian symmetrization.
            for i in 0..k {
                for j in 0..i {
                    let avg = (rm[i][j] + rm[j][i].conj()) * 0.5;
                    rm[i][j] = avg;
                    rm[j][i] = avg.conj();
                }
                rm[i][i] = Complex64::new(rm[i][i].re, 0.0);
            }
        }
        r.push(rm);
    }
    Ok(RpeModel {
        r,
        sigma_g_sq,
        n_samples: n,
    })
}

/// Draw a stationary complex normal series matching the model's lagged
/// correlations scaled by `sigma_tilde_sq / sigma_g_sq`. The generator fits a
/// vector autoregression of order `max_lag` to the target lags (block
/// Yule-Walker) and filters white circular Gaussian noise through it,
/// discarding a warm-up transient.
pub fn gen_rpe_noise<R: Rng + ?Sized>(
    model: &RpeModel,
    length: usize,
    sigma_tilde_sq: f64,
    rng: &mut R,
) -> Result<Vec<Vec<Complex64>>, PlaybackError> {
    let k = model.n_receivers();
    let p = model.max_lag();
    if length <= p {
        return Err(PlaybackError::RangeError(format!(
            "length {length} not above max lag {p}"
        )));
    }
    if model.sigma_g_sq <= 0.0 {
        return Err(PlaybackError::ModelError("nonpositive probe variance".into()));
    }
    let scale = sigma_tilde_sq / model.sigma_g_sq;

    // Yule-Walker: X G = B with G[(i),(j)] = R[j-i], B = [R[1] .. R[p]].
    let r_signed = |m: i64| -> DMatrix<Complex64> {
        if m >= 0 {
            model.r_mat(m as usize)
        } else {
            model.r_mat((-m) as usize).adjoint()
        }
    };
    let coeffs: Vec<DMatrix<Complex64>> = if p == 0 {
        Vec::new()
    } else {
        let mut g = DMatrix::from_element(p * k, p * k, Complex64::new(0.0, 0.0));
        for bi in 0..p {
            for bj in 0..p {
                let block = r_signed(bj as i64 - bi as i64);
                g.view_mut((bi * k, bj * k), (k, k)).copy_from(&block);
            }
        }
        // Numerical floor keeps near-singular targets solvable.
        let jitter = 1e-10 * g.diagonal().iter().map(|d| d.re).sum::<f64>().max(1e-300);
        for i in 0..p * k {
            g[(i, i)] += Complex64::new(jitter, 0.0);
        }
        let mut b = DMatrix::from_element(k, p * k, Complex64::new(0.0, 0.0));
        for m in 1..=p {
            b.view_mut((0, (m - 1) * k), (k, k)).copy_from(&model.r_mat(m));
        }
        let g_inv = g
            .try_inverse()
            .ok_or_else(|| PlaybackError::ModelError("Yule-Walker system singular".into()))?;
        let x = b * g_inv;
        (0..p)
            .map(|i| x.view((0, i * k), (k, k)).into_owned())
            .collect()
    };

    // Innovation covariance and its Cholesky factor.
    let mut sigma = model.r_mat(0);
    for (i, a) in coeffs.iter().enumerate() {
        sigma -= a * model.r_mat(i + 1).adjoint();
    }
    sigma *= Complex64::new(scale, 0.0);
    // Hermitian cleanup then factor, with a jitter ladder.
    let sym = (sigma.clone() + sigma.adjoint()) * Complex64::new(0.5, 0.0);
    let trace = sym.diagonal().iter().map(|d| d.re.abs()).sum::<f64>().max(1e-300);
    let mut chol = None;
    for exp in [0.0, 1e-12, 1e-9, 1e-6] {
        let mut trial = sym.clone();
        for i in 0..k {
            trial[(i, i)] += Complex64::new(exp * trace, 0.0);
        }
        if let Some(c) = nalgebra::Cholesky::new(trial) {
            chol = Some(c);
            break;
        }
    }
    let chol = chol.ok_or_else(|| {
        PlaybackError::ModelError("innovation covariance not positive semidefinite".into())
    })?;
    let lfac = chol.l();

    let warm = 20 * (p + 1) + 100;
    let total = warm + length;
    let mut hist: Vec<DVector<Complex64>> = Vec::with_capacity(total);
    for t in 0..total {
        let xi = DVector::from_fn(k, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im) / 2f64.sqrt()
        });
        let mut v = &lfac * xi;
        for (i, a) in coeffs.iter().enumerate() {
            if t > i {
                v += a * &hist[t - 1 - i];
            }
        }
        hist.push(v);
    }
    let mut out = vec![Vec::with_capacity(length); k];
    for v in hist.into_iter().skip(warm) {
        for (i, ch) in out.iter_mut().enumerate() {
            ch.push(v[i]);
        }
    }
    Ok(out)
}

/// Ambient noise source for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmbientNoise {
    Off,
    Synthetic { model: NoiseModel },
    /// Recorded samples, one series per receiver; must cover the replay span.
    Recorded { samples: Vec<Vec<Complex64>> },
}

/// Replay configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackConfig {
    /// Variance of the test signal to be replayed.
    pub test_signal_variance: f64,
    pub ambient: AmbientNoise,
    /// Add the RPE term when a model is supplied.
    pub rpe: bool,
    pub seed: u64,
}

/// Simulated received series: the test signal through the a-priori channel
/// estimate, plus (optionally) RPE-matched noise, plus ambient noise.
pub fn replay<R: Rng + ?Sized>(
    g_test: &[Complex64],
    tvir: &TvirEstimate,
    rpe_model: Option<&RpeModel>,
    cfg: &PlaybackConfig,
    rng: &mut R,
) -> Result<Vec<Vec<Complex64>>, PlaybackError> {
    if cfg.test_signal_variance <= 0.0 {
        return Err(PlaybackError::ModelError(
            "test signal variance must be positive".into(),
        ));
    }
    let k = tvir.n_receivers();
    let l = tvir.delay_spread;
    let n_out = g_test.len() + l - 1;
    if tvir.span() < n_out {
        return Err(PlaybackError::RangeError(format!(
            "estimate spans {} < required {n_out}",
            tvir.span()
        )));
    }
    let rpe_noise = match (cfg.rpe, rpe_model) {
        (true, Some(model)) => Some(gen_rpe_noise(
            model,
            n_out,
            cfg.test_signal_variance,
            rng,
        )?),
        (true, None) => {
            return Err(PlaybackError::ModelError(
                "rpe requested but no model supplied".into(),
            ))
        }
        _ => None,
    };
    if let AmbientNoise::Recorded { samples } = &cfg.ambient {
        if samples.len() != k || samples.iter().any(|s| s.len() < n_out) {
            return Err(PlaybackError::RangeError(
                "recorded ambient noise does not cover the replay span".into(),
            ));
        }
    }
    let mut out = Vec::with_capacity(k);
    for ki in 0..k {
        let mut yk = Vec::with_capacity(n_out);
        for n in 0..n_out {
            let h = &tvir.taps[ki][n.saturating_sub(1)];
            let mut acc = Complex64::new(0.0, 0.0);
            for (li, &hl) in h.iter().enumerate().take(l) {
                if n >= li && n - li < g_test.len() {
                    acc += hl * g_test[n - li];
                }
            }
            if let Some(rn) = &rpe_noise {
                acc += rn[ki][n];
            }
            match &cfg.ambient {
                AmbientNoise::Off => {}
                AmbientNoise::Synthetic { model } => acc += model.sample(rng),
                AmbientNoise::Recorded { samples } => acc += samples[ki][n],
            }
            yk.push(acc);
        }
        out.push(yk);
    }
    Ok(out)
}

/// Windowed mean power in dB over non-overlapping blocks.
pub fn power_trace(series: &[Complex64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    series
        .chunks(window)
        .filter(|c| c.len() == window)
        .map(|c| {
            let p = c.iter().map(|x| x.norm_sqr()).sum::<f64>() / window as f64;
            10.0 * p.max(1e-30).log10()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{propagate, synth_channel, ChannelSpec, NoiseModel, TimeVaryingChannel};
    use crate::modem::{build_qam, SymbolSequence};
    use crate::seeds::rng_for;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bpsk_probe(n: usize, seed: u64) -> Vec<Complex64> {
        let bpsk = build_qam(1).unwrap();
        let mut rng = rng_for(seed, &[81]);
        SymbolSequence::random(n, &bpsk, &mut rng).symbols
    }

    #[test]
    fn sliding_ls_recovers_static_channel_exactly() {
        let ch = TimeVaryingChannel::from_static(vec![c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
        let g = bpsk_probe(600, 1);
        let mut rng = rng_for(1, &[82]);
        let y = propagate(&g, &ch, &NoiseModel::off(), &mut rng).unwrap();
        let est = estimate_tvir(&y, &g, 2, EstimatorWindow::Sliding { len: 40 }).unwrap();
        for n in est.warmup..est.span() {
            let h = &est.taps[0][n];
            assert!((h[0] - c(1.0, 0.0)).norm() < 1e-6, "n={n} h0={}", h[0]);
            assert!((h[1] - c(0.5, 0.0)).norm() < 1e-6);
        }
        // The exponential window converges too, a little less tightly.
        let est = estimate_tvir(&y, &g, 2, EstimatorWindow::Exponential { lambda: 0.999 })
            .unwrap();
        let h = est.taps[0].last().unwrap();
        assert!((h[0] - c(1.0, 0.0)).norm() < 1e-3);
        assert!((h[1] - c(0.5, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn constant_probe_is_singular() {
        let ch = TimeVaryingChannel::from_static(vec![c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
        let g = vec![c(1.0, 0.0); 300];
        let mut rng = rng_for(2, &[82]);
        let y = propagate(&g, &ch, &NoiseModel::off(), &mut rng).unwrap();
        assert!(matches!(
            estimate_tvir(&y, &g, 2, EstimatorWindow::Sliding { len: 40 }),
            Err(PlaybackError::SingularFit(_))
        ));
    }

    #[test]
    fn tracking_error_grows_with_walk_rate() {
        let mut errs = Vec::new();
        for (i, sigma) in [0.002, 0.01].into_iter().enumerate() {
            let spec = ChannelSpec::RandomWalk {
                initial: vec![vec![c(1.0, 0.0), c(0.4, -0.2)]],
                step_sigma: sigma,
                seed: 33 + i as u64,
            };
            let n = 6000;
            let ch = synth_channel(&spec, n + 2).unwrap();
            let g = bpsk_probe(n, 3 + i as u64);
            let mut rng = rng_for(3, &[83, i as u64]);
            let y = propagate(&g, &ch, &NoiseModel::off(), &mut rng).unwrap();
            let est =
                estimate_tvir(&y, &g, 2, EstimatorWindow::Exponential { lambda: 0.99 }).unwrap();
            let mut acc = 0.0;
            let mut count = 0;
            for t in est.warmup..n {
                let truth = ch.taps_at(0, t).unwrap();
                for l in 0..2 {
                    acc += (est.taps[0][t][l] - truth[l]).norm_sqr();
                }
                count += 1;
            }
            errs.push(acc / count as f64);
        }
        assert!(errs[1] > 2.0 * errs[0], "tracking errors {errs:?}");
    }

    #[test]
    fn rpe_decomposition_is_exact_and_noise_dominated_when_static() {
        let ch = TimeVaryingChannel::from_static(vec![c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
        let n = 4000;
        let g = bpsk_probe(n, 4);
        let noise_var = 0.01;
        let mut rng = rng_for(4, &[84]);
        let y = propagate(&g, &ch, &NoiseModel::awgn(noise_var), &mut rng).unwrap();
        let est = estimate_tvir(&y, &g, 2, EstimatorWindow::Sliding { len: 200 }).unwrap();
        let rpe = compute_rpe(&y, &g, &est).unwrap();

        // Bit-exact reconstruction y = y_hat + e.
        for (i, (e, yh)) in rpe.e[0].iter().zip(&rpe.y_hat[0]).enumerate() {
            let t = rpe.start + i;
            assert_eq!(yh + e, y[0][t], "decomposition at t={t}");
        }
        // Static channel, good estimate: residual power tracks the noise.
        let p = rpe.mean_power()[0];
        assert!((p / noise_var - 1.0).abs() < 0.15, "rpe power {p}");

        // Exact estimate, no noise: residual identically zero.
        let mut rng = rng_for(4, &[85]);
        let y0 = propagate(&g, &ch, &NoiseModel::off(), &mut rng).unwrap();
        let exact = TvirEstimate::from_channel(&ch, y0[0].len()).unwrap();
        let rpe0 = compute_rpe(&y0, &g, &exact).unwrap();
        assert!(rpe0.mean_power()[0] < 1e-25);
    }

    #[test]
    fn rpe_power_reflects_channel_error_when_noiseless() {
        let spec = ChannelSpec::RandomWalk {
            initial: vec![vec![c(1.0, 0.0), c(0.4, 0.0)]],
            step_sigma: 0.005,
            seed: 5,
        };
        let n = 8000;
        let ch = synth_channel(&spec, n + 2).unwrap();
        let g = bpsk_probe(n, 5);
        let mut rng = rng_for(5, &[86]);
        let y = propagate(&g, &ch, &NoiseModel::off(), &mut rng).unwrap();
        let est =
            estimate_tvir(&y, &g, 2, EstimatorWindow::Exponential { lambda: 0.99 }).unwrap();
        let rpe = compute_rpe(&y, &g, &est).unwrap();
        let p = rpe.mean_power()[0];
        assert!(p > 1e-5, "channel-error induced residual expected, got {p}");

        // Monte-Carlo cross-check: residual power equals sigma_g^2 * E||eps||^2
        // within tolerance (unit-power BPSK probe).
        let mut eps_acc = 0.0;
        let mut count = 0usize;
        for i in 0..rpe.len() {
            let t = rpe.start + i;
            let truth = ch.taps_at(0, t).unwrap();
            for l in 0..2 {
                eps_acc += (truth[l] - est.taps[0][t - 1][l]).norm_sqr();
            }
            count += 1;
        }
        let expect = eps_acc / count as f64;
        assert!(
            (p / expect - 1.0).abs() < 0.2,
            "rpe power {p} vs channel-error prediction {expect}"
        );
    }

    #[test]
    fn fit_rpe_model_white_and_ar1() {
        // White unit-variance synthetic residual, K = 1.
        let n = 40_000;
        let mut rng = rng_for(6, &[87]);
        let mut white = Vec::with_capacity(n);
        for _ in 0..n {
            let re: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            let im: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            white.push(c(re, im) / 2f64.sqrt());
        }
        let series = RpeSeries {
            start: 0,
            y_hat: vec![vec![c(0.0, 0.0); n]],
            e: vec![white.clone()],
        };
        let model = fit_rpe_model(&series, 4, 1.0).unwrap();
        assert!((model.r[0][0][0].re - 1.0).abs() < 4.0 / (n as f64).sqrt() * 2.0);
        for m in 1..=4 {
            assert!(model.r[m][0][0].norm() < 4.0 / (n as f64).sqrt());
        }

        // AR(1) with coefficient rho: lag ratios follow rho^m.
        let rho = 0.8;
        let mut e = Vec::with_capacity(n);
        let mut prev = c(0.0, 0.0);
        for w in &white {
            let v = prev * rho + w * (1.0 - rho * rho).sqrt();
            e.push(v);
            prev = v;
        }
        let series = RpeSeries {
            start: 0,
            y_hat: vec![vec![c(0.0, 0.0); n]],
            e: vec![e],
        };
        let model = fit_rpe_model(&series, 4, 1.0).unwrap();
        for m in 1..=4 {
            let ratio = (model.r[m][0][0] / model.r[0][0][0]).re;
            assert!(
                (ratio - rho.powi(m as i32)).abs() < 0.05,
                "lag {m}: {ratio} vs {}",
                rho.powi(m as i32)
            );
        }

        // K = 2 with identical channels: off-diagonal matches diagonal.
        let series = RpeSeries {
            start: 0,
            y_hat: vec![vec![c(0.0, 0.0); n]; 2],
            e: vec![white.clone(), white],
        };
        let model = fit_rpe_model(&series, 1, 1.0).unwrap();
        let d = model.r[0][0][0].re;
        let o = model.r[0][0][1];
        assert!((o.re - d).abs() < 0.05 * d && o.im.abs() < 0.05 * d);
    }

    #[test]
    fn generated_noise_matches_target_statistics() {
        // White target, unit scale.
        let k = 2;
        let model = RpeModel {
            r: vec![
                vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]],
                vec![vec![c(0.0, 0.0); k]; k],
            ],
            sigma_g_sq: 1.0,
            n_samples: 1000,
        };
        let n = 60_000;
        let mut rng = rng_for(7, &[88]);
        let e = gen_rpe_noise(&model, n, 1.0, &mut rng).unwrap();
        let tol = 4.0 / (n as f64).sqrt() * 1.5;
        for i in 0..k {
            let p = e[i].iter().map(|x| x.norm_sqr()).sum::<f64>() / n as f64;
            assert!((p - 1.0).abs() < tol, "power {p}");
            let cross: Complex64 = e[0]
                .iter()
                .zip(&e[1])
                .map(|(a, b)| a * b.conj())
                .sum::<Complex64>()
                / n as f64;
            assert!(cross.norm() < tol, "cross {cross}");
        }
        // Scaling: four times the test-signal variance, four times the power.
        let mut rng = rng_for(7, &[89]);
        let e4 = gen_rpe_noise(&model, n, 4.0, &mut rng).unwrap();
        let p4 = e4[0].iter().map(|x| x.norm_sqr()).sum::<f64>() / n as f64;
        assert!((p4 / 4.0 - 1.0).abs() < 0.1);

        // AR(1) target: generated autocorrelation follows rho^m.
        let rho: f64 = 0.7;
        let model = RpeModel {
            r: (0..4)
                .map(|m| vec![vec![c(rho.powi(m), 0.0)]])
                .collect(),
            sigma_g_sq: 1.0,
            n_samples: 1000,
        };
        let mut rng = rng_for(7, &[90]);
        let e = gen_rpe_noise(&model, n, 1.0, &mut rng).unwrap();
        let series = RpeSeries {
            start: 0,
            y_hat: vec![vec![c(0.0, 0.0); n]],
            e,
        };
        let refit = fit_rpe_model(&series, 3, 1.0).unwrap();
        for m in 0..=3 {
            let got = refit.r[m][0][0].re;
            assert!(
                (got - rho.powi(m as i32)).abs() < 0.05,
                "lag {m}: {got} vs {}",
                rho.powi(m as i32)
            );
        }
    }

    #[test]
    fn replay_with_exact_static_estimate_reproduces_truth() {
        let ch = TimeVaryingChannel::from_static(vec![c(1.0, 0.0), c(0.5, 0.0), c(0.2, 0.1)])
            .unwrap();
        let g = bpsk_probe(500, 8);
        let mut rng = rng_for(8, &[91]);
        let truth = propagate(&g, &ch, &NoiseModel::off(), &mut rng).unwrap();
        let exact = TvirEstimate::from_channel(&ch, truth[0].len()).unwrap();
        let cfg = PlaybackConfig {
            test_signal_variance: 1.0,
            ambient: AmbientNoise::Off,
            rpe: false,
            seed: 0,
        };
        let sim = replay(&g, &exact, None, &cfg, &mut rng).unwrap();
        for (a, b) in truth[0].iter().zip(&sim[0]) {
            assert!((a - b).norm() < 1e-12);
        }

        // Linearity in the test signal with rpe off.
        let g2: Vec<Complex64> = g.iter().map(|x| x * c(2.0, 0.0)).collect();
        let sim2 = replay(&g2, &exact, None, &cfg, &mut rng).unwrap();
        for (a, b) in sim[0].iter().zip(&sim2[0]) {
            assert!((a * c(2.0, 0.0) - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rpe_noise_adds_the_right_power() {
        let ch = TimeVaryingChannel::from_static(vec![c(1.0, 0.0)]).unwrap();
        let n = 20_000;
        let g = bpsk_probe(n, 9);
        let exact = TvirEstimate::from_channel(&ch, n).unwrap();
        let model = RpeModel {
            r: vec![vec![vec![c(0.5, 0.0)]]],
            sigma_g_sq: 1.0,
            n_samples: 1000,
        };
        let base_cfg = PlaybackConfig {
            test_signal_variance: 1.0,
            ambient: AmbientNoise::Off,
            rpe: false,
            seed: 0,
        };
        let mut rng = rng_for(9, &[92]);
        let off = replay(&g, &exact, None, &base_cfg, &mut rng).unwrap();
        let on_cfg = PlaybackConfig {
            rpe: true,
            ..base_cfg
        };
        let mut rng = rng_for(9, &[93]);
        let on = replay(&g, &exact, Some(&model), &on_cfg, &mut rng).unwrap();
        let p = |s: &[Complex64]| s.iter().map(|x| x.norm_sqr()).sum::<f64>() / s.len() as f64;
        let diff = p(&on[0]) - p(&off[0]);
        assert!((diff - 0.5).abs() < 0.05, "added power {diff}");
    }

    #[test]
    fn replay_orthogonality_of_prediction_and_residual() {
        let spec = ChannelSpec::RandomWalk {
            initial: vec![vec![c(1.0, 0.0), c(0.4, 0.2)]],
            step_sigma: 0.004,
            seed: 10,
        };
        let n = 20_000;
        let ch = synth_channel(&spec, n + 2).unwrap();
        let g = bpsk_probe(n, 10);
        let mut rng = rng_for(10, &[94]);
        let y = propagate(&g, &ch, &NoiseModel::awgn(1e-4), &mut rng).unwrap();
        let est =
            estimate_tvir(&y, &g, 2, EstimatorWindow::Exponential { lambda: 0.995 }).unwrap();
        let rpe = compute_rpe(&y, &g, &est).unwrap();
        let m = rpe.len() as f64;
        let corr: Complex64 = rpe.y_hat[0]
            .iter()
            .zip(&rpe.e[0])
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            / m;
        let py = rpe.y_hat[0].iter().map(|x| x.norm_sqr()).sum::<f64>() / m;
        let pe = rpe.mean_power()[0];
        let rho = corr.norm() / (py * pe).sqrt();
        assert!(rho < 0.1, "normalized correlation {rho}");
    }

    #[test]
    fn power_trace_behaviour() {
        let flat = vec![c(1.0, 0.0); 1000];
        for v in power_trace(&flat, 100) {
            assert!(v.abs() < 1e-12);
        }
        let mut step = vec![c(1.0, 0.0); 500];
        step.extend(vec![c(10f64.sqrt(), 0.0); 500]);
        let tr = power_trace(&step, 100);
        assert!(tr[0].abs() < 1e-12);
        assert!((tr[9] - 10.0).abs() < 1e-12);

        let mut rng = rng_for(11, &[95]);
        let noise = NoiseModel::awgn(0.25);
        let w: Vec<Complex64> = (0..40_000).map(|_| noise.sample(&mut rng)).collect();
        let tr = power_trace(&w, 4000);
        for v in tr {
            assert!((v - 10.0 * 0.25f64.log10()).abs() < 0.5, "{v}");
        }
    }

    #[test]
    fn estimate_and_rpe_csv_exports() {
        let ch = TimeVaryingChannel::from_static(vec![c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
        let g = bpsk_probe(300, 20);
        let mut rng = rng_for(20, &[97]);
        let y = propagate(&g, &ch, &NoiseModel::awgn(0.01), &mut rng).unwrap();
        let est = estimate_tvir(&y, &g, 2, EstimatorWindow::Sliding { len: 40 }).unwrap();
        let csv = est.export_csv();
        assert!(csv.starts_with("n,k,l,re,im\n"));
        // Re-importable through the channel tap format.
        let back = crate::channel::TimeVaryingChannel::import_csv(&csv).unwrap();
        assert_eq!(back.delay_spread(), 2);
        let rpe = compute_rpe(&y, &g, &est).unwrap();
        let csv = rpe.export_csv();
        assert!(csv.starts_with("n,k,re,im\n"));
        assert_eq!(csv.lines().count(), rpe.len() + 1);
    }

    #[test]
    fn error_paths() {
        let model = RpeModel {
            r: vec![vec![vec![c(1.0, 0.0)]]],
            sigma_g_sq: 1.0,
            n_samples: 10,
        };
        let mut rng = rng_for(12, &[96]);
        assert!(gen_rpe_noise(&model, 0, 1.0, &mut rng).is_err());

        let ch = TimeVaryingChannel::from_static(vec![c(1.0, 0.0)]).unwrap();
        let exact = TvirEstimate::from_channel(&ch, 10).unwrap();
        let cfg = PlaybackConfig {
            test_signal_variance: 1.0,
            ambient: AmbientNoise::Off,
            rpe: true,
            seed: 0,
        };
        // rpe on without a model
        assert!(replay(&[c(1.0, 0.0); 5], &exact, None, &cfg, &mut rng).is_err());
        // estimate span too short
        let cfg_off = PlaybackConfig { rpe: false, ..cfg };
        assert!(replay(&[c(1.0, 0.0); 50], &exact, None, &cfg_off, &mut rng).is_err());
        // short series for fitting
        let series = RpeSeries {
            start: 0,
            y_hat: vec![vec![c(0.0, 0.0); 10]],
            e: vec![vec![c(1.0, 0.0); 10]],
        };
        assert!(matches!(
            fit_rpe_model(&series, 4, 1.0),
            Err(PlaybackError::InsufficientSamples { .. })
        ));
    }
}
