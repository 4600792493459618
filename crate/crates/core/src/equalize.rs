//! Decision feedback equalizers: closed-form ZF/MMSE designs and adaptive
//! LMS/RLS variants with dither incorporation and an optional per-channel
//! phase tracker.
//!
//! One engine drives every variant. The output at symbol index `t` is
//!
//! ```text
//! g_out[t] = sum_k q_f_k^* y_k[t+n0 .. t+n0-L_f+1] - q_b^* fb[t-1 .. t-L_b]
//! ```
//!
//! where `fb` holds g-domain feedback symbols: the true reference plus dither
//! during training, the sliced decision plus dither afterwards. The soft
//! virtual-domain output is `f_hat[t] = g_out[t] - m[t]` and decisions are
//! sliced against the virtual constellation. Without dither the two domains
//! coincide and this is a standard DFE. Samples before the first output and
//! after the last received sample read as zero, so the first `L_b` outputs
//! and the final `n0` outputs are cold; callers exclude them from metrics.

use crate::channel::ChannelMatrix;
use crate::modem::{slice_index, Constellation, DitherSequence, SymbolSequence};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EqualizeError {
    #[error("singular channel: {0}")]
    SingularChannel(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthError { expected: usize, got: usize },
    #[error("numeric error: {0}")]
    NumericError(String),
    #[error("parameter error: {0}")]
    ParamError(String),
}

/// DFE weights. `feedforward` stacks the per-receiver taps channel-major
/// (receiver 0 taps first); both filters are applied via their Hermitian, so
/// the stored values are the `q_f`, `q_b` vectors themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfeWeights {
    pub feedforward: Vec<Complex64>,
    pub feedback: Vec<Complex64>,
    pub n0: usize,
    pub l_f: usize,
    pub n_rx: usize,
}

impl DfeWeights {
    pub fn zeros(l_f: usize, l_b: usize, n0: usize, n_rx: usize) -> Self {
        Self {
            feedforward: vec![Complex64::new(0.0, 0.0); l_f * n_rx],
            feedback: vec![Complex64::new(0.0, 0.0); l_b],
            n0,
            l_f,
            n_rx,
        }
    }

    pub fn l_b(&self) -> usize {
        self.feedback.len()
    }

    /// Feedforward taps of one receiver.
    pub fn ff_rx(&self, rx: usize) -> &[Complex64] {
        &self.feedforward[rx * self.l_f..(rx + 1) * self.l_f]
    }

    /// Hash of the weight values for report provenance.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        for v in self.feedforward.iter().chain(&self.feedback) {
            mix(v.re.to_bits());
            mix(v.im.to_bits());
        }
        mix(self.n0 as u64);
        format!("{h:016x}")
    }
}

/// The row vector `q_f^* H` of length `L_f + L - 1`.
pub fn equalized_row(w: &DfeWeights, h: &ChannelMatrix) -> Result<Vec<Complex64>, EqualizeError> {
    if w.n_rx != 1 {
        return Err(EqualizeError::ParamError(
            "closed-form analysis is single-receiver".into(),
        ));
    }
    if w.l_f != h.l_f {
        return Err(EqualizeError::LengthError {
            expected: h.l_f,
            got: w.l_f,
        });
    }
    let cols = h.n_cols();
    let mut row = vec![Complex64::new(0.0, 0.0); cols];
    for (j, r) in row.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..w.l_f {
            acc += w.feedforward[i].conj() * h.data[(i, j)];
        }
        *r = acc;
    }
    Ok(row)
}

fn feedback_from_row(row: &[Complex64], n0: usize, l_b: usize) -> Vec<Complex64> {
    let mut fb = vec![Complex64::new(0.0, 0.0); l_b];
    for (j, f) in fb.iter_mut().enumerate() {
        if let Some(r) = row.get(n0 + 1 + j) {
            *f = r.conj();
        }
    }
    fb
}

/// Zero-forcing DFE: the feedforward filter cancels all precursor taps and
/// pins the cursor to one; the feedback filter cancels the residual
/// postcursors. With correct decisions and no noise the output is exact.
pub fn design_zf(h: &ChannelMatrix, l_b: usize, n0: usize) -> Result<DfeWeights, EqualizeError> {
    let l_f = h.l_f;
    if n0 >= h.n_cols() {
        return Err(EqualizeError::ParamError(format!(
            "decision delay {n0} outside the {} response columns",
            h.n_cols()
        )));
    }
    // Constraints over columns 0..=n0: (q_f^* H)_j = [j == n0].
    let a = h.data.columns(0, n0 + 1).transpose().into_owned();
    let mut rhs = DVector::from_element(n0 + 1, Complex64::new(0.0, 0.0));
    rhs[n0] = Complex64::new(1.0, 0.0);
    let svd = a.clone().svd(true, true);
    let v = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| EqualizeError::SingularChannel(e.to_string()))?;
    let residual = (&a * &v - &rhs).norm();
    if residual > 1e-8 {
        return Err(EqualizeError::SingularChannel(format!(
            "precursor constraints unsatisfiable (residual {residual:.2e})"
        )));
    }
    let feedforward: Vec<Complex64> = v.iter().map(|x| x.conj()).collect();
    let mut w = DfeWeights {
        feedforward,
        feedback: vec![],
        n0,
        l_f,
        n_rx: 1,
    };
    let row = equalized_row(&w, h)?;
    w.feedback = feedback_from_row(&row, n0, l_b);
    Ok(w)
}

/// MMSE DFE under the correct-decision assumption: postcursors within the
/// feedback span are cancelled exactly; the feedforward filter solves the
/// regularized least-squares problem over the remaining response columns.
/// Reduces to the ZF design as the noise variance goes to zero.
pub fn design_mmse(
    h: &ChannelMatrix,
    noise_variance: f64,
    signal_variance: f64,
    l_b: usize,
    n0: usize,
) -> Result<DfeWeights, EqualizeError> {
    if noise_variance < 0.0 || signal_variance <= 0.0 {
        return Err(EqualizeError::ParamError(
            "noise variance must be nonnegative and signal variance positive".into(),
        ));
    }
    if noise_variance == 0.0 {
        return design_zf(h, l_b, n0);
    }
    let l_f = h.l_f;
    let cols = h.n_cols();
    if n0 >= cols {
        return Err(EqualizeError::ParamError(format!(
            "decision delay {n0} outside the {cols} response columns"
        )));
    }
    let selected: Vec<usize> = (0..cols)
        .filter(|&j| !(j > n0 && j <= n0 + l_b))
        .collect();
    let mut b = DMatrix::from_element(selected.len(), l_f, Complex64::new(0.0, 0.0));
    let mut t = DVector::from_element(selected.len(), Complex64::new(0.0, 0.0));
    for (r, &j) in selected.iter().enumerate() {
        for i in 0..l_f {
            b[(r, i)] = h.data[(i, j)];
        }
        if j == n0 {
            t[r] = Complex64::new(1.0, 0.0);
        }
    }
    let lambda = noise_variance / signal_variance;
    let mut normal = b.adjoint() * &b;
    for i in 0..l_f {
        normal[(i, i)] += Complex64::new(lambda, 0.0);
    }
    let rhs = b.adjoint() * t;
    let chol = nalgebra::Cholesky::new(normal).ok_or_else(|| {
        EqualizeError::NumericError("normal equations not positive definite".into())
    })?;
    let v = chol.solve(&rhs);
    let feedforward: Vec<Complex64> = v.iter().map(|x| x.conj()).collect();
    let mut w = DfeWeights {
        feedforward,
        feedback: vec![],
        n0,
        l_f,
        n_rx: 1,
    };
    let row = equalized_row(&w, h)?;
    w.feedback = feedback_from_row(&row, n0, l_b);
    Ok(w)
}

/// Adaptation algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum AdaptiveAlgorithm {
    Lms { mu: f64 },
    Rls { lambda: f64, delta: f64 },
}

/// Phase tracker configuration; first order is the usual choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PllConfig {
    #[default]
    Off,
    FirstOrder {
        gain: f64,
    },
    SecondOrder {
        gain: f64,
        integrator_gain: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    #[serde(flatten)]
    pub algorithm: AdaptiveAlgorithm,
    pub training_len: usize,
    #[serde(default)]
    pub pll: PllConfig,
}

impl AdaptiveConfig {
    pub fn lms(mu: f64, training_len: usize) -> Self {
        Self {
            algorithm: AdaptiveAlgorithm::Lms { mu },
            training_len,
            pll: PllConfig::Off,
        }
    }

    pub fn rls(lambda: f64, training_len: usize) -> Self {
        Self {
            algorithm: AdaptiveAlgorithm::Rls {
                lambda,
                delta: 100.0,
            },
            training_len,
            pll: PllConfig::Off,
        }
    }

    fn validate(&self) -> Result<(), EqualizeError> {
        match self.algorithm {
            AdaptiveAlgorithm::Lms { mu } => {
                if mu < 0.0 {
                    return Err(EqualizeError::ParamError(format!(
                        "negative step size {mu}"
                    )));
                }
            }
            AdaptiveAlgorithm::Rls { lambda, delta } => {
                if !(lambda > 0.0 && lambda <= 1.0) {
                    return Err(EqualizeError::ParamError(format!(
                        "forgetting factor {lambda} outside (0, 1]"
                    )));
                }
                if delta <= 0.0 {
                    return Err(EqualizeError::ParamError(format!(
                        "initial covariance scale {delta} must be positive"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Everything recorded during one equalizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualizerTrace {
    /// Soft virtual-domain outputs f_hat[t].
    pub soft: Vec<Complex64>,
    /// Sliced decisions in the virtual constellation.
    pub decisions: Vec<Complex64>,
    /// g-domain error: reference minus output (training reference before the
    /// switch, decision afterwards).
    pub error: Vec<Complex64>,
    /// Sliding-window mean of |error|^2 in dB, one value per symbol.
    pub mse_db: Vec<f64>,
    /// Tracked phase of receiver 0 (radians), zero when the PLL is off.
    pub phase: Vec<f64>,
    /// First symbol at which the divergence detector fired.
    pub diverged: Option<usize>,
    pub mse_window: usize,
    /// Symbols that used the training reference.
    pub training_len: usize,
}

impl EqualizerTrace {
    /// CSV export: n, soft and decision components, error power, windowed
    /// MSE, phase.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,re_soft,im_soft,re_dec,im_dec,err_power,mse_db,phase\n");
        for n in 0..self.soft.len() {
            out.push_str(&format!(
                "{n},{},{},{},{},{},{},{}\n",
                self.soft[n].re,
                self.soft[n].im,
                self.decisions[n].re,
                self.decisions[n].im,
                self.error[n].norm_sqr(),
                self.mse_db[n],
                self.phase[n]
            ));
        }
        out
    }

    /// Mean error power (dB) over the trailing fraction of the run.
    pub fn steady_state_mse_db(&self, tail_fraction: f64) -> f64 {
        let n = self.error.len();
        let start = ((1.0 - tail_fraction) * n as f64) as usize;
        let power: f64 = self.error[start..].iter().map(|e| e.norm_sqr()).sum();
        10.0 * (power / (n - start) as f64).max(1e-30).log10()
    }

    /// First symbol index at which the windowed MSE curve crosses below
    /// `threshold_db`.
    pub fn first_crossing_below(&self, threshold_db: f64) -> Option<usize> {
        self.mse_db.iter().position(|&m| m < threshold_db)
    }
}

/// Per-window soft-decision SNR in dB, clipped at +60 dB.
pub fn soft_decision_snr(trace: &EqualizerTrace, window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::new();
    let mut i = 0;
    while i + window <= trace.soft.len() {
        let mut sig = 0.0;
        let mut err = 0.0;
        for t in i..i + window {
            sig += trace.decisions[t].norm_sqr();
            err += (trace.soft[t] - trace.decisions[t]).norm_sqr();
        }
        let snr = if err == 0.0 {
            60.0
        } else {
            (10.0 * (sig / err).log10()).min(60.0)
        };
        out.push(snr);
        i += window;
    }
    out
}

const DIVERGENCE_MSE_THRESHOLD: f64 = 10.0;
const DIVERGENCE_SPAN_WINDOWS: usize = 3;
const MAX_RLS_RESETS: usize = 64;

struct Engine<'a> {
    y: &'a [Vec<Complex64>],
    c_f: &'a Constellation,
    dither: Option<&'a DitherSequence>,
    training: Option<&'a SymbolSequence>,
    adaptation: Option<AdaptiveAlgorithm>,
    pll: PllConfig,
    training_len: usize,
    mse_window: usize,
    n_out: usize,
}

fn run_engine(mut w: DfeWeights, p: Engine<'_>) -> Result<EqualizerTrace, EqualizeError> {
    let n_rx = p.y.len();
    if n_rx == 0 || w.n_rx != n_rx {
        return Err(EqualizeError::LengthError {
            expected: w.n_rx,
            got: n_rx,
        });
    }
    let n_samples = p.y[0].len();
    for ch in p.y {
        if ch.len() != n_samples {
            return Err(EqualizeError::LengthError {
                expected: n_samples,
                got: ch.len(),
            });
        }
    }
    if let Some(d) = p.dither {
        if d.len() < p.n_out {
            return Err(EqualizeError::LengthError {
                expected: p.n_out,
                got: d.len(),
            });
        }
    }
    if let Some(tr) = p.training {
        if tr.len() < p.training_len {
            return Err(EqualizeError::LengthError {
                expected: p.training_len,
                got: tr.len(),
            });
        }
    } else if p.training_len > 0 {
        return Err(EqualizeError::ParamError(
            "training length set but no training sequence supplied".into(),
        ));
    }

    let l_f = w.l_f;
    let l_b = w.l_b();
    let dim = n_rx * l_f + l_b;

    // Internal stacked weights with the feedback sign folded in:
    // output = w_int^H u with u = [y segments, fb symbols].
    let mut w_int = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    for (i, &v) in w.feedforward.iter().enumerate() {
        w_int[i] = v;
    }
    for (j, &v) in w.feedback.iter().enumerate() {
        w_int[n_rx * l_f + j] = -v;
    }

    let mut rls_p: Option<DMatrix<Complex64>> = match p.adaptation {
        Some(AdaptiveAlgorithm::Rls { delta, .. }) => Some(DMatrix::from_diagonal_element(
            dim,
            dim,
            Complex64::new(delta, 0.0),
        )),
        _ => None,
    };

    let mut phase = vec![0.0f64; n_rx];
    let mut phase_integrator = vec![0.0f64; n_rx];

    let mut fb_history: Vec<Complex64> = Vec::with_capacity(p.n_out);
    let mut u = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    let mut ff_contrib = vec![Complex64::new(0.0, 0.0); n_rx];

    let mut trace = EqualizerTrace {
        soft: Vec::with_capacity(p.n_out),
        decisions: Vec::with_capacity(p.n_out),
        error: Vec::with_capacity(p.n_out),
        mse_db: Vec::with_capacity(p.n_out),
        phase: Vec::with_capacity(p.n_out),
        diverged: None,
        mse_window: p.mse_window,
        training_len: p.training_len,
    };

    let mut window_acc = 0.0f64;
    let mut window_buf = vec![0.0f64; p.mse_window];
    let mut hot_samples = 0usize;
    let mut rls_resets = 0usize;

    for t in 0..p.n_out {
        // Input vector: per-receiver feedforward segments (derotated when the
        // PLL is on), then past g-domain feedback symbols.
        for k in 0..n_rx {
            let rot = Complex64::from_polar(1.0, -phase[k]);
            for i in 0..l_f {
                let idx = t as i64 + w.n0 as i64 - i as i64;
                let sample = if idx >= 0 && (idx as usize) < n_samples {
                    p.y[k][idx as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                u[k * l_f + i] = sample * rot;
            }
        }
        for j in 0..l_b {
            let idx = t as i64 - 1 - j as i64;
            u[n_rx * l_f + j] = if idx >= 0 {
                fb_history[idx as usize]
            } else {
                Complex64::new(0.0, 0.0)
            };
        }

        // Per-receiver feedforward contributions (kept for the phase
        // detector), then the combined g-domain output.
        for (k, contrib) in ff_contrib.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..l_f {
                acc += w_int[k * l_f + i].conj() * u[k * l_f + i];
            }
            *contrib = acc;
        }
        let mut g_out = ff_contrib.iter().sum::<Complex64>();
        for j in 0..l_b {
            g_out += w_int[n_rx * l_f + j].conj() * u[n_rx * l_f + j];
        }

        let m_t = p
            .dither
            .map(|d| d.values[t])
            .unwrap_or(Complex64::new(0.0, 0.0));
        let f_hat = g_out - m_t;
        if !f_hat.re.is_finite() || !f_hat.im.is_finite() {
            return Err(EqualizeError::NumericError(format!(
                "non-finite equalizer output at symbol {t}"
            )));
        }
        let decision = p.c_f.point(
            slice_index(f_hat, p.c_f)
                .map_err(|e| EqualizeError::NumericError(format!("slicing failed at {t}: {e}")))?,
        );

        let in_training = t < p.training_len;
        let reference_f = if in_training {
            p.training.unwrap().symbols[t]
        } else {
            decision
        };
        let reference_g = reference_f + m_t;
        let error = reference_g - g_out;

        fb_history.push(reference_g);
        trace.soft.push(f_hat);
        trace.decisions.push(decision);
        trace.error.push(error);
        trace.phase.push(phase[0]);

        // Sliding-window MSE.
        let slot = t % p.mse_window;
        if t >= p.mse_window {
            window_acc -= window_buf[slot];
        }
        let e2 = error.norm_sqr();
        window_buf[slot] = e2;
        window_acc += e2;
        let denom = p.mse_window.min(t + 1) as f64;
        let mse = (window_acc / denom).max(1e-30);
        trace.mse_db.push(10.0 * mse.log10());

        // Divergence detector: windowed MSE above threshold for a sustained
        // span.
        if t >= p.mse_window {
            if mse > DIVERGENCE_MSE_THRESHOLD {
                hot_samples += 1;
                if hot_samples >= DIVERGENCE_SPAN_WINDOWS * p.mse_window && trace.diverged.is_none()
                {
                    trace.diverged = Some(t);
                }
            } else {
                hot_samples = 0;
            }
        }

        // Weight adaptation (error convention: e = d - w^H u, w += step u e*).
        match p.adaptation {
            None => {}
            Some(AdaptiveAlgorithm::Lms { mu }) => {
                if mu != 0.0 {
                    for i in 0..dim {
                        w_int[i] += mu * u[i] * error.conj();
                    }
                }
            }
            Some(AdaptiveAlgorithm::Rls { lambda, delta }) => {
                let pmat = rls_p.as_mut().unwrap();
                let mut pu = &*pmat * &u;
                let mut denom = lambda + (u.adjoint() * &pu)[(0, 0)].re;
                if !denom.is_finite() {
                    return Err(EqualizeError::NumericError(format!(
                        "covariance blow-up at symbol {t} (denominator {denom})"
                    )));
                }
                // Long runs can erode positive definiteness; a covariance
                // reset recovers, but repeated resets mean real divergence.
                if denom <= lambda * 1e-9 {
                    rls_resets += 1;
                    if rls_resets > MAX_RLS_RESETS {
                        return Err(EqualizeError::NumericError(format!(
                            "covariance blow-up at symbol {t} ({rls_resets} resets, denominator {denom})"
                        )));
                    }
                    pmat.fill(Complex64::new(0.0, 0.0));
                    for i in 0..dim {
                        pmat[(i, i)] = Complex64::new(delta, 0.0);
                    }
                    pu = &*pmat * &u;
                    denom = lambda + (u.adjoint() * &pu)[(0, 0)].re;
                }
                let gain = pu.map(|x| x / denom);
                for i in 0..dim {
                    w_int[i] += gain[i] * error.conj();
                }
                // P <- (P - k k^H denom) / lambda keeps P Hermitian.
                let outer = &gain * gain.adjoint() * Complex64::new(denom, 0.0);
                *pmat -= outer;
                *pmat /= Complex64::new(lambda, 0.0);
            }
        }

        // Phase tracking, driven by the reference against each receiver's
        // feedforward contribution.
        match p.pll {
            PllConfig::Off => {}
            PllConfig::FirstOrder { gain } => {
                for k in 0..n_rx {
                    phase[k] += gain * phase_detector(ff_contrib[k], reference_g);
                }
            }
            PllConfig::SecondOrder {
                gain,
                integrator_gain,
            } => {
                for k in 0..n_rx {
                    let det = phase_detector(ff_contrib[k], reference_g);
                    phase_integrator[k] += integrator_gain * det;
                    phase[k] += gain * det + phase_integrator[k];
                }
            }
        }
    }

    // Persist adapted weights back into the caller-visible layout.
    for i in 0..n_rx * l_f {
        w.feedforward[i] = w_int[i];
    }
    for j in 0..l_b {
        w.feedback[j] = -w_int[n_rx * l_f + j];
    }
    Ok(trace)
}

/// Normalized phase detector: sin of the angle from the reference to the
/// feedforward contribution.
fn phase_detector(contrib: Complex64, reference: Complex64) -> f64 {
    let num = (contrib * reference.conj()).im;
    let den = (contrib.norm() * reference.norm()).max(1e-12);
    num / den
}

fn default_outputs(n_samples: usize, n0: usize) -> usize {
    n_samples.saturating_sub(n0)
}

/// Fixed-weight DFE run. Training symbols (if any) drive the feedback during
/// the training span; afterwards the equalizer is decision directed. The
/// dither, when supplied, is removed from the output and re-added on the
/// feedback path; `c_g` is the transmitted-domain constellation kept for
/// symmetry with the adaptive runs.
pub fn run_dfe(
    y: &[Vec<Complex64>],
    w: &DfeWeights,
    c_g: &Constellation,
    dither: Option<&DitherSequence>,
    training: Option<&SymbolSequence>,
    c_f: &Constellation,
) -> Result<EqualizerTrace, EqualizeError> {
    let _ = c_g;
    let n_out = default_outputs(y.first().map(|v| v.len()).unwrap_or(0), w.n0);
    let n_out = dither.map(|d| d.len().min(n_out)).unwrap_or(n_out);
    run_engine(
        w.clone(),
        Engine {
            y,
            c_f,
            dither,
            training,
            adaptation: None,
            pll: PllConfig::Off,
            training_len: training.map(|t| t.len().min(n_out)).unwrap_or(0),
            mse_window: 200,
            n_out,
        },
    )
}

/// LMS-adapted DFE. `init` seeds the filter; zeros otherwise. The update
/// error is computed in the g-domain (reference or decision plus dither)
/// while the filter input remains the recorded samples.
#[allow(clippy::too_many_arguments)]
pub fn run_lms_dfe(
    y: &[Vec<Complex64>],
    cfg: &AdaptiveConfig,
    init: Option<&DfeWeights>,
    structure: (usize, usize, usize), // (l_f, l_b, n0)
    c_g: &Constellation,
    dither: Option<&DitherSequence>,
    training: Option<&SymbolSequence>,
    c_f: &Constellation,
) -> Result<EqualizerTrace, EqualizeError> {
    let _ = c_g;
    cfg.validate()?;
    if !matches!(cfg.algorithm, AdaptiveAlgorithm::Lms { .. }) {
        return Err(EqualizeError::ParamError("expected an LMS config".into()));
    }
    let (l_f, l_b, n0) = structure;
    let w = init
        .cloned()
        .unwrap_or_else(|| DfeWeights::zeros(l_f, l_b, n0, y.len()));
    let n_out = default_outputs(y.first().map(|v| v.len()).unwrap_or(0), w.n0);
    let n_out = dither.map(|d| d.len().min(n_out)).unwrap_or(n_out);
    run_engine(
        w,
        Engine {
            y,
            c_f,
            dither,
            training,
            adaptation: Some(cfg.algorithm),
            pll: cfg.pll,
            training_len: cfg.training_len.min(n_out),
            mse_window: 200,
            n_out,
        },
    )
}

/// RLS-adapted multichannel DFE with optional per-channel phase tracking.
pub fn run_rls_dfe(
    y: &[Vec<Complex64>],
    cfg: &AdaptiveConfig,
    structure: (usize, usize, usize), // (l_f, l_b, n0)
    c_g: &Constellation,
    dither: Option<&DitherSequence>,
    training: Option<&SymbolSequence>,
    c_f: &Constellation,
) -> Result<EqualizerTrace, EqualizeError> {
    let _ = c_g;
    cfg.validate()?;
    if !matches!(cfg.algorithm, AdaptiveAlgorithm::Rls { .. }) {
        return Err(EqualizeError::ParamError("expected an RLS config".into()));
    }
    let (l_f, l_b, n0) = structure;
    let w = DfeWeights::zeros(l_f, l_b, n0, y.len());
    let n_out = default_outputs(y.first().map(|v| v.len()).unwrap_or(0), n0);
    let n_out = dither.map(|d| d.len().min(n_out)).unwrap_or(n_out);
    run_engine(
        w,
        Engine {
            y,
            c_f,
            dither,
            training,
            adaptation: Some(cfg.algorithm),
            pll: cfg.pll,
            training_len: cfg.training_len.min(n_out),
            mse_window: 200,
            n_out,
        },
    )
}
