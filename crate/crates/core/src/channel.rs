//! Time-varying FIR channel propagation, channel matrices, noise, and
//! amplifier nonlinearity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("numeric error: {0}")]
    NumericError(String),
    #[error("range error: {0}")]
    RangeError(String),
    #[error("parameter error: {0}")]
    ParamError(String),
    #[error("parse error: {0}")]
    ParseError(String),
}

/// Per-receiver tap trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum RxTaps {
    /// Constant taps h[l].
    Static(Vec<Complex64>),
    /// taps[n][l] for each time index n.
    Varying(Vec<Vec<Complex64>>),
}

/// A K-receiver FIR channel h_{k,n}[l] with delay spread L.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeVaryingChannel {
    per_rx: Vec<RxTaps>,
    delay_spread: usize,
}

impl TimeVaryingChannel {
    /// Single-receiver constant channel.
    pub fn from_static(taps: Vec<Complex64>) -> Result<Self, ChannelError> {
        Self::from_static_multi(vec![taps])
    }

    /// K-receiver constant channel.
    pub fn from_static_multi(taps: Vec<Vec<Complex64>>) -> Result<Self, ChannelError> {
        let l = taps.first().map(|t| t.len()).unwrap_or(0);
        if l == 0 {
            return Err(ChannelError::ParamError("empty tap vector".into()));
        }
        for t in &taps {
            if t.len() != l {
                return Err(ChannelError::ParamError(
                    "receivers must share the delay spread".into(),
                ));
            }
            check_finite(t)?;
        }
        Ok(Self {
            per_rx: taps.into_iter().map(RxTaps::Static).collect(),
            delay_spread: l,
        })
    }

    /// K-receiver trajectory channel; `taps[k][n][l]`.
    pub fn from_trajectories(taps: Vec<Vec<Vec<Complex64>>>) -> Result<Self, ChannelError> {
        let l = taps
            .first()
            .and_then(|rx| rx.first())
            .map(|t| t.len())
            .unwrap_or(0);
        if l == 0 {
            return Err(ChannelError::ParamError("empty trajectory".into()));
        }
        let n = taps[0].len();
        for rx in &taps {
            if rx.len() != n {
                return Err(ChannelError::ParamError(
                    "receivers must share the time span".into(),
                ));
            }
            for t in rx {
                if t.len() != l {
                    return Err(ChannelError::ParamError(
                        "tap vectors must share the delay spread".into(),
                    ));
                }
                check_finite(t)?;
            }
        }
        Ok(Self {
            per_rx: taps.into_iter().map(RxTaps::Varying).collect(),
            delay_spread: l,
        })
    }

    pub fn n_receivers(&self) -> usize {
        self.per_rx.len()
    }

    pub fn delay_spread(&self) -> usize {
        self.delay_spread
    }

    /// Time span for varying channels; static channels are unbounded.
    pub fn time_span(&self) -> Option<usize> {
        self.per_rx
            .iter()
            .filter_map(|rx| match rx {
                RxTaps::Static(_) => None,
                RxTaps::Varying(t) => Some(t.len()),
            })
            .min()
    }

    /// Tap vector of receiver `rx` at time `n`.
    pub fn taps_at(&self, rx: usize, n: usize) -> Result<&[Complex64], ChannelError> {
        match &self.per_rx[rx] {
            RxTaps::Static(t) => Ok(t),
            RxTaps::Varying(t) => t.get(n).map(|v| v.as_slice()).ok_or_else(|| {
                ChannelError::RangeError(format!("time {n} outside trajectory of {}", t.len()))
            }),
        }
    }

    /// Export tap trajectories as CSV rows `n,k,l,re,im`. Static channels
    /// emit a single n = 0 block.
    pub fn export_csv(&self) -> String {
        let mut out = String::from("n,k,l,re,im\n");
        for (k, rx) in self.per_rx.iter().enumerate() {
            match rx {
                RxTaps::Static(taps) => {
                    for (l, h) in taps.iter().enumerate() {
                        out.push_str(&format!("0,{k},{l},{},{}\n", h.re, h.im));
                    }
                }
                RxTaps::Varying(traj) => {
                    for (n, taps) in traj.iter().enumerate() {
                        for (l, h) in taps.iter().enumerate() {
                            out.push_str(&format!("{n},{k},{l},{},{}\n", h.re, h.im));
                        }
                    }
                }
            }
        }
        out
    }

    /// Import tap trajectories from the CSV form written by
    /// [`TimeVaryingChannel::export_csv`].
    pub fn import_csv(text: &str) -> Result<Self, ChannelError> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (ln == 0 && line.starts_with('n')) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(ChannelError::ParseError(format!(
                    "line {}: expected 5 fields, got {}",
                    ln + 1,
                    fields.len()
                )));
            }
            let parse_u =
                |s: &str| -> Result<usize, ChannelError> {
                    s.parse().map_err(|_| {
                        ChannelError::ParseError(format!("line {}: bad index {s}", ln + 1))
                    })
                };
            let parse_f =
                |s: &str| -> Result<f64, ChannelError> {
                    s.parse().map_err(|_| {
                        ChannelError::ParseError(format!("line {}: bad value {s}", ln + 1))
                    })
                };
            rows.push((
                parse_u(fields[0])?,
                parse_u(fields[1])?,
                parse_u(fields[2])?,
                Complex64::new(parse_f(fields[3])?, parse_f(fields[4])?),
            ));
        }
        if rows.is_empty() {
            return Err(ChannelError::ParseError("no data rows".into()));
        }
        let n_rx = rows.iter().map(|r| r.1).max().unwrap() + 1;
        let n_time = rows.iter().map(|r| r.0).max().unwrap() + 1;
        let l = rows.iter().map(|r| r.2).max().unwrap() + 1;
        let mut taps = vec![vec![vec![Complex64::new(0.0, 0.0); l]; n_time]; n_rx];
        for (n, k, li, h) in rows {
            taps[k][n][li] = h;
        }
        if n_time == 1 {
            Self::from_static_multi(taps.into_iter().map(|rx| rx.into_iter().next().unwrap()).collect())
        } else {
            Self::from_trajectories(taps)
        }
    }
}

fn check_finite(taps: &[Complex64]) -> Result<(), ChannelError> {
    for h in taps {
        if !h.re.is_finite() || !h.im.is_finite() {
            return Err(ChannelError::NumericError(format!("non-finite tap {h}")));
        }
    }
    Ok(())
}

/// Additive noise at the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Awgn,
    /// With probability `impulse_prob` a sample's variance is multiplied by
    /// `impulse_variance_ratio`.
    BernoulliGaussian {
        impulse_prob: f64,
        impulse_variance_ratio: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Base complex noise power E|w|^2.
    pub variance: f64,
}

impl NoiseModel {
    pub fn awgn(variance: f64) -> Self {
        Self {
            kind: NoiseKind::Awgn,
            variance,
        }
    }

    pub fn off() -> Self {
        Self::awgn(0.0)
    }

    /// Draw one complex noise sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let var = match self.kind {
            NoiseKind::Awgn => self.variance,
            NoiseKind::BernoulliGaussian {
                impulse_prob,
                impulse_variance_ratio,
            } => {
                let impulse: f64 = rng.gen();
                if impulse < impulse_prob {
                    self.variance * impulse_variance_ratio
                } else {
                    self.variance
                }
            }
        };
        let s = (var / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * s, im * s)
    }
}

/// Propagate a sample sequence through the channel: full convolution plus
/// noise. Output length is `x.len() + L - 1` per receiver; indices before the
/// first sample are zero (cold start).
pub fn propagate<R: Rng + ?Sized>(
    x: &[Complex64],
    ch: &TimeVaryingChannel,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Vec<Vec<Complex64>>, ChannelError> {
    if x.is_empty() {
        return Err(ChannelError::RangeError("empty input".into()));
    }
    let l = ch.delay_spread;
    let out_len = x.len() + l - 1;
    if let Some(span) = ch.time_span() {
        if span < out_len {
            return Err(ChannelError::RangeError(format!(
                "channel spans {span} < required {out_len}"
            )));
        }
    }
    let mut out = Vec::with_capacity(ch.n_receivers());
    for k in 0..ch.n_receivers() {
        let mut y = vec![Complex64::new(0.0, 0.0); out_len];
        for (n, yn) in y.iter_mut().enumerate() {
            let taps = ch.taps_at(k, n)?;
            let mut acc = Complex64::new(0.0, 0.0);
            for (li, &h) in taps.iter().enumerate() {
                if n >= li && n - li < x.len() {
                    acc += h * x[n - li];
                }
            }
            *yn = acc + noise.sample(rng);
        }
        out.push(y);
    }
    Ok(out)
}

/// The banded channel matrix anchored at time `n` for receiver `rx`:
/// entry (i, j) = h_{n-j}[j - i] when 0 <= j - i < L, zero otherwise.
/// Dimensions are L_f x (L_f + L - 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub data: DMatrix<Complex64>,
    pub l_f: usize,
    pub delay_spread: usize,
    pub anchor: usize,
}

impl ChannelMatrix {
    pub fn n_cols(&self) -> usize {
        self.l_f + self.delay_spread - 1
    }
}

/// Build the channel matrix for receiver `rx` at anchor time `n`. Varying
/// channels need taps for times n - L_f - L + 2 ..= n.
pub fn channel_matrix(
    ch: &TimeVaryingChannel,
    rx: usize,
    n: usize,
    l_f: usize,
) -> Result<ChannelMatrix, ChannelError> {
    let l = ch.delay_spread;
    if l_f == 0 {
        return Err(ChannelError::ParamError("L_f must be positive".into()));
    }
    let cols = l_f + l - 1;
    if ch.time_span().is_some() && n + 1 < cols {
        return Err(ChannelError::RangeError(format!(
            "anchor {n} too early for history of {cols}"
        )));
    }
    let mut data = DMatrix::from_element(l_f, cols, Complex64::new(0.0, 0.0));
    for j in 0..cols {
        let taps = ch.taps_at(rx, n.saturating_sub(j))?;
        for i in 0..l_f {
            if j >= i && j - i < l {
                data[(i, j)] = taps[j - i];
            }
        }
    }
    Ok(ChannelMatrix {
        data,
        l_f,
        delay_spread: l,
        anchor: n,
    })
}

/// Soft-limiting amplifier. `reference_peak` is the per-component peak |f|
/// of the driving signal; `alpha` > 1 is the ratio of the amplifier's
/// effective range to the range the signal occupies. Applied independently
/// to real and imaginary parts; output magnitude stays below
/// `reference_peak` and the map approaches identity as `alpha` grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifierModel {
    pub alpha: f64,
    pub reference_peak: f64,
}

impl AmplifierModel {
    pub fn new(alpha: f64, reference_peak: f64) -> Result<Self, ChannelError> {
        if alpha <= 1.0 {
            return Err(ChannelError::ParamError(format!(
                "alpha must exceed 1, got {alpha}"
            )));
        }
        if !reference_peak.is_finite() || reference_peak <= 0.0 {
            return Err(ChannelError::ParamError(format!(
                "reference peak must be positive, got {reference_peak}"
            )));
        }
        Ok(Self {
            alpha,
            reference_peak,
        })
    }

    /// Model with the peak measured from the realized signal (max over both
    /// components).
    pub fn from_signal(x: &[Complex64], alpha: f64) -> Result<Self, ChannelError> {
        let peak = x
            .iter()
            .map(|s| s.re.abs().max(s.im.abs()))
            .fold(0.0f64, f64::max);
        Self::new(alpha, peak)
    }
}

/// Apply the tanh soft limiter componentwise.
pub fn amplifier_apply(x: &[Complex64], amp: &AmplifierModel) -> Vec<Complex64> {
    let s = amp.alpha * amp.reference_peak;
    x.iter()
        .map(|&v| Complex64::new(s * (v.re / s).tanh(), s * (v.im / s).tanh()))
        .collect()
}

/// Synthetic channel description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    /// Constant taps per receiver.
    Static { taps: Vec<Vec<Complex64>> },
    /// h_n[l] = h_{n-1}[l] + sigma * xi, complex standard normal steps.
    RandomWalk {
        initial: Vec<Vec<Complex64>>,
        step_sigma: f64,
        seed: u64,
    },
    /// h_l(n) = base_l + amplitude_l * exp(j (2 pi n / period_l + phase_l)),
    /// a rotating fade component per tap.
    SinusoidalFade {
        base: Vec<Vec<Complex64>>,
        amplitude: Vec<Vec<f64>>,
        period: Vec<Vec<f64>>,
        phase: Vec<Vec<f64>>,
    },
}

/// Materialize a synthetic channel over `length` time steps.
pub fn synth_channel(spec: &ChannelSpec, length: usize) -> Result<TimeVaryingChannel, ChannelError> {
    match spec {
        ChannelSpec::Static { taps } => TimeVaryingChannel::from_static_multi(taps.clone()),
        ChannelSpec::RandomWalk {
            initial,
            step_sigma,
            seed,
        } => {
            if *step_sigma == 0.0 {
                return TimeVaryingChannel::from_static_multi(initial.clone());
            }
            let mut rng = crate::seeds::rng_for(*seed, &[crate::seeds::label::CHANNEL]);
            let mut taps = Vec::with_capacity(initial.len());
            for init in initial {
                let mut rx = Vec::with_capacity(length);
                let mut current = init.clone();
                for _ in 0..length {
                    rx.push(current.clone());
                    for h in current.iter_mut() {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        *h += step_sigma * Complex64::new(re, im) / 2f64.sqrt();
                    }
                }
                taps.push(rx);
            }
            TimeVaryingChannel::from_trajectories(taps)
        }
        ChannelSpec::SinusoidalFade {
            base,
            amplitude,
            period,
            phase,
        } => {
            let mut taps = Vec::with_capacity(base.len());
            for (k, b) in base.iter().enumerate() {
                let mut rx = Vec::with_capacity(length);
                for n in 0..length {
                    let mut t = Vec::with_capacity(b.len());
                    for (l, &bl) in b.iter().enumerate() {
                        let a = amplitude[k][l];
                        let mut h = bl;
                        if a != 0.0 {
                            let ang = 2.0 * std::f64::consts::PI * n as f64 / period[k][l]
                                + phase[k][l];
                            h += a * Complex64::new(ang.cos(), ang.sin());
                        }
                        t.push(h);
                    }
                    rx.push(t);
                }
                taps.push(rx);
            }
            TimeVaryingChannel::from_trajectories(taps)
        }
    }
}

/// The five-tap reference channel used by the bundled scenarios.
pub fn reference_five_tap() -> TimeVaryingChannel {
    TimeVaryingChannel::from_static(
        [1.0, 0.9472, 0.4586, 0.4315, 0.1497]
            .iter()
            .map(|&r| Complex64::new(r, 0.0))
            .collect(),
    )
    .expect("static channel")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng_for;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_channel_passes_signal_through() {
        let ch = TimeVaryingChannel::from_static(vec![c(1.0, 0.0)]).unwrap();
        let x = vec![c(1.0, 0.5), c(-0.3, 0.2)];
        let mut rng = rng_for(51, &[1]);
        let y = propagate(&x, &ch, &NoiseModel::off(), &mut rng).unwrap();
        assert_eq!(y[0], x);
    }

    #[test]
    fn hand_convolution_example() {
        let ch = TimeVaryingChannel::from_static(vec![c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
        let x = vec![c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)];
        let mut rng = rng_for(51, &[2]);
        let y = propagate(&x, &ch, &NoiseModel::off(), &mut rng).unwrap();
        let expect = [c(1.0, 0.0), c(-0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)];
        assert_eq!(y[0].len(), 4);
        for (a, b) in y[0].iter().zip(&expect) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn impulse_reproduces_reference_taps() {
        let ch = reference_five_tap();
        let mut rng = rng_for(51, &[3]);
        let y = propagate(&[c(1.0, 0.0)], &ch, &NoiseModel::off(), &mut rng).unwrap();
        let expect = [1.0, 0.9472, 0.4586, 0.4315, 0.1497];
        for (a, &b) in y[0].iter().zip(&expect) {
            assert!((a.re - b).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn propagation_is_linear_without_noise() {
        let spec = ChannelSpec::RandomWalk {
            initial: vec![vec![c(1.0, 0.0), c(0.3, -0.4), c(0.0, 0.2)]],
            step_sigma: 0.01,
            seed: 7,
        };
        let ch = synth_channel(&spec, 64).unwrap();
        let mut rng = rng_for(51, &[4]);
        let x1: Vec<Complex64> = (0..60).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let x2: Vec<Complex64> = (0..60).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let a = c(0.7, -0.2);
        let b = c(-1.3, 0.4);
        let combo: Vec<Complex64> = x1.iter().zip(&x2).map(|(u, v)| a * u + b * v).collect();

        let off = NoiseModel::off();
        let y1 = propagate(&x1, &ch, &off, &mut rng).unwrap();
        let y2 = propagate(&x2, &ch, &off, &mut rng).unwrap();
        let yc = propagate(&combo, &ch, &off, &mut rng).unwrap();
        for n in 0..yc[0].len() {
            let lin = a * y1[0][n] + b * y2[0][n];
            assert!((yc[0][n] - lin).norm() < 1e-12);
        }
    }

    #[test]
    fn noise_is_deterministic_under_fixed_seed() {
        let ch = reference_five_tap();
        let x = vec![c(1.0, 0.0); 32];
        let noise = NoiseModel::awgn(0.1);
        let y1 = propagate(&x, &ch, &noise, &mut rng_for(9, &[5])).unwrap();
        let y2 = propagate(&x, &ch, &noise, &mut rng_for(9, &[5])).unwrap();
        assert_eq!(y1, y2);
    }

    #[test]
    fn channel_matrix_static_patterns() {
        let ch = TimeVaryingChannel::from_static(vec![c(1.0, 0.0)]).unwrap();
        let m = channel_matrix(&ch, 0, 10, 3).unwrap();
        assert_eq!(m.data.nrows(), 3);
        assert_eq!(m.data.ncols(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(m.data[(i, j)].re, expect);
            }
        }

        let ch = TimeVaryingChannel::from_static(vec![c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
        let m = channel_matrix(&ch, 0, 5, 2).unwrap();
        let expect = [[1.0, 0.5, 0.0], [0.0, 1.0, 0.5]];
        for i in 0..2 {
            for j in 0..3 {
                assert!((m.data[(i, j)].re - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn channel_matrix_time_varying_layout() {
        // Two taps, trajectory with distinguishable values: h_n[l] = n + l/10.
        let traj: Vec<Vec<Complex64>> = (0..8)
            .map(|n| vec![c(n as f64, 0.0), c(n as f64 + 0.1, 0.0)])
            .collect();
        let ch = TimeVaryingChannel::from_trajectories(vec![traj]).unwrap();
        let n = 5;
        let m = channel_matrix(&ch, 0, n, 2).unwrap();
        // entry (0,1) = h_{n-1}[1], entry (1,1) = h_{n-1}[0]
        assert_eq!(m.data[(0, 1)].re, (n - 1) as f64 + 0.1);
        assert_eq!(m.data[(1, 1)].re, (n - 1) as f64);
        // insufficient history
        assert!(channel_matrix(&ch, 0, 1, 3).is_err());
    }

    #[test]
    fn amplifier_limits_and_identity() {
        let x: Vec<Complex64> = vec![c(0.3, -0.8), c(-1.0, 0.2), c(0.9, 1.0)];
        let amp = AmplifierModel::from_signal(&x, 1e6).unwrap();
        let y = amplifier_apply(&x, &amp);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() / a.norm() < 1e-9);
        }

        let amp = AmplifierModel::new(1.0001, 1.0).unwrap();
        let y = amplifier_apply(&[c(1.0, 0.0)], &amp);
        assert!((y[0].re - 1.0001 * (1.0f64 / 1.0001).tanh()).abs() < 1e-12);
        assert!((y[0].re - 0.7616).abs() < 1e-3);
        assert!(y[0].re <= 1.0);

        // Odd symmetry.
        let amp = AmplifierModel::new(2.0, 1.0).unwrap();
        let xs = vec![c(0.7, -0.4)];
        let neg: Vec<Complex64> = xs.iter().map(|v| -v).collect();
        let y1 = amplifier_apply(&xs, &amp);
        let y2 = amplifier_apply(&neg, &amp);
        assert_eq!(y1[0], -y2[0]);

        assert!(AmplifierModel::new(1.0, 1.0).is_err());
        assert!(AmplifierModel::new(0.5, 1.0).is_err());
    }

    #[test]
    fn synth_random_walk_statistics() {
        let spec = ChannelSpec::RandomWalk {
            initial: vec![vec![c(1.0, 0.0)]],
            step_sigma: 0.01,
            seed: 3,
        };
        let ch = synth_channel(&spec, 10_000).unwrap();
        let mut sum = 0.0;
        for n in 1..10_000 {
            let d = ch.taps_at(0, n).unwrap()[0] - ch.taps_at(0, n - 1).unwrap()[0];
            sum += d.norm_sqr();
        }
        let var = sum / 9_999.0;
        assert!((var / 1e-4 - 1.0).abs() < 0.1, "increment variance {var}");

        // sigma = 0 degenerates to static.
        let spec0 = ChannelSpec::RandomWalk {
            initial: vec![vec![c(1.0, 0.0)]],
            step_sigma: 0.0,
            seed: 3,
        };
        let ch0 = synth_channel(&spec0, 100).unwrap();
        assert!(ch0.time_span().is_none());
    }

    #[test]
    fn bernoulli_gaussian_noise_statistics() {
        let noise = NoiseModel {
            kind: NoiseKind::BernoulliGaussian {
                impulse_prob: 0.05,
                impulse_variance_ratio: 100.0,
            },
            variance: 0.01,
        };
        let mut rng = rng_for(10, &[6]);
        let n = 200_000;
        let samples: Vec<Complex64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
        let p2 = samples.iter().map(|w| w.norm_sqr()).sum::<f64>() / n as f64;
        // Mean power is variance * (1 - p + p r).
        let expect = 0.01 * (0.95 + 0.05 * 100.0);
        assert!((p2 / expect - 1.0).abs() < 0.05, "power {p2} vs {expect}");
        // Heavy tails: complex kurtosis E|w|^4 / (E|w|^2)^2 far above the
        // Gaussian value of 2.
        let p4 = samples.iter().map(|w| w.norm_sqr().powi(2)).sum::<f64>() / n as f64;
        assert!(p4 / (p2 * p2) > 10.0, "kurtosis {}", p4 / (p2 * p2));
    }

    #[test]
    fn csv_roundtrip() {
        let spec = ChannelSpec::RandomWalk {
            initial: vec![vec![c(1.0, 0.0), c(0.2, -0.3)]; 2],
            step_sigma: 0.05,
            seed: 11,
        };
        let ch = synth_channel(&spec, 6).unwrap();
        let csv = ch.export_csv();
        let back = TimeVaryingChannel::import_csv(&csv).unwrap();
        assert_eq!(ch, back);

        let st = reference_five_tap();
        let back = TimeVaryingChannel::import_csv(&st.export_csv()).unwrap();
        assert_eq!(st, back);

        assert!(TimeVaryingChannel::import_csv("n,k,l,re,im\n").is_err());
        assert!(TimeVaryingChannel::import_csv("0,0,0,1.0\n").is_err());
    }
}
