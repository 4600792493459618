//! Experiment runners: seeded, deterministic, report-emitting.

use super::config::{DitherMapId, EqualizerKind, ScenarioConfig, Structure};
use super::HarnessError;
use crate::bitlayer::{self, BitStream};
use crate::channel::{
    channel_matrix, propagate, synth_channel, ChannelMatrix, NoiseModel, TimeVaryingChannel,
};
use crate::divergence::{
    conditional_moments, deviation_factors, empirical_divergence, kl_objective, msd_closed_form,
};
use crate::equalize::{
    design_mmse, design_zf, run_dfe, run_lms_dfe, run_rls_dfe, soft_decision_snr, AdaptiveConfig,
    DfeWeights, EqualizerTrace,
};
use crate::modem::{
    build_qam, dither_downmap, dither_map_table, dither_random_nearest, dither_random_opposite,
    dither_worst_downmap, map_symbols, Constellation, DitherMap, DitherSequence, SymbolSequence,
};
use crate::playback::{
    compute_rpe, estimate_tvir, fit_rpe_model, gen_rpe_noise, power_trace, replay, AmbientNoise,
    PlaybackConfig,
};
use crate::seeds::{label, rng_for};
use num_complex::Complex64;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

fn snr_to_noise_var(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Transmitted/virtual constellation pair for a map id, resolved against the
/// configured order exponents.
fn constellation_pair(
    cfg: &ScenarioConfig,
    id: DitherMapId,
) -> Result<(Constellation, Constellation), HarnessError> {
    let hi = cfg.map_g.max(cfg.map_f);
    let lo = cfg.map_g.min(cfg.map_f);
    let (kg, kf) = match id {
        DitherMapId::M1Down | DitherMapId::M2Down => (hi, lo),
        DitherMapId::M1Up | DitherMapId::M2Up => (lo, hi),
        DitherMapId::None => (cfg.map_f, cfg.map_f),
    };
    Ok((build_qam(kg)?, build_qam(kf)?))
}

fn map_table_for(id: DitherMapId, c_g: &Constellation, c_f: &Constellation) -> DitherMap {
    dither_map_table(c_g, c_f, id.is_worst(), id.as_str())
}

fn realize_dither(
    id: DitherMapId,
    g: &SymbolSequence,
    c_f: &Constellation,
    rng: &mut ChaCha12Rng,
) -> Result<(SymbolSequence, DitherSequence), HarnessError> {
    Ok(match id {
        DitherMapId::M1Down => dither_downmap(g, c_f)?,
        DitherMapId::M2Down => dither_worst_downmap(g, c_f)?,
        DitherMapId::M1Up => dither_random_nearest(g, c_f, rng)?,
        DitherMapId::M2Up => dither_random_opposite(g, c_f, rng)?,
        DitherMapId::None => (
            SymbolSequence::new(g.symbols.clone(), c_f.clone()),
            DitherSequence::zeros(g.len(), c_f.order()),
        ),
    })
}

fn design_weights(
    kind: EqualizerKind,
    h: &ChannelMatrix,
    noise_var: f64,
    s: &Structure,
) -> Result<DfeWeights, HarnessError> {
    Ok(match kind {
        EqualizerKind::Zf => design_zf(h, s.l_b, s.n0)?,
        EqualizerKind::Mmse => design_mmse(h, noise_var, 1.0, s.l_b, s.n0)?,
    })
}

/// Channel snapshot for closed-form designs: the earliest anchor with full
/// history.
fn design_matrix(
    ch: &TimeVaryingChannel,
    s: &Structure,
) -> Result<ChannelMatrix, HarnessError> {
    Ok(channel_matrix(ch, 0, s.l_f + ch.delay_spread(), s.l_f)?)
}

/// The matched transmissions of one dither experiment: the recorded sequence
/// `g`, the virtual sequence `f` with its dither, and both received signals
/// under the identical noise realization.
struct PairSim {
    f: SymbolSequence,
    g: SymbolSequence,
    dither: DitherSequence,
    y_f: Vec<Vec<Complex64>>,
    y_g: Vec<Vec<Complex64>>,
}

#[allow(clippy::too_many_arguments)]
fn simulate_pair(
    ch: &TimeVaryingChannel,
    id: DitherMapId,
    c_g: &Constellation,
    c_f: &Constellation,
    n_total: usize,
    noise_var: f64,
    seed: u64,
    point: u64,
    g_override: Option<SymbolSequence>,
) -> Result<PairSim, HarnessError> {
    let mut payload_rng = rng_for(seed, &[label::PAYLOAD, point]);
    let g = g_override.unwrap_or_else(|| SymbolSequence::random(n_total, c_g, &mut payload_rng));
    let mut dither_rng = rng_for(seed, &[label::DITHER, point, id as u64]);
    let (f, dither) = realize_dither(id, &g, c_f, &mut dither_rng)?;
    let noise = NoiseModel::awgn(noise_var);
    let noise_rng = rng_for(seed, &[label::NOISE, point]);
    let y_f = propagate(&f.symbols, ch, &noise, &mut noise_rng.clone())?;
    let y_g = propagate(&g.symbols, ch, &noise, &mut noise_rng.clone())?;
    Ok(PairSim {
        f,
        g,
        dither,
        y_f,
        y_g,
    })
}

/// One row of a BER sweep report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub arm: String,
    pub equalizer: String,
    pub dither: String,
    pub ber: f64,
    pub errors: usize,
    pub n_bits: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub config: ScenarioConfig,
    pub rows: Vec<BerPoint>,
}

impl BerReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# config: {}\n", self.config.echo_json());
        out.push_str("snr_db,arm,equalizer,dither,ber,errors,n_bits,seed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.snr_db, r.arm, r.equalizer, r.dither, r.ber, r.errors, r.n_bits, r.seed
            ));
        }
        out
    }
}

fn bits_of(seq: &SymbolSequence, n_symbols: usize) -> BitStream {
    let trimmed = SymbolSequence::new(
        seq.symbols[..n_symbols.min(seq.len())].to_vec(),
        seq.constellation.clone(),
    );
    trimmed.to_bits()
}

/// Payload-driven transmitted sequence for the BER sweep: raw seeded bits, a
/// bit file, and/or FEC-encoded, mapped onto the transmitted constellation
/// and padded with random symbols for the equalizer lookahead.
fn build_payload_symbols(
    cfg: &ScenarioConfig,
    c_g: &Constellation,
    n_total: usize,
    point: u64,
) -> Result<SymbolSequence, HarnessError> {
    let k = c_g.bits_per_symbol();
    let want_bits = cfg.n_symbols * k;
    let mut rng = rng_for(cfg.seed, &[label::PAYLOAD, point]);
    let mut payload = match &cfg.payload_file {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| HarnessError::Config(format!("payload file {path}: {e}")))?;
            BitStream::from_raw_bytes(&bytes)
                .map_err(|e| HarnessError::Config(format!("payload file {path}: {e}")))?
        }
        None => BitStream::random(want_bits, &mut rng),
    };
    if let Some(codec) = &cfg.codec {
        payload = bitlayer::encode(&payload, codec)?;
    }
    // Fit to exactly n_symbols of coded bits: truncate or extend with fresh
    // seeded bits.
    let mut bits = payload.bits().to_vec();
    if bits.len() > want_bits {
        bits.truncate(want_bits);
    } else if bits.len() < want_bits {
        let extra = BitStream::random(want_bits - bits.len(), &mut rng);
        bits.extend_from_slice(extra.bits());
    }
    let mut symbols = map_symbols(&BitStream::new(bits).expect("valid bits"), c_g).symbols;
    while symbols.len() < n_total {
        symbols.push(c_g.point(rand::Rng::gen_range(&mut rng, 0..c_g.order())));
    }
    Ok(SymbolSequence::new(symbols, c_g.clone()))
}

/// BER versus SNR for the reference and dither-reproduced arms, sharing the
/// noise realization within each point.
pub fn run_ber_sweep(cfg: &ScenarioConfig) -> Result<BerReport, HarnessError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (pi, &snr) in cfg.snr_list_db.iter().enumerate() {
        let noise_var = snr_to_noise_var(snr);
        for &id in &cfg.dithers {
            let (c_g, c_f) = constellation_pair(cfg, id)?;
            let pad = cfg.structure.n0 + 8;
            let n_total = cfg.n_symbols + pad;
            let ch = synth_channel(&cfg.channel, n_total + 2 * ch_span_margin(cfg))?;
            let h = design_matrix(&ch, &cfg.structure)?;
            let g_sym = build_payload_symbols(cfg, &c_g, n_total, pi as u64)?;
            let pair = simulate_pair(
                &ch,
                id,
                &c_g,
                &c_f,
                n_total,
                noise_var,
                cfg.seed,
                pi as u64,
                Some(g_sym),
            )?;
            let truth_bits = bits_of(&pair.f, cfg.n_symbols);
            for &eq in &cfg.equalizers {
                let w = design_weights(eq, &h, noise_var, &cfg.structure)?;
                // Reference arm: the virtual sequence transmitted directly.
                let tr_ref = run_dfe(&pair.y_f, &w, &c_f, None, None, &c_f)?;
                // Dithered arm: the recorded transmission re-read.
                let tr_dith = run_dfe(&pair.y_g, &w, &c_g, Some(&pair.dither), None, &c_f)?;
                for (arm, trace) in [("reference", &tr_ref), ("dither", &tr_dith)] {
                    let dec = SymbolSequence::new(
                        trace.decisions[..cfg.n_symbols].to_vec(),
                        c_f.clone(),
                    );
                    let got = dec.to_bits();
                    let report = bitlayer::count_errors(&got, &truth_bits)?;
                    rows.push(BerPoint {
                        snr_db: snr,
                        arm: arm.to_string(),
                        equalizer: eq.as_str().to_string(),
                        dither: id.as_str().to_string(),
                        ber: report.ber,
                        errors: report.errors,
                        n_bits: truth_bits.len(),
                        seed: cfg.seed,
                    });
                }
            }
        }
    }
    Ok(BerReport {
        config: cfg.clone(),
        rows,
    })
}

fn ch_span_margin(cfg: &ScenarioConfig) -> usize {
    cfg.structure.l_f + cfg.structure.n0 + 16
}

/// One row of the divergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub dither: String,
    pub equalizer: String,
    pub dither_power: f64,
    pub msd_closed: f64,
    pub msd_empirical: f64,
    pub kl_closed: f64,
    pub kl_empirical: f64,
    pub deviation_multiplier: f64,
    pub cursor_bias: f64,
    pub weights_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub config: ScenarioConfig,
    pub snr_db: f64,
    pub n_symbols: usize,
    pub seed: u64,
    /// Empirical statistics use training-forced (correct-decision) feedback,
    /// matching the linearization behind the closed forms.
    pub rows: Vec<DivergenceRow>,
}

impl DivergenceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Closed-form and empirical MSD/KL for every configured dither map and
/// equalizer, plus a zero-dither control row.
pub fn run_divergence_table(cfg: &ScenarioConfig) -> Result<DivergenceReport, HarnessError> {
    cfg.validate()?;
    let snr = cfg.snr_list_db[0];
    let noise_var = snr_to_noise_var(snr);
    let pad = cfg.structure.n0 + 8;
    let n_total = cfg.n_symbols + pad;
    let ch = synth_channel(&cfg.channel, n_total + 2 * ch_span_margin(cfg))?;
    let h = design_matrix(&ch, &cfg.structure)?;
    let margin = cfg.structure.l_f + ch.delay_spread();

    let mut ids = cfg.dithers.clone();
    ids.push(DitherMapId::None);
    let mut rows = Vec::new();
    for (di, &id) in ids.iter().enumerate() {
        let (c_g, c_f) = constellation_pair(cfg, id)?;
        let pair = simulate_pair(
            &ch,
            id,
            &c_g,
            &c_f,
            n_total,
            noise_var,
            cfg.seed,
            di as u64,
            None,
        )?;
        let table = map_table_for(id, &c_g, &c_f);
        for &eq in &cfg.equalizers {
            let w = design_weights(eq, &h, noise_var, &cfg.structure)?;
            // Correct-decision linearization: feedback driven by the truth.
            let tr_ref = run_dfe(&pair.y_f, &w, &c_f, None, Some(&pair.f), &c_f)?;
            let tr_dith = run_dfe(&pair.y_g, &w, &c_g, Some(&pair.dither), Some(&pair.f), &c_f)?;
            let keep = cfg.n_symbols - 2 * margin;
            let win = |t: &EqualizerTrace| EqualizerTrace {
                soft: t.soft[margin..margin + keep].to_vec(),
                decisions: t.decisions[margin..margin + keep].to_vec(),
                error: t.error[margin..margin + keep].to_vec(),
                mse_db: vec![],
                phase: vec![],
                diverged: None,
                mse_window: t.mse_window,
                training_len: 0,
            };
            let f_win = SymbolSequence::new(
                pair.f.symbols[margin..margin + keep].to_vec(),
                c_f.clone(),
            );
            let emp = empirical_divergence(
                &win(&tr_dith),
                &win(&tr_ref),
                &f_win,
                cfg.min_samples_per_symbol,
            )?;
            let factors = deviation_factors(&w, &h)?;
            let moms = conditional_moments(&w, &h, noise_var, &table)?;
            rows.push(DivergenceRow {
                dither: id.as_str().to_string(),
                equalizer: eq.as_str().to_string(),
                dither_power: table.power(),
                msd_closed: msd_closed_form(&w, &h, table.power())?,
                msd_empirical: emp.msd,
                kl_closed: kl_objective(&moms)?,
                kl_empirical: emp.kl,
                deviation_multiplier: factors.multiplier(),
                cursor_bias: (factors.cursor_gain - Complex64::new(1.0, 0.0)).norm(),
                weights_digest: w.digest(),
            });
        }
    }
    Ok(DivergenceReport {
        config: cfg.clone(),
        snr_db: snr,
        n_symbols: cfg.n_symbols,
        seed: cfg.seed,
        rows,
    })
}

fn curve_csv_push(out: &mut String, arm: &str, trace: &EqualizerTrace, stride: usize) {
    let cut = trace.diverged.unwrap_or(trace.mse_db.len());
    for (n, &mse) in trace.mse_db.iter().enumerate().take(cut) {
        if n % stride == 0 {
            out.push_str(&format!("{n},{arm},{mse},\n"));
        }
    }
    if trace.diverged.is_some() {
        out.push_str(&format!("{cut},{arm},{},diverged\n", trace.mse_db[cut - 1]));
    }
}

/// Learning curves: LMS reference/dithered pairs per step size, and (when an
/// RLS lambda is configured) the true / dithered-replay / conventional
/// playback comparison on the configured channel.
pub fn run_learning_curves(cfg: &ScenarioConfig) -> Result<String, HarnessError> {
    cfg.validate()?;
    let adaptive = cfg
        .adaptive
        .as_ref()
        .ok_or_else(|| HarnessError::Config("learning curves need an adaptive section".into()))?;
    let snr = cfg.snr_list_db[0];
    let noise_var = snr_to_noise_var(snr);
    let id = cfg.dithers[0];
    let (c_g, c_f) = constellation_pair(cfg, id)?;
    let pad = cfg.structure.n0 + 8;
    let n_total = cfg.n_symbols + pad;
    let ch = synth_channel(&cfg.channel, n_total + 2 * ch_span_margin(cfg))?;
    let pair = simulate_pair(&ch, id, &c_g, &c_f, n_total, noise_var, cfg.seed, 0, None)?;
    let s = (cfg.structure.l_f, cfg.structure.l_b, cfg.structure.n0);

    let mut out = format!("# config: {}\n", cfg.echo_json());
    out.push_str("n,arm,mse_db,note\n");

    for &mu in &adaptive.lms_step_sizes {
        let lcfg = AdaptiveConfig {
            algorithm: crate::equalize::AdaptiveAlgorithm::Lms { mu },
            training_len: adaptive.training_len,
            pll: adaptive.pll,
        };
        let tr_ref = run_lms_dfe(&pair.y_f, &lcfg, None, s, &c_f, None, Some(&pair.f), &c_f)?;
        curve_csv_push(
            &mut out,
            &format!("lms_mu{mu}_reference"),
            &tr_ref,
            adaptive.curve_stride,
        );
        let tr_dith = run_lms_dfe(
            &pair.y_g,
            &lcfg,
            None,
            s,
            &c_g,
            Some(&pair.dither),
            Some(&pair.f),
            &c_f,
        )?;
        curve_csv_push(
            &mut out,
            &format!("lms_mu{mu}_dither"),
            &tr_dith,
            adaptive.curve_stride,
        );
    }

    if let Some(lambda) = adaptive.rls_lambda {
        let rcfg = AdaptiveConfig {
            algorithm: crate::equalize::AdaptiveAlgorithm::Rls {
                lambda,
                delta: 100.0,
            },
            training_len: adaptive.training_len,
            pll: adaptive.pll,
        };
        let tr_true = run_rls_dfe(&pair.y_f, &rcfg, s, &c_f, None, Some(&pair.f), &c_f)?;
        curve_csv_push(&mut out, "rls_true", &tr_true, adaptive.curve_stride);
        let tr_dith = run_rls_dfe(
            &pair.y_g,
            &rcfg,
            s,
            &c_g,
            Some(&pair.dither),
            Some(&pair.f),
            &c_f,
        )?;
        curve_csv_push(&mut out, "rls_dither", &tr_dith, adaptive.curve_stride);

        // Conventional playback: estimate the channel from the recorded
        // transmission, replay the virtual sequence through the estimate,
        // and equalize with fresh matched noise.
        let est = estimate_tvir(
            &pair.y_g,
            &pair.g.symbols,
            ch.delay_spread(),
            adaptive.playback_estimator,
        )?;
        let pcfg = PlaybackConfig {
            test_signal_variance: 1.0,
            ambient: AmbientNoise::Synthetic {
                model: NoiseModel::awgn(noise_var),
            },
            rpe: false,
            seed: cfg.seed,
        };
        let mut replay_rng = rng_for(cfg.seed, &[label::AMBIENT, 1]);
        let n_replay = est.span().saturating_sub(ch.delay_spread());
        let f_replay = SymbolSequence::new(
            pair.f.symbols[..n_replay.min(pair.f.len())].to_vec(),
            c_f.clone(),
        );
        let y_play = replay(&f_replay.symbols, &est, None, &pcfg, &mut replay_rng)?;
        let tr_play = run_rls_dfe(&y_play, &rcfg, s, &c_f, None, Some(&f_replay), &c_f)?;
        curve_csv_push(&mut out, "rls_playback", &tr_play, adaptive.curve_stride);
    }
    Ok(out)
}

/// Power traces and soft-decision SNR for true reception vs replay with and
/// without the RPE term.
pub fn run_playback_demo(cfg: &ScenarioConfig) -> Result<String, HarnessError> {
    cfg.validate()?;
    let p = cfg
        .playback
        .as_ref()
        .ok_or_else(|| HarnessError::Config("playback demo needs a playback section".into()))?;
    let snr = cfg.snr_list_db[0];
    let noise_var = snr_to_noise_var(snr);
    let c = build_qam(cfg.map_g)?;
    let l = match &cfg.channel {
        crate::channel::ChannelSpec::Static { taps } => taps[0].len(),
        crate::channel::ChannelSpec::RandomWalk { initial, .. } => initial[0].len(),
        crate::channel::ChannelSpec::SinusoidalFade { base, .. } => base[0].len(),
    };
    let span = p.probe_len + p.test_len + 4 * l + 32;
    let ch = synth_channel(&cfg.channel, span)?;

    // Probe pass: estimate the channel and characterize the residual.
    let mut probe_rng = rng_for(cfg.seed, &[label::PAYLOAD, 0]);
    let g_probe = SymbolSequence::random(p.probe_len, &c, &mut probe_rng);
    let noise = NoiseModel::awgn(noise_var);
    let mut probe_noise = rng_for(cfg.seed, &[label::NOISE, 0]);
    let y_probe = propagate(&g_probe.symbols, &ch, &noise, &mut probe_noise)?;
    let est = estimate_tvir(&y_probe, &g_probe.symbols, l, p.estimator)?;
    let rpe = compute_rpe(&y_probe, &g_probe.symbols, &est)?;
    let sigma_g_sq = g_probe.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>()
        / g_probe.len() as f64;
    let model = fit_rpe_model(&rpe, p.max_lag, sigma_g_sq)?;

    // Test pass on the same channel epoch.
    let mut test_rng = rng_for(cfg.seed, &[label::PAYLOAD, 1]);
    let g_test = SymbolSequence::random(p.test_len, &c, &mut test_rng);
    let mut true_noise = rng_for(cfg.seed, &[label::NOISE, 1]);
    let y_true = propagate(&g_test.symbols, &ch, &noise, &mut true_noise)?;

    let base_cfg = PlaybackConfig {
        test_signal_variance: sigma_g_sq,
        ambient: AmbientNoise::Synthetic { model: noise },
        rpe: false,
        seed: cfg.seed,
    };
    let mut rng_on = rng_for(cfg.seed, &[label::RPE, 1]);
    let y_on = replay(
        &g_test.symbols,
        &est,
        Some(&model),
        &PlaybackConfig {
            rpe: true,
            ..base_cfg.clone()
        },
        &mut rng_on,
    )?;
    let mut rng_off = rng_for(cfg.seed, &[label::RPE, 2]);
    let y_off = replay(&g_test.symbols, &est, None, &base_cfg, &mut rng_off)?;
    let mut rng_alone = rng_for(cfg.seed, &[label::RPE, 3]);
    let rpe_alone = gen_rpe_noise(&model, y_true[0].len(), sigma_g_sq, &mut rng_alone)?;

    let mut out = format!("# config: {}\n", cfg.echo_json());
    out.push_str(&format!(
        "# rpe_power: {}, noise_var: {}, rpe_to_noise: {}\n",
        model.total_power(),
        noise_var,
        model.total_power() / (model.n_receivers() as f64 * noise_var)
    ));
    out.push_str("metric,series,index,value\n");
    let series: [(&str, &Vec<Complex64>); 4] = [
        ("true", &y_true[0]),
        ("rpe_on", &y_on[0]),
        ("rpe_off", &y_off[0]),
        ("rpe_alone", &rpe_alone[0]),
    ];
    for (name, data) in &series {
        for (i, v) in power_trace(data, p.power_window).iter().enumerate() {
            out.push_str(&format!("power,{name},{i},{v}\n"));
        }
        let mean = data.iter().map(|x| x.norm_sqr()).sum::<f64>() / data.len() as f64;
        out.push_str(&format!(
            "mean_power_db,{name},0,{}\n",
            10.0 * mean.max(1e-30).log10()
        ));
    }

    // Equalizer soft-decision SNR per arm. The probe sequence is known to
    // the receiver (a continuously repeated probe), so the equalizer adapts
    // against the known reference for the whole run; decision-directed
    // operation at these SNRs collapses into predicting its own feedback.
    let rcfg = AdaptiveConfig {
        algorithm: crate::equalize::AdaptiveAlgorithm::Rls {
            lambda: p.rls_lambda,
            delta: 100.0,
        },
        training_len: g_test.len(),
        pll: crate::equalize::PllConfig::Off,
    };
    let s = (cfg.structure.l_f, cfg.structure.l_b, cfg.structure.n0);
    for (name, y) in [("true", &y_true), ("rpe_on", &y_on), ("rpe_off", &y_off)] {
        let tr = run_rls_dfe(y, &rcfg, s, &c, None, Some(&g_test), &c)?;
        for (i, v) in soft_decision_snr(&tr, p.snr_window).iter().enumerate() {
            out.push_str(&format!("snr_db,{name},{i},{v}\n"));
        }
    }
    Ok(out)
}

/// Equalized-output scatter data for one SNR point: (n, arm, re, im, label).
pub fn run_constellation_scatter(
    cfg: &ScenarioConfig,
    max_points: usize,
) -> Result<String, HarnessError> {
    cfg.validate()?;
    let snr = cfg.snr_list_db[0];
    let noise_var = snr_to_noise_var(snr);
    let id = cfg.dithers[0];
    let (c_g, c_f) = constellation_pair(cfg, id)?;
    let pad = cfg.structure.n0 + 8;
    let n_total = cfg.n_symbols.min(max_points.max(1000)) + pad;
    let ch = synth_channel(&cfg.channel, n_total + 2 * ch_span_margin(cfg))?;
    let h = design_matrix(&ch, &cfg.structure)?;
    let pair = simulate_pair(
        &ch,
        id,
        &c_g,
        &c_f,
        n_total,
        noise_var,
        cfg.seed,
        0,
        None,
    )?;
    let eq = cfg.equalizers[0];
    let w = design_weights(eq, &h, noise_var, &cfg.structure)?;
    let tr_ref = run_dfe(&pair.y_f, &w, &c_f, None, None, &c_f)?;
    let tr_dith = run_dfe(&pair.y_g, &w, &c_g, Some(&pair.dither), None, &c_f)?;
    let labels = pair.f.labels();

    let mut out = format!("# config: {}\n", cfg.echo_json());
    out.push_str("n,arm,re,im,label\n");
    let n_dump = max_points.min(tr_ref.soft.len()).min(tr_dith.soft.len());
    for (arm, tr) in [("reference", &tr_ref), ("dither", &tr_dith)] {
        for n in 0..n_dump {
            out.push_str(&format!(
                "{n},{arm},{},{},{}\n",
                tr.soft[n].re, tr.soft[n].im, labels[n]
            ));
        }
    }
    Ok(out)
}
