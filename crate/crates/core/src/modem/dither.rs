//! Additive dither maps between constellations of different order.
//!
//! All maps keep the crate convention `m[n] = g[n] - f[n]` with `g` the
//! transmitted sequence and `f` the virtual one. Minimal-l2 maps stay in the
//! same quadrant; worst-case maps use the antipodal quadrant, which mirrors
//! the minimal map and maximises the dither magnitude among quadrant-shaped
//! assignments.
//!
//! A per-symbol balanced map (conditional dither mean zero for every virtual
//! symbol) does not exist between QPSK and 16QAM in either direction, so
//! [`DitherSequence`] and [`DitherMap`] surface the achieved conditional
//! means instead; the unconditional mean of every map here is zero.

use super::constellation::{Constellation, SymbolSequence};
use super::ModemError;
use crate::bitlayer::BitStream;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A realized dither sequence plus its empirical conditional-mean table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DitherSequence {
    /// m[n] = g[n] - f[n].
    pub values: Vec<Complex64>,
    /// Empirical E(m | f = k), indexed by virtual-constellation label.
    pub cond_mean: Vec<Complex64>,
    /// Empirical E|m|^2.
    pub power: f64,
}

impl DitherSequence {
    /// Build from realized values and the virtual sequence they attach to.
    pub fn from_values(values: Vec<Complex64>, f_virtual: &SymbolSequence) -> Self {
        let order = f_virtual.constellation.order();
        let mut sums = vec![Complex64::new(0.0, 0.0); order];
        let mut counts = vec![0usize; order];
        let mut power = 0.0;
        for (&m, &f) in values.iter().zip(&f_virtual.symbols) {
            let label = f_virtual.constellation.label_of(f);
            sums[label] += m;
            counts[label] += 1;
            power += m.norm_sqr();
        }
        let cond_mean = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| if c > 0 { s / c as f64 } else { Complex64::new(0.0, 0.0) })
            .collect();
        let n = values.len().max(1);
        Self {
            values,
            cond_mean,
            power: power / n as f64,
        }
    }

    /// All-zero dither of the given length (no-op replay).
    pub fn zeros(len: usize, f_order: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); len],
            cond_mean: vec![Complex64::new(0.0, 0.0); f_order],
            power: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Exact joint description of a dither map under uniform transmitted symbols:
/// for each virtual label `k`, the distribution of `m` given `f = k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DitherMap {
    pub id: String,
    pub f_constellation: Constellation,
    pub g_constellation: Constellation,
    /// p(f = k), indexed by virtual label.
    pub p_f: Vec<f64>,
    /// Per virtual label: (dither value, conditional probability).
    pub table: Vec<Vec<(Complex64, f64)>>,
}

impl DitherMap {
    /// E(m | f = k).
    pub fn cond_mean(&self, label: usize) -> Complex64 {
        self.table[label]
            .iter()
            .map(|&(m, p)| m * p)
            .sum::<Complex64>()
    }

    /// E(|m|^2 | f = k).
    pub fn cond_abs2(&self, label: usize) -> f64 {
        self.table[label].iter().map(|&(m, p)| m.norm_sqr() * p).sum()
    }

    /// E(g | f = k) = k + E(m | f = k).
    pub fn cond_mean_g(&self, label: usize) -> Complex64 {
        self.f_constellation.point(label) + self.cond_mean(label)
    }

    /// Unconditional dither power E|m|^2.
    pub fn power(&self) -> f64 {
        self.p_f
            .iter()
            .enumerate()
            .map(|(k, &p)| p * self.cond_abs2(k))
            .sum()
    }

    /// Unconditional dither mean.
    pub fn mean(&self) -> Complex64 {
        self.p_f
            .iter()
            .enumerate()
            .map(|(k, &p)| self.cond_mean(k) * p)
            .sum()
    }
}

fn same_quadrant(a: Complex64, b: Complex64) -> bool {
    (a.re >= 0.0) == (b.re >= 0.0) && (a.im >= 0.0) == (b.im >= 0.0)
}

/// Labels of the `m` nearest points of `c` to `z`, distance ties broken by
/// label order.
fn nearest_labels(c: &Constellation, z: Complex64, m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..c.order()).collect();
    order.sort_by(|&a, &b| {
        let da = (c.point(a) - z).norm_sqr();
        let db = (c.point(b) - z).norm_sqr();
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    order.truncate(m);
    order
}

fn down_target(g: Complex64, f_const: &Constellation, worst: bool) -> usize {
    if worst {
        // Furthest low-order point; for square grids this is the antipodal
        // quadrant's point.
        let mut best = 0;
        let mut best_d = -1.0;
        for (label, &p) in f_const.points().iter().enumerate() {
            let d = (g - p).norm_sqr();
            if d > best_d {
                best_d = d;
                best = label;
            }
        }
        best
    } else {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (label, &p) in f_const.points().iter().enumerate() {
            if !same_quadrant(g, p) {
                continue;
            }
            let d = (g - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = Some(label);
            }
        }
        // Square QAM always has a same-quadrant candidate.
        best.unwrap_or_else(|| nearest_labels(f_const, g, 1)[0])
    }
}

fn check_down(g: &SymbolSequence, f_const: &Constellation) -> Result<(), ModemError> {
    if f_const.order_exponent() >= g.constellation.order_exponent() {
        return Err(ModemError::UnsupportedOrder(format!(
            "down-map needs a lower-order target: {} -> {}",
            g.constellation.order_exponent(),
            f_const.order_exponent()
        )));
    }
    Ok(())
}

/// Re-interpret a transmitted high-order sequence as a low-order one: each
/// g[n] maps to the nearest same-quadrant point of `f_const` (minimal-l2).
pub fn dither_downmap(
    g: &SymbolSequence,
    f_const: &Constellation,
) -> Result<(SymbolSequence, DitherSequence), ModemError> {
    check_down(g, f_const)?;
    let mut f = Vec::with_capacity(g.len());
    let mut m = Vec::with_capacity(g.len());
    for &gs in &g.symbols {
        let fp = f_const.point(down_target(gs, f_const, false));
        f.push(fp);
        m.push(gs - fp);
    }
    let f_seq = SymbolSequence::new(f, f_const.clone());
    let dither = DitherSequence::from_values(m, &f_seq);
    Ok((f_seq, dither))
}

/// Worst-case down-map: each g[n] maps to the furthest point of `f_const`.
pub fn dither_worst_downmap(
    g: &SymbolSequence,
    f_const: &Constellation,
) -> Result<(SymbolSequence, DitherSequence), ModemError> {
    check_down(g, f_const)?;
    let mut f = Vec::with_capacity(g.len());
    let mut m = Vec::with_capacity(g.len());
    for &gs in &g.symbols {
        let fp = f_const.point(down_target(gs, f_const, true));
        f.push(fp);
        m.push(gs - fp);
    }
    let f_seq = SymbolSequence::new(f, f_const.clone());
    let dither = DitherSequence::from_values(m, &f_seq);
    Ok((f_seq, dither))
}

fn upmap_stages(f_k: u32, g_k: u32) -> Result<u32, ModemError> {
    if f_k < 2 || g_k <= f_k || !g_k.is_multiple_of(f_k) {
        return Err(ModemError::UnsupportedOrder(format!(
            "up-map needs a square source and a target exponent that is a multiple of it: {f_k} -> {g_k}"
        )));
    }
    Ok(g_k / f_k)
}

fn upmap_core(
    f: &SymbolSequence,
    extra_bits: &BitStream,
    g_const: &Constellation,
    negate_lead: bool,
) -> Result<(SymbolSequence, DitherSequence), ModemError> {
    let stages = upmap_stages(f.constellation.order_exponent(), g_const.order_exponent())?;
    let k_f = f.constellation.bits_per_symbol();
    let needed = f.len() * k_f * (stages as usize - 1);
    if extra_bits.len() != needed {
        return Err(ModemError::LengthError {
            expected: needed,
            got: extra_bits.len(),
        });
    }
    // Per-stage weight is the source's levels-per-axis, so the stacked axis
    // values enumerate the target grid; the grid rescale is the ratio of
    // energy scales and the result is unit energy by construction.
    let levels = 2f64.powi(f.constellation.order_exponent() as i32 / 2);
    let rescale = g_const.energy_scale() / f.constellation.energy_scale();
    let mut g = Vec::with_capacity(f.len());
    let mut m = Vec::with_capacity(f.len());
    let mut bit_pos = 0usize;
    for (n, &fs) in f.symbols.iter().enumerate() {
        let lead = if negate_lead { -fs } else { fs };
        let mut raw = lead * levels.powi(stages as i32 - 1);
        for i in 1..stages {
            let mut label = 0usize;
            for _ in 0..k_f {
                label = (label << 1) | extra_bits.bits()[bit_pos] as usize;
                bit_pos += 1;
            }
            raw += f.constellation.point(label) * levels.powi((stages - 1 - i) as i32);
        }
        let scaled = raw * rescale;
        let gp = g_const.point(g_const.label_of(scaled));
        debug_assert!(
            (gp - scaled).norm() < 1e-9,
            "constructed point off-grid at n={n}: {scaled} vs {gp}"
        );
        g.push(gp);
        m.push(gp - fs);
    }
    let f_seq = f.clone();
    let dither = DitherSequence::from_values(m, &f_seq);
    Ok((SymbolSequence::new(g, g_const.clone()), dither))
}

/// Build the transmitted high-order sequence from a desired low-order one:
/// the quadrant carries f[n] and the sub-position carries `extra_bits`, so
/// g[n] stays in the same (sub-)quadrant as f[n] and the dither has minimal
/// l2 norm among the admissible assignments.
pub fn dither_upmap(
    f: &SymbolSequence,
    extra_bits: &BitStream,
    g_const: &Constellation,
) -> Result<(SymbolSequence, DitherSequence), ModemError> {
    upmap_core(f, extra_bits, g_const, false)
}

/// Worst-case up-map: the quadrant of g[n] is antipodal to f[n].
pub fn dither_worst_upmap(
    f: &SymbolSequence,
    extra_bits: &BitStream,
    g_const: &Constellation,
) -> Result<(SymbolSequence, DitherSequence), ModemError> {
    upmap_core(f, extra_bits, g_const, true)
}

/// Grouped up-map: the tail of `f` supplies the extra bits, halving (for one
/// stage) the transmitted length. Returns the pairing dither against the head.
pub fn dither_upmap_grouped(
    f: &SymbolSequence,
    g_const: &Constellation,
) -> Result<(SymbolSequence, DitherSequence), ModemError> {
    let stages = upmap_stages(f.constellation.order_exponent(), g_const.order_exponent())? as usize;
    if !f.len().is_multiple_of(stages) {
        return Err(ModemError::FramingError(format!(
            "sequence length {} not divisible by {stages} stages",
            f.len()
        )));
    }
    let n = f.len() / stages;
    let head = SymbolSequence::new(f.symbols[..n].to_vec(), f.constellation.clone());
    let tail = SymbolSequence::new(f.symbols[n..].to_vec(), f.constellation.clone());
    upmap_core(&head, &tail.to_bits(), g_const, false)
}

fn random_up(
    g: &SymbolSequence,
    f_const: &Constellation,
    rng: &mut impl Rng,
    opposite: bool,
) -> Result<(SymbolSequence, DitherSequence), ModemError> {
    if f_const.order_exponent() <= g.constellation.order_exponent() {
        return Err(ModemError::UnsupportedOrder(format!(
            "random up-map needs a higher-order target: {} -> {}",
            g.constellation.order_exponent(),
            f_const.order_exponent()
        )));
    }
    let m_candidates = f_const.order() / g.constellation.order();
    let mut f = Vec::with_capacity(g.len());
    let mut m = Vec::with_capacity(g.len());
    for &gs in &g.symbols {
        let anchor = if opposite { -gs } else { gs };
        let candidates = nearest_labels(f_const, anchor, m_candidates);
        let fp = f_const.point(candidates[rng.gen_range(0..candidates.len())]);
        f.push(fp);
        m.push(gs - fp);
    }
    let f_seq = SymbolSequence::new(f, f_const.clone());
    let dither = DitherSequence::from_values(m, &f_seq);
    Ok((f_seq, dither))
}

/// Re-interpret a transmitted low-order sequence as a high-order one by
/// drawing uniformly among the nearest candidates in g[n]'s quadrant.
pub fn dither_random_nearest(
    g: &SymbolSequence,
    f_const: &Constellation,
    rng: &mut impl Rng,
) -> Result<(SymbolSequence, DitherSequence), ModemError> {
    random_up(g, f_const, rng, false)
}

/// Worst-case random up-map: candidates sit in the antipodal quadrant.
pub fn dither_random_opposite(
    g: &SymbolSequence,
    f_const: &Constellation,
    rng: &mut impl Rng,
) -> Result<(SymbolSequence, DitherSequence), ModemError> {
    random_up(g, f_const, rng, true)
}

/// Exact distribution table for a map between `g_const` (transmitted) and
/// `f_const` (virtual) under uniform transmitted symbols. Equal orders give
/// the zero-dither control map.
pub fn dither_map_table(
    g_const: &Constellation,
    f_const: &Constellation,
    worst: bool,
    id: &str,
) -> DitherMap {
    let orders = (g_const.order(), f_const.order());
    let mut weights = vec![Vec::<(Complex64, f64)>::new(); f_const.order()];
    let mut p_f = vec![0.0; f_const.order()];
    let add = |weights: &mut Vec<Vec<(Complex64, f64)>>,
               p_f: &mut Vec<f64>,
               label: usize,
               m: Complex64,
               w: f64| {
        weights[label].push((m, w));
        p_f[label] += w;
    };
    if orders.0 > orders.1 {
        for &gp in g_const.points() {
            let label = down_target(gp, f_const, worst);
            add(
                &mut weights,
                &mut p_f,
                label,
                gp - f_const.point(label),
                1.0 / orders.0 as f64,
            );
        }
    } else if orders.0 < orders.1 {
        let m_candidates = orders.1 / orders.0;
        for &gp in g_const.points() {
            let anchor = if worst { -gp } else { gp };
            for label in nearest_labels(f_const, anchor, m_candidates) {
                add(
                    &mut weights,
                    &mut p_f,
                    label,
                    gp - f_const.point(label),
                    1.0 / (orders.0 * m_candidates) as f64,
                );
            }
        }
    } else {
        for label in 0..orders.1 {
            add(
                &mut weights,
                &mut p_f,
                label,
                Complex64::new(0.0, 0.0),
                1.0 / orders.1 as f64,
            );
        }
    }
    let table = weights
        .iter()
        .zip(&p_f)
        .map(|(entries, &p)| {
            if p > 0.0 {
                entries.iter().map(|&(m, w)| (m, w / p)).collect()
            } else {
                Vec::new()
            }
        })
        .collect();
    DitherMap {
        id: id.to_string(),
        f_constellation: f_const.clone(),
        g_constellation: g_const.clone(),
        p_f,
        table,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::build_qam;
    use crate::seeds::rng_for;

    fn qpsk() -> Constellation {
        build_qam(2).unwrap()
    }

    fn qam16() -> Constellation {
        build_qam(4).unwrap()
    }

    const RATIO_WORST_OPT: f64 = 17.944271909999157; // (sqrt(5)+2)^2

    #[test]
    fn downmap_corner_goes_to_quadrant_point() {
        let s10 = 1.0 / 10f64.sqrt();
        let s2 = 1.0 / 2f64.sqrt();
        let g = SymbolSequence::new(vec![Complex64::new(3.0 * s10, 3.0 * s10)], qam16());
        let (f, m) = dither_downmap(&g, &qpsk()).unwrap();
        assert!((f.symbols[0] - Complex64::new(s2, s2)).norm() < 1e-12);
        assert!((m.values[0] - (g.symbols[0] - f.symbols[0])).norm() == 0.0);

        let (fw, _) = dither_worst_downmap(&g, &qpsk()).unwrap();
        assert!((fw.symbols[0] - Complex64::new(-s2, -s2)).norm() < 1e-12);
    }

    #[test]
    fn downmap_preserves_quadrant_for_all_points() {
        let g = SymbolSequence::new(qam16().points().to_vec(), qam16());
        let (f, m) = dither_downmap(&g, &qpsk()).unwrap();
        for (gs, fs) in g.symbols.iter().zip(&f.symbols) {
            assert_eq!(gs.re > 0.0, fs.re > 0.0);
            assert_eq!(gs.im > 0.0, fs.im > 0.0);
        }
        // m = g - f exactly, elementwise.
        for ((gs, fs), mv) in g.symbols.iter().zip(&f.symbols).zip(&m.values) {
            assert_eq!(*mv, gs - fs);
        }
    }

    #[test]
    fn downmap_is_pointwise_minimal_and_beats_random_assignments() {
        let c4 = qpsk();
        let c16 = qam16();
        for &gp in c16.points() {
            let fp = c4.point(down_target(gp, &c4, false));
            for &alt in c4.points() {
                assert!((gp - fp).norm_sqr() <= (gp - alt).norm_sqr() + 1e-12);
            }
        }
        // Ensemble power beats balanced random assignments (each virtual
        // point receiving exactly four transmitted points).
        let opt_power = dither_map_table(&c16, &c4, false, "m1_down").power();
        let mut rng = rng_for(31, &[1]);
        for _ in 0..2000 {
            let mut labels: Vec<usize> = (0..16).map(|i| i / 4).collect();
            for i in (1..16).rev() {
                let j = rng.gen_range(0..=i);
                labels.swap(i, j);
            }
            let power: f64 = c16
                .points()
                .iter()
                .zip(&labels)
                .map(|(&gp, &l)| (gp - c4.point(l)).norm_sqr() / 16.0)
                .sum();
            assert!(opt_power <= power + 1e-12);
        }
    }

    #[test]
    fn worst_down_dominates_and_ratio_is_closed_form() {
        let c4 = qpsk();
        let c16 = qam16();
        let mut rng = rng_for(31, &[2]);
        let g = SymbolSequence::random(512, &c16, &mut rng);
        let (_, m1) = dither_downmap(&g, &c4).unwrap();
        let (_, m2) = dither_worst_downmap(&g, &c4).unwrap();
        assert!(m2.power >= m1.power);

        let t1 = dither_map_table(&c16, &c4, false, "m1_down");
        let t2 = dither_map_table(&c16, &c4, true, "m2_down");
        assert!((t2.power() / t1.power() - RATIO_WORST_OPT).abs() < 1e-9);
        // Unconditional mean is zero for both.
        assert!(t1.mean().norm() < 1e-12);
        assert!(t2.mean().norm() < 1e-12);
    }

    #[test]
    fn upmap_pairing_example() {
        let c4 = qpsk();
        let c16 = qam16();
        let s2 = 1.0 / 2f64.sqrt();
        let f = SymbolSequence::new(
            vec![Complex64::new(s2, s2), Complex64::new(s2, -s2)],
            c4.clone(),
        );
        let (g, _) = dither_upmap_grouped(&f, &c16).unwrap();
        assert_eq!(g.len(), 1);
        let s10 = 1.0 / 10f64.sqrt();
        assert!((g.symbols[0] - Complex64::new(3.0 * s10, s10)).norm() < 1e-12);
    }

    #[test]
    fn upmap_quadrants_match_and_worst_flips() {
        let c4 = qpsk();
        let c16 = qam16();
        let mut rng = rng_for(31, &[3]);
        let f = SymbolSequence::random(256, &c4, &mut rng);
        let extra = BitStream::random(512, &mut rng);
        let (g, m) = dither_upmap(&f, &extra, &c16).unwrap();
        for (fs, gs) in f.symbols.iter().zip(&g.symbols) {
            assert_eq!(fs.re > 0.0, gs.re > 0.0);
            assert_eq!(fs.im > 0.0, gs.im > 0.0);
        }
        let (gw, mw) = dither_worst_upmap(&f, &extra, &c16).unwrap();
        for (fs, gs) in f.symbols.iter().zip(&gw.symbols) {
            assert_eq!(fs.re > 0.0, gs.re < 0.0);
            assert_eq!(fs.im > 0.0, gs.im < 0.0);
        }
        assert!(mw.power > m.power);

        // Theorem-1 style pointwise check: the optimal g is at least as close
        // to f as any point outside f's quadrant.
        for (fs, mv) in f.symbols.iter().zip(&m.values) {
            for &alt in c16.points() {
                if !same_quadrant(*fs, alt) {
                    assert!(mv.norm_sqr() <= (alt - fs).norm_sqr() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn upmap_exhaustive_pairs_beat_worst() {
        let c4 = qpsk();
        let c16 = qam16();
        for a in 0..4usize {
            for b in 0..4usize {
                let f = SymbolSequence::new(vec![c4.point(a)], c4.clone());
                let mut bits = Vec::new();
                c4.push_label_bits(b, &mut bits);
                let extra = BitStream::new(bits).unwrap();
                let (_, m1) = dither_upmap(&f, &extra, &c16).unwrap();
                let (_, m2) = dither_worst_upmap(&f, &extra, &c16).unwrap();
                assert!(m1.power < m2.power);
            }
        }
    }

    #[test]
    fn random_nearest_support_energy_and_mean() {
        let c4 = qpsk();
        let c16 = qam16();
        let mut rng = rng_for(31, &[4]);
        let n = 100_000;
        let g = SymbolSequence::random(n, &c4, &mut rng);
        let (f, m) = dither_random_nearest(&g, &c16, &mut rng).unwrap();

        // Support: each output is one of the four same-quadrant points.
        for (gs, fs) in g.symbols.iter().zip(&f.symbols).take(2000) {
            assert_eq!(gs.re > 0.0, fs.re > 0.0);
            assert_eq!(gs.im > 0.0, fs.im > 0.0);
        }
        // Unit energy of the virtual constellation sequence.
        let ef: f64 = f.symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
        assert!((ef - 1.0).abs() < 4.0 / (n as f64).sqrt());
        // g = f + m exactly.
        for ((gs, fs), mv) in g.symbols.iter().zip(&f.symbols).zip(&m.values).take(2000) {
            assert_eq!(*mv, gs - fs);
        }
        // The map is balanced only unconditionally: the overall mean vanishes
        // while per-symbol conditional means stay finite (no balanced map
        // exists between these orders).
        let mean = m.values.iter().sum::<Complex64>() / n as f64;
        let sigma = (m.power / n as f64).sqrt();
        assert!(mean.norm() < 4.0 * sigma);
        let table = dither_map_table(&c4, &c16, false, "m1_up");
        assert!(table.mean().norm() < 1e-12);
        for k in 0..16 {
            let expect = table.cond_mean(k);
            assert!((m.cond_mean[k] - expect).norm() < 0.1, "label {k}");
        }
    }

    #[test]
    fn random_opposite_mirrors_nearest() {
        let c4 = qpsk();
        let c16 = qam16();
        let t1 = dither_map_table(&c4, &c16, false, "m1_up");
        let t2 = dither_map_table(&c4, &c16, true, "m2_up");
        assert!((t2.power() / t1.power() - RATIO_WORST_OPT).abs() < 1e-9);

        let mut rng = rng_for(31, &[5]);
        let g = SymbolSequence::random(4096, &c4, &mut rng);
        let (f, _) = dither_random_opposite(&g, &c16, &mut rng).unwrap();
        for (gs, fs) in g.symbols.iter().zip(&f.symbols) {
            assert_eq!(gs.re > 0.0, fs.re < 0.0);
            assert_eq!(gs.im > 0.0, fs.im < 0.0);
        }
    }

    #[test]
    fn map_tables_are_normalized() {
        let c4 = qpsk();
        let c16 = qam16();
        for (t, expected_pf) in [
            (dither_map_table(&c16, &c4, false, "m1_down"), 0.25),
            (dither_map_table(&c16, &c4, true, "m2_down"), 0.25),
            (dither_map_table(&c4, &c16, false, "m1_up"), 1.0 / 16.0),
            (dither_map_table(&c4, &c16, true, "m2_up"), 1.0 / 16.0),
        ] {
            let total: f64 = t.p_f.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            for &p in &t.p_f {
                assert!((p - expected_pf).abs() < 1e-12);
            }
            for k in 0..t.p_f.len() {
                let s: f64 = t.table[k].iter().map(|&(_, p)| p).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
        // Equal orders: zero-dither control.
        let t0 = dither_map_table(&c4, &c4, false, "none");
        assert_eq!(t0.power(), 0.0);
    }

    #[test]
    fn grouped_matches_explicit_extra_bits() {
        let c4 = qpsk();
        let c16 = qam16();
        let mut rng = rng_for(31, &[6]);
        let f = SymbolSequence::random(64, &c4, &mut rng);
        let head = SymbolSequence::new(f.symbols[..32].to_vec(), c4.clone());
        let tail = SymbolSequence::new(f.symbols[32..].to_vec(), c4.clone());
        let (g1, d1) = dither_upmap_grouped(&f, &c16).unwrap();
        let (g2, d2) = dither_upmap(&head, &tail.to_bits(), &c16).unwrap();
        assert_eq!(g1.symbols, g2.symbols);
        assert_eq!(d1.values, d2.values);
    }

    #[test]
    fn map_serialization_roundtrips() {
        let t = dither_map_table(&qam16(), &qpsk(), false, "m1_down");
        let json = serde_json::to_string(&t).unwrap();
        let back: DitherMap = serde_json::from_str(&json).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn order_errors() {
        let c4 = qpsk();
        let c16 = qam16();
        let mut rng = rng_for(31, &[7]);
        let g = SymbolSequence::random(8, &c4, &mut rng);
        assert!(dither_downmap(&g, &c16).is_err());
        let f = SymbolSequence::random(8, &c16, &mut rng);
        let bits = BitStream::random(16, &mut rng);
        assert!(dither_upmap(&f, &bits, &c4).is_err());
        // Wrong extra-bit count.
        let f4 = SymbolSequence::random(8, &c4, &mut rng);
        let bits = BitStream::random(15, &mut rng);
        assert!(matches!(
            dither_upmap(&f4, &bits, &c16),
            Err(ModemError::LengthError { expected: 16, got: 15 })
        ));
    }
}
