//! Gray-labeled QAM constellations and bit/symbol mapping.

use super::ModemError;
use crate::bitlayer::BitStream;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A unit-mean-energy constellation. `points[label]` is the complex point
/// carrying that Gray label; labels are `order_exponent`-bit values with the
/// in-phase axis in the high bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    order_exponent: u32,
    points: Vec<Complex64>,
    energy_scale: f64,
}

fn gray_inverse(mut g: usize) -> usize {
    let mut i = 0;
    while g != 0 {
        i ^= g;
        g >>= 1;
    }
    i
}

impl Constellation {
    pub fn order_exponent(&self) -> u32 {
        self.order_exponent
    }

    /// Bits carried per symbol (same as the order exponent).
    pub fn bits_per_symbol(&self) -> usize {
        self.order_exponent as usize
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    pub fn energy_scale(&self) -> f64 {
        self.energy_scale
    }

    /// Per-axis scaled levels, ascending (square QAM only).
    pub fn axis_levels(&self) -> Vec<f64> {
        if self.order_exponent == 1 {
            return vec![-1.0, 1.0];
        }
        let half = self.order_exponent / 2;
        let m = 1usize << half;
        (0..m)
            .map(|i| (2.0 * i as f64 - (m as f64 - 1.0)) * self.energy_scale)
            .collect()
    }

    /// Append the label bits of `label`, MSB first.
    pub fn push_label_bits(&self, label: usize, out: &mut Vec<u8>) {
        for i in (0..self.bits_per_symbol()).rev() {
            out.push(((label >> i) & 1) as u8);
        }
    }

    /// Exact label of a point that lies on the constellation (nearest match).
    pub fn label_of(&self, point: Complex64) -> usize {
        slice_index_unchecked(point, self)
    }
}

/// Build a unit-mean-energy Gray-labeled constellation with `2^k` points.
/// `k` must be 1 (BPSK) or even (square QAM) and at most 8.
pub fn build_qam(k: u32) -> Result<Constellation, ModemError> {
    if k == 0 || k > 8 || (k != 1 && !k.is_multiple_of(2)) {
        return Err(ModemError::UnsupportedOrder(format!(
            "order exponent {k} (need 1 or even <= 8)"
        )));
    }
    if k == 1 {
        return Ok(Constellation {
            order_exponent: 1,
            points: vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)],
            energy_scale: 1.0,
        });
    }
    let half = k / 2;
    let m = 1usize << half; // levels per axis
    // Mean energy of {..,-3,-1,1,3,..} per axis is (M^2 - 1)/3.
    let scale = (3.0 / (2.0 * ((m * m) as f64 - 1.0))).sqrt();
    let level = |axis_label: usize| -> f64 {
        let i = gray_inverse(axis_label);
        (2.0 * i as f64 - (m as f64 - 1.0)) * scale
    };
    let mut points = vec![Complex64::new(0.0, 0.0); 1 << k];
    for (label, p) in points.iter_mut().enumerate() {
        let i_label = label >> half;
        let q_label = label & (m - 1);
        *p = Complex64::new(level(i_label), level(q_label));
    }
    Ok(Constellation {
        order_exponent: k,
        points,
        energy_scale: scale,
    })
}

/// A sequence of complex symbols drawn from one constellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSequence {
    pub symbols: Vec<Complex64>,
    pub constellation: Constellation,
}

impl SymbolSequence {
    pub fn new(symbols: Vec<Complex64>, constellation: Constellation) -> Self {
        Self {
            symbols,
            constellation,
        }
    }

    /// Uniform random symbols.
    pub fn random<R: rand::Rng + ?Sized>(
        len: usize,
        constellation: &Constellation,
        rng: &mut R,
    ) -> Self {
        let symbols = (0..len)
            .map(|_| constellation.point(rng.gen_range(0..constellation.order())))
            .collect();
        Self {
            symbols,
            constellation: constellation.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Labels of each symbol (nearest-point match).
    pub fn labels(&self) -> Vec<usize> {
        self.symbols
            .iter()
            .map(|&s| self.constellation.label_of(s))
            .collect()
    }

    /// Demap to bits, MSB first per symbol.
    pub fn to_bits(&self) -> BitStream {
        let mut bits = Vec::with_capacity(self.len() * self.constellation.bits_per_symbol());
        for &s in &self.symbols {
            let label = self.constellation.label_of(s);
            self.constellation.push_label_bits(label, &mut bits);
        }
        BitStream::new(bits).expect("labels produce valid bits")
    }
}

/// Map a bit stream onto constellation symbols, k bits per symbol.
/// A trailing partial group is zero-padded.
pub fn map_symbols(p: &BitStream, c: &Constellation) -> SymbolSequence {
    let k = c.bits_per_symbol();
    let n = p.len().div_ceil(k);
    let mut symbols = Vec::with_capacity(n);
    for chunk in p.bits().chunks(k) {
        let mut label = 0usize;
        for i in 0..k {
            let b = chunk.get(i).copied().unwrap_or(0) as usize;
            label = (label << 1) | b;
        }
        symbols.push(c.point(label));
    }
    SymbolSequence::new(symbols, c.clone())
}

fn slice_index_unchecked(z: Complex64, c: &Constellation) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (label, &p) in c.points().iter().enumerate() {
        let d = (z - p).norm_sqr();
        if d < best_d {
            best_d = d;
            best = label;
        }
    }
    best
}

/// Label of the nearest constellation point; ties break to the lowest label.
pub fn slice_index(z: Complex64, c: &Constellation) -> Result<usize, ModemError> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(ModemError::NumericError(format!("non-finite input {z}")));
    }
    Ok(slice_index_unchecked(z, c))
}

/// Nearest constellation point to `z`.
pub fn slice(z: Complex64, c: &Constellation) -> Result<Complex64, ModemError> {
    Ok(c.point(slice_index(z, c)?))
}
