//! Bit-domain processing: FEC, interleaving, and whitening.
//!
//! The whitening trick re-interprets a fixed transmitted bit sequence as the
//! output of a different encoder. Two sign conventions exist for the
//! whitening sequence and both appear in practice:
//!
//! - the *match form* (XNOR): `s[n] = 1` exactly where the two coded streams
//!   agree, which is what [`design_whitener`] returns;
//! - the *mask form* (XOR): the complement of the match form, obtained via
//!   [`WhiteningSequence::xor_mask`], which satisfies
//!   `apply_whitener(d, &s.xor_mask()) == d2`.
//!
//! [`apply_whitener`] is always a plain XOR and is therefore involutive. The
//! harness carries the mask form internally; the match form is kept as the
//! designed representation because it is the more common way the sequence is
//! written down.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from bit-domain operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitError {
    #[error("empty bit stream")]
    EmptyStream,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthError { expected: usize, got: usize },
    #[error("framing error: {0}")]
    FramingError(String),
    #[error("invalid bit value {value} at index {index}")]
    InvalidBit { index: usize, value: u8 },
}

/// An ordered sequence of bits, each 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    bits: Vec<u8>,
}

impl BitStream {
    /// Build from raw 0/1 bytes, rejecting anything else.
    pub fn new(bits: Vec<u8>) -> Result<Self, BitError> {
        for (index, &value) in bits.iter().enumerate() {
            if value > 1 {
                return Err(BitError::InvalidBit { index, value });
            }
        }
        Ok(Self { bits })
    }

    /// Build from bools.
    pub fn from_bools(bits: &[bool]) -> Self {
        Self {
            bits: bits.iter().map(|&b| b as u8).collect(),
        }
    }

    /// Uniform random stream of `len` bits.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..len).map(|_| rng.gen_range(0..=1u8)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Elementwise complement.
    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| b ^ 1).collect(),
        }
    }

    /// Elementwise XOR with another stream of equal length.
    pub fn xor(&self, other: &Self) -> Result<Self, BitError> {
        if self.len() != other.len() {
            return Err(BitError::LengthError {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Self {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    /// Pack MSB-first into lowercase hex. Pairs with [`BitStream::from_packed_hex`];
    /// the bit count must be carried alongside since the last nibble may be padded.
    pub fn to_packed_hex(&self) -> String {
        let mut out = String::with_capacity(self.bits.len().div_ceil(4));
        for chunk in self.bits.chunks(4) {
            let mut nibble = 0u8;
            for (i, &b) in chunk.iter().enumerate() {
                nibble |= b << (3 - i);
            }
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out
    }

    /// Inverse of [`BitStream::to_packed_hex`].
    pub fn from_packed_hex(hex: &str, len: usize) -> Result<Self, BitError> {
        if hex.len() != len.div_ceil(4) {
            return Err(BitError::FramingError(format!(
                "hex length {} inconsistent with {} bits",
                hex.len(),
                len
            )));
        }
        let mut bits = Vec::with_capacity(len);
        for (index, c) in hex.chars().enumerate() {
            let nibble = c
                .to_digit(16)
                .ok_or(BitError::InvalidBit { index, value: 255 })?
                as u8;
            for i in 0..4 {
                if bits.len() < len {
                    bits.push((nibble >> (3 - i)) & 1);
                }
            }
        }
        Ok(Self { bits })
    }

    /// Ingest a raw binary file: one bit per byte, values 0 or 1.
    pub fn from_raw_bytes(bytes: &[u8]) -> Result<Self, BitError> {
        Self::new(bytes.to_vec())
    }
}

impl Serialize for BitStream {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("BitStream", 2)?;
        s.serialize_field("hex", &self.to_packed_hex())?;
        s.serialize_field("len", &self.len())?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for BitStream {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Packed {
            hex: String,
            len: usize,
        }
        let p = Packed::deserialize(deserializer)?;
        BitStream::from_packed_hex(&p.hex, p.len).map_err(serde::de::Error::custom)
    }
}

/// Whitening sequence in match (XNOR) form: 1 where the two designed streams
/// agree. See the module docs for the two-form convention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhiteningSequence {
    bits: BitStream,
}

impl WhiteningSequence {
    pub fn from_bits(bits: BitStream) -> Self {
        Self { bits }
    }

    pub fn bits(&self) -> &BitStream {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// The mask (XOR) form: applying this via XOR to one designed stream
    /// yields the other.
    pub fn xor_mask(&self) -> WhiteningSequence {
        Self {
            bits: self.bits.complement(),
        }
    }
}

/// Interleaver descriptor. Block interleavers write row-wise and read
/// column-wise over a `rows x cols` array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Interleaver {
    Identity,
    Block { rows: usize, cols: usize },
}

impl Interleaver {
    fn block_len(&self) -> usize {
        match self {
            Interleaver::Identity => 1,
            Interleaver::Block { rows, cols } => rows * cols,
        }
    }

    fn permute(&self, bits: &[u8]) -> Result<Vec<u8>, BitError> {
        match self {
            Interleaver::Identity => Ok(bits.to_vec()),
            Interleaver::Block { rows, cols } => {
                let block = rows * cols;
                if block == 0 || !bits.len().is_multiple_of(block) {
                    return Err(BitError::FramingError(format!(
                        "length {} not a multiple of interleaver block {}",
                        bits.len(),
                        block
                    )));
                }
                let mut out = Vec::with_capacity(bits.len());
                for chunk in bits.chunks(block) {
                    for c in 0..*cols {
                        for r in 0..*rows {
                            out.push(chunk[r * cols + c]);
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    fn unpermute(&self, bits: &[u8]) -> Result<Vec<u8>, BitError> {
        match self {
            Interleaver::Identity => Ok(bits.to_vec()),
            Interleaver::Block { rows, cols } => {
                let block = rows * cols;
                if block == 0 || !bits.len().is_multiple_of(block) {
                    return Err(BitError::FramingError(format!(
                        "length {} not a multiple of interleaver block {}",
                        bits.len(),
                        block
                    )));
                }
                let mut out = Vec::with_capacity(bits.len());
                for chunk in bits.chunks(block) {
                    let mut plain = vec![0u8; block];
                    let mut idx = 0;
                    for c in 0..*cols {
                        for r in 0..*rows {
                            plain[r * cols + c] = chunk[idx];
                            idx += 1;
                        }
                    }
                    out.extend_from_slice(&plain);
                }
                Ok(out)
            }
        }
    }
}

/// Codec kind. The convolutional codec is rate 1/n, zero-terminated, with
/// generator polynomials given in octal (MSB tap on the newest bit).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CodecKind {
    Uncoded,
    Convolutional {
        generators_octal: Vec<u32>,
        constraint_length: usize,
    },
}

/// FEC plus interleaving configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecSpec {
    pub kind: CodecKind,
    pub interleaver: Interleaver,
}

impl CodecSpec {
    pub fn uncoded() -> Self {
        Self {
            kind: CodecKind::Uncoded,
            interleaver: Interleaver::Identity,
        }
    }

    /// Rate-1/2, constraint-length-3 codec with generators (7, 5) octal.
    pub fn conv_k3() -> Self {
        Self {
            kind: CodecKind::Convolutional {
                generators_octal: vec![0o7, 0o5],
                constraint_length: 3,
            },
            interleaver: Interleaver::Identity,
        }
    }

    pub fn with_interleaver(mut self, interleaver: Interleaver) -> Self {
        self.interleaver = interleaver;
        self
    }

    /// Code rate as (numerator, denominator).
    pub fn rate(&self) -> (usize, usize) {
        match &self.kind {
            CodecKind::Uncoded => (1, 1),
            CodecKind::Convolutional {
                generators_octal, ..
            } => (1, generators_octal.len()),
        }
    }
}

fn generator_masks(generators_octal: &[u32], constraint_length: usize) -> Vec<u32> {
    // Octal literal 7 = binary 111 taps the newest bit first.
    generators_octal
        .iter()
        .map(|&g| g & ((1u32 << constraint_length) - 1))
        .collect()
}

fn conv_encode(bits: &[u8], generators_octal: &[u32], k: usize) -> Vec<u8> {
    let masks = generator_masks(generators_octal, k);
    let mut window = 0u32; // bit 0 = newest
    let mut out = Vec::with_capacity((bits.len() + k - 1) * masks.len());
    for &b in bits.iter().chain(std::iter::repeat_n(&0u8, k - 1)) {
        window = ((window << 1) | b as u32) & ((1 << k) - 1);
        for &m in &masks {
            // Reverse the window so the mask MSB hits the newest bit.
            let mut acc = 0u32;
            for i in 0..k {
                let tap = (m >> (k - 1 - i)) & 1;
                let bit = (window >> (k - 1 - i)) & 1;
                acc ^= tap & bit;
            }
            out.push(acc as u8);
        }
    }
    out
}

/// Hard-decision Viterbi decode of a zero-terminated rate-1/n stream.
fn viterbi_decode(coded: &[u8], generators_octal: &[u32], k: usize) -> Result<Vec<u8>, BitError> {
    let n = generators_octal.len();
    if !coded.len().is_multiple_of(n) {
        return Err(BitError::FramingError(format!(
            "coded length {} not a multiple of {}",
            coded.len(),
            n
        )));
    }
    let steps = coded.len() / n;
    if steps < k - 1 {
        return Err(BitError::FramingError(format!(
            "coded length {} shorter than termination ({} steps needed)",
            coded.len(),
            k - 1
        )));
    }
    let n_states = 1usize << (k - 1);
    let masks = generator_masks(generators_octal, k);

    // Precompute branch outputs: output_bits[state][input] packed as u32.
    let mut branch = vec![[0u32; 2]; n_states];
    for (state, b) in branch.iter_mut().enumerate() {
        for input in 0..2u32 {
            let window = ((state as u32) << 1 | input) & ((1 << k) - 1);
            // window bit k-1 is the oldest; input is the newest at bit 0?
            // Keep the same orientation as conv_encode: newest bit enters at
            // the LSB side of a left-shifting register, so reconstruct the
            // register as (input newest, then state bits oldest last).
            let mut packed = 0u32;
            for (gi, &m) in masks.iter().enumerate() {
                let mut acc = 0u32;
                for i in 0..k {
                    let tap = (m >> (k - 1 - i)) & 1;
                    let bit = (window >> (k - 1 - i)) & 1;
                    acc ^= tap & bit;
                }
                packed |= acc << gi;
            }
            b[input as usize] = packed;
        }
    }

    const INF: u32 = u32::MAX / 2;
    let mut metric = vec![INF; n_states];
    metric[0] = 0;
    let mut survivors: Vec<Vec<u8>> = Vec::with_capacity(steps);

    for step in 0..steps {
        let mut observed = 0u32;
        for gi in 0..n {
            observed |= (coded[step * n + gi] as u32) << gi;
        }
        let mut next = vec![INF; n_states];
        let mut back = vec![0u8; n_states];
        for state in 0..n_states {
            if metric[state] >= INF {
                continue;
            }
            for input in 0..2usize {
                let out = branch[state][input];
                let cost = (out ^ observed).count_ones();
                // Left-shift register: new state keeps the newest k-1 bits.
                let new_state = ((state << 1) | input) & (n_states - 1);
                let cand = metric[state] + cost;
                if cand < next[new_state] {
                    next[new_state] = cand;
                    back[new_state] = ((state as u8) << 1) | input as u8;
                }
            }
        }
        metric = next;
        survivors.push(back);
    }

    // Terminated: trace back from state 0.
    let mut state = 0usize;
    let mut decoded = vec![0u8; steps];
    for step in (0..steps).rev() {
        let packed = survivors[step][state];
        decoded[step] = packed & 1;
        state = (packed >> 1) as usize;
    }
    decoded.truncate(steps - (k - 1)); // drop termination bits
    Ok(decoded)
}

/// Pad needed on the payload so the coded length is a multiple of the
/// interleaver block.
fn payload_pad(len: usize, codec: &CodecSpec) -> usize {
    let block = codec.interleaver.block_len();
    if block <= 1 {
        return 0;
    }
    let (tail, n) = match &codec.kind {
        CodecKind::Uncoded => (0usize, 1usize),
        CodecKind::Convolutional {
            generators_octal,
            constraint_length,
        } => (constraint_length - 1, generators_octal.len()),
    };
    let mut pad = 0;
    while !((len + pad + tail) * n).is_multiple_of(block) {
        pad += 1;
    }
    pad
}

/// Encode a payload through FEC and the interleaver.
///
/// If the interleaver block does not divide the coded length, the payload is
/// zero-padded first; [`decode`] then returns the padded payload, so the
/// original stream is the prefix of the roundtrip output.
pub fn encode(b: &BitStream, codec: &CodecSpec) -> Result<BitStream, BitError> {
    if b.is_empty() {
        return Err(BitError::EmptyStream);
    }
    let mut payload = b.bits().to_vec();
    payload.extend(std::iter::repeat_n(0u8, payload_pad(b.len(), codec)));
    let coded = match &codec.kind {
        CodecKind::Uncoded => payload,
        CodecKind::Convolutional {
            generators_octal,
            constraint_length,
        } => conv_encode(&payload, generators_octal, *constraint_length),
    };
    let interleaved = codec.interleaver.permute(&coded)?;
    Ok(BitStream { bits: interleaved })
}

/// Decode a received hard-decision stream: de-interleave, then identity or
/// Viterbi decode.
pub fn decode(d_hat: &BitStream, codec: &CodecSpec) -> Result<BitStream, BitError> {
    if d_hat.is_empty() {
        return Err(BitError::EmptyStream);
    }
    let deinterleaved = codec.interleaver.unpermute(d_hat.bits())?;
    let decoded = match &codec.kind {
        CodecKind::Uncoded => deinterleaved,
        CodecKind::Convolutional {
            generators_octal,
            constraint_length,
        } => viterbi_decode(&deinterleaved, generators_octal, *constraint_length)?,
    };
    Ok(BitStream { bits: decoded })
}

/// Design the whitening sequence relating two coded streams of equal length.
///
/// Returned in match (XNOR) form: `s[n] = 1` where `d2[n] == d[n]`. Use
/// [`WhiteningSequence::xor_mask`] to get the mask applied via XOR:
/// `apply_whitener(d, &s.xor_mask()) == d2`.
pub fn design_whitener(d: &BitStream, d2: &BitStream) -> Result<WhiteningSequence, BitError> {
    if d.len() != d2.len() {
        return Err(BitError::LengthError {
            expected: d.len(),
            got: d2.len(),
        });
    }
    let bits = d
        .bits()
        .iter()
        .zip(d2.bits())
        .map(|(a, b)| (a == b) as u8)
        .collect();
    Ok(WhiteningSequence {
        bits: BitStream { bits },
    })
}

/// XOR a whitening sequence onto a stream. Involutive.
pub fn apply_whitener(d: &BitStream, s: &WhiteningSequence) -> Result<BitStream, BitError> {
    d.xor(s.bits())
}

/// Error counts between two equal-length streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub errors: usize,
    pub ber: f64,
}

/// Hamming distance and bit error ratio between two streams.
pub fn count_errors(a: &BitStream, b: &BitStream) -> Result<ErrorReport, BitError> {
    if a.is_empty() || b.is_empty() {
        return Err(BitError::EmptyStream);
    }
    if a.len() != b.len() {
        return Err(BitError::LengthError {
            expected: a.len(),
            got: b.len(),
        });
    }
    let errors = a
        .bits()
        .iter()
        .zip(b.bits())
        .filter(|(x, y)| x != y)
        .count();
    Ok(ErrorReport {
        errors,
        ber: errors as f64 / a.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng_for;

    fn bs(bits: &[u8]) -> BitStream {
        BitStream::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn uncoded_is_identity() {
        let b = bs(&[1, 0, 1]);
        let d = encode(&b, &CodecSpec::uncoded()).unwrap();
        assert_eq!(d, b);
        assert_eq!(decode(&d, &CodecSpec::uncoded()).unwrap(), b);
    }

    #[test]
    fn conv_all_zeros_encodes_to_zeros() {
        let b = bs(&[0; 8]);
        let d = encode(&b, &CodecSpec::conv_k3()).unwrap();
        assert_eq!(d.len(), 20);
        assert!(d.bits().iter().all(|&x| x == 0));
    }

    /// Independent shift-register oracle for the (7,5) K=3 encoder.
    fn reference_conv_75(bits: &[u8]) -> Vec<u8> {
        let mut s1 = 0u8; // b[n-1]
        let mut s2 = 0u8; // b[n-2]
        let mut out = Vec::new();
        for &b in bits.iter().chain([0u8, 0u8].iter()) {
            out.push(b ^ s1 ^ s2); // 111
            out.push(b ^ s2); // 101
            s2 = s1;
            s1 = b;
        }
        out
    }

    #[test]
    fn conv_matches_reference_shift_register() {
        let b = bs(&[1, 0, 1, 1]);
        let d = encode(&b, &CodecSpec::conv_k3()).unwrap();
        assert_eq!(d.bits(), reference_conv_75(b.bits()).as_slice());

        let mut rng = rng_for(11, &[1]);
        for _ in 0..50 {
            let b = BitStream::random(37, &mut rng);
            let d = encode(&b, &CodecSpec::conv_k3()).unwrap();
            assert_eq!(d.bits(), reference_conv_75(b.bits()).as_slice());
        }
    }

    #[test]
    fn conv_roundtrip_noiseless() {
        let mut rng = rng_for(12, &[2]);
        let b = BitStream::random(64, &mut rng);
        let d = encode(&b, &CodecSpec::conv_k3()).unwrap();
        assert_eq!(decode(&d, &CodecSpec::conv_k3()).unwrap(), b);
    }

    #[test]
    fn conv_corrects_any_single_flip() {
        let mut rng = rng_for(13, &[3]);
        let b = BitStream::random(32, &mut rng);
        let codec = CodecSpec::conv_k3();
        let d = encode(&b, &codec).unwrap();
        for flip in 0..d.len() {
            let mut bits = d.bits().to_vec();
            bits[flip] ^= 1;
            let decoded = decode(&BitStream::new(bits).unwrap(), &codec).unwrap();
            assert_eq!(decoded, b, "flip at {flip} not corrected");
        }
    }

    #[test]
    fn conv_is_linear_over_xor() {
        let mut rng = rng_for(14, &[4]);
        let codec = CodecSpec::conv_k3();
        for _ in 0..20 {
            let a = BitStream::random(40, &mut rng);
            let b = BitStream::random(40, &mut rng);
            let ea = encode(&a, &codec).unwrap();
            let eb = encode(&b, &codec).unwrap();
            let eab = encode(&a.xor(&b).unwrap(), &codec).unwrap();
            assert_eq!(eab, ea.xor(&eb).unwrap());
        }
    }

    #[test]
    fn block_interleaver_roundtrips_and_pads() {
        let codec = CodecSpec::conv_k3().with_interleaver(Interleaver::Block { rows: 4, cols: 5 });
        let mut rng = rng_for(15, &[5]);
        let b = BitStream::random(33, &mut rng); // forces payload padding
        let d = encode(&b, &codec).unwrap();
        assert_eq!(d.len() % 20, 0);
        let decoded = decode(&d, &codec).unwrap();
        assert_eq!(&decoded.bits()[..b.len()], b.bits());
        assert!(decoded.bits()[b.len()..].iter().all(|&x| x == 0));
    }

    #[test]
    fn whitener_match_form_examples() {
        let s = design_whitener(&bs(&[0, 1, 0, 1]), &bs(&[0, 1, 0, 1])).unwrap();
        assert_eq!(s.bits(), &bs(&[1, 1, 1, 1]));
        let s = design_whitener(&bs(&[0, 0, 1, 1]), &bs(&[1, 1, 0, 0])).unwrap();
        assert_eq!(s.bits(), &bs(&[0, 0, 0, 0]));
    }

    #[test]
    fn whitener_xor_examples_and_involution() {
        let d = bs(&[1, 0, 1]);
        let zero = WhiteningSequence::from_bits(bs(&[0, 0, 0]));
        assert_eq!(apply_whitener(&d, &zero).unwrap(), d);
        let ones = WhiteningSequence::from_bits(bs(&[1, 1, 1]));
        assert_eq!(apply_whitener(&d, &ones).unwrap(), bs(&[0, 1, 0]));

        let mut rng = rng_for(16, &[6]);
        let d = BitStream::random(10_000, &mut rng);
        let s = WhiteningSequence::from_bits(BitStream::random(10_000, &mut rng));
        let once = apply_whitener(&d, &s).unwrap();
        assert_eq!(apply_whitener(&once, &s).unwrap(), d);
    }

    #[test]
    fn whitener_closure_recovers_d2() {
        let mut rng = rng_for(17, &[7]);
        let d = BitStream::random(1000, &mut rng);
        let d2 = BitStream::random(1000, &mut rng);
        let s = design_whitener(&d, &d2).unwrap();
        assert_eq!(apply_whitener(&d, &s.xor_mask()).unwrap(), d2);
    }

    #[test]
    fn count_errors_basics() {
        let a = bs(&[1, 0, 1, 1, 0, 0, 1, 0]);
        assert_eq!(count_errors(&a, &a).unwrap().ber, 0.0);
        assert_eq!(count_errors(&a, &a.complement()).unwrap().ber, 1.0);

        let mut rng = rng_for(18, &[8]);
        let x = BitStream::random(100_000, &mut rng);
        let y = BitStream::random(100_000, &mut rng);
        let r = count_errors(&x, &y).unwrap();
        // 3 sigma of a fair-coin agreement rate at n = 1e5.
        assert!((r.ber - 0.5).abs() < 3.0 * 0.5 / (100_000f64).sqrt());
    }

    #[test]
    fn error_paths() {
        assert_eq!(
            count_errors(&bs(&[1]), &bs(&[1, 0])),
            Err(BitError::LengthError {
                expected: 1,
                got: 2
            })
        );
        assert!(matches!(
            encode(&BitStream::new(vec![]).unwrap(), &CodecSpec::uncoded()),
            Err(BitError::EmptyStream)
        ));
        assert!(matches!(
            decode(&bs(&[1, 0, 1]), &CodecSpec::conv_k3()),
            Err(BitError::FramingError(_))
        ));
        assert!(matches!(
            BitStream::new(vec![0, 2]),
            Err(BitError::InvalidBit { index: 1, value: 2 })
        ));
    }

    #[test]
    fn hex_packing_roundtrip() {
        let mut rng = rng_for(19, &[9]);
        for len in [1usize, 4, 7, 8, 33, 128] {
            let b = BitStream::random(len, &mut rng);
            let h = b.to_packed_hex();
            assert_eq!(BitStream::from_packed_hex(&h, len).unwrap(), b);
        }
    }
}
