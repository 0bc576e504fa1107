//! LTE turbo code construction: QPP interleaver, the 8-state RSC trellis,
//! trellis termination and the equivalent generator matrices.

use crate::crc24::{self, CRC_LEN};
use crate::gf2::BinaryMatrix;
use crate::{Error, Result};

/// Tail bits appended after the `3k` matrix-encodable bits.
pub const TAIL_BITS: usize = 12;

/// Number of trellis states of each constituent encoder.
pub const NUM_STATES: usize = 8;

/// Termination steps per constituent encoder.
pub const TAIL_STEPS: usize = 3;

/// LTE turbo interleaver parameters `(K, f1, f2)`.
#[rustfmt::skip]
const QPP_TABLE: [(u16, u16, u16); 188] = [
    (40, 3, 10), (48, 7, 12), (56, 19, 42), (64, 7, 16), (72, 7, 18), (80, 11, 20),
    (88, 5, 22), (96, 11, 24), (104, 7, 26), (112, 41, 84), (120, 103, 90), (128, 15, 32),
    (136, 9, 34), (144, 17, 108), (152, 9, 38), (160, 21, 120), (168, 101, 84), (176, 21, 44),
    (184, 57, 46), (192, 23, 48), (200, 13, 50), (208, 27, 52), (216, 11, 36), (224, 27, 56),
    (232, 85, 58), (240, 29, 60), (248, 33, 62), (256, 15, 32), (264, 17, 198), (272, 33, 68),
    (280, 103, 210), (288, 19, 36), (296, 19, 74), (304, 37, 76), (312, 19, 78), (320, 21, 120),
    (328, 21, 82), (336, 115, 84), (344, 193, 86), (352, 21, 44), (360, 133, 90), (368, 81, 46),
    (376, 45, 94), (384, 23, 48), (392, 243, 98), (400, 151, 40), (408, 155, 102), (416, 25, 52),
    (424, 51, 106), (432, 47, 72), (440, 91, 110), (448, 29, 168), (456, 29, 114), (464, 247, 58),
    (472, 29, 118), (480, 89, 180), (488, 91, 122), (496, 157, 62), (504, 55, 84), (512, 31, 64),
    (528, 17, 66), (544, 35, 68), (560, 227, 420), (576, 65, 96), (592, 19, 74), (608, 37, 76),
    (624, 41, 234), (640, 39, 80), (656, 185, 82), (672, 43, 252), (688, 21, 86), (704, 155, 44),
    (720, 79, 120), (736, 139, 92), (752, 23, 94), (768, 217, 48), (784, 25, 98), (800, 17, 80),
    (816, 127, 102), (832, 25, 52), (848, 239, 106), (864, 17, 48), (880, 137, 110), (896, 215, 112),
    (912, 29, 114), (928, 15, 58), (944, 147, 118), (960, 29, 60), (976, 59, 122), (992, 65, 124),
    (1008, 55, 84), (1024, 31, 64), (1056, 17, 66), (1088, 171, 204), (1120, 67, 140), (1152, 35, 72),
    (1184, 19, 74), (1216, 39, 76), (1248, 19, 78), (1280, 199, 240), (1312, 21, 82), (1344, 211, 252),
    (1376, 21, 86), (1408, 43, 88), (1440, 149, 60), (1472, 45, 92), (1504, 49, 846), (1536, 71, 48),
    (1568, 13, 28), (1600, 17, 80), (1632, 25, 102), (1664, 183, 104), (1696, 55, 954), (1728, 127, 96),
    (1760, 27, 110), (1792, 29, 112), (1824, 29, 114), (1856, 57, 116), (1888, 45, 354), (1920, 31, 120),
    (1952, 59, 610), (1984, 185, 124), (2016, 113, 420), (2048, 31, 64), (2112, 17, 66), (2176, 171, 136),
    (2240, 209, 420), (2304, 253, 216), (2368, 367, 444), (2432, 265, 456), (2496, 181, 468), (2560, 39, 80),
    (2624, 27, 164), (2688, 127, 504), (2752, 143, 172), (2816, 43, 88), (2880, 29, 300), (2944, 45, 92),
    (3008, 157, 188), (3072, 47, 96), (3136, 13, 28), (3200, 111, 240), (3264, 443, 204), (3328, 51, 104),
    (3392, 51, 212), (3456, 451, 192), (3520, 257, 220), (3584, 57, 336), (3648, 313, 228), (3712, 271, 232),
    (3776, 179, 236), (3840, 331, 120), (3904, 363, 244), (3968, 375, 248), (4032, 127, 168), (4096, 31, 64),
    (4160, 33, 130), (4224, 43, 264), (4288, 33, 134), (4352, 477, 408), (4416, 35, 138), (4480, 233, 280),
    (4544, 357, 142), (4608, 337, 480), (4672, 37, 146), (4736, 71, 444), (4800, 71, 120), (4864, 37, 152),
    (4928, 39, 462), (4992, 127, 234), (5056, 39, 158), (5120, 39, 80), (5184, 31, 96), (5248, 113, 902),
    (5312, 41, 166), (5376, 251, 336), (5440, 43, 170), (5504, 21, 688), (5568, 43, 174), (5632, 45, 176),
    (5696, 45, 178), (5760, 161, 120), (5824, 89, 182), (5888, 323, 184), (5952, 47, 186), (6016, 23, 94),
    (6080, 47, 190), (6144, 263, 480),
];

/// All code block sizes supported by the interleaver table, ascending.
pub fn supported_block_sizes() -> impl Iterator<Item = usize> {
    QPP_TABLE.iter().map(|&(k, _, _)| usize::from(k))
}

/// Dimensions of one turbo-CRC code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeConfig {
    /// Code block length (message plus CRC).
    pub k: usize,
    /// Message length `k - 24`.
    pub m: usize,
    pub qpp_f1: usize,
    pub qpp_f2: usize,
}

impl CodeConfig {
    pub fn new(k: usize) -> Result<Self> {
        let &(_, f1, f2) =
            QPP_TABLE.iter().find(|&&(size, _, _)| usize::from(size) == k).ok_or(Error::UnsupportedBlockSize(k))?;
        Ok(Self { k, m: k - CRC_LEN, qpp_f1: usize::from(f1), qpp_f2: usize::from(f2) })
    }

    /// Transmitted bits per frame, tails included.
    pub fn n_coded(&self) -> usize {
        3 * self.k + TAIL_BITS
    }

    /// Bits covered by the generator matrices.
    pub fn n_matrix(&self) -> usize {
        3 * self.k
    }

    /// Message bits per transmitted bit.
    pub fn rate(&self) -> f64 {
        self.m as f64 / self.n_coded() as f64
    }
}

/// QPP interleaver: the second encoder reads input position `pi(j)` at step `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interleaver {
    forward: Vec<usize>,
}

impl Interleaver {
    pub fn new(cfg: &CodeConfig) -> Self {
        Self { forward: qpp_permutation(cfg) }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    #[inline]
    pub fn pi(&self, j: usize) -> usize {
        self.forward[j]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.forward
    }

    /// `out[j] = natural[pi(j)]`.
    pub fn interleave<T: Copy>(&self, natural: &[T]) -> Vec<T> {
        self.forward.iter().map(|&p| natural[p]).collect()
    }

    /// Inverse of [`Interleaver::interleave`].
    pub fn deinterleave<T: Copy + Default>(&self, interleaved: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); interleaved.len()];
        for (j, &p) in self.forward.iter().enumerate() {
            out[p] = interleaved[j];
        }
        out
    }
}

/// `pi(i) = (f1·i + f2·i²) mod k`.
pub fn qpp_permutation(cfg: &CodeConfig) -> Vec<usize> {
    let k = cfg.k as u64;
    let (f1, f2) = (cfg.qpp_f1 as u64, cfg.qpp_f2 as u64);
    (0..k).map(|i| ((f1 * i + f2 * i % k * i) % k) as usize).collect()
}

/// One branch of the constituent RSC trellis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Branch {
    pub next: usize,
    pub parity: u8,
}

/// Feedback `1 + D^2 + D^3`, feedforward `1 + D + D^3`.
///
/// State bit 0 holds the most recent register value.
#[inline]
pub const fn rsc_branch(state: usize, input: u8) -> Branch {
    let s1 = (state & 1) as u8;
    let s2 = ((state >> 1) & 1) as u8;
    let s3 = ((state >> 2) & 1) as u8;
    let a = input ^ s2 ^ s3;
    Branch { next: (a as usize) | ((s1 as usize) << 1) | ((s2 as usize) << 2), parity: a ^ s1 ^ s3 }
}

/// Input that drives the register input to zero (trellis termination).
#[inline]
pub const fn termination_input(state: usize) -> u8 {
    (((state >> 1) ^ (state >> 2)) & 1) as u8
}

/// Constituent recursive systematic encoder.
#[derive(Clone, Copy, Debug, Default)]
pub struct RscEncoder {
    state: usize,
}

impl RscEncoder {
    pub fn state(&self) -> usize {
        self.state
    }

    pub fn push(&mut self, bit: u8) -> u8 {
        let b = rsc_branch(self.state, bit & 1);
        self.state = b.next;
        b.parity
    }

    /// Three termination steps as `(systematic, parity)` pairs.
    pub fn terminate(&mut self) -> [(u8, u8); TAIL_STEPS] {
        std::array::from_fn(|_| {
            let x = termination_input(self.state);
            (x, self.push(x))
        })
    }
}

/// Encodes one code block into `sys ‖ par1 ‖ par2 ‖ tails`.
///
/// Tails are ordered `x_k, z_k, x_k+1, z_k+1, x_k+2, z_k+2` for the first
/// encoder followed by the same six for the second.
pub fn trellis_encode(interleaver: &Interleaver, cb: &[u8]) -> Result<Vec<u8>> {
    let k = interleaver.len();
    if cb.len() != k {
        return Err(Error::DimensionMismatch(format!("code block has {} bits, interleaver expects {k}", cb.len())));
    }
    let mut out = Vec::with_capacity(3 * k + TAIL_BITS);
    out.extend_from_slice(cb);
    let mut enc1 = RscEncoder::default();
    out.extend(cb.iter().map(|&b| enc1.push(b)));
    let mut enc2 = RscEncoder::default();
    out.extend(interleaver.as_slice().iter().map(|&p| enc2.push(cb[p])));
    for enc in [&mut enc1, &mut enc2] {
        for (x, z) in enc.terminate() {
            out.push(x);
            out.push(z);
        }
        debug_assert_eq!(enc.state(), 0);
    }
    Ok(out)
}

/// First `k` terms of `1, a, a, a, ...` with `a = 1110010`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImpulseSequence(Vec<u8>);

const IMPULSE_PERIOD: [u8; 7] = [1, 1, 1, 0, 0, 1, 0];

impl ImpulseSequence {
    pub fn values(&self) -> &[u8] {
        &self.0
    }
}

pub fn impulse_sequence(k: usize) -> ImpulseSequence {
    ImpulseSequence((0..k).map(|i| if i == 0 { 1 } else { IMPULSE_PERIOD[(i - 1) % 7] }).collect())
}

/// `P_k`: row `i` is the impulse sequence delayed by `i` positions, so
/// `e_i × P_k` is the parity response to an input impulse at `i`.
pub fn build_parity_matrix(k: usize) -> Result<BinaryMatrix> {
    let seq = impulse_sequence(k);
    let mut p = BinaryMatrix::zeros(k, k)?;
    for i in 0..k {
        for (j, &v) in seq.values()[..k - i].iter().enumerate() {
            p.set(i, i + j, v);
        }
    }
    Ok(p)
}

/// Generator matrices of the turbo code and of the concatenated turbo-CRC code.
#[derive(Clone, Debug)]
pub struct TurboGenerator {
    /// `[I_k | P_k | P~_k]`, `k × 3k`.
    pub g_turbo: BinaryMatrix,
    /// Systematic CRC generator times `g_turbo`, `m × 3k`.
    pub g_concat: BinaryMatrix,
    /// Systematic CRC generator `[I_m | Q]`, `m × k`.
    pub g_crc: BinaryMatrix,
}

pub fn build_generators(cfg: &CodeConfig) -> Result<TurboGenerator> {
    let k = cfg.k;
    let identity = BinaryMatrix::identity(k)?;
    let p = build_parity_matrix(k)?;
    // Parity-2 at step j depends on input pi(j) through row j of P_k, so row
    // pi(j) of P~ is row j of P.
    let inv = Interleaver::new(cfg).deinterleave(&(0..k).collect::<Vec<_>>());
    let p_tilde = p.select_rows(&inv)?;
    let g_turbo = BinaryMatrix::hstack(&[&identity, &p, &p_tilde])?;
    let g_crc = crc24::build_crc_generators(cfg.m)?.systematic;
    let g_concat = g_crc.mul(&g_turbo)?;
    Ok(TurboGenerator { g_turbo, g_concat, g_crc })
}

/// Everything needed to encode and decode one code block size.
#[derive(Clone, Debug)]
pub struct TurboCrcCode {
    pub config: CodeConfig,
    pub interleaver: Interleaver,
    pub generators: TurboGenerator,
}

impl TurboCrcCode {
    pub fn new(k: usize) -> Result<Self> {
        let config = CodeConfig::new(k)?;
        Ok(Self { interleaver: Interleaver::new(&config), generators: build_generators(&config)?, config })
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn m(&self) -> usize {
        self.config.m
    }

    /// Message to full transmitted codeword (`3k + 12` bits).
    pub fn encode_message(&self, msg: &[u8]) -> Result<Vec<u8>> {
        if msg.len() != self.config.m {
            return Err(Error::DimensionMismatch(format!(
                "message has {} bits, code expects {}",
                msg.len(),
                self.config.m
            )));
        }
        trellis_encode(&self.interleaver, &crc24::attach_crc(msg)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_has_all_lte_sizes() {
        let sizes: Vec<usize> = supported_block_sizes().collect();
        assert_eq!(sizes.len(), 188);
        let expect: Vec<usize> = (40..=512)
            .step_by(8)
            .chain((528..=1024).step_by(16))
            .chain((1056..=2048).step_by(32))
            .chain((2112..=6144).step_by(64))
            .collect();
        assert_eq!(sizes, expect);
    }

    #[test]
    fn every_table_entry_is_a_bijection() {
        for k in supported_block_sizes() {
            let cfg = CodeConfig::new(k).unwrap();
            let mut seen = vec![false; k];
            for p in qpp_permutation(&cfg) {
                assert!(!seen[p], "k={k} maps twice to {p}");
                seen[p] = true;
            }
        }
    }

    #[test]
    fn qpp_starts_at_zero() {
        for k in [40, 96, 6144] {
            assert_eq!(qpp_permutation(&CodeConfig::new(k).unwrap())[0], 0);
        }
    }

    #[test]
    fn qpp_k40_and_k96_are_permutations() {
        for k in [40, 96] {
            let mut image = qpp_permutation(&CodeConfig::new(k).unwrap());
            image.sort_unstable();
            assert_eq!(image, (0..k).collect::<Vec<_>>());
        }
    }

    #[test]
    fn unsupported_size_rejected() {
        assert_eq!(CodeConfig::new(39), Err(Error::UnsupportedBlockSize(39)));
        assert!(CodeConfig::new(44).is_err());
    }

    #[test]
    fn rates() {
        let c40 = CodeConfig::new(40).unwrap();
        assert_eq!((c40.m, c40.n_coded()), (16, 132));
        assert_eq!(c40.m * 33, 4 * c40.n_coded());
        let c96 = CodeConfig::new(96).unwrap();
        assert_eq!(c96.m * 25, 6 * c96.n_coded());
    }

    #[test]
    fn impulse_sequence_values() {
        assert_eq!(impulse_sequence(8).values(), &[1, 1, 1, 1, 0, 0, 1, 0]);
        assert_eq!(impulse_sequence(1).values(), &[1]);
        assert_eq!(impulse_sequence(15).values(), &[1, 1, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0, 1, 0]);
    }

    #[test]
    fn impulse_sequence_is_rsc_impulse_response() {
        let mut enc = RscEncoder::default();
        let response: Vec<u8> = (0..50).map(|i| enc.push(u8::from(i == 0))).collect();
        assert_eq!(response, impulse_sequence(50).values());
    }

    #[test]
    fn parity_matrix_rows_are_shifts() {
        let p = build_parity_matrix(8).unwrap();
        assert_eq!(p.row_bits(0), vec![1, 1, 1, 1, 0, 0, 1, 0]);
        assert_eq!(p.row_bits(1), vec![0, 1, 1, 1, 1, 0, 0, 1]);
        for k in [1, 40, 96] {
            assert_eq!(build_parity_matrix(k).unwrap().get(0, 0), 1);
        }
    }

    #[test]
    fn zero_block_encodes_to_zero() {
        let cfg = CodeConfig::new(40).unwrap();
        let out = trellis_encode(&Interleaver::new(&cfg), &[0; 40]).unwrap();
        assert_eq!(out, vec![0; 132]);
    }

    #[test]
    fn impulse_parity1_matches_sequence() {
        let cfg = CodeConfig::new(40).unwrap();
        let mut cb = vec![0u8; 40];
        cb[0] = 1;
        let out = trellis_encode(&Interleaver::new(&cfg), &cb).unwrap();
        assert_eq!(&out[40..48], &[1, 1, 1, 1, 0, 0, 1, 0]);
    }

    #[test]
    fn length_mismatch_rejected() {
        let cfg = CodeConfig::new(40).unwrap();
        assert!(trellis_encode(&Interleaver::new(&cfg), &[0; 39]).is_err());
    }

    #[test]
    fn termination_returns_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut enc = RscEncoder::default();
            for _ in 0..rng.random_range(0..30) {
                enc.push(rng.random_range(0..2));
            }
            enc.terminate();
            assert_eq!(enc.state(), 0);
        }
    }

    #[test]
    fn generator_dimensions() {
        let code = TurboCrcCode::new(40).unwrap();
        let g = &code.generators;
        assert_eq!((g.g_turbo.rows(), g.g_turbo.cols()), (40, 120));
        assert_eq!((g.g_concat.rows(), g.g_concat.cols()), (16, 120));
        for r in 0..40 {
            for c in 0..40 {
                assert_eq!(g.g_turbo.get(r, c), u8::from(r == c));
            }
        }
    }

    #[test]
    fn turbo_rows_are_impulse_responses() {
        let code = TurboCrcCode::new(40).unwrap();
        for i in 0..40 {
            let mut cb = vec![0u8; 40];
            cb[i] = 1;
            let enc = trellis_encode(&code.interleaver, &cb).unwrap();
            assert_eq!(code.generators.g_turbo.row_bits(i), enc[..120]);
        }
    }

    #[test]
    fn concat_rows_pass_crc() {
        for k in [40, 96] {
            let code = TurboCrcCode::new(k).unwrap();
            let g = &code.generators.g_concat;
            for r in 0..g.rows() {
                assert!(crc24::crc_check(&g.row_bits(r)[..k]).unwrap());
            }
        }
    }

    #[test]
    fn concat_encoding_matches_crc_then_trellis() {
        let code = TurboCrcCode::new(40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let msg: Vec<u8> = (0..16).map(|_| rng.random_range(0..2)).collect();
            let via_matrix = code.generators.g_concat.left_mul_vec(&msg).unwrap();
            let via_trellis = code.encode_message(&msg).unwrap();
            assert_eq!(via_matrix, via_trellis[..120]);
            assert_eq!(via_matrix[..40], crc24::attach_crc(&msg).unwrap()[..]);
        }
    }
}
