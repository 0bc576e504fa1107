//! BPSK over AWGN Monte Carlo engine and the exhaustive ML reference decoder.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gf2::BinaryMatrix;
use crate::hybrid::{hybrid_decode, DecodeStatus, Detection, HybridConfig};
use crate::maxlogmap::channel_llrs;
use crate::turbo::{trellis_encode, TurboCrcCode};
use crate::{Error, Result};

/// Largest message length the ML oracle will enumerate.
pub const ML_MAX_MESSAGE_BITS: usize = 20;

/// Frames decoded per parallel batch.
const BATCH: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    pub ebn0_db: f64,
    pub rate: f64,
}

impl ChannelParams {
    pub fn new(ebn0_db: f64, rate: f64) -> Self {
        Self { ebn0_db, rate }
    }

    /// `sigma² = 1 / (2 R Eb/N0)` for unit symbol energy.
    pub fn noise_var(&self) -> f64 {
        1.0 / (2.0 * self.rate * 10f64.powf(self.ebn0_db / 10.0))
    }
}

/// BPSK: 0 → +1, 1 → −1.
pub fn modulate(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect()
}

pub fn add_noise<R: Rng + ?Sized>(symbols: &[f64], noise_var: f64, rng: &mut R) -> Vec<f64> {
    let sigma = noise_var.sqrt();
    symbols
        .iter()
        .map(|s| {
            let n: f64 = StandardNormal.sample(rng);
            s + sigma * n
        })
        .collect()
}

/// Exhaustive maximum-likelihood decoder over all `2^m` messages.
///
/// Codewords are enumerated in Gray-code order by XOR-ing rows of the full
/// (tails included) generator; correlation is scored with per-byte lookup
/// tables built for each received frame.
#[derive(Clone, Debug)]
pub struct MlDecoder {
    m: usize,
    n: usize,
    /// Packed full codeword of each unit message.
    rows: Vec<Vec<u64>>,
}

impl MlDecoder {
    pub fn new(code: &TurboCrcCode) -> Result<Self> {
        let m = code.m();
        if m > ML_MAX_MESSAGE_BITS {
            return Err(Error::InvalidConfig(format!("ML enumeration needs m <= {ML_MAX_MESSAGE_BITS}, got m = {m}")));
        }
        let crc = &code.generators.g_crc;
        let rows = (0..m)
            .map(|r| trellis_encode(&code.interleaver, &crc.row_bits(r)).map(|cw| crate::gf2::pack_bits(&cw)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { m, n: code.config.n_coded(), rows })
    }

    /// Number of codewords searched per frame.
    pub fn codebook_size(&self) -> usize {
        1 << self.m
    }

    /// Full-generator matrix (`m × (3k + 12)`).
    pub fn generator(&self) -> BinaryMatrix {
        let bits: Vec<Vec<u8>> = self.rows.iter().map(|r| crate::gf2::unpack_bits(r, self.n)).collect();
        BinaryMatrix::from_rows(&bits).expect("non-empty generator")
    }

    /// Message whose codeword maximizes `Σ y_i s_i`. Ties keep the first
    /// message in Gray-code order.
    pub fn decode_message(&self, y: &[f64]) -> Result<Vec<u8>> {
        if y.len() != self.n {
            return Err(Error::DimensionMismatch(format!("received {} samples, code has {}", y.len(), self.n)));
        }
        // Maximizing correlation is minimizing the sum of y over 1-bits.
        let nbytes = self.n.div_ceil(8);
        let mut table = vec![0.0f64; nbytes * 256];
        for b in 0..nbytes {
            for v in 1..256usize {
                let low = v & (v - 1);
                let bit = (v ^ low).trailing_zeros() as usize;
                let pos = b * 8 + bit;
                let w = if pos < self.n { y[pos] } else { 0.0 };
                table[b * 256 + v] = table[b * 256 + low] + w;
            }
        }
        let words = self.rows.first().map_or(0, Vec::len);
        let mut cw = vec![0u64; words];
        let score = |cw: &[u64]| -> f64 {
            let mut s = 0.0;
            for (wi, &w) in cw.iter().enumerate() {
                for byte in 0..8 {
                    let b = wi * 8 + byte;
                    if b >= nbytes {
                        break;
                    }
                    s += table[b * 256 + ((w >> (8 * byte)) & 0xff) as usize];
                }
            }
            s
        };
        let mut best_score = score(&cw);
        let mut best_gray = 0usize;
        for step in 1..self.codebook_size() {
            let flip = step.trailing_zeros() as usize;
            for (c, r) in cw.iter_mut().zip(&self.rows[flip]) {
                *c ^= r;
            }
            let s = score(&cw);
            if s < best_score {
                best_score = s;
                best_gray = step ^ (step >> 1);
            }
        }
        Ok((0..self.m).map(|i| ((best_gray >> i) & 1) as u8).collect())
    }
}

/// Exhaustive ML decode of `y`, returning the full transmitted codeword.
pub fn ml_oracle(y: &[f64], code: &TurboCrcCode) -> Result<Vec<u8>> {
    let msg = MlDecoder::new(code)?.decode_message(y)?;
    code.encode_message(&msg)
}

/// What decodes frames in a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decoder", rename_all = "lowercase")]
pub enum SimScheme {
    Hybrid(HybridConfig),
    /// Exhaustive maximum-likelihood decoding (never declares an error).
    Mld,
}

impl SimScheme {
    pub fn parse_for_k(name: &str, k: usize) -> Result<Self> {
        if name.trim().eq_ignore_ascii_case("MLD") {
            Ok(Self::Mld)
        } else {
            HybridConfig::parse_for_k(name, k).map(Self::Hybrid)
        }
    }
}

impl FromStr for SimScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_for_k(s, 40)
    }
}

impl fmt::Display for SimScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Hybrid(cfg) => cfg.fmt(f),
            Self::Mld => f.write_str("MLD"),
        }
    }
}

/// When a measurement point stops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub max_frames: u64,
    pub min_frame_errors: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { max_frames: 1_000_000, min_frame_errors: 100 }
    }
}

/// Statistics of one Eb/N0 point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ebn0_db: f64,
    pub frames_run: u64,
    pub frame_errors: u64,
    pub undetected_errors: u64,
    pub fer: f64,
    pub uer: f64,
    pub seed: u64,
}

/// Classification of a single decoded frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameVerdict {
    Correct,
    DetectedError,
    UndetectedError,
}

/// Seed of point `index` in a sweep with `master` seed (SplitMix64 mixing).
pub fn derive_point_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random message, its transmitted codeword and the received samples for
/// frame `index` of a point.
#[derive(Clone, Debug)]
pub struct SimFrame {
    pub message: Vec<u8>,
    pub codeword: Vec<u8>,
    pub received: Vec<f64>,
}

pub fn draw_frame(code: &TurboCrcCode, noise_var: f64, point_seed: u64, index: u64) -> Result<SimFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
    rng.set_stream(index);
    let message: Vec<u8> = (0..code.m()).map(|_| rng.random_range(0..2u8)).collect();
    let codeword = code.encode_message(&message)?;
    let received = add_noise(&modulate(&codeword), noise_var, &mut rng);
    Ok(SimFrame { message, codeword, received })
}

/// Decoder bound to one code.
enum FrameDecoder<'a> {
    Hybrid(&'a HybridConfig),
    Mld(MlDecoder),
}

impl FrameDecoder<'_> {
    fn verdict(&self, code: &TurboCrcCode, frame: &SimFrame, noise_var: f64) -> Result<FrameVerdict> {
        let (message, accepted) = match self {
            Self::Hybrid(cfg) => {
                let llrs = channel_llrs(&frame.received, noise_var, code.k())?;
                let truth = &frame.codeword[..code.k()];
                let genie = (cfg.detection == Detection::Genie).then_some(truth);
                let out = hybrid_decode(&llrs, code, cfg, genie)?;
                let accepted = out.status != DecodeStatus::DetectedError;
                (out.message, accepted)
            }
            Self::Mld(ml) => (ml.decode_message(&frame.received)?, true),
        };
        Ok(match (accepted, message == frame.message) {
            (false, _) => FrameVerdict::DetectedError,
            (true, true) => FrameVerdict::Correct,
            (true, false) => FrameVerdict::UndetectedError,
        })
    }
}

/// Runs frames until `stop` is met. The result depends only on the inputs:
/// frames are drawn from per-index random streams and counted in index order.
pub fn run_point(
    scheme: &SimScheme,
    code: &TurboCrcCode,
    ebn0_db: f64,
    stop: StopRule,
    seed: u64,
) -> Result<SweepPoint> {
    if let SimScheme::Hybrid(cfg) = scheme {
        cfg.validate()?;
    }
    if stop.max_frames == 0 {
        return Err(Error::InvalidConfig("frames-max must be at least 1".into()));
    }
    let decoder = match scheme {
        SimScheme::Hybrid(cfg) => FrameDecoder::Hybrid(cfg),
        SimScheme::Mld => FrameDecoder::Mld(MlDecoder::new(code)?),
    };
    let noise_var = ChannelParams::new(ebn0_db, code.config.rate()).noise_var();

    let (mut frames, mut errors, mut undetected) = (0u64, 0u64, 0u64);
    'outer: while frames < stop.max_frames {
        let batch_end = (frames + BATCH as u64).min(stop.max_frames);
        #[cfg(feature = "parallel")]
        let indices = (frames..batch_end).into_par_iter();
        #[cfg(not(feature = "parallel"))]
        let indices = frames..batch_end;
        let verdicts = indices
            .map(|i| {
                let frame = draw_frame(code, noise_var, seed, i)?;
                decoder.verdict(code, &frame, noise_var)
            })
            .collect::<Result<Vec<_>>>()?;
        for v in verdicts {
            frames += 1;
            match v {
                FrameVerdict::Correct => {}
                FrameVerdict::DetectedError => errors += 1,
                FrameVerdict::UndetectedError => {
                    errors += 1;
                    undetected += 1;
                }
            }
            if errors >= stop.min_frame_errors {
                break 'outer;
            }
        }
    }
    Ok(SweepPoint {
        ebn0_db,
        frames_run: frames,
        frame_errors: errors,
        undetected_errors: undetected,
        fer: errors as f64 / frames as f64,
        uer: undetected as f64 / frames as f64,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpsk_mapping() {
        assert_eq!(modulate(&[0, 1, 0]), vec![1.0, -1.0, 1.0]);
        let s = modulate(&[0; 10]);
        assert!(s.iter().all(|&v| v == 1.0));
        let energy: f64 = modulate(&[0, 1, 1, 0]).iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert_eq!(energy, 1.0);
    }

    #[test]
    fn tiny_noise_leaves_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = modulate(&[0, 1, 1, 0]);
        let y = add_noise(&s, 1e-24, &mut rng);
        for (a, b) in s.iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let var = 0.7;
        let n = add_noise(&vec![0.0; 1_000_000], var, &mut rng);
        let mean = n.iter().sum::<f64>() / n.len() as f64;
        let sample_var = n.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n.len() - 1) as f64;
        assert!(mean.abs() < 4.0 * var.sqrt() / 1000.0, "mean {mean}");
        assert!((sample_var / var - 1.0).abs() < 0.02, "var {sample_var}");
    }

    #[test]
    fn noise_var_from_ebn0() {
        let p = ChannelParams::new(0.0, 0.5);
        assert!((p.noise_var() - 1.0).abs() < 1e-15);
        let p = ChannelParams::new(10.0, 0.25);
        assert!((p.noise_var() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn ml_codebook_size() {
        let code = TurboCrcCode::new(40).unwrap();
        assert_eq!(MlDecoder::new(&code).unwrap().codebook_size(), 65536);
        let big = TurboCrcCode::new(96).unwrap();
        assert!(MlDecoder::new(&big).is_err());
    }

    #[test]
    fn ml_generator_matches_encoder() {
        let code = TurboCrcCode::new(40).unwrap();
        let ml = MlDecoder::new(&code).unwrap();
        let g = ml.generator();
        let msg: Vec<u8> = (0..16).map(|i| (i % 3 == 0) as u8).collect();
        assert_eq!(g.left_mul_vec(&msg).unwrap(), code.encode_message(&msg).unwrap());
    }

    #[test]
    fn ml_noiseless() {
        let code = TurboCrcCode::new(40).unwrap();
        let frame = draw_frame(&code, 1e-6, 5, 0).unwrap();
        assert_eq!(ml_oracle(&frame.received, &code).unwrap(), frame.codeword);
    }

    #[test]
    fn point_seeds_differ() {
        let a: Vec<u64> = (0..5).map(|i| derive_point_seed(1, i)).collect();
        let mut b = a.clone();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_ne!(derive_point_seed(1, 0), derive_point_seed(2, 0));
    }

    #[test]
    fn near_noiseless_point_has_no_errors() {
        let code = TurboCrcCode::new(40).unwrap();
        // sigma² = 1e-6 at rate 4/33 is roughly 66 dB.
        let ebn0 = 10.0 * (1.0 / (2.0 * code.config.rate() * 1e-6)).log10();
        let stop = StopRule { max_frames: 100, min_frame_errors: 1 };
        let p = run_point(&SimScheme::Hybrid(HybridConfig::std()), &code, ebn0, stop, 3).unwrap();
        assert_eq!((p.frames_run, p.frame_errors, p.fer), (100, 0, 0.0));
    }

    #[test]
    fn same_seed_same_point() {
        let code = TurboCrcCode::new(40).unwrap();
        let stop = StopRule { max_frames: 600, min_frame_errors: 20 };
        let s = SimScheme::Hybrid(HybridConfig::std());
        let a = run_point(&s, &code, 1.0, stop, 17).unwrap();
        let b = run_point(&s, &code, 1.0, stop, 17).unwrap();
        assert_eq!(a, b);
        assert!(a.undetected_errors <= a.frame_errors && a.frame_errors <= a.frames_run);
    }

    #[test]
    fn stop_rule_is_exact() {
        let code = TurboCrcCode::new(40).unwrap();
        let stop = StopRule { max_frames: 10_000, min_frame_errors: 7 };
        let p = run_point(&SimScheme::Hybrid(HybridConfig::std()), &code, 0.0, stop, 1).unwrap();
        assert_eq!(p.frame_errors, 7);
        // The last frame counted must be an error.
        let shorter = StopRule { max_frames: p.frames_run - 1, min_frame_errors: 7 };
        let q = run_point(&SimScheme::Hybrid(HybridConfig::std()), &code, 0.0, shorter, 1).unwrap();
        assert_eq!(q.frame_errors, 6);
    }

    #[test]
    fn scheme_names() {
        assert_eq!("MLD".parse::<SimScheme>().unwrap(), SimScheme::Mld);
        assert_eq!(SimScheme::Mld.to_string(), "MLD");
        let s = SimScheme::parse_for_k("STD+OSD(1,T,1)+CRC-aided", 96).unwrap();
        assert_eq!(s.to_string(), "STD+OSD(1,T,1)+CRC-aided+NED(0.15)");
    }
}
