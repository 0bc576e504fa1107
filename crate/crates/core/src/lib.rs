//! CRC-aided hybrid decoding for short LTE turbo-CRC codes.
//!
//! The crate builds LTE turbo and CRC24a codes both as trellis encoders and
//! as GF(2) generator matrices, decodes them with iterative Max-Log-MAP,
//! ordered statistics decoding over the concatenated generator, or a hybrid
//! schedule of the two, and measures error rates over a BPSK/AWGN channel.
//!
//! Bits are `u8` values in `{0, 1}` throughout. LLRs are positive for a
//! likely 0 and BPSK maps 0 to +1.

pub mod crc24;
pub mod gf2;
pub mod hybrid;
pub mod maxlogmap;
pub mod osd;
pub mod sim;
pub mod turbo;

mod error;

pub use error::{Error, Result};
pub use gf2::{BinaryMatrix, ColumnPermutation};
pub use hybrid::{hybrid_decode, CrcMode, DecodeOutcome, DecodeStatus, Detection, HybridConfig, OsdSchedule};
pub use maxlogmap::{channel_llrs, LlrFrame, TurboDecoder};
pub use osd::{osd_decode, OsdInput, OsdResult};
pub use sim::{run_point, SimScheme, StopRule, SweepPoint};
pub use turbo::{CodeConfig, TurboCrcCode};

/// Hard decision on an LLR; ties go to 0.
#[inline]
pub fn hard_decision(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}
