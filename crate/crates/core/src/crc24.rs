//! CRC24a as used per LTE code block.
//!
//! Bit 0 of a sequence is its highest-degree coefficient, and parity bit 0 is
//! the coefficient of D^23 in the remainder.

use crate::gf2::BinaryMatrix;
use crate::{Error, Result};

/// Number of CRC parity bits.
pub const CRC_LEN: usize = 24;

/// CRC24a generator polynomial, bit `i` holding the coefficient of D^i.
pub const CRC24A_POLY: u32 = 0b1_1000_0110_0100_1100_1111_1011;

/// The CRC24a generator polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrcPolynomial;

impl CrcPolynomial {
    /// Coefficients ordered `g_0, g_1, ..., g_24`.
    pub fn ascending() -> [u8; CRC_LEN + 1] {
        std::array::from_fn(|i| ((CRC24A_POLY >> i) & 1) as u8)
    }

    /// Coefficients ordered `g_24, ..., g_0`.
    pub fn descending() -> [u8; CRC_LEN + 1] {
        let mut c = Self::ascending();
        c.reverse();
        c
    }
}

/// Remainder of `bits` (as a polynomial) modulo the generator, bit 23 of the
/// result holding the coefficient of D^23.
///
/// Linear in `bits`, which lets callers combine syndromes with XOR.
pub fn crc_remainder(bits: &[u8]) -> u32 {
    bits.iter().fold(0u32, |reg, &b| {
        let reg = (reg << 1) | u32::from(b & 1);
        if reg & (1 << CRC_LEN) != 0 {
            reg ^ CRC24A_POLY
        } else {
            reg
        }
    })
}

fn remainder_to_bits(rem: u32) -> [u8; CRC_LEN] {
    std::array::from_fn(|i| ((rem >> (CRC_LEN - 1 - i)) & 1) as u8)
}

/// Parity bits of `msg`: the remainder of `msg · D^24`.
pub fn crc_encode(msg: &[u8]) -> Result<[u8; CRC_LEN]> {
    if msg.is_empty() {
        return Err(Error::InvalidInput("cannot CRC-encode an empty message".into()));
    }
    let mut reg = crc_remainder(msg);
    for _ in 0..CRC_LEN {
        reg <<= 1;
        if reg & (1 << CRC_LEN) != 0 {
            reg ^= CRC24A_POLY;
        }
    }
    Ok(remainder_to_bits(reg))
}

/// `msg` followed by its parity bits.
pub fn attach_crc(msg: &[u8]) -> Result<Vec<u8>> {
    let parity = crc_encode(msg)?;
    let mut cb = Vec::with_capacity(msg.len() + CRC_LEN);
    cb.extend_from_slice(msg);
    cb.extend_from_slice(&parity);
    Ok(cb)
}

/// True iff the code block is divisible by the generator polynomial.
pub fn crc_check(cb: &[u8]) -> Result<bool> {
    if cb.len() <= CRC_LEN {
        return Err(Error::InvalidInput(format!("code block of {} bits is too short for a CRC check", cb.len())));
    }
    Ok(crc_remainder(cb) == 0)
}

/// Remainders of every single-bit code block of length `k`: entry `i` is the
/// syndrome of a 1 at position `i`.
pub fn unit_syndromes(k: usize) -> Vec<u32> {
    let mut out = vec![0u32; k];
    let mut reg = 1u32;
    for i in (0..k).rev() {
        out[i] = reg;
        reg <<= 1;
        if reg & (1 << CRC_LEN) != 0 {
            reg ^= CRC24A_POLY;
        }
    }
    out
}

/// Both generator-matrix forms of the CRC code for `m` message bits.
#[derive(Clone, Debug)]
pub struct CrcGenerators {
    /// Banded form: row `i` is `D^(m-1-i) · g(D)`.
    pub nonsystematic: BinaryMatrix,
    /// `[I_m | Q]`.
    pub systematic: BinaryMatrix,
}

pub fn build_crc_generators(m: usize) -> Result<CrcGenerators> {
    if m == 0 {
        return Err(Error::InvalidInput("CRC message length must be at least 1".into()));
    }
    let k = m + CRC_LEN;
    let coeffs = CrcPolynomial::descending();
    let mut nonsystematic = BinaryMatrix::zeros(m, k)?;
    for i in 0..m {
        for (t, &c) in coeffs.iter().enumerate() {
            nonsystematic.set(i, i + t, c);
        }
    }
    let reduced = nonsystematic.systematize()?;
    if reduced.rank != m || !reduced.perm.is_identity() {
        return Err(Error::Defect(format!("CRC generator elimination for m={m} required column swaps")));
    }
    Ok(CrcGenerators { nonsystematic, systematic: reduced.matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> Vec<u8> {
        s.bytes().map(|b| b - b'0').collect()
    }

    #[test]
    fn polynomial_coefficients() {
        assert_eq!(CrcPolynomial::descending().to_vec(), bits("1100001100100110011111011"));
        let asc = CrcPolynomial::ascending();
        assert_eq!((asc[0], asc[24]), (1, 1));
    }

    #[test]
    fn zero_message_zero_parity() {
        for m in [1, 16, 72] {
            assert_eq!(crc_encode(&vec![0; m]).unwrap(), [0; 24]);
        }
    }

    #[test]
    fn single_one_parity_is_low_coefficients() {
        // D^24 mod g(D) = g_23 D^23 + ... + g_0 by one long-division step.
        let expect = bits("100001100100110011111011");
        assert_eq!(crc_encode(&[1]).unwrap().to_vec(), expect);
    }

    #[test]
    fn empty_message_rejected() {
        assert!(crc_encode(&[]).is_err());
    }

    #[test]
    fn short_block_rejected() {
        assert!(crc_check(&[0; 24]).is_err());
        assert!(crc_check(&[0; 25]).unwrap());
    }

    #[test]
    fn random_messages_pass_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let m = rng.random_range(1..=200);
            let msg: Vec<u8> = (0..m).map(|_| rng.random_range(0..2)).collect();
            assert!(crc_check(&attach_crc(&msg).unwrap()).unwrap());
        }
    }

    #[test]
    fn every_single_bit_flip_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let msg: Vec<u8> = (0..16).map(|_| rng.random_range(0..2)).collect();
        let cb = attach_crc(&msg).unwrap();
        assert!(crc_check(&cb).unwrap());
        for i in 0..cb.len() {
            let mut bad = cb.clone();
            bad[i] ^= 1;
            assert!(!crc_check(&bad).unwrap(), "flip at {i} undetected");
        }
    }

    #[test]
    fn nonsystematic_row_layout() {
        let g = build_crc_generators(16).unwrap();
        let row0 = g.nonsystematic.row_bits(0);
        assert_eq!(&row0[..25], CrcPolynomial::descending().as_slice());
        assert!(row0[25..].iter().all(|&b| b == 0));
        let row3 = g.nonsystematic.row_bits(3);
        assert_eq!(&row3[3..28], CrcPolynomial::descending().as_slice());
        for r in 0..16 {
            assert!(crc_check(&g.nonsystematic.row_bits(r)).unwrap());
        }
    }

    #[test]
    fn one_bit_systematic_generator() {
        let g = build_crc_generators(1).unwrap();
        let mut expect = vec![1u8];
        expect.extend(crc_encode(&[1]).unwrap());
        assert_eq!(g.systematic.row_bits(0), expect);
    }

    #[test]
    fn systematic_rows_pass_check() {
        let g = build_crc_generators(16).unwrap();
        for r in 0..16 {
            let row = g.systematic.row_bits(r);
            assert!(crc_check(&row).unwrap());
            for (c, &bit) in row.iter().take(16).enumerate() {
                assert_eq!(bit, u8::from(c == r));
            }
        }
    }

    #[test]
    fn unit_syndromes_match_direct_remainder() {
        let k = 40;
        let syn = unit_syndromes(k);
        for i in 0..k {
            let mut e = vec![0u8; k];
            e[i] = 1;
            assert_eq!(syn[i], crc_remainder(&e));
        }
    }
}
