//! Ordered statistics decoding over a turbo or turbo-CRC generator matrix.
//!
//! Positions are ranked by reliability, the generator is reduced on its most
//! reliable independent columns, and every pattern of at most `order` flips
//! of the basis hard decisions is re-encoded. The candidate closest to the
//! channel hard decisions wins.

use serde::{Deserialize, Serialize};

use crate::crc24::{self, CRC_LEN};
use crate::gf2::{unpack_bits, BinaryMatrix, ColumnPermutation};
use crate::{hard_decision, Error, Result};

/// Highest re-encoding order accepted.
pub const MAX_ORDER: usize = 2;

/// How the CRC constrains OSD candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrcMode {
    /// Re-encode over the concatenated turbo-CRC generator.
    Aided,
    /// Re-encode over the turbo generator, keep only CRC-passing candidates.
    Filter,
    /// Re-encode over the turbo generator, ignore the CRC.
    None,
}

/// Inputs of one OSD call.
#[derive(Clone, Debug)]
pub struct OsdInput<'a> {
    /// Ranking LLRs, one per generator column.
    pub reliabilities: Vec<f64>,
    /// Channel hard decisions.
    pub hard_ref: Vec<u8>,
    /// Channel magnitudes `|y_i|`.
    pub magnitudes: Vec<f64>,
    pub generator: &'a BinaryMatrix,
}

impl<'a> OsdInput<'a> {
    /// Builds the input from received channel samples (first `3k` used).
    pub fn from_received(reliabilities: Vec<f64>, y: &[f64], generator: &'a BinaryMatrix) -> Self {
        let n = generator.cols();
        Self {
            reliabilities,
            hard_ref: y[..n].iter().map(|&v| hard_decision(v)).collect(),
            magnitudes: y[..n].iter().map(|v| v.abs()).collect(),
            generator,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.generator.cols();
        if self.reliabilities.len() != n || self.hard_ref.len() != n || self.magnitudes.len() != n {
            return Err(Error::DimensionMismatch(format!("OSD input vectors must all have {n} entries")));
        }
        if self.magnitudes.iter().any(|&m| m.is_nan() || m < 0.0) {
            return Err(Error::InvalidInput("channel magnitudes must be non-negative".into()));
        }
        Ok(())
    }
}

/// Best candidate of one OSD call.
#[derive(Clone, Debug, PartialEq)]
pub struct OsdResult {
    /// Natural-order codeword over the generator columns.
    pub best_codeword: Vec<u8>,
    pub best_distance: f64,
    /// `best_distance / Σ|y_i|`.
    pub ned: f64,
    pub candidates_evaluated: usize,
    /// Filter mode only: no candidate passed the CRC. The codeword is then
    /// the unfiltered minimum.
    pub crc_filtered_empty: bool,
}

/// Bits dropped from `|R|` before comparing reliabilities.
pub const RELIABILITY_DROP_BITS: u32 = 32;

/// Sort key of a reliability: `|r|` rounded to 20 mantissa bits.
///
/// Max-Log-MAP gives many positions LLRs that are equal in exact arithmetic
/// but differ in the last few bits. Comparing rounded keys makes those exact
/// ties, so the ordering does not depend on rounding noise (for instance
/// after scaling the channel samples).
pub fn reliability_key(r: f64) -> u64 {
    let bits = r.abs().to_bits();
    (bits + (1 << (RELIABILITY_DROP_BITS - 1))) >> RELIABILITY_DROP_BITS
}

/// Positions by decreasing `|R_i|` (see [`reliability_key`]), ties to the
/// lower index.
pub fn sort_by_reliability(reliabilities: &[f64]) -> ColumnPermutation {
    let mut order: Vec<usize> = (0..reliabilities.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(reliability_key(reliabilities[i])), i));
    ColumnPermutation::from_vec(order).expect("sorted indices form a permutation")
}

/// Systematic generator over the most reliable basis.
#[derive(Clone, Debug)]
pub struct MostReliableBasis {
    /// `[I | rest]` in the permuted column domain.
    pub gsys_permuted: BinaryMatrix,
    /// Column `j` of `gsys_permuted` is natural column `effective_perm.source(j)`.
    pub effective_perm: ColumnPermutation,
}

impl MostReliableBasis {
    pub fn basis_size(&self) -> usize {
        self.gsys_permuted.rows()
    }
}

pub fn build_mrb(generator: &BinaryMatrix, perm: &ColumnPermutation) -> Result<MostReliableBasis> {
    let reduced = generator.apply_column_perm(perm)?.systematize()?;
    if reduced.rank != generator.rows() {
        return Err(Error::Defect(format!("generator has rank {} < {} rows", reduced.rank, generator.rows())));
    }
    Ok(MostReliableBasis { gsys_permuted: reduced.matrix, effective_perm: perm.then(&reduced.perm)? })
}

/// Flip patterns in generation order: no flip, then single flips by
/// ascending basis index, then pairs in lexicographic order.
#[derive(Clone, Debug)]
pub struct FlipPatterns {
    basis: usize,
    order: usize,
    next: Option<(usize, usize, usize)>,
}

/// A pattern of at most two flipped basis positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flips {
    None,
    One(usize),
    Two(usize, usize),
}

impl FlipPatterns {
    pub fn new(basis: usize, order: usize) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::InvalidConfig(format!(
                "OSD order {order} exceeds the supported maximum of {MAX_ORDER}"
            )));
        }
        Ok(Self { basis, order, next: Some((0, 0, 0)) })
    }
}

impl Iterator for FlipPatterns {
    type Item = Flips;

    fn next(&mut self) -> Option<Flips> {
        let (w, i, j) = self.next?;
        let item = match w {
            0 => Flips::None,
            1 => Flips::One(i),
            _ => Flips::Two(i, j),
        };
        self.next = match w {
            0 if self.order >= 1 && self.basis >= 1 => Some((1, 0, 0)),
            1 if i + 1 < self.basis => Some((1, i + 1, 0)),
            1 if self.order >= 2 && self.basis >= 2 => Some((2, 0, 1)),
            2 if j + 1 < self.basis => Some((2, i, j + 1)),
            2 if i + 2 < self.basis => Some((2, i + 1, i + 2)),
            _ => None,
        };
        Some(item)
    }
}

/// `Σ_{i ≤ order} C(basis, i)`.
pub fn candidate_count(basis: usize, order: usize) -> usize {
    let mut total = 1;
    if order >= 1 {
        total += basis;
    }
    if order >= 2 {
        total += basis * basis.saturating_sub(1) / 2;
    }
    total
}

fn xor_into(acc: &mut [u64], row: &[u64]) {
    for (a, r) in acc.iter_mut().zip(row) {
        *a ^= r;
    }
}

fn base_word(mrb: &MostReliableBasis, basis_bits: &[u8]) -> Vec<u64> {
    let g = &mrb.gsys_permuted;
    let mut base = vec![0u64; g.stride()];
    for (r, &b) in basis_bits.iter().enumerate() {
        if b & 1 == 1 {
            xor_into(&mut base, g.row_words(r));
        }
    }
    base
}

/// All order-`n` candidates as natural-order codewords, in generation order.
pub fn reencode_order_n<'a>(
    mrb: &'a MostReliableBasis,
    basis_bits: &[u8],
    order: usize,
) -> Result<impl Iterator<Item = Vec<u8>> + 'a> {
    if basis_bits.len() != mrb.basis_size() {
        return Err(Error::DimensionMismatch(format!(
            "{} basis decisions for a basis of {}",
            basis_bits.len(),
            mrb.basis_size()
        )));
    }
    let base = base_word(mrb, basis_bits);
    let g = &mrb.gsys_permuted;
    Ok(FlipPatterns::new(mrb.basis_size(), order)?.map(move |flips| {
        let mut word = base.clone();
        match flips {
            Flips::None => {}
            Flips::One(i) => xor_into(&mut word, g.row_words(i)),
            Flips::Two(i, j) => {
                xor_into(&mut word, g.row_words(i));
                xor_into(&mut word, g.row_words(j));
            }
        }
        mrb.effective_perm.unpermute(&unpack_bits(&word, g.cols()))
    }))
}

/// `Σ |y_i|` over positions where `candidate` disagrees with the channel.
pub fn discrepancy(candidate: &[u8], input: &OsdInput<'_>) -> f64 {
    candidate.iter().zip(&input.hard_ref).zip(&input.magnitudes).filter(|((c, z), _)| c != z).map(|(_, m)| m).sum()
}

/// Normalized distance `d* / Σ|y_i|`.
pub fn ned(d_star: f64, magnitudes: &[f64]) -> Result<f64> {
    let total: f64 = magnitudes.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::InvalidInput("all channel magnitudes are zero".into()));
    }
    Ok(d_star / total)
}

/// Weighted mismatch of a packed, permuted-domain word against the packed
/// permuted hard decisions.
#[inline]
fn packed_distance(word: &[u64], reference: &[u64], weights: &[f64]) -> f64 {
    let mut d = 0.0;
    for (w, (a, b)) in word.iter().zip(reference).enumerate() {
        let mut diff = a ^ b;
        while diff != 0 {
            let bit = diff.trailing_zeros() as usize;
            d += weights[w * 64 + bit];
            diff &= diff - 1;
        }
    }
    d
}

pub fn osd_decode(input: &OsdInput<'_>, order: usize, crc_mode: CrcMode) -> Result<OsdResult> {
    input.validate()?;
    let g = input.generator;
    let n = g.cols();
    if !n.is_multiple_of(3) {
        return Err(Error::DimensionMismatch(format!("{n} generator columns is not 3k")));
    }
    let k = n / 3;
    let expected_rows = match crc_mode {
        CrcMode::Aided => k.checked_sub(CRC_LEN).filter(|&m| m > 0),
        CrcMode::Filter | CrcMode::None => Some(k),
    };
    if expected_rows != Some(g.rows()) {
        return Err(Error::InvalidConfig(format!(
            "{crc_mode:?} mode needs a {}-row generator for k={k}, got {} rows",
            expected_rows.map_or_else(|| "valid".to_string(), |r| r.to_string()),
            g.rows()
        )));
    }

    let mrb = build_mrb(g, &sort_by_reliability(&input.reliabilities))?;
    let perm = &mrb.effective_perm;
    let gsys = &mrb.gsys_permuted;
    let basis_bits: Vec<u8> = (0..gsys.rows()).map(|r| hard_decision(input.reliabilities[perm.source(r)])).collect();
    let reference = crate::gf2::pack_bits(&perm.permute(&input.hard_ref));
    let weights = perm.permute(&input.magnitudes);

    // CRC syndromes of each reduced row's natural-order code-block bits.
    let syndromes: Option<Vec<u32>> = (crc_mode == CrcMode::Filter).then(|| {
        let unit = crc24::unit_syndromes(k);
        (0..gsys.rows())
            .map(|r| {
                (0..n)
                    .filter(|&j| gsys.get(r, j) == 1 && perm.source(j) < k)
                    .fold(0u32, |s, j| s ^ unit[perm.source(j)])
            })
            .collect()
    });

    let base = base_word(&mrb, &basis_bits);
    let base_syndrome = syndromes
        .as_ref()
        .map_or(0, |syn| basis_bits.iter().zip(syn).filter(|(b, _)| **b == 1).fold(0, |s, (_, r)| s ^ r));

    let mut best_any: Option<(f64, Flips)> = None;
    let mut best_pass: Option<(f64, Flips)> = None;
    let mut evaluated = 0;
    let mut word = base.clone();
    for flips in FlipPatterns::new(gsys.rows(), order)? {
        word.copy_from_slice(&base);
        let mut syndrome = base_syndrome;
        match flips {
            Flips::None => {}
            Flips::One(i) => {
                xor_into(&mut word, gsys.row_words(i));
                if let Some(s) = &syndromes {
                    syndrome ^= s[i];
                }
            }
            Flips::Two(i, j) => {
                xor_into(&mut word, gsys.row_words(i));
                xor_into(&mut word, gsys.row_words(j));
                if let Some(s) = &syndromes {
                    syndrome ^= s[i] ^ s[j];
                }
            }
        }
        evaluated += 1;
        let d = packed_distance(&word, &reference, &weights);
        if best_any.is_none_or(|(bd, _)| d < bd) {
            best_any = Some((d, flips));
        }
        if syndrome == 0 && best_pass.is_none_or(|(bd, _)| d < bd) {
            best_pass = Some((d, flips));
        }
    }

    let (chosen, crc_filtered_empty) = match crc_mode {
        CrcMode::Filter => match best_pass {
            Some(b) => (b, false),
            None => (best_any.expect("at least one candidate"), true),
        },
        _ => (best_any.expect("at least one candidate"), false),
    };
    let mut word = base;
    match chosen.1 {
        Flips::None => {}
        Flips::One(i) => xor_into(&mut word, gsys.row_words(i)),
        Flips::Two(i, j) => {
            xor_into(&mut word, gsys.row_words(i));
            xor_into(&mut word, gsys.row_words(j));
        }
    }
    let best_codeword = perm.unpermute(&unpack_bits(&word, n));
    let best_distance = discrepancy(&best_codeword, input);
    Ok(OsdResult {
        ned: ned(best_distance, &input.magnitudes)?,
        best_codeword,
        best_distance,
        candidates_evaluated: evaluated,
        crc_filtered_empty,
    })
}
