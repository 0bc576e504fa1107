//! Dense matrices over GF(2) with bit-packed rows.
//!
//! Rows are stored as `u64` words, least significant bit first, so that row
//! additions are word-wide XORs. Everything that builds or eliminates a
//! generator matrix goes through [`BinaryMatrix`].

use std::fmt;

use crate::{Error, Result};

const WORD_BITS: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// A permutation of column indices.
///
/// Applying the permutation to a matrix puts input column `perm[j]` at output
/// column `j`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ColumnPermutation(Vec<usize>);

impl ColumnPermutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Wraps a mapping, rejecting anything that is not a bijection on
    /// `0..mapping.len()`.
    pub fn from_vec(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n || seen[m] {
                return Err(Error::InvalidInput(format!("column mapping is not a bijection on 0..{n}")));
            }
            seen[m] = true;
        }
        Ok(Self(mapping))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Source column placed at position `j`.
    #[inline]
    pub fn source(&self, j: usize) -> usize {
        self.0[j]
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (j, &src) in self.0.iter().enumerate() {
            inv[src] = j;
        }
        Self(inv)
    }

    /// Permutation equivalent to applying `self` first and `next` second.
    pub fn then(&self, next: &ColumnPermutation) -> Result<Self> {
        if next.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose permutations of size {} and {}",
                self.len(),
                next.len()
            )));
        }
        Ok(Self(next.0.iter().map(|&j| self.0[j]).collect()))
    }

    /// Reorders a slice the same way columns are reordered.
    pub fn permute<T: Copy>(&self, values: &[T]) -> Vec<T> {
        self.0.iter().map(|&src| values[src]).collect()
    }

    /// Undoes [`ColumnPermutation::permute`].
    pub fn unpermute<T: Copy + Default>(&self, values: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); values.len()];
        for (j, &src) in self.0.iter().enumerate() {
            out[src] = values[j];
        }
        out
    }
}

/// Dense binary matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    words: Vec<u64>,
}

/// Result of reducing a matrix to `[I | rest]`.
#[derive(Clone, Debug)]
pub struct Systematic {
    pub matrix: BinaryMatrix,
    /// Column swaps performed during elimination.
    pub perm: ColumnPermutation,
    pub rank: usize,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!("matrix dimensions must be positive, got {rows}x{cols}")));
        }
        let stride = words_for(cols);
        Ok(Self { rows, cols, stride, words: vec![0; rows * stride] })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, 1);
        }
        Ok(m)
    }

    /// Builds a matrix from rows of 0/1 values.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols)?;
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch(format!("row {i} has {} entries, expected {cols}", row.len())));
            }
            for (j, &b) in row.iter().enumerate() {
                if b > 1 {
                    return Err(Error::InvalidInput(format!("entry ({i},{j}) = {b} is not binary")));
                }
                m.set(i, j, b);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        debug_assert!(r < self.rows && c < self.cols);
        ((self.words[r * self.stride + c / WORD_BITS] >> (c % WORD_BITS)) & 1) as u8
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, bit: u8) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.words[r * self.stride + c / WORD_BITS];
        let mask = 1u64 << (c % WORD_BITS);
        if bit & 1 == 1 {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    /// Packed words of row `r`; bits past `cols` are always zero.
    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.words[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row_bits(&self, r: usize) -> Vec<u8> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows).map(|r| self.row_bits(r)).collect()
    }

    /// Number of `u64` words per row.
    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Row `dst` ^= row `src`.
    #[inline]
    pub fn xor_row(&mut self, src: usize, dst: usize) {
        debug_assert_ne!(src, dst);
        let (s, d) = (src * self.stride, dst * self.stride);
        for w in 0..self.stride {
            let v = self.words[s + w];
            self.words[d + w] ^= v;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.words.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            let (x, y) = (self.get(r, a), self.get(r, b));
            if x != y {
                self.set(r, a, y);
                self.set(r, b, x);
            }
        }
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, rhs: &BinaryMatrix) -> Result<BinaryMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = BinaryMatrix::zeros(self.rows, rhs.cols)?;
        for i in 0..self.rows {
            let dst = i * out.stride;
            for t in 0..self.cols {
                if self.get(i, t) == 1 {
                    let src = t * rhs.stride;
                    for w in 0..rhs.stride {
                        out.words[dst + w] ^= rhs.words[src + w];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Row vector times matrix: `v × self`.
    pub fn left_mul_vec(&self, v: &[u8]) -> Result<Vec<u8>> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} times {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let mut acc = vec![0u64; self.stride];
        for (r, &b) in v.iter().enumerate() {
            if b & 1 == 1 {
                for (a, w) in acc.iter_mut().zip(self.row_words(r)) {
                    *a ^= w;
                }
            }
        }
        Ok(unpack_bits(&acc, self.cols))
    }

    /// Horizontal concatenation `[a | b | ...]`.
    pub fn hstack(parts: &[&BinaryMatrix]) -> Result<BinaryMatrix> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::DimensionMismatch("hstack operands have different row counts".into()));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = BinaryMatrix::zeros(rows, cols)?;
        let mut offset = 0;
        for p in parts {
            for r in 0..rows {
                for c in 0..p.cols {
                    if p.get(r, c) == 1 {
                        out.set(r, offset + c, 1);
                    }
                }
            }
            offset += p.cols;
        }
        Ok(out)
    }

    /// Output row `i` is input row `sources[i]`.
    pub fn select_rows(&self, sources: &[usize]) -> Result<BinaryMatrix> {
        let mut out = BinaryMatrix::zeros(sources.len(), self.cols)?;
        for (i, &src) in sources.iter().enumerate() {
            if src >= self.rows {
                return Err(Error::DimensionMismatch(format!("row index {src} out of range for {} rows", self.rows)));
            }
            out.words[i * self.stride..(i + 1) * self.stride].copy_from_slice(self.row_words(src));
        }
        Ok(out)
    }

    /// Column `j` of the output is column `perm.source(j)` of `self`.
    pub fn apply_column_perm(&self, perm: &ColumnPermutation) -> Result<BinaryMatrix> {
        if perm.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "permutation of size {} applied to {} columns",
                perm.len(),
                self.cols
            )));
        }
        let mut out = BinaryMatrix::zeros(self.rows, self.cols)?;
        for (j, &src) in perm.as_slice().iter().enumerate() {
            let (sw, sb) = (src / WORD_BITS, src % WORD_BITS);
            let (dw, db) = (j / WORD_BITS, j % WORD_BITS);
            for r in 0..self.rows {
                let bit = (self.words[r * self.stride + sw] >> sb) & 1;
                out.words[r * out.stride + dw] |= bit << db;
            }
        }
        Ok(out)
    }

    /// Gauss-Jordan reduction to `[I_rank | rest]`.
    ///
    /// Columns are scanned left to right. When the current column has no
    /// pivot at or below the current row, it is swapped with the lowest-index
    /// later column that has one. Rows past `rank` are zero on return.
    pub fn systematize(&self) -> Result<Systematic> {
        if self.rows > self.cols {
            return Err(Error::InvalidInput(format!(
                "cannot systematize a {}x{} matrix with more rows than columns",
                self.rows, self.cols
            )));
        }
        let mut m = self.clone();
        let mut perm = ColumnPermutation::identity(self.cols);
        let mut rank = 0;
        for r in 0..self.rows {
            let found = (r..self.cols).find_map(|c| (r..m.rows).find(|&p| m.get(p, c) == 1).map(|p| (c, p)));
            let Some((c, p)) = found else { break };
            if c != r {
                m.swap_cols(r, c);
                perm.swap(r, c);
            }
            m.swap_rows(r, p);
            let (w, mask) = (r / WORD_BITS, 1u64 << (r % WORD_BITS));
            for other in 0..m.rows {
                if other != r && m.words[other * m.stride + w] & mask != 0 {
                    m.xor_row(r, other);
                }
            }
            rank += 1;
        }
        Ok(Systematic { matrix: m, perm, rank })
    }

    pub fn rank(&self) -> usize {
        if self.rows > self.cols {
            let mut t = BinaryMatrix::zeros(self.cols, self.rows).expect("non-empty");
            for r in 0..self.rows {
                for c in 0..self.cols {
                    t.set(c, r, self.get(r, c));
                }
            }
            return t.rank();
        }
        self.systematize().map(|s| s.rank).unwrap_or(0)
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &BinaryMatrix) -> Result<BinaryMatrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!("vstack of {} and {} columns", self.cols, other.cols)));
        }
        let mut out = BinaryMatrix::zeros(self.rows + other.rows, self.cols)?;
        out.words[..self.words.len()].copy_from_slice(&self.words);
        out.words[self.words.len()..].copy_from_slice(&other.words);
        Ok(out)
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: String = (0..self.cols).map(|c| if self.get(r, c) == 1 { '1' } else { '0' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

/// Packs 0/1 values into words, least significant bit first.
pub fn pack_bits(bits: &[u8]) -> Vec<u64> {
    let mut words = vec![0u64; words_for(bits.len())];
    for (i, &b) in bits.iter().enumerate() {
        words[i / WORD_BITS] |= u64::from(b & 1) << (i % WORD_BITS);
    }
    words
}

pub fn unpack_bits(words: &[u64], len: usize) -> Vec<u8> {
    (0..len).map(|i| ((words[i / WORD_BITS] >> (i % WORD_BITS)) & 1) as u8).collect()
}
