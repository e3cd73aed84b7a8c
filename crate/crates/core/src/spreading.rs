//! Sylvester-Hadamard channelization codes for the tag's BPSK symbols.

use crate::{Error, Result};

pub const MAX_ORDER: u32 = 16;

/// `2^order × 2^order` Sylvester-Hadamard matrix.
///
/// Entries are generated on demand: in the Sylvester construction entry
/// `(r, c)` equals `(-1)^popcount(r & c)`, so no `M²` storage is needed for
/// the long codewords.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HadamardMatrix {
    order: u32,
}

impl HadamardMatrix {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn size(&self) -> usize {
        1 << self.order
    }

    pub fn entry(&self, row: usize, col: usize) -> i8 {
        if (row & col).count_ones().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn row(&self, row: usize) -> Vec<i8> {
        (0..self.size()).map(|c| self.entry(row, c)).collect()
    }

    /// Materialize all rows. Only sensible for small orders.
    pub fn to_rows(&self) -> Vec<Vec<i8>> {
        (0..self.size()).map(|r| self.row(r)).collect()
    }
}

pub fn hadamard_matrix(order: u32) -> Result<HadamardMatrix> {
    if order > MAX_ORDER {
        return Err(Error::HadamardOrder(order));
    }
    Ok(HadamardMatrix { order })
}

/// The two codewords assigned to the +1 and -1 symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodewordPair {
    pub order: u32,
    pub row_plus: usize,
    pub row_minus: usize,
    pub code_plus: Vec<i8>,
    pub code_minus: Vec<i8>,
}

impl CodewordPair {
    pub fn len(&self) -> usize {
        self.code_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code_plus.is_empty()
    }
}

/// Rows 1 and 2 when the matrix has them (both zero-mean), rows 0 and 1 for
/// `M = 2`, and row 0 alone is never a valid pair.
pub fn default_rows(order: u32) -> (usize, usize) {
    if order >= 2 {
        (1, 2)
    } else {
        (0, 1)
    }
}

pub fn select_pair(order: u32, row_plus: usize, row_minus: usize) -> Result<CodewordPair> {
    let h = hadamard_matrix(order)?;
    let m = h.size();
    if row_plus == row_minus {
        return Err(Error::InvalidCodeRows(format!(
            "rows must differ, both are {row_plus}"
        )));
    }
    if row_plus >= m || row_minus >= m {
        return Err(Error::InvalidCodeRows(format!(
            "rows ({row_plus}, {row_minus}) out of range for M = {m}"
        )));
    }
    Ok(CodewordPair {
        order,
        row_plus,
        row_minus,
        code_plus: h.row(row_plus),
        code_minus: h.row(row_minus),
    })
}

pub fn default_pair(order: u32) -> Result<CodewordPair> {
    let (p, m) = default_rows(order);
    select_pair(order, p, m)
}

/// Chip sequence for one BPSK symbol.
pub fn spread(symbol: i8, pair: &CodewordPair) -> Result<&[i8]> {
    match symbol {
        1 => Ok(&pair.code_plus),
        -1 => Ok(&pair.code_minus),
        other => Err(Error::InvalidSymbol(other)),
    }
}
