//! Unsupervised feature importance: the total-correlation game over a
//! discretized data matrix.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::coalition::{Coalition, PlayerCount};
use crate::error::{Error, Result};
use crate::game::Game;

/// Default number of equal-width bins.
pub const DEFAULT_BINS: usize = 4;

/// Row-major matrix of category codes, one column per feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    codes: Vec<u32>,
    /// Number of categories per column (max code + 1).
    arity: Vec<u32>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, codes: Vec<u32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Data(
                "data matrix must have at least one row and column".into(),
            ));
        }
        if codes.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: codes.len(),
            });
        }
        let mut arity = alloc::vec![0u32; cols];
        for row in codes.chunks(cols) {
            for (a, &c) in arity.iter_mut().zip(row) {
                *a = (*a).max(c + 1);
            }
        }
        Ok(Self {
            rows,
            cols,
            codes,
            arity,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn code(&self, row: usize, col: usize) -> u32 {
        self.codes[row * self.cols + col]
    }

    /// Empirical joint Shannon entropy (natural log) of the columns in `s`.
    pub fn joint_entropy(&self, s: Coalition) -> f64 {
        if s.is_empty() {
            return 0.0;
        }
        let cols: Vec<usize> = s.members().collect();
        let mut counts = self.joint_counts(&cols);
        counts.sort_unstable();
        let m = self.rows as f64;
        counts
            .iter()
            .map(|&c| {
                let p = c as f64 / m;
                -p * libm::log(p)
            })
            .sum()
    }

    /// Histogram of row tuples restricted to `cols`, as an unordered list of counts.
    fn joint_counts(&self, cols: &[usize]) -> Vec<u64> {
        // mixed-radix key when it fits in 64 bits, otherwise the tuple itself
        let mut radix_ok = true;
        let mut span: u128 = 1;
        for &c in cols {
            span *= self.arity[c].max(1) as u128;
            if span > u64::MAX as u128 {
                radix_ok = false;
                break;
            }
        }
        if radix_ok {
            let mut keys: Vec<u64> = (0..self.rows)
                .map(|r| {
                    cols.iter().fold(0u64, |acc, &c| {
                        acc * self.arity[c].max(1) as u64 + self.code(r, c) as u64
                    })
                })
                .collect();
            keys.sort_unstable();
            run_lengths(&keys)
        } else {
            let mut map: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
            for r in 0..self.rows {
                let key: Vec<u32> = cols.iter().map(|&c| self.code(r, c)).collect();
                *map.entry(key).or_default() += 1;
            }
            map.into_values().collect()
        }
    }
}

fn run_lengths(sorted: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        out.push((j - i) as u64);
        i = j;
    }
    out
}

/// Maps a numeric column-major-agnostic table (`raw[row][col]`) to category codes.
///
/// Columns with at most `bins` distinct values are coded by the rank of their
/// distinct values; wider columns are split into `bins` equal-width intervals
/// over `[min, max]`.
pub fn discretize(raw: &[Vec<f64>], bins: usize) -> Result<DataMatrix> {
    if bins < 2 {
        return Err(Error::Data(format!("need at least 2 bins, got {bins}")));
    }
    let rows = raw.len();
    if rows == 0 {
        return Err(Error::Data("no rows".into()));
    }
    let cols = raw[0].len();
    if let Some(bad) = raw.iter().position(|r| r.len() != cols) {
        return Err(Error::Data(format!(
            "row {bad} has {} cells, expected {cols}",
            raw[bad].len()
        )));
    }
    let mut codes = alloc::vec![0u32; rows * cols];
    for c in 0..cols {
        let column: Vec<f64> = raw.iter().map(|r| r[c]).collect();
        if let Some(v) = column.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-numeric cell {v} in column {}",
                c + 1
            )));
        }
        let mut distinct = column.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let coded: Vec<u32> = if distinct.len() <= bins {
            column
                .iter()
                .map(|v| distinct.binary_search_by(|d| d.total_cmp(v)).unwrap() as u32)
                .collect()
        } else {
            let lo = distinct[0];
            let hi = distinct[distinct.len() - 1];
            let width = hi - lo;
            column
                .iter()
                .map(|&v| {
                    let b = libm::floor((v - lo) / width * bins as f64) as usize;
                    b.min(bins - 1) as u32
                })
                .collect()
        };
        for (r, code) in coded.into_iter().enumerate() {
            codes[r * cols + c] = code;
        }
    }
    DataMatrix::new(rows, cols, codes)
}

/// `v(S) = sum_{i in S} H(X_i) - H(X_S)`.
#[derive(Debug, Clone)]
pub struct TotalCorrelationGame {
    n: PlayerCount,
    data: DataMatrix,
    marginals: Vec<f64>,
    scale: f64,
}

impl TotalCorrelationGame {
    /// Natural-log entropies.
    pub fn new(data: DataMatrix) -> Result<Self> {
        Self::with_log_base(data, core::f64::consts::E)
    }

    pub fn with_log_base(data: DataMatrix, base: f64) -> Result<Self> {
        if !(base > 1.0 && base.is_finite()) {
            return Err(Error::Data(format!(
                "logarithm base must exceed 1, got {base}"
            )));
        }
        let n = PlayerCount::new(data.cols())?;
        let marginals = (0..data.cols())
            .map(|i| data.joint_entropy(Coalition::from_bits(1 << i)))
            .collect();
        Ok(Self {
            n,
            data,
            marginals,
            scale: 1.0 / libm::log(base),
        })
    }

    pub fn data(&self) -> &DataMatrix {
        &self.data
    }
}

impl Game for TotalCorrelationGame {
    fn players(&self) -> PlayerCount {
        self.n
    }

    fn value(&self, s: Coalition) -> Result<f64> {
        if !s.fits(self.n) {
            return Err(Error::CoalitionOutOfRange {
                bits: s.bits(),
                n: self.n.get(),
            });
        }
        if s.size() <= 1 {
            return Ok(0.0);
        }
        let sum: f64 = s.members().map(|i| self.marginals[i]).sum();
        let tc = sum - self.data.joint_entropy(s);
        // total correlation is nonnegative; clip rounding noise
        Ok(tc.max(0.0) * self.scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalition::enumerate_all;
    use alloc::vec;

    fn column(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    fn codes_of(m: &DataMatrix, col: usize) -> Vec<u32> {
        (0..m.rows()).map(|r| m.code(r, col)).collect()
    }

    #[test]
    fn equal_width_bins() {
        let m = discretize(&column(&[0.0, 1.0, 2.0, 3.0]), 2).unwrap();
        assert_eq!(codes_of(&m, 0), vec![0, 0, 1, 1]);
    }

    #[test]
    fn constant_column_single_category() {
        let m = discretize(&column(&[5.0, 5.0, 5.0]), 4).unwrap();
        assert_eq!(codes_of(&m, 0), vec![0, 0, 0]);
    }

    #[test]
    fn endpoints_map_to_extreme_bins() {
        let m = discretize(&column(&[0.0, 10.0]), 2).unwrap();
        assert_eq!(codes_of(&m, 0), vec![0, 1]);
    }

    #[test]
    fn discretize_rejects_bad_input() {
        assert!(discretize(&column(&[0.0, 1.0]), 1).is_err());
        assert!(discretize(&column(&[0.0, f64::NAN]), 2).is_err());
        assert!(discretize(&[], 2).is_err());
    }

    fn dup_binary() -> TotalCorrelationGame {
        let raw = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        ];
        TotalCorrelationGame::new(discretize(&raw, 4).unwrap()).unwrap()
    }

    #[test]
    fn duplicated_columns_share_ln2() {
        let g = dup_binary();
        assert_eq!(g.value(Coalition::EMPTY).unwrap(), 0.0);
        assert_eq!(g.value(Coalition::from_bits(0b01)).unwrap(), 0.0);
        assert_eq!(g.value(Coalition::from_bits(0b10)).unwrap(), 0.0);
        let v = g.value(Coalition::from_bits(0b11)).unwrap();
        assert!((v - core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn log_base_rescales() {
        let raw = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let g = TotalCorrelationGame::with_log_base(discretize(&raw, 4).unwrap(), 2.0).unwrap();
        assert!((g.value(Coalition::from_bits(0b11)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nonnegative_and_grows_with_duplicate_partner() {
        // columns: x, copy of x, independent-ish y, noisy copy of y
        let raw: Vec<Vec<f64>> = (0..40)
            .map(|r| {
                let x = (r % 3) as f64;
                let y = ((r / 3) % 2) as f64;
                let z = if r % 7 == 0 { 1.0 - y } else { y };
                vec![x, x, y, z]
            })
            .collect();
        let g = TotalCorrelationGame::new(discretize(&raw, 4).unwrap()).unwrap();
        let n = g.players();
        for c in enumerate_all(n) {
            assert!(g.value(c).unwrap() >= 0.0);
        }
        // adding the duplicate partner of feature 1 never lowers the worth
        for c in enumerate_all(n) {
            if c.contains(0) && !c.contains(1) {
                assert!(g.value(c.with(1)).unwrap() >= g.value(c).unwrap());
            }
        }
    }
}
