//! Plain-text value tables.
//!
//! ```text
//! n=2
//! # comment lines start with '#'
//! 00,0
//! 10,1.5
//! 01,2
//! 11,3.5
//! ```
//!
//! Each coalition appears exactly once as an `n`-character bitstring whose
//! `j`-th character is player `j+1`; line order is free.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use shapkadd_core::{enumerate_all, Coalition, PlayerCount, ValueTable};

use crate::error::{Error, Result};

/// Parses a value table; `cap` bounds the player count.
pub fn parse_value_table(
    text: &str,
    cap: usize,
) -> std::result::Result<ValueTable, (usize, String)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines
        .next()
        .ok_or((1, "empty file, expected `n=<int>`".to_string()))?;
    let n = header
        .strip_prefix("n=")
        .and_then(|v| v.trim().parse::<usize>().ok())
        .ok_or((hline, format!("expected `n=<int>`, found {header:?}")))?;
    let n = PlayerCount::with_cap(n, cap).map_err(|e| (hline, e.to_string()))?;
    let total = n.coalition_count() as usize;
    let mut values = vec![f64::NAN; total];
    let mut seen = vec![false; total];
    for (line, l) in lines {
        let (bits, value) = l
            .split_once(',')
            .ok_or((line, format!("expected `<bitstring>,<value>`, found {l:?}")))?;
        let bits = bits.trim();
        let (c, len) = Coalition::parse_bitstring(bits).map_err(|e| (line, e.to_string()))?;
        if len != n.get() {
            return Err((
                line,
                format!("bitstring {bits:?} has length {len}, expected {n}"),
            ));
        }
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| (line, format!("value {:?} is not a number", value.trim())))?;
        if !v.is_finite() {
            return Err((line, format!("non-finite value for {bits}")));
        }
        let idx = c.bits() as usize;
        if seen[idx] {
            return Err((line, format!("duplicate coalition {bits}")));
        }
        seen[idx] = true;
        values[idx] = v;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        let c = Coalition::from_bits(missing as u64).to_bitstring(n);
        let count = seen.iter().filter(|s| !**s).count();
        return Err((
            0,
            format!("incomplete table: {count} coalition(s) missing, first {c}"),
        ));
    }
    ValueTable::new(n, values).map_err(|e| (0, e.to_string()))
}

pub fn load_value_table(path: impl AsRef<Path>, cap: usize) -> Result<ValueTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_value_table(&text, cap).map_err(|(line, msg)| Error::Parse {
        path: path.to_owned(),
        line,
        msg,
    })
}

/// Renders `table` in ascending bit order with shortest round-trip decimals.
/// Shortest round-trip rendering of a real, switching to exponent notation
/// for very small or very large magnitudes.
#[derive(Debug, Clone, Copy)]
pub struct Real(pub f64);

impl std::fmt::Display for Real {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0.abs();
        if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
            write!(f, "{:e}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

pub fn format_value_table(table: &ValueTable) -> String {
    let n = table.n();
    let mut out = format!("n={n}\n");
    for c in enumerate_all(n) {
        let _ = writeln!(out, "{},{}", c.to_bitstring(n), Real(table.get(c)));
    }
    out
}

pub fn save_value_table(table: &ValueTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_value_table(table)).map_err(|e| Error::io(path, e))
}
