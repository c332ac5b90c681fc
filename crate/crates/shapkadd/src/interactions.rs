//! Interaction vectors as text: one `<subset>,<value>` line per basis element
//! in basis order, where `<subset>` is the comma-joined 1-indexed players or
//! `empty`.

use std::fmt::Write as _;
use std::path::Path;

use shapkadd_core::{Coalition, InteractionBasis, InteractionVector, PlayerCount};

use crate::error::{Error, Result};
use crate::table::Real;

pub fn subset_label(c: Coalition) -> String {
    if c.is_empty() {
        return "empty".into();
    }
    c.players()
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub fn format_interactions(iv: &InteractionVector) -> String {
    let mut out = String::new();
    for (b, v) in iv.iter() {
        let _ = writeln!(out, "{},{}", subset_label(b), Real(v));
    }
    out
}

pub fn write_interactions(iv: &InteractionVector, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_interactions(iv)).map_err(|e| Error::io(path, e))
}

/// Parses the text form back; the degree is the largest subset size and the
/// lines must follow basis order exactly.
pub fn parse_interactions(text: &str, n: PlayerCount) -> Result<InteractionVector> {
    let mut entries = Vec::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let bad = |msg: String| Error::Format(format!("interaction line {}: {msg}", i + 1));
        let (label, value) = line
            .rsplit_once(',')
            .ok_or_else(|| bad(format!("no value in {line:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad value {value:?}")))?;
        let subset = if label.trim() == "empty" {
            Coalition::EMPTY
        } else {
            let players = label
                .split(',')
                .map(|p| p.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad(format!("bad subset {label:?}")))?;
            Coalition::from_players(&players, n)?
        };
        entries.push((subset, value));
    }
    let k = entries
        .iter()
        .map(|(c, _)| c.size())
        .max()
        .unwrap_or(0)
        .max(1);
    let basis = InteractionBasis::new(n, k)?;
    if basis.subsets().len() != entries.len()
        || basis
            .subsets()
            .iter()
            .zip(&entries)
            .any(|(b, (c, _))| b != c)
    {
        return Err(Error::Format(format!(
            "subsets do not follow the order-{k} basis for n = {n}"
        )));
    }
    Ok(InteractionVector::new(
        basis,
        entries.into_iter().map(|(_, v)| v).collect(),
    )?)
}
