//! Ground truth: exact Shapley values, exact Shapley interaction indices and
//! the squared-error metric.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::coalition::{binomial_f64, enumerate_all, grand_coalition, Coalition};
use crate::error::{Error, Result};
use crate::game::{Game, ValueTable};
use crate::kadd::{InteractionBasis, InteractionVector};

/// Largest player count the exact routines accept.
pub const EXACT_CAP: usize = 30;

/// One value per player, in player order.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyVector(Vec<f64>);

impl ShapleyVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl Deref for ShapleyVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ShapleyVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

fn check_cap<G: Game + ?Sized>(game: &G) -> Result<usize> {
    let n = game.players().get();
    if n > EXACT_CAP {
        return Err(Error::InvalidPlayerCount { n, cap: EXACT_CAP });
    }
    Ok(n)
}

/// Exact Shapley values by one sweep over all `2^n` coalitions.
///
/// Each `v(A)` is scattered into every player: `+v(A) / (n C(n-1, |A|-1))`
/// for members and `-v(A) / (n C(n-1, |A|))` for non-members.
pub fn exact_shapley<G: Game + ?Sized>(game: &G) -> Result<ShapleyVector> {
    let n = check_cap(game)?;
    let nf = n as f64;
    let plus: Vec<f64> = (0..=n)
        .map(|s| {
            if s == 0 {
                0.0
            } else {
                1.0 / (nf * binomial_f64(n - 1, s - 1))
            }
        })
        .collect();
    let minus: Vec<f64> = (0..=n)
        .map(|s| {
            if s == n {
                0.0
            } else {
                1.0 / (nf * binomial_f64(n - 1, s))
            }
        })
        .collect();
    let mut phi = vec![0.0; n];
    for a in enumerate_all(game.players()) {
        let v = game.value(a)?;
        let s = a.size();
        for (i, p) in phi.iter_mut().enumerate() {
            if a.contains(i) {
                *p += plus[s] * v;
            } else {
                *p -= minus[s] * v;
            }
        }
    }
    Ok(ShapleyVector(phi))
}

/// Exact Shapley interaction index `I(S)`.
pub fn exact_interaction<G: Game + ?Sized>(game: &G, s: Coalition) -> Result<f64> {
    let n = check_cap(game)?;
    let players = game.players();
    if s.is_empty() {
        return Err(Error::InvalidGame(
            "interaction index needs a nonempty coalition".into(),
        ));
    }
    if !s.fits(players) {
        return Err(Error::CoalitionOutOfRange { bits: s.bits(), n });
    }
    interaction_with(s, n, |c| game.value(c))
}

fn interaction_with(
    s: Coalition,
    n: usize,
    mut value: impl FnMut(Coalition) -> Result<f64>,
) -> Result<f64> {
    let size = s.size();
    let rest = n - size;
    let weights: Vec<f64> = (0..=rest)
        .map(|a| 1.0 / ((rest + 1) as f64 * binomial_f64(rest, a)))
        .collect();
    let outside = Coalition::from_bits(((1u64 << n) - 1) & !s.bits());
    let mut total = 0.0;
    for a in outside.subsets() {
        let mut derivative = 0.0;
        for inner in s.subsets() {
            let v = value(a.union(inner))?;
            if (size - inner.size()) % 2 == 0 {
                derivative += v;
            } else {
                derivative -= v;
            }
        }
        total += weights[a.size()] * derivative;
    }
    Ok(total)
}

/// `I(S)` for every nonempty `S` with `|S| <= max_order`, in basis order. The
/// `∅` slot holds the empty-set index `I(∅)`.
pub fn exact_interactions<G: Game + ?Sized>(
    game: &G,
    max_order: usize,
) -> Result<InteractionVector> {
    check_cap(game)?;
    let table = ValueTable::from_game(game)?;
    let basis = InteractionBasis::new(game.players(), max_order)?;
    let coeffs = basis
        .subsets()
        .iter()
        .map(|&b| table_interaction(&table, b))
        .collect();
    InteractionVector::new(basis, coeffs)
}

/// Interaction index from a dense table, defined for every `S` including `∅`
/// (where it is the weighted mean of all values).
pub fn table_interaction(table: &ValueTable, s: Coalition) -> f64 {
    interaction_with(s, table.n().get(), |c| Ok(table.get(c)))
        .expect("table lookups are infallible")
}

/// Interaction indices of all `2^n` subsets, indexed by bit pattern.
pub fn all_interactions(table: &ValueTable) -> Vec<f64> {
    enumerate_all(table.n())
        .map(|s| table_interaction(table, s))
        .collect()
}

/// `(1/n) sum_i (est_i - truth_i)^2`.
pub fn mse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let sq: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t) * (e - t))
        .sum();
    Ok(sq / truth.len() as f64)
}

/// `v(N) - v(∅)`, the total to be shared.
pub fn efficiency_gap<G: Game + ?Sized>(game: &G) -> Result<f64> {
    Ok(game.value(grand_coalition(game.players()))? - game.value(Coalition::EMPTY)?)
}
