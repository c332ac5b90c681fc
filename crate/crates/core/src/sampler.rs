//! Without-replacement sampling of proper coalitions with probability
//! proportional to the Shapley kernel weight.
//!
//! The weight depends only on coalition size, so a draw picks a size stratum
//! with probability proportional to its remaining mass
//! `(#undrawn of that size) * w*(size)` and then an undrawn member of that
//! stratum uniformly.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::Rng;

use crate::coalition::{binomial_f64, enumerate_size, Coalition, PlayerCount};
use crate::error::{Error, Result};
use crate::wls::shapley_kernel_weight;

/// Normalized probability mass of each size stratum `0..=n` (zero for `0`
/// and `n`).
pub fn initial_distribution(n: PlayerCount) -> Result<Vec<f64>> {
    let nn = n.get();
    if nn < 2 {
        return Err(Error::InvalidPlayerCount { n: nn, cap: 2 });
    }
    let mut mass: Vec<f64> = (0..=nn)
        .map(|a| {
            if a == 0 || a == nn {
                0.0
            } else {
                binomial_f64(nn, a) * shapley_kernel_weight(n, a).expect("proper size")
            }
        })
        .collect();
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    Ok(mass)
}

/// Initial probability of one proper coalition of size `a`.
pub fn coalition_probability(n: PlayerCount, a: usize) -> Result<f64> {
    let mass = initial_distribution(n)?;
    if a == 0 || a >= n.get() {
        return Ok(0.0);
    }
    Ok(mass[a] / binomial_f64(n.get(), a))
}

/// Draws a uniformly random coalition of size `a` from the players in `pool`.
pub(crate) fn random_subset<R: Rng + ?Sized>(rng: &mut R, pool: &[usize], a: usize) -> Coalition {
    rand::seq::index::sample(rng, pool.len(), a)
        .iter()
        .fold(Coalition::EMPTY, |c, k| c.with(pool[k]))
}

/// Uniform without-replacement draws from a fixed family of coalitions,
/// switching from rejection to explicit enumeration once more than half of
/// the family has been drawn.
#[derive(Debug, Clone)]
pub(crate) struct Stratum {
    size: usize,
    total: u64,
    drawn: BTreeSet<u64>,
    pool: Option<Vec<Coalition>>,
}

impl Stratum {
    pub(crate) fn new(size: usize, total: u64) -> Self {
        Self {
            size,
            total,
            drawn: BTreeSet::new(),
            pool: None,
        }
    }

    pub(crate) fn remaining(&self) -> u64 {
        match &self.pool {
            Some(p) => p.len() as u64,
            None => self.total - self.drawn.len() as u64,
        }
    }

    /// `players` are the eligible players and `members` enumerates the whole
    /// family (used only once the stratum is mostly drawn).
    pub(crate) fn draw<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        players: &[usize],
        members: impl FnOnce() -> Vec<Coalition>,
    ) -> Option<Coalition> {
        if self.remaining() == 0 {
            return None;
        }
        if self.pool.is_none() && self.drawn.len() as u64 * 2 > self.total {
            let drawn = core::mem::take(&mut self.drawn);
            self.pool = Some(
                members()
                    .into_iter()
                    .filter(|c| !drawn.contains(&c.bits()))
                    .collect(),
            );
        }
        match &mut self.pool {
            Some(pool) => {
                let i = rng.random_range(0..pool.len());
                Some(pool.swap_remove(i))
            }
            None => loop {
                let c = random_subset(rng, players, self.size);
                if self.drawn.insert(c.bits()) {
                    return Some(c);
                }
            },
        }
    }
}

/// Sequential sampler over `P(N) \ {∅, N}`.
#[derive(Debug, Clone)]
pub struct CoalitionSampler<R> {
    n: PlayerCount,
    weights: Vec<f64>,
    strata: Vec<Stratum>,
    players: Vec<usize>,
    rng: R,
}

impl<R: Rng> CoalitionSampler<R> {
    pub fn new(n: PlayerCount, rng: R) -> Self {
        let nn = n.get();
        let weights = (0..=nn)
            .map(|a| shapley_kernel_weight(n, a).unwrap_or(0.0))
            .collect();
        let strata = (0..=nn)
            .map(|a| {
                let total = if a == 0 || a == nn {
                    0
                } else {
                    binomial_f64(nn, a) as u64
                };
                Stratum::new(a, total)
            })
            .collect();
        Self {
            n,
            weights,
            strata,
            players: (0..nn).collect(),
            rng,
        }
    }

    /// Total mass of undrawn coalitions (unnormalized).
    pub fn remaining_mass(&self) -> f64 {
        self.strata
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| s.remaining() as f64 * w)
            .sum()
    }

    /// Undrawn proper coalitions per size.
    pub fn remaining_counts(&self) -> Vec<u64> {
        self.strata.iter().map(Stratum::remaining).collect()
    }

    /// Draws one not-yet-drawn proper coalition.
    pub fn sample(&mut self) -> Result<Coalition> {
        let total = self.remaining_mass();
        if total <= 0.0 {
            return Err(Error::Exhausted);
        }
        let target = self.rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (a, (s, w)) in self.strata.iter().zip(&self.weights).enumerate() {
            let m = s.remaining() as f64 * w;
            if m <= 0.0 {
                continue;
            }
            chosen = Some(a);
            acc += m;
            if target < acc {
                break;
            }
        }
        let a = chosen.ok_or(Error::Exhausted)?;
        let n = self.n;
        let c = self.strata[a]
            .draw(&mut self.rng, &self.players, || {
                enumerate_size(n, a).expect("size within range").collect()
            })
            .ok_or(Error::Exhausted)?;
        Ok(c)
    }

    pub fn into_rng(self) -> R {
        self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pc(n: usize) -> PlayerCount {
        PlayerCount::new(n).unwrap()
    }

    #[test]
    fn distribution_n3_is_uniform_over_proper() {
        let d = initial_distribution(pc(3)).unwrap();
        assert_eq!(d[0], 0.0);
        assert_eq!(d[3], 0.0);
        assert!((d[1] - 0.5).abs() < 1e-15 && (d[2] - 0.5).abs() < 1e-15);
        for a in 1..=2 {
            assert!((coalition_probability(pc(3), a).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn distribution_n4_halves_middle_stratum() {
        let d = initial_distribution(pc(4)).unwrap();
        // masses proportional to 4, 3, 4
        assert!((d[1] - 4.0 / 11.0).abs() < 1e-15);
        assert!((d[2] - 3.0 / 11.0).abs() < 1e-15);
        let p1 = coalition_probability(pc(4), 1).unwrap();
        let p2 = coalition_probability(pc(4), 2).unwrap();
        assert!((p2 / p1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn distribution_sums_to_one() {
        for n in 2..=24 {
            let s: f64 = initial_distribution(pc(n)).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(initial_distribution(pc(1)).is_err());
    }

    #[test]
    fn exhausts_after_all_proper_coalitions() {
        let mut s = CoalitionSampler::new(pc(3), ChaCha8Rng::seed_from_u64(1));
        let mut seen: Vec<u64> = (0..6).map(|_| s.sample().unwrap().bits()).collect();
        seen.sort_unstable();
        assert_eq!(seen, [1, 2, 3, 4, 5, 6]);
        assert_eq!(s.sample(), Err(Error::Exhausted));
    }

    #[test]
    fn never_repeats_or_returns_anchors() {
        let n = pc(8);
        let mut s = CoalitionSampler::new(n, ChaCha8Rng::seed_from_u64(9));
        let mut seen = BTreeSet::new();
        for _ in 0..254 {
            let c = s.sample().unwrap();
            assert!(!c.is_empty() && c.size() < 8);
            assert!(seen.insert(c.bits()));
        }
        assert!(s.sample().is_err());
    }

    #[test]
    fn seeded_sequences_repeat() {
        let draw = |seed| {
            let mut s = CoalitionSampler::new(pc(10), ChaCha8Rng::seed_from_u64(seed));
            (0..100).map(|_| s.sample().unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }
}
