//! Coalitions as bit patterns and the combinatorial helpers built on them.
//!
//! Player `i` (1-indexed, as printed everywhere outside this crate) lives in
//! bit `i - 1`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Default upper bound on the number of players.
pub const DEFAULT_PLAYER_CAP: usize = 24;

/// Hard upper bound, even with the cap overridden.
pub const MAX_PLAYERS: usize = 63;

/// Largest `a` accepted by [`binomial`].
pub const MAX_BINOMIAL_ARG: u64 = 64;

/// Number of players of a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerCount(usize);

impl PlayerCount {
    /// `1 <= n <= DEFAULT_PLAYER_CAP`.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_cap(n, DEFAULT_PLAYER_CAP)
    }

    /// Like [`PlayerCount::new`] but with an explicit cap, itself clamped to
    /// [`MAX_PLAYERS`].
    pub fn with_cap(n: usize, cap: usize) -> Result<Self> {
        let cap = cap.min(MAX_PLAYERS);
        if n == 0 || n > cap {
            return Err(Error::InvalidPlayerCount { n, cap });
        }
        Ok(Self(n))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// `2^n`.
    #[inline]
    pub fn coalition_count(self) -> u64 {
        1u64 << self.0
    }
}

impl fmt::Display for PlayerCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A subset of players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Coalition(u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    #[inline]
    pub const fn from_bits(bits: u64) -> Self {
        Coalition(bits)
    }

    /// Checked constructor: rejects bits at positions `>= n`.
    pub fn from_bits_checked(bits: u64, n: PlayerCount) -> Result<Self> {
        let c = Coalition(bits);
        if !c.fits(n) {
            return Err(Error::CoalitionOutOfRange { bits, n: n.get() });
        }
        Ok(c)
    }

    /// Builds a coalition from 1-indexed player labels.
    pub fn from_players(players: &[usize], n: PlayerCount) -> Result<Self> {
        let mut bits = 0u64;
        for &p in players {
            if p == 0 || p > n.get() {
                return Err(Error::PlayerOutOfRange {
                    player: p,
                    n: n.get(),
                });
            }
            bits |= 1 << (p - 1);
        }
        Ok(Coalition(bits))
    }

    #[inline]
    pub const fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn size(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn fits(self, n: PlayerCount) -> bool {
        self.0 >> n.get() == 0
    }

    /// Membership test for the 0-indexed player `i`.
    #[inline]
    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    #[inline]
    pub fn with(self, i: usize) -> Self {
        Coalition(self.0 | 1 << i)
    }

    #[inline]
    pub fn without(self, i: usize) -> Self {
        Coalition(self.0 & !(1 << i))
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        Coalition(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        Coalition(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: Self) -> Self {
        Coalition(self.0 & !other.0)
    }

    #[inline]
    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// 0-indexed members in ascending order.
    pub fn members(self) -> Members {
        Members(self.0)
    }

    /// 1-indexed player labels.
    pub fn players(self) -> Vec<usize> {
        self.members().map(|i| i + 1).collect()
    }

    /// `n`-character `'0'`/`'1'` string, character `j` is player `j + 1`.
    pub fn to_bitstring(self, n: PlayerCount) -> String {
        (0..n.get())
            .map(|i| if self.contains(i) { '1' } else { '0' })
            .collect()
    }

    /// Inverse of [`Coalition::to_bitstring`]; the player count is the string
    /// length.
    pub fn parse_bitstring(s: &str) -> Result<(Self, usize)> {
        let n = s.len();
        if n == 0 || n > MAX_PLAYERS {
            return Err(Error::BadBitstring(s.into()));
        }
        let mut bits = 0u64;
        for (j, ch) in s.bytes().enumerate() {
            match ch {
                b'0' => {}
                b'1' => bits |= 1 << j,
                _ => return Err(Error::BadBitstring(s.into())),
            }
        }
        Ok((Coalition(bits), n))
    }

    /// Iterates all subsets of `self`, starting from the empty set.
    pub fn subsets(self) -> Subsets {
        Subsets {
            mask: self.0,
            next: Some(0),
        }
    }
}

/// Iterator over the 0-indexed members of a coalition.
#[derive(Debug, Clone)]
pub struct Members(u64);

impl Iterator for Members {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }
}

/// Subsets of a fixed mask, in ascending numeric order.
#[derive(Debug, Clone)]
pub struct Subsets {
    mask: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        let cur = self.next?;
        self.next = if cur == self.mask {
            None
        } else {
            Some((cur.wrapping_sub(self.mask)) & self.mask)
        };
        Some(Coalition(cur))
    }
}

/// The coalition of all `n` players.
#[inline]
pub fn grand_coalition(n: PlayerCount) -> Coalition {
    Coalition((1u64 << n.get()) - 1)
}

/// All `2^n` coalitions in ascending bit-pattern order.
pub fn enumerate_all(n: PlayerCount) -> impl Iterator<Item = Coalition> + Clone {
    (0..n.coalition_count()).map(Coalition)
}

/// All coalitions of size `s`, ordered lexicographically by their sorted
/// member tuples (`{1,2}, {1,3}, ..., {2,3}, ...`).
pub fn enumerate_size(n: PlayerCount, s: usize) -> Result<SizeEnumerator> {
    if s > n.get() {
        return Err(Error::SizeOutOfRange {
            size: s,
            n: n.get(),
        });
    }
    Ok(SizeEnumerator {
        n: n.get(),
        idx: (0..s).collect(),
        done: false,
    })
}

/// Lexicographic `s`-combinations of `0..n`.
#[derive(Debug, Clone)]
pub struct SizeEnumerator {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Iterator for SizeEnumerator {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        if self.done {
            return None;
        }
        let out = Coalition(self.idx.iter().fold(0u64, |acc, &i| acc | 1 << i));
        let s = self.idx.len();
        // advance to the next combination
        let mut j = s;
        loop {
            if j == 0 {
                self.done = true;
                break;
            }
            j -= 1;
            if self.idx[j] < self.n - s + j {
                self.idx[j] += 1;
                for t in j + 1..s {
                    self.idx[t] = self.idx[t - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Exact binomial coefficient `C(a, b)`; zero when `b < 0` or `b > a`.
pub fn binomial(a: u64, b: i64) -> Result<u128> {
    if a > MAX_BINOMIAL_ARG {
        return Err(Error::BinomialTooLarge(a));
    }
    if b < 0 || b as u64 > a {
        return Ok(0);
    }
    let b = (b as u64).min(a - b as u64);
    let mut acc: u128 = 1;
    for i in 0..b {
        // acc * (a - i) is divisible by (i + 1)
        acc = acc * (a - i) as u128 / (i + 1) as u128;
    }
    Ok(acc)
}

/// [`binomial`] as `f64`, for arguments known to be in range.
pub(crate) fn binomial_f64(a: usize, b: usize) -> f64 {
    binomial(a as u64, b as i64).expect("binomial argument within cap") as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn pc(n: usize) -> PlayerCount {
        PlayerCount::new(n).unwrap()
    }

    #[test]
    fn grand_coalition_sets_low_bits() {
        assert_eq!(grand_coalition(pc(3)).bits(), 0b111);
        assert_eq!(grand_coalition(pc(1)).bits(), 0b1);
        assert_eq!(grand_coalition(pc(10)).bits(), 0b11_1111_1111);
        assert_eq!(grand_coalition(pc(10)).size(), 10);
    }

    #[test]
    fn enumerate_all_small() {
        let all: Vec<_> = enumerate_all(pc(2)).map(|c| c.players()).collect();
        assert_eq!(all, vec![vec![], vec![1], vec![2], vec![1, 2]]);
        assert_eq!(enumerate_all(pc(4)).count(), 16);
        assert!(PlayerCount::new(0).is_err());
    }

    #[test]
    fn player_cap() {
        assert!(PlayerCount::new(24).is_ok());
        assert!(PlayerCount::new(25).is_err());
        assert!(PlayerCount::with_cap(30, 40).is_ok());
        assert!(PlayerCount::with_cap(64, 100).is_err());
    }

    #[test]
    fn enumerate_size_examples() {
        let pairs: Vec<_> = enumerate_size(pc(3), 2)
            .unwrap()
            .map(|c| c.players())
            .collect();
        assert_eq!(pairs, vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        let empty: Vec<_> = enumerate_size(pc(5), 0).unwrap().collect();
        assert_eq!(empty, vec![Coalition::EMPTY]);
        assert_eq!(enumerate_size(pc(6), 3).unwrap().count(), 20);
        assert_eq!(enumerate_size(pc(3), 3).unwrap().count(), 1);
        assert!(enumerate_size(pc(3), 4).is_err());
    }

    #[test]
    fn enumerate_size_is_lexicographic() {
        let four: Vec<_> = enumerate_size(pc(4), 2)
            .unwrap()
            .map(|c| c.players())
            .collect();
        assert_eq!(
            four,
            vec![
                vec![1, 2],
                vec![1, 3],
                vec![1, 4],
                vec![2, 3],
                vec![2, 4],
                vec![3, 4]
            ]
        );
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(8, 4).unwrap(), 70);
        assert_eq!(binomial(9, 0).unwrap(), 1);
        assert_eq!(binomial(5, 7).unwrap(), 0);
        assert_eq!(binomial(5, -1).unwrap(), 0);
        assert_eq!(binomial(64, 32).unwrap(), 1_832_624_140_942_590_534);
        assert!(binomial(65, 2).is_err());
    }

    #[test]
    fn pascal_rule_exhaustive() {
        for a in 1..=30u64 {
            for b in 1..a as i64 {
                assert_eq!(
                    binomial(a, b).unwrap(),
                    binomial(a - 1, b - 1).unwrap() + binomial(a - 1, b).unwrap()
                );
            }
        }
    }

    #[test]
    fn size_strata_partition_power_set() {
        for n in 1..=12 {
            let n = pc(n);
            let mut by_size: Vec<u64> = (0..=n.get())
                .flat_map(|s| enumerate_size(n, s).unwrap())
                .map(|c| c.bits())
                .collect();
            by_size.sort_unstable();
            let all: Vec<u64> = enumerate_all(n).map(|c| c.bits()).collect();
            assert_eq!(by_size, all);
        }
    }

    #[test]
    fn bitstring_text_form() {
        let n = pc(3);
        let c = Coalition::from_players(&[1, 3], n).unwrap();
        assert_eq!(c.to_bitstring(n), "101");
        assert_eq!(Coalition::parse_bitstring("101").unwrap(), (c, 3));
        assert!(Coalition::parse_bitstring("10x").is_err());
        assert!(Coalition::parse_bitstring("").is_err());
    }

    #[test]
    fn subsets_iterates_every_subset_once() {
        let c = Coalition::from_bits(0b1011);
        let subs: Vec<u64> = c.subsets().map(|s| s.bits()).collect();
        assert_eq!(
            subs,
            vec![0b0000, 0b0001, 0b0010, 0b0011, 0b1000, 0b1001, 0b1010, 0b1011]
        );
        assert_eq!(Coalition::EMPTY.subsets().count(), 1);
    }

    proptest! {
        #[test]
        fn enumerated_sizes_bounded(n in 1usize..=10, s in 0usize..=10) {
            let n = pc(n);
            if s <= n.get() {
                for c in enumerate_size(n, s).unwrap() {
                    prop_assert_eq!(c.size(), s);
                    prop_assert!(c.fits(n));
                }
            }
        }

        #[test]
        fn bitstring_roundtrip(bits in 0u64..(1 << 12)) {
            let n = pc(12);
            let c = Coalition::from_bits(bits);
            let (back, len) = Coalition::parse_bitstring(&c.to_bitstring(n)).unwrap();
            prop_assert_eq!(back, c);
            prop_assert_eq!(len, 12);
        }
    }
}
