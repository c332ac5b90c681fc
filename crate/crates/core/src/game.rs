//! Value functions: the [`Game`] trait, closed-form fixture games, dense value
//! tables, normalization and per-run evaluation accounting.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::coalition::{enumerate_all, grand_coalition, Coalition, PlayerCount};
use crate::error::{Error, Result};

/// A cooperative game `(N, v)`.
///
/// Implementations must be deterministic: evaluating the same coalition twice
/// yields the same bits.
pub trait Game {
    fn players(&self) -> PlayerCount;

    fn value(&self, coalition: Coalition) -> Result<f64>;
}

impl<G: Game + ?Sized> Game for &G {
    fn players(&self) -> PlayerCount {
        (**self).players()
    }
    fn value(&self, coalition: Coalition) -> Result<f64> {
        (**self).value(coalition)
    }
}

impl<G: Game + ?Sized> Game for Box<G> {
    fn players(&self) -> PlayerCount {
        (**self).players()
    }
    fn value(&self, coalition: Coalition) -> Result<f64> {
        (**self).value(coalition)
    }
}

impl<G: Game + ?Sized> Game for Arc<G> {
    fn players(&self) -> PlayerCount {
        (**self).players()
    }
    fn value(&self, coalition: Coalition) -> Result<f64> {
        (**self).value(coalition)
    }
}

/// Per-run memo that counts distinct coalitions evaluated.
///
/// Every estimator wraps its game in one of these; the count it reports as
/// `evaluations` is [`Counted::evaluations`].
pub struct Counted<'g, G: ?Sized> {
    game: &'g G,
    memo: RefCell<BTreeMap<u64, f64>>,
}

impl<'g, G: Game + ?Sized> Counted<'g, G> {
    pub fn new(game: &'g G) -> Self {
        Self {
            game,
            memo: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn evaluations(&self) -> usize {
        self.memo.borrow().len()
    }

    pub fn is_cached(&self, c: Coalition) -> bool {
        self.memo.borrow().contains_key(&c.bits())
    }

    /// Number of coalitions in `cs` not yet evaluated (duplicates counted once).
    pub fn missing(&self, cs: &[Coalition]) -> usize {
        let memo = self.memo.borrow();
        let mut fresh: Vec<u64> = cs
            .iter()
            .map(|c| c.bits())
            .filter(|b| !memo.contains_key(b))
            .collect();
        fresh.sort_unstable();
        fresh.dedup();
        fresh.len()
    }
}

impl<G: Game + ?Sized> Game for Counted<'_, G> {
    fn players(&self) -> PlayerCount {
        self.game.players()
    }

    fn value(&self, c: Coalition) -> Result<f64> {
        if let Some(&v) = self.memo.borrow().get(&c.bits()) {
            return Ok(v);
        }
        let v = self.game.value(c)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                bits: c.bits(),
                value: v,
            });
        }
        self.memo.borrow_mut().insert(c.bits(), v);
        Ok(v)
    }
}

fn check_fits(c: Coalition, n: PlayerCount) -> Result<()> {
    if c.fits(n) {
        Ok(())
    } else {
        Err(Error::CoalitionOutOfRange {
            bits: c.bits(),
            n: n.get(),
        })
    }
}

/// `v(A) = sum of c_i over i in A`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveGame {
    n: PlayerCount,
    weights: Vec<f64>,
}

impl AdditiveGame {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let n = PlayerCount::new(weights.len())?;
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidGame(format!("non-finite weight {w}")));
        }
        Ok(Self { n, weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Game for AdditiveGame {
    fn players(&self) -> PlayerCount {
        self.n
    }

    fn value(&self, c: Coalition) -> Result<f64> {
        check_fits(c, self.n)?;
        // fold from +0 so that v(∅) is not -0
        Ok(c.members().fold(0.0, |acc, i| acc + self.weights[i]))
    }
}

/// `v(A) = 1` if `S ⊆ A`, else 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnanimityGame {
    n: PlayerCount,
    carrier: Coalition,
}

impl UnanimityGame {
    pub fn new(n: PlayerCount, carrier: Coalition) -> Result<Self> {
        if carrier.is_empty() {
            return Err(Error::InvalidGame(
                "unanimity carrier must be nonempty".into(),
            ));
        }
        check_fits(carrier, n)?;
        Ok(Self { n, carrier })
    }

    pub fn carrier(&self) -> Coalition {
        self.carrier
    }
}

impl Game for UnanimityGame {
    fn players(&self) -> PlayerCount {
        self.n
    }

    fn value(&self, c: Coalition) -> Result<f64> {
        check_fits(c, self.n)?;
        Ok(if self.carrier.is_subset_of(c) {
            1.0
        } else {
            0.0
        })
    }
}

/// `v(A) = min(|A ∩ L|, |A \ L|)`: matched pairs of left and right gloves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GloveGame {
    n: PlayerCount,
    left: Coalition,
}

impl GloveGame {
    pub fn new(n: PlayerCount, left: Coalition) -> Result<Self> {
        check_fits(left, n)?;
        if left.is_empty() || left == grand_coalition(n) {
            return Err(Error::InvalidGame(
                "glove game needs a nonempty proper left set".into(),
            ));
        }
        Ok(Self { n, left })
    }
}

impl Game for GloveGame {
    fn players(&self) -> PlayerCount {
        self.n
    }

    fn value(&self, c: Coalition) -> Result<f64> {
        check_fits(c, self.n)?;
        let l = c.intersection(self.left).size();
        let r = c.difference(self.left).size();
        Ok(l.min(r) as f64)
    }
}

/// A game given by an arbitrary closure.
pub struct FnGame<F> {
    n: PlayerCount,
    f: F,
}

impl<F: Fn(Coalition) -> f64> FnGame<F> {
    pub fn new(n: PlayerCount, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(Coalition) -> f64> Game for FnGame<F> {
    fn players(&self) -> PlayerCount {
        self.n
    }

    fn value(&self, c: Coalition) -> Result<f64> {
        check_fits(c, self.n)?;
        Ok((self.f)(c))
    }
}

/// Dense table of all `2^n` coalition values, indexed by bit pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    n: PlayerCount,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn new(n: PlayerCount, values: Vec<f64>) -> Result<Self> {
        let expected = n.coalition_count() as usize;
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some((bits, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                bits: bits as u64,
                value,
            });
        }
        Ok(Self { n, values })
    }

    /// Evaluates every coalition of `game` once, in ascending order.
    pub fn from_game<G: Game + ?Sized>(game: &G) -> Result<Self> {
        let n = game.players();
        let values = enumerate_all(n)
            .map(|c| game.value(c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, values)
    }

    pub fn from_fn(n: PlayerCount, f: impl FnMut(Coalition) -> f64) -> Result<Self> {
        Self::new(n, enumerate_all(n).map(f).collect())
    }

    #[inline]
    /// Table with i.i.d. values uniform on `[-1, 1]`.
    pub fn random<R: rand::Rng + ?Sized>(n: PlayerCount, rng: &mut R) -> Result<Self> {
        Self::from_fn(n, |_| rng.random_range(-1.0..=1.0))
    }

    pub fn get(&self, c: Coalition) -> f64 {
        self.values[c.bits() as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> PlayerCount {
        self.n
    }
}

impl Game for ValueTable {
    fn players(&self) -> PlayerCount {
        self.n
    }

    fn value(&self, c: Coalition) -> Result<f64> {
        check_fits(c, self.n)?;
        Ok(self.get(c))
    }
}

/// `v'(A) = v(A) - v(∅)`.
#[derive(Debug, Clone)]
pub struct Normalized<G> {
    inner: G,
    empty_value: f64,
}

impl<G: Game> Normalized<G> {
    pub fn new(inner: G) -> Result<Self> {
        let empty_value = inner.value(Coalition::EMPTY)?;
        Ok(Self { inner, empty_value })
    }

    /// The subtracted offset `v(∅)`.
    pub fn offset(&self) -> f64 {
        self.empty_value
    }

    pub fn into_inner(self) -> G {
        self.inner
    }
}

impl<G: Game> Game for Normalized<G> {
    fn players(&self) -> PlayerCount {
        self.inner.players()
    }

    fn value(&self, c: Coalition) -> Result<f64> {
        Ok(self.inner.value(c)? - self.empty_value)
    }
}

/// Shorthand for [`Normalized::new`].
pub fn normalize<G: Game>(game: G) -> Result<Normalized<G>> {
    Normalized::new(game)
}
