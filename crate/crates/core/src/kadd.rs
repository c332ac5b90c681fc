//! The linear map between Shapley interaction indices and coalition payoffs.
//!
//! A payoff is recovered from interactions as
//! `v(A) = sum_B gamma[|B|][|A ∩ B|] * I(B)`, where
//! `gamma[s][r] = sum_{l=0..r} C(r, l) * eta[s - l]` and `eta` are the
//! Bernoulli numbers with `eta[1] = -1/2`. Truncating the sum to `|B| <= k`
//! gives the k-additive surrogate `v_k`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::coalition::{binomial, binomial_f64, enumerate_size, Coalition, PlayerCount};
use crate::error::{Error, Result};
use crate::game::{Game, ValueTable};

/// Largest Bernoulli index computed.
pub const MAX_BERNOULLI: usize = 64;

/// Exact `eta_0..=eta_max` by the recurrence
/// `eta_r = -sum_{l<r} eta_l / (r - l + 1) * C(r, l)`.
pub fn bernoulli_table(max: usize) -> Result<Vec<BigRational>> {
    if max > MAX_BERNOULLI {
        return Err(Error::BernoulliTooLarge(max));
    }
    let mut eta: Vec<BigRational> = Vec::with_capacity(max + 1);
    eta.push(BigRational::from_integer(BigInt::from(1)));
    for r in 1..=max {
        let mut acc = BigRational::zero();
        for (l, e) in eta.iter().enumerate() {
            let c = BigInt::from(binomial(r as u64, l as i64)?);
            acc += e * BigRational::new(c, BigInt::from(r - l + 1));
        }
        eta.push(-acc);
    }
    Ok(eta)
}

/// Exact `eta_r`.
pub fn bernoulli_exact(r: usize) -> Result<BigRational> {
    Ok(bernoulli_table(r)?.swap_remove(r))
}

/// `eta_r` as a double.
pub fn bernoulli_eta(r: usize) -> Result<f64> {
    Ok(to_f64(&bernoulli_exact(r)?))
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().expect("bounded rationals convert to f64")
}

fn gamma_from_table(eta: &[BigRational], r: usize, s: usize) -> BigRational {
    (0..=r).fold(BigRational::zero(), |acc, l| {
        let c = binomial(r as u64, l as i64).expect("within binomial cap");
        acc + &eta[s - l] * BigRational::from_integer(BigInt::from(c))
    })
}

/// Exact `gamma[s][r]` with `r = |A ∩ B|`, `s = |B|`.
pub fn gamma_exact(r: usize, s: usize) -> Result<BigRational> {
    if r > s {
        return Err(Error::GammaArgs { r, s });
    }
    let eta = bernoulli_table(s)?;
    Ok(gamma_from_table(&eta, r, s))
}

pub fn gamma_coeff(r: usize, s: usize) -> Result<f64> {
    Ok(to_f64(&gamma_exact(r, s)?))
}

/// Dense `(n+1) x (n+1)` table of `gamma[s][r]` as doubles (zero for `r > s`).
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    dim: usize,
    values: Vec<f64>,
}

impl GammaTable {
    pub fn new(n: usize) -> Result<Self> {
        let eta = bernoulli_table(n)?;
        let dim = n + 1;
        let mut values = alloc::vec![0.0; dim * dim];
        for s in 0..=n {
            for r in 0..=s {
                values[s * dim + r] = to_f64(&gamma_from_table(&eta, r, s));
            }
        }
        Ok(Self { dim, values })
    }

    /// `gamma[s][r]`.
    #[inline]
    pub fn get(&self, s: usize, r: usize) -> f64 {
        self.values[s * self.dim + r]
    }
}

/// All `B ⊆ N` with `|B| <= k`, ordered by size and then lexicographically by
/// member tuple: `∅, {1}, ..., {n}, {1,2}, {1,3}, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionBasis {
    n: PlayerCount,
    k: usize,
    subsets: Vec<Coalition>,
    offsets: Vec<usize>,
    gamma: GammaTable,
}

impl InteractionBasis {
    pub fn new(n: PlayerCount, k: usize) -> Result<Self> {
        if k == 0 || k > n.get() {
            return Err(Error::InvalidDegree { k, n: n.get() });
        }
        let mut subsets = Vec::new();
        let mut offsets = Vec::with_capacity(k + 2);
        for s in 0..=k {
            offsets.push(subsets.len());
            subsets.extend(enumerate_size(n, s)?);
        }
        offsets.push(subsets.len());
        Ok(Self {
            n,
            k,
            subsets,
            offsets,
            gamma: GammaTable::new(n.get())?,
        })
    }

    pub fn n(&self) -> PlayerCount {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `D = sum_{j=0..k} C(n, j)`.
    pub fn dimension(&self) -> usize {
        self.subsets.len()
    }

    pub fn subsets(&self) -> &[Coalition] {
        &self.subsets
    }

    pub fn gamma(&self) -> &GammaTable {
        &self.gamma
    }

    /// Index range of the subsets of size `s`.
    pub fn order_range(&self, s: usize) -> core::ops::Range<usize> {
        self.offsets[s]..self.offsets[s + 1]
    }

    /// Index of `b` in the basis, if `|b| <= k`.
    pub fn position(&self, b: Coalition) -> Option<usize> {
        let s = b.size();
        if s > self.k || !b.fits(self.n) {
            return None;
        }
        let range = self.order_range(s);
        // within a size block subsets are sorted by member tuple, which is the
        // reversed-bit order; compare tuples directly
        let key = b.players();
        self.subsets[range.clone()]
            .binary_search_by(|c| c.players().cmp(&key))
            .ok()
            .map(|i| range.start + i)
    }

    /// Writes the row `gamma[|B|][|A ∩ B|]` for coalition `a` into `out`.
    pub fn design_row(&self, a: Coalition, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dimension());
        for (o, b) in out.iter_mut().zip(&self.subsets) {
            *o = self.gamma.get(b.size(), a.intersection(*b).size());
        }
    }

    pub fn design_row_vec(&self, a: Coalition) -> Vec<f64> {
        let mut row = alloc::vec![0.0; self.dimension()];
        self.design_row(a, &mut row);
        row
    }
}

/// Coefficients of the efficiency constraint:
/// `gamma[|B|][|B|] - gamma[|B|][0]` for each basis element.
pub fn efficiency_row(basis: &InteractionBasis) -> Vec<f64> {
    basis
        .subsets()
        .iter()
        .map(|b| {
            let s = b.size();
            basis.gamma().get(s, s) - basis.gamma().get(s, 0)
        })
        .collect()
}

/// Number of parameters of a k-additive game, `I(∅)` included.
pub fn basis_dimension(n: usize, k: usize) -> usize {
    (0..=k.min(n)).map(|j| binomial_f64(n, j) as usize).sum()
}

/// Interaction coefficients over a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionVector {
    basis: Arc<InteractionBasis>,
    coeffs: Vec<f64>,
}

impl InteractionVector {
    pub fn new(basis: impl Into<Arc<InteractionBasis>>, coeffs: Vec<f64>) -> Result<Self> {
        let basis = basis.into();
        if coeffs.len() != basis.dimension() {
            return Err(Error::LengthMismatch {
                expected: basis.dimension(),
                got: coeffs.len(),
            });
        }
        if let Some((i, &value)) = coeffs.iter().enumerate().find(|(_, c)| !c.is_finite()) {
            return Err(Error::NonFinite {
                bits: basis.subsets()[i].bits(),
                value,
            });
        }
        Ok(Self { basis, coeffs })
    }

    pub fn basis(&self) -> &InteractionBasis {
        &self.basis
    }

    pub fn shared_basis(&self) -> Arc<InteractionBasis> {
        Arc::clone(&self.basis)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, b: Coalition) -> Option<f64> {
        self.basis.position(b).map(|i| self.coeffs[i])
    }

    /// Singleton block `I_1..I_n`, the Shapley values of the k-additive game.
    pub fn shapley(&self) -> &[f64] {
        &self.coeffs[self.basis.order_range(1)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coalition, f64)> + '_ {
        self.basis
            .subsets()
            .iter()
            .copied()
            .zip(self.coeffs.iter().copied())
    }
}

/// `v_k(A) = sum_{|B| <= k} gamma[|B|][|A ∩ B|] * I(B)`.
pub fn kadd_eval(iv: &InteractionVector, a: Coalition) -> f64 {
    let g = iv.basis.gamma();
    iv.iter()
        .map(|(b, c)| g.get(b.size(), a.intersection(b).size()) * c)
        .sum()
}

/// The k-additive game defined by an interaction vector.
#[derive(Debug, Clone)]
pub struct KAdditiveGame(pub InteractionVector);

impl Game for KAdditiveGame {
    fn players(&self) -> PlayerCount {
        self.0.basis().n()
    }

    fn value(&self, c: Coalition) -> Result<f64> {
        if !c.fits(self.players()) {
            return Err(Error::CoalitionOutOfRange {
                bits: c.bits(),
                n: self.players().get(),
            });
        }
        Ok(kadd_eval(&self.0, c))
    }
}

/// Random game whose interactions of order `1..=k` are uniform on `[-1, 1]`
/// and vanish everywhere else, `I(∅)` included.
pub fn random_kadditive<R: rand::Rng + ?Sized>(
    n: PlayerCount,
    k: usize,
    rng: &mut R,
) -> Result<ValueTable> {
    let basis = InteractionBasis::new(n, k)?;
    let coeffs = basis
        .subsets()
        .iter()
        .map(|b| {
            if b.is_empty() {
                0.0
            } else {
                rng.random_range(-1.0..=1.0)
            }
        })
        .collect();
    ValueTable::from_game(&KAdditiveGame(InteractionVector::new(basis, coeffs)?))
}

/// Payoffs from the full set of `2^n` interactions, indexed by bit pattern.
pub fn reconstruct_values(interactions: &[f64], n: PlayerCount) -> Result<ValueTable> {
    let total = n.coalition_count() as usize;
    if interactions.len() != total {
        return Err(Error::IncompleteTable(alloc::format!(
            "expected {total} interaction indices, got {}",
            interactions.len()
        )));
    }
    let gamma = GammaTable::new(n.get())?;
    ValueTable::from_fn(n, |a| {
        interactions
            .iter()
            .enumerate()
            .map(|(b, &i)| {
                let b = Coalition::from_bits(b as u64);
                gamma.get(b.size(), a.intersection(b).size()) * i
            })
            .sum()
    })
}

/// [`reconstruct_values`] from a sparse map; every subset must be present.
pub fn reconstruct_from_map(map: &BTreeMap<Coalition, f64>, n: PlayerCount) -> Result<ValueTable> {
    let total = n.coalition_count() as usize;
    let mut dense = alloc::vec![0.0; total];
    let mut seen = 0;
    for (&b, &v) in map {
        if !b.fits(n) {
            return Err(Error::CoalitionOutOfRange {
                bits: b.bits(),
                n: n.get(),
            });
        }
        dense[b.bits() as usize] = v;
        seen += 1;
    }
    if seen != total {
        return Err(Error::IncompleteTable(alloc::format!(
            "{} of {total} subsets missing",
            total - seen
        )));
    }
    reconstruct_values(&dense, n)
}
