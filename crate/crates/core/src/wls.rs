//! Weighted least-squares fit of a k-additive surrogate to sampled coalition
//! values, subject to efficiency.
//!
//! Two ways of honouring the constraint are offered:
//!
//! * [`ConstraintMode::Penalty`] keeps the rows for `∅` and `N` in the
//!   objective with a very large weight, so that `v_k(∅) ≈ v(∅)` and
//!   `v_k(N) ≈ v(N)`.
//! * [`ConstraintMode::Eliminate`] drops those rows and imposes
//!   `v_k(∅) = v(∅)` and `sum_i I_i = v(N) - v(∅)` exactly by eliminating two
//!   coefficients before forming the normal equations.
//!
//! Normal equations are equilibrated (unit diagonal) and factored by
//! Cholesky. A pivot below `rank_tolerance` sends the solve to a symmetric
//! eigendecomposition, which returns the minimum-norm minimizer and marks the
//! result as underdetermined.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::coalition::{binomial_f64, grand_coalition, Coalition, PlayerCount};
use crate::error::{Error, Result};
use crate::kadd::{efficiency_row, InteractionBasis, InteractionVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintMode {
    #[default]
    Penalty,
    Eliminate,
}

impl core::str::FromStr for ConstraintMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "penalty" => Ok(Self::Penalty),
            "eliminate" => Ok(Self::Eliminate),
            other => Err(Error::Solver(format!("unknown constraint mode {other:?}"))),
        }
    }
}

impl core::fmt::Display for ConstraintMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Self::Penalty => "penalty",
            Self::Eliminate => "eliminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub constraint_mode: ConstraintMode,
    /// Weight given to `∅` and `N` in penalty mode.
    pub penalty_weight: f64,
    /// Relative pivot/eigenvalue threshold for rank decisions.
    pub rank_tolerance: f64,
    /// Ridge term added to the normal equations.
    pub regularization: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            constraint_mode: ConstraintMode::Penalty,
            penalty_weight: 1e6,
            rank_tolerance: 1e-10,
            regularization: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn eliminate() -> Self {
        Self {
            constraint_mode: ConstraintMode::Eliminate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.penalty_weight > 0.0 && self.penalty_weight.is_finite()) {
            return Err(Error::Solver(format!(
                "penalty weight must be positive, got {}",
                self.penalty_weight
            )));
        }
        if !(self.rank_tolerance >= 0.0) || !(self.regularization >= 0.0) {
            return Err(Error::Solver("tolerances must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Distinct evaluated coalitions with their values.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    n: PlayerCount,
    coalitions: Vec<Coalition>,
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(n: PlayerCount, coalitions: Vec<Coalition>, values: Vec<f64>) -> Result<Self> {
        if coalitions.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: coalitions.len(),
                got: values.len(),
            });
        }
        let mut sorted: Vec<u64> = coalitions.iter().map(|c| c.bits()).collect();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Solver(format!(
                "duplicate coalition {:#b} in sample",
                w[0]
            )));
        }
        for (c, &v) in coalitions.iter().zip(&values) {
            if !c.fits(n) {
                return Err(Error::CoalitionOutOfRange {
                    bits: c.bits(),
                    n: n.get(),
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    bits: c.bits(),
                    value: v,
                });
            }
        }
        Ok(Self {
            n,
            coalitions,
            values,
        })
    }

    pub fn n(&self) -> PlayerCount {
        self.n
    }

    pub fn len(&self) -> usize {
        self.coalitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coalitions.is_empty()
    }

    pub fn coalitions(&self) -> &[Coalition] {
        &self.coalitions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_of(&self, c: Coalition) -> Option<f64> {
        self.coalitions
            .iter()
            .position(|&x| x == c)
            .map(|i| self.values[i])
    }

    pub fn contains_empty_and_grand(&self) -> bool {
        self.value_of(Coalition::EMPTY).is_some()
            && self.value_of(grand_coalition(self.n)).is_some()
    }
}

/// `w*(a) = 1 / C(n-2, a-1)` for `1 <= a <= n-1`.
pub fn shapley_kernel_weight(n: PlayerCount, a: usize) -> Result<f64> {
    let n = n.get();
    if a == 0 || a >= n {
        return Err(Error::SizeOutOfRange { size: a, n });
    }
    Ok(1.0 / binomial_f64(n - 2, a - 1))
}

/// Exact equality constraints `rows · I = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    pub rows: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WlsProblem {
    basis: Arc<InteractionBasis>,
    pub coalitions: Vec<Coalition>,
    /// `T x D`, entry `(A, B) = gamma[|B|][|A ∩ B|]`.
    pub design: DMatrix<f64>,
    pub weights: Vec<f64>,
    pub targets: Vec<f64>,
    pub constraints: Option<Constraints>,
}

impl WlsProblem {
    /// Assembles a problem from explicit parts.
    pub fn from_parts(
        basis: impl Into<Arc<InteractionBasis>>,
        design: DMatrix<f64>,
        weights: Vec<f64>,
        targets: Vec<f64>,
        constraints: Option<Constraints>,
    ) -> Result<Self> {
        let basis = basis.into();
        let (t, d) = design.shape();
        if d != basis.dimension() {
            return Err(Error::LengthMismatch {
                expected: basis.dimension(),
                got: d,
            });
        }
        if weights.len() != t || targets.len() != t {
            return Err(Error::LengthMismatch {
                expected: t,
                got: weights.len().min(targets.len()),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Solver("weights must be positive and finite".into()));
        }
        if let Some(c) = &constraints {
            if c.rows.ncols() != d || c.rows.nrows() != c.rhs.len() {
                return Err(Error::Solver("constraint shape mismatch".into()));
            }
        }
        Ok(Self {
            basis,
            coalitions: Vec::new(),
            design,
            weights,
            targets,
            constraints,
        })
    }

    pub fn basis(&self) -> &InteractionBasis {
        &self.basis
    }

    /// `targets - design · coeffs`.
    pub fn residuals(&self, coeffs: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(coeffs);
        let fitted = &self.design * x;
        self.targets
            .iter()
            .zip(fitted.iter())
            .map(|(t, f)| t - f)
            .collect()
    }
}

/// Builds the fitting problem for `samples` with Shapley kernel weights.
pub fn build_problem(
    samples: &SampleSet,
    basis: impl Into<Arc<InteractionBasis>>,
    opts: &SolverOptions,
) -> Result<WlsProblem> {
    let n = samples.n();
    build_problem_weighted(samples, basis, opts, |c| shapley_kernel_weight(n, c.size()))
}

/// Like [`build_problem`], with `weight_of` supplying the weight of every
/// proper coalition.
pub fn build_problem_weighted(
    samples: &SampleSet,
    basis: impl Into<Arc<InteractionBasis>>,
    opts: &SolverOptions,
    weight_of: impl Fn(Coalition) -> Result<f64>,
) -> Result<WlsProblem> {
    opts.validate()?;
    let basis = basis.into();
    let n = samples.n();
    if basis.n() != n {
        return Err(Error::LengthMismatch {
            expected: basis.n().get(),
            got: n.get(),
        });
    }
    let grand = grand_coalition(n);
    let d = basis.dimension();
    let mut coalitions = Vec::with_capacity(samples.len());
    let mut weights = Vec::with_capacity(samples.len());
    let mut targets = Vec::with_capacity(samples.len());
    let keep_anchors = opts.constraint_mode == ConstraintMode::Penalty;
    if !samples.contains_empty_and_grand() {
        return Err(Error::Solver("sample set must contain ∅ and N".into()));
    }
    if keep_anchors && samples.len() < 2 {
        return Err(Error::BudgetTooSmall {
            budget: samples.len(),
            min: 2,
        });
    }
    for (&c, &v) in samples.coalitions().iter().zip(samples.values()) {
        let w = if c.is_empty() || c == grand {
            if !keep_anchors {
                continue;
            }
            opts.penalty_weight
        } else {
            let w = weight_of(c)?;
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Solver(format!(
                    "weight {w} for coalition {:#b}",
                    c.bits()
                )));
            }
            w
        };
        coalitions.push(c);
        weights.push(w);
        targets.push(v);
    }
    let mut design = DMatrix::zeros(coalitions.len(), d);
    let mut row = alloc::vec![0.0; d];
    for (r, &c) in coalitions.iter().enumerate() {
        basis.design_row(c, &mut row);
        for (j, &x) in row.iter().enumerate() {
            design[(r, j)] = x;
        }
    }
    let constraints = if keep_anchors {
        None
    } else {
        let empty_value = samples.value_of(Coalition::EMPTY).expect("checked above");
        let grand_value = samples.value_of(grand).expect("checked above");
        let mut rows = DMatrix::zeros(2, d);
        let anchor = basis.design_row_vec(Coalition::EMPTY);
        let eff = efficiency_row(&basis);
        for j in 0..d {
            rows[(0, j)] = anchor[j];
            rows[(1, j)] = eff[j];
        }
        Some(Constraints {
            rows,
            rhs: DVector::from_column_slice(&[empty_value, grand_value - empty_value]),
        })
    };
    Ok(WlsProblem {
        basis,
        coalitions,
        design,
        weights,
        targets,
        constraints,
    })
}

/// Fitted interactions plus rank diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct WlsSolution {
    pub interactions: InteractionVector,
    /// Set when the normal equations were singular at the rank tolerance and
    /// the minimum-norm minimizer was returned.
    pub underdetermined: bool,
    /// Numerical rank of the (reduced) normal matrix.
    pub rank: usize,
}

/// Solves a [`WlsProblem`].
pub fn solve(problem: &WlsProblem, opts: &SolverOptions) -> Result<WlsSolution> {
    opts.validate()?;
    if problem.design.iter().any(|x| !x.is_finite())
        || problem.targets.iter().any(|x| !x.is_finite())
        || problem.weights.iter().any(|x| !x.is_finite())
    {
        return Err(Error::Solver("non-finite problem data".into()));
    }
    let d = problem.design.ncols();
    let (coeffs, underdetermined, rank) = match &problem.constraints {
        None => {
            let (x, deficient, rank) = weighted_lstsq(
                &problem.design,
                &problem.weights,
                &DVector::from_column_slice(&problem.targets),
                opts,
            )?;
            (x, deficient, rank)
        }
        Some(c) => {
            let elim = Elimination::new(&c.rows, &c.rhs, opts.rank_tolerance)?;
            let reduced = &problem.design * &elim.null_map;
            let shifted =
                DVector::from_column_slice(&problem.targets) - &problem.design * &elim.particular;
            let (y, deficient, rank) = if reduced.nrows() == 0 || reduced.ncols() == 0 {
                (DVector::zeros(reduced.ncols()), reduced.ncols() > 0, 0)
            } else {
                weighted_lstsq(&reduced, &problem.weights, &shifted, opts)?
            };
            (
                &elim.particular + &elim.null_map * y,
                deficient,
                rank + (d - elim.null_map.ncols()),
            )
        }
    };
    let interactions =
        InteractionVector::new(Arc::clone(&problem.basis), coeffs.iter().copied().collect())?;
    Ok(WlsSolution {
        interactions,
        underdetermined,
        rank,
    })
}

/// Smallest number of evaluated coalitions that can pin down every
/// coefficient: the basis dimension.
pub fn min_budget(basis: &InteractionBasis) -> usize {
    basis.dimension()
}

/// Parametrization `x = particular + null_map · y` of `{x : C x = d}`.
struct Elimination {
    particular: DVector<f64>,
    null_map: DMatrix<f64>,
}

impl Elimination {
    fn new(c: &DMatrix<f64>, rhs: &DVector<f64>, tol: f64) -> Result<Self> {
        let (m, d) = c.shape();
        let mut a = c.clone();
        let mut b = rhs.clone();
        let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(1.0);
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        for r in 0..m {
            // largest remaining entry in this row
            let (col, val) = (0..d)
                .filter(|j| pivots.iter().all(|&(_, pc)| pc != *j))
                .map(|j| (j, a[(r, j)]))
                .fold((usize::MAX, 0.0f64), |best, cur| {
                    if cur.1.abs() > best.1.abs() {
                        cur
                    } else {
                        best
                    }
                });
            if col == usize::MAX || val.abs() <= tol.max(1e-14) * scale {
                if b[r].abs() > 1e-9 * scale {
                    return Err(Error::Solver("inconsistent constraints".into()));
                }
                continue;
            }
            for j in 0..d {
                a[(r, j)] /= val;
            }
            b[r] /= val;
            for other in 0..m {
                if other != r {
                    let f = a[(other, col)];
                    if f != 0.0 {
                        for j in 0..d {
                            a[(other, j)] -= f * a[(r, j)];
                        }
                        b[other] -= f * b[r];
                    }
                }
            }
            pivots.push((r, col));
        }
        let free: Vec<usize> = (0..d)
            .filter(|j| pivots.iter().all(|&(_, pc)| pc != *j))
            .collect();
        let mut particular = DVector::zeros(d);
        let mut null_map = DMatrix::zeros(d, free.len());
        for &(r, col) in &pivots {
            particular[col] = b[r];
            for (k, &f) in free.iter().enumerate() {
                null_map[(col, k)] = -a[(r, f)];
            }
        }
        for (k, &f) in free.iter().enumerate() {
            null_map[(f, k)] = 1.0;
        }
        Ok(Self {
            particular,
            null_map,
        })
    }
}

/// `argmin ||W^{1/2}(A x - y)||^2 + ridge ||x||^2`, returning
/// `(x, rank_deficient, rank)`.
fn weighted_lstsq(
    a: &DMatrix<f64>,
    w: &[f64],
    y: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<(DVector<f64>, bool, usize)> {
    let d = a.ncols();
    let mut wa = a.clone();
    for (r, &wr) in w.iter().enumerate() {
        wa.row_mut(r).scale_mut(wr);
    }
    let mut g = a.tr_mul(&wa);
    let rhs = wa.tr_mul(y);
    for j in 0..d {
        g[(j, j)] += opts.regularization;
    }
    // equilibrate to unit diagonal
    let s: Vec<f64> = (0..d)
        .map(|j| {
            let gj = g[(j, j)];
            if gj > 0.0 {
                1.0 / libm::sqrt(gj)
            } else {
                1.0
            }
        })
        .collect();
    let mut gs = g.clone();
    for i in 0..d {
        for j in 0..d {
            gs[(i, j)] *= s[i] * s[j];
        }
    }
    let bs = DVector::from_fn(d, |i, _| rhs[i] * s[i]);
    if let Some(chol) = gs.clone().cholesky() {
        let l = chol.l_dirty();
        let min_pivot = (0..d)
            .map(|i| l[(i, i)] * l[(i, i)])
            .fold(f64::INFINITY, f64::min);
        if min_pivot > opts.rank_tolerance {
            let z = chol.solve(&bs);
            return Ok((DVector::from_fn(d, |i, _| z[i] * s[i]), false, d));
        }
    }
    // rank-deficient: minimum-norm solution from the spectrum of G
    let eig = g.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let cutoff = opts.rank_tolerance * lmax;
    let mut x = DVector::zeros(d);
    let mut rank = 0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff && lambda > 0.0 {
            let v = eig.eigenvectors.column(k);
            let coef = v.dot(&rhs) / lambda;
            x.axpy(coef, &v, 1.0);
            rank += 1;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver(
            "spectral solve produced non-finite values".into(),
        ));
    }
    Ok((x, rank < d, rank))
}
