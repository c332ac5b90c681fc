//! The k-additive surrogate estimator: evaluate `∅` and `N`, draw `T - 2`
//! distinct proper coalitions from the kernel-weighted distribution, fit the
//! surrogate and read off its singleton interactions.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coalition::{grand_coalition, Coalition, PlayerCount};
use crate::error::{Error, Result};
use crate::exact::ShapleyVector;
use crate::game::{Counted, Game};
use crate::kadd::{InteractionBasis, InteractionVector};
use crate::sampler::CoalitionSampler;
use crate::wls::{build_problem, solve, SampleSet, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Additivity degree of the surrogate.
    pub k: usize,
    /// Number of distinct coalitions evaluated, `∅` and `N` included.
    pub budget: usize,
    pub seed: u64,
    pub solver: SolverOptions,
    pub return_interactions: bool,
}

impl EstimatorConfig {
    pub fn new(k: usize, budget: usize, seed: u64) -> Self {
        Self {
            k,
            budget,
            seed,
            solver: SolverOptions::default(),
            return_interactions: false,
        }
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn validate(&self, n: PlayerCount) -> Result<()> {
        if self.k == 0 || self.k > n.get() {
            return Err(Error::InvalidDegree {
                k: self.k,
                n: n.get(),
            });
        }
        check_budget(n, self.budget, 2)?;
        self.solver.validate()
    }
}

pub(crate) fn check_budget(n: PlayerCount, budget: usize, min: usize) -> Result<()> {
    if budget < min {
        return Err(Error::BudgetTooSmall { budget, min });
    }
    if budget as u64 > n.coalition_count() {
        return Err(Error::BudgetTooLarge {
            budget,
            max: n.coalition_count(),
        });
    }
    Ok(())
}

/// Output of any estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub shapley: ShapleyVector,
    pub interactions: Option<InteractionVector>,
    /// Distinct coalitions evaluated.
    pub evaluations: usize,
    /// The fit had fewer independent equations than unknowns.
    pub underdetermined: bool,
}

/// Runs the k-additive estimator on `game`.
pub fn run_svakadd<G: Game + ?Sized>(game: &G, cfg: &EstimatorConfig) -> Result<Estimate> {
    let n = game.players();
    cfg.validate(n)?;
    let basis = Arc::new(InteractionBasis::new(n, cfg.k)?);
    run_svakadd_with_basis(game, cfg, basis)
}

/// [`run_svakadd`] reusing a prebuilt basis of matching `n` and `k`.
pub fn run_svakadd_with_basis<G: Game + ?Sized>(
    game: &G,
    cfg: &EstimatorConfig,
    basis: Arc<InteractionBasis>,
) -> Result<Estimate> {
    let n = game.players();
    cfg.validate(n)?;
    if basis.n() != n || basis.k() != cfg.k {
        return Err(Error::InvalidDegree {
            k: basis.k(),
            n: basis.n().get(),
        });
    }
    let counted = Counted::new(game);
    let grand = grand_coalition(n);
    let mut coalitions: Vec<Coalition> = Vec::with_capacity(cfg.budget);
    let mut values = Vec::with_capacity(cfg.budget);
    for c in [Coalition::EMPTY, grand] {
        if coalitions.contains(&c) {
            continue;
        }
        values.push(counted.value(c)?);
        coalitions.push(c);
    }
    if coalitions.len() < cfg.budget {
        let mut sampler = CoalitionSampler::new(n, ChaCha8Rng::seed_from_u64(cfg.seed));
        while coalitions.len() < cfg.budget {
            let c = sampler.sample()?;
            values.push(counted.value(c)?);
            coalitions.push(c);
        }
    }
    let samples = SampleSet::new(n, coalitions, values)?;
    let problem = build_problem(&samples, basis, &cfg.solver)?;
    let sol = solve(&problem, &cfg.solver)?;
    Ok(Estimate {
        shapley: ShapleyVector::new(sol.interactions.shapley().to_vec()),
        interactions: cfg.return_interactions.then_some(sol.interactions),
        evaluations: counted.evaluations(),
        underdetermined: sol.underdetermined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_shapley, mse};
    use crate::game::{AdditiveGame, ValueTable};
    use alloc::vec;
    use rand::Rng;

    fn pc(n: usize) -> PlayerCount {
        PlayerCount::new(n).unwrap()
    }

    #[test]
    fn full_budget_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [3usize, 5, 7] {
            let t = ValueTable::from_fn(pc(n), |_| rng.random_range(-1.0..=1.0)).unwrap();
            let phi = exact_shapley(&t).unwrap();
            for k in 1..=3.min(n) {
                let cfg =
                    EstimatorConfig::new(k, 1 << n, 1).with_solver(SolverOptions::eliminate());
                let est = run_svakadd(&t, &cfg).unwrap();
                assert_eq!(est.evaluations, 1 << n);
                assert!(mse(&est.shapley, &phi).unwrap() <= 1e-8);
            }
        }
    }

    #[test]
    fn additive_game_recovered_from_few_samples() {
        let c = vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.5];
        let g = AdditiveGame::new(c.clone()).unwrap();
        let cfg = EstimatorConfig::new(1, 12, 17);
        let est = run_svakadd(&g, &cfg).unwrap();
        assert!(!est.underdetermined);
        assert_eq!(est.evaluations, 12);
        for (a, b) in est.shapley.iter().zip(&c) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn efficiency_holds_at_every_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = pc(6);
        let t = ValueTable::from_fn(n, |_| rng.random_range(-1.0..=1.0)).unwrap();
        let gap = t.get(grand_coalition(n)) - t.get(Coalition::EMPTY);
        for budget in [2usize, 5, 10, 22, 40, 64] {
            for (solver, tol) in [
                (SolverOptions::default(), 1e-4),
                (SolverOptions::eliminate(), 1e-10),
            ] {
                let est = run_svakadd(&t, &EstimatorConfig::new(2, budget, 4).with_solver(solver))
                    .unwrap();
                assert!((est.shapley.sum() - gap).abs() <= tol, "T={budget}");
                assert_eq!(est.evaluations, budget);
                if budget < 22 {
                    assert!(est.underdetermined);
                }
            }
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = ValueTable::from_fn(pc(8), |_| rng.random_range(-1.0..=1.0)).unwrap();
        let cfg = EstimatorConfig::new(2, 60, 99);
        assert_eq!(
            run_svakadd(&t, &cfg).unwrap(),
            run_svakadd(&t, &cfg).unwrap()
        );
    }

    #[test]
    fn rejects_bad_config() {
        let g = AdditiveGame::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(run_svakadd(&g, &EstimatorConfig::new(0, 4, 0)).is_err());
        assert!(run_svakadd(&g, &EstimatorConfig::new(4, 4, 0)).is_err());
        assert!(run_svakadd(&g, &EstimatorConfig::new(1, 9, 0)).is_err());
        assert!(run_svakadd(&g, &EstimatorConfig::new(1, 1, 0)).is_err());
    }

    #[test]
    fn interactions_returned_on_request() {
        let g = AdditiveGame::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut cfg = EstimatorConfig::new(2, 16, 0);
        cfg.return_interactions = true;
        let est = run_svakadd(&g, &cfg).unwrap();
        let iv = est.interactions.unwrap();
        assert_eq!(iv.coeffs().len(), 11);
        assert_eq!(iv.shapley(), &est.shapley[..]);
    }
}
