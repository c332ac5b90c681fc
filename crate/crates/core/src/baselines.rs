//! Reference estimators: permutation sampling, size-stratified sampling and
//! KernelSHAP.
//!
//! All of them spend their budget on distinct coalitions: a coalition already
//! evaluated during the same run is free.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coalition::{
    binomial_f64, enumerate_all, enumerate_size, grand_coalition, Coalition, PlayerCount,
};
use crate::error::{Error, Result};
use crate::exact::ShapleyVector;
use crate::game::{Counted, Game};
use crate::kadd::InteractionBasis;
use crate::sampler::{random_subset, Stratum};
use crate::svakadd::{check_budget, run_svakadd, Estimate, EstimatorConfig};
use crate::wls::{
    build_problem, build_problem_weighted, shapley_kernel_weight, solve, ConstraintMode, SampleSet,
    SolverOptions,
};

/// Permutation sampling.
///
/// Each walk adds the players of a uniformly random permutation one at a time
/// and credits every player with its marginal contribution. A walk that would
/// need more fresh evaluations than the remaining budget is abandoned and
/// contributes nothing. At most `budget` walks are made, which bounds the run
/// once every coalition is cached.
pub fn permutation_sampling<G: Game + ?Sized>(
    game: &G,
    budget: usize,
    seed: u64,
) -> Result<Estimate> {
    let n = game.players();
    let nn = n.get();
    check_budget(n, budget, nn.min(n.coalition_count() as usize))?;
    let counted = Counted::new(game);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = vec![0.0; nn];
    let mut walks = 0usize;
    let mut order: Vec<usize> = (0..nn).collect();
    let mut marginals = vec![0.0; nn];
    'walks: for _ in 0..budget {
        order.shuffle(&mut rng);
        let mut prefix = Coalition::EMPTY;
        let mut prev = match value_within(&counted, prefix, budget)? {
            Some(v) => v,
            None => break,
        };
        for &i in &order {
            prefix = prefix.with(i);
            let Some(v) = value_within(&counted, prefix, budget)? else {
                break 'walks;
            };
            marginals[i] = v - prev;
            prev = v;
        }
        for (s, m) in sums.iter_mut().zip(&marginals) {
            *s += m;
        }
        walks += 1;
    }
    let phi = if walks == 0 {
        vec![0.0; nn]
    } else {
        sums.iter().map(|s| s / walks as f64).collect()
    };
    Ok(Estimate {
        shapley: ShapleyVector::new(phi),
        interactions: None,
        evaluations: counted.evaluations(),
        underdetermined: false,
    })
}

/// Evaluates `c` unless that would exceed the budget.
fn value_within<G: Game + ?Sized>(
    counted: &Counted<'_, G>,
    c: Coalition,
    budget: usize,
) -> Result<Option<f64>> {
    if !counted.is_cached(c) && counted.evaluations() >= budget {
        return Ok(None);
    }
    counted.value(c).map(Some)
}

/// Stratified sampling over (player, coalition size).
///
/// Strata `(i, s)` collect marginal contributions `v(A ∪ {i}) - v(A)` for
/// `A ⊆ N \ {i}`, `|A| = s`, drawn without replacement. Samples are taken
/// round-robin (sizes ascending, then players) so the budget is spread evenly;
/// the run ends when the next sample is unaffordable or every stratum is
/// exhausted. The estimate is the average over sizes of the stratum means.
pub fn stratified_sampling<G: Game + ?Sized>(
    game: &G,
    budget: usize,
    seed: u64,
) -> Result<Estimate> {
    let n = game.players();
    let nn = n.get();
    check_budget(n, budget, 2)?;
    let counted = Counted::new(game);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let others: Vec<Vec<usize>> = (0..nn)
        .map(|i| (0..nn).filter(|&j| j != i).collect())
        .collect();
    // strata[s * n + i]
    let mut strata: Vec<Stratum> = (0..nn)
        .flat_map(|s| (0..nn).map(move |_| Stratum::new(s, binomial_f64(nn - 1, s) as u64)))
        .collect();
    let mut sums = vec![0.0; nn * nn];
    let mut counts = vec![0usize; nn * nn];
    'rounds: loop {
        let mut progressed = false;
        for s in 0..nn {
            for i in 0..nn {
                let idx = s * nn + i;
                let pool = &others[i];
                let Some(a) = strata[idx].draw(&mut rng, pool, || {
                    enumerate_size(n, s)
                        .expect("size within range")
                        .filter(|c| !c.contains(i))
                        .collect()
                }) else {
                    continue;
                };
                let with = a.with(i);
                if counted.evaluations() + counted.missing(&[a, with]) > budget {
                    break 'rounds;
                }
                sums[idx] += counted.value(with)? - counted.value(a)?;
                counts[idx] += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    let phi = (0..nn)
        .map(|i| {
            let total: f64 = (0..nn)
                .map(|s| {
                    let idx = s * nn + i;
                    if counts[idx] == 0 {
                        0.0
                    } else {
                        sums[idx] / counts[idx] as f64
                    }
                })
                .sum();
            total / nn as f64
        })
        .collect();
    Ok(Estimate {
        shapley: ShapleyVector::new(phi),
        interactions: None,
        evaluations: counted.evaluations(),
        underdetermined: false,
    })
}

/// KernelSHAP.
///
/// With a budget covering all `2^n` coalitions the kernel-weighted problem is
/// solved over the full power set. Otherwise `∅` and `N` are evaluated and
/// proper coalitions are drawn with replacement (size ∝ `C(n,a) w*(a)`,
/// uniform within a size) until `budget - 2` distinct ones have been seen;
/// each gets weight `multiplicity / draws * sum_B w*(B)`, the Monte Carlo
/// estimate of its share of the kernel-weighted objective. The additive
/// (`k = 1`) surrogate is then fitted under the efficiency constraint, which
/// is always eliminated exactly whatever mode `solver` asks for.
pub fn kernelshap<G: Game + ?Sized>(
    game: &G,
    budget: usize,
    seed: u64,
    solver: &SolverOptions,
) -> Result<Estimate> {
    let solver = &SolverOptions {
        constraint_mode: ConstraintMode::Eliminate,
        ..*solver
    };
    let n = game.players();
    let nn = n.get();
    check_budget(n, budget, (nn + 3).min(n.coalition_count() as usize))?;
    if budget as u64 == n.coalition_count() {
        let cfg = EstimatorConfig::new(1, budget, seed).with_solver(*solver);
        return run_svakadd(game, &cfg);
    }
    let counted = Counted::new(game);
    let grand = grand_coalition(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let empty_value = counted.value(Coalition::EMPTY)?;
    let grand_value = counted.value(grand)?;
    let kernel: Vec<f64> = (0..=nn)
        .map(|a| shapley_kernel_weight(n, a).unwrap_or(0.0))
        .collect();
    let mass: Vec<f64> = (0..=nn).map(|a| binomial_f64(nn, a) * kernel[a]).collect();
    let total_mass: f64 = mass.iter().sum();
    let players: Vec<usize> = (0..nn).collect();
    let mut multiplicity: BTreeMap<u64, u64> = BTreeMap::new();
    let mut order: Vec<Coalition> = Vec::new();
    let mut draws = 0u64;
    while order.len() + 2 < budget {
        let target = rng.random::<f64>() * total_mass;
        let mut acc = 0.0;
        let mut size = nn - 1;
        for (a, m) in mass.iter().enumerate().take(nn).skip(1) {
            acc += m;
            if target < acc {
                size = a;
                break;
            }
        }
        let c = random_subset(&mut rng, &players, size);
        draws += 1;
        let m = multiplicity.entry(c.bits()).or_insert(0);
        if *m == 0 {
            order.push(c);
        }
        *m += 1;
    }
    let mut coalitions = vec![Coalition::EMPTY, grand];
    let mut values = vec![empty_value, grand_value];
    for &c in &order {
        values.push(counted.value(c)?);
        coalitions.push(c);
    }
    let samples = SampleSet::new(n, coalitions, values)?;
    let basis = Arc::new(InteractionBasis::new(n, 1)?);
    let problem = build_problem_weighted(&samples, basis, solver, |c| {
        Ok(multiplicity[&c.bits()] as f64 / draws as f64 * total_mass)
    })?;
    let sol = solve(&problem, solver)?;
    Ok(Estimate {
        shapley: ShapleyVector::new(sol.interactions.shapley().to_vec()),
        interactions: None,
        evaluations: counted.evaluations(),
        underdetermined: sol.underdetermined,
    })
}

/// Exact kernel-weighted fit over all coalitions; shared by tests.
pub fn kernel_fit_full<G: Game + ?Sized>(
    game: &G,
    solver: &SolverOptions,
) -> Result<ShapleyVector> {
    let n = game.players();
    let cs: Vec<Coalition> = enumerate_all(n).collect();
    let vs = cs
        .iter()
        .map(|&c| game.value(c))
        .collect::<Result<Vec<_>>>()?;
    let samples = SampleSet::new(n, cs, vs)?;
    let problem = build_problem(&samples, InteractionBasis::new(n, 1)?, solver)?;
    Ok(ShapleyVector::new(
        solve(&problem, solver)?.interactions.shapley().to_vec(),
    ))
}

/// Every estimator known to the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    SvaKadd { k: usize },
    Permutation,
    Stratified,
    KernelShap,
}

/// Method name kept for externally produced stratified SVARM curves; it
/// cannot be run here.
pub const RESERVED_SVARM: &str = "stratified-svarm";

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::SvaKadd { .. } => "svakadd",
            Method::Permutation => "permutation",
            Method::Stratified => "stratified",
            Method::KernelShap => "kernelshap",
        }
    }

    /// Degree reported in output tables (`1` for the additive baselines,
    /// `0` for the model-free samplers).
    pub fn degree(&self) -> usize {
        match self {
            Method::SvaKadd { k } => *k,
            Method::KernelShap => 1,
            Method::Permutation | Method::Stratified => 0,
        }
    }

    /// `true` when the estimate is forced to satisfy efficiency.
    pub fn enforces_efficiency(&self) -> bool {
        matches!(self, Method::SvaKadd { .. } | Method::KernelShap)
    }

    /// Smallest admissible budget for `n` players.
    pub fn min_budget(&self, n: PlayerCount) -> usize {
        let cap = n.coalition_count() as usize;
        match self {
            Method::SvaKadd { .. } | Method::Stratified => 2.min(cap),
            Method::Permutation => n.get().min(cap),
            Method::KernelShap => (n.get() + 3).min(cap),
        }
    }

    pub fn label(&self) -> String {
        format!("{}-k{}", self.name(), self.degree())
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::SvaKadd { k } => write!(f, "svakadd:k={k}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts `svakadd:k=<k>` (or `svakadd:<k>`), `permutation`,
    /// `stratified` and `kernelshap`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        match (name, arg) {
            ("svakadd", Some(arg)) => {
                let k = arg
                    .trim_start_matches("k=")
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidGame(format!("bad degree in method {s:?}")))?;
                Ok(Method::SvaKadd { k })
            }
            ("svakadd", None) => Err(Error::InvalidGame(
                "svakadd needs a degree, e.g. svakadd:k=2".into(),
            )),
            ("permutation", None) => Ok(Method::Permutation),
            ("stratified", None) => Ok(Method::Stratified),
            ("kernelshap", None) => Ok(Method::KernelShap),
            (RESERVED_SVARM, _) => Err(Error::InvalidGame(format!(
                "{RESERVED_SVARM} is reserved for externally produced curves and cannot be run"
            ))),
            _ => Err(Error::InvalidGame(format!("unknown method {s:?}"))),
        }
    }
}

/// Runs `method` with a fresh RNG seeded by `seed`.
pub fn run_method<G: Game + ?Sized>(
    game: &G,
    method: Method,
    budget: usize,
    seed: u64,
    solver: &SolverOptions,
) -> Result<Estimate> {
    match method {
        Method::SvaKadd { k } => run_svakadd(
            game,
            &EstimatorConfig::new(k, budget, seed).with_solver(*solver),
        ),
        Method::Permutation => permutation_sampling(game, budget, seed),
        Method::Stratified => stratified_sampling(game, budget, seed),
        Method::KernelShap => kernelshap(game, budget, seed, solver),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_shapley;
    use crate::game::{AdditiveGame, FnGame, UnanimityGame, ValueTable};
    use alloc::string::ToString;

    fn pc(n: usize) -> PlayerCount {
        PlayerCount::new(n).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn permutation_single_walk_on_additive() {
        let c = vec![1.0, 2.0, 3.0, -1.0];
        let g = AdditiveGame::new(c.clone()).unwrap();
        let est = permutation_sampling(&g, 5, 3).unwrap();
        assert_eq!(est.evaluations, 5);
        assert!(close(&est.shapley, &c, 1e-12));
    }

    #[test]
    fn permutation_unanimity_expectation() {
        // averaging over all 6 orders credits player 1 or 2 with 1 each time
        let n = pc(3);
        let g = UnanimityGame::new(n, Coalition::from_bits(0b011)).unwrap();
        let mut acc = [0.0; 3];
        let reps = 400;
        for seed in 0..reps {
            let est = permutation_sampling(&g, 8, seed).unwrap();
            for (a, e) in acc.iter_mut().zip(est.shapley.iter()) {
                *a += e / reps as f64;
            }
        }
        assert!(close(&acc, &[0.5, 0.5, 0.0], 0.05), "{acc:?}");
        assert_eq!(acc[2], 0.0);
    }

    #[test]
    fn permutation_budget_accounting() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = ValueTable::from_fn(pc(6), |_| rng.random_range(-1.0..=1.0)).unwrap();
        for budget in [6usize, 7, 13, 40, 64] {
            let est = permutation_sampling(&t, budget, 5).unwrap();
            assert!(est.evaluations <= budget);
        }
        assert_eq!(permutation_sampling(&t, 7, 5).unwrap().evaluations, 7);
        assert!(permutation_sampling(&t, 5, 5).is_err());
    }

    #[test]
    fn stratified_additive_and_null_player() {
        let c = vec![1.0, 0.0, 3.0, -2.0];
        let g = AdditiveGame::new(c.clone()).unwrap();
        // any allocation with at least one sample per stratum
        let est = stratified_sampling(&g, 16, 9).unwrap();
        assert!(close(&est.shapley, &c, 1e-12));
        for seed in 0..20 {
            let est = stratified_sampling(&g, 6, seed).unwrap();
            assert_eq!(est.shapley[1], 0.0);
            assert!(est.evaluations <= 6);
        }
    }

    #[test]
    fn stratified_full_coverage_is_exact() {
        let g = FnGame::new(pc(3), |c| (c.bits() as f64).sin() * 2.0 + c.size() as f64);
        let phi = exact_shapley(&g).unwrap();
        let est = stratified_sampling(&g, 8, 0).unwrap();
        assert!(
            close(&est.shapley, &phi, 1e-12),
            "{:?} vs {:?}",
            est.shapley,
            phi
        );
    }

    #[test]
    fn kernelshap_full_coverage_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = ValueTable::from_fn(pc(5), |_| rng.random_range(-1.0..=1.0)).unwrap();
        let phi = exact_shapley(&t).unwrap();
        let est = kernelshap(&t, 32, 1, &SolverOptions::eliminate()).unwrap();
        assert!(close(&est.shapley, &phi, 1e-10));
        let full = kernel_fit_full(&t, &SolverOptions::eliminate()).unwrap();
        assert!(close(&full, &phi, 1e-10));
    }

    #[test]
    fn kernelshap_additive_and_efficiency() {
        let c = vec![0.5, -1.0, 2.0, 1.0, 0.25, 3.0];
        let g = AdditiveGame::new(c.clone()).unwrap();
        let est = kernelshap(&g, 20, 2, &SolverOptions::eliminate()).unwrap();
        assert!(!est.underdetermined);
        assert!(close(&est.shapley, &c, 1e-9));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = ValueTable::from_fn(pc(6), |_| rng.random_range(-1.0..=1.0)).unwrap();
        let gap = t.get(grand_coalition(pc(6))) - t.get(Coalition::EMPTY);
        for budget in [9usize, 15, 30, 63] {
            let est = kernelshap(&t, budget, 3, &SolverOptions::eliminate()).unwrap();
            assert!((est.shapley.sum() - gap).abs() <= 1e-10);
            assert_eq!(est.evaluations, budget);
        }
        assert!(kernelshap(&t, 8, 0, &SolverOptions::eliminate()).is_err());
    }

    #[test]
    fn method_names_roundtrip() {
        for m in [
            Method::SvaKadd { k: 3 },
            Method::Permutation,
            Method::Stratified,
            Method::KernelShap,
        ] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert_eq!(
            "svakadd:2".parse::<Method>().unwrap(),
            Method::SvaKadd { k: 2 }
        );
        assert!("svakadd".parse::<Method>().is_err());
        assert!(RESERVED_SVARM.parse::<Method>().is_err());
        assert!("banzhaf".parse::<Method>().is_err());
        assert_eq!(Method::SvaKadd { k: 2 }.label(), "svakadd-k2");
    }

    #[test]
    fn every_method_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let t = ValueTable::from_fn(pc(7), |_| rng.random_range(-1.0..=1.0)).unwrap();
        for m in [
            Method::SvaKadd { k: 2 },
            Method::Permutation,
            Method::Stratified,
            Method::KernelShap,
        ] {
            let a = run_method(&t, m, 50, 77, &SolverOptions::default()).unwrap();
            let b = run_method(&t, m, 50, 77, &SolverOptions::default()).unwrap();
            assert_eq!(a, b);
            assert!(a.evaluations <= 50);
        }
    }
}
