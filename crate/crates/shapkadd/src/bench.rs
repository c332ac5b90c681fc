//! Budget sweeps: exact ground truth once, then every (method, budget,
//! repetition) run against it, in parallel, with canonically ordered output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use shapkadd_core::baselines::run_method;
use shapkadd_core::{
    exact_shapley, mse, Coalition, Game, Method, ShapleyVector, SolverOptions, ValueTable,
};

use crate::error::{Error, Result};
use crate::table::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkPlan {
    pub methods: Vec<Method>,
    /// Strictly ascending.
    pub budgets: Vec<usize>,
    pub repetitions: usize,
    pub seed_base: u64,
    pub solver: SolverOptions,
    /// Zero means one per logical core.
    pub workers: usize,
    /// Record wall time; off by default so repeated runs are byte-identical.
    pub timing: bool,
}

impl BenchmarkPlan {
    pub fn new(methods: Vec<Method>, budgets: Vec<usize>) -> Self {
        Self {
            methods,
            budgets,
            repetitions: 100,
            seed_base: 0,
            solver: SolverOptions::default(),
            workers: 0,
            timing: false,
        }
    }

    pub fn validate(&self, n: shapkadd_core::PlayerCount) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Usage("no methods given".into()));
        }
        if self.budgets.is_empty() {
            return Err(Error::Usage("no budgets given".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Usage("repetitions must be at least 1".into()));
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Usage(format!(
                "budgets must be strictly ascending, got {:?}",
                self.budgets
            )));
        }
        let max = n.coalition_count();
        if let Some(&b) = self.budgets.iter().find(|&&b| b as u64 > max || b == 0) {
            return Err(Error::Usage(format!(
                "budget {b} outside 1..={max} for n = {n}"
            )));
        }
        for m in &self.methods {
            if let Method::SvaKadd { k } = m {
                if *k == 0 || *k > n.get() {
                    return Err(Error::Usage(format!("{m}: degree outside 1..={n}")));
                }
            }
        }
        self.solver.validate()?;
        Ok(())
    }

    /// Budgets at which `method` can run; smaller ones are skipped.
    pub fn runnable_budgets(&self, method: Method, n: shapkadd_core::PlayerCount) -> Vec<usize> {
        let min = method.min_budget(n);
        self.budgets.iter().copied().filter(|&b| b >= min).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub method: Method,
    pub k: usize,
    pub budget: usize,
    pub repetition: usize,
    pub mse: f64,
    pub evaluations: usize,
    pub wall_ms: f64,
    pub underdetermined: bool,
}

impl BenchmarkRecord {
    fn key(&self) -> (Method, usize, usize) {
        (self.method, self.budget, self.repetition)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub method: Method,
    pub k: usize,
    pub budget: usize,
    pub mean_mse: f64,
    pub stderr_mse: f64,
    pub median_mse: f64,
    pub reps: usize,
}

impl Aggregate {
    pub fn label(&self) -> String {
        format!("{}-k{}", self.method.name(), self.k)
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub n: usize,
    pub truth: ShapleyVector,
    /// `v(∅)` subtracted before running, when nonzero.
    pub offset: f64,
    pub records: Vec<BenchmarkRecord>,
    pub aggregates: Vec<Aggregate>,
}

/// Sorts records by method, budget and repetition.
pub fn canonicalize(records: &mut [BenchmarkRecord]) {
    records.sort_by(|a, b| a.key().cmp(&b.key()));
}

/// Groups canonically sorted records into one row per (method, budget).
pub fn aggregate(records: &[BenchmarkRecord]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for group in records.chunk_by(|a, b| a.method == b.method && a.budget == b.budget) {
        let r = group.len();
        let mut values: Vec<f64> = group.iter().map(|x| x.mse).collect();
        let mean = values.iter().sum::<f64>() / r as f64;
        let stderr = if r > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
            (var / r as f64).sqrt()
        } else {
            0.0
        };
        values.sort_by(f64::total_cmp);
        let median = if r % 2 == 1 {
            values[r / 2]
        } else {
            0.5 * (values[r / 2 - 1] + values[r / 2])
        };
        out.push(Aggregate {
            method: group[0].method,
            k: group[0].k,
            budget: group[0].budget,
            mean_mse: mean,
            stderr_mse: stderr,
            median_mse: median,
            reps: r,
        });
    }
    out
}

/// Runs `plan` on `game`.
///
/// The game is tabulated once (`2^n` evaluations); when `v(∅) != 0` the table
/// is shifted so that `v(∅) = 0`. Each run counts its own distinct
/// evaluations against its budget.
pub fn run_benchmark<G: Game + ?Sized>(game: &G, plan: &BenchmarkPlan) -> Result<BenchmarkReport> {
    let n = game.players();
    plan.validate(n)?;
    let raw = ValueTable::from_game(game)?;
    let offset = raw.get(Coalition::EMPTY);
    let table = if offset != 0.0 {
        log::info!("normalizing: subtracting v(∅) = {offset}");
        ValueTable::new(n, raw.values().iter().map(|v| v - offset).collect())?
    } else {
        raw
    };
    let truth = exact_shapley(&table)?;
    let jobs: Vec<(Method, usize, usize)> = plan
        .methods
        .iter()
        .flat_map(|&m| {
            let budgets = plan.runnable_budgets(m, n);
            if budgets.len() < plan.budgets.len() {
                log::info!("{m}: skipping budgets below {}", m.min_budget(n));
            }
            budgets
                .into_iter()
                .flat_map(move |b| (0..plan.repetitions).map(move |r| (m, b, r)))
        })
        .collect();
    let run = |&(method, budget, rep): &(Method, usize, usize)| -> Result<BenchmarkRecord> {
        let start = Instant::now();
        let est = run_method(
            &table,
            method,
            budget,
            plan.seed_base.wrapping_add(rep as u64),
            &plan.solver,
        )?;
        let wall_ms = if plan.timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        if est.evaluations > budget {
            return Err(Error::Format(format!(
                "{method} spent {} evaluations of a budget of {budget}",
                est.evaluations
            )));
        }
        Ok(BenchmarkRecord {
            method,
            k: method.degree(),
            budget,
            repetition: rep,
            mse: mse(&est.shapley, &truth)?,
            evaluations: est.evaluations,
            wall_ms,
            underdetermined: est.underdetermined,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let mut records = pool.install(|| jobs.par_iter().map(run).collect::<Result<Vec<_>>>())?;
    canonicalize(&mut records);
    let aggregates = aggregate(&records);
    Ok(BenchmarkReport {
        n: n.get(),
        truth,
        offset,
        records,
        aggregates,
    })
}

pub const RECORD_HEADER: &str = "method,k,budget,repetition,mse,evaluations,wall_ms,flags";
pub const AGGREGATE_HEADER: &str = "method,k,budget,mean_mse,stderr_mse,median_mse,reps";

pub fn format_records(records: &[BenchmarkRecord]) -> String {
    let mut out = format!("{RECORD_HEADER}\n");
    for r in records {
        let flags = if r.underdetermined {
            "underdetermined"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method.name(),
            r.k,
            r.budget,
            r.repetition,
            Real(r.mse),
            r.evaluations,
            r.wall_ms,
            flags
        );
    }
    out
}

pub fn format_aggregates(aggs: &[Aggregate]) -> String {
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for a in aggs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            a.method.name(),
            a.k,
            a.budget,
            Real(a.mean_mse),
            Real(a.stderr_mse),
            Real(a.median_mse),
            a.reps
        );
    }
    out
}

fn method_from_columns(name: &str, k: usize) -> Result<Method> {
    let m = if name == "svakadd" {
        format!("svakadd:k={k}")
    } else {
        name.to_string()
    };
    Ok(m.parse::<Method>()?)
}

/// Parses the record CSV produced by [`format_records`].
pub fn parse_records<R: std::io::Read>(reader: R) -> Result<Vec<BenchmarkRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.join(",") != RECORD_HEADER {
        return Err(Error::Format(format!(
            "unexpected header {:?}",
            header.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Format(format!("record {}: bad {what}", i + 1));
        let field = |j: usize| rec.get(j).unwrap_or("");
        let k: usize = field(1).parse().map_err(|_| bad("k"))?;
        out.push(BenchmarkRecord {
            method: method_from_columns(field(0), k)?,
            k,
            budget: field(2).parse().map_err(|_| bad("budget"))?,
            repetition: field(3).parse().map_err(|_| bad("repetition"))?,
            mse: field(4).parse().map_err(|_| bad("mse"))?,
            evaluations: field(5).parse().map_err(|_| bad("evaluations"))?,
            wall_ms: field(6).parse().map_err(|_| bad("wall_ms"))?,
            underdetermined: match field(7) {
                "" => false,
                "underdetermined" => true,
                _ => return Err(bad("flags")),
            },
        });
    }
    Ok(out)
}

/// `runs.csv` becomes `runs-agg.csv`.
pub fn aggregate_path(path: &Path) -> PathBuf {
    sibling(path, "agg", "csv")
}

/// `runs.csv` becomes `runs-meta.json`.
pub fn metadata_path(path: &Path) -> PathBuf {
    sibling(path, "meta", "json")
}

fn sibling(path: &Path, tag: &str, ext: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}-{tag}.{ext}"))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the record CSV to `path` and the aggregates beside it.
pub fn emit_csv(records: &[BenchmarkRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write(path, &format_records(records))?;
    write(
        &aggregate_path(path),
        &format_aggregates(&aggregate(records)),
    )
}

/// Conventions a reader needs to interpret the numbers.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub game: String,
    pub n: usize,
    pub methods: Vec<String>,
    pub budgets: Vec<usize>,
    pub repetitions: usize,
    pub seed_base: u64,
    pub seed_rule: &'static str,
    pub constraint_mode: String,
    pub penalty_weight: f64,
    pub budget_accounting: &'static str,
    pub normalized: bool,
    pub empty_coalition_offset: f64,
    pub wall_time_recorded: bool,
    pub exact_shapley: Vec<f64>,
}

impl Metadata {
    pub fn new(game: impl Into<String>, plan: &BenchmarkPlan, report: &BenchmarkReport) -> Self {
        Self {
            game: game.into(),
            n: report.n,
            methods: plan.methods.iter().map(Method::to_string).collect(),
            budgets: plan.budgets.clone(),
            repetitions: plan.repetitions,
            seed_base: plan.seed_base,
            seed_rule: "seed = seed_base + repetition; fresh sampler per (method, budget, repetition)",
            constraint_mode: plan.solver.constraint_mode.to_string(),
            penalty_weight: plan.solver.penalty_weight,
            budget_accounting: "evaluations = distinct coalitions evaluated per run; v(empty) and v(N) count toward the budget; revisits are free",
            normalized: report.offset != 0.0,
            empty_coalition_offset: report.offset,
            wall_time_recorded: plan.timing,
            exact_shapley: report.truth.to_vec(),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        write(path.as_ref(), &(json + "\n"))
    }
}
