//! Command-line front end: `exact`, `approx`, `bench` and `gen`.
//!
//! Every flag is validated and every output location resolved before the
//! value function is evaluated for the first time.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use shapkadd_core::exact::exact_interactions;
use shapkadd_core::{
    exact_shapley, normalize, run_method, run_svakadd, Coalition, ConstraintMode, EstimatorConfig,
    Game, Method, PlayerCount, SolverOptions, ValueTable, DEFAULT_PLAYER_CAP,
};

use crate::bench::{emit_csv, metadata_path, run_benchmark, BenchmarkPlan, Metadata};
use crate::data::load_total_correlation;
use crate::error::{Error, Result};
use crate::gamespec::{DynGame, GameSpec};
use crate::interactions::{format_interactions, write_interactions};
use crate::oracle::OracleGame;
use crate::plot::emit_plot;
use crate::table::{load_value_table, save_value_table, Real};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SHAPKADD_OUTPUT_DIR";

/// Exact computation above this many players gets a warning.
const EXACT_WARN_PLAYERS: usize = 20;

#[derive(Debug, Parser)]
#[command(
    name = "shapkadd",
    version,
    about = "Exact and approximate Shapley values of cooperative games"
)]
pub struct Cli {
    /// Largest accepted player count (at most 63).
    #[arg(long, global = true, default_value_t = DEFAULT_PLAYER_CAP)]
    pub max_players: usize,
    /// Directory for outputs not given an explicit path.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    pub output_dir: Option<PathBuf>,
    /// Seed for randomized commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for `bench` (default: logical cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact Shapley values, optionally with interaction indices.
    Exact {
        #[command(flatten)]
        source: GameArgs,
        /// Also print interaction indices up to this order.
        #[arg(long)]
        interactions: Option<usize>,
        /// Write the Shapley values as `player,value` CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// One estimator run.
    Approx {
        #[command(flatten)]
        source: GameArgs,
        /// svakadd, permutation, stratified or kernelshap (or `svakadd:k=<k>`).
        #[arg(long, default_value = "svakadd")]
        method: String,
        /// Additivity degree for svakadd.
        #[arg(long)]
        k: Option<usize>,
        /// Distinct evaluations, v(∅) and v(N) included.
        #[arg(long)]
        budget: usize,
        /// Efficiency constraint handling: penalty or eliminate.
        #[arg(long, default_value = "penalty")]
        solver: ConstraintMode,
        /// Write the fitted interaction vector (svakadd only).
        #[arg(long, num_args = 0..=1)]
        emit_interactions: Option<Option<PathBuf>>,
    },
    /// Budget sweep with repetitions; writes records, aggregates and metadata.
    Bench {
        #[command(flatten)]
        source: GameArgs,
        /// TOML plan file; flags override its entries.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Comma-separated methods, e.g. `svakadd:k=2,permutation`.
        #[arg(long)]
        methods: Option<String>,
        /// Comma-separated ascending budgets.
        #[arg(long)]
        budgets: Option<String>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        solver: Option<ConstraintMode>,
        /// Record CSV path (aggregates and metadata go beside it).
        #[arg(long)]
        out: Option<PathBuf>,
        /// SVG plot of the aggregates.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Fill the wall_ms column (makes output machine dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Tabulate a game to a value-table file.
    Gen {
        #[command(flatten)]
        source: GameArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct GameArgs {
    /// Built-in game, e.g. `unanimity:n=3,S=1,2` or `glove:n=3,left=1,2`.
    #[arg(long)]
    pub game: Option<String>,
    /// Value-table file.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Oracle command line (split on whitespace).
    #[arg(long)]
    pub oracle: Option<String>,
    /// Player count of the oracle game.
    #[arg(long)]
    pub players: Option<usize>,
    /// CSV data for the total-correlation game.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Bins per column when discretizing `--data`.
    #[arg(long)]
    pub bins: Option<usize>,
}

/// A game source whose player count is known but which may not have been
/// started yet.
pub struct Prepared {
    pub n: PlayerCount,
    pub label: String,
    kind: Kind,
}

enum Kind {
    Ready(DynGame),
    Oracle(Vec<String>),
}

/// An opened game; oracle sessions are shut down by [`Opened::finish`].
pub struct Opened {
    pub game: DynGame,
    oracle: Option<Arc<OracleGame>>,
}

impl Opened {
    pub fn finish(self) -> Result<()> {
        drop(self.game);
        match self.oracle.map(Arc::try_unwrap) {
            Some(Ok(o)) => o.close(),
            _ => Ok(()),
        }
    }
}

impl Prepared {
    pub fn open(self) -> Result<Opened> {
        match self.kind {
            Kind::Ready(game) => Ok(Opened { game, oracle: None }),
            Kind::Oracle(cmd) => {
                let o = Arc::new(OracleGame::spawn(&cmd, self.n)?);
                Ok(Opened {
                    game: Box::new(o.clone()),
                    oracle: Some(o),
                })
            }
        }
    }
}

impl GameArgs {
    fn merge(mut self, plan: &PlanFile) -> Self {
        if self.game.is_none()
            && self.table.is_none()
            && self.oracle.is_none()
            && self.data.is_none()
        {
            self.game = plan.game.clone();
            self.table = plan.table.clone();
            self.oracle = plan.oracle.clone();
            self.data = plan.data.clone();
        }
        self.players = self.players.or(plan.players);
        self.bins = self.bins.or(plan.bins);
        self
    }

    /// Checks the flags and loads file-backed sources; oracles are not
    /// started.
    pub fn prepare(&self, cap: usize) -> Result<Prepared> {
        let given = [
            self.game.is_some(),
            self.table.is_some(),
            self.oracle.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        let spec = self
            .game
            .as_deref()
            .map(str::parse::<GameSpec>)
            .transpose()?;
        let wants_data =
            matches!(spec, Some(GameSpec::TotalCorrelation)) || (given == 0 && self.data.is_some());
        if given > 1 || (self.data.is_some() && !wants_data) {
            return Err(Error::Usage(
                "give exactly one of --game, --table, --oracle, --data".into(),
            ));
        }
        if self.players.is_some() && self.oracle.is_none() {
            return Err(Error::Usage("--players only applies to --oracle".into()));
        }
        if self.bins.is_some() && !wants_data {
            return Err(Error::Usage("--bins only applies to --data".into()));
        }
        if wants_data {
            let path = self
                .data
                .as_ref()
                .ok_or_else(|| Error::Usage("totalcorr needs --data <csv>".into()))?;
            let game = load_total_correlation(path, self.bins)?;
            let n = check_cap(game.players().get(), cap)?;
            return Ok(Prepared {
                n,
                label: format!("totalcorr:{}", path.display()),
                kind: Kind::Ready(Box::new(game)),
            });
        }
        if let Some(spec) = spec {
            let game = spec.build(cap)?;
            return Ok(Prepared {
                n: game.players(),
                label: spec.to_string(),
                kind: Kind::Ready(game),
            });
        }
        if let Some(path) = &self.table {
            let t = load_value_table(path, cap)?;
            return Ok(Prepared {
                n: t.n(),
                label: format!("table:{}", path.display()),
                kind: Kind::Ready(Box::new(t)),
            });
        }
        if let Some(cmd) = &self.oracle {
            let argv: Vec<String> = cmd.split_whitespace().map(str::to_owned).collect();
            if argv.is_empty() {
                return Err(Error::Usage("empty --oracle command".into()));
            }
            let n = self
                .players
                .ok_or_else(|| Error::Usage("--oracle needs --players <n>".into()))?;
            let n = PlayerCount::with_cap(n, cap)?;
            return Ok(Prepared {
                n,
                label: format!("oracle:{cmd}"),
                kind: Kind::Oracle(argv),
            });
        }
        Err(Error::Usage(
            "no game given; use --game, --table, --oracle or --data".into(),
        ))
    }
}

fn check_cap(n: usize, cap: usize) -> Result<PlayerCount> {
    Ok(PlayerCount::with_cap(n, cap)?)
}

/// Bench settings read from a TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub game: Option<String>,
    pub table: Option<PathBuf>,
    pub oracle: Option<String>,
    pub players: Option<usize>,
    pub data: Option<PathBuf>,
    pub bins: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub budgets: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub solver: Option<String>,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub timing: Option<bool>,
}

impl PlanFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
    }
}

fn parse_methods<S: AsRef<str>>(items: &[S]) -> Result<Vec<Method>> {
    items
        .iter()
        .map(|s| s.as_ref().trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Method>().map_err(|e| Error::Usage(e.to_string())))
        .collect()
}

fn parse_budgets(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Usage(format!("bad budget {t:?}")))
        })
        .collect()
}

/// Doubling grid from the first power of two above `n + 2` up to `2^n`.
pub fn default_budgets(n: PlayerCount) -> Vec<usize> {
    let max = n.coalition_count() as usize;
    let mut b = (n.get() + 3).next_power_of_two().min(max);
    let mut out = vec![];
    loop {
        out.push(b);
        if b >= max {
            return out;
        }
        b *= 2;
    }
}

pub fn default_methods(n: PlayerCount) -> Vec<Method> {
    let mut m: Vec<Method> = (1..=3.min(n.get()))
        .map(|k| Method::SvaKadd { k })
        .collect();
    m.extend([Method::Permutation, Method::Stratified, Method::KernelShap]);
    m
}

fn output_path(dir: &Option<PathBuf>, given: Option<PathBuf>, default_name: &str) -> PathBuf {
    match given {
        Some(p) => p,
        None => dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("."))
            .join(default_name),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => {
            std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
        }
        _ => Ok(()),
    }
}

fn print_shapley(out: &mut dyn Write, phi: &[f64]) -> std::io::Result<()> {
    for (i, v) in phi.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, Real(*v))?;
    }
    writeln!(out, "sum,{}", Real(phi.iter().sum::<f64>()))
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

/// Runs a parsed command line, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let cap = cli.max_players;
    if cap == 0 || cap > shapkadd_core::MAX_PLAYERS {
        return Err(Error::Usage(format!(
            "--max-players must be in 1..={}",
            shapkadd_core::MAX_PLAYERS
        )));
    }
    let dir = cli.output_dir.clone();
    match cli.command {
        Command::Exact {
            source,
            interactions,
            csv,
        } => {
            let prepared = source.prepare(cap)?;
            let n = prepared.n;
            if let Some(k) = interactions {
                if k > n.get() {
                    return Err(Error::Usage(format!("--interactions {k} exceeds n = {n}")));
                }
            }
            if n.get() > EXACT_WARN_PLAYERS {
                log::warn!("exact computation over 2^{n} coalitions");
            }
            if let Some(p) = &csv {
                ensure_parent(p)?;
            }
            let opened = prepared.open()?;
            let table = ValueTable::from_game(&opened.game)?;
            opened.finish()?;
            let phi = exact_shapley(&table)?;
            writeln!(out, "# exact Shapley values, n={n}").map_err(stdout_err)?;
            print_shapley(out, &phi).map_err(stdout_err)?;
            if let Some(k) = interactions.filter(|&k| k > 0) {
                let iv = exact_interactions(&table, k)?;
                writeln!(out, "# interaction indices up to order {k}").map_err(stdout_err)?;
                out.write_all(format_interactions(&iv).as_bytes())
                    .map_err(stdout_err)?;
            }
            if let Some(p) = csv {
                let mut text = String::from("player,shapley\n");
                for (i, v) in phi.iter().enumerate() {
                    text.push_str(&format!("{},{}\n", i + 1, Real(*v)));
                }
                std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
            }
            Ok(())
        }
        Command::Approx {
            source,
            method,
            k,
            budget,
            solver,
            emit_interactions,
        } => {
            let prepared = source.prepare(cap)?;
            let n = prepared.n;
            let method = match (method.as_str(), k) {
                ("svakadd", Some(k)) => Method::SvaKadd { k },
                ("svakadd", None) => return Err(Error::Usage("svakadd needs --k".into())),
                (m, k) => {
                    let parsed = m
                        .parse::<Method>()
                        .map_err(|e| Error::Usage(e.to_string()))?;
                    if let Some(k) = k {
                        if k != parsed.degree() {
                            return Err(Error::Usage(format!(
                                "--k {k} does not apply to {parsed}"
                            )));
                        }
                    }
                    parsed
                }
            };
            if let Method::SvaKadd { k } = method {
                if k == 0 || k > n.get() {
                    return Err(Error::Usage(format!("--k must be in 1..={n}")));
                }
            }
            let min = method.min_budget(n);
            if budget < min || budget as u64 > n.coalition_count() {
                return Err(Error::Usage(format!(
                    "{method} needs a budget in {min}..={} for n = {n}",
                    n.coalition_count()
                )));
            }
            let iv_path = match emit_interactions {
                Some(p) => {
                    if !matches!(method, Method::SvaKadd { .. }) {
                        return Err(Error::Usage(
                            "--emit-interactions needs --method svakadd".into(),
                        ));
                    }
                    let p = output_path(&dir, p, "interactions.csv");
                    ensure_parent(&p)?;
                    Some(p)
                }
                None => None,
            };
            let opts = SolverOptions {
                constraint_mode: solver,
                ..SolverOptions::default()
            };
            let seed = cli.seed.unwrap_or(0);
            let opened = prepared.open()?;
            let offset = opened.game.value(Coalition::EMPTY)?;
            let game = normalize(&opened.game)?;
            if offset != 0.0 {
                log::info!("normalizing: subtracting v(∅) = {offset}");
            }
            let est = match method {
                Method::SvaKadd { k } => {
                    let mut cfg = EstimatorConfig::new(k, budget, seed).with_solver(opts);
                    cfg.return_interactions = iv_path.is_some();
                    run_svakadd(&game, &cfg)?
                }
                other => run_method(&game, other, budget, seed, &opts)?,
            };
            drop(game);
            opened.finish()?;
            writeln!(
                out,
                "# {method} budget={budget} seed={seed} solver={solver}"
            )
            .map_err(stdout_err)?;
            print_shapley(out, &est.shapley).map_err(stdout_err)?;
            writeln!(out, "evaluations,{}", est.evaluations).map_err(stdout_err)?;
            writeln!(out, "underdetermined,{}", est.underdetermined).map_err(stdout_err)?;
            if offset != 0.0 {
                writeln!(out, "normalized_offset,{}", Real(offset)).map_err(stdout_err)?;
            }
            if let (Some(p), Some(iv)) = (iv_path, &est.interactions) {
                write_interactions(iv, &p)?;
            }
            Ok(())
        }
        Command::Bench {
            source,
            plan,
            methods,
            budgets,
            reps,
            solver,
            out: out_csv,
            plot,
            timing,
        } => {
            let file = match &plan {
                Some(p) => PlanFile::load(p)?,
                None => PlanFile::default(),
            };
            let source = source.merge(&file);
            let prepared = source.prepare(cap)?;
            let n = prepared.n;
            let methods = match (&methods, &file.methods) {
                (Some(m), _) => parse_methods(&m.split(',').collect::<Vec<_>>())?,
                (None, Some(m)) => parse_methods(m)?,
                (None, None) => default_methods(n),
            };
            let budgets = match (&budgets, &file.budgets) {
                (Some(b), _) => parse_budgets(b)?,
                (None, Some(b)) => b.clone(),
                (None, None) => default_budgets(n),
            };
            let mode = match (solver, &file.solver) {
                (Some(m), _) => m,
                (None, Some(s)) => s
                    .parse()
                    .map_err(|e: shapkadd_core::Error| Error::Usage(e.to_string()))?,
                (None, None) => ConstraintMode::default(),
            };
            let mut bp = BenchmarkPlan::new(methods, budgets);
            bp.repetitions = reps.or(file.reps).unwrap_or(100);
            bp.seed_base = cli.seed.or(file.seed).unwrap_or(0);
            bp.workers = cli.workers.or(file.workers).unwrap_or(0);
            bp.solver = SolverOptions {
                constraint_mode: mode,
                ..SolverOptions::default()
            };
            bp.timing = timing || file.timing.unwrap_or(false);
            bp.validate(n)?;
            let csv_path = output_path(&dir, out_csv.or(file.out.clone()), "bench.csv");
            let plot_path = plot.or(file.plot.clone());
            ensure_parent(&csv_path)?;
            if let Some(p) = &plot_path {
                ensure_parent(p)?;
            }
            let label = prepared.label.clone();
            let opened = prepared.open()?;
            let report = run_benchmark(&opened.game, &bp)?;
            opened.finish()?;
            emit_csv(&report.records, &csv_path)?;
            Metadata::new(label, &bp, &report).write(metadata_path(&csv_path))?;
            if let Some(p) = &plot_path {
                emit_plot(&report.aggregates, p)?;
            }
            writeln!(
                out,
                "# {} records written to {}",
                report.records.len(),
                csv_path.display()
            )
            .map_err(stdout_err)?;
            writeln!(out, "method,k,budget,mean_mse,stderr_mse").map_err(stdout_err)?;
            for a in &report.aggregates {
                writeln!(
                    out,
                    "{},{},{},{:e},{:e}",
                    a.method.name(),
                    a.k,
                    a.budget,
                    a.mean_mse,
                    a.stderr_mse
                )
                .map_err(stdout_err)?;
            }
            Ok(())
        }
        Command::Gen {
            source,
            out: out_path,
        } => {
            let prepared = source.prepare(cap)?;
            let path = output_path(&dir, out_path, "game.txt");
            ensure_parent(&path)?;
            let n = prepared.n;
            let opened = prepared.open()?;
            let table = ValueTable::from_game(&opened.game)?;
            opened.finish()?;
            save_value_table(&table, &path)?;
            writeln!(
                out,
                "# wrote {} coalitions (n={n}) to {}",
                table.values().len(),
                path.display()
            )
            .map_err(stdout_err)?;
            Ok(())
        }
    }
}

/// Parses `args`, runs, and returns the process exit code. Diagnostics go
/// to `err`.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() {
                crate::error::EXIT_USAGE
            } else {
                0
            };
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Log filter for a `-v` count.
pub fn log_level(verbose: u8) -> log::LevelFilter {
    match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    }
}
