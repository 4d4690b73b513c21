//! The `rgv-jscc` command-line tool: argument parsing, orchestration and
//! result documents.

pub mod config;
mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub use config::{load, Experiment, ExperimentConfig};
pub use verify::{run_verification, Check, VerificationReport, VerifyLevel};

use crate::codebook::{construct_traced, feasibility_check, FeasibilityReport};
use crate::error::{Error, Result};
use crate::exponents::{
    expurgated_exponent, random_coding_exponent, rgv_min_term, source_reliability, ExponentResult,
    MetricSpec, SolverSpec,
};
use crate::ext::ExtReal;
use crate::rng::trial_rng;
use crate::sim::{
    estimate_error_probability, exponent_slope_experiment, finite_n_rcu_bound, CodeTemplate,
    ErrorEstimate, RcuBound, SlopeRow, RCU_MAX_N,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Stream of the master seed used by `construct`.
pub const CONSTRUCT_STREAM: u64 = 0;

#[derive(Parser, Debug)]
#[command(
    name = "rgv-jscc",
    version,
    about = "RGV joint source-channel codes: exponents, construction, simulation"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores); results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fixed,
    Fresh,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Error exponents for every source type and type pair.
    Exponents {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for CSV tables.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Builds one codebook and writes it in text form.
    Construct {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo error probability, finite-n bound and slopes.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Checks construction invariants and exponent inequalities.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, value_enum, default_value = "quick")]
        level: VerifyLevel,
        /// Also check this codebook file against the configuration.
        #[arg(long)]
        codebook: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A value, or the error that prevented computing it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome<T> {
    Value(T),
    Failed { error: String },
}

impl<T> Outcome<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Outcome::Value(v) => Some(v),
            Outcome::Failed { .. } => None,
        }
    }
}

impl<T> From<Result<T>> for Outcome<T> {
    fn from(r: Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Value(v),
            Err(e) => Outcome::Failed {
                error: e.to_string(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeRow {
    pub index: usize,
    pub source_type: Vec<u64>,
    pub palette_index: usize,
    pub rate: f64,
    pub source_reliability: Outcome<ExponentResult>,
    pub random_coding: Outcome<ExponentResult>,
    pub expurgated: Outcome<ExponentResult>,
    /// `t e + E_r`.
    pub random_coding_total: Option<ExtReal>,
    /// `t e + E'_ex`.
    pub expurgated_total: Option<ExtReal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub i: usize,
    pub j: usize,
    pub source_term: Option<ExtReal>,
    pub min_term: Outcome<ExponentResult>,
    pub total: Option<ExtReal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RgvMatrix {
    pub metric: String,
    pub pairs: Vec<PairRow>,
    /// Minimum over the entries that were computed.
    pub overall: Option<ExtReal>,
    pub argmin: Option<(usize, usize)>,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentsReport {
    pub solver: SolverSpec,
    pub types: Vec<TypeRow>,
    pub random_coding_overall: Option<ExtReal>,
    pub expurgated_overall: Option<ExtReal>,
    pub rgv: Vec<RgvMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundField {
    Computed(RcuBound),
    Skipped { skipped: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub estimate: ErrorEstimate,
    pub rcu_bound: BoundField,
    pub feasibility: Outcome<FeasibilityReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slopes: Vec<SlopeRow>,
}

/// Machine-readable output of every subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// The configuration after command-line overrides.
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<ExponentsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
}

impl ResultDocument {
    fn new(command: &str, config: ExperimentConfig) -> Self {
        ResultDocument {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.simulation.seed,
            config,
            exponents: None,
            simulation: None,
            verification: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::EmptyFeasibleSet { .. } | Error::RejectionBudgetExceeded { .. } => EXIT_INFEASIBLE,
        _ => EXIT_CONFIG,
    }
}

fn min_entry(
    values: impl Iterator<Item = (usize, Option<ExtReal>)>,
) -> (Option<ExtReal>, Option<usize>) {
    let mut best: (Option<ExtReal>, Option<usize>) = (None, None);
    for (k, v) in values {
        if let Some(v) = v {
            if best.0.is_none_or(|b| v < b) {
                best = (Some(v), Some(k));
            }
        }
    }
    best
}

fn scaled(t: f64, e: &Outcome<ExponentResult>) -> Option<ExtReal> {
    e.value().map(|r| match r.value {
        ExtReal::Finite(v) => ExtReal::Finite(t * v),
        ExtReal::Infinite => ExtReal::Infinite,
    })
}

fn add(a: Option<ExtReal>, b: &Outcome<ExponentResult>) -> Option<ExtReal> {
    Some(a? + b.value()?.value)
}

/// Every exponent table for the experiment; failures are recorded per entry.
pub fn exponents_report(exp: &Experiment) -> ExponentsReport {
    let cfg = &exp.code;
    let w = &exp.channel;
    let solver = &exp.solver;
    let palette = cfg.palette_pmfs();
    let t = cfg.t();
    let types: Vec<TypeRow> = (0..cfg.num_source_types())
        .map(|i| {
            let p_i = &cfg.source_types()[i];
            let rate = cfg.rate(i);
            let q = cfg.codeword_type(i).to_pmf();
            let e: Outcome<_> = source_reliability(p_i.entropy(), cfg.source(), solver).into();
            let rc: Outcome<_> = random_coding_exponent(&q, w, rate, solver).into();
            let ex: Outcome<_> = expurgated_exponent(&q, &palette, w, rate, solver).into();
            let te = scaled(t, &e);
            TypeRow {
                index: i,
                source_type: p_i.counts().to_vec(),
                palette_index: cfg.assignment()[i],
                rate,
                random_coding_total: add(te, &rc),
                expurgated_total: add(te, &ex),
                source_reliability: e,
                random_coding: rc,
                expurgated: ex,
            }
        })
        .collect();
    let rgv = [MetricSpec::Mmi, MetricSpec::Csiszar]
        .into_iter()
        .map(|metric| {
            let mcfg = cfg.clone().with_metric(metric.clone());
            let nk = mcfg.num_source_types();
            let pairs: Vec<PairRow> = (0..nk * nk)
                .map(|z| {
                    let (i, j) = (z / nk, z % nk);
                    let source_term = scaled(t, &types[i].source_reliability);
                    let min_term: Outcome<_> = rgv_min_term(i, j, &mcfg, w, solver).into();
                    PairRow {
                        i,
                        j,
                        total: add(source_term, &min_term),
                        source_term,
                        min_term,
                    }
                })
                .collect();
            let (overall, k) = min_entry(pairs.iter().map(|p| p.total).enumerate());
            RgvMatrix {
                metric: metric.name().into(),
                failures: pairs.iter().filter(|p| p.total.is_none()).count(),
                argmin: k.map(|k| (pairs[k].i, pairs[k].j)),
                overall,
                pairs,
            }
        })
        .collect();
    ExponentsReport {
        solver: *solver,
        random_coding_overall: min_entry(types.iter().map(|r| r.random_coding_total).enumerate()).0,
        expurgated_overall: min_entry(types.iter().map(|r| r.expurgated_total).enumerate()).0,
        types,
        rgv,
    }
}

/// Template that reproduces the experiment's code at other block lengths.
pub fn template_of(exp: &Experiment) -> Result<CodeTemplate> {
    let cfg = &exp.code;
    Ok(CodeTemplate {
        source: cfg.source().clone(),
        input: cfg.input(),
        t_num: cfg.k(),
        t_den: cfg.n(),
        palette: cfg.palette_pmfs(),
        assignment: exp.config.assignment_rule()?,
        delta: cfg.delta(),
        metric: cfg.metric().clone(),
        distance: cfg.distance().clone(),
    })
}

pub fn simulation_report(exp: &Experiment) -> Result<SimulationReport> {
    let sim = &exp.config.simulation;
    let cfg = &exp.code;
    let estimate = estimate_error_probability(
        cfg,
        &exp.channel,
        sim.seed,
        sim.trials,
        sim.mode.into(),
        sim.construct,
    )?;
    let rcu_bound = if cfg.n() > RCU_MAX_N {
        BoundField::Skipped {
            skipped: "n exceeds enumeration cap".into(),
        }
    } else {
        match finite_n_rcu_bound(cfg, &exp.channel, sim.rcu_factor) {
            Ok(b) => BoundField::Computed(b),
            Err(e) => BoundField::Skipped {
                skipped: e.to_string(),
            },
        }
    };
    let slopes = if sim.n_list.is_empty() {
        Vec::new()
    } else {
        if exp.config.code.thresholds.is_some() {
            return Err(Error::Config(
                "n_list cannot be combined with explicit thresholds".into(),
            ));
        }
        let template = template_of(exp)?;
        exponent_slope_experiment(
            &template,
            &exp.channel,
            &sim.n_list,
            sim.trials,
            sim.seed,
            sim.mode.into(),
            sim.construct,
        )
    };
    Ok(SimulationReport {
        estimate,
        rcu_bound,
        feasibility: feasibility_check(cfg).into(),
        slopes,
    })
}

fn fmt_ext(x: Option<ExtReal>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn outcome_value(o: &Outcome<ExponentResult>) -> String {
    o.value().map_or_else(String::new, |r| r.value.to_string())
}

fn write_csv(dir: &Path, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    let io = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))
}

fn exponents_csv(dir: &Path, r: &ExponentsReport) -> Result<()> {
    let types = r
        .types
        .iter()
        .map(|t| {
            vec![
                t.index.to_string(),
                t.source_type
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(" "),
                t.palette_index.to_string(),
                t.rate.to_string(),
                outcome_value(&t.source_reliability),
                outcome_value(&t.random_coding),
                outcome_value(&t.expurgated),
                fmt_ext(t.random_coding_total),
                fmt_ext(t.expurgated_total),
            ]
        })
        .collect();
    write_csv(
        dir,
        "types.csv",
        &[
            "type",
            "counts",
            "palette",
            "rate",
            "source_reliability",
            "random_coding",
            "expurgated",
            "random_coding_total",
            "expurgated_total",
        ],
        types,
    )?;
    let pairs = r
        .rgv
        .iter()
        .flat_map(|m| {
            m.pairs.iter().map(|p| {
                vec![
                    m.metric.clone(),
                    p.i.to_string(),
                    p.j.to_string(),
                    fmt_ext(p.source_term),
                    outcome_value(&p.min_term),
                    fmt_ext(p.total),
                ]
            })
        })
        .collect();
    write_csv(
        dir,
        "pairs.csv",
        &["metric", "i", "j", "source_term", "min_term", "total"],
        pairs,
    )
}

fn slopes_csv(dir: &Path, rows: &[SlopeRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| {
            let e = r.estimate.as_ref();
            vec![
                r.n.to_string(),
                r.k.to_string(),
                e.map_or_else(String::new, |e| e.trials.to_string()),
                e.map_or_else(String::new, |e| e.errors.to_string()),
                e.map_or_else(String::new, |e| e.p_hat.to_string()),
                fmt_ext(r.slope),
                fmt_ext(r.slope_low),
                fmt_ext(r.slope_high),
            ]
        })
        .collect();
    write_csv(
        dir,
        "slopes.csv",
        &[
            "n",
            "k",
            "trials",
            "errors",
            "p_hat",
            "slope",
            "slope_low",
            "slope_high",
        ],
        rows,
    )
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())
                .and_then(|_| s.flush())
                .map_err(|e| Error::Config(e.to_string()))
        }
    }
}

fn load_with(
    path: &Path,
    seed: Option<u64>,
    trials: Option<u64>,
    mode: Option<ModeArg>,
) -> Result<Experiment> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.simulation.seed = s;
    }
    if let Some(t) = trials {
        cfg.simulation.trials = t;
    }
    if let Some(m) = mode {
        cfg.simulation.mode = match m {
            ModeArg::Fixed => config::ModeField::Fixed,
            ModeArg::Fresh => config::ModeField::Fresh,
        };
    }
    cfg.build(path.parent())
}

/// Runs one subcommand and returns the process exit status. Diagnostics go
/// to standard error.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be positive");
            return EXIT_CONFIG;
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Exponents { config, out, csv } => {
            let exp = load_with(&config, None, None, None)?;
            let mut doc = ResultDocument::new("exponents", exp.config.clone());
            let report = exponents_report(&exp);
            if let Some(dir) = csv {
                exponents_csv(&dir, &report)?;
            }
            doc.exponents = Some(report);
            emit(out.as_deref(), &doc.to_json()?)?;
            Ok(EXIT_OK)
        }
        Command::Construct { config, seed, out } => {
            let exp = load_with(&config, seed, None, None)?;
            let seed = exp.config.simulation.seed;
            let (cb, _) = construct_traced(
                &exp.code,
                &mut trial_rng(seed, CONSTRUCT_STREAM),
                exp.config.simulation.construct,
                Some(seed),
            )?;
            emit(out.as_deref(), &cb.to_text()?)?;
            Ok(EXIT_OK)
        }
        Command::Simulate {
            config,
            seed,
            trials,
            mode,
            out,
            csv,
        } => {
            let exp = load_with(&config, seed, trials, mode)?;
            let mut doc = ResultDocument::new("simulate", exp.config.clone());
            let report = simulation_report(&exp)?;
            if let Some(dir) = csv {
                slopes_csv(&dir, &report.slopes)?;
            }
            doc.simulation = Some(report);
            emit(out.as_deref(), &doc.to_json()?)?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            config,
            seed,
            trials,
            level,
            codebook,
            out,
        } => {
            let exp = load_with(&config, seed, trials, None)?;
            let mut doc = ResultDocument::new("verify", exp.config.clone());
            let report = run_verification(&exp, level, codebook.as_deref())?;
            for c in &report.checks {
                eprintln!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            let passed = report.passed;
            doc.verification = Some(report);
            emit(out.as_deref(), &doc.to_json()?)?;
            Ok(if passed { EXIT_OK } else { EXIT_VERIFY })
        }
    }
}

/// Parses the process arguments; usage errors exit with status 1.
pub fn main_entry() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            code
        }
    }
}
