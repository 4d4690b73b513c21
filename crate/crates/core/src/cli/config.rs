//! TOML experiment files.
//!
//! ```toml
//! [source]
//! pmf = [0.5, 0.5]
//!
//! [channel]
//! bsc = 0.05
//!
//! [code]
//! k = 2
//! n = 8
//! palette = [[4, 4]]
//! assignment = "all_first"
//! delta = 0.01
//!
//! [metric]
//! kind = "mmi"
//!
//! [solver]
//! kind = "discrete"
//! grid = 64
//!
//! [simulation]
//! trials = 1000
//! seed = 1
//! mode = "fresh"
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::codebook::{AssignmentRule, CodeConfig, ConstructMode};
use crate::error::{Error, Result};
use crate::exponents::{Channel, DistanceSpec, MetricSpec, SolverSpec, SourceSpec};
use crate::sim::{PairFactor, SimMode};
use crate::types::{Alphabet, Pmf, TypeVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub pmf: Vec<f64>,
}

/// Either a full matrix or one of the named channels.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Crossover probability of a binary symmetric channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bsc: Option<f64>,
    /// Erasure probability of a binary erasure channel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bec: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AssignmentField {
    Named(String),
    Explicit(Vec<usize>),
}

impl Default for AssignmentField {
    fn default() -> Self {
        AssignmentField::Named("all_first".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    pub k: u64,
    pub n: u64,
    /// Palette as type counts with denominator `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub palette: Option<Vec<Vec<u64>>>,
    /// Palette as distributions, rounded to the nearest types.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub palette_pmf: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub assignment: AssignmentField,
    #[serde(default)]
    pub delta: f64,
    /// Overrides the default `Δ_i = −(R_i + δ)`.
    #[serde(
        default,
        with = "crate::ext::inf_floats",
        skip_serializing_if = "Option::is_none"
    )]
    pub thresholds: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[default]
    Mmi,
    Csiszar,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    #[serde(default)]
    pub kind: MetricKind,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    #[default]
    NegMi,
    /// `d(P) = Σ P(a, b) D[a][b]` for a symmetric cost table `D`.
    Table,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceSection {
    #[serde(default)]
    pub kind: DistanceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<f64>>>,
    /// Whitespace-separated table file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKindField {
    #[default]
    Discrete,
    Continuous,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub kind: SolverKindField,
    /// Grid denominator `L`; defaults by alphabet size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeField {
    Fixed,
    #[default]
    Fresh,
}

impl From<ModeField> for SimMode {
    fn from(m: ModeField) -> SimMode {
        match m {
            ModeField::Fixed => SimMode::FixedCodebook,
            ModeField::Fresh => SimMode::FreshCodebookPerTrial,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: ModeField,
    #[serde(default = "default_construct")]
    pub construct: ConstructMode,
    /// Block lengths for the slope experiment; `k = n k₀ / n₀`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_list: Vec<u64>,
    #[serde(default)]
    pub rcu_factor: PairFactor,
}

fn default_trials() -> u64 {
    1000
}

fn default_construct() -> ConstructMode {
    ConstructMode::Enumerate
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            trials: default_trials(),
            seed: 0,
            mode: ModeField::default(),
            construct: default_construct(),
            n_list: Vec::new(),
            rcu_factor: PairFactor::default(),
        }
    }
}

/// A complete experiment file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: SourceSection,
    pub channel: ChannelSection,
    pub code: CodeSection,
    #[serde(default)]
    pub metric: MetricSection,
    #[serde(default)]
    pub distance: DistanceSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

/// Everything an experiment needs, validated.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub code: CodeConfig,
    pub channel: Channel,
    pub solver: SolverSpec,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(config_error(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses TOML; errors carry the line and column of the offending item.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error(e.to_string()))
    }

    pub fn channel(&self) -> Result<Channel> {
        let c = &self.channel;
        let given = [c.matrix.is_some(), c.bsc.is_some(), c.bec.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(config_error(
                "[channel] needs exactly one of `matrix`, `bsc`, `bec`",
            ));
        }
        if let Some(p) = c.bsc {
            check_prob("bsc", p)?;
            return Channel::bsc(p);
        }
        if let Some(e) = c.bec {
            check_prob("bec", e)?;
            return Channel::bec(e);
        }
        Channel::new(c.matrix.clone().unwrap_or_default())
    }

    pub fn solver(&self, alphabet: usize) -> Result<SolverSpec> {
        let s = &self.solver;
        let spec = match s.kind {
            SolverKindField::Discrete => {
                if s.restarts.is_some() || s.max_iterations.is_some() || s.tolerance.is_some() {
                    return Err(config_error(
                        "`restarts`, `max_iterations` and `tolerance` apply to the continuous solver",
                    ));
                }
                SolverSpec::discrete(s.grid.unwrap_or_else(|| SolverSpec::default_grid(alphabet)))
            }
            SolverKindField::Continuous => {
                if s.grid.is_some() {
                    return Err(config_error("`grid` applies to the discrete solver"));
                }
                let SolverSpec::Continuous {
                    restarts,
                    max_iterations,
                    tolerance,
                } = SolverSpec::continuous()
                else {
                    unreachable!()
                };
                SolverSpec::Continuous {
                    restarts: s.restarts.unwrap_or(restarts),
                    max_iterations: s.max_iterations.unwrap_or(max_iterations),
                    tolerance: s.tolerance.unwrap_or(tolerance),
                }
            }
        };
        spec.validate().map_err(|e| config_error(e.to_string()))?;
        Ok(spec)
    }

    fn distance(&self, q: usize, base: Option<&Path>) -> Result<DistanceSpec> {
        let d = &self.distance;
        match d.kind {
            DistanceKind::NegMi => {
                if d.table.is_some() || d.path.is_some() {
                    return Err(config_error("`table` and `path` need kind = \"table\""));
                }
                Ok(DistanceSpec::NegMi)
            }
            DistanceKind::Table => {
                let table = match (&d.table, &d.path) {
                    (Some(t), None) => t.clone(),
                    (None, Some(p)) => {
                        let p = match base {
                            Some(b) if p.is_relative() => b.join(p),
                            _ => p.clone(),
                        };
                        let text = std::fs::read_to_string(&p).map_err(|e| {
                            config_error(format!("cannot read {}: {e}", p.display()))
                        })?;
                        parse_table(&text)?
                    }
                    _ => {
                        return Err(config_error(
                            "kind = \"table\" needs exactly one of `table`, `path`",
                        ))
                    }
                };
                table_distance(table, q)
            }
        }
    }

    pub fn assignment_rule(&self) -> Result<AssignmentRule> {
        Ok(match &self.code.assignment {
            AssignmentField::Named(s) => match s.as_str() {
                "all_first" => AssignmentRule::AllFirst,
                "cyclic" => AssignmentRule::Cyclic,
                other => {
                    return Err(config_error(format!(
                        "unknown assignment {other:?} (all_first, cyclic, or a list)"
                    )))
                }
            },
            AssignmentField::Explicit(v) => AssignmentRule::Explicit(v.clone()),
        })
    }

    /// Validates every section and builds the code, channel and solver.
    /// Relative paths are resolved against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<Experiment> {
        let c = &self.code;
        let pmf = Pmf::new(self.source.pmf.clone())?;
        let channel = self.channel()?;
        let q = channel.inputs();
        let input = Alphabet::new(q)?;
        if c.k == 0 || c.n == 0 {
            return Err(config_error("k and n must be positive"));
        }
        if !(c.delta >= 0.0 && c.delta.is_finite()) {
            return Err(config_error(format!("delta must be ≥ 0, got {}", c.delta)));
        }
        let palette = match (&c.palette, &c.palette_pmf) {
            (Some(p), None) => p
                .iter()
                .map(|t| TypeVector::new(t.clone()))
                .collect::<Result<Vec<_>>>()?,
            (None, Some(p)) => p
                .iter()
                .map(|t| Ok(TypeVector::quantize(&Pmf::new(t.clone())?, c.n)?.0))
                .collect::<Result<Vec<_>>>()?,
            _ => {
                return Err(config_error(
                    "[code] needs exactly one of `palette`, `palette_pmf`",
                ))
            }
        };
        let rule = self.assignment_rule()?;
        let mut code = CodeConfig::new(
            SourceSpec::new(pmf.clone()),
            input,
            c.k,
            c.n,
            palette,
            &rule,
            c.delta,
        )?
        .with_metric(match self.metric.kind {
            MetricKind::Mmi => MetricSpec::Mmi,
            MetricKind::Csiszar => MetricSpec::Csiszar,
        })
        .with_distance(self.distance(q, base)?);
        if let Some(t) = &c.thresholds {
            code = code.with_thresholds(t.clone())?;
        }
        let sim = &self.simulation;
        if sim.trials == 0 {
            return Err(config_error("simulation.trials must be positive"));
        }
        for &n in &sim.n_list {
            if n == 0 || !(n * c.k).is_multiple_of(c.n) {
                return Err(config_error(format!(
                    "n_list entry {n} does not give an integer k at t = {}/{}",
                    c.k, c.n
                )));
            }
        }
        let solver = self.solver(q.max(pmf.len()))?;
        Ok(Experiment {
            config: self.clone(),
            code,
            channel,
            solver,
        })
    }
}

fn parse_table(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .enumerate()
        .map(|(r, l)| {
            l.split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| {
                        config_error(format!("distance table row {}: cannot parse {t:?}", r + 1))
                    })
                })
                .collect()
        })
        .collect()
}

fn table_distance(table: Vec<Vec<f64>>, q: usize) -> Result<DistanceSpec> {
    if table.len() != q || table.iter().any(|r| r.len() != q) {
        return Err(config_error(format!("distance table must be {q} × {q}")));
    }
    for a in 0..q {
        for b in 0..q {
            if table[a][b] != table[b][a] || table[a][b].is_nan() {
                return Err(config_error("distance table must be symmetric"));
            }
        }
    }
    let flat: Vec<f64> = table.into_iter().flatten().collect();
    Ok(DistanceSpec::Custom(Arc::new(move |p| {
        p.probs().iter().zip(&flat).map(|(a, b)| a * b).sum()
    })))
}

/// Reads and builds an experiment file.
pub fn load(path: &Path) -> Result<Experiment> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ExperimentConfig::from_toml(&text)
        .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    cfg.build(path.parent())
}
