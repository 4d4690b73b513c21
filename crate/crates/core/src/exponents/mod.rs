//! Error-exponent evaluators: source reliability, random-coding and
//! expurgated exponents, and the pairwise RGV exponent.
//!
//! Every minimization has two interchangeable solvers selected by
//! [`SolverSpec`]: exhaustive search over joint types of a fixed denominator,
//! and a continuous minimizer.

mod continuous;
mod discrete;
mod mirror;
mod model;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use discrete::ENUMERATION_CAP;
pub use model::{
    bhattacharyya_distance, Channel, CustomDistance, CustomMetric, DistanceSpec, ExponentResult,
    MetricSpec, SolverKind, SolverMetadata, SolverSpec, SourceSpec,
};

use crate::codebook::CodeConfig;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::types::{Pmf, TypeVector};

/// `max(x, 0)`.
#[inline]
pub fn pos_part(x: f64) -> f64 {
    x.max(0.0)
}

/// `e(R, P_V) = min_{H(Q) ≥ R} D(Q‖P_V)`.
pub fn source_reliability(
    rate: f64,
    src: &SourceSpec,
    solver: &SolverSpec,
) -> Result<ExponentResult> {
    solver.validate()?;
    match *solver {
        SolverSpec::DiscreteExhaustive { grid } => discrete::source_reliability(rate, src, grid),
        SolverSpec::Continuous { .. } => Ok(continuous::source_reliability(rate, src)),
    }
}

/// `E_r(Q, R) = min_{P_X = Q} D(P‖Q×W) + |I_P(X;Y) − R|⁺`.
pub fn random_coding_exponent(
    q: &Pmf,
    w: &Channel,
    rate: f64,
    solver: &SolverSpec,
) -> Result<ExponentResult> {
    solver.validate()?;
    model::check_pmf_len(q, w.inputs())?;
    match *solver {
        SolverSpec::DiscreteExhaustive { grid } => {
            discrete::random_coding_exponent(q, w, rate, grid)
        }
        SolverSpec::Continuous { tolerance, .. } => {
            Ok(continuous::random_coding_exponent(q, w, rate, tolerance))
        }
    }
}

/// `E'_ex(Q, 𝒬, R)`: minimum of `E_Λ[d_W] + I(Λ) − R` over couplings with
/// `Λ_X = Q`, `Λ_X̄ ∈ 𝒬` and `I(Λ) ≤ R`.
///
/// The value is the raw minimum and may be negative when `R` is large.
pub fn expurgated_exponent(
    q: &Pmf,
    palette: &[Pmf],
    w: &Channel,
    rate: f64,
    solver: &SolverSpec,
) -> Result<ExponentResult> {
    solver.validate()?;
    if palette.is_empty() {
        return Err(Error::InvalidConfig("palette is empty".into()));
    }
    model::check_pmf_len(q, w.inputs())?;
    for p in palette {
        model::check_pmf_len(p, w.inputs())?;
    }
    match *solver {
        SolverSpec::DiscreteExhaustive { grid } => {
            discrete::expurgated_exponent(q, palette, w, rate, grid)
        }
        SolverSpec::Continuous { tolerance, .. } => Ok(continuous::expurgated_exponent(
            q, palette, w, rate, tolerance,
        )),
    }
}

/// Data of the minimization over `Γ_ij`.
pub(crate) struct PairProblem<'a> {
    pub cfg: &'a CodeConfig,
    pub w: &'a Channel,
    pub metric: &'a MetricSpec,
    pub i: usize,
    pub j: usize,
    pub q_i: &'a Pmf,
    pub q_j: &'a Pmf,
    pub rate_i: f64,
    pub rate_j: f64,
    /// `max(Δ_i, Δ_j)`.
    pub min_distance: f64,
}

fn check_channel(cfg: &CodeConfig, w: &Channel) -> Result<()> {
    if cfg.input().size() != w.inputs() {
        return Err(Error::DimensionMismatch(cfg.input().size(), w.inputs()));
    }
    Ok(())
}

fn check_index(cfg: &CodeConfig, i: usize) -> Result<()> {
    if i >= cfg.num_source_types() {
        return Err(Error::InvalidConfig(format!(
            "source type index {i} out of range (N_k = {})",
            cfg.num_source_types()
        )));
    }
    Ok(())
}

/// `min_{P ∈ Γ_ij} D(P_XY‖Q_μ(i)×W) + |I_P(X̄; XY) − R_j|⁺`, with the metric
/// stored in `cfg`.
pub fn rgv_min_term(
    i: usize,
    j: usize,
    cfg: &CodeConfig,
    w: &Channel,
    solver: &SolverSpec,
) -> Result<ExponentResult> {
    solver.validate()?;
    check_channel(cfg, w)?;
    check_index(cfg, i)?;
    check_index(cfg, j)?;
    let q_i = cfg.codeword_type(i).to_pmf();
    let q_j = cfg.codeword_type(j).to_pmf();
    let prob = PairProblem {
        cfg,
        w,
        metric: cfg.metric(),
        i,
        j,
        q_i: &q_i,
        q_j: &q_j,
        rate_i: cfg.rate(i),
        rate_j: cfg.rate(j),
        min_distance: cfg.pair_threshold(i, j),
    };
    match *solver {
        SolverSpec::DiscreteExhaustive { grid } => discrete::rgv_min_term(&prob, grid),
        SolverSpec::Continuous {
            restarts,
            max_iterations,
            tolerance,
        } => Ok(mirror::rgv_min_term(
            &prob,
            restarts,
            max_iterations,
            tolerance,
        )),
    }
}

/// `E_rgv^(ij) = t e(R_i/t, P_V) + min_{Γ_ij} {…}`. The argmin is the triple
/// joint `(X, X̄, Y)` of the minimization term.
pub fn rgv_exponent_pair(
    i: usize,
    j: usize,
    cfg: &CodeConfig,
    w: &Channel,
    solver: &SolverSpec,
) -> Result<ExponentResult> {
    check_index(cfg, i)?;
    let e = source_term(cfg, i, solver)?;
    let mut r = rgv_min_term(i, j, cfg, w, solver)?;
    r.value = e + r.value;
    Ok(r)
}

/// `t · e(R_i/t, P_V)`.
fn source_term(cfg: &CodeConfig, i: usize, solver: &SolverSpec) -> Result<ExtReal> {
    let e = source_reliability(cfg.source_types()[i].entropy(), cfg.source(), solver)?;
    Ok(match e.value {
        ExtReal::Finite(v) => ExtReal::Finite(cfg.t() * v),
        ExtReal::Infinite => ExtReal::Infinite,
    })
}

/// One row of a JSCC bound table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeExponentRow {
    pub type_index: usize,
    pub source_type: TypeVector,
    pub palette_index: usize,
    /// `R_i = t H(P_i)`.
    pub rate: f64,
    /// `e(R_i/t, P_V)`.
    pub source_reliability: ExponentResult,
    /// `E_r` or `E'_ex` at `(Q_μ(i), R_i)`.
    pub channel_exponent: ExponentResult,
    /// `t e(R_i/t, P_V) + channel exponent`.
    pub total: ExtReal,
}

/// Per-type exponents and their minimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub rows: Vec<TypeExponentRow>,
    pub overall: ExtReal,
    pub argmin_type: Option<usize>,
}

fn bound_table(
    cfg: &CodeConfig,
    solver: &SolverSpec,
    channel_exponent: impl Fn(usize, &Pmf, f64) -> Result<ExponentResult> + Sync,
) -> Result<BoundTable> {
    let rows: Vec<TypeExponentRow> = (0..cfg.num_source_types())
        .into_par_iter()
        .map(|i| {
            let p_i = &cfg.source_types()[i];
            let rate = cfg.rate(i);
            let e = source_reliability(p_i.entropy(), cfg.source(), solver)?;
            let q = cfg.codeword_type(i).to_pmf();
            let ch = channel_exponent(i, &q, rate)?;
            let total = match e.value {
                ExtReal::Finite(v) => ExtReal::Finite(cfg.t() * v) + ch.value,
                ExtReal::Infinite => ExtReal::Infinite,
            };
            Ok(TypeExponentRow {
                type_index: i,
                source_type: p_i.clone(),
                palette_index: cfg.assignment()[i],
                rate,
                source_reliability: e,
                channel_exponent: ch,
                total,
            })
        })
        .collect::<Result<_>>()?;
    let (overall, argmin_type) = min_of(rows.iter().map(|r| r.total));
    Ok(BoundTable {
        rows,
        overall,
        argmin_type,
    })
}

fn min_of(values: impl Iterator<Item = ExtReal>) -> (ExtReal, Option<usize>) {
    let mut best = (ExtReal::Infinite, None);
    for (k, v) in values.enumerate() {
        if best.1.is_none() || v < best.0 {
            best = (v, Some(k));
        }
    }
    best
}

/// Per-type exponents `t e(R_i/t, P_V) + E_r(Q_μ(i), R_i)` and their minimum.
pub fn jscc_random_coding_bound(
    cfg: &CodeConfig,
    w: &Channel,
    solver: &SolverSpec,
) -> Result<BoundTable> {
    check_channel(cfg, w)?;
    bound_table(cfg, solver, |_, q, r| {
        random_coding_exponent(q, w, r, solver)
    })
}

/// Per-type exponents `t e(R_i/t, P_V) + E'_ex(Q_μ(i), 𝒬_m, R_i)` and their minimum.
pub fn jscc_expurgated_bound(
    cfg: &CodeConfig,
    w: &Channel,
    solver: &SolverSpec,
) -> Result<BoundTable> {
    check_channel(cfg, w)?;
    let palette = cfg.palette_pmfs();
    bound_table(cfg, solver, |_, q, r| {
        expurgated_exponent(q, &palette, w, r, solver)
    })
}

/// One `(i, j)` entry of the RGV exponent matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub i: usize,
    pub j: usize,
    /// `t e(R_i/t, P_V)`.
    pub source_term: ExtReal,
    /// Minimization over `Γ_ij`.
    pub min_term: ExponentResult,
    pub total: ExtReal,
}

/// All pair exponents and their minimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RgvTable {
    pub entries: Vec<PairEntry>,
    pub overall: ExtReal,
    pub argmin: Option<(usize, usize)>,
}

/// `min_{i,j} E_rgv^(ij)` together with every entry.
pub fn rgv_overall_exponent(
    cfg: &CodeConfig,
    w: &Channel,
    solver: &SolverSpec,
) -> Result<RgvTable> {
    check_channel(cfg, w)?;
    let nk = cfg.num_source_types();
    let source_terms: Vec<ExtReal> = (0..nk)
        .map(|i| source_term(cfg, i, solver))
        .collect::<Result<_>>()?;
    let entries: Vec<PairEntry> = (0..nk * nk)
        .into_par_iter()
        .map(|z| {
            let (i, j) = (z / nk, z % nk);
            let min_term = rgv_min_term(i, j, cfg, w, solver)?;
            Ok(PairEntry {
                i,
                j,
                source_term: source_terms[i],
                total: source_terms[i] + min_term.value,
                min_term,
            })
        })
        .collect::<Result<_>>()?;
    let (overall, k) = min_of(entries.iter().map(|e| e.total));
    Ok(RgvTable {
        argmin: k.map(|k| (entries[k].i, entries[k].j)),
        entries,
        overall,
    })
}
