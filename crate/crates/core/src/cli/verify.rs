//! Invariant checks behind `rgv-jscc verify`.

use std::path::Path;

use clap::ValueEnum;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::Experiment;
use crate::codebook::{
    construct, discarded_count, discarded_count_by_representative, joint_census, marginal_census,
    message_order, verify_min_distance, Codebook,
};
use crate::error::{Error, Result};
use crate::exponents::{
    expurgated_exponent, random_coding_exponent, rgv_min_term, source_reliability, MetricSpec,
    SolverSpec,
};
use crate::ext::ExtReal;
use crate::rng::trial_rng;
use crate::sim::source_type_mass;
use crate::types::{first_sequence, type_class_sequences, type_class_size};

/// Constructions checked by the quick level.
const QUICK_CONSTRUCTIONS: u64 = 20;
/// Slack for exponent inequalities.
const DOMINANCE_SLACK: f64 = 1e-6;
/// Largest class scanned sequence by sequence.
const SCAN_LIMIT: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VerifyLevel {
    /// Deterministic checks only.
    Quick,
    /// Adds Monte Carlo censuses of the construction.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
            statistic: None,
        }
    }

    fn failed(name: &str, e: &Error) -> Self {
        Check::new(name, false, e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub level: VerifyLevel,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn check_constructions(exp: &Experiment, out: &mut Vec<Check>) {
    let cfg = &exp.code;
    let sim = &exp.config.simulation;
    let mut pairs = 0;
    for s in 0..QUICK_CONSTRUCTIONS {
        let cb = match construct(cfg, &mut trial_rng(sim.seed, s), sim.construct) {
            Ok(cb) => cb,
            Err(e) => {
                out.push(Check::failed("construction", &e));
                return;
            }
        };
        if let Err(e) = cb.check_types(cfg) {
            out.push(Check::failed("codeword_types", &e));
            return;
        }
        let rep = verify_min_distance(&cb, cfg);
        pairs += rep.pairs_checked;
        if let Some(v) = rep.violations.first() {
            out.push(Check::new(
                "min_distance",
                false,
                format!(
                    "construction {s}: messages {} and {} at distance {} ≤ {}",
                    v.first, v.second, v.distance, v.threshold
                ),
            ));
            return;
        }
        if s == 0 {
            let round = cb.to_text().and_then(|t| Codebook::from_text(&t));
            out.push(match round {
                Ok(back) if back == cb => Check::new("text_round_trip", true, "identical"),
                Ok(_) => Check::new("text_round_trip", false, "codebook changed"),
                Err(e) => Check::failed("text_round_trip", &e),
            });
        }
    }
    out.push(Check::new(
        "min_distance",
        true,
        format!("{QUICK_CONSTRUCTIONS} constructions, {pairs} pairs"),
    ));
}

fn check_codebook_file(exp: &Experiment, path: &Path, out: &mut Vec<Check>) {
    let cfg = &exp.code;
    let cb = match std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        .and_then(|t| Codebook::from_text(&t))
    {
        Ok(cb) => cb,
        Err(e) => {
            out.push(Check::failed("codebook_file", &e));
            return;
        }
    };
    if cb.len() != message_order(cfg).len() {
        out.push(Check::new(
            "codebook_file",
            false,
            format!(
                "{} messages, configuration has {}",
                cb.len(),
                message_order(cfg).len()
            ),
        ));
        return;
    }
    if let Err(e) = cb.check_types(cfg) {
        out.push(Check::failed("codebook_types", &e));
        return;
    }
    let rep = verify_min_distance(&cb, cfg);
    out.push(match rep.violations.first() {
        None => Check::new(
            "codebook_min_distance",
            true,
            format!("{} pairs", rep.pairs_checked),
        ),
        Some(v) => Check::new(
            "codebook_min_distance",
            false,
            format!(
                "messages {} and {} at distance {} ≤ {} ({} violations)",
                v.first,
                v.second,
                v.distance,
                v.threshold,
                rep.violations.len()
            ),
        ),
    });
}

fn check_discarded_counts(exp: &Experiment, out: &mut Vec<Check>) {
    let cfg = &exp.code;
    let mut compared = 0;
    for c in 0..cfg.palette().len() {
        if !cfg.assignment().contains(&c) {
            continue;
        }
        let size = type_class_size(&cfg.palette()[c]).exact;
        if size.to_u64().is_none_or(|s| s > SCAN_LIMIT) {
            continue;
        }
        let reps: Vec<_> = (0..cfg.num_source_types())
            .map(|j| first_sequence(cfg.codeword_type(j)))
            .collect();
        match (
            discarded_count(cfg, c),
            discarded_count_by_representative(cfg, c, &reps),
        ) {
            (Ok(a), Ok(b)) if a == b => compared += 1,
            (Ok(a), Ok(b)) => {
                out.push(Check::new(
                    "discarded_count",
                    false,
                    format!("palette entry {c}: joint types give {a}, scan gives {b}"),
                ));
                return;
            }
            (Err(e), _) | (_, Err(e)) => {
                out.push(Check::failed("discarded_count", &e));
                return;
            }
        }
    }
    out.push(Check::new(
        "discarded_count",
        true,
        format!("{compared} palette entries agree"),
    ));
}

fn check_source_masses(exp: &Experiment, out: &mut Vec<Check>) {
    let cfg = &exp.code;
    let k = cfg.k() as f64;
    let mut total = BigRational::zero();
    let solver = SolverSpec::continuous();
    for (i, p) in cfg.source_types().iter().enumerate() {
        let m = match source_type_mass(cfg.source(), p) {
            Ok(m) => m,
            Err(e) => return out.push(Check::failed("source_type_mass", &e)),
        };
        let e = match source_reliability(p.entropy(), cfg.source(), &solver) {
            Ok(e) => e.value.to_f64(),
            Err(e) => return out.push(Check::failed("source_type_mass", &e)),
        };
        let bound = (-k * e).exp();
        if m.value > bound * (1.0 + 1e-9) + 1e-300 {
            return out.push(Check::new(
                "source_type_mass",
                false,
                format!("type {i}: mass {} exceeds exp(−k e) = {bound}", m.value),
            ));
        }
        total += m.exact;
    }
    let sum = total.to_f64().unwrap_or(f64::NAN);
    let mut c = Check::new(
        "source_type_mass",
        (sum - 1.0).abs() < 1e-12,
        format!("{} types, total mass {sum}", cfg.num_source_types()),
    );
    c.statistic = Some(sum);
    out.push(c);
}

fn check_dominance(exp: &Experiment, metric: MetricSpec, out: &mut Vec<Check>) {
    let name = format!("{}_dominance", metric.name());
    let cfg = exp.code.clone().with_metric(metric.clone());
    let w = &exp.channel;
    let solver = &exp.solver;
    let palette = cfg.palette_pmfs();
    let nk = cfg.num_source_types();
    let mut worst = f64::INFINITY;
    for i in 0..nk {
        let q = cfg.codeword_type(i).to_pmf();
        let rate = cfg.rate(i);
        let base = match metric {
            MetricSpec::Csiszar => expurgated_exponent(&q, &palette, w, rate, solver),
            _ => random_coding_exponent(&q, w, rate, solver),
        };
        let e = source_reliability(cfg.source_types()[i].entropy(), cfg.source(), solver);
        let (base, e) = match (base, e) {
            (Ok(b), Ok(e)) => (b.value, e.value),
            (Err(err), _) | (_, Err(err)) => return out.push(Check::failed(&name, &err)),
        };
        if e.is_infinite() {
            continue;
        }
        for j in 0..nk {
            let m = match rgv_min_term(i, j, &cfg, w, solver) {
                Ok(m) => m.value,
                Err(err) => return out.push(Check::failed(&name, &err)),
            };
            // Both sides share the source term.
            let margin = match (m, base) {
                (ExtReal::Infinite, _) => f64::INFINITY,
                (_, ExtReal::Infinite) => f64::NEG_INFINITY,
                (ExtReal::Finite(a), ExtReal::Finite(b)) => a - b,
            };
            worst = worst.min(margin);
            if margin < -DOMINANCE_SLACK {
                let mut c = Check::new(
                    &name,
                    false,
                    format!(
                        "pair ({i}, {j}): RGV term {m} below baseline {base} by {}",
                        -margin
                    ),
                );
                c.statistic = Some(margin);
                return out.push(c);
            }
        }
    }
    let mut c = Check::new(
        &name,
        true,
        format!("{} pairs, smallest margin {worst}", nk * nk),
    );
    c.statistic = Some(worst);
    out.push(c);
}

fn check_marginal_census(exp: &Experiment, out: &mut Vec<Check>) {
    let cfg = &exp.code;
    let sim = &exp.config.simulation;
    let order = message_order(cfg);
    let Some((i, msg)) = order.last().cloned() else {
        return;
    };
    let support = type_class_sequences(cfg.codeword_type(i));
    match marginal_census(cfg, sim.seed, sim.trials, &msg, sim.construct) {
        Ok(c) => {
            let tv = c.total_variation_from_uniform(&support);
            let ok_trials = (c.trials - c.failures).max(1) as f64;
            // Twice the typical TV of an exact multinomial sample, plus slack.
            let allowance = 2.0
                * (support.len() as f64 / (2.0 * std::f64::consts::PI * ok_trials)).sqrt()
                + 0.005;
            let mut check = Check::new(
                "uniform_marginal",
                c.failures == 0 && tv <= allowance,
                format!(
                    "message {msg:?}: TV {tv:.5} over {} sequences, allowance {allowance:.5}, {} failed constructions",
                    support.len(),
                    c.failures
                ),
            );
            check.statistic = Some(tv);
            out.push(check);
        }
        Err(e) => out.push(Check::failed("uniform_marginal", &e)),
    }
}

fn check_joint_census(exp: &Experiment, out: &mut Vec<Check>) {
    let cfg = &exp.code;
    let sim = &exp.config.simulation;
    let order = message_order(cfg);
    if order.len() < 2 {
        return;
    }
    let (a, b) = (&order[0].1, &order[order.len() - 1].1);
    match joint_census(cfg, sim.seed, sim.trials, a, b, sim.construct) {
        Ok(j) => {
            let mut c = Check::new(
                "pair_distance_census",
                j.violations == 0 && j.failures == 0,
                format!(
                    "{} trials, {} violating pairs, {} failed constructions",
                    j.trials, j.violations, j.failures
                ),
            );
            c.statistic = Some(j.violations as f64);
            out.push(c);
        }
        Err(e) => out.push(Check::failed("pair_distance_census", &e)),
    }
}

/// Runs the checks of `level`, plus the codebook file checks when a path is given.
pub fn run_verification(
    exp: &Experiment,
    level: VerifyLevel,
    codebook: Option<&Path>,
) -> Result<VerificationReport> {
    let mut checks = Vec::new();
    if let Some(p) = codebook {
        check_codebook_file(exp, p, &mut checks);
    }
    check_constructions(exp, &mut checks);
    check_discarded_counts(exp, &mut checks);
    check_source_masses(exp, &mut checks);
    check_dominance(exp, MetricSpec::Mmi, &mut checks);
    check_dominance(exp, MetricSpec::Csiszar, &mut checks);
    if level == VerifyLevel::Full {
        check_marginal_census(exp, &mut checks);
        check_joint_census(exp, &mut checks);
    }
    Ok(VerificationReport {
        level,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
