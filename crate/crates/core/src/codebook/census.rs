//! Monte Carlo tallies of codeword assignments over independent constructions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{exceeds, CodeConfig, ConstructMode, Constructor};
use crate::error::{Error, Result};
use crate::rng::trial_rng;
use crate::types::Symbol;

/// Frequencies of the codeword assigned to one message.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub trials: u64,
    /// Constructions that failed before reaching the message.
    pub failures: u64,
    pub counts: BTreeMap<Vec<Symbol>, u64>,
}

impl Census {
    /// Total variation between the empirical law and the uniform law on `support`.
    pub fn total_variation_from_uniform(&self, support: &[Vec<Symbol>]) -> f64 {
        let ok = (self.trials - self.failures) as f64;
        let u = 1.0 / support.len() as f64;
        let mut tv = 0.0;
        for s in support {
            let f = *self.counts.get(s).unwrap_or(&0) as f64 / ok;
            tv += (f - u).abs();
        }
        // Mass outside the support.
        let inside: u64 = support
            .iter()
            .map(|s| *self.counts.get(s).unwrap_or(&0))
            .sum();
        tv += (ok - inside as f64) / ok;
        0.5 * tv
    }
}

/// Joint frequencies of the codewords of two messages.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JointCensus {
    pub trials: u64,
    pub failures: u64,
    pub counts: BTreeMap<(Vec<Symbol>, Vec<Symbol>), u64>,
    /// Trials whose pair violated `d > max(Δ_i, Δ_j)`.
    pub violations: u64,
}

fn locate(c: &Constructor<'_>, message: &[Symbol]) -> Result<usize> {
    c.messages()
        .iter()
        .position(|(_, m)| m == message)
        .ok_or_else(|| Error::InvalidConfig(format!("message {message:?} not in the source space")))
}

/// Runs `trials` constructions (stream `t` of `seed` for trial `t`) and
/// tallies the codeword of `message`.
pub fn marginal_census(
    cfg: &CodeConfig,
    seed: u64,
    trials: u64,
    message: &[Symbol],
    mode: ConstructMode,
) -> Result<Census> {
    let ctor = Constructor::new(cfg, mode);
    let m = locate(&ctor, message)?;
    let out = (0..trials)
        .into_par_iter()
        .fold(Census::default, |mut acc, t| {
            acc.trials += 1;
            match ctor.run(&mut trial_rng(seed, t), Some(m + 1)) {
                Ok((cw, _)) => *acc.counts.entry(cw[m].clone()).or_insert(0) += 1,
                Err(_) => acc.failures += 1,
            }
            acc
        })
        .reduce(Census::default, |mut a, b| {
            a.trials += b.trials;
            a.failures += b.failures;
            for (k, v) in b.counts {
                *a.counts.entry(k).or_insert(0) += v;
            }
            a
        });
    Ok(out)
}

/// Joint tally of the codewords of messages `v` and `v_tilde`.
pub fn joint_census(
    cfg: &CodeConfig,
    seed: u64,
    trials: u64,
    v: &[Symbol],
    v_tilde: &[Symbol],
    mode: ConstructMode,
) -> Result<JointCensus> {
    let ctor = Constructor::new(cfg, mode);
    let a = locate(&ctor, v)?;
    let b = locate(&ctor, v_tilde)?;
    let thr = cfg.pair_threshold(ctor.messages()[a].0, ctor.messages()[b].0);
    let out = (0..trials)
        .into_par_iter()
        .fold(JointCensus::default, |mut acc, t| {
            acc.trials += 1;
            match ctor.run(&mut trial_rng(seed, t), Some(a.max(b) + 1)) {
                Ok((cw, _)) => {
                    if a != b && !exceeds(cfg.sequence_distance(&cw[a], &cw[b]), thr) {
                        acc.violations += 1;
                    }
                    *acc.counts
                        .entry((cw[a].clone(), cw[b].clone()))
                        .or_insert(0) += 1;
                }
                Err(_) => acc.failures += 1,
            }
            acc
        })
        .reduce(JointCensus::default, |mut x, y| {
            x.trials += y.trials;
            x.failures += y.failures;
            x.violations += y.violations;
            for (k, v) in y.counts {
                *x.counts.entry(k).or_insert(0) += v;
            }
            x
        });
    Ok(out)
}
