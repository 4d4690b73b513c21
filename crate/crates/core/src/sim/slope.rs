//! Error-rate slopes `−ln p̂ / n` across block lengths.

use serde::{Deserialize, Serialize};

use super::{estimate_error_probability, ErrorEstimate, SimMode};
use crate::codebook::{AssignmentRule, CodeConfig, ConstructMode};
use crate::error::{Error, Result};
use crate::exponents::{Channel, DistanceSpec, MetricSpec, SourceSpec};
use crate::ext::ExtReal;
use crate::types::{Alphabet, Pmf, TypeVector};

/// A code family indexed by the block length `n`, with `k = n t`.
#[derive(Clone, Debug)]
pub struct CodeTemplate {
    pub source: SourceSpec,
    pub input: Alphabet,
    /// `t = t_num / t_den`.
    pub t_num: u64,
    pub t_den: u64,
    /// Palette distributions, quantized to denominator `n` on instantiation.
    pub palette: Vec<Pmf>,
    pub assignment: AssignmentRule,
    pub delta: f64,
    pub metric: MetricSpec,
    pub distance: DistanceSpec,
}

impl CodeTemplate {
    /// Configuration at block length `n`, plus the largest quantization error.
    pub fn instantiate(&self, n: u64) -> Result<(CodeConfig, f64)> {
        if self.t_den == 0 || !(n * self.t_num).is_multiple_of(self.t_den) {
            return Err(Error::InvalidConfig(format!(
                "n = {n} does not give an integer k for t = {}/{}",
                self.t_num, self.t_den
            )));
        }
        let k = n * self.t_num / self.t_den;
        let mut err: f64 = 0.0;
        let mut palette = Vec::with_capacity(self.palette.len());
        for p in &self.palette {
            let (t, e) = TypeVector::quantize(p, n)?;
            err = err.max(e);
            palette.push(t);
        }
        let cfg = CodeConfig::new(
            self.source.clone(),
            self.input,
            k,
            n,
            palette,
            &self.assignment,
            self.delta,
        )?
        .with_metric(self.metric.clone())
        .with_distance(self.distance.clone());
        Ok((cfg, err))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub n: u64,
    pub k: u64,
    pub estimate: Option<ErrorEstimate>,
    /// Set when the instance could not be built or simulated.
    pub error: Option<String>,
    /// `−ln p̂ / n`; infinite when no errors were seen.
    pub slope: Option<ExtReal>,
    /// `−ln(ci_high) / n`.
    pub slope_low: Option<ExtReal>,
    /// `−ln(ci_low) / n`.
    pub slope_high: Option<ExtReal>,
}

fn neg_ln_over(p: f64, n: u64) -> ExtReal {
    if p <= 0.0 {
        ExtReal::Infinite
    } else {
        ExtReal::Finite(-p.ln() / n as f64)
    }
}

/// Seed for block length `n`, derived from the master seed.
fn seed_for(seed: u64, n: u64) -> u64 {
    seed ^ n.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Estimates the error probability at each `n` and reports the slopes.
/// Instances that fail are reported in the row rather than aborting.
pub fn exponent_slope_experiment(
    template: &CodeTemplate,
    w: &Channel,
    n_list: &[u64],
    trials: u64,
    seed: u64,
    mode: SimMode,
    construct_mode: ConstructMode,
) -> Vec<SlopeRow> {
    n_list
        .iter()
        .map(|&n| {
            let run = template.instantiate(n).and_then(|(cfg, _)| {
                let est = estimate_error_probability(
                    &cfg,
                    w,
                    seed_for(seed, n),
                    trials,
                    mode,
                    construct_mode,
                )?;
                Ok((cfg.k(), est))
            });
            match run {
                Ok((k, est)) => SlopeRow {
                    n,
                    k,
                    slope: Some(neg_ln_over(est.p_hat, n)),
                    slope_low: Some(neg_ln_over(est.ci_high, n)),
                    slope_high: Some(neg_ln_over(est.ci_low, n)),
                    estimate: Some(est),
                    error: None,
                },
                Err(e) => SlopeRow {
                    n,
                    k: n * template.t_num / template.t_den.max(1),
                    estimate: None,
                    error: Some(e.to_string()),
                    slope: None,
                    slope_low: None,
                    slope_high: None,
                },
            }
        })
        .collect()
}
