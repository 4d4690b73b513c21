//! Monte Carlo simulation of source → encoder → channel → decoder, and
//! finite-length bounds used to check it.

mod bound;
mod slope;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

pub use bound::{
    finite_n_rcu_bound, source_type_mass, PairFactor, RcuBound, SourceTypeMass, RCU_MAX_N,
};
pub use slope::{exponent_slope_experiment, CodeTemplate, SlopeRow};

use crate::codebook::{CodeConfig, Codebook, ConstructMode, Constructor};
use crate::error::{Error, Result};
use crate::exponents::{Channel, MetricSpec, SourceSpec};
use crate::rng::trial_rng;
use crate::types::{counts_mutual_information, JointPmf, Symbol};

/// Largest number of messages the exhaustive decoder accepts.
pub const MAX_MESSAGES: u128 = 1 << 16;
/// Scores within this distance of the maximum count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;
/// Stream used for the shared codebook in fixed-codebook runs.
const FIXED_CODEBOOK_STREAM: u64 = u64::MAX;

/// I.i.d. source sequence of length `k`.
pub fn sample_source<R: Rng + ?Sized>(src: &SourceSpec, k: usize, rng: &mut R) -> Vec<Symbol> {
    let d = WeightedIndex::new(src.p_v.probs()).expect("valid pmf");
    (0..k).map(|_| d.sample(rng) as Symbol).collect()
}

/// Per-row samplers for a channel.
#[derive(Clone, Debug)]
pub struct ChannelSampler {
    rows: Vec<WeightedIndex<f64>>,
}

impl ChannelSampler {
    pub fn new(w: &Channel) -> Self {
        ChannelSampler {
            rows: (0..w.inputs())
                .map(|x| WeightedIndex::new(w.row(x)).expect("valid row"))
                .collect(),
        }
    }

    pub fn transmit<R: Rng + ?Sized>(&self, x: &[Symbol], rng: &mut R) -> Vec<Symbol> {
        x.iter()
            .map(|&s| self.rows[s as usize].sample(rng) as Symbol)
            .collect()
    }
}

/// Memoryless transmission of `x` through `w`.
pub fn transmit<R: Rng + ?Sized>(w: &Channel, x: &[Symbol], rng: &mut R) -> Result<Vec<Symbol>> {
    if let Some(&s) = x.iter().find(|&&s| s as usize >= w.inputs()) {
        return Err(Error::SymbolOutOfRange {
            symbol: s as usize,
            size: w.inputs(),
        });
    }
    Ok(ChannelSampler::new(w).transmit(x, rng))
}

/// Outcome of decoding one channel output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    /// Index of the first maximizing message in the fixed message order.
    pub message: usize,
    /// More than one message attains the maximum.
    pub tie: bool,
    #[serde(with = "crate::ext::inf_float")]
    pub score: f64,
}

/// Metric evaluation on (input, output) joint counts.
#[derive(Clone, Debug)]
pub(crate) struct CountScorer {
    metric: MetricSpec,
    w: Channel,
    rates: Vec<f64>,
    ln_w: Vec<f64>,
}

impl CountScorer {
    pub(crate) fn new(cfg: &CodeConfig, w: &Channel, metric: &MetricSpec) -> Self {
        let ny = w.outputs();
        CountScorer {
            metric: metric.clone(),
            w: w.clone(),
            rates: (0..cfg.num_source_types()).map(|i| cfg.rate(i)).collect(),
            ln_w: (0..w.inputs() * ny)
                .map(|z| w.prob(z / ny, z % ny).ln())
                .collect(),
        }
    }

    /// `q(j, ·)` of a row-major `|X| × |Y|` count matrix.
    pub(crate) fn score(&self, j: usize, counts: &[u64]) -> f64 {
        let (nx, ny) = (self.w.inputs(), self.w.outputs());
        let n: u64 = counts.iter().sum();
        let nf = n as f64;
        match &self.metric {
            MetricSpec::Mmi => counts_mutual_information(counts, nx, ny) - self.rates[j],
            MetricSpec::Csiszar => {
                let mut s = 0.0;
                for (z, &c) in counts.iter().enumerate() {
                    if c > 0 {
                        if self.ln_w[z] == f64::NEG_INFINITY {
                            return f64::NEG_INFINITY;
                        }
                        s += c as f64 * self.ln_w[z];
                    }
                }
                s / nf - 2.0 * self.rates[j]
            }
            MetricSpec::Custom(_) => {
                let p = JointPmf::from_raw(
                    vec![nx, ny],
                    counts.iter().map(|&c| c as f64 / nf).collect(),
                );
                self.metric.score(j, self.rates[j], &p, &self.w)
            }
        }
    }
}

/// Exhaustive type-metric decoder for one codebook.
pub struct Decoder<'a> {
    cb: &'a Codebook,
    cfg: &'a CodeConfig,
    scorer: CountScorer,
}

impl<'a> Decoder<'a> {
    pub fn new(
        cb: &'a Codebook,
        cfg: &'a CodeConfig,
        w: &Channel,
        metric: &MetricSpec,
    ) -> Result<Self> {
        if cfg.num_messages() > MAX_MESSAGES {
            return Err(Error::EnumerationTooLarge {
                what: "messages for exhaustive decoding".into(),
                size: cfg.num_messages(),
                cap: MAX_MESSAGES,
            });
        }
        if cfg.input().size() != w.inputs() {
            return Err(Error::DimensionMismatch(cfg.input().size(), w.inputs()));
        }
        Ok(Decoder {
            cb,
            cfg,
            scorer: CountScorer::new(cfg, w, metric),
        })
    }

    /// `q(j, P̂_{x y})` for a codeword of source-type class `j`.
    pub fn score(&self, j: usize, x: &[Symbol], y: &[Symbol]) -> f64 {
        let ny = self.scorer.w.outputs();
        let mut counts = vec![0u64; self.scorer.w.inputs() * ny];
        for (&a, &b) in x.iter().zip(y) {
            counts[a as usize * ny + b as usize] += 1;
        }
        self.scorer.score(j, &counts)
    }

    pub fn decode(&self, y: &[Symbol]) -> Decoded {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        let scores: Vec<f64> = self
            .cb
            .entries()
            .iter()
            .map(|e| self.score(e.type_index, &e.codeword, y))
            .collect();
        for (m, &s) in scores.iter().enumerate() {
            if s > best {
                best = s;
                arg = m;
            }
        }
        let tie = best > f64::NEG_INFINITY
            && scores
                .iter()
                .filter(|&&s| s >= best - TIE_TOLERANCE)
                .count()
                > 1;
        Decoded {
            message: arg,
            tie: tie || best == f64::NEG_INFINITY && scores.len() > 1,
            score: best,
        }
    }

    pub fn config(&self) -> &CodeConfig {
        self.cfg
    }
}

/// Decodes `y` with `metric`; see [`Decoder`].
pub fn decode(
    cb: &Codebook,
    metric: &MetricSpec,
    cfg: &CodeConfig,
    w: &Channel,
    y: &[Symbol],
) -> Result<Decoded> {
    Ok(Decoder::new(cb, cfg, w, metric)?.decode(y))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// One codebook shared by all trials.
    FixedCodebook,
    /// A new codebook per trial (ensemble average).
    FreshCodebookPerTrial,
}

/// One simulated transmission.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub v: Vec<Symbol>,
    pub x: Vec<Symbol>,
    pub y: Vec<Symbol>,
    pub v_hat: Vec<Symbol>,
    pub error: bool,
    pub tie: bool,
}

/// Binomial error-rate estimate with an exact 95% interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub trials: u64,
    pub errors: u64,
    pub ties: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ErrorEstimate {
    pub fn new(trials: u64, errors: u64, ties: u64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(errors, trials, 0.95);
        ErrorEstimate {
            trials,
            errors,
            ties,
            p_hat: if trials == 0 {
                0.0
            } else {
                errors as f64 / trials as f64
            },
            ci_low,
            ci_high,
        }
    }
}

fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact (Clopper–Pearson) two-sided interval for `errors` out of `trials`.
pub fn clopper_pearson(errors: u64, trials: u64, level: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let alpha = 1.0 - level;
    let (x, n) = (errors as f64, trials as f64);
    let lo = if errors == 0 {
        0.0
    } else {
        beta_quantile(x, n - x + 1.0, alpha / 2.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        beta_quantile(x + 1.0, n - x, 1.0 - alpha / 2.0)
    };
    (lo, hi)
}

fn one_trial<R: Rng>(
    dec: &Decoder<'_>,
    sampler: &ChannelSampler,
    trial: u64,
    rng: &mut R,
) -> TrialRecord {
    let cfg = dec.cfg;
    let v = sample_source(cfg.source(), cfg.k() as usize, rng);
    let m = dec
        .cb
        .message_index(&v)
        .expect("every source sequence has a codeword");
    let x = dec.cb.entries()[m].codeword.clone();
    let y = sampler.transmit(&x, rng);
    let d = dec.decode(&y);
    assert!(
        dec.score(dec.cb.entries()[m].type_index, &x, &y) > f64::NEG_INFINITY,
        "transmitted codeword scored −∞"
    );
    TrialRecord {
        trial,
        v_hat: dec.cb.entries()[d.message].message.clone(),
        error: d.message != m || d.tie,
        tie: d.tie,
        v,
        x,
        y,
    }
}

/// Runs trials `0..trials` and returns every record, in trial order.
pub fn simulate_trials(
    cfg: &CodeConfig,
    w: &Channel,
    seed: u64,
    trials: u64,
    mode: SimMode,
    construct_mode: ConstructMode,
) -> Result<Vec<TrialRecord>> {
    run_trials(cfg, w, seed, trials, mode, construct_mode, |r| r)
}

/// Error-probability estimate with ties counted as errors.
pub fn estimate_error_probability(
    cfg: &CodeConfig,
    w: &Channel,
    seed: u64,
    trials: u64,
    mode: SimMode,
    construct_mode: ConstructMode,
) -> Result<ErrorEstimate> {
    let flags = run_trials(cfg, w, seed, trials, mode, construct_mode, |r| {
        (r.error, r.tie)
    })?;
    let errors = flags.iter().filter(|f| f.0).count() as u64;
    let ties = flags.iter().filter(|f| f.1).count() as u64;
    Ok(ErrorEstimate::new(trials, errors, ties))
}

fn run_trials<T: Send>(
    cfg: &CodeConfig,
    w: &Channel,
    seed: u64,
    trials: u64,
    mode: SimMode,
    construct_mode: ConstructMode,
    map: impl Fn(TrialRecord) -> T + Sync,
) -> Result<Vec<T>> {
    let ctor = Constructor::new(cfg, construct_mode);
    let sampler = ChannelSampler::new(w);
    let metric = cfg.metric();
    match mode {
        SimMode::FixedCodebook => {
            let (cb, _) = ctor.build(&mut trial_rng(seed, FIXED_CODEBOOK_STREAM), Some(seed))?;
            let dec = Decoder::new(&cb, cfg, w, metric)?;
            Ok((0..trials)
                .into_par_iter()
                .map(|t| map(one_trial(&dec, &sampler, t, &mut trial_rng(seed, t))))
                .collect())
        }
        SimMode::FreshCodebookPerTrial => {
            if cfg.num_messages() > MAX_MESSAGES {
                return Err(Error::EnumerationTooLarge {
                    what: "messages for exhaustive decoding".into(),
                    size: cfg.num_messages(),
                    cap: MAX_MESSAGES,
                });
            }
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(seed, t);
                    let (cb, _) = ctor.build(&mut rng, Some(seed))?;
                    let dec = Decoder::new(&cb, cfg, w, metric)?;
                    Ok(map(one_trial(&dec, &sampler, t, &mut rng)))
                })
                .collect()
        }
    }
}
