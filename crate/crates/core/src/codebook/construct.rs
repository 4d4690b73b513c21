use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{exceeds, message_order, CodeConfig, Codebook, CodebookEntry, CodebookHeader};
use crate::error::{Error, Result};
use crate::types::{sample_uniform_from_type_class, type_class_sequences, type_class_size, Symbol};

/// Largest type class that is materialized for exact filtering.
pub const ENUMERATE_LIMIT: u64 = 1_000_000;
/// Rejection attempts per codeword before falling back to enumeration.
pub const REJECTION_ATTEMPTS: usize = 10_000;
/// Largest `|T_c| · |T_c'|` for which pairwise distances are cached.
const DISTANCE_CACHE_LIMIT: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructMode {
    /// Materialize each type class and filter it exactly.
    Enumerate,
    /// Draw from the type class and reject until the constraints hold.
    Rejection,
}

/// Feasible-set sizes observed before each draw (ENUMERATE mode only).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstructionTrace {
    /// `feasible_sizes[i][ℓ]` for source type `i`, codeword `ℓ`.
    pub feasible_sizes: Vec<Vec<usize>>,
}

/// Precomputed state for repeated constructions of one configuration.
pub struct Constructor<'a> {
    cfg: &'a CodeConfig,
    messages: Vec<(usize, Vec<Symbol>)>,
    /// Materialized type class per palette entry.
    classes: Vec<Option<Vec<Vec<Symbol>>>>,
    /// Cached distances per ordered palette pair `(c, c')`, row-major in `c`.
    distances: Vec<Option<Vec<f64>>>,
    mode: ConstructMode,
}

impl<'a> Constructor<'a> {
    pub fn new(cfg: &'a CodeConfig, mode: ConstructMode) -> Self {
        let m = cfg.palette().len();
        let classes: Vec<Option<Vec<Vec<Symbol>>>> = cfg
            .palette()
            .iter()
            .enumerate()
            .map(|(c, t)| {
                let used = cfg.assignment().contains(&c);
                let small = type_class_size(t)
                    .exact
                    .to_u64()
                    .is_some_and(|s| s <= ENUMERATE_LIMIT);
                (used && small).then(|| type_class_sequences(t))
            })
            .collect();
        let mut distances = vec![None; m * m];
        if mode == ConstructMode::Enumerate {
            for a in 0..m {
                for b in 0..m {
                    if let (Some(sa), Some(sb)) = (&classes[a], &classes[b]) {
                        if sa.len() * sb.len() <= DISTANCE_CACHE_LIMIT {
                            let mut d = Vec::with_capacity(sa.len() * sb.len());
                            for x in sa {
                                for y in sb {
                                    d.push(cfg.sequence_distance(x, y));
                                }
                            }
                            distances[a * m + b] = Some(d);
                        }
                    }
                }
            }
        }
        Constructor {
            cfg,
            messages: message_order(cfg),
            classes,
            distances,
            mode,
        }
    }

    pub fn messages(&self) -> &[(usize, Vec<Symbol>)] {
        &self.messages
    }

    fn distance(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        let m = self.cfg.palette().len();
        match &self.distances[a.0 * m + b.0] {
            Some(d) => {
                let nb = self.classes[b.0].as_ref().map_or(0, Vec::len);
                d[a.1 * nb + b.1]
            }
            None => {
                let sa = &self.classes[a.0].as_ref().expect("materialized")[a.1];
                let sb = &self.classes[b.0].as_ref().expect("materialized")[b.1];
                self.cfg.sequence_distance(sa, sb)
            }
        }
    }

    /// Runs the construction, stopping after `limit` messages when given.
    /// Returns the codewords in message order and the feasible-set trace.
    pub fn run<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        limit: Option<usize>,
    ) -> Result<(Vec<Vec<Symbol>>, ConstructionTrace)> {
        let total = limit
            .unwrap_or(self.messages.len())
            .min(self.messages.len());
        match self.mode {
            ConstructMode::Enumerate => self.run_enumerate(rng, total),
            ConstructMode::Rejection => self.run_rejection(rng, total),
        }
    }

    fn class_of(&self, i: usize) -> Result<(usize, &Vec<Vec<Symbol>>)> {
        let c = self.cfg.assignment()[i];
        match &self.classes[c] {
            Some(s) => Ok((c, s)),
            None => Err(Error::EnumerationTooLarge {
                what: format!("type class of palette entry {c}"),
                size: type_class_size(&self.cfg.palette()[c])
                    .exact
                    .to_u128()
                    .unwrap_or(u128::MAX),
                cap: ENUMERATE_LIMIT as u128,
            }),
        }
    }

    fn run_enumerate<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        total: usize,
    ) -> Result<(Vec<Vec<Symbol>>, ConstructionTrace)> {
        let cfg = self.cfg;
        // (source type, palette entry, index in class)
        let mut chosen: Vec<(usize, usize, usize)> = Vec::with_capacity(total);
        let mut trace = ConstructionTrace::default();
        let mut m = 0;
        while m < total {
            let i = self.messages[m].0;
            let (c, seqs) = self.class_of(i)?;
            let mut alive: Vec<usize> = (0..seqs.len())
                .filter(|&b| {
                    chosen.iter().all(|&(j, cj, a)| {
                        exceeds(self.distance((cj, a), (c, b)), cfg.pair_threshold(i, j))
                    })
                })
                .collect();
            let mut sizes = Vec::new();
            let mut pos = 0;
            while m < total && self.messages[m].0 == i {
                if alive.is_empty() {
                    return Err(Error::EmptyFeasibleSet {
                        class: i,
                        index: pos,
                    });
                }
                sizes.push(alive.len());
                let a = alive[rng.gen_range(0..alive.len())];
                chosen.push((i, c, a));
                let thr = cfg.thresholds()[i];
                alive.retain(|&b| exceeds(self.distance((c, a), (c, b)), thr));
                m += 1;
                pos += 1;
            }
            trace.feasible_sizes.push(sizes);
        }
        let codewords = chosen
            .into_iter()
            .map(|(_, c, a)| self.classes[c].as_ref().expect("materialized")[a].clone())
            .collect();
        Ok((codewords, trace))
    }

    fn admissible(&self, i: usize, x: &[Symbol], previous: &[Vec<Symbol>]) -> bool {
        previous.iter().enumerate().all(|(m, y)| {
            let j = self.messages[m].0;
            exceeds(
                self.cfg.sequence_distance(y, x),
                self.cfg.pair_threshold(i, j),
            )
        })
    }

    fn run_rejection<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        total: usize,
    ) -> Result<(Vec<Vec<Symbol>>, ConstructionTrace)> {
        let mut codewords: Vec<Vec<Symbol>> = Vec::with_capacity(total);
        let mut pos = 0;
        for m in 0..total {
            let i = self.messages[m].0;
            if m > 0 && self.messages[m - 1].0 != i {
                pos = 0;
            }
            let t = self.cfg.codeword_type(i);
            let mut accepted = None;
            for _ in 0..REJECTION_ATTEMPTS {
                let x = sample_uniform_from_type_class(t, rng);
                if self.admissible(i, &x, &codewords) {
                    accepted = Some(x);
                    break;
                }
            }
            let x = match accepted {
                Some(x) => x,
                None => {
                    let (_, seqs) =
                        self.class_of(i)
                            .map_err(|_| Error::RejectionBudgetExceeded {
                                class: i,
                                index: pos,
                                attempts: REJECTION_ATTEMPTS,
                            })?;
                    let alive: Vec<&Vec<Symbol>> = seqs
                        .iter()
                        .filter(|x| self.admissible(i, x, &codewords))
                        .collect();
                    if alive.is_empty() {
                        return Err(Error::EmptyFeasibleSet {
                            class: i,
                            index: pos,
                        });
                    }
                    alive[rng.gen_range(0..alive.len())].clone()
                }
            };
            codewords.push(x);
            pos += 1;
        }
        Ok((codewords, ConstructionTrace::default()))
    }

    /// Full codebook for one random stream.
    pub fn build<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        seed: Option<u64>,
    ) -> Result<(Codebook, ConstructionTrace)> {
        let (codewords, trace) = self.run(rng, None)?;
        let entries = self
            .messages
            .iter()
            .zip(codewords)
            .map(|((i, msg), cw)| CodebookEntry {
                message: msg.clone(),
                codeword: cw,
                type_index: *i,
            })
            .collect();
        let cb = Codebook::from_parts(CodebookHeader::from_config(self.cfg, seed), entries)?;
        Ok((cb, trace))
    }
}

/// Runs the recursive construction once.
pub fn construct<R: Rng + ?Sized>(
    cfg: &CodeConfig,
    rng: &mut R,
    mode: ConstructMode,
) -> Result<Codebook> {
    construct_traced(cfg, rng, mode, None).map(|(cb, _)| cb)
}

/// [`construct`] that also returns the feasible-set sizes and records `seed`
/// in the header.
pub fn construct_traced<R: Rng + ?Sized>(
    cfg: &CodeConfig,
    rng: &mut R,
    mode: ConstructMode,
    seed: Option<u64>,
) -> Result<(Codebook, ConstructionTrace)> {
    Constructor::new(cfg, mode).build(rng, seed)
}

/// A pair of messages whose codewords are too close.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub first: usize,
    pub second: usize,
    #[serde(with = "crate::ext::inf_float")]
    pub distance: f64,
    #[serde(with = "crate::ext::inf_float")]
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinDistanceReport {
    pub ok: bool,
    pub pairs_checked: u64,
    pub violations: Vec<Violation>,
}

/// Checks `d(x_v, x_v̄) > max(Δ_i, Δ_j)` for every pair of distinct messages.
pub fn verify_min_distance(cb: &Codebook, cfg: &CodeConfig) -> MinDistanceReport {
    let e = cb.entries();
    let mut violations = Vec::new();
    let mut pairs = 0u64;
    for a in 0..e.len() {
        for b in a + 1..e.len() {
            pairs += 1;
            let thr = cfg.pair_threshold(e[a].type_index, e[b].type_index);
            let d = cfg.sequence_distance(&e[a].codeword, &e[b].codeword);
            if !exceeds(d, thr) {
                violations.push(Violation {
                    first: a,
                    second: b,
                    distance: d,
                    threshold: thr,
                });
            }
        }
    }
    MinDistanceReport {
        ok: violations.is_empty(),
        pairs_checked: pairs,
        violations,
    }
}
