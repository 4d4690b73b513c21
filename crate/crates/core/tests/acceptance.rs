//! Acceptance suite. Each test checks one criterion and prints a single
//! `PASS` / `FAIL` line to stderr (outside the test harness capture).

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rgv_jscc::codebook::{
    construct, marginal_census, message_order, verify_min_distance, AssignmentRule, CodeConfig,
    ConstructMode,
};
use rgv_jscc::exponents::{
    expurgated_exponent, random_coding_exponent, rgv_exponent_pair, source_reliability, Channel,
    DistanceSpec, MetricSpec, SolverSpec, SourceSpec,
};
use rgv_jscc::rng::trial_rng;
use rgv_jscc::sim::{
    estimate_error_probability, exponent_slope_experiment, finite_n_rcu_bound, source_type_mass,
    CodeTemplate, PairFactor, SimMode,
};
use rgv_jscc::types::{enumerate_types, Alphabet, Pmf, Symbol, TypeVector};
use rgv_jscc::ExtReal;

fn report(id: u32, name: &str, passed: bool, detail: &str) {
    let line = format!(
        "{} [{id:02}] {name}: {detail}\n",
        if passed { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(passed, "{}", line.trim_end());
}

fn pmf(p: &[f64]) -> Pmf {
    Pmf::new(p.to_vec()).unwrap()
}

fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Binary-input code over a source with law `p_v`.
fn code(
    p_v: &[f64],
    k: u64,
    n: u64,
    palette: &[&[u64]],
    rule: AssignmentRule,
    delta: f64,
) -> CodeConfig {
    CodeConfig::new(
        SourceSpec::new(pmf(p_v)),
        Alphabet::new(2).unwrap(),
        k,
        n,
        palette
            .iter()
            .map(|c| TypeVector::new(c.to_vec()).unwrap())
            .collect(),
        &rule,
        delta,
    )
    .unwrap()
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// `I(X; X̄)` of two sequences from their joint counts.
fn pair_information(a: &[Symbol], b: &[Symbol], q: usize) -> f64 {
    let n = a.len() as f64;
    let mut joint = vec![0.0; q * q];
    for (&x, &y) in a.iter().zip(b) {
        joint[x as usize * q + y as usize] += 1.0 / n;
    }
    let pa: Vec<f64> = (0..q)
        .map(|x| (0..q).map(|y| joint[x * q + y]).sum())
        .collect();
    let pb: Vec<f64> = (0..q)
        .map(|y| (0..q).map(|x| joint[x * q + y]).sum())
        .collect();
    let mut i = 0.0;
    for x in 0..q {
        for y in 0..q {
            let p = joint[x * q + y];
            if p > 0.0 {
                i += p * (p / (pa[x] * pb[y])).ln();
            }
        }
    }
    i
}

// ---------------------------------------------------------------------------
// 1

#[test]
fn c01_min_distance_support() {
    let configs = vec![
        (
            "k1 n4",
            code(
                &[0.5, 0.5],
                1,
                4,
                &[&[2, 2]],
                AssignmentRule::AllFirst,
                0.01,
            ),
        ),
        (
            "k2 n8",
            code(
                &[0.5, 0.5],
                2,
                8,
                &[&[4, 4]],
                AssignmentRule::AllFirst,
                0.01,
            ),
        ),
        (
            "k2 n6",
            code(&[0.7, 0.3], 2, 6, &[&[3, 3]], AssignmentRule::AllFirst, 0.1),
        ),
        (
            "k2 n6 two-entry palette",
            code(
                &[0.6, 0.4],
                2,
                6,
                &[&[3, 3], &[2, 4]],
                AssignmentRule::Cyclic,
                0.1,
            ),
        ),
        (
            "k3 n10",
            code(
                &[0.5, 0.5],
                3,
                10,
                &[&[5, 5]],
                AssignmentRule::AllFirst,
                0.1,
            ),
        ),
        (
            "k4 n8",
            code(&[0.5, 0.5], 4, 8, &[&[4, 4]], AssignmentRule::AllFirst, 0.2),
        ),
    ];
    let seeds = 50u64;
    let mut built = 0u64;
    let mut bad = Vec::new();
    for (name, cfg) in &configs {
        for (mode, stream) in [
            (ConstructMode::Enumerate, 0u64),
            (ConstructMode::Rejection, 1u64),
        ] {
            for s in 0..seeds {
                match construct(cfg, &mut trial_rng(s, stream), mode) {
                    Ok(cb) => {
                        built += 1;
                        let r = verify_min_distance(&cb, cfg);
                        if !r.ok {
                            bad.push(format!(
                                "{name} seed {s}: {} violations",
                                r.violations.len()
                            ));
                        }
                    }
                    Err(e) => bad.push(format!("{name} seed {s}: {e}")),
                }
            }
        }
    }
    let passed = bad.is_empty() && built >= 200;
    report(
        1,
        "min-distance support",
        passed,
        &format!(
            "{built} constructions over {} configurations, problems: {:?}",
            configs.len(),
            bad
        ),
    );
}

// ---------------------------------------------------------------------------
// 2

#[test]
fn c02_uniform_marginal() {
    // |T(Q)| = 20; the last message in construction order is the most constrained.
    let cfg = code(&[0.5, 0.5], 2, 6, &[&[3, 3]], AssignmentRule::AllFirst, 0.1);
    let order = message_order(&cfg);
    let (_, last) = order.last().unwrap().clone();
    let trials = 100_000;
    let census = marginal_census(&cfg, 2024, trials, &last, ConstructMode::Enumerate).unwrap();
    let class = TypeVector::new(vec![3, 3]).unwrap();
    let size = rgv_jscc::types::type_class_size(&class).exact;
    let size: usize = size.to_string().parse().unwrap();
    let empirical: Vec<f64> = census
        .counts
        .values()
        .map(|&c| c as f64 / census.trials as f64)
        .chain(std::iter::repeat(0.0))
        .take(size)
        .collect();
    let uniform = vec![1.0 / size as f64; size];
    let d = tv(&empirical, &uniform);
    let passed = census.failures == 0 && census.counts.len() <= size && d <= 0.02;
    report(
        2,
        "uniform codeword marginal",
        passed,
        &format!(
            "TV = {d:.5} over {} sequences, {trials} constructions, {} failures (limit 0.02)",
            size, census.failures
        ),
    );
}

// ---------------------------------------------------------------------------
// 3

/// Exact law of the whole codebook, by enumerating every draw.
fn exact_codebook_law(
    order: &[Vec<f64>],
    class: &[Vec<Symbol>],
    thresholds: &[f64],
) -> BTreeMap<Vec<Vec<Symbol>>, f64> {
    fn go(
        pos: usize,
        prefix: &mut Vec<Vec<Symbol>>,
        prob: f64,
        rates: &[f64],
        class: &[Vec<Symbol>],
        delta: &[f64],
        out: &mut BTreeMap<Vec<Vec<Symbol>>, f64>,
    ) {
        if pos == rates.len() {
            *out.entry(prefix.clone()).or_insert(0.0) += prob;
            return;
        }
        let feasible: Vec<&Vec<Symbol>> = class
            .iter()
            .filter(|x| {
                prefix.iter().enumerate().all(|(j, y)| {
                    // d = −I must exceed max(Δ_pos, Δ_j).
                    -pair_information(y, x, 2) > delta[pos].max(delta[j]) + 1e-12
                })
            })
            .collect();
        for x in &feasible {
            prefix.push((*x).clone());
            go(
                pos + 1,
                prefix,
                prob / feasible.len() as f64,
                rates,
                class,
                delta,
                out,
            );
            prefix.pop();
        }
    }
    let rates: Vec<f64> = order.iter().map(|r| r[0]).collect();
    let mut out = BTreeMap::new();
    go(0, &mut Vec::new(), 1.0, &rates, class, thresholds, &mut out);
    out
}

#[test]
fn c03_exact_construction_law() {
    // Ternary source, one symbol per block: three messages, binary codewords
    // from the class of (2, 2), which has 6 members.
    let delta = 0.01;
    let cfg = CodeConfig::new(
        SourceSpec::new(pmf(&[0.5, 0.3, 0.2])),
        Alphabet::new(2).unwrap(),
        1,
        4,
        vec![TypeVector::new(vec![2, 2]).unwrap()],
        &AssignmentRule::AllFirst,
        delta,
    )
    .unwrap();
    let order = message_order(&cfg);
    assert_eq!(order.len(), 3);
    let class: Vec<Vec<Symbol>> = (0u8..16)
        .map(|b| (0..4).map(|k| (b >> (3 - k)) & 1).collect::<Vec<Symbol>>())
        .filter(|x: &Vec<Symbol>| x.iter().filter(|&&s| s == 1).count() == 2)
        .collect();
    assert_eq!(class.len(), 6);
    // Every source type has one symbol, so R_i = t H(P_i) = 0 and Δ_i = −δ.
    let per_message: Vec<Vec<f64>> = order.iter().map(|_| vec![0.0]).collect();
    let thresholds: Vec<f64> = order.iter().map(|_| -delta).collect();
    let law = exact_codebook_law(&per_message, &class, &thresholds);
    let total: f64 = law.values().sum();
    assert!((total - 1.0).abs() < 1e-12);

    let trials = 100_000u64;
    let mut worst: f64 = 0.0;
    let mut violating = 0u64;
    let mut outside = 0u64;
    for (mode, stream) in [
        (ConstructMode::Enumerate, 0u64),
        (ConstructMode::Rejection, 1u64),
    ] {
        let mut counts: BTreeMap<Vec<Vec<Symbol>>, u64> = BTreeMap::new();
        for t in 0..trials {
            let mut rng = trial_rng(7 + stream, t);
            let cb = construct(&cfg, &mut rng, mode).unwrap();
            if !verify_min_distance(&cb, &cfg).ok {
                violating += 1;
            }
            let key: Vec<Vec<Symbol>> = cb.entries().iter().map(|e| e.codeword.clone()).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
        outside += counts
            .iter()
            .filter(|(k, _)| !law.contains_key(*k))
            .map(|(_, c)| c)
            .sum::<u64>();
        let keys: Vec<&Vec<Vec<Symbol>>> = law.keys().chain(counts.keys()).collect();
        let p: Vec<f64> = keys
            .iter()
            .map(|k| law.get(*k).copied().unwrap_or(0.0))
            .collect();
        let q: Vec<f64> = keys
            .iter()
            .map(|k| counts.get(*k).copied().unwrap_or(0) as f64 / trials as f64)
            .collect();
        // Keys from both maps may repeat; halve the double count.
        let mut uniq: BTreeMap<&Vec<Vec<Symbol>>, (f64, f64)> = BTreeMap::new();
        for (k, (a, b)) in keys.iter().zip(p.iter().zip(&q)) {
            uniq.insert(k, (*a, *b));
        }
        let d = 0.5 * uniq.values().map(|(a, b)| (a - b).abs()).sum::<f64>();
        worst = worst.max(d);
    }
    let passed = worst <= 0.03 && violating == 0 && outside == 0;
    report(
        3,
        "exact construction law",
        passed,
        &format!(
            "{} codebooks in the exact support, worst TV = {worst:.5} (limit 0.03), \
             {violating} violating and {outside} off-support draws in 2 x {trials}",
            law.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// 4, 5, 6

struct Instance {
    label: String,
    mmi: CodeConfig,
    csiszar: CodeConfig,
    w: Channel,
}

fn random_channel(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Channel {
    let a = rng.gen_range(lo..hi);
    let b = rng.gen_range(lo..hi);
    Channel::new(vec![vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap()
}

fn instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    (0..20)
        .map(|z| {
            let p = rng.gen_range(0.1..0.9);
            let w = random_channel(&mut rng, 0.01, 0.3);
            let n = [2u64, 4, 8][rng.gen_range(0..3)];
            let k = rng.gen_range(1..=2u64.min(n));
            let m = if n == 2 { 1 } else { rng.gen_range(1..=2) };
            let palette: Vec<Vec<u64>> = (0..m)
                .map(|_| {
                    let c = rng.gen_range(1..n);
                    vec![c, n - c]
                })
                .collect();
            let refs: Vec<&[u64]> = palette.iter().map(Vec::as_slice).collect();
            let mmi = code(&[p, 1.0 - p], k, n, &refs, AssignmentRule::Cyclic, 0.01);
            let csiszar = code(&[p, 1.0 - p], k, n, &refs, AssignmentRule::Cyclic, 1e-4)
                .with_metric(MetricSpec::Csiszar);
            Instance {
                label: format!("#{z} (k={k}, n={n}, palette {palette:?})"),
                mmi,
                csiszar,
                w,
            }
        })
        .collect()
}

/// Every exponent of one instance under one solver.
struct Evaluation {
    source: Vec<ExtReal>,
    random_coding: Vec<ExtReal>,
    expurgated: Vec<ExtReal>,
    rgv_mmi: Vec<ExtReal>,
    rgv_csiszar: Vec<ExtReal>,
}

fn evaluate(inst: &Instance, solver: &SolverSpec) -> Evaluation {
    let cfg = &inst.mmi;
    let nk = cfg.num_source_types();
    let palette = cfg.palette_pmfs();
    let mut ev = Evaluation {
        source: Vec::new(),
        random_coding: Vec::new(),
        expurgated: Vec::new(),
        rgv_mmi: Vec::new(),
        rgv_csiszar: Vec::new(),
    };
    for i in 0..nk {
        let h = cfg.source_types()[i].entropy();
        let q = cfg.codeword_type(i).to_pmf();
        let r = cfg.rate(i);
        ev.source
            .push(source_reliability(h, cfg.source(), solver).unwrap().value);
        ev.random_coding.push(
            random_coding_exponent(&q, &inst.w, r, solver)
                .unwrap()
                .value,
        );
        ev.expurgated.push(
            expurgated_exponent(&q, &palette, &inst.w, r, solver)
                .unwrap()
                .value,
        );
    }
    let pairs: Vec<(usize, usize)> = (0..nk).flat_map(|i| (0..nk).map(move |j| (i, j))).collect();
    ev.rgv_mmi = pairs
        .par_iter()
        .map(|&(i, j)| {
            rgv_exponent_pair(i, j, &inst.mmi, &inst.w, solver)
                .unwrap()
                .value
        })
        .collect();
    ev.rgv_csiszar = pairs
        .par_iter()
        .map(|&(i, j)| {
            rgv_exponent_pair(i, j, &inst.csiszar, &inst.w, solver)
                .unwrap()
                .value
        })
        .collect();
    ev
}

struct Sweep {
    instances: Vec<Instance>,
    discrete: Vec<Evaluation>,
    continuous: Vec<Evaluation>,
}

fn sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let instances = instances();
        let discrete = instances
            .iter()
            .map(|i| evaluate(i, &SolverSpec::discrete(64)))
            .collect();
        let continuous = instances
            .iter()
            .map(|i| evaluate(i, &SolverSpec::continuous()))
            .collect();
        Sweep {
            instances,
            discrete,
            continuous,
        }
    })
}

/// Checks `E_rgv^(ij) ≥ t e_i + E_i − 1e−6`; returns the number of pairs
/// checked, the smallest margin and the violations.
fn dominance(
    sweep: &Sweep,
    channel_term: impl Fn(&Evaluation) -> &Vec<ExtReal>,
    rgv: impl Fn(&Evaluation) -> &Vec<ExtReal>,
) -> (usize, f64, Vec<String>) {
    let mut checked = 0;
    let mut smallest = f64::INFINITY;
    let mut bad = Vec::new();
    for (solver, evals) in [
        ("discrete", &sweep.discrete),
        ("continuous", &sweep.continuous),
    ] {
        for (inst, ev) in sweep.instances.iter().zip(evals.iter()) {
            let nk = inst.mmi.num_source_types();
            let t = inst.mmi.t();
            for i in 0..nk {
                let lower = match (ev.source[i], channel_term(ev)[i]) {
                    (ExtReal::Finite(e), ExtReal::Finite(c)) => t * e + c,
                    _ => f64::INFINITY,
                };
                for j in 0..nk {
                    checked += 1;
                    let margin = match rgv(ev)[i * nk + j] {
                        ExtReal::Infinite => f64::INFINITY,
                        ExtReal::Finite(v) => v - lower,
                    };
                    smallest = smallest.min(margin);
                    if margin < -1e-6 {
                        bad.push(format!(
                            "{solver} {} pair ({i},{j}): {margin:.3e}",
                            inst.label
                        ));
                    }
                }
            }
        }
    }
    (checked, smallest, bad)
}

#[test]
fn c04_mmi_dominates_random_coding() {
    let (checked, smallest, bad) = dominance(sweep(), |e| &e.random_coding, |e| &e.rgv_mmi);
    report(
        4,
        "MMI exponent dominates random coding",
        bad.is_empty(),
        &format!(
            "{checked} pairs over 20 instances and 2 solvers, smallest margin {smallest:.3e}, \
             violations: {bad:?}"
        ),
    );
}

#[test]
fn c05_csiszar_dominates_expurgated() {
    let (checked, smallest, bad) = dominance(sweep(), |e| &e.expurgated, |e| &e.rgv_csiszar);
    report(
        5,
        "Csiszar-metric exponent dominates expurgated",
        bad.is_empty(),
        &format!(
            "{checked} pairs over 20 instances and 2 solvers, smallest margin {smallest:.3e}, \
             {} violations: {bad:?}",
            bad.len()
        ),
    );
}

#[test]
fn c06_solvers_agree() {
    let tol = 2.0 * 64f64.ln() * 3.0 / 64.0 + 1e-3;
    let sw = sweep();
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    let mut bad = Vec::new();
    for (inst, (d, c)) in sw
        .instances
        .iter()
        .zip(sw.discrete.iter().zip(&sw.continuous))
    {
        let ops: [(&str, &Vec<ExtReal>, &Vec<ExtReal>); 5] = [
            ("e", &d.source, &c.source),
            ("E_r", &d.random_coding, &c.random_coding),
            ("E'_ex", &d.expurgated, &c.expurgated),
            ("E_rgv mmi", &d.rgv_mmi, &c.rgv_mmi),
            ("E_rgv csiszar", &d.rgv_csiszar, &c.rgv_csiszar),
        ];
        for (name, a, b) in ops {
            for (k, (x, y)) in a.iter().zip(b.iter()).enumerate() {
                compared += 1;
                let gap = match (x, y) {
                    (ExtReal::Infinite, ExtReal::Infinite) => 0.0,
                    (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs(),
                    _ => f64::INFINITY,
                };
                worst = worst.max(gap);
                if gap > tol {
                    bad.push(format!("{} {name}[{k}]: {x} vs {y}", inst.label));
                }
            }
        }
    }
    report(
        6,
        "discrete and continuous solvers agree",
        bad.is_empty(),
        &format!(
            "{compared} values, largest gap {worst:.4} (limit {tol:.4}), disagreements: {bad:?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 7

fn product_information(q: &[f64], w: &Channel) -> f64 {
    let ny = w.outputs();
    let py: Vec<f64> = (0..ny)
        .map(|y| q.iter().enumerate().map(|(x, qx)| qx * w.prob(x, y)).sum())
        .collect();
    let mut i = 0.0;
    for (x, &qx) in q.iter().enumerate() {
        for (y, &p) in py.iter().enumerate() {
            let wxy = w.prob(x, y);
            if qx > 0.0 && wxy > 0.0 {
                i += qx * wxy * (wxy / p).ln();
            }
        }
    }
    i
}

#[test]
fn c07_random_coding_zero_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let solver = SolverSpec::continuous();
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for _ in 0..10 {
        let q0 = rng.gen_range(0.2..0.8);
        let q = pmf(&[q0, 1.0 - q0]);
        let w = random_channel(&mut rng, 0.01, 0.3);
        let cap = product_information(q.probs(), &w);
        let er = |r: f64| {
            random_coding_exponent(&q, &w, r, &solver)
                .unwrap()
                .value
                .to_f64()
        };
        let (mut lo, mut hi) = (0.0, 2f64.ln());
        assert!(er(lo) > 1e-6 && er(hi) <= 1e-6);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if er(mid) <= 1e-6 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        worst = worst.max((hi - cap).abs());
        rows.push(format!("{:.4}/{:.4}", hi, cap));
    }
    report(
        7,
        "random coding exponent vanishes at I(QxW)",
        worst <= 1e-3,
        &format!(
            "largest |R0 - I| = {worst:.2e} (limit 1e-3); R0/I: {}",
            rows.join(" ")
        ),
    );
}

// ---------------------------------------------------------------------------
// 8

#[test]
fn c08_source_type_mass() {
    let src = SourceSpec::new(pmf(&[0.75, 0.25]));
    let k = 8u64;
    let types = enumerate_types(src.alphabet(), k);
    let mut total = BigRational::zero();
    let mut bad = Vec::new();
    for t in &types {
        let m = source_type_mass(&src, t).unwrap();
        total += m.exact.clone();
        let p = t.to_pmf();
        let e = source_reliability(entropy(p.probs()), &src, &SolverSpec::continuous())
            .unwrap()
            .value
            .to_f64();
        let bound = (-(k as f64) * e).exp();
        if m.value > bound * (1.0 + 1e-9) {
            bad.push(format!("{:?}: {} > {}", t.counts(), m.value, bound));
        }
    }
    let exact = total == BigRational::one();
    report(
        8,
        "source type masses",
        types.len() == 9 && exact && bad.is_empty(),
        &format!(
            "{} types, exact sum is one: {exact}, bound violations: {bad:?}",
            types.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// 9

#[test]
fn c09_rcu_bound_consistency() {
    let cases = vec![
        (
            "k1 n8 BSC(0.1)",
            code(
                &[0.5, 0.5],
                1,
                8,
                &[&[4, 4]],
                AssignmentRule::AllFirst,
                0.01,
            ),
            Channel::bsc(0.1).unwrap(),
        ),
        (
            "k2 n8 BSC(0.05)",
            code(
                &[0.5, 0.5],
                2,
                8,
                &[&[4, 4]],
                AssignmentRule::AllFirst,
                0.01,
            ),
            Channel::bsc(0.05).unwrap(),
        ),
        (
            "k2 n6 BSC(0.1)",
            code(&[0.7, 0.3], 2, 6, &[&[3, 3]], AssignmentRule::AllFirst, 0.1),
            Channel::bsc(0.1).unwrap(),
        ),
        (
            "k1 n6 BSC(0.15)",
            code(&[0.8, 0.2], 1, 6, &[&[3, 3]], AssignmentRule::AllFirst, 0.1),
            Channel::bsc(0.15).unwrap(),
        ),
        (
            "k2 n8 Z-channel",
            code(&[0.6, 0.4], 2, 8, &[&[4, 4]], AssignmentRule::AllFirst, 0.2),
            Channel::new(vec![vec![1.0, 0.0], vec![0.2, 0.8]]).unwrap(),
        ),
        (
            "k2 n4 unconstrained",
            code(
                &[0.5, 0.5],
                2,
                4,
                &[&[2, 2]],
                AssignmentRule::AllFirst,
                0.01,
            )
            .with_uniform_threshold(f64::NEG_INFINITY)
            .unwrap(),
            Channel::bsc(0.1).unwrap(),
        ),
    ];
    let mut rows = Vec::new();
    let mut passed = true;
    for (name, cfg, w) in &cases {
        let bound = finite_n_rcu_bound(cfg, w, PairFactor::Analytic).unwrap();
        let mut uppers = Vec::new();
        for seed in [9u64, 10, 11] {
            let est = estimate_error_probability(
                cfg,
                w,
                seed,
                10_000,
                SimMode::FreshCodebookPerTrial,
                ConstructMode::Enumerate,
            )
            .unwrap();
            passed &= est.ci_high <= bound.value;
            uppers.push(format!("{:.4}", est.ci_high));
        }
        rows.push(format!(
            "{name}: upper limits {} vs bound {:.4}",
            uppers.join("/"),
            bound.value
        ));
    }
    report(
        9,
        "finite-length bound consistency",
        passed,
        &rows.join("; "),
    );
}

// ---------------------------------------------------------------------------
// 10

#[test]
fn c10_slope_trend() {
    let template = CodeTemplate {
        source: SourceSpec::new(pmf(&[0.5, 0.5])),
        input: Alphabet::new(2).unwrap(),
        t_num: 1,
        t_den: 4,
        palette: vec![pmf(&[0.5, 0.5])],
        assignment: AssignmentRule::AllFirst,
        delta: 0.1,
        metric: MetricSpec::Mmi,
        distance: DistanceSpec::NegMi,
    };
    let w = Channel::bsc(0.05).unwrap();
    let rows = exponent_slope_experiment(
        &template,
        &w,
        &[8, 12, 16],
        100_000,
        10,
        SimMode::FixedCodebook,
        ConstructMode::Enumerate,
    );
    let mut passed = true;
    let mut text = Vec::new();
    for r in &rows {
        match (&r.error, r.slope, r.slope_low, r.slope_high) {
            (None, Some(s), Some(lo), Some(hi)) => {
                passed &= lo.to_f64() > 0.0;
                text.push(format!(
                    "n={} slope {:.4} [{:.4}, {:.4}]",
                    r.n,
                    s.to_f64(),
                    lo.to_f64(),
                    hi.to_f64()
                ));
            }
            _ => {
                passed = false;
                text.push(format!("n={} failed: {:?}", r.n, r.error));
            }
        }
    }
    // The slope may only drop by as much as the two intervals allow.
    for pair in rows.windows(2) {
        if let (Some(lo), Some(hi)) = (pair[0].slope_low, pair[1].slope_high) {
            if hi.to_f64() < lo.to_f64() {
                passed = false;
                text.push(format!(
                    "drop from n={} to n={} exceeds interval slack by {:.4}",
                    pair[0].n,
                    pair[1].n,
                    lo.to_f64() - hi.to_f64()
                ));
            }
        }
    }
    report(10, "error-rate slope trend", passed, &text.join("; "));
}

// ---------------------------------------------------------------------------
// 11

#[test]
fn c11_determinism() {
    let cases = vec![
        (
            code(
                &[0.5, 0.5],
                2,
                8,
                &[&[4, 4]],
                AssignmentRule::AllFirst,
                0.01,
            ),
            Channel::bsc(0.05).unwrap(),
        ),
        (
            code(
                &[0.6, 0.4],
                2,
                6,
                &[&[3, 3], &[2, 4]],
                AssignmentRule::Cyclic,
                0.1,
            ),
            Channel::bsc(0.1).unwrap(),
        ),
    ];
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let mut out = Vec::new();
            for (cfg, w) in &cases {
                for seed in [1u64, 2, 3] {
                    let cb =
                        construct(cfg, &mut trial_rng(seed, 0), ConstructMode::Enumerate).unwrap();
                    out.push(cb.to_text().unwrap());
                }
                for mode in [SimMode::FixedCodebook, SimMode::FreshCodebookPerTrial] {
                    let est =
                        estimate_error_probability(cfg, w, 5, 3000, mode, ConstructMode::Enumerate)
                            .unwrap();
                    out.push(format!("{} {} {}", est.trials, est.errors, est.ties));
                }
            }
            out
        })
    };
    let a = run(1);
    let b = run(1);
    let c = run(4);
    let passed = a == b && a == c;
    report(
        11,
        "determinism",
        passed,
        &format!(
            "{} codebook files and error counts identical across runs and 1 vs 4 workers: {passed}",
            a.len()
        ),
    );
}
