use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{DistanceSpec, MetricSpec, SourceSpec};
use crate::types::{enumerate_types, Alphabet, JointPmf, Pmf, TypeVector};

/// How source types are mapped to palette entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentRule {
    /// Every source type uses palette entry 0.
    AllFirst,
    /// Source type `i` uses palette entry `i mod m`.
    Cyclic,
    /// Entry `i` of the list is the palette index of source type `i`.
    Explicit(Vec<usize>),
}

impl AssignmentRule {
    pub fn resolve(&self, num_types: usize, palette_len: usize) -> Result<Vec<usize>> {
        if palette_len == 0 {
            return Err(Error::InvalidConfig("palette is empty".into()));
        }
        let mu = match self {
            AssignmentRule::AllFirst => vec![0; num_types],
            AssignmentRule::Cyclic => (0..num_types).map(|i| i % palette_len).collect(),
            AssignmentRule::Explicit(v) => v.clone(),
        };
        if mu.len() != num_types {
            return Err(Error::InvalidConfig(format!(
                "assignment has {} entries for {num_types} source types",
                mu.len()
            )));
        }
        if let Some(&c) = mu.iter().find(|&&c| c >= palette_len) {
            return Err(Error::InvalidConfig(format!(
                "assignment refers to palette entry {c}, palette has {palette_len}"
            )));
        }
        Ok(mu)
    }
}

/// Full description of an RGV code experiment.
#[derive(Clone, Debug)]
pub struct CodeConfig {
    source: SourceSpec,
    input: Alphabet,
    k: u64,
    n: u64,
    palette: Vec<TypeVector>,
    assignment: Vec<usize>,
    distance: DistanceSpec,
    thresholds: Vec<f64>,
    thresholds_overridden: bool,
    delta: f64,
    metric: MetricSpec,
    source_types: Vec<TypeVector>,
}

impl CodeConfig {
    /// Builds a configuration with `d = −I`, the MMI metric and default thresholds.
    pub fn new(
        source: SourceSpec,
        input: Alphabet,
        k: u64,
        n: u64,
        palette: Vec<TypeVector>,
        assignment: &AssignmentRule,
        delta: f64,
    ) -> Result<Self> {
        if k == 0 || n == 0 {
            return Err(Error::InvalidConfig("k and n must be positive".into()));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "delta must be ≥ 0, got {delta}"
            )));
        }
        for (c, q) in palette.iter().enumerate() {
            if q.denominator() != n {
                return Err(Error::InvalidConfig(format!(
                    "palette entry {c} has denominator {}, expected n = {n}",
                    q.denominator()
                )));
            }
            if q.size() != input.size() {
                return Err(Error::DimensionMismatch(q.size(), input.size()));
            }
        }
        let source_types = enumerate_types(source.alphabet(), k);
        let assignment = assignment.resolve(source_types.len(), palette.len())?;
        let mut cfg = CodeConfig {
            source,
            input,
            k,
            n,
            palette,
            assignment,
            distance: DistanceSpec::NegMi,
            thresholds: Vec::new(),
            thresholds_overridden: false,
            delta,
            metric: MetricSpec::Mmi,
            source_types,
        };
        cfg.thresholds = cfg.default_thresholds();
        Ok(cfg)
    }

    /// Replaces the thresholds `Δ_i`; `±∞` entries are allowed.
    pub fn with_thresholds(mut self, thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.len() != self.source_types.len() {
            return Err(Error::InvalidConfig(format!(
                "{} thresholds for {} source types",
                thresholds.len(),
                self.source_types.len()
            )));
        }
        if thresholds.iter().any(|d| d.is_nan()) {
            return Err(Error::InvalidConfig("threshold is NaN".into()));
        }
        self.thresholds = thresholds;
        self.thresholds_overridden = true;
        Ok(self)
    }

    /// Same threshold for every source type.
    pub fn with_uniform_threshold(self, delta_i: f64) -> Result<Self> {
        let m = self.source_types.len();
        self.with_thresholds(vec![delta_i; m])
    }

    pub fn with_metric(mut self, metric: MetricSpec) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_distance(mut self, distance: DistanceSpec) -> Self {
        self.distance = distance;
        self
    }

    /// Changes `δ`; thresholds follow unless they were overridden.
    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "delta must be ≥ 0, got {delta}"
            )));
        }
        self.delta = delta;
        if !self.thresholds_overridden {
            self.thresholds = self.default_thresholds();
        }
        Ok(self)
    }

    /// `Δ_i = −(t H(P_i) + δ)` for each source type.
    pub fn default_thresholds(&self) -> Vec<f64> {
        (0..self.source_types.len())
            .map(|i| -(self.rate(i) + self.delta))
            .collect()
    }

    pub fn source(&self) -> &SourceSpec {
        &self.source
    }

    pub fn input(&self) -> Alphabet {
        self.input
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `t = k / n`.
    pub fn t(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn palette(&self) -> &[TypeVector] {
        &self.palette
    }

    pub fn palette_pmfs(&self) -> Vec<Pmf> {
        self.palette.iter().map(TypeVector::to_pmf).collect()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn distance(&self) -> &DistanceSpec {
        &self.distance
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn thresholds_overridden(&self) -> bool {
        self.thresholds_overridden
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Source types of denominator `k`, lexicographic.
    pub fn source_types(&self) -> &[TypeVector] {
        &self.source_types
    }

    pub fn num_source_types(&self) -> usize {
        self.source_types.len()
    }

    /// `R_i = t H(P_i)`.
    pub fn rate(&self, i: usize) -> f64 {
        self.t() * self.source_types[i].entropy()
    }

    /// Palette entry assigned to source type `i`.
    pub fn codeword_type(&self, i: usize) -> &TypeVector {
        &self.palette[self.assignment[i]]
    }

    /// `max(Δ_i, Δ_j)`.
    pub fn pair_threshold(&self, i: usize, j: usize) -> f64 {
        self.thresholds[i].max(self.thresholds[j])
    }

    /// `ln ζ_n` with `ζ_n = N_k (n+1)^{|X|²+|X|}`.
    pub fn ln_zeta(&self) -> f64 {
        let x = self.input.size() as f64;
        (self.source_types.len() as f64).ln() + (x * x + x) * ((self.n + 1) as f64).ln()
    }

    /// Number of messages `|V|^k`, saturating.
    pub fn num_messages(&self) -> u128 {
        (self.source.p_v.len() as u128).saturating_pow(self.k.min(u32::MAX as u64) as u32)
    }

    /// Distance between two sequences of the input alphabet.
    pub fn sequence_distance(&self, a: &[u8], b: &[u8]) -> f64 {
        let q = self.input.size();
        let mut counts = vec![0u64; q * q];
        for (&x, &y) in a.iter().zip(b) {
            counts[x as usize * q + y as usize] += 1;
        }
        self.joint_counts_distance(&counts)
    }

    pub(crate) fn joint_counts_distance(&self, counts: &[u64]) -> f64 {
        let q = self.input.size();
        match &self.distance {
            DistanceSpec::NegMi => -crate::types::counts_mutual_information(counts, q, q),
            DistanceSpec::Custom(f) => {
                let total: u64 = counts.iter().sum();
                let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
                f(&JointPmf::from_raw(vec![q, q], probs))
            }
        }
    }
}

/// Comparison slack for threshold tests on floating distances.
pub const COMPARE_TOLERANCE: f64 = 1e-12;

/// `d > Δ` with the comparison slack; `Δ = −∞` always passes, `+∞` never does.
#[inline]
pub fn exceeds(d: f64, threshold: f64) -> bool {
    if threshold == f64::NEG_INFINITY {
        return d > f64::NEG_INFINITY;
    }
    d > threshold + COMPARE_TOLERANCE
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_cfg(k: u64, n: u64, delta: f64) -> CodeConfig {
        CodeConfig::new(
            SourceSpec::new(Pmf::uniform(2)),
            Alphabet::new(2).unwrap(),
            k,
            n,
            vec![TypeVector::new(vec![n / 2, n - n / 2]).unwrap()],
            &AssignmentRule::AllFirst,
            delta,
        )
        .unwrap()
    }

    #[test]
    fn default_threshold_values() {
        // Independent 30-digit evaluation of −(0.5 ln 2 + 0.01).
        let cfg = binary_cfg(1, 2, 0.01);
        assert_eq!(cfg.source_types().len(), 2);
        // k = 1: both source types are degenerate, so Δ = −δ.
        assert!((cfg.thresholds()[0] + 0.01).abs() < 1e-15);
        let cfg = binary_cfg(2, 4, 0.01);
        assert!((cfg.thresholds()[1] - -0.356_573_590_279_972_65).abs() < 1e-15);
        let cfg = binary_cfg(1, 2, 0.0);
        assert_eq!(cfg.thresholds()[0], 0.0);
    }

    #[test]
    fn delta_updates_defaults_only() {
        let cfg = binary_cfg(2, 4, 0.0).with_delta(0.5).unwrap();
        assert!((cfg.thresholds()[0] + 0.5).abs() < 1e-15);
        let cfg = cfg
            .with_uniform_threshold(f64::NEG_INFINITY)
            .unwrap()
            .with_delta(0.1)
            .unwrap();
        assert!(cfg.thresholds().iter().all(|&d| d == f64::NEG_INFINITY));
    }

    #[test]
    fn rejects_bad_palette() {
        let r = CodeConfig::new(
            SourceSpec::new(Pmf::uniform(2)),
            Alphabet::new(2).unwrap(),
            1,
            4,
            vec![TypeVector::new(vec![1, 2]).unwrap()],
            &AssignmentRule::AllFirst,
            0.01,
        );
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
        let r = AssignmentRule::Explicit(vec![0, 3]).resolve(2, 2);
        assert!(r.is_err());
    }

    #[test]
    fn strict_threshold_comparison() {
        assert!(exceeds(-1.0, f64::NEG_INFINITY));
        assert!(!exceeds(1e9, f64::INFINITY));
        assert!(!exceeds(-0.5, -0.5));
        assert!(!exceeds(-0.5 + 1e-13, -0.5));
        assert!(exceeds(-0.5 + 1e-11, -0.5));
    }
}
