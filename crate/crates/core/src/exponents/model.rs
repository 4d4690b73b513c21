use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::types::{Alphabet, JointPmf, Pmf, PMF_TOLERANCE};

/// A discrete memoryless channel `W(y|x)`, one row per input symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    inputs: usize,
    outputs: usize,
    matrix: Vec<f64>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 {
            return Err(Error::InvalidChannel("no rows".into()));
        }
        let outputs = rows[0].len();
        let mut matrix = Vec::with_capacity(inputs * outputs);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::InvalidChannel(format!(
                    "row {x} has {} entries, expected {outputs}",
                    row.len()
                )));
            }
            Pmf::new(row.clone()).map_err(|e| Error::InvalidChannel(format!("row {x}: {e}")))?;
            matrix.extend_from_slice(row);
        }
        Alphabet::new(inputs)?;
        Alphabet::new(outputs)?;
        Ok(Channel {
            inputs,
            outputs,
            matrix,
        })
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Channel::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Binary erasure channel; output 2 is the erasure.
    pub fn bec(eps: f64) -> Result<Self> {
        Channel::new(vec![vec![1.0 - eps, 0.0, eps], vec![0.0, 1.0 - eps, eps]])
    }

    /// Noiseless channel on `size` symbols.
    pub fn identity(size: usize) -> Result<Self> {
        Channel::new(
            (0..size)
                .map(|x| (0..size).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.matrix[x * self.outputs + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.inputs).map(|x| self.row(x).to_vec()).collect()
    }

    /// `Q × W` as a joint pmf over (X, Y).
    pub fn joint(&self, q: &Pmf) -> JointPmf {
        let mut probs = Vec::with_capacity(self.matrix.len());
        for x in 0..self.inputs {
            for y in 0..self.outputs {
                probs.push(q.probs()[x] * self.prob(x, y));
            }
        }
        JointPmf::from_raw(vec![self.inputs, self.outputs], probs)
    }

    /// Bhattacharyya distances as plain floats (`f64::INFINITY` for disjoint rows).
    pub(crate) fn bhattacharyya_matrix(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.inputs * self.inputs];
        for a in 0..self.inputs {
            for b in 0..self.inputs {
                d[a * self.inputs + b] = self.bhattacharyya(a, b);
            }
        }
        d
    }

    fn bhattacharyya(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let s: f64 = self
            .row(a)
            .iter()
            .zip(self.row(b))
            .map(|(p, q)| (p * q).sqrt())
            .sum();
        if s <= 0.0 {
            f64::INFINITY
        } else {
            (-s.ln()).max(0.0)
        }
    }
}

/// `d_W(x, x̄) = −ln Σ_y √(W(y|x) W(y|x̄))`; `+∞` when the rows are disjoint.
pub fn bhattacharyya_distance(w: &Channel, x: usize, x_bar: usize) -> ExtReal {
    ExtReal::from_f64(w.bhattacharyya(x, x_bar))
}

/// A discrete memoryless source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub p_v: Pmf,
}

impl SourceSpec {
    pub fn new(p_v: Pmf) -> Self {
        SourceSpec { p_v }
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.p_v.len()).expect("pmf length is a valid alphabet size")
    }
}

/// User-supplied type-dependent metric `q(i, P_XY)`.
pub type CustomMetric = Arc<dyn Fn(usize, &JointPmf) -> f64 + Send + Sync>;
/// User-supplied symmetric distance `d(P_XX̄)`.
pub type CustomDistance = Arc<dyn Fn(&JointPmf) -> f64 + Send + Sync>;

/// Type-dependent decoding metric.
#[derive(Clone)]
pub enum MetricSpec {
    /// `q(i, P) = I(P) − R_i`.
    Mmi,
    /// `q(i, P) = E_P[ln W(Y|X)] − 2 R_i`.
    Csiszar,
    Custom(CustomMetric),
}

impl MetricSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MetricSpec::Mmi => "mmi",
            MetricSpec::Csiszar => "csiszar",
            MetricSpec::Custom(_) => "custom",
        }
    }

    /// Score of a joint (input, output) distribution for source-type class `i`
    /// with rate `rate_i`. May be `−∞` for the Csiszár metric.
    pub fn score(&self, i: usize, rate_i: f64, p_xy: &JointPmf, w: &Channel) -> f64 {
        match self {
            MetricSpec::Mmi => crate::types::mutual_information(p_xy) - rate_i,
            MetricSpec::Csiszar => {
                let mut s = 0.0;
                for x in 0..w.inputs() {
                    for y in 0..w.outputs() {
                        let p = p_xy.get(&[x, y]);
                        if p > 0.0 {
                            let wy = w.prob(x, y);
                            if wy == 0.0 {
                                return f64::NEG_INFINITY;
                            }
                            s += p * wy.ln();
                        }
                    }
                }
                s - 2.0 * rate_i
            }
            MetricSpec::Custom(f) => f(i, p_xy),
        }
    }
}

impl fmt::Debug for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Symmetric, type-dependent distance between codewords.
#[derive(Clone)]
pub enum DistanceSpec {
    /// `d(P) = −I(P)`.
    NegMi,
    Custom(CustomDistance),
}

impl DistanceSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DistanceSpec::NegMi => "neg_mi",
            DistanceSpec::Custom(_) => "custom",
        }
    }

    pub fn eval(&self, p: &JointPmf) -> f64 {
        match self {
            DistanceSpec::NegMi => -crate::types::mutual_information(p),
            DistanceSpec::Custom(f) => f(p),
        }
    }
}

impl fmt::Debug for DistanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    DiscreteExhaustive,
    Continuous,
}

/// Which minimizer evaluates an exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverSpec {
    /// Exhaustive search over joint types of denominator `grid`.
    DiscreteExhaustive { grid: u64 },
    /// Constrained minimization over distributions.
    Continuous {
        restarts: usize,
        max_iterations: usize,
        tolerance: f64,
    },
}

impl SolverSpec {
    /// Grid denominator by alphabet size: 64 for binary, 24 for ternary.
    pub fn default_grid(max_alphabet: usize) -> u64 {
        match max_alphabet {
            0..=2 => 64,
            3 => 24,
            _ => 12,
        }
    }

    pub fn discrete(grid: u64) -> Self {
        SolverSpec::DiscreteExhaustive { grid }
    }

    pub fn continuous() -> Self {
        SolverSpec::Continuous {
            restarts: 8,
            max_iterations: 4000,
            tolerance: 1e-10,
        }
    }

    pub fn kind(&self) -> SolverKind {
        match self {
            SolverSpec::DiscreteExhaustive { .. } => SolverKind::DiscreteExhaustive,
            SolverSpec::Continuous { .. } => SolverKind::Continuous,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SolverSpec::DiscreteExhaustive { grid } if grid == 0 => {
                Err(Error::InvalidConfig("grid denominator must be ≥ 1".into()))
            }
            SolverSpec::Continuous {
                tolerance,
                restarts,
                ..
            } if !(tolerance > 0.0) || restarts == 0 => Err(Error::InvalidConfig(
                "continuous solver needs tolerance > 0 and ≥ 1 restart".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Diagnostics attached to an exponent value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverMetadata {
    pub solver: Option<SolverKind>,
    /// Iterations (continuous) or evaluated joint types (discrete).
    pub iterations: u64,
    /// Upper-minus-lower bound on the optimum where the method provides one.
    #[serde(with = "crate::ext::inf_float")]
    pub gap: f64,
    /// Largest deviation introduced by snapping marginals to the grid.
    pub quantization_error: f64,
    pub restarts: usize,
    pub feasible_restarts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Value of a minimization together with its minimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    pub value: ExtReal,
    pub argmin: Option<JointPmf>,
    pub meta: SolverMetadata,
}

impl ExponentResult {
    pub(crate) fn infeasible(meta: SolverMetadata) -> Self {
        ExponentResult {
            value: ExtReal::Infinite,
            argmin: None,
            meta,
        }
    }
}

pub(crate) fn check_pmf_len(p: &Pmf, len: usize) -> Result<()> {
    if p.len() != len {
        return Err(Error::DimensionMismatch(p.len(), len));
    }
    debug_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= PMF_TOLERANCE);
    Ok(())
}
