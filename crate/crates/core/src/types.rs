//! Method-of-types primitives.
//!
//! Types are exact integer count vectors; probabilities only appear when a
//! type is converted to a [`Pmf`] or [`JointPmf`]. All logarithms are natural
//! (nats), with `0 ln 0 = 0` and `p ln(p/0) = +∞`.

use num_bigint::BigUint;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::ext::ExtReal;

/// A channel-input, channel-output or source symbol.
pub type Symbol = u8;

/// Tolerance on the total mass of a [`Pmf`].
pub const PMF_TOLERANCE: f64 = 1e-12;

/// A finite alphabet `{0, .., size-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || size > Symbol::MAX as usize + 1 {
            return Err(Error::InvalidConfig(format!(
                "alphabet size {size} outside 1..=256"
            )));
        }
        Ok(Alphabet { size })
    }

    pub fn size(self) -> usize {
        self.size
    }
}

/// A probability mass function over `{0, .., len-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidPmf(format!("entry {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::InvalidPmf(format!("sums to {total}")));
        }
        Ok(Pmf { probs })
    }

    pub fn uniform(size: usize) -> Self {
        Pmf {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }
}

/// Exact empirical distribution of a length-`denominator` sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeVector {
    counts: Vec<u64>,
    denominator: u64,
}

impl TypeVector {
    /// The denominator is the total count, which must be positive.
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        let denominator: u64 = counts.iter().sum();
        if counts.is_empty() || denominator == 0 {
            return Err(Error::InvalidType(format!(
                "counts {counts:?} have no mass"
            )));
        }
        Ok(TypeVector {
            counts,
            denominator,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn size(&self) -> usize {
        self.counts.len()
    }

    pub fn to_pmf(&self) -> Pmf {
        let n = self.denominator as f64;
        Pmf {
            probs: self.counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }

    pub fn entropy(&self) -> f64 {
        count_entropy(&self.counts, self.denominator)
    }

    /// Nearest type of the given denominator (largest-remainder rounding).
    ///
    /// Returns the type and the largest absolute deviation from `pmf`.
    pub fn quantize(pmf: &Pmf, denominator: u64) -> Result<(TypeVector, f64)> {
        if denominator == 0 {
            return Err(Error::InvalidType("zero denominator".into()));
        }
        let n = denominator as f64;
        let scaled: Vec<f64> = pmf.probs().iter().map(|p| p * n).collect();
        let mut counts: Vec<u64> = scaled.iter().map(|s| s.floor() as u64).collect();
        let assigned: u64 = counts.iter().sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        // Largest fractional part first; ties go to the lower index.
        order.sort_by(|&a, &b| {
            let fa = scaled[a] - scaled[a].floor();
            let fb = scaled[b] - scaled[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        let missing = denominator.saturating_sub(assigned) as usize;
        for &i in order.iter().take(missing) {
            counts[i] += 1;
        }
        let t = TypeVector::new(counts)?;
        let err = t
            .to_pmf()
            .probs()
            .iter()
            .zip(pmf.probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok((t, err))
    }
}

/// A joint distribution over a product alphabet, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    shape: Vec<usize>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(shape: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if shape.is_empty() || len != probs.len() {
            return Err(Error::DimensionMismatch(len, probs.len()));
        }
        Pmf::new(probs.clone())?;
        Ok(JointPmf { shape, probs })
    }

    /// `p ⊗ q`.
    pub fn product(p: &Pmf, q: &Pmf) -> Self {
        let mut probs = Vec::with_capacity(p.len() * q.len());
        for a in p.probs() {
            for b in q.probs() {
                probs.push(a * b);
            }
        }
        JointPmf {
            shape: vec![p.len(), q.len()],
            probs,
        }
    }

    pub(crate) fn from_raw(shape: Vec<usize>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), probs.len());
        JointPmf { shape, probs }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.probs[flat_index(&self.shape, index)]
    }

    /// Marginal over the listed axes, kept in increasing axis order.
    pub fn marginal(&self, axes: &[usize]) -> JointPmf {
        let (shape, probs) = marginalize(&self.shape, &self.probs, axes);
        JointPmf { shape, probs }
    }

    pub fn marginal_pmf(&self, axis: usize) -> Pmf {
        Pmf {
            probs: self.marginal(&[axis]).probs,
        }
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }

    /// `I(A; B)` for disjoint axis sets.
    pub fn mutual_information_between(&self, a: &[usize], b: &[usize]) -> f64 {
        let mut ab: Vec<usize> = a.iter().chain(b).copied().collect();
        ab.sort_unstable();
        let i =
            self.marginal(a).entropy() + self.marginal(b).entropy() - self.marginal(&ab).entropy();
        i.max(0.0)
    }
}

/// Exact joint type over a product alphabet, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JointTypeVector {
    shape: Vec<usize>,
    counts: Vec<u64>,
    denominator: u64,
}

impl JointTypeVector {
    pub fn new(shape: Vec<usize>, counts: Vec<u64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if shape.is_empty() || len != counts.len() {
            return Err(Error::DimensionMismatch(len, counts.len()));
        }
        let denominator = counts.iter().sum();
        if denominator == 0 {
            return Err(Error::InvalidType("joint counts have no mass".into()));
        }
        Ok(JointTypeVector {
            shape,
            counts,
            denominator,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn get(&self, index: &[usize]) -> u64 {
        self.counts[flat_index(&self.shape, index)]
    }

    pub fn marginal(&self, axes: &[usize]) -> JointTypeVector {
        let (shape, counts) = marginalize(&self.shape, &self.counts, axes);
        JointTypeVector {
            shape,
            counts,
            denominator: self.denominator,
        }
    }

    pub fn marginal_type(&self, axis: usize) -> TypeVector {
        TypeVector {
            counts: self.marginal(&[axis]).counts,
            denominator: self.denominator,
        }
    }

    pub fn to_pmf(&self) -> JointPmf {
        let n = self.denominator as f64;
        JointPmf {
            shape: self.shape.clone(),
            probs: self.counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }

    /// Swaps the two axes of a 2-D joint type.
    pub fn transposed(&self) -> JointTypeVector {
        assert_eq!(self.shape.len(), 2, "transpose needs a 2-D joint type");
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut counts = vec![0; r * c];
        for i in 0..r {
            for j in 0..c {
                counts[j * r + i] = self.counts[i * c + j];
            }
        }
        JointTypeVector {
            shape: vec![c, r],
            counts,
            denominator: self.denominator,
        }
    }

    pub fn entropy(&self) -> f64 {
        count_entropy(&self.counts, self.denominator)
    }
}

/// Size of a type class, exact and in nats.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeClassSize {
    pub exact: BigUint,
    pub log: f64,
}

pub fn entropy(p: &Pmf) -> f64 {
    entropy_of(p.probs())
}

pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// `D(p‖q)`, `+∞` when `p` puts mass where `q` has none.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<ExtReal> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    let mut d = 0.0;
    for (&a, &b) in p.probs().iter().zip(q.probs()) {
        if a > 0.0 {
            if b == 0.0 {
                return Ok(ExtReal::Infinite);
            }
            d += a * (a / b).ln();
        }
    }
    Ok(ExtReal::Finite(d.max(0.0)))
}

/// `I` between axis 0 and the remaining axes; `I(X;Y)` for a 2-D joint.
pub fn mutual_information(j: &JointPmf) -> f64 {
    let rest: Vec<usize> = (1..j.shape().len()).collect();
    j.mutual_information_between(&[0], &rest)
}

/// `H(others | condition_on)` for a joint pmf.
pub fn conditional_entropy(j: &JointPmf, condition_on: usize) -> f64 {
    (j.entropy() - j.marginal(&[condition_on]).entropy()).max(0.0)
}

/// All types of the given denominator, in lexicographic order of counts.
pub fn enumerate_types(alphabet: Alphabet, denominator: u64) -> Vec<TypeVector> {
    let s = alphabet.size();
    let mut out = Vec::new();
    let mut counts = vec![0u64; s];
    fn rec(pos: usize, left: u64, counts: &mut Vec<u64>, out: &mut Vec<TypeVector>, n: u64) {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            out.push(TypeVector {
                counts: counts.clone(),
                denominator: n,
            });
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            rec(pos + 1, left - c, counts, out, n);
        }
    }
    if denominator > 0 {
        rec(0, denominator, &mut counts, &mut out, denominator);
    }
    out
}

/// All `rows × cols` joint types with the given denominator whose marginals
/// match the optional pinned types, in lexicographic order of flattened
/// counts. Inconsistent marginals give an empty list.
pub fn enumerate_joint_types(
    rows: usize,
    cols: usize,
    denominator: u64,
    row_marginal: Option<&TypeVector>,
    col_marginal: Option<&TypeVector>,
) -> Vec<JointTypeVector> {
    let mut out = Vec::new();
    for_each_joint_type(rows, cols, denominator, row_marginal, col_marginal, |c| {
        out.push(JointTypeVector {
            shape: vec![rows, cols],
            counts: c.to_vec(),
            denominator,
        });
    });
    out
}

/// Callback form of [`enumerate_joint_types`]; avoids materializing the list.
pub(crate) fn for_each_joint_type(
    rows: usize,
    cols: usize,
    denominator: u64,
    row_marginal: Option<&TypeVector>,
    col_marginal: Option<&TypeVector>,
    mut f: impl FnMut(&[u64]),
) {
    for m in [row_marginal, col_marginal].into_iter().flatten() {
        if m.denominator() != denominator {
            return;
        }
    }
    if row_marginal.is_some_and(|m| m.size() != rows)
        || col_marginal.is_some_and(|m| m.size() != cols)
        || denominator == 0
    {
        return;
    }
    let mut row_rem: Vec<u64> = match row_marginal {
        Some(m) => m.counts().to_vec(),
        None => vec![u64::MAX; rows],
    };
    let mut col_rem: Vec<u64> = match col_marginal {
        Some(m) => m.counts().to_vec(),
        None => vec![u64::MAX; cols],
    };
    let mut counts = vec![0u64; rows * cols];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        cell: usize,
        left: u64,
        rows: usize,
        cols: usize,
        pinned: (bool, bool),
        row_rem: &mut [u64],
        col_rem: &mut [u64],
        counts: &mut [u64],
        f: &mut dyn FnMut(&[u64]),
    ) {
        if cell == rows * cols {
            if left == 0
                && (!pinned.0 || row_rem.iter().all(|&r| r == 0))
                && (!pinned.1 || col_rem.iter().all(|&c| c == 0))
            {
                f(counts);
            }
            return;
        }
        let (r, c) = (cell / cols, cell % cols);
        let hi = left.min(row_rem[r]).min(col_rem[c]);
        // Forced values close each row / column and the last cell.
        let lo = if cell + 1 == rows * cols {
            left
        } else if pinned.0 && c + 1 == cols {
            row_rem[r]
        } else if pinned.1 && r + 1 == rows {
            col_rem[c]
        } else {
            0
        };
        if lo > hi {
            return;
        }
        for v in lo..=hi {
            counts[cell] = v;
            row_rem[r] -= v;
            col_rem[c] -= v;
            rec(
                cell + 1,
                left - v,
                rows,
                cols,
                pinned,
                row_rem,
                col_rem,
                counts,
                f,
            );
            row_rem[r] += v;
            col_rem[c] += v;
        }
        counts[cell] = 0;
    }
    let pinned = (row_marginal.is_some(), col_marginal.is_some());
    rec(
        0,
        denominator,
        rows,
        cols,
        pinned,
        &mut row_rem,
        &mut col_rem,
        &mut counts,
        &mut f,
    );
}

/// Multinomial coefficient `n! / Π c!`, exactly and in nats.
pub fn type_class_size(t: &TypeVector) -> TypeClassSize {
    TypeClassSize {
        exact: multinomial(t.counts()),
        log: ln_multinomial(t.counts()),
    }
}

pub(crate) fn multinomial(counts: &[u64]) -> BigUint {
    let mut result = BigUint::one();
    let mut m: u64 = 0;
    for &c in counts {
        for t in 1..=c {
            m += 1;
            result *= m;
            result /= t;
        }
    }
    result
}

pub(crate) fn ln_multinomial(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    ln_factorial(n) - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>()
}

/// Natural log of a big unsigned integer.
pub(crate) fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return num_traits::ToPrimitive::to_f64(x).unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    num_traits::ToPrimitive::to_f64(&top).unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Uniform draw from the type class of `t`: a random permutation of the
/// fixed composition.
pub fn sample_uniform_from_type_class<R: Rng + ?Sized>(t: &TypeVector, rng: &mut R) -> Vec<Symbol> {
    let mut seq = first_sequence(t);
    seq.shuffle(rng);
    seq
}

/// The lexicographically smallest sequence of type `t`.
pub(crate) fn first_sequence(t: &TypeVector) -> Vec<Symbol> {
    let mut seq = Vec::with_capacity(t.denominator() as usize);
    for (a, &c) in t.counts().iter().enumerate() {
        seq.extend(std::iter::repeat_n(a as Symbol, c as usize));
    }
    seq
}

/// Every sequence of type `t`, in lexicographic order.
pub fn type_class_sequences(t: &TypeVector) -> Vec<Vec<Symbol>> {
    let mut seq = first_sequence(t);
    let mut out = vec![seq.clone()];
    while next_permutation(&mut seq) {
        out.push(seq.clone());
    }
    out
}

fn next_permutation(s: &mut [Symbol]) -> bool {
    if s.len() < 2 {
        return false;
    }
    let mut i = s.len() - 1;
    while i > 0 && s[i - 1] >= s[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = s.len() - 1;
    while s[j] <= s[i - 1] {
        j -= 1;
    }
    s.swap(i - 1, j);
    s[i..].reverse();
    true
}

/// Type of a single sequence.
pub fn type_of(x: &[Symbol], alphabet: Alphabet) -> Result<TypeVector> {
    let mut counts = vec![0u64; alphabet.size()];
    for &s in x {
        let s = s as usize;
        if s >= alphabet.size() {
            return Err(Error::SymbolOutOfRange {
                symbol: s,
                size: alphabet.size(),
            });
        }
        counts[s] += 1;
    }
    TypeVector::new(counts)
}

/// Joint type of equal-length sequences, one axis per sequence.
pub fn joint_type_of(seqs: &[&[Symbol]], sizes: &[usize]) -> Result<JointTypeVector> {
    if seqs.len() != sizes.len() || seqs.is_empty() {
        return Err(Error::DimensionMismatch(seqs.len(), sizes.len()));
    }
    let n = seqs[0].len();
    for s in seqs {
        if s.len() != n {
            return Err(Error::LengthMismatch(n, s.len()));
        }
    }
    let mut counts = vec![0u64; sizes.iter().product()];
    for pos in 0..n {
        let mut idx = 0;
        for (s, &size) in seqs.iter().zip(sizes) {
            let sym = s[pos] as usize;
            if sym >= size {
                return Err(Error::SymbolOutOfRange { symbol: sym, size });
            }
            idx = idx * size + sym;
        }
        counts[idx] += 1;
    }
    JointTypeVector::new(sizes.to_vec(), counts)
}

/// `H` of a count vector with the given total: `ln n − (1/n) Σ c ln c`.
pub(crate) fn count_entropy(counts: &[u64], n: u64) -> f64 {
    let nf = n as f64;
    let s: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let cf = c as f64;
            cf * cf.ln()
        })
        .sum();
    (nf.ln() - s / nf).max(0.0)
}

/// Mutual information between the row and column variables of a count matrix.
pub(crate) fn counts_mutual_information(counts: &[u64], rows: usize, cols: usize) -> f64 {
    debug_assert_eq!(counts.len(), rows * cols);
    let clnc = |c: u64| {
        if c == 0 {
            0.0
        } else {
            c as f64 * (c as f64).ln()
        }
    };
    let mut row = vec![0u64; rows];
    let mut col = vec![0u64; cols];
    let mut joint = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let v = counts[r * cols + c];
            row[r] += v;
            col[c] += v;
            joint += clnc(v);
        }
    }
    let n: u64 = row.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let s = joint + clnc(n)
        - row.iter().map(|&v| clnc(v)).sum::<f64>()
        - col.iter().map(|&v| clnc(v)).sum::<f64>();
    (s / n as f64).max(0.0)
}

/// Cached `c ln c` for small counts.
#[derive(Clone, Debug)]
pub(crate) struct CountLog {
    table: Vec<f64>,
}

impl CountLog {
    pub fn new(max: u64) -> Self {
        let table = (0..=max)
            .map(|c| {
                if c == 0 {
                    0.0
                } else {
                    c as f64 * (c as f64).ln()
                }
            })
            .collect();
        CountLog { table }
    }

    #[inline]
    pub fn clnc(&self, c: u64) -> f64 {
        self.table[c as usize]
    }

    /// Entropy of counts summing to `n` (no clamping).
    #[inline]
    pub fn entropy(&self, counts: &[u64], n: u64) -> f64 {
        let s: f64 = counts.iter().map(|&c| self.clnc(c)).sum();
        (self.clnc(n) - s) / n as f64
    }
}

pub(crate) fn flat_index(shape: &[usize], index: &[usize]) -> usize {
    debug_assert_eq!(shape.len(), index.len());
    index.iter().zip(shape).fold(0, |acc, (&i, &s)| {
        debug_assert!(i < s);
        acc * s + i
    })
}

fn marginalize<T: Copy + Default + std::ops::AddAssign>(
    shape: &[usize],
    data: &[T],
    axes: &[usize],
) -> (Vec<usize>, Vec<T>) {
    let mut keep: Vec<usize> = axes.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let out_shape: Vec<usize> = keep.iter().map(|&a| shape[a]).collect();
    let mut out = vec![T::default(); out_shape.iter().product::<usize>().max(1)];
    let mut idx = vec![0usize; shape.len()];
    for &v in data {
        let o = keep.iter().fold(0, |acc, &a| acc * shape[a] + idx[a]);
        out[o] += v;
        for d in (0..shape.len()).rev() {
            idx[d] += 1;
            if idx[d] < shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    (out_shape, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn a(n: usize) -> Alphabet {
        Alphabet::new(n).unwrap()
    }

    fn pmf(p: &[f64]) -> Pmf {
        Pmf::new(p.to_vec()).unwrap()
    }

    fn binom(n: u64, k: u64) -> u64 {
        (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&pmf(&[0.5, 0.5])) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(entropy(&pmf(&[1.0, 0.0])), 0.0);
        // Independent 30-digit evaluation: -(0.89 ln 0.89 + 0.11 ln 0.11).
        let oracle = 0.346_515_336_918_666_15;
        assert!((entropy(&pmf(&[0.89, 0.11])) - oracle).abs() < 1e-14);
    }

    #[test]
    fn kl_examples() {
        let d = kl_divergence(&pmf(&[1.0, 0.0]), &pmf(&[0.5, 0.5])).unwrap();
        assert!((d.finite().unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let p = pmf(&[0.3, 0.7]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), ExtReal::Finite(0.0));
        assert_eq!(
            kl_divergence(&pmf(&[0.5, 0.5]), &pmf(&[1.0, 0.0])).unwrap(),
            ExtReal::Infinite
        );
        assert!(matches!(
            kl_divergence(&pmf(&[0.5, 0.5]), &Pmf::uniform(3)),
            Err(Error::DimensionMismatch(2, 3))
        ));
    }

    #[test]
    fn mutual_information_examples() {
        let p = pmf(&[0.2, 0.8]);
        let q = pmf(&[0.1, 0.6, 0.3]);
        assert!(mutual_information(&JointPmf::product(&p, &q)).abs() < 1e-15);
        let diag = JointPmf::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((mutual_information(&diag) - std::f64::consts::LN_2).abs() < 1e-15);

        // Entropy-identity and chain-rule oracles on a random 3x3 joint.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw: Vec<f64> = (0..9).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect();
        let s: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let j = JointPmf::new(vec![3, 3], probs.clone()).unwrap();
        let rows: Vec<f64> = (0..3)
            .map(|r| probs[3 * r..3 * r + 3].iter().sum())
            .collect();
        let cols: Vec<f64> = (0..3)
            .map(|c| (0..3).map(|r| probs[3 * r + c]).sum())
            .collect();
        let h = |v: &[f64]| -v.iter().map(|x| x * x.ln()).sum::<f64>();
        let oracle = h(&rows) + h(&cols) - h(&probs);
        assert!((mutual_information(&j) - oracle).abs() < 1e-13);
        assert!((conditional_entropy(&j, 1) - (h(&probs) - h(&cols))).abs() < 1e-13);
        assert!((conditional_entropy(&j, 0) - (h(&probs) - h(&rows))).abs() < 1e-13);
    }

    #[test]
    fn conditional_entropy_examples() {
        let diag = JointPmf::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(conditional_entropy(&diag, 0), 0.0);
        let p = pmf(&[0.2, 0.8]);
        let q = pmf(&[0.1, 0.6, 0.3]);
        let prod = JointPmf::product(&p, &q);
        assert!((conditional_entropy(&prod, 0) - q.entropy()).abs() < 1e-14);
    }

    #[test]
    fn enumerate_types_examples() {
        let t = enumerate_types(a(2), 2);
        let counts: Vec<Vec<u64>> = t.iter().map(|t| t.counts().to_vec()).collect();
        assert_eq!(counts, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        let t = enumerate_types(a(3), 1);
        assert_eq!(t.len(), 3);
        assert!(t
            .iter()
            .all(|t| t.counts().iter().filter(|&&c| c == 1).count() == 1));
        assert_eq!(enumerate_types(a(2), 10).len(), 11);
    }

    #[test]
    fn enumerate_types_count_and_order() {
        for s in 1..=4usize {
            for n in 1..=8u64 {
                let t = enumerate_types(a(s), n);
                assert_eq!(t.len() as u64, binom(n + s as u64 - 1, s as u64 - 1));
                assert!(t.windows(2).all(|w| w[0].counts() < w[1].counts()));
            }
        }
    }

    #[test]
    fn enumerate_joint_types_examples() {
        assert_eq!(enumerate_joint_types(2, 2, 2, None, None).len(), 10);

        let half = TypeVector::new(vec![1, 1]).unwrap();
        let pinned = enumerate_joint_types(2, 2, 2, Some(&half), Some(&half));
        let filtered: Vec<JointTypeVector> = enumerate_joint_types(2, 2, 2, None, None)
            .into_iter()
            .filter(|j| j.marginal_type(0) == half && j.marginal_type(1) == half)
            .collect();
        assert_eq!(pinned, filtered);
        assert_eq!(pinned.len(), 2);

        let top = TypeVector::new(vec![2, 0]).unwrap();
        let rows = enumerate_joint_types(2, 2, 2, Some(&top), None);
        assert_eq!(rows.len(), 3);
        assert!(rows
            .iter()
            .all(|j| j.get(&[1, 0]) == 0 && j.get(&[1, 1]) == 0));

        let bad = TypeVector::new(vec![3, 0]).unwrap();
        assert!(enumerate_joint_types(2, 2, 2, Some(&bad), None).is_empty());
    }

    #[test]
    fn pinned_enumeration_matches_filter_oracle() {
        for n in 1..=5u64 {
            for r in enumerate_types(a(2), n) {
                for c in enumerate_types(a(3), n) {
                    let pinned = enumerate_joint_types(2, 3, n, Some(&r), Some(&c));
                    let filtered: Vec<_> = enumerate_joint_types(2, 3, n, None, None)
                        .into_iter()
                        .filter(|j| j.marginal_type(0) == r && j.marginal_type(1) == c)
                        .collect();
                    assert_eq!(pinned, filtered);
                }
            }
        }
    }

    #[test]
    fn type_class_size_examples() {
        let size = |c: &[u64]| type_class_size(&TypeVector::new(c.to_vec()).unwrap());
        assert_eq!(size(&[1, 1]).exact, BigUint::from(2u32));
        assert_eq!(size(&[2, 2]).exact, BigUint::from(6u32));
        assert_eq!(size(&[3, 2, 1]).exact, BigUint::from(60u32));
        let big = size(&[100, 100]);
        assert!((big_ln(&big.exact) - big.log).abs() < 1e-9);
    }

    #[test]
    fn type_class_size_two_sided_bound() {
        for s in [2usize, 3] {
            for n in 1..=14u64 {
                for t in enumerate_types(a(s), n) {
                    let size = type_class_size(&t);
                    let nh = n as f64 * t.entropy();
                    let lower = nh - s as f64 * ((n + 1) as f64).ln();
                    assert!(size.log >= lower - 1e-9, "{t:?}");
                    assert!(size.log <= nh + 1e-9, "{t:?}");
                    assert!((big_ln(&size.exact) - size.log).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn type_class_sequences_are_lexicographic_and_complete() {
        let t = TypeVector::new(vec![2, 1, 1]).unwrap();
        let seqs = type_class_sequences(&t);
        assert_eq!(seqs.len(), 12);
        assert!(seqs.windows(2).all(|w| w[0] < w[1]));
        assert!(seqs.iter().all(|s| type_of(s, a(3)).unwrap() == t));
    }

    #[test]
    fn sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = TypeVector::new(vec![5, 0]).unwrap();
        assert_eq!(sample_uniform_from_type_class(&t, &mut rng), vec![0; 5]);

        let t = TypeVector::new(vec![1, 1]).unwrap();
        let n = 100_000;
        let zeros_first = (0..n)
            .filter(|_| sample_uniform_from_type_class(&t, &mut rng)[0] == 0)
            .count();
        assert!((zeros_first as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn sampling_is_uniform_over_class() {
        let t = TypeVector::new(vec![2, 2]).unwrap();
        let class = type_class_sequences(&t);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut hits = vec![0usize; class.len()];
        for _ in 0..n {
            let s = sample_uniform_from_type_class(&t, &mut rng);
            assert_eq!(type_of(&s, a(2)).unwrap(), t);
            hits[class.binary_search(&s).unwrap()] += 1;
        }
        let u = 1.0 / class.len() as f64;
        let tv: f64 = hits
            .iter()
            .map(|&h| (h as f64 / n as f64 - u).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 0.02, "tv = {tv}");
    }

    #[test]
    fn joint_type_examples() {
        let j = joint_type_of(&[&[0, 1], &[0, 1]], &[2, 2]).unwrap();
        assert_eq!(j.counts(), &[1, 0, 0, 1]);
        let x = [0u8, 2, 1, 2, 0];
        let j = joint_type_of(&[&x, &x], &[3, 3]).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                if r != c {
                    assert_eq!(j.get(&[r, c]), 0);
                }
            }
        }
        assert!(matches!(
            joint_type_of(&[&[0, 1], &[0]], &[2, 2]),
            Err(Error::LengthMismatch(2, 1))
        ));
    }

    #[test]
    fn quantize_is_nearest() {
        let (t, err) = TypeVector::quantize(&pmf(&[1.0 / 3.0, 2.0 / 3.0]), 64).unwrap();
        assert_eq!(t.counts(), &[21, 43]);
        assert!(err < 1.0 / 64.0);
        let (t, err) = TypeVector::quantize(&pmf(&[0.25, 0.75]), 8).unwrap();
        assert_eq!(t.counts(), &[2, 6]);
        assert_eq!(err, 0.0);
    }

    proptest! {
        #[test]
        fn joint_type_marginals_match(
            pairs in proptest::collection::vec((0u8..3, 0u8..2), 1..40)
        ) {
            let x: Vec<u8> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<u8> = pairs.iter().map(|p| p.1).collect();
            let j = joint_type_of(&[&x, &y], &[3, 2]).unwrap();
            prop_assert_eq!(j.marginal_type(0), type_of(&x, a(3)).unwrap());
            prop_assert_eq!(j.marginal_type(1), type_of(&y, a(2)).unwrap());
        }

        #[test]
        fn mutual_information_nonneg_zero_iff_product(counts in proptest::collection::vec(0u64..6, 6)) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let j = JointTypeVector::new(vec![2, 3], counts).unwrap();
            let i = mutual_information(&j.to_pmf());
            prop_assert!(i >= -1e-12);
            let n = j.denominator();
            let r = j.marginal_type(0);
            let c = j.marginal_type(1);
            let factorizes = (0..2).all(|a| (0..3).all(|b| {
                j.get(&[a, b]) * n == r.counts()[a] * c.counts()[b]
            }));
            prop_assert_eq!(factorizes, i < 1e-12);
        }

        #[test]
        fn kl_nonneg_zero_iff_equal(
            raw_p in proptest::collection::vec(0.01f64..1.0, 4),
            raw_q in proptest::collection::vec(0.01f64..1.0, 4),
        ) {
            let norm = |v: &[f64]| { let s: f64 = v.iter().sum(); Pmf::new(v.iter().map(|x| x / s).collect()).unwrap() };
            let (p, q) = (norm(&raw_p), norm(&raw_q));
            let d = kl_divergence(&p, &q).unwrap().finite().unwrap();
            prop_assert!(d >= 0.0);
            prop_assert_eq!(kl_divergence(&p, &p).unwrap().finite().unwrap(), 0.0);
            let same = p.probs().iter().zip(q.probs()).all(|(a, b)| (a - b).abs() < 1e-12);
            prop_assert!(same || d > 0.0);
        }
    }
}
