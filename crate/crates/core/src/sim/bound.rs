//! Finite-length evaluation of the ensemble union bound.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CountScorer, TIE_TOLERANCE};
use crate::codebook::{discarded_count, exceeds, CodeConfig};
use crate::error::{Error, Result};
use crate::exponents::{Channel, SourceSpec};
use crate::ext::ExtReal;
use crate::types::{
    big_ln, for_each_joint_type, ln_multinomial, multinomial, type_class_size, TypeVector,
};

/// Largest block length accepted by [`finite_n_rcu_bound`].
pub const RCU_MAX_N: u64 = 12;

/// Exact probability of a source type class.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceTypeMass {
    pub exact: BigRational,
    pub value: f64,
}

/// `|T^k(P_i)| Π_v P_V(v)^{k P_i(v)}`, exact in the binary expansion of `P_V`.
pub fn source_type_mass(src: &SourceSpec, t: &TypeVector) -> Result<SourceTypeMass> {
    if t.size() != src.p_v.len() {
        return Err(Error::DimensionMismatch(t.size(), src.p_v.len()));
    }
    let mut exact = BigRational::from_integer(BigInt::from(type_class_size(t).exact));
    for (&p, &c) in src.p_v.probs().iter().zip(t.counts()) {
        if c == 0 {
            continue;
        }
        let p = BigRational::from_float(p).expect("finite probability");
        exact *= num_traits::pow(p, c as usize);
    }
    let value = exact.to_f64().unwrap_or(0.0);
    Ok(SourceTypeMass { exact, value })
}

/// How the bound on the conditional codeword law is instantiated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFactor {
    /// `κ_c = max(ζ_n e^{−nδ}, D_c / |T_c|)`, or 0 when class `c` loses nothing.
    #[default]
    Analytic,
    /// `κ_c = D_c / |T_c|` from the exact discarded count `D_c`.
    ExactCount,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcuBound {
    pub value: f64,
    /// Contribution of each source type.
    pub per_type: Vec<f64>,
    /// `κ_c` per palette entry (unused entries are 0).
    pub kappa: Vec<f64>,
    /// `1/(1 − κ_c)`, infinite when `κ_c ≥ 1`.
    pub class_factor: Vec<ExtReal>,
    /// Number of `(i, V_XY)` terms where `min{1, ·}` was active.
    pub clamped: u64,
    /// Number of `(i, V_XY)` terms evaluated.
    pub evaluated: u64,
}

fn class_kappa(cfg: &CodeConfig, c: usize, mode: PairFactor) -> Result<f64> {
    let d = discarded_count(cfg, c)?;
    if d.is_zero() {
        return Ok(0.0);
    }
    let ln_ratio = big_ln(&d) - type_class_size(&cfg.palette()[c]).log;
    let exact = ln_ratio.exp();
    Ok(match mode {
        PairFactor::ExactCount => exact,
        PairFactor::Analytic => {
            let analytic = (cfg.ln_zeta() - cfg.n() as f64 * cfg.delta()).exp();
            analytic.max(exact)
        }
    })
}

/// Upper bound on the ensemble error probability:
///
/// `Σ_i Σ_{v ∈ T(P_i)} P(v) E[min{1, Σ_{v̄ ≠ v} P[q(j, P̂_{X_v̄ Y}) ≥ q(i, P̂_{X_v Y})]}]`
///
/// with every pairwise term bounded by the number of admissible competitors
/// in `T(Q_μ(j))` times `1/((1 − κ_μ(i))(1 − κ_μ(j)) |T(Q_μ(j))|)`. Sums run
/// over exact joint types; ties count against the decoder.
pub fn finite_n_rcu_bound(cfg: &CodeConfig, w: &Channel, mode: PairFactor) -> Result<RcuBound> {
    let n = cfg.n();
    if n > RCU_MAX_N {
        return Err(Error::EnumerationTooLarge {
            what: "block length for the finite-n bound".into(),
            size: n as u128,
            cap: RCU_MAX_N as u128,
        });
    }
    if cfg.input().size() != w.inputs() {
        return Err(Error::DimensionMismatch(cfg.input().size(), w.inputs()));
    }
    let (nx, ny) = (w.inputs(), w.outputs());
    let m = cfg.palette().len();
    let mut kappa = vec![0.0; m];
    for c in 0..m {
        if cfg.assignment().contains(&c) {
            kappa[c] = class_kappa(cfg, c, mode)?;
        }
    }
    let class_factor: Vec<ExtReal> = kappa
        .iter()
        .map(|&k| {
            if k >= 1.0 {
                ExtReal::Infinite
            } else {
                ExtReal::Finite(1.0 / (1.0 - k))
            }
        })
        .collect();
    let scorer = CountScorer::new(cfg, w, cfg.metric());
    let num_types = cfg.num_source_types();
    let competitors: Vec<BigUint> = cfg
        .source_types()
        .iter()
        .map(|p| type_class_size(p).exact)
        .collect();
    let ln_class: Vec<f64> = (0..num_types)
        .map(|j| type_class_size(cfg.codeword_type(j)).log)
        .collect();
    let ln_w: Vec<f64> = (0..nx * ny).map(|z| w.prob(z / ny, z % ny).ln()).collect();

    let terms: Vec<(f64, u64, u64)> = (0..num_types)
        .into_par_iter()
        .map(|i| -> Result<(f64, u64, u64)> {
            let mass = source_type_mass(cfg.source(), &cfg.source_types()[i])?.value;
            let qi = cfg.codeword_type(i);
            let ci = cfg.assignment()[i];
            let mut vxy: Vec<Vec<u64>> = Vec::new();
            for_each_joint_type(nx, ny, n, Some(qi), None, |c| vxy.push(c.to_vec()));
            let mut parts: Vec<f64> = Vec::with_capacity(vxy.len());
            let mut clamped = 0u64;
            for counts in &vxy {
                // P[(X, Y) ∈ T(V_XY)] with X uniform on T(Q_i).
                let mut ln_p = 0.0;
                let mut possible = true;
                for x in 0..nx {
                    let row = &counts[x * ny..(x + 1) * ny];
                    ln_p += ln_multinomial(row);
                    for (y, &c) in row.iter().enumerate() {
                        if c > 0 {
                            if ln_w[x * ny + y] == f64::NEG_INFINITY {
                                possible = false;
                            }
                            ln_p += c as f64 * ln_w[x * ny + y];
                        }
                    }
                }
                if !possible {
                    continue;
                }
                let p_xy = ln_p.exp();
                let own = scorer.score(i, counts);
                let flat = TypeVector::new(counts.clone())?;
                let mut inner = 0.0;
                for j in 0..num_types {
                    let qj = cfg.codeword_type(j);
                    let cj = cfg.assignment()[j];
                    let thr = cfg.pair_threshold(i, j);
                    let mut beating = BigUint::zero();
                    let mut vbar_y = vec![0u64; nx * ny];
                    let mut vx_xbar = vec![0u64; nx * nx];
                    // Rows are (x, y) cells, columns are x̄.
                    for_each_joint_type(nx * ny, nx, n, Some(&flat), Some(qj), |split| {
                        vbar_y.iter_mut().for_each(|v| *v = 0);
                        vx_xbar.iter_mut().for_each(|v| *v = 0);
                        for cell in 0..nx * ny {
                            let (x, y) = (cell / ny, cell % ny);
                            for xb in 0..nx {
                                let c = split[cell * nx + xb];
                                vbar_y[xb * ny + y] += c;
                                vx_xbar[x * nx + xb] += c;
                            }
                        }
                        if !exceeds(cfg.joint_counts_distance(&vx_xbar), thr) {
                            return;
                        }
                        if scorer.score(j, &vbar_y) < own - TIE_TOLERANCE {
                            return;
                        }
                        let mut ways = BigUint::one();
                        for cell in 0..nx * ny {
                            ways *= multinomial(&split[cell * nx..(cell + 1) * nx]);
                        }
                        beating += ways;
                    });
                    if beating.is_zero() {
                        continue;
                    }
                    let mut count = competitors[j].clone();
                    if j == i {
                        count -= 1u8;
                    }
                    if count.is_zero() {
                        continue;
                    }
                    let factor = class_factor[ci].to_f64() * class_factor[cj].to_f64();
                    inner += factor * (big_ln(&count) + big_ln(&beating) - ln_class[j]).exp();
                    if inner >= 1.0 {
                        break;
                    }
                }
                if inner >= 1.0 {
                    clamped += 1;
                }
                parts.push(p_xy * inner.min(1.0));
            }
            Ok((mass * pairwise_sum(&parts), clamped, vxy.len() as u64))
        })
        .collect::<Result<_>>()?;
    let per_type: Vec<f64> = terms.iter().map(|t| t.0).collect();
    Ok(RcuBound {
        value: pairwise_sum(&per_type).min(1.0),
        per_type,
        kappa,
        class_factor,
        clamped: terms.iter().map(|t| t.1).sum(),
        evaluated: terms.iter().map(|t| t.2).sum(),
    })
}

/// Pairwise (cascade) summation.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1..=8 => v.iter().sum(),
        len => {
            let (a, b) = v.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{enumerate_types, Pmf};

    #[test]
    fn masses_partition_unity() {
        let src = SourceSpec::new(Pmf::new(vec![0.75, 0.25]).unwrap());
        let mut total = BigRational::zero();
        for t in enumerate_types(src.alphabet(), 8) {
            total += source_type_mass(&src, &t).unwrap().exact;
        }
        assert_eq!(total, BigRational::one());
    }

    #[test]
    fn mass_of_single_type() {
        let src = SourceSpec::new(Pmf::new(vec![0.5, 0.5]).unwrap());
        let t = TypeVector::new(vec![2, 2]).unwrap();
        let m = source_type_mass(&src, &t).unwrap();
        assert_eq!(m.exact, BigRational::new(6.into(), 16.into()));
    }

    #[test]
    fn pairwise_sum_matches_plain_sum() {
        let v: Vec<f64> = (1..=100).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
    }
}
