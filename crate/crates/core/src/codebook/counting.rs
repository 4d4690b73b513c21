//! Exact counts of sequences discarded by the distance constraints.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{exceeds, CodeConfig};
use crate::error::{Error, Result};
use crate::types::{
    big_ln, for_each_joint_type, multinomial, type_class_sequences, type_class_size, Symbol,
};

fn check_class(cfg: &CodeConfig, c: usize) -> Result<()> {
    if c >= cfg.palette().len() {
        return Err(Error::InvalidConfig(format!(
            "palette index {c} out of range ({} entries)",
            cfg.palette().len()
        )));
    }
    Ok(())
}

/// `Σ_j |T^k(P_j)| · #{x̄ ∈ T^n(Q_c) : d(x̄, x̃_j) ≤ Δ_j}` with `x̃_j` any
/// sequence of type `Q_μ(j)`, summed over joint types.
pub fn discarded_count(cfg: &CodeConfig, c: usize) -> Result<BigUint> {
    check_class(cfg, c)?;
    let q = cfg.input().size();
    let n = cfg.n();
    let qc = &cfg.palette()[c];
    let mut total = BigUint::zero();
    for (j, p_j) in cfg.source_types().iter().enumerate() {
        let thr = cfg.thresholds()[j];
        if thr == f64::NEG_INFINITY {
            continue;
        }
        let qj = cfg.codeword_type(j);
        let mut near = BigUint::zero();
        // Rows follow x̄ (type Q_c), columns follow x̃_j (type Q_μ(j)).
        for_each_joint_type(q, q, n, Some(qc), Some(qj), |counts| {
            if exceeds(cfg.joint_counts_distance(counts), thr) {
                return;
            }
            let mut ways = BigUint::from(1u8);
            let mut column = vec![0u64; q];
            for b in 0..q {
                for a in 0..q {
                    column[a] = counts[a * q + b];
                }
                ways *= multinomial(&column);
            }
            near += ways;
        });
        total += near * type_class_size(p_j).exact;
    }
    Ok(total)
}

/// Same count evaluated literally with the given representatives `x̃_j`
/// (one per source type), by scanning all of `T^n(Q_c)`.
pub fn discarded_count_by_representative(
    cfg: &CodeConfig,
    c: usize,
    representatives: &[Vec<Symbol>],
) -> Result<BigUint> {
    check_class(cfg, c)?;
    if representatives.len() != cfg.num_source_types() {
        return Err(Error::LengthMismatch(
            representatives.len(),
            cfg.num_source_types(),
        ));
    }
    let seqs = type_class_sequences(&cfg.palette()[c]);
    let mut total = BigUint::zero();
    for (j, p_j) in cfg.source_types().iter().enumerate() {
        let thr = cfg.thresholds()[j];
        let near = seqs
            .iter()
            .filter(|x| !exceeds(cfg.sequence_distance(x, &representatives[j]), thr))
            .count();
        total += BigUint::from(near) * type_class_size(p_j).exact;
    }
    Ok(total)
}

/// Condition check for one palette entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassFeasibility {
    pub palette_index: usize,
    /// Exact left-hand side.
    pub discarded: String,
    pub class_size: String,
    #[serde(with = "crate::ext::inf_float")]
    pub ln_discarded: f64,
    /// `ln(ζ_n |T^n(Q_c)| e^{−nδ})`.
    #[serde(with = "crate::ext::inf_float")]
    pub ln_allowance: f64,
    pub satisfied: bool,
    /// Largest `δ` for which the condition holds (`+∞` if nothing is discarded).
    #[serde(with = "crate::ext::inf_float")]
    pub achievable_delta: f64,
    /// `(1 − ζ_n e^{−nδ}) |T^n(Q_c)|`; negative when the bound is vacuous.
    #[serde(with = "crate::ext::inf_float")]
    pub feasible_floor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    #[serde(with = "crate::ext::inf_float")]
    pub zeta_n: f64,
    #[serde(with = "crate::ext::inf_float")]
    pub ln_zeta_n: f64,
    /// `ζ_n e^{−nδ}`.
    #[serde(with = "crate::ext::inf_float")]
    pub kappa: f64,
    /// Set when `ζ_n e^{−nδ} ≥ 1`, i.e. the cardinality floor says nothing.
    pub floor_vacuous: bool,
    pub classes: Vec<ClassFeasibility>,
}

impl FeasibilityReport {
    pub fn all_satisfied(&self) -> bool {
        self.classes.iter().all(|c| c.satisfied)
    }
}

/// Compares the discarded count with `ζ_n |T^n(Q_c)| e^{−nδ}` for every palette entry.
pub fn feasibility_check(cfg: &CodeConfig) -> Result<FeasibilityReport> {
    let ln_zeta = cfg.ln_zeta();
    let nf = cfg.n() as f64;
    let ln_kappa = ln_zeta - nf * cfg.delta();
    let kappa = ln_kappa.exp();
    let mut classes = Vec::new();
    for c in 0..cfg.palette().len() {
        let discarded = discarded_count(cfg, c)?;
        let size = type_class_size(&cfg.palette()[c]);
        let ln_discarded = big_ln(&discarded);
        let ln_allowance = ln_kappa + size.log;
        let satisfied = discarded.is_zero() || ln_discarded <= ln_allowance;
        let achievable_delta = if discarded.is_zero() {
            f64::INFINITY
        } else {
            (ln_zeta + size.log - ln_discarded) / nf
        };
        classes.push(ClassFeasibility {
            palette_index: c,
            discarded: discarded.to_string(),
            class_size: size.exact.to_string(),
            ln_discarded,
            ln_allowance,
            satisfied,
            achievable_delta,
            feasible_floor: (1.0 - kappa) * size.log.exp(),
        });
    }
    Ok(FeasibilityReport {
        zeta_n: ln_zeta.exp(),
        ln_zeta_n: ln_zeta,
        kappa,
        floor_vacuous: kappa >= 1.0,
        classes,
    })
}
