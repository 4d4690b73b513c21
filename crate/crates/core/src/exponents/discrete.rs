//! Exhaustive minimization over joint types of a fixed denominator.

use rayon::prelude::*;

use super::model::{Channel, ExponentResult, MetricSpec, SolverKind, SolverMetadata, SourceSpec};
use super::PairProblem;
use crate::codebook::COMPARE_TOLERANCE;
use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::types::{
    counts_mutual_information, enumerate_types, for_each_joint_type, CountLog, JointPmf, Pmf,
    TypeVector,
};

/// Cap on the number of joint types a single minimization may visit.
pub const ENUMERATION_CAP: u128 = 200_000_000;

fn meta(iterations: u64, quantization_error: f64) -> SolverMetadata {
    SolverMetadata {
        solver: Some(SolverKind::DiscreteExhaustive),
        iterations,
        quantization_error,
        ..Default::default()
    }
}

fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    r
}

fn check_cap(what: &str, size: u128) -> Result<()> {
    if size > ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge {
            what: what.into(),
            size,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(())
}

/// Ordering used for minimizers: value first, then lexicographic counts.
fn better(a: &(f64, Vec<u64>), b: &(f64, Vec<u64>)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn counts_pmf(shape: Vec<usize>, counts: &[u64], l: u64) -> JointPmf {
    JointPmf::from_raw(shape, counts.iter().map(|&c| c as f64 / l as f64).collect())
}

pub(crate) fn source_reliability(rate: f64, src: &SourceSpec, l: u64) -> Result<ExponentResult> {
    let p = src.p_v.probs();
    let s = p.len();
    if rate > (s as f64).ln() + COMPARE_TOLERANCE {
        return Ok(ExponentResult::infeasible(meta(0, 0.0)));
    }
    check_cap("source types", binom(l + s as u64 - 1, s as u64 - 1))?;
    let clog = CountLog::new(l);
    let lf = l as f64;
    let mut best: Option<(f64, Vec<u64>)> = None;
    let mut visited = 0u64;
    for t in enumerate_types(src.alphabet(), l) {
        visited += 1;
        let c = t.counts();
        if clog.entropy(c, l) < rate - COMPARE_TOLERANCE {
            continue;
        }
        let mut d = 0.0;
        let mut ok = true;
        for (v, &cv) in c.iter().enumerate() {
            if cv > 0 {
                if p[v] == 0.0 {
                    ok = false;
                    break;
                }
                d += cv as f64 / lf * (cv as f64 / (lf * p[v])).ln();
            }
        }
        if !ok {
            continue;
        }
        let cand = (d.max(0.0), c.to_vec());
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    // P_V itself is always a candidate, on or off the grid.
    if src.p_v.entropy() >= rate - COMPARE_TOLERANCE {
        return Ok(ExponentResult {
            value: ExtReal::ZERO,
            argmin: Some(JointPmf::from_raw(vec![s], p.to_vec())),
            meta: meta(visited, 0.0),
        });
    }
    Ok(match best {
        Some((v, c)) => ExponentResult {
            value: ExtReal::Finite(v),
            argmin: Some(counts_pmf(vec![s], &c, l)),
            meta: meta(visited, 0.0),
        },
        None => ExponentResult::infeasible(meta(visited, 0.0)),
    })
}

pub(crate) fn random_coding_exponent(
    q: &Pmf,
    w: &Channel,
    rate: f64,
    l: u64,
) -> Result<ExponentResult> {
    let (nx, ny) = (w.inputs(), w.outputs());
    let (ql, qerr) = TypeVector::quantize(q, l)?;
    let size: u128 = ql
        .counts()
        .iter()
        .map(|&r| binom(r + ny as u64 - 1, ny as u64 - 1))
        .product();
    check_cap("joint types", size)?;
    let lf = l as f64;
    let ln_w: Vec<f64> = (0..nx * ny).map(|z| w.prob(z / ny, z % ny).ln()).collect();
    let mut best: Option<(f64, Vec<u64>)> = None;
    let mut visited = 0u64;
    for_each_joint_type(nx, ny, l, Some(&ql), None, |c| {
        visited += 1;
        let mut d = 0.0;
        for z in 0..nx * ny {
            if c[z] > 0 {
                if ln_w[z] == f64::NEG_INFINITY {
                    return;
                }
                let row = ql.counts()[z / ny] as f64;
                d += c[z] as f64 / lf * ((c[z] as f64 / row).ln() - ln_w[z]);
            }
        }
        let i = counts_mutual_information(c, nx, ny);
        let cand = (d.max(0.0) + (i - rate).max(0.0), c.to_vec());
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    });
    let (value, argmin) = match best {
        Some((v, c)) => (v, counts_pmf(vec![nx, ny], &c, l)),
        None => return Ok(ExponentResult::infeasible(meta(visited, qerr))),
    };
    // Q_L × W is off the grid in general but always admissible.
    let prod = w.joint(&ql.to_pmf());
    let prod_value = (crate::types::mutual_information(&prod) - rate).max(0.0);
    let (value, argmin) = if prod_value < value {
        (prod_value, prod)
    } else {
        (value, argmin)
    };
    Ok(ExponentResult {
        value: ExtReal::Finite(value),
        argmin: Some(argmin),
        meta: meta(visited, qerr),
    })
}

pub(crate) fn expurgated_exponent(
    q: &Pmf,
    palette: &[Pmf],
    w: &Channel,
    rate: f64,
    l: u64,
) -> Result<ExponentResult> {
    let nx = w.inputs();
    let dw = w.bhattacharyya_matrix();
    let (ql, mut qerr) = TypeVector::quantize(q, l)?;
    let lf = l as f64;
    let mut best: Option<(f64, Vec<u64>)> = None;
    let mut visited = 0u64;
    for qc in palette {
        let (qcl, e) = TypeVector::quantize(qc, l)?;
        qerr = qerr.max(e);
        let size: u128 = ql
            .counts()
            .iter()
            .map(|&r| binom(r + nx as u64 - 1, nx as u64 - 1))
            .product();
        check_cap("couplings", size)?;
        for_each_joint_type(nx, nx, l, Some(&ql), Some(&qcl), |c| {
            visited += 1;
            let i = counts_mutual_information(c, nx, nx);
            if i > rate + COMPARE_TOLERANCE {
                return;
            }
            let mut ed = 0.0;
            for z in 0..nx * nx {
                if c[z] > 0 {
                    if dw[z].is_infinite() {
                        return;
                    }
                    ed += c[z] as f64 / lf * dw[z];
                }
            }
            let cand = (ed + i - rate, c.to_vec());
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        });
    }
    let mut out = best.map(|(v, c)| (v, counts_pmf(vec![nx, nx], &c, l)));
    // Product couplings have I = 0 and are admissible whenever R ≥ 0.
    if rate >= 0.0 {
        for qc in palette {
            let (qcl, _) = TypeVector::quantize(qc, l)?;
            let prod = JointPmf::product(&ql.to_pmf(), &qcl.to_pmf());
            let ed: f64 = prod
                .probs()
                .iter()
                .zip(&dw)
                .filter(|(&p, _)| p > 0.0)
                .map(|(&p, &d)| p * d)
                .sum();
            if ed.is_finite() && out.as_ref().is_none_or(|(v, _)| ed - rate < *v) {
                out = Some((ed - rate, prod));
            }
        }
    }
    Ok(match out {
        Some((v, p)) => ExponentResult {
            value: ExtReal::Finite(v),
            argmin: Some(p),
            meta: meta(visited, qerr),
        },
        None => ExponentResult::infeasible(meta(visited, qerr)),
    })
}

/// Per-thread scratch for evaluating triple joint types `(x, x̄, y)`.
struct TripleEval<'a> {
    prob: &'a PairProblem<'a>,
    nx: usize,
    ny: usize,
    l: u64,
    clog: CountLog,
    ln_w: Vec<f64>,
    qi: Vec<u64>,
    qj: Vec<u64>,
    const_d: f64,
    const_i: f64,
    n_xy: Vec<u64>,
    n_xby: Vec<u64>,
}

impl<'a> TripleEval<'a> {
    fn new(prob: &'a PairProblem<'a>, qi: &TypeVector, qj: &TypeVector, l: u64) -> Self {
        let (nx, ny) = (prob.w.inputs(), prob.w.outputs());
        let clog = CountLog::new(l);
        let sum_clnc = |t: &TypeVector| t.counts().iter().map(|&c| clog.clnc(c)).sum::<f64>();
        let const_d = -sum_clnc(qi);
        let const_i = clog.clnc(l) - sum_clnc(qj);
        TripleEval {
            prob,
            nx,
            ny,
            l,
            ln_w: (0..nx * ny)
                .map(|z| prob.w.prob(z / ny, z % ny).ln())
                .collect(),
            qi: qi.counts().to_vec(),
            qj: qj.counts().to_vec(),
            const_d,
            const_i,
            clog,
            n_xy: vec![0; nx * ny],
            n_xby: vec![0; nx * ny],
        }
    }

    /// Objective at a complete triple, or `None` if outside Γ or infinite.
    fn eval(&mut self, triple: &[u64]) -> Option<f64> {
        let (nx, ny) = (self.nx, self.ny);
        self.n_xy.iter_mut().for_each(|v| *v = 0);
        self.n_xby.iter_mut().for_each(|v| *v = 0);
        let mut s_xxy = 0.0;
        for x in 0..nx {
            for xb in 0..nx {
                for y in 0..ny {
                    let c = triple[(x * nx + xb) * ny + y];
                    if c > 0 {
                        self.n_xy[x * ny + y] += c;
                        self.n_xby[xb * ny + y] += c;
                        s_xxy += self.clog.clnc(c);
                    }
                }
            }
        }
        let lf = self.l as f64;
        let mut s_xy = 0.0;
        let mut lin_xy = 0.0;
        for z in 0..nx * ny {
            let c = self.n_xy[z];
            if c > 0 {
                if self.ln_w[z] == f64::NEG_INFINITY {
                    return None;
                }
                s_xy += self.clog.clnc(c);
                lin_xy += c as f64 * self.ln_w[z];
            }
        }
        let p = self.prob;
        let feasible = match p.metric {
            MetricSpec::Mmi => {
                let s_xby: f64 = self.n_xby.iter().map(|&c| self.clog.clnc(c)).sum();
                let s_qi: f64 = self.qi.iter().map(|&c| self.clog.clnc(c)).sum();
                let s_qj: f64 = self.qj.iter().map(|&c| self.clog.clnc(c)).sum();
                // (H(X) − H(XY)) + (H(X̄Y) − H(X̄)) − R_i + R_j
                let g = (s_xy - s_qi + s_qj - s_xby) / lf - p.rate_i + p.rate_j;
                g <= COMPARE_TOLERANCE
            }
            MetricSpec::Csiszar => {
                let mut lin_xby = 0.0;
                for z in 0..nx * ny {
                    let c = self.n_xby[z];
                    if c > 0 {
                        if self.ln_w[z] == f64::NEG_INFINITY {
                            return None;
                        }
                        lin_xby += c as f64 * self.ln_w[z];
                    }
                }
                lin_xy / lf - 2.0 * p.rate_i <= lin_xby / lf - 2.0 * p.rate_j + COMPARE_TOLERANCE
            }
            MetricSpec::Custom(_) => {
                let a = counts_pmf(vec![nx, ny], &self.n_xy, self.l);
                let b = counts_pmf(vec![nx, ny], &self.n_xby, self.l);
                let qi = p.metric.score(p.i, p.rate_i, &a, p.w);
                let qj = p.metric.score(p.j, p.rate_j, &b, p.w);
                qi <= qj + COMPARE_TOLERANCE
            }
        };
        if !feasible {
            return None;
        }
        let d = ((s_xy + self.const_d - lin_xy) / lf).max(0.0);
        let mi = ((self.const_i - s_xy + s_xxy) / lf).max(0.0);
        Some(d + (mi - p.rate_j).max(0.0))
    }
}

fn coupling_ok(prob: &PairProblem<'_>, coupling: &[u64]) -> bool {
    let thr = prob.min_distance;
    thr == f64::NEG_INFINITY || prob.cfg.joint_counts_distance(coupling) >= thr - COMPARE_TOLERANCE
}

/// Minimization term of the pair exponent over `Γ_ij` on the grid.
pub(crate) fn rgv_min_term(prob: &PairProblem<'_>, l: u64) -> Result<ExponentResult> {
    let (nx, ny) = (prob.w.inputs(), prob.w.outputs());
    let (qi, ei) = TypeVector::quantize(prob.q_i, l)?;
    let (qj, ej) = TypeVector::quantize(prob.q_j, l)?;
    let qerr = ei.max(ej);
    if prob.min_distance == f64::INFINITY {
        return Ok(ExponentResult::infeasible(meta(0, qerr)));
    }
    let mut couplings: Vec<Vec<u64>> = Vec::new();
    let mut total: u128 = 0;
    for_each_joint_type(nx, nx, l, Some(&qi), Some(&qj), |c| {
        if coupling_ok(prob, c) {
            let splits: u128 = c
                .iter()
                .map(|&v| binom(v + ny as u64 - 1, ny as u64 - 1))
                .product();
            total = total.saturating_add(splits);
            couplings.push(c.to_vec());
        }
    });
    check_cap("triple joint types", total)?;
    let best = couplings
        .par_iter()
        .map(|coupling| {
            let mut ev = TripleEval::new(prob, &qi, &qj, l);
            let mut triple = vec![0u64; nx * nx * ny];
            let mut best: Option<(f64, Vec<u64>)> = None;
            split_cells(coupling, 0, ny, &mut triple, &mut |t| {
                if let Some(v) = ev.eval(t) {
                    let cand = (v, t.to_vec());
                    if best.as_ref().is_none_or(|b| better(&cand, b)) {
                        best = Some(cand);
                    }
                }
            });
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(a), Some(b)) => Some(if better(&b, &a) { b } else { a }),
                (a, None) => a,
                (None, b) => b,
            },
        );
    let m = meta(total.min(u64::MAX as u128) as u64, qerr);
    Ok(match best {
        Some((v, t)) => ExponentResult {
            value: ExtReal::Finite(v),
            argmin: Some(counts_pmf(vec![nx, nx, ny], &t, l)),
            meta: m,
        },
        None => ExponentResult::infeasible(m),
    })
}

/// Visits every split of each coupling cell over the output alphabet, lexicographically.
fn split_cells(
    coupling: &[u64],
    cell: usize,
    ny: usize,
    triple: &mut [u64],
    f: &mut dyn FnMut(&[u64]),
) {
    if cell == coupling.len() {
        f(triple);
        return;
    }
    fn rec(
        coupling: &[u64],
        cell: usize,
        y: usize,
        left: u64,
        ny: usize,
        triple: &mut [u64],
        f: &mut dyn FnMut(&[u64]),
    ) {
        if y + 1 == ny {
            triple[cell * ny + y] = left;
            split_cells(coupling, cell + 1, ny, triple, f);
            return;
        }
        for v in 0..=left {
            triple[cell * ny + y] = v;
            rec(coupling, cell, y + 1, left - v, ny, triple, f);
        }
    }
    rec(coupling, cell, 0, coupling[cell], ny, triple, f);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_enumeration_counts() {
        let mut n = 0;
        let mut t = vec![0u64; 6];
        split_cells(&[2, 1], 0, 3, &mut t, &mut |t| {
            assert_eq!(t[0] + t[1] + t[2], 2);
            assert_eq!(t[3] + t[4] + t[5], 1);
            n += 1;
        });
        assert_eq!(n, 6 * 3);
    }

    #[test]
    fn binomials() {
        assert_eq!(binom(5, 2), 10);
        assert_eq!(binom(65, 1), 65);
        assert_eq!(binom(4, 0), 1);
    }
}
