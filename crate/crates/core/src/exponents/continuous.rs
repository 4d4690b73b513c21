//! Continuous minimizers for the convex exponent problems.

use super::model::{Channel, ExponentResult, SolverKind, SolverMetadata, SourceSpec};
use crate::codebook::COMPARE_TOLERANCE;
use crate::ext::ExtReal;
use crate::types::{entropy_of, JointPmf, Pmf};

const BISECTION_STEPS: usize = 200;

fn meta(iterations: u64, gap: f64) -> SolverMetadata {
    SolverMetadata {
        solver: Some(SolverKind::Continuous),
        iterations,
        gap,
        restarts: 1,
        feasible_restarts: 1,
        ..Default::default()
    }
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).ln())
        .sum::<f64>()
        .max(0.0)
}

/// `Q_α ∝ P^α` on the support of `P`.
fn tilted(p: &[f64], alpha: f64) -> Vec<f64> {
    let logs: Vec<f64> = p
        .iter()
        .map(|&x| {
            if x > 0.0 {
                alpha * x.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let un: Vec<f64> = logs.iter().map(|&l| (l - m).exp()).collect();
    let z: f64 = un.iter().sum();
    un.into_iter().map(|u| u / z).collect()
}

/// Minimizer of `D(Q‖P)` over `H(Q) ≥ R` lies on the tilted family; bisect on `α`.
pub(crate) fn source_reliability(rate: f64, src: &SourceSpec) -> ExponentResult {
    let p = src.p_v.probs();
    let n = p.len();
    if rate > (n as f64).ln() + COMPARE_TOLERANCE {
        return ExponentResult::infeasible(meta(0, 0.0));
    }
    let h = entropy_of(p);
    let wrap = |q: Vec<f64>, it: u64, gap: f64| ExponentResult {
        value: ExtReal::Finite(kl(&q, p)),
        argmin: Some(JointPmf::from_raw(vec![n], q)),
        meta: meta(it, gap),
    };
    if rate <= h {
        return wrap(p.to_vec(), 0, 0.0);
    }
    let support = p.iter().filter(|&&x| x > 0.0).count();
    let ln_s = (support as f64).ln();
    if rate > ln_s + COMPARE_TOLERANCE {
        // Any Q with enough entropy puts mass outside the support.
        return ExponentResult::infeasible(meta(0, 0.0));
    }
    let uniform_on_support = tilted(p, 0.0);
    if rate >= ln_s - COMPARE_TOLERANCE {
        return wrap(uniform_on_support, 0, 0.0);
    }
    // H(Q_α) decreases from ln|supp| at α = 0 to H(P) at α = 1.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut it = 0;
    while it < BISECTION_STEPS && hi - lo > 1e-16 {
        let mid = 0.5 * (lo + hi);
        if entropy_of(&tilted(p, mid)) >= rate {
            lo = mid;
        } else {
            hi = mid;
        }
        it += 1;
    }
    let q_lo = tilted(p, lo);
    let gap = kl(&q_lo, p) - kl(&tilted(p, hi), p);
    wrap(q_lo, it as u64, gap.abs())
}

/// Result of the alternating minimization for one multiplier.
struct Tilt {
    v: Vec<f64>,
    div: f64,
    mi: f64,
    iterations: u64,
}

/// Minimizes `D(V‖W|Q) + λ I(Q, V)` by alternating over `V` and the output law.
fn tilted_channel(q: &[f64], w: &Channel, lambda: f64, r: &mut [f64], tol: f64) -> Tilt {
    let (nx, ny) = (w.inputs(), w.outputs());
    let a = 1.0 / (1.0 + lambda);
    let b = lambda / (1.0 + lambda);
    let mut v = vec![0.0; nx * ny];
    let mut iterations = 0u64;
    loop {
        iterations += 1;
        for x in 0..nx {
            let row = &mut v[x * ny..(x + 1) * ny];
            let mut z = 0.0;
            for y in 0..ny {
                let wy = w.prob(x, y);
                row[y] = if wy > 0.0 && r[y] > 0.0 {
                    wy.powf(a) * r[y].powf(b)
                } else if wy > 0.0 && b == 0.0 {
                    wy
                } else {
                    0.0
                };
                z += row[y];
            }
            if z > 0.0 {
                row.iter_mut().for_each(|e| *e /= z);
            } else {
                row.copy_from_slice(w.row(x));
            }
        }
        let mut change: f64 = 0.0;
        for y in 0..ny {
            let ry: f64 = (0..nx).map(|x| q[x] * v[x * ny + y]).sum();
            change = change.max((ry - r[y]).abs());
            r[y] = ry;
        }
        if change < tol || iterations >= 200_000 {
            break;
        }
    }
    let mut div = 0.0;
    let mut mi = 0.0;
    for x in 0..nx {
        if q[x] == 0.0 {
            continue;
        }
        for y in 0..ny {
            let vy = v[x * ny + y];
            if vy > 0.0 {
                div += q[x] * vy * (vy / w.prob(x, y)).ln();
                mi += q[x] * vy * (vy / r[y]).ln();
            }
        }
    }
    Tilt {
        v,
        div: div.max(0.0),
        mi: mi.max(0.0),
        iterations,
    }
}

fn joint_of(q: &[f64], v: &[f64], nx: usize, ny: usize) -> JointPmf {
    JointPmf::from_raw(
        vec![nx, ny],
        (0..nx * ny).map(|z| q[z / ny] * v[z]).collect(),
    )
}

/// `E_r(Q, R)` through its multiplier: `max_{λ∈[0,1]} min_V D + λ(I − R)`.
pub(crate) fn random_coding_exponent(q: &Pmf, w: &Channel, rate: f64, tol: f64) -> ExponentResult {
    let (nx, ny) = (w.inputs(), w.outputs());
    let qp = q.probs();
    let inner_tol = (tol * 1e-3).max(1e-15);
    let qw = w.joint(q);
    let i0 = crate::types::mutual_information(&qw);
    if rate >= i0 {
        return ExponentResult {
            value: ExtReal::ZERO,
            argmin: Some(qw),
            meta: meta(0, 0.0),
        };
    }
    let mut r: Vec<f64> = (0..ny)
        .map(|y| (0..nx).map(|x| qp[x] * w.prob(x, y)).sum())
        .collect();
    let mut total = 0u64;
    let t1 = tilted_channel(qp, w, 1.0, &mut r.clone(), inner_tol);
    total += t1.iterations;
    if t1.mi >= rate {
        return ExponentResult {
            value: ExtReal::Finite(t1.div + t1.mi - rate),
            argmin: Some(joint_of(qp, &t1.v, nx, ny)),
            meta: meta(total, 0.0),
        };
    }
    // I(V_λ) decreases in λ; find the multiplier where it meets R.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best: Option<Tilt> = None;
    let mut best_val = f64::INFINITY;
    let mut steps = 0;
    while steps < BISECTION_STEPS && hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        let t = tilted_channel(qp, w, mid, &mut r, inner_tol);
        total += t.iterations;
        let val = t.div + (t.mi - rate).max(0.0);
        let above = t.mi > rate;
        if val < best_val {
            best_val = val;
            best = Some(t);
        }
        if above {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let t = best.expect("bisection evaluates at least once");
    ExponentResult {
        value: ExtReal::Finite(best_val),
        argmin: Some(joint_of(qp, &t.v, nx, ny)),
        meta: meta(total, hi - lo),
    }
}

/// Scaling iterations for a coupling with marginals `a`, `b` and kernel `k`.
fn sinkhorn(k: &[f64], a: &[f64], b: &[f64], tol: f64) -> Option<(Vec<f64>, u64)> {
    let (na, nb) = (a.len(), b.len());
    let mut u = vec![1.0; na];
    let mut v = vec![1.0; nb];
    let mut it = 0u64;
    loop {
        it += 1;
        for i in 0..na {
            let s: f64 = (0..nb).map(|j| k[i * nb + j] * v[j]).sum();
            u[i] = if a[i] == 0.0 {
                0.0
            } else if s > 0.0 {
                a[i] / s
            } else {
                return None;
            };
        }
        for j in 0..nb {
            let s: f64 = (0..na).map(|i| k[i * nb + j] * u[i]).sum();
            v[j] = if b[j] == 0.0 {
                0.0
            } else if s > 0.0 {
                b[j] / s
            } else {
                return None;
            };
        }
        let mut err = 0.0;
        for i in 0..na {
            let s: f64 = (0..nb).map(|j| k[i * nb + j] * v[j]).sum();
            err += (u[i] * s - a[i]).abs();
        }
        if err < tol {
            break;
        }
        if it >= 1_000_000 {
            if err < 1e-9 {
                break;
            }
            return None;
        }
    }
    let mut p = vec![0.0; na * nb];
    for i in 0..na {
        for j in 0..nb {
            p[i * nb + j] = u[i] * k[i * nb + j] * v[j];
        }
    }
    Some((p, it))
}

fn coupling_mi(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let nb = b.len();
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..nb {
            let x = p[i * nb + j];
            if x > 0.0 {
                s += x * (x / (a[i] * b[j])).ln();
            }
        }
    }
    s.max(0.0)
}

/// `E'_ex` via entropic couplings `Λ_θ ∝ a_x b_x̄ e^{−θ d_W}`; `θ` is bisected so
/// that the information constraint binds.
pub(crate) fn expurgated_exponent(
    q: &Pmf,
    palette: &[Pmf],
    w: &Channel,
    rate: f64,
    tol: f64,
) -> ExponentResult {
    let nx = w.inputs();
    let dw = w.bhattacharyya_matrix();
    let a = q.probs();
    let sk_tol = (tol * 1e-3).max(1e-15);
    let mut total = 0u64;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let objective = |p: &[f64], b: &[f64]| -> (f64, f64) {
        let ed: f64 = p
            .iter()
            .zip(&dw)
            .filter(|(&x, _)| x > 0.0)
            .map(|(&x, &d)| x * d)
            .sum();
        let i = coupling_mi(p, a, b);
        (ed + i - rate, i)
    };
    for qc in palette {
        let b = qc.probs();
        let kernel = |theta: f64| -> Vec<f64> {
            dw.iter()
                .map(|&d| {
                    if d.is_finite() {
                        (-theta * d).exp()
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        let Some((p0, it)) = sinkhorn(&kernel(0.0), a, b, sk_tol) else {
            continue;
        };
        total += it;
        let (v0, i0) = objective(&p0, b);
        if i0 > rate + COMPARE_TOLERANCE {
            continue;
        }
        let mut cand = (v0, p0);
        let Some((p1, it)) = sinkhorn(&kernel(1.0), a, b, sk_tol) else {
            continue;
        };
        total += it;
        let (v1, i1) = objective(&p1, b);
        if i1 <= rate {
            cand = (v1, p1);
        } else {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            let mut steps = 0;
            while steps < BISECTION_STEPS && hi - lo > 1e-14 {
                let mid = 0.5 * (lo + hi);
                match sinkhorn(&kernel(mid), a, b, sk_tol) {
                    Some((p, it)) => {
                        total += it;
                        let (v, i) = objective(&p, b);
                        if i <= rate {
                            lo = mid;
                            if v < cand.0 {
                                cand = (v, p);
                            }
                        } else {
                            hi = mid;
                        }
                    }
                    None => hi = mid,
                }
                steps += 1;
            }
        }
        if best.as_ref().is_none_or(|(v, _)| cand.0 < *v) {
            best = Some(cand);
        }
    }
    match best {
        Some((v, p)) => ExponentResult {
            value: ExtReal::Finite(v),
            argmin: Some(JointPmf::from_raw(vec![nx, nx], p)),
            meta: meta(total, 0.0),
        },
        None => ExponentResult::infeasible(meta(total, 0.0)),
    }
}
