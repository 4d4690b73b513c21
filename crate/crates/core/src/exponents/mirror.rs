//! Penalized mirror descent over three-way joint distributions with two
//! pinned marginals, used for the minimization over `Γ_ij`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{DistanceSpec, ExponentResult, MetricSpec, SolverKind, SolverMetadata};
use super::PairProblem;
use crate::ext::ExtReal;
use crate::types::{entropy_of, JointPmf};

type BlackBox = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// One additive piece of a smooth functional on the `(x, x̄, y)` array.
#[derive(Clone)]
enum Term {
    Const(f64),
    /// `coef · H(marginal on axes)`.
    Entropy {
        axes: [bool; 3],
        coef: f64,
    },
    Linear(Vec<f64>),
    /// Evaluated as given; differentiated numerically.
    Opaque {
        f: BlackBox,
        coef: f64,
    },
}

#[derive(Clone, Default)]
struct Functional {
    terms: Vec<Term>,
}

impl Functional {
    fn with(mut self, t: Term) -> Self {
        self.terms.push(t);
        self
    }
}

/// Geometry of the optimization variable.
struct Grid {
    shape: [usize; 3],
    mask: Vec<bool>,
}

impl Grid {
    fn coords(&self, z: usize) -> [usize; 3] {
        let [_, b, c] = self.shape;
        [z / (b * c), (z / c) % b, z % c]
    }

    fn key(&self, z: usize, axes: [bool; 3]) -> usize {
        let co = self.coords(z);
        let mut k = 0;
        for a in 0..3 {
            if axes[a] {
                k = k * self.shape[a] + co[a];
            }
        }
        k
    }

    fn marginal(&self, p: &[f64], axes: [bool; 3]) -> Vec<f64> {
        let size: usize = (0..3).filter(|&a| axes[a]).map(|a| self.shape[a]).product();
        let mut m = vec![0.0; size];
        for (z, &v) in p.iter().enumerate() {
            m[self.key(z, axes)] += v;
        }
        m
    }

    fn eval(&self, f: &Functional, p: &[f64]) -> f64 {
        f.terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => *c,
                Term::Entropy { axes, coef } => coef * entropy_of(&self.marginal(p, *axes)),
                Term::Linear(c) => p.iter().zip(c).map(|(a, b)| a * b).sum(),
                Term::Opaque { f, coef } => coef * f(p),
            })
            .sum()
    }

    fn grad(&self, f: &Functional, p: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        for t in &f.terms {
            match t {
                Term::Const(_) => {}
                Term::Entropy { axes, coef } => {
                    let m = self.marginal(p, *axes);
                    for z in 0..p.len() {
                        let mz = m[self.key(z, *axes)];
                        if mz > 0.0 {
                            g[z] -= coef * (mz.ln() + 1.0);
                        }
                    }
                }
                Term::Linear(c) => {
                    for z in 0..p.len() {
                        g[z] += c[z];
                    }
                }
                Term::Opaque { f, coef } => {
                    let mut q = p.to_vec();
                    for z in 0..p.len() {
                        if !self.mask[z] {
                            continue;
                        }
                        let h = 1e-7 * (1.0 + p[z]);
                        q[z] = p[z] + h;
                        let up = f(&q);
                        q[z] = (p[z] - h).max(0.0);
                        let down = f(&q);
                        g[z] += coef * (up - down) / (p[z] + h - q[z]);
                        q[z] = p[z];
                    }
                }
            }
        }
    }

    /// Alternating rescaling onto the two pinned marginals. Returns the
    /// remaining marginal error.
    fn project(&self, p: &mut [f64], qi: &[f64], qj: &[f64]) -> f64 {
        let [nx, nxb, ny] = self.shape;
        let mut err = f64::INFINITY;
        for _ in 0..2000 {
            let mx = self.marginal(p, [true, false, false]);
            for z in 0..p.len() {
                let x = z / (nxb * ny);
                if mx[x] > 0.0 {
                    p[z] *= qi[x] / mx[x];
                }
            }
            let mxb = self.marginal(p, [false, true, false]);
            for z in 0..p.len() {
                let xb = (z / ny) % nxb;
                if mxb[xb] > 0.0 {
                    p[z] *= qj[xb] / mxb[xb];
                }
            }
            let mx = self.marginal(p, [true, false, false]);
            let mxb = self.marginal(p, [false, true, false]);
            err = (0..nx).map(|x| (mx[x] - qi[x]).abs()).sum::<f64>()
                + (0..nxb).map(|xb| (mxb[xb] - qj[xb]).abs()).sum::<f64>();
            if err < 1e-15 {
                break;
            }
        }
        err
    }
}

/// A smooth subproblem: minimize `objective` subject to `constraints ≤ 0`.
struct Subproblem {
    objective: Functional,
    constraints: Vec<Functional>,
}

struct Settings {
    max_iterations: usize,
    tolerance: f64,
}

struct Runner<'a> {
    grid: &'a Grid,
    qi: &'a [f64],
    qj: &'a [f64],
    iterations: u64,
}

const FEASIBILITY_MARGIN: f64 = 1e-11;
const MARGINAL_TOLERANCE: f64 = 1e-10;

impl Runner<'_> {
    fn violation(&self, sp: &Subproblem, p: &[f64], margin: f64) -> f64 {
        sp.constraints
            .iter()
            .map(|c| (self.grid.eval(c, p) + margin).max(0.0))
            .fold(0.0, f64::max)
    }

    fn penalized(&self, sp: &Subproblem, p: &[f64], rho: f64, obj_w: f64, margin: f64) -> f64 {
        let mut v = if obj_w > 0.0 {
            obj_w * self.grid.eval(&sp.objective, p)
        } else {
            0.0
        };
        for c in &sp.constraints {
            let g = (self.grid.eval(c, p) + margin).max(0.0);
            v += 0.5 * rho * g * g;
        }
        v
    }

    fn penalized_grad(
        &self,
        sp: &Subproblem,
        p: &[f64],
        rho: f64,
        obj_w: f64,
        margin: f64,
        out: &mut [f64],
    ) {
        let mut tmp = vec![0.0; p.len()];
        out.iter_mut().for_each(|v| *v = 0.0);
        if obj_w > 0.0 {
            self.grid.grad(&sp.objective, p, &mut tmp);
            for z in 0..p.len() {
                out[z] += obj_w * tmp[z];
            }
        }
        for c in &sp.constraints {
            let g = self.grid.eval(c, p) + margin;
            if g > 0.0 {
                self.grid.grad(c, p, &mut tmp);
                for z in 0..p.len() {
                    out[z] += rho * g * tmp[z];
                }
            }
        }
    }

    fn mirror_step(&self, p: &[f64], g: &[f64], eta: f64) -> Option<Vec<f64>> {
        let active: Vec<usize> = (0..p.len())
            .filter(|&z| self.grid.mask[z] && p[z] > 0.0)
            .collect();
        if active.is_empty() {
            return None;
        }
        let mean = active.iter().map(|&z| g[z]).sum::<f64>() / active.len() as f64;
        let mut q = vec![0.0; p.len()];
        for &z in &active {
            q[z] = p[z] * (-(eta * (g[z] - mean)).clamp(-50.0, 50.0)).exp();
        }
        let s: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= s);
        let err = self.grid.project(&mut q, self.qi, self.qj);
        (err < MARGINAL_TOLERANCE).then_some(q)
    }

    /// Backtracking mirror descent on `obj_w · f + ρ/2 Σ g⁺²`. If `keep_feasible`
    /// is set, steps that leave the feasible set are refused.
    #[allow(clippy::too_many_arguments)]
    fn descend(
        &mut self,
        sp: &Subproblem,
        p: &mut Vec<f64>,
        rho: f64,
        obj_w: f64,
        margin: f64,
        keep_feasible: bool,
        budget: usize,
        tol: f64,
    ) {
        let mut g = vec![0.0; p.len()];
        let mut eta = 1.0;
        let mut cur = self.penalized(sp, p, rho, obj_w, margin);
        let mut stall = 0;
        for _ in 0..budget {
            self.iterations += 1;
            self.penalized_grad(sp, p, rho, obj_w, margin, &mut g);
            let mut accepted = false;
            while eta > 1e-16 {
                if let Some(q) = self.mirror_step(p, &g, eta) {
                    let v = self.penalized(sp, &q, rho, obj_w, margin);
                    let ok = v < cur && (!keep_feasible || self.violation(sp, &q, 0.0) <= 0.0);
                    if ok {
                        let gain = cur - v;
                        *p = q;
                        cur = v;
                        accepted = true;
                        eta = (eta * 2.0).min(1e6);
                        if gain <= tol * (1.0 + cur.abs()) {
                            stall += 1;
                        } else {
                            stall = 0;
                        }
                        break;
                    }
                }
                eta *= 0.25;
            }
            if !accepted || stall >= 5 {
                break;
            }
        }
    }

    fn solve(&mut self, sp: &Subproblem, start: Vec<f64>, s: &Settings) -> Option<Vec<f64>> {
        let mut p = start;
        let stages = [1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e8];
        let per_stage = (s.max_iterations / (stages.len() + 2)).max(20);
        for &rho in &stages {
            self.descend(
                sp,
                &mut p,
                rho,
                1.0,
                FEASIBILITY_MARGIN,
                false,
                per_stage,
                s.tolerance,
            );
        }
        // Restore feasibility with the objective switched off.
        if self.violation(sp, &p, 0.0) > 0.0 {
            self.descend(
                sp,
                &mut p,
                1.0,
                0.0,
                FEASIBILITY_MARGIN,
                false,
                per_stage * 2,
                0.0,
            );
        }
        if self.violation(sp, &p, 0.0) > 0.0 {
            return None;
        }
        self.descend(sp, &mut p, 0.0, 1.0, 0.0, true, per_stage, s.tolerance);
        Some(p)
    }
}

/// Slack for constraints that hold with equality on a face of the simplex.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Exact minimizer over triple types with denominator a multiple of `n`,
/// so the pinned marginals are met exactly.
fn lattice_start(prob: &PairProblem<'_>) -> Option<Vec<f64>> {
    let n = prob.cfg.n();
    let l = n * 24u64.div_ceil(n);
    let r = super::discrete::rgv_min_term(prob, l).ok()?;
    if r.value == ExtReal::Infinite {
        return None;
    }
    r.argmin.map(|a| a.probs().to_vec())
}

/// Continuous evaluation of the minimization term of the pair exponent.
pub(crate) fn rgv_min_term(
    prob: &PairProblem<'_>,
    restarts: usize,
    max_iterations: usize,
    tolerance: f64,
) -> ExponentResult {
    let w = prob.w;
    let (nx, ny) = (w.inputs(), w.outputs());
    let qi = prob.q_i.probs();
    let qj = prob.q_j.probs();
    let mut meta = SolverMetadata {
        solver: Some(SolverKind::Continuous),
        restarts,
        ..Default::default()
    };
    let thr = prob.min_distance;
    if thr == f64::INFINITY {
        return ExponentResult::infeasible(meta);
    }
    if matches!(prob.cfg.distance(), DistanceSpec::NegMi) && thr > 1e-12 {
        meta.note = Some("distance floor above the largest value of −I".into());
        return ExponentResult::infeasible(meta);
    }
    let csiszar = matches!(prob.metric, MetricSpec::Csiszar);
    let size = nx * nx * ny;
    let mut mask = vec![false; size];
    for x in 0..nx {
        for xb in 0..nx {
            for y in 0..ny {
                mask[(x * nx + xb) * ny + y] = qi[x] > 0.0
                    && qj[xb] > 0.0
                    && w.prob(x, y) > 0.0
                    && (!csiszar || w.prob(xb, y) > 0.0);
            }
        }
    }
    let grid = Grid {
        shape: [nx, nx, ny],
        mask,
    };

    let xy = [true, false, true];
    let xby = [false, true, true];
    let all = [true, true, true];
    let ln_qw: Vec<f64> = (0..size)
        .map(|z| {
            let [x, _, y] = grid.coords(z);
            if grid.mask[z] {
                -(qi[x] * w.prob(x, y)).ln()
            } else {
                0.0
            }
        })
        .collect();
    let h_qi = entropy_of(qi);
    let h_qj = entropy_of(qj);
    let divergence = Functional::default()
        .with(Term::Entropy {
            axes: xy,
            coef: -1.0,
        })
        .with(Term::Linear(ln_qw));
    // I(X̄; XY) − R_j
    let info_excess = Functional::default()
        .with(Term::Const(h_qj - prob.rate_j))
        .with(Term::Entropy {
            axes: xy,
            coef: 1.0,
        })
        .with(Term::Entropy {
            axes: all,
            coef: -1.0,
        });
    let neg = |f: &Functional| Functional {
        terms: f
            .terms
            .iter()
            .map(|t| match t.clone() {
                Term::Const(c) => Term::Const(-c),
                Term::Entropy { axes, coef } => Term::Entropy { axes, coef: -coef },
                Term::Linear(c) => Term::Linear(c.into_iter().map(|v| -v).collect()),
                Term::Opaque { f, coef } => Term::Opaque { f, coef: -coef },
            })
            .collect(),
    };

    let mut constraints = Vec::new();
    let metric = match prob.metric {
        MetricSpec::Mmi => Functional::default()
            .with(Term::Const(h_qi - h_qj - prob.rate_i + prob.rate_j))
            .with(Term::Entropy {
                axes: xy,
                coef: -1.0,
            })
            .with(Term::Entropy {
                axes: xby,
                coef: 1.0,
            }),
        MetricSpec::Csiszar => {
            let lin: Vec<f64> = (0..size)
                .map(|z| {
                    let [x, xb, y] = grid.coords(z);
                    if grid.mask[z] {
                        w.prob(x, y).ln() - w.prob(xb, y).ln()
                    } else {
                        0.0
                    }
                })
                .collect();
            Functional::default()
                .with(Term::Const(-2.0 * prob.rate_i + 2.0 * prob.rate_j))
                .with(Term::Linear(lin))
        }
        MetricSpec::Custom(_) => {
            let metric = prob.metric.clone();
            let (i, j, ri, rj) = (prob.i, prob.j, prob.rate_i, prob.rate_j);
            let wc = w.clone();
            let shape = grid.shape;
            let f: BlackBox = Arc::new(move |p: &[f64]| {
                let g = Grid {
                    shape,
                    mask: vec![true; p.len()],
                };
                let a = JointPmf::from_raw(vec![shape[0], shape[2]], g.marginal(p, xy));
                let b = JointPmf::from_raw(vec![shape[1], shape[2]], g.marginal(p, xby));
                metric.score(i, ri, &a, &wc) - metric.score(j, rj, &b, &wc)
            });
            Functional::default().with(Term::Opaque { f, coef: 1.0 })
        }
    };
    constraints.push(metric);
    if thr > f64::NEG_INFINITY {
        let dist = match prob.cfg.distance() {
            // I(X; X̄) + max Δ ≤ 0
            DistanceSpec::NegMi => Functional::default()
                .with(Term::Const(h_qi + h_qj + thr))
                .with(Term::Entropy {
                    axes: [true, true, false],
                    coef: -1.0,
                }),
            DistanceSpec::Custom(_) => {
                let d = prob.cfg.distance().clone();
                let shape = grid.shape;
                let f: BlackBox = Arc::new(move |p: &[f64]| {
                    let g = Grid {
                        shape,
                        mask: vec![true; p.len()],
                    };
                    let m = g.marginal(p, [true, true, false]);
                    let s: f64 = m.iter().sum();
                    let m = m.into_iter().map(|v| v / s).collect();
                    thr - d.eval(&JointPmf::from_raw(vec![shape[0], shape[1]], m))
                });
                Functional::default().with(Term::Opaque { f, coef: 1.0 })
            }
        };
        constraints.push(dist);
    }

    // |·|⁺ split: term active with I ≥ R_j, or clamped with I ≤ R_j.
    let mut active_obj = divergence.clone();
    active_obj.terms.extend(info_excess.terms.clone());
    let mut active_cons = constraints.clone();
    active_cons.push(neg(&info_excess));
    let mut clamped_cons = constraints;
    clamped_cons.push(info_excess.clone());
    let subproblems = [
        Subproblem {
            objective: active_obj,
            constraints: active_cons,
        },
        Subproblem {
            objective: divergence.clone(),
            constraints: clamped_cons,
        },
    ];
    let true_value =
        |p: &[f64]| grid.eval(&divergence, p).max(0.0) + grid.eval(&info_excess, p).max(0.0);
    // Membership in Γ itself, independent of the split.
    let gamma = Subproblem {
        objective: Functional::default(),
        constraints: subproblems[1].constraints[..subproblems[1].constraints.len() - 1].to_vec(),
    };

    let settings = Settings {
        max_iterations,
        tolerance,
    };
    let mut runner = Runner {
        grid: &grid,
        qi,
        qj,
        iterations: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ ((prob.i as u64) << 32) ^ prob.j as u64);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible_restarts = 0;
    for r in 0..restarts {
        let mut start: Vec<f64> = (0..size)
            .map(|z| {
                if !grid.mask[z] {
                    return 0.0;
                }
                let [x, xb, y] = grid.coords(z);
                match r {
                    0 => qi[x] * qj[xb] * w.prob(x, y),
                    1 => qi[x] * qj[xb] * w.prob(xb, y).max(1e-3),
                    _ => rng.gen_range(0.05..1.0),
                }
            })
            .collect();
        let s: f64 = start.iter().sum();
        if s <= 0.0 {
            break;
        }
        start.iter_mut().for_each(|v| *v /= s);
        if grid.project(&mut start, qi, qj) >= MARGINAL_TOLERANCE {
            meta.note = Some("pinned marginals unreachable on the admissible support".into());
            break;
        }
        let mut found = false;
        for sp in &subproblems {
            if let Some(p) = runner.solve(sp, start.clone(), &settings) {
                if runner.violation(&gamma, &p, 0.0) > 0.0 {
                    continue;
                }
                found = true;
                let v = true_value(&p);
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, p));
                }
            }
        }
        if found {
            feasible_restarts += 1;
        }
    }
    if best.is_none() && meta.note.is_none() {
        // Every restart stayed infeasible. The set may touch the simplex only
        // on its boundary, which multiplicative steps cannot reach from the
        // interior; start from an exact lattice point on that face instead.
        if let Some(p) = lattice_start(prob) {
            if runner.violation(&gamma, &p, 0.0) <= BOUNDARY_SLACK {
                let mut v = true_value(&p);
                let mut point = p.clone();
                for sp in &subproblems {
                    if runner.violation(sp, &p, 0.0) > 0.0 {
                        continue;
                    }
                    let mut q = p.clone();
                    runner.descend(sp, &mut q, 0.0, 1.0, 0.0, true, max_iterations, tolerance);
                    let u = true_value(&q);
                    if u < v && runner.violation(&gamma, &q, 0.0) <= BOUNDARY_SLACK {
                        v = u;
                        point = q;
                    }
                }
                meta.note = Some("optimum on the boundary; started from a lattice point".into());
                best = Some((v, point));
            }
        }
    }
    meta.iterations = runner.iterations;
    meta.feasible_restarts = feasible_restarts;
    match best {
        Some((v, p)) => ExponentResult {
            value: ExtReal::Finite(v),
            argmin: Some(JointPmf::from_raw(vec![nx, nx, ny], p)),
            meta,
        },
        None => ExponentResult::infeasible(meta),
    }
}
