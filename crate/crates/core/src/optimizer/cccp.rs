use super::lifting::{LiftedMatrices, Stream};
use super::portions::{objective_value, portions_for};
use super::randomize::RandomizationStats;
use super::subproblem::{assemble_subproblem, Anchors, SubproblemVars};
use super::{DesignInputs, ObjectiveKind, OptimizerError};
use crate::conic::{solve, SolveStatus, Tolerances};
use crate::linalg::{hermitian_eigen, outer};
use crate::{CMatrix, CVector, C64};

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceReason {
    /// Successive objectives within the tolerance.
    Tolerance,
    MaxIterations,
    /// A later subproblem failed; the last good iterate is kept.
    SolverStalled,
    /// Nothing to transmit (all demands zero).
    Degenerate,
}

/// Final iterate of the concave-convex procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct CccpState {
    pub x: CMatrix,
    /// Scalar values of the last subproblem, indexed through `vars`.
    pub scalars: Vec<f64>,
    pub vars: SubproblemVars,
    pub c_spc: Vec<f64>,
    pub c: Vec<f64>,
    /// Relaxed objective `D^(m)`.
    pub objective: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    /// `D^(0), D^(1), …`; the first entry is the value at the starting point.
    pub objectives: Vec<f64>,
    pub statuses: Vec<SolveStatus>,
    pub reason: ConvergenceReason,
    pub randomization: Option<RandomizationStats>,
}

impl SolveTrace {
    /// Number of subproblems solved.
    pub fn iterations(&self) -> usize {
        self.statuses.len()
    }
}

/// Power shares of the starting point.
const SHARE_SPC: f64 = 0.6;
const SHARE_COMMON: f64 = 0.2;
const SHARE_PRIVATE: f64 = 0.2;

/// Feasible starting precoder, stacked over the active streams.
///
/// The super-common and common streams point along the dominant
/// eigenvector of `Σ ĥĥ^H`; private streams are matched filters. Only the
/// streams that leak are scaled down to meet the leakage budgets.
pub fn initial_precoder(m: &LiftedMatrices, inputs: &DesignInputs) -> CVector {
    let ch = inputs.channels;
    let n = m.n_l;
    let k_l = ch.k_l();
    if n == 0 || m.streams.is_empty() {
        return CVector::zeros(m.side());
    }
    let mut gram = CMatrix::zeros(n, n);
    for h in &ch.h_hat {
        gram += outer(h);
    }
    let (_, vecs) = hermitian_eigen(&gram);
    let dominant: CVector = vecs.column(0).into_owned();

    let weight = |s: &Stream| match s {
        Stream::SuperCommon => SHARE_SPC,
        Stream::Common => SHARE_COMMON,
        Stream::Private(_) => SHARE_PRIVATE / k_l.max(1) as f64,
    };
    let total: f64 = m.streams.iter().map(weight).sum();
    let mut blocks: Vec<CVector> = m
        .streams
        .iter()
        .map(|s| {
            let power = inputs.power * weight(s) / total;
            let dir = match s {
                Stream::Private(k) => {
                    let h = &ch.h_hat[*k];
                    let norm = h.norm();
                    if norm > 0.0 {
                        h / C64::from(norm)
                    } else {
                        let mut e = CVector::zeros(n);
                        e[0] = C64::from(1.0);
                        e
                    }
                }
                _ => dominant.clone(),
            };
            dir * C64::from(power.sqrt())
        })
        .collect();

    if let Some(i_th) = inputs.il_threshold {
        let is_spc = |i: usize| m.streams[i] == Stream::SuperCommon;
        let part = |blocks: &[CVector], k: usize, spc: bool| -> f64 {
            blocks
                .iter()
                .enumerate()
                .filter(|(i, _)| is_spc(*i) == spc)
                .map(|(i, p)| p.dotc(&(&m.leakage[k].blocks[i] * p)).re)
                .sum()
        };
        let budgets: Vec<f64> = (0..ch.k_g())
            .map(|k| crate::signal::leakage_budget(k, ch, i_th))
            .collect();
        // the super-common stream still leaks through the error term
        let mut spc_scale2: f64 = 1.0;
        for (k, &budget) in budgets.iter().enumerate() {
            let l = part(&blocks, k, true);
            if l > budget / 2.0 {
                spc_scale2 = spc_scale2.min(budget / 2.0 / l);
            }
        }
        for (i, b) in blocks.iter_mut().enumerate() {
            if is_spc(i) {
                *b *= C64::from(spc_scale2.sqrt());
            }
        }
        let mut rest_scale2: f64 = 1.0;
        for (k, &budget) in budgets.iter().enumerate() {
            let l_spc = part(&blocks, k, true);
            let l_rest = part(&blocks, k, false);
            if l_rest > 0.0 {
                rest_scale2 = rest_scale2.min(((budget - l_spc) / l_rest).max(0.0));
            }
        }
        for (i, b) in blocks.iter_mut().enumerate() {
            if !is_spc(i) {
                *b *= C64::from(rest_scale2.sqrt());
            }
        }
    }
    CVector::from_iterator(m.side(), blocks.iter().flat_map(|b| b.iter().copied()))
}

/// Objective of the bounds evaluated with tight auxiliaries at `x`; equal to
/// the exact objective when `x` has rank one.
pub(crate) fn bound_objective(m: &LiftedMatrices, inputs: &DesignInputs, x: &CMatrix) -> f64 {
    let lr = |num: &super::LiftedForm, den: &super::LiftedForm| {
        (num.trace_lifted(x) / den.trace_lifted(x)).log2()
    };
    let k_l = m.d.len();
    let r_p: Vec<f64> = (0..k_l).map(|k| lr(&m.q[k], &m.v[k])).collect();
    let min = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
    let r_spc = if inputs.layout.super_common {
        let lu = min(&mut (0..k_l).map(|k| lr(&m.d[k], &m.f[k])));
        let gu = min(&mut (0..m.a.len()).map(|k| lr(&m.a[k], &m.b[k])));
        lu.min(gu)
    } else {
        0.0
    };
    let r_c = if inputs.layout.common {
        min(&mut (0..k_l).map(|k| lr(&m.f[k], &m.q[k])))
    } else {
        0.0
    };
    let (c_spc, c) = portions_for(inputs.objective, r_spc, r_c, &r_p, inputs.demands);
    let totals: Vec<f64> = (0..k_l).map(|k| c_spc[k] + c[k] + r_p[k]).collect();
    objective_value(inputs.objective, &totals, inputs.demands)
}

fn degenerate(inputs: &DesignInputs) -> bool {
    inputs.objective == ObjectiveKind::Ttm && inputs.demands.iter().all(|&t| t <= 0.0)
}

/// Concave-convex iterations from `init` until successive relaxed
/// objectives differ by at most the tolerance or the iteration cap is hit.
pub fn cccp_solve(
    m: &LiftedMatrices,
    inputs: &DesignInputs,
    init: &CVector,
) -> Result<(CccpState, SolveTrace), OptimizerError> {
    let side = m.side();
    let k_l = m.d.len();
    if degenerate(inputs) || side == 0 {
        return Ok((
            CccpState {
                x: CMatrix::zeros(side, side),
                scalars: Vec::new(),
                vars: SubproblemVars::default(),
                c_spc: vec![0.0; k_l],
                c: vec![0.0; k_l],
                objective: 0.0,
                iteration: 0,
            },
            SolveTrace {
                objectives: vec![0.0],
                statuses: Vec::new(),
                reason: ConvergenceReason::Degenerate,
                randomization: None,
            },
        ));
    }

    let mut x = outer(init);
    let mut previous = bound_objective(m, inputs, &x);
    let mut trace = SolveTrace {
        objectives: vec![previous],
        statuses: Vec::new(),
        reason: ConvergenceReason::MaxIterations,
        randomization: None,
    };
    let mut state: Option<CccpState> = None;
    let mut anchors = Anchors::at(m, &x);

    for iteration in 1..=inputs.max_iterations.max(1) {
        let (problem, vars) = assemble_subproblem(m, &anchors, inputs);
        let sol = solve(&problem, Tolerances::default())?;
        trace.statuses.push(sol.status);
        if !sol.status.is_usable() {
            if state.is_none() {
                return Err(OptimizerError::Subproblem {
                    iteration,
                    status: sol.status,
                    dump: problem.to_dump(),
                });
            }
            trace.reason = ConvergenceReason::SolverStalled;
            break;
        }
        let current = sol.objective;
        if state.is_some() && current < previous - 10.0 * inputs.tolerance {
            // an inexact solve fell below the last iterate, which stays feasible
            trace.reason = ConvergenceReason::SolverStalled;
            break;
        }
        x = sol.x;
        anchors = Anchors::at(m, &x);
        let pick = |idx: &[usize]| {
            idx.iter()
                .map(|&i| sol.scalars[i].max(0.0))
                .collect::<Vec<_>>()
        };
        trace.objectives.push(current);
        state = Some(CccpState {
            x: x.clone(),
            c_spc: if vars.c_spc.is_empty() {
                vec![0.0; k_l]
            } else {
                pick(&vars.c_spc)
            },
            c: if vars.c.is_empty() {
                vec![0.0; k_l]
            } else {
                pick(&vars.c)
            },
            scalars: sol.scalars.clone(),
            vars,
            objective: current,
            iteration,
        });
        if (current - previous).abs() <= inputs.tolerance {
            trace.reason = ConvergenceReason::Tolerance;
            break;
        }
        previous = current;
    }
    Ok((
        state.expect("first iteration either succeeds or returns"),
        trace,
    ))
}
