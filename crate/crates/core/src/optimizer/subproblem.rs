//! One convex subproblem of the concave-convex iteration.

use super::lifting::{LiftedForm, LiftedMatrices};
use super::{DesignInputs, ObjectiveKind};
use crate::conic::{AffineExpr, ConicProblem, Constraint};
use crate::signal::leakage_budget;
use crate::CMatrix;
use std::f64::consts::LN_2;

/// Box on every exponential auxiliary variable.
pub const AUX_BOUND: f64 = 50.0;
/// Anchors are clamped to this range before exponentiation.
pub const ANCHOR_CLAMP: f64 = 40.0;

/// Linearisation points of the concave side of each bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Anchors {
    pub b: Vec<f64>,
    pub f1: Vec<f64>,
    pub q1: Vec<f64>,
    pub v: Vec<f64>,
}

impl Anchors {
    /// Tight anchors `ln tr(M·blkdiag(1, X))` at a given `X`.
    pub fn at(m: &LiftedMatrices, x: &CMatrix) -> Self {
        let ln = |forms: &[LiftedForm]| {
            forms
                .iter()
                .map(|f| clamp(f.trace_lifted(x).ln()))
                .collect()
        };
        Self {
            b: ln(&m.b),
            f1: ln(&m.f),
            q1: ln(&m.q),
            v: ln(&m.v),
        }
    }
}

fn clamp(a: f64) -> f64 {
    if a.is_nan() {
        -ANCHOR_CLAMP
    } else {
        a.clamp(-ANCHOR_CLAMP, ANCHOR_CLAMP)
    }
}

/// Scalar variable indices of an assembled subproblem; empty vectors for
/// streams the layout does not use.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubproblemVars {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub d: Vec<usize>,
    pub f1: Vec<usize>,
    pub f2: Vec<usize>,
    pub q1: Vec<usize>,
    pub q2: Vec<usize>,
    pub v: Vec<usize>,
    pub c_spc: Vec<usize>,
    pub c: Vec<usize>,
    /// Epigraph variables: one per LU, or a single one for max-min.
    pub t: Vec<usize>,
}

impl SubproblemVars {
    pub fn aux_count(&self) -> usize {
        [
            &self.a, &self.b, &self.d, &self.f1, &self.f2, &self.q1, &self.q2, &self.v,
        ]
        .iter()
        .map(|v| v.len())
        .sum()
    }
}

/// `tr(M·blkdiag(1, X)) ≤ e^{y0}(y − y0 + 1)`
fn linearised(form: &LiftedForm, y: usize, y0: f64) -> Constraint {
    let e = y0.exp();
    Constraint::Le(
        form.affine()
            .plus_scalar(y, -e)
            .plus_constant(-e * (1.0 - y0)),
    )
}

/// `e^y ≤ tr(M·blkdiag(1, X))`
fn exponential(form: &LiftedForm, y: usize) -> Constraint {
    Constraint::Exp(AffineExpr::scalar(y, 1.0), form.affine())
}

/// `ln2·Σ portions ≤ hi − lo`
fn rate_row(portions: &[usize], hi: usize, lo: usize) -> Constraint {
    let mut e = AffineExpr::scalar(hi, -1.0).plus_scalar(lo, 1.0);
    for &p in portions {
        e = e.plus_scalar(p, LN_2);
    }
    Constraint::Le(e)
}

pub fn assemble_subproblem(
    m: &LiftedMatrices,
    anchors: &Anchors,
    inputs: &DesignInputs,
) -> (ConicProblem, SubproblemVars) {
    let side = m.side();
    let k_l = m.d.len();
    let k_g = m.a.len();
    let spc = inputs.layout.super_common;
    let common = inputs.layout.common;
    let mut p = ConicProblem::new(side);
    let mut vars = SubproblemVars::default();
    let aux = |p: &mut ConicProblem, n: usize| -> Vec<usize> {
        (0..n)
            .map(|_| p.add_scalar(-AUX_BOUND, AUX_BOUND))
            .collect()
    };

    if spc {
        vars.a = aux(&mut p, k_g);
        vars.b = aux(&mut p, k_g);
        vars.d = aux(&mut p, k_l);
        vars.f1 = aux(&mut p, k_l);
    }
    if common {
        vars.f2 = aux(&mut p, k_l);
        vars.q1 = aux(&mut p, k_l);
    }
    vars.q2 = aux(&mut p, k_l);
    vars.v = aux(&mut p, k_l);
    if spc {
        vars.c_spc = (0..k_l).map(|_| p.add_scalar(0.0, f64::INFINITY)).collect();
    }
    if common {
        vars.c = (0..k_l).map(|_| p.add_scalar(0.0, f64::INFINITY)).collect();
    }
    vars.t = match inputs.objective {
        ObjectiveKind::Ttm => inputs
            .demands
            .iter()
            .map(|&t| p.add_scalar(f64::NEG_INFINITY, t))
            .collect(),
        ObjectiveKind::Stm => (0..k_l)
            .map(|_| p.add_scalar(f64::NEG_INFINITY, f64::INFINITY))
            .collect(),
        ObjectiveKind::Mmf => vec![p.add_scalar(f64::NEG_INFINITY, f64::INFINITY)],
    };

    if spc {
        for k in 0..k_g {
            p.add(exponential(&m.a[k], vars.a[k]));
            p.add(linearised(&m.b[k], vars.b[k], anchors.b[k]));
            p.add(rate_row(&vars.c_spc, vars.a[k], vars.b[k]));
        }
        for k in 0..k_l {
            p.add(exponential(&m.d[k], vars.d[k]));
            p.add(linearised(&m.f[k], vars.f1[k], anchors.f1[k]));
            p.add(rate_row(&vars.c_spc, vars.d[k], vars.f1[k]));
        }
    }
    if common {
        for k in 0..k_l {
            p.add(exponential(&m.f[k], vars.f2[k]));
            p.add(linearised(&m.q[k], vars.q1[k], anchors.q1[k]));
            p.add(rate_row(&vars.c, vars.f2[k], vars.q1[k]));
        }
    }
    for k in 0..k_l {
        p.add(exponential(&m.q[k], vars.q2[k]));
        p.add(linearised(&m.v[k], vars.v[k], anchors.v[k]));
    }

    // t_j ≤ c_spc,j + c_j + (q2_j − v_j)/ln2
    for j in 0..k_l {
        let t = vars.t[if vars.t.len() == 1 { 0 } else { j }];
        let mut e = AffineExpr::scalar(t, 1.0)
            .plus_scalar(vars.q2[j], -1.0 / LN_2)
            .plus_scalar(vars.v[j], 1.0 / LN_2);
        if spc {
            e = e.plus_scalar(vars.c_spc[j], -1.0);
        }
        if common {
            e = e.plus_scalar(vars.c[j], -1.0);
        }
        p.add(Constraint::Le(e));
    }

    if let Some(i_th) = inputs.il_threshold {
        for k in 0..k_g {
            let budget = leakage_budget(k, inputs.channels, i_th);
            p.add(Constraint::Le(m.leakage[k].affine().plus_constant(-budget)));
        }
    }
    p.add(Constraint::Le(
        AffineExpr::constant(-inputs.power).plus_matrix_trace(side, 1.0),
    ));

    let mut obj = AffineExpr::default();
    for &t in &vars.t {
        obj = obj.plus_scalar(t, 1.0);
    }
    p.objective = obj;
    (p, vars)
}
