use super::{
    AffineExpr, ConicError, ConicProblem, ConicSolution, Constraint, Residuals, SolveStatus,
};
use crate::{CMatrix, C64};
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

/// Solver stopping tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feasibility: f64,
    pub gap: f64,
    /// Largest recomputed row violation still reported as optimal.
    pub acceptance: f64,
    pub max_iterations: u32,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-8,
            gap: 1e-8,
            acceptance: 1e-6,
            max_iterations: 200,
        }
    }
}

/// Largest relative duality gap of a stalled solve still accepted as
/// near-optimal.
const NEAR_GAP: f64 = 1e-3;

/// Column layout: scalars first, then the real parameters of `X`
/// (diagonal, then real/imaginary parts of the strict upper triangle in
/// row-major order).
struct Layout {
    n_scalars: usize,
    side: usize,
}

impl Layout {
    fn diag(&self, i: usize) -> usize {
        self.n_scalars + i
    }

    fn pair(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        let n = self.side;
        // pairs before row i: Σ_{r<i} (n − 1 − r)
        let before = i * (2 * n - i - 1) / 2;
        self.n_scalars + n + 2 * (before + (j - i - 1))
    }

    fn columns(&self) -> usize {
        self.n_scalars + self.side * self.side
    }

    /// Sparse coefficients of `expr` over the columns.
    fn row(&self, e: &AffineExpr) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = e.scalars.clone();
        for t in &e.matrix {
            if t.row == t.col {
                out.push((self.diag(t.row), t.coef.re));
            } else {
                let p = self.pair(t.row, t.col);
                out.push((p, 2.0 * t.coef.re));
                out.push((p + 1, 2.0 * t.coef.im));
            }
        }
        out
    }

    fn matrix(&self, x: &[f64]) -> CMatrix {
        let n = self.side;
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::from(x[self.diag(i)]);
            for j in i + 1..n {
                let p = self.pair(i, j);
                let v = C64::new(x[p], x[p + 1]);
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        m
    }
}

struct Rows {
    i: Vec<usize>,
    j: Vec<usize>,
    v: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    /// Appends the row `s = b − a·x`.
    fn push(&mut self, coeffs: &[(usize, f64)], negate: bool, b: f64) {
        let r = self.b.len();
        for &(c, a) in coeffs {
            if a != 0.0 {
                self.i.push(r);
                self.j.push(c);
                self.v.push(if negate { -a } else { a });
            }
        }
        self.b.push(b);
    }
}

fn recompute_residual(p: &ConicProblem, scalars: &[f64], x: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for (i, &(lo, hi)) in p.bounds.iter().enumerate() {
        worst = worst.max(lo - scalars[i]).max(scalars[i] - hi);
    }
    for c in &p.constraints {
        let v = match c {
            Constraint::Le(e) => e.evaluate(scalars, x).max(0.0),
            Constraint::Eq(e) => e.evaluate(scalars, x).abs(),
            Constraint::Exp(u, v) => {
                let u = u.evaluate(scalars, x);
                let v = v.evaluate(scalars, x);
                (u.exp() - v).max(0.0) / v.abs().max(1.0)
            }
        };
        worst = worst.max(v);
    }
    if p.psd_side > 0 {
        let (eig, _) = crate::linalg::hermitian_eigen(x);
        let scale = eig.first().copied().unwrap_or(0.0).abs().max(1.0);
        worst = worst.max(-eig.last().copied().unwrap_or(0.0) / scale);
    }
    worst
}

/// Solves `problem` with Clarabel. Malformed problems are rejected before
/// reaching the solver; solver trouble is reported through the status.
pub fn solve(problem: &ConicProblem, tol: Tolerances) -> Result<ConicSolution, ConicError> {
    problem.validate()?;
    let layout = Layout {
        n_scalars: problem.n_scalars(),
        side: problem.psd_side,
    };
    let ncols = layout.columns();
    let mut rows = Rows {
        i: Vec::new(),
        j: Vec::new(),
        v: Vec::new(),
        b: Vec::new(),
    };
    let mut cones = Vec::new();

    let eqs: Vec<&AffineExpr> = problem
        .constraints
        .iter()
        .filter_map(|c| {
            if let Constraint::Eq(e) = c {
                Some(e)
            } else {
                None
            }
        })
        .collect();
    for e in &eqs {
        rows.push(&layout.row(e), false, -e.constant);
    }
    if !eqs.is_empty() {
        cones.push(SupportedConeT::ZeroConeT(eqs.len()));
    }

    let mut nonneg = 0;
    for c in &problem.constraints {
        if let Constraint::Le(e) = c {
            rows.push(&layout.row(e), false, -e.constant);
            nonneg += 1;
        }
    }
    for (i, &(lo, hi)) in problem.bounds.iter().enumerate() {
        if lo.is_finite() {
            rows.push(&[(i, 1.0)], true, -lo);
            nonneg += 1;
        }
        if hi.is_finite() {
            rows.push(&[(i, 1.0)], false, hi);
            nonneg += 1;
        }
    }
    if nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(nonneg));
    }

    for c in &problem.constraints {
        if let Constraint::Exp(u, v) = c {
            rows.push(&layout.row(u), true, u.constant);
            rows.push(&[], false, 1.0);
            rows.push(&layout.row(v), true, v.constant);
            cones.push(SupportedConeT::ExponentialConeT());
        }
    }

    if layout.side > 0 {
        let n = layout.side;
        let sqrt2 = std::f64::consts::SQRT_2;
        for c in 0..2 * n {
            for r in 0..=c {
                let (i, j) = (r % n, c % n);
                let scale = if r == c { 1.0 } else { sqrt2 };
                let same_block = (r < n) == (c < n);
                let entry: Option<(usize, f64)> = if same_block {
                    match i.cmp(&j) {
                        std::cmp::Ordering::Equal => Some((layout.diag(i), 1.0)),
                        std::cmp::Ordering::Less => Some((layout.pair(i, j), 1.0)),
                        std::cmp::Ordering::Greater => Some((layout.pair(j, i), 1.0)),
                    }
                } else {
                    // upper-right block holds −Im X
                    match i.cmp(&j) {
                        std::cmp::Ordering::Equal => None,
                        std::cmp::Ordering::Less => Some((layout.pair(i, j) + 1, -1.0)),
                        std::cmp::Ordering::Greater => Some((layout.pair(j, i) + 1, 1.0)),
                    }
                };
                match entry {
                    Some((col, a)) => rows.push(&[(col, a * scale)], true, 0.0),
                    None => rows.push(&[], false, 0.0),
                }
            }
        }
        cones.push(SupportedConeT::PSDTriangleConeT(2 * n));
    }

    let mut q = vec![0.0; ncols];
    for (c, a) in layout.row(&problem.objective) {
        q[c] -= a;
    }
    let m = rows.b.len();
    let a = CscMatrix::new_from_triplets(m, ncols, rows.i, rows.j, rows.v);
    let p = CscMatrix::zeros((ncols, ncols));
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_feas(tol.feasibility)
        .tol_gap_abs(tol.gap)
        .tol_gap_rel(tol.gap)
        .max_iter(tol.max_iterations)
        .build()
        .expect("static solver settings are valid");
    let mut solver = match DefaultSolver::new(&p, &q, &a, &rows.b, &cones, settings) {
        Ok(s) => s,
        Err(_) => {
            return Ok(failure(problem));
        }
    };
    solver.solve();

    let x = &solver.solution.x;
    let scalars: Vec<f64> = x[..layout.n_scalars].to_vec();
    let mat = layout.matrix(x);
    let objective = problem.objective.evaluate(&scalars, &mat);
    let info = &solver.info;
    let primal = if x.iter().all(|v| v.is_finite()) {
        recompute_residual(problem, &scalars, &mat)
    } else {
        f64::INFINITY
    };
    let near = primal <= tol.acceptance * 1e2;
    let status = match solver.solution.status {
        SolverStatus::Solved if primal <= tol.acceptance => SolveStatus::Optimal,
        SolverStatus::Solved | SolverStatus::AlmostSolved if near => SolveStatus::NearOptimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        // Stalls close to the optimum still leave a usable feasible point;
        // the gap says how close.
        SolverStatus::NumericalError
        | SolverStatus::InsufficientProgress
        | SolverStatus::MaxIterations
            if near && info.gap_rel.abs() <= NEAR_GAP && objective.is_finite() =>
        {
            SolveStatus::NearOptimal
        }
        _ => SolveStatus::NumericalFailure,
    };
    Ok(ConicSolution {
        status,
        scalars,
        x: mat,
        objective,
        residuals: Residuals {
            primal,
            dual: info.res_dual,
            gap: info.gap_rel,
        },
        iterations: info.iterations,
    })
}

fn failure(problem: &ConicProblem) -> ConicSolution {
    ConicSolution {
        status: SolveStatus::NumericalFailure,
        scalars: vec![f64::NAN; problem.n_scalars()],
        x: CMatrix::zeros(problem.psd_side, problem.psd_side),
        objective: f64::NAN,
        residuals: Residuals {
            primal: f64::INFINITY,
            dual: f64::INFINITY,
            gap: f64::INFINITY,
        },
        iterations: 0,
    }
}
