//! A small conic program: real scalar variables with box bounds, one
//! Hermitian PSD matrix variable, affine equality/inequality rows and
//! exponential-cone rows `e^u ≤ v`. The objective is maximised.
//!
//! Matrix terms are written as `tr(C·X)` with `C` Hermitian and stored by
//! its upper triangle. The complex PSD constraint is passed to the solver
//! through the real embedding `[[Re X, −Im X], [Im X, Re X]] ⪰ 0`.

mod dump;
mod solve;

pub use dump::{parse_dump, DumpError};
pub use solve::{solve, Tolerances};

use crate::{CMatrix, C64};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("scalar variable {index} referenced but only {count} declared")]
    UnknownScalar { index: usize, count: usize },
    #[error("matrix entry ({row}, {col}) outside a PSD side of {side}")]
    UnknownEntry { row: usize, col: usize, side: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("diagonal matrix coefficient at {0} has an imaginary part")]
    ComplexDiagonal(usize),
    #[error("scalar {0} has lower bound above upper bound")]
    EmptyBound(usize),
}

/// Coefficient `C_ij` (with `i ≤ j`) of a Hermitian `C` in `tr(C·X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixTerm {
    pub row: usize,
    pub col: usize,
    pub coef: C64,
}

/// `constant + Σ a_i s_i + tr(C·X)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffineExpr {
    pub constant: f64,
    pub scalars: Vec<(usize, f64)>,
    pub matrix: Vec<MatrixTerm>,
}

impl AffineExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            ..Self::default()
        }
    }

    pub fn scalar(index: usize, coef: f64) -> Self {
        Self::default().plus_scalar(index, coef)
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn plus_scalar(mut self, index: usize, coef: f64) -> Self {
        if coef != 0.0 {
            self.scalars.push((index, coef));
        }
        self
    }

    /// Adds `scale·tr(C·X)` for a Hermitian `C`, keeping its non-zero upper
    /// triangle.
    pub fn plus_trace(mut self, c: &CMatrix, scale: f64) -> Self {
        let n = c.nrows();
        for j in 0..n {
            for i in 0..=j {
                let v = c[(i, j)] * scale;
                if v != C64::new(0.0, 0.0) {
                    let v = if i == j { C64::from(v.re) } else { v };
                    self.matrix.push(MatrixTerm {
                        row: i,
                        col: j,
                        coef: v,
                    });
                }
            }
        }
        self
    }

    /// `scale·tr(X)`
    pub fn plus_matrix_trace(mut self, side: usize, scale: f64) -> Self {
        for i in 0..side {
            self.matrix.push(MatrixTerm {
                row: i,
                col: i,
                coef: C64::from(scale),
            });
        }
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.constant *= factor;
        for s in &mut self.scalars {
            s.1 *= factor;
        }
        for m in &mut self.matrix {
            m.coef *= factor;
        }
        self
    }

    pub fn evaluate(&self, scalars: &[f64], x: &CMatrix) -> f64 {
        let mut acc = self.constant;
        for &(i, a) in &self.scalars {
            acc += a * scalars[i];
        }
        for t in &self.matrix {
            if t.row == t.col {
                acc += t.coef.re * x[(t.row, t.row)].re;
            } else {
                let xv = x[(t.row, t.col)];
                acc += 2.0 * (t.coef.re * xv.re + t.coef.im * xv.im);
            }
        }
        acc
    }
}

/// Relation of an affine row to zero.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `expr ≤ 0`
    Le(AffineExpr),
    /// `expr = 0`
    Eq(AffineExpr),
    /// `e^u ≤ v`
    Exp(AffineExpr, AffineExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    /// `(lower, upper)` per scalar variable; infinite values mean unbounded.
    pub bounds: Vec<(f64, f64)>,
    /// Side of the Hermitian PSD variable (0 for none).
    pub psd_side: usize,
    /// Maximised.
    pub objective: AffineExpr,
    pub constraints: Vec<Constraint>,
}

impl ConicProblem {
    pub fn new(psd_side: usize) -> Self {
        Self {
            bounds: Vec::new(),
            psd_side,
            objective: AffineExpr::default(),
            constraints: Vec::new(),
        }
    }

    /// Declares a scalar variable and returns its index.
    pub fn add_scalar(&mut self, lower: f64, upper: f64) -> usize {
        self.bounds.push((lower, upper));
        self.bounds.len() - 1
    }

    pub fn n_scalars(&self) -> usize {
        self.bounds.len()
    }

    pub fn add(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn exp_rows(&self) -> usize {
        self.constraints
            .iter()
            .filter(|c| matches!(c, Constraint::Exp(..)))
            .count()
    }

    fn check_expr(&self, e: &AffineExpr, what: &'static str) -> Result<(), ConicError> {
        if !e.constant.is_finite() {
            return Err(ConicError::NonFinite(what));
        }
        for &(i, a) in &e.scalars {
            if i >= self.n_scalars() {
                return Err(ConicError::UnknownScalar {
                    index: i,
                    count: self.n_scalars(),
                });
            }
            if !a.is_finite() {
                return Err(ConicError::NonFinite(what));
            }
        }
        for t in &e.matrix {
            if t.row > t.col || t.col >= self.psd_side {
                return Err(ConicError::UnknownEntry {
                    row: t.row,
                    col: t.col,
                    side: self.psd_side,
                });
            }
            if !(t.coef.re.is_finite() && t.coef.im.is_finite()) {
                return Err(ConicError::NonFinite(what));
            }
            if t.row == t.col && t.coef.im != 0.0 {
                return Err(ConicError::ComplexDiagonal(t.row));
            }
        }
        Ok(())
    }

    /// Checks that every reference is declared and every number usable.
    pub fn validate(&self) -> Result<(), ConicError> {
        for (i, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan()
                || hi.is_nan()
                || lo > hi
                || lo == f64::INFINITY
                || hi == f64::NEG_INFINITY
            {
                return Err(ConicError::EmptyBound(i));
            }
        }
        self.check_expr(&self.objective, "objective")?;
        for c in &self.constraints {
            match c {
                Constraint::Le(e) => self.check_expr(e, "inequality")?,
                Constraint::Eq(e) => self.check_expr(e, "equality")?,
                Constraint::Exp(u, v) => {
                    self.check_expr(u, "exponential cone")?;
                    self.check_expr(v, "exponential cone")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl SolveStatus {
    pub fn is_usable(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    /// Largest violation of any row, bound or the PSD cone, recomputed from
    /// the returned point.
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub scalars: Vec<f64>,
    pub x: CMatrix,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: u32,
}

/// `[[Re H, −Im H], [Im H, Re H]]` for Hermitian `H`.
pub fn real_embed_hermitian(h: &CMatrix) -> Result<DMatrix<f64>, ConicError> {
    let defect = crate::linalg::hermitian_defect(h);
    if defect.is_nan() || defect > 1e-12 {
        return Err(ConicError::NotHermitian(defect));
    }
    let n = h.nrows();
    Ok(DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let v = h[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    }))
}
