//! Cone programs: a modeling-level problem type, its canonical standard form,
//! the interior-point solve, and an independent KKT re-check.
//!
//! ```text
//! min  cᵀx + c0
//! s.t. a_iᵀx  = b_i            (equality rows)
//!      a_jᵀx <= b_j            (inequality rows)
//!      lo <= x <= hi           (column bounds, ±inf allowed)
//!      ‖(m_1, …, m_k)‖ <= m_0                  (second-order cone blocks)
//!      ‖(m_2, …, m_k)‖² <= 2 m_0 m_1, m_0, m_1 >= 0   (rotated blocks)
//! ```
//!
//! Cone members `m` are affine expressions of the columns.

mod canonical;
mod dump;
mod kkt;
mod solve;

use thiserror::Error;

use crate::scalar::Scalar;

pub use canonical::{canonicalize, RowOrigin, StandardForm};
pub use dump::{parse_dump, write_dump};
pub use kkt::{kkt_residuals, KktResiduals};
pub use solve::{solve, ConicSolution, SolveStatus, SolverSettings};

#[derive(Debug, Error, PartialEq)]
pub enum ConicError {
    #[error("column index {index} out of range in {context} ({n_cols} columns)")]
    ColumnOutOfRange {
        index: usize,
        n_cols: usize,
        context: String,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("cone block {label} has {size} members, needs at least {min}")]
    ConeTooSmall {
        label: String,
        size: usize,
        min: usize,
    },
    #[error("solver setup failed: {0}")]
    Setup(String),
    #[error("dump parse error on line {line}: {message}")]
    Dump { line: usize, message: String },
}

/// `Σ coeff·x[col] + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr<T> {
    pub terms: Vec<(usize, T)>,
    pub constant: T,
}

impl<T: Scalar> AffineExpr<T> {
    pub fn col(j: usize) -> Self {
        Self::scaled(j, T::one())
    }

    pub fn scaled(j: usize, a: T) -> Self {
        Self {
            terms: vec![(j, a)],
            constant: T::zero(),
        }
    }

    pub fn constant(c: T) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn new(terms: Vec<(usize, T)>, constant: T) -> Self {
        Self { terms, constant }
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(j, a)| acc + a * x[j])
    }
}

/// `Σ coeff·x[col]  (= or <=)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow<T> {
    pub label: String,
    pub coeffs: Vec<(usize, T)>,
    pub rhs: T,
}

impl<T: Scalar> LinearRow<T> {
    pub fn lhs(&self, x: &[T]) -> T {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    /// `‖m[1..]‖ <= m[0]`
    Soc,
    /// `‖m[2..]‖² <= 2·m[0]·m[1]`, `m[0], m[1] >= 0`
    RotatedSoc,
}

impl ConeKind {
    fn min_members(self) -> usize {
        match self {
            ConeKind::Soc => 2,
            ConeKind::RotatedSoc => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock<T> {
    pub kind: ConeKind,
    pub label: String,
    pub members: Vec<AffineExpr<T>>,
}

impl<T: Scalar> ConeBlock<T> {
    /// Amount by which the block is violated at `x` (zero when inside).
    pub fn violation(&self, x: &[T]) -> T {
        let m: Vec<T> = self.members.iter().map(|e| e.eval(x)).collect();
        match self.kind {
            ConeKind::Soc => {
                let tail = crate::scalar::norm2(&m[1..]);
                T::max(T::zero(), tail - m[0])
            }
            ConeKind::RotatedSoc => {
                let two = T::lit(2.0);
                let sqrt2 = two.sqrt();
                let t = (m[0] + m[1]) / sqrt2;
                let mut tail = vec![(m[0] - m[1]) / sqrt2];
                tail.extend_from_slice(&m[2..]);
                T::max(T::zero(), crate::scalar::norm2(&tail) - t)
            }
        }
    }
}

/// A linear-objective cone program over named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem<T> {
    pub col_names: Vec<String>,
    pub objective: Vec<T>,
    pub objective_offset: T,
    pub eq_rows: Vec<LinearRow<T>>,
    pub ineq_rows: Vec<LinearRow<T>>,
    pub cones: Vec<ConeBlock<T>>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> Default for ConicProblem<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ConicProblem<T> {
    pub fn new() -> Self {
        Self {
            col_names: Vec::new(),
            objective: Vec::new(),
            objective_offset: T::zero(),
            eq_rows: Vec::new(),
            ineq_rows: Vec::new(),
            cones: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    pub fn n_cols(&self) -> usize {
        self.col_names.len()
    }

    /// Adds a column with bounds `lo <= x <= hi` (use infinities for free sides).
    pub fn add_col(&mut self, name: impl Into<String>, lo: T, hi: T) -> usize {
        self.col_names.push(name.into());
        self.objective.push(T::zero());
        self.lower.push(lo);
        self.upper.push(hi);
        self.col_names.len() - 1
    }

    pub fn add_free_col(&mut self, name: impl Into<String>) -> usize {
        self.add_col(name, T::neg_infinity(), T::infinity())
    }

    pub fn set_cost(&mut self, j: usize, c: T) {
        self.objective[j] = c;
    }

    pub fn add_eq(&mut self, label: impl Into<String>, coeffs: Vec<(usize, T)>, rhs: T) {
        self.eq_rows.push(LinearRow {
            label: label.into(),
            coeffs,
            rhs,
        });
    }

    /// `Σ a x <= rhs`
    pub fn add_le(&mut self, label: impl Into<String>, coeffs: Vec<(usize, T)>, rhs: T) {
        self.ineq_rows.push(LinearRow {
            label: label.into(),
            coeffs,
            rhs,
        });
    }

    /// `Σ a x >= rhs`, stored negated.
    pub fn add_ge(&mut self, label: impl Into<String>, coeffs: Vec<(usize, T)>, rhs: T) {
        let coeffs = coeffs.into_iter().map(|(j, a)| (j, -a)).collect();
        self.add_le(label, coeffs, -rhs);
    }

    pub fn add_cone(&mut self, kind: ConeKind, label: impl Into<String>, members: Vec<AffineExpr<T>>) {
        self.cones.push(ConeBlock {
            kind,
            label: label.into(),
            members,
        });
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective_offset + crate::scalar::dot(&self.objective, x)
    }

    /// Checks dimensions, indices and finiteness.
    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.n_cols();
        for (name, len) in [
            ("objective", self.objective.len()),
            ("lower", self.lower.len()),
            ("upper", self.upper.len()),
        ] {
            if len != n {
                return Err(ConicError::Dimension(format!("{name} has {len} entries for {n} columns")));
            }
        }
        if !self.objective.iter().all(|c| c.is_finite()) || !self.objective_offset.is_finite() {
            return Err(ConicError::NonFinite("objective".into()));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() {
                return Err(ConicError::NonFinite(format!("bounds of {}", self.col_names[j])));
            }
        }
        let check_terms = |terms: &[(usize, T)], ctx: &str| -> Result<(), ConicError> {
            for &(j, a) in terms {
                if j >= n {
                    return Err(ConicError::ColumnOutOfRange {
                        index: j,
                        n_cols: n,
                        context: ctx.to_string(),
                    });
                }
                if !a.is_finite() {
                    return Err(ConicError::NonFinite(ctx.to_string()));
                }
            }
            Ok(())
        };
        for row in self.eq_rows.iter().chain(&self.ineq_rows) {
            check_terms(&row.coeffs, &row.label)?;
            if !row.rhs.is_finite() {
                return Err(ConicError::NonFinite(row.label.clone()));
            }
        }
        for cone in &self.cones {
            if cone.members.len() < cone.kind.min_members() {
                return Err(ConicError::ConeTooSmall {
                    label: cone.label.clone(),
                    size: cone.members.len(),
                    min: cone.kind.min_members(),
                });
            }
            for m in &cone.members {
                check_terms(&m.terms, &cone.label)?;
                if !m.constant.is_finite() {
                    return Err(ConicError::NonFinite(cone.label.clone()));
                }
            }
        }
        Ok(())
    }

    /// Worst violation of any row, bound or cone at `x`, in absolute terms.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for row in &self.eq_rows {
            worst = worst.max((row.lhs(x) - row.rhs).abs());
        }
        for row in &self.ineq_rows {
            worst = worst.max(row.lhs(x) - row.rhs);
        }
        for j in 0..self.n_cols() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for cone in &self.cones {
            worst = worst.max(cone.violation(x));
        }
        worst
    }
}
