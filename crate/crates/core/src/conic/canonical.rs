use clarabel::algebra::CscMatrix;
use clarabel::solver::SupportedConeT;

use super::{ConeKind, ConicError, ConicProblem};
use crate::scalar::Scalar;

/// Where a standard-form row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOrigin {
    Eq(usize),
    Ineq(usize),
    Lower(usize),
    Upper(usize),
    /// Row `entry` of cone block `block`, in standard (unrotated) coordinates.
    Cone { block: usize, entry: usize },
}

/// `min qᵀx  s.t.  A x + s = b,  s ∈ K`, with `K` a product of a zero cone,
/// a nonnegative orthant and second-order cones, in that order.
#[derive(Debug, Clone)]
pub struct StandardForm<T: Scalar> {
    pub n: usize,
    pub q: Vec<T>,
    pub a: CscMatrix<T>,
    pub b: Vec<T>,
    pub cones: Vec<SupportedConeT<T>>,
    pub origin: Vec<RowOrigin>,
    /// First standard-form row of each problem cone block.
    pub cone_start: Vec<usize>,
    pub n_zero: usize,
    pub n_nonneg: usize,
}

struct Triplets<T> {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    b: Vec<T>,
    origin: Vec<RowOrigin>,
}

impl<T: Scalar> Triplets<T> {
    fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, T)>, rhs: T, origin: RowOrigin) {
        let r = self.b.len();
        for (j, v) in entries {
            if v != T::zero() {
                self.rows.push(r);
                self.cols.push(j);
                self.vals.push(v);
            }
        }
        self.b.push(rhs);
        self.origin.push(origin);
    }
}

/// Column-compressed matrix from triplets, summing duplicates.
fn csc_from_triplets<T: Scalar>(m: usize, n: usize, rows: &[usize], cols: &[usize], vals: &[T]) -> CscMatrix<T> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by_key(|&k| (cols[k], rows[k]));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(vals.len());
    let mut nzval: Vec<T> = Vec::with_capacity(vals.len());
    let mut last: Option<(usize, usize)> = None;
    for k in idx {
        let key = (cols[k], rows[k]);
        if last == Some(key) {
            *nzval.last_mut().unwrap() += vals[k];
            continue;
        }
        last = Some(key);
        rowval.push(rows[k]);
        nzval.push(vals[k]);
        colptr[cols[k] + 1] += 1;
    }
    for j in 0..n {
        colptr[j + 1] += colptr[j];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

/// Folds rows, bounds and cone blocks into the standard form.
///
/// Rotated blocks `(a, b, c…)` become plain second-order cones through the
/// orthogonal map `(a, b) → ((a+b)/√2, (a−b)/√2)`, so `2ab >= ‖c‖²` reads
/// `‖((a−b)/√2, c)‖ <= (a+b)/√2`.
pub fn canonicalize<T: Scalar>(problem: &ConicProblem<T>) -> Result<StandardForm<T>, ConicError> {
    problem.validate()?;
    let n = problem.n_cols();
    let mut t = Triplets {
        rows: Vec::new(),
        cols: Vec::new(),
        vals: Vec::new(),
        b: Vec::new(),
        origin: Vec::new(),
    };
    let mut cones = Vec::new();

    for (i, row) in problem.eq_rows.iter().enumerate() {
        t.push_row(row.coeffs.iter().copied(), row.rhs, RowOrigin::Eq(i));
    }
    let n_zero = t.b.len();
    if n_zero > 0 {
        cones.push(SupportedConeT::ZeroConeT(n_zero));
    }

    for (i, row) in problem.ineq_rows.iter().enumerate() {
        t.push_row(row.coeffs.iter().copied(), row.rhs, RowOrigin::Ineq(i));
    }
    for j in 0..n {
        let lo = problem.lower[j];
        if lo.is_finite() {
            t.push_row([(j, -T::one())], -lo, RowOrigin::Lower(j));
        }
    }
    for j in 0..n {
        let hi = problem.upper[j];
        if hi.is_finite() {
            t.push_row([(j, T::one())], hi, RowOrigin::Upper(j));
        }
    }
    let n_nonneg = t.b.len() - n_zero;
    if n_nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(n_nonneg));
    }

    let inv_sqrt2 = T::one() / T::lit(2.0).sqrt();
    let mut cone_start = Vec::with_capacity(problem.cones.len());
    for (k, block) in problem.cones.iter().enumerate() {
        cone_start.push(t.b.len());
        // s = member  ⇔  row of A = −coeffs, b = constant
        let neg = |e: &super::AffineExpr<T>, scale: T| -> Vec<(usize, T)> {
            e.terms.iter().map(|&(j, a)| (j, -a * scale)).collect()
        };
        match block.kind {
            ConeKind::Soc => {
                for (entry, m) in block.members.iter().enumerate() {
                    t.push_row(neg(m, T::one()), m.constant, RowOrigin::Cone { block: k, entry });
                }
            }
            ConeKind::RotatedSoc => {
                let (a, b) = (&block.members[0], &block.members[1]);
                let mut sum = neg(a, inv_sqrt2);
                sum.extend(neg(b, inv_sqrt2));
                t.push_row(
                    sum,
                    (a.constant + b.constant) * inv_sqrt2,
                    RowOrigin::Cone { block: k, entry: 0 },
                );
                let mut diff = neg(a, inv_sqrt2);
                diff.extend(neg(b, -inv_sqrt2));
                t.push_row(
                    diff,
                    (a.constant - b.constant) * inv_sqrt2,
                    RowOrigin::Cone { block: k, entry: 1 },
                );
                for (entry, m) in block.members.iter().enumerate().skip(2) {
                    t.push_row(neg(m, T::one()), m.constant, RowOrigin::Cone { block: k, entry });
                }
            }
        }
        cones.push(SupportedConeT::SecondOrderConeT(block.members.len()));
    }

    let m = t.b.len();
    let a = csc_from_triplets(m, n, &t.rows, &t.cols, &t.vals);
    Ok(StandardForm {
        n,
        q: problem.objective.clone(),
        a,
        b: t.b,
        cones,
        origin: t.origin,
        cone_start,
        n_zero,
        n_nonneg,
    })
}

impl<T: Scalar> StandardForm<T> {
    pub fn m(&self) -> usize {
        self.b.len()
    }

    /// `A x`
    pub fn a_mul(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.m()];
        for j in 0..self.n {
            for k in self.a.colptr[j]..self.a.colptr[j + 1] {
                out[self.a.rowval[k]] += self.a.nzval[k] * x[j];
            }
        }
        out
    }

    /// `Aᵀ z`
    pub fn at_mul(&self, z: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|j| {
                (self.a.colptr[j]..self.a.colptr[j + 1])
                    .map(|k| self.a.nzval[k] * z[self.a.rowval[k]])
                    .sum()
            })
            .collect()
    }

    /// Sizes of the second-order cones, in order.
    pub fn soc_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.cones.iter().filter_map(|c| match c {
            SupportedConeT::SecondOrderConeT(d) => Some(*d),
            _ => None,
        })
    }
}
