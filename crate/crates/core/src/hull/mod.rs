//! Convex-hull descriptions of the branch equation `v·ℓ = P² + Q²` and of
//! the storage loss equation, with membership tests and sampling oracles.
//!
//! Both hulls live on 4-vectors: `(P, Q, ℓ, v)` for a branch and
//! `(p_des, q_des, p_loss, v)` for a storage unit.

mod branch;
mod des;

use rand::Rng;
use thiserror::Error;

use crate::conic::{solve, ConicError, ConicProblem, SolveStatus, SolverSettings};
use crate::scalar::Scalar;

pub use branch::{
    make_branch_hull, sample_facet, sample_omega0, sample_omega0_stratified, BranchBounds, BranchHull, Decomposition, Projections,
};
pub use des::{make_des_hull, sample_des_points, DesBounds, DesHull};

pub type Point<T> = [T; 4];

#[derive(Debug, Error, PartialEq)]
pub enum HullError {
    #[error("inconsistent limits: {0}")]
    InconsistentLimits(String),
    #[error("nonpositive resistance: {0}")]
    NonpositiveResistance(String),
    #[error("point is not on the cut facet (residual {0:e})")]
    NotOnFacet(f64),
    #[error("point outside the thermal disk")]
    OutsideDisk,
    #[error("no samples")]
    NoSamples,
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error("support solve ended with status {0}")]
    Solve(SolveStatus),
}

/// One constraint of a hull description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HullConstraint {
    /// `P² + Q² <= ℓ·v`
    BranchCone,
    /// `v_max·ℓ + l_max·v <= l_max·(v_max + v_nom)`
    BranchCut,
    /// `P² + Q² <= s_max²`
    Thermal,
    CurrentLower,
    CurrentUpper,
    VoltageLower,
    VoltageUpper,
    /// `r_eq·p² + r_cvt·q² <= p_loss·v`
    LossCone,
    /// `r_batt·q² + v_min·p_loss <= r_eq·s²`
    AsymmetryCut,
    /// `v_min·v_max·p_loss + r_eq·s²·v <= r_eq·s²·(v_min + v_max)`
    ChordCut,
    /// `p² + q² <= s²`
    ConverterRating,
    LossLower,
}

impl std::fmt::Display for HullConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            HullConstraint::BranchCone => "branch-cone",
            HullConstraint::BranchCut => "branch-cut",
            HullConstraint::Thermal => "thermal",
            HullConstraint::CurrentLower => "current-lower",
            HullConstraint::CurrentUpper => "current-upper",
            HullConstraint::VoltageLower => "voltage-lower",
            HullConstraint::VoltageUpper => "voltage-upper",
            HullConstraint::LossCone => "loss-cone",
            HullConstraint::AsymmetryCut => "asymmetry-cut",
            HullConstraint::ChordCut => "chord-cut",
            HullConstraint::ConverterRating => "converter-rating",
            HullConstraint::LossLower => "loss-lower",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership<T> {
    /// Violated constraints with the amount of violation, in evaluation order.
    pub violated: Vec<(HullConstraint, T)>,
}

impl<T: Scalar> Membership<T> {
    pub fn inside(&self) -> bool {
        self.violated.is_empty()
    }

    pub fn violates(&self, c: HullConstraint) -> bool {
        self.violated.iter().any(|&(v, _)| v == c)
    }

    fn from_slacks(slacks: impl IntoIterator<Item = (HullConstraint, T)>, tol: T) -> Self {
        Self {
            violated: slacks.into_iter().filter(|&(_, s)| s > tol).collect(),
        }
    }
}

/// Default membership tolerance; widened to a few ulps for single precision.
pub fn default_tol<T: Scalar>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

/// A convex set in four variables that can be checked pointwise and written
/// into a cone program.
pub trait Hull<T: Scalar> {
    /// Constraint values `g(x)`, feasible iff every entry is `<= 0`.
    fn slacks(&self, x: &Point<T>) -> Vec<(HullConstraint, T)>;

    /// Adds the full description, box included, over the given columns.
    fn emit(&self, problem: &mut ConicProblem<T>, cols: [usize; 4], label: &str);

    fn membership_tol(&self, x: &Point<T>, tol: T) -> Membership<T> {
        Membership::from_slacks(self.slacks(x), tol)
    }
}

/// Membership at the default tolerance.
pub fn membership<T: Scalar, H: Hull<T> + ?Sized>(hull: &H, x: &Point<T>) -> Membership<T> {
    hull.membership_tol(x, default_tol())
}

/// Minimum of `direction·x` over the hull, by a cone solve.
pub fn support<T: Scalar, H: Hull<T> + ?Sized>(hull: &H, direction: &Point<T>) -> Result<T, HullError> {
    let mut p = ConicProblem::new();
    let cols = ["x0", "x1", "x2", "x3"].map(|n| p.add_free_col(n));
    for (j, &d) in cols.iter().zip(direction) {
        p.set_cost(*j, d);
    }
    hull.emit(&mut p, cols, "hull");
    let settings = SolverSettings::with_tol(T::lit(1e-10).max(T::epsilon().powf(T::lit(2.0 / 3.0))));
    let sol = solve(&p, &settings)?;
    if !sol.status.is_solved() {
        return Err(HullError::Solve(sol.status));
    }
    Ok(sol.objective)
}

/// Hull support minus sampled support in `direction`.
///
/// For a valid relaxation this is `<= 0`; for a tight one it approaches zero
/// as the sample densifies.
pub fn support_gap<T: Scalar, H: Hull<T> + ?Sized>(
    hull: &H,
    direction: &Point<T>,
    samples: &[Point<T>],
) -> Result<T, HullError> {
    let sampled = sampled_support(direction, samples)?;
    Ok(support(hull, direction)? - sampled)
}

pub fn sampled_support<T: Scalar>(direction: &Point<T>, samples: &[Point<T>]) -> Result<T, HullError> {
    samples
        .iter()
        .map(|x| dot4(direction, x))
        .reduce(T::min)
        .ok_or(HullError::NoSamples)
}

/// Unit directions drawn uniformly from the 3-sphere.
pub fn random_directions<T: Scalar>(n: usize, rng: &mut impl Rng) -> Vec<Point<T>> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let g: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            out.push(g.map(|x| T::lit(x / norm)));
        }
    }
    out
}

pub(crate) fn dot4<T: Scalar>(a: &Point<T>, b: &Point<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}
