use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus};

use super::canonical::{canonicalize, RowOrigin, StandardForm};
use super::kkt::{residuals_in_standard_form, KktResiduals};
use super::{ConeKind, ConicError, ConicProblem};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    /// Converged to the solver's reduced-accuracy thresholds only.
    NearOptimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

impl SolveStatus {
    pub fn is_solved(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near-optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration-limit",
            SolveStatus::NumericalFailure => "numerical-failure",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverSettings<T> {
    /// Relative tolerance applied to primal feasibility, dual feasibility and gap.
    pub tol: T,
    pub max_iter: u32,
    pub verbose: bool,
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
}

impl<T: Scalar> Default for SolverSettings<T> {
    fn default() -> Self {
        // 1e-8 in double precision; single precision cannot get there.
        let floor = T::epsilon().powf(T::lit(2.0 / 3.0));
        Self {
            tol: T::max(T::lit(1e-8), floor),
            max_iter: 200,
            verbose: false,
            time_limit: None,
        }
    }
}

impl<T: Scalar> SolverSettings<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution<T> {
    pub status: SolveStatus,
    pub x: Vec<T>,
    /// Standard-form dual, one entry per canonical row.
    pub z: Vec<T>,
    /// Primal objective `cᵀx + c0`.
    pub objective: T,
    /// Dual objective `−bᵀz + c0`.
    pub dual_objective: T,
    pub iterations: u32,
    /// Seconds spent inside the interior-point iterations.
    pub solve_time: f64,
    /// Independently recomputed KKT residuals.
    pub residuals: KktResiduals<T>,
    /// Multipliers of the equality rows.
    pub eq_duals: Vec<T>,
    /// Multipliers (>= 0) of the inequality rows.
    pub ineq_duals: Vec<T>,
    /// Multipliers of the lower and upper column bounds; zero for absent bounds.
    pub lower_duals: Vec<T>,
    pub upper_duals: Vec<T>,
    /// Dual vector of each cone block in member coordinates.
    pub cone_duals: Vec<Vec<T>>,
}

impl<T: Scalar> ConicSolution<T> {
    /// A hand-built primal/dual pair, e.g. to check residuals of a known optimum.
    pub fn candidate(x: Vec<T>, z: Vec<T>) -> Self {
        Self {
            status: SolveStatus::Optimal,
            x,
            z,
            objective: T::nan(),
            dual_objective: T::nan(),
            iterations: 0,
            solve_time: 0.0,
            residuals: KktResiduals::nan(),
            eq_duals: Vec::new(),
            ineq_duals: Vec::new(),
            lower_duals: Vec::new(),
            upper_duals: Vec::new(),
            cone_duals: Vec::new(),
        }
    }
}

fn map_status(s: SolverStatus) -> SolveStatus {
    match s {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved => SolveStatus::NearOptimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::IterationLimit,
        _ => SolveStatus::NumericalFailure,
    }
}

/// Solves the problem with a homogeneous self-dual interior-point method.
///
/// An `Optimal` status is only reported when the independently recomputed
/// residuals are within ten times `settings.tol`; otherwise it is downgraded
/// to `NearOptimal`.
pub fn solve<T: Scalar>(
    problem: &ConicProblem<T>,
    settings: &SolverSettings<T>,
) -> Result<ConicSolution<T>, ConicError> {
    let sf = canonicalize(problem)?;
    let mut cfg = DefaultSettings::<T> {
        verbose: settings.verbose,
        max_iter: settings.max_iter,
        tol_gap_abs: settings.tol,
        tol_gap_rel: settings.tol,
        tol_feas: settings.tol,
        time_limit: settings.time_limit.unwrap_or(f64::INFINITY),
        ..Default::default()
    };
    scale_internal_tolerances(&mut cfg, settings.tol);

    let p = CscMatrix::zeros((sf.n, sf.n));
    let mut solver = DefaultSolver::new(&p, &sf.q, &sf.a, &sf.b, &sf.cones, cfg)
        .map_err(|e| ConicError::Setup(e.to_string()))?;
    let start = Instant::now();
    solver.solve();
    let solve_time = start.elapsed().as_secs_f64();

    let sol = &solver.solution;
    let mut status = map_status(sol.status);
    let x = sol.x.clone();
    let z = sol.z.clone();
    let residuals = residuals_in_standard_form(&sf, &x, &z);
    if status == SolveStatus::Optimal && residuals.max() > settings.tol * T::lit(10.0) {
        status = SolveStatus::NearOptimal;
    }
    let objective = problem.objective_value(&x);
    let dual_objective = problem.objective_offset - crate::scalar::dot(&sf.b, &z);
    let mut out = ConicSolution {
        status,
        x,
        z,
        objective,
        dual_objective,
        iterations: sol.iterations,
        solve_time,
        residuals,
        eq_duals: Vec::new(),
        ineq_duals: Vec::new(),
        lower_duals: Vec::new(),
        upper_duals: Vec::new(),
        cone_duals: Vec::new(),
    };
    unpack_duals(problem, &sf, &mut out);
    Ok(out)
}

/// Clarabel's regularisation and refinement defaults assume double
/// precision; in a coarser scalar they stall before the requested tolerance.
fn scale_internal_tolerances<T: Scalar>(cfg: &mut DefaultSettings<T>, tol: T) {
    let eps = T::epsilon();
    if eps <= T::lit(1e-12) {
        return;
    }
    let sqrt_eps = eps.sqrt();
    cfg.static_regularization_constant = sqrt_eps * T::lit(0.1);
    cfg.dynamic_regularization_eps = eps * T::lit(16.0);
    cfg.dynamic_regularization_delta = sqrt_eps;
    cfg.iterative_refinement_reltol = eps * T::lit(16.0);
    cfg.iterative_refinement_abstol = eps * T::lit(16.0);
    cfg.tol_ktratio = T::max(cfg.tol_ktratio, sqrt_eps);
    cfg.reduced_tol_gap_abs = T::max(cfg.reduced_tol_gap_abs, tol * T::lit(10.0));
    cfg.reduced_tol_gap_rel = T::max(cfg.reduced_tol_gap_rel, tol * T::lit(10.0));
    cfg.reduced_tol_feas = T::max(cfg.reduced_tol_feas, tol * T::lit(10.0));
    cfg.reduced_tol_ktratio = T::max(cfg.reduced_tol_ktratio, sqrt_eps * T::lit(10.0));
}

/// Maps standard-form duals back onto rows, bounds and cone members.
fn unpack_duals<T: Scalar>(problem: &ConicProblem<T>, sf: &StandardForm<T>, sol: &mut ConicSolution<T>) {
    let n = problem.n_cols();
    sol.eq_duals = vec![T::zero(); problem.eq_rows.len()];
    sol.ineq_duals = vec![T::zero(); problem.ineq_rows.len()];
    sol.lower_duals = vec![T::zero(); n];
    sol.upper_duals = vec![T::zero(); n];
    sol.cone_duals = problem
        .cones
        .iter()
        .map(|c| vec![T::zero(); c.members.len()])
        .collect();
    for (r, origin) in sf.origin.iter().enumerate() {
        let z = sol.z[r];
        match *origin {
            RowOrigin::Eq(i) => sol.eq_duals[i] = z,
            RowOrigin::Ineq(i) => sol.ineq_duals[i] = z,
            RowOrigin::Lower(j) => sol.lower_duals[j] = z,
            RowOrigin::Upper(j) => sol.upper_duals[j] = z,
            RowOrigin::Cone { block, entry } => sol.cone_duals[block][entry] = z,
        }
    }
    let inv_sqrt2 = T::one() / T::lit(2.0).sqrt();
    for (block, duals) in problem.cones.iter().zip(sol.cone_duals.iter_mut()) {
        if block.kind == ConeKind::RotatedSoc {
            let (u, w) = (duals[0], duals[1]);
            duals[0] = (u + w) * inv_sqrt2;
            duals[1] = (u - w) * inv_sqrt2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{AffineExpr, ConeKind, ConicProblem};
    use super::*;

    #[test]
    fn lp_lower_bound() {
        let mut p = ConicProblem::<f64>::new();
        let x = p.add_col("x", 1.0, f64::INFINITY);
        p.set_cost(x, 1.0);
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-7);
        assert!((s.objective - 1.0).abs() < 1e-7);
        assert!((s.lower_duals[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn euclidean_norm_epigraph() {
        // min t  s.t. ‖(3, 4)‖ <= t
        let mut p = ConicProblem::<f64>::new();
        let t = p.add_free_col("t");
        p.set_cost(t, 1.0);
        p.add_cone(
            ConeKind::Soc,
            "norm",
            vec![AffineExpr::col(t), AffineExpr::constant(3.0), AffineExpr::constant(4.0)],
        );
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.x[t] - 5.0).abs() < 1e-7);
    }

    #[test]
    fn rotated_cone_is_tight_at_optimum() {
        // min l  s.t. P² + Q² <= l·v, v = 1, P = 1, Q = 0
        let mut p = ConicProblem::<f64>::new();
        let pc = p.add_col("P", 1.0, 1.0);
        let qc = p.add_col("Q", 0.0, 0.0);
        let l = p.add_free_col("l");
        let v = p.add_free_col("v");
        p.add_eq("v=1", vec![(v, 1.0)], 1.0);
        p.set_cost(l, 1.0);
        p.add_cone(
            ConeKind::RotatedSoc,
            "branch",
            vec![
                AffineExpr::scaled(l, 0.5),
                AffineExpr::col(v),
                AffineExpr::col(pc),
                AffineExpr::col(qc),
            ],
        );
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.x[l] - 1.0).abs() < 1e-7, "{:?}", s.x);
    }

    #[test]
    fn infeasible_and_unbounded_detected() {
        let mut p = ConicProblem::<f64>::new();
        let x = p.add_col("x", 2.0, 1.0);
        p.set_cost(x, 1.0);
        assert_eq!(solve(&p, &SolverSettings::default()).unwrap().status, SolveStatus::Infeasible);

        let mut p = ConicProblem::<f64>::new();
        let x = p.add_col("x", f64::NEG_INFINITY, 0.0);
        p.set_cost(x, 1.0);
        assert_eq!(solve(&p, &SolverSettings::default()).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn iteration_cap_reported() {
        let mut p = ConicProblem::<f64>::new();
        let t = p.add_free_col("t");
        p.set_cost(t, 1.0);
        p.add_cone(
            ConeKind::Soc,
            "norm",
            vec![AffineExpr::col(t), AffineExpr::constant(3.0), AffineExpr::constant(4.0)],
        );
        let settings = SolverSettings {
            max_iter: 1,
            ..SolverSettings::default()
        };
        assert_eq!(solve(&p, &settings).unwrap().status, SolveStatus::IterationLimit);
    }

    #[test]
    fn single_precision_solve() {
        let mut p = ConicProblem::<f32>::new();
        let t = p.add_free_col("t");
        p.set_cost(t, 1.0);
        p.add_cone(
            ConeKind::Soc,
            "norm",
            vec![AffineExpr::col(t), AffineExpr::constant(3.0), AffineExpr::constant(4.0)],
        );
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert!(s.status.is_solved(), "{}", s.status);
        assert!((s.x[t] - 5.0).abs() < 1e-3);
    }

    #[test]
    fn deterministic() {
        let mut p = ConicProblem::<f64>::new();
        let a = p.add_col("a", 0.0, 4.0);
        let b = p.add_col("b", 0.0, 4.0);
        p.set_cost(a, -1.0);
        p.set_cost(b, -2.0);
        p.add_le("sum", vec![(a, 1.0), (b, 1.0)], 5.0);
        let s1 = solve(&p, &SolverSettings::default()).unwrap();
        let s2 = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s1.x, s2.x);
        assert_eq!(s1.iterations, s2.iterations);
    }
}
