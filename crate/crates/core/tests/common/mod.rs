//! Cone programs with hand-derived optima, shared by the solver tests and
//! the acceptance suite.

#![allow(dead_code)]

use chrelax::conic::{AffineExpr, ConeKind, ConicProblem};

pub struct Fixture {
    pub name: &'static str,
    pub problem: ConicProblem<f64>,
    pub objective: f64,
    /// Unique optimal point, when there is one.
    pub x: Option<Vec<f64>>,
}

fn col(j: usize) -> AffineExpr<f64> {
    AffineExpr::col(j)
}

fn cst(c: f64) -> AffineExpr<f64> {
    AffineExpr::constant(c)
}

fn fixture(name: &'static str, problem: ConicProblem<f64>, objective: f64, x: Option<Vec<f64>>) -> Fixture {
    Fixture { name, problem, objective, x }
}

pub fn fixtures() -> Vec<Fixture> {
    let inf = f64::INFINITY;
    let s2 = std::f64::consts::SQRT_2;
    let mut out = Vec::new();

    // min x, x >= 1
    let mut p = ConicProblem::new();
    let x = p.add_free_col("x");
    p.set_cost(x, 1.0);
    p.add_ge("lb", vec![(x, 1.0)], 1.0);
    out.push(fixture("lp_lower_bound", p, 1.0, Some(vec![1.0])));

    // min t, ‖(3, 4)‖ <= t
    let mut p = ConicProblem::new();
    let t = p.add_free_col("t");
    p.set_cost(t, 1.0);
    p.add_cone(ConeKind::Soc, "norm", vec![col(t), cst(3.0), cst(4.0)]);
    out.push(fixture("soc_norm_3_4", p, 5.0, Some(vec![5.0])));

    // min l, P² + Q² <= l·v, v = 1, P = 1, Q = 0
    let mut p = ConicProblem::new();
    let [pp, qq, l, v] = ["P", "Q", "l", "v"].map(|n| p.add_free_col(n));
    p.set_cost(l, 1.0);
    p.add_eq("v", vec![(v, 1.0)], 1.0);
    p.add_eq("P", vec![(pp, 1.0)], 1.0);
    p.add_eq("Q", vec![(qq, 1.0)], 0.0);
    p.add_cone(
        ConeKind::RotatedSoc,
        "branch",
        vec![AffineExpr::scaled(l, 0.5), col(v), col(pp), col(qq)],
    );
    out.push(fixture("rsoc_branch_tight", p, 1.0, Some(vec![1.0, 0.0, 1.0, 1.0])));

    // max x + y, x + 2y <= 4, 3x + y <= 6, x, y >= 0
    let mut p = ConicProblem::new();
    let x = p.add_col("x", 0.0, inf);
    let y = p.add_col("y", 0.0, inf);
    p.set_cost(x, -1.0);
    p.set_cost(y, -1.0);
    p.add_le("a", vec![(x, 1.0), (y, 2.0)], 4.0);
    p.add_le("b", vec![(x, 3.0), (y, 1.0)], 6.0);
    out.push(fixture("lp_two_constraints", p, -2.8, Some(vec![1.6, 1.2])));

    // min 2x + 3y, x + y = 1, x, y >= 0
    let mut p = ConicProblem::new();
    let x = p.add_col("x", 0.0, inf);
    let y = p.add_col("y", 0.0, inf);
    p.set_cost(x, 2.0);
    p.set_cost(y, 3.0);
    p.add_eq("sum", vec![(x, 1.0), (y, 1.0)], 1.0);
    out.push(fixture("lp_simplex", p, 2.0, Some(vec![1.0, 0.0])));

    // min -x + y over a box, both sides finite
    let mut p = ConicProblem::new();
    let x = p.add_col("x", 0.0, 2.0);
    let y = p.add_col("y", -1.0, 3.0);
    p.set_cost(x, -1.0);
    p.set_cost(y, 1.0);
    out.push(fixture("lp_box", p, -3.0, Some(vec![2.0, -1.0])));

    // constant offset carried through
    let mut p = ConicProblem::new();
    let x = p.add_col("x", -5.0, inf);
    p.set_cost(x, 1.0);
    p.objective_offset = 10.0;
    out.push(fixture("lp_offset", p, 5.0, Some(vec![-5.0])));

    // covering LP with both rows active
    let mut p = ConicProblem::new();
    let x = p.add_col("x1", 0.0, inf);
    let y = p.add_col("x2", 0.0, inf);
    p.set_cost(x, 1.0);
    p.set_cost(y, 1.0);
    p.add_ge("c1", vec![(x, 2.0), (y, 1.0)], 3.0);
    p.add_ge("c2", vec![(x, 1.0), (y, 3.0)], 4.0);
    out.push(fixture("lp_cover", p, 2.0, Some(vec![1.0, 1.0])));

    // 2x2 transportation problem
    let mut p = ConicProblem::new();
    let xs: Vec<usize> = ["x11", "x12", "x21", "x22"]
        .iter()
        .map(|n| p.add_col(*n, 0.0, inf))
        .collect();
    for (j, c) in xs.iter().zip([1.0, 4.0, 2.0, 1.0]) {
        p.set_cost(*j, c);
    }
    p.add_eq("s1", vec![(xs[0], 1.0), (xs[1], 1.0)], 3.0);
    p.add_eq("s2", vec![(xs[2], 1.0), (xs[3], 1.0)], 2.0);
    p.add_eq("d1", vec![(xs[0], 1.0), (xs[2], 1.0)], 2.0);
    p.add_eq("d2", vec![(xs[1], 1.0), (xs[3], 1.0)], 3.0);
    out.push(fixture("lp_transport", p, 8.0, Some(vec![2.0, 1.0, 0.0, 2.0])));

    // optimal face is a segment, so no unique point
    let mut p = ConicProblem::new();
    let x = p.add_col("x", 0.0, inf);
    let y = p.add_col("y", 0.0, inf);
    p.set_cost(x, 1.0);
    p.set_cost(y, 1.0);
    p.add_ge("cover", vec![(x, 1.0), (y, 1.0)], 1.0);
    p.add_ge("cover_dup", vec![(x, 2.0), (y, 2.0)], 2.0);
    out.push(fixture("lp_degenerate_face", p, 1.0, None));

    // chain of equalities through free columns
    let mut p = ConicProblem::new();
    let [a, b, c] = ["a", "b", "c"].map(|n| p.add_free_col(n));
    p.set_cost(c, 1.0);
    p.add_eq("a", vec![(a, 1.0)], 1.0);
    p.add_eq("b", vec![(b, 1.0), (a, -1.0)], 1.0);
    p.add_eq("c", vec![(c, 1.0), (b, -2.0)], 0.0);
    out.push(fixture("lp_equality_chain", p, 4.0, Some(vec![1.0, 2.0, 4.0])));

    // min x + y over the unit disk
    let mut p = ConicProblem::new();
    let [x, y] = ["x", "y"].map(|n| p.add_free_col(n));
    p.set_cost(x, 1.0);
    p.set_cost(y, 1.0);
    p.add_cone(ConeKind::Soc, "disk", vec![cst(1.0), col(x), col(y)]);
    out.push(fixture("soc_disk_linear", p, -s2, Some(vec![-1.0 / s2, -1.0 / s2])));

    // distance from (1, 2) to the line x + y = 0
    let mut p = ConicProblem::new();
    let [x, y, t] = ["x", "y", "t"].map(|n| p.add_free_col(n));
    p.set_cost(t, 1.0);
    p.add_eq("line", vec![(x, 1.0), (y, 1.0)], 0.0);
    p.add_cone(
        ConeKind::Soc,
        "dist",
        vec![col(t), AffineExpr::new(vec![(x, 1.0)], -1.0), AffineExpr::new(vec![(y, 1.0)], -2.0)],
    );
    out.push(fixture("soc_point_to_line", p, 3.0 / s2, Some(vec![-0.5, 0.5, 3.0 / s2])));

    // min x + y, x·y >= 1
    let mut p = ConicProblem::new();
    let x = p.add_col("x", 0.0, inf);
    let y = p.add_col("y", 0.0, inf);
    p.set_cost(x, 1.0);
    p.set_cost(y, 1.0);
    p.add_cone(ConeKind::RotatedSoc, "hyp", vec![AffineExpr::scaled(x, 0.5), col(y), cst(1.0)]);
    out.push(fixture("rsoc_hyperbola", p, 2.0, Some(vec![1.0, 1.0])));

    // epigraph of z² with z fixed
    let mut p = ConicProblem::new();
    let [t, z] = ["t", "z"].map(|n| p.add_free_col(n));
    p.set_cost(t, 1.0);
    p.add_eq("z", vec![(z, 1.0)], 3.0);
    p.add_cone(ConeKind::RotatedSoc, "sq", vec![AffineExpr::scaled(t, 0.5), cst(1.0), col(z)]);
    out.push(fixture("rsoc_square_epigraph", p, 9.0, Some(vec![9.0, 3.0])));

    // min (1, 2, 2)·x over the unit ball
    let mut p = ConicProblem::new();
    let xs = ["x", "y", "z"].map(|n| p.add_free_col(n));
    for (j, c) in xs.iter().zip([1.0, 2.0, 2.0]) {
        p.set_cost(*j, c);
    }
    p.add_cone(ConeKind::Soc, "ball", vec![cst(1.0), col(xs[0]), col(xs[1]), col(xs[2])]);
    out.push(fixture("soc_ball_3d", p, -3.0, Some(vec![-1.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0])));

    // min x, ‖(x, 1)‖ <= 2
    let mut p = ConicProblem::new();
    let x = p.add_free_col("x");
    p.set_cost(x, 1.0);
    p.add_cone(ConeKind::Soc, "c", vec![cst(2.0), col(x), cst(1.0)]);
    out.push(fixture("soc_constant_member", p, -3f64.sqrt(), Some(vec![-3f64.sqrt()])));

    // disk of radius 2 cut by x <= 1
    let mut p = ConicProblem::new();
    let [x, y] = ["x", "y"].map(|n| p.add_free_col(n));
    p.set_cost(x, -1.0);
    p.set_cost(y, -1.0);
    p.add_le("cut", vec![(x, 1.0)], 1.0);
    p.add_cone(ConeKind::Soc, "disk", vec![cst(2.0), col(x), col(y)]);
    out.push(fixture("soc_disk_halfplane", p, -1.0 - 3f64.sqrt(), Some(vec![1.0, 3f64.sqrt()])));

    // two symmetric cones, min over x of the sum of distances to (±1, 1)
    let mut p = ConicProblem::new();
    let [x, t1, t2] = ["x", "t1", "t2"].map(|n| p.add_free_col(n));
    p.set_cost(t1, 1.0);
    p.set_cost(t2, 1.0);
    p.add_cone(ConeKind::Soc, "c1", vec![col(t1), AffineExpr::new(vec![(x, 1.0)], -1.0), cst(1.0)]);
    p.add_cone(ConeKind::Soc, "c2", vec![col(t2), AffineExpr::new(vec![(x, 1.0)], 1.0), cst(1.0)]);
    out.push(fixture("soc_two_cones", p, 2.0 * s2, Some(vec![0.0, s2, s2])));

    // unconstrained quadratic x² + y² − 2x − 4y via an epigraph
    let mut p = ConicProblem::new();
    let [x, y, t] = ["x", "y", "t"].map(|n| p.add_free_col(n));
    p.set_cost(t, 1.0);
    p.set_cost(x, -2.0);
    p.set_cost(y, -4.0);
    p.add_cone(ConeKind::RotatedSoc, "epi", vec![AffineExpr::scaled(t, 0.5), cst(1.0), col(x), col(y)]);
    out.push(fixture("rsoc_quadratic", p, -5.0, Some(vec![1.0, 2.0, 5.0])));

    // least squares ‖Ax − b‖ with A = [1 0; 0 1; 1 1], b = (1, 1, 0)
    let mut p = ConicProblem::new();
    let [x1, x2, t] = ["x1", "x2", "t"].map(|n| p.add_free_col(n));
    p.set_cost(t, 1.0);
    p.add_cone(
        ConeKind::Soc,
        "resid",
        vec![
            col(t),
            AffineExpr::new(vec![(x1, 1.0)], -1.0),
            AffineExpr::new(vec![(x2, 1.0)], -1.0),
            AffineExpr::new(vec![(x1, 1.0), (x2, 1.0)], 0.0),
        ],
    );
    let r = 2.0 / 3f64.sqrt();
    out.push(fixture("soc_least_squares", p, r, Some(vec![1.0 / 3.0, 1.0 / 3.0, r])));

    // max w1 on the simplex with ‖w‖ <= 0.8
    let mut p = ConicProblem::new();
    let w1 = p.add_col("w1", 0.0, inf);
    let w2 = p.add_col("w2", 0.0, inf);
    p.set_cost(w1, -1.0);
    p.add_eq("budget", vec![(w1, 1.0), (w2, 1.0)], 1.0);
    p.add_cone(ConeKind::Soc, "risk", vec![cst(0.8), col(w1), col(w2)]);
    let a = (2.0 + 1.12f64.sqrt()) / 4.0;
    out.push(fixture("soc_budget", p, -a, Some(vec![a, 1.0 - a])));

    // geometric mean: max u, u² <= x·y, x + y = 2
    let mut p = ConicProblem::new();
    let x = p.add_col("x", 0.0, inf);
    let y = p.add_col("y", 0.0, inf);
    let u = p.add_free_col("u");
    p.set_cost(u, -1.0);
    p.add_eq("sum", vec![(x, 1.0), (y, 1.0)], 2.0);
    p.add_cone(ConeKind::RotatedSoc, "gm", vec![AffineExpr::scaled(x, 0.5), col(y), col(u)]);
    out.push(fixture("rsoc_geometric_mean", p, -1.0, Some(vec![1.0, 1.0, 1.0])));

    // single-branch DistFlow loss minimisation with a fixed load:
    // v2 = v1 − 2(rP + xQ) + (r² + x²)ℓ, P = p_load + rℓ, ℓ·v1 >= P² + Q²
    let (r, xl, pl, ql) = (0.1, 0.1, 0.5, 0.0);
    let mut p = ConicProblem::new();
    let [pp, qq, l, v1] = ["P", "Q", "l", "v1"].map(|n| p.add_free_col(n));
    p.set_cost(l, r);
    p.add_eq("v1", vec![(v1, 1.0)], 1.0);
    p.add_eq("bal_p", vec![(pp, 1.0), (l, -r)], pl);
    p.add_eq("bal_q", vec![(qq, 1.0), (l, -xl)], ql);
    p.add_cone(
        ConeKind::RotatedSoc,
        "branch",
        vec![AffineExpr::scaled(l, 0.5), col(v1), col(pp), col(qq)],
    );
    // ℓ = (pl + rℓ)² + (xℓ)², smaller root
    let (qa, qb, qc) = (r * r + xl * xl, 2.0 * r * pl - 1.0, pl * pl);
    let lstar = (-qb - (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
    out.push(fixture(
        "rsoc_single_branch",
        p,
        r * lstar,
        Some(vec![pl + r * lstar, xl * lstar, lstar, 1.0]),
    ));

    // mixed bounds and cones: min t − x, ‖x‖ <= t, 1 <= x <= 2, t <= 5
    let mut p = ConicProblem::new();
    let x = p.add_col("x", 1.0, 2.0);
    let t = p.add_col("t", -inf, 5.0);
    p.set_cost(t, 1.0);
    p.set_cost(x, -1.0);
    p.add_cone(ConeKind::Soc, "abs", vec![col(t), col(x)]);
    out.push(fixture("soc_abs_value", p, 0.0, None));

    out
}
