use crate::conic::{solve, AffineExpr, ConeKind, ConicProblem, ConicSolution, SolverSettings};
use crate::distflow::NetworkState;
use crate::feeder::Feeder;
use crate::hull::{BranchBounds, BranchHull, DesBounds, DesHull};
use crate::scalar::Scalar;

use super::varmap::{Column, VariableMap};
use super::{DesosError, ObjectiveKind, RelaxKind, EXPORT_SHARE};

/// A built scheduling problem together with the feeder it was built from.
#[derive(Debug, Clone)]
pub struct DesosProblem<T> {
    /// The feeder as modeled; a snapshot build keeps only period 0.
    pub feeder: Feeder<T>,
    pub problem: ConicProblem<T>,
    pub map: VariableMap,
    pub objective: ObjectiveKind,
    pub relax: RelaxKind,
    pub snapshot: bool,
}

/// Builds the relaxed scheduling problem.
///
/// With `snapshot` the horizon collapses to period 0 and the energy window
/// is dropped.
pub fn build_problem<T: Scalar>(
    feeder: &Feeder<T>,
    objective: ObjectiveKind,
    relax: RelaxKind,
    snapshot: bool,
) -> Result<DesosProblem<T>, DesosError> {
    let feeder = if snapshot { feeder.snapshot(0) } else { feeder.clone() };
    let map = VariableMap::new(&feeder, objective == ObjectiveKind::F3);
    let mut p = ConicProblem::new();
    add_columns(&feeder, &map, &mut p);
    p.objective = objective_vector(&feeder, objective, &map)?;

    let topo = feeder.topology();
    let pr = &feeder.profiles;
    let two = T::lit(2.0);
    let root = feeder.substation();
    let hulls: Vec<BranchHull<T>> = (0..feeder.n_branches())
        .map(|b| BranchHull::new(BranchBounds::from_branch(&feeder.branches[b], feeder.sending_bus(b))))
        .collect::<Result<_, _>>()?;
    let des_hulls: Vec<DesHull<T>> = (0..feeder.des_units.len())
        .map(|d| DesHull::new(DesBounds::from_unit(&feeder.des_units[d], &feeder.buses[feeder.des_bus(d)])))
        .collect::<Result<_, _>>()?;

    for t in 0..map.horizon {
        let col = |c: Column| map.index(c);
        for (k, bus) in feeder.buses.iter().enumerate() {
            let v = col(Column::V { bus: k, t });
            let mut ap = vec![(v, -bus.k_tx)];
            let mut aq = Vec::new();
            for &d in feeder.des_at(k) {
                ap.push((col(Column::PDes { des: d, t }), T::one()));
                aq.push((col(Column::QDes { des: d, t }), T::one()));
            }
            if k == root {
                ap.push((col(Column::PGrid { t }), T::one()));
                aq.push((col(Column::QGrid { t }), T::one()));
            }
            for &c in &topo.children[k] {
                ap.push((col(Column::P { branch: c, t }), -T::one()));
                aq.push((col(Column::Q { branch: c, t }), -T::one()));
            }
            if let Some(b) = topo.parent_branch[k] {
                let br = &feeder.branches[b];
                let l = col(Column::L { branch: b, t });
                ap.push((col(Column::P { branch: b, t }), T::one()));
                ap.push((l, -br.r));
                aq.push((col(Column::Q { branch: b, t }), T::one()));
                aq.push((l, -br.x));
            }
            p.add_eq(format!("bal_p[{},{t}]", bus.id), ap, pr.load_p[k][t] - pr.pv[k][t]);
            p.add_eq(format!("bal_q[{},{t}]", bus.id), aq, pr.load_q[k][t]);
        }
        for (b, br) in feeder.branches.iter().enumerate() {
            let (i, k) = (topo.branch_from[b], topo.branch_to[b]);
            let name = format!("{}-{},{t}", br.from, br.to);
            let cols = [
                col(Column::P { branch: b, t }),
                col(Column::Q { branch: b, t }),
                col(Column::L { branch: b, t }),
                col(Column::V { bus: i, t }),
            ];
            let z2 = br.r * br.r + br.x * br.x;
            p.add_eq(
                format!("drop[{name}]"),
                vec![
                    (col(Column::V { bus: k, t }), T::one()),
                    (cols[3], -T::one()),
                    (cols[0], two * br.r),
                    (cols[1], two * br.x),
                    (cols[2], -z2),
                ],
                T::zero(),
            );
            p.add_cone(ConeKind::RotatedSoc, format!("cone[{name}]"), BranchHull::cone_members(cols));
            p.add_cone(
                ConeKind::Soc,
                format!("thermal[{name}]"),
                vec![
                    AffineExpr::constant(br.s_max),
                    AffineExpr::col(cols[0]),
                    AffineExpr::col(cols[1]),
                ],
            );
            if relax == RelaxKind::Ch {
                let (coeffs, rhs) = hulls[b].cut_row(cols);
                p.add_le(format!("cut[{name}]"), coeffs, rhs);
            }
        }
        for (d, unit) in feeder.des_units.iter().enumerate() {
            let cols = [
                col(Column::PDes { des: d, t }),
                col(Column::QDes { des: d, t }),
                col(Column::PLoss { des: d, t }),
                col(Column::V { bus: feeder.des_bus(d), t }),
            ];
            let h = &des_hulls[d];
            p.add_cone(
                ConeKind::Soc,
                format!("rating[{d},{t}]"),
                vec![
                    AffineExpr::constant(unit.s_max),
                    AffineExpr::col(cols[0]),
                    AffineExpr::col(cols[1]),
                ],
            );
            p.add_cone(ConeKind::RotatedSoc, format!("loss[{d},{t}]"), h.loss_cone_members(cols));
            if relax == RelaxKind::Ch {
                p.add_cone(ConeKind::RotatedSoc, format!("asym[{d},{t}]"), h.asymmetry_members(cols));
                let (coeffs, rhs) = h.chord_row(cols);
                p.add_le(format!("chord[{d},{t}]"), coeffs, rhs);
            }
        }
        if map.with_u {
            for (i, bus) in feeder.buses.iter().enumerate() {
                let v = col(Column::V { bus: i, t });
                let u = col(Column::U { bus: i, t });
                let set = bus.v_set.at(t);
                p.add_le(format!("dev_hi[{},{t}]", bus.id), vec![(v, T::one()), (u, -T::one())], set);
                p.add_le(format!("dev_lo[{},{t}]", bus.id), vec![(v, -T::one()), (u, -T::one())], -set);
            }
        }
    }

    if !snapshot {
        let dt = pr.dt;
        for (d, unit) in feeder.des_units.iter().enumerate() {
            let mut drawn: Vec<(usize, T)> = Vec::new();
            for t in 0..map.horizon {
                drawn.push((map.index(Column::PDes { des: d, t }), dt));
                drawn.push((map.index(Column::PLoss { des: d, t }), dt));
                p.add_le(format!("energy_lo[{d},{t}]"), drawn.clone(), unit.e_surplus - unit.e_min);
                let neg = drawn.iter().map(|&(j, a)| (j, -a)).collect();
                p.add_le(format!("energy_hi[{d},{t}]"), neg, unit.e_max - unit.e_surplus);
            }
        }
    }

    p.validate()?;
    Ok(DesosProblem {
        feeder,
        problem: p,
        map,
        objective,
        relax,
        snapshot,
    })
}

fn add_columns<T: Scalar>(feeder: &Feeder<T>, map: &VariableMap, p: &mut ConicProblem<T>) {
    let r = feeder.sub_rating;
    let export = -T::lit(EXPORT_SHARE) * r;
    for j in 0..map.n_cols() {
        let c = map.column(j);
        let (lo, hi) = match c {
            Column::P { .. } | Column::Q { .. } | Column::PDes { .. } | Column::QDes { .. } => {
                (T::neg_infinity(), T::infinity())
            }
            Column::L { branch, .. } => (T::zero(), feeder.branches[branch].l_max),
            Column::V { bus, .. } => (feeder.buses[bus].v_min, feeder.buses[bus].v_max),
            Column::PLoss { des, .. } => {
                let unit = &feeder.des_units[des];
                let v_min = feeder.buses[feeder.des_bus(des)].v_min;
                (T::zero(), unit.r_eq() * unit.s_max * unit.s_max / v_min)
            }
            Column::PGrid { .. } | Column::QGrid { .. } => (export, r),
            Column::U { .. } => (T::zero(), T::infinity()),
        };
        p.add_col(c.to_string(), lo, hi);
    }
}

/// Linear objective over the columns of `map`.
pub fn objective_vector<T: Scalar>(
    feeder: &Feeder<T>,
    objective: ObjectiveKind,
    map: &VariableMap,
) -> Result<Vec<T>, DesosError> {
    let mut c = vec![T::zero(); map.n_cols()];
    for t in 0..map.horizon {
        match objective {
            ObjectiveKind::F1 => {
                let price = feeder.profiles.price.as_ref().ok_or(DesosError::MissingPrice)?;
                c[map.index(Column::PGrid { t })] = price[t] * feeder.profiles.dt * feeder.base.mva;
            }
            ObjectiveKind::F2 => {
                for (b, br) in feeder.branches.iter().enumerate() {
                    c[map.index(Column::L { branch: b, t })] = br.r;
                }
                for (i, bus) in feeder.buses.iter().enumerate() {
                    c[map.index(Column::V { bus: i, t })] = bus.k_tx;
                }
                for d in 0..map.n_des {
                    c[map.index(Column::PLoss { des: d, t })] = T::one();
                }
            }
            ObjectiveKind::F3 => {
                for i in 0..map.n_buses {
                    c[map.index(Column::U { bus: i, t })] = T::one();
                }
            }
        }
    }
    Ok(c)
}

/// Named state of a solved problem; fails unless the status is (near) optimal.
pub fn extract_state<T: Scalar>(
    solution: &ConicSolution<T>,
    problem: &DesosProblem<T>,
) -> Result<NetworkState<T>, DesosError> {
    if !solution.status.is_solved() {
        return Err(DesosError::Solve(solution.status));
    }
    problem.map.decode(&problem.feeder, &solution.x)
}

#[derive(Debug, Clone)]
pub struct DesosSolution<T> {
    pub problem: DesosProblem<T>,
    pub solution: ConicSolution<T>,
    /// Present when the solve reached a (near) optimal status.
    pub state: Option<NetworkState<T>>,
}

/// Builds and solves in one go. Non-optimal statuses are returned, not raised.
pub fn solve_desos<T: Scalar>(
    feeder: &Feeder<T>,
    objective: ObjectiveKind,
    relax: RelaxKind,
    snapshot: bool,
    settings: &SolverSettings<T>,
) -> Result<DesosSolution<T>, DesosError> {
    let problem = build_problem(feeder, objective, relax, snapshot)?;
    let solution = solve(&problem.problem, settings)?;
    let state = extract_state(&solution, &problem).ok();
    Ok(DesosSolution {
        problem,
        solution,
        state,
    })
}
