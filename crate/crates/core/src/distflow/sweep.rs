use super::{DistflowError, NetworkState, PeriodState};
use crate::desos::{state_objective, ObjectiveKind};
use crate::feeder::Feeder;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct SweepSettings<T> {
    /// Convergence threshold on the largest change of `v` and `ℓ` between iterations.
    pub tol: T,
    pub max_iter: usize,
    /// Voltage update weight in `(0, 1]`; 1 is the plain fixed point.
    pub damping: T,
}

impl<T: Scalar> Default for SweepSettings<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10).max(T::epsilon() * T::lit(16.0)),
            max_iter: 200,
            damping: T::one(),
        }
    }
}

/// Fixed bus injections for one period (generation positive), grid excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct Injections<T> {
    pub p: Vec<T>,
    pub q: Vec<T>,
}

impl<T: Scalar> Injections<T> {
    pub fn zero(n_buses: usize) -> Self {
        Self {
            p: vec![T::zero(); n_buses],
            q: vec![T::zero(); n_buses],
        }
    }

    /// PV minus load in period `t`, plus the given storage dispatch.
    pub fn from_profiles(feeder: &Feeder<T>, t: usize, p_des: &[T], q_des: &[T]) -> Self {
        let pr = &feeder.profiles;
        let n = feeder.n_buses();
        let mut p: Vec<T> = (0..n).map(|i| pr.pv[i][t] - pr.load_p[i][t]).collect();
        let mut q: Vec<T> = (0..n).map(|i| -pr.load_q[i][t]).collect();
        for d in 0..feeder.des_units.len() {
            let i = feeder.des_bus(d);
            p[i] += p_des[d];
            q[i] += q_des[d];
        }
        Self { p, q }
    }
}

#[derive(Debug, Clone)]
pub struct Sweep<T> {
    /// Solved period; storage fields are zero, the grid covers the balance.
    pub state: PeriodState<T>,
    pub iterations: usize,
}

/// Backward/forward sweep for one period.
///
/// The backward pass accumulates branch flows from the leaves with the
/// current `ℓ`; the forward pass propagates voltages from the root; `ℓ` is
/// then refreshed as `(P² + Q²)/v_sending`. The substation voltage is held
/// at `v_root` and the grid supplies whatever the root balance needs.
pub fn sweep_solve<T: Scalar>(
    feeder: &Feeder<T>,
    inj: &Injections<T>,
    v_root: T,
    settings: &SweepSettings<T>,
) -> Result<Sweep<T>, DistflowError> {
    let n = feeder.n_buses();
    if inj.p.len() != n || inj.q.len() != n {
        return Err(DistflowError::Dimension(format!(
            "injections have {}/{} entries for {n} buses",
            inj.p.len(),
            inj.q.len()
        )));
    }
    let topo = feeder.topology();
    let two = T::lit(2.0);
    let mut s = PeriodState::flat(feeder, v_root);
    let mut last_change = T::infinity();

    for it in 1..=settings.max_iter {
        // backward: leaves first
        for &k in topo.order.iter().rev() {
            let Some(b) = topo.parent_branch[k] else { continue };
            let br = &feeder.branches[b];
            let mut out_p = feeder.buses[k].k_tx * s.v[k] - inj.p[k];
            let mut out_q = -inj.q[k];
            for &c in &topo.children[k] {
                out_p += s.p[c];
                out_q += s.q[c];
            }
            s.p[b] = out_p + br.r * s.l[b];
            s.q[b] = out_q + br.x * s.l[b];
        }
        // forward: root first
        let mut change = T::zero();
        for b in topo.branches_downstream() {
            let br = &feeder.branches[b];
            let (i, k) = (topo.branch_from[b], topo.branch_to[b]);
            let z2 = br.r * br.r + br.x * br.x;
            let target = s.v[i] - two * (br.r * s.p[b] + br.x * s.q[b]) + z2 * s.l[b];
            let v_new = s.v[k] + settings.damping * (target - s.v[k]);
            if !(v_new > T::zero()) {
                return Err(DistflowError::VoltageCollapse {
                    bus: feeder.buses[k].id.clone(),
                    iteration: it,
                });
            }
            change = change.max((v_new - s.v[k]).abs());
            s.v[k] = v_new;
        }
        for b in 0..feeder.n_branches() {
            let v_send = s.v[topo.branch_from[b]];
            let l_new = (s.p[b] * s.p[b] + s.q[b] * s.q[b]) / v_send;
            change = change.max((l_new - s.l[b]).abs());
            s.l[b] = l_new;
        }
        last_change = change;
        if change <= settings.tol {
            finish_balance(feeder, inj, &mut s);
            return Ok(Sweep {
                state: s,
                iterations: it,
            });
        }
    }
    Err(DistflowError::NoConvergence {
        iterations: settings.max_iter,
        residual: last_change.as_f64(),
    })
}

/// Recomputes branch flows with the final `ℓ` and sets the grid injection.
fn finish_balance<T: Scalar>(feeder: &Feeder<T>, inj: &Injections<T>, s: &mut PeriodState<T>) {
    let topo = feeder.topology();
    for &k in topo.order.iter().rev() {
        let mut out_p = feeder.buses[k].k_tx * s.v[k] - inj.p[k];
        let mut out_q = -inj.q[k];
        for &c in &topo.children[k] {
            out_p += s.p[c];
            out_q += s.q[c];
        }
        match topo.parent_branch[k] {
            Some(b) => {
                let br = &feeder.branches[b];
                s.p[b] = out_p + br.r * s.l[b];
                s.q[b] = out_q + br.x * s.l[b];
            }
            None => {
                s.p_grid = out_p;
                s.q_grid = out_q;
            }
        }
    }
    s.p_inj = inj.p.clone();
    s.q_inj = inj.q.clone();
    let root = topo.root;
    s.p_inj[root] += s.p_grid;
    s.q_inj[root] += s.q_grid;
}

/// A bound of the original problem violated by a recovered state.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation<T> {
    pub period: usize,
    pub what: String,
    pub amount: T,
}

#[derive(Debug, Clone)]
pub struct Recovery<T> {
    pub state: NetworkState<T>,
    pub objective: T,
    /// Recovered objective minus the relaxation optimum.
    pub gap: T,
    /// Bounds of the original problem the recovered point breaks; empty when
    /// the point is feasible.
    pub violations: Vec<BoundViolation<T>>,
}

/// Turns a relaxed solution into a point satisfying the DistFlow equations.
///
/// Storage dispatch `(p_des, q_des)` and the substation voltage are taken
/// from `relaxed`; flows, voltages and the grid exchange come from a sweep;
/// `p_loss` is recomputed from the loss equation. The energy window is
/// checked only when the horizon has more than one period.
pub fn recover_feasible<T: Scalar>(
    feeder: &Feeder<T>,
    relaxed: &NetworkState<T>,
    objective: ObjectiveKind,
    relaxed_oov: T,
) -> Result<Recovery<T>, DistflowError> {
    relaxed.check_dims(feeder)?;
    let settings = SweepSettings::default();
    let root = feeder.substation();
    let mut periods = Vec::with_capacity(relaxed.periods.len());
    for (t, r) in relaxed.periods.iter().enumerate() {
        let inj = Injections::from_profiles(feeder, t, &r.p_des, &r.q_des);
        let mut s = sweep_solve(feeder, &inj, r.v[root], &settings)?.state;
        s.p_des = r.p_des.clone();
        s.q_des = r.q_des.clone();
        for (d, unit) in feeder.des_units.iter().enumerate() {
            let v = s.v[feeder.des_bus(d)];
            s.p_loss[d] = (unit.r_eq() * s.p_des[d] * s.p_des[d] + unit.r_cvt * s.q_des[d] * s.q_des[d]) / v;
        }
        periods.push(s);
    }
    let state = NetworkState { periods };
    let value = state_objective(feeder, &state, objective).map_err(|e| DistflowError::Objective(e.to_string()))?;
    let violations = bound_violations(feeder, &state, feeder.horizon() > 1);
    Ok(Recovery {
        objective: value,
        gap: value - relaxed_oov,
        violations,
        state,
    })
}

/// Violations (beyond 1e-9) of the voltage, current, thermal, converter,
/// grid and optionally energy-window bounds.
pub fn bound_violations<T: Scalar>(
    feeder: &Feeder<T>,
    state: &NetworkState<T>,
    energy_window: bool,
) -> Vec<BoundViolation<T>> {
    let tol = T::lit(1e-9);
    let mut out = Vec::new();
    let mut push = |period: usize, what: String, amount: T| {
        if amount > tol {
            out.push(BoundViolation { period, what, amount });
        }
    };
    let r = feeder.sub_rating;
    let export = T::lit(0.6) * r;
    for (t, s) in state.periods.iter().enumerate() {
        for (i, bus) in feeder.buses.iter().enumerate() {
            push(t, format!("v_min at bus {}", bus.id), bus.v_min - s.v[i]);
            push(t, format!("v_max at bus {}", bus.id), s.v[i] - bus.v_max);
        }
        for (b, br) in feeder.branches.iter().enumerate() {
            let name = format!("{}→{}", br.from, br.to);
            push(t, format!("l_max on {name}"), s.l[b] - br.l_max);
            push(
                t,
                format!("s_max on {name}"),
                s.p[b] * s.p[b] + s.q[b] * s.q[b] - br.s_max * br.s_max,
            );
        }
        for (d, unit) in feeder.des_units.iter().enumerate() {
            push(
                t,
                format!("converter rating of storage {d}"),
                s.p_des[d] * s.p_des[d] + s.q_des[d] * s.q_des[d] - unit.s_max * unit.s_max,
            );
        }
        push(t, "grid P upper".into(), s.p_grid - r);
        push(t, "grid P lower".into(), -export - s.p_grid);
        push(t, "grid Q upper".into(), s.q_grid - r);
        push(t, "grid Q lower".into(), -export - s.q_grid);
    }
    if energy_window {
        for (d, unit) in feeder.des_units.iter().enumerate() {
            for (t, e) in state.energy_trajectory(feeder, d).into_iter().enumerate() {
                push(t, format!("e_min of storage {d}"), unit.e_min - e);
                push(t, format!("e_max of storage {d}"), e - unit.e_max);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{eval_period, me_branch};
    use super::*;
    use crate::feeder::FeederData;

    fn two_bus(r: f64, x: f64, p: f64) -> (Feeder<f64>, Injections<f64>) {
        let f = Feeder::new(FeederData::path(2, r, x, 10.0)).unwrap();
        let mut inj = Injections::zero(2);
        inj.p[1] = -p;
        (f, inj)
    }

    #[test]
    fn two_bus_worked_example() {
        let (f, inj) = two_bus(0.01, 0.01, 0.1);
        let s = sweep_solve(&f, &inj, 1.0, &SweepSettings::default()).unwrap().state;
        assert!((s.p[0] - 0.1001).abs() < 1e-5, "{}", s.p[0]);
        assert!((s.v[1] - 0.997998).abs() < 1e-6, "{}", s.v[1]);
        let r = eval_period(&f, &s);
        for fam in [&r.active, &r.reactive, &r.drop, &r.branch] {
            assert!(fam.iter().all(|e| e.abs() <= 1e-8), "{r:?}");
        }
    }

    #[test]
    fn zero_load_gives_flat_voltage() {
        let f = Feeder::new(FeederData::path(5, 0.01, 0.02, 1.0)).unwrap();
        let s = sweep_solve(&f, &Injections::zero(5), 1.05, &SweepSettings::default())
            .unwrap()
            .state;
        assert!(s.v.iter().all(|&v| v == 1.05));
        assert!(s.p.iter().chain(&s.q).chain(&s.l).all(|&x| x == 0.0));
        assert_eq!(s.p_grid, 0.0);
    }

    #[test]
    fn overload_collapses() {
        // largest deliverable active power at unity power factor
        let (r, x) = (0.1_f64, 0.1_f64);
        let p_max = 1.0 / (2.0 * (r + (r * r + x * x).sqrt()));
        let (f, inj) = two_bus(r, x, 1.02 * p_max);
        let err = sweep_solve(&f, &inj, 1.0, &SweepSettings::default()).unwrap_err();
        assert!(matches!(err, DistflowError::VoltageCollapse { .. }), "{err}");
        let (f, inj) = two_bus(r, x, 0.9 * p_max);
        assert!(sweep_solve(&f, &inj, 1.0, &SweepSettings::default()).is_ok());
    }

    #[test]
    fn iteration_cap_reported() {
        let (f, inj) = two_bus(0.01, 0.01, 0.1);
        let settings = SweepSettings {
            max_iter: 1,
            ..SweepSettings::default()
        };
        assert!(matches!(
            sweep_solve(&f, &inj, 1.0, &settings),
            Err(DistflowError::NoConvergence { iterations: 1, .. })
        ));
    }

    #[test]
    fn recovery_of_exact_state_is_identity() {
        let (f, inj) = two_bus(0.01, 0.01, 0.1);
        let s = sweep_solve(&f, &inj, 1.0, &SweepSettings::default()).unwrap().state;
        let mut data = f.data().clone();
        data.profiles.load_p[1][0] = 0.1;
        let f = Feeder::new(data).unwrap();
        let relaxed = NetworkState { periods: vec![s.clone()] };
        assert!(me_branch(&f, &relaxed).abs() < 1e-12);
        let oov = state_objective(&f, &relaxed, ObjectiveKind::F2).unwrap();
        let rec = recover_feasible(&f, &relaxed, ObjectiveKind::F2, oov).unwrap();
        let got = &rec.state.periods[0];
        for (a, b) in got.v.iter().zip(&s.v).chain(got.p.iter().zip(&s.p)) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(rec.gap.abs() < 1e-9);
        assert!(rec.violations.is_empty());
    }

    #[test]
    fn recovery_of_zero_state() {
        let f = Feeder::new(FeederData::path(3, 0.01, 0.01, 1.0)).unwrap();
        let relaxed = NetworkState {
            periods: vec![PeriodState::flat(&f, 1.0)],
        };
        let rec = recover_feasible(&f, &relaxed, ObjectiveKind::F2, 0.0).unwrap();
        assert_eq!(rec.state.periods[0], relaxed.periods[0]);
        assert_eq!(rec.gap, 0.0);
    }
}
