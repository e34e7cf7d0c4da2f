//! DistFlow equations on radial feeders: residuals, a backward/forward sweep
//! solver, and the maximum-error metrics used to judge relaxation exactness.
//!
//! For branch `i → k` with flow `(P, Q)`, squared current `ℓ` and squared
//! sending voltage `v_i`:
//!
//! ```text
//! p_k − k_k·v_k = Σ_{k→j} P_kj − (P_ik − r·ℓ)
//! q_k           = Σ_{k→j} Q_kj − (Q_ik − x·ℓ)
//! v_k           = v_i − 2(r·P + x·Q) + (r² + x²)·ℓ
//! v_i·ℓ         = P² + Q²
//! ```

mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feeder::Feeder;
use crate::hull::Point;
use crate::scalar::Scalar;

pub use sweep::{bound_violations, recover_feasible, sweep_solve, BoundViolation, Injections, Recovery, Sweep, SweepSettings};

/// Threshold below which a maximum error counts as exact (pu).
pub const EXACTNESS_THRESHOLD: f64 = 1e-3;

pub fn is_exact<T: Scalar>(me: T) -> bool {
    me < T::lit(EXACTNESS_THRESHOLD)
}

#[derive(Debug, Error, PartialEq)]
pub enum DistflowError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("sweep did not converge after {iterations} iterations (last update {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("voltage collapse at bus {bus} (iteration {iteration})")]
    VoltageCollapse { bus: String, iteration: usize },
    #[error("objective: {0}")]
    Objective(String),
}

/// `(P, Q, ℓ, v_sending)` of one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchFlowPoint<T> {
    pub p: T,
    pub q: T,
    pub l: T,
    pub v: T,
}

impl<T: Scalar> BranchFlowPoint<T> {
    pub fn as_point(&self) -> Point<T> {
        [self.p, self.q, self.l, self.v]
    }

    pub fn from_point(x: Point<T>) -> Self {
        Self {
            p: x[0],
            q: x[1],
            l: x[2],
            v: x[3],
        }
    }

    /// `v·ℓ − P² − Q²`
    pub fn branch_residual(&self) -> T {
        self.v * self.l - self.p * self.p - self.q * self.q
    }
}

/// Network quantities of one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PeriodState<T> {
    /// Net bus injections (generation positive) incl. PV, load, storage and
    /// the grid at the substation; the transformer term `k·v` is not included.
    pub p_inj: Vec<T>,
    pub q_inj: Vec<T>,
    /// Per-branch flows and squared currents.
    pub p: Vec<T>,
    pub q: Vec<T>,
    pub l: Vec<T>,
    /// Per-bus squared voltage.
    pub v: Vec<T>,
    pub p_grid: T,
    pub q_grid: T,
    /// Per storage unit; `p_des > 0` is discharge.
    pub p_des: Vec<T>,
    pub q_des: Vec<T>,
    pub p_loss: Vec<T>,
}

impl<T: Scalar> PeriodState<T> {
    /// Zero flows and injections at squared voltage `v` everywhere.
    pub fn flat(feeder: &Feeder<T>, v: T) -> Self {
        let (nb, nl, nd) = (feeder.n_buses(), feeder.n_branches(), feeder.des_units.len());
        Self {
            p_inj: vec![T::zero(); nb],
            q_inj: vec![T::zero(); nb],
            p: vec![T::zero(); nl],
            q: vec![T::zero(); nl],
            l: vec![T::zero(); nl],
            v: vec![v; nb],
            p_grid: T::zero(),
            q_grid: T::zero(),
            p_des: vec![T::zero(); nd],
            q_des: vec![T::zero(); nd],
            p_loss: vec![T::zero(); nd],
        }
    }

    pub fn branch_point(&self, feeder: &Feeder<T>, b: usize) -> BranchFlowPoint<T> {
        BranchFlowPoint {
            p: self.p[b],
            q: self.q[b],
            l: self.l[b],
            v: self.v[feeder.topology().branch_from[b]],
        }
    }

    /// `(p_des, q_des, p_loss, v_bus)` of storage unit `d`.
    pub fn des_point(&self, feeder: &Feeder<T>, d: usize) -> Point<T> {
        [self.p_des[d], self.q_des[d], self.p_loss[d], self.v[feeder.des_bus(d)]]
    }

    fn check_dims(&self, feeder: &Feeder<T>, t: usize) -> Result<(), DistflowError> {
        let (nb, nl, nd) = (feeder.n_buses(), feeder.n_branches(), feeder.des_units.len());
        let checks = [
            ("p_inj", self.p_inj.len(), nb),
            ("q_inj", self.q_inj.len(), nb),
            ("v", self.v.len(), nb),
            ("p", self.p.len(), nl),
            ("q", self.q.len(), nl),
            ("l", self.l.len(), nl),
            ("p_des", self.p_des.len(), nd),
            ("q_des", self.q_des.len(), nd),
            ("p_loss", self.p_loss.len(), nd),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(DistflowError::Dimension(format!(
                    "period {t}: {name} has {got} entries, feeder needs {want}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-period states over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NetworkState<T> {
    pub periods: Vec<PeriodState<T>>,
}

impl<T: Scalar> NetworkState<T> {
    pub fn check_dims(&self, feeder: &Feeder<T>) -> Result<(), DistflowError> {
        if self.periods.len() != feeder.horizon() {
            return Err(DistflowError::Dimension(format!(
                "{} periods for horizon {}",
                self.periods.len(),
                feeder.horizon()
            )));
        }
        for (t, s) in self.periods.iter().enumerate() {
            s.check_dims(feeder, t)?;
        }
        Ok(())
    }

    /// Stored energy of unit `d` after each period.
    pub fn energy_trajectory(&self, feeder: &Feeder<T>, d: usize) -> Vec<T> {
        let unit = &feeder.des_units[d];
        let dt = feeder.profiles.dt;
        let mut e = unit.e_surplus;
        self.periods
            .iter()
            .map(|s| {
                e -= (s.p_des[d] + s.p_loss[d]) * dt;
                e
            })
            .collect()
    }
}

/// Residuals of the four equation families for one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodResiduals<T> {
    /// Active balance, per bus.
    pub active: Vec<T>,
    /// Reactive balance, per bus.
    pub reactive: Vec<T>,
    /// Voltage drop, per branch.
    pub drop: Vec<T>,
    /// `v_i·ℓ − P² − Q²`, per branch.
    pub branch: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals<T> {
    pub periods: Vec<PeriodResiduals<T>>,
}

fn max_abs<T: Scalar>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

impl<T: Scalar> Residuals<T> {
    /// Largest absolute residual per family: (active, reactive, drop, branch).
    pub fn family_max(&self) -> [T; 4] {
        let mut out = [T::zero(); 4];
        for r in &self.periods {
            out[0] = out[0].max(max_abs(&r.active));
            out[1] = out[1].max(max_abs(&r.reactive));
            out[2] = out[2].max(max_abs(&r.drop));
            out[3] = out[3].max(max_abs(&r.branch));
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.family_max().into_iter().fold(T::zero(), T::max)
    }
}

pub fn eval_period<T: Scalar>(feeder: &Feeder<T>, s: &PeriodState<T>) -> PeriodResiduals<T> {
    let topo = feeder.topology();
    let two = T::lit(2.0);
    let mut active = Vec::with_capacity(feeder.n_buses());
    let mut reactive = Vec::with_capacity(feeder.n_buses());
    for k in 0..feeder.n_buses() {
        let mut out_p = T::zero();
        let mut out_q = T::zero();
        for &c in &topo.children[k] {
            out_p += s.p[c];
            out_q += s.q[c];
        }
        if let Some(b) = topo.parent_branch[k] {
            let br = &feeder.branches[b];
            out_p -= s.p[b] - br.r * s.l[b];
            out_q -= s.q[b] - br.x * s.l[b];
        }
        active.push(s.p_inj[k] - feeder.buses[k].k_tx * s.v[k] - out_p);
        reactive.push(s.q_inj[k] - out_q);
    }
    let mut drop = Vec::with_capacity(feeder.n_branches());
    let mut branch = Vec::with_capacity(feeder.n_branches());
    for (b, br) in feeder.branches.iter().enumerate() {
        let (i, k) = (topo.branch_from[b], topo.branch_to[b]);
        let z2 = br.r * br.r + br.x * br.x;
        let predicted = s.v[i] - two * (br.r * s.p[b] + br.x * s.q[b]) + z2 * s.l[b];
        drop.push(s.v[k] - predicted);
        branch.push(s.v[i] * s.l[b] - s.p[b] * s.p[b] - s.q[b] * s.q[b]);
    }
    PeriodResiduals {
        active,
        reactive,
        drop,
        branch,
    }
}

pub fn eval_residuals<T: Scalar>(feeder: &Feeder<T>, state: &NetworkState<T>) -> Result<Residuals<T>, DistflowError> {
    state.check_dims(feeder)?;
    Ok(Residuals {
        periods: state.periods.iter().map(|s| eval_period(feeder, s)).collect(),
    })
}

/// Largest `v·ℓ − P² − Q²` over branches and periods (signed; zero without branches).
pub fn me_branch<T: Scalar>(feeder: &Feeder<T>, state: &NetworkState<T>) -> T {
    let mut worst: Option<T> = None;
    for s in &state.periods {
        for b in 0..feeder.n_branches() {
            let r = s.branch_point(feeder, b).branch_residual();
            worst = Some(worst.map_or(r, |w| w.max(r)));
        }
    }
    worst.unwrap_or_else(T::zero)
}

/// Largest `p_loss·v − r_eq·p² − r_cvt·q²` over storage units and periods;
/// `None` when the feeder has no storage.
pub fn me_des<T: Scalar>(feeder: &Feeder<T>, state: &NetworkState<T>) -> Option<T> {
    let mut worst: Option<T> = None;
    for s in &state.periods {
        for (d, unit) in feeder.des_units.iter().enumerate() {
            let [p, q, loss, v] = s.des_point(feeder, d);
            let r = loss * v - unit.r_eq() * p * p - unit.r_cvt * q * q;
            worst = Some(worst.map_or(r, |w| w.max(r)));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feeder::FeederData;

    fn two_bus() -> Feeder<f64> {
        Feeder::new(FeederData::path(2, 0.01, 0.01, 1.0)).unwrap()
    }

    #[test]
    fn zero_state_has_zero_residuals() {
        let f = two_bus();
        let s = NetworkState {
            periods: vec![PeriodState::flat(&f, 1.0)],
        };
        assert_eq!(eval_residuals(&f, &s).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn branch_residual_examples() {
        let x = BranchFlowPoint::from_point([1.0, 0.0, 1.0, 1.0]);
        assert_eq!(x.branch_residual(), 0.0);
        let x = BranchFlowPoint::from_point([1.0, 0.0, 0.5, 1.0]);
        assert_eq!(x.branch_residual(), -0.5);
    }

    #[test]
    fn me_branch_reports_slack() {
        let f = two_bus();
        let mut s = PeriodState::flat(&f, 1.0);
        s.l[0] = 1.0;
        let st = NetworkState { periods: vec![s] };
        assert_eq!(me_branch(&f, &st), 1.0);
        assert_eq!(me_des(&f, &st), None);
    }

    #[test]
    fn me_des_on_loss_equation() {
        let mut data = FeederData::<f64>::path(2, 0.01, 0.01, 1.0);
        data.des_units.push(crate::feeder::DesUnit {
            bus: "2".into(),
            s_max: 1.0,
            r_batt: 0.01,
            r_cvt: 0.01,
            e_min: 0.0,
            e_max: 1.0,
            e_surplus: 0.5,
        });
        let f = Feeder::new(data).unwrap();
        let mut s = PeriodState::flat(&f, 1.0);
        let st = NetworkState { periods: vec![s.clone()] };
        assert_eq!(me_des(&f, &st), Some(0.0));
        s.p_des[0] = 1.0;
        s.p_loss[0] = 0.02;
        let st = NetworkState { periods: vec![s] };
        assert!(me_des(&f, &st).unwrap().abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let f = two_bus();
        let mut s = PeriodState::flat(&f, 1.0);
        s.v.pop();
        let st = NetworkState { periods: vec![s] };
        assert!(matches!(eval_residuals(&f, &st), Err(DistflowError::Dimension(_))));
    }
}
