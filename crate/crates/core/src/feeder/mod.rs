//! Radial feeder data model: buses, branches, storage units and time profiles.
//!
//! All electrical quantities are per-unit on a single system base. Voltages
//! and currents are carried as squared magnitudes (`v = |V|²`, `l = |I|²`).

mod generate;
mod io;
mod topology;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use generate::{gen_instance, InstanceSpec, PriceShape};
pub use io::{load_feeder, parse_feeder, save_feeder, to_json};
pub use topology::{validate_radial, RadialViolation, Topology};

/// Default squared-voltage bounds (0.9 / 1.1 pu magnitude) and nominal value.
pub const DEFAULT_V_MIN: f64 = 0.81;
pub const DEFAULT_V_MAX: f64 = 1.21;
pub const DEFAULT_V_NOM: f64 = 1.0;

#[derive(Debug, Error)]
pub enum FeederError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid {entity}: {message}")]
    Invalid { entity: String, message: String },
    #[error("not radial: {}", join_violations(.0))]
    NotRadial(Vec<RadialViolation>),
    #[error("infeasible instance spec: {0}")]
    InfeasibleSpec(String),
}

fn join_violations(v: &[RadialViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

fn invalid(entity: impl Into<String>, message: impl Into<String>) -> FeederError {
    FeederError::Invalid {
        entity: entity.into(),
        message: message.into(),
    }
}

/// Squared-voltage set point, either fixed or one value per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetPoint<T> {
    Constant(T),
    Series(Vec<T>),
}

impl<T: Scalar> SetPoint<T> {
    pub fn at(&self, t: usize) -> T {
        match self {
            SetPoint::Constant(v) => *v,
            SetPoint::Series(s) => s[t],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus<T> {
    pub id: String,
    pub v_min: T,
    pub v_max: T,
    pub v_nom: T,
    pub v_set: SetPoint<T>,
    /// Transformer loss coefficient; zero for buses without a transformer.
    pub k_tx: T,
    pub is_substation: bool,
}

impl<T: Scalar> Bus<T> {
    /// A bus with the default bounds and set point at nominal voltage.
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            v_min: T::lit(DEFAULT_V_MIN),
            v_max: T::lit(DEFAULT_V_MAX),
            v_nom: T::lit(DEFAULT_V_NOM),
            v_set: SetPoint::Constant(T::lit(DEFAULT_V_NOM)),
            k_tx: T::zero(),
            is_substation: false,
        }
    }

    pub fn substation(id: impl Into<String>) -> Self {
        Self {
            is_substation: true,
            ..Self::new(id)
        }
    }
}

/// Line segment oriented from the upstream bus `from` to the downstream bus `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch<T> {
    pub from: String,
    pub to: String,
    pub r: T,
    pub x: T,
    /// Thermal (apparent power) limit.
    pub s_max: T,
    /// Squared-current limit, tied to the thermal limit by `s_max² = l_max · v_nom(from)`.
    pub l_max: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesUnit<T> {
    pub bus: String,
    /// Converter apparent power limit.
    pub s_max: T,
    pub r_batt: T,
    pub r_cvt: T,
    pub e_min: T,
    pub e_max: T,
    /// Stored energy at the start of the horizon.
    pub e_surplus: T,
}

impl<T: Scalar> DesUnit<T> {
    /// Equivalent series resistance of battery and converter.
    #[inline]
    pub fn r_eq(&self) -> T {
        self.r_batt + self.r_cvt
    }
}

/// Per-bus, per-period demand and PV output plus the energy price series.
///
/// `load_p[bus][t]`, indexed by the position of the bus in [`FeederData::buses`].
#[derive(Debug, Clone, PartialEq)]
pub struct Profiles<T> {
    pub horizon: usize,
    /// Period length in hours.
    pub dt: T,
    pub load_p: Vec<Vec<T>>,
    pub load_q: Vec<Vec<T>>,
    pub pv: Vec<Vec<T>>,
    /// Energy price in $/MWh; may be negative. `None` when the feeder carries no prices.
    pub price: Option<Vec<T>>,
}

impl<T: Scalar> Profiles<T> {
    /// Zero demand and PV with a flat price.
    pub fn flat(n_buses: usize, horizon: usize, price: T) -> Self {
        Self {
            horizon,
            dt: T::one(),
            load_p: vec![vec![T::zero(); horizon]; n_buses],
            load_q: vec![vec![T::zero(); horizon]; n_buses],
            pv: vec![vec![T::zero(); horizon]; n_buses],
            price: Some(vec![price; horizon]),
        }
    }

    /// Total active demand in period `t`.
    pub fn total_load(&self, t: usize) -> T {
        self.load_p.iter().map(|s| s[t]).sum()
    }

    /// Largest total active demand over the horizon.
    pub fn peak_load(&self) -> T {
        (0..self.horizon)
            .map(|t| self.total_load(t))
            .fold(T::zero(), T::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Base<T> {
    pub mva: T,
    pub kv: T,
}

/// Unvalidated feeder contents, as read from a file or assembled by hand.
#[derive(Debug, Clone, PartialEq)]
pub struct FeederData<T> {
    pub buses: Vec<Bus<T>>,
    pub branches: Vec<Branch<T>>,
    pub des_units: Vec<DesUnit<T>>,
    pub profiles: Profiles<T>,
    /// Substation MVA rating in pu.
    pub sub_rating: T,
    pub base: Base<T>,
}

/// A validated radial feeder. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Feeder<T> {
    data: FeederData<T>,
    topology: Topology,
    des_at_bus: Vec<Vec<usize>>,
}

impl<T> PartialEq for Feeder<T>
where
    T: PartialEq,
{
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

impl<T: Scalar> std::ops::Deref for Feeder<T> {
    type Target = FeederData<T>;
    fn deref(&self) -> &FeederData<T> {
        &self.data
    }
}

impl<T: Scalar> TryFrom<FeederData<T>> for Feeder<T> {
    type Error = FeederError;
    fn try_from(data: FeederData<T>) -> Result<Self, FeederError> {
        Feeder::new(data)
    }
}

/// Tolerance for the thermal/current limit coupling.
fn coupling_tol<T: Scalar>(s_sq: T) -> T {
    let floor = T::lit(1e-9);
    let rel = T::epsilon() * T::lit(64.0) * T::max(T::one(), s_sq);
    T::max(floor, rel)
}

impl<T: Scalar> Feeder<T> {
    /// Validates every invariant and derives the topology.
    pub fn new(data: FeederData<T>) -> Result<Self, FeederError> {
        check_buses(&data)?;
        let violations = validate_radial(&data);
        if !violations.is_empty() {
            return Err(FeederError::NotRadial(violations));
        }
        let topology = Topology::build(&data).map_err(FeederError::NotRadial)?;
        check_branches(&data, &topology)?;
        let des_at_bus = check_des(&data, &topology)?;
        check_profiles(&data)?;
        if !(data.sub_rating > T::zero()) {
            return Err(invalid("substation", "rating must be positive"));
        }
        if !(data.base.mva > T::zero()) || !(data.base.kv > T::zero()) {
            return Err(invalid("base", "MVA and kV bases must be positive"));
        }
        Ok(Self {
            data,
            topology,
            des_at_bus,
        })
    }

    pub fn data(&self) -> &FeederData<T> {
        &self.data
    }

    pub fn into_data(self) -> FeederData<T> {
        self.data
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn n_buses(&self) -> usize {
        self.data.buses.len()
    }

    pub fn n_branches(&self) -> usize {
        self.data.branches.len()
    }

    pub fn horizon(&self) -> usize {
        self.data.profiles.horizon
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.topology.bus_index(id)
    }

    pub fn substation(&self) -> usize {
        self.topology.root
    }

    /// Indices of the storage units connected at bus `bus`.
    pub fn des_at(&self, bus: usize) -> &[usize] {
        &self.des_at_bus[bus]
    }

    /// Bus index of storage unit `d`.
    pub fn des_bus(&self, d: usize) -> usize {
        self.topology
            .bus_index(&self.data.des_units[d].bus)
            .expect("validated")
    }

    /// Sending (upstream) bus of branch `b`.
    pub fn sending_bus(&self, b: usize) -> &Bus<T> {
        &self.data.buses[self.topology.branch_from[b]]
    }

    /// Copy of this feeder restricted to a single period, for snapshot studies.
    pub fn snapshot(&self, t: usize) -> Feeder<T> {
        let mut data = self.data.clone();
        let p = &mut data.profiles;
        let pick = |s: &Vec<T>| vec![s[t]];
        p.load_p = p.load_p.iter().map(pick).collect();
        p.load_q = p.load_q.iter().map(pick).collect();
        p.pv = p.pv.iter().map(pick).collect();
        p.price = p.price.as_ref().map(|s| vec![s[t]]);
        p.horizon = 1;
        for bus in &mut data.buses {
            if let SetPoint::Series(s) = &bus.v_set {
                bus.v_set = SetPoint::Constant(s[t]);
            }
        }
        Feeder {
            data,
            topology: self.topology.clone(),
            des_at_bus: self.des_at_bus.clone(),
        }
    }

    /// Smallest lower and largest upper squared-voltage bound over all buses.
    pub fn voltage_envelope(&self) -> (T, T) {
        let lo = self
            .data
            .buses
            .iter()
            .map(|b| b.v_min)
            .fold(T::infinity(), T::min);
        let hi = self
            .data
            .buses
            .iter()
            .map(|b| b.v_max)
            .fold(T::neg_infinity(), T::max);
        (lo, hi)
    }
}

fn finite<T: Scalar>(x: T) -> bool {
    x.is_finite()
}

fn check_buses<T: Scalar>(data: &FeederData<T>) -> Result<(), FeederError> {
    let mut seen = HashMap::new();
    for bus in &data.buses {
        let e = || format!("bus {}", bus.id);
        if seen.insert(bus.id.as_str(), ()).is_some() {
            return Err(invalid(e(), "duplicate id"));
        }
        if ![bus.v_min, bus.v_max, bus.v_nom, bus.k_tx].into_iter().all(finite) {
            return Err(invalid(e(), "non-finite voltage data"));
        }
        if !(bus.v_min > T::zero() && bus.v_min <= bus.v_nom && bus.v_nom <= bus.v_max) {
            return Err(invalid(e(), "requires 0 < v_min <= v_nom <= v_max"));
        }
        if bus.k_tx < T::zero() {
            return Err(invalid(e(), "transformer loss coefficient must be >= 0"));
        }
        if let SetPoint::Series(s) = &bus.v_set {
            if s.len() != data.profiles.horizon {
                return Err(invalid(e(), "v_set series length differs from horizon"));
            }
        }
    }
    Ok(())
}

fn check_branches<T: Scalar>(data: &FeederData<T>, topo: &Topology) -> Result<(), FeederError> {
    for (b, br) in data.branches.iter().enumerate() {
        let e = || format!("branch {}→{}", br.from, br.to);
        if ![br.r, br.x, br.s_max, br.l_max].into_iter().all(finite) {
            return Err(invalid(e(), "non-finite data"));
        }
        if br.r < T::zero() || br.x < T::zero() {
            return Err(invalid(e(), "resistance and reactance must be >= 0"));
        }
        if !(br.r * br.r + br.x * br.x > T::zero()) {
            return Err(invalid(e(), "zero impedance"));
        }
        if !(br.s_max > T::zero()) {
            return Err(invalid(e(), "thermal limit must be positive"));
        }
        let v_nom = data.buses[topo.branch_from[b]].v_nom;
        let s_sq = br.s_max * br.s_max;
        if (s_sq - br.l_max * v_nom).abs() > coupling_tol(s_sq) {
            return Err(invalid(
                e(),
                format!(
                    "s_max² = {} but l_max·v_nom = {}",
                    s_sq,
                    br.l_max * v_nom
                ),
            ));
        }
    }
    Ok(())
}

fn check_des<T: Scalar>(
    data: &FeederData<T>,
    topo: &Topology,
) -> Result<Vec<Vec<usize>>, FeederError> {
    let mut at_bus = vec![Vec::new(); data.buses.len()];
    for (d, unit) in data.des_units.iter().enumerate() {
        let e = || format!("des {} at bus {}", d, unit.bus);
        let Some(bus) = topo.bus_index(&unit.bus) else {
            return Err(invalid(e(), "unknown bus"));
        };
        let vals = [
            unit.s_max,
            unit.r_batt,
            unit.r_cvt,
            unit.e_min,
            unit.e_max,
            unit.e_surplus,
        ];
        if !vals.into_iter().all(finite) {
            return Err(invalid(e(), "non-finite data"));
        }
        if !(unit.r_batt > T::zero() && unit.r_cvt > T::zero()) {
            return Err(invalid(e(), "battery and converter resistances must be positive"));
        }
        if !(unit.s_max > T::zero()) {
            return Err(invalid(e(), "converter limit must be positive"));
        }
        if !(unit.e_min <= unit.e_surplus && unit.e_surplus <= unit.e_max) {
            return Err(invalid(e(), "requires e_min <= e_surplus <= e_max"));
        }
        at_bus[bus].push(d);
    }
    Ok(at_bus)
}

fn check_profiles<T: Scalar>(data: &FeederData<T>) -> Result<(), FeederError> {
    let p = &data.profiles;
    let n = data.buses.len();
    if p.horizon == 0 {
        return Err(invalid("profiles", "horizon must be >= 1"));
    }
    if !(p.dt > T::zero()) {
        return Err(invalid("profiles", "dt must be positive"));
    }
    for (name, series) in [("load_p", &p.load_p), ("load_q", &p.load_q), ("pv", &p.pv)] {
        if series.len() != n {
            return Err(invalid("profiles", format!("{name} has {} buses, expected {n}", series.len())));
        }
        for (i, s) in series.iter().enumerate() {
            if s.len() != p.horizon {
                return Err(invalid(
                    format!("profiles.{name} bus {}", data.buses[i].id),
                    "series length differs from horizon",
                ));
            }
            if !s.iter().copied().all(finite) {
                return Err(invalid(format!("profiles.{name}"), "non-finite value"));
            }
        }
    }
    if p.pv.iter().flatten().any(|&x| x < T::zero()) {
        return Err(invalid("profiles.pv", "PV output must be >= 0"));
    }
    if p.price.as_ref().is_some_and(|s| s.len() != p.horizon) {
        return Err(invalid("profiles.price", "series length differs from horizon"));
    }
    Ok(())
}

impl<T: Scalar> FeederData<T> {
    /// Path feeder `1-2-...-n` with identical branches, default voltage
    /// bounds, no load and a flat price of 50. Bus `1` is the substation.
    pub fn path(n: usize, r: T, x: T, s_max: T) -> Self {
        let mut buses = vec![Bus::substation("1")];
        for i in 2..=n {
            buses.push(Bus::new(i.to_string()));
        }
        let branches = (2..=n)
            .map(|i| Branch {
                from: (i - 1).to_string(),
                to: i.to_string(),
                r,
                x,
                s_max,
                l_max: s_max * s_max,
            })
            .collect();
        FeederData {
            buses,
            branches,
            des_units: vec![],
            profiles: Profiles::flat(n, 1, T::lit(50.0)),
            sub_rating: T::lit(10.0),
            base: Base {
                mva: T::one(),
                kv: T::lit(12.47),
            },
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn path_feeder(n: usize, r: f64, x: f64, s_max: f64) -> FeederData<f64> {
        FeederData::path(n, r, x, s_max)
    }

    #[test]
    fn path_feeder_validates() {
        let f = Feeder::new(path_feeder(4, 0.01, 0.02, 1.0)).unwrap();
        assert_eq!(f.n_branches(), f.n_buses() - 1);
        assert_eq!(f.substation(), 0);
    }

    #[test]
    fn rejects_inverted_voltage_bounds() {
        let mut d = path_feeder(3, 0.01, 0.01, 1.0);
        d.buses[1].v_min = 1.3;
        let err = Feeder::new(d).unwrap_err();
        assert!(err.to_string().contains("bus 2"), "{err}");
    }

    #[test]
    fn rejects_inconsistent_thermal_limit() {
        let mut d = path_feeder(2, 0.01, 0.01, 1.0);
        d.branches[0].l_max = 0.9;
        let err = Feeder::new(d).unwrap_err();
        assert!(err.to_string().contains("branch 1→2"), "{err}");
    }

    #[test]
    fn rejects_zero_impedance() {
        let mut d = path_feeder(2, 0.0, 0.0, 1.0);
        d.branches[0].r = 0.0;
        assert!(Feeder::new(d).is_err());
    }

    #[test]
    fn rejects_des_outside_energy_window() {
        let mut d = path_feeder(2, 0.01, 0.01, 1.0);
        d.des_units.push(DesUnit {
            bus: "2".into(),
            s_max: 1.0,
            r_batt: 0.01,
            r_cvt: 0.01,
            e_min: 0.5,
            e_max: 2.0,
            e_surplus: 0.1,
        });
        assert!(Feeder::new(d).is_err());
    }

    #[test]
    fn r_eq_is_exact_sum() {
        let u = DesUnit {
            bus: "2".into(),
            s_max: 1.0,
            r_batt: 0.013,
            r_cvt: 0.007,
            e_min: 0.0,
            e_max: 1.0,
            e_surplus: 0.5,
        };
        assert_eq!(u.r_eq(), 0.013 + 0.007);
    }

    #[test]
    fn negative_pv_rejected() {
        let mut d = path_feeder(2, 0.01, 0.01, 1.0);
        d.profiles.pv[1][0] = -0.1;
        assert!(Feeder::new(d).is_err());
    }

    #[test]
    fn snapshot_collapses_horizon() {
        let mut d = path_feeder(2, 0.01, 0.01, 1.0);
        d.profiles = Profiles::flat(2, 3, 20.0);
        d.profiles.load_p[1] = vec![0.1, 0.2, 0.3];
        let f = Feeder::new(d).unwrap();
        let s = f.snapshot(2);
        assert_eq!(s.horizon(), 1);
        assert_eq!(s.profiles.load_p[1], vec![0.3]);
    }
}
