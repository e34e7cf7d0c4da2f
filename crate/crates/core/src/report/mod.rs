//! Relaxation comparison tables: objective value, maximum errors, exactness,
//! solve time and recovery gap, with CSV and JSON emitters.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::SolverSettings;
use crate::desos::{solve_desos, ObjectiveKind, RelaxKind};
use crate::distflow::{is_exact, me_branch, me_des, recover_feasible};
use crate::feeder::Feeder;
use crate::scalar::Scalar;

/// Slack allowed when checking that the hull relaxation's optimum is not below the cone relaxation's.
pub const OOV_ORDER_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no relaxation requested")]
    Empty,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One solved relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactnessReport {
    pub instance: String,
    pub seed: Option<u64>,
    pub objective: String,
    pub relax: String,
    pub status: String,
    /// Optimal objective value; `$` for f1, pu otherwise.
    pub oov: Option<f64>,
    pub me1: Option<f64>,
    /// `None` when the feeder has no storage.
    pub me2: Option<f64>,
    pub exact: bool,
    /// Seconds inside the solver.
    pub solve_time: f64,
    pub recovery_gap: Option<f64>,
    /// For hull rows: whether the optimum is at least the cone optimum.
    pub oov_order_ok: Option<bool>,
    pub v_min: f64,
    pub v_max: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub rows: Vec<ExactnessReport>,
}

#[derive(Debug, Clone)]
pub struct CompareOptions<T> {
    pub instance: String,
    pub seed: Option<u64>,
    pub snapshot: bool,
    pub settings: SolverSettings<T>,
    /// Run the rows on separate threads.
    pub parallel: bool,
}

impl<T: Scalar> CompareOptions<T> {
    pub fn new(instance: impl Into<String>) -> Self {
        Self {
            instance: instance.into(),
            seed: None,
            snapshot: false,
            settings: SolverSettings::default(),
            parallel: true,
        }
    }
}

fn run_row<T: Scalar>(
    feeder: &Feeder<T>,
    objective: ObjectiveKind,
    relax: RelaxKind,
    opts: &CompareOptions<T>,
) -> ExactnessReport {
    let (v_min, v_max) = feeder.voltage_envelope();
    let mut row = ExactnessReport {
        instance: opts.instance.clone(),
        seed: opts.seed,
        objective: objective.to_string(),
        relax: relax.to_string(),
        status: String::new(),
        oov: None,
        me1: None,
        me2: None,
        exact: false,
        solve_time: 0.0,
        recovery_gap: None,
        oov_order_ok: None,
        v_min: v_min.as_f64(),
        v_max: v_max.as_f64(),
        error: None,
    };
    let sol = match solve_desos(feeder, objective, relax, opts.snapshot, &opts.settings) {
        Ok(s) => s,
        Err(e) => {
            row.status = "error".into();
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.status = sol.solution.status.to_string();
    row.solve_time = sol.solution.solve_time;
    let Some(state) = &sol.state else {
        row.error = Some(format!("solver returned {}", sol.solution.status));
        return row;
    };
    let modeled = &sol.problem.feeder;
    let oov = sol.solution.objective;
    let me1 = me_branch(modeled, state);
    let me2 = me_des(modeled, state);
    row.oov = Some(oov.as_f64());
    row.me1 = Some(me1.as_f64());
    row.me2 = me2.map(|m| m.as_f64());
    row.exact = is_exact(me1) && me2.is_none_or(is_exact);
    match recover_feasible(modeled, state, objective, oov) {
        Ok(r) => row.recovery_gap = Some(r.gap.as_f64()),
        Err(e) => row.error = Some(format!("recovery: {e}")),
    }
    row
}

/// Solves one problem per requested relaxation and tabulates the results.
///
/// Solver failures are recorded in the affected row. Hull rows are annotated
/// with whether their optimum is at least the cone optimum less [`OOV_ORDER_TOL`].
pub fn compare<T: Scalar>(
    feeder: &Feeder<T>,
    objective: ObjectiveKind,
    relaxations: &[RelaxKind],
    opts: &CompareOptions<T>,
) -> Result<ReportTable, ReportError> {
    if relaxations.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut rows: Vec<ExactnessReport> = if opts.parallel && relaxations.len() > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = relaxations
                .iter()
                .map(|&r| s.spawn(move || run_row(feeder, objective, r, opts)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("row worker panicked")).collect()
        })
    } else {
        relaxations.iter().map(|&r| run_row(feeder, objective, r, opts)).collect()
    };
    let socp = rows
        .iter()
        .find(|r| r.relax == RelaxKind::Socp.as_str())
        .and_then(|r| r.oov);
    for row in &mut rows {
        if row.relax == RelaxKind::Ch.as_str() {
            row.oov_order_ok = match (row.oov, socp) {
                (Some(ch), Some(socp)) => Some(ch >= socp - OOV_ORDER_TOL),
                _ => None,
            };
        }
    }
    Ok(ReportTable { rows })
}

pub const CSV_HEADER: &str =
    "instance,seed,objective,relax,status,oov,me1,me2,exact,solve_time,recovery_gap,oov_order_ok,v_min,v_max,error";

fn sci(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.5e}"))
}

/// Rounds to six significant digits, the precision of the CSV output.
fn round6(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.5e}").parse().unwrap_or(x)
    } else {
        x
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ReportTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{:.2},{},{},{},{},{}",
                csv_field(&r.instance),
                r.seed.map_or_else(String::new, |s| s.to_string()),
                r.objective,
                r.relax,
                r.status,
                sci(r.oov),
                sci(r.me1),
                sci(r.me2),
                r.exact,
                r.solve_time,
                sci(r.recovery_gap),
                r.oov_order_ok.map_or_else(String::new, |b| b.to_string()),
                sci(Some(r.v_min)),
                sci(Some(r.v_max)),
                csv_field(r.error.as_deref().unwrap_or("")),
            );
        }
        out
    }

    /// Pretty JSON with numbers rounded to six significant digits and the
    /// solve time to 0.01 s.
    pub fn to_json(&self) -> String {
        let rounded = ReportTable {
            rows: self
                .rows
                .iter()
                .map(|r| ExactnessReport {
                    oov: r.oov.map(round6),
                    me1: r.me1.map(round6),
                    me2: r.me2.map(round6),
                    recovery_gap: r.recovery_gap.map(round6),
                    solve_time: (r.solve_time * 100.0).round() / 100.0,
                    v_min: round6(r.v_min),
                    v_max: round6(r.v_max),
                    ..r.clone()
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&rounded).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn emit(&self, format: Format, path: impl AsRef<Path>) -> Result<(), ReportError> {
        if self.rows.is_empty() {
            return Err(ReportError::Empty);
        }
        std::fs::write(path, self.render(format))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

/// Long-format CSV (`series,entity,period,value`) of per-period voltage
/// magnitudes, stored energy, grid exchange and price.
pub fn plot_data<T: Scalar>(feeder: &Feeder<T>, state: &crate::distflow::NetworkState<T>) -> String {
    let mut out = String::from("series,entity,period,value\n");
    for (t, s) in state.periods.iter().enumerate() {
        for (i, bus) in feeder.buses.iter().enumerate() {
            let _ = writeln!(out, "voltage,{},{t},{:.5e}", bus.id, s.v[i].max(T::zero()).sqrt().as_f64());
        }
    }
    for d in 0..feeder.des_units.len() {
        for (t, e) in state.energy_trajectory(feeder, d).into_iter().enumerate() {
            let _ = writeln!(out, "energy,{d},{t},{:.5e}", e.as_f64());
        }
    }
    for (t, s) in state.periods.iter().enumerate() {
        let _ = writeln!(out, "grid_p,substation,{t},{:.5e}", s.p_grid.as_f64());
    }
    if let Some(price) = &feeder.profiles.price {
        for (t, c) in price.iter().enumerate().take(state.periods.len()) {
            let _ = writeln!(out, "price,market,{t},{:.5e}", c.as_f64());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feeder::FeederData;

    fn two_bus() -> Feeder<f64> {
        let mut d = FeederData::path(2, 0.05, 0.05, 1.0);
        d.profiles.load_p[1][0] = 0.5;
        d.profiles.load_q[1][0] = 0.2;
        Feeder::new(d).unwrap()
    }

    fn table() -> ReportTable {
        let f = two_bus();
        compare(
            &f,
            ObjectiveKind::F2,
            &[RelaxKind::Socp, RelaxKind::Ch],
            &CompareOptions::new("two-bus"),
        )
        .unwrap()
    }

    #[test]
    fn two_bus_rows_are_exact_and_ordered() {
        let t = table();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].relax, "socp");
        assert_eq!(t.rows[1].relax, "ch");
        for r in &t.rows {
            assert!(r.exact, "{r:?}");
            assert!(r.me1.unwrap() < 1e-3);
            assert_eq!(r.me2, None);
        }
        assert_eq!(t.rows[1].oov_order_ok, Some(true));
    }

    #[test]
    fn csv_shape_and_stability() {
        let t = ReportTable {
            rows: vec![table().rows[0].clone()],
        };
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(csv, t.to_csv());
        assert!(csv.contains(",n/a,"));
    }

    #[test]
    fn json_round_trips() {
        let t = table();
        let text = t.to_json();
        let back = ReportTable::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert_eq!(back.rows.len(), 2);
    }

    #[test]
    fn failures_are_recorded_per_row() {
        let mut d = FeederData::path(2, 0.01, 0.01, 1.0);
        d.profiles.load_p[1][0] = 0.5;
        d.sub_rating = 0.1;
        let f = Feeder::new(d).unwrap();
        let t = compare(&f, ObjectiveKind::F2, &[RelaxKind::Socp], &CompareOptions::new("x")).unwrap();
        assert_eq!(t.rows[0].status, "infeasible");
        assert!(t.rows[0].error.is_some());
        assert!(!t.rows[0].exact);
    }

    #[test]
    fn empty_request_rejected() {
        let f = two_bus();
        assert!(matches!(
            compare(&f, ObjectiveKind::F2, &[], &CompareOptions::new("x")),
            Err(ReportError::Empty)
        ));
    }
}
