//! Storage scheduling on a radial feeder as a cone program.
//!
//! Per period: active and reactive bus balance, voltage drop, the branch
//! cone `P² + Q² <= ℓ·v`, thermal and converter discs, the storage loss
//! cone, and the grid exchange box `−0.6·R <= P_grid, Q_grid <= R`. Across
//! periods the stored energy stays within its window. The hull relaxation
//! adds the branch cut and the two storage cuts.

mod build;
mod varmap;

use std::str::FromStr;

use thiserror::Error;

use crate::conic::{ConicError, SolveStatus};
use crate::distflow::NetworkState;
use crate::feeder::Feeder;
use crate::hull::HullError;
use crate::scalar::Scalar;

pub use build::{build_problem, extract_state, objective_vector, solve_desos, DesosProblem, DesosSolution};
pub use varmap::{Column, VariableMap};

/// Share of the substation rating `R` allowed as export.
pub const EXPORT_SHARE: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    /// Cost of grid energy, `Σ c_t·Δt·base·P_grid_t`.
    F1,
    /// Branch, transformer and storage losses.
    F2,
    /// Total absolute deviation of squared voltage from its set point.
    F3,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [ObjectiveKind::F1, ObjectiveKind::F2, ObjectiveKind::F3];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::F1 => "f1",
            ObjectiveKind::F2 => "f2",
            ObjectiveKind::F3 => "f3",
        }
    }
}

impl std::fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(ObjectiveKind::F1),
            "f2" => Ok(ObjectiveKind::F2),
            "f3" => Ok(ObjectiveKind::F3),
            _ => Err(format!("unknown objective `{s}` (expected f1, f2 or f3)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelaxKind {
    /// Cones only.
    Socp,
    /// Cones plus hull cuts.
    Ch,
}

impl RelaxKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RelaxKind::Socp => "socp",
            RelaxKind::Ch => "ch",
        }
    }
}

impl std::fmt::Display for RelaxKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelaxKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "socp" => Ok(RelaxKind::Socp),
            "ch" => Ok(RelaxKind::Ch),
            _ => Err(format!("unknown relaxation `{s}` (expected socp or ch)")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DesosError {
    #[error("objective f1 needs a price series")]
    MissingPrice,
    #[error("solver returned {0}")]
    Solve(SolveStatus),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error("state does not match the feeder: {0}")]
    Dimension(String),
}

/// Objective value of a state, computed from named quantities.
pub fn state_objective<T: Scalar>(
    feeder: &Feeder<T>,
    state: &NetworkState<T>,
    kind: ObjectiveKind,
) -> Result<T, DesosError> {
    let mut total = T::zero();
    match kind {
        ObjectiveKind::F1 => {
            let price = feeder.profiles.price.as_ref().ok_or(DesosError::MissingPrice)?;
            let scale = feeder.profiles.dt * feeder.base.mva;
            for (t, s) in state.periods.iter().enumerate() {
                total += price[t] * scale * s.p_grid;
            }
        }
        ObjectiveKind::F2 => {
            for s in &state.periods {
                for (b, br) in feeder.branches.iter().enumerate() {
                    total += br.r * s.l[b];
                }
                for (i, bus) in feeder.buses.iter().enumerate() {
                    total += bus.k_tx * s.v[i];
                }
                for &loss in &s.p_loss {
                    total += loss;
                }
            }
        }
        ObjectiveKind::F3 => {
            for (t, s) in state.periods.iter().enumerate() {
                for (i, bus) in feeder.buses.iter().enumerate() {
                    total += (s.v[i] - bus.v_set.at(t)).abs();
                }
            }
        }
    }
    Ok(total)
}
