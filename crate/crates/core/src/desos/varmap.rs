use crate::distflow::{NetworkState, PeriodState};
use crate::feeder::Feeder;
use crate::scalar::Scalar;

use super::DesosError;

/// A named decision variable at period `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    P { branch: usize, t: usize },
    Q { branch: usize, t: usize },
    L { branch: usize, t: usize },
    V { bus: usize, t: usize },
    PDes { des: usize, t: usize },
    QDes { des: usize, t: usize },
    PLoss { des: usize, t: usize },
    PGrid { t: usize },
    QGrid { t: usize },
    /// Epigraph of `|v − v_set|`, present only for the voltage objective.
    U { bus: usize, t: usize },
}

impl std::fmt::Display for Column {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Column::P { branch, t } => write!(f, "P[{branch},{t}]"),
            Column::Q { branch, t } => write!(f, "Q[{branch},{t}]"),
            Column::L { branch, t } => write!(f, "l[{branch},{t}]"),
            Column::V { bus, t } => write!(f, "v[{bus},{t}]"),
            Column::PDes { des, t } => write!(f, "p_des[{des},{t}]"),
            Column::QDes { des, t } => write!(f, "q_des[{des},{t}]"),
            Column::PLoss { des, t } => write!(f, "p_loss[{des},{t}]"),
            Column::PGrid { t } => write!(f, "P_grid[{t}]"),
            Column::QGrid { t } => write!(f, "Q_grid[{t}]"),
            Column::U { bus, t } => write!(f, "u[{bus},{t}]"),
        }
    }
}

/// Builds a column from its entity index and period.
type MakeColumn = fn(usize, usize) -> Column;

/// Period-major column layout:
/// `P, Q, ℓ` per branch, `v` per bus, `p_des, q_des, p_loss` per unit,
/// `P_grid, Q_grid`, then `u` per bus when present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableMap {
    pub horizon: usize,
    pub n_branches: usize,
    pub n_buses: usize,
    pub n_des: usize,
    pub with_u: bool,
}

impl VariableMap {
    pub fn new<T: Scalar>(feeder: &Feeder<T>, with_u: bool) -> Self {
        Self {
            horizon: feeder.horizon(),
            n_branches: feeder.n_branches(),
            n_buses: feeder.n_buses(),
            n_des: feeder.des_units.len(),
            with_u,
        }
    }

    fn per_period(&self) -> usize {
        3 * self.n_branches + self.n_buses + 3 * self.n_des + 2 + if self.with_u { self.n_buses } else { 0 }
    }

    pub fn n_cols(&self) -> usize {
        self.horizon * self.per_period()
    }

    pub fn index(&self, c: Column) -> usize {
        let (nl, nb, nd) = (self.n_branches, self.n_buses, self.n_des);
        let (t, off) = match c {
            Column::P { branch, t } => (t, branch),
            Column::Q { branch, t } => (t, nl + branch),
            Column::L { branch, t } => (t, 2 * nl + branch),
            Column::V { bus, t } => (t, 3 * nl + bus),
            Column::PDes { des, t } => (t, 3 * nl + nb + des),
            Column::QDes { des, t } => (t, 3 * nl + nb + nd + des),
            Column::PLoss { des, t } => (t, 3 * nl + nb + 2 * nd + des),
            Column::PGrid { t } => (t, 3 * nl + nb + 3 * nd),
            Column::QGrid { t } => (t, 3 * nl + nb + 3 * nd + 1),
            Column::U { bus, t } => {
                assert!(self.with_u, "no epigraph columns in this map");
                (t, 3 * nl + nb + 3 * nd + 2 + bus)
            }
        };
        t * self.per_period() + off
    }

    /// Inverse of [`VariableMap::index`].
    pub fn column(&self, j: usize) -> Column {
        assert!(j < self.n_cols(), "column {j} out of range");
        let (nl, nb, nd) = (self.n_branches, self.n_buses, self.n_des);
        let t = j / self.per_period();
        let mut k = j % self.per_period();
        let blocks: [(usize, MakeColumn); 10] = [
            (nl, |i, t| Column::P { branch: i, t }),
            (nl, |i, t| Column::Q { branch: i, t }),
            (nl, |i, t| Column::L { branch: i, t }),
            (nb, |i, t| Column::V { bus: i, t }),
            (nd, |i, t| Column::PDes { des: i, t }),
            (nd, |i, t| Column::QDes { des: i, t }),
            (nd, |i, t| Column::PLoss { des: i, t }),
            (1, |_, t| Column::PGrid { t }),
            (1, |_, t| Column::QGrid { t }),
            (nb, |i, t| Column::U { bus: i, t }),
        ];
        for (len, make) in blocks {
            if k < len {
                return make(k, t);
            }
            k -= len;
        }
        unreachable!("index arithmetic covers every column")
    }

    /// Column vector of a state; epigraph columns get `|v − v_set|`.
    pub fn encode<T: Scalar>(&self, feeder: &Feeder<T>, state: &NetworkState<T>) -> Result<Vec<T>, DesosError> {
        state
            .check_dims(feeder)
            .map_err(|e| DesosError::Dimension(e.to_string()))?;
        let mut x = vec![T::zero(); self.n_cols()];
        for (t, s) in state.periods.iter().enumerate() {
            for b in 0..self.n_branches {
                x[self.index(Column::P { branch: b, t })] = s.p[b];
                x[self.index(Column::Q { branch: b, t })] = s.q[b];
                x[self.index(Column::L { branch: b, t })] = s.l[b];
            }
            for i in 0..self.n_buses {
                x[self.index(Column::V { bus: i, t })] = s.v[i];
                if self.with_u {
                    x[self.index(Column::U { bus: i, t })] = (s.v[i] - feeder.buses[i].v_set.at(t)).abs();
                }
            }
            for d in 0..self.n_des {
                x[self.index(Column::PDes { des: d, t })] = s.p_des[d];
                x[self.index(Column::QDes { des: d, t })] = s.q_des[d];
                x[self.index(Column::PLoss { des: d, t })] = s.p_loss[d];
            }
            x[self.index(Column::PGrid { t })] = s.p_grid;
            x[self.index(Column::QGrid { t })] = s.q_grid;
        }
        Ok(x)
    }

    /// Named state from a column vector; bus injections are rebuilt from the
    /// profiles, the storage dispatch and the grid exchange.
    pub fn decode<T: Scalar>(&self, feeder: &Feeder<T>, x: &[T]) -> Result<NetworkState<T>, DesosError> {
        if x.len() != self.n_cols() {
            return Err(DesosError::Dimension(format!(
                "{} values for {} columns",
                x.len(),
                self.n_cols()
            )));
        }
        let pr = &feeder.profiles;
        let root = feeder.substation();
        let periods = (0..self.horizon)
            .map(|t| {
                let get = |c| x[self.index(c)];
                let mut s = PeriodState::flat(feeder, T::zero());
                for b in 0..self.n_branches {
                    s.p[b] = get(Column::P { branch: b, t });
                    s.q[b] = get(Column::Q { branch: b, t });
                    s.l[b] = get(Column::L { branch: b, t });
                }
                for i in 0..self.n_buses {
                    s.v[i] = get(Column::V { bus: i, t });
                    s.p_inj[i] = pr.pv[i][t] - pr.load_p[i][t];
                    s.q_inj[i] = -pr.load_q[i][t];
                }
                for d in 0..self.n_des {
                    s.p_des[d] = get(Column::PDes { des: d, t });
                    s.q_des[d] = get(Column::QDes { des: d, t });
                    s.p_loss[d] = get(Column::PLoss { des: d, t });
                    let i = feeder.des_bus(d);
                    s.p_inj[i] = s.p_inj[i] + s.p_des[d];
                    s.q_inj[i] = s.q_inj[i] + s.q_des[d];
                }
                s.p_grid = get(Column::PGrid { t });
                s.q_grid = get(Column::QGrid { t });
                s.p_inj[root] += s.p_grid;
                s.q_inj[root] += s.q_grid;
                s
            })
            .collect();
        Ok(NetworkState { periods })
    }
}
