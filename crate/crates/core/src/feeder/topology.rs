use std::collections::{HashMap, VecDeque};
use std::fmt;

use super::FeederData;

/// A reason a feeder graph is not a spanning tree rooted at its substation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RadialViolation {
    NoSubstation,
    MultipleSubstations(Vec<String>),
    UnknownBus { branch: (String, String), bus: String },
    SelfLoop(String),
    Disconnected(String),
    Orientation { from: String, to: String },
    Cycle { from: String, to: String },
    BranchCount { buses: usize, branches: usize },
}

impl fmt::Display for RadialViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoSubstation => write!(f, "no substation bus"),
            Self::MultipleSubstations(ids) => write!(f, "multiple substations: {}", ids.join(", ")),
            Self::UnknownBus { branch, bus } => {
                write!(f, "unknown bus {bus} in branch {}→{}", branch.0, branch.1)
            }
            Self::SelfLoop(id) => write!(f, "self loop at bus {id}"),
            Self::Disconnected(id) => write!(f, "disconnected: bus {id}"),
            Self::Orientation { from, to } => write!(f, "orientation: branch {from}→{to}"),
            Self::Cycle { from, to } => write!(f, "cycle: branch {from}→{to}"),
            Self::BranchCount { buses, branches } => {
                write!(f, "{branches} branches for {buses} buses")
            }
        }
    }
}

/// Rooted-tree view of a radial feeder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub root: usize,
    /// Buses in breadth-first order from the root.
    pub order: Vec<usize>,
    /// Branch feeding each bus; `None` for the root.
    pub parent_branch: Vec<Option<usize>>,
    /// Branches leaving each bus.
    pub children: Vec<Vec<usize>>,
    pub branch_from: Vec<usize>,
    pub branch_to: Vec<usize>,
    index: HashMap<String, usize>,
}

impl Topology {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Branches ordered so every branch comes after the one feeding its sending bus.
    pub fn branches_downstream(&self) -> impl DoubleEndedIterator<Item = usize> + '_ {
        self.order.iter().filter_map(move |&bus| self.parent_branch[bus])
    }

    pub(super) fn build<T>(data: &FeederData<T>) -> Result<Self, Vec<RadialViolation>> {
        let mut violations = validate_radial(data);
        if !violations.is_empty() {
            return Err(violations);
        }
        let index: HashMap<String, usize> = data
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.clone(), i))
            .collect();
        let n = data.buses.len();
        let root = data.buses.iter().position(|b| b.is_substation).unwrap();
        let branch_from: Vec<usize> = data.branches.iter().map(|b| index[&b.from]).collect();
        let branch_to: Vec<usize> = data.branches.iter().map(|b| index[&b.to]).collect();
        let mut parent_branch = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for (b, (&from, &to)) in branch_from.iter().zip(&branch_to).enumerate() {
            parent_branch[to] = Some(b);
            children[from].push(b);
        }
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::from([root]);
        while let Some(bus) = queue.pop_front() {
            order.push(bus);
            queue.extend(children[bus].iter().map(|&b| branch_to[b]));
        }
        if order.len() != n {
            violations.push(RadialViolation::BranchCount {
                buses: n,
                branches: data.branches.len(),
            });
            return Err(violations);
        }
        Ok(Self {
            root,
            order,
            parent_branch,
            children,
            branch_from,
            branch_to,
            index,
        })
    }
}

/// Checks that the branch graph is a spanning tree rooted at the substation with
/// every branch oriented parent → child. Violations are returned, never raised.
pub fn validate_radial<T>(data: &FeederData<T>) -> Vec<RadialViolation> {
    let mut out = Vec::new();
    let subs: Vec<usize> = data
        .buses
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_substation)
        .map(|(i, _)| i)
        .collect();
    match subs.len() {
        0 => {
            out.push(RadialViolation::NoSubstation);
            return out;
        }
        1 => {}
        _ => {
            out.push(RadialViolation::MultipleSubstations(
                subs.iter().map(|&i| data.buses[i].id.clone()).collect(),
            ));
            return out;
        }
    }
    let root = subs[0];
    let index: HashMap<&str, usize> = data
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.as_str(), i))
        .collect();

    let n = data.buses.len();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (b, br) in data.branches.iter().enumerate() {
        let mut ends = [0usize; 2];
        let mut ok = true;
        for (slot, id) in ends.iter_mut().zip([&br.from, &br.to]) {
            match index.get(id.as_str()) {
                Some(&i) => *slot = i,
                None => {
                    out.push(RadialViolation::UnknownBus {
                        branch: (br.from.clone(), br.to.clone()),
                        bus: id.clone(),
                    });
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        if ends[0] == ends[1] {
            out.push(RadialViolation::SelfLoop(br.from.clone()));
            continue;
        }
        adj[ends[0]].push((ends[1], b));
        adj[ends[1]].push((ends[0], b));
    }

    // Breadth-first search over the undirected graph; each branch must be met
    // first from its `from` end, and no branch may close a cycle.
    let mut visited = vec![false; n];
    let mut used = vec![false; data.branches.len()];
    let mut queue = VecDeque::from([root]);
    visited[root] = true;
    while let Some(bus) = queue.pop_front() {
        for &(next, b) in &adj[bus] {
            if used[b] {
                continue;
            }
            used[b] = true;
            let br = &data.branches[b];
            if visited[next] {
                out.push(RadialViolation::Cycle {
                    from: br.from.clone(),
                    to: br.to.clone(),
                });
                continue;
            }
            if index[br.from.as_str()] != bus {
                out.push(RadialViolation::Orientation {
                    from: br.from.clone(),
                    to: br.to.clone(),
                });
            }
            visited[next] = true;
            queue.push_back(next);
        }
    }
    for (i, seen) in visited.iter().enumerate() {
        if !seen {
            out.push(RadialViolation::Disconnected(data.buses[i].id.clone()));
        }
    }
    if out.is_empty() && data.branches.len() + 1 != n {
        out.push(RadialViolation::BranchCount {
            buses: n,
            branches: data.branches.len(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feeder::tests::path_feeder;
    use crate::feeder::{Branch, Feeder, FeederError};

    fn branch(from: &str, to: &str) -> Branch<f64> {
        Branch {
            from: from.into(),
            to: to.into(),
            r: 0.01,
            x: 0.01,
            s_max: 1.0,
            l_max: 1.0,
        }
    }

    #[test]
    fn path_is_radial() {
        assert!(validate_radial(&path_feeder(3, 0.01, 0.01, 1.0)).is_empty());
    }

    #[test]
    fn two_components_report_disconnected_bus() {
        let mut d = path_feeder(3, 0.01, 0.01, 1.0);
        d.branches.truncate(1);
        assert_eq!(
            validate_radial(&d),
            vec![RadialViolation::Disconnected("3".into())]
        );
        assert_eq!(validate_radial(&d)[0].to_string(), "disconnected: bus 3");
    }

    #[test]
    fn child_to_parent_edge_is_flagged() {
        let mut d = path_feeder(3, 0.01, 0.01, 1.0);
        d.branches[1] = branch("3", "2");
        let v = validate_radial(&d);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "orientation: branch 3→2");
    }

    #[test]
    fn cycle_is_not_radial() {
        let mut d = path_feeder(3, 0.01, 0.01, 1.0);
        d.branches.push(branch("3", "1"));
        assert!(!validate_radial(&d).is_empty());
        let err = Feeder::new(d).unwrap_err();
        assert!(matches!(err, FeederError::NotRadial(_)));
        assert!(err.to_string().starts_with("not radial"));
    }

    #[test]
    fn missing_substation() {
        let mut d = path_feeder(2, 0.01, 0.01, 1.0);
        d.buses[0].is_substation = false;
        assert_eq!(validate_radial(&d), vec![RadialViolation::NoSubstation]);
    }

    #[test]
    fn downstream_order_respects_parents() {
        let mut d = path_feeder(5, 0.01, 0.01, 1.0);
        // 1→2, 1→3, 3→4, 3→5, listed out of order
        d.branches = vec![branch("3", "5"), branch("1", "2"), branch("3", "4"), branch("1", "3")];
        let f = Feeder::new(d).unwrap();
        let topo = f.topology();
        let mut seen = vec![false; f.n_buses()];
        seen[topo.root] = true;
        for b in topo.branches_downstream() {
            assert!(seen[topo.branch_from[b]]);
            seen[topo.branch_to[b]] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}
