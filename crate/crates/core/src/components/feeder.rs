use serde::{Deserialize, Serialize};

use super::{invalid, ComponentError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeederBus {
    pub name: String,
    /// Constant-PQ load (p.u.).
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub q: f64,
    #[serde(default = "yes")]
    pub monitored: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeederLine {
    pub from: String,
    pub to: String,
    pub r: f64,
    pub x: f64,
}

/// Distributed generator: constant P, reactive power set by the CVCU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgUnit {
    pub name: String,
    pub bus: String,
    pub p: f64,
    #[serde(default)]
    pub q: f64,
    pub q_min: f64,
    pub q_max: f64,
}

/// Radial feeder below the tap-changing transformer. All quantities in p.u.
/// The first bus is the root (transformer secondary).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeederModel {
    pub label: String,
    /// Upstream (primary-side) voltage magnitude.
    pub slack_voltage: f64,
    pub buses: Vec<FeederBus>,
    pub lines: Vec<FeederLine>,
    pub dgs: Vec<DgUnit>,
}

impl Default for FeederModel {
    /// Synthetic 4-bus MV feeder with a large DG at its far end.
    fn default() -> Self {
        let bus = |name: &str, p: f64, q: f64| FeederBus {
            name: name.into(),
            p,
            q,
            monitored: true,
        };
        let line = |from: &str, to: &str| FeederLine {
            from: from.into(),
            to: to.into(),
            r: 0.02,
            x: 0.06,
        };
        Self {
            label: "synthetic 4-bus MV feeder (not a field network)".into(),
            slack_voltage: 1.005,
            buses: vec![
                bus("b0", 0.0, 0.0),
                bus("b1", 0.4, 0.1),
                bus("b2", 0.3, 0.1),
                bus("b3", 0.3, 0.1),
            ],
            lines: vec![line("b0", "b1"), line("b1", "b2"), line("b2", "b3")],
            dgs: vec![DgUnit {
                name: "dg3".into(),
                bus: "b3".into(),
                p: 0.9,
                q: 0.0,
                q_min: -0.3,
                q_max: 0.3,
            }],
        }
    }
}

/// Parent links of a validated radial feeder.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTopology {
    /// Parent bus of each bus; `None` for the root.
    pub parent: Vec<Option<usize>>,
    /// Line feeding each bus from its parent.
    pub parent_line: Vec<Option<usize>>,
    /// Buses in root-first (breadth-first) order.
    pub order: Vec<usize>,
    /// Bus index of each DG.
    pub dg_bus: Vec<usize>,
}

impl RadialTopology {
    /// Buses from the root down to `bus`, inclusive.
    pub fn path_from_root(&self, bus: usize) -> Vec<usize> {
        let mut path = vec![bus];
        let mut cur = bus;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

impl FeederModel {
    pub fn bus_index(&self, name: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.name == name)
    }

    pub fn dg_index(&self, name: &str) -> Option<usize> {
        self.dgs.iter().position(|d| d.name == name)
    }

    /// Check the tree property and parameter ranges.
    pub fn topology(&self) -> Result<RadialTopology, ComponentError> {
        let n = self.buses.len();
        if n == 0 {
            return Err(ComponentError::InvalidTopology("no buses".into()));
        }
        if !(self.slack_voltage.is_finite() && self.slack_voltage > 0.0) {
            return Err(invalid("slack_voltage", "must be > 0"));
        }
        for (i, b) in self.buses.iter().enumerate() {
            if self.buses[..i].iter().any(|o| o.name == b.name) {
                return Err(ComponentError::InvalidTopology(format!("duplicate bus {}", b.name)));
            }
            if !(b.p.is_finite() && b.q.is_finite()) {
                return Err(invalid("buses", format!("non-finite load at {}", b.name)));
            }
        }
        if self.lines.len() != n - 1 {
            return Err(ComponentError::InvalidTopology(format!(
                "{} buses need {} lines, got {}",
                n,
                n - 1,
                self.lines.len()
            )));
        }
        let mut parent = vec![None; n];
        let mut parent_line = vec![None; n];
        for (li, line) in self.lines.iter().enumerate() {
            if !(line.r >= 0.0 && line.x >= 0.0 && line.r.is_finite() && line.x.is_finite()) {
                return Err(invalid(
                    "lines",
                    format!("negative impedance {}-{}", line.from, line.to),
                ));
            }
            let lookup = |name: &str| {
                self.bus_index(name)
                    .ok_or_else(|| ComponentError::InvalidTopology(format!("unknown bus {name}")))
            };
            let (f, t) = (lookup(&line.from)?, lookup(&line.to)?);
            if t == 0 {
                return Err(ComponentError::InvalidTopology("root bus cannot be fed".into()));
            }
            if parent[t].is_some() {
                return Err(ComponentError::InvalidTopology(format!(
                    "bus {} has more than one parent",
                    line.to
                )));
            }
            parent[t] = Some(f);
            parent_line[t] = Some(li);
        }
        // breadth-first from the root must reach every bus exactly once
        let mut order = vec![0];
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            order.extend((0..n).filter(|&v| parent[v] == Some(u)));
        }
        if order.len() != n {
            return Err(ComponentError::InvalidTopology(
                "feeder is not connected to the root".into(),
            ));
        }
        let mut dg_bus = Vec::with_capacity(self.dgs.len());
        for (i, dg) in self.dgs.iter().enumerate() {
            if self.dgs[..i].iter().any(|o| o.name == dg.name) {
                return Err(ComponentError::InvalidTopology(format!("duplicate DG {}", dg.name)));
            }
            let bus = self
                .bus_index(&dg.bus)
                .ok_or_else(|| ComponentError::InvalidTopology(format!("DG {} on unknown bus", dg.name)))?;
            if !(dg.q_min <= dg.q_max && dg.p.is_finite() && dg.q.is_finite()) {
                return Err(invalid("dgs", format!("bad capability box for {}", dg.name)));
            }
            dg_bus.push(bus);
        }
        Ok(RadialTopology {
            parent,
            parent_line,
            order,
            dg_bus,
        })
    }

    /// Net consumption per bus: loads minus DG injections (p.u.).
    pub fn net_demand(&self, topo: &RadialTopology) -> Vec<(f64, f64)> {
        let mut s: Vec<(f64, f64)> = self.buses.iter().map(|b| (b.p, b.q)).collect();
        for (dg, &bus) in self.dgs.iter().zip(&topo.dg_bus) {
            s[bus].0 -= dg.p;
            s[bus].1 -= dg.q;
        }
        s
    }

    /// Apply a `load.<bus>.{p,q}`, `dg.<name>.{p,q}` or `slack.v` parameter.
    pub fn set_parameter(&mut self, path: &str, value: f64) -> bool {
        let parts: Vec<&str> = path.split('.').collect();
        match parts.as_slice() {
            ["slack", "v"] => {
                self.slack_voltage = value;
                true
            }
            ["load", bus, field] => match (self.bus_index(bus), *field) {
                (Some(i), "p") => {
                    self.buses[i].p = value;
                    true
                }
                (Some(i), "q") => {
                    self.buses[i].q = value;
                    true
                }
                _ => false,
            },
            ["dg", name, field] => match (self.dg_index(name), *field) {
                (Some(i), "p") => {
                    self.dgs[i].p = value;
                    true
                }
                (Some(i), "q") => {
                    let dg = &mut self.dgs[i];
                    dg.q = value.clamp(dg.q_min, dg.q_max);
                    true
                }
                _ => false,
            },
            _ => false,
        }
    }

    pub fn has_parameter(&self, path: &str) -> bool {
        self.clone().set_parameter(path, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_feeder_is_a_chain() {
        let f = FeederModel::default();
        let topo = f.topology().unwrap();
        assert_eq!(topo.parent, vec![None, Some(0), Some(1), Some(2)]);
        assert_eq!(topo.order, vec![0, 1, 2, 3]);
        assert_eq!(topo.path_from_root(3), vec![0, 1, 2, 3]);
        assert_eq!(topo.dg_bus, vec![3]);
    }

    #[test]
    fn rejects_loops_and_double_parents() {
        let mut f = FeederModel::default();
        f.lines[2] = FeederLine {
            from: "b3".into(),
            to: "b2".into(),
            r: 0.1,
            x: 0.1,
        };
        assert!(matches!(f.topology(), Err(ComponentError::InvalidTopology(_))));

        let mut f = FeederModel::default();
        f.lines.push(FeederLine {
            from: "b0".into(),
            to: "b3".into(),
            r: 0.1,
            x: 0.1,
        });
        assert!(matches!(f.topology(), Err(ComponentError::InvalidTopology(_))));
    }

    #[test]
    fn rejects_disconnected_cycle() {
        // b2 <-> b3 loop detached from the root, with n-1 lines
        let mut f = FeederModel::default();
        f.lines[1] = FeederLine {
            from: "b3".into(),
            to: "b2".into(),
            r: 0.1,
            x: 0.1,
        };
        assert!(matches!(f.topology(), Err(ComponentError::InvalidTopology(_))));
    }

    #[test]
    fn rejects_negative_impedance() {
        let mut f = FeederModel::default();
        f.lines[0].r = -0.01;
        assert!(f.topology().is_err());
    }

    #[test]
    fn parameter_paths() {
        let mut f = FeederModel::default();
        assert!(f.set_parameter("load.b2.p", 0.05));
        assert_eq!(f.buses[2].p, 0.05);
        assert!(f.set_parameter("dg.dg3.q", 9.0));
        assert_eq!(f.dgs[0].q, 0.3);
        assert!(f.set_parameter("slack.v", 1.0));
        assert!(!f.set_parameter("load.nope.p", 0.0));
        assert!(!f.has_parameter("load.b1.z"));
        assert!(f.has_parameter("load.b1.q"));
    }
}
