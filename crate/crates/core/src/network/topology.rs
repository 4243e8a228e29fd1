use serde::{Deserialize, Serialize};

use crate::config::{PlantConfig, CHILLED_NODES, CONDENSER_NODES};
use crate::error::SimError;

use super::state::{initial_state, SimState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Loop {
    Chilled,
    Condenser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub circuit: Loop,
    /// m³, including the pipes discharging into this node.
    pub volume: f64,
}

/// What sits on an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Attachment {
    /// Air handlers plus distribution piping; the building load enters here.
    AirHandler,
    SupplyMain,
    ChilledPumps,
    Evaporator(usize),
    EvaporatorBypass,
    HexChilledSide,
    CondenserPumps,
    Condenser(usize),
    CondenserBypass,
    HexCondenserSide,
    TowerBank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub attachment: Attachment,
    /// Quadratic pressure-loss coefficient, Pa per (kg/s)².
    pub loss: f64,
}

/// Node indices the solver addresses directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct Ports {
    pub chw_return: usize,
    pub chw_pump: usize,
    pub chw_discharge: usize,
    pub chw_bank: usize,
    pub chw_supply: usize,
    pub cw_basin: usize,
    pub cw_pump: usize,
    pub cw_discharge: usize,
    pub cw_return: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub chillers: usize,
    pub(crate) ports: Ports,
}

impl NetworkTopology {
    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn edges_with(&self, attachment: Attachment) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.attachment == attachment)
    }

    /// Loop mass, kg.
    pub fn loop_mass(&self, circuit: Loop) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.circuit == circuit)
            .map(|n| n.volume * crate::units::WATER_DENSITY)
            .sum()
    }

    /// Checks that both loops are closed, isolated from each other, and that
    /// every component spans exactly one node pair.
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidTopology(m));
        let n = self.nodes.len();
        for e in &self.edges {
            if e.from >= n || e.to >= n {
                return bad(format!("{:?} references a missing node", e.attachment));
            }
            if self.nodes[e.from].circuit != self.nodes[e.to].circuit {
                return bad(format!("{:?} joins the two loops", e.attachment));
            }
            if !(e.loss >= 0.0) {
                return bad(format!("{:?} has a negative loss coefficient", e.attachment));
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if !(node.volume > 0.0) {
                return bad(format!("node `{}` has no volume", node.name));
            }
            let ins = self.edges.iter().filter(|e| e.to == i).count();
            let outs = self.edges.iter().filter(|e| e.from == i).count();
            if ins == 0 || outs == 0 {
                return bad(format!("node `{}` is dangling", node.name));
            }
        }
        for circuit in [Loop::Chilled, Loop::Condenser] {
            let members: Vec<usize> = (0..n).filter(|i| self.nodes[*i].circuit == circuit).collect();
            let Some(&start) = members.first() else {
                return bad(format!("{circuit:?} loop has no nodes"));
            };
            for forward in [true, false] {
                let reached = self.reach(start, forward);
                if let Some(&lost) = members.iter().find(|i| !reached[**i]) {
                    return bad(format!(
                        "{circuit:?} loop is not closed at `{}`",
                        self.nodes[lost].name
                    ));
                }
            }
        }
        let mut expected = vec![
            Attachment::AirHandler,
            Attachment::SupplyMain,
            Attachment::ChilledPumps,
            Attachment::EvaporatorBypass,
            Attachment::HexChilledSide,
            Attachment::CondenserPumps,
            Attachment::CondenserBypass,
            Attachment::HexCondenserSide,
            Attachment::TowerBank,
        ];
        for i in 0..self.chillers {
            expected.push(Attachment::Evaporator(i));
            expected.push(Attachment::Condenser(i));
        }
        for a in &expected {
            let count = self.edges_with(*a).count();
            if count != 1 {
                return bad(format!("{a:?} spans {count} node pairs, expected 1"));
            }
        }
        if let Some(e) = self.edges.iter().find(|e| !expected.contains(&e.attachment)) {
            return bad(format!("unexpected component {:?}", e.attachment));
        }
        Ok(())
    }

    fn reach(&self, start: usize, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for e in &self.edges {
                let (a, b) = if forward { (e.from, e.to) } else { (e.to, e.from) };
                if a == i && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen
    }
}

/// Builds the two-loop network for `config` and its initial state.
pub fn build_network(config: &PlantConfig) -> Result<(NetworkTopology, SimState), SimError> {
    config.validate()?;
    let mut nodes = Vec::new();
    for (names, circuit) in [
        (&CHILLED_NODES[..], Loop::Chilled),
        (&CONDENSER_NODES[..], Loop::Condenser),
    ] {
        for name in names {
            nodes.push(Node {
                name: name.to_string(),
                circuit,
                volume: config.node_volume(name),
            });
        }
    }
    let idx = |name: &str| nodes.iter().position(|n| n.name == name).unwrap();
    let ports = Ports {
        chw_return: idx("chw_return"),
        chw_pump: idx("chw_pump"),
        chw_discharge: idx("chw_discharge"),
        chw_bank: idx("chw_bank"),
        chw_supply: idx("chw_supply"),
        cw_basin: idx("cw_basin"),
        cw_pump: idx("cw_pump"),
        cw_discharge: idx("cw_discharge"),
        cw_return: idx("cw_return"),
    };
    let pipes = &config.hydraulics.pipes;
    let k = |name: &str| pipes[name].loss_coefficient();
    let p = ports;
    let mut edges = vec![
        Edge { from: p.chw_supply, to: p.chw_return, attachment: Attachment::AirHandler, loss: k("distribution") },
        Edge { from: p.chw_return, to: p.chw_pump, attachment: Attachment::HexChilledSide, loss: 0.0 },
        Edge { from: p.chw_pump, to: p.chw_discharge, attachment: Attachment::ChilledPumps, loss: 0.0 },
        Edge { from: p.chw_discharge, to: p.chw_bank, attachment: Attachment::EvaporatorBypass, loss: k("evaporator_branch") },
        Edge { from: p.chw_bank, to: p.chw_supply, attachment: Attachment::SupplyMain, loss: k("supply_main") },
        Edge { from: p.cw_basin, to: p.cw_pump, attachment: Attachment::HexCondenserSide, loss: 0.0 },
        Edge { from: p.cw_pump, to: p.cw_discharge, attachment: Attachment::CondenserPumps, loss: 0.0 },
        Edge { from: p.cw_discharge, to: p.cw_return, attachment: Attachment::CondenserBypass, loss: k("condenser_branch") },
        Edge { from: p.cw_return, to: p.cw_basin, attachment: Attachment::TowerBank, loss: k("tower_riser") },
    ];
    for i in 0..config.equipment.chillers {
        edges.push(Edge {
            from: p.chw_discharge,
            to: p.chw_bank,
            attachment: Attachment::Evaporator(i),
            loss: k("evaporator_branch"),
        });
        edges.push(Edge {
            from: p.cw_discharge,
            to: p.cw_return,
            attachment: Attachment::Condenser(i),
            loss: k("condenser_branch"),
        });
    }
    let topology = NetworkTopology {
        nodes,
        edges,
        chillers: config.equipment.chillers,
        ports,
    };
    topology.validate()?;
    let state = initial_state(config, &topology)?;
    Ok((topology, state))
}
