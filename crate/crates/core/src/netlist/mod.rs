// SPDX-License-Identifier: Apache-2.0

//! Gate-level netlists of threshold cells.
//!
//! A [`Netlist`] is the serializable description (the JSON schema shared with
//! the command line tool). [`Netlist::compile`] validates it, resolves net
//! names to indices and levelizes the instances into a [`Compiled`] form that
//! the simulators run on.

mod dot;
mod sim;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{Corner, DelayModel};
use crate::tlcell::{CellError, CellKind, ThresholdCell, VoltageLevels};

pub use sim::{AnalogRun, McResult, VariabilitySpec, Waveform};

/// Constant logic-0 net.
pub const LOW: &str = "$low";
/// Constant logic-1 net.
pub const HIGH: &str = "$high";

const LOW_IDX: usize = 0;
const HIGH_IDX: usize = 1;

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("combinational cycle through instance `{instance}`")]
    CombinationalCycle { instance: String },
    #[error("net `{net}` has more than one driver")]
    MultipleDrivers { net: String },
    #[error("net `{net}` used by `{instance}` has no driver")]
    DanglingInput { net: String, instance: String },
    #[error("instance `{instance}` declares fan_in {fan_in} but has {connected} inputs")]
    FanInMismatch { instance: String, fan_in: usize, connected: usize },
    #[error("instance `{instance}`: {source}")]
    Cell {
        instance: String,
        #[source]
        source: CellError,
    },
    #[error("constant net `{net}` cannot be driven")]
    DrivenConstant { net: String },
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("row has {got} values, expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("trial count must be at least 1")]
    InvalidTrials,
    #[error("invalid variability: {0}")]
    InvalidVariability(&'static str),
    #[error("malformed netlist JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NetlistError>;

/// Cell function as written in the JSON schema. `inv` is a single-input
/// cell in NOR configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Nor,
    Nand,
    Inv,
}

impl InstanceKind {
    pub fn cell_kind(self) -> CellKind {
        match self {
            InstanceKind::Nor | InstanceKind::Inv => CellKind::Nor,
            InstanceKind::Nand => CellKind::Nand,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InstanceKind::Nor => "nor",
            InstanceKind::Nand => "nand",
            InstanceKind::Inv => "inv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellInstance {
    pub id: String,
    pub kind: InstanceKind,
    pub fan_in: usize,
    pub v_ref: f64,
    pub has_opamp: bool,
    pub inputs: Vec<String>,
    pub output: String,
}

impl CellInstance {
    fn threshold_cell(&self, levels: VoltageLevels) -> Result<ThresholdCell> {
        if self.kind == InstanceKind::Inv && self.fan_in != 1 {
            return Err(NetlistError::Cell {
                instance: self.id.clone(),
                source: CellError::ArityMismatch { expected: 1, got: self.fan_in },
            });
        }
        ThresholdCell::with_fan_in(self.kind.cell_kind(), self.fan_in, self.v_ref, self.has_opamp, levels)
            .map_err(|source| NetlistError::Cell { instance: self.id.clone(), source })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub cells: Vec<CellInstance>,
}

impl Netlist {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        // Serializing plain strings, numbers and bools cannot fail.
        serde_json::to_string_pretty(self).expect("netlist serialization") + "\n"
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn to_dot(&self) -> String {
        dot::to_dot(self)
    }

    /// Validates against the default 0 V / 1 V levels and levelizes.
    pub fn compile(&self) -> Result<Compiled> {
        self.compile_with(VoltageLevels::default())
    }

    pub fn compile_with(&self, levels: VoltageLevels) -> Result<Compiled> {
        Compiled::build(self, levels)
    }

    pub fn simulate(&self, vectors: &[Vec<bool>]) -> Result<Vec<Vec<bool>>> {
        self.compile()?.simulate(vectors)
    }
}

/// Instances grouped by combinational level; level `k` only reads nets
/// driven by primary inputs, constants and levels `< k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub levels: Vec<Vec<usize>>,
}

impl Schedule {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

pub fn validate_and_levelize(netlist: &Netlist) -> Result<Schedule> {
    Ok(netlist.compile()?.schedule)
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub(crate) cell: ThresholdCell,
    pub(crate) inputs: Vec<usize>,
    pub(crate) output: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Driver {
    Const,
    Input,
    Cell(usize),
}

/// A validated, levelized netlist ready to simulate.
#[derive(Debug, Clone)]
pub struct Compiled {
    levels: VoltageLevels,
    net_names: Vec<String>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    nodes: Vec<Node>,
    order: Vec<usize>,
    schedule: Schedule,
}

impl Compiled {
    fn build(netlist: &Netlist, levels: VoltageLevels) -> Result<Self> {
        let mut nets = NetTable::default();
        nets.intern(LOW);
        nets.intern(HIGH);
        nets.drivers[LOW_IDX] = Some(Driver::Const);
        nets.drivers[HIGH_IDX] = Some(Driver::Const);

        let mut inputs = Vec::with_capacity(netlist.inputs.len());
        for name in &netlist.inputs {
            let i = nets.intern(name);
            match nets.drivers[i] {
                Some(Driver::Const) => return Err(NetlistError::DrivenConstant { net: name.clone() }),
                Some(_) => return Err(NetlistError::MultipleDrivers { net: name.clone() }),
                None => nets.drivers[i] = Some(Driver::Input),
            }
            inputs.push(i);
        }

        let mut ids = HashSet::new();
        let mut nodes = Vec::with_capacity(netlist.cells.len());
        for (ci, inst) in netlist.cells.iter().enumerate() {
            if !ids.insert(inst.id.as_str()) {
                return Err(NetlistError::DuplicateId(inst.id.clone()));
            }
            if inst.inputs.len() != inst.fan_in {
                return Err(NetlistError::FanInMismatch {
                    instance: inst.id.clone(),
                    fan_in: inst.fan_in,
                    connected: inst.inputs.len(),
                });
            }
            let cell = inst.threshold_cell(levels)?;
            let out = nets.intern(&inst.output);
            match nets.drivers[out] {
                Some(Driver::Const) => return Err(NetlistError::DrivenConstant { net: inst.output.clone() }),
                Some(_) => return Err(NetlistError::MultipleDrivers { net: inst.output.clone() }),
                None => nets.drivers[out] = Some(Driver::Cell(ci)),
            }
            let ins = inst.inputs.iter().map(|n| nets.intern(n)).collect();
            nodes.push(Node { cell, inputs: ins, output: out });
        }

        for (ci, node) in nodes.iter().enumerate() {
            if node.inputs.contains(&node.output) {
                return Err(NetlistError::CombinationalCycle { instance: netlist.cells[ci].id.clone() });
            }
            for &n in &node.inputs {
                if nets.drivers[n].is_none() {
                    return Err(NetlistError::DanglingInput {
                        net: nets.names[n].clone(),
                        instance: netlist.cells[ci].id.clone(),
                    });
                }
            }
        }

        let mut outputs = Vec::with_capacity(netlist.outputs.len());
        for name in &netlist.outputs {
            match nets.index.get(name.as_str()) {
                Some(&i) if nets.drivers[i].is_some() => outputs.push(i),
                _ => {
                    return Err(NetlistError::DanglingInput { net: name.clone(), instance: "<primary output>".into() })
                }
            }
        }

        let schedule = levelize(&nodes, &nets.drivers, netlist)?;
        let order = schedule.levels.iter().flatten().copied().collect();
        Ok(Self { levels, net_names: nets.names, inputs, outputs, nodes, order, schedule })
    }

    pub fn levels(&self) -> VoltageLevels {
        self.levels
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn depth(&self) -> usize {
        self.schedule.depth()
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn cell_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn net_names(&self) -> &[String] {
        &self.net_names
    }

    /// Worst-case path delay: depth times the per-cell delay at `corner`.
    pub fn critical_delay(&self, corner: Corner, model: &DelayModel) -> f64 {
        self.depth() as f64 * model.d1(corner)
    }
}

pub fn critical_delay(netlist: &Netlist, corner: Corner, model: &DelayModel) -> Result<f64> {
    Ok(netlist.compile()?.critical_delay(corner, model))
}

fn levelize(nodes: &[Node], drivers: &[Option<Driver>], netlist: &Netlist) -> Result<Schedule> {
    let n = nodes.len();
    let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pending = vec![0usize; n];
    for (ci, node) in nodes.iter().enumerate() {
        for &net in &node.inputs {
            if let Some(Driver::Cell(d)) = drivers[net] {
                fanout[d].push(ci);
                pending[ci] += 1;
            }
        }
    }

    let mut level = vec![0usize; n];
    let mut ready: Vec<usize> = (0..n).filter(|&c| pending[c] == 0).collect();
    for &c in &ready {
        level[c] = 1;
    }
    let mut done = 0;
    while let Some(c) = ready.pop() {
        done += 1;
        for &f in &fanout[c] {
            level[f] = level[f].max(level[c] + 1);
            pending[f] -= 1;
            if pending[f] == 0 {
                ready.push(f);
            }
        }
    }

    if done < n {
        return Err(NetlistError::CombinationalCycle {
            instance: netlist.cells[cycle_member(nodes, drivers, &pending)].id.clone(),
        });
    }

    let depth = level.iter().copied().max().unwrap_or(0);
    let mut levels = vec![Vec::new(); depth];
    for (ci, &l) in level.iter().enumerate() {
        levels[l - 1].push(ci);
    }
    Ok(Schedule { levels })
}

/// Walks backwards through unresolved drivers until an instance repeats.
fn cycle_member(nodes: &[Node], drivers: &[Option<Driver>], pending: &[usize]) -> usize {
    let mut cur = (0..nodes.len()).find(|&c| pending[c] > 0).expect("unresolved instance");
    let mut seen = vec![false; nodes.len()];
    while !seen[cur] {
        seen[cur] = true;
        cur = nodes[cur]
            .inputs
            .iter()
            .find_map(|&net| match drivers[net] {
                Some(Driver::Cell(d)) if pending[d] > 0 => Some(d),
                _ => None,
            })
            .expect("unresolved instance has an unresolved driver");
    }
    cur
}

#[derive(Default)]
struct NetTable {
    index: HashMap<String, usize>,
    names: Vec<String>,
    drivers: Vec<Option<Driver>>,
}

impl NetTable {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(name.to_string(), i);
        self.names.push(name.to_string());
        self.drivers.push(None);
        i
    }
}
