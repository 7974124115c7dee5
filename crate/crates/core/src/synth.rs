// SPDX-License-Identifier: Apache-2.0

//! Netlist generators built from threshold cells.
//!
//! Composite gates follow the usual threshold-logic recipes: OR and AND are
//! NOR/NAND cells followed by an inverter-configured cell, and XOR is
//! `NOR(NOR(a, b), AND(a, b))` (four cells). Cells with more than two inputs
//! get an op-amp comparator; one- and two-input cells do not.
//!
//! Larger blocks are assembled hierarchically. An instantiated block's cells
//! carry ids of the form `<type>#<n>/<inner id>`, so the block inventory of
//! any generated netlist can be recovered from its cell ids alone (see
//! [`block_counts`]).
//!
//! # Vedic multiplier wiring
//!
//! For `width = 2h`, operands split into halves `A = A_H·2^h + A_L` and
//! likewise for `B`. Four `h`-bit multipliers produce `M_LL = A_L·B_L`,
//! `M_HL = A_H·B_L`, `M_LH = A_L·B_H` and `M_HH = A_H·B_H` (each `width`
//! bits). Then:
//!
//! 1. CLA#1 (`width` bits): `T = M_HL + M_LH`, carry `t`.
//! 2. CLA#2 (`width` bits): `T + (M_HH[0..h) ∥ M_LL[h..2h))` gives product
//!    bits `[h, h + width)` and carry `c2`.
//! 3. Half adder: `t + c2 = 2·c + s`.
//! 4. CLA#3 (`h` bits): `M_HH[h..2h) + (c ∥ s)` gives the top `h` bits.
//!
//! Product bits `[0, h)` are `M_LL[0..h)` unchanged.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::netlist::{CellInstance, InstanceKind, Netlist, HIGH, LOW};
use crate::tlcell::{select_vref, CellError, CellKind, VoltageLevels, VrefPolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("{kind} does not support fan-in {fan_in}")]
    UnsupportedFanIn { kind: GateKind, fan_in: usize },
    #[error("invalid width {0}")]
    InvalidWidth(usize),
    #[error("width {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("width {0} is below the minimum of 2")]
    WidthTooSmall(usize),
    #[error("unknown gate kind `{0}`")]
    UnknownGate(String),
    #[error(transparent)]
    Cell(#[from] CellError),
}

pub type Result<T> = std::result::Result<T, SynthError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Not,
    Nor,
    Nand,
    Or,
    And,
    Xor,
}

impl GateKind {
    pub const ALL: [GateKind; 6] =
        [GateKind::Not, GateKind::Nor, GateKind::Nand, GateKind::Or, GateKind::And, GateKind::Xor];

    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::Not => "not",
            GateKind::Nor => "nor",
            GateKind::Nand => "nand",
            GateKind::Or => "or",
            GateKind::And => "and",
            GateKind::Xor => "xor",
        }
    }

    /// Boolean reference function.
    pub fn apply(self, inputs: &[bool]) -> bool {
        let any = inputs.iter().any(|&b| b);
        let all = inputs.iter().all(|&b| b);
        match self {
            GateKind::Not | GateKind::Nor => !any,
            GateKind::Nand => !all,
            GateKind::Or => any,
            GateKind::And => all,
            GateKind::Xor => inputs.iter().filter(|&&b| b).count() % 2 == 1,
        }
    }

    pub fn supports_fan_in(self, fan_in: usize, n_max: usize) -> bool {
        match self {
            GateKind::Not => fan_in == 1,
            GateKind::Xor => fan_in == 2,
            _ => (1..=n_max).contains(&fan_in),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateKind {
    type Err = SynthError;
    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SynthError::UnknownGate(s.to_string()))
    }
}

/// High and low halves of an even-width operand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperandSplit {
    pub high: u64,
    pub low: u64,
    pub half_width: u32,
}

impl OperandSplit {
    pub fn new(value: u64, width: u32) -> Result<Self> {
        if width == 0 || !width.is_multiple_of(2) || width > 64 {
            return Err(SynthError::InvalidWidth(width as usize));
        }
        let h = width / 2;
        let mask = (1u64 << h) - 1;
        Ok(Self { high: (value >> h) & mask, low: value & mask, half_width: h })
    }

    pub fn join(&self) -> u64 {
        (self.high << self.half_width) | self.low
    }
}

/// Incremental netlist construction with hierarchical instantiation.
pub struct Builder {
    name: String,
    inputs: Vec<String>,
    outputs: Vec<(String, String)>,
    cells: Vec<CellInstance>,
    nor_vref: f64,
    nand_vref: f64,
    n_max: usize,
    next_net: usize,
    next_cell: usize,
    instances: HashMap<String, usize>,
}

impl Builder {
    pub fn new(name: impl Into<String>, policy: VrefPolicy, levels: VoltageLevels) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            cells: Vec::new(),
            nor_vref: select_vref(CellKind::Nor, policy, levels)?,
            nand_vref: select_vref(CellKind::Nand, policy, levels)?,
            n_max: policy.n_max,
            next_net: 0,
            next_cell: 0,
            instances: HashMap::new(),
        })
    }

    pub fn input(&mut self, name: impl Into<String>) -> String {
        let name = name.into();
        self.inputs.push(name.clone());
        name
    }

    pub fn input_bus(&mut self, prefix: &str, width: usize) -> Vec<String> {
        (0..width).map(|i| self.input(format!("{prefix}{i}"))).collect()
    }

    pub fn output(&mut self, port: impl Into<String>, net: &str) {
        self.outputs.push((port.into(), net.to_string()));
    }

    pub fn output_bus(&mut self, prefix: &str, nets: &[String]) {
        for (i, n) in nets.iter().enumerate() {
            self.output(format!("{prefix}{i}"), n);
        }
    }

    fn fresh_net(&mut self) -> String {
        self.next_net += 1;
        format!("_{}", self.next_net - 1)
    }

    fn cell(&mut self, kind: InstanceKind, inputs: &[String]) -> Result<String> {
        let fan_in = inputs.len();
        let gate = match kind {
            InstanceKind::Nor => GateKind::Nor,
            InstanceKind::Nand => GateKind::Nand,
            InstanceKind::Inv => GateKind::Not,
        };
        if !gate.supports_fan_in(fan_in, self.n_max) {
            return Err(SynthError::UnsupportedFanIn { kind: gate, fan_in });
        }
        let v_ref = match kind {
            InstanceKind::Nand => self.nand_vref,
            _ => self.nor_vref,
        };
        let output = self.fresh_net();
        self.next_cell += 1;
        self.cells.push(CellInstance {
            id: format!("u{}", self.next_cell - 1),
            kind,
            fan_in,
            v_ref,
            has_opamp: fan_in > 2,
            inputs: inputs.to_vec(),
            output: output.clone(),
        });
        Ok(output)
    }

    pub fn inv(&mut self, a: &str) -> Result<String> {
        self.cell(InstanceKind::Inv, &[a.to_string()])
    }

    pub fn nor(&mut self, ins: &[String]) -> Result<String> {
        match ins {
            [a] => self.inv(a),
            _ => self.cell(InstanceKind::Nor, ins),
        }
    }

    pub fn nand(&mut self, ins: &[String]) -> Result<String> {
        match ins {
            [a] => self.inv(a),
            _ => self.cell(InstanceKind::Nand, ins),
        }
    }

    pub fn or(&mut self, ins: &[String]) -> Result<String> {
        let n = self.nor(ins)?;
        self.inv(&n)
    }

    pub fn and(&mut self, ins: &[String]) -> Result<String> {
        let n = self.nand(ins)?;
        self.inv(&n)
    }

    /// `NOR(NOR(a, b), AND(a, b))`.
    pub fn xor(&mut self, a: &str, b: &str) -> Result<String> {
        self.half_adder_cells(a, b).map(|(s, _)| s)
    }

    /// `(sum, carry)` with the AND shared between carry and XOR: 4 cells.
    fn half_adder_cells(&mut self, a: &str, b: &str) -> Result<(String, String)> {
        let ab = [a.to_string(), b.to_string()];
        let carry = self.and(&ab)?;
        let n = self.nor(&ab)?;
        let sum = self.nor(&[n, carry.clone()])?;
        Ok((sum, carry))
    }

    /// Copies `sub` into this netlist. `bind` maps every input port of
    /// `sub` to a net here; returns the nets its output ports landed on.
    pub fn instantiate(
        &mut self,
        block_type: &str,
        sub: &Netlist,
        bind: &HashMap<String, String>,
    ) -> HashMap<String, String> {
        let k = self.instances.entry(block_type.to_string()).or_insert(0);
        let inst = format!("{block_type}#{k}");
        *k += 1;
        let map = |net: &str| -> String {
            if let Some(n) = bind.get(net) {
                n.clone()
            } else if net == LOW || net == HIGH {
                net.to_string()
            } else {
                format!("{inst}/{net}")
            }
        };
        for port in &sub.inputs {
            assert!(bind.contains_key(port), "unbound port `{port}` of {block_type}");
        }
        for c in &sub.cells {
            self.cells.push(CellInstance {
                id: format!("{inst}/{}", c.id),
                kind: c.kind,
                fan_in: c.fan_in,
                v_ref: c.v_ref,
                has_opamp: c.has_opamp,
                inputs: c.inputs.iter().map(|n| map(n)).collect(),
                output: map(&c.output),
            });
        }
        sub.outputs.iter().map(|p| (p.clone(), map(p))).collect()
    }

    /// Output ports take over the names of the nets they read. A net that
    /// cannot be renamed (primary input, constant, or already exported)
    /// is brought out through a pair of inverters.
    pub fn finish(mut self) -> Result<Netlist> {
        let mut driven: BTreeSet<String> = self.cells.iter().map(|c| c.output.clone()).collect();
        let mut rename: HashMap<String, String> = HashMap::new();
        let outputs = std::mem::take(&mut self.outputs);
        for (port, net) in &outputs {
            if port == net {
                continue;
            }
            if driven.contains(net) && !rename.contains_key(net) {
                rename.insert(net.clone(), port.clone());
            } else {
                let src = rename.get(net).cloned().unwrap_or_else(|| net.clone());
                let n = self.inv(&src)?;
                let b = self.inv(&n)?;
                rename.insert(b, port.clone());
            }
        }
        driven.clear();
        for c in &mut self.cells {
            if let Some(r) = rename.get(&c.output) {
                c.output = r.clone();
            }
            for i in &mut c.inputs {
                if let Some(r) = rename.get(i) {
                    *i = r.clone();
                }
            }
        }
        Ok(Netlist {
            name: self.name,
            inputs: self.inputs,
            outputs: outputs.into_iter().map(|(p, _)| p).collect(),
            cells: self.cells,
        })
    }
}

pub(crate) fn bind_bus(bind: &mut HashMap<String, String>, prefix: &str, nets: &[String]) {
    for (i, n) in nets.iter().enumerate() {
        bind.insert(format!("{prefix}{i}"), n.clone());
    }
}

pub(crate) fn take_bus(outs: &HashMap<String, String>, prefix: &str, width: usize) -> Vec<String> {
    (0..width).map(|i| outs[&format!("{prefix}{i}")].clone()).collect()
}

/// Output bus name of `vedic(width)`: the 2-bit base block keeps its
/// `S0..S3` naming, wider multipliers use `P`.
pub fn product_prefix(width: usize) -> &'static str {
    if width == 2 {
        "S"
    } else {
        "P"
    }
}

/// Generator parameters shared by every block of one design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synth {
    pub policy: VrefPolicy,
    pub levels: VoltageLevels,
}

impl Default for Synth {
    fn default() -> Self {
        let levels = VoltageLevels::default();
        Self { policy: VrefPolicy::for_levels(levels), levels }
    }
}

impl Synth {
    pub fn new(policy: VrefPolicy, levels: VoltageLevels) -> Result<Self> {
        select_vref(CellKind::Nor, policy, levels)?;
        Ok(Self { policy, levels })
    }

    pub fn builder(&self, name: impl Into<String>) -> Builder {
        Builder::new(name, self.policy, self.levels).expect("policy validated in Synth::new")
    }

    /// One gate over inputs `A0..A{n-1}` with output `Y`.
    pub fn gate(&self, kind: GateKind, fan_in: usize) -> Result<Netlist> {
        if !kind.supports_fan_in(fan_in, self.policy.n_max) {
            return Err(SynthError::UnsupportedFanIn { kind, fan_in });
        }
        let mut b = self.builder(format!("{kind}{fan_in}"));
        let ins = b.input_bus("A", fan_in);
        let y = match kind {
            GateKind::Not => b.inv(&ins[0])?,
            GateKind::Nor => b.nor(&ins)?,
            GateKind::Nand => b.nand(&ins)?,
            GateKind::Or => b.or(&ins)?,
            GateKind::And => b.and(&ins)?,
            GateKind::Xor => b.xor(&ins[0], &ins[1])?,
        };
        b.output("Y", &y);
        b.finish()
    }

    /// `a, b -> sum, carry`.
    pub fn half_adder(&self) -> Result<Netlist> {
        let mut b = self.builder("half_adder");
        let (x, y) = (b.input("a"), b.input("b"));
        let (s, c) = b.half_adder_cells(&x, &y)?;
        b.output("sum", &s);
        b.output("carry", &c);
        b.finish()
    }

    /// `a, b, cin -> sum, cout`: two half adders and an OR.
    pub fn full_adder(&self) -> Result<Netlist> {
        let mut b = self.builder("full_adder");
        let (x, y, cin) = (b.input("a"), b.input("b"), b.input("cin"));
        let (s1, c1) = b.half_adder_cells(&x, &y)?;
        let (s, c2) = b.half_adder_cells(&s1, &cin)?;
        let cout = b.or(&[c1, c2])?;
        b.output("sum", &s);
        b.output("cout", &cout);
        b.finish()
    }

    /// Carry-lookahead adder `A + B + C0 -> S, Cout` in 4-bit groups.
    ///
    /// Within a group, carry `c[i+1] = g[i] + p[i]g[i-1] + ... + p[i]..p[0]c0`
    /// is a NAND of NANDs (fan-in at most 5); groups chain their carries.
    pub fn cla(&self, width: usize) -> Result<Netlist> {
        const GROUP: usize = 4;
        if width < 1 {
            return Err(SynthError::InvalidWidth(width));
        }
        let mut b = self.builder(format!("cla{width}"));
        let a = b.input_bus("A", width);
        let bb = b.input_bus("B", width);
        let c0 = b.input("C0");

        let mut ng = Vec::with_capacity(width);
        let mut g = Vec::with_capacity(width);
        let mut p = Vec::with_capacity(width);
        for i in 0..width {
            let ab = [a[i].clone(), bb[i].clone()];
            let n = b.nand(&ab)?;
            let gi = b.inv(&n)?;
            let or_n = b.nor(&ab)?;
            p.push(b.nor(&[or_n, gi.clone()])?);
            ng.push(n);
            g.push(gi);
        }

        let mut carry = vec![c0];
        for base in (0..width).step_by(GROUP) {
            let cin = carry[base].clone();
            let len = GROUP.min(width - base);
            for k in 0..len {
                let mut terms = Vec::with_capacity(k + 2);
                for j in (0..=k).rev() {
                    let i = base + j;
                    if j == k {
                        terms.push(ng[i].clone());
                    } else {
                        let mut lits = vec![g[i].clone()];
                        lits.extend(p[i + 1..=base + k].iter().cloned());
                        terms.push(b.nand(&lits)?);
                    }
                }
                let mut lits = vec![cin.clone()];
                lits.extend(p[base..=base + k].iter().cloned());
                terms.push(b.nand(&lits)?);
                carry.push(b.nand(&terms)?);
            }
        }

        let sum: Vec<String> = (0..width).map(|i| b.xor(&p[i], &carry[i])).collect::<Result<_>>()?;
        b.output_bus("S", &sum);
        b.output("Cout", &carry[width]);
        b.finish()
    }

    /// Bitwise NOT, `A{i} -> Y{i}`.
    pub fn complement_unit(&self, width: usize) -> Result<Netlist> {
        if width < 1 {
            return Err(SynthError::InvalidWidth(width));
        }
        let mut b = self.builder(format!("cmp{width}"));
        let a = b.input_bus("A", width);
        let y: Vec<String> = a.iter().map(|x| b.inv(x)).collect::<Result<_>>()?;
        b.output_bus("Y", &y);
        b.finish()
    }

    /// 2-bit vertical-and-crosswise multiplier, `A[2] x B[2] -> S[4]`.
    pub fn vedic2(&self) -> Result<Netlist> {
        let mut b = self.builder("vedic2");
        let a = b.input_bus("A", 2);
        let x = b.input_bus("B", 2);
        let ha = self.half_adder()?;

        let s0 = b.and(&[a[0].clone(), x[0].clone()])?;
        let cross1 = b.and(&[a[1].clone(), x[0].clone()])?;
        let cross2 = b.and(&[a[0].clone(), x[1].clone()])?;
        let top = b.and(&[a[1].clone(), x[1].clone()])?;

        let o1 = b.instantiate("ha", &ha, &[("a", cross1), ("b", cross2)].map(own).into());
        let o2 = b.instantiate("ha", &ha, &[("a", top), ("b", o1["carry"].clone())].map(own).into());
        b.output("S0", &s0);
        b.output("S1", &o1["sum"]);
        b.output("S2", &o2["sum"]);
        b.output("S3", &o2["carry"]);
        b.finish()
    }

    /// Recursive `width`-bit multiplier, `A x B -> P[2·width]`.
    pub fn vedic(&self, width: usize) -> Result<Netlist> {
        if width < 2 {
            return Err(SynthError::WidthTooSmall(width));
        }
        if !width.is_power_of_two() {
            return Err(SynthError::NotPowerOfTwo(width));
        }
        if width == 2 {
            return self.vedic2();
        }
        let h = width / 2;
        let sub = self.vedic(h)?;
        let sub_type = format!("vedic{h}");
        let sub_out = product_prefix(h);
        let cla_w = self.cla(width)?;
        let cla_h = self.cla(h)?;
        let ha = self.half_adder()?;

        let mut b = self.builder(format!("vedic{width}"));
        let a = b.input_bus("A", width);
        let x = b.input_bus("B", width);
        let (al, ah) = a.split_at(h);
        let (xl, xh) = x.split_at(h);

        let mul = |b: &mut Builder, p: &[String], q: &[String]| {
            let mut bind = HashMap::new();
            bind_bus(&mut bind, "A", p);
            bind_bus(&mut bind, "B", q);
            let o = b.instantiate(&sub_type, &sub, &bind);
            take_bus(&o, sub_out, width)
        };
        let m_ll = mul(&mut b, al, xl);
        let m_hl = mul(&mut b, ah, xl);
        let m_lh = mul(&mut b, al, xh);
        let m_hh = mul(&mut b, ah, xh);

        let cla_type = format!("cla{width}");
        let add = |b: &mut Builder, cla: &Netlist, ty: &str, p: &[String], q: &[String]| {
            let mut bind = HashMap::new();
            bind_bus(&mut bind, "A", p);
            bind_bus(&mut bind, "B", q);
            bind.insert("C0".to_string(), LOW.to_string());
            let o = b.instantiate(ty, cla, &bind);
            (take_bus(&o, "S", p.len()), o["Cout"].clone())
        };

        let (t, t_carry) = add(&mut b, &cla_w, &cla_type, &m_hl, &m_lh);
        let q: Vec<String> = m_ll[h..].iter().chain(&m_hh[..h]).cloned().collect();
        let (mid, c2) = add(&mut b, &cla_w, &cla_type, &t, &q);
        let hao = b.instantiate("ha", &ha, &[("a", t_carry), ("b", c2)].map(own).into());
        let mut inc = vec![hao["sum"].clone(), hao["carry"].clone()];
        inc.resize(h, LOW.to_string());
        let (top, _) = add(&mut b, &cla_h, &format!("cla{h}"), &m_hh[h..], &inc);

        let product: Vec<String> = m_ll[..h].iter().chain(&mid).chain(&top).cloned().collect();
        b.output_bus("P", &product);
        b.finish()
    }
}

fn own((k, v): (&str, String)) -> (String, String) {
    (k.to_string(), v)
}

pub fn gate(kind: GateKind, fan_in: usize, policy: VrefPolicy, levels: VoltageLevels) -> Result<Netlist> {
    Synth::new(policy, levels)?.gate(kind, fan_in)
}

pub fn half_adder() -> Result<Netlist> {
    Synth::default().half_adder()
}

pub fn full_adder() -> Result<Netlist> {
    Synth::default().full_adder()
}

pub fn cla(width: usize) -> Result<Netlist> {
    Synth::default().cla(width)
}

pub fn complement_unit(width: usize) -> Result<Netlist> {
    Synth::default().complement_unit(width)
}

pub fn vedic2() -> Result<Netlist> {
    Synth::default().vedic2()
}

pub fn vedic(width: usize) -> Result<Netlist> {
    Synth::default().vedic(width)
}

/// A lone cell with an explicit reference, ports `A0..` and `Y`.
pub fn single_cell(kind: CellKind, fan_in: usize, v_ref: f64, has_opamp: bool) -> Netlist {
    let inputs: Vec<String> = (0..fan_in).map(|i| format!("A{i}")).collect();
    Netlist {
        name: format!("{}{fan_in}", if kind == CellKind::Nor { "nor" } else { "nand" }),
        cells: vec![CellInstance {
            id: "u0".into(),
            kind: if kind == CellKind::Nor { InstanceKind::Nor } else { InstanceKind::Nand },
            fan_in,
            v_ref,
            has_opamp,
            inputs: inputs.clone(),
            output: "Y".into(),
        }],
        inputs,
        outputs: vec!["Y".into()],
    }
}

/// Instantiated blocks by type, counted at every level of the hierarchy.
pub fn block_counts(netlist: &Netlist) -> BTreeMap<String, usize> {
    let mut paths = BTreeSet::new();
    for c in &netlist.cells {
        let segs: Vec<&str> = c.id.split('/').collect();
        for end in 1..segs.len() {
            paths.insert(segs[..end].join("/"));
        }
    }
    count_types(paths.iter().map(|p| p.rsplit('/').next().unwrap_or(p)))
}

/// Blocks instantiated directly at the top level, by type.
pub fn top_blocks(netlist: &Netlist) -> BTreeMap<String, usize> {
    let insts: BTreeSet<&str> = netlist.cells.iter().filter_map(|c| c.id.split_once('/').map(|(i, _)| i)).collect();
    count_types(insts.into_iter())
}

fn count_types<'a>(names: impl Iterator<Item = &'a str>) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for n in names {
        let ty = n.split_once('#').map_or(n, |(t, _)| t);
        *out.entry(ty.to_string()).or_insert(0) += 1;
    }
    out
}
