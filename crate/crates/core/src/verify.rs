// SPDX-License-Identifier: Apache-2.0

//! Equivalence checking of generated netlists against integer oracles.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::fftgen::{mask, reference_dft, ComplexWord, DftMode, FftError, FixedPointFormat};
use crate::netlist::{Netlist, NetlistError};
use crate::synth::product_prefix;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("port mismatch: {0}")]
    PortMismatch(String),
    #[error("exhaustive check over {0} input bits is too large")]
    TooManyCases(usize),
    #[error("random mode requires a seed")]
    MissingSeed,
    #[error("bad oracle `{0}`")]
    BadOracle(String),
    #[error("bad mode `{0}`")]
    BadMode(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Fft(#[from] FftError),
}

pub type Result<T> = std::result::Result<T, VerifyError>;

/// Largest input width checked exhaustively.
pub const MAX_EXHAUSTIVE_BITS: usize = 24;

/// A named group of ports read as one little-endian word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bus {
    pub name: String,
    pub bits: Vec<String>,
}

impl Bus {
    /// Ports `{prefix}0 .. {prefix}{width-1}`.
    pub fn word(prefix: &str, width: usize) -> Self {
        Self {
            name: prefix.trim_end_matches('_').to_string(),
            bits: (0..width).map(|i| format!("{prefix}{i}")).collect(),
        }
    }

    pub fn single(name: &str) -> Self {
        Self { name: name.to_string(), bits: vec![name.to_string()] }
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }
}

/// Bus positions within a netlist's port list.
#[derive(Debug, Clone)]
pub struct PortMap {
    buses: Vec<Bus>,
    index: Vec<Vec<usize>>,
}

impl PortMap {
    /// With `exact`, the buses must cover every port; otherwise extra
    /// ports are ignored.
    pub fn new(ports: &[String], buses: Vec<Bus>, exact: bool) -> Result<Self> {
        let pos: HashMap<&str, usize> = ports.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let mut index = Vec::with_capacity(buses.len());
        let mut used = 0;
        for bus in &buses {
            let ix = bus
                .bits
                .iter()
                .map(|b| {
                    pos.get(b.as_str()).copied().ok_or_else(|| VerifyError::PortMismatch(format!("missing port `{b}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            used += ix.len();
            index.push(ix);
        }
        if exact && used != ports.len() {
            return Err(VerifyError::PortMismatch(format!("netlist has {} ports, oracle expects {used}", ports.len())));
        }
        Ok(Self { buses, index })
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn total_bits(&self) -> usize {
        self.index.iter().map(Vec::len).sum()
    }

    pub fn encode_into(&self, values: &[u64], row: &mut [bool]) {
        for (ix, &v) in self.index.iter().zip(values) {
            for (bit, &p) in ix.iter().enumerate() {
                row[p] = v >> bit & 1 == 1;
            }
        }
    }

    pub fn decode(&self, row: &[bool]) -> Vec<u64> {
        self.index.iter().map(|ix| ix.iter().enumerate().map(|(bit, &p)| (row[p] as u64) << bit).sum()).collect()
    }

    /// Splits a flat case number into per-bus values, first bus lowest.
    pub fn split(&self, mut case: u64) -> Vec<u64> {
        self.buses
            .iter()
            .map(|b| {
                let v = case & mask(b.width() as u32);
                case >>= b.width();
                v
            })
            .collect()
    }

    fn named(&self, values: &[u64]) -> BTreeMap<String, u64> {
        self.buses.iter().map(|b| b.name.clone()).zip(values.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    /// `A + B + C0 -> S, Cout`.
    Add(usize),
    /// `A * B -> P` (or `S` at width 2).
    Mul(usize),
    Dft4(usize),
    Fft8(usize, FixedPointFormat),
}

impl FromStr for Oracle {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || VerifyError::BadOracle(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| parts.get(i).and_then(|p| p.parse::<usize>().ok()).filter(|&w| (1..=32).contains(&w));
        let w = num(1).ok_or_else(bad)?;
        match (parts[0], parts.len()) {
            ("add", 2) => Ok(Oracle::Add(w)),
            ("mul", 2) => Ok(Oracle::Mul(w)),
            ("dft4", 2) => Ok(Oracle::Dft4(w)),
            ("fft8", 2) => Ok(Oracle::Fft8(w, FixedPointFormat::default_for(w))),
            ("fft8", 3) => {
                let f = parts[2].parse::<u32>().map_err(|_| bad())?;
                Ok(Oracle::Fft8(w, FixedPointFormat::new(w as u32, f)?))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Oracle::Add(w) => write!(f, "add:{w}"),
            Oracle::Mul(w) => write!(f, "mul:{w}"),
            Oracle::Dft4(w) => write!(f, "dft4:{w}"),
            Oracle::Fft8(w, fmt) => write!(f, "fft8:{w}:{}", fmt.frac_bits),
        }
    }
}

fn complex_buses(dir: &str, points: usize, width: usize) -> Vec<Bus> {
    (0..points)
        .flat_map(|n| [Bus::word(&format!("{dir}{n}_re_"), width), Bus::word(&format!("{dir}{n}_im_"), width)])
        .collect()
}

impl Oracle {
    pub fn input_buses(&self) -> Vec<Bus> {
        match *self {
            Oracle::Add(w) => vec![Bus::word("A", w), Bus::word("B", w), Bus::single("C0")],
            Oracle::Mul(w) => vec![Bus::word("A", w), Bus::word("B", w)],
            Oracle::Dft4(w) => complex_buses("x", 4, w),
            Oracle::Fft8(w, _) => complex_buses("x", 8, w),
        }
    }

    pub fn output_buses(&self) -> Vec<Bus> {
        match *self {
            Oracle::Add(w) => vec![Bus::word("S", w), Bus::single("Cout")],
            Oracle::Mul(w) => vec![Bus::word(product_prefix(w), 2 * w)],
            Oracle::Dft4(w) => complex_buses("X", 4, w),
            Oracle::Fft8(w, _) => complex_buses("X", 8, w),
        }
    }

    /// Expected output bus values for one set of input bus values.
    pub fn expected(&self, inputs: &[u64]) -> Vec<u64> {
        match *self {
            Oracle::Add(w) => {
                let s = inputs[0] + inputs[1] + inputs[2];
                vec![s & mask(w as u32), s >> w]
            }
            Oracle::Mul(_) => vec![inputs[0] * inputs[1]],
            Oracle::Dft4(w) => dft_words(inputs, w as u32, DftMode::Exact),
            Oracle::Fft8(w, fmt) => dft_words(inputs, w as u32, DftMode::Quantized(fmt)),
        }
    }
}

fn dft_words(inputs: &[u64], width: u32, mode: DftMode) -> Vec<u64> {
    let x: Vec<ComplexWord> = inputs.chunks(2).map(|c| ComplexWord { re: c[0], im: c[1] }).collect();
    reference_dft(&x, width, mode)
        .expect("oracle widths validated at parse time")
        .into_iter()
        .flat_map(|c| [c.re, c.im])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exhaustive,
    Random(u64),
}

impl FromStr for Mode {
    type Err = VerifyError;
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "exhaustive" => Ok(Mode::Exhaustive),
            Some(("random", n)) => n.parse().map(Mode::Random).map_err(|_| VerifyError::BadMode(s.to_string())),
            _ => Err(VerifyError::BadMode(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub inputs: BTreeMap<String, u64>,
    pub expected: BTreeMap<String, u64>,
    pub got: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub oracle: String,
    pub cases: u64,
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
}

const CHUNK: u64 = 8192;

/// Checks `netlist` against `oracle` case by case and stops at the first
/// mismatch. Random cases draw every input bus uniformly from a ChaCha8
/// stream seeded with `seed`.
pub fn verify(netlist: &Netlist, oracle: Oracle, mode: Mode, seed: Option<u64>) -> Result<VerifyReport> {
    let ins = PortMap::new(&netlist.inputs, oracle.input_buses(), true)?;
    let outs = PortMap::new(&netlist.outputs, oracle.output_buses(), false)?;
    let compiled = netlist.compile()?;

    let (total, mut rng) = match mode {
        Mode::Exhaustive => {
            let bits = ins.total_bits();
            if bits > MAX_EXHAUSTIVE_BITS {
                return Err(VerifyError::TooManyCases(bits));
            }
            (1u64 << bits, None)
        }
        Mode::Random(n) => (n, Some(ChaCha8Rng::seed_from_u64(seed.ok_or(VerifyError::MissingSeed)?))),
    };

    let mut start = 0;
    while start < total {
        let n = CHUNK.min(total - start);
        let cases: Vec<Vec<u64>> = (start..start + n)
            .map(|c| match rng.as_mut() {
                None => ins.split(c),
                Some(r) => ins.buses().iter().map(|b| r.random::<u64>() & mask(b.width() as u32)).collect(),
            })
            .collect();
        let rows: Vec<Vec<bool>> = cases
            .iter()
            .map(|v| {
                let mut row = vec![false; netlist.inputs.len()];
                ins.encode_into(v, &mut row);
                row
            })
            .collect();
        let got = compiled.simulate(&rows)?;
        for (case, out) in cases.iter().zip(&got) {
            let expected = oracle.expected(case);
            let actual = outs.decode(out);
            if expected != actual {
                return Ok(VerifyReport {
                    oracle: oracle.to_string(),
                    cases: total,
                    passed: false,
                    counterexample: Some(Counterexample {
                        inputs: ins.named(case),
                        expected: outs.named(&expected),
                        got: outs.named(&actual),
                    }),
                });
            }
        }
        start += n;
    }
    Ok(VerifyReport { oracle: oracle.to_string(), cases: total, passed: true, counterexample: None })
}
