// SPDX-License-Identifier: Apache-2.0

//! Memristive threshold logic: cell model, netlists and simulation,
//! circuit generators, and cost estimation.

// Negated float comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod fftgen;
pub mod netlist;
pub mod synth;
pub mod tlcell;
pub mod verify;

pub use cost::{CalibKey, CalibrationTable, Corner, CostReport, DelayModel};
pub use fftgen::{ComplexWord, DftMode, FixedPointFormat, SignPattern};
pub use netlist::{CellInstance, Compiled, InstanceKind, Netlist, NetlistError, VariabilitySpec};
pub use synth::{GateKind, Synth};
pub use tlcell::{AnalogConfig, CellKind, ThresholdCell, VoltageLevels, VrefPolicy};
