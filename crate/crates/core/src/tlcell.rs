// SPDX-License-Identifier: Apache-2.0

//! Single memristive threshold logic cell.
//!
//! A cell is a star of N memristors averaging the input voltages onto node
//! `V_A`, a comparator against `V_REF` (an op-amp saturating to symmetric
//! rails, or nothing for small cells) and an inverter restoring logic levels.
//! The same structure is a NOR when `V_REF` sits just above the all-low
//! average and a NAND when it sits just below the all-high average.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Memristance used for every device unless a caller supplies its own.
pub const DEFAULT_MEMRISTANCE: f64 = 1.0e6;

/// Largest fan-in `noise_margin` will enumerate.
pub const MAX_ENUMERATED_FAN_IN: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CellError {
    #[error("no input voltages given")]
    EmptyInputs,
    #[error("{voltages} voltages but {memristances} memristances")]
    LengthMismatch { voltages: usize, memristances: usize },
    #[error("memristance {0} is not positive")]
    NonPositiveMemristance(f64),
    #[error("fan-in must be at least 1")]
    InvalidFanIn,
    #[error("delta {delta} does not fit the {n_max}-input window of width {width}")]
    DeltaTooLarge { delta: f64, n_max: usize, width: f64 },
    #[error("cell expects {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("inverter threshold {v_th} lies outside the op-amp rails +/-{rail}")]
    RailMisconfigured { v_th: f64, rail: f64 },
    #[error("fan-in {0} is too large to enumerate")]
    FanInTooLarge(usize),
    #[error("v_ref {v_ref} outside the open window ({lo}, {hi})")]
    VrefOutsideWindow { v_ref: f64, lo: f64, hi: f64 },
    #[error("invalid voltage levels: low {v_low} must be below high {v_high}")]
    InvalidLevels { v_low: f64, v_high: f64 },
}

/// Logic-0 and logic-1 voltages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageLevels {
    v_low: f64,
    v_high: f64,
}

impl VoltageLevels {
    pub fn new(v_low: f64, v_high: f64) -> Result<Self, CellError> {
        // Also rejects NaN.
        if !(v_low < v_high) {
            return Err(CellError::InvalidLevels { v_low, v_high });
        }
        Ok(Self { v_low, v_high })
    }

    pub fn v_low(&self) -> f64 {
        self.v_low
    }

    pub fn v_high(&self) -> f64 {
        self.v_high
    }

    pub fn swing(&self) -> f64 {
        self.v_high - self.v_low
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.v_low + self.v_high)
    }

    pub fn voltage(&self, bit: bool) -> f64 {
        if bit {
            self.v_high
        } else {
            self.v_low
        }
    }
}

impl Default for VoltageLevels {
    /// 0 V / 1 V.
    fn default() -> Self {
        Self { v_low: 0.0, v_high: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Nor,
    Nand,
}

/// Open interval of legal reference voltages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn contains(&self, v: f64) -> bool {
        self.lo < v && v < self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Range of `V_REF` for which an N-input averaging cell implements `kind`.
///
/// NOR: `(V_L, ((N-1)V_L + V_H)/N)`, NAND: `(((N-1)V_H + V_L)/N, V_H)`.
pub fn threshold_window(kind: CellKind, fan_in: usize, levels: VoltageLevels) -> Result<Window, CellError> {
    if fan_in < 1 {
        return Err(CellError::InvalidFanIn);
    }
    let n = fan_in as f64;
    let (vl, vh) = (levels.v_low, levels.v_high);
    Ok(match kind {
        CellKind::Nor => Window { lo: vl, hi: ((n - 1.0) * vl + vh) / n },
        CellKind::Nand => Window { lo: ((n - 1.0) * vh + vl) / n, hi: vh },
    })
}

/// Fixed-reference policy: one `V_REF` offset `delta` from the rail serves
/// every fan-in up to `n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VrefPolicy {
    pub delta: f64,
    pub n_max: usize,
}

impl VrefPolicy {
    pub const DEFAULT_N_MAX: usize = 10;

    /// `delta = 0.05 * swing`, `n_max = 10`.
    pub fn for_levels(levels: VoltageLevels) -> Self {
        Self { delta: 0.05 * levels.swing(), n_max: Self::DEFAULT_N_MAX }
    }
}

impl Default for VrefPolicy {
    fn default() -> Self {
        Self::for_levels(VoltageLevels::default())
    }
}

pub fn select_vref(kind: CellKind, policy: VrefPolicy, levels: VoltageLevels) -> Result<f64, CellError> {
    if policy.n_max < 1 {
        return Err(CellError::InvalidFanIn);
    }
    let width = levels.swing() / policy.n_max as f64;
    if !(policy.delta > 0.0 && policy.delta < width) {
        return Err(CellError::DeltaTooLarge { delta: policy.delta, n_max: policy.n_max, width });
    }
    Ok(match kind {
        CellKind::Nor => levels.v_low + policy.delta,
        CellKind::Nand => levels.v_high - policy.delta,
    })
}

/// Conductance-weighted average of the input voltages.
///
/// With equal memristances this is the plain arithmetic mean.
pub fn weighted_average(voltages: &[f64], memristances: &[f64]) -> Result<f64, CellError> {
    if voltages.is_empty() {
        return Err(CellError::EmptyInputs);
    }
    if voltages.len() != memristances.len() {
        return Err(CellError::LengthMismatch { voltages: voltages.len(), memristances: memristances.len() });
    }
    if let Some(&m) = memristances.iter().find(|&&m| !(m > 0.0)) {
        return Err(CellError::NonPositiveMemristance(m));
    }
    let uniform = memristances.iter().all(|&m| m == memristances[0]);
    Ok(average_of(voltages.iter().copied(), memristances, uniform))
}

#[inline]
fn average_of(voltages: impl Iterator<Item = f64>, memristances: &[f64], uniform: bool) -> f64 {
    if uniform {
        let mut sum = 0.0;
        let mut n = 0usize;
        for v in voltages {
            sum += v;
            n += 1;
        }
        sum / n as f64
    } else {
        let mut num = 0.0;
        let mut den = 0.0;
        for (v, m) in voltages.zip(memristances) {
            let g = 1.0 / m;
            num += g * v;
            den += g;
        }
        num / den
    }
}

/// One MTL cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCell {
    kind: CellKind,
    memristances: Vec<f64>,
    v_ref: f64,
    has_opamp: bool,
    uniform: bool,
}

impl ThresholdCell {
    /// Builds a cell whose reference is checked against the window for `levels`.
    pub fn new(
        kind: CellKind,
        memristances: Vec<f64>,
        v_ref: f64,
        has_opamp: bool,
        levels: VoltageLevels,
    ) -> Result<Self, CellError> {
        let cell = Self::unchecked(kind, memristances, v_ref, has_opamp)?;
        let w = threshold_window(kind, cell.fan_in(), levels)?;
        if !w.contains(v_ref) {
            return Err(CellError::VrefOutsideWindow { v_ref, lo: w.lo, hi: w.hi });
        }
        Ok(cell)
    }

    /// Equal default memristances.
    pub fn with_fan_in(
        kind: CellKind,
        fan_in: usize,
        v_ref: f64,
        has_opamp: bool,
        levels: VoltageLevels,
    ) -> Result<Self, CellError> {
        Self::new(kind, vec![DEFAULT_MEMRISTANCE; fan_in], v_ref, has_opamp, levels)
    }

    /// Skips the window check; used when sweeping references across the
    /// whole swing. Memristances are still validated.
    pub fn unchecked(kind: CellKind, memristances: Vec<f64>, v_ref: f64, has_opamp: bool) -> Result<Self, CellError> {
        if memristances.is_empty() {
            return Err(CellError::InvalidFanIn);
        }
        if let Some(&m) = memristances.iter().find(|&&m| !(m > 0.0)) {
            return Err(CellError::NonPositiveMemristance(m));
        }
        let uniform = memristances.iter().all(|&m| m == memristances[0]);
        Ok(Self { kind, memristances, v_ref, has_opamp, uniform })
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn fan_in(&self) -> usize {
        self.memristances.len()
    }

    pub fn memristances(&self) -> &[f64] {
        &self.memristances
    }

    pub fn v_ref(&self) -> f64 {
        self.v_ref
    }

    pub fn has_opamp(&self) -> bool {
        self.has_opamp
    }

    /// Same cell with every memristance scaled by the matching factor.
    pub fn with_scaled_memristances(&self, factors: &[f64]) -> Result<Self, CellError> {
        if factors.len() != self.fan_in() {
            return Err(CellError::LengthMismatch { voltages: factors.len(), memristances: self.fan_in() });
        }
        let m = self.memristances.iter().zip(factors).map(|(m, f)| m * f).collect();
        Self::unchecked(self.kind, m, self.v_ref, self.has_opamp)
    }

    fn check_arity(&self, got: usize) -> Result<(), CellError> {
        if got != self.fan_in() {
            return Err(CellError::ArityMismatch { expected: self.fan_in(), got });
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn average(&self, voltages: impl Iterator<Item = f64>) -> f64 {
        average_of(voltages, &self.memristances, self.uniform)
    }

    /// Boolean evaluation: HIGH iff `V_A <= V_REF`.
    pub fn evaluate(&self, inputs: &[bool], levels: VoltageLevels) -> Result<bool, CellError> {
        self.check_arity(inputs.len())?;
        Ok(self.evaluate_unchecked(inputs, levels))
    }

    #[inline]
    pub(crate) fn evaluate_unchecked(&self, inputs: &[bool], levels: VoltageLevels) -> bool {
        self.average(inputs.iter().map(|&b| levels.voltage(b))) <= self.v_ref
    }

    /// Voltage-level evaluation through comparator and inverter.
    pub fn analog_evaluate(
        &self,
        voltages: &[f64],
        config: &AnalogConfig,
        levels: VoltageLevels,
    ) -> Result<CellTrace, CellError> {
        self.check_arity(voltages.len())?;
        config.validate()?;
        Ok(self.analog_evaluate_shifted(voltages, config, levels, 0.0))
    }

    /// `vth_shift` moves this cell's switching threshold: the inverter
    /// threshold behind an op-amp, or the reference itself otherwise.
    pub(crate) fn analog_evaluate_shifted(
        &self,
        voltages: &[f64],
        config: &AnalogConfig,
        levels: VoltageLevels,
        vth_shift: f64,
    ) -> CellTrace {
        let v_a = self.average(voltages.iter().copied());
        let (comparator_out, inverter_vth) = if self.has_opamp {
            let c = if v_a > self.v_ref { config.opamp_rail } else { -config.opamp_rail };
            (c, config.v_th + vth_shift)
        } else {
            // Without an op-amp the inverter itself is sized to switch at V_REF.
            (v_a, self.v_ref + vth_shift)
        };
        let v_out = if comparator_out <= inverter_vth { levels.v_high } else { levels.v_low };
        CellTrace { v_a, comparator_out, v_out, logic_out: v_out >= levels.midpoint() }
    }

    /// Smallest distance between `V_REF` and the averaged voltage of any
    /// nominal input row.
    pub fn noise_margin(&self, levels: VoltageLevels) -> Result<f64, CellError> {
        let n = self.fan_in();
        if n > MAX_ENUMERATED_FAN_IN {
            return Err(CellError::FanInTooLarge(n));
        }
        let mut margin = f64::INFINITY;
        for row in 0u32..(1u32 << n) {
            let v_a = self.average((0..n).map(|i| levels.voltage(row >> i & 1 == 1)));
            margin = margin.min((v_a - self.v_ref).abs());
        }
        Ok(margin)
    }
}

/// Comparator/inverter parameters for analog evaluation.
///
/// Ties at `V_A == V_REF` always resolve with the comparator LOW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalogConfig {
    /// Inverter switching threshold behind an op-amp.
    pub v_th: f64,
    /// Op-amp saturation magnitude.
    pub opamp_rail: f64,
}

impl AnalogConfig {
    pub fn validate(&self) -> Result<(), CellError> {
        if !(self.opamp_rail > 0.0 && self.v_th.abs() < self.opamp_rail) {
            return Err(CellError::RailMisconfigured { v_th: self.v_th, rail: self.opamp_rail });
        }
        Ok(())
    }
}

impl Default for AnalogConfig {
    /// Rails at +/-1 V, inverter centred between them.
    fn default() -> Self {
        Self { v_th: 0.0, opamp_rail: 1.0 }
    }
}

/// Internal voltages of one analog evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellTrace {
    pub v_a: f64,
    pub comparator_out: f64,
    pub v_out: f64,
    pub logic_out: bool,
}
