// SPDX-License-Identifier: Apache-2.0

//! Cost models: per-cell calibration constants, transistor counts, delay
//! corners and temperature drift, aggregated over netlists.
//!
//! Per-cell constants are measured values for a 2-input cell. Circuit figures
//! are plain sums over instances, so they are model estimates, not
//! reproductions of measured circuit totals.

mod si;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{InstanceKind, Netlist, NetlistError};
use crate::synth::GateKind;

pub use si::{format_si, parse_si, Quantity, SiParseError};

#[derive(Debug, Error)]
pub enum CostError {
    #[error("no transistor model for {family} {gate:?}")]
    UnsupportedFamily { family: CalibKey, gate: GateKind },
    #[error("calibration has no {field} for {family}")]
    MissingCalibration { family: CalibKey, field: &'static str },
    #[error("need at least two reports to compare, got {0}")]
    TooFewReports(usize),
    #[error("unknown logic family `{0}`")]
    UnknownFamily(String),
    #[error("unknown process corner `{0}`")]
    UnknownCorner(String),
    #[error("invalid delay model: {0}")]
    InvalidDelay(&'static str),
    #[error("calibration value for {family} {field} must be positive")]
    NonPositive { family: CalibKey, field: &'static str },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("malformed calibration JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CostError>;

/// Logic family / cell variant a calibration row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CalibKey {
    #[serde(rename = "CMOS")]
    Cmos,
    #[serde(rename = "MTL_no_opamp")]
    MtlNoOpamp,
    #[serde(rename = "MTL_opamp")]
    MtlOpamp,
    #[serde(rename = "RTL_no_opamp")]
    RtlNoOpamp,
    #[serde(rename = "RTL_opamp")]
    RtlOpamp,
    #[serde(rename = "EEMTL")]
    Eemtl,
    #[serde(rename = "RTLG")]
    Rtlg,
}

impl CalibKey {
    pub const ALL: [CalibKey; 7] = [
        CalibKey::Cmos,
        CalibKey::MtlNoOpamp,
        CalibKey::MtlOpamp,
        CalibKey::RtlNoOpamp,
        CalibKey::RtlOpamp,
        CalibKey::Eemtl,
        CalibKey::Rtlg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CalibKey::Cmos => "CMOS",
            CalibKey::MtlNoOpamp => "MTL_no_opamp",
            CalibKey::MtlOpamp => "MTL_opamp",
            CalibKey::RtlNoOpamp => "RTL_no_opamp",
            CalibKey::RtlOpamp => "RTL_opamp",
            CalibKey::Eemtl => "EEMTL",
            CalibKey::Rtlg => "RTLG",
        }
    }

    /// Averaging-network families whose area grows by one memristor per input.
    fn is_memristive_divider(self) -> bool {
        matches!(self, CalibKey::MtlNoOpamp | CalibKey::MtlOpamp | CalibKey::RtlNoOpamp | CalibKey::RtlOpamp)
    }
}

impl fmt::Display for CalibKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CalibKey {
    type Err = CostError;
    fn from_str(s: &str) -> Result<Self> {
        CalibKey::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| CostError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Cell-level comparison against the resistor-threshold family.
    Comparison,
    /// Full 2-input characterization: area, power, leakage, energy.
    Characterization,
    /// Transistor inventory only.
    Inventory,
    User,
}

/// Measured 2-input cell figures for one family. Missing fields mean the
/// family was never characterized for that metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_um2: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_w: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leakage_w: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_j: Option<Quantity>,
    pub source: Source,
}

fn entry(area: Option<&str>, power: &str, leak: Option<&str>, energy: Option<&str>, source: Source) -> CalibEntry {
    let q = |s: &str| Quantity::parse(s).expect("built-in constant");
    CalibEntry {
        area_um2: area.map(q),
        power_w: Some(q(power)),
        leakage_w: leak.map(q),
        energy_j: energy.map(q),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    pub entries: BTreeMap<CalibKey, CalibEntry>,
    /// One 10 nm x 10 nm device.
    pub memristor_area_um2: f64,
    pub opamp_transistors: u32,
}

impl Default for CalibrationTable {
    /// 2-input NOR figures: area/power/leakage/energy per family, with the
    /// op-amp MTL power taken from the same table as its area.
    fn default() -> Self {
        use Source::*;
        let mut entries = BTreeMap::new();
        entries.insert(CalibKey::Cmos, entry(Some("9.4"), "28.6p", Some("16.32p"), Some("28.6z"), Characterization));
        entries.insert(
            CalibKey::MtlNoOpamp,
            entry(Some("4.55"), "3.00u", Some("14.30p"), Some("0.30p"), Characterization),
        );
        entries.insert(
            CalibKey::MtlOpamp,
            entry(Some("31.30"), "19.70u", Some("80.96p"), Some("1.09p"), Characterization),
        );
        entries.insert(CalibKey::RtlNoOpamp, entry(None, "8.30u", None, None, Comparison));
        entries.insert(CalibKey::RtlOpamp, entry(None, "19.70u", None, None, Comparison));
        Self { entries, memristor_area_um2: 1e-4, opamp_transistors: 8 }
    }
}

impl CalibrationTable {
    /// Default table with the op-amp MTL power replaced by the lower figure
    /// measured alongside the RTL comparison.
    pub fn with_alt_opamp_power() -> Self {
        let mut t = Self::default();
        let e = t.entries.get_mut(&CalibKey::MtlOpamp).expect("default entry");
        e.power_w = Some(Quantity::parse("16.61u").expect("constant"));
        e.source = Source::Comparison;
        t
    }

    /// Reads a JSON map `family -> {area_um2, power_w, leakage_w, energy_j, source}`.
    pub fn from_json(s: &str) -> Result<Self> {
        let entries: BTreeMap<CalibKey, CalibEntry> = serde_json::from_str(s)?;
        for (&family, e) in &entries {
            for (field, q) in [
                ("area_um2", &e.area_um2),
                ("power_w", &e.power_w),
                ("leakage_w", &e.leakage_w),
                ("energy_j", &e.energy_j),
            ] {
                if matches!(q, Some(q) if !(q.value() > 0.0)) {
                    return Err(CostError::NonPositive { family, field });
                }
            }
        }
        Ok(Self { entries, ..Self::default() })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("calibration serialization") + "\n"
    }

    fn field(&self, family: CalibKey, field: &'static str) -> Result<f64> {
        let e = self.entries.get(&family).ok_or(CostError::MissingCalibration { family, field })?;
        let q = match field {
            "area_um2" => &e.area_um2,
            "power_w" => &e.power_w,
            "leakage_w" => &e.leakage_w,
            _ => &e.energy_j,
        };
        q.as_ref().map(Quantity::value).ok_or(CostError::MissingCalibration { family, field })
    }
}

/// Transistors in one gate of `gate` kind for a family.
///
/// Threshold cells are an op-amp plus a 2-transistor inverter regardless of
/// fan-in; OR/AND add one more inverter. Static CMOS uses two transistors
/// per input plus two per output inversion.
pub fn transistor_count(family: CalibKey, gate: GateKind, fan_in: usize) -> Result<u64> {
    let n = fan_in as u64;
    let unsupported = || CostError::UnsupportedFamily { family, gate };
    let inverting = match gate {
        GateKind::Not | GateKind::Nor | GateKind::Nand => true,
        GateKind::Or | GateKind::And => false,
        GateKind::Xor => return Err(unsupported()),
    };
    let extra = if inverting { 0 } else { 2 };
    Ok(match family {
        CalibKey::MtlOpamp | CalibKey::RtlOpamp => 8 + 2 + extra,
        CalibKey::MtlNoOpamp | CalibKey::RtlNoOpamp => 2 + extra,
        CalibKey::Eemtl => 2 * n + 8,
        CalibKey::Rtlg => 24,
        CalibKey::Cmos => match gate {
            GateKind::Not => 2,
            _ => 2 * n + extra,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CellCost {
    pub area_um2: f64,
    pub power_w: f64,
    pub leakage_w: f64,
    pub energy_j: f64,
}

/// Cost of one N-input cell of a family.
///
/// Averaging-network cells add one memristor of area per input beyond the
/// calibrated two; CMOS area scales linearly with fan-in. Power, leakage and
/// energy are per-cell constants.
pub fn cell_cost(family: CalibKey, fan_in: usize, calib: &CalibrationTable) -> Result<CellCost> {
    let base = calib.field(family, "area_um2")?;
    let area_um2 = if family.is_memristive_divider() {
        base + (fan_in as f64 - 2.0) * calib.memristor_area_um2
    } else if family == CalibKey::Cmos {
        base * (fan_in as f64 / 2.0)
    } else {
        base
    };
    Ok(CellCost {
        area_um2,
        power_w: calib.field(family, "power_w")?,
        leakage_w: calib.field(family, "leakage_w")?,
        energy_j: calib.field(family, "energy_j")?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Corner {
    #[serde(rename = "SS")]
    SlowSlow,
    #[serde(rename = "FF")]
    FastFast,
    #[serde(rename = "SF")]
    SlowFast,
    #[serde(rename = "FS")]
    FastSlow,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::SlowSlow, Corner::FastFast, Corner::SlowFast, Corner::FastSlow];

    pub fn as_str(self) -> &'static str {
        match self {
            Corner::SlowSlow => "SS",
            Corner::FastFast => "FF",
            Corner::SlowFast => "SF",
            Corner::FastSlow => "FS",
        }
    }
}

impl FromStr for Corner {
    type Err = CostError;
    fn from_str(s: &str) -> Result<Self> {
        Corner::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| CostError::UnknownCorner(s.to_string()))
    }
}

/// Single-cell delay per process corner, in ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayModel {
    d1: [f64; 4],
}

impl DelayModel {
    pub fn new(ss: f64, ff: f64, sf: f64, fs: f64) -> Result<Self> {
        let d1 = [ss, ff, sf, fs];
        if d1.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(CostError::InvalidDelay("corner delays must be positive"));
        }
        Ok(Self { d1 })
    }

    pub fn d1(&self, corner: Corner) -> f64 {
        self.d1[corner as usize]
    }
}

impl Default for DelayModel {
    fn default() -> Self {
        Self { d1: [0.89, 0.23, 0.50, 0.52] }
    }
}

/// Linear power drift with temperature. No slope was ever measured, so the
/// default is flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureModel {
    pub reference_temp: f64,
    pub slope: f64,
}

impl Default for TemperatureModel {
    fn default() -> Self {
        Self { reference_temp: 27.0, slope: 0.0 }
    }
}

pub fn power_at_temperature(report: &CostReport, temp: f64, model: &TemperatureModel) -> f64 {
    (report.power_w + model.slope * (temp - model.reference_temp)).max(0.0)
}

/// Which calibration row each instance is costed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFamily {
    /// MTL, op-amp or plain variant per instance.
    Mtl,
    /// RTL, op-amp or plain variant per instance.
    Rtl,
    /// One row for every instance.
    Fixed(CalibKey),
}

impl ReportFamily {
    fn variant(self, has_opamp: bool) -> CalibKey {
        match (self, has_opamp) {
            (ReportFamily::Mtl, true) => CalibKey::MtlOpamp,
            (ReportFamily::Mtl, false) => CalibKey::MtlNoOpamp,
            (ReportFamily::Rtl, true) => CalibKey::RtlOpamp,
            (ReportFamily::Rtl, false) => CalibKey::RtlNoOpamp,
            (ReportFamily::Fixed(k), _) => k,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReportFamily::Mtl => "MTL",
            ReportFamily::Rtl => "RTL",
            ReportFamily::Fixed(k) => k.as_str(),
        }
    }
}

impl FromStr for ReportFamily {
    type Err = CostError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mtl" => Ok(ReportFamily::Mtl),
            "rtl" => Ok(ReportFamily::Rtl),
            _ => s.parse().map(ReportFamily::Fixed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CostReport {
    pub area_um2: f64,
    pub power_w: f64,
    pub leakage_w: f64,
    pub energy_j: f64,
    pub transistor_count: u64,
    pub memristor_count: u64,
    pub cell_count: u64,
    pub depth: u64,
    pub delay_ns: BTreeMap<Corner, f64>,
}

impl CostReport {
    /// Report for two disjoint circuits side by side: sums, with depth and
    /// delays taking the longer path.
    pub fn parallel(&self, other: &CostReport) -> CostReport {
        let mut delay_ns = self.delay_ns.clone();
        for (&c, &d) in &other.delay_ns {
            let e = delay_ns.entry(c).or_insert(0.0);
            *e = e.max(d);
        }
        CostReport {
            area_um2: self.area_um2 + other.area_um2,
            power_w: self.power_w + other.power_w,
            leakage_w: self.leakage_w + other.leakage_w,
            energy_j: self.energy_j + other.energy_j,
            transistor_count: self.transistor_count + other.transistor_count,
            memristor_count: self.memristor_count + other.memristor_count,
            cell_count: self.cell_count + other.cell_count,
            depth: self.depth.max(other.depth),
            delay_ns,
        }
    }

    fn metrics(&self) -> [(&'static str, f64); 8] {
        [
            ("area_um2", self.area_um2),
            ("power_w", self.power_w),
            ("leakage_w", self.leakage_w),
            ("energy_j", self.energy_j),
            ("transistor_count", self.transistor_count as f64),
            ("memristor_count", self.memristor_count as f64),
            ("cell_count", self.cell_count as f64),
            ("depth", self.depth as f64),
        ]
    }
}

fn instance_gate(kind: InstanceKind) -> GateKind {
    match kind {
        InstanceKind::Nor => GateKind::Nor,
        InstanceKind::Nand => GateKind::Nand,
        InstanceKind::Inv => GateKind::Not,
    }
}

pub fn report(
    netlist: &Netlist,
    family: ReportFamily,
    calib: &CalibrationTable,
    delay: &DelayModel,
) -> Result<CostReport> {
    let compiled = netlist.compile()?;
    let mut r = CostReport::default();
    for inst in &netlist.cells {
        let variant = family.variant(inst.has_opamp);
        let c = cell_cost(variant, inst.fan_in, calib)?;
        r.area_um2 += c.area_um2;
        r.power_w += c.power_w;
        r.leakage_w += c.leakage_w;
        r.energy_j += c.energy_j;
        r.transistor_count += transistor_count(variant, instance_gate(inst.kind), inst.fan_in)?;
        if variant != CalibKey::Cmos {
            r.memristor_count += inst.fan_in as u64;
        }
        r.cell_count += 1;
    }
    r.depth = compiled.depth() as u64;
    r.delay_ns = Corner::ALL.iter().map(|&c| (c, compiled.critical_delay(c, delay))).collect();
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricComparison {
    pub metric: &'static str,
    /// Report names, smallest value first.
    pub ranking: Vec<String>,
    /// Each report's value over the first report's.
    pub ratios: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline: String,
    pub metrics: Vec<MetricComparison>,
}

impl Comparison {
    pub fn metric(&self, name: &str) -> Option<&MetricComparison> {
        self.metrics.iter().find(|m| m.metric == name)
    }
}

pub fn compare(reports: &[(String, CostReport)]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(CostError::TooFewReports(reports.len()));
    }
    let base = reports[0].1.metrics();
    let metrics = (0..base.len())
        .map(|m| {
            let mut ranked: Vec<(f64, &str)> = reports.iter().map(|(n, r)| (r.metrics()[m].1, n.as_str())).collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
            let ratios = reports
                .iter()
                .map(|(n, r)| {
                    let (v, b) = (r.metrics()[m].1, base[m].1);
                    let ratio = if v == b { 1.0 } else { v / b };
                    (n.clone(), ratio)
                })
                .collect();
            MetricComparison {
                metric: base[m].0,
                ranking: ranked.into_iter().map(|(_, n)| n.to_string()).collect(),
                ratios,
            }
        })
        .collect();
    Ok(Comparison { baseline: reports[0].0.clone(), metrics })
}
