// SPDX-License-Identifier: Apache-2.0

//! Boolean, analog and Monte Carlo simulation over a levelized netlist.
//!
//! Simulation is zero-delay: instances are evaluated once per vector in
//! level order. In the analog simulator each cell drives its restored output
//! voltage onto the next stage, so variability enters only at the primary
//! inputs (signal noise) and in the cells themselves (memristance spread and
//! switching-threshold shift, both fixed for a whole trial).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Compiled, NetlistError, Result, HIGH_IDX, LOW_IDX};
use crate::tlcell::{AnalogConfig, CellTrace, ThresholdCell};

/// Per-net sample sequences, indexed `[net][vector]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    pub nets: Vec<String>,
    pub samples: Vec<Vec<T>>,
}

impl<T> Waveform<T> {
    pub fn net(&self, name: &str) -> Option<&[T]> {
        self.nets.iter().position(|n| n == name).map(|i| self.samples[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariabilitySpec {
    /// Uniform input noise amplitude as a fraction of the logic swing.
    pub input_noise: f64,
    /// Uniform relative memristance spread, sampled per device per trial.
    pub mem_tolerance: f64,
    /// Uniform switching-threshold shift in volts, sampled per cell per trial.
    pub vth_shift: f64,
    pub seed: u64,
}

impl VariabilitySpec {
    pub fn nominal(seed: u64) -> Self {
        Self { input_noise: 0.0, mem_tolerance: 0.0, vth_shift: 0.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.input_noise >= 0.0) {
            return Err(NetlistError::InvalidVariability("input noise must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.mem_tolerance) {
            return Err(NetlistError::InvalidVariability("memristance tolerance must be in [0, 1)"));
        }
        if !(self.vth_shift >= 0.0) {
            return Err(NetlistError::InvalidVariability("threshold shift must be >= 0"));
        }
        Ok(())
    }

    /// Random stream for one trial; depends only on `(seed, trial)`.
    fn trial_rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }
}

/// Result of one analog trial.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogRun {
    /// Output voltages, one row per input row.
    pub outputs: Vec<Vec<f64>>,
    /// Outputs read as logic values against the level midpoint.
    pub logic: Vec<Vec<bool>>,
    /// Per input row, one trace per instance in netlist order.
    pub traces: Option<Vec<Vec<CellTrace>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub trials: u64,
    pub errors: u64,
    pub error_rate: f64,
}

/// Cells as perturbed for one trial.
struct TrialCells {
    cells: Vec<ThresholdCell>,
    shifts: Vec<f64>,
}

impl Compiled {
    fn check_width(&self, got: usize) -> Result<()> {
        if got != self.inputs.len() {
            return Err(NetlistError::WidthMismatch { expected: self.inputs.len(), got });
        }
        Ok(())
    }

    #[inline]
    fn run_bool(&self, row: &[bool], values: &mut [bool], scratch: &mut Vec<bool>) {
        values[LOW_IDX] = false;
        values[HIGH_IDX] = true;
        for (&net, &b) in self.inputs.iter().zip(row) {
            values[net] = b;
        }
        for &ci in &self.order {
            let node = &self.nodes[ci];
            scratch.clear();
            scratch.extend(node.inputs.iter().map(|&n| values[n]));
            values[node.output] = node.cell.evaluate_unchecked(scratch, self.levels);
        }
    }

    /// Evaluates every input row; returns one output row per input row.
    pub fn simulate(&self, vectors: &[Vec<bool>]) -> Result<Vec<Vec<bool>>> {
        for row in vectors {
            self.check_width(row.len())?;
        }
        let nets = self.net_names.len();
        Ok(vectors
            .par_iter()
            .map_init(
                || (vec![false; nets], Vec::new()),
                |(values, scratch), row| {
                    self.run_bool(row, values, scratch);
                    self.outputs.iter().map(|&n| values[n]).collect()
                },
            )
            .collect())
    }

    /// Like [`simulate`](Self::simulate) but records every net.
    pub fn simulate_waveform(&self, vectors: &[Vec<bool>]) -> Result<Waveform<bool>> {
        for row in vectors {
            self.check_width(row.len())?;
        }
        let nets = self.net_names.len();
        let mut samples = vec![Vec::with_capacity(vectors.len()); nets];
        let mut values = vec![false; nets];
        let mut scratch = Vec::new();
        for row in vectors {
            self.run_bool(row, &mut values, &mut scratch);
            for (s, &v) in samples.iter_mut().zip(&values) {
                s.push(v);
            }
        }
        Ok(Waveform { nets: self.net_names.clone(), samples })
    }

    fn sample_cells(&self, spec: &VariabilitySpec, rng: &mut ChaCha8Rng) -> TrialCells {
        let mut cells = Vec::with_capacity(self.nodes.len());
        let mut shifts = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let factors: Vec<f64> =
                (0..node.cell.fan_in()).map(|_| 1.0 + spec.mem_tolerance * (2.0 * rng.random::<f64>() - 1.0)).collect();
            shifts.push(spec.vth_shift * (2.0 * rng.random::<f64>() - 1.0));
            cells.push(
                node.cell.with_scaled_memristances(&factors).expect("factors in (0, 2) keep memristances positive"),
            );
        }
        TrialCells { cells, shifts }
    }

    fn run_analog(
        &self,
        trial: &TrialCells,
        row: &[f64],
        config: &AnalogConfig,
        values: &mut [f64],
        scratch: &mut Vec<f64>,
        mut traces: Option<&mut Vec<CellTrace>>,
    ) {
        values[LOW_IDX] = self.levels.v_low();
        values[HIGH_IDX] = self.levels.v_high();
        for (&net, &v) in self.inputs.iter().zip(row) {
            values[net] = v;
        }
        for &ci in &self.order {
            let node = &self.nodes[ci];
            scratch.clear();
            scratch.extend(node.inputs.iter().map(|&n| values[n]));
            let t = trial.cells[ci].analog_evaluate_shifted(scratch, config, self.levels, trial.shifts[ci]);
            values[node.output] = t.v_out;
            if let Some(tr) = traces.as_deref_mut() {
                tr[ci] = t;
            }
        }
    }

    /// One analog trial over `rows` of input voltages.
    ///
    /// Device variability is drawn once for the trial, then input noise per
    /// row and input, all from the stream for `(spec.seed, trial)`.
    pub fn simulate_analog(
        &self,
        rows: &[Vec<f64>],
        spec: &VariabilitySpec,
        config: &AnalogConfig,
        trial: u64,
        keep_traces: bool,
    ) -> Result<AnalogRun> {
        spec.validate()?;
        config.validate().map_err(|source| NetlistError::Cell { instance: "<analog config>".into(), source })?;
        for row in rows {
            self.check_width(row.len())?;
        }
        let mut rng = spec.trial_rng(trial);
        let cells = self.sample_cells(spec, &mut rng);
        let amp = spec.input_noise * self.levels.swing();
        let blank = CellTrace { v_a: 0.0, comparator_out: 0.0, v_out: 0.0, logic_out: false };

        let mut values = vec![0.0; self.net_names.len()];
        let mut scratch = Vec::new();
        let mut noisy = Vec::with_capacity(self.inputs.len());
        let mut outputs = Vec::with_capacity(rows.len());
        let mut all_traces = keep_traces.then(|| Vec::with_capacity(rows.len()));
        for row in rows {
            noisy.clear();
            noisy.extend(row.iter().map(|v| v + amp * (2.0 * rng.random::<f64>() - 1.0)));
            let mut tr = keep_traces.then(|| vec![blank; self.nodes.len()]);
            self.run_analog(&cells, &noisy, config, &mut values, &mut scratch, tr.as_mut());
            outputs.push(self.outputs.iter().map(|&n| values[n]).collect::<Vec<_>>());
            if let (Some(all), Some(tr)) = (all_traces.as_mut(), tr) {
                all.push(tr);
            }
        }
        let mid = self.levels.midpoint();
        let logic = outputs.iter().map(|r| r.iter().map(|&v| v >= mid).collect()).collect();
        Ok(AnalogRun { outputs, logic, traces: all_traces })
    }

    /// Counts trials in which any output bit of any reference vector differs
    /// from the nominal boolean simulation.
    pub fn monte_carlo(
        &self,
        spec: &VariabilitySpec,
        config: &AnalogConfig,
        trials: u64,
        reference: &[Vec<bool>],
    ) -> Result<McResult> {
        if trials < 1 {
            return Err(NetlistError::InvalidTrials);
        }
        let expected = self.simulate(reference)?;
        let rows: Vec<Vec<f64>> =
            reference.iter().map(|r| r.iter().map(|&b| self.levels.voltage(b)).collect()).collect();
        // Validate once so per-trial failures cannot occur below.
        self.simulate_analog(&[], spec, config, 0, false)?;

        let errors: u64 = (0..trials)
            .into_par_iter()
            .map(|t| {
                let run = self.simulate_analog(&rows, spec, config, t, false).expect("inputs validated above");
                u64::from(run.logic != expected)
            })
            .sum();
        Ok(McResult { trials, errors, error_rate: errors as f64 / trials as f64 })
    }
}
