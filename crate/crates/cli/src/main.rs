// SPDX-License-Identifier: Apache-2.0

//! `mtl`: generate, simulate, verify and cost threshold-logic netlists.
//!
//! Exit codes: 0 success, 1 usage, 2 validation or generation failure,
//! 3 verification mismatch.

// Negated float comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod vectors;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "mtl", version, about = "Memristive threshold logic toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a netlist: gate:<kind>:<n> | cla:<w> | vedic:<w> | dft4:<w> | fft8:<w>[:frac]
    Synth(SynthArgs),
    /// Boolean simulation, one CSV row per input vector
    Sim(SimArgs),
    /// Analog simulation of one trial
    Analog(AnalogArgs),
    /// Monte Carlo error rate under variability
    Mc(McArgs),
    /// Check a netlist against an arithmetic oracle
    Verify(VerifyArgs),
    /// Area, power, leakage, transistor and delay report
    Cost(CostArgs),
    /// Sweep the reference voltage of one cell
    Sweep(SweepArgs),
    /// Write a netlist as DOT or JSON
    Export(ExportArgs),
    /// Print the built-in calibration table
    CalibDump(CalibDumpArgs),
}

#[derive(Args)]
pub struct SynthArgs {
    pub target: String,
    #[arg(long)]
    pub out: Option<String>,
    /// Explicit reference voltage for a single nor/nand cell
    #[arg(long)]
    pub vref: Option<f64>,
    /// Force an op-amp comparator on a single nor/nand cell
    #[arg(long)]
    pub opamp: bool,
}

#[derive(Args)]
pub struct VectorArgs {
    /// CSV with a header of input port names and one 0/1 row per vector
    #[arg(long, conflicts_with = "exhaustive")]
    pub vectors: Option<String>,
    /// All 2^n input combinations
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Args)]
pub struct SimArgs {
    pub netlist: String,
    #[command(flatten)]
    pub input: VectorArgs,
    /// Emit every net, not just ports
    #[arg(long)]
    pub all_nets: bool,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct VariabilityArgs {
    /// Input noise amplitude as a fraction of the swing
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Relative memristance tolerance
    #[arg(long, default_value_t = 0.0)]
    pub mem_tol: f64,
    /// Inverter threshold shift in volts
    #[arg(long, default_value_t = 0.0)]
    pub vth_shift: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Inverter switching threshold of op-amp cells
    #[arg(long, default_value_t = 0.0)]
    pub v_th: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rail: f64,
}

#[derive(Args)]
pub struct AnalogArgs {
    pub netlist: String,
    #[command(flatten)]
    pub input: VectorArgs,
    #[command(flatten)]
    pub var: VariabilityArgs,
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
    /// Per-cell averaging, comparator and output voltages
    #[arg(long)]
    pub traces: bool,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct McArgs {
    pub netlist: String,
    #[command(flatten)]
    pub input: VectorArgs,
    #[command(flatten)]
    pub var: VariabilityArgs,
    #[arg(long)]
    pub trials: u64,
}

#[derive(Args)]
pub struct VerifyArgs {
    pub netlist: String,
    /// add:<w> | mul:<w> | dft4:<w> | fft8:<w>[:frac]
    #[arg(long)]
    pub oracle: String,
    /// exhaustive | random:<count>
    #[arg(long, default_value = "exhaustive")]
    pub mode: String,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct CostArgs {
    pub netlist: String,
    /// MTL, RTL, CMOS, or a calibration row such as MTL_no_opamp; repeat to compare
    #[arg(long = "family", default_value = "MTL")]
    pub families: Vec<String>,
    #[arg(long)]
    pub calib: Option<String>,
    #[arg(long, default_value = "SS")]
    pub corner: String,
    /// Use the lower op-amp MTL power figure
    #[arg(long)]
    pub alt_opamp_power: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct SweepArgs {
    /// <nor|nand>:<fan-in>
    pub gate: String,
    /// from,to,step in volts
    #[arg(long, allow_hyphen_values = true)]
    pub vref: String,
    #[arg(long)]
    pub opamp: bool,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ExportFormat {
    Dot,
    Json,
}

#[derive(Args)]
pub struct ExportArgs {
    pub netlist: String,
    #[arg(long, value_enum)]
    pub format: ExportFormat,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct CalibDumpArgs {
    #[arg(long)]
    pub alt_opamp_power: bool,
    #[arg(long)]
    pub out: Option<String>,
}

/// Failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Invalid(String),
    Mismatch(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Mismatch(_) => 3,
        }
    }
}

pub fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

pub fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Sim(a) => commands::sim(a),
        Command::Analog(a) => commands::analog(a),
        Command::Mc(a) => commands::mc(a),
        Command::Verify(a) => commands::verify(a),
        Command::Cost(a) => commands::cost(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Export(a) => commands::export(a),
        Command::CalibDump(a) => commands::calib_dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(m) | CliError::Invalid(m) | CliError::Mismatch(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
