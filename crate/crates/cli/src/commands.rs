// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use mtl_core::cost::{self, format_si, CalibrationTable, Corner, CostReport, DelayModel, ReportFamily};
use mtl_core::fftgen::{FftError, FixedPointFormat};
use mtl_core::synth::{single_cell, GateKind, Synth, SynthError};
use mtl_core::tlcell::{select_vref, threshold_window, CellKind, ThresholdCell, DEFAULT_MEMRISTANCE};
use mtl_core::verify::{self, Mode, Oracle, VerifyError};
use mtl_core::{AnalogConfig, Netlist, VariabilitySpec, VoltageLevels, VrefPolicy};
use serde::Serialize;

use crate::vectors::{self, bit, emit};
use crate::{
    invalid, usage, AnalogArgs, CalibDumpArgs, CliError, CostArgs, ExportArgs, ExportFormat, McArgs, SimArgs,
    SweepArgs, SynthArgs, VariabilityArgs, VerifyArgs,
};

fn load(path: &str) -> Result<Netlist, CliError> {
    let nl = Netlist::load(path).map_err(|e| invalid(format!("{path}: {e}")))?;
    nl.compile().map_err(|e| invalid(format!("{path}: {e}")))?;
    Ok(nl)
}

fn parse_width(s: &str) -> Result<usize, CliError> {
    s.parse().map_err(|_| usage(format!("bad width `{s}`")))
}

enum Target {
    Gate(GateKind, usize),
    Cla(usize),
    Vedic(usize),
    Dft4(usize),
    Fft8(usize, Option<u32>),
}

fn parse_target(t: &str) -> Result<Target, CliError> {
    let parts: Vec<&str> = t.split(':').collect();
    Ok(match parts.as_slice() {
        ["gate", kind, n] => {
            Target::Gate(kind.parse().map_err(usage)?, n.parse().map_err(|_| usage(format!("bad fan-in `{n}`")))?)
        }
        ["cla", w] => Target::Cla(parse_width(w)?),
        ["vedic", w] => Target::Vedic(parse_width(w)?),
        ["dft4", w] => Target::Dft4(parse_width(w)?),
        ["fft8", w] => Target::Fft8(parse_width(w)?, None),
        ["fft8", w, f] => {
            Target::Fft8(parse_width(w)?, Some(f.parse().map_err(|_| usage(format!("bad frac bits `{f}`")))?))
        }
        _ => return Err(usage(format!("unknown target `{t}`"))),
    })
}

fn generate(args: &SynthArgs) -> Result<Netlist, CliError> {
    let synth = Synth::default();
    let target = parse_target(&args.target)?;
    let custom = args.vref.is_some() || args.opamp;
    let gen = |e: SynthError| invalid(e);
    let fft = |e: FftError| invalid(e);
    match target {
        Target::Gate(kind, n) if custom => {
            let cell_kind = match kind {
                GateKind::Nor | GateKind::Not => CellKind::Nor,
                GateKind::Nand => CellKind::Nand,
                _ => return Err(usage("--vref/--opamp apply to nor, nand and not gates only")),
            };
            if !kind.supports_fan_in(n, synth.policy.n_max) {
                return Err(invalid(SynthError::UnsupportedFanIn { kind, fan_in: n }));
            }
            let v_ref = match args.vref {
                Some(v) => v,
                None => select_vref(cell_kind, synth.policy, synth.levels).map_err(invalid)?,
            };
            let nl = single_cell(cell_kind, n, v_ref, args.opamp || n > 2);
            nl.compile().map_err(invalid)?;
            Ok(nl)
        }
        _ if custom => Err(usage("--vref/--opamp apply to gate targets only")),
        Target::Gate(kind, n) => synth.gate(kind, n).map_err(gen),
        Target::Cla(w) => synth.cla(w).map_err(gen),
        Target::Vedic(w) => synth.vedic(w).map_err(gen),
        Target::Dft4(w) => synth.dft4(w).map_err(fft),
        Target::Fft8(w, f) => {
            let fmt = match f {
                Some(f) => FixedPointFormat::new(w as u32, f).map_err(fft)?,
                None => FixedPointFormat::default_for(w),
            };
            synth.fft8(w, fmt).map_err(fft)
        }
    }
}

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    let nl = generate(&args)?;
    let r =
        cost::report(&nl, ReportFamily::Mtl, &CalibrationTable::default(), &DelayModel::default()).map_err(invalid)?;
    let opamps = nl.cells.iter().filter(|c| c.has_opamp).count();
    let summary = format!(
        "{}: {} inputs, {} outputs, {} cells ({} with op-amp), depth {}, {} transistors, {} memristors",
        nl.name,
        nl.inputs.len(),
        nl.outputs.len(),
        r.cell_count,
        opamps,
        r.depth,
        r.transistor_count,
        r.memristor_count
    );
    match &args.out {
        Some(p) => {
            nl.save(p).map_err(|e| invalid(format!("{p}: {e}")))?;
            emit(None, &format!("{summary}\n"))?;
        }
        None => {
            emit(None, &nl.to_json())?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

pub fn sim(args: SimArgs) -> Result<(), CliError> {
    let nl = load(&args.netlist)?;
    let rows = vectors::load(&args.input, &nl, false)?;
    let compiled = nl.compile().map_err(invalid)?;
    let mut w = vectors::csv_writer();
    if args.all_nets {
        let wave = compiled.simulate_waveform(&rows).map_err(invalid)?;
        w.write_record(&wave.nets).map_err(invalid)?;
        for v in 0..wave.len() {
            w.write_record(wave.samples.iter().map(|s| bit(s[v]))).map_err(invalid)?;
        }
    } else {
        let out = compiled.simulate(&rows).map_err(invalid)?;
        w.write_record(nl.inputs.iter().chain(&nl.outputs)).map_err(invalid)?;
        for (i, o) in rows.iter().zip(&out) {
            w.write_record(i.iter().chain(o).map(|&b| bit(b))).map_err(invalid)?;
        }
    }
    emit(args.out.as_deref(), &vectors::finish_csv(w)?)
}

fn variability(v: &VariabilityArgs, required: bool) -> Result<(VariabilitySpec, AnalogConfig), CliError> {
    let random = v.noise != 0.0 || v.mem_tol != 0.0 || v.vth_shift != 0.0;
    let seed = match v.seed {
        Some(s) => s,
        None if required || random => return Err(usage("--seed is required for randomized runs")),
        None => 0,
    };
    let spec = VariabilitySpec { input_noise: v.noise, mem_tolerance: v.mem_tol, vth_shift: v.vth_shift, seed };
    spec.validate().map_err(usage)?;
    let config = AnalogConfig { v_th: v.v_th, opamp_rail: v.rail };
    config.validate().map_err(usage)?;
    Ok((spec, config))
}

fn volts(x: f64) -> String {
    format!("{x:.6}")
}

pub fn analog(args: AnalogArgs) -> Result<(), CliError> {
    let nl = load(&args.netlist)?;
    let (spec, config) = variability(&args.var, false)?;
    let bits = vectors::load(&args.input, &nl, false)?;
    let compiled = nl.compile().map_err(invalid)?;
    let levels = compiled.levels();
    let rows: Vec<Vec<f64>> = bits.iter().map(|r| r.iter().map(|&b| levels.voltage(b)).collect()).collect();
    let run = compiled.simulate_analog(&rows, &spec, &config, args.trial, args.traces).map_err(invalid)?;

    let mut w = vectors::csv_writer();
    let mut header: Vec<String> = nl.inputs.clone();
    header.extend(nl.outputs.iter().map(|o| format!("{o}_v")));
    header.extend(nl.outputs.iter().cloned());
    if args.traces {
        for c in &nl.cells {
            header.extend(["v_a", "comparator", "v_out"].map(|f| format!("{}.{f}", c.id)));
        }
    }
    w.write_record(&header).map_err(invalid)?;
    for (r, ins) in bits.iter().enumerate() {
        let mut rec: Vec<String> = ins.iter().map(|&b| bit(b).to_string()).collect();
        rec.extend(run.outputs[r].iter().map(|&v| volts(v)));
        rec.extend(run.logic[r].iter().map(|&b| bit(b).to_string()));
        if let Some(tr) = &run.traces {
            for t in &tr[r] {
                rec.extend([t.v_a, t.comparator_out, t.v_out].map(volts));
            }
        }
        w.write_record(&rec).map_err(invalid)?;
    }
    emit(args.out.as_deref(), &vectors::finish_csv(w)?)
}

pub fn mc(args: McArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let (spec, config) = variability(&args.var, true)?;
    let nl = load(&args.netlist)?;
    let rows = vectors::load(&args.input, &nl, true)?;
    let compiled = nl.compile().map_err(invalid)?;
    let r = compiled.monte_carlo(&spec, &config, args.trials, &rows).map_err(invalid)?;
    emit(None, &(serde_json::to_string(&r).map_err(invalid)? + "\n"))?;
    Ok(())
}

pub fn verify(args: VerifyArgs) -> Result<(), CliError> {
    let oracle: Oracle = args.oracle.parse().map_err(usage)?;
    let mode: Mode = args.mode.parse().map_err(usage)?;
    if matches!(mode, Mode::Random(_)) && args.seed.is_none() {
        return Err(usage("--seed is required for random mode"));
    }
    let nl = load(&args.netlist)?;
    let report = verify::verify(&nl, oracle, mode, args.seed).map_err(|e| match e {
        VerifyError::TooManyCases(_) | VerifyError::MissingSeed => usage(e),
        _ => invalid(e),
    })?;
    emit(None, &(serde_json::to_string_pretty(&report).map_err(invalid)? + "\n"))?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!("{} disagrees with the netlist", report.oracle)))
    }
}

#[derive(Serialize)]
struct ReportView<'a> {
    family: String,
    corner: &'static str,
    delay_ns_at_corner: f64,
    area: String,
    power: String,
    leakage: String,
    energy: String,
    #[serde(flatten)]
    report: &'a CostReport,
}

fn view<'a>(family: &str, r: &'a CostReport, corner: Corner) -> ReportView<'a> {
    ReportView {
        family: family.to_string(),
        corner: corner.as_str(),
        delay_ns_at_corner: r.delay_ns[&corner],
        area: format!("{:.2}", r.area_um2),
        power: format_si(r.power_w, 2),
        leakage: format_si(r.leakage_w, 2),
        energy: format_si(r.energy_j, 2),
        report: r,
    }
}

pub fn cost(args: CostArgs) -> Result<(), CliError> {
    let corner: Corner = args.corner.parse().map_err(invalid)?;
    let families: Vec<ReportFamily> =
        args.families.iter().map(|f| f.parse::<ReportFamily>().map_err(invalid)).collect::<Result<_, _>>()?;
    let mut calib = match &args.calib {
        Some(p) => CalibrationTable::load(p).map_err(|e| invalid(format!("{p}: {e}")))?,
        None => CalibrationTable::default(),
    };
    if args.alt_opamp_power {
        let alt = CalibrationTable::with_alt_opamp_power();
        calib.entries.insert(mtl_core::CalibKey::MtlOpamp, alt.entries[&mtl_core::CalibKey::MtlOpamp].clone());
    }
    let nl = load(&args.netlist)?;
    let delay = DelayModel::default();
    let reports: Vec<(String, CostReport)> = families
        .iter()
        .zip(&args.families)
        .map(|(&f, name)| Ok((name.clone(), cost::report(&nl, f, &calib, &delay).map_err(invalid)?)))
        .collect::<Result<_, CliError>>()?;

    if args.json {
        let views: Vec<ReportView> = reports.iter().map(|(n, r)| view(n, r, corner)).collect();
        let text = if reports.len() == 1 {
            serde_json::to_string_pretty(&views[0])
        } else {
            let cmp = cost::compare(&reports).map_err(invalid)?;
            serde_json::to_string_pretty(&serde_json::json!({ "reports": views, "comparison": cmp }))
        }
        .map_err(invalid)?;
        return emit(None, &(text + "\n"));
    }

    let views: Vec<ReportView> = reports.iter().map(|(n, r)| view(n, r, corner)).collect();
    let mut rows: Vec<(String, Vec<String>)> = vec![
        ("family".into(), views.iter().map(|v| v.family.clone()).collect()),
        ("area_um2".into(), views.iter().map(|v| v.area.clone()).collect()),
        ("power_w".into(), views.iter().map(|v| v.power.clone()).collect()),
        ("leakage_w".into(), views.iter().map(|v| v.leakage.clone()).collect()),
        ("energy_j".into(), views.iter().map(|v| v.energy.clone()).collect()),
        ("transistors".into(), views.iter().map(|v| v.report.transistor_count.to_string()).collect()),
        ("memristors".into(), views.iter().map(|v| v.report.memristor_count.to_string()).collect()),
        ("cells".into(), views.iter().map(|v| v.report.cell_count.to_string()).collect()),
        ("depth".into(), views.iter().map(|v| v.report.depth.to_string()).collect()),
        (
            format!("delay_ns[{}]", corner.as_str()),
            views.iter().map(|v| format!("{:.2}", v.delay_ns_at_corner)).collect(),
        ),
    ];
    if reports.len() > 1 {
        let cmp = cost::compare(&reports).map_err(invalid)?;
        for m in &cmp.metrics {
            let cells = m.ratios.iter().map(|(_, r)| format!("{r:.3}")).collect();
            rows.push((format!("{}/{}", m.metric, cmp.baseline), cells));
        }
    }
    let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let col_w = rows.iter().flat_map(|(_, c)| c.iter().map(String::len)).max().unwrap_or(0);
    let mut out = String::new();
    for (label, cells) in rows {
        write!(out, "{label:<label_w$}").unwrap();
        for c in cells {
            write!(out, "  {c:>col_w$}").unwrap();
        }
        out.push('\n');
    }
    emit(None, &out)
}

fn parse_range(s: &str) -> Result<(f64, f64, f64), CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| usage(format!("bad range `{s}`"))))
        .collect::<Result<_, _>>()?;
    let [from, to, step] = v[..] else {
        return Err(usage(format!("range `{s}` must be from,to,step")));
    };
    if !(step > 0.0) {
        return Err(usage("step must be positive"));
    }
    if !(to >= from) || !from.is_finite() || !to.is_finite() {
        return Err(usage(format!("empty range `{s}`")));
    }
    Ok((from, to, step))
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let (kind, n) = match args.gate.split_once(':') {
        Some(("nor", n)) => (CellKind::Nor, n),
        Some(("nand", n)) => (CellKind::Nand, n),
        _ => return Err(usage(format!("gate `{}` must be nor:<n> or nand:<n>", args.gate))),
    };
    let n: usize = n.parse().map_err(|_| usage(format!("bad fan-in `{n}`")))?;
    if !(1..=VrefPolicy::DEFAULT_N_MAX).contains(&n) {
        return Err(usage(format!("fan-in must be 1..={}", VrefPolicy::DEFAULT_N_MAX)));
    }
    let (from, to, step) = parse_range(&args.vref)?;
    let levels = VoltageLevels::default();
    let window = threshold_window(kind, n, levels).map_err(invalid)?;
    let count = ((to - from) / step + 1e-9).floor() as u64 + 1;

    let rows = vectors::exhaustive(n)?;
    let mut w = vectors::csv_writer();
    let mut header = vec!["v_ref".to_string()];
    header.extend(rows.iter().map(|r| format!("y_{}", r.iter().map(|&b| bit(b)).collect::<String>())));
    header.extend(["noise_margin".into(), "in_window".into()]);
    w.write_record(&header).map_err(invalid)?;
    for i in 0..count {
        let v = ((from + i as f64 * step) * 1e12).round() / 1e12;
        let cell = ThresholdCell::unchecked(kind, vec![DEFAULT_MEMRISTANCE; n], v, args.opamp).map_err(invalid)?;
        let mut rec = vec![format!("{v}")];
        for r in &rows {
            rec.push(bit(cell.evaluate(r, levels).map_err(invalid)?).to_string());
        }
        rec.push(format!("{:.6}", cell.noise_margin(levels).map_err(invalid)?));
        rec.push(window.contains(v).to_string());
        w.write_record(&rec).map_err(invalid)?;
    }
    emit(args.out.as_deref(), &vectors::finish_csv(w)?)
}

pub fn export(args: ExportArgs) -> Result<(), CliError> {
    let nl = load(&args.netlist)?;
    let text = match args.format {
        ExportFormat::Dot => nl.to_dot(),
        ExportFormat::Json => nl.to_json(),
    };
    emit(args.out.as_deref(), &text)
}

pub fn calib_dump(args: CalibDumpArgs) -> Result<(), CliError> {
    let t = if args.alt_opamp_power { CalibrationTable::with_alt_opamp_power() } else { CalibrationTable::default() };
    emit(args.out.as_deref(), &t.to_json())
}
