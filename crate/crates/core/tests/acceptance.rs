// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use mtl_core::cost::{self, cell_cost, transistor_count, CalibKey, CalibrationTable, Corner, DelayModel, ReportFamily};
use mtl_core::fftgen::{self, reference_dft, ComplexWord, DftMode, FixedPointFormat, SignPattern};
use mtl_core::synth::{self, top_blocks, GateKind, Synth};
use mtl_core::tlcell::threshold_window;
use mtl_core::{AnalogConfig, CellKind, Netlist, ThresholdCell, VariabilitySpec, VoltageLevels};
use rayon::prelude::*;

type Check = fn() -> Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn windows() -> Result<(), String> {
    let lv = VoltageLevels::default();
    for n in 1..=16usize {
        let nf = n as f64;
        let nor = threshold_window(CellKind::Nor, n, lv).map_err(|e| e.to_string())?;
        let nand = threshold_window(CellKind::Nand, n, lv).map_err(|e| e.to_string())?;
        ensure!(nor.lo == 0.0 && nor.hi == 1.0 / nf, "NOR{n} window ({}, {})", nor.lo, nor.hi);
        ensure!(nand.lo == (nf - 1.0) / nf && nand.hi == 1.0, "NAND{n} window ({}, {})", nand.lo, nand.hi);
    }
    let nor2 = threshold_window(CellKind::Nor, 2, lv).unwrap();
    let nand2 = threshold_window(CellKind::Nand, 2, lv).unwrap();
    ensure!((nor2.lo, nor2.hi, nand2.lo, nand2.hi) == (0.0, 0.5, 0.5, 1.0), "2-input windows");
    Ok(())
}

fn truth_tables() -> Result<(), String> {
    let lv = VoltageLevels::default();
    for kind in [CellKind::Nor, CellKind::Nand] {
        for n in 1..=8usize {
            let w = threshold_window(kind, n, lv).unwrap();
            for s in 1..=25 {
                let v_ref = w.lo + s as f64 / 26.0 * (w.hi - w.lo);
                ensure!(v_ref > w.lo && v_ref < w.hi, "sample not inside window");
                let cell = ThresholdCell::with_fan_in(kind, n, v_ref, false, lv).map_err(|e| e.to_string())?;
                for row in 0..1u32 << n {
                    let x: Vec<bool> = (0..n).map(|i| row >> i & 1 == 1).collect();
                    let ones = x.iter().filter(|&&b| b).count();
                    let want = if kind == CellKind::Nor { ones == 0 } else { ones < n };
                    let got = cell.evaluate(&x, lv).map_err(|e| e.to_string())?;
                    ensure!(got == want, "{kind:?}{n} v_ref={v_ref} row={row:b}");
                }
            }
        }
    }
    Ok(())
}

fn adders() -> Result<(), String> {
    for w in [4u32, 8] {
        let nl = synth::cla(w as usize).map_err(|e| e.to_string())?;
        let cases: Vec<HashMap<String, u64>> = (0..1u64 << (2 * w + 1))
            .map(|c| {
                HashMap::from([
                    ("A".into(), c & ((1 << w) - 1)),
                    ("B".into(), c >> w & ((1 << w) - 1)),
                    ("C".into(), c >> (2 * w)),
                ])
            })
            .collect();
        ensure!(cases.len() == [512, 131_072][(w / 8) as usize], "case count");
        for (c, out) in cases.iter().zip(run(&nl, &cases)) {
            let sum = c["A"] + c["B"] + c["C"];
            ensure!(out["S"] == sum % (1 << w) && out["Cout"] == sum >> w, "cla{w} {c:?} -> {out:?}");
        }
    }
    Ok(())
}

fn multipliers() -> Result<(), String> {
    for w in [2u32, 4, 8] {
        let nl = synth::vedic(w as usize).map_err(|e| e.to_string())?;
        let bus = if w == 2 { "S" } else { "P" };
        let cases: Vec<HashMap<String, u64>> = (0..1u64 << (2 * w))
            .map(|c| HashMap::from([("A".into(), c & ((1 << w) - 1)), ("B".into(), c >> w)]))
            .collect();
        for (c, out) in cases.iter().zip(run(&nl, &cases)) {
            ensure!(out[bus] == c["A"] * c["B"], "vedic{w} {c:?} -> {out:?}");
        }
    }
    let inv = top_blocks(&synth::vedic(8).unwrap());
    let want = [("vedic4", 4), ("cla8", 2), ("cla4", 1), ("ha", 1)];
    ensure!(inv.len() == want.len(), "vedic8 inventory {inv:?}");
    for (k, n) in want {
        ensure!(inv.get(k) == Some(&n), "vedic8 inventory {inv:?}");
    }
    Ok(())
}

fn signed_sum(p: SignPattern, ops: impl Iterator<Item = u64>) -> i64 {
    ops.zip(p.0).map(|(v, neg)| if neg { -(v as i64) } else { v as i64 }).sum()
}

fn fft_units() -> Result<(), String> {
    let patterns: Vec<SignPattern> = (0..16u8)
        .map(|m| SignPattern([m & 1 != 0, m & 2 != 0, m & 4 != 0, m & 8 != 0]))
        .filter(|p| p.negations() == 0 || p.negations() == 2)
        .collect();
    let names: Vec<String> = (0..4).map(|n| format!("in{n}_")).collect();
    patterns.par_iter().try_for_each(|&p| {
        let nl = fftgen::fft_unit(4, p).map_err(|e| e.to_string())?;
        let cases: Vec<HashMap<String, u64>> =
            (0..1u64 << 16).map(|c| (0..4).map(|n| (names[n].clone(), c >> (4 * n) & 15)).collect()).collect();
        for (c, out) in cases.iter().zip(run(&nl, &cases)) {
            let want = wrap(signed_sum(p, names.iter().map(|k| c[k])), 4);
            ensure!(out["Y"] == want, "width 4 {p} {c:?}");
        }
        Ok::<(), String>(())
    })?;
    let mut r = rng(5);
    for p in ["++++", "+-+-", "++--", "+--+", "-+-+", "+++-"] {
        let p: SignPattern = p.parse().unwrap();
        let nl = fftgen::fft_unit(8, p).map_err(|e| e.to_string())?;
        let cases: Vec<HashMap<String, u64>> =
            (0..100_000).map(|_| names.iter().map(|k| (k.clone(), word(&mut r, 8))).collect()).collect();
        for (c, out) in cases.iter().zip(run(&nl, &cases)) {
            ensure!(out["Y"] == wrap(signed_sum(p, names.iter().map(|k| c[k])), 8), "width 8 {p} {c:?}");
        }
    }
    Ok(())
}

fn to_words(x: &[(u64, u64)]) -> Vec<ComplexWord> {
    x.iter().map(|&(re, im)| ComplexWord { re, im }).collect()
}

fn from_words(x: &[ComplexWord]) -> Vec<(u64, u64)> {
    x.iter().map(|c| (c.re, c.im)).collect()
}

fn dft4_exact() -> Result<(), String> {
    let w = 8;
    let nl = fftgen::dft4(8).map_err(|e| e.to_string())?;
    let mut xs: Vec<Vec<(u64, u64)>> = vec![vec![(1, 0), (0, 0), (0, 0), (0, 0)], vec![(1, 0); 4]];
    let mut r = rng(6);
    xs.extend((0..10_000).map(|_| (0..4).map(|_| (word(&mut r, w), word(&mut r, w))).collect()));
    let outs = run(&nl, &xs.iter().map(|x| complex_case(x)).collect::<Vec<_>>());
    for (x, out) in xs.iter().zip(&outs) {
        let got = complex_out(out, 4);
        let want = from_words(&reference_dft(&to_words(x), w, DftMode::Exact).map_err(|e| e.to_string())?);
        let xi: Vec<(i64, i64)> = x.iter().map(|&(a, b)| (a as i64, b as i64)).collect();
        ensure!(want == dft_direct(&xi, w), "reference disagrees with direct sum on {x:?}");
        ensure!(got == want, "dft4 {x:?}: {got:?} != {want:?}");
    }
    ensure!(complex_out(&outs[0], 4) == vec![(1, 0); 4], "delta");
    ensure!(complex_out(&outs[1], 4) == vec![(4, 0), (0, 0), (0, 0), (0, 0)], "DC");
    Ok(())
}

fn fft8_quantized() -> Result<(), String> {
    let w = 8;
    let fmt = FixedPointFormat::default_for(8);
    let nl = fftgen::fft8(8, fmt).map_err(|e| e.to_string())?;
    let mut delta = vec![(0, 0); 8];
    delta[0] = (1, 0);
    let mut xs = vec![delta, vec![(3, 0); 8]];
    let mut r = rng(7);
    xs.extend((0..1000).map(|_| (0..8).map(|_| (word(&mut r, w), word(&mut r, w))).collect()));
    let outs = run(&nl, &xs.iter().map(|x| complex_case(x)).collect::<Vec<_>>());
    for (x, out) in xs.iter().zip(&outs) {
        let got = complex_out(out, 8);
        let want = from_words(&reference_dft(&to_words(x), w, DftMode::Quantized(fmt)).map_err(|e| e.to_string())?);
        let xi: Vec<(i64, i64)> = x.iter().map(|&(a, b)| (signed(a, w), signed(b, w))).collect();
        ensure!(want == fft8_fixed(&xi, w, fmt.frac_bits), "reference disagrees with fixed-point FFT on {x:?}");
        ensure!(got == want, "fft8 {x:?}: {got:?} != {want:?}");
    }
    ensure!(complex_out(&outs[0], 8) == vec![(1, 0); 8], "delta");
    let mut dc = vec![(0, 0); 8];
    dc[0] = (24, 0);
    ensure!(complex_out(&outs[1], 8) == dc, "DC");
    Ok(())
}

fn robustness() -> Result<(), String> {
    let lv = VoltageLevels::default();
    let rows: Vec<Vec<bool>> = (0..4u32).map(|r| vec![r & 1 == 1, r & 2 == 2]).collect();
    for kind in [CellKind::Nor, CellKind::Nand] {
        let win = threshold_window(kind, 2, lv).unwrap();
        let nl = synth::single_cell(kind, 2, (win.lo + win.hi) / 2.0, true);
        let c = nl.compile().map_err(|e| e.to_string())?;
        let mc = |eps: f64| {
            let spec = VariabilitySpec { input_noise: eps, mem_tolerance: 0.1, vth_shift: 0.0, seed: 2024 };
            c.monte_carlo(&spec, &AnalogConfig::default(), 100_000, &rows).map_err(|e| e.to_string())
        };
        let quiet = mc(0.2)?;
        ensure!(quiet.error_rate == 0.0, "{kind:?}2 at 0.2: error rate {}", quiet.error_rate);
        let loud = mc(0.6)?;
        ensure!(loud.error_rate > 0.0, "{kind:?}2 at 0.6: no errors");
    }
    Ok(())
}

fn analog_matches_boolean() -> Result<(), String> {
    let s = Synth::default();
    let mut targets: Vec<(String, Netlist)> = Vec::new();
    for kind in [GateKind::Not, GateKind::Nor, GateKind::Nand, GateKind::Or, GateKind::And, GateKind::Xor] {
        let n = match kind {
            GateKind::Not => 1,
            GateKind::Xor => 2,
            _ => 4,
        };
        targets.push((format!("{kind}{n}"), s.gate(kind, n).map_err(|e| e.to_string())?));
    }
    targets.push(("cla8".into(), synth::cla(8).unwrap()));
    targets.push(("vedic4".into(), synth::vedic(4).unwrap()));
    targets.push(("dft4".into(), fftgen::dft4(8).unwrap()));
    let mut r = rng(9);
    for (name, nl) in &targets {
        let c = nl.compile().map_err(|e| e.to_string())?;
        let n = nl.inputs.len();
        let rows: Vec<Vec<bool>> = (0..1000).map(|_| (0..n).map(|_| word(&mut r, 1) == 1).collect()).collect();
        let volts: Vec<Vec<f64>> =
            rows.iter().map(|row| row.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()).collect();
        let analog = c
            .simulate_analog(&volts, &VariabilitySpec::nominal(0), &AnalogConfig::default(), 0, false)
            .map_err(|e| e.to_string())?;
        let boolean = nl.simulate(&rows).map_err(|e| e.to_string())?;
        ensure!(analog.logic == boolean, "{name}: analog and boolean disagree");
    }
    Ok(())
}

fn inverter_chain(k: usize) -> Netlist {
    let mut b = Synth::default().builder(format!("inv{k}"));
    let mut net = b.input("A");
    for _ in 0..k {
        net = b.inv(&net).unwrap();
    }
    b.output("Y", &net);
    b.finish().unwrap()
}

fn delays() -> Result<(), String> {
    let m = DelayModel::default();
    let six = inverter_chain(6);
    let d = |nl: &Netlist, c| mtl_core::netlist::critical_delay(nl, c, &m).map_err(|e| e.to_string());
    let (ss, ff) = (d(&six, Corner::SlowSlow)?, d(&six, Corner::FastFast)?);
    ensure!((ss - 5.34).abs() < 1e-12 && format!("{ss:.2}") == "5.34", "SS {ss}");
    ensure!((ff - 1.38).abs() < 1e-12 && format!("{ff:.2}") == "1.38", "FF {ff}");
    for corner in Corner::ALL {
        let unit = d(&inverter_chain(1), corner)?;
        for k in 1..=10 {
            let dk = d(&inverter_chain(k), corner)?;
            ensure!(dk == k as f64 * unit, "{} chain of {k}: {dk}", corner.as_str());
        }
    }
    Ok(())
}

fn calibration() -> Result<(), String> {
    let t = CalibrationTable::default();
    let d = DelayModel::default();
    let one = |kind, opamp, family| {
        cost::report(&synth::single_cell(kind, 2, 0.25, opamp), family, &t, &d).map_err(|e| e.to_string())
    };
    let nor = one(CellKind::Nor, false, ReportFamily::Mtl)?;
    ensure!(cost::format_si(nor.power_w, 2) == "3.00u", "MTL power {}", nor.power_w);
    let op = one(CellKind::Nor, true, ReportFamily::Mtl)?;
    ensure!(op.area_um2 == 31.30, "MTL op-amp area {}", op.area_um2);
    let cm = one(CellKind::Nor, false, ReportFamily::Fixed(CalibKey::Cmos))?;
    ensure!(cost::format_si(cm.leakage_w, 2) == "16.32p" && cm.leakage_w == 16.32e-12, "CMOS leakage {}", cm.leakage_w);
    ensure!(cell_cost(CalibKey::MtlNoOpamp, 2, &t).unwrap().power_w == 3.00e-6, "power row");

    let tc = |f, g, n| transistor_count(f, g, n).map_err(|e| e.to_string());
    ensure!(tc(CalibKey::MtlOpamp, GateKind::Nor, 2)? == 10, "MTL NOR");
    ensure!(tc(CalibKey::MtlOpamp, GateKind::Or, 2)? == 12, "MTL OR");
    for n in 2..=16usize {
        ensure!(tc(CalibKey::Eemtl, GateKind::Nor, n)? == 2 * n as u64 + 8, "EEMTL {n}");
        ensure!(tc(CalibKey::Rtlg, GateKind::Nor, n)? == 24, "RTLG {n}");
    }
    Ok(())
}

fn orderings() -> Result<(), String> {
    let t = CalibrationTable::default();
    let d = DelayModel::default();
    for (name, nl) in [
        ("vedic:2", synth::vedic2().unwrap()),
        ("vedic:8", synth::vedic(8).unwrap()),
        ("dft4:8", fftgen::dft4(8).unwrap()),
    ] {
        let m = cost::report(&nl, ReportFamily::Mtl, &t, &d).map_err(|e| e.to_string())?;
        let c = cost::report(&nl, ReportFamily::Fixed(CalibKey::Cmos), &t, &d).map_err(|e| e.to_string())?;
        ensure!(m.area_um2 < c.area_um2, "{name} area {} vs {}", m.area_um2, c.area_um2);
        ensure!(m.power_w > c.power_w, "{name} power {} vs {}", m.power_w, c.power_w);
    }
    Ok(())
}

fn main() {
    let criteria: [(&str, Check); 12] = [
        ("threshold windows", windows),
        ("cell truth tables", truth_tables),
        ("adder oracle", adders),
        ("multiplier oracle", multipliers),
        ("fft unit", fft_units),
        ("dft4 exact", dft4_exact),
        ("fft8 quantized", fft8_quantized),
        ("robustness", robustness),
        ("analog/boolean differential", analog_matches_boolean),
        ("delay model", delays),
        ("calibration fidelity", calibration),
        ("cost orderings", orderings),
    ];
    // A libtest-style filter argument or `--list` is accepted and ignored.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let t = secs(start.elapsed());
        match result {
            Ok(()) => println!("[PASS] {:>2} {name} ({t})", i + 1),
            Err(e) => {
                failed += 1;
                println!("[FAIL] {:>2} {name} ({t}): {e}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}
