// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use mtl_core::cost::{Corner, DelayModel};
use mtl_core::fftgen::{self, SignPattern};
use mtl_core::netlist::{critical_delay, validate_and_levelize, NetlistError};
use mtl_core::synth::{self, Builder, GateKind, Synth};
use mtl_core::tlcell::{threshold_window, CellKind, VoltageLevels};
use mtl_core::{AnalogConfig, CellInstance, InstanceKind, Netlist, VariabilitySpec, VrefPolicy};
use proptest::prelude::*;

/// Random DAG: cell `i` reads primary inputs or outputs of cells `< i`.
/// Cells are then listed in a shuffled order.
fn random_dag() -> impl Strategy<Value = Netlist> {
    (1usize..5, 1usize..40)
        .prop_flat_map(|(n_in, n_cells)| {
            let picks = prop::collection::vec(prop::collection::vec(any::<prop::sample::Index>(), 1..4), n_cells);
            (Just(n_in), picks, Just((0..n_cells).collect::<Vec<_>>()).prop_shuffle())
        })
        .prop_map(|(n_in, picks, order)| {
            let inputs: Vec<String> = (0..n_in).map(|i| format!("i{i}")).collect();
            let cells: Vec<CellInstance> = picks
                .iter()
                .enumerate()
                .map(|(c, p)| {
                    let ins: Vec<String> = p
                        .iter()
                        .map(|ix| {
                            let k = ix.index(n_in + c);
                            if k < n_in {
                                inputs[k].clone()
                            } else {
                                format!("n{}", k - n_in)
                            }
                        })
                        .collect();
                    CellInstance {
                        id: format!("c{c}"),
                        kind: InstanceKind::Nor,
                        fan_in: ins.len(),
                        v_ref: 0.05,
                        has_opamp: ins.len() > 2,
                        inputs: ins,
                        output: format!("n{c}"),
                    }
                })
                .collect();
            let n = cells.len();
            Netlist {
                name: "dag".into(),
                inputs,
                outputs: vec![format!("n{}", n - 1)],
                cells: order.iter().map(|&i| cells[i].clone()).collect(),
            }
        })
}

/// Longest driver chain ending at each cell, by Bellman-Ford relaxation
/// over the unordered edge list.
fn longest_chains(nl: &Netlist) -> Vec<usize> {
    let driver: HashMap<&str, usize> = nl.cells.iter().enumerate().map(|(i, c)| (c.output.as_str(), i)).collect();
    let edges: Vec<(usize, usize)> = nl
        .cells
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.inputs.iter().filter_map(|n| driver.get(n.as_str())).map(move |&d| (d, i)))
        .collect();
    let mut level = vec![1usize; nl.cells.len()];
    for _ in 0..nl.cells.len() {
        for &(d, i) in &edges {
            level[i] = level[i].max(level[d] + 1);
        }
    }
    level
}

/// `reach[a][b]`: `b` is downstream of `a`.
#[allow(clippy::needless_range_loop)]
fn reachability(nl: &Netlist) -> Vec<Vec<bool>> {
    let n = nl.cells.len();
    let driver: HashMap<&str, usize> = nl.cells.iter().enumerate().map(|(i, c)| (c.output.as_str(), i)).collect();
    let mut reach = vec![vec![false; n]; n];
    for (i, c) in nl.cells.iter().enumerate() {
        for net in &c.inputs {
            if let Some(&d) = driver.get(net.as_str()) {
                reach[d][i] = true;
            }
        }
    }
    for k in 0..n {
        for a in 0..n {
            if reach[a][k] {
                for b in 0..n {
                    reach[a][b] |= reach[k][b];
                }
            }
        }
    }
    reach
}

proptest! {
    #[test]
    fn levelization_matches_reachability(nl in random_dag()) {
        let sched = validate_and_levelize(&nl).unwrap();
        let mut level = vec![0usize; nl.cells.len()];
        for (l, cells) in sched.levels.iter().enumerate() {
            for &c in cells {
                prop_assert_eq!(level[c], 0, "instance listed twice");
                level[c] = l + 1;
            }
        }
        prop_assert!(level.iter().all(|&l| l > 0));
        let reach = reachability(&nl);
        for a in 0..nl.cells.len() {
            for b in 0..nl.cells.len() {
                if reach[a][b] {
                    prop_assert!(level[a] < level[b]);
                }
            }
        }
        prop_assert_eq!(level, longest_chains(&nl));
    }

    #[test]
    fn back_edge_is_reported_as_cycle(nl in random_dag(), pick in any::<prop::sample::Index>()) {
        let mut nl = nl;
        let reach = reachability(&nl);
        // Feed some cell's own downstream output (or its own) back into it.
        let a = pick.index(nl.cells.len());
        let b = (0..nl.cells.len()).find(|&b| reach[a][b]).unwrap_or(a);
        let back = nl.cells[b].output.clone();
        nl.cells[a].inputs.push(back);
        nl.cells[a].fan_in += 1;
        nl.cells[a].has_opamp = nl.cells[a].fan_in > 2;
        match validate_and_levelize(&nl) {
            Err(NetlistError::CombinationalCycle { instance }) => {
                let i = nl.cells.iter().position(|c| c.id == instance).unwrap();
                let reach = reachability(&nl);
                prop_assert!(reach[i][i], "{} is not on a cycle", instance);
            }
            other => prop_assert!(false, "expected a cycle, got {:?}", other.map(|s| s.depth())),
        }
    }

    #[test]
    fn noise_below_margin_never_flips(
        nor in any::<bool>(), n in 1usize..7, t in 0.02f64..0.98, opamp in any::<bool>(),
        frac in 0.0f64..0.999, seed in any::<u64>(),
    ) {
        let kind = if nor { CellKind::Nor } else { CellKind::Nand };
        let lv = VoltageLevels::default();
        let w = threshold_window(kind, n, lv).unwrap();
        let nl = synth::single_cell(kind, n, w.lo + t * w.width(), opamp);
        let compiled = nl.compile().unwrap();
        let margin = mtl_core::ThresholdCell::with_fan_in(kind, n, w.lo + t * w.width(), opamp, lv)
            .unwrap()
            .noise_margin(lv)
            .unwrap();
        let rows: Vec<Vec<bool>> = (0..1u32 << n).map(|r| (0..n).map(|i| r >> i & 1 == 1).collect()).collect();
        let spec = VariabilitySpec { input_noise: frac * margin / lv.swing(), ..VariabilitySpec::nominal(seed) };
        let mc = compiled.monte_carlo(&spec, &AnalogConfig::default(), 200, &rows).unwrap();
        prop_assert_eq!(mc.errors, 0);
    }

    #[test]
    fn series_composition_adds_depth(a in 1usize..12, b in 1usize..12) {
        let chain = |k: usize| {
            let s = Synth::default();
            let mut bld = s.builder(format!("chain{k}"));
            let mut net = bld.input("A0");
            for _ in 0..k {
                net = bld.inv(&net).unwrap();
            }
            bld.output("Y", &net);
            bld.finish().unwrap()
        };
        let (ca, cb) = (chain(a), chain(b));
        let mut bld = Synth::default().builder("series");
        let x = bld.input("A0");
        let o = bld.instantiate("a", &ca, &HashMap::from([("A0".to_string(), x)]));
        let o = bld.instantiate("b", &cb, &HashMap::from([("A0".to_string(), o["Y"].clone())]));
        bld.output("Y", &o["Y"]);
        let s = bld.finish().unwrap();
        let depth = |nl: &Netlist| validate_and_levelize(nl).unwrap().depth();
        prop_assert_eq!(depth(&s), depth(&ca) + depth(&cb));
        let m = DelayModel::default();
        for c in Corner::ALL {
            let d = critical_delay(&s, c, &m).unwrap();
            prop_assert!((d - (a + b) as f64 * m.d1(c)).abs() < 1e-12);
        }
    }
}

fn all_rows(n: usize) -> Vec<Vec<bool>> {
    (0..1u64 << n).map(|r| (0..n).map(|i| r >> i & 1 == 1).collect()).collect()
}

/// Every generated design with at most 16 inputs.
fn small_designs() -> Vec<Netlist> {
    let s = Synth::default();
    let mut v = Vec::new();
    for kind in GateKind::ALL {
        for n in 1..=8 {
            if let Ok(g) = s.gate(kind, n) {
                v.push(g);
            }
        }
    }
    v.push(s.half_adder().unwrap());
    v.push(s.full_adder().unwrap());
    for w in [1, 2, 4] {
        v.push(s.cla(w).unwrap());
    }
    v.push(s.complement_unit(8).unwrap());
    v.push(s.vedic(2).unwrap());
    v.push(s.vedic(4).unwrap());
    v.push(s.fft_unit(4, "+-+-".parse::<SignPattern>().unwrap()).unwrap());
    v.push(fftgen::dft4(2).unwrap());
    v
}

#[test]
fn analog_logic_equals_boolean_exhaustively() {
    for nl in small_designs() {
        assert!(nl.inputs.len() <= 16);
        let c = nl.compile().unwrap();
        let rows = all_rows(nl.inputs.len());
        let logic = c.simulate(&rows).unwrap();
        let volts: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&b| c.levels().voltage(b)).collect()).collect();
        let run = c.simulate_analog(&volts, &VariabilitySpec::nominal(0), &AnalogConfig::default(), 0, false).unwrap();
        assert_eq!(run.logic, logic, "{}", nl.name);
    }
}

#[test]
fn every_generator_levelizes() {
    let s = Synth::default();
    let mut designs = small_designs();
    designs.push(s.cla(8).unwrap());
    designs.push(s.vedic(8).unwrap());
    designs.push(fftgen::dft4(8).unwrap());
    designs.push(fftgen::fft8(4, fftgen::FixedPointFormat::default_for(4)).unwrap());
    for nl in designs {
        let sched = validate_and_levelize(&nl).unwrap();
        assert_eq!(sched.levels.iter().map(Vec::len).sum::<usize>(), nl.cells.len(), "{}", nl.name);
        assert!(nl.cells.iter().all(|c| c.has_opamp == (c.fan_in > 2)), "{}", nl.name);
        assert!(nl.cells.iter().all(|c| c.fan_in <= VrefPolicy::DEFAULT_N_MAX));
    }
}

#[test]
fn json_round_trip_preserves_behaviour() {
    for nl in small_designs() {
        let back = Netlist::from_json(&nl.to_json()).unwrap();
        assert_eq!(back, nl);
        assert_eq!(back.to_json(), nl.to_json());
        let rows = all_rows(nl.inputs.len().min(10));
        if nl.inputs.len() <= 10 {
            assert_eq!(back.simulate(&rows).unwrap(), nl.simulate(&rows).unwrap());
        }
    }
}

#[test]
fn monte_carlo_is_independent_of_thread_count() {
    let nl = synth::cla(4).unwrap();
    let c = nl.compile().unwrap();
    let rows = all_rows(9);
    let spec = VariabilitySpec { input_noise: 0.3, mem_tolerance: 0.2, vth_shift: 0.1, seed: 42 };
    let cfg = AnalogConfig::default();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| c.monte_carlo(&spec, &cfg, 64, &rows).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
    let a = c.simulate_analog(&[vec![0.0; 9]], &spec, &cfg, 5, true).unwrap();
    let b = c.simulate_analog(&[vec![0.0; 9]], &spec, &cfg, 5, true).unwrap();
    assert_eq!(a, b);
}

#[test]
fn constants_drive_cells() {
    let nl = Netlist {
        name: "tie".into(),
        inputs: vec!["a".into()],
        outputs: vec!["y".into()],
        cells: vec![CellInstance {
            id: "u0".into(),
            kind: InstanceKind::Nor,
            fan_in: 2,
            v_ref: 0.05,
            has_opamp: false,
            inputs: vec!["a".into(), "$high".into()],
            output: "y".into(),
        }],
    };
    assert_eq!(nl.simulate(&[vec![false], vec![true]]).unwrap(), vec![vec![false], vec![false]]);
}

#[test]
fn builder_exposes_constant_outputs_through_buffers() {
    let mut b: Builder = Synth::default().builder("tied");
    b.input("a");
    b.output("Y", "$high");
    let nl = b.finish().unwrap();
    assert_eq!(nl.cells.len(), 2);
    assert_eq!(nl.simulate(&[vec![false]]).unwrap(), vec![vec![true]]);
}
