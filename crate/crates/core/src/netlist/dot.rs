// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::fmt::Write;

use super::{Netlist, HIGH, LOW};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering: one node per port and instance, one edge per
/// driver-to-sink connection.
pub(super) fn to_dot(netlist: &Netlist) -> String {
    let mut out = String::new();
    let mut driver: HashMap<&str, String> = HashMap::new();
    writeln!(out, "digraph {} {{", quote(&netlist.name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();

    for name in &netlist.inputs {
        let node = format!("in:{name}");
        writeln!(out, "  {} [shape=triangle,label={}];", quote(&node), quote(name)).unwrap();
        driver.insert(name, node);
    }
    for c in [LOW, HIGH] {
        if netlist.cells.iter().any(|cell| cell.inputs.iter().any(|i| i == c)) || netlist.outputs.iter().any(|o| o == c)
        {
            let node = format!("const:{c}");
            writeln!(out, "  {} [shape=plaintext,label={}];", quote(&node), quote(c)).unwrap();
            driver.insert(c, node);
        }
    }
    for cell in &netlist.cells {
        let node = format!("cell:{}", cell.id);
        let label = format!("{}\\n{}{}", cell.id, cell.kind.as_str(), cell.fan_in);
        writeln!(out, "  {} [shape=box,label=\"{}\"];", quote(&node), label.replace('"', "\\\"")).unwrap();
        driver.insert(&cell.output, node);
    }
    for cell in &netlist.cells {
        let sink = quote(&format!("cell:{}", cell.id));
        for net in &cell.inputs {
            if let Some(src) = driver.get(net.as_str()) {
                writeln!(out, "  {} -> {} [label={}];", quote(src), sink, quote(net)).unwrap();
            }
        }
    }
    for name in &netlist.outputs {
        let node = format!("out:{name}");
        writeln!(out, "  {} [shape=invtriangle,label={}];", quote(&node), quote(name)).unwrap();
        if let Some(src) = driver.get(name.as_str()) {
            writeln!(out, "  {} -> {};", quote(src), quote(&node)).unwrap();
        }
    }
    out.push_str("}\n");
    out
}
