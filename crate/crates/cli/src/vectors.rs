// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::io::Write;

use mtl_core::Netlist;

use crate::{invalid, usage, CliError, VectorArgs};

/// Exhaustive enumeration limit for command-line runs.
pub const MAX_EXHAUSTIVE_INPUTS: usize = 20;

pub fn exhaustive(n: usize) -> Result<Vec<Vec<bool>>, CliError> {
    if n > MAX_EXHAUSTIVE_INPUTS {
        return Err(usage(format!("{n} inputs is too many for --exhaustive")));
    }
    Ok((0..1u64 << n).map(|r| (0..n).map(|i| r >> i & 1 == 1).collect()).collect())
}

/// Reads vectors whose header names every input port, in any order.
pub fn read_csv(path: &str, netlist: &Netlist) -> Result<Vec<Vec<bool>>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(invalid)?;
    let header: Vec<String> = rdr.headers().map_err(invalid)?.iter().map(str::to_string).collect();
    let col: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    let order = netlist
        .inputs
        .iter()
        .map(|p| col.get(p.as_str()).copied().ok_or_else(|| invalid(format!("vector file lacks input `{p}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(invalid)?;
        let row = order
            .iter()
            .map(|&c| match rec.get(c) {
                Some("0") => Ok(false),
                Some("1") => Ok(true),
                other => Err(invalid(format!("bad bit {other:?} in vector file"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Rows from `--vectors` or `--exhaustive`; with neither, exhaustive when
/// `default_exhaustive` is set.
pub fn load(args: &VectorArgs, netlist: &Netlist, default_exhaustive: bool) -> Result<Vec<Vec<bool>>, CliError> {
    match (&args.vectors, args.exhaustive || default_exhaustive) {
        (Some(p), _) => read_csv(p, netlist),
        (None, true) => exhaustive(netlist.inputs.len()),
        (None, false) => Err(usage("one of --vectors or --exhaustive is required")),
    }
}

pub fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Writes to `out`, or stdout when absent.
pub fn emit(out: Option<&str>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| invalid(format!("{p}: {e}"))),
        None => {
            let mut o = std::io::stdout().lock();
            match o.write_all(text.as_bytes()).and_then(|_| o.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(invalid(e)),
                _ => Ok(()),
            }
        }
    }
}

pub fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

pub fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(invalid)
}
