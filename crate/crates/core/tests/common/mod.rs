// SPDX-License-Identifier: Apache-2.0

//! Port packing and reference arithmetic shared by the integration tests.
//! Written against port names only, without the library's own bus helpers.

#![allow(dead_code)]

use std::collections::HashMap;

use mtl_core::Netlist;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Splits `A3` into `("A", 3)` and `x1_re_7` into `("x1_re_", 7)`.
pub fn split_port(port: &str) -> (&str, u32) {
    let digits = port.len() - port.bytes().rev().take_while(u8::is_ascii_digit).count();
    (&port[..digits], port[digits..].parse().unwrap_or(0))
}

/// Input row from bus values keyed by prefix (`"A"`, `"C"` for `C0`, ...).
pub fn encode(nl: &Netlist, values: &HashMap<String, u64>) -> Vec<bool> {
    nl.inputs
        .iter()
        .map(|p| {
            let (bus, bit) = split_port(p);
            let v = values.get(bus).unwrap_or_else(|| panic!("no value for bus `{bus}`"));
            v >> bit & 1 == 1
        })
        .collect()
}

/// Output bus values keyed by prefix; `Cout` is its own bus.
pub fn decode(nl: &Netlist, row: &[bool]) -> HashMap<String, u64> {
    let mut out: HashMap<String, u64> = HashMap::new();
    for (p, &b) in nl.outputs.iter().zip(row) {
        let (bus, bit) = if p == "Cout" { (p.as_str(), 0) } else { split_port(p) };
        *out.entry(bus.to_string()).or_insert(0) |= (b as u64) << bit;
    }
    out
}

/// Simulates many cases at once, returning decoded outputs per case.
pub fn run(nl: &Netlist, cases: &[HashMap<String, u64>]) -> Vec<HashMap<String, u64>> {
    let rows: Vec<Vec<bool>> = cases.iter().map(|c| encode(nl, c)).collect();
    nl.simulate(&rows).unwrap().iter().map(|r| decode(nl, r)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn word(rng: &mut ChaCha8Rng, width: u32) -> u64 {
    rng.random::<u64>() & ((1u64 << width) - 1)
}

pub fn wrap(v: i64, width: u32) -> u64 {
    v.rem_euclid(1i64 << width) as u64
}

pub fn signed(v: u64, width: u32) -> i64 {
    let half = 1i64 << (width - 1);
    let v = v as i64;
    if v >= half {
        v - (1i64 << width)
    } else {
        v
    }
}

/// `Σ x[n]·e^{-2πi nk/N}` with the unit-circle factors rounded from
/// trigonometry (all exact for N = 4), mod `2^width`.
pub fn dft_direct(x: &[(i64, i64)], width: u32) -> Vec<(u64, u64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let (mut re, mut im) = (0i64, 0i64);
            for (m, &(a, b)) in x.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (m * k) as f64 / n as f64;
                let (c, d) = (ang.cos().round() as i64, ang.sin().round() as i64);
                re += a * c - b * d;
                im += a * d + b * c;
            }
            (wrap(re, width), wrap(im, width))
        })
        .collect()
}

/// 8-point decimation-in-time FFT with twiddles `W^k = c + jd` scaled by
/// `2^f` and rounded; each real product is floored after scaling.
pub fn fft8_fixed(x: &[(i64, i64)], width: u32, f: u32) -> Vec<(u64, u64)> {
    let evens: Vec<(i64, i64)> = (0..4).map(|n| x[2 * n]).collect();
    let odds: Vec<(i64, i64)> = (0..4).map(|n| x[2 * n + 1]).collect();
    let e = dft_direct(&evens, width);
    let o = dft_direct(&odds, width);
    let scale = (1i64 << f) as f64;
    let mut out = vec![(0, 0); 8];
    for k in 0..4 {
        let ang = -2.0 * std::f64::consts::PI * k as f64 / 8.0;
        let (c, d) = ((ang.cos() * scale).round() as i64, (ang.sin() * scale).round() as i64);
        let (a, b) = (signed(o[k].0, width), signed(o[k].1, width));
        let fl = |p: i64| p.div_euclid(1i64 << f);
        let (tr, ti) = (fl(a * c) - fl(b * d), fl(a * d) + fl(b * c));
        let (er, ei) = (e[k].0 as i64, e[k].1 as i64);
        out[k] = (wrap(er + tr, width), wrap(ei + ti, width));
        out[k + 4] = (wrap(er - tr, width), wrap(ei - ti, width));
    }
    out
}

/// DFT input buses keyed as the generators name them.
pub fn complex_case(x: &[(u64, u64)]) -> HashMap<String, u64> {
    let mut m = HashMap::new();
    for (n, &(re, im)) in x.iter().enumerate() {
        m.insert(format!("x{n}_re_"), re);
        m.insert(format!("x{n}_im_"), im);
    }
    m
}

pub fn complex_out(out: &HashMap<String, u64>, points: usize) -> Vec<(u64, u64)> {
    (0..points).map(|k| (out[&format!("X{k}_re_")], out[&format!("X{k}_im_")])).collect()
}
