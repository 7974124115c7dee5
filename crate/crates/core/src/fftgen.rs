// SPDX-License-Identifier: Apache-2.0

//! FFT-unit, 4-point DFT and 8-point FFT generators, plus the software
//! oracle they are checked against.
//!
//! All datapaths are `width`-bit two's complement with wraparound. A
//! subtraction is a complemented operand plus a carry-in of one.
//!
//! The 8-point FFT is radix-2 decimation in time: two 4-point DFTs over the
//! even and odd samples, then butterflies `X[k] = E[k] + t[k]`,
//! `X[k+4] = E[k] - t[k]` with `t[k] = W^k·O[k]`. `W^0` and `W^2 = -j` are
//! routing only. `W^1` and `W^3` multiply by the fixed-point coefficient
//! `C = round(2^f / √2)` in sign-magnitude form: each odd-bin component `x`
//! is made non-negative, multiplied by `C` in a Vedic multiplier, then
//! conditionally negated at double width and floor-shifted by `f` bits
//! (bits `[f, f + width)` of the two's-complement product).

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::netlist::{Netlist, HIGH, LOW};
use crate::synth::{bind_bus, product_prefix, take_bus, Builder, Synth, SynthError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FftError {
    #[error("invalid width {0}")]
    InvalidWidth(usize),
    #[error("fixed-point format {total_bits}.{frac_bits} does not fit width {width}")]
    FormatMismatch { total_bits: u32, frac_bits: u32, width: usize },
    #[error("at most three negated operands are supported, got {0}")]
    TooManyNegations(usize),
    #[error("{0}-point transform not supported in this mode")]
    UnsupportedPoints(usize),
    #[error("bad sign pattern `{0}`")]
    BadSignPattern(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

pub type Result<T> = std::result::Result<T, FftError>;

/// Signs of the four operands of an FFT unit; `true` means subtract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignPattern(pub [bool; 4]);

impl SignPattern {
    pub const ALL_POSITIVE: SignPattern = SignPattern([false; 4]);

    pub fn negations(&self) -> usize {
        self.0.iter().filter(|&&n| n).count()
    }

    /// `(±a ± b ± c ± d) mod 2^width`.
    pub fn apply(&self, operands: [u64; 4], width: u32) -> u64 {
        let mask = mask(width);
        operands
            .iter()
            .zip(self.0)
            .fold(0u64, |acc, (&x, neg)| if neg { acc.wrapping_sub(x) } else { acc.wrapping_add(x) })
            & mask
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in self.0 {
            f.write_str(if n { "-" } else { "+" })?;
        }
        Ok(())
    }
}

impl FromStr for SignPattern {
    type Err = FftError;
    fn from_str(s: &str) -> Result<Self> {
        let err = || FftError::BadSignPattern(s.to_string());
        let signs: Vec<bool> = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' '))
            .map(|c| match c {
                '+' => Ok(false),
                '-' => Ok(true),
                _ => Err(err()),
            })
            .collect::<Result<_>>()?;
        Ok(SignPattern(signs.try_into().map_err(|_| err())?))
    }
}

/// A complex sample with both parts held as `width`-bit words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ComplexWord {
    pub re: u64,
    pub im: u64,
}

impl ComplexWord {
    /// Reduces both parts mod `2^width`; negative inputs wrap.
    pub fn new(re: i64, im: i64, width: u32) -> Self {
        let m = mask(width);
        Self { re: re as u64 & m, im: im as u64 & m }
    }

    pub fn re_signed(&self, width: u32) -> i64 {
        to_signed(self.re, width)
    }

    pub fn im_signed(&self, width: u32) -> i64 {
        to_signed(self.im, width)
    }

    pub fn wrapping_add(self, other: Self, width: u32) -> Self {
        let m = mask(width);
        Self { re: self.re.wrapping_add(other.re) & m, im: self.im.wrapping_add(other.im) & m }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointFormat {
    pub total_bits: u32,
    pub frac_bits: u32,
}

impl FixedPointFormat {
    pub fn new(total_bits: u32, frac_bits: u32) -> Result<Self> {
        if frac_bits >= total_bits || total_bits > 32 {
            return Err(FftError::FormatMismatch { total_bits, frac_bits, width: total_bits as usize });
        }
        Ok(Self { total_bits, frac_bits })
    }

    /// `total_bits = width`, `frac_bits = width - 1`.
    pub fn default_for(width: usize) -> Self {
        let w = width as u32;
        Self { total_bits: w, frac_bits: w.saturating_sub(1) }
    }

    /// `round(2^frac_bits / √2)`.
    pub fn coefficient(&self) -> u64 {
        (2f64.powi(self.frac_bits as i32) * std::f64::consts::FRAC_1_SQRT_2).round() as u64
    }

    fn check(&self, width: usize) -> Result<()> {
        if self.total_bits as usize != width || self.frac_bits >= self.total_bits {
            return Err(FftError::FormatMismatch { total_bits: self.total_bits, frac_bits: self.frac_bits, width });
        }
        Ok(())
    }
}

pub(crate) fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

pub fn to_signed(v: u64, width: u32) -> i64 {
    let v = v & mask(width);
    if width < 64 && v >> (width - 1) & 1 == 1 {
        v as i64 - (1i64 << width)
    } else {
        v as i64
    }
}

/// Which inputs each of the eight 4-point DFT units combines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

pub type UnitWiring = (usize, Part, [(usize, Part); 4], SignPattern);

/// `(output bin, output part, [(input index, input part)], signs)`, derived
/// from `(-j)^{nk}`: multiplying by `-j` maps `(re, im)` to `(im, -re)`.
pub fn dft4_units() -> [UnitWiring; 8] {
    let mut out = [(0, Part::Re, [(0, Part::Re); 4], SignPattern::ALL_POSITIVE); 8];
    let mut slot = 0;
    for k in 0..4 {
        for part in [Part::Re, Part::Im] {
            let mut srcs = [(0, Part::Re); 4];
            let mut signs = [false; 4];
            for (n, (src, sign)) in srcs.iter_mut().zip(signs.iter_mut()).enumerate() {
                // (-j)^m: 0 -> 1, 1 -> -j, 2 -> -1, 3 -> j.
                let (swap, neg_re, neg_im) = match (n * k) % 4 {
                    0 => (false, false, false),
                    1 => (true, false, true),
                    2 => (false, true, true),
                    _ => (true, true, false),
                };
                *src = match (part, swap) {
                    (Part::Re, false) | (Part::Im, true) => (n, Part::Re),
                    _ => (n, Part::Im),
                };
                // With a swap, re' = ±im and im' = ±re.
                *sign = match part {
                    Part::Re => neg_re,
                    Part::Im => neg_im,
                };
            }
            out[slot] = (k, part, srcs, SignPattern(signs));
            slot += 1;
        }
    }
    out
}

fn port(dir: &str, n: usize, part: Part) -> String {
    match part {
        Part::Re => format!("{dir}{n}_re_"),
        Part::Im => format!("{dir}{n}_im_"),
    }
}

fn check_width(width: usize, min: usize) -> Result<()> {
    if width < min || width > 32 {
        return Err(FftError::InvalidWidth(width));
    }
    Ok(())
}

/// Modular adder helpers over an in-progress builder.
struct Datapath<'a> {
    cla: &'a Netlist,
    cmp: &'a Netlist,
    cla_type: String,
    cmp_type: String,
}

impl<'a> Datapath<'a> {
    fn add(&self, b: &mut Builder, x: &[String], y: &[String], c0: &str) -> (Vec<String>, String) {
        let mut bind = HashMap::new();
        bind_bus(&mut bind, "A", x);
        bind_bus(&mut bind, "B", y);
        bind.insert("C0".into(), c0.to_string());
        let o = b.instantiate(&self.cla_type, self.cla, &bind);
        (take_bus(&o, "S", x.len()), o["Cout"].clone())
    }

    fn complement(&self, b: &mut Builder, x: &[String]) -> Vec<String> {
        let mut bind = HashMap::new();
        bind_bus(&mut bind, "A", x);
        let o = b.instantiate(&self.cmp_type, self.cmp, &bind);
        take_bus(&o, "Y", x.len())
    }

    fn sub(&self, b: &mut Builder, x: &[String], y: &[String]) -> Vec<String> {
        let ny = self.complement(b, y);
        self.add(b, x, &ny, HIGH).0
    }
}

impl Synth {
    /// Four `width`-bit operands `in{n}_{bit}` to `Y{bit}` and `Cout`.
    pub fn fft_unit(&self, width: usize, signs: SignPattern) -> Result<Netlist> {
        check_width(width, 1)?;
        let k = signs.negations();
        if k > 3 {
            return Err(FftError::TooManyNegations(k));
        }
        let cla = self.cla(width)?;
        let cmp = self.complement_unit(width)?;
        let dp = Datapath { cla: &cla, cmp: &cmp, cla_type: format!("cla{width}"), cmp_type: format!("cmp{width}") };

        let mut b = self.builder(format!("fft_unit{width}_{signs}"));
        let ins: Vec<Vec<String>> = (0..4).map(|n| b.input_bus(&format!("in{n}_"), width)).collect();
        let mut ops: Vec<Vec<String>> = (0..4).filter(|&n| !signs.0[n]).map(|n| ins[n].clone()).collect();
        for n in (0..4).filter(|&n| signs.0[n]) {
            let c = dp.complement(&mut b, &ins[n]);
            ops.push(c);
        }
        let c0 = |i: usize| if i < k { HIGH } else { LOW };
        let (s1, _) = dp.add(&mut b, &ops[0], &ops[1], c0(0));
        let (s2, _) = dp.add(&mut b, &ops[2], &ops[3], c0(1));
        let (y, cout) = dp.add(&mut b, &s1, &s2, c0(2));
        b.output_bus("Y", &y);
        b.output("Cout", &cout);
        Ok(b.finish()?)
    }

    /// Inputs `x{n}_re_{bit}`, `x{n}_im_{bit}`; outputs `X{k}_re_{bit}`,
    /// `X{k}_im_{bit}`.
    pub fn dft4(&self, width: usize) -> Result<Netlist> {
        check_width(width, 2)?;
        let mut b = self.builder(format!("dft4_{width}"));
        let x = dft_inputs(&mut b, 4, width);
        let y = self.dft4_body(&mut b, width, &x)?;
        dft_outputs(&mut b, &y);
        Ok(b.finish()?)
    }

    fn dft4_body(&self, b: &mut Builder, width: usize, x: &[[Vec<String>; 2]]) -> Result<Vec<[Vec<String>; 2]>> {
        let mut units: HashMap<SignPattern, Netlist> = HashMap::new();
        let mut y = vec![[Vec::new(), Vec::new()]; 4];
        for (k, part, srcs, signs) in dft4_units() {
            if let Entry::Vacant(e) = units.entry(signs) {
                e.insert(self.fft_unit(width, signs)?);
            }
            let mut bind = HashMap::new();
            for (i, (n, p)) in srcs.iter().enumerate() {
                bind_bus(&mut bind, &format!("in{i}_"), &x[*n][*p as usize]);
            }
            let o = b.instantiate("fft_unit", &units[&signs], &bind);
            y[k][part as usize] = take_bus(&o, "Y", width);
        }
        Ok(y)
    }

    /// Absolute value: `A{bit} -> M{bit}`, `|a| = (a XOR s) + s` with `s`
    /// the sign bit.
    pub fn abs_unit(&self, width: usize) -> Result<Netlist> {
        check_width(width, 1)?;
        let cla = self.cla(width)?;
        let mut b = self.builder(format!("abs{width}"));
        let a = b.input_bus("A", width);
        let s = a[width - 1].clone();
        let flipped: Vec<String> = a.iter().map(|x| b.xor(x, &s)).collect::<std::result::Result<_, _>>()?;
        let mut bind = HashMap::new();
        bind_bus(&mut bind, "A", &flipped);
        bind_bus(&mut bind, "B", &vec![LOW.to_string(); width]);
        bind.insert("C0".into(), s);
        let o = b.instantiate(&format!("cla{width}"), &cla, &bind);
        b.output_bus("M", &take_bus(&o, "S", width));
        Ok(b.finish()?)
    }

    /// Conditional negation: `A{bit}, N -> Y{bit}` with `Y = N ? -A : A`.
    pub fn negate_unit(&self, width: usize) -> Result<Netlist> {
        check_width(width, 1)?;
        let cla = self.cla(width)?;
        let mut b = self.builder(format!("neg{width}"));
        let a = b.input_bus("A", width);
        let n = b.input("N");
        let flipped: Vec<String> = a.iter().map(|x| b.xor(x, &n)).collect::<std::result::Result<_, _>>()?;
        let mut bind = HashMap::new();
        bind_bus(&mut bind, "A", &flipped);
        bind_bus(&mut bind, "B", &vec![LOW.to_string(); width]);
        bind.insert("C0".into(), n);
        let o = b.instantiate(&format!("cla{width}"), &cla, &bind);
        b.output_bus("Y", &take_bus(&o, "S", width));
        Ok(b.finish()?)
    }

    /// 8-point FFT with ports named as in [`Synth::dft4`].
    pub fn fft8(&self, width: usize, fmt: FixedPointFormat) -> Result<Netlist> {
        if !(4..=32).contains(&width) || !width.is_power_of_two() {
            return Err(FftError::InvalidWidth(width));
        }
        fmt.check(width)?;
        let f = fmt.frac_bits as usize;
        let coef = fmt.coefficient();

        let cla = self.cla(width)?;
        let cmp = self.complement_unit(width)?;
        let abs = self.abs_unit(width)?;
        let mul = self.vedic(width)?;
        let neg = self.negate_unit(2 * width)?;
        let dp = Datapath { cla: &cla, cmp: &cmp, cla_type: format!("cla{width}"), cmp_type: format!("cmp{width}") };

        let mut b = self.builder(format!("fft8_{width}"));
        let x = dft_inputs(&mut b, 8, width);
        let evens: Vec<_> = (0..4).map(|n| x[2 * n].clone()).collect();
        let odds: Vec<_> = (0..4).map(|n| x[2 * n + 1].clone()).collect();
        let e = self.dft4_body_instance(&mut b, width, &evens)?;
        let o = self.dft4_body_instance(&mut b, width, &odds)?;

        let coef_bits: Vec<String> =
            (0..width).map(|i| if coef >> i & 1 == 1 { HIGH } else { LOW }.to_string()).collect();

        // floor(x·(±C) / 2^f) mod 2^width, sharing |x|·C between signs.
        let mut magnitude: HashMap<(usize, usize), (Vec<String>, String)> = HashMap::new();
        let mut scaled = |b: &mut Builder, k: usize, part: usize, negative: bool| -> Result<Vec<String>> {
            if let Entry::Vacant(slot) = magnitude.entry((k, part)) {
                let src = &o[k][part];
                let mut bind = HashMap::new();
                bind_bus(&mut bind, "A", src);
                let m = take_bus(&b.instantiate(&format!("abs{width}"), &abs, &bind), "M", width);
                let mut bind = HashMap::new();
                bind_bus(&mut bind, "A", &m);
                bind_bus(&mut bind, "B", &coef_bits);
                let p = b.instantiate(&format!("vedic{width}"), &mul, &bind);
                let p = take_bus(&p, product_prefix(width), 2 * width);
                slot.insert((p, src[width - 1].clone()));
            }
            let (p, sign) = magnitude[&(k, part)].clone();
            let sign = if negative { b.inv(&sign)? } else { sign };
            let mut bind = HashMap::new();
            bind_bus(&mut bind, "A", &p);
            bind.insert("N".into(), sign);
            let y = take_bus(&b.instantiate(&format!("neg{}", 2 * width), &neg, &bind), "Y", 2 * width);
            Ok(y[f..f + width].to_vec())
        };

        // W^1 = (1 - j)/√2: (a + jb)·C(1 - j) = C(a + b) + jC(b - a).
        // W^3 = -(1 + j)/√2: (a + jb)·(-C)(1 + j) = C(b - a) - jC(a + b).
        // As (a·c - b·d) + j(a·d + b·c) with (c, d) = (C, -C) and (-C, -C).
        let mut t = vec![[Vec::new(), Vec::new()]; 4];
        for (k, c_neg, d_neg) in [(1usize, false, true), (3, true, true)] {
            let ac = scaled(&mut b, k, 0, c_neg)?;
            let bd = scaled(&mut b, k, 1, d_neg)?;
            let ad = scaled(&mut b, k, 0, d_neg)?;
            let bc = scaled(&mut b, k, 1, c_neg)?;
            let re = dp.sub(&mut b, &ac, &bd);
            let im = dp.add(&mut b, &ad, &bc, LOW).0;
            t[k] = [re, im];
        }

        let mut y = vec![[Vec::new(), Vec::new()]; 8];
        for k in 0..4 {
            let [er, ei] = &e[k];
            let (lo, hi) = match k {
                0 | 1 | 3 => {
                    let [tr, ti] = if k == 0 { o[0].clone() } else { t[k].clone() };
                    (
                        [dp.add(&mut b, er, &tr, LOW).0, dp.add(&mut b, ei, &ti, LOW).0],
                        [dp.sub(&mut b, er, &tr), dp.sub(&mut b, ei, &ti)],
                    )
                }
                _ => {
                    // t = -j·O = (O_im, -O_re).
                    let [or, oi] = &o[2];
                    (
                        [dp.add(&mut b, er, oi, LOW).0, dp.sub(&mut b, ei, or)],
                        [dp.sub(&mut b, er, oi), dp.add(&mut b, ei, or, LOW).0],
                    )
                }
            };
            y[k] = lo;
            y[k + 4] = hi;
        }
        dft_outputs(&mut b, &y);
        Ok(b.finish()?)
    }

    fn dft4_body_instance(
        &self,
        b: &mut Builder,
        width: usize,
        x: &[[Vec<String>; 2]],
    ) -> Result<Vec<[Vec<String>; 2]>> {
        let d = self.dft4(width)?;
        let mut bind = HashMap::new();
        for (n, parts) in x.iter().enumerate() {
            bind_bus(&mut bind, &port("x", n, Part::Re), &parts[0]);
            bind_bus(&mut bind, &port("x", n, Part::Im), &parts[1]);
        }
        let o = b.instantiate("dft4", &d, &bind);
        Ok((0..4)
            .map(|k| [take_bus(&o, &port("X", k, Part::Re), width), take_bus(&o, &port("X", k, Part::Im), width)])
            .collect())
    }
}

fn dft_inputs(b: &mut Builder, points: usize, width: usize) -> Vec<[Vec<String>; 2]> {
    (0..points)
        .map(|n| [b.input_bus(&port("x", n, Part::Re), width), b.input_bus(&port("x", n, Part::Im), width)])
        .collect()
}

fn dft_outputs(b: &mut Builder, y: &[[Vec<String>; 2]]) {
    for (k, [re, im]) in y.iter().enumerate() {
        b.output_bus(&port("X", k, Part::Re), re);
        b.output_bus(&port("X", k, Part::Im), im);
    }
}

pub fn fft_unit(width: usize, signs: SignPattern) -> Result<Netlist> {
    Synth::default().fft_unit(width, signs)
}

pub fn dft4(width: usize) -> Result<Netlist> {
    Synth::default().dft4(width)
}

pub fn fft8(width: usize, fmt: FixedPointFormat) -> Result<Netlist> {
    Synth::default().fft8(width, fmt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DftMode {
    /// Trivial twiddles only (1, 2 or 4 points).
    Exact,
    /// 8 points, twiddles quantized exactly as [`fft8`] does.
    Quantized(FixedPointFormat),
}

/// Software transform with the generators' arithmetic: direct summation
/// mod `2^width` in exact mode; in quantized mode two direct 4-point DFTs
/// followed by the fixed-point twiddle stage and butterflies.
pub fn reference_dft(inputs: &[ComplexWord], width: u32, mode: DftMode) -> Result<Vec<ComplexWord>> {
    if width == 0 || width > 32 {
        return Err(FftError::InvalidWidth(width as usize));
    }
    match mode {
        DftMode::Exact => exact_dft(inputs, width),
        DftMode::Quantized(fmt) => {
            fmt.check(width as usize)?;
            if inputs.len() != 8 {
                return Err(FftError::UnsupportedPoints(inputs.len()));
            }
            quantized_fft8(inputs, width, fmt)
        }
    }
}

fn exact_dft(x: &[ComplexWord], width: u32) -> Result<Vec<ComplexWord>> {
    let n = x.len();
    if !matches!(n, 1 | 2 | 4) {
        return Err(FftError::UnsupportedPoints(n));
    }
    Ok((0..n)
        .map(|k| {
            let (mut re, mut im) = (0i64, 0i64);
            for (m, v) in x.iter().enumerate() {
                let (a, b) = (v.re as i64, v.im as i64);
                // e^{-2πi mk/n} in quarter turns.
                let q = (m * k * 4 / n) % 4;
                let (dr, di) = match q {
                    0 => (a, b),
                    1 => (b, -a),
                    2 => (-a, -b),
                    _ => (-b, a),
                };
                re += dr;
                im += di;
            }
            ComplexWord::new(re, im, width)
        })
        .collect())
}

fn quantized_fft8(x: &[ComplexWord], width: u32, fmt: FixedPointFormat) -> Result<Vec<ComplexWord>> {
    let evens: Vec<ComplexWord> = (0..4).map(|n| x[2 * n]).collect();
    let odds: Vec<ComplexWord> = (0..4).map(|n| x[2 * n + 1]).collect();
    let e = exact_dft(&evens, width)?;
    let o = exact_dft(&odds, width)?;
    let c = fmt.coefficient() as i64;
    let f = fmt.frac_bits;
    let scale = |v: i64, coef: i64| (v * coef).div_euclid(1i64 << f);

    let mut t = [ComplexWord::default(); 4];
    t[0] = o[0];
    let (a, b) = (o[2].re_signed(width), o[2].im_signed(width));
    t[2] = ComplexWord::new(b, -a, width);
    for (k, cr, ci) in [(1usize, c, -c), (3, -c, -c)] {
        let (a, b) = (o[k].re_signed(width), o[k].im_signed(width));
        t[k] = ComplexWord::new(scale(a, cr) - scale(b, ci), scale(a, ci) + scale(b, cr), width);
    }
    let mut out = vec![ComplexWord::default(); 8];
    for k in 0..4 {
        let (er, ei) = (e[k].re as i64, e[k].im as i64);
        let (tr, ti) = (t[k].re as i64, t[k].im as i64);
        out[k] = ComplexWord::new(er + tr, ei + ti, width);
        out[k + 4] = ComplexWord::new(er - tr, ei - ti, width);
    }
    Ok(out)
}
