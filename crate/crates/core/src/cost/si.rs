// SPDX-License-Identifier: Apache-2.0

//! SI-suffixed numbers: `"3.00u"`, `"16.32p"`, `"28.6z"`.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const SUFFIXES: [(char, i32); 7] = [('m', -3), ('u', -6), ('n', -9), ('p', -12), ('f', -15), ('a', -18), ('z', -21)];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{0}` as an SI quantity")]
pub struct SiParseError(pub String);

/// Parses a decimal with an optional SI suffix. The mantissa and the
/// suffix's power of ten are handed to the float parser together, so the
/// result is the correctly rounded value of the written decimal.
pub fn parse_si(s: &str) -> Result<f64, SiParseError> {
    let t = s.trim();
    let err = || SiParseError(s.to_string());
    let last = t.chars().last().ok_or_else(err)?;
    let (mantissa, exp) = match SUFFIXES.iter().find(|(c, _)| *c == last) {
        Some(&(c, e)) => (&t[..t.len() - c.len_utf8()], e),
        None if last == 'µ' => (&t[..t.len() - 'µ'.len_utf8()], -6),
        None => (t, 0),
    };
    if mantissa.is_empty() || mantissa.contains(['e', 'E']) && exp != 0 {
        return Err(err());
    }
    let text = if exp == 0 { mantissa.to_string() } else { format!("{mantissa}e{exp}") };
    let v: f64 = text.parse().map_err(|_| err())?;
    if !v.is_finite() {
        return Err(err());
    }
    Ok(v)
}

/// Formats with the largest suffix that keeps the mantissa at or above 1.
pub fn format_si(value: f64, decimals: usize) -> String {
    let mag = value.abs();
    if mag == 0.0 || mag >= 1.0 || !mag.is_finite() {
        return format!("{value:.decimals$}");
    }
    for &(c, e) in &SUFFIXES {
        let scale = 10f64.powi(e);
        let m = value / scale;
        // Rounding may carry the mantissa up to 1000; stay on this suffix
        // only if it prints below that.
        if m.abs() >= 1.0 - 0.5 * 10f64.powi(-(decimals as i32)) {
            return format!("{m:.decimals$}{c}");
        }
    }
    let (c, e) = SUFFIXES[SUFFIXES.len() - 1];
    format!("{:.decimals$}{c}", value / 10f64.powi(e))
}

/// A quantity that keeps the text it was written as.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    value: f64,
    text: String,
}

impl Quantity {
    pub fn parse(s: &str) -> Result<Self, SiParseError> {
        Ok(Self { value: parse_si(s)?, text: s.trim().to_string() })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl From<f64> for Quantity {
    fn from(value: f64) -> Self {
        Self { value, text: format!("{value}") }
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Quantity;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an SI-suffixed string")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Quantity, E> {
                Quantity::parse(v).map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Quantity, E> {
                Ok(v.into())
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Quantity, E> {
                Ok((v as f64).into())
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Quantity, E> {
                Ok((v as f64).into())
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_suffix_exactly() {
        assert_eq!(parse_si("3.00u").unwrap(), 3.00e-6);
        assert_eq!(parse_si("16.32p").unwrap(), 16.32e-12);
        assert_eq!(parse_si("28.6z").unwrap(), 28.6e-21);
        assert_eq!(parse_si("1a").unwrap(), 1e-18);
        assert_eq!(parse_si("2.5f").unwrap(), 2.5e-15);
        assert_eq!(parse_si("11.941n").unwrap(), 11.941e-9);
        assert_eq!(parse_si("16.156m").unwrap(), 16.156e-3);
        assert_eq!(parse_si("9.4").unwrap(), 9.4);
        assert_eq!(parse_si("3µ").unwrap(), 3e-6);
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "u", "3.0x", "1e3u", "abc", "inf"] {
            assert!(parse_si(s).is_err(), "{s}");
        }
    }

    #[test]
    fn formats() {
        assert_eq!(format_si(3.00e-6, 2), "3.00u");
        assert_eq!(format_si(16.32e-12, 2), "16.32p");
        assert_eq!(format_si(28.6e-21, 1), "28.6z");
        assert_eq!(format_si(0.0, 2), "0.00");
        assert_eq!(format_si(42.0, 1), "42.0");
        assert_eq!(format_si(999.999e-9, 2), "1.00u");
    }

    #[test]
    fn quantity_keeps_text() {
        let q: Quantity = serde_json::from_str("\"28.6z\"").unwrap();
        assert_eq!(q.value(), 28.6e-21);
        assert_eq!(serde_json::to_string(&q).unwrap(), "\"28.6z\"");
        let q: Quantity = serde_json::from_str("9.4").unwrap();
        assert_eq!(q.value(), 9.4);
    }
}
