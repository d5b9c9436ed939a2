//! Serde adapters for floats that may be infinite (`"inf"` in JSON).

use serde::de::{self, Deserializer, Visitor};
use serde::Serializer;
use std::fmt;

pub mod extended_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtendedF64)
    }
}

/// `Vec<f64>` whose entries may be `"inf"`.
pub mod extended_f64_vec {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    #[serde(transparent)]
    struct Ext(#[serde(with = "extended_f64")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| Ext(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Ext>::deserialize(d)?.into_iter().map(|e| e.0).collect())
    }
}

/// Parses `"inf"`, `"infinity"`, `"-inf"` or a plain number.
pub fn parse_extended(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|e| format!("not a number: {s:?} ({e})")),
    }
}

struct ExtendedF64;

impl<'de> Visitor<'de> for ExtendedF64 {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        parse_extended(v).map_err(E::custom)
    }
}

/// Formats a float for CSV output: shortest round-trip form, `inf` for infinity.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Wrap {
        #[serde(with = "extended_f64")]
        m: f64,
    }

    #[test]
    fn infinity_round_trips_through_json() {
        let s = serde_json::to_string(&Wrap { m: f64::INFINITY }).unwrap();
        assert_eq!(s, r#"{"m":"inf"}"#);
        assert_eq!(serde_json::from_str::<Wrap>(&s).unwrap().m, f64::INFINITY);
        assert_eq!(serde_json::from_str::<Wrap>(r#"{"m":4}"#).unwrap().m, 4.0);
        assert!(serde_json::from_str::<Wrap>(r#"{"m":"lots"}"#).is_err());
    }

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct WrapVec {
        #[serde(with = "extended_f64_vec")]
        ms: Vec<f64>,
    }

    #[test]
    fn lists_with_infinity() {
        let w = WrapVec {
            ms: vec![0.5, f64::INFINITY],
        };
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"ms":[0.5,"inf"]}"#);
        assert_eq!(serde_json::from_str::<WrapVec>(&s).unwrap(), w);
    }

    #[test]
    fn csv_formatting() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(parse_extended("Inf").unwrap(), f64::INFINITY);
    }
}
