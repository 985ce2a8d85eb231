//! Extended-real serialization and small CSV helpers.
//!
//! JSON carries `-∞`, `+∞` and NaN as the strings `"neg_inf"`, `"pos_inf"`
//! and `"nan"`; every finite value is written as a plain number.

use serde::de::{self, Deserializer, Visitor};
use serde::Serializer;

pub const NEG_INF: &str = "neg_inf";
pub const POS_INF: &str = "pos_inf";
pub const NAN: &str = "nan";

/// Text form shared by CSV and JSON.
pub fn fmt_ext(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        NEG_INF.into()
    } else if x == f64::INFINITY {
        POS_INF.into()
    } else if x.is_nan() {
        NAN.into()
    } else {
        format!("{x}")
    }
}

pub fn parse_ext(s: &str) -> Option<f64> {
    match s.trim() {
        NEG_INF => Some(f64::NEG_INFINITY),
        POS_INF => Some(f64::INFINITY),
        NAN => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_ext).unwrap_or_default()
}

pub mod ext_real {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&fmt_ext(*x))
        }
    }

    struct ExtVisitor;

    impl Visitor<'_> for ExtVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or one of \"neg_inf\", \"pos_inf\", \"nan\"")
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
            match v {
                NEG_INF => Ok(f64::NEG_INFINITY),
                POS_INF => Ok(f64::INFINITY),
                NAN => Ok(f64::NAN),
                _ => Err(E::custom(format!("unknown sentinel {v:?}"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtVisitor)
    }
}

pub mod ext_real_opt {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::ext_real")] f64);

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        x.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

pub mod ext_real_vec {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::ext_real")] f64);

    pub fn serialize<S: Serializer>(x: &[f64], s: S) -> Result<S::Ok, S::Error> {
        x.iter().map(|&v| Wrap(v)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

/// 0-based symbols written 1-based.
pub mod one_based {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &usize, s: S) -> Result<S::Ok, S::Error> {
        (x + 1).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        usize::deserialize(d)?.checked_sub(1).ok_or_else(|| serde::de::Error::custom("symbols are 1-based"))
    }
}

/// Optional 0-based symbols written 1-based.
pub mod one_based_opt {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        x.map(|v| v + 1).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        match Option::<usize>::deserialize(d)? {
            Some(0) => Err(serde::de::Error::custom("symbols are 1-based")),
            v => Ok(v.map(|v| v - 1)),
        }
    }
}

/// Appends one CSV record; fields containing separators are quoted.
pub fn csv_line(fields: &[String]) -> String {
    let mut out = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if f.contains([',', '"', '\n']) {
            out.push('"');
            out.push_str(&f.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(f);
        }
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    struct Probe {
        #[serde(with = "ext_real")]
        v: f64,
        #[serde(with = "ext_real_opt")]
        o: Option<f64>,
    }

    #[test]
    fn sentinels_round_trip() {
        let p = Probe {
            v: f64::NEG_INFINITY,
            o: Some(1.5),
        };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"v":"neg_inf","o":1.5}"#);
        assert_eq!(serde_json::from_str::<Probe>(&s).unwrap(), p);
        assert_eq!(parse_ext("neg_inf"), Some(f64::NEG_INFINITY));
        assert_eq!(fmt_ext(0.25), "0.25");
    }

    #[test]
    fn csv_quotes_separators() {
        assert_eq!(csv_line(&["a".into(), "b,c".into()]), "a,\"b,c\"\n");
    }
}
