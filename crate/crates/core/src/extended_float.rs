//! Serde representation of floats that may be infinite or NaN: finite
//! values are numbers, the others the strings `"inf"`, `"-inf"` and `"nan"`.
//! Use with `#[serde(with = "crate::extended_float")]`.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    match *v {
        v if v.is_finite() => s.serialize_f64(v),
        v if v.is_nan() => s.serialize_str("nan"),
        v if v > 0.0 => s.serialize_str("inf"),
        _ => s.serialize_str("-inf"),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Number(f64),
    Text(String),
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    match Repr::deserialize(d)? {
        Repr::Number(v) => Ok(v),
        Repr::Text(t) => match t.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(de::Error::custom(format!("expected a number, \"inf\", \"-inf\" or \"nan\", got {other:?}"))),
        },
    }
}

/// The same representation for each element of a `Vec<f64>`.
pub mod vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Item(#[serde(with = "super")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| Item(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Item>::deserialize(d)?.into_iter().map(|Item(x)| x).collect())
    }
}

#[cfg(test)]
mod tests {
    #[derive(Debug, serde::Serialize, serde::Deserialize)]
    struct Row {
        #[serde(with = "super")]
        x: f64,
        #[serde(with = "super::vec")]
        xs: Vec<f64>,
    }

    #[test]
    fn round_trip() {
        let row = Row {
            x: f64::NEG_INFINITY,
            xs: vec![1.5, f64::INFINITY, f64::NAN],
        };
        let text = serde_json::to_string(&row).unwrap();
        assert_eq!(text, r#"{"x":"-inf","xs":[1.5,"inf","nan"]}"#);
        let back: Row = serde_json::from_str(&text).unwrap();
        assert_eq!(back.x, f64::NEG_INFINITY);
        assert_eq!(&back.xs[..2], &[1.5, f64::INFINITY]);
        assert!(back.xs[2].is_nan());
    }
}
