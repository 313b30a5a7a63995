use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A property value.
#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Text(String),
    Number(f64),
    Integer(i64),
    Boolean(bool),
    /// Numeric feature vector; compared with nothing, read by similarity functions.
    Vector(Vec<f64>),
}

/// Comparison class of a literal. `Number` and `Integer` share [`LiteralKind::Numeric`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LiteralKind {
    Text,
    Numeric,
    Boolean,
    Vector,
}

impl fmt::Display for LiteralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LiteralKind::Text => "text",
            LiteralKind::Numeric => "numeric",
            LiteralKind::Boolean => "boolean",
            LiteralKind::Vector => "vector",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot compare {left} with {right}")]
pub struct KindMismatch {
    pub left: LiteralKind,
    pub right: LiteralKind,
}

impl Literal {
    pub fn kind(&self) -> LiteralKind {
        match self {
            Literal::Text(_) => LiteralKind::Text,
            Literal::Number(_) | Literal::Integer(_) => LiteralKind::Numeric,
            Literal::Boolean(_) => LiteralKind::Boolean,
            Literal::Vector(_) => LiteralKind::Vector,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Literal::Number(x) => Some(x),
            Literal::Integer(i) => Some(i as f64),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Literal::Text(s) => Some(s),
            _ => None,
        }
    }

    /// True when every number inside the literal is finite.
    pub fn is_finite(&self) -> bool {
        match self {
            Literal::Number(x) => x.is_finite(),
            Literal::Vector(v) => v.iter().all(|x| x.is_finite()),
            _ => true,
        }
    }

    /// Orders two literals of compatible kinds. Integers compare exactly
    /// with integers; any pairing with a float compares as `f64`.
    /// Vectors are not ordered against anything.
    pub fn compare(&self, other: &Literal) -> Result<Ordering, KindMismatch> {
        let mismatch = || KindMismatch {
            left: self.kind(),
            right: other.kind(),
        };
        match (self, other) {
            (Literal::Integer(a), Literal::Integer(b)) => Ok(a.cmp(b)),
            (Literal::Text(a), Literal::Text(b)) => Ok(a.cmp(b)),
            (Literal::Boolean(a), Literal::Boolean(b)) => Ok(a.cmp(b)),
            (Literal::Number(_) | Literal::Integer(_), Literal::Number(_) | Literal::Integer(_)) => {
                let (a, b) = (self.as_f64().unwrap(), other.as_f64().unwrap());
                Ok(a.total_cmp(&b))
            }
            _ => Err(mismatch()),
        }
    }
}

impl From<&str> for Literal {
    fn from(s: &str) -> Self {
        Literal::Text(s.to_owned())
    }
}

impl From<String> for Literal {
    fn from(s: String) -> Self {
        Literal::Text(s)
    }
}

impl From<f64> for Literal {
    fn from(x: f64) -> Self {
        Literal::Number(x)
    }
}

impl From<i64> for Literal {
    fn from(i: i64) -> Self {
        Literal::Integer(i)
    }
}

impl From<bool> for Literal {
    fn from(b: bool) -> Self {
        Literal::Boolean(b)
    }
}

impl From<Vec<f64>> for Literal {
    fn from(v: Vec<f64>) -> Self {
        Literal::Vector(v)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Text(s) => f.write_str(s),
            Literal::Number(x) => write!(f, "{x}"),
            Literal::Integer(i) => write!(f, "{i}"),
            Literal::Boolean(b) => write!(f, "{b}"),
            Literal::Vector(v) => {
                f.write_str("[")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}

// JSON mapping: string, bool, integer, float, array of numbers.
impl Serialize for Literal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Literal::Text(s) => serializer.serialize_str(s),
            Literal::Number(x) => serializer.serialize_f64(*x),
            Literal::Integer(i) => serializer.serialize_i64(*i),
            Literal::Boolean(b) => serializer.serialize_bool(*b),
            Literal::Vector(v) => v.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct LiteralVisitor;

        impl<'de> Visitor<'de> for LiteralVisitor {
            type Value = Literal;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a string, number, boolean, or array of numbers")
            }

            fn visit_bool<E: de::Error>(self, v: bool) -> Result<Literal, E> {
                Ok(Literal::Boolean(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Literal, E> {
                Ok(Literal::Integer(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Literal, E> {
                Ok(i64::try_from(v)
                    .map(Literal::Integer)
                    .unwrap_or(Literal::Number(v as f64)))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Literal, E> {
                Ok(Literal::Number(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Literal, E> {
                Ok(Literal::Text(v.to_owned()))
            }

            fn visit_string<E: de::Error>(self, v: String) -> Result<Literal, E> {
                Ok(Literal::Text(v))
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Literal, A::Error> {
                let mut out = Vec::with_capacity(seq.size_hint().unwrap_or(0));
                while let Some(x) = seq.next_element::<f64>()? {
                    out.push(x);
                }
                Ok(Literal::Vector(out))
            }
        }

        deserializer.deserialize_any(LiteralVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_kinds_compare_across_variants() {
        assert_eq!(
            Literal::Integer(1).compare(&Literal::Number(0.9)),
            Ok(Ordering::Greater)
        );
        assert_eq!(Literal::Number(2.0).compare(&Literal::Integer(2)), Ok(Ordering::Equal));
        assert_eq!(
            Literal::Integer(i64::MAX).compare(&Literal::Integer(i64::MAX - 1)),
            Ok(Ordering::Greater)
        );
    }

    #[test]
    fn cross_kind_is_a_type_error() {
        let err = Literal::from("0.9").compare(&Literal::Number(0.9)).unwrap_err();
        assert_eq!(err.left, LiteralKind::Text);
        assert_eq!(err.right, LiteralKind::Numeric);
        assert!(Literal::Boolean(true).compare(&Literal::Integer(1)).is_err());
        assert!(Literal::Vector(vec![1.0]).compare(&Literal::Vector(vec![1.0])).is_err());
    }

    #[test]
    fn json_mapping() {
        let cases = [
            (r#""abc""#, Literal::from("abc")),
            ("3", Literal::Integer(3)),
            ("-3", Literal::Integer(-3)),
            ("0.91", Literal::Number(0.91)),
            ("1.0", Literal::Number(1.0)),
            ("true", Literal::Boolean(true)),
            ("[1.0,0.5]", Literal::Vector(vec![1.0, 0.5])),
        ];
        for (json, lit) in cases {
            let parsed: Literal = serde_json::from_str(json).unwrap();
            assert_eq!(parsed, lit, "{json}");
            let back: Literal = serde_json::from_str(&serde_json::to_string(&lit).unwrap()).unwrap();
            assert_eq!(back, lit);
        }
        assert!(serde_json::from_str::<Literal>("null").is_err());
        assert!(serde_json::from_str::<Literal>(r#"{"a":1}"#).is_err());
    }
}
