//! Typed values shared by the guard language, the ledger and the runtime.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::guard::EnumTable;
use crate::word::{Address, Bytes32, Word};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Type {
    Uint,
    Bool,
    Bytes32,
    Address,
    Enum(String),
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Uint => f.write_str("uint"),
            Type::Bool => f.write_str("bool"),
            Type::Bytes32 => f.write_str("bytes32"),
            Type::Address => f.write_str("address"),
            Type::Enum(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Uint(Word),
    Bool(bool),
    Bytes32(Bytes32),
    Address(Address),
    Enum { ty: String, ordinal: u32 },
}

impl Value {
    pub fn uint(v: u64) -> Self {
        Value::Uint(Word::from(v))
    }

    pub fn type_of(&self) -> Type {
        match self {
            Value::Uint(_) => Type::Uint,
            Value::Bool(_) => Type::Bool,
            Value::Bytes32(_) => Type::Bytes32,
            Value::Address(_) => Type::Address,
            Value::Enum { ty, .. } => Type::Enum(ty.clone()),
        }
    }

    /// Storage encoding: enums as ordinals, booleans as 0/1.
    pub fn to_word(&self) -> Word {
        match self {
            Value::Uint(w) => *w,
            Value::Bool(b) => Word::from(*b as u64),
            Value::Bytes32(b) => b.to_word(),
            Value::Address(a) => a.to_word(),
            Value::Enum { ordinal, .. } => Word::from(*ordinal as u64),
        }
    }

    pub fn from_word(w: Word, ty: &Type) -> Self {
        match ty {
            Type::Uint => Value::Uint(w),
            Type::Bool => Value::Bool(!w.is_zero()),
            Type::Bytes32 => Value::Bytes32(Bytes32::from_word(w)),
            Type::Address => Value::Address(Address::from_word(w)),
            Type::Enum(name) => Value::Enum {
                ty: name.clone(),
                ordinal: w.to_u64().unwrap_or(u32::MAX as u64).min(u32::MAX as u64) as u32,
            },
        }
    }

    pub fn as_uint(&self) -> Option<Word> {
        match self {
            Value::Uint(w) => Some(*w),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_address(&self) -> Option<Address> {
        match self {
            Value::Address(a) => Some(*a),
            _ => None,
        }
    }

    pub fn as_bytes32(&self) -> Option<Bytes32> {
        match self {
            Value::Bytes32(b) => Some(*b),
            _ => None,
        }
    }
}

impl Value {
    /// Reads a value of type `ty` from text: decimal or `0x` hex for uint,
    /// `true`/`false`, a `0x` 64-hex-digit string or plain text for bytes32,
    /// a member name (or `Type.MEMBER`) for enums.
    pub fn parse_text(ty: &Type, text: &str, enums: &EnumTable) -> Result<Value, String> {
        let text = text.trim();
        let bad = || format!("`{text}` is not a {ty}");
        match ty {
            Type::Uint => text.parse::<Word>().map(Value::Uint).map_err(|_| bad()),
            Type::Bool => match text {
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                _ => Err(bad()),
            },
            Type::Bytes32 => {
                if text.len() == 66 && text.starts_with("0x") {
                    Bytes32::from_hex(text).map(Value::Bytes32).ok_or_else(bad)
                } else {
                    Ok(Value::Bytes32(Bytes32::from_text(text)))
                }
            }
            Type::Address => text.parse::<Address>().map(Value::Address).map_err(|_| bad()),
            Type::Enum(name) => {
                let member = text.strip_prefix(&format!("{name}.")).unwrap_or(text);
                let ordinal = match enums.ordinal(name, member) {
                    Some(o) => o,
                    None => member.parse::<u32>().ok().filter(|o| enums.len(name).is_some_and(|n| (*o as usize) < n)).ok_or_else(bad)?,
                };
                Ok(Value::Enum { ty: name.clone(), ordinal })
            }
        }
    }

    /// Human-facing text: enum member names, printable bytes32 as text.
    pub fn display_text(&self, enums: &EnumTable) -> String {
        match self {
            Value::Enum { ty, ordinal } => enums.member(ty, *ordinal).map(str::to_string).unwrap_or_else(|| ordinal.to_string()),
            Value::Bytes32(b) => {
                let end = b.0.iter().rposition(|c| *c != 0).map_or(0, |i| i + 1);
                let body = &b.0[..end];
                if !body.is_empty() && body.iter().all(|c| c.is_ascii_graphic() || *c == b' ') && !body.starts_with(b"0x") {
                    String::from_utf8_lossy(body).into_owned()
                } else {
                    b.to_string()
                }
            }
            v => v.to_string(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Uint(w) => write!(f, "{w}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Bytes32(b) => write!(f, "{b}"),
            Value::Address(a) => write!(f, "{a}"),
            Value::Enum { ty, ordinal } => write!(f, "{ty}({ordinal})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_round_trip_per_type() {
        let cases = [
            Value::uint(42),
            Value::Bool(true),
            Value::Bool(false),
            Value::Bytes32(Bytes32::from_text("sku-1")),
            Value::Address(Address::from_label("x")),
            Value::Enum { ty: "S".into(), ordinal: 3 },
        ];
        for v in cases {
            assert_eq!(Value::from_word(v.to_word(), &v.type_of()), v);
        }
    }

    #[test]
    fn text_round_trip() {
        let mut enums = EnumTable::default();
        enums.0.insert("S".into(), vec!["A".into(), "B".into()]);
        let cases = [
            (Type::Uint, "100", Value::uint(100)),
            (Type::Bool, "true", Value::Bool(true)),
            (Type::Bytes32, "DHL", Value::Bytes32(Bytes32::from_text("DHL"))),
            (Type::Enum("S".into()), "S.B", Value::Enum { ty: "S".into(), ordinal: 1 }),
        ];
        for (ty, text, v) in cases {
            assert_eq!(Value::parse_text(&ty, text, &enums).unwrap(), v);
        }
        assert_eq!(Value::Enum { ty: "S".into(), ordinal: 1 }.display_text(&enums), "B");
        assert_eq!(Value::Bytes32(Bytes32::from_text("DHL")).display_text(&enums), "DHL");
        assert!(Value::parse_text(&Type::Uint, "ten", &enums).is_err());
        assert!(Value::parse_text(&Type::Enum("S".into()), "C", &enums).is_err());
    }
}
