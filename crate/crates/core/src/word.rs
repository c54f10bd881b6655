//! 256-bit machine words, 20-byte addresses and 32-byte blobs.

use std::fmt;
use std::ops::{BitAnd, BitAndAssign, BitOr, BitOrAssign, Not};
use std::str::FromStr;

use ruint::aliases::U256;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Unsigned 256-bit word with wrap-around arithmetic.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(U256);

impl Word {
    pub const ZERO: Word = Word(U256::ZERO);
    pub const ONE: Word = Word(U256::from_limbs([1, 0, 0, 0]));
    pub const MAX: Word = Word(U256::MAX);
    pub const BITS: usize = 256;

    pub fn from_u64(v: u64) -> Self {
        Word(U256::from(v))
    }

    /// Single-bit mask `1 << index`. Panics when `index >= 256`.
    pub fn bit(index: usize) -> Self {
        assert!(index < Self::BITS, "bit index {index} out of range");
        let mut w = U256::ZERO;
        w.set_bit(index, true);
        Word(w)
    }

    pub fn test_bit(&self, index: usize) -> bool {
        index < Self::BITS && self.0.bit(index)
    }

    pub fn with_bit(mut self, index: usize) -> Self {
        self.0.set_bit(index, true);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// True when every bit of `mask` is set in `self`.
    pub fn contains(&self, mask: Word) -> bool {
        (*self & mask) == mask
    }

    pub fn intersects(&self, mask: Word) -> bool {
        !(*self & mask).is_zero()
    }

    pub fn count_ones(&self) -> usize {
        self.0.count_ones()
    }

    /// Indexes of set bits, ascending.
    pub fn bits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..Self::BITS).filter(move |i| self.0.bit(*i))
    }

    pub fn lowest_bit(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.0.trailing_zeros())
        }
    }

    pub fn wrapping_add(self, rhs: Word) -> Word {
        Word(self.0.wrapping_add(rhs.0))
    }

    pub fn wrapping_sub(self, rhs: Word) -> Word {
        Word(self.0.wrapping_sub(rhs.0))
    }

    pub fn wrapping_mul(self, rhs: Word) -> Word {
        Word(self.0.wrapping_mul(rhs.0))
    }

    pub fn checked_div(self, rhs: Word) -> Option<Word> {
        self.0.checked_div(rhs.0).map(Word)
    }

    pub fn to_be_bytes(&self) -> [u8; 32] {
        self.0.to_be_bytes::<32>()
    }

    pub fn from_be_bytes(bytes: [u8; 32]) -> Self {
        Word(U256::from_be_bytes(bytes))
    }

    /// Low 64 bits when the value fits.
    pub fn to_u64(&self) -> Option<u64> {
        u64::try_from(self.0).ok()
    }

    pub fn to_binary(&self) -> String {
        format!("{:b}", self.0)
    }

    pub fn to_hex(&self) -> String {
        format!("{:#x}", self.0)
    }
}

impl From<u64> for Word {
    fn from(v: u64) -> Self {
        Word::from_u64(v)
    }
}

impl BitAnd for Word {
    type Output = Word;
    fn bitand(self, rhs: Word) -> Word {
        Word(self.0 & rhs.0)
    }
}

impl BitOr for Word {
    type Output = Word;
    fn bitor(self, rhs: Word) -> Word {
        Word(self.0 | rhs.0)
    }
}

impl Not for Word {
    type Output = Word;
    fn not(self) -> Word {
        Word(!self.0)
    }
}

impl BitAndAssign for Word {
    fn bitand_assign(&mut self, rhs: Word) {
        self.0 &= rhs.0;
    }
}

impl BitOrAssign for Word {
    fn bitor_assign(&mut self, rhs: Word) {
        self.0 |= rhs.0;
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({})", self.to_hex())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid number literal `{0}`")]
pub struct ParseWordError(pub String);

impl FromStr for Word {
    type Err = ParseWordError;

    /// Decimal, or hexadecimal with a `0x` prefix.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseWordError(s.to_string());
        if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            if hex.is_empty() {
                return Err(err());
            }
            U256::from_str_radix(hex, 16).map(Word).map_err(|_| err())
        } else {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            U256::from_str_radix(s, 10).map(Word).map_err(|_| err())
        }
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// 20-byte account or contract address.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0; 20]);

    pub fn is_zero(&self) -> bool {
        self.0 == [0; 20]
    }

    pub fn to_word(&self) -> Word {
        let mut b = [0u8; 32];
        b[12..].copy_from_slice(&self.0);
        Word::from_be_bytes(b)
    }

    /// Low 20 bytes of a word.
    pub fn from_word(w: Word) -> Self {
        let b = w.to_be_bytes();
        let mut a = [0u8; 20];
        a.copy_from_slice(&b[12..]);
        Address(a)
    }

    /// Deterministic address for test accounts and operators.
    pub fn from_label(label: &str) -> Self {
        use sha2::{Digest, Sha256};
        let h = Sha256::digest(label.as_bytes());
        let mut a = [0u8; 20];
        a.copy_from_slice(&h[12..]);
        Address(a)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid address `{0}`")]
pub struct ParseAddressError(pub String);

impl FromStr for Address {
    type Err = ParseAddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex_part = s.strip_prefix("0x").unwrap_or(s);
        let bytes = hex::decode(hex_part).map_err(|_| ParseAddressError(s.to_string()))?;
        let arr: [u8; 20] = bytes.try_into().map_err(|_| ParseAddressError(s.to_string()))?;
        Ok(Address(arr))
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// 32 raw bytes, e.g. a content hash or a `bytes32` value.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bytes32(pub [u8; 32]);

impl Bytes32 {
    pub const ZERO: Bytes32 = Bytes32([0; 32]);

    /// Left-aligned, zero-padded UTF-8 text; longer text is hashed.
    pub fn from_text(text: &str) -> Self {
        let raw = text.as_bytes();
        if raw.len() <= 32 {
            let mut b = [0u8; 32];
            b[..raw.len()].copy_from_slice(raw);
            Bytes32(b)
        } else {
            Self::sha256(raw)
        }
    }

    pub fn sha256(data: &[u8]) -> Self {
        use sha2::{Digest, Sha256};
        Bytes32(Sha256::digest(data).into())
    }

    pub fn to_word(&self) -> Word {
        Word::from_be_bytes(self.0)
    }

    pub fn from_word(w: Word) -> Self {
        Bytes32(w.to_be_bytes())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let s = s.strip_prefix("0x").unwrap_or(s);
        let v = hex::decode(s).ok()?;
        Some(Bytes32(v.try_into().ok()?))
    }
}

impl fmt::Display for Bytes32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_hex())
    }
}

impl fmt::Debug for Bytes32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Bytes32 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bytes32 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Bytes32::from_hex(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid bytes32 `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_plus_one_wraps_to_zero() {
        assert_eq!(Word::MAX.wrapping_add(Word::ONE), Word::ZERO);
    }

    #[test]
    fn zero_minus_one_wraps_to_max() {
        assert_eq!(Word::ZERO.wrapping_sub(Word::ONE), Word::MAX);
    }

    #[test]
    fn division_by_zero_is_none() {
        assert_eq!(Word::from(7).checked_div(Word::ZERO), None);
        assert_eq!(Word::from(7).checked_div(Word::from(2)), Some(Word::from(3)));
    }

    #[test]
    fn bit_masks_match_powers_of_two() {
        assert_eq!(Word::bit(0), Word::from(1));
        assert_eq!(Word::bit(4), Word::from(16));
        assert!(Word::bit(255).test_bit(255));
        assert_eq!(Word::from(0b10110).bits().collect::<Vec<_>>(), vec![1, 2, 4]);
    }

    #[test]
    fn contains_requires_all_bits() {
        let m = Word::from(0b110);
        assert!(m.contains(Word::from(0b100)));
        assert!(!m.contains(Word::from(0b101)));
        assert!(m.intersects(Word::from(0b101)));
    }

    #[test]
    fn parse_and_render() {
        let w: Word = "0x10".parse().unwrap();
        assert_eq!(w, Word::from(16));
        assert_eq!(w.to_binary(), "10000");
        assert_eq!("42".parse::<Word>().unwrap().to_string(), "42");
        assert!("4x2".parse::<Word>().is_err());
        assert!("".parse::<Word>().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let w = Word::bit(200);
        let j = serde_json::to_string(&w).unwrap();
        assert_eq!(serde_json::from_str::<Word>(&j).unwrap(), w);
    }

    #[test]
    fn address_word_round_trip() {
        let a = Address::from_label("alice");
        assert_eq!(Address::from_word(a.to_word()), a);
        assert_eq!(a.to_string().parse::<Address>().unwrap(), a);
    }

    #[test]
    fn bytes32_text_is_left_aligned() {
        let b = Bytes32::from_text("E1");
        assert_eq!(&b.0[..2], b"E1");
        assert_eq!(b.0[2..], [0u8; 30]);
    }
}
