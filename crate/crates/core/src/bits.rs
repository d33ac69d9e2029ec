//! Bit strings with 1-based positional access.

use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An ordered sequence of bits.
///
/// `bit(j)` is 1-based so protocol code can follow the usual subscript
/// convention; slice access through [`BitString::as_slice`] stays 0-based.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        BitString(vec![true; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        BitString((0..len).map(|_| rng.random::<bool>()).collect())
    }

    /// Little-endian expansion of the low `len` bits of `value`: bit 1 is the
    /// least significant bit. Used for exhaustive enumeration.
    pub fn from_index(value: u64, len: usize) -> Self {
        BitString((0..len).map(|k| (value >> k) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based access. Panics when `j` is 0 or past the end.
    pub fn bit(&self, j: usize) -> bool {
        assert!(j >= 1, "bit positions are 1-based");
        self.0[j - 1]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        BitString(v)
    }

    /// Bits `start..end` (0-based, half-open).
    pub fn slice(&self, start: usize, end: usize) -> BitString {
        BitString(self.0[start..end].to_vec())
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn parity(&self) -> bool {
        self.count_ones() % 2 == 1
    }

    pub fn hamming_distance(&self, other: &BitString) -> Result<usize> {
        crate::error::ensure_len(self.len(), other.len())?;
        Ok(self.iter().zip(other.iter()).filter(|(a, b)| a != b).count())
    }

    /// Keeps the bits at the given 0-based positions, in the order given.
    pub fn select(&self, positions: &[usize]) -> BitString {
        BitString(positions.iter().map(|&p| self.0[p]).collect())
    }

    /// Packs the bits into bytes, most significant bit first.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0.chunks(8).map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8) << (8 - c.len())).collect()
    }

    pub fn into_vec(self) -> Vec<bool> {
        self.0
    }
}

impl From<Vec<bool>> for BitString {
    fn from(v: Vec<bool>) -> Self {
        BitString(v)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitString(iter.into_iter().collect())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl BitXor for &BitString {
    type Output = BitString;

    /// Panics on length mismatch; use [`crate::primitives::xor_combine`]
    /// for a checked version.
    fn bitxor(self, rhs: &BitString) -> BitString {
        assert_eq!(self.len(), rhs.len(), "xor of unequal-length bit strings");
        self.iter().zip(rhs.iter()).map(|(a, b)| a ^ b).collect()
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for literal bit strings in tests and examples.
///
/// Panics on characters other than `0` and `1`.
pub fn bits(s: &str) -> BitString {
    s.parse().expect("bit literal")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_based_access() {
        let b = bits("100");
        assert!(b.bit(1));
        assert!(!b.bit(3));
    }

    #[test]
    #[should_panic]
    fn zero_index_panics() {
        bits("1").bit(0);
    }

    #[test]
    fn display_roundtrip() {
        let b = bits("0110101");
        assert_eq!(b.to_string().parse::<BitString>().unwrap(), b);
        assert!("01x".parse::<BitString>().is_err());
    }

    #[test]
    fn from_index_is_little_endian() {
        assert_eq!(BitString::from_index(0b110, 4), bits("0110"));
    }

    #[test]
    fn bytes_msb_first() {
        assert_eq!(bits("1000000011").to_bytes(), vec![0x80, 0xC0]);
    }

    #[test]
    fn serde_as_string() {
        let j = serde_json::to_string(&bits("1011")).unwrap();
        assert_eq!(j, "\"1011\"");
        let back: BitString = serde_json::from_str(&j).unwrap();
        assert_eq!(back, bits("1011"));
    }
}
