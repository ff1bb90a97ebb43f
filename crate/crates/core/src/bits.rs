use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A binary string, stored one bit per byte (each byte is 0 or 1).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Builds a string from raw bits; any nonzero value is read as 1.
    pub fn from_bits<I: IntoIterator<Item = u8>>(bits: I) -> Self {
        Self(bits.into_iter().map(|b| u8::from(b != 0)).collect())
    }

    /// The `n` low bits of `value`, most significant first, so that
    /// `0..2^n` enumerates `{0,1}^n` in lexicographic order.
    pub fn from_u64(value: u64, n: usize) -> Self {
        assert!(n <= 64, "from_u64 supports at most 64 bits");
        Self((0..n).map(|i| ((value >> (n - 1 - i)) & 1) as u8).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// All strings of length `n` in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = BitString> {
        assert!(n < 64);
        (0..(1u64 << n)).map(move |v| Self::from_u64(v, n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<u8> {
        self.0.get(i).copied()
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn window(&self, start: usize, k: usize) -> &[u8] {
        &self.0[start..start + k]
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    /// Value of the string read as a big-endian binary number (n <= 64).
    pub fn to_u64(&self) -> u64 {
        assert!(self.len() <= 64);
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// True if `self` embeds into `other` as a (not necessarily contiguous) subsequence.
    pub fn is_subsequence_of(&self, other: &BitString) -> bool {
        let mut it = other.0.iter();
        self.0.iter().all(|b| it.any(|c| c == b))
    }
}

impl From<Vec<u8>> for BitString {
    fn from(v: Vec<u8>) -> Self {
        Self::from_bits(v)
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::ParseBits(other)),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BitString)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\")")
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_rejects_other_characters() {
        assert_eq!("10a".parse::<BitString>(), Err(Error::ParseBits('a')));
        assert!("".parse::<BitString>().unwrap().is_empty());
    }

    #[test]
    fn lexicographic_enumeration() {
        let all: Vec<String> = BitString::all(2).map(|b| b.to_string()).collect();
        assert_eq!(all, ["00", "01", "10", "11"]);
    }

    #[test]
    fn subsequence_test() {
        let x: BitString = "101".parse().unwrap();
        assert!("11".parse::<BitString>().unwrap().is_subsequence_of(&x));
        assert!(!"00".parse::<BitString>().unwrap().is_subsequence_of(&x));
        assert!(BitString::new().is_subsequence_of(&x));
    }

    proptest! {
        #[test]
        fn ascii_round_trip(bits in proptest::collection::vec(0u8..2, 0..40)) {
            let b = BitString::from_bits(bits);
            let s = b.to_string();
            prop_assert_eq!(s.parse::<BitString>().unwrap(), b.clone());
            let json = serde_json::to_string(&b).unwrap();
            prop_assert_eq!(serde_json::from_str::<BitString>(&json).unwrap(), b);
        }
    }
}
