//! Classical bit strings and BB84 basis strings.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitsError {
    #[error("invalid bit character {0:?}")]
    InvalidChar(char),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// An ordered sequence of bits.
///
/// Displayed and parsed as a string of `0`/`1` characters, position 0 first.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| rng.gen::<bool>()).collect())
    }

    /// Low `n` bits of `value`, most significant first.
    pub fn from_u64(value: u64, n: usize) -> Self {
        Self((0..n).map(|i| (value >> (n - 1 - i)) & 1 == 1).collect())
    }

    /// Interprets the string as a big-endian integer. Only meaningful for `len() <= 64`.
    pub fn to_u64(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// Unpacks `bytes` most-significant-bit first and keeps the first `n_bits`.
    pub fn from_bytes(bytes: &[u8], n_bits: usize) -> Self {
        Self(
            (0..n_bits)
                .map(|i| bytes.get(i / 8).is_some_and(|byte| (byte >> (7 - i % 8)) & 1 == 1))
                .collect(),
        )
    }

    /// Packs the bits most-significant-bit first, zero-padding the last byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.0.len().div_ceil(8)];
        for (i, _) in self.0.iter().enumerate().filter(|(_, &b)| b) {
            out[i / 8] |= 1 << (7 - i % 8);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn push(&mut self, value: bool) {
        self.0.push(value);
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<bool> {
        self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString, BitsError> {
        self.check_len(other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut bits = self.0.clone();
        bits.extend_from_slice(&other.0);
        Self(bits)
    }

    pub fn slice(&self, start: usize, end: usize) -> BitString {
        Self(self.0[start..end].to_vec())
    }

    /// XOR of the bits at positions where `selector` equals `when`.
    pub fn parity_where(&self, selector: &BitString, when: bool) -> Result<bool, BitsError> {
        self.check_len(selector.len())?;
        Ok(self
            .0
            .iter()
            .zip(&selector.0)
            .filter(|(_, &s)| s == when)
            .fold(false, |acc, (&b, _)| acc ^ b))
    }

    /// True iff `self` and `other` agree on every position where `selector` equals `when`.
    pub fn agrees_where(&self, other: &BitString, selector: &BitString, when: bool) -> bool {
        self.len() == other.len()
            && self.len() == selector.len()
            && (0..self.len()).all(|i| selector.0[i] != when || self.0[i] == other.0[i])
    }

    fn check_len(&self, actual: usize) -> Result<(), BitsError> {
        if actual != self.len() {
            return Err(BitsError::LengthMismatch { expected: self.len(), actual });
        }
        Ok(())
    }
}

impl Index<usize> for BitString {
    type Output = bool;

    fn index(&self, i: usize) -> &bool {
        &self.0[i]
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        Self(bits)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitsError::InvalidChar(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl From<BitString> for String {
    fn from(bits: BitString) -> Self {
        bits.to_string()
    }
}

impl TryFrom<String> for BitString {
    type Error = BitsError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Per-wire basis choice: `0` is the computational basis, `1` the Hadamard basis.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasisString(BitString);

impl BasisString {
    pub fn new(bits: BitString) -> Self {
        Self(bits)
    }

    pub fn computational(n: usize) -> Self {
        Self(BitString::zeros(n))
    }

    pub fn hadamard(n: usize) -> Self {
        Self(BitString::ones(n))
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self(BitString::random(n, rng))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_hadamard(&self, i: usize) -> bool {
        self.0[i]
    }

    /// Number of Hadamard-basis positions.
    pub fn hadamard_count(&self) -> usize {
        self.0.count_ones()
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn into_bits(self) -> BitString {
        self.0
    }
}

impl From<BitString> for BasisString {
    fn from(bits: BitString) -> Self {
        Self(bits)
    }
}

impl FromStr for BasisString {
    type Err = BitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(Self)
    }
}

impl fmt::Display for BasisString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for BasisString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BasisString({})", self.0)
    }
}
