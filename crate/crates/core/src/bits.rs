//! Binary strings over `{0,1}^n` and their true prefixes.
//!
//! Bits are stored most-significant first, so the lexicographic order of
//! strings of one length coincides with the order of their integer values.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A word of length `|w| < n`, identifying the prefix condition
/// `{w} × {0,1}^{n-|w|}`. The empty word conditions on nothing.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prefix {
    bits: Vec<bool>,
}

/// A complete element of `{0,1}^n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl Prefix {
    pub fn empty() -> Self {
        Self { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// The word `wb`.
    pub fn child(&self, bit: bool) -> Prefix {
        let mut bits = Vec::with_capacity(self.bits.len() + 1);
        bits.extend_from_slice(&self.bits);
        bits.push(bit);
        Prefix { bits }
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn is_prefix_of(&self, x: &BitString) -> bool {
        x.bits.starts_with(&self.bits)
    }

    /// Position of this prefix in breadth-first (heap) order: the root is 0,
    /// the children of index `i` are `2i+1` and `2i+2`.
    pub fn heap_index(&self) -> usize {
        debug_assert!(self.bits.len() < usize::BITS as usize);
        (1usize << self.bits.len()) - 1 + word_value(&self.bits)
    }

    /// Inverse of [`Prefix::heap_index`].
    pub fn from_heap_index(index: usize) -> Prefix {
        let len = (usize::BITS - (index + 1).leading_zeros() - 1) as usize;
        let value = index + 1 - (1usize << len);
        Prefix {
            bits: value_to_bits(value, len),
        }
    }

    /// All words of length `< n`, in heap order.
    pub fn all(n: usize) -> impl Iterator<Item = Prefix> {
        (0..(1usize << n) - 1).map(Prefix::from_heap_index)
    }

    /// Checks `|w| < n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.bits.len() >= n {
            return Err(Error::Domain(format!(
                "prefix of length {} is not a true prefix for n = {n}",
                self.bits.len()
            )));
        }
        Ok(())
    }

    /// Index range `[lo, hi]` of the strings of `{0,1}^n` extending this prefix.
    pub fn cylinder_range(&self, n: usize) -> (usize, usize) {
        let free = n - self.bits.len();
        let lo = word_value(&self.bits) << free;
        (lo, lo + (1usize << free) - 1)
    }
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    /// The first `len` bits as a prefix.
    pub fn prefix(&self, len: usize) -> Prefix {
        Prefix {
            bits: self.bits[..len].to_vec(),
        }
    }

    /// Integer value with the first bit most significant.
    pub fn index(&self) -> usize {
        word_value(&self.bits)
    }

    pub fn from_index(n: usize, value: usize) -> BitString {
        BitString {
            bits: value_to_bits(value, n),
        }
    }

    /// Every element of `{0,1}^n` in increasing index order.
    pub fn all(n: usize) -> impl Iterator<Item = BitString> {
        (0..1usize << n).map(move |v| BitString::from_index(n, v))
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }
}

fn word_value(bits: &[bool]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

fn value_to_bits(value: usize, len: usize) -> Vec<bool> {
    (0..len).rev().map(|i| (value >> i) & 1 == 1).collect()
}

fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Format(format!("unexpected character {other:?} in bit string"))),
        })
        .collect()
}

fn write_bits(bits: &[bool], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for &b in bits {
        f.write_str(if b { "1" } else { "0" })?;
    }
    Ok(())
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_bits(&self.bits, f)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_bits(&self.bits, f)
    }
}

impl FromStr for Prefix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_bits(s).map(Prefix::from_bits)
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_bits(s).map(BitString::new)
    }
}
