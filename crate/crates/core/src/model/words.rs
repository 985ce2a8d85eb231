//! Renewal words and fiber products.
//!
//! A word `(ω₀, ω₁, …, ω_n)` multiplies only `ω₁ … ω_n`; the first letter is
//! the renewal anchor and is never applied. Symbols are 0-based in memory
//! and printed 1-based.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::spec::Cocycle;
use crate::error::{CocycleError, Result};
use crate::linalg::Mat2;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Self {
        Self(symbols)
    }

    pub fn from_indices(symbols: &[usize]) -> Self {
        Self(symbols.iter().map(|&s| s as u8).collect())
    }

    /// Parses a 1-based word such as `"1-2-1"`.
    pub fn parse_one_based(text: &str) -> Option<Self> {
        text.split('-')
            .map(|t| t.trim().parse::<u16>().ok().filter(|&v| (1..=256).contains(&v)).map(|v| (v - 1) as u8))
            .collect::<Option<Vec<u8>>>()
            .map(Self)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of multiplied letters, `|w| − 1`.
    pub fn n(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().map(|&s| s as usize)
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().map(|&s| s as usize)
    }

    pub fn push(&mut self, symbol: usize) {
        self.0.push(symbol as u8);
    }

    pub fn pushed(&self, symbol: usize) -> Word {
        let mut w = self.clone();
        w.push(symbol);
        w
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|&s| s as usize + 1).collect()
    }

    /// In `ℬ_n(s, l)`: singular anchor, invertible interior, any final letter.
    pub fn is_renewal(&self, c: &Cocycle) -> bool {
        match self.0.as_slice() {
            [s, interior @ .., _] => {
                c.is_singular(*s as usize) && interior.iter().all(|&i| !c.is_singular(i as usize))
            }
            _ => false,
        }
    }

    /// In the Bernoulli form `ℬ_n(s)`: singular anchor, invertible tail.
    pub fn is_bernoulli_renewal(&self, c: &Cocycle) -> bool {
        match self.0.as_slice() {
            [s, tail @ ..] => c.is_singular(*s as usize) && tail.iter().all(|&i| !c.is_singular(i as usize)),
            _ => false,
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{}", *s as usize + 1)?;
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(deserializer)?;
        v.iter()
            .map(|&s| {
                if (1..=256).contains(&s) {
                    Ok((s - 1) as u8)
                } else {
                    Err(serde::de::Error::custom(format!("symbol {s} is not 1-based")))
                }
            })
            .collect::<std::result::Result<Vec<u8>, _>>()
            .map(Word)
    }
}

/// `A_{ω_n} ⋯ A_{ω₁}`; the anchor `ω₀` is not multiplied.
pub fn fiber_product(matrices: &[Mat2], w: &Word) -> Mat2 {
    w.symbols()
        .iter()
        .skip(1)
        .fold(Mat2::identity(), |acc, &s| matrices[s as usize] * acc)
}

/// Odometer over interior strings of invertible letters.
pub struct Words<'a> {
    c: &'a Cocycle,
    head: usize,
    /// Final letter, or `None` for the Bernoulli form where every letter
    /// after the anchor is invertible.
    tail: Option<usize>,
    digits: Vec<usize>,
    done: bool,
}

impl<'a> Words<'a> {
    fn probability(&self, word: &[usize]) -> f64 {
        word.windows(2).map(|w| self.c.transition(w[1], w[0])).product()
    }
}

impl Iterator for Words<'_> {
    type Item = (Word, f64);

    fn next(&mut self) -> Option<(Word, f64)> {
        let inv = self.c.invertible();
        while !self.done {
            let mut symbols = Vec::with_capacity(self.digits.len() + 2);
            symbols.push(self.head);
            symbols.extend(self.digits.iter().map(|&d| inv[d]));
            if let Some(l) = self.tail {
                symbols.push(l);
            }
            // advance the odometer, last digit fastest
            let mut pos = self.digits.len();
            loop {
                if pos == 0 {
                    self.done = true;
                    break;
                }
                pos -= 1;
                self.digits[pos] += 1;
                if self.digits[pos] < inv.len() {
                    break;
                }
                self.digits[pos] = 0;
            }
            let p = self.probability(&symbols);
            if p > 0.0 {
                return Some((Word::from_indices(&symbols), p));
            }
        }
        None
    }
}

/// Every `ω ∈ ℬ_n(s, l)` with its probability `p(ω)`, which excludes the
/// initial weight of `s`. Zero-probability words are skipped.
pub fn words(c: &Cocycle, s: usize, l: usize, n: usize) -> Result<Words<'_>> {
    if s >= c.k() || !c.is_singular(s) {
        return Err(CocycleError::Domain(format!("anchor {} is not a singular symbol", s + 1)));
    }
    if l >= c.k() || n == 0 {
        return Err(CocycleError::Domain("need a valid final symbol and n ≥ 1".into()));
    }
    Ok(Words {
        c,
        head: s,
        tail: Some(l),
        digits: vec![0; n - 1],
        done: false,
    })
}

/// Every `ω ∈ ℬ_n(s)` (anchor `s`, then `n` invertible letters).
pub fn bernoulli_words(c: &Cocycle, s: usize, n: usize) -> Result<Words<'_>> {
    if s >= c.k() || !c.is_singular(s) {
        return Err(CocycleError::Domain(format!("anchor {} is not a singular symbol", s + 1)));
    }
    Ok(Words {
        c,
        head: s,
        tail: None,
        digits: vec![0; n],
        done: false,
    })
}
