//! Finite words over {1..N}, shifts, prefixes and generation cuts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::arith::*;
use crate::error::{Error, Result};
use crate::ifs::IFSystem;

/// Finite word; symbols are 0-based internally and 1-based when displayed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    symbols: Vec<u8>,
    n: usize,
}

impl Word {
    pub fn new(symbols: Vec<u8>, n: usize) -> Self {
        assert!(symbols.iter().all(|&s| (s as usize) < n), "symbol out of range");
        Self { symbols, n }
    }

    pub fn empty(n: usize) -> Self {
        Self { symbols: Vec::new(), n }
    }

    pub fn letter(s: u8, n: usize) -> Self {
        Self::new(vec![s], n)
    }

    /// Repeats symbol s q times, e.g. 1...1.
    pub fn repeat(s: u8, q: usize, n: usize) -> Self {
        Self::new(vec![s; q], n)
    }

    /// Parses "321" (1-based digits) or "10,2,3".
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() || t == "∅" {
            return Ok(Self::empty(n));
        }
        let parts: Vec<usize> = if t.contains(',') {
            t.split(',').map(|p| p.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad word {t:?}")))).collect::<Result<_>>()?
        } else {
            t.chars().map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| Error::Parse(format!("bad word {t:?}")))).collect::<Result<_>>()?
        };
        if parts.iter().any(|&p| p == 0 || p > n) {
            return Err(Error::Parse(format!("word {t:?} has a symbol outside 1..{n}")));
        }
        Ok(Self::new(parts.into_iter().map(|p| (p - 1) as u8).collect(), n))
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn alphabet(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn push(&self, s: u8) -> Self {
        let mut v = self.symbols.clone();
        v.push(s);
        Self::new(v, self.n)
    }

    pub fn prepend(&self, s: u8) -> Self {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(s);
        v.extend_from_slice(&self.symbols);
        Self::new(v, self.n)
    }

    pub fn concat(&self, o: &Word) -> Self {
        let mut v = self.symbols.clone();
        v.extend_from_slice(&o.symbols);
        Self::new(v, self.n)
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut v = Vec::with_capacity(self.len() * k);
        for _ in 0..k {
            v.extend_from_slice(&self.symbols);
        }
        Self::new(v, self.n)
    }

    /// w|_k
    pub fn prefix(&self, k: usize) -> Self {
        Self::new(self.symbols[..k.min(self.len())].to_vec(), self.n)
    }

    pub fn is_prefix_of(&self, o: &Word) -> bool {
        o.symbols.starts_with(&self.symbols)
    }

    /// w^- : drops the last symbol.
    pub fn parent(&self) -> Result<Self> {
        if self.is_empty() {
            return Err(Error::Domain("parent of the empty word".into()));
        }
        Ok(self.prefix(self.len() - 1))
    }

    /// sigma^j(w): drops the first j symbols.
    pub fn shift(&self, j: usize) -> Result<Self> {
        if j > self.len() {
            return Err(Error::Domain(format!("shift by {j} of a word of length {}", self.len())));
        }
        Ok(Self::new(self.symbols[j..].to_vec(), self.n))
    }

    /// All words of length k in lexicographic order.
    pub fn all_of_length(n: usize, k: usize) -> Vec<Word> {
        let mut out = vec![Word::empty(n)];
        for _ in 0..k {
            out = out.iter().flat_map(|w| (0..n as u8).map(move |s| w.push(s))).collect();
        }
        out
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        if self.n <= 9 {
            for s in &self.symbols {
                write!(f, "{}", s + 1)?;
            }
            Ok(())
        } else {
            let v: Vec<String> = self.symbols.iter().map(|s| (s + 1).to_string()).collect();
            write!(f, "{}", v.join(","))
        }
    }
}

/// Serialised as the displayed digit string; reading back takes the alphabet
/// to be the largest symbol present.
impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let t = String::deserialize(d)?;
        let probe = Word::parse(&t, 255).map_err(serde::de::Error::custom)?;
        let n = probe.symbols.iter().map(|&s| s as usize + 1).max().unwrap_or(1);
        Ok(Word::new(probe.symbols, n))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiameterSource {
    EnclosureUpper,
    SampleLower,
}

/// Prefix-free, complete set of words whose cylinders first drop to scale r.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenerationCut {
    pub words: Vec<Word>,
    #[serde(with = "serde_q")]
    pub r: RationalScalar,
    pub diameter_source: DiameterSource,
}

impl GenerationCut {
    /// The unique word of the cut that prefixes the given stream, if any.
    pub fn prefix_of(&self, stream: &[u8]) -> Vec<&Word> {
        self.words.iter().filter(|w| stream.starts_with(w.symbols())).collect()
    }

    pub fn max_len(&self) -> usize {
        self.words.iter().map(|w| w.len()).max().unwrap_or(0)
    }
}

pub fn generation_cut(sys: &IFSystem, r: &RationalScalar) -> Result<GenerationCut> {
    generation_cut_with(sys, r, DiameterSource::EnclosureUpper)
}

/// {i : diam(phi_i(F)) <= r < diam(phi_{i^-}(F))} with the chosen diameter
/// bound. If r >= diam(F) the cut is the set of single letters.
pub fn generation_cut_with(sys: &IFSystem, r: &RationalScalar, source: DiameterSource) -> Result<GenerationCut> {
    let n = sys.n_maps();
    let shards: Vec<Result<Vec<Word>>> = (0..n as u8)
        .into_par_iter()
        .map(|s| {
            let mut out = Vec::new();
            let mut stack = vec![Word::letter(s, n)];
            while let Some(w) = stack.pop() {
                let d = crate::attractor::cylinder_diam(sys, &w, source)?;
                if &d <= r {
                    out.push(w);
                } else {
                    if w.len() >= sys.depth_cap {
                        return Err(Error::DepthCap(sys.depth_cap));
                    }
                    for t in (0..n as u8).rev() {
                        stack.push(w.push(t));
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut words = Vec::new();
    for s in shards {
        words.extend(s?);
    }
    Ok(GenerationCut { words, r: r.clone(), diameter_source: source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s, 4).unwrap()
    }

    #[test]
    fn parent_and_shift() {
        assert_eq!(w("321").parent().unwrap(), w("32"));
        assert_eq!(w("3").parent().unwrap(), Word::empty(4));
        assert!(Word::empty(4).parent().is_err());
        let l = Word::repeat(0, 5, 3);
        assert_eq!(l.parent().unwrap(), Word::repeat(0, 4, 3));
        assert_eq!(w("1234").shift(2).unwrap(), w("34"));
        assert_eq!(w("1234").shift(0).unwrap(), w("1234"));
        assert!(w("1234").shift(4).unwrap().is_empty());
        assert!(w("12").shift(3).is_err());
    }

    #[test]
    fn display_forms() {
        assert_eq!(w("321").to_string(), "321");
        let long = Word::new(vec![9, 0, 2], 12);
        assert_eq!(long.to_string(), "10,1,3");
        assert_eq!(Word::parse("10,1,3", 12).unwrap(), long);
        assert!(Word::parse("5", 4).is_err());
    }
}
