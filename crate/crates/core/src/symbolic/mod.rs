//! Subshifts of finite type, bi-infinite sequences, the shift metric and the
//! Cantor embedding of sequences into the unit square.

mod embedding;
mod matrix;
mod metric;
mod sequence;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use embedding::{EmbeddedPoint, EmbeddingSpec, HolderConstants, Rect, TailBounds};
pub use matrix::{Alphabet, TransitionMatrix};
pub use metric::{seq_metric, SeqDistance};
pub use sequence::{BiSequence, Block, SeqKind};

use crate::error::{Result, SpectraError};

pub type Symbol = u32;

/// Finite word over an alphabet.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Symbol] {
        &self.0
    }

    pub fn first(&self) -> Option<Symbol> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Symbol> {
        self.0.last().copied()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn repeat(&self, n: usize) -> Word {
        Word(self.0.repeat(n))
    }

    /// Cyclic rotation: `rotate(k)[i] = self[(i + k) mod len]`.
    pub fn rotate(&self, k: usize) -> Word {
        if self.0.is_empty() {
            return self.clone();
        }
        let mut v = self.0.clone();
        let k = k % v.len();
        v.rotate_left(k);
        Word(v)
    }

    /// Smallest period `p` dividing the length with `w = u^{len/p}`.
    pub fn primitive_period(&self) -> usize {
        let n = self.0.len();
        (1..=n)
            .find(|&p| n % p == 0 && (p..n).all(|i| self.0[i] == self.0[i - p]))
            .unwrap_or(n)
    }

    pub fn primitive_root(&self) -> Word {
        Word(self.0[..self.primitive_period()].to_vec())
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl From<&[Symbol]> for Word {
    fn from(v: &[Symbol]) -> Self {
        Word(v.to_vec())
    }
}

impl std::ops::Index<usize> for Word {
    type Output = Symbol;
    fn index(&self, i: usize) -> &Symbol {
        &self.0[i]
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // single-digit symbols are concatenated, larger alphabets comma separated
        let wide = self.0.iter().any(|&s| s > 9);
        for (i, s) in self.0.iter().enumerate() {
            if wide && i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// True iff every consecutive pair of `w` is allowed by `b`.
pub fn is_admissible(w: &Word, b: &TransitionMatrix) -> Result<bool> {
    if let Some(&s) = w.as_slice().iter().find(|&&s| s as usize >= b.size()) {
        return Err(SpectraError::Domain(format!(
            "symbol {s} outside alphabet of size {}",
            b.size()
        )));
    }
    Ok(w.as_slice().windows(2).all(|p| b.allows(p[0], p[1])))
}
