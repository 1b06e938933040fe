use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Symbol, Word};
use crate::error::{Result, SpectraError};

/// Symbol set `0..size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(SpectraError::InvalidModel("alphabet must be non-empty".into()));
        }
        Ok(Alphabet { size })
    }

    pub fn contains(&self, s: Symbol) -> bool {
        (s as usize) < self.size
    }
}

/// Boolean transition matrix of a subshift of finite type.
///
/// Serialized as a list of row bitstrings, e.g. `["11", "10"]` for the
/// golden-mean shift.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TransitionMatrix {
    size: usize,
    entries: Vec<bool>,
}

impl TransitionMatrix {
    /// Builds and validates a matrix from rows.
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(SpectraError::InvalidModel("empty transition matrix".into()));
        }
        let mut entries = Vec::with_capacity(size * size);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(SpectraError::InvalidModel(format!(
                    "row {i} has length {}, expected {size}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        let m = TransitionMatrix { size, entries };
        m.check_no_stranded()?;
        Ok(m)
    }

    /// Full shift on `size` symbols.
    pub fn full(size: usize) -> Self {
        TransitionMatrix {
            size,
            entries: vec![true; size * size],
        }
    }

    /// Two-symbol shift with the pair `(1, 1)` forbidden.
    pub fn golden_mean() -> Self {
        TransitionMatrix {
            size: 2,
            entries: vec![true, true, true, false],
        }
    }

    /// Full shift minus the listed transitions.
    pub fn with_forbidden(size: usize, forbidden: &[(Symbol, Symbol)]) -> Result<Self> {
        let mut rows = vec![vec![true; size]; size];
        for &(a, b) in forbidden {
            let (a, b) = (a as usize, b as usize);
            if a >= size || b >= size {
                return Err(SpectraError::Domain(format!("forbidden pair ({a},{b}) out of range")));
            }
            rows[a][b] = false;
        }
        Self::from_rows(rows)
    }

    fn check_no_stranded(&self) -> Result<()> {
        for a in 0..self.size {
            if !(0..self.size).any(|b| self.get(a, b)) {
                return Err(SpectraError::InvalidModel(format!("symbol {a} has no successor")));
            }
            if !(0..self.size).any(|b| self.get(b, a)) {
                return Err(SpectraError::InvalidModel(format!("symbol {a} has no predecessor")));
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet { size: self.size }
    }

    #[inline]
    fn get(&self, a: usize, b: usize) -> bool {
        self.entries[a * self.size + b]
    }

    /// `b_{ab}`; out-of-range symbols are never allowed.
    #[inline]
    pub fn allows(&self, a: Symbol, b: Symbol) -> bool {
        let (a, b) = (a as usize, b as usize);
        a < self.size && b < self.size && self.get(a, b)
    }

    pub fn successors(&self, a: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.size as Symbol).filter(move |&b| self.allows(a, b))
    }

    pub fn predecessors(&self, b: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.size as Symbol).filter(move |&a| self.allows(a, b))
    }

    pub fn rows(&self) -> Vec<Vec<bool>> {
        self.entries.chunks(self.size).map(|r| r.to_vec()).collect()
    }

    /// Strong connectivity of the transition graph (transitivity of the shift).
    pub fn is_irreducible(&self) -> bool {
        let reach = |forward: bool| {
            let mut seen = vec![false; self.size];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(a) = queue.pop_front() {
                for b in 0..self.size {
                    let edge = if forward { self.get(a, b) } else { self.get(b, a) };
                    if edge && !seen[b] {
                        seen[b] = true;
                        queue.push_back(b);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    /// Shortest admissible cycle `a c_1 … c_m` with `c_m → a`, starting at `a`.
    pub fn shortest_cycle_through(&self, a: Symbol) -> Option<Word> {
        let start = a as usize;
        if start >= self.size {
            return None;
        }
        let mut parent = vec![usize::MAX; self.size];
        let mut queue = VecDeque::new();
        for b in 0..self.size {
            if self.get(start, b) {
                if b == start {
                    return Some(Word::from(vec![a]));
                }
                if parent[b] == usize::MAX {
                    parent[b] = start;
                    queue.push_back(b);
                }
            }
        }
        while let Some(v) = queue.pop_front() {
            if self.get(v, start) {
                let mut path = vec![v as Symbol];
                let mut cur = v;
                while parent[cur] != start {
                    cur = parent[cur];
                    path.push(cur as Symbol);
                }
                path.push(a);
                path.reverse();
                return Some(Word::from(path));
            }
            for b in 0..self.size {
                if self.get(v, b) && parent[b] == usize::MAX && b != start {
                    parent[b] = v;
                    queue.push_back(b);
                }
            }
        }
        None
    }

    /// Shortest word `w` (possibly empty) such that `a w b` is admissible.
    pub fn bridge(&self, a: Symbol, b: Symbol) -> Option<Word> {
        let (a, b) = (a as usize, b as usize);
        if a >= self.size || b >= self.size {
            return None;
        }
        if self.get(a, b) {
            return Some(Word::new(Vec::new()));
        }
        let mut parent = vec![usize::MAX; self.size];
        let mut queue = VecDeque::new();
        for c in 0..self.size {
            if self.get(a, c) {
                parent[c] = a;
                queue.push_back(c);
            }
        }
        while let Some(v) = queue.pop_front() {
            if self.get(v, b) {
                let mut path = vec![v as Symbol];
                let mut cur = v;
                while parent[cur] != a {
                    cur = parent[cur];
                    path.push(cur as Symbol);
                }
                path.reverse();
                return Some(Word::from(path));
            }
            for c in 0..self.size {
                if self.get(v, c) && parent[c] == usize::MAX {
                    parent[c] = v;
                    queue.push_back(c);
                }
            }
        }
        None
    }

    /// Number of admissible words of the given length.
    pub fn count_words(&self, len: usize) -> f64 {
        if len == 0 {
            return 1.0;
        }
        let mut v = vec![1.0f64; self.size];
        for _ in 1..len {
            let mut next = vec![0.0; self.size];
            for (a, va) in v.iter().enumerate() {
                for (b, nb) in next.iter_mut().enumerate() {
                    if self.get(a, b) {
                        *nb += va;
                    }
                }
            }
            v = next;
        }
        v.iter().sum()
    }

    /// All admissible words of length `len`, in lexicographic order.
    pub fn words(&self, len: usize) -> Vec<Word> {
        let mut out: Vec<Vec<Symbol>> = if len == 0 { vec![vec![]] } else {
            (0..self.size as Symbol).map(|s| vec![s]).collect()
        };
        for _ in 1..len {
            let mut next = Vec::with_capacity(out.len() * 2);
            for w in &out {
                let last = *w.last().unwrap();
                for b in self.successors(last) {
                    let mut nw = w.clone();
                    nw.push(b);
                    next.push(nw);
                }
            }
            out = next;
        }
        out.into_iter().map(Word::from).collect()
    }
}

impl fmt::Debug for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self.clone().into();
        f.debug_tuple("TransitionMatrix").field(&rows).finish()
    }
}

impl TryFrom<Vec<String>> for TransitionMatrix {
    type Error = SpectraError;

    fn try_from(rows: Vec<String>) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|r| {
                r.chars()
                    .map(|c| match c {
                        '1' => Ok(true),
                        '0' => Ok(false),
                        other => Err(SpectraError::InvalidModel(format!(
                            "matrix row {r:?} contains {other:?}; expected 0/1"
                        ))),
                    })
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(parsed)
    }
}

impl From<TransitionMatrix> for Vec<String> {
    fn from(m: TransitionMatrix) -> Self {
        m.entries
            .chunks(m.size)
            .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect()
    }
}
