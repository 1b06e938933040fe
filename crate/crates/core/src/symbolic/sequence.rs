use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Symbol, TransitionMatrix, Word};
use crate::error::{Result, SpectraError};

/// A word repeated `count` times inside a schedule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub word: Word,
    pub count: u64,
}

impl Block {
    pub fn new(word: Word, count: u64) -> Self {
        Block { word, count }
    }

    fn len(&self) -> u64 {
        self.word.len() as u64 * self.count
    }
}

/// Structural shape of a bi-infinite sequence, before shifting.
///
/// Raw position 0 is the first symbol after the `;`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeqKind {
    /// `Q^∞;Q^∞` with `Q[0]` at position 0.
    Periodic { period: Word },
    /// `L^∞;C R^∞`.
    EventuallyPeriodic { left: Word, core: Word, right: Word },
    /// `L^∞;C B_1^{n_1} B_2^{n_2} … T^∞`.
    Scheduled {
        left: Word,
        core: Word,
        blocks: Vec<Block>,
        tail: Word,
    },
}

#[derive(Serialize, Deserialize)]
struct Repr {
    #[serde(flatten)]
    kind: SeqKind,
    #[serde(default)]
    offset: i64,
}

/// Bi-infinite symbol sequence with periodic tails, stored structurally.
///
/// Shifting only moves an offset, so `shift(shift(s, n), -n) == s` exactly.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "Repr", into = "Repr")]
pub struct BiSequence {
    kind: SeqKind,
    offset: i64,
    /// Raw end positions of the scheduled blocks (exclusive).
    ends: Vec<i64>,
}

impl PartialEq for BiSequence {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.offset == other.offset
    }
}

impl Eq for BiSequence {}

impl TryFrom<Repr> for BiSequence {
    type Error = SpectraError;
    fn try_from(r: Repr) -> Result<Self> {
        Ok(BiSequence::from_kind(r.kind)?.shift(r.offset))
    }
}

impl From<BiSequence> for Repr {
    fn from(s: BiSequence) -> Self {
        Repr {
            kind: s.kind,
            offset: s.offset,
        }
    }
}

fn nonempty(w: &Word, what: &str) -> Result<()> {
    if w.is_empty() {
        Err(SpectraError::InvalidModel(format!("{what} word must be non-empty")))
    } else {
        Ok(())
    }
}

#[inline]
fn cyc(w: &Word, i: i64) -> Symbol {
    w[i.rem_euclid(w.len() as i64) as usize]
}

impl BiSequence {
    pub fn from_kind(kind: SeqKind) -> Result<Self> {
        let mut ends = Vec::new();
        match &kind {
            SeqKind::Periodic { period } => nonempty(period, "period")?,
            SeqKind::EventuallyPeriodic { left, right, .. } => {
                nonempty(left, "left tail")?;
                nonempty(right, "right tail")?;
            }
            SeqKind::Scheduled {
                left,
                core,
                blocks,
                tail,
            } => {
                nonempty(left, "left tail")?;
                nonempty(tail, "right tail")?;
                let mut pos = core.len() as i64;
                for b in blocks {
                    if b.count > 0 {
                        nonempty(&b.word, "block")?;
                    }
                    let len = i64::try_from(b.len())
                        .map_err(|_| SpectraError::Overflow("block schedule length"))?;
                    pos = pos
                        .checked_add(len)
                        .ok_or(SpectraError::Overflow("block schedule length"))?;
                    ends.push(pos);
                }
            }
        }
        Ok(BiSequence {
            kind,
            offset: 0,
            ends,
        })
    }

    pub fn periodic(period: Word) -> Result<Self> {
        Self::from_kind(SeqKind::Periodic { period })
    }

    pub fn eventually_periodic(left: Word, core: Word, right: Word) -> Result<Self> {
        Self::from_kind(SeqKind::EventuallyPeriodic { left, core, right })
    }

    pub fn scheduled(left: Word, core: Word, blocks: Vec<Block>, tail: Word) -> Result<Self> {
        Self::from_kind(SeqKind::Scheduled {
            left,
            core,
            blocks,
            tail,
        })
    }

    pub fn kind(&self) -> &SeqKind {
        &self.kind
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// `(shift(s, n))_k = s_{k+n}`.
    pub fn shift(&self, n: i64) -> BiSequence {
        BiSequence {
            kind: self.kind.clone(),
            offset: self.offset + n,
            ends: self.ends.clone(),
        }
    }

    /// Same structure with offset reset to zero.
    pub fn unshifted(&self) -> BiSequence {
        self.shift(-self.offset)
    }

    /// Appends blocks before the tail of a scheduled sequence.
    pub fn extended(&self, more: &[Block]) -> Result<BiSequence> {
        match &self.kind {
            SeqKind::Scheduled {
                left,
                core,
                blocks,
                tail,
            } => {
                let mut b = blocks.clone();
                b.extend_from_slice(more);
                Ok(Self::scheduled(left.clone(), core.clone(), b, tail.clone())?.shift(self.offset))
            }
            _ => Err(SpectraError::Unsupported(
                "only scheduled sequences can be extended".into(),
            )),
        }
    }

    /// Number of scheduled blocks (0 for other kinds).
    pub fn block_count(&self) -> usize {
        self.ends.len()
    }

    /// Position (in shifted coordinates) where scheduled block `i` starts.
    pub fn block_start(&self, i: usize) -> Option<i64> {
        let core_len = match &self.kind {
            SeqKind::Scheduled { core, .. } => core.len() as i64,
            _ => return None,
        };
        if i >= self.ends.len() {
            return None;
        }
        let raw = if i == 0 { core_len } else { self.ends[i - 1] };
        Some(raw - self.offset)
    }

    #[inline]
    fn raw_at(&self, i: i64) -> Symbol {
        match &self.kind {
            SeqKind::Periodic { period } => cyc(period, i),
            SeqKind::EventuallyPeriodic { left, core, right } => {
                let c = core.len() as i64;
                if i < 0 {
                    cyc(left, i)
                } else if i < c {
                    core[i as usize]
                } else {
                    cyc(right, i - c)
                }
            }
            SeqKind::Scheduled {
                left,
                core,
                blocks,
                tail,
            } => {
                let c = core.len() as i64;
                if i < 0 {
                    return cyc(left, i);
                }
                if i < c {
                    return core[i as usize];
                }
                let total = self.ends.last().copied().unwrap_or(c);
                if i >= total {
                    return cyc(tail, i - total);
                }
                // first block whose end exceeds i
                let b = self.ends.partition_point(|&e| e <= i);
                let start = if b == 0 { c } else { self.ends[b - 1] };
                let w = &blocks[b].word;
                w[((i - start) as usize) % w.len()]
            }
        }
    }

    /// Symbol at position `k` of the (shifted) sequence.
    #[inline]
    pub fn at(&self, k: i64) -> Symbol {
        self.raw_at(k + self.offset)
    }

    /// Some admissible sequence containing `w` with `w[zero]` at position 0.
    ///
    /// Both sides are completed by walking the first successor (predecessor)
    /// until a symbol repeats. `None` when `w` is not admissible or a walk
    /// gets stuck.
    pub fn completing(b: &TransitionMatrix, w: &[Symbol], zero: usize) -> Option<BiSequence> {
        if w.is_empty() || zero >= w.len() || w.iter().any(|&s| s as usize >= b.size()) {
            return None;
        }
        if w.windows(2).any(|p| !b.allows(p[0], p[1])) {
            return None;
        }
        let walk = |start: Symbol, forward: bool| -> Option<(Vec<Symbol>, Vec<Symbol>)> {
            let mut path = vec![start];
            loop {
                let cur = *path.last().unwrap();
                let next = if forward {
                    b.successors(cur).next()
                } else {
                    b.predecessors(cur).next()
                }?;
                if let Some(i) = path.iter().position(|&x| x == next) {
                    // path[1..] leads into the cycle path[i..]
                    return Some((path[1..].to_vec(), path[i..].to_vec()));
                }
                path.push(next);
            }
        };
        let (fwd_ext, fwd_cyc) = walk(*w.last().unwrap(), true)?;
        let (back_ext, back_cyc) = walk(w[0], false)?;
        let mut core: Vec<Symbol> = back_ext.iter().rev().copied().collect();
        let shift = core.len() + zero;
        core.extend_from_slice(w);
        core.extend_from_slice(&fwd_ext);
        let left: Vec<Symbol> = back_cyc.iter().rev().copied().collect();
        let seq = BiSequence::eventually_periodic(Word::from(left), Word::from(core), Word::from(fwd_cyc)).ok()?;
        Some(seq.shift(shift as i64))
    }

    /// Symbols at positions `start .. start + len`.
    pub fn window(&self, start: i64, len: usize) -> Vec<Symbol> {
        (0..len as i64).map(|i| self.at(start + i)).collect()
    }

    /// `(start, cycle)` such that `s_k = cycle[(k - start) mod p]` for all `k ≥ start`.
    pub fn right_tail(&self) -> (i64, Word) {
        let (raw_start, w) = match &self.kind {
            SeqKind::Periodic { period } => (0, period.clone()),
            SeqKind::EventuallyPeriodic { core, right, .. } => (core.len() as i64, right.clone()),
            SeqKind::Scheduled { core, tail, .. } => {
                (self.ends.last().copied().unwrap_or(core.len() as i64), tail.clone())
            }
        };
        (raw_start - self.offset, w)
    }

    /// `(end, cycle)` such that `s_k = cycle[(k - end) mod p]` for all `k < end`.
    pub fn left_tail(&self) -> (i64, Word) {
        let w = match &self.kind {
            SeqKind::Periodic { period } => period.clone(),
            SeqKind::EventuallyPeriodic { left, .. } | SeqKind::Scheduled { left, .. } => left.clone(),
        };
        (-self.offset, w)
    }

    /// Largest symbol appearing anywhere in the sequence.
    pub fn max_symbol(&self) -> Symbol {
        self.pieces()
            .iter()
            .flat_map(|(w, _)| w.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Smallest symbol appearing anywhere in the sequence.
    pub fn min_symbol(&self) -> Symbol {
        self.pieces()
            .iter()
            .flat_map(|(w, _)| w.iter().copied())
            .min()
            .unwrap_or(0)
    }

    /// Maximal finite pieces in order; the flag marks pieces that repeat
    /// back-to-back (so the wrap-around pair must be admissible too).
    fn pieces(&self) -> Vec<(&[Symbol], bool)> {
        let mut out: Vec<(&[Symbol], bool)> = Vec::new();
        match &self.kind {
            SeqKind::Periodic { period } => out.push((period.as_slice(), true)),
            SeqKind::EventuallyPeriodic { left, core, right } => {
                out.push((left.as_slice(), true));
                out.push((core.as_slice(), false));
                out.push((right.as_slice(), true));
            }
            SeqKind::Scheduled {
                left,
                core,
                blocks,
                tail,
            } => {
                out.push((left.as_slice(), true));
                out.push((core.as_slice(), false));
                for b in blocks.iter().filter(|b| b.count > 0) {
                    out.push((b.word.as_slice(), b.count > 1));
                }
                out.push((tail.as_slice(), true));
            }
        }
        out.retain(|(w, _)| !w.is_empty());
        out
    }

    /// Checks every window, including wrap-arounds and junctions, against `b`.
    pub fn check_admissible(&self, b: &TransitionMatrix) -> Result<()> {
        let pieces = self.pieces();
        for (w, _) in &pieces {
            if let Some(&s) = w.iter().find(|&&s| s as usize >= b.size()) {
                return Err(SpectraError::Domain(format!(
                    "symbol {s} outside alphabet of size {}",
                    b.size()
                )));
            }
        }
        let bad = |a: Symbol, c: Symbol, place: &str| {
            Err(SpectraError::InvalidModel(format!(
                "forbidden transition {a}->{c} {place} in {self}"
            )))
        };
        for (i, (w, cyclic)) in pieces.iter().enumerate() {
            for p in w.windows(2) {
                if !b.allows(p[0], p[1]) {
                    return bad(p[0], p[1], "inside a word");
                }
            }
            let (first, last) = (w[0], w[w.len() - 1]);
            if *cyclic && !b.allows(last, first) {
                return bad(last, first, "at a repetition");
            }
            if let Some((next, _)) = pieces.get(i + 1) {
                if !b.allows(last, next[0]) {
                    return bad(last, next[0], "at a junction");
                }
            }
        }
        Ok(())
    }

    pub fn is_admissible(&self, b: &TransitionMatrix) -> Result<bool> {
        match self.check_admissible(b) {
            Ok(()) => Ok(true),
            Err(SpectraError::InvalidModel(_)) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// If the sequence is globally periodic, its primitive period word aligned
    /// at position 0.
    pub fn as_periodic(&self) -> Option<Word> {
        let (rs, rw) = self.right_tail();
        let (le, lw) = self.left_tail();
        let p = rw.primitive_period();
        if lw.primitive_period() != p {
            return None;
        }
        let from = le - p as i64;
        let to = rs + p as i64;
        let ok = (from + p as i64..to).all(|k| self.at(k) == self.at(k - p as i64));
        if ok {
            Some(Word::from(self.window(0, p)))
        } else {
            None
        }
    }

    /// Notation like `(0)^inf;1 (0)^inf`, prefixed with the shift when nonzero.
    pub fn notation(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BiSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.offset != 0 {
            write!(f, "shift({}) ", self.offset)?;
        }
        match &self.kind {
            SeqKind::Periodic { period } => write!(f, "({period})^inf;({period})^inf"),
            SeqKind::EventuallyPeriodic { left, core, right } => {
                write!(f, "({left})^inf;")?;
                if !core.is_empty() {
                    write!(f, "{core} ")?;
                }
                write!(f, "({right})^inf")
            }
            SeqKind::Scheduled {
                left,
                core,
                blocks,
                tail,
            } => {
                write!(f, "({left})^inf;")?;
                if !core.is_empty() {
                    write!(f, "{core} ")?;
                }
                for b in blocks.iter().filter(|b| b.count > 0) {
                    if b.count == 1 {
                        write!(f, "{} ", b.word)?;
                    } else {
                        write!(f, "({})^{} ", b.word, b.count)?;
                    }
                }
                write!(f, "({tail})^inf")
            }
        }
    }
}

impl fmt::Debug for BiSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BiSequence[{self}]")
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn completing_contains_window() {
        let b = TransitionMatrix::from_rows(vec![
            vec![true, false, true],
            vec![true, true, false],
            vec![false, true, false],
        ])
        .unwrap();
        for w in b.words(5) {
            for zero in 0..5 {
                let s = BiSequence::completing(&b, w.as_slice(), zero).unwrap();
                assert!(s.is_admissible(&b).unwrap());
                assert_eq!(s.window(-(zero as i64), 5), w.as_slice().to_vec());
            }
        }
        assert!(BiSequence::completing(&b, &[2, 2], 0).is_none());
    }

    use super::*;
    use proptest::prelude::*;

    fn w(v: &[Symbol]) -> Word {
        Word::from(v.to_vec())
    }

    /// Materializes raw positions `lo..hi` by walking the pieces directly.
    fn naive(kind: &SeqKind, lo: i64, hi: i64) -> Vec<Symbol> {
        let (left, mid, right): (&Word, Vec<Symbol>, &Word) = match kind {
            SeqKind::Periodic { period } => (period, vec![], period),
            SeqKind::EventuallyPeriodic { left, core, right } => {
                (left, core.as_slice().to_vec(), right)
            }
            SeqKind::Scheduled {
                left,
                core,
                blocks,
                tail,
            } => {
                let mut m = core.as_slice().to_vec();
                for b in blocks {
                    for _ in 0..b.count {
                        m.extend_from_slice(b.word.as_slice());
                    }
                }
                (left, m, tail)
            }
        };
        let mut neg: Vec<Symbol> = Vec::new();
        while (neg.len() as i64) < -lo {
            for &s in left.as_slice().iter().rev() {
                neg.push(s);
            }
        }
        let mut pos = mid.clone();
        while (pos.len() as i64) < hi {
            pos.extend_from_slice(right.as_slice());
        }
        (lo..hi)
            .map(|i| if i < 0 { neg[(-i - 1) as usize] } else { pos[i as usize] })
            .collect()
    }

    #[test]
    fn periodic_shift_by_period_is_pointwise_identity() {
        let s = BiSequence::periodic(w(&[0, 1, 1])).unwrap();
        let t = s.shift(3);
        assert_eq!(s.window(-10, 30), t.window(-10, 30));
        assert_eq!(s.shift(0), s);
        assert_eq!(s.shift(5).shift(-5), s);
    }

    #[test]
    fn eventually_periodic_shift_bookkeeping() {
        let q = w(&[0, 1]);
        let s = BiSequence::eventually_periodic(q.clone(), w(&[1, 1, 0]), q.clone()).unwrap();
        let t = s.shift(3);
        assert_eq!(t.window(0, q.len()), q.as_slice());
        assert_eq!(t.window(-20, 40), naive(s.kind(), -17, 23));
    }

    #[test]
    fn scheduled_lookup_matches_naive() {
        let kind = SeqKind::Scheduled {
            left: w(&[0]),
            core: w(&[1, 0]),
            blocks: vec![
                Block::new(w(&[0]), 3),
                Block::new(w(&[1, 0, 1]), 2),
                Block::new(w(&[1]), 0),
                Block::new(w(&[0, 0]), 1),
            ],
            tail: w(&[0, 1]),
        };
        let s = BiSequence::from_kind(kind.clone()).unwrap();
        assert_eq!(s.window(-7, 40), naive(&kind, -7, 33));
        assert_eq!(s.block_start(0), Some(2));
        assert_eq!(s.block_start(1), Some(5));
        assert_eq!(s.block_start(3), Some(11));
        let (start, tail) = s.right_tail();
        assert_eq!(start, 13);
        assert_eq!(tail.as_slice(), &[0, 1]);
    }

    #[test]
    fn admissibility_checks_junctions() {
        let gm = TransitionMatrix::golden_mean();
        let ok = BiSequence::eventually_periodic(w(&[0]), w(&[1, 0, 1]), w(&[0])).unwrap();
        assert!(ok.is_admissible(&gm).unwrap());
        // junction core -> tail is 1 -> 1
        let bad = BiSequence::eventually_periodic(w(&[0]), w(&[1]), w(&[1, 0])).unwrap();
        assert!(!bad.is_admissible(&gm).unwrap());
        // wrap-around of a repeated block
        let bad = BiSequence::scheduled(w(&[0]), w(&[]), vec![Block::new(w(&[1, 0, 1]), 2)], w(&[0]))
            .unwrap();
        assert!(!bad.is_admissible(&gm).unwrap());
        let ok = BiSequence::scheduled(w(&[0]), w(&[]), vec![Block::new(w(&[1, 0, 1]), 1)], w(&[0]))
            .unwrap();
        assert!(ok.is_admissible(&gm).unwrap());
    }

    #[test]
    fn periodic_detection() {
        let s = BiSequence::eventually_periodic(w(&[1, 0]), w(&[1, 0, 1]), w(&[0, 1])).unwrap();
        assert_eq!(s.as_periodic().unwrap().as_slice(), &[1, 0]);
        let s = BiSequence::eventually_periodic(w(&[0]), w(&[1]), w(&[0])).unwrap();
        assert!(s.as_periodic().is_none());
    }

    #[test]
    fn serde_roundtrip() {
        let s = BiSequence::scheduled(w(&[0]), w(&[1]), vec![Block::new(w(&[0]), 5)], w(&[0]))
            .unwrap()
            .shift(-4);
        let json = serde_json::to_string(&s).unwrap();
        let back: BiSequence = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.window(-10, 30), s.window(-10, 30));
        assert_eq!(s.to_string(), "shift(-4) (0)^inf;1 (0)^5 (0)^inf");
    }

    proptest! {
        #[test]
        fn shift_composition(
            core in proptest::collection::vec(0u32..3, 0..6),
            counts in proptest::collection::vec(0u64..5, 0..4),
            n in -50i64..50, m in -50i64..50, k in -40i64..40,
        ) {
            let blocks = counts.iter().enumerate()
                .map(|(i, &c)| Block::new(w(&[i as u32 % 3, 2]), c)).collect();
            let s = BiSequence::scheduled(w(&[1, 2]), Word::from(core), blocks, w(&[0])).unwrap();
            prop_assert_eq!(s.shift(n).shift(-n), s.clone());
            prop_assert_eq!(s.shift(n).shift(m).at(k), s.at(k + n + m));
            // materializing twice is deterministic
            prop_assert_eq!(s.window(k, 20), s.window(k, 20));
        }
    }
}
