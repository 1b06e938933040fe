use serde::{Deserialize, Serialize};

use super::BiSequence;

/// Result of [`seq_metric`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeqDistance {
    pub value: f64,
    /// `false` when the sequences agree on the whole window and `value` is
    /// only the upper bound `2^{-max_depth}`.
    pub resolved: bool,
}

/// `d(a,b) = max(2^{-n⁺}, 2^{-n⁻})` where `n⁺ ≥ 0` is the first forward and
/// `n⁻ ≥ 1` the first backward disagreement.
///
/// Only positions `-max_depth ..= max_depth - 1` are inspected.
pub fn seq_metric(a: &BiSequence, b: &BiSequence, max_depth: u32) -> SeqDistance {
    let depth = max_depth.max(1) as i64;
    let n_plus = (0..depth).find(|&k| a.at(k) != b.at(k));
    let n_minus = (1..=depth).find(|&k| a.at(-k) != b.at(-k));
    let pow = |n: i64| (-(n as f64)).exp2();
    match (n_plus, n_minus) {
        (None, None) => SeqDistance {
            value: pow(depth),
            resolved: false,
        },
        (p, m) => SeqDistance {
            value: p.map_or(0.0, pow).max(m.map_or(0.0, pow)),
            resolved: true,
        },
    }
}
