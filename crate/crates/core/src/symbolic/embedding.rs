use serde::{Deserialize, Serialize};

use super::{BiSequence, Symbol, TransitionMatrix, Word};
use crate::error::{Result, SpectraError};

/// Cantor embedding of sequences into `[0,1]²`.
///
/// The forward half `s_0 s_1 …` is written in base `b` as `x_u`, the backward
/// half `s_{-1} s_{-2} …` as `x_s`, each symbol replaced by its digit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub base: u32,
    pub digits: Vec<u32>,
}

/// Point of the square plus the truncation radius per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedPoint {
    pub xs: f64,
    pub xu: f64,
    pub radius: f64,
}

impl EmbeddedPoint {
    pub fn dist(&self, other: &EmbeddedPoint) -> f64 {
        (self.xs - other.xs).hypot(self.xu - other.xu)
    }
}

/// `d_euclid ≤ upper_c · d^exponent` and `d ≤ lower_c · d_euclid^{1/exponent}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderConstants {
    pub upper_c: f64,
    pub lower_c: f64,
    pub exponent: f64,
}

/// Axis-aligned rectangle `[xs.0, xs.1] × [xu.0, xu.1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xs: (f64, f64),
    pub xu: (f64, f64),
}

impl Rect {
    pub fn diameter(&self) -> f64 {
        (self.xs.1 - self.xs.0).hypot(self.xu.1 - self.xu.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.xs.0 + self.xs.1), 0.5 * (self.xu.0 + self.xu.1))
    }
}

impl EmbeddingSpec {
    /// Smallest valid spec for `size` symbols: base `2·size − 1`, digits `0, 2, 4, …`.
    pub fn standard(size: usize) -> Self {
        Self::with_base(size, (2 * size - 1).max(2) as u32)
    }

    /// Digits `0, 2, 4, …` in the given base.
    pub fn with_base(size: usize, base: u32) -> Self {
        EmbeddingSpec {
            base,
            digits: (0..size as u32).map(|i| 2 * i).collect(),
        }
    }

    pub fn validate(&self, size: usize) -> Result<()> {
        if self.digits.len() != size {
            return Err(SpectraError::InvalidModel(format!(
                "digit map has {} entries for an alphabet of {size}",
                self.digits.len()
            )));
        }
        if size == 0 || (self.base as usize) < (2 * size).saturating_sub(1).max(2) {
            return Err(SpectraError::InvalidModel(format!(
                "base {} too small for {size} symbols (need >= {})",
                self.base,
                (2 * size).saturating_sub(1).max(2)
            )));
        }
        if let Some(&d) = self.digits.iter().find(|&&d| d >= self.base) {
            return Err(SpectraError::InvalidModel(format!("digit {d} not below base {}", self.base)));
        }
        let mut sorted = self.digits.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|p| p[1] < p[0] + 2) {
            return Err(SpectraError::InvalidModel(
                "digits must be distinct with pairwise gaps >= 2".into(),
            ));
        }
        Ok(())
    }

    /// Contraction ratio `r = 1/b`.
    pub fn ratio(&self) -> f64 {
        1.0 / self.base as f64
    }

    #[inline]
    pub fn digit(&self, s: Symbol) -> f64 {
        self.digits[s as usize] as f64
    }

    /// Truncation radius `r^depth / (1 − r)` of an embedding to `depth` digits.
    pub fn radius(&self, depth: usize) -> f64 {
        let r = self.ratio();
        r.powi(depth as i32) / (1.0 - r)
    }

    /// Depth at which the truncation radius drops below `tol`.
    pub fn depth_for(&self, tol: f64) -> usize {
        (1..200).find(|&d| self.radius(d) < tol).unwrap_or(200)
    }

    pub fn embed(&self, s: &BiSequence, depth: usize) -> EmbeddedPoint {
        self.embed_at(s, 0, depth)
    }

    /// Embedding of `shift(s, n)` without materializing the shift.
    pub fn embed_at(&self, s: &BiSequence, n: i64, depth: usize) -> EmbeddedPoint {
        let r = self.ratio();
        let mut xu = 0.0;
        for i in (0..depth as i64).rev() {
            xu = (self.digit(s.at(n + i)) + xu) * r;
        }
        let mut xs = 0.0;
        for i in (1..=depth as i64).rev() {
            xs = (self.digit(s.at(n - i)) + xs) * r;
        }
        EmbeddedPoint {
            xs,
            xu,
            radius: self.radius(depth),
        }
    }

    /// Embeds a window: `back[0]` is `s_{-1}`, `back[1]` is `s_{-2}`, and so on.
    pub fn embed_halves(&self, back: &[Symbol], fwd: &[Symbol]) -> (f64, f64) {
        let r = self.ratio();
        let xu = fwd.iter().rev().fold(0.0, |acc, &s| (self.digit(s) + acc) * r);
        let xs = back.iter().rev().fold(0.0, |acc, &s| (self.digit(s) + acc) * r);
        (xs, xu)
    }

    pub fn holder(&self) -> HolderConstants {
        let b = self.base as f64;
        HolderConstants {
            upper_c: std::f64::consts::SQRT_2 * b,
            lower_c: 2.0,
            exponent: b.log2(),
        }
    }

    /// Exact hull of the `x_u`-projection of the forward cylinder `[w]`, as
    /// integers over the common denominator `b^k (b − 1)`.
    fn forward_hull_int(&self, w: &[Symbol]) -> (u128, u128) {
        let b = self.base as u128;
        let mut acc: u128 = 0;
        for &s in w {
            acc = acc * b + self.digits[s as usize] as u128;
        }
        let mn = *self.digits.iter().min().unwrap() as u128;
        let mx = *self.digits.iter().max().unwrap() as u128;
        ((b - 1) * acc + mn, (b - 1) * acc + mx)
    }

    /// Minimum gap between the hulls of distinct depth-`k` forward cylinders
    /// over `words`, as an exact fraction `(numerator, denominator)`.
    pub fn min_cylinder_gap_exact(&self, words: &[Word]) -> Option<(u128, u128)> {
        let k = words.first()?.len();
        let mut hulls: Vec<(u128, u128)> = words
            .iter()
            .map(|w| {
                assert_eq!(w.len(), k, "cylinders must have equal depth");
                self.forward_hull_int(w.as_slice())
            })
            .collect();
        hulls.sort_unstable();
        hulls.dedup();
        let den = (self.base as u128).pow(k as u32) * (self.base as u128 - 1);
        hulls
            .windows(2)
            .map(|p| p[1].0.saturating_sub(p[0].1))
            .min()
            .map(|g| (g, den))
    }
}

/// Extremes of tail sums given the boundary symbol, for a specific SFT.
///
/// `fwd_max[a]` is the sup of `Σ_{j≥0} digit(s_{k+j}) r^{j+1}` over admissible
/// continuations after symbol `a`; `back_*` is the mirror image for the past.
#[derive(Clone, Debug)]
pub struct TailBounds {
    ratio: f64,
    fwd_min: Vec<f64>,
    fwd_max: Vec<f64>,
    back_min: Vec<f64>,
    back_max: Vec<f64>,
}

impl TailBounds {
    pub fn new(spec: &EmbeddingSpec, m: &TransitionMatrix) -> Self {
        let n = m.size();
        let r = spec.ratio();
        let iterate = |forward: bool, take_max: bool| {
            let mut v = vec![0.0f64; n];
            for _ in 0..400 {
                let next: Vec<f64> = (0..n as Symbol)
                    .map(|a| {
                        let nb: Vec<Symbol> = if forward {
                            m.successors(a).collect()
                        } else {
                            m.predecessors(a).collect()
                        };
                        let vals = nb.iter().map(|&b| r * (spec.digit(b) + v[b as usize]));
                        if take_max {
                            vals.fold(f64::MIN, f64::max)
                        } else {
                            vals.fold(f64::MAX, f64::min)
                        }
                    })
                    .collect();
                let done = next == v;
                v = next;
                if done {
                    break;
                }
            }
            v
        };
        TailBounds {
            ratio: r,
            fwd_min: iterate(true, false),
            fwd_max: iterate(true, true),
            back_min: iterate(false, false),
            back_max: iterate(false, true),
        }
    }

    /// Hull of the cylinder fixing `s_{-k} … s_{k'-1}`, given as
    /// `back = [s_{-1}, …, s_{-k}]` and `fwd = [s_0, …, s_{k'-1}]` (both non-empty).
    pub fn hull(&self, spec: &EmbeddingSpec, back: &[Symbol], fwd: &[Symbol]) -> Rect {
        let (xs, xu) = spec.embed_halves(back, fwd);
        let su = self.ratio.powi(fwd.len() as i32);
        let ss = self.ratio.powi(back.len() as i32);
        let lu = *fwd.last().unwrap() as usize;
        let ls = *back.last().unwrap() as usize;
        // one ulp-scale pad keeps the hull conservative after rounding
        let pad = 4.0 * f64::EPSILON;
        Rect {
            xs: (xs + ss * self.back_min[ls] - pad, xs + ss * self.back_max[ls] + pad),
            xu: (xu + su * self.fwd_min[lu] - pad, xu + su * self.fwd_max[lu] + pad),
        }
    }

    /// Hull of the cylinder given by a centered window `w` covering positions
    /// `-w.len()/2 .. w.len() - w.len()/2`.
    pub fn hull_centered(&self, spec: &EmbeddingSpec, w: &[Symbol]) -> Rect {
        let h = w.len() / 2;
        let back: Vec<Symbol> = w[..h].iter().rev().copied().collect();
        self.hull(spec, &back, &w[h..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::seq_metric;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec3() -> EmbeddingSpec {
        EmbeddingSpec::with_base(2, 3)
    }

    #[test]
    fn validation() {
        assert!(spec3().validate(2).is_ok());
        assert!(EmbeddingSpec { base: 3, digits: vec![0, 1] }.validate(2).is_err());
        assert!(EmbeddingSpec { base: 4, digits: vec![0, 2, 4] }.validate(3).is_err());
        assert!(EmbeddingSpec::standard(3).validate(3).is_ok());
    }

    #[test]
    fn constant_sequences() {
        let z = BiSequence::periodic(Word::from(vec![0])).unwrap();
        let p = spec3().embed(&z, 10);
        assert_eq!((p.xs, p.xu), (0.0, 0.0));
        assert!((p.radius - 3f64.powi(-10) * 1.5).abs() < 1e-18);
        let o = BiSequence::periodic(Word::from(vec![1])).unwrap();
        let p = spec3().embed(&o, 40);
        assert!((p.xs - 1.0).abs() < 1e-15 && (p.xu - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alternating_sequence_matches_geometric_series() {
        // forward digits 0,2,0,2,…: x_u = 2·(1/9)/(1 − 1/9) = 1/4
        let s = BiSequence::periodic(Word::from(vec![0, 1])).unwrap();
        let p = spec3().embed(&s, 8);
        assert!((p.xu - 0.25).abs() <= p.radius);
        // backward digits s_{-1}=1, s_{-2}=0: x_s = 2·(1/3)/(1 − 1/9) = 3/4
        assert!((p.xs - 0.75).abs() <= p.radius);
    }

    #[test]
    fn cylinder_separation_exact() {
        for (base, m) in [
            (3, TransitionMatrix::full(2)),
            (3, TransitionMatrix::golden_mean()),
            (5, TransitionMatrix::full(3)),
        ] {
            let spec = EmbeddingSpec::with_base(m.size(), base);
            for k in 1..=6 {
                let (gap, den) = spec.min_cylinder_gap_exact(&m.words(k)).unwrap();
                // gap >= r^k  <=>  gap·b^k(b−1) >= (b−1)
                assert!(gap * (base as u128).pow(k as u32) >= den, "base {base} depth {k}");
            }
        }
    }

    #[test]
    fn hulls_contain_points() {
        let m = TransitionMatrix::golden_mean();
        let spec = spec3();
        let tb = TailBounds::new(&spec, &m);
        let s = BiSequence::eventually_periodic(Word::from(vec![0, 1]), Word::from(vec![0, 1, 0]), Word::from(vec![0, 0, 1]))
            .unwrap();
        assert!(s.is_admissible(&m).unwrap());
        for n in -5..10 {
            let p = spec.embed_at(&s, n, 40);
            let w = s.window(n - 3, 6);
            let h = tb.hull_centered(&spec, &w);
            assert!(h.xs.0 <= p.xs && p.xs <= h.xs.1);
            assert!(h.xu.0 <= p.xu && p.xu <= h.xu.1);
        }
    }

    #[test]
    fn holder_bounds_on_random_pairs() {
        let spec = EmbeddingSpec::with_base(3, 5);
        let m = TransitionMatrix::full(3);
        let hc = spec.holder();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let depth = 30;
        for _ in 0..2000 {
            let len = rng.gen_range(1..20);
            let core_a: Vec<u32> = (0..len).map(|_| rng.gen_range(0..3)).collect();
            let mut core_b = core_a.clone();
            let flips = rng.gen_range(1..4);
            for _ in 0..flips {
                let i = rng.gen_range(0..len);
                core_b[i] = rng.gen_range(0..3);
            }
            let a = BiSequence::eventually_periodic(Word::from(vec![0]), core_a.into(), Word::from(vec![2]))
                .unwrap()
                .shift(rng.gen_range(0..len as i64));
            let b = BiSequence::eventually_periodic(Word::from(vec![0]), core_b.into(), Word::from(vec![2]))
                .unwrap()
                .shift(a.offset());
            assert!(a.is_admissible(&m).unwrap());
            let d = seq_metric(&a, &b, depth as u32);
            let e = spec.embed(&a, depth).dist(&spec.embed(&b, depth));
            let slack = 4.0 * spec.radius(depth);
            assert!(e <= hc.upper_c * d.value.powf(hc.exponent) + slack);
            if d.resolved {
                assert!(d.value <= hc.lower_c * e.powf(1.0 / hc.exponent) + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn embed_at_agrees_with_shift(core in proptest::collection::vec(0u32..2, 0..10), n in -15i64..15) {
            let s = BiSequence::eventually_periodic(Word::from(vec![1, 0]), Word::from(core), Word::from(vec![0])).unwrap();
            let spec = spec3();
            prop_assert_eq!(spec.embed_at(&s, n, 25), spec.embed(&s.shift(n), 25));
        }
    }
}
