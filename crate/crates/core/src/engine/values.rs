use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::observable::SurfaceFn;
use super::system::SkewSystem;
use crate::circle::{frac_mul, rotate_n, steer_rotation, Angle, CircleMap, SteerConfig};
use crate::error::{Result, SpectraError};
use crate::sample::{SampleKind, SpectrumSample};
use crate::symbolic::{BiSequence, Block, EmbeddingSpec, SeqKind, Word};

/// Longest window `[lo, hi]` evaluated explicitly.
const MAX_SPAN: i64 = 50_000_000;

/// Refinement tolerance assumed for fiber maxima, in value units per unit of `L_t`.
const FIBER_TOL: f64 = 1e-12;

fn scan_range(s: &BiSequence, horizon: u64) -> Result<(i64, i64)> {
    if horizon == 0 {
        return Err(SpectraError::Domain("horizon must be >= 1".into()));
    }
    let h = i64::try_from(horizon).map_err(|_| SpectraError::Overflow("horizon"))?;
    let (rstart, _) = s.right_tail();
    let (lend, _) = s.left_tail();
    let lo = (-h).min(lend.saturating_sub(h));
    let hi = h.max(rstart.saturating_add(h));
    if hi.saturating_sub(lo) > MAX_SPAN {
        return Err(SpectraError::Unsupported(format!(
            "orbit window [{lo}, {hi}] exceeds {MAX_SPAN} positions"
        )));
    }
    Ok((lo, hi))
}

/// Points of the periodic orbit `w^∞`, one per phase.
fn cycle_points(w: &Word) -> Vec<BiSequence> {
    let p = BiSequence::periodic(w.clone()).expect("cycle words are non-empty");
    (0..w.len() as i64).map(|i| p.shift(i)).collect()
}

/// `max_i f_F(p_i)` over the cycle points of `w^∞`.
pub fn cycle_fiber_max(sys: &SkewSystem, w: &Word) -> f64 {
    cycle_points(w)
        .iter()
        .map(|p| {
            let x = sys.embed_at(p, 0);
            sys.observable().fiber_max_at(x.xs, x.xu).value
        })
        .fold(f64::MIN, f64::max)
}

/// Fiber coordinates `t_n` for `n ∈ [lo, hi]`, in order.
fn fiber_angles(sys: &SkewSystem, s: &BiSequence, t: Angle, lo: i64, hi: i64) -> Vec<Angle> {
    if let Some(alpha) = sys.cocycle().constant_rotation() {
        return (lo..=hi).into_par_iter().map(|n| rotate_n(t, alpha, n)).collect();
    }
    let c = sys.cocycle();
    let mut fwd = Vec::with_capacity(hi.max(0) as usize + 1);
    let mut u = t;
    for k in 0..=hi.max(0) {
        fwd.push(u);
        u = c.map_at(&sys.embed_at(s, k)).apply(u);
    }
    let mut back = Vec::new();
    let mut u = t;
    for k in (lo.min(0)..0).rev() {
        u = c.map_at(&sys.embed_at(s, k)).apply_inverse(u);
        back.push(u);
    }
    back.reverse();
    back.extend(fwd);
    let skip = (lo - lo.min(0)) as usize;
    back.into_iter().skip(skip).take((hi - lo + 1) as usize).collect()
}

/// `m(s, t) = sup_n F(Φ^n(s, t))`.
///
/// Positions with `|n| ≤ horizon` (widened to cover the non-periodic part of
/// `s`) are evaluated directly. Beyond them the orbit shadows the tail cycles;
/// under an irrational constant rotation the fiber orbit is dense, so the tail
/// supremum is the largest fiber maximum over the cycle points. Other cocycles
/// report the window maximum with the tail excess folded into the error bound
/// and the sample flagged approximate.
pub fn markov_value_skew(sys: &SkewSystem, s: &BiSequence, t: Angle, horizon: u64) -> Result<SpectrumSample> {
    let (lo, hi) = scan_range(s, horizon)?;
    let obs = sys.observable();
    let angles = fiber_angles(sys, s, t, lo, hi);
    let window_max = (lo..=hi)
        .into_par_iter()
        .map(|n| {
            let x = sys.embed_at(s, n);
            obs.eval(x.xs, x.xu, angles[(n - lo) as usize].value())
        })
        .reduce(|| f64::MIN, f64::max);

    let (rstart, rcyc) = s.right_tail();
    let (lend, lcyc) = s.left_tail();
    let tail_max = cycle_fiber_max(sys, &rcyc).max(cycle_fiber_max(sys, &lcyc));
    // beyond the window the orbit agrees with a cycle point on this many symbols
    let agree = (hi - rstart).min(lend - lo).max(0) as usize;
    let shadow = obs.lipschitz_x() * sys.agreement_radius(agree);
    let base_err = sys.truncation_error() + shadow + obs.lipschitz_t() * FIBER_TOL;

    let (value, error_bound, approximate) = if sys.irrational_rotation().is_some() {
        (window_max.max(tail_max), base_err, false)
    } else {
        let excess = (tail_max - window_max).max(0.0);
        (window_max, base_err + excess, true)
    };
    Ok(SpectrumSample {
        value,
        kind: SampleKind::Markov,
        witness: s.clone(),
        error_bound,
        approximate,
        closed_form: None,
    })
}

/// Markov value `sup_n f(φ^n(s))` of a surface observable, with exact tails.
pub fn surface_markov_value(
    emb: &EmbeddingSpec,
    depth: usize,
    f: &SurfaceFn,
    s: &BiSequence,
    horizon: u64,
) -> Result<SpectrumSample> {
    let (lo, hi) = scan_range(s, horizon)?;
    let val = |p: &BiSequence, n: i64| {
        let x = emb.embed_at(p, n, depth);
        f.eval(x.xs, x.xu)
    };
    let window_max = (lo..=hi).into_par_iter().map(|n| val(s, n)).reduce(|| f64::MIN, f64::max);
    let (rstart, rcyc) = s.right_tail();
    let (lend, lcyc) = s.left_tail();
    let tail_max = cycle_points(&rcyc)
        .iter()
        .chain(cycle_points(&lcyc).iter())
        .map(|p| val(p, 0))
        .fold(f64::MIN, f64::max);
    let (lo_d, hi_d) = emb.digits.iter().fold((u32::MAX, 0), |(a, b), &d| (a.min(d), b.max(d)));
    let r = emb.ratio();
    let span = (hi_d - lo_d) as f64 * r / (1.0 - r);
    let agree = (hi - rstart).min(lend - lo).max(0);
    let lip = f.lipschitz();
    let error_bound = lip * std::f64::consts::SQRT_2 * (span * r.powi(agree as i32) + emb.radius(depth));
    Ok(SpectrumSample {
        value: window_max.max(tail_max),
        kind: SampleKind::Markov,
        witness: s.clone(),
        error_bound,
        approximate: false,
        closed_form: None,
    })
}

/// Lagrange value of an eventually periodic sequence under an irrational
/// constant rotation: the largest fiber maximum over its forward cycle, for
/// every starting angle.
pub fn lagrange_value_periodic_tail(sys: &SkewSystem, s: &BiSequence) -> Result<SpectrumSample> {
    if !matches!(s.kind(), SeqKind::Periodic { .. } | SeqKind::EventuallyPeriodic { .. }) {
        return Err(SpectraError::Unsupported(
            "exact Lagrange values need an eventually periodic sequence".into(),
        ));
    }
    sys.irrational_rotation().ok_or_else(|| {
        SpectraError::Unsupported("exact Lagrange values need an irrational constant rotation".into())
    })?;
    let (_, cyc) = s.right_tail();
    Ok(SpectrumSample {
        value: cycle_fiber_max(sys, &cyc),
        kind: SampleKind::Lagrange,
        witness: s.clone(),
        error_bound: sys.truncation_error() + sys.observable().lipschitz_t() * FIBER_TOL,
        approximate: false,
        closed_form: None,
    })
}

/// Maximum of `F(Φ^n(s, t))` over `n ∈ [from, to]`.
pub fn window_max(sys: &SkewSystem, s: &BiSequence, t: Angle, from: i64, to: i64) -> Result<f64> {
    if to < from || to - from > MAX_SPAN {
        return Err(SpectraError::Domain(format!("bad window [{from}, {to}]")));
    }
    let angles = fiber_angles(sys, s, t, from.min(0), to.max(0));
    let base = from.min(0);
    let obs = sys.observable();
    Ok((from..=to)
        .into_par_iter()
        .map(|n| {
            let x = sys.embed_at(s, n);
            obs.eval(x.xs, x.xu, angles[(n - base) as usize].value())
        })
        .reduce(|| f64::MIN, f64::max))
}

/// How block lengths are chosen in each round of a scheduled witness.
///
/// Round `s ≥ 1` appends `growing^{growing_base + s}`, then `bridge`, then
/// `steered^{N_s}` with `N_s ≥ steered_base + s` picked by rotation steering
/// so the fiber angle at the next marker is within `eps` of `return_angle`,
/// then the marker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteerPlan {
    pub alpha: f64,
    pub return_angle: Angle,
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growing: Option<Word>,
    #[serde(default)]
    pub growing_base: u64,
    #[serde(default)]
    pub bridge: Word,
    pub steered: Word,
    pub steered_base: u64,
}

/// Witness orbit `(L^∞; H B_1 … H B_2 … , t)` built round by round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledOrbit {
    pub sequence: BiSequence,
    /// Fiber angle at position 0.
    pub t: Angle,
    /// The repeated marker word `H`.
    pub marker: Word,
    /// Index inside the marker whose value the construction targets.
    pub focus: usize,
    pub plan: SteerPlan,
    pub rounds: usize,
    /// Value the construction predicts for the Lagrange value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
}

impl ScheduledOrbit {
    /// Starts `left^∞; marker …` with no rounds yet.
    pub fn start(left: Word, marker: Word, focus: usize, t: Angle, plan: SteerPlan) -> Result<Self> {
        if focus >= marker.len() {
            return Err(SpectraError::Domain("focus index outside the marker".into()));
        }
        if !(plan.eps > 0.0 && plan.eps.is_finite()) {
            return Err(SpectraError::Domain("steering tolerance must be positive".into()));
        }
        let tail = plan.growing.clone().unwrap_or_else(|| plan.steered.clone());
        let sequence = BiSequence::scheduled(left, marker.clone(), Vec::new(), tail)?;
        Ok(ScheduledOrbit {
            sequence,
            t,
            marker,
            focus,
            plan,
            rounds: 0,
            target: None,
        })
    }

    fn blocks_per_round(&self) -> usize {
        self.plan.growing.is_some() as usize + !self.plan.bridge.is_empty() as usize + 2
    }

    /// Start of the marker of round `s` (`s = 0` is the core at position 0).
    pub fn marker_start(&self, s: usize) -> Option<i64> {
        if s == 0 {
            return Some(0);
        }
        if s > self.rounds {
            return None;
        }
        self.sequence.block_start(s * self.blocks_per_round() - 1)
    }

    /// Start of the bridge region of round `s ≥ 1`: the end of the growing
    /// block, or of the previous marker when there is none.
    pub fn junction_start(&self, s: usize) -> Option<i64> {
        if s == 0 || s > self.rounds {
            return None;
        }
        let first = (s - 1) * self.blocks_per_round();
        let k = first + self.plan.growing.is_some() as usize;
        self.sequence.block_start(k)
    }

    /// `(left, right)` block lengths in symbols around the marker of round `s`.
    fn neighbour_lengths(&self, s: usize) -> (u64, u64) {
        let SeqKind::Scheduled { blocks, .. } = self.sequence.kind() else {
            return (u64::MAX, u64::MAX);
        };
        let g = self.blocks_per_round();
        let len = |b: &Block| b.word.len() as u64 * b.count;
        let left = if s == 0 { u64::MAX } else { len(&blocks[s * g - 2]) };
        let right = if s >= self.rounds { u64::MAX } else { len(&blocks[s * g]) };
        (left, right)
    }

    /// Appends rounds until there are `rounds` of them.
    pub fn extend_to(&mut self, rounds: usize, cfg: &SteerConfig) -> Result<()> {
        let p = &self.plan;
        let h_len = self.marker.len() as u64;
        let k = p.steered.len() as u64;
        if k == 0 {
            return Err(SpectraError::Domain("steered word must be non-empty".into()));
        }
        while self.rounds < rounds {
            let s = self.rounds as u64 + 1;
            let pos = self.marker_start(self.rounds).expect("existing round");
            if pos.unsigned_abs() >= 1 << 52 {
                return Err(SpectraError::Overflow("witness length"));
            }
            let here = self.t.add(frac_mul(pos, p.alpha));
            let mut blocks = Vec::new();
            let mut r = h_len;
            if let Some(g) = &p.growing {
                let count = p.growing_base + s;
                r += g.len() as u64 * count;
                blocks.push(Block::new(g.clone(), count));
            }
            if !p.bridge.is_empty() {
                r += p.bridge.len() as u64;
                blocks.push(Block::new(p.bridge.clone(), 1));
            }
            let target = steer_rotation(
                p.alpha,
                k,
                r,
                here,
                p.return_angle,
                p.eps,
                p.steered_base + s,
                &CircleMap::identity(),
                cfg,
            )?;
            blocks.push(Block::new(p.steered.clone(), target.n));
            blocks.push(Block::new(self.marker.clone(), 1));
            self.sequence = self.sequence.extended(&blocks)?;
            self.rounds += 1;
        }
        Ok(())
    }
}

/// Finite-horizon Lagrange estimate of a scheduled witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangeEstimate {
    pub sample: SpectrumSample,
    pub target: Option<f64>,
    /// Value at the focus position of each round used.
    pub focus_values: Vec<f64>,
    /// Bound on `F` at positions deep inside the periodic blocks.
    pub deep_bound: f64,
    pub rounds_used: (usize, usize),
}

/// `ℓ(z, t) = limsup_n F(Φ^n(z, t))` for a scheduled witness, estimated over
/// rounds `⌈h/2⌉ ..= h`.
///
/// Positions within `w` symbols of a marker or a junction are evaluated
/// directly; every other position agrees with a point of a block cycle on `w`
/// symbols each side and is bounded through the cycle's fiber maxima. The
/// schedule is extended by steering when shorter than `horizon`.
pub fn lagrange_value_skew(sys: &SkewSystem, orbit: &ScheduledOrbit, horizon: usize) -> Result<LagrangeEstimate> {
    let alpha = sys.cocycle().constant_rotation().ok_or_else(|| {
        SpectraError::Unsupported("scheduled Lagrange estimates need a constant rotation cocycle".into())
    })?;
    if horizon == 0 {
        return Err(SpectraError::Domain("horizon must be >= 1".into()));
    }
    let extended;
    let orbit = if orbit.rounds < horizon {
        let mut o = orbit.clone();
        o.extend_to(horizon, &SteerConfig::default())?;
        extended = o;
        &extended
    } else {
        orbit
    };
    let obs = sys.observable();
    let (lx, lt) = (obs.lipschitz_x(), obs.lipschitz_t());
    let w = (1..=200)
        .find(|&k| lx * sys.agreement_radius(k) < 1e-13)
        .unwrap_or(200)
        .max(orbit.marker.len()) as i64;
    let h_len = orbit.marker.len() as i64;
    let seq = &orbit.sequence;
    let value_at = |n: i64| {
        let x = sys.embed_at(seq, n);
        obs.eval(x.xs, x.xu, orbit.t.add(frac_mul(n, alpha)).value())
    };
    let span_max = |a: i64, b: i64| (a..b).map(value_at).fold(f64::MIN, f64::max);

    let first = (horizon / 2).max(1);
    let mut est = f64::MIN;
    let mut focus_values = Vec::new();
    let mut min_neighbour = u64::MAX;
    for s in first..=horizon {
        let p = orbit.marker_start(s).expect("rounds extended");
        est = est.max(span_max(p - w, p + h_len + w));
        focus_values.push(value_at(p + orbit.focus as i64));
        let (l, r) = orbit.neighbour_lengths(s);
        min_neighbour = min_neighbour.min(l).min(r);
        if let Some(j) = orbit.junction_start(s) {
            let b = orbit.plan.bridge.len() as i64;
            est = est.max(span_max(j - w, j + b + w));
        }
    }
    let mut deep = cycle_fiber_max(sys, &orbit.plan.steered);
    if let Some(g) = &orbit.plan.growing {
        deep = deep.max(cycle_fiber_max(sys, g));
    }
    let deep_bound = deep + lx * sys.agreement_radius(w as usize);
    let m = min_neighbour.min(200) as usize;
    let error_bound = lt * orbit.plan.eps + lx * sys.agreement_radius(m) + sys.truncation_error() + lt * FIBER_TOL;
    Ok(LagrangeEstimate {
        sample: SpectrumSample {
            value: est,
            kind: SampleKind::Lagrange,
            witness: seq.clone(),
            error_bound,
            approximate: deep_bound >= est,
            closed_form: None,
        },
        target: orbit.target,
        focus_values,
        deep_bound,
        rounds_used: (first, horizon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::Cocycle;
    use crate::engine::observable::{FiberFn, ObservableSpec};
    use crate::symbolic::TransitionMatrix;
    use proptest::prelude::*;

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn worked(obs: ObservableSpec) -> SkewSystem {
        SkewSystem::build(
            TransitionMatrix::full(2),
            EmbeddingSpec::standard(2),
            Cocycle::rotation(GOLDEN),
            obs,
        )
        .unwrap()
    }

    fn w(v: &[u32]) -> Word {
        Word::from(v.to_vec())
    }

    /// Direct surface sup over a long window, independent of tail handling.
    fn direct_surface(emb: &EmbeddingSpec, f: &SurfaceFn, s: &BiSequence, n: i64) -> f64 {
        (-n..=n)
            .map(|k| {
                let x = emb.embed_at(s, k, 40);
                f.eval(x.xs, x.xu)
            })
            .fold(f64::MIN, f64::max)
    }

    #[test]
    fn fiber_free_observable_reduces_to_surface() {
        let f = SurfaceFn::linear(1.0, 0.7);
        let sys = worked(ObservableSpec::sum(f.clone(), FiberFn::zero()));
        let s = BiSequence::eventually_periodic(w(&[0, 1]), w(&[1, 1, 0, 1]), w(&[0, 0, 1])).unwrap();
        let m = markov_value_skew(&sys, &s, Angle::new(0.3), 20).unwrap();
        let direct = direct_surface(sys.embedding(), &f, &s, 400);
        assert!((m.value - direct).abs() <= m.error_bound + 1e-12);
        let sm = surface_markov_value(sys.embedding(), 40, &f, &s, 20).unwrap();
        assert!((sm.value - direct).abs() < 1e-12);
    }

    #[test]
    fn fiber_only_observable_attains_max_g() {
        let sys = worked(ObservableSpec::sum(SurfaceFn::constant(0.0), FiberFn::cos_shifted(1.3, 0.2)));
        for t in [0.0, 0.37, 0.91] {
            let s = BiSequence::periodic(w(&[0, 1, 1])).unwrap();
            let m = markov_value_skew(&sys, &s, Angle::new(t), 5).unwrap();
            assert!((m.value - 1.3).abs() < 1e-12);
            assert!(!m.approximate);
        }
    }

    #[test]
    fn periodic_lagrange_equals_tail_markov() {
        let sys = worked(ObservableSpec::sum(SurfaceFn::linear(1.0, 1.0), FiberFn::cos_shifted(0.2, 0.0)));
        let s = BiSequence::periodic(w(&[0, 1, 1])).unwrap();
        let l = lagrange_value_periodic_tail(&sys, &s).unwrap();
        let m = markov_value_skew(&sys, &s, Angle::new(0.1), 10).unwrap();
        assert!((l.value - m.value).abs() < 1e-12);
        // the cycle maximum is at the point 1 1 ; 0 1 1 0 … (largest digit sums)
        let direct = cycle_fiber_max(&sys, &w(&[1, 1, 0]));
        assert!((l.value - direct).abs() < 1e-15);
    }

    #[test]
    fn general_cocycle_is_flagged_approximate() {
        let mut spec = worked(ObservableSpec::sum(SurfaceFn::linear(1.0, 1.0), FiberFn::cos_shifted(0.2, 0.0)))
            .spec()
            .clone();
        spec.cocycle = Cocycle::AffineRotation {
            alpha: GOLDEN,
            cs: 0.1,
            cu: 0.0,
        };
        let sys = SkewSystem::new(spec).unwrap();
        let s = BiSequence::periodic(w(&[0, 1])).unwrap();
        let m = markov_value_skew(&sys, &s, Angle::new(0.0), 50).unwrap();
        assert!(m.approximate);
        let tail = cycle_fiber_max(&sys, &w(&[0, 1]));
        assert!(m.value <= tail + 1e-12 && m.value + m.error_bound >= tail - 1e-12);
    }

    #[test]
    fn constant_observable_lagrange_is_constant() {
        let sys = worked(ObservableSpec::sum(SurfaceFn::constant(0.75), FiberFn::zero()));
        let plan = SteerPlan {
            alpha: GOLDEN,
            return_angle: Angle::new(0.25),
            eps: 1e-6,
            growing: None,
            growing_base: 0,
            bridge: Word::default(),
            steered: w(&[0]),
            steered_base: 0,
        };
        let orbit = ScheduledOrbit::start(w(&[0]), w(&[1, 1]), 0, Angle::new(0.25), plan).unwrap();
        let est = lagrange_value_skew(&sys, &orbit, 10).unwrap();
        assert_eq!(est.sample.value, 0.75);
        assert!(est.sample.error_bound < 1e-9);
    }

    #[test]
    fn steered_rounds_return_to_angle() {
        let plan = SteerPlan {
            alpha: GOLDEN,
            return_angle: Angle::new(0.4),
            eps: 1e-7,
            growing: Some(w(&[1])),
            growing_base: 3,
            bridge: w(&[0, 1]),
            steered: w(&[0]),
            steered_base: 5,
        };
        let mut orbit = ScheduledOrbit::start(w(&[0]), w(&[1, 0, 1]), 1, Angle::new(0.4), plan).unwrap();
        orbit.extend_to(8, &SteerConfig::default()).unwrap();
        assert_eq!(orbit.rounds, 8);
        for s in 1..=8 {
            let p = orbit.marker_start(s).unwrap();
            assert_eq!(orbit.sequence.window(p, 3), vec![1, 0, 1]);
            // independent angle: exact integer position times α
            let u = Angle::new(0.4 + (p as f64 * GOLDEN).fract());
            assert!(u.dist(Angle::new(0.4)) < 1e-7 + 1e-9, "round {s}");
            let j = orbit.junction_start(s).unwrap();
            assert_eq!(orbit.sequence.window(j, 2), vec![0, 1]);
            assert_eq!(orbit.sequence.at(j - 1), 1);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn markov_is_orbit_constant(
            core in proptest::collection::vec(0u32..2, 1..8),
            left in proptest::collection::vec(0u32..2, 1..4),
            right in proptest::collection::vec(0u32..2, 1..4),
            t in 0.0f64..1.0,
            shift in -5i64..5,
        ) {
            let sys = worked(ObservableSpec::sum(SurfaceFn::linear(1.0, 0.8), FiberFn::cos_shifted(0.3, 0.1)));
            let s = BiSequence::eventually_periodic(Word::from(left), Word::from(core), Word::from(right)).unwrap();
            let t = Angle::new(t);
            let m0 = markov_value_skew(&sys, &s, t, 30).unwrap();
            let u = rotate_n(t, GOLDEN, shift);
            let m1 = markov_value_skew(&sys, &s.shift(shift), u, 30).unwrap();
            prop_assert!((m0.value - m1.value).abs() < 1e-10);
        }

        #[test]
        fn fiber_max_is_lipschitz_in_x(a in (0.0f64..1.0, 0.0f64..1.0), b in (0.0f64..1.0, 0.0f64..1.0)) {
            let sys = worked(ObservableSpec::Product {
                f: SurfaceFn::Bump { a: 0.3, b: 0.6 },
                c: -0.2,
                g: FiberFn::cos_shifted(1.0, 0.2),
            });
            let obs = sys.observable();
            let fa = crate::engine::fiber_max(obs, a.0, a.1, 256, 1e-12).unwrap().value;
            let fb = crate::engine::fiber_max(obs, b.0, b.1, 256, 1e-12).unwrap().value;
            let d = (a.0 - b.0).hypot(a.1 - b.1);
            prop_assert!((fa - fb).abs() <= obs.lipschitz_x() * d + 1e-12);
        }
    }
}
