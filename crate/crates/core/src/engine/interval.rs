use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::membership::{empirical_eps_delta, validate_membership_R, MaxReport};
use super::system::{SkewSystem, SystemSpec};
use super::values::{cycle_fiber_max, lagrange_value_skew, ScheduledOrbit, SteerPlan};
use crate::circle::{frac_mul, Angle, SteerConfig};
use crate::error::{Result, SpectraError};
use crate::symbolic::{is_admissible, BiSequence, Word};

/// Closed arc `[center − half_width, center + half_width]` of the circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleInterval {
    pub center: Angle,
    pub half_width: f64,
}

impl AngleInterval {
    pub fn new(center: f64, half_width: f64) -> Self {
        AngleInterval {
            center: Angle::new(center),
            half_width,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width >= 0.0 && self.half_width < 0.5) {
            return Err(SpectraError::Domain(format!(
                "angular half width {} outside [0, 1/2)",
                self.half_width
            )));
        }
        if self.half_width == 0.0 {
            return Err(SpectraError::DegenerateInterval("angular interval has zero width".into()));
        }
        Ok(())
    }

    /// `n ≥ 2` evenly spaced points from the left end to the right end.
    pub fn points(&self, n: usize) -> Vec<Angle> {
        (0..n)
            .map(|i| {
                let u = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
                self.center.add(self.half_width * (2.0 * u - 1.0))
            })
            .collect()
    }

    pub fn contains(&self, t: Angle) -> bool {
        self.center.dist(t) <= self.half_width
    }

    /// The arc rotated by `x`.
    pub fn shifted(&self, x: f64) -> Self {
        AngleInterval {
            center: self.center.add(x),
            half_width: self.half_width,
        }
    }
}

/// Data of the construction where the maximum sits on a periodic orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicCaseParams {
    /// Periodic word whose orbit avoids the maximizing cylinder.
    pub q: Word,
    /// Marker word passing near the maximum.
    pub h: Word,
    /// Position inside `h` of the point closest to the maximum.
    pub j: usize,
    /// Radius of the ball around the maximum avoided by the `q` blocks.
    pub delta: f64,
    /// Fiber arc, taken at position `j`.
    pub interval: AngleInterval,
    pub grid_n: usize,
}

/// Data of the construction where the maximum is a heteroclinic point
/// `x̃ = σ^j(X₁^∞; H X₂^∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonperiodicCaseParams {
    pub x1: Word,
    pub x2: Word,
    /// Bridge from `X₂` back to `X₁` (may be empty).
    pub q: Word,
    pub h: Word,
    pub j: usize,
    /// Fiber arc around the maximizing angle.
    pub interval: AngleInterval,
    pub grid_n: usize,
}

/// Tuning shared by both constructions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertConfig {
    /// Steering tolerance for the return angle at every marker.
    pub steer_eps: f64,
    /// Number of marker rounds per witness.
    pub horizon: usize,
    /// Minimum repetition count of the periodic blocks.
    pub base_block: u64,
    pub membership_depth: usize,
    pub fiber_grid: usize,
    /// Grid targets for the periodic case (the nonperiodic case uses `grid_n`).
    pub targets: usize,
    /// A grid point counts as validated when the estimate is within this of the target.
    pub validation_tol: f64,
}

impl Default for CertConfig {
    fn default() -> Self {
        CertConfig {
            steer_eps: 1e-7,
            horizon: 12,
            base_block: 20,
            membership_depth: 6,
            fiber_grid: 64,
            targets: 256,
            validation_tol: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    PeriodicCase,
    NonperiodicCase,
}

/// One target of the certificate and its witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// Fiber angle at position 0 of the witness.
    pub t: Angle,
    pub target: f64,
    pub witness: ScheduledOrbit,
    pub estimate: f64,
    pub error_bound: f64,
    pub approximate: bool,
    pub validated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum CaseParams {
    Periodic(PeriodicCaseParams),
    Nonperiodic(NonperiodicCaseParams),
}

/// A closed interval claimed to lie in the Lagrange spectrum, with one
/// scheduled witness orbit per grid target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntervalCertificate {
    pub construction: Construction,
    pub lo: f64,
    pub hi: f64,
    pub params: CaseParams,
    /// Marker index whose value the witnesses realize.
    pub j0: usize,
    /// Grid resolution and length of the run of grid points selecting `j0`.
    pub run_grid: usize,
    pub run_length: usize,
    pub max_value: f64,
    pub max_angle: Angle,
    /// Drop of `F` away from the maximum: the empirical `ε_δ` in the periodic
    /// case, the margin over the rest of the orbit in the other.
    pub eps_delta: f64,
    /// Largest value available deep inside the periodic blocks.
    pub deep_bound: f64,
    pub horizon: usize,
    pub validation_tol: f64,
    pub grid: Vec<GridPoint>,
    pub validated_fraction: f64,
    pub system: SystemSpec,
}

/// Result of re-evaluating a certificate from its serialized form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Revalidation {
    pub points: usize,
    /// Points whose fresh estimate matches the stored one within its error bound.
    pub reproduced: usize,
    pub validated_fraction: f64,
    pub max_discrepancy: f64,
}

impl IntervalCertificate {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Rebuilds the system and every witness estimate from the stored data.
    pub fn revalidate(&self) -> Result<Revalidation> {
        let sys = SkewSystem::new(self.system.clone())?;
        let fresh: Vec<(f64, bool, bool)> = self
            .grid
            .par_iter()
            .map(|g| {
                let e = lagrange_value_skew(&sys, &g.witness, self.horizon)?;
                let v = e.sample.value;
                let same = (v - g.estimate).abs() <= g.error_bound;
                let ok = validated(g.target, v, e.sample.error_bound, e.sample.approximate, self.validation_tol);
                Ok(((v - g.estimate).abs(), same, ok))
            })
            .collect::<Result<_>>()?;
        let n = fresh.len();
        Ok(Revalidation {
            points: n,
            reproduced: fresh.iter().filter(|f| f.1).count(),
            validated_fraction: fresh.iter().filter(|f| f.2).count() as f64 / n.max(1) as f64,
            max_discrepancy: fresh.iter().map(|f| f.0).fold(0.0, f64::max),
        })
    }
}

fn validated(target: f64, estimate: f64, err: f64, approximate: bool, tol: f64) -> bool {
    !approximate && err <= tol && (estimate - target).abs() <= err.max(f64::EPSILON * target.abs())
}

fn value_at(sys: &SkewSystem, s: &BiSequence, t: Angle, alpha: f64, l: i64) -> f64 {
    let x = sys.embed_at(s, l);
    sys.observable().eval(x.xs, x.xu, t.add(frac_mul(l, alpha)).value())
}

/// Positions on each side whose cylinders pin values down to `1e-13`.
fn margin(sys: &SkewSystem) -> usize {
    let lx = sys.observable().lipschitz_x();
    (1..=200).find(|&k| lx * sys.agreement_radius(k) < 1e-13).unwrap_or(200)
}

fn precheck(sys: &SkewSystem, cfg: &CertConfig) -> Result<MaxReport> {
    let report = validate_membership_R(sys, cfg.membership_depth, cfg.fiber_grid)?;
    if !report.unique {
        return Err(SpectraError::NonUniqueArgmax(format!(
            "maximum {} not isolated (gap {:e}, fiber unique {})",
            report.value, report.gap, report.fiber_unique
        )));
    }
    if !report.member_r {
        return Err(SpectraError::Construction(format!(
            "observable fails the derivative conditions at its maximum (ds {:e}, du {:e}, dtt {:e})",
            report.ds, report.du, report.dtt
        )));
    }
    Ok(report)
}

fn check_words(sys: &SkewSystem, words: &[(&Word, &str)]) -> Result<()> {
    for (w, name) in words {
        if !is_admissible(w, sys.matrix())? {
            return Err(SpectraError::Construction(format!("{name} is not admissible")));
        }
    }
    Ok(())
}

/// Builds witnesses for `ts`, evaluates them and assembles the grid.
fn witness_grid(
    sys: &SkewSystem,
    cfg: &CertConfig,
    ts: &[Angle],
    make: impl Fn(Angle) -> Result<ScheduledOrbit> + Sync,
) -> Result<Vec<GridPoint>> {
    let steer = SteerConfig::default();
    ts.par_iter()
        .map(|&t| {
            let mut orbit = make(t)?;
            orbit.extend_to(cfg.horizon, &steer)?;
            let est = lagrange_value_skew(sys, &orbit, cfg.horizon)?;
            let target = orbit.target.expect("targets are set by the constructions");
            let s = &est.sample;
            Ok(GridPoint {
                t,
                target,
                estimate: s.value,
                error_bound: s.error_bound,
                approximate: s.approximate,
                validated: validated(target, s.value, s.error_bound, s.approximate, cfg.validation_tol),
                witness: orbit,
            })
        })
        .collect()
}

fn fraction(grid: &[GridPoint]) -> f64 {
    grid.iter().filter(|g| g.validated).count() as f64 / grid.len().max(1) as f64
}

/// Interval in the Lagrange spectrum from a periodic word `q` avoiding the
/// maximum and a marker `h` passing near it.
///
/// With `w = q^∞; h q^∞` and fiber angle `t` at position 0, the arc `I` is
/// pulled back to position 0 and sampled with `grid_n` points. Each sample is
/// labelled by the marker position maximizing `F` along the orbit of `(w, t)`;
/// the label `j0` with the longest run of consecutive samples is kept. On that
/// run `t ↦ F(Φ^{j0}(w, t))` is continuous, so its image is the interval
/// between the smallest and largest sampled value, and each value is the
/// Lagrange value of `(q^∞; h q^{n_1} h q^{n_2} h …, t)` when the block lengths
/// bring the fiber back to `t` at every marker.
pub fn construct_interval_periodic_case(
    sys: &SkewSystem,
    p: &PeriodicCaseParams,
    cfg: &CertConfig,
) -> Result<IntervalCertificate> {
    let alpha = sys.require_rotation()?;
    p.interval.check()?;
    if p.q.is_empty() || p.h.is_empty() {
        return Err(SpectraError::Domain("q and h must be non-empty".into()));
    }
    if p.j >= p.h.len() {
        return Err(SpectraError::Domain(format!("j = {} outside the marker", p.j)));
    }
    if p.grid_n < 2 || cfg.targets < 2 {
        return Err(SpectraError::Domain("need at least two grid points".into()));
    }
    if !(p.delta > 0.0) {
        return Err(SpectraError::Domain("delta must be positive".into()));
    }
    let qhq = p.q.concat(&p.h).concat(&p.q);
    check_words(sys, &[(&p.q.concat(&p.q), "q q"), (&qhq, "q h q")])?;
    let report = precheck(sys, cfg)?;

    // q's orbit must miss the maximizing cylinder and stay δ away from x̃
    let d = cfg.membership_depth;
    let cyc = BiSequence::periodic(p.q.clone())?;
    for i in 0..p.q.len() as i64 {
        let win = cyc.window(i - d as i64, 2 * d);
        if win == report.argmax_window {
            return Err(SpectraError::Construction("q passes through the maximizing cylinder".into()));
        }
    }
    let w = BiSequence::eventually_periodic(p.q.clone(), p.h.clone(), p.q.clone())?;
    let m = margin(sys) as i64;
    let hl = p.h.len() as i64;
    for l in (-m - p.q.len() as i64..0).chain(hl..hl + m + p.q.len() as i64) {
        let x = sys.embed_at(&w, l);
        if x.dist(&report.point) < p.delta {
            return Err(SpectraError::Construction(format!(
                "position {l} outside the marker lies within delta of the maximum"
            )));
        }
    }
    let deep = cycle_fiber_max(sys, &p.q);
    let eps_delta = empirical_eps_delta(sys, &report, p.delta, d);

    // label each sample of the pulled-back arc by its maximizing position
    let pulled = p.interval.shifted(-frac_mul(p.j as i64, alpha));
    let ts = pulled.points(p.grid_n);
    let labels: Vec<Option<usize>> = ts
        .par_iter()
        .map(|&t| {
            let (mut best, mut arg) = (f64::MIN, -1i64);
            for l in -m..hl + m {
                let v = value_at(sys, &w, t, alpha, l);
                if v > best {
                    (best, arg) = (v, l);
                }
            }
            ((0..hl).contains(&arg) && best > deep).then_some(arg as usize)
        })
        .collect();
    let mut best_run = (0usize, 0usize, usize::MAX); // (length, start, label)
    let mut i = 0;
    while i < labels.len() {
        let mut k = i;
        while k + 1 < labels.len() && labels[k + 1] == labels[i] {
            k += 1;
        }
        if let Some(r) = labels[i] {
            let len = k - i + 1;
            if len > best_run.0 || (len == best_run.0 && r < best_run.2) {
                best_run = (len, i, r);
            }
        }
        i = k + 1;
    }
    let needed = p.grid_n.div_ceil(p.h.len() * 4).max(2);
    if best_run.0 < needed {
        return Err(SpectraError::NoInteriorCandidate {
            grid: p.grid_n,
            best_run: best_run.0,
            needed,
        });
    }
    let (run_len, start, j0) = best_run;
    let (ta, tb) = (ts[start], ts[start + run_len - 1]);
    let span = ta.signed_to(tb).abs();
    let run = AngleInterval {
        center: ta.add(span / 2.0),
        half_width: span / 2.0,
    };

    let grid = witness_grid(sys, cfg, &run.points(cfg.targets), |t| {
        let plan = SteerPlan {
            alpha,
            return_angle: t,
            eps: cfg.steer_eps,
            growing: None,
            growing_base: 0,
            bridge: Word::default(),
            steered: p.q.clone(),
            steered_base: cfg.base_block,
        };
        let mut o = ScheduledOrbit::start(p.q.clone(), p.h.clone(), j0, t, plan)?;
        o.target = Some(value_at(sys, &w, t, alpha, j0 as i64));
        Ok(o)
    })?;
    let lo = grid.iter().map(|g| g.target).fold(f64::INFINITY, f64::min);
    let hi = grid.iter().map(|g| g.target).fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(SpectraError::DegenerateInterval(format!("image [{lo}, {hi}] has no interior")));
    }
    if lo <= deep {
        return Err(SpectraError::Construction(format!(
            "interval [{lo}, {hi}] reaches the value {deep} available inside the q blocks"
        )));
    }
    Ok(IntervalCertificate {
        construction: Construction::PeriodicCase,
        lo,
        hi,
        params: CaseParams::Periodic(p.clone()),
        j0,
        run_grid: p.grid_n,
        run_length: run_len,
        max_value: report.value,
        max_angle: report.t,
        eps_delta,
        deep_bound: deep,
        horizon: cfg.horizon,
        validation_tol: cfg.validation_tol,
        validated_fraction: fraction(&grid),
        grid,
        system: sys.spec().clone(),
    })
}

/// Smallest period of a finite window, if it repeats at least twice.
fn window_period(w: &[u32]) -> Option<usize> {
    (1..=w.len() / 2).find(|&p| (p..w.len()).all(|i| w[i] == w[i - p]))
}

/// Interval `F(x̃, I)` in the Lagrange spectrum when the maximum point
/// `x̃ = σ^j(X₁^∞; H X₂^∞)` is not periodic.
///
/// Witnesses are `X₁^∞; H X₂^{n_{1,1}} Q X₁^{n_{2,1}} H X₂^{n_{1,2}} …` where
/// `n_{1,s}` grows and `n_{2,s}` steers the fiber at every marker back to
/// `t − jα`, so the orbit revisits neighbourhoods of `(x̃, t)` ever more
/// closely. Every other part of the orbit must stay below `min F(x̃, I)`;
/// this is checked explicitly.
pub fn construct_interval_nonperiodic_case(
    sys: &SkewSystem,
    p: &NonperiodicCaseParams,
    cfg: &CertConfig,
) -> Result<IntervalCertificate> {
    let alpha = sys.require_rotation()?;
    p.interval.check()?;
    if p.x1.is_empty() || p.x2.is_empty() || p.h.is_empty() {
        return Err(SpectraError::Domain("x1, x2 and h must be non-empty".into()));
    }
    if p.j >= p.h.len() {
        return Err(SpectraError::Domain(format!("j = {} outside the marker", p.j)));
    }
    if p.grid_n < 2 {
        return Err(SpectraError::Domain("need at least two grid points".into()));
    }
    let x1hx2 = p.x1.concat(&p.h).concat(&p.x2);
    let x2qx1 = p.x2.concat(&p.q).concat(&p.x1);
    check_words(
        sys,
        &[
            (&p.x1.concat(&p.x1), "x1 x1"),
            (&p.x2.concat(&p.x2), "x2 x2"),
            (&x1hx2, "x1 h x2"),
            (&x2qx1, "x2 q x1"),
        ],
    )?;
    let w = BiSequence::eventually_periodic(p.x1.clone(), p.h.clone(), p.x2.clone())?;
    let span = 4 * (p.x1.len() + p.x2.len() + p.h.len());
    if window_period(&w.window(-(span as i64), 2 * span)).is_some() {
        return Err(SpectraError::UsePeriodicCase);
    }
    let report = precheck(sys, cfg)?;
    let j = p.j as i64;
    let xt = sys.embed_at(&w, j);
    let fm = sys.observable().fiber_max_with(xt.xs, xt.xu, cfg.fiber_grid);
    if (fm.value - report.value).abs() > 1e-6 {
        return Err(SpectraError::Construction(format!(
            "supplied point has fiber maximum {} but the maximum of F is {}",
            fm.value, report.value
        )));
    }
    if !p.interval.contains(fm.t) {
        return Err(SpectraError::Construction(format!(
            "interval does not contain the maximizing angle {}",
            fm.t
        )));
    }

    // everything but x̃ itself: other marker positions, junctions, block cycles
    let m = margin(sys) as i64;
    let hl = p.h.len() as i64;
    let fiber = |s: &BiSequence, l: i64| {
        let x = sys.embed_at(s, l);
        sys.observable().fiber_max_with(x.xs, x.xu, cfg.fiber_grid).value
    };
    let junction = BiSequence::eventually_periodic(p.x2.clone(), p.q.clone(), p.x1.clone())?;
    let ql = p.q.len() as i64;
    let others = (-m..hl + m)
        .into_par_iter()
        .filter(|&l| l != j)
        .map(|l| fiber(&w, l))
        .chain((-m..ql + m).into_par_iter().map(|l| fiber(&junction, l)))
        .reduce(|| f64::MIN, f64::max);
    let deep = cycle_fiber_max(sys, &p.x1).max(cycle_fiber_max(sys, &p.x2));
    let rest = others.max(deep);

    let mut ts = p.interval.points(p.grid_n);
    ts.push(fm.t);
    ts.sort_by(|a, b| p.interval.center.signed_to(*a).total_cmp(&p.interval.center.signed_to(*b)));
    let shift = frac_mul(j, alpha);
    let grid = witness_grid(sys, cfg, &ts, |t| {
        let t0 = t.add(-shift);
        let plan = SteerPlan {
            alpha,
            return_angle: t0,
            eps: cfg.steer_eps,
            growing: Some(p.x2.clone()),
            growing_base: cfg.base_block,
            bridge: p.q.clone(),
            steered: p.x1.clone(),
            steered_base: cfg.base_block,
        };
        let mut o = ScheduledOrbit::start(p.x1.clone(), p.h.clone(), p.j, t0, plan)?;
        o.target = Some(sys.observable().eval(xt.xs, xt.xu, t.value()));
        Ok(o)
    })?;
    let lo = grid.iter().map(|g| g.target).fold(f64::INFINITY, f64::min);
    let hi = fm.value;
    if !(hi > lo) {
        return Err(SpectraError::DegenerateInterval(format!("image [{lo}, {hi}] has no interior")));
    }
    if lo <= rest {
        return Err(SpectraError::Construction(format!(
            "arc too wide: F(x̃, I) drops to {lo}, below the value {rest} reachable elsewhere on the orbit"
        )));
    }
    Ok(IntervalCertificate {
        construction: Construction::NonperiodicCase,
        lo,
        hi,
        params: CaseParams::Nonperiodic(p.clone()),
        j0: p.j,
        run_grid: p.grid_n,
        run_length: p.grid_n,
        max_value: report.value,
        max_angle: report.t,
        eps_delta: hi - rest,
        deep_bound: deep,
        horizon: cfg.horizon,
        validation_tol: cfg.validation_tol,
        validated_fraction: fraction(&grid),
        grid,
        system: sys.spec().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::Cocycle;
    use crate::engine::observable::{FiberFn, ObservableSpec, SurfaceFn};
    use crate::symbolic::{EmbeddingSpec, TransitionMatrix};

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn full2(g: FiberFn) -> SkewSystem {
        SkewSystem::build(
            TransitionMatrix::full(2),
            EmbeddingSpec::standard(2),
            Cocycle::rotation(GOLDEN),
            ObservableSpec::sum(SurfaceFn::linear(1.0, 1.0), g),
        )
        .unwrap()
    }

    fn w(v: &[u32]) -> Word {
        Word::from(v.to_vec())
    }

    fn quick() -> CertConfig {
        CertConfig {
            targets: 25,
            horizon: 6,
            membership_depth: 4,
            ..CertConfig::default()
        }
    }

    fn periodic(m: usize) -> PeriodicCaseParams {
        PeriodicCaseParams {
            q: w(&[0]),
            h: Word::from(vec![1; 2 * m]),
            j: m,
            delta: 0.1,
            interval: AngleInterval::new(0.0, 0.05),
            grid_n: 64,
        }
    }

    #[test]
    fn periodic_case_matches_closed_form() {
        let sys = full2(FiberFn::cos_shifted(0.2, 0.0));
        let c = construct_interval_periodic_case(&sys, &periodic(3), &quick()).unwrap();
        assert_eq!(c.j0, 3);
        // F(w@m, t) = 2 − 2·3^{-m} + 0.2 cos 2π(t + mα), |t + mα| ≤ 0.05
        let top = 2.0 - 2.0 / 27.0;
        assert!((c.hi - (top + 0.2)).abs() < 1e-9, "{}", c.hi);
        let low = top + 0.2 * (std::f64::consts::PI * 0.1).cos();
        assert!((c.lo - low).abs() < 1e-9, "{}", c.lo);
        assert_eq!(c.validated_fraction, 1.0);
        for g in &c.grid {
            assert!((g.estimate - g.target).abs() < 1e-6);
        }
    }

    #[test]
    fn certificate_revalidates_after_round_trip() {
        let sys = full2(FiberFn::cos_shifted(0.2, 0.0));
        let c = construct_interval_periodic_case(&sys, &periodic(2), &quick()).unwrap();
        let txt = serde_json::to_string(&c).unwrap();
        let back: IntervalCertificate = serde_json::from_str(&txt).unwrap();
        let r = back.revalidate().unwrap();
        assert_eq!(r.reproduced, r.points);
        assert_eq!(r.validated_fraction, c.validated_fraction);
    }

    #[test]
    fn fiber_independent_observable_is_rejected() {
        let sys = full2(FiberFn::zero());
        let e = construct_interval_periodic_case(&sys, &periodic(3), &quick()).unwrap_err();
        assert!(matches!(e, SpectraError::NonUniqueArgmax(_)), "{e}");
    }

    #[test]
    fn q_through_the_maximum_is_rejected() {
        let sys = full2(FiberFn::cos_shifted(0.2, 0.0));
        let mut p = periodic(3);
        p.q = w(&[1]);
        assert!(construct_interval_periodic_case(&sys, &p, &quick()).is_err());
    }

    #[test]
    fn zero_width_arc_is_degenerate() {
        let sys = full2(FiberFn::cos_shifted(0.2, 0.0));
        let mut p = periodic(3);
        p.interval.half_width = 0.0;
        assert!(matches!(
            construct_interval_periodic_case(&sys, &p, &quick()),
            Err(SpectraError::DegenerateInterval(_))
        ));
    }

    #[test]
    fn window_period_detection() {
        assert_eq!(window_period(&[1, 0, 1, 0, 1, 0]), Some(2));
        assert_eq!(window_period(&[1, 0, 2, 1, 1, 1]), None);
    }

    fn three_symbol(t0: f64) -> SkewSystem {
        let t = true;
        let f = false;
        SkewSystem::build(
            TransitionMatrix::from_rows(vec![vec![t, f, t], vec![t, t, f], vec![f, t, f]]).unwrap(),
            EmbeddingSpec::with_base(3, 5),
            Cocycle::rotation(GOLDEN),
            ObservableSpec::sum(SurfaceFn::linear(1.0, 1.0), FiberFn::cos_shifted(0.2, t0)),
        )
        .unwrap()
    }

    fn nonperiodic(hw: f64, t0: f64) -> NonperiodicCaseParams {
        NonperiodicCaseParams {
            x1: w(&[1, 0, 2]),
            x2: w(&[1]),
            q: Word::default(),
            h: w(&[1, 0, 2, 1]),
            j: 3,
            interval: AngleInterval::new(t0, hw),
            grid_n: 24,
        }
    }

    #[test]
    fn nonperiodic_case_right_endpoint_is_the_maximum() {
        let sys = three_symbol(0.3);
        let c = construct_interval_nonperiodic_case(&sys, &nonperiodic(0.08, 0.3), &quick()).unwrap();
        // x̃ = (102)^∞; 1^∞ with digits 0, 2, 4 in base 5
        let xs = (0.8 + 2.0 / 125.0) / (1.0 - 1.0 / 125.0);
        assert!((c.hi - (xs + 0.5 + 0.2)).abs() < 1e-9);
        assert!((c.hi - c.max_value).abs() < 1e-6);
        let lo = xs + 0.5 + 0.2 * (2.0 * std::f64::consts::PI * 0.08).cos();
        assert!((c.lo - lo).abs() < 1e-9);
        assert_eq!(c.validated_fraction, 1.0);
    }

    #[test]
    fn periodic_maximum_is_redirected() {
        let sys = full2(FiberFn::cos_shifted(0.2, 0.0));
        let p = NonperiodicCaseParams {
            x1: w(&[1]),
            x2: w(&[1]),
            q: Word::default(),
            h: w(&[1, 1]),
            j: 1,
            interval: AngleInterval::new(0.0, 0.05),
            grid_n: 8,
        };
        assert!(matches!(
            construct_interval_nonperiodic_case(&sys, &p, &quick()),
            Err(SpectraError::UsePeriodicCase)
        ));
    }

    #[test]
    fn nonperiodic_zero_width_is_degenerate() {
        let sys = three_symbol(0.3);
        assert!(matches!(
            construct_interval_nonperiodic_case(&sys, &nonperiodic(0.0, 0.3), &quick()),
            Err(SpectraError::DegenerateInterval(_))
        ));
    }
}
