use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::system::SkewSystem;
use crate::circle::Angle;
use crate::error::{Result, SpectraError};
use crate::symbolic::{BiSequence, EmbeddedPoint, Rect, Symbol};

/// `|∂F/∂x_{s,u}| > DERIV_TOL` counts as non-zero.
pub const DERIV_TOL: f64 = 1e-6;
/// `∂²F/∂t² < −SECOND_DERIV_TOL` counts as negative.
pub const SECOND_DERIV_TOL: f64 = 1e-6;
/// Values closer than this are ties.
pub const TIE_TOL: f64 = 1e-10;

const NODE_CAP: usize = 1 << 15;
const TARGET_DIAM: f64 = 1e-13;
const MAX_LEVELS: usize = 60;

/// Outcome of the search for the maximum of `F` on `Λ × 𝕊¹`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxReport {
    /// Window `s_{-d} … s_{d-1}` of the maximizing cylinder at the search depth.
    pub argmax_window: Vec<Symbol>,
    /// A point of `Λ` realizing the maximum to within `TARGET_DIAM`.
    pub argmax: BiSequence,
    pub point: EmbeddedPoint,
    pub t: Angle,
    pub value: f64,
    /// Upper bound for `max F` from the surviving cylinders.
    pub value_upper: f64,
    /// Best value on depth-`d` cylinders other than the maximizing one.
    pub second_best: f64,
    pub runner_up_window: Vec<Symbol>,
    /// `value − second_best`.
    pub gap: f64,
    pub unique: bool,
    pub fiber_unique: bool,
    pub ds: f64,
    pub du: f64,
    pub dtt: f64,
    pub finite_difference: bool,
    pub member_r: bool,
    pub depth: usize,
    pub fiber_grid: usize,
    /// Search stopped refining because too many cylinders tied.
    pub saturated: bool,
    pub deriv_tol: f64,
    pub second_deriv_tol: f64,
}

#[derive(Clone)]
struct Node {
    root: usize,
    back: Vec<Symbol>,
    fwd: Vec<Symbol>,
    rect: Rect,
    ub: f64,
    lb: f64,
}

impl Node {
    fn window(&self) -> Vec<Symbol> {
        self.back.iter().rev().chain(self.fwd.iter()).copied().collect()
    }
}

fn make_node(sys: &SkewSystem, root: usize, back: Vec<Symbol>, fwd: Vec<Symbol>, grid: usize) -> Node {
    let rect = sys.tails().hull(sys.embedding(), &back, &fwd);
    let (_, ub) = sys.observable().fiber_range_on(&rect, grid);
    let w: Vec<Symbol> = back.iter().rev().chain(fwd.iter()).copied().collect();
    let lb = BiSequence::completing(sys.matrix(), &w, back.len())
        .map(|s| {
            let x = sys.embed_at(&s, 0);
            sys.observable().fiber_value(x.xs, x.xu, grid)
        })
        .unwrap_or(f64::MIN);
    Node {
        root,
        back,
        fwd,
        rect,
        ub,
        lb,
    }
}

fn children(sys: &SkewSystem, n: &Node, grid: usize) -> Vec<Node> {
    let m = sys.matrix();
    let mut out = Vec::new();
    for a in m.predecessors(*n.back.last().unwrap()) {
        for b in m.successors(*n.fwd.last().unwrap()) {
            let mut back = n.back.clone();
            back.push(a);
            let mut fwd = n.fwd.clone();
            fwd.push(b);
            out.push(make_node(sys, n.root, back, fwd, grid));
        }
    }
    out
}

/// Branch and bound over cylinders, keeping nodes whose upper bound reaches
/// the best lower bound. A node is resolved once it is below `TARGET_DIAM`
/// across or its bounds agree to rounding.
fn refine(sys: &SkewSystem, mut nodes: Vec<Node>, grid: usize) -> (Vec<Node>, bool) {
    let slack = |v: f64| 1e-14 * v.abs().max(1.0);
    let resolved = |n: &Node| n.rect.diameter() < TARGET_DIAM || n.ub - n.lb <= slack(n.lb);
    let mut saturated = false;
    for _ in 0..MAX_LEVELS {
        let best = nodes.iter().map(|n| n.lb).fold(f64::MIN, f64::max);
        nodes.retain(|n| n.ub >= best - slack(best));
        if nodes.iter().all(resolved) {
            break;
        }
        let open = nodes.iter().filter(|n| !resolved(n)).count();
        if (nodes.len() - open) + open * 4 * sys.matrix().size() > NODE_CAP {
            saturated = true;
            break;
        }
        nodes = nodes
            .par_iter()
            .flat_map_iter(|n| {
                if resolved(n) {
                    vec![n.clone()]
                } else {
                    children(sys, n, grid)
                }
            })
            .collect();
    }
    let best = nodes.iter().map(|n| n.lb).fold(f64::MIN, f64::max);
    nodes.retain(|n| n.ub >= best - slack(best));
    (nodes, saturated)
}

/// Searches `Λ × 𝕊¹` for the maximum of `F` and checks the conditions of the
/// generic class: a unique maximum `(x̃, t̃)` with `∂F/∂x_s`, `∂F/∂x_u`
/// non-zero and `∂²F/∂t² < 0` there.
///
/// All admissible windows of `depth` symbols on each side are bounded, then
/// the best are refined by branch and bound until the cylinders are below
/// `1e-13` across. The gap is taken against the best value on the other
/// depth-`depth` cylinders, refined the same way.
#[allow(non_snake_case)]
pub fn validate_membership_R(sys: &SkewSystem, depth: usize, fiber_grid: usize) -> Result<MaxReport> {
    if depth < 3 {
        return Err(SpectraError::Domain(format!("membership depth {depth} < 3")));
    }
    if fiber_grid < 16 {
        return Err(SpectraError::Domain(format!("fiber grid {fiber_grid} < 16")));
    }
    let words = sys.matrix().words(2 * depth);
    if words.len() > NODE_CAP * 4 {
        return Err(SpectraError::Unsupported(format!(
            "{} cylinders at depth {depth}; lower the depth",
            words.len()
        )));
    }
    let roots: Vec<Node> = words
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let back: Vec<Symbol> = w.as_slice()[..depth].iter().rev().copied().collect();
            let fwd = w.as_slice()[depth..].to_vec();
            make_node(sys, i, back, fwd, fiber_grid)
        })
        .collect();

    let (top, saturated) = refine(sys, roots.clone(), fiber_grid);
    let best = top
        .iter()
        .max_by(|a, b| a.lb.total_cmp(&b.lb).then(b.root.cmp(&a.root)))
        .ok_or_else(|| SpectraError::Construction("no admissible cylinders".into()))?
        .clone();
    let value_upper = top.iter().map(|n| n.ub).fold(f64::MIN, f64::max);

    // runner-up among the other depth-`depth` cylinders
    let others: Vec<Node> = roots.into_iter().filter(|n| n.root != best.root).collect();
    let (second_best, runner_up_window, sat2) = if others.is_empty() {
        (f64::MIN, Vec::new(), false)
    } else {
        let (rest, sat) = refine(sys, others, fiber_grid);
        let r = rest
            .iter()
            .max_by(|a, b| a.lb.total_cmp(&b.lb))
            .expect("non-empty after refinement");
        (r.lb, words[r.root].as_slice().to_vec(), sat)
    };

    let w = best.window();
    let argmax = BiSequence::completing(sys.matrix(), &w, best.back.len())
        .ok_or_else(|| SpectraError::Construction("maximizing cylinder has no admissible completion".into()))?;
    let point = sys.embed_at(&argmax, 0);
    let fm = sys.observable().fiber_max_with(point.xs, point.xu, fiber_grid);
    let p = sys.observable().partials(point.xs, point.xu, fm.t.value());
    let gap = fm.value - second_best;
    let unique = !saturated && gap > TIE_TOL * fm.value.abs().max(1.0);
    let fiber_unique = fm.unique;
    let member_r = unique && fiber_unique && p.ds.abs() > DERIV_TOL && p.du.abs() > DERIV_TOL && fm.second_deriv < -SECOND_DERIV_TOL;
    Ok(MaxReport {
        argmax_window: words[best.root].as_slice().to_vec(),
        argmax,
        point,
        t: fm.t,
        value: fm.value,
        value_upper,
        second_best,
        runner_up_window,
        gap,
        unique: unique && fiber_unique,
        fiber_unique,
        ds: p.ds,
        du: p.du,
        dtt: fm.second_deriv,
        finite_difference: !p.analytic || fm.finite_difference,
        member_r,
        depth,
        fiber_grid,
        saturated: saturated || sat2,
        deriv_tol: DERIV_TOL,
        second_deriv_tol: SECOND_DERIV_TOL,
    })
}

/// Empirical `ε_δ`: the drop from the maximum to the best upper bound over
/// depth-`depth` cylinders whose hull stays at distance `≥ δ` from `x̃`.
pub fn empirical_eps_delta(sys: &SkewSystem, report: &MaxReport, delta: f64, depth: usize) -> f64 {
    let words = sys.matrix().words(2 * depth);
    let (px, py) = (report.point.xs, report.point.xu);
    let far = words
        .par_iter()
        .filter_map(|w| {
            let back: Vec<Symbol> = w.as_slice()[..depth].iter().rev().copied().collect();
            let rect = sys.tails().hull(sys.embedding(), &back, &w.as_slice()[depth..]);
            let dx = (rect.xs.0 - px).max(px - rect.xs.1).max(0.0);
            let dy = (rect.xu.0 - py).max(py - rect.xu.1).max(0.0);
            (dx.hypot(dy) >= delta).then(|| sys.observable().fiber_range_on(&rect, report.fiber_grid).1)
        })
        .reduce(|| f64::MIN, f64::max);
    report.value - far
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::Cocycle;
    use crate::engine::observable::{FiberFn, ObservableSpec, SurfaceFn};
    use crate::symbolic::{EmbeddingSpec, TransitionMatrix};

    const GOLDEN: f64 = 0.618_033_988_749_894_9;

    fn full2(obs: ObservableSpec) -> SkewSystem {
        SkewSystem::build(TransitionMatrix::full(2), EmbeddingSpec::standard(2), Cocycle::rotation(GOLDEN), obs).unwrap()
    }

    /// Exhaustive scan over depth-`d` cylinders using the cylinder's corner
    /// point `(max x_s, max x_u)` computed directly from digit sums.
    fn exhaustive_linear(d: usize) -> (Vec<Symbol>, f64) {
        let b = TransitionMatrix::full(2);
        let mut best = (Vec::new(), f64::MIN);
        for w in b.words(2 * d) {
            let s = w.as_slice();
            let mut xs = 0.0;
            let mut xu = 0.0;
            for k in 0..d {
                xs += 2.0 * s[d - 1 - k] as f64 * 3f64.powi(-(k as i32) - 1);
                xu += 2.0 * s[d + k] as f64 * 3f64.powi(-(k as i32) - 1);
            }
            // best completion: all-ones tails add 3^{-d} per axis
            let v = xs + xu + 2.0 * 3f64.powi(-(d as i32)) + 0.2;
            if v > best.1 {
                best = (s.to_vec(), v);
            }
        }
        best
    }

    #[test]
    fn linear_plus_cos_is_member() {
        let sys = full2(ObservableSpec::sum(SurfaceFn::linear(1.0, 1.0), FiberFn::cos_shifted(0.2, 0.3)));
        let r = validate_membership_R(&sys, 6, 64).unwrap();
        let (w, v) = exhaustive_linear(6);
        assert_eq!(r.argmax_window, w);
        assert!((r.value - v).abs() < 1e-12);
        assert!((r.value - 2.2).abs() < 1e-12);
        assert!(r.t.dist(Angle::new(0.3)) < 1e-9);
        assert!(r.unique && r.member_r);
        assert!((r.ds - 1.0).abs() < 1e-15 && (r.du - 1.0).abs() < 1e-15);
        assert!(r.dtt < 0.0);
        assert!(r.gap > 0.0);
    }

    #[test]
    fn critical_point_at_corner_is_not_member() {
        // (a, b) is the embedded point 1^∞;1^∞ = (1, 1)
        let obs = ObservableSpec::Sum {
            f: SurfaceFn::Bump { a: 1.0, b: 1.0 },
            g: FiberFn::Trig {
                c0: -1.0,
                terms: vec![crate::engine::TrigTerm { k: 1, a: 1.0, b: 0.0 }],
            },
            scale: 1.0,
            centered: false,
        };
        let r = validate_membership_R(&full2(obs), 4, 64).unwrap();
        assert!(r.unique);
        assert!(r.ds.abs() < DERIV_TOL && r.du.abs() < DERIV_TOL);
        assert!(!r.member_r);
    }

    #[test]
    fn zero_observable_has_no_unique_max() {
        let r = validate_membership_R(&full2(ObservableSpec::sum(SurfaceFn::constant(0.0), FiberFn::zero())), 4, 32)
            .unwrap();
        assert!(!r.unique && !r.member_r);
    }

    #[test]
    fn fiber_independent_observable_is_not_member() {
        let r = validate_membership_R(&full2(ObservableSpec::sum(SurfaceFn::linear(1.0, 1.0), FiberFn::zero())), 4, 32)
            .unwrap();
        assert!(!r.fiber_unique && !r.member_r);
    }

    #[test]
    fn eps_delta_is_positive_and_monotone() {
        let sys = full2(ObservableSpec::sum(SurfaceFn::linear(1.0, 1.0), FiberFn::cos_shifted(0.2, 0.0)));
        let r = validate_membership_R(&sys, 5, 64).unwrap();
        let e1 = empirical_eps_delta(&sys, &r, 0.05, 5);
        let e2 = empirical_eps_delta(&sys, &r, 0.2, 5);
        assert!(e1 > 0.0 && e2 >= e1);
    }
}
