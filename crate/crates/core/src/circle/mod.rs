//! Circle arithmetic, cocycles over the shift, the perturbation bound for
//! compositions of circle maps, and rotation steering.

mod perturb;
mod steer;

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use perturb::{
    decomposition_terms, perturbed_composition_decompose, sup_periodic_difference, Composition,
    PerturbationReport,
};
pub use steer::{rationality_check, steer_rotation, SteerConfig, SteerTarget};

use crate::error::{Result, SpectraError};
use crate::symbolic::{BiSequence, EmbeddedPoint, EmbeddingSpec};

/// Point of `ℝ/ℤ`, stored in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub fn new(x: f64) -> Self {
        let mut v = x - x.floor();
        if v >= 1.0 {
            v = 0.0;
        }
        Angle(v)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `min(|s − t|, 1 − |s − t|)`.
    pub fn dist(self, other: Angle) -> f64 {
        let d = (self.0 - other.0).abs();
        d.min(1.0 - d)
    }

    /// Signed representative of `other − self` in `[-1/2, 1/2)`.
    pub fn signed_to(self, other: Angle) -> f64 {
        let d = other.0 - self.0;
        d - (d + 0.5).floor()
    }

    pub fn add(self, x: f64) -> Angle {
        Angle::new(self.0 + x)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `frac(n·α)` with the product computed error-free, accurate for `|n| < 2^53`.
#[inline]
pub fn frac_mul(n: i64, alpha: f64) -> f64 {
    let m = n as f64;
    let p = m * alpha;
    let e = m.mul_add(alpha, -p);
    let f = (p - p.floor()) + e;
    f - f.floor()
}

/// `t + n·α mod 1`.
#[inline]
pub fn rotate_n(t: Angle, alpha: f64, n: i64) -> Angle {
    Angle::new(t.0 + frac_mul(n, alpha))
}

type LiftFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Degree-one circle map given by a lift `F` with `F(x + 1) = F(x) + 1`.
#[derive(Clone)]
pub enum CircleMap {
    /// `x ↦ x + α`.
    Rotation(f64),
    /// `x ↦ x + a + b·sin(2π m x)/(2π m)`; a diffeomorphism for `|b| < 1`.
    Sine { a: f64, b: f64, m: u32 },
    /// User lift with a bound on its derivative. The caller guarantees the
    /// degree-one property and reentrancy.
    Custom { lift: LiftFn, lipschitz: f64, name: String },
}

impl CircleMap {
    pub fn identity() -> Self {
        CircleMap::Rotation(0.0)
    }

    pub fn custom(name: &str, lipschitz: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CircleMap::Custom {
            lift: Arc::new(f),
            lipschitz,
            name: name.to_string(),
        }
    }

    #[inline]
    pub fn lift(&self, x: f64) -> f64 {
        match self {
            CircleMap::Rotation(a) => x + a,
            CircleMap::Sine { a, b, m } => {
                let w = TAU * *m as f64;
                x + a + b * (w * x).sin() / w
            }
            CircleMap::Custom { lift, .. } => lift(x),
        }
    }

    /// Bound on `|lift'|`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            CircleMap::Rotation(_) => 1.0,
            CircleMap::Sine { b, .. } => 1.0 + b.abs(),
            CircleMap::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    pub fn rotation_angle(&self) -> Option<f64> {
        match self {
            CircleMap::Rotation(a) => Some(*a),
            _ => None,
        }
    }

    pub fn apply(&self, t: Angle) -> Angle {
        match self {
            CircleMap::Rotation(a) => t.add(*a),
            _ => Angle::new(self.lift(t.0)),
        }
    }

    /// Preimage of `t` under an increasing lift, by bisection.
    pub fn apply_inverse(&self, t: Angle) -> Angle {
        if let CircleMap::Rotation(a) = self {
            return t.add(-a);
        }
        let base = self.lift(0.0);
        // target value in [base, base + 1)
        let target = t.0 + (base - t.0).ceil();
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..70 {
            let mid = 0.5 * (lo + hi);
            if self.lift(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Angle::new(0.5 * (lo + hi))
    }
}

impl fmt::Debug for CircleMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircleMap::Rotation(a) => write!(f, "Rotation({a})"),
            CircleMap::Sine { a, b, m } => write!(f, "Sine(a={a}, b={b}, m={m})"),
            CircleMap::Custom { name, lipschitz, .. } => write!(f, "Custom({name}, L={lipschitz})"),
        }
    }
}

type CocycleFn = Arc<dyn Fn(&EmbeddedPoint) -> CircleMap + Send + Sync>;

/// Assignment `x ↦ R_x` of circle maps over the embedded horseshoe.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cocycle {
    /// `R_x = rot_α` for every `x`.
    Rotation { alpha: f64 },
    /// `R_x = rot_{α + cs·x_s + cu·x_u}`.
    AffineRotation { alpha: f64, cs: f64, cu: f64 },
    /// Arbitrary assignment; not serializable.
    #[serde(skip)]
    Custom { map: CocycleFn, lipschitz: f64 },
}

impl fmt::Debug for Cocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cocycle::Rotation { alpha } => write!(f, "Rotation({alpha})"),
            Cocycle::AffineRotation { alpha, cs, cu } => {
                write!(f, "AffineRotation({alpha} + {cs} xs + {cu} xu)")
            }
            Cocycle::Custom { lipschitz, .. } => write!(f, "Custom(L={lipschitz})"),
        }
    }
}

impl Cocycle {
    pub fn rotation(alpha: f64) -> Self {
        Cocycle::Rotation { alpha }
    }

    pub fn custom(lipschitz: f64, f: impl Fn(&EmbeddedPoint) -> CircleMap + Send + Sync + 'static) -> Self {
        Cocycle::Custom {
            map: Arc::new(f),
            lipschitz,
        }
    }

    /// The `α` of a constant rotation cocycle.
    pub fn constant_rotation(&self) -> Option<f64> {
        match self {
            Cocycle::Rotation { alpha } => Some(*alpha),
            _ => None,
        }
    }

    pub fn map_at(&self, x: &EmbeddedPoint) -> CircleMap {
        match self {
            Cocycle::Rotation { alpha } => CircleMap::Rotation(*alpha),
            Cocycle::AffineRotation { alpha, cs, cu } => CircleMap::Rotation(alpha + cs * x.xs + cu * x.xu),
            Cocycle::Custom { map, .. } => map(x),
        }
    }

    /// Common bound on `|R_x'|`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Cocycle::Rotation { .. } | Cocycle::AffineRotation { .. } => 1.0,
            Cocycle::Custom { lipschitz, .. } => *lipschitz,
        }
    }
}

/// Fiber coordinate after `n` steps of `Φ(x, t) = (φ(x), R_x(t))` from
/// `(s, t)`; negative `n` runs the inverse.
///
/// `R_{φ^k(x)}` is evaluated at the embedding of `shift(s, k)` to `depth`
/// digits.
pub fn compose_along_orbit(
    c: &Cocycle,
    emb: &EmbeddingSpec,
    depth: usize,
    s: &BiSequence,
    n: i64,
    t: Angle,
) -> Angle {
    if let Some(alpha) = c.constant_rotation() {
        return rotate_n(t, alpha, n);
    }
    let mut u = t;
    if n >= 0 {
        for k in 0..n {
            u = c.map_at(&emb.embed_at(s, k, depth)).apply(u);
        }
    } else {
        for k in (n..0).rev() {
            u = c.map_at(&emb.embed_at(s, k, depth)).apply_inverse(u);
        }
    }
    u
}

/// Star discrepancy of a finite point set in `[0, 1)`.
pub fn star_discrepancy(points: &[f64]) -> f64 {
    if points.is_empty() {
        return 1.0;
    }
    let mut xs = points.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let worst = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - (2.0 * i as f64 + 1.0) / (2.0 * n)).abs())
        .fold(0.0, f64::max);
    1.0 / (2.0 * n) + worst
}

/// Star discrepancy of `{t + nα : 0 ≤ n < count}`.
pub fn orbit_discrepancy(alpha: f64, t: Angle, count: usize) -> f64 {
    let pts: Vec<f64> = (0..count as i64).map(|n| rotate_n(t, alpha, n).value()).collect();
    star_discrepancy(&pts)
}

pub(crate) fn require_positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(SpectraError::Domain(format!("{what} must be positive and finite")))
    }
}
