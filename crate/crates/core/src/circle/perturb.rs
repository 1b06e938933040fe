use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::CircleMap;
use crate::error::{Result, SpectraError};

/// `G_n = R_n ∘ … ∘ R_1` as lifts; `maps[0]` is `R_1`.
#[derive(Clone, Debug)]
pub struct Composition {
    pub maps: Vec<CircleMap>,
}

impl Composition {
    pub fn eval(&self, x: f64) -> f64 {
        self.maps.iter().fold(x, |y, m| m.lift(y))
    }

    /// `R_{to} ∘ … ∘ R_{from+1}` (1-based, empty when `from ≥ to`).
    pub fn eval_range(&self, from: usize, to: usize, x: f64) -> f64 {
        self.maps[from.min(to)..to].iter().fold(x, |y, m| m.lift(y))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    /// `C = max_k Lip(R_k)`.
    pub lipschitz: f64,
    /// Upper estimates of `sup |R̃_k − R_k|`.
    pub sup_r: Vec<f64>,
    /// `C^{n−k} · sup |r_k|` for `k = 1..n`.
    pub bounds: Vec<f64>,
    pub total: f64,
}

fn same_map(a: &CircleMap, b: &CircleMap) -> bool {
    match (a, b) {
        (CircleMap::Rotation(x), CircleMap::Rotation(y)) => x == y,
        (CircleMap::Sine { a: a1, b: b1, m: m1 }, CircleMap::Sine { a: a2, b: b2, m: m2 }) => {
            a1 == a2 && b1 == b2 && m1 == m2
        }
        (CircleMap::Custom { lift: f, .. }, CircleMap::Custom { lift: g, .. }) => Arc::ptr_eq(f, g),
        _ => false,
    }
}

/// Upper estimate of `sup_x |b(x) − a(x)|` for degree-one lifts.
///
/// Exact for pairs of rotations and for identical maps; otherwise the sampled
/// maximum on `grid` points plus the Lipschitz slack `(L_a + L_b)·h/2`.
/// A difference that is not 1-periodic is unbounded on `ℝ` and rejected.
pub fn sup_periodic_difference(a: &CircleMap, b: &CircleMap, grid: usize) -> Result<f64> {
    if same_map(a, b) {
        return Ok(0.0);
    }
    if let (Some(x), Some(y)) = (a.rotation_angle(), b.rotation_angle()) {
        return Ok((x - y).abs());
    }
    let grid = grid.max(16);
    let h = 1.0 / grid as f64;
    let mut best = 0.0f64;
    for i in 0..grid {
        let x = i as f64 * h;
        let r0 = b.lift(x) - a.lift(x);
        let r1 = b.lift(x + 1.0) - a.lift(x + 1.0);
        if !r0.is_finite() || (r1 - r0).abs() > 1e-9 * (1.0 + r0.abs()) {
            return Err(SpectraError::Domain(format!(
                "perturbation {a:?} -> {b:?} is not 1-periodic; sup is unbounded"
            )));
        }
        best = best.max(r0.abs());
    }
    Ok(best + (a.lipschitz() + b.lipschitz()) * h / 2.0)
}

/// Composes both families and bounds `sup |G̃_n − G_n|` by
/// `Σ_k C^{n−k} sup |r_k|`.
pub fn perturbed_composition_decompose(
    r: &[CircleMap],
    rt: &[CircleMap],
    grid: usize,
) -> Result<(Composition, Composition, PerturbationReport)> {
    if r.len() != rt.len() {
        return Err(SpectraError::Domain("families must have equal length".into()));
    }
    let n = r.len();
    let c = r.iter().map(|m| m.lipschitz()).fold(0.0, f64::max);
    let sup_r = r
        .iter()
        .zip(rt)
        .map(|(a, b)| sup_periodic_difference(a, b, grid))
        .collect::<Result<Vec<_>>>()?;
    let bounds: Vec<f64> = sup_r
        .iter()
        .enumerate()
        .map(|(i, s)| if *s == 0.0 { 0.0 } else { c.powi((n - (i + 1)) as i32) * s })
        .collect();
    let total = bounds.iter().sum();
    Ok((
        Composition { maps: r.to_vec() },
        Composition { maps: rt.to_vec() },
        PerturbationReport {
            lipschitz: c,
            sup_r,
            bounds,
            total,
        },
    ))
}

/// Telescoping terms `H_k(R̃_k y_k) − H_k(R_k y_k)` with `y_k = G̃_{k−1}(x)`
/// and `H_k = R_n ∘ … ∘ R_{k+1}`; they sum to `G̃_n(x) − G_n(x)`.
pub fn decomposition_terms(g: &Composition, gt: &Composition, x: f64) -> Vec<f64> {
    let n = g.maps.len();
    let mut y = x;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let a = g.eval_range(k + 1, n, gt.maps[k].lift(y));
        let b = g.eval_range(k + 1, n, g.maps[k].lift(y));
        out.push(a - b);
        y = gt.maps[k].lift(y);
    }
    out
}
