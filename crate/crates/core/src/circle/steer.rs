use serde::{Deserialize, Serialize};

use super::{frac_mul, require_positive, Angle, CircleMap};
use crate::error::{Result, SpectraError};

/// Search limits for [`steer_rotation`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteerConfig {
    /// Largest convergent denominator examined by the rationality heuristic.
    pub max_denominator: u64,
    /// `|α − p/q|` below this counts as rational.
    pub rational_tol: f64,
    /// Steps of the brute-force fallback scan.
    pub brute_budget: u64,
}

impl Default for SteerConfig {
    fn default() -> Self {
        SteerConfig {
            max_denominator: 1_000_000,
            rational_tol: 1e-15,
            brute_budget: 2_000_000,
        }
    }
}

/// Returned step count and the verified distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteerTarget {
    pub n: u64,
    pub distance: f64,
}

/// Dyadic value `a = num / 2^k` of a float in `[0, 1)`.
fn dyadic(a: f64) -> Option<(u128, u32)> {
    let mut k = 0u32;
    while (a * 2f64.powi(k as i32)).fract() != 0.0 {
        k += 1;
        if k > 120 {
            return None;
        }
    }
    Some(((a * 2f64.powi(k as i32)) as u128, k))
}

/// Convergents `(p_i, q_i)` of a float in `[0, 1)`, computed exactly from its
/// dyadic value, up to denominator `max_q`.
fn convergents(a: f64, max_q: u128) -> Vec<(u128, u128)> {
    let Some((mut num, k)) = dyadic(a) else {
        return vec![(0, 1)];
    };
    let mut den: u128 = 1u128 << k;
    let (mut h1, mut h2) = (1u128, 0u128);
    let (mut k1, mut k2) = (0u128, 1u128);
    let mut out = Vec::new();
    while den != 0 {
        let q = num / den;
        (num, den) = (den, num - q * den);
        let (Some(h), Some(kk)) = (
            q.checked_mul(h1).and_then(|x| x.checked_add(h2)),
            q.checked_mul(k1).and_then(|x| x.checked_add(k2)),
        ) else {
            break;
        };
        if kk > max_q {
            break;
        }
        out.push((h, kk));
        (h2, h1) = (h1, h);
        (k2, k1) = (k1, kk);
    }
    out
}

/// Convergent-denominator heuristic: `Some((p, q))` when some convergent with
/// `q ≤ max_den` satisfies `|α − p/q| < tol`.
pub fn rationality_check(alpha: f64, max_den: u64, tol: f64) -> Option<(u64, u64)> {
    let a = alpha - alpha.floor();
    if a < tol {
        return Some((0, 1));
    }
    if 1.0 - a < tol {
        return Some((1, 1));
    }
    for (p, q) in convergents(a, max_den as u128) {
        let err = (a.mul_add(q as f64, -(p as f64))).abs() / q as f64;
        if err < tol {
            return Some((p as u64, q as u64));
        }
    }
    None
}

/// Finds `N ≥ n_min` with `d(ψ(t1 + (N·k + r)·α), t2) < ε`.
///
/// Greedy descent over the convergents of `kα`: the remaining rotation is
/// reduced level by level using `q_i` steps, each of which rotates by the
/// signed error `q_i·kα − p_i`. The result is re-verified directly; a
/// brute-force scan is the fallback.
#[allow(clippy::too_many_arguments)]
pub fn steer_rotation(
    alpha: f64,
    k: u64,
    r: u64,
    t1: Angle,
    t2: Angle,
    eps: f64,
    n_min: u64,
    psi: &CircleMap,
    cfg: &SteerConfig,
) -> Result<SteerTarget> {
    require_positive(eps, "steering tolerance")?;
    if k == 0 {
        return Err(SpectraError::Domain("steering stride k must be >= 1".into()));
    }
    if let Some((p, q)) = rationality_check(alpha, cfg.max_denominator, cfg.rational_tol) {
        return Err(SpectraError::RationalRotation { p, q });
    }
    const LIMIT: u64 = 1 << 52;
    let angle = |n: u64| -> Result<Angle> {
        let m = n
            .checked_mul(k)
            .and_then(|x| x.checked_add(r))
            .filter(|&m| m < LIMIT)
            .ok_or(SpectraError::Overflow("steering step count"))?;
        Ok(t1.add(frac_mul(m as i64, alpha)))
    };
    let dist = |n: u64| -> Result<f64> { Ok(psi.apply(angle(n)?).dist(t2)) };

    let d0 = dist(n_min)?;
    if d0 < eps {
        return Ok(SteerTarget { n: n_min, distance: d0 });
    }
    let mut best = (n_min, d0);

    let target = psi.apply_inverse(t2);
    // β = frac(kα) kept as an unevaluated sum f + e
    let kf = k as f64;
    let p = kf * alpha;
    let e = kf.mul_add(alpha, -p);
    let f = p - p.floor();
    let beta = f + e;
    let levels: Vec<(u128, f64)> = convergents(beta - beta.floor(), (LIMIT / k) as u128)
        .into_iter()
        .map(|(p, q)| {
            let qf = q as f64;
            (q, qf.mul_add(f, -(p as f64)) + qf * e)
        })
        .collect();

    let mut tol = eps / psi.lipschitz().max(1e-12) * 0.5;
    for _ in 0..6 {
        let mut res = angle(n_min)?.signed_to(target);
        let mut m: u128 = 0;
        for &(q, d) in &levels {
            if res.abs() < tol {
                break;
            }
            if d == 0.0 || (res > 0.0) != (d > 0.0) {
                continue;
            }
            let j = (res / d).floor();
            let (r0, r1) = (res - j * d, res - (j + 1.0) * d);
            let (j, nr) = if r0.abs() <= r1.abs() { (j, r0) } else { (j + 1.0, r1) };
            m += j as u128 * q;
            res = nr;
        }
        if let Some(n) = u64::try_from(m).ok().and_then(|m| m.checked_add(n_min)) {
            if n < LIMIT / k {
                let dn = dist(n)?;
                if dn < eps {
                    return Ok(SteerTarget { n, distance: dn });
                }
                if dn < best.1 {
                    best = (n, dn);
                }
            }
        }
        tol /= 10.0;
    }

    for n in n_min..n_min.saturating_add(cfg.brute_budget) {
        let dn = dist(n)?;
        if dn < eps {
            return Ok(SteerTarget { n, distance: dn });
        }
        if dn < best.1 {
            best = (n, dn);
        }
    }
    Err(SpectraError::SteeringBudget { best_distance: best.1 })
}
