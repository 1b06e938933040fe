use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interval::{construct_interval_periodic_case, CertConfig, IntervalCertificate, PeriodicCaseParams};
use super::membership::validate_membership_R;
use super::observable::ObservableSpec;
use super::system::SkewSystem;
use crate::circle::{frac_mul, steer_rotation, Angle, CircleMap, SteerConfig};
use crate::error::{Result, SpectraError};
use crate::symbolic::{BiSequence, TransitionMatrix, Word};

/// Tolerance for "non-negative" Lagrange estimates.
pub const ELL_TOL: f64 = 1e-6;

/// One random orbit of the non-negativity profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllSample {
    pub s: BiSequence,
    pub t: Angle,
    /// `max F(Φ^n(s, t))` over `n ∈ [horizon/2, horizon]`.
    pub limsup_estimate: f64,
    /// Steered times `n_k` with `t + n_k α → argmin g`, and `F` there.
    pub steered: Vec<(u64, f64)>,
    pub nonnegative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllProfile {
    pub samples: Vec<EllSample>,
    pub min_estimate: f64,
    pub all_nonnegative: bool,
}

/// Random admissible cycle word of length at least `len`.
fn random_cycle(m: &TransitionMatrix, len: usize, rng: &mut ChaCha8Rng) -> Word {
    let n = m.size() as u32;
    let first = rng.gen_range(0..n);
    let mut w = vec![first];
    while w.len() < len {
        let last = *w.last().expect("non-empty");
        let succ: Vec<u32> = m.successors(last).collect();
        w.push(succ[rng.gen_range(0..succ.len())]);
    }
    let back = m
        .bridge(*w.last().expect("non-empty"), first)
        .expect("irreducible transition graph");
    w.extend_from_slice(back.as_slice());
    Word::from(w)
}

/// Finite-horizon check of `ℓ ≥ 0` for `F = (f − c)(g − min g)` under an
/// irrational rotation.
///
/// Each sample is a random eventually periodic point with a random angle.
/// Steering produces times whose fiber angle tends to the minimizer of `g`,
/// where `F` vanishes, so the limsup is at least the limit along them.
pub fn ell_nonnegative_profile(sys: &SkewSystem, samples: usize, horizon: u64, seed: u64) -> Result<EllProfile> {
    if !matches!(sys.observable().spec(), ObservableSpec::Product { .. }) {
        return Err(SpectraError::Unsupported("the profile needs a product observable (f - c)(g - min g)".into()));
    }
    let alpha = sys.require_rotation()?;
    let ext = sys
        .observable()
        .fiber_extrema()
        .ok_or_else(|| SpectraError::Domain("g must be structured".into()))?;
    if !(ext.max - ext.min > 0.0) {
        return Err(SpectraError::Domain("g must not be constant".into()));
    }
    if horizon < 16 {
        return Err(SpectraError::Domain("horizon must be >= 16".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = sys.matrix();
    let points: Vec<(BiSequence, Angle)> = (0..samples)
        .map(|_| {
            let left = random_cycle(m, rng.gen_range(1..6), &mut rng);
            let right = random_cycle(m, rng.gen_range(1..6), &mut rng);
            let extra = random_cycle(m, rng.gen_range(1..8), &mut rng);
            let link = |a: &Word, b: &Word| {
                m.bridge(a.last().expect("non-empty"), b.first().expect("non-empty"))
                    .expect("irreducible transition graph")
            };
            let core = link(&left, &extra).concat(&extra).concat(&link(&extra, &right));
            let s = BiSequence::eventually_periodic(left, core, right).expect("admissible by construction");
            (s, Angle::new(rng.gen::<f64>()))
        })
        .collect();
    let obs = sys.observable();
    let cfg = SteerConfig::default();
    let out: Vec<EllSample> = points
        .into_par_iter()
        .map(|(s, t)| {
            let f_at = |n: u64| {
                let x = sys.embed_at(&s, n as i64);
                obs.eval(x.xs, x.xu, t.add(frac_mul(n as i64, alpha)).value())
            };
            let lim = (horizon / 2..=horizon).map(f_at).fold(f64::MIN, f64::max);
            let mut steered = Vec::new();
            let mut n_min = horizon / 2;
            for k in 1..=6 {
                let eps = 10f64.powi(-k);
                let hit = steer_rotation(alpha, 1, 0, t, ext.argmin, eps, n_min, &CircleMap::identity(), &cfg)?;
                steered.push((hit.n, f_at(hit.n)));
                n_min = hit.n + 1;
            }
            Ok(EllSample {
                nonnegative: lim >= -ELL_TOL,
                s,
                t,
                limsup_estimate: lim,
                steered,
            })
        })
        .collect::<Result<_>>()?;
    let min_estimate = out.iter().map(|s| s.limsup_estimate).fold(f64::INFINITY, f64::min);
    Ok(EllProfile {
        all_nonnegative: out.iter().all(|s| s.nonnegative),
        min_estimate,
        samples: out,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelClass {
    /// No Lagrange value below the level.
    Empty,
    /// An interval of Lagrange values below the level was certified.
    Interval,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelReport {
    pub s: f64,
    pub class: LevelClass,
    /// Dimension of the spectrum below `s`: 0 or 1.
    pub dimension: u8,
    /// Smallest sampled Lagrange estimate (backs the empty case).
    pub min_sampled_ell: f64,
    /// Maximum of `F` on the subhorseshoe used for the certificate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<IntervalCertificate>,
}

/// Dimension of `ℒ ∩ (−∞, s)` for `F = (f − c)(g − min g)`.
///
/// Lagrange values are non-negative, so for `s ≤ 0` the set is empty; the
/// sampled profile is attached as evidence and must agree. For `s > 0` an
/// interval of values below `s` is certified on a subhorseshoe whose maximum
/// of `F` is below `s`.
pub fn classify_level(
    sys: &SkewSystem,
    s: f64,
    profile: &EllProfile,
    sub: &TransitionMatrix,
    params: &PeriodicCaseParams,
    cfg: &CertConfig,
) -> Result<LevelReport> {
    if !profile.all_nonnegative {
        return Err(SpectraError::Construction(format!(
            "sampled Lagrange estimate {} is negative",
            profile.min_estimate
        )));
    }
    if s <= 0.0 {
        return Ok(LevelReport {
            s,
            class: LevelClass::Empty,
            dimension: 0,
            min_sampled_ell: profile.min_estimate,
            sub_max: None,
            certificate: None,
        });
    }
    let restricted = sys.restricted(sub.clone())?;
    let report = validate_membership_R(&restricted, cfg.membership_depth, cfg.fiber_grid)?;
    if report.value_upper >= s {
        return Err(SpectraError::Construction(format!(
            "subhorseshoe reaches {} which is not below {s}",
            report.value_upper
        )));
    }
    let cert = construct_interval_periodic_case(&restricted, params, cfg)?;
    Ok(LevelReport {
        s,
        class: LevelClass::Interval,
        dimension: 1,
        min_sampled_ell: profile.min_estimate,
        sub_max: Some(report.value_upper),
        certificate: Some(cert),
    })
}
