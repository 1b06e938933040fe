use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::observable::{FiberFn, Observable, ObservableSpec, SurfaceFn};
use super::system::SkewSystem;
use super::values::{markov_value_skew, surface_markov_value};
use crate::circle::{Angle, Cocycle};
use crate::dimension::{hd_sft, Axes, SubSft};
use crate::error::{Result, SpectraError};
use crate::sample::SpectrumSample;
use crate::symbolic::{BiSequence, EmbeddingSpec, TransitionMatrix, Word};

/// Inputs of the separation witness.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessSetup {
    pub matrix: TransitionMatrix,
    pub embedding: EmbeddingSpec,
    pub f: SurfaceFn,
    pub g: FiberFn,
    pub alpha: f64,
    /// Heteroclinic point whose orbit carries a strict maximum of `f`.
    pub z: BiSequence,
    pub horizon: u64,
    /// Longest period in the sampled Markov spectrum of `f`.
    pub max_period: usize,
    /// Fixed `β`; chosen automatically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl WitnessSetup {
    /// Full 2-shift in base 17, `f = x_s + π x_u`, `g = cos 2πt`, golden
    /// rotation and `z = 0^∞ 1^m; 1^m 0^∞`.
    pub fn standard(m: usize) -> Self {
        let core = Word::from(vec![1; 2 * m]);
        WitnessSetup {
            matrix: TransitionMatrix::full(2),
            embedding: EmbeddingSpec::with_base(2, 17),
            f: SurfaceFn::linear(1.0, std::f64::consts::PI),
            g: FiberFn::cos_shifted(1.0, 0.0),
            alpha: 0.5 * (5f64.sqrt() - 1.0),
            z: BiSequence::eventually_periodic(Word::from(vec![0]), core, Word::from(vec![0]))
                .expect("non-empty tails")
                .shift(m as i64),
            horizon: 1000,
            max_period: 10,
            beta: None,
        }
    }
}

/// A point whose skew Markov value lies outside the sampled surface Markov
/// spectrum shifted by `β`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessRecord {
    /// Shift of `z` at which `f` peaks along the orbit.
    pub i0: i64,
    pub f_i0: f64,
    /// `f(φ^{i0} z) − sup_{i ≠ i0} f(φ^i z)`.
    pub gap: f64,
    pub beta: f64,
    pub alpha_fg: f64,
    pub t_bar: Angle,
    pub m_skew: SpectrumSample,
    pub m_surface: SpectrumSample,
    pub horizon_error: f64,
    /// `|m_skew − m_surface| ≤ horizon_error`.
    pub agrees: bool,
    /// Distance from `m_skew` to the sampled `ℳ_f + β`.
    pub separation: f64,
    pub periodic_samples: usize,
    /// `separation > 10 · horizon_error`.
    pub separated: bool,
}

/// Surface Markov values of all periodic points with period `≤ max_period`.
pub fn periodic_markov_sample(matrix: &TransitionMatrix, emb: &EmbeddingSpec, f: &SurfaceFn, max_period: usize) -> Vec<f64> {
    let depth = emb.depth_for(1e-16);
    let mut out: Vec<f64> = (1..=max_period)
        .into_par_iter()
        .flat_map_iter(|p| {
            matrix
                .words(p)
                .into_iter()
                .filter(|w| matrix.allows(w.last().expect("p >= 1"), w.first().expect("p >= 1")))
                .filter(|w| w.primitive_period() == p)
                .map(|w| {
                    let s = BiSequence::periodic(w).expect("non-empty");
                    (0..p as i64)
                        .map(|i| {
                            let x = emb.embed_at(&s, i, depth);
                            f.eval(x.xs, x.xu)
                        })
                        .fold(f64::MIN, f64::max)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn distance_to(set: &[f64], v: f64) -> f64 {
    set.iter().map(|s| (v - s).abs()).fold(f64::INFINITY, f64::min)
}

/// Builds `F = f + α_{fg}·(g − min g)` with `α_{fg} = β / (max g − min g)` and
/// checks that the skew Markov value of `(φ^{i0} z, t̄)`, `g(t̄) = min g`,
/// equals `f(φ^{i0} z)` while staying away from the sampled `ℳ_f + β`.
///
/// When `β` is not given, 64 candidates spread over `(0.05, 0.95)·gap` are
/// tried and the one farthest from the sample is kept.
pub fn spectra_difference_witness(setup: &WitnessSetup) -> Result<WitnessRecord> {
    let hd = hd_sft(&SubSft::full(setup.matrix.clone(), 2), &setup.embedding, Axes::Both);
    if hd.value >= 0.5 {
        return Err(SpectraError::InvalidModel(format!(
            "horseshoe dimension {:.4} is not below 1/2",
            hd.value
        )));
    }
    setup.embedding.validate(setup.matrix.size())?;
    let emb = &setup.embedding;
    let depth = emb.depth_for(1e-16);
    let f = &setup.f;
    let z = &setup.z;

    // orbit of z: the non-periodic part plus a margin, and the tail cycles
    let (rstart, rcyc) = z.right_tail();
    let (lend, lcyc) = z.left_tail();
    let pad = 2 * (rcyc.len() + lcyc.len()) as i64 + 8;
    let vals: Vec<(i64, f64)> = (lend - pad..=rstart + pad)
        .map(|i| {
            let x = emb.embed_at(z, i, depth);
            (i, f.eval(x.xs, x.xu))
        })
        .collect();
    let tail_sup = [(&rcyc, rstart), (&lcyc, lend)]
        .iter()
        .flat_map(|(c, _)| {
            let p = BiSequence::periodic((*c).clone()).expect("non-empty");
            (0..c.len() as i64)
                .map(|i| {
                    let x = emb.embed_at(&p, i, depth);
                    f.eval(x.xs, x.xu)
                })
                .collect::<Vec<_>>()
        })
        .fold(f64::MIN, f64::max);
    let &(i0, f_i0) = vals
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("non-empty window");
    let others = vals
        .iter()
        .filter(|v| v.0 != i0)
        .map(|v| v.1)
        .fold(tail_sup, f64::max);
    let gap = f_i0 - others;
    if !(gap > 0.0) {
        return Err(SpectraError::Construction(format!(
            "beta interval empty: f peaks at {f_i0} but reaches {others} elsewhere on the orbit"
        )));
    }

    let sample = periodic_markov_sample(&setup.matrix, emb, f, setup.max_period);
    let beta = match setup.beta {
        Some(b) if !(0.0..gap).contains(&b) => {
            return Err(SpectraError::Domain(format!("beta {b} outside [0, {gap})")));
        }
        Some(b) => b,
        None => (0..64)
            .map(|k| gap * (0.05 + 0.9 * k as f64 / 63.0))
            .map(|b| (b, distance_to(&sample, f_i0 - b)))
            .fold((0.0, f64::MIN), |best, c| if c.1 > best.1 { c } else { best })
            .0,
    };

    let gobs = Observable::new(ObservableSpec::sum(SurfaceFn::constant(0.0), setup.g.clone()))?;
    let ext = gobs
        .fiber_extrema()
        .ok_or_else(|| SpectraError::Domain("g must be a structured fiber function".into()))?;
    if !(ext.max - ext.min > 0.0) {
        return Err(SpectraError::Domain("g must not be constant".into()));
    }
    let alpha_fg = beta / (ext.max - ext.min);
    let sys = SkewSystem::build(
        setup.matrix.clone(),
        emb.clone(),
        Cocycle::rotation(setup.alpha),
        ObservableSpec::Sum {
            f: f.clone(),
            g: setup.g.clone(),
            scale: alpha_fg,
            centered: true,
        },
    )?;
    sys.require_rotation()?;
    let t_bar = ext.argmin;
    let m_skew = markov_value_skew(&sys, &z.shift(i0), t_bar, setup.horizon)?;
    let m_surface = surface_markov_value(emb, depth, f, z, setup.horizon)?;
    let horizon_error = m_skew.error_bound + m_surface.error_bound;
    let agrees = (m_skew.value - m_surface.value).abs() <= horizon_error;
    let shifted: Vec<f64> = sample.iter().map(|s| s + beta).collect();
    let separation = distance_to(&shifted, m_skew.value);
    Ok(WitnessRecord {
        i0,
        f_i0,
        gap,
        beta,
        alpha_fg,
        t_bar,
        horizon_error,
        agrees,
        separation,
        periodic_samples: sample.len(),
        separated: separation > 10.0 * horizon_error,
        m_skew,
        m_surface,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_witness_separates() {
        let r = spectra_difference_witness(&WitnessSetup::standard(3)).unwrap();
        assert!(r.agrees, "{} vs {}", r.m_skew.value, r.m_surface.value);
        assert!((r.m_surface.value - r.f_i0).abs() <= r.m_surface.error_bound);
        assert!(r.separated);
        assert!(r.beta > 0.0 && r.beta < r.gap);
        assert!((r.t_bar.value() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_beta_makes_fiber_irrelevant() {
        let mut s = WitnessSetup::standard(2);
        s.beta = Some(0.0);
        let r = spectra_difference_witness(&s).unwrap();
        assert_eq!(r.alpha_fg, 0.0);
        assert!(r.agrees);
    }

    #[test]
    fn periodic_sample_counts_primitive_cycles() {
        // primitive binary necklaces of length 1..=4: 2 + 1 + 2 + 3
        let v = periodic_markov_sample(
            &TransitionMatrix::full(2),
            &EmbeddingSpec::with_base(2, 17),
            &SurfaceFn::linear(1.0, std::f64::consts::PI),
            4,
        );
        assert_eq!(v.len(), 8);
    }

    #[test]
    fn dimension_above_half_is_rejected() {
        let mut s = WitnessSetup::standard(2);
        s.embedding = EmbeddingSpec::with_base(2, 3);
        assert!(matches!(spectra_difference_witness(&s), Err(SpectraError::InvalidModel(_))));
    }

    #[test]
    fn flat_orbit_has_no_beta() {
        let mut s = WitnessSetup::standard(2);
        s.z = BiSequence::periodic(Word::from(vec![0])).unwrap();
        assert!(matches!(spectra_difference_witness(&s), Err(SpectraError::Construction(_))));
    }
}
